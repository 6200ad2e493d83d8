//! Train a deep-kernel GP on a synthetic corpus and score a held-out split.
//!
//! ```text
//! cargo run --release --example train_dkl -- 400 tpsa
//! ```

use adkl::data::{featurize, synthetic_dataset};
use adkl::gp::{batch_predict, train_dkl, DklConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse().unwrap()).unwrap_or(300);
    let target = args.next().unwrap_or_else(|| "mologp".into());

    let ds = synthetic_dataset(n, 1, &target).unwrap();
    let f = featurize(&ds.graphs().unwrap()).unwrap();
    let y = ds.targets();
    let split = n * 4 / 5;
    let (xtr, xte) = (f.x.slice_rows(0, split), f.x.slice_rows(split, n));

    let cfg = DklConfig {
        epochs: 150,
        ..DklConfig::default()
    };
    let out = train_dkl(&xtr, &y[..split], &cfg).unwrap();
    for (e, l) in out.loss_curve.iter().enumerate().step_by(25) {
        println!("epoch {e:>4}  nll {l:.4}");
    }
    let p = &out.model.params;
    println!(
        "lengthscale {:.3}  outputscale {:.3}  noise {:.2e}",
        p.lengthscale(),
        p.outputscale(),
        p.noise()
    );

    let post = batch_predict(&out.model, &xte, 250).unwrap();
    let truth = &y[split..];
    let rmse = (post.mean.iter().zip(truth).map(|(m, t)| (m - t).powi(2)).sum::<f64>() / truth.len() as f64).sqrt();
    let covered = post
        .mean
        .iter()
        .zip(&post.std)
        .zip(truth)
        .filter(|((m, s), t)| (*m - *t).abs() <= 2.0 * *s)
        .count();
    println!(
        "held out {}: rmse {rmse:.3} ({target} std {:.3}), within 2 std: {covered}",
        truth.len(),
        out.model.target_stats.std
    );
}
