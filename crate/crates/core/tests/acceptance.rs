//! Acceptance report: one PASS / FAIL / SKIP line per criterion.
//!
//! Environment switches:
//! - `ADKL_QM9_DIR`: directory of QM9 `.xyz` files; enables criterion 8.
//! - `ADKL_QM9_CSV`: CSV from `adkl ingest-qm9`; criterion 5 samples it
//!   instead of the synthetic corpus.
//! - `ADKL_ACCEPT_FULL=1`: criterion 12 runs the full 2,000-point training
//!   instead of projecting it from measured epoch times.
//! - `ADKL_ACCEPT_STRICT=1`: any FAIL makes the target exit non-zero. By
//!   default only failures outside `KNOWN_RED` do.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use adkl::active::{self, Pool, RunConfig};
use adkl::chem::{descriptors, is_isomorphic, parse_smiles, MolGraph};
use adkl::cli::main_with_args;
use adkl::data::{self, featurize, sha256_file, CsvSchema};
use adkl::gp::{self, batch_predict, nll, nll_grad, predict, DklConfig, DklParams, TargetStats, TrainedDkl};
use adkl::num::{Activation, Matrix, MlpParams, Rng};
use adkl::selfies::{decode_str, encode_selfies, Token, TokenSequence};
use adkl::similarity::{circular_fingerprint, pearson, tanimoto};
use adkl::vae::{self, elbo_grad, VaeConfig, VaeParams};
use common::*;

/// Criteria expected to fail on this implementation, with the reason.
const KNOWN_RED: [(u8, &str); 3] = [
    (5, "mean+std acquisition does not beat random sampling on unmeasured-set RMSE"),
    (7, "Crippen logP of CC12CCC(C)(CC1)C2 is 2.977, outside 2.767 +/- 0.15"),
    (12, "a 500-epoch exact-GP train at n=2000 takes over 10 min on one core"),
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn criterion(results: &mut Vec<(u8, Status)>, n: u8, name: &str, f: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
        status: Status::Fail,
        detail: format!(
            "panicked: {}",
            e.downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        ),
    });
    let label = match out.status {
        Status::Pass => "PASS",
        Status::Fail if KNOWN_RED.iter().any(|k| k.0 == n) => "FAIL (known)",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    };
    println!(
        "criterion {n:>2} {name}: {label} [{:.1} s] {}",
        t.elapsed().as_secs_f64(),
        out.detail
    );
    results.push((n, out.status));
}

fn stats_of(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    (m, (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
}

fn random_dkl(rng: &mut Rng, input: usize, hidden: usize, act: Activation) -> DklParams {
    let cfg = DklConfig {
        hidden: vec![hidden],
        activation: act,
        ..DklConfig::default()
    };
    let mut p = DklParams::init(input, &cfg, rng);
    p.log_lengthscale = rng.uniform_range(-0.7, 0.7);
    p.log_outputscale = rng.uniform_range(-0.7, 0.7);
    p.log_noise = rng.uniform_range(-4.0, -0.7);
    for layer in &mut p.mlp.layers {
        layer.bias.iter_mut().for_each(|b| *b = rng.uniform_range(-0.3, 0.3));
    }
    p
}

fn c1_oracle() -> Outcome {
    let mut rng = Rng::new(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + rng.below(9);
        let x = Matrix::from_fn(n, 2, |_, _| rng.uniform_range(-2.0, 2.0));
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        let p = random_dkl(&mut rng, 2, 4, Activation::Tanh);
        let stats = TargetStats::fit(&y).unwrap();
        let model = TrainedDkl::condition(p.clone(), &x, &y, stats).unwrap();

        let (l, s, noise) = (p.lengthscale(), p.outputscale(), p.noise());
        let z: Vec<Vec<f64>> = (0..n).map(|i| mlp_forward(&p.mlp, x.row(i))).collect();
        let (mu, sd) = stats_of(&y);
        let ys: Vec<f64> = y.iter().map(|v| (v - mu) / sd).collect();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rbf(&z[i], &z[j], l, s) + if i == j { noise + model.jitter } else { 0.0 })
                    .collect()
            })
            .collect();
        let (kinv, log_det) = dense_inverse(&k);
        let alpha = matvec(&kinv, &ys);
        let want = 0.5 * vdot(&ys, &alpha) + 0.5 * log_det + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        worst = worst.max((nll(&p, &x, &y, &stats).unwrap() - want).abs());

        let q = Matrix::from_fn(5, 2, |_, _| rng.uniform_range(-3.0, 3.0));
        let post = predict(&model, &q).unwrap();
        for r in 0..5 {
            let zq = mlp_forward(&p.mlp, q.row(r));
            let ks: Vec<f64> = z.iter().map(|zi| rbf(&zq, zi, l, s)).collect();
            let mean = vdot(&ks, &alpha) * sd + mu;
            let var = (s + noise - vdot(&ks, &matvec(&kinv, &ks))).max(0.0);
            worst = worst.max((post.mean[r] - mean).abs());
            worst = worst.max((post.std[r] - var.sqrt() * sd).abs());
        }
    }
    pass_if(worst < 1e-9, format!("max abs error {worst:.2e} (tol 1e-9, 100 instances)"))
}

fn c2_gradients() -> Outcome {
    let mut rng = Rng::new(202);
    let h = 1e-5;
    let (mut w_gp, mut w_mlp, mut w_vae): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..20 {
        let act = [Activation::Tanh, Activation::Relu][case % 2];
        let n = 4 + rng.below(6);
        let x = Matrix::from_fn(n, 3, |_, _| rng.uniform_range(-1.5, 1.5));
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        let stats = TargetStats::fit(&y).unwrap();
        let p = random_dkl(&mut rng, 3, 5, act);
        let g = nll_grad(&p, &x, &y, &stats).unwrap().1.to_flat();
        let fd = central_diff(&p.to_flat(), h, |v| {
            let mut q = p.clone();
            q.load_flat(v);
            nll(&q, &x, &y, &stats).unwrap()
        });
        w_gp = w_gp.max(max_rel_err(&g, &fd));

        let mut mlp = MlpParams::glorot(&[3, 6, 4, 2], act, &mut rng);
        // Nonzero biases keep ReLU pre-activations off the kink at exactly 0.
        for layer in &mut mlp.layers {
            layer.bias.iter_mut().for_each(|b| *b = rng.uniform_range(-0.3, 0.3));
        }
        let weights = Matrix::from_fn(n, 2, |_, _| rng.uniform_range(-1.0, 1.0));
        let loss = |m: &MlpParams| -> f64 {
            let out = m.predict(&x).unwrap();
            out.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = mlp.forward(&x).unwrap();
        let g = mlp.backward(&cache, &weights).unwrap().to_flat();
        let fd = central_diff(&mlp.to_flat(), h, |v| {
            let mut q = mlp.clone();
            q.load_flat(v);
            loss(&q)
        });
        w_mlp = w_mlp.max(max_rel_err(&g, &fd));

        let (max_len, alpha) = (3, 4);
        let cfg = VaeConfig {
            hidden: 5,
            ..VaeConfig::default()
        };
        let vp = VaeParams::init(max_len, alpha, &cfg, &mut rng);
        let xo = Matrix::from_fn(n, max_len * alpha, |_, _| 0.0);
        let mut xo = xo;
        for i in 0..n {
            for t in 0..max_len {
                let c = rng.below(alpha);
                xo[(i, t * alpha + c)] = 1.0;
            }
        }
        let eps = Matrix::from_fn(n, cfg.latent_dim, |_, _| rng.uniform_range(-1.5, 1.5));
        let g = elbo_grad(&vp, &xo, &eps).unwrap().1;
        let fd = central_diff(&vp.to_flat(), h, |v| {
            let mut q = vp.clone();
            q.load_flat(v);
            elbo_grad(&q, &xo, &eps).unwrap().0.loss()
        });
        w_vae = w_vae.max(max_rel_err(&g, &fd));
    }
    let worst = w_gp.max(w_mlp).max(w_vae);
    pass_if(
        worst < 1e-4,
        format!("max rel error: nll {w_gp:.1e}, mlp {w_mlp:.1e}, vae {w_vae:.1e} (tol 1e-4, h 1e-5, 20 configs)"),
    )
}

fn c3_interpolation() -> Outcome {
    let mut rng = Rng::new(303);
    let (mut worst_fit, mut var_violations, mut escalations) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let n = 5 + rng.below(16);
        let x = Matrix::from_fn(n, 3, |_, _| rng.uniform_range(-2.0, 2.0));
        let y: Vec<f64> = (0..n).map(|i| (x[(i, 0)] * 1.3).sin() + x[(i, 1)] - 0.5 * x[(i, 2)].powi(2)).collect();
        let cfg = DklConfig {
            hidden: vec![8],
            fixed_noise: Some(1e-8),
            seed: rng.next_u64(),
            ..DklConfig::default()
        };
        let m = gp::train_dkl(&x, &y, &cfg).unwrap().model;
        if m.jitter > 1e-8 * (m.params.outputscale() + m.params.noise()) * 1.0001 {
            escalations += 1;
        }
        let sd = m.target_stats.std;
        let post = predict(&m, &x).unwrap();
        for (p, t) in post.mean.iter().zip(&y) {
            worst_fit = worst_fit.max((p - t).abs() / sd);
        }
        let q = Matrix::from_fn(30, 3, |_, _| rng.uniform_range(-4.0, 4.0));
        let bound = m.params.outputscale() + m.params.noise() + m.jitter;
        for s in predict(&m, &q).unwrap().std.iter().chain(&post.std) {
            let v = (s / sd).powi(2);
            if !(0.0..=bound * (1.0 + 1e-12)).contains(&v) {
                var_violations += 1;
            }
        }
    }
    pass_if(
        worst_fit < 1e-3 && var_violations == 0,
        format!(
            "max |mean - y| / std(y) {worst_fit:.2e} (tol 1e-3); {var_violations} variance bound violations; \
             {escalations} of 50 problems needed extra jitter"
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("adkl").chain(args.iter().copied()))
}

fn c4_batching() -> Outcome {
    let mut rng = Rng::new(404);
    let x = Matrix::from_fn(40, 5, |_, _| rng.uniform_range(-1.0, 1.0));
    let y: Vec<f64> = (0..40).map(|i| x[(i, 0)] - x[(i, 3)].powi(2)).collect();
    let p = random_dkl(&mut rng, 5, 8, Activation::Tanh);
    let m = TrainedDkl::condition(p, &x, &y, TargetStats::fit(&y).unwrap()).unwrap();
    let q = Matrix::from_fn(600, 5, |_, _| rng.uniform_range(-2.0, 2.0));
    let base = batch_predict(&m, &q, 1).unwrap();
    let mut worst: f64 = 0.0;
    for bs in [7, 250] {
        let p = batch_predict(&m, &q, bs).unwrap();
        for i in 0..600 {
            worst = worst.max((p.mean[i] - base.mean[i]).abs()).max((p.std[i] - base.std[i]).abs());
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for bs in ["1", "7", "250"] {
        let out = dir.path().join(bs);
        let args = [
            "active", "--out", out.to_str().unwrap(), "--synthetic", "300", "--n-init", "100", "--budget", "25",
            "--predict-batch", bs,
        ];
        assert_eq!(run_cli(&args), 0);
        hashes.push(sha256_file(&out.join("trajectory.csv")).unwrap());
    }
    let same = hashes.iter().all(|h| *h == hashes[0]);
    pass_if(
        worst <= 1e-12 && same,
        format!(
            "max posterior difference {worst:.1e} over 600 queries; trajectories (300 molecules, 25 cycles) \
             identical across batch sizes 1/7/250: {same}"
        ),
    )
}

fn efficacy_pool() -> (Pool, String) {
    if let Ok(path) = std::env::var("ADKL_QM9_CSV") {
        let schema = CsvSchema {
            target: "mologp".into(),
            ..CsvSchema::default()
        };
        let (ds, _) = data::load_csv(Path::new(&path), &schema).unwrap();
        let ds = data::sample_subset(&ds, 500, 0).unwrap();
        let f = featurize(&ds.graphs().unwrap()).unwrap();
        return (
            Pool::new(f.x, ds.targets(), ds.ids(), ds.smiles()).unwrap(),
            "QM9 sample".into(),
        );
    }
    let ds = data::synthetic_dataset(500, 0, "mologp").unwrap();
    let f = featurize(&ds.graphs().unwrap()).unwrap();
    (
        Pool::new(f.x, ds.targets(), ds.ids(), ds.smiles()).unwrap(),
        "synthetic surrogate".into(),
    )
}

fn c5_efficacy() -> Outcome {
    let (pool, source) = efficacy_pool();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let cfg = RunConfig {
            n_init: 100,
            step_budget: Some(51),
            seed,
            ..RunConfig::default()
        };
        let a = active::run(&pool, &cfg, None).unwrap().records[50].rmse_unmeasured;
        let r = active::random_baseline(&pool, &cfg, None).unwrap().records[50].rmse_unmeasured;
        if a <= r {
            wins += 1;
        }
        pairs.push(format!("{a:.3}/{r:.3}"));
    }
    pass_if(
        wins >= 7,
        format!(
            "{source}, target mologp, maximize: active <= random in {wins}/10 seeds (need 7); active/random RMSE {}",
            pairs.join(" ")
        ),
    )
}

fn all_tokens() -> Vec<Token> {
    let mut s: Vec<String> = Vec::new();
    for bond in ["", "=", "#"] {
        for el in ["C", "N", "O"] {
            for ch in ["", "+1", "-1"] {
                s.push(format!("[{bond}{el}{ch}]"));
            }
        }
        for kind in ["Ring1", "Ring2", "Branch1", "Branch2"] {
            s.push(format!("[{bond}{kind}]"));
        }
    }
    s.extend(["[F]".to_string(), "[H]".to_string()]);
    s.iter().filter_map(|t| t.parse().ok()).collect()
}

fn c6_selfies() -> Outcome {
    let mut graphs: Vec<MolGraph> = corpus64_graphs();
    graphs.extend(data::synthetic_molecules(500, 6));
    let mut failures = Vec::new();
    for g in &graphs {
        let ok = encode_selfies(g)
            .map(|seq| is_isomorphic(&adkl::selfies::decode_selfies(&seq), g))
            .unwrap_or(false);
        if !ok {
            failures.push(adkl::chem::write_smiles(g));
        }
    }
    let tokens = all_tokens();
    let mut rng = Rng::new(606);
    let mut bad_random = 0;
    for _ in 0..1000 {
        let len = 1 + rng.below(20);
        let seq = TokenSequence::new((0..len).map(|_| tokens[rng.below(tokens.len())]).collect());
        match decode_str(&seq.to_string()) {
            Ok(g) if g.check_valence().is_ok() && (g.num_atoms() == 0 || g.is_connected()) => {}
            _ => bad_random += 1,
        }
    }
    pass_if(
        failures.is_empty() && bad_random == 0,
        format!(
            "round trip {}/{} isomorphic{}; {bad_random} of 1000 random strings ({} token kinds) failed",
            graphs.len() - failures.len(),
            graphs.len(),
            if failures.is_empty() { String::new() } else { format!(" (failed: {:?})", &failures[..failures.len().min(5)]) },
            tokens.len()
        ),
    )
}

fn c7_descriptors() -> Outcome {
    let d = |s: &str| descriptors(&parse_smiles(s).unwrap());
    let checks = [
        ("mw(CH4)", d("C").mw, 16.043, 0.001),
        ("rotb(butane)", d("CCCC").rotb as f64, 1.0, 0.0),
        ("rotb(ethanol)", d("CCO").rotb as f64, 0.0, 0.0),
        ("ringct(benzene)", d("c1ccccc1").ringct as f64, 1.0, 0.0),
        ("tpsa(ethanol)", d("CCO").tpsa, 20.23, 0.01),
        ("mologp(CC12CCC(C)(CC1)C2)", d("CC12CCC(C)(CC1)C2").mologp, 2.767, 0.15),
    ];
    let mut ok = true;
    let parts: Vec<String> = checks
        .iter()
        .map(|(name, got, want, tol)| {
            let good = (got - want).abs() <= *tol;
            ok &= good;
            format!("{name}={got:.4} ({})", if good { "ok" } else { "out of range" })
        })
        .collect();
    pass_if(ok, parts.join(", "))
}

fn c8_qm9() -> Outcome {
    let Ok(dir) = std::env::var("ADKL_QM9_DIR") else {
        return Outcome {
            status: Status::Skip,
            detail: "set ADKL_QM9_DIR to a directory of QM9 .xyz files".into(),
        };
    };
    let (records, rejected) = data::ingest_qm9_dir(Path::new(&dir)).unwrap();
    let quoted = [
        ("NC=[NH+]C1=CN=N[N-]1", 13.73),
        ("CC1C(C([O-])=O)C1(C)[NH3+]", 14.62),
        ("[NH3+]C1CC(C1)C([O-])=O", 16.54),
        ("[O-]C(=O)CCNC=[NH2+]", 18.69),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (smiles, mu) in quoted {
        let target = parse_smiles(smiles).unwrap();
        let key = target.formula_counts();
        let hit = records.iter().find(|r| {
            r.graph()
                .map(|g| g.formula_counts() == key && is_isomorphic(&g, &target))
                .unwrap_or(false)
        });
        match hit {
            Some(r) => {
                let got = r.property("mu").unwrap();
                ok &= (got - mu).abs() <= 0.05;
                parts.push(format!("{smiles}: {got:.2} D (quoted {mu})"));
            }
            None => {
                ok = false;
                parts.push(format!("{smiles}: not found"));
            }
        }
    }
    let finite = records
        .iter()
        .all(|r| r.property("H").unwrap().is_finite() && r.property("G").unwrap().is_finite());
    let fortran = records.iter().filter(|r| r.fortran_tokens > 0).count();
    pass_if(
        ok && finite && fortran > 0,
        format!(
            "{} records, {} rejected; {}; H/G finite: {finite}; records with *^ exponents: {fortran}",
            records.len(),
            rejected.len(),
            parts.join("; ")
        ),
    )
}

fn c9_similarity() -> Outcome {
    let mut graphs = corpus64_graphs();
    graphs.extend(data::synthetic_molecules(136, 9));
    let fps: Vec<_> = graphs.iter().map(|g| circular_fingerprint(g, 2, 2048)).collect();
    let t = |i: usize, j: usize| tanimoto(&fps[i], &fps[j]).unwrap();
    let mut ok = true;
    for i in 0..fps.len() {
        ok &= t(i, i) == 1.0;
        for j in 0..fps.len() {
            let v = t(i, j);
            ok &= v == t(j, i) && (0.0..=1.0).contains(&v);
        }
    }
    let mut rng = Rng::new(909);
    let mut triangle_violations = 0;
    for _ in 0..1000 {
        let (a, b, c) = (rng.below(fps.len()), rng.below(fps.len()), rng.below(fps.len()));
        let d = |i, j| 1.0 - t(i, j);
        if d(a, c) > d(a, b) + d(b, c) + 1e-15 {
            triangle_violations += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x: Vec<f64> = (0..30).map(|_| rng.uniform_range(-5.0, 5.0)).collect();
        let y: Vec<f64> = (0..30).map(|_| rng.uniform_range(-5.0, 5.0)).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        worst = worst.max((pearson(&x, &x).unwrap() - 1.0).abs());
        worst = worst.max((pearson(&x, &neg).unwrap() + 1.0).abs());
        let (a, b) = (rng.uniform_range(0.1, 10.0), rng.uniform_range(-10.0, 10.0));
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        worst = worst.max((pearson(&ax, &y).unwrap() - pearson(&x, &y).unwrap()).abs());
    }
    pass_if(
        ok && triangle_violations == 0 && worst <= 1e-12,
        format!(
            "reflexive/symmetric/in range over {} fingerprints: {ok}; triangle violations {triangle_violations}/1000; \
             max Pearson deviation {worst:.1e}",
            fps.len()
        ),
    )
}

fn c10_vae() -> Outcome {
    let f = featurize(&corpus64_graphs()).unwrap();
    let (l, a) = (f.max_len, f.alphabet.len());
    let cfg = VaeConfig::default();
    let one = vae::train_vae(&f.x, l, a, &cfg).unwrap();
    let two = vae::train_vae(&f.x, l, a, &cfg).unwrap();
    let kl_ok = one.curve.iter().all(|r| r.kl >= 0.0);
    let (first, last) = (one.curve[0].loss(), one.curve.last().unwrap().loss());
    let acc = vae::reconstruction_accuracy(&one.params, &f.x).unwrap();
    let base = vae::majority_token_accuracy(&f.x, l, a);
    let det = one.params == two.params && one.curve == two.curve;
    pass_if(
        kl_ok && last < first && acc > base && det,
        format!(
            "KL >= 0 every epoch: {kl_ok}; loss {first:.3} -> {last:.3}; token accuracy {acc:.3} vs majority {base:.3}; \
             deterministic: {det}"
        ),
    )
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if name != "timings.json" {
            out.insert(name, sha256_file(&p).unwrap());
        }
    }
    out
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let xyz = root.join("xyz");
    std::fs::create_dir(&xyz).unwrap();
    std::fs::write(xyz.join("dsgdb9nsd_000001.xyz"), METHANE_XYZ).unwrap();
    std::fs::write(
        xyz.join("dsgdb9nsd_000002.xyz"),
        METHANE_XYZ.replace("gdb 1\t", "gdb 2\t").replace("13.21", "1.321*^1"),
    )
    .unwrap();
    let csv = root.join("ds.csv");
    let ds = data::synthetic_dataset(40, 11, "tpsa").unwrap();
    let mut text = "id,smiles,target\n".to_string();
    for r in ds.records() {
        text.push_str(&format!("{},{},{}\n", r.id, r.smiles, r.target));
    }
    std::fs::write(&csv, text).unwrap();
    let (csv_s, xyz_s) = (csv.to_str().unwrap().to_string(), xyz.to_str().unwrap().to_string());
    let net = ["--hidden", "16,8", "--epochs", "60"];

    let mut identical = Vec::new();
    for round in 0..2 {
        let o = |name: &str| root.join(format!("{name}{round}")).to_str().unwrap().to_string();
        let mut cmds: Vec<(String, Vec<String>)> = Vec::new();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        cmds.push(("featurize".into(), s(&["featurize", "--out", &o("feat"), "--input", &csv_s])));
        let mut train = s(&["train-dkl", "--out", &o("dkl"), "--input", &csv_s, "--grid-resolution", "10"]);
        train.extend(s(&net));
        cmds.push(("train-dkl".into(), train));
        cmds.push((
            "train-vae".into(),
            s(&["train-vae", "--out", &o("vae"), "--input", &csv_s, "--epochs", "40"]),
        ));
        // Both rounds read the first round's checkpoint so the recorded
        // arguments match.
        let ck = root.join("dkl0/checkpoint.json").to_str().unwrap().to_string();
        let mut act = s(&[
            "active", "--out", &o("act"), "--input", &csv_s, "--reference", &ck, "--n-init", "10", "--with-baseline",
            "--log-every", "10", "--cycle-epochs", "10",
        ]);
        act.extend(s(&net));
        cmds.push(("active (exhaustive)".into(), act));
        cmds.push((
            "similar".into(),
            s(&[
                "similar", "--out", &o("sim"), "--input", &csv_s, "--checkpoint", &ck, "--anchor", "syn00003",
                "--matrix", "syn00000,syn00001,syn00002,syn00003",
            ]),
        ));
        cmds.push(("ingest-qm9".into(), s(&["ingest-qm9", "--out", &o("qm9"), "--qm9-dir", &xyz_s])));
        for (name, args) in cmds {
            let argv: Vec<&str> = args.iter().map(|a| a.as_str()).collect();
            assert_eq!(run_cli(&argv), 0, "{name} failed");
            if round == 1 {
                let out0 = Path::new(&args[2]).with_file_name(
                    Path::new(&args[2]).file_name().unwrap().to_string_lossy().replace('1', "0"),
                );
                identical.push((name, hash_dir(&out0) == hash_dir(Path::new(&args[2]))));
            }
        }
    }
    let ok = identical.iter().all(|p| p.1);
    let detail: Vec<String> = identical.iter().map(|(n, same)| format!("{n}: {}", if *same { "identical" } else { "DIFFERS" })).collect();
    pass_if(ok, detail.join(", "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn c12_scaling() -> Outcome {
    let ds = data::synthetic_dataset(2000, 12, "mologp").unwrap();
    let t = Instant::now();
    let f = featurize(&ds.graphs().unwrap()).unwrap();
    let featurize_s = t.elapsed().as_secs_f64();
    let y = ds.targets();
    let cfg = DklConfig::default();
    let mut rng = Rng::new(12);
    let p = DklParams::init(f.x.cols(), &cfg, &mut rng);
    let epoch_time = |n: usize| {
        let x = f.x.slice_rows(0, n);
        let stats = TargetStats::fit(&y[..n]).unwrap();
        median(
            (0..3)
                .map(|_| {
                    let t = Instant::now();
                    nll_grad(&p, &x, &y[..n], &stats).unwrap();
                    t.elapsed().as_secs_f64()
                })
                .collect(),
        )
    };
    let (t1, t2) = (epoch_time(1000), epoch_time(2000));
    let ratio = t2 / t1;
    let stats = TargetStats::fit(&y).unwrap();
    let t = Instant::now();
    let m = TrainedDkl::condition(p.clone(), &f.x, &y, stats).unwrap();
    batch_predict(&m, &f.x, 250).unwrap();
    let predict_s = t.elapsed().as_secs_f64();

    let (total, how) = if std::env::var("ADKL_ACCEPT_FULL").is_ok_and(|v| v == "1") {
        let t = Instant::now();
        let out = gp::train_dkl(&f.x, &y, &cfg).unwrap();
        batch_predict(&out.model, &f.x, 250).unwrap();
        (t.elapsed().as_secs_f64() + featurize_s, "measured")
    } else {
        (featurize_s + cfg.epochs as f64 * t2 + predict_s, "projected")
    };
    pass_if(
        (5.0..=12.0).contains(&ratio) && total < 600.0,
        format!(
            "epoch {t1:.3} s at n=1000, {t2:.3} s at n=2000, ratio {ratio:.2} (need 5..12); \
             {}-epoch train + predict at n=2000 {how} {total:.0} s (need < 600 s); input width {}",
            cfg.epochs,
            f.x.cols()
        ),
    )
}

fn main() {
    // Integration-test harness flags (e.g. --nocapture) are accepted and ignored.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: u8| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut results = Vec::new();
    let table: [(u8, &str, fn() -> Outcome); 12] = [
        (1, "GP oracle equivalence", c1_oracle),
        (2, "gradient correctness", c2_gradients),
        (3, "interpolation and variance bounds", c3_interpolation),
        (4, "batching neutrality", c4_batching),
        (5, "active-learning efficacy", c5_efficacy),
        (6, "SELFIES robustness and round trip", c6_selfies),
        (7, "descriptor spot values", c7_descriptors),
        (8, "QM9 ingestion fidelity", c8_qm9),
        (9, "Tanimoto and Pearson properties", c9_similarity),
        (10, "VAE baseline", c10_vae),
        (11, "end-to-end determinism", c11_determinism),
        (12, "scalability", c12_scaling),
    ];
    for (n, name, f) in table {
        if wanted(n) {
            criterion(&mut results, n, name, f);
        }
    }
    let count = |s: Status| results.iter().filter(|r| r.1 == s).count();
    println!(
        "acceptance: {} pass, {} fail, {} skip",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Skip)
    );
    for (n, why) in KNOWN_RED {
        if results.iter().any(|r| r.0 == n && r.1 == Status::Fail) {
            println!("  known red {n}: {why}");
        }
    }
    let strict = std::env::var("ADKL_ACCEPT_STRICT").is_ok_and(|v| v == "1");
    let unexpected = results
        .iter()
        .any(|&(n, s)| s == Status::Fail && (strict || !KNOWN_RED.iter().any(|k| k.0 == n)));
    if unexpected {
        std::process::exit(1);
    }
}
