//! Fit the SELFIES VAE and look at its two-dimensional latent map.

use adkl::data::{featurize, synthetic_molecules};
use adkl::vae::{majority_token_accuracy, reconstruction_accuracy, train_vae, vae_latent_map, VaeConfig};

fn main() {
    let graphs = synthetic_molecules(200, 3);
    let f = featurize(&graphs).unwrap();
    let cfg = VaeConfig {
        epochs: 150,
        ..VaeConfig::default()
    };
    let out = train_vae(&f.x, f.max_len, f.alphabet.len(), &cfg).unwrap();
    for (e, r) in out.curve.iter().enumerate().step_by(30) {
        println!("epoch {e:>4}  recon {:.3}  kl {:.3}  elbo {:.3}", r.reconstruction_nll, r.kl, r.elbo);
    }
    let acc = reconstruction_accuracy(&out.params, &f.x).unwrap();
    let base = majority_token_accuracy(&f.x, f.max_len, f.alphabet.len());
    println!("token accuracy {acc:.3} (majority-token baseline {base:.3})");

    let z = vae_latent_map(&out.params, &f.x).unwrap();
    for i in 0..5 {
        println!("{:<28} z = ({:+.3}, {:+.3})", f.sequences[i].to_string(), z[(i, 0)], z[(i, 1)]);
    }
}
