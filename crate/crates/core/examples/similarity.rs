//! Circular fingerprints, Tanimoto similarity and latent-space neighbours.

use adkl::data::{featurize, synthetic_dataset};
use adkl::gp::{train_dkl, DklConfig};
use adkl::similarity::{circular_fingerprint, latent_neighbors, pearson, similarity_matrix, tanimoto};

fn main() {
    let ds = synthetic_dataset(150, 8, "mologp").unwrap();
    let graphs = ds.graphs().unwrap();
    let fps: Vec<_> = graphs.iter().map(|g| circular_fingerprint(g, 2, 2048)).collect();
    let smiles = ds.smiles();

    let m = similarity_matrix(ds.ids()[..5].to_vec(), &fps[..5]).unwrap();
    for (i, id) in m.ids.iter().enumerate() {
        let row: Vec<String> = m.values.row(i).iter().map(|v| format!("{v:.2}")).collect();
        println!("{id} {:<16} {}", smiles[i], row.join(" "));
    }

    let f = featurize(&graphs).unwrap();
    let cfg = DklConfig {
        hidden: vec![64, 16],
        epochs: 150,
        ..DklConfig::default()
    };
    let model = train_dkl(&f.x, &ds.targets(), &cfg).unwrap().model;
    let anchor = 0;
    println!("\nlatent neighbours of {}:", smiles[anchor]);
    let nn = latent_neighbors(&model, &f.x, anchor, 8).unwrap();
    let (mut dist, mut sim) = (Vec::new(), Vec::new());
    for (j, d) in &nn {
        let t = tanimoto(&fps[anchor], &fps[*j]).unwrap();
        println!("  {:<16} latent distance {d:.3}  tanimoto {t:.2}", smiles[*j]);
        dist.push(*d);
        sim.push(t);
    }
    if let Ok(r) = pearson(&dist, &sim) {
        println!("pearson(latent distance, tanimoto) = {r:.3}");
    }
}
