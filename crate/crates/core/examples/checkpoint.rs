//! Save a trained model, load it back and predict with both copies.

use adkl::data::{featurize, read_checkpoint, synthetic_dataset, write_checkpoint, DklCheckpoint};
use adkl::gp::{predict, train_dkl, DklConfig};

fn main() {
    let ds = synthetic_dataset(80, 2, "hba").unwrap();
    let f = featurize(&ds.graphs().unwrap()).unwrap();
    let cfg = DklConfig {
        hidden: vec![32, 8],
        epochs: 80,
        ..DklConfig::default()
    };
    let model = train_dkl(&f.x, &ds.targets(), &cfg).unwrap().model;

    let ck = DklCheckpoint {
        model,
        config: cfg,
        encoding: f.spec(),
        target_name: ds.target_name().into(),
        dataset_hash: ds.content_hash().into(),
    };
    let dir = std::env::temp_dir().join("adkl-checkpoint-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("checkpoint.json");
    write_checkpoint(&ck, &path).unwrap();
    let loaded: DklCheckpoint = read_checkpoint(&path).unwrap();

    let a = predict(&ck.model, &f.x).unwrap();
    let b = predict(&loaded.model, &f.x).unwrap();
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path).unwrap().len());
    println!("dataset {}", loaded.dataset_hash);
    println!("predictions identical after reload: {}", a == b);
}
