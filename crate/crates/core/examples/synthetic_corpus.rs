//! Generate the synthetic molecule corpus and write it as CSV.
//!
//! ```text
//! cargo run --example synthetic_corpus -- 1000 corpus.csv
//! ```

use adkl::chem::{descriptors, DESCRIPTOR_NAMES};
use adkl::data::synthetic_molecules;
use adkl::chem::write_smiles;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse().unwrap()).unwrap_or(20);
    let out = args.next();

    let graphs = synthetic_molecules(n, 0);
    let mut text = format!("id,smiles,{}\n", DESCRIPTOR_NAMES.join(","));
    for (i, g) in graphs.iter().enumerate() {
        let d: Vec<String> = descriptors(g).values().iter().map(|v| format!("{v:.4}")).collect();
        text.push_str(&format!("syn{i:05},{},{}\n", write_smiles(g), d.join(",")));
    }
    match out {
        Some(path) => {
            std::fs::write(&path, text).unwrap();
            println!("wrote {} molecules to {path}", graphs.len());
        }
        None => print!("{text}"),
    }
}
