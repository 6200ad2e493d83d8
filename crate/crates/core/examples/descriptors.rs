//! Parse SMILES and print the seven descriptors.
//!
//! ```text
//! cargo run --example descriptors -- "CCO" "c1ccccc1" "NC=[NH+]C1=CN=N[N-]1"
//! ```

use adkl::chem::{descriptors, parse_smiles, write_smiles, DESCRIPTOR_NAMES};

fn main() {
    let mut args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        args = ["C", "CCO", "CCCC", "c1ccccc1", "CC12CCC(C)(CC1)C2", "[O-]C(=O)CCNC=[NH2+]"]
            .map(String::from)
            .to_vec();
    }
    println!("{:<24} {:<24} {}", "input", "canonical", DESCRIPTOR_NAMES.join("\t"));
    for s in &args {
        match parse_smiles(s) {
            Ok(mol) => {
                let d = descriptors(&mol);
                let cols: Vec<String> = d.values().iter().map(|v| format!("{v:.3}")).collect();
                println!("{:<24} {:<24} {}", s, write_smiles(&mol), cols.join("\t"));
            }
            Err(e) => println!("{s:<24} error: {e}"),
        }
    }
}
