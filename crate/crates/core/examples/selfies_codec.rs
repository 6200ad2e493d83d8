//! SELFIES round trip, alphabet construction and one-hot encoding.
//!
//! Any token string decodes to a valid molecule, which the second half shows
//! with strings made up on the spot.

use adkl::chem::{is_isomorphic, parse_smiles, write_smiles};
use adkl::num::Rng;
use adkl::selfies::{decode_selfies, decode_str, encode_selfies, one_hot_batch, Alphabet};

fn main() {
    let smiles = ["CCO", "C1CC1C#N", "OC1=CC=CO1", "NC=[NH+]C1=CN=N[N-]1"];
    let mut seqs = Vec::new();
    for s in smiles {
        let mol = parse_smiles(s).unwrap();
        let seq = encode_selfies(&mol).unwrap();
        let back = decode_selfies(&seq);
        println!("{s:<24} {seq}  -> {} (isomorphic: {})", write_smiles(&back), is_isomorphic(&mol, &back));
        seqs.push(seq);
    }

    let alphabet = Alphabet::build(&seqs).unwrap();
    let max_len = seqs.iter().map(|s| s.len()).max().unwrap();
    let x = one_hot_batch(&seqs, &alphabet, max_len).unwrap();
    println!("\nalphabet ({} symbols): {}", alphabet.len(), alphabet.tokens().join(" "));
    println!("one-hot matrix {}x{}", x.rows(), x.cols());

    println!("\nrandom strings:");
    let vocab = ["[C]", "[=C]", "[N]", "[=O]", "[#N]", "[O-1]", "[N+1]", "[Ring1]", "[Branch1]", "[F]"];
    let mut rng = Rng::new(7);
    for _ in 0..6 {
        let text: String = (0..1 + rng.below(10)).map(|_| vocab[rng.below(vocab.len())]).collect();
        let mol = decode_str(&text).unwrap();
        println!("{text:<60} -> {}", write_smiles(&mol));
    }
}
