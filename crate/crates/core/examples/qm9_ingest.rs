//! Parse QM9 extended-XYZ files.
//!
//! ```text
//! cargo run --example qm9_ingest -- /path/to/dsgdb9nsd_xyz
//! ```
//!
//! Without an argument a single built-in record is parsed.

use std::path::Path;

use adkl::chem::write_smiles;
use adkl::data::{ingest_qm9_dir, parse_qm9_file, QM9_PROPERTIES};

const WATER: &str = "3
gdb 3\t799.58812\t437.90386\t282.94545\t1.8511\t6.31\t-0.2928\t0.0687\t0.3615\t19.0002\t0.021375\t-76.404702\t-76.401867\t-76.400922\t-76.422349\t6.002\t
O\t-0.0343604951\t 0.9775395708\t 0.0076015923\t-0.589706
H\t 0.0647664923\t 0.0205721989\t 0.0015346341\t 0.294853
H\t 0.8717903737\t 1.300792061\t 0.0006931336\t 0.294853
1591.0319\t3897.7869\t3991.9608
O\tO\t
InChI=1S/H2O/h1H2\tInChI=1S/H2O/h1H2
";

fn main() {
    let records = match std::env::args().nth(1) {
        Some(dir) => {
            let (records, rejected) = ingest_qm9_dir(Path::new(&dir)).unwrap();
            for r in &rejected {
                eprintln!("rejected {}: {}", r.file, r.reason);
            }
            records
        }
        None => vec![parse_qm9_file(WATER).unwrap()],
    };
    println!("{} records", records.len());
    for r in records.iter().take(10) {
        let smiles = r.graph().map(|g| write_smiles(&g)).unwrap_or_else(|e| format!("<{e}>"));
        println!("gdb {:<6} {:<20} atoms {:>2}", r.id, smiles, r.natoms);
        for (name, v) in QM9_PROPERTIES.iter().zip(&r.properties).take(8) {
            print!("  {name}={v}");
        }
        println!();
    }
}
