//! Regenerates the figure and table data sets into a directory, the same
//! files `envcorr reproduce` writes.
//!
//! cargo run --release --example reproduce_figures -- [OUT_DIR]

use std::path::PathBuf;

use envcorr::experiment::reproduce::{reproduce, write_reproduction, Options, Target};

fn main() -> Result<(), envcorr::experiment::Failure> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out".into())
        .into();
    let opts = Options {
        n: 50_000,
        ..Options::default()
    };
    for target in [Target::Fig3, Target::Fig4, Target::Fig5, Target::Table1] {
        for p in write_reproduction(target, &opts, &out)? {
            println!("wrote {}", p.display());
        }
    }
    let (_, table1) = reproduce(
        Target::Table1,
        &Options {
            n: 0,
            ..Options::default()
        },
    )?;
    println!("ideal tap key rate {}", table1["ideal_tap_key_rate"]);
    Ok(())
}
