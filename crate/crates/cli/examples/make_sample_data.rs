//! Generate a seeded synthetic dataset in the pipeline's input format.
//!
//! ```text
//! cargo run -p gepu-cli --example make_sample_data -- [DIR] [SEED]
//! ```
//!
//! Writes `epu_panel.csv`, `daily_prices.csv`, and `gdp.csv` (defaults:
//! `./sample_data`, seed 20030112). The same seed always produces the same
//! files.

use gepu_core::synthetic::{sample_dataset, write_sample_csvs};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| "sample_data".to_string());
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(20030112);

    let data = sample_dataset(seed);
    let dir = std::path::PathBuf::from(dir);
    write_sample_csvs(&data, &dir).expect("cannot write dataset");
    println!(
        "wrote {} months x {} economies, {} trading days x {} series (world index `{}`), {} gdp rows -> {}",
        data.epu.n_months(),
        data.epu.n_economies(),
        data.prices.dates().len(),
        data.prices.series().len(),
        data.world_index_id,
        data.gdp_rows.len(),
        dir.display()
    );
}
