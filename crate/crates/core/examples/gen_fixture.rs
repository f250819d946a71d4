//! Regenerates `fixtures/synthetic_catalog.jsonl`.
//!
//! cargo run -p sdg-core --example gen_fixture -- [OUT] [SEED]

use sdg_core::io::write_jsonl;
use sdg_core::synthetic::{synthetic_catalog, DEFAULT_FIXTURE_SEED, DEFAULT_FIXTURE_SIZE};

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/fixtures/synthetic_catalog.jsonl".into());
    let seed = std::env::args()
        .nth(2)
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(DEFAULT_FIXTURE_SEED);
    let courses = synthetic_catalog(DEFAULT_FIXTURE_SIZE, seed);
    write_jsonl(std::path::Path::new(&out), &courses).expect("write fixture");
    println!("wrote {} courses to {out}", courses.len());
}
