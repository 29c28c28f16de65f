//! Running an experiment config through the same path as the binary.
//!
//! `cargo run --example run_config -- configs/threshold.json /tmp/threshold`

use std::path::PathBuf;

use anosov_lab::cli::{run_experiment, validate_config};

fn main() {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/livsic.json").into()));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("anosov-lab-example"));
    let cfg = match validate_config(&config) {
        Ok(c) => c,
        Err(errs) => {
            errs.iter().for_each(|e| eprintln!("{e}"));
            std::process::exit(2);
        }
    };
    let m = run_experiment(&cfg, &out, true).expect("run failed");
    for c in &m.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("files in {}: {:?}", out.display(), m.files);
}
