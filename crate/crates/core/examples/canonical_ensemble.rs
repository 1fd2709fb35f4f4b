//! Samples the canonical ensemble at a few dimensions and prints the
//! moments of the PPT time.
//!
//! `cargo run --release --example canonical_ensemble -- 500`

use pptt::propagators::PropagatorConfig;
use pptt::scenarios::{run_ensemble, ScenarioSpec};
use pptt::stats::summarize_set;

fn main() -> pptt::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300);
    let cfg = PropagatorConfig::default();
    println!("  D      n    mean  median     min   stdev");
    for d in 2..=4 {
        let n = if d == 4 { n / 4 } else { n };
        let set = run_ensemble(&ScenarioSpec::canonical(d), n, &cfg, 2024)?;
        let s = summarize_set(&set)?;
        println!(
            "{d:>3} {:>6} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
            s.n, s.mean, s.median, s.min, s.stdev
        );
    }
    Ok(())
}
