//! Runs the eigendecomposition and Cao-Lu back-ends on the same random
//! generators, with and without a Hamiltonian, and times them.

use std::time::Instant;

use pptt::ensembles::RngStream;
use pptt::entanglement::pptt_search;
use pptt::propagators::{Method, PropagatorConfig};
use pptt::scenarios::{draw_generator, ScenarioSpec};

fn main() -> pptt::Result<()> {
    for d in 2..=4 {
        for k in [0.0, 1.0] {
            let spec = ScenarioSpec::canonical(d).with_k(k);
            let gens = (0..10)
                .map(|i| draw_generator(&spec, &RngStream::new(99, i)))
                .collect::<pptt::Result<Vec<_>>>()?;
            let mut times = Vec::new();
            let mut xs = Vec::new();
            for method in [Method::Standard, Method::CaoLu] {
                let cfg = PropagatorConfig::new(method, 1e-3, 10.0)?;
                let start = Instant::now();
                let r = gens
                    .iter()
                    .map(|g| pptt_search(g, &cfg))
                    .collect::<pptt::Result<Vec<_>>>()?;
                times.push(start.elapsed().as_secs_f64() / gens.len() as f64);
                xs.push(r);
            }
            let max_diff = xs[0]
                .iter()
                .zip(&xs[1])
                .map(|(a, b)| (a.x_ppt - b.x_ppt).abs())
                .fold(0.0, f64::max);
            println!(
                "D = {d}, k = {k}: max |Δx| = {max_diff:.4}, standard {:.2} ms, caolu {:.2} ms",
                times[0] * 1e3,
                times[1] * 1e3
            );
        }
    }
    Ok(())
}
