//! Records the negativity of the evolving Choi state of one random qubit
//! generator and prints it every 0.1 time units.

use pptt::ensembles::RngStream;
use pptt::entanglement::{pptt_search_with, SearchOptions};
use pptt::propagators::{Method, PropagatorConfig};
use pptt::scenarios::{draw_generator, ScenarioSpec};

fn main() -> pptt::Result<()> {
    let g = draw_generator(&ScenarioSpec::canonical(2), &RngStream::new(8, 0))?;
    let cfg = PropagatorConfig::new(Method::CaoLu, 1e-3, 3.0)?;
    let opts = SearchOptions {
        record_negativity: true,
        interpolate: true,
    };
    let r = pptt_search_with(&g, &cfg, opts)?;
    for (x, n) in r
        .negativity_trace
        .as_deref()
        .unwrap_or_default()
        .iter()
        .step_by(100)
    {
        println!("x = {x:.2}  N = {n:.6}");
    }
    println!("PPT at x = {:.5} (interpolated)", r.x_ppt);
    Ok(())
}
