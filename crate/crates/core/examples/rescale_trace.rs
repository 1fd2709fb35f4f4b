//! PPT times scale inversely with the trace of the Kossakowski matrix, so
//! an ensemble only has to be sampled once per trace convention.

use pptt::propagators::PropagatorConfig;
use pptt::scenarios::{rescale_samples, run_ensemble, ScenarioSpec, TraceRule};

fn main() -> pptt::Result<()> {
    let cfg = PropagatorConfig::new(pptt::propagators::Method::CaoLu, 1e-3, 10.0)?;
    let base = ScenarioSpec::canonical(3);
    let doubled = base.clone().with_trace(TraceRule::Explicit(vec![6.0]));
    let a = run_ensemble(&base, 20, &cfg, 11)?;
    let b = run_ensemble(&doubled, 20, &cfg, 11)?;
    let predicted = rescale_samples(&a, 3.0, 6.0)?;
    for ((p, s), o) in predicted
        .samples
        .iter()
        .zip(&b.samples)
        .zip(&a.samples)
        .take(8)
    {
        println!(
            "ξ = 3: {:.3}   predicted ξ = 6: {:.4}   simulated ξ = 6: {:.4}",
            o.x_ppt, p.x_ppt, s.x_ppt
        );
    }
    Ok(())
}
