//! Two qubits under global noise, independent local noise and identical
//! local noise. Local noise destroys entanglement much sooner.

use pptt::propagators::PropagatorConfig;
use pptt::scenarios::{run_ensemble, Correlation, ScenarioSpec};
use pptt::stats::summarize_set;

fn main() -> pptt::Result<()> {
    let cfg = PropagatorConfig::default();
    for c in [Correlation::Glb, Correlation::Iloc, Correlation::Cloc] {
        let spec = ScenarioSpec::new(vec![2, 2], c);
        let set = run_ensemble(&spec, 200, &cfg, 5)?;
        let s = summarize_set(&set)?;
        println!(
            "{c:>5}: embedded trace {:>4}, ranks {:?}, median {:.3}, mean {:.3}, block path {}",
            spec.embedded_trace()?,
            spec.sampled_ranks()?,
            s.median,
            s.mean,
            set.block_path
        );
    }
    Ok(())
}
