//! Fits three-parameter gamma and lognormal laws to a sampled ensemble and
//! bootstraps the median.

use pptt::propagators::PropagatorConfig;
use pptt::scenarios::{run_ensemble, ScenarioSpec};
use pptt::stats::{bootstrap_ci, fit_gamma3, fit_lognormal3, summarize_set, Statistic};

fn main() -> pptt::Result<()> {
    let set = run_ensemble(
        &ScenarioSpec::canonical(2),
        1000,
        &PropagatorConfig::default(),
        3,
    )?;
    let x = set.x_values();
    let s = summarize_set(&set)?;
    println!("sample: mean {:.4}, stdev {:.4}", s.mean, s.stdev);
    let g = fit_gamma3(&x)?;
    println!(
        "gamma3: shape {:.3}, scale {:.4}, threshold {:.4}, implied mean {:.4}, stdev {:.4}",
        g.shape,
        g.scale,
        g.threshold,
        g.mean(),
        g.stdev()
    );
    let l = fit_lognormal3(&x)?;
    println!(
        "lognormal3: location {:.3}, scale {:.4}, threshold {:.4}, implied mean {:.4}, stdev {:.4}",
        l.location,
        l.scale,
        l.threshold,
        l.mean(),
        l.stdev()
    );
    let ci = bootstrap_ci(&x, Statistic::Median, 2000, 0.95, 1)?;
    println!(
        "median {:.4}, 95% CI [{:.4}, {:.4}]",
        ci.estimate, ci.lo, ci.hi
    );
    Ok(())
}
