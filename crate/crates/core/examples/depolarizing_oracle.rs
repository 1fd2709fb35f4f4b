//! The depolarizing qubit channel loses entanglement at exactly
//! `x = (3/4) ln 3`. Both propagation methods land on the first grid point
//! past it.

use pptt::entanglement::pptt_search;
use pptt::generator::GkslGenerator;
use pptt::propagators::{Method, PropagatorConfig};

fn main() -> pptt::Result<()> {
    let g = GkslGenerator::depolarizing_qubit();
    let exact = 0.75 * 3f64.ln();
    println!("exact crossing: {exact:.6}");
    for method in [Method::Standard, Method::CaoLu] {
        for dx in [1e-2, 1e-3] {
            let r = pptt_search(&g, &PropagatorConfig::new(method, dx, 10.0)?)?;
            println!(
                "{method:>8}  dx = {dx:<6}  x_ppt = {:.6}  error = {:.1e}",
                r.x_ppt,
                r.x_ppt - exact
            );
        }
    }
    Ok(())
}
