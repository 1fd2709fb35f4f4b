//! Draws a generator, saves it as JSON, loads it back and checks the PPT
//! time is reproduced exactly.

use pptt::commands::{load_generator, save_generator};
use pptt::ensembles::RngStream;
use pptt::entanglement::pptt_search;
use pptt::propagators::PropagatorConfig;
use pptt::scenarios::{draw_generator, ScenarioSpec};

fn main() -> pptt::Result<()> {
    let g = draw_generator(
        &ScenarioSpec::canonical(3).with_k(1.0),
        &RngStream::new(42, 0),
    )?;
    let path = std::env::temp_dir().join("pptt_generator.json");
    save_generator(&g, &path)?;
    let back = load_generator(&path)?;
    let cfg = PropagatorConfig::default();
    let (a, b) = (pptt_search(&g, &cfg)?, pptt_search(&back, &cfg)?);
    println!("saved to {}", path.display());
    println!("original x_ppt {}, reloaded x_ppt {}", a.x_ppt, b.x_ppt);
    assert_eq!(a.x_ppt, b.x_ppt);
    Ok(())
}
