//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (bypassing output capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use pptt::commands::{
    cmd_compare_methods, cmd_single, GeneratorSource, Preset, RunConfig, Settings, SingleOptions,
};
use pptt::ensembles::RngStream;
use pptt::entanglement::{pptt_search, ChoiState};
use pptt::generator::{embed_layout, LocalNoiseLayout};
use pptt::linalg::hermitian_eigenvalues;
use pptt::propagators::{
    standard_channel_expm, GridChannel, Method, PropagatorConfig, SteppedChannel,
};
use pptt::scenarios::{
    draw_block_generators, draw_generator, draw_kossakowski_blocks, run_block_times, run_ensemble,
    run_ensemble_with, Correlation, PpttSampleSet, RankRule, RunOptions, ScenarioSpec, TraceRule,
};
use pptt::stats::{
    bootstrap_difference_ci, ks_distance, median, summarize_set, Ecdf, ProductCdf, Statistic,
    SummaryStats,
};

const DX: f64 = 1e-3;

fn report(n: u32, pass: bool, start: Instant, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n:>2}: {verdict}  {detail}  [{:.1} s]\n",
        start.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n}: {detail}");
}

fn grid(method: Method) -> PropagatorConfig {
    PropagatorConfig::new(method, DX, 10.0).unwrap()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// Canonical ensembles shared by the moment criteria.
fn canonical(d: usize) -> &'static (SummaryStats, f64) {
    static SETS: [OnceLock<(SummaryStats, f64)>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    SETS[d - 2].get_or_init(|| {
        let n = if d == 4 { 500 } else { 2000 };
        let start = Instant::now();
        let set = run_ensemble(&ScenarioSpec::canonical(d), n, &grid(Method::CaoLu), 7).unwrap();
        (summarize_set(&set).unwrap(), start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_01_depolarizing_oracle() {
    let start = Instant::now();
    let exact = 0.75 * 3f64.ln();
    let g = pptt::generator::GkslGenerator::depolarizing_qubit();
    let xs: Vec<f64> = [Method::Standard, Method::CaoLu]
        .iter()
        .map(|&m| pptt_search(&g, &grid(m)).unwrap().x_ppt)
        .collect();
    let cli = cmd_single(
        &RunConfig::resolve("single", &Settings::default()).unwrap(),
        &GeneratorSource::Preset(Preset::DepolarizingQubit),
        &SingleOptions::default(),
    )
    .unwrap();
    let ok = xs
        .iter()
        .chain([&cli.result.x_ppt])
        .all(|x| (x - exact).abs() <= 0.002)
        && start.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        ok,
        start,
        format!(
            "depolarizing qubit: standard {:.4}, caolu {:.4}, exact {exact:.5}",
            xs[0], xs[1]
        ),
    );
}

#[test]
fn criterion_02_method_agreement() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut censor_mismatch = 0;
    for d in 2..=4 {
        for k in [0.0, 1.0] {
            let spec = ScenarioSpec::canonical(d).with_k(k);
            for i in 0..50 {
                let g = draw_generator(&spec, &RngStream::new(200 + d as u64, i)).unwrap();
                let a = pptt_search(&g, &grid(Method::Standard)).unwrap();
                let b = pptt_search(&g, &grid(Method::CaoLu)).unwrap();
                worst = worst.max((a.x_ppt - b.x_ppt).abs());
                censor_mismatch += (a.censored != b.censored) as usize;
            }
        }
    }
    let ok = worst <= 5.0 * DX && censor_mismatch == 0;
    report(
        2,
        ok,
        start,
        format!(
            "300 generators, D = 2..4, k = 0, 1: max |Δx| = {worst:.4} (limit {:.3})",
            5.0 * DX
        ),
    );
}

fn moments_line(
    d: usize,
    s: &SummaryStats,
    mean: (f64, f64),
    sd: Option<(f64, f64)>,
) -> (bool, String) {
    let mut ok = within(s.mean, mean.0, mean.1);
    let mut line = format!(
        "D = {d} canonical, {} samples: mean {:.4} (want [{}, {}])",
        s.n, s.mean, mean.0, mean.1
    );
    if let Some(sd) = sd {
        ok &= within(s.stdev, sd.0, sd.1);
        line.push_str(&format!(
            ", stdev {:.4} (want [{}, {}])",
            s.stdev, sd.0, sd.1
        ));
    }
    (ok, line)
}

#[test]
fn criterion_03_d2_moments() {
    let start = Instant::now();
    let (s, secs) = canonical(2);
    let (ok, line) = moments_line(2, s, (0.94, 1.04), Some((0.08, 0.13)));
    report(3, ok && *secs <= 300.0, start, line);
}

#[test]
fn criterion_04_d3_moments() {
    let start = Instant::now();
    let (s, secs) = canonical(3);
    let (ok, line) = moments_line(3, s, (1.48, 1.60), Some((0.07, 0.12)));
    report(4, ok && *secs <= 1800.0, start, line);
}

#[test]
fn criterion_05_d4_mean_and_growth() {
    let start = Instant::now();
    let (s, secs) = canonical(4);
    let (ok, mut line) = moments_line(4, s, (1.72, 1.90), None);
    let means = [canonical(2).0.mean, canonical(3).0.mean, s.mean];
    let growing = means[0] < means[1] && means[1] < means[2];
    line.push_str(&format!(
        "; means D = 2, 3, 4: {:.3} < {:.3} < {:.3} {}",
        means[0],
        means[1],
        means[2],
        if growing { "holds" } else { "violated" }
    ));
    report(5, ok && growing && *secs <= 3600.0, start, line);
}

#[test]
fn criterion_06_rescaling_identity() {
    let start = Instant::now();
    let cfg = grid(Method::CaoLu);
    let base = ScenarioSpec::canonical(2);
    let doubled = base.clone().with_trace(TraceRule::Explicit(vec![4.0]));
    let a = run_ensemble(&base, 100, &cfg, 6).unwrap();
    let b = run_ensemble(&doubled, 100, &cfg, 6).unwrap();
    let worst = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (y.x_ppt - x.x_ppt / 2.0).abs())
        .fold(0.0, f64::max);
    report(
        6,
        worst <= 2.0 * DX && start.elapsed().as_secs_f64() < 60.0,
        start,
        format!(
            "100 seeds, ξ = 2 vs 4: max |x' - x/2| = {worst:.4} (limit {:.3})",
            2.0 * DX
        ),
    );
}

#[test]
fn criterion_07_iloc_composition() {
    let start = Instant::now();
    let cfg = grid(Method::CaoLu);
    let spec = ScenarioSpec::new(vec![2, 2], Correlation::Iloc);
    let direct = run_ensemble_with(
        &spec,
        100,
        &cfg,
        17,
        &RunOptions {
            force_direct: true,
            ..Default::default()
        },
    )
    .unwrap();
    let blocks = run_ensemble(&spec, 100, &cfg, 17).unwrap();
    assert!(blocks.block_path && !direct.block_path);
    let worst = direct
        .samples
        .iter()
        .zip(&blocks.samples)
        .map(|(a, b)| (a.x_ppt - b.x_ppt).abs())
        .fold(0.0, f64::max);

    let composite = run_ensemble(&spec, 1000, &cfg, 18).unwrap();
    let times = run_block_times(&spec, 1000, &cfg, 18).unwrap();
    let marginals = (0..2)
        .map(|j| Ecdf::new(&times.iter().map(|t| t[j].x_ppt).collect::<Vec<_>>()).unwrap())
        .collect();
    let ks = ks_distance(
        &Ecdf::new(&composite.x_values()).unwrap(),
        &ProductCdf(marginals),
    );
    report(
        7,
        worst <= 2.0 * DX && ks <= 0.05,
        start,
        format!("iLOC 2x2: direct vs block max |Δx| = {worst:.4} over 100 seeds; product-rule KS = {ks:.4} at 1000 samples"),
    );
}

#[test]
fn criterion_08_cloc_identity() {
    let start = Instant::now();
    let cfg = grid(Method::CaoLu);
    let cloc = ScenarioSpec::new(vec![2, 2, 2], Correlation::Cloc);
    let single = ScenarioSpec::canonical(2);
    let n = 1000;
    let set = run_ensemble(&cloc, n, &cfg, 8).unwrap();
    let marginal = run_ensemble(&single, n, &cfg, 8).unwrap().x_values();
    let ks = ks_distance(
        &Ecdf::new(&set.x_values()).unwrap(),
        &Ecdf::new(&marginal).unwrap(),
    );
    // the block path is checked against a direct simulation of two copies
    let pair = ScenarioSpec::new(vec![2, 2], Correlation::Cloc);
    let direct = run_ensemble_with(
        &pair,
        30,
        &cfg,
        9,
        &RunOptions {
            force_direct: true,
            ..Default::default()
        },
    )
    .unwrap();
    let block = run_ensemble(&pair, 30, &cfg, 9).unwrap();
    let worst = direct
        .samples
        .iter()
        .zip(&block.samples)
        .map(|(a, b)| (a.x_ppt - b.x_ppt).abs())
        .fold(0.0, f64::max);
    report(
        8,
        ks <= 0.001 && worst <= 2.0 * DX,
        start,
        format!("cLOC 2x2x2 vs single block, {n} matched seeds: KS = {ks:.4}; direct 2x2 vs block max |Δx| = {worst:.4}"),
    );
}

fn median_difference(
    glb: &PpttSampleSet,
    iloc: &PpttSampleSet,
    seed: u64,
) -> pptt::stats::ConfidenceInterval {
    bootstrap_difference_ci(
        &glb.x_values(),
        &iloc.x_values(),
        Statistic::Median,
        2000,
        0.95,
        seed,
    )
    .unwrap()
}

#[test]
fn criterion_09_scenario_ordering() {
    let start = Instant::now();
    let cfg = grid(Method::CaoLu);
    let n = 1000;
    let iloc = run_ensemble(
        &ScenarioSpec::new(vec![2, 2], Correlation::Iloc).with_trace(TraceRule::SuperLinear),
        n,
        &cfg,
        90,
    )
    .unwrap();
    let glb_spec =
        ScenarioSpec::new(vec![2, 2], Correlation::Glb).with_trace(TraceRule::SuperLinear);
    assert_eq!(
        glb_spec
            .clone()
            .with_rank(RankRule::Matched)
            .sampled_ranks()
            .unwrap(),
        vec![6]
    );
    let matched =
        run_ensemble(&glb_spec.clone().with_rank(RankRule::Matched), n, &cfg, 91).unwrap();
    let full = run_ensemble(&glb_spec.with_rank(RankRule::Full), n, &cfg, 92).unwrap();
    let ci = median_difference(&matched, &iloc, 1);
    let reversed = median(&full.x_values()) - median(&iloc.x_values());
    report(
        9,
        ci.estimate > 0.0 && ci.excludes_zero() && reversed < 0.0,
        start,
        format!(
            "D = 4, Tr = 8: median(GLB r=6) - median(iLOC) = {:.4}, 95% CI [{:.4}, {:.4}]; median(GLB r=15) - median(iLOC) = {reversed:.4}",
            ci.estimate, ci.lo, ci.hi
        ),
    );
}

#[test]
fn criterion_10_cp_trace_and_order() {
    let start = Instant::now();
    let mut min_eig = f64::INFINITY;
    let mut worst_trace = 0.0f64;
    for i in 0..50u64 {
        let d = 2 + (i % 3) as usize;
        let g = draw_generator(&ScenarioSpec::canonical(d), &RngStream::new(100, i)).unwrap();
        let mut ch = SteppedChannel::caolu(&g, DX).unwrap();
        for n in 1..=3000 {
            let s = ch.advance().unwrap();
            if n % 250 == 0 {
                let choi = ChoiState::from_channel(s, d);
                min_eig = min_eig.min(hermitian_eigenvalues(&choi.matrix).unwrap()[0]);
                worst_trace = worst_trace.max((choi.matrix.trace().re - 1.0).abs());
            }
        }
    }
    // global error at x = 1 against the exact channel, halving dx
    let mut orders = Vec::new();
    for i in 0..6u64 {
        let d = 2 + (i % 3) as usize;
        let g = draw_generator(&ScenarioSpec::canonical(d), &RngStream::new(101, i)).unwrap();
        let exact = standard_channel_expm(&g, 1.0).unwrap().matrix;
        let err = |dx: f64| {
            let mut ch = SteppedChannel::caolu(&g, dx).unwrap();
            let steps = (1.0 / dx).round() as usize;
            for _ in 1..steps {
                ch.advance().unwrap();
            }
            (ch.advance().unwrap() - &exact).norm()
        };
        orders.push((err(0.02) / err(0.01)).log2());
    }
    let order = orders.iter().sum::<f64>() / orders.len() as f64;
    report(
        10,
        min_eig >= -1e-10 && worst_trace <= 1e-4 && within(order, 1.8, 2.2),
        start,
        format!(
            "50 generators to x = 3: min Choi eigenvalue {min_eig:.2e}, max |Tr - 1| = {worst_trace:.2e}; convergence order {order:.3}"
        ),
    );
}

#[test]
fn criterion_11_embedding_trace() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for dims in [vec![2, 2], vec![3, 2], vec![2, 2, 2], vec![4, 2]] {
        let spec =
            ScenarioSpec::new(dims.clone(), Correlation::Iloc).with_trace(TraceRule::SuperLinear);
        let total = spec.total_dim() as f64;
        let expected = total * total.log2();
        let blocks = draw_kossakowski_blocks(&spec, &mut RngStream::new(11, 0).rng()).unwrap();
        let embedded = embed_layout(&LocalNoiseLayout::new(dims, blocks).unwrap()).unwrap();
        for tr in [
            spec.embedded_trace().unwrap(),
            embedded.kossakowski.matrix.trace().re,
        ] {
            worst = worst.max((tr - expected).abs() / expected);
        }
        let g = draw_generator(&spec, &RngStream::new(11, 0)).unwrap();
        worst = worst.max((g.rates.iter().sum::<f64>() - expected).abs() / expected);
        assert_eq!(
            draw_block_generators(&spec, &RngStream::new(11, 0))
                .unwrap()
                .len(),
            spec.subsystem_dims.len()
        );
    }
    report(
        11,
        worst <= 1e-10,
        start,
        format!("Tr K_LOC = D log2 D for 2x2, 3x2, 2x2x2, 4x2: max relative error {worst:.1e}"),
    );
}

#[test]
fn criterion_12_timing_shape() {
    let start = Instant::now();
    let s = Settings {
        dims: Some("2,3,4,5,6".into()),
        samples: Some(4),
        k: Some(0.0),
        seed: Some(12),
        workers: Some(1),
        ..Default::default()
    };
    let report_json =
        cmd_compare_methods(&RunConfig::resolve("compare-methods", &s).unwrap()).unwrap();
    let fits = &report_json.d6_fits;
    let ok = fits.len() == 2
        && fits
            .iter()
            .all(|f| within(f.loglog_slope, 4.5, 7.5) && f.theta1 > 0.0);
    let detail = fits
        .iter()
        .map(|f| {
            format!(
                "{}: slope {:.2}, θ1 = {:.3e} s",
                f.method, f.loglog_slope, f.theta1
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    report(12, ok, start, format!("D = 2..6 timing, {detail}"));
}
