//! Empirical distributions of PPT times: summaries, bootstrap intervals,
//! ECDFs and histograms, three-parameter fits and scaling laws.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::scenarios::PpttSampleSet;

/// Characteristic times of a sample. `stdev` uses the `n - 1` convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub censored_count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub stdev: f64,
}

/// Summary of uncensored values; `censored_count` is carried along.
pub fn summarize(values: &[f64], censored_count: usize) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(if censored_count > 0 {
            Error::AllCensored
        } else {
            Error::Empty("sample")
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryStats {
        n: values.len(),
        censored_count,
        mean: mean(values),
        median: median_sorted(&sorted),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        stdev: stdev(values),
    })
}

pub fn summarize_set(set: &PpttSampleSet) -> Result<SummaryStats> {
    summarize(&set.x_values(), set.censored_count())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for a single value.
pub fn stdev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Median with the midpoint convention for even sizes.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    median_sorted(&sorted)
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Median,
    Min,
    Stdev,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::Mean,
        Statistic::Median,
        Statistic::Min,
        Statistic::Stdev,
    ];

    pub fn compute(&self, values: &[f64]) -> f64 {
        match self {
            Statistic::Mean => mean(values),
            Statistic::Median => median(values),
            Statistic::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Statistic::Stdev => stdev(values),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn excludes_zero(&self) -> bool {
        !self.contains(0.0)
    }
}

fn check_bootstrap(resamples: usize, level: f64) -> Result<()> {
    if resamples < 100 {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least 100 resamples, got {resamples}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    Ok(())
}

fn resample<R: Rng>(values: &[f64], rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..values.len()).map(|_| values[rng.random_range(0..values.len())]));
}

/// Percentile interval of `(1-level)/2` and `(1+level)/2`.
fn percentile_interval(mut reps: Vec<f64>, estimate: f64, level: f64) -> ConfidenceInterval {
    reps.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (reps.len() - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        if i + 1 < reps.len() {
            reps[i] * (1.0 - f) + reps[i + 1] * f
        } else {
            reps[i]
        }
    };
    ConfidenceInterval {
        estimate,
        lo: q((1.0 - level) / 2.0),
        hi: q((1.0 + level) / 2.0),
        level,
        resamples: reps.len(),
    }
}

/// Nonparametric percentile bootstrap with its own seeded stream.
pub fn bootstrap_ci(
    values: &[f64],
    statistic: Statistic,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    check_bootstrap(resamples, level)?;
    if values.is_empty() {
        return Err(Error::Empty("bootstrap sample"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut buf = Vec::with_capacity(values.len());
    let reps = (0..resamples)
        .map(|_| {
            resample(values, &mut rng, &mut buf);
            statistic.compute(&buf)
        })
        .collect();
    Ok(percentile_interval(reps, statistic.compute(values), level))
}

/// Bootstrap interval for `stat(a) - stat(b)` with independent resampling.
pub fn bootstrap_difference_ci(
    a: &[f64],
    b: &[f64],
    statistic: Statistic,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    check_bootstrap(resamples, level)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("bootstrap sample"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut ba, mut bb) = (Vec::new(), Vec::new());
    let reps = (0..resamples)
        .map(|_| {
            resample(a, &mut rng, &mut ba);
            resample(b, &mut rng, &mut bb);
            statistic.compute(&ba) - statistic.compute(&bb)
        })
        .collect();
    let estimate = statistic.compute(a) - statistic.compute(b);
    Ok(percentile_interval(reps, estimate, level))
}

/// A right-continuous step CDF.
pub trait StepCdf {
    fn eval(&self, x: f64) -> f64;
    /// Points where the function may jump.
    fn jumps(&self) -> Vec<f64>;
}

/// Empirical CDF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("ECDF sample"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `(x, F(x))` at every distinct sample value.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        let n = self.sorted.len() as f64;
        for (i, &x) in self.sorted.iter().enumerate() {
            match pts.last_mut() {
                Some(last) if last.0 == x => last.1 = (i + 1) as f64 / n,
                _ => pts.push((x, (i + 1) as f64 / n)),
            }
        }
        pts
    }
}

impl StepCdf for Ecdf {
    fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    fn jumps(&self) -> Vec<f64> {
        self.sorted.clone()
    }
}

/// `Π_j F_j(x)`: the CDF of the maximum of independent variables.
#[derive(Clone, Debug)]
pub struct ProductCdf(pub Vec<Ecdf>);

impl StepCdf for ProductCdf {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().map(|f| f.eval(x)).product()
    }

    fn jumps(&self) -> Vec<f64> {
        self.0
            .iter()
            .flat_map(|f| f.sorted.iter().copied())
            .collect()
    }
}

/// Kolmogorov-Smirnov distance `sup_x |F(x) - G(x)|` between step CDFs.
pub fn ks_distance(f: &impl StepCdf, g: &impl StepCdf) -> f64 {
    let mut pts = f.jumps();
    pts.extend(g.jumps());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // both functions are constant between consecutive jump points
    pts.iter()
        .map(|&x| (f.eval(x) - g.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// Density-normalized histogram over `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn area(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, w)| d * (w[1] - w[0]))
            .sum()
    }
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram sample"));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &x in values {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = values.len() as f64;
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    Ok(Histogram {
        edges,
        counts,
        density,
    })
}

/// Gamma density with threshold:
/// `(x-μ)^{β-1} e^{-(x-μ)/σ} / (σ^β Γ(β))` for `x > μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamma3 {
    pub shape: f64,
    pub scale: f64,
    pub threshold: f64,
    pub log_likelihood: f64,
}

impl Gamma3 {
    pub fn mean(&self) -> f64 {
        self.threshold + self.shape * self.scale
    }

    pub fn stdev(&self) -> f64 {
        self.scale * self.shape.sqrt()
    }

    pub fn log_likelihood_of(&self, values: &[f64]) -> f64 {
        gamma_log_likelihood(values, self.shape, self.scale, self.threshold)
    }
}

/// Lognormal density with threshold: `ln(x-μ) ~ N(ν, σ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lognormal3 {
    pub location: f64,
    pub scale: f64,
    pub threshold: f64,
    pub log_likelihood: f64,
}

impl Lognormal3 {
    pub fn mean(&self) -> f64 {
        self.threshold + (self.location + self.scale.powi(2) / 2.0).exp()
    }

    pub fn stdev(&self) -> f64 {
        let s2 = self.scale.powi(2);
        ((s2.exp() - 1.0) * (2.0 * self.location + s2).exp()).sqrt()
    }
}

/// Gap kept between the threshold and the sample minimum.
pub const THRESHOLD_GAP: f64 = 1e-4;
/// Number of thresholds on the profile grid.
pub const THRESHOLD_GRID: usize = 200;
/// Fewest values a three-parameter fit accepts.
pub const MIN_FIT_SAMPLES: usize = 50;

fn check_fit_input(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "three-parameter fits need at least {MIN_FIT_SAMPLES} values, got {}",
            values.len()
        )));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    if lo < THRESHOLD_GAP {
        return Err(Error::Degenerate(format!(
            "minimum {lo} leaves no room for a non-negative threshold"
        )));
    }
    Ok((lo, hi))
}

/// Profile likelihood maximized over thresholds in `[0, min - δ]`: a grid
/// denser near the minimum, then golden-section refinement around the best
/// grid point.
fn profile_threshold<T>(values: &[f64], fit_at: impl Fn(f64) -> Option<(f64, T)>) -> Result<T> {
    let (lo, _) = check_fit_input(values)?;
    let top = lo - THRESHOLD_GAP;
    let grid: Vec<f64> = (0..THRESHOLD_GRID)
        .map(|i| {
            let u = i as f64 / (THRESHOLD_GRID - 1) as f64;
            top * (1.0 - (1.0 - u).powi(3))
        })
        .collect();
    let scored: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .filter_map(|(i, &mu)| fit_at(mu).map(|(ll, _)| (i, ll)))
        .collect();
    let &(best, _) = scored
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Degenerate("likelihood undefined on the threshold grid".into()))?;
    let (mut a, mut b) = (
        grid[best.saturating_sub(1)],
        grid[(best + 1).min(THRESHOLD_GRID - 1)],
    );
    let score = |mu: f64| fit_at(mu).map_or(f64::NEG_INFINITY, |(ll, _)| ll);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (score(c), score(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = score(d);
        }
    }
    let refined = if fc >= fd { c } else { d };
    let candidates = [refined, grid[best]];
    candidates
        .iter()
        .filter_map(|&mu| fit_at(mu))
        .max_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, t)| t)
        .ok_or_else(|| Error::Degenerate("likelihood undefined".into()))
}

fn gamma_log_likelihood(values: &[f64], shape: f64, scale: f64, threshold: f64) -> f64 {
    let n = values.len() as f64;
    let mut s = 0.0;
    for &x in values {
        let y = x - threshold;
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        s += (shape - 1.0) * y.ln() - y / scale;
    }
    s - n * (shape * scale.ln() + ln_gamma(shape))
}

/// Shape solving `ln β - ψ(β) = s` (the left side decreases from ∞ to 0).
fn gamma_shape(s: f64) -> Option<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return None;
    }
    let f = |b: f64| b.ln() - digamma(b) - s;
    let (mut lo, mut hi) = (1e-8, 1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Maximum-likelihood three-parameter Gamma fit.
pub fn fit_gamma3(values: &[f64]) -> Result<Gamma3> {
    profile_threshold(values, |mu| {
        let n = values.len() as f64;
        let mean_y = values.iter().map(|x| x - mu).sum::<f64>() / n;
        let mean_ln = values.iter().map(|x| (x - mu).ln()).sum::<f64>() / n;
        let shape = gamma_shape(mean_y.ln() - mean_ln)?;
        let scale = mean_y / shape;
        let ll = gamma_log_likelihood(values, shape, scale, mu);
        ll.is_finite().then_some((
            ll,
            Gamma3 {
                shape,
                scale,
                threshold: mu,
                log_likelihood: ll,
            },
        ))
    })
}

/// Maximum-likelihood three-parameter Lognormal fit.
pub fn fit_lognormal3(values: &[f64]) -> Result<Lognormal3> {
    profile_threshold(values, |mu| {
        let n = values.len() as f64;
        let z: Vec<f64> = values.iter().map(|x| (x - mu).ln()).collect();
        let nu = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - nu).powi(2)).sum::<f64>() / n;
        if !(var > 0.0) {
            return None;
        }
        let sigma = var.sqrt();
        let ll = -z.iter().sum::<f64>()
            - n * sigma.ln()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * n;
        ll.is_finite().then_some((
            ll,
            Lognormal3 {
                location: nu,
                scale: sigma,
                threshold: mu,
                log_likelihood: ll,
            },
        ))
    })
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("scaling points"));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "scaling points need positive D and value, got {p:?}"
        )));
    }
    Ok(())
}

/// Least-squares `θ` for `value = log₂(θ·D)`: `θ = 2^{mean(value - log₂D)}`.
pub fn fit_log_scaling(points: &[(f64, f64)]) -> Result<f64> {
    check_points(points)?;
    let m = points.iter().map(|(d, v)| v - d.log2()).sum::<f64>() / points.len() as f64;
    Ok(m.exp2())
}

/// Least-squares `θ` for `value = θ/D`: `θ = Σ(v/D) / Σ(1/D²)`.
pub fn fit_inverse_scaling(points: &[(f64, f64)]) -> Result<f64> {
    check_points(points)?;
    let num: f64 = points.iter().map(|(d, v)| v / d).sum();
    let den: f64 = points.iter().map(|(d, _)| 1.0 / (d * d)).sum();
    Ok(num / den)
}

/// Least-squares prefactor of `value = θ·D^p`.
pub fn fit_power_prefactor(points: &[(f64, f64)], power: f64) -> Result<f64> {
    check_points(points)?;
    let num: f64 = points.iter().map(|(d, v)| v * d.powf(power)).sum();
    let den: f64 = points.iter().map(|(d, _)| d.powf(2.0 * power)).sum();
    Ok(num / den)
}

/// Slope of the least-squares line through `(ln D, ln value)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    check_points(points)?;
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "a slope needs at least two points".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all D values are equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Gamma, LogNormal};

    fn gamma_sample(shape: f64, scale: f64, threshold: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = Gamma::new(shape, scale).unwrap();
        (0..n).map(|_| threshold + g.sample(&mut rng)).collect()
    }

    #[test]
    fn summary_of_small_samples() {
        let s = summarize(&[1.0, 2.0, 3.0], 0).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (2.0, 2.0, 1.0, 3.0));
        assert!((s.stdev - 1.0).abs() < 1e-15);
        let s = summarize(&[0.7], 2).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.stdev), (0.7, 0.7, 0.7, 0.0));
        assert_eq!(s.censored_count, 2);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(matches!(summarize(&[], 3), Err(Error::AllCensored)));
        assert!(matches!(summarize(&[], 0), Err(Error::Empty(_))));
    }

    #[test]
    fn bootstrap_constant_and_coverage() {
        let ci = bootstrap_ci(&[2.0; 4], Statistic::Mean, 200, 0.95, 1).unwrap();
        assert_eq!((ci.lo, ci.hi), (2.0, 2.0));
        let xs = gamma_sample(2.24, 0.06972, 0.8334, 2000, 3);
        let ci = bootstrap_ci(&xs, Statistic::Mean, 1000, 0.95, 4).unwrap();
        assert!(ci.contains(ci.estimate));
        // CLT width 2·1.96·s/√n
        let clt = 2.0 * 1.96 * stdev(&xs) / (xs.len() as f64).sqrt();
        assert!(
            ((ci.hi - ci.lo) / clt - 1.0).abs() < 0.15,
            "{ci:?} vs {clt}"
        );
        assert!(bootstrap_ci(&xs, Statistic::Mean, 99, 0.95, 4).is_err());
        assert_eq!(
            bootstrap_ci(&xs, Statistic::Median, 200, 0.9, 7).unwrap(),
            bootstrap_ci(&xs, Statistic::Median, 200, 0.9, 7).unwrap()
        );
    }

    #[test]
    fn bootstrap_difference_detects_shift() {
        let a = gamma_sample(7.0, 0.036, 1.33, 1000, 1);
        let b = gamma_sample(7.0, 0.036, 1.28, 1000, 2);
        let ci = bootstrap_difference_ci(&a, &b, Statistic::Median, 500, 0.95, 3).unwrap();
        assert!(ci.excludes_zero(), "{ci:?}");
        let c = gamma_sample(7.0, 0.036, 1.28, 1000, 5);
        let ci = bootstrap_difference_ci(&c, &b, Statistic::Median, 500, 0.95, 3).unwrap();
        assert!(ci.contains(0.0), "{ci:?}");
    }

    #[test]
    fn ecdf_limits_and_points() {
        let f = Ecdf::new(&[1.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.eval(3.5), 1.0);
        assert_eq!(f.points(), vec![(1.0, 0.25), (2.0, 0.75), (3.0, 1.0)]);
        assert!(Ecdf::new(&[]).is_err());
    }

    #[test]
    fn ks_extremes() {
        let a = Ecdf::new(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(ks_distance(&a, &a.clone()), 0.0);
        let b = Ecdf::new(&[4.0, 5.0]).unwrap();
        assert_eq!(ks_distance(&a, &b), 1.0);
        let c = Ecdf::new(&[1.5, 2.5, 3.5]).unwrap();
        assert!((ks_distance(&a, &c) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_null_resample() {
        let xs = gamma_sample(2.0, 0.1, 0.8, 1000, 11);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let mut buf = Vec::new();
        resample(&xs, &mut rng, &mut buf);
        let d = ks_distance(&Ecdf::new(&xs).unwrap(), &Ecdf::new(&buf).unwrap());
        assert!(d < 0.06, "{d}");
    }

    #[test]
    fn product_cdf_is_cdf_of_maximum() {
        let a = gamma_sample(2.0, 0.1, 0.8, 3000, 1);
        let b = gamma_sample(3.0, 0.1, 0.7, 3000, 2);
        let max: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let prod = ProductCdf(vec![Ecdf::new(&a).unwrap(), Ecdf::new(&b).unwrap()]);
        assert!(ks_distance(&Ecdf::new(&max).unwrap(), &prod) < 0.04);
        assert!((prod.eval(10.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_has_unit_area() {
        let xs = gamma_sample(2.0, 0.1, 0.8, 777, 5);
        for bins in [1, 7, 50] {
            let h = histogram(&xs, bins).unwrap();
            assert!((h.area() - 1.0).abs() < 1e-12);
            assert_eq!(h.counts.iter().sum::<usize>(), 777);
        }
        assert!((histogram(&[3.0, 3.0], 4).unwrap().area() - 1.0).abs() < 1e-12);
        assert!(histogram(&[], 4).is_err());
    }

    #[test]
    fn gamma_shape_inverts_the_score() {
        for b in [0.3, 1.0, 2.24, 7.0, 27.7] {
            let s = f64::ln(b) - digamma(b);
            assert!((gamma_shape(s).unwrap() / b - 1.0).abs() < 1e-10);
        }
        assert!(gamma_shape(0.0).is_none());
    }

    #[test]
    fn gamma_fit_recovers_synthetic_moments() {
        let (b, s, m) = (7.0, 0.036, 1.28);
        let xs = gamma_sample(b, s, m, 20000, 21);
        let fit = fit_gamma3(&xs).unwrap();
        let (mean0, sd0) = (m + b * s, s * b.sqrt());
        assert!((fit.mean() / mean0 - 1.0).abs() < 0.01, "{fit:?}");
        assert!((fit.stdev() / sd0 - 1.0).abs() < 0.05, "{fit:?}");
        assert!(fit.threshold <= xs.iter().copied().fold(f64::INFINITY, f64::min) - THRESHOLD_GAP);
        assert!((fit.log_likelihood - fit.log_likelihood_of(&xs)).abs() < 1e-6);
    }

    #[test]
    fn gamma_fit_error_shrinks_with_n() {
        let (b, s, m) = (7.0, 0.036, 1.28);
        let truth = m + b * s;
        let errs: Vec<f64> = [500, 5000, 20000]
            .iter()
            .map(|&n| {
                // average over a few replicates to smooth out luck
                (0..4)
                    .map(|r| {
                        (fit_gamma3(&gamma_sample(b, s, m, n, 100 + r))
                            .unwrap()
                            .mean()
                            - truth)
                            .abs()
                    })
                    .sum::<f64>()
                    / 4.0
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn lognormal_fit_recovers_synthetic_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let ln = LogNormal::new(-1.899, 0.5856).unwrap();
        let xs: Vec<f64> = (0..20000).map(|_| 0.812 + ln.sample(&mut rng)).collect();
        let fit = fit_lognormal3(&xs).unwrap();
        let truth = Lognormal3 {
            location: -1.899,
            scale: 0.5856,
            threshold: 0.812,
            log_likelihood: 0.0,
        };
        assert!((fit.mean() / truth.mean() - 1.0).abs() < 0.01, "{fit:?}");
        assert!((fit.stdev() / truth.stdev() - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn fits_reject_bad_input() {
        assert!(matches!(fit_gamma3(&[1.0; 60]), Err(Error::Degenerate(_))));
        assert!(fit_gamma3(&[1.0, 2.0]).is_err());
        assert!(fit_lognormal3(&[0.5; 80]).is_err());
    }

    #[test]
    fn scaling_fits() {
        let pts: Vec<(f64, f64)> = (2..=8)
            .map(|d| (d as f64, (1.43 * d as f64).log2()))
            .collect();
        assert!((fit_log_scaling(&pts).unwrap() - 1.43).abs() < 1e-12);
        assert_eq!(fit_log_scaling(&[(2.0, 1.0)]).unwrap(), 1.0);
        let pts: Vec<(f64, f64)> = (2..=8).map(|d| (d as f64, 0.25 / d as f64)).collect();
        assert!((fit_inverse_scaling(&pts).unwrap() - 0.25).abs() < 1e-12);
        assert!((fit_inverse_scaling(&[(2.0, 0.125)]).unwrap() - 0.25).abs() < 1e-15);
        assert!(fit_log_scaling(&[]).is_err());
        assert!(fit_inverse_scaling(&[(2.0, -1.0)]).is_err());
        let pts: Vec<(f64, f64)> = (2..=6)
            .map(|d| (d as f64, 3e-6 * (d as f64).powi(6)))
            .collect();
        assert!((fit_power_prefactor(&pts, 6.0).unwrap() / 3e-6 - 1.0).abs() < 1e-12);
        assert!((loglog_slope(&pts).unwrap() - 6.0).abs() < 1e-12);
    }
}
