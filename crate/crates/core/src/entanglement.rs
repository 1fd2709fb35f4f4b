//! Choi states, negativity and the PPT-time search.
//!
//! Subsystem `A` (acted on by the channel) is the first tensor factor, so the
//! composite index is `i·D + a` with `i` on `A` and `a` on `B`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GkslGenerator;
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_deviation, is_psd_within, partial_transpose, trace_norm,
    ComplexMatrix, C64,
};
use crate::propagators::{grid_channel, PropagatorConfig};

/// A partially transposed Choi state counts as PPT once all its eigenvalues
/// are at least `-NEGATIVITY_TOL`.
pub const NEGATIVITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    pub dim_d: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiState {
    /// Checks shape, Hermiticity, unit trace (1e-8) and positivity (1e-10).
    pub fn from_matrix(dim_d: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_d * dim_d;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi state for D={dim_d} must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "Choi state has trace {tr}"
            )));
        }
        if !is_psd_within(matrix.clone(), NEGATIVITY_TOL) {
            return Err(Error::InvalidParameter(
                "Choi state is not positive semidefinite".into(),
            ));
        }
        Ok(Self { dim_d, matrix })
    }

    /// `(Φ ⊗ 𝟙)(|Ψ⟩⟨Ψ|)` for the channel with Liouville matrix `s`
    /// (column-major vectorization). No validation: the channel may be an
    /// approximate one.
    pub fn from_channel(s: &ComplexMatrix, dim_d: usize) -> Self {
        let d = dim_d;
        let scale = 1.0 / d as f64;
        let matrix = ComplexMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, a) = (r / d, r % d);
            let (j, b) = (c / d, c % d);
            s[(i + d * j, a + d * b)] * scale
        });
        Self { dim_d, matrix }
    }

    pub fn partial_transpose(&self) -> ComplexMatrix {
        partial_transpose(&self.matrix, self.dim_d, self.dim_d)
            .expect("Choi state is square by construction")
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.matrix)?[0])
    }

    pub fn is_ppt(&self) -> bool {
        is_psd_within(self.partial_transpose(), NEGATIVITY_TOL)
    }
}

/// Projector onto `(1/√D) Σ_i |i⟩|i⟩`.
pub fn max_entangled_choi(dim_d: usize) -> Result<ChoiState> {
    if dim_d < 2 {
        return Err(Error::InvalidDimension(format!(
            "maximally entangled state needs D >= 2, got {dim_d}"
        )));
    }
    let d = dim_d;
    let v = 1.0 / d as f64;
    let matrix = ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        if r % (d + 1) == 0 && c % (d + 1) == 0 {
            C64::new(v, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(ChoiState { dim_d, matrix })
}

/// Partial transpose (on `B`) of the Choi state of `s`, built directly from
/// the Liouville matrix: `ρ^{T_B}[(i a),(j b)] = S[(i + Dj),(b + Da)] / D`.
pub fn choi_partial_transpose(s: &ComplexMatrix, dim_d: usize) -> ComplexMatrix {
    let d = dim_d;
    let scale = 1.0 / d as f64;
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, a) = (r / d, r % d);
        let (j, b) = (c / d, c % d);
        s[(i + d * j, b + d * a)] * scale
    })
}

/// `½ Σ (|λ| - λ)` over the partial-transpose spectrum; exactly zero when
/// every eigenvalue is at least `-NEGATIVITY_TOL`.
pub fn negativity(rho: &ChoiState) -> f64 {
    negativity_of_transpose(&rho.partial_transpose())
}

/// `(‖ρ^{T_B}‖₁ - 1) / 2`.
pub fn negativity_trace_norm(rho: &ChoiState) -> f64 {
    let norm = trace_norm(&rho.partial_transpose()).expect("square matrix");
    ((norm - 1.0) / 2.0).max(0.0)
}

fn negativity_of_transpose(pt: &ComplexMatrix) -> f64 {
    let eig = hermitian_eigenvalues(pt).expect("square matrix");
    if eig[0] >= -NEGATIVITY_TOL {
        return 0.0;
    }
    eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Record `(x, 𝒩(x))` at every grid point. Costs one Hermitian
    /// eigensolve per point.
    pub record_negativity: bool,
    /// Refine the crossing by linear interpolation of the smallest
    /// partial-transpose eigenvalue between the last two grid points.
    pub interpolate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpttResult {
    /// Rescaled PPT time `γτ_ppt`; equals `x_max` when censored.
    pub x_ppt: f64,
    pub censored: bool,
    /// True when the standard method had to fall back to exact stepping.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negativity_trace: Option<Vec<(f64, f64)>>,
}

impl PpttResult {
    pub fn censored_at(x_max: f64) -> Self {
        Self {
            x_ppt: x_max,
            censored: true,
            fallback: false,
            negativity_trace: None,
        }
    }

    pub fn at(x_ppt: f64) -> Self {
        Self {
            x_ppt,
            censored: false,
            fallback: false,
            negativity_trace: None,
        }
    }
}

/// First grid point `x = n·dx` (n ≥ 1) at which the evolved Choi state is PPT.
///
/// The whole grid up to `x_max` is scanned; negativity is not assumed to be
/// monotone.
pub fn pptt_search(gen: &GkslGenerator, cfg: &PropagatorConfig) -> Result<PpttResult> {
    pptt_search_with(gen, cfg, SearchOptions::default())
}

pub fn pptt_search_with(
    gen: &GkslGenerator,
    cfg: &PropagatorConfig,
    opts: SearchOptions,
) -> Result<PpttResult> {
    cfg.validate()?;
    let d = gen.dim_d;
    let (mut channel, fallback) = grid_channel(gen, cfg)?;
    let mut trace = opts.record_negativity.then(Vec::new);
    let mut previous_min = -0.5;
    for n in 1..=cfg.grid_len() {
        let s = channel.advance()?;
        let x = n as f64 * cfg.dx;
        let pt = choi_partial_transpose(s, d);
        if let Some(t) = trace.as_mut() {
            t.push((x, negativity_of_transpose(&pt)));
        }
        let ppt = is_psd_within(pt.clone(), NEGATIVITY_TOL);
        if ppt {
            let x_ppt = if opts.interpolate && n > 1 {
                let now = hermitian_eigenvalues(&pt)?[0];
                let frac = (-NEGATIVITY_TOL - previous_min) / (now - previous_min);
                x - cfg.dx * (1.0 - frac.clamp(0.0, 1.0))
            } else {
                x
            };
            return Ok(PpttResult {
                x_ppt,
                censored: false,
                fallback,
                negativity_trace: trace,
            });
        }
        if opts.interpolate {
            previous_min = hermitian_eigenvalues(&pt)?[0];
        }
    }
    Ok(PpttResult {
        fallback,
        negativity_trace: trace,
        ..PpttResult::censored_at(cfg.x_max)
    })
}

/// Writes a recorded negativity series as `x,negativity` CSV.
pub fn write_negativity_csv<W: Write>(series: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "negativity"])?;
    for (x, n) in series {
        w.write_record([format!("{x:.9}"), format!("{n:.12e}")])?;
    }
    w.flush()?;
    Ok(())
}
