//! Integration back-ends for `dρ/dx = ℒ(ρ)`.
//!
//! * Standard: `e^{xM}` from the eigendecomposition of the Liouville matrix,
//!   falling back to scaling and squaring when the eigenvectors are unusable.
//! * Cao-Lu: the completely positive two-jump midpoint scheme
//!
//!   ```text
//!   𝒜(ρ) = A'' ρ A''† + dx · A' 𝒬(A' ρ A'†) A'† + dx²/2 · 𝒬(𝒬(ρ))
//!   A'  = 𝟙 + J dx/2
//!   A'' = 𝟙 + J dx + J² dx²/2,     J = -i H_eff
//!   ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::GkslGenerator;
use crate::linalg::{
    expm, general_eigen, identity, kron, unvectorize, vectorize, ComplexMatrix, EigenDecomposition,
    C64, I,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    #[serde(rename = "caolu")]
    CaoLu,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Method::Standard),
            "caolu" | "cao-lu" => Ok(Method::CaoLu),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::CaoLu => "caolu",
        })
    }
}

/// Grid and back-end choice, in rescaled time `x = γt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub method: Method,
    pub dx: f64,
    pub x_max: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            method: Method::CaoLu,
            dx: 1e-3,
            x_max: 10.0,
        }
    }
}

impl PropagatorConfig {
    pub fn new(method: Method, dx: f64, x_max: f64) -> Result<Self> {
        let cfg = Self { method, dx, x_max };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx < 1.0) {
            return Err(Error::StepTooLarge(self.dx));
        }
        if !(self.x_max >= self.dx) || !self.x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon x_max = {} must be finite and at least dx = {}",
                self.x_max, self.dx
            )));
        }
        Ok(())
    }

    /// Number of grid points `dx, 2dx, …` up to and including `x_max`.
    pub fn grid_len(&self) -> usize {
        ((self.x_max / self.dx) * (1.0 + 1e-12)).floor() as usize
    }
}

/// Liouville-space matrix of a channel, column-major vectorization.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    pub dim_d: usize,
    pub matrix: ComplexMatrix,
}

impl ChannelMatrix {
    pub fn identity(dim_d: usize) -> Self {
        Self {
            dim_d,
            matrix: identity(dim_d * dim_d),
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim_d)
    }

    /// `max_j |(vecᵀ(𝟙) S)_j - vec(𝟙)_j|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim_d;
        let mut err = 0.0f64;
        for col in 0..d * d {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..d {
                s += self.matrix[(i + d * i, col)];
            }
            let target = if col % (d + 1) == 0 { 1.0 } else { 0.0 };
            err = err.max((s - target).norm());
        }
        err
    }

    pub fn compose(&self, first: &ChannelMatrix) -> ChannelMatrix {
        ChannelMatrix {
            dim_d: self.dim_d,
            matrix: &self.matrix * &first.matrix,
        }
    }
}

/// `e^{xM}` through the eigendecomposition of `M`.
///
/// Fails with [`Error::IllConditioned`] when the eigenvector matrix cannot be
/// trusted; [`standard_channel_expm`] covers that case.
pub fn standard_channel(gen: &GkslGenerator, x: f64) -> Result<ChannelMatrix> {
    check_time(x)?;
    if x == 0.0 {
        return Ok(ChannelMatrix::identity(gen.dim_d));
    }
    let eig = general_eigen(&gen.liouville_matrix())?;
    Ok(ChannelMatrix {
        dim_d: gen.dim_d,
        matrix: eig.apply_function(|l| (l * x).exp()),
    })
}

/// `e^{xM}` by scaling and squaring.
pub fn standard_channel_expm(gen: &GkslGenerator, x: f64) -> Result<ChannelMatrix> {
    check_time(x)?;
    Ok(ChannelMatrix {
        dim_d: gen.dim_d,
        matrix: expm(&gen.liouville_matrix().scale(x)),
    })
}

fn check_time(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "propagation time must be finite and non-negative, got {x}"
        )));
    }
    Ok(())
}

fn check_step(dx: f64) -> Result<()> {
    if !(0.0..1.0).contains(&dx) {
        return Err(Error::StepTooLarge(dx));
    }
    Ok(())
}

/// The two no-jump propagators `(A', A'')` for step `dx`.
pub fn caolu_kraus_pair(gen: &GkslGenerator, dx: f64) -> (ComplexMatrix, ComplexMatrix) {
    let id = identity(gen.dim_d);
    let j = gen.effective_hamiltonian() * (-I);
    let a1 = &id + j.scale(dx / 2.0);
    let a2 = &id + j.scale(dx) + (&j * &j).scale(dx * dx / 2.0);
    (a1, a2)
}

/// One Cao-Lu step on a `D × D` state.
pub fn caolu_step(gen: &GkslGenerator, rho: &ComplexMatrix, dx: f64) -> Result<ComplexMatrix> {
    check_step(dx)?;
    let (a1, a2) = caolu_kraus_pair(gen, dx);
    let no_jump = &a2 * rho * a2.adjoint();
    let one_jump = &a1 * gen.apply_jump(&(&a1 * rho * a1.adjoint())) * a1.adjoint();
    let two_jumps = gen.apply_jump(&gen.apply_jump(rho));
    Ok(no_jump + one_jump.scale(dx) + two_jumps.scale(dx * dx / 2.0))
}

/// One Cao-Lu step of `𝒜 ⊗ id` on a `D² × D²` Choi state, system factor first.
pub fn caolu_step_choi(gen: &GkslGenerator, rho: &ComplexMatrix, dx: f64) -> Result<ComplexMatrix> {
    check_step(dx)?;
    let d = gen.dim_d;
    if rho.shape() != (d * d, d * d) {
        return Err(Error::DimensionMismatch(format!(
            "Choi state for D={d} must be {0}x{0}, got {1}x{2}",
            d * d,
            rho.nrows(),
            rho.ncols()
        )));
    }
    let id = identity(d);
    let (a1, a2) = caolu_kraus_pair(gen, dx);
    let (a1, a2) = (kron(&a1, &id), kron(&a2, &id));
    let lifted: Vec<ComplexMatrix> = gen.lindblad_ops.iter().map(|l| kron(l, &id)).collect();
    let jump = |r: &ComplexMatrix| {
        let mut out = ComplexMatrix::zeros(r.nrows(), r.ncols());
        for l in &lifted {
            out += l * r * l.adjoint();
        }
        out
    };
    let no_jump = &a2 * rho * a2.adjoint();
    let one_jump = &a1 * jump(&(&a1 * rho * a1.adjoint())) * a1.adjoint();
    let two_jumps = jump(&jump(rho));
    Ok(no_jump + one_jump.scale(dx) + two_jumps.scale(dx * dx / 2.0))
}

/// Liouville matrix of one Cao-Lu step,
/// `Ā''⊗A'' + dx (Ā'⊗A') Q (Ā'⊗A') + dx²/2 Q²` with `Q = Σ L̄⊗L`.
pub fn caolu_superoperator(gen: &GkslGenerator, dx: f64) -> Result<ChannelMatrix> {
    check_step(dx)?;
    let (a1, a2) = caolu_kraus_pair(gen, dx);
    let k1 = kron(&a1.map(|z| z.conj()), &a1);
    let k2 = kron(&a2.map(|z| z.conj()), &a2);
    let q = gen.jump_superoperator();
    let matrix = k2 + (&k1 * &q * &k1).scale(dx) + (&q * &q).scale(dx * dx / 2.0);
    Ok(ChannelMatrix {
        dim_d: gen.dim_d,
        matrix,
    })
}

/// Evolves `rho0` to time `x`.
///
/// The Cao-Lu back-end takes `⌊x/dx⌋` full steps and one shortened final step
/// for the remainder. The standard back-end uses the eigendecomposition and
/// falls back to scaling and squaring if it is ill-conditioned.
pub fn propagate(
    gen: &GkslGenerator,
    rho0: &ComplexMatrix,
    x: f64,
    cfg: &PropagatorConfig,
) -> Result<ComplexMatrix> {
    check_time(x)?;
    if x == 0.0 {
        return Ok(rho0.clone());
    }
    match cfg.method {
        Method::Standard => {
            let channel = match standard_channel(gen, x) {
                Ok(c) => c,
                Err(Error::IllConditioned { .. }) => standard_channel_expm(gen, x)?,
                Err(e) => return Err(e),
            };
            Ok(channel.apply(rho0))
        }
        Method::CaoLu => {
            check_step(cfg.dx)?;
            let (full, rest) = split_steps(x, cfg.dx);
            let mut rho = rho0.clone();
            if full > 0 {
                let step = caolu_superoperator(gen, cfg.dx)?;
                for _ in 0..full {
                    rho = step.apply(&rho);
                }
            }
            if rest > 0.0 {
                rho = caolu_step(gen, &rho, rest)?;
            }
            Ok(rho)
        }
    }
}

fn split_steps(x: f64, dx: f64) -> (usize, f64) {
    let ratio = x / dx;
    let mut full = ratio.round();
    if (ratio - full).abs() > 1e-9 * ratio.max(1.0) {
        full = ratio.floor();
    }
    let rest = x - full * dx;
    (full as usize, if rest > 1e-12 * dx { rest } else { 0.0 })
}

/// Channel superoperators `S(n·dx)` on a uniform grid.
pub trait GridChannel {
    /// Advances to the next grid point and returns its channel matrix.
    fn advance(&mut self) -> Result<&ComplexMatrix>;
    fn steps_taken(&self) -> usize;
}

/// Repeated multiplication by a fixed one-step superoperator.
pub struct SteppedChannel {
    step: ComplexMatrix,
    current: ComplexMatrix,
    scratch: ComplexMatrix,
    steps: usize,
}

impl SteppedChannel {
    pub fn new(step: ComplexMatrix) -> Self {
        let n = step.nrows();
        Self {
            step,
            current: identity(n),
            scratch: ComplexMatrix::zeros(n, n),
            steps: 0,
        }
    }

    /// Cao-Lu stepping.
    pub fn caolu(gen: &GkslGenerator, dx: f64) -> Result<Self> {
        Ok(Self::new(caolu_superoperator(gen, dx)?.matrix))
    }

    /// Exact stepping by `e^{dx M}` from scaling and squaring.
    pub fn exact(gen: &GkslGenerator, dx: f64) -> Result<Self> {
        Ok(Self::new(standard_channel_expm(gen, dx)?.matrix))
    }
}

impl GridChannel for SteppedChannel {
    fn advance(&mut self) -> Result<&ComplexMatrix> {
        self.scratch.gemm(
            C64::new(1.0, 0.0),
            &self.step,
            &self.current,
            C64::new(0.0, 0.0),
        );
        std::mem::swap(&mut self.scratch, &mut self.current);
        self.steps += 1;
        Ok(&self.current)
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}

/// Standard method on a grid: `V diag(e^{n dx λ}) V⁻¹` from one
/// eigendecomposition, evaluated afresh at every grid point.
pub struct DiagonalizedChannel {
    eig: EigenDecomposition,
    dx: f64,
    current: ComplexMatrix,
    scaled: ComplexMatrix,
    steps: usize,
}

impl DiagonalizedChannel {
    pub fn new(gen: &GkslGenerator, dx: f64) -> Result<Self> {
        let eig = general_eigen(&gen.liouville_matrix())?;
        let n = eig.vectors.nrows();
        Ok(Self {
            scaled: eig.vectors.clone(),
            eig,
            dx,
            current: identity(n),
            steps: 0,
        })
    }
}

impl GridChannel for DiagonalizedChannel {
    fn advance(&mut self) -> Result<&ComplexMatrix> {
        self.steps += 1;
        let x = self.steps as f64 * self.dx;
        self.scaled.copy_from(&self.eig.vectors);
        for (k, lambda) in self.eig.values.iter().enumerate() {
            let f = (lambda * x).exp();
            for z in self.scaled.column_mut(k).iter_mut() {
                *z *= f;
            }
        }
        self.current.gemm(
            C64::new(1.0, 0.0),
            &self.scaled,
            &self.eig.inverse,
            C64::new(0.0, 0.0),
        );
        Ok(&self.current)
    }

    fn steps_taken(&self) -> usize {
        self.steps
    }
}

/// Grid channel for the configured back-end. The standard method degrades to
/// exact stepping with `e^{dx M}` when the Liouvillian is not safely
/// diagonalizable; the boolean reports whether that happened.
pub fn grid_channel(
    gen: &GkslGenerator,
    cfg: &PropagatorConfig,
) -> Result<(Box<dyn GridChannel + Send>, bool)> {
    match cfg.method {
        Method::CaoLu => Ok((Box::new(SteppedChannel::caolu(gen, cfg.dx)?), false)),
        Method::Standard => match DiagonalizedChannel::new(gen, cfg.dx) {
            Ok(c) => Ok((Box::new(c), false)),
            Err(Error::IllConditioned { .. }) => {
                Ok((Box::new(SteppedChannel::exact(gen, cfg.dx)?), true))
            }
            Err(e) => Err(e),
        },
    }
}
