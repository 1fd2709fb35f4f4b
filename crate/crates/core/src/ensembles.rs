//! Seeded random matrix ensembles: complex Ginibre, trace/rank constrained
//! Wishart Kossakowski matrices and GUE Hamiltonians.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, C64};

/// Identifies an independent random stream: ChaCha20 keyed by the master
/// seed, with the sample index as the 64-bit stream id. Draws depend only on
/// the pair, never on thread count or on the order streams are consumed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// `rows × cols` matrix of i.i.d. complex Gaussians whose real and imaginary
/// parts are standard normal. Entries are drawn in row-major order.
pub fn sample_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let entries: Vec<C64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &entries)
}

/// Positive semidefinite `(D²-1) × (D²-1)` matrix parameterizing a dissipator.
#[derive(Clone, Debug)]
pub struct KossakowskiMatrix {
    pub dim_d: usize,
    pub matrix: ComplexMatrix,
    /// Target trace ξ.
    pub trace_target: f64,
    /// Upper bound r on the rank.
    pub rank_bound: usize,
}

impl KossakowskiMatrix {
    /// Wraps an explicit matrix, checking it against all invariants.
    pub fn from_matrix(dim_d: usize, matrix: ComplexMatrix, rank_bound: usize) -> Result<Self> {
        let n = dim_d * dim_d - 1;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Kossakowski matrix for D={dim_d} must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let trace_target = matrix.trace().re;
        let k = Self {
            dim_d,
            matrix,
            trace_target,
            rank_bound,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn size(&self) -> usize {
        self.dim_d * self.dim_d - 1
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Number of eigenvalues above `1e-10·ξ`.
    pub fn numerical_rank(&self) -> Result<usize> {
        let cutoff = 1e-10 * self.trace_target;
        Ok(self.eigenvalues()?.iter().filter(|&&l| l > cutoff).count())
    }

    /// Checks positivity, trace and rank.
    pub fn validate(&self) -> Result<()> {
        let xi = self.trace_target;
        if !(xi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Kossakowski trace must be positive, got {xi}"
            )));
        }
        let eig = self.eigenvalues()?;
        if eig[0] < -1e-12 * xi {
            return Err(Error::InvalidParameter(format!(
                "Kossakowski matrix is not positive semidefinite (min eigenvalue {:.3e})",
                eig[0]
            )));
        }
        let tr = self.matrix.trace();
        if (tr.re - xi).abs() > 1e-10 * xi || tr.im.abs() > 1e-10 * xi {
            return Err(Error::InvalidParameter(format!(
                "Kossakowski trace {tr} differs from target {xi}"
            )));
        }
        let rank = eig.iter().filter(|&&l| l > 1e-10 * xi).count();
        if rank > self.rank_bound.min(self.size()) {
            return Err(Error::RankOutOfRange {
                rank,
                max: self.rank_bound.min(self.size()),
            });
        }
        Ok(())
    }
}

/// Draws `K = ξ·G†G / Tr[G†G]` with `G` an `r × (D²-1)` Ginibre matrix.
pub fn sample_kossakowski<R: Rng + ?Sized>(
    dim_d: usize,
    xi: f64,
    rank: usize,
    rng: &mut R,
) -> Result<KossakowskiMatrix> {
    if dim_d < 2 {
        return Err(Error::InvalidDimension(format!(
            "Kossakowski sampling needs D >= 2, got {dim_d}"
        )));
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "trace target must be positive, got {xi}"
        )));
    }
    let n = dim_d * dim_d - 1;
    if rank < 1 || rank > n {
        return Err(Error::RankOutOfRange { rank, max: n });
    }
    let g = sample_ginibre(rank, n, rng);
    let wishart = g.adjoint() * &g;
    let scale = xi / wishart.trace().re;
    let mut matrix = wishart.scale(scale);
    // exact Hermiticity
    for j in 0..n {
        matrix[(j, j)].im = 0.0;
        for i in 0..j {
            matrix[(j, i)] = matrix[(i, j)].conj();
        }
    }
    Ok(KossakowskiMatrix {
        dim_d,
        matrix,
        trace_target: xi,
        rank_bound: rank,
    })
}

/// GUE Hamiltonian with unit-variance entries (off-diagonal `(a + ib)/√2`,
/// diagonal real standard normal), with its trace part removed.
pub fn sample_gue_hamiltonian<R: Rng + ?Sized>(dim_d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if dim_d < 2 {
        return Err(Error::InvalidDimension(format!(
            "GUE sampling needs D >= 2, got {dim_d}"
        )));
    }
    let mut h = ComplexMatrix::zeros(dim_d, dim_d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim_d {
        let d: f64 = rng.sample(StandardNormal);
        h[(i, i)] = C64::new(d, 0.0);
        for j in i + 1..dim_d {
            let z = complex_normal(rng) * s;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let shift = h.trace().re / dim_d as f64;
    for i in 0..dim_d {
        h[(i, i)].re -= shift;
    }
    Ok(h)
}

/// Arithmetic mean of the dissipative rates, `Tr[K] / (D²-1)`.
pub fn mean_rate(k: &KossakowskiMatrix) -> f64 {
    k.matrix.trace().re / k.size() as f64
}
