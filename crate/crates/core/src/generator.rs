//! GKSL generators built from a Kossakowski matrix and an optional Hamiltonian.
//!
//! The generator is `ℒ(ρ) = -ik[H, ρ] + 𝒟_K(ρ)` with
//!
//! ```text
//! 𝒟_K(ρ) = Σ_{m,m'} K_{m,m'} ( F_{m'} ρ F_m† - ½{F_m† F_{m'}, ρ} )
//!        = Σ_ℓ ( L_ℓ ρ L_ℓ† - ½{L_ℓ† L_ℓ, ρ} ).
//! ```
//!
//! Liouville-space matrices use column-major vectorization,
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, so that
//!
//! ```text
//! M = -ik(𝟙 ⊗ H - Hᵀ ⊗ 𝟙) + Σ_ℓ [ L̄ ⊗ L - ½ 𝟙 ⊗ L†L - ½ (L†L)ᵀ ⊗ 𝟙 ].
//! ```

use serde::{Deserialize, Serialize};

use crate::ensembles::{KossakowskiMatrix, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{
    gell_mann_basis, hermitian_eigen, hermiticity_deviation, hs_inner, identity, kron,
    ComplexMatrix, OperatorBasis, C64, HERMITIAN_TOL, I,
};

/// Relative eigenvalue cutoff below which a Kossakowski channel is dropped.
pub const RATE_CUTOFF: f64 = 1e-10;

/// Which operator basis a Kossakowski matrix is expressed in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    GellMann,
    /// Tensor-product basis over the given subsystem dimensions, see [`product_basis`].
    Product(Vec<usize>),
}

impl BasisKind {
    pub fn build(&self, dim_d: usize) -> Result<OperatorBasis> {
        match self {
            BasisKind::GellMann => gell_mann_basis(dim_d),
            BasisKind::Product(dims) => {
                if dims.iter().product::<usize>() != dim_d {
                    return Err(Error::DimensionMismatch(format!(
                        "subsystem dimensions {dims:?} do not multiply to {dim_d}"
                    )));
                }
                let locals = dims
                    .iter()
                    .map(|&d| gell_mann_basis(d))
                    .collect::<Result<Vec<_>>>()?;
                Ok(product_basis(&locals))
            }
        }
    }
}

/// Lindblad operators `L_ℓ = √λ_ℓ Σ_m Ū_{m,ℓ} F_m` from the spectral
/// decomposition `K = U diag(λ) U†`. Channels with `λ_ℓ ≤ 1e-10·Tr K` are dropped.
///
/// The conjugate eigenvector components make `Σ_ℓ L_ℓ ρ L_ℓ†` reproduce the
/// Kossakowski double sum with `K_{m,m'}` multiplying `F_{m'} ρ F_m†`.
pub fn lindblad_ops_from_kossakowski(
    k: &KossakowskiMatrix,
    basis: &OperatorBasis,
) -> Result<Vec<ComplexMatrix>> {
    if basis.dim != k.dim_d || basis.len() != k.matrix.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis of dimension {} ({} elements) cannot expand a {}x{} Kossakowski matrix for D={}",
            basis.dim,
            basis.len(),
            k.matrix.nrows(),
            k.matrix.ncols(),
            k.dim_d
        )));
    }
    let scale = k.matrix.trace().re.max(0.0);
    let (values, vectors) = hermitian_eigen(&k.matrix)?;
    let ops = values
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &lambda)| lambda > RATE_CUTOFF * scale && lambda > 0.0)
        .map(|(l, &lambda)| {
            let amp = lambda.sqrt();
            basis.combine(vectors.column(l).iter().map(|u| u.conj() * amp))
        })
        .collect();
    Ok(ops)
}

/// A time-independent GKSL generator in rescaled time `x = γt`.
#[derive(Clone, Debug)]
pub struct GkslGenerator {
    pub dim_d: usize,
    pub gamma: f64,
    /// Relative strength of the unitary part.
    pub k: f64,
    /// Hermitian `D × D`; zero when no Hamiltonian was drawn.
    pub hamiltonian: ComplexMatrix,
    pub kossakowski: KossakowskiMatrix,
    pub basis_kind: BasisKind,
    pub lindblad_ops: Vec<ComplexMatrix>,
    /// `Tr[L_ℓ† L_ℓ]`, i.e. the retained eigenvalues of K.
    pub rates: Vec<f64>,
    /// `Σ_ℓ L_ℓ† L_ℓ`.
    loss: ComplexMatrix,
    /// Stream the generator was drawn from, if any.
    pub provenance: Option<RngStream>,
}

impl GkslGenerator {
    pub fn new(
        kossakowski: KossakowskiMatrix,
        basis_kind: BasisKind,
        k: f64,
        hamiltonian: Option<ComplexMatrix>,
    ) -> Result<Self> {
        let dim_d = kossakowski.dim_d;
        let basis = basis_kind.build(dim_d)?;
        let ops = lindblad_ops_from_kossakowski(&kossakowski, &basis)?;
        let hamiltonian = match hamiltonian {
            Some(h) => {
                if h.shape() != (dim_d, dim_d) {
                    return Err(Error::DimensionMismatch(format!(
                        "Hamiltonian must be {dim_d}x{dim_d}, got {}x{}",
                        h.nrows(),
                        h.ncols()
                    )));
                }
                let deviation = hermiticity_deviation(&h);
                if deviation > HERMITIAN_TOL {
                    return Err(Error::NotHermitian { deviation });
                }
                h
            }
            None => ComplexMatrix::zeros(dim_d, dim_d),
        };
        Ok(Self::assemble(
            dim_d,
            k,
            hamiltonian,
            kossakowski,
            basis_kind,
            ops,
        ))
    }

    fn assemble(
        dim_d: usize,
        k: f64,
        hamiltonian: ComplexMatrix,
        kossakowski: KossakowskiMatrix,
        basis_kind: BasisKind,
        lindblad_ops: Vec<ComplexMatrix>,
    ) -> Self {
        let mut loss = ComplexMatrix::zeros(dim_d, dim_d);
        let mut rates = Vec::with_capacity(lindblad_ops.len());
        for l in &lindblad_ops {
            let ll = l.adjoint() * l;
            rates.push(ll.trace().re);
            loss += ll;
        }
        Self {
            dim_d,
            gamma: 1.0,
            k,
            hamiltonian,
            kossakowski,
            basis_kind,
            lindblad_ops,
            rates,
            loss,
            provenance: None,
        }
    }

    /// The generator `ℒ = 0`; never reaches a PPT state.
    pub fn null(dim_d: usize) -> Self {
        let n = dim_d * dim_d - 1;
        let kossakowski = KossakowskiMatrix {
            dim_d,
            matrix: ComplexMatrix::zeros(n, n),
            trace_target: 0.0,
            rank_bound: 0,
        };
        Self::assemble(
            dim_d,
            0.0,
            ComplexMatrix::zeros(dim_d, dim_d),
            kossakowski,
            BasisKind::GellMann,
            Vec::new(),
        )
    }

    /// Single-qubit depolarizing noise, `K = (2/3)𝟙₃` (trace 2).
    pub fn depolarizing_qubit() -> Self {
        let k = KossakowskiMatrix::from_matrix(2, identity(3).scale(2.0 / 3.0), 3)
            .expect("valid preset");
        Self::new(k, BasisKind::GellMann, 0.0, None).expect("valid preset")
    }

    /// Single-qubit dephasing with the one Lindblad operator `σ_z`
    /// (`K = 2 e_z e_zᵀ`).
    pub fn dephasing_qubit() -> Self {
        let mut m = ComplexMatrix::zeros(3, 3);
        m[(2, 2)] = C64::new(2.0, 0.0);
        let k = KossakowskiMatrix::from_matrix(2, m, 1).expect("valid preset");
        Self::new(k, BasisKind::GellMann, 0.0, None).expect("valid preset")
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_provenance(mut self, stream: RngStream) -> Self {
        self.provenance = Some(stream);
        self
    }

    /// `Σ_ℓ L_ℓ† L_ℓ`.
    pub fn loss_operator(&self) -> &ComplexMatrix {
        &self.loss
    }

    fn anticommutator_half(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        (&self.loss * rho + rho * &self.loss).scale(0.5)
    }

    /// `𝒟_K(ρ)`.
    pub fn apply_dissipator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.apply_jump(rho) - self.anticommutator_half(rho)
    }

    /// `ℒ(ρ) = -ik[H, ρ] + 𝒟_K(ρ)`.
    pub fn apply_full_generator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.apply_dissipator(rho);
        if self.k != 0.0 {
            let comm = &self.hamiltonian * rho - rho * &self.hamiltonian;
            out -= comm * (I * self.k);
        }
        out
    }

    /// `H_eff = kH + (1/2i) Σ_ℓ L_ℓ† L_ℓ`.
    pub fn effective_hamiltonian(&self) -> ComplexMatrix {
        self.hamiltonian.scale(self.k) - &self.loss * (I * 0.5)
    }

    /// The jump map `𝒬(ρ) = Σ_ℓ L_ℓ ρ L_ℓ†`.
    pub fn apply_jump(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
        for l in &self.lindblad_ops {
            out += l * rho * l.adjoint();
        }
        out
    }

    /// Liouville matrix of `𝒬`, `Σ_ℓ L̄_ℓ ⊗ L_ℓ`.
    pub fn jump_superoperator(&self) -> ComplexMatrix {
        let n = self.dim_d * self.dim_d;
        let mut q = ComplexMatrix::zeros(n, n);
        for l in &self.lindblad_ops {
            q += kron(&l.map(|z| z.conj()), l);
        }
        q
    }

    /// Liouville matrix `M` with `vec(ℒ(ρ)) = M vec(ρ)`.
    pub fn liouville_matrix(&self) -> ComplexMatrix {
        let id = identity(self.dim_d);
        let mut m = self.jump_superoperator();
        m -= (kron(&id, &self.loss) + kron(&self.loss.transpose(), &id)).scale(0.5);
        if self.k != 0.0 {
            let h = &self.hamiltonian;
            m -= (kron(&id, h) - kron(&h.transpose(), &id)) * (I * self.k);
        }
        m
    }
}

/// Subsystem dimensions together with one local Kossakowski matrix per block.
#[derive(Clone, Debug)]
pub struct LocalNoiseLayout {
    pub subsystem_dims: Vec<usize>,
    pub blocks: Vec<KossakowskiMatrix>,
}

impl LocalNoiseLayout {
    pub fn new(subsystem_dims: Vec<usize>, blocks: Vec<KossakowskiMatrix>) -> Result<Self> {
        if subsystem_dims.is_empty() || subsystem_dims.len() != blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} subsystem dimensions but {} local Kossakowski matrices",
                subsystem_dims.len(),
                blocks.len()
            )));
        }
        for (&d, k) in subsystem_dims.iter().zip(&blocks) {
            if k.dim_d != d {
                return Err(Error::DimensionMismatch(format!(
                    "block of dimension {d} given a Kossakowski matrix for D={}",
                    k.dim_d
                )));
            }
            k.validate()?;
        }
        Ok(Self {
            subsystem_dims,
            blocks,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }
}

/// Traceless orthonormal basis of the joint space built from local bases.
///
/// Elements are `F^{(1)}_{ℓ₁} ⊗ … ⊗ F^{(n)}_{ℓₙ}` with `F^{(j)}_0 = 𝟙/√d_j`,
/// indexed by label vectors with at least one nonzero entry. The labels that
/// are nonzero on block `j` only come first, block by block and in local
/// basis order; all remaining (mixed) labels follow in lexicographic order.
pub fn product_basis(locals: &[OperatorBasis]) -> OperatorBasis {
    let dims: Vec<usize> = locals.iter().map(|b| b.dim).collect();
    let total: usize = dims.iter().product();
    let local_element = |j: usize, l: usize| -> ComplexMatrix {
        if l == 0 {
            identity(dims[j]).scale(1.0 / (dims[j] as f64).sqrt())
        } else {
            locals[j].elements[l - 1].clone()
        }
    };
    let build = |labels: &[usize]| -> ComplexMatrix {
        labels
            .iter()
            .enumerate()
            .fold(ComplexMatrix::identity(1, 1), |acc, (j, &l)| {
                kron(&acc, &local_element(j, l))
            })
    };

    let mut elements = Vec::with_capacity(total * total - 1);
    for (j, local) in locals.iter().enumerate() {
        for l in 1..=local.len() {
            let mut labels = vec![0; locals.len()];
            labels[j] = l;
            elements.push(build(&labels));
        }
    }
    let mut labels = vec![0usize; locals.len()];
    loop {
        // odometer over all label vectors, last block fastest
        let mut pos = locals.len();
        loop {
            if pos == 0 {
                return OperatorBasis {
                    dim: total,
                    elements,
                };
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < dims[pos] * dims[pos] {
                break;
            }
            labels[pos] = 0;
        }
        if labels.iter().filter(|&&l| l != 0).count() >= 2 {
            elements.push(build(&labels));
        }
    }
}

/// Global Kossakowski matrix of a sum of local dissipators, together with
/// the product basis it is expressed in.
#[derive(Clone, Debug)]
pub struct EmbeddedNoise {
    pub kossakowski: KossakowskiMatrix,
    pub basis_kind: BasisKind,
}

/// Block-diagonal embedding `K^LOC = ⊕_j (D/d_j) K_j` in the product basis.
///
/// Local matrices must be expressed in the given local bases; the returned
/// matrix refers to [`product_basis`] over those same bases.
pub fn embed_local_dissipators(
    layout: &LocalNoiseLayout,
    bases: &[OperatorBasis],
) -> Result<KossakowskiMatrix> {
    if bases.len() != layout.blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} local bases for {} blocks",
            bases.len(),
            layout.blocks.len()
        )));
    }
    for (b, &d) in bases.iter().zip(&layout.subsystem_dims) {
        if b.dim != d {
            return Err(Error::DimensionMismatch(format!(
                "local basis of dimension {} for block of dimension {d}",
                b.dim
            )));
        }
    }
    let total = layout.total_dim();
    let n = total * total - 1;
    let mut matrix = ComplexMatrix::zeros(n, n);
    let mut offset = 0;
    let mut trace_target = 0.0;
    let mut rank_bound = 0;
    for (k, &d) in layout.blocks.iter().zip(&layout.subsystem_dims) {
        let factor = (total / d) as f64;
        let size = k.size();
        matrix
            .view_mut((offset, offset), (size, size))
            .copy_from(&k.matrix.scale(factor));
        offset += size;
        trace_target += factor * k.trace_target;
        rank_bound += k.rank_bound;
    }
    Ok(KossakowskiMatrix {
        dim_d: total,
        matrix,
        trace_target,
        rank_bound,
    })
}

/// Embeds a local layout with Gell-Mann local bases and returns the noise
/// descriptor ready for [`GkslGenerator::new`].
pub fn embed_layout(layout: &LocalNoiseLayout) -> Result<EmbeddedNoise> {
    let bases = layout
        .subsystem_dims
        .iter()
        .map(|&d| gell_mann_basis(d))
        .collect::<Result<Vec<_>>>()?;
    let kossakowski = embed_local_dissipators(layout, &bases)?;
    let basis_kind = if layout.subsystem_dims.len() == 1 {
        BasisKind::GellMann
    } else {
        BasisKind::Product(layout.subsystem_dims.clone())
    };
    Ok(EmbeddedNoise {
        kossakowski,
        basis_kind,
    })
}

/// Row-major JSON form of a complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixDocument {
    fn from(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl TryFrom<&MatrixDocument> for ComplexMatrix {
    type Error = Error;

    fn try_from(doc: &MatrixDocument) -> Result<Self> {
        let n = doc.rows * doc.cols;
        if doc.re.len() != n || doc.im.len() != n {
            return Err(Error::Malformed {
                line: 0,
                message: format!(
                    "matrix of shape {}x{} needs {n} entries, got re={} im={}",
                    doc.rows,
                    doc.cols,
                    doc.re.len(),
                    doc.im.len()
                ),
            });
        }
        let entries: Vec<C64> = doc
            .re
            .iter()
            .zip(&doc.im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect();
        Ok(ComplexMatrix::from_row_slice(doc.rows, doc.cols, &entries))
    }
}

/// Portable description of a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDocument {
    pub dimension: usize,
    pub gamma: f64,
    pub k: f64,
    pub hamiltonian: MatrixDocument,
    pub kossakowski: MatrixDocument,
    pub rank_bound: usize,
    pub basis: BasisKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<RngStream>,
}

impl From<&GkslGenerator> for GeneratorDocument {
    fn from(g: &GkslGenerator) -> Self {
        Self {
            dimension: g.dim_d,
            gamma: g.gamma,
            k: g.k,
            hamiltonian: (&g.hamiltonian).into(),
            kossakowski: (&g.kossakowski.matrix).into(),
            rank_bound: g.kossakowski.rank_bound,
            basis: g.basis_kind.clone(),
            seed: g.provenance,
        }
    }
}

impl TryFrom<&GeneratorDocument> for GkslGenerator {
    type Error = Error;

    fn try_from(doc: &GeneratorDocument) -> Result<Self> {
        let matrix = ComplexMatrix::try_from(&doc.kossakowski)?;
        let hamiltonian = ComplexMatrix::try_from(&doc.hamiltonian)?;
        let kossakowski = KossakowskiMatrix::from_matrix(doc.dimension, matrix, doc.rank_bound)?;
        let mut g = GkslGenerator::new(kossakowski, doc.basis.clone(), doc.k, Some(hamiltonian))?
            .with_gamma(doc.gamma);
        g.provenance = doc.seed;
        Ok(g)
    }
}

/// `max |Tr[L_ℓ† L_ℓ'] - λ_ℓ δ|` over the generator's Lindblad operators.
pub fn lindblad_orthogonality_error(g: &GkslGenerator) -> f64 {
    let mut err = 0.0f64;
    for (a, la) in g.lindblad_ops.iter().enumerate() {
        for (b, lb) in g.lindblad_ops.iter().enumerate() {
            let target = if a == b { g.rates[a] } else { 0.0 };
            err = err.max((hs_inner(la, lb) - target).norm());
        }
    }
    err
}
