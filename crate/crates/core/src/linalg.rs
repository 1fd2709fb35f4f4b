//! Dense complex matrix kernel.
//!
//! Matrices are `nalgebra` dynamic matrices of `Complex64`. Everything in
//! this module is a pure function of its inputs.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Tolerance used to gate Hermitian-only routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative reconstruction residual accepted from [`general_eigen`].
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Largest eigenvector-matrix condition number accepted from [`general_eigen`].
pub const EIGEN_CONDITION_MAX: f64 = 1e12;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Hilbert-Schmidt inner product `Tr[a† b]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest elementwise deviation `|m - m†|`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_square(m: &ComplexMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let deviation = hermiticity_deviation(m);
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// An orthonormal (Hilbert-Schmidt) set of `dim² - 1` traceless `dim × dim` operators.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    pub dim: usize,
    pub elements: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `max |Tr[F_m† F_m'] - δ|` over all pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err = 0.0f64;
        for (a, fa) in self.elements.iter().enumerate() {
            for (b, fb) in self.elements.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                err = err.max((hs_inner(fa, fb) - target).norm());
            }
        }
        err
    }

    /// Expands `Σ_m c_m F_m`.
    pub fn combine(&self, coeffs: impl IntoIterator<Item = C64>) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, f) in coeffs.into_iter().zip(&self.elements) {
            if c != C64::new(0.0, 0.0) {
                out += f * c;
            }
        }
        out
    }
}

/// Generalized Gell-Mann matrices, normalized to `Tr[F† F] = 1`.
///
/// Order: the symmetric pairs `(|j⟩⟨k| + |k⟩⟨j|)/√2` for `j < k` in
/// lexicographic order, then the antisymmetric pairs
/// `(-i|j⟩⟨k| + i|k⟩⟨j|)/√2` in the same order, then the diagonal elements
/// `(Σ_{m<l} |m⟩⟨m| - l|l⟩⟨l|)/√(l(l+1))` for `l = 1..d`. For `d = 2` this is
/// `σ_x/√2, σ_y/√2, σ_z/√2`.
pub fn gell_mann_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "operator basis needs d >= 2, got {d}"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(d * d - 1);
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, k)] = C64::new(h, 0.0);
        m[(k, j)] = C64::new(h, 0.0);
        elements.push(m);
    }
    for &(j, k) in &pairs {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, k)] = C64::new(0.0, -h);
        m[(k, j)] = C64::new(0.0, h);
        elements.push(m);
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..l {
            m[(i, i)] = C64::new(1.0 / norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        elements.push(m);
    }
    Ok(OperatorBasis { dim: d, elements })
}

/// Kronecker product; `kron(a, b)[(i·rb + k, j·cb + l)] = a[(i, j)]·b[(k, l)]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Partial transpose on the second factor of a `(dA·dB)`-dimensional operator.
pub fn partial_transpose(m: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    let n = da * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose over {da}x{db} needs a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        let (i, a) = (r / db, r % db);
        let (j, b) = (c / db, c % db);
        m[(i * db + b, j * db + a)]
    }))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_square(m, "hermitian eigenvalues")?;
    check_hermitian(m)?;
    let mut vals: Vec<f64> = hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Hermitian eigendecomposition with eigenvalues in ascending order; the
/// columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_square(m, "hermitian eigendecomposition")?;
    check_hermitian(m)?;
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `Σ |λ|` over the eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|l| l.abs()).sum())
}

/// Whether every eigenvalue of the Hermitian matrix `m` exceeds `-eps`,
/// decided by attempting a Cholesky factorization of `m + eps·𝟙`.
///
/// Only the upper triangle of `m` is read. The factorization overwrites it.
pub fn is_psd_within(mut m: ComplexMatrix, eps: f64) -> bool {
    let n = m.nrows();
    let a = m.as_mut_slice();
    // Upper factor U with m + eps·𝟙 = U† U, built column by column in place.
    for j in 0..n {
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let col_j = &mut head[j * n..];
        let mut d = col_j[j].re + eps;
        for k in 0..j {
            d -= col_j[k].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let ujj = d.sqrt();
        col_j[j] = C64::new(ujj, 0.0);
        let inv = 1.0 / ujj;
        for col_i in tail.chunks_exact_mut(n) {
            let mut s = col_i[j];
            for k in 0..j {
                s -= col_j[k].conj() * col_i[k];
            }
            col_i[j] = s * inv;
        }
    }
    true
}

/// Diagonalization `m = V diag(λ) V⁻¹` of a general square matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: ComplexMatrix,
    pub inverse: ComplexMatrix,
    /// 1-norm condition number of `vectors`.
    pub condition: f64,
    /// `‖V diag(λ) V⁻¹ - m‖_F / ‖m‖_F` (absolute when `m = 0`).
    pub residual: f64,
}

impl EigenDecomposition {
    /// `V diag(f(λ)) V⁻¹`.
    pub fn apply_function(&self, f: impl Fn(C64) -> C64) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let fk = f(lambda);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fk;
            }
        }
        scaled * &self.inverse
    }
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General eigendecomposition through the complex Schur form.
///
/// Eigenvectors of the triangular factor come from back substitution. Within
/// a cluster of (numerically) equal eigenvalues the coupling is dropped; if
/// that was wrong, i.e. the matrix is defective or nearly so, the residual or
/// condition check rejects the decomposition with [`Error::IllConditioned`].
pub fn general_eigen(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    check_square(m, "eigendecomposition")?;
    let n = m.nrows();
    let (q, t) = Schur::new(m.clone()).unpack();
    let scale = t.norm().max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-12 * scale;

    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for i in j + 1..=k {
                s += t[(j, i)] * y[(i, k)];
            }
            let denom = t[(j, j)] - lambda;
            y[(j, k)] = if denom.norm() <= cluster_tol {
                C64::new(0.0, 0.0)
            } else {
                -s / denom
            };
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    let vectors = &q * &y;
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();

    let inverse = match vectors.clone().lu().try_inverse() {
        Some(inv) => inv,
        None => {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
                residual: f64::INFINITY,
            })
        }
    };
    let condition = one_norm(&vectors) * one_norm(&inverse);
    let mut decomposition = EigenDecomposition {
        values,
        vectors,
        inverse,
        condition,
        residual: 0.0,
    };
    let rebuilt = decomposition.apply_function(|z| z);
    let m_norm = m.norm();
    let diff = (rebuilt - m).norm();
    decomposition.residual = if m_norm > 0.0 { diff / m_norm } else { diff };
    if !condition.is_finite()
        || condition > EIGEN_CONDITION_MAX
        || decomposition.residual > EIGEN_RESIDUAL_TOL
    {
        return Err(Error::IllConditioned {
            condition,
            residual: decomposition.residual,
        });
    }
    Ok(decomposition)
}

/// Matrix exponential by scaling and squaring with a Padé approximant.
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    m.exp()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

/// Column-major vectorization, `vec(m)[i + n·j] = m[(i, j)]`.
pub fn vectorize(m: &ComplexMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &nalgebra::DVector<C64>, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(n, n, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli() -> [ComplexMatrix; 3] {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        [
            ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            ComplexMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
            ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        ]
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, cols, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n, n);
        &a + a.adjoint()
    }

    fn bell_projector() -> ComplexMatrix {
        let h = 0.5;
        let mut m = ComplexMatrix::zeros(4, 4);
        for &(r, col) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, col)] = c(h, 0.0);
        }
        m
    }

    #[test]
    fn qubit_basis_is_scaled_pauli() {
        let basis = gell_mann_basis(2).unwrap();
        assert_eq!(basis.len(), 3);
        for (f, p) in basis.elements.iter().zip(pauli()) {
            let expected = p.scale(std::f64::consts::FRAC_1_SQRT_2);
            assert!((f - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn bases_are_traceless_and_orthonormal() {
        for d in 2..=8 {
            let basis = gell_mann_basis(d).unwrap();
            assert_eq!(basis.len(), d * d - 1);
            assert!(basis.orthonormality_error() <= 1e-12, "d={d}");
            for f in &basis.elements {
                assert!(f.trace().norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn basis_rejects_small_dimension() {
        assert!(matches!(
            gell_mann_basis(1),
            Err(Error::InvalidDimension(_))
        ));
        assert!(gell_mann_basis(0).is_err());
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let z = kron(&pauli()[2], &identity(2));
        let expected = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        assert_eq!(z, expected);
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (a, b, cc, d) = (
                random_matrix(&mut rng, 2, 2),
                random_matrix(&mut rng, 2, 2),
                random_matrix(&mut rng, 2, 2),
                random_matrix(&mut rng, 2, 2),
            );
            let lhs = kron(&a, &b) * kron(&cc, &d);
            let rhs = kron(&(&a * &cc), &(&b * &d));
            assert!((lhs - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell_projector(), 2, 2).unwrap();
        let vals = hermitian_eigenvalues(&pt).unwrap();
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
        assert!((trace_norm(&pt).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partial_transpose_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 2);
        let b = random_matrix(&mut rng, 3, 3);
        let pt = partial_transpose(&kron(&a, &b), 2, 3).unwrap();
        assert!((pt - kron(&a, &b.transpose())).norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_is_involutive_and_checks_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 6, 6);
        let twice = partial_transpose(&partial_transpose(&m, 3, 2).unwrap(), 3, 2).unwrap();
        assert_eq!(twice, m);
        assert!(matches!(
            partial_transpose(&m, 2, 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn trace_norm_basics() {
        let mut rho = ComplexMatrix::zeros(3, 3);
        rho[(0, 0)] = c(0.2, 0.0);
        rho[(1, 1)] = c(0.3, 0.0);
        rho[(2, 2)] = c(0.5, 0.0);
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(4, 4)).unwrap(), 0.0);
        assert!(trace_norm(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn hermitian_eigen_examples() {
        let (vals, _) = hermitian_eigen(&pauli()[2]).unwrap();
        assert_eq!(vals, vec![-1.0, 1.0]);
        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(1.0, 0.0),
            c(2.0, 0.0),
        ]));
        let (vals, _) = hermitian_eigen(&d).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            hermitian_eigen(&(&pauli()[0] * I)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_hermitian(&mut rng, 8);
        let (vals, v) = hermitian_eigen(&m).unwrap();
        let lam = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            8,
            vals.iter().map(|&x| c(x, 0.0)),
        ));
        let residual = (&m * &v - &v * lam).norm();
        assert!(residual <= 1e-10 * m.norm());
    }

    #[test]
    fn general_eigen_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [4, 16, 36, 64] {
            let m = random_matrix(&mut rng, n, n);
            let e = general_eigen(&m).unwrap();
            assert!(e.residual <= 1e-8, "n={n} residual {}", e.residual);
        }
    }

    #[test]
    fn general_eigen_handles_degenerate_normal_matrix() {
        let m = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
        ]));
        let e = general_eigen(&m).unwrap();
        assert!(e.residual < 1e-14);
        let zero = general_eigen(&ComplexMatrix::zeros(4, 4)).unwrap();
        assert_eq!(zero.residual, 0.0);
    }

    #[test]
    fn general_eigen_rejects_jordan_block() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            general_eigen(&m),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn cholesky_psd_gate() {
        let pt = partial_transpose(&bell_projector(), 2, 2).unwrap();
        assert!(!is_psd_within(pt, 1e-10));
        assert!(is_psd_within(bell_projector(), 1e-10));
        assert!(!is_psd_within(bell_projector(), 0.0));
    }

    proptest::proptest! {
        #[test]
        fn cholesky_gate_matches_min_eigenvalue(seed in 0u64..300, shift in -1.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, 7);
            let min = hermitian_eigenvalues(&m).unwrap()[0];
            let shifted = &m + identity(7).scale(shift - min);
            // min eigenvalue of `shifted` is `shift`
            if shift.abs() > 1e-6 {
                proptest::prop_assert_eq!(is_psd_within(shifted, 0.0), shift > 0.0);
            }
        }
    }

    #[test]
    fn vec_roundtrip_is_column_major() {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
        );
        let v = vectorize(&m);
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(unvectorize(&v, 2), m);
    }

    proptest::proptest! {
        #[test]
        fn partial_transpose_preserves_trace_and_hermiticity(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, 6);
            let pt = partial_transpose(&m, 2, 3).unwrap();
            proptest::prop_assert_eq!(pt.trace(), m.trace());
            proptest::prop_assert_eq!(hermiticity_deviation(&pt), 0.0);
            let tn = trace_norm(&m).unwrap();
            proptest::prop_assert!(tn + 1e-12 >= m.trace().re.abs());
        }
    }
}
