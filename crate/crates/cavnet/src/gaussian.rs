//! Gaussian-state primitives: quadrature ordering, symplectic form, and
//! covariance containers.
//!
//! Quadratures are ordered `(q_1, p_1, q_2, p_2, ...)` with `hbar = 1`, so the
//! vacuum covariance is `I/2` and the one-mode symplectic form is
//! `[[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};

/// Tolerance used when validating that stored matrices are symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default tolerance for the physicality (uncertainty-principle) check.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Returns the symplectic form for `n_modes` modes: a block-diagonal matrix
/// with `[[0, 1], [-1, 0]]` repeated once per mode.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

/// The symplectic form on a fixed number of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    /// Builds the form for `n_modes` modes.
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            matrix: symplectic_form(n_modes),
        }
    }

    /// Number of modes the form acts on.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// The `2N x 2N` matrix of the form.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// First-moment vector `<x>` of a Gaussian state, length `2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector {
    v: DVector<f64>,
}

impl MeanVector {
    /// Wraps a length-`2N` vector; errors on odd length.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if !v.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                context: "MeanVector::new",
                expected: "even length".into(),
                found: format!("length {}", v.len()),
            });
        }
        Ok(Self { v })
    }

    /// The zero mean on `n_modes` modes.
    pub fn zero(n_modes: usize) -> Self {
        Self {
            v: DVector::zeros(2 * n_modes),
        }
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.v.len() / 2
    }

    /// The underlying vector.
    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }
}

/// The three `2 x 2` blocks of a two-mode covariance `[[V1, V2], [V2^T, V3]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeBlocks {
    /// Mode-1 block.
    pub v1: Matrix2<f64>,
    /// Cross-correlation block (upper right).
    pub v2: Matrix2<f64>,
    /// Mode-2 block.
    pub v3: Matrix2<f64>,
}

/// Symmetric covariance matrix of an `N`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    m: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a `2N x 2N` matrix, validating squareness, even dimension, and
    /// symmetry within [`SYMMETRY_TOL`]. The stored matrix is symmetrized.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                context: "CovarianceMatrix::new",
                expected: "square 2N x 2N".into(),
                found: format!("{} x {}", m.nrows(), m.ncols()),
            });
        }
        let worst = (&m - m.transpose()).abs().max();
        if worst > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                tol: SYMMETRY_TOL,
                worst,
            });
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self {
            n_modes: sym.nrows() / 2,
            m: sym,
        })
    }

    /// The vacuum state `I/2` on `n_modes` modes.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            m: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    /// The isotropic state `c * I` on `n_modes` modes.
    pub fn scaled_identity(n_modes: usize, c: f64) -> Self {
        Self {
            n_modes,
            m: DMatrix::identity(2 * n_modes, 2 * n_modes) * c,
        }
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// The underlying `2N x 2N` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Consumes the wrapper, returning the matrix.
    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Checks the uncertainty principle `V + (i/2) Sigma_N >= 0` within `tol`:
    /// the minimum eigenvalue of the Hermitian matrix must be `>= -tol`.
    ///
    /// Uses the real symmetric embedding `[[V, -Sigma/2], [Sigma/2, V]]`,
    /// whose spectrum is that of `V + (i/2) Sigma_N` with doubled multiplicity.
    pub fn is_physical(&self, tol: f64) -> bool {
        let n = 2 * self.n_modes;
        let sig = symplectic_form(self.n_modes);
        let mut emb = DMatrix::zeros(2 * n, 2 * n);
        emb.view_mut((0, 0), (n, n)).copy_from(&self.m);
        emb.view_mut((n, n), (n, n)).copy_from(&self.m);
        emb.view_mut((0, n), (n, n)).copy_from(&(-0.5 * &sig));
        emb.view_mut((n, 0), (n, n)).copy_from(&(0.5 * &sig));
        let eig = emb.symmetric_eigenvalues();
        eig.min() >= -tol
    }

    /// Splits a two-mode covariance into its `2 x 2` blocks.
    pub fn block_partition(&self) -> Result<TwoModeBlocks> {
        if self.n_modes != 2 {
            return Err(Error::DimensionMismatch {
                context: "block_partition",
                expected: "2 modes".into(),
                found: format!("{} modes", self.n_modes),
            });
        }
        Ok(TwoModeBlocks {
            v1: self.m.fixed_view::<2, 2>(0, 0).into_owned(),
            v2: self.m.fixed_view::<2, 2>(0, 2).into_owned(),
            v3: self.m.fixed_view::<2, 2>(2, 2).into_owned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        for n in 1..=3 {
            let s = symplectic_form(n);
            let s2 = &s * &s;
            assert_relative_eq!(
                s2,
                -DMatrix::<f64>::identity(2 * n, 2 * n),
                epsilon = 1e-15
            );
            assert_relative_eq!(s.transpose(), -&s, epsilon = 1e-15);
        }
    }

    #[test]
    fn vacuum_is_physical() {
        assert!(CovarianceMatrix::vacuum(1).is_physical(PHYSICALITY_TOL));
        assert!(CovarianceMatrix::vacuum(2).is_physical(PHYSICALITY_TOL));
        assert!(CovarianceMatrix::vacuum(3).is_physical(PHYSICALITY_TOL));
    }

    #[test]
    fn squeezed_below_vacuum_is_unphysical() {
        // c I with c < 1/2 violates the uncertainty bound: min eig = c - 1/2.
        let v = CovarianceMatrix::scaled_identity(1, 0.1);
        assert!(!v.is_physical(PHYSICALITY_TOL));
        let v = CovarianceMatrix::scaled_identity(2, 0.4999);
        assert!(!v.is_physical(1e-9));
        assert!(v.is_physical(1e-3));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 1)] = 1e-3;
        assert!(matches!(
            CovarianceMatrix::new(m),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn odd_dimension_rejected() {
        let m = DMatrix::identity(5, 5);
        assert!(matches!(
            CovarianceMatrix::new(m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Two-mode squeezed covariance with parameter `r`.
    fn two_mode_squeezed(r: f64) -> CovarianceMatrix {
        let (c, s) = (f64::cosh(2.0 * r), f64::sinh(2.0 * r));
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                c, 0.0, s, 0.0, //
                0.0, c, 0.0, -s, //
                s, 0.0, c, 0.0, //
                0.0, -s, 0.0, c,
            ],
        ) * 0.5;
        CovarianceMatrix::new(m).unwrap()
    }

    #[test]
    fn block_partition_of_squeezed_state() {
        let r = 0.5;
        let blocks = two_mode_squeezed(r).block_partition().unwrap();
        let s = f64::sinh(2.0 * r);
        assert_relative_eq!(blocks.v2, Matrix2::new(s, 0.0, 0.0, -s) * 0.5, epsilon = 1e-14);
        assert_relative_eq!(blocks.v1, blocks.v3, epsilon = 1e-14);
        assert_relative_eq!(blocks.v1[(0, 0)], f64::cosh(2.0 * r) * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn squeezed_state_is_physical_for_all_r() {
        for k in 0..=10 {
            let r = 0.1 * k as f64;
            assert!(two_mode_squeezed(r).is_physical(PHYSICALITY_TOL), "r = {r}");
        }
    }

    #[test]
    fn mean_vector_validates_length() {
        assert!(MeanVector::new(DVector::zeros(4)).is_ok());
        assert!(MeanVector::new(DVector::zeros(3)).is_err());
        assert_eq!(MeanVector::zero(2).n_modes(), 2);
    }

    #[test]
    fn symplectic_form_is_antisymmetric_with_unit_determinant() {
        for n in 1..=6 {
            let s = symplectic_form(n);
            assert_relative_eq!(s.transpose(), -&s, epsilon = 1e-15);
            assert_relative_eq!(s.determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn block_partition_reassembles_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let sym = (&raw + raw.transpose()) * 0.5 + DMatrix::identity(4, 4) * 3.0;
            let v = CovarianceMatrix::new(sym.clone()).unwrap();
            let b = v.block_partition().unwrap();
            let mut back = DMatrix::zeros(4, 4);
            back.view_mut((0, 0), (2, 2)).copy_from(&b.v1);
            back.view_mut((0, 2), (2, 2)).copy_from(&b.v2);
            back.view_mut((2, 0), (2, 2)).copy_from(&b.v2.transpose());
            back.view_mut((2, 2), (2, 2)).copy_from(&b.v3);
            assert_relative_eq!(back, sym, epsilon = 1e-14);
        }
    }

    #[test]
    fn physicality_is_monotone_under_added_noise() {
        for v in [
            CovarianceMatrix::vacuum(2),
            two_mode_squeezed(0.8),
            CovarianceMatrix::scaled_identity(2, 3.0),
        ] {
            assert!(v.is_physical(PHYSICALITY_TOL));
            for eps in [1e-6, 1e-3, 0.1, 1.0] {
                let bumped = CovarianceMatrix::new(
                    v.matrix() + DMatrix::identity(4, 4) * eps,
                )
                .unwrap();
                assert!(bumped.is_physical(PHYSICALITY_TOL), "eps = {eps}");
            }
        }
    }
}
