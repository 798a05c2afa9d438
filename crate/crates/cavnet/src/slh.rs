//! Cascade (series-product) algebra for linear input-output models.
//!
//! A linear model with `N` modes and `M` field channels is the triple
//! `(S, L, G)`: a unitary `M x M` scattering matrix `S`, an `M x 2N` complex
//! coupling matrix `L` whose row `k` holds the coefficients of the linear
//! coupling operator `L_k = L[k, :] x`, and a real symmetric `2N x 2N`
//! Hamiltonian matrix `G` with `H = (1/2) x^T G x`.
//!
//! Channels may carry non-vacuum white noise. A channel whose noise has
//! intensity `w dt` (vacuum: `w = 1`) enters every bilinear expression exactly
//! as a vacuum channel with its coupling row scaled by `sqrt(w)`, so all
//! operations below accept optional per-channel weights.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::symplectic_form;

/// Tolerance for the unitarity check on scattering matrices.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Tolerance for the symmetry check on Hamiltonian matrices.
pub const HAMILTONIAN_SYMMETRY_TOL: f64 = 1e-10;

type CMatrix = DMatrix<Complex<f64>>;

/// A linear input-output model `(S, L, G)`.
#[derive(Debug, Clone)]
pub struct LinearSLH {
    s: CMatrix,
    l: CMatrix,
    g: DMatrix<f64>,
}

fn max_abs_complex(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs_real(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn check_weights(weights: Option<&[f64]>, n_channels: usize, context: &'static str) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != n_channels {
            return Err(Error::DimensionMismatch {
                context,
                expected: format!("{n_channels} channel weights"),
                found: format!("{}", w.len()),
            });
        }
        if w.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "noise_weights",
                reason: "all channel weights must be finite and positive".into(),
            });
        }
    }
    Ok(())
}

impl LinearSLH {
    /// Builds a model, validating that `S` is square and unitary within
    /// [`UNITARITY_TOL`], `G` is symmetric within
    /// [`HAMILTONIAN_SYMMETRY_TOL`], and the dimensions are consistent
    /// (`L` is `M x 2N`, `G` is `2N x 2N`).
    pub fn new(s: CMatrix, l: CMatrix, g: DMatrix<f64>) -> Result<Self> {
        let m = s.nrows();
        if !s.is_square() {
            return Err(Error::DimensionMismatch {
                context: "LinearSLH::new (S)",
                expected: "square".into(),
                found: format!("{} x {}", s.nrows(), s.ncols()),
            });
        }
        let eye = CMatrix::identity(m, m);
        let worst = max_abs_complex(&(&s.adjoint() * &s - &eye))
            .max(max_abs_complex(&(&s * &s.adjoint() - &eye)));
        if worst > UNITARITY_TOL {
            return Err(Error::NotUnitary {
                tol: UNITARITY_TOL,
                worst,
            });
        }
        if l.nrows() != m {
            return Err(Error::DimensionMismatch {
                context: "LinearSLH::new (L rows)",
                expected: format!("{m}"),
                found: format!("{}", l.nrows()),
            });
        }
        if !l.ncols().is_multiple_of(2) || !g.is_square() || g.nrows() != l.ncols() {
            return Err(Error::DimensionMismatch {
                context: "LinearSLH::new (L cols / G)",
                expected: format!("L: {m} x 2N, G: 2N x 2N"),
                found: format!(
                    "L: {} x {}, G: {} x {}",
                    l.nrows(),
                    l.ncols(),
                    g.nrows(),
                    g.ncols()
                ),
            });
        }
        let worst = max_abs_real(&(&g - g.transpose()));
        if worst > HAMILTONIAN_SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                tol: HAMILTONIAN_SYMMETRY_TOL,
                worst,
            });
        }
        let g = (&g + g.transpose()) * 0.5;
        Ok(Self { s, l, g })
    }

    /// A trivial `(I, 0, 0)` model on `n_modes` modes and `n_channels`
    /// channels.
    pub fn identity(n_modes: usize, n_channels: usize) -> Self {
        Self {
            s: CMatrix::identity(n_channels, n_channels),
            l: CMatrix::zeros(n_channels, 2 * n_modes),
            g: DMatrix::zeros(2 * n_modes, 2 * n_modes),
        }
    }

    /// Number of field channels.
    pub fn n_channels(&self) -> usize {
        self.s.nrows()
    }

    /// Number of modes.
    pub fn n_modes(&self) -> usize {
        self.l.ncols() / 2
    }

    /// The scattering matrix `S`.
    pub fn scattering(&self) -> &CMatrix {
        &self.s
    }

    /// The coupling matrix `L` (row `k` = coefficients of `L_k`).
    pub fn coupling(&self) -> &CMatrix {
        &self.l
    }

    /// The Hamiltonian matrix `G`.
    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Embeds the model into a larger space of `total_modes` modes and
    /// `total_channels` channels. Modes are placed starting at `mode_offset`,
    /// channels starting at `channel_offset`; added channels scatter as the
    /// identity and couple to nothing.
    pub fn pad(
        &self,
        total_modes: usize,
        mode_offset: usize,
        total_channels: usize,
        channel_offset: usize,
    ) -> Result<Self> {
        let (nm, nc) = (self.n_modes(), self.n_channels());
        if mode_offset + nm > total_modes || channel_offset + nc > total_channels {
            return Err(Error::DimensionMismatch {
                context: "LinearSLH::pad",
                expected: format!("offsets within {total_modes} modes / {total_channels} channels"),
                found: format!("mode {mode_offset}+{nm}, channel {channel_offset}+{nc}"),
            });
        }
        let mut s = CMatrix::identity(total_channels, total_channels);
        s.view_mut((channel_offset, channel_offset), (nc, nc))
            .copy_from(&self.s);
        let mut l = CMatrix::zeros(total_channels, 2 * total_modes);
        l.view_mut((channel_offset, 2 * mode_offset), (nc, 2 * nm))
            .copy_from(&self.l);
        let mut g = DMatrix::zeros(2 * total_modes, 2 * total_modes);
        g.view_mut((2 * mode_offset, 2 * mode_offset), (2 * nm, 2 * nm))
            .copy_from(&self.g);
        Ok(Self { s, l, g })
    }
}

/// Series product: feeds the output fields of `upstream` into the inputs of
/// `downstream`. Both models must share the same mode space and channel count.
///
/// The composite is `(S2 S1, L2 + S2 L1, G1 + G2 + M + M^T)` with the
/// interconnection Hamiltonian `M = Im(L2^dag S2 L1)` for vacuum inputs.
pub fn series(downstream: &LinearSLH, upstream: &LinearSLH) -> Result<LinearSLH> {
    series_weighted(downstream, upstream, None)
}

/// Series product on channels carrying white noise of intensity
/// `weights[k] dt` (vacuum: 1). The interconnection Hamiltonian becomes
/// `M = Im(L2^dag W S2 L1)` with `W = diag(weights)`.
pub fn series_weighted(
    downstream: &LinearSLH,
    upstream: &LinearSLH,
    weights: Option<&[f64]>,
) -> Result<LinearSLH> {
    if downstream.n_modes() != upstream.n_modes()
        || downstream.n_channels() != upstream.n_channels()
    {
        return Err(Error::DimensionMismatch {
            context: "series",
            expected: format!(
                "{} modes, {} channels",
                upstream.n_modes(),
                upstream.n_channels()
            ),
            found: format!(
                "{} modes, {} channels",
                downstream.n_modes(),
                downstream.n_channels()
            ),
        });
    }
    check_weights(weights, upstream.n_channels(), "series")?;
    let s = &downstream.s * &upstream.s;
    let l = &downstream.l + &downstream.s * &upstream.l;
    let weighted_l2 = apply_weights(&downstream.l, weights);
    let m = (weighted_l2.adjoint() * &downstream.s * &upstream.l).map(|z| z.im);
    let g = &upstream.g + &downstream.g + &m + m.transpose();
    // Constituents were validated; the composite inherits unitarity/symmetry.
    Ok(LinearSLH { s, l, g })
}

fn apply_weights(l: &CMatrix, weights: Option<&[f64]>) -> CMatrix {
    match weights {
        None => l.clone(),
        Some(w) => {
            let mut out = l.clone();
            for (k, &wk) in w.iter().enumerate() {
                for j in 0..out.ncols() {
                    out[(k, j)] *= wk;
                }
            }
            out
        }
    }
}

/// Closes a measurement-feedback loop: cascades the controller
/// `(I, -i g F, 0)` acting on `channel` downstream of `sys`, where
/// `F = f^T x` and `f` is a real vector on the full mode space.
///
/// For a vacuum channel this realizes
/// `(S, L - i g F e_channel, H + (g/2)(F L_channel + L_channel^* F))`;
/// a channel weight `w` scales the Hamiltonian correction by `w`.
pub fn feedback_close(
    sys: &LinearSLH,
    f: &DVector<f64>,
    gain: f64,
    channel: usize,
    weights: Option<&[f64]>,
) -> Result<LinearSLH> {
    if f.len() != 2 * sys.n_modes() {
        return Err(Error::DimensionMismatch {
            context: "feedback_close",
            expected: format!("f of length {}", 2 * sys.n_modes()),
            found: format!("{}", f.len()),
        });
    }
    if channel >= sys.n_channels() {
        return Err(Error::DimensionMismatch {
            context: "feedback_close",
            expected: format!("channel < {}", sys.n_channels()),
            found: format!("{channel}"),
        });
    }
    let mut l = CMatrix::zeros(sys.n_channels(), 2 * sys.n_modes());
    for (j, &fj) in f.iter().enumerate() {
        l[(channel, j)] = Complex::new(0.0, -gain * fj);
    }
    let controller = LinearSLH {
        s: CMatrix::identity(sys.n_channels(), sys.n_channels()),
        l,
        g: DMatrix::zeros(2 * sys.n_modes(), 2 * sys.n_modes()),
    };
    series_weighted(&controller, sys, weights)
}

/// Removes the scattering matrix: `(S, L, G) -> (I, S^dag L, G)`.
///
/// The unconditional covariance dynamics are invariant under this map when
/// every pair of channels mixed by `S` carries the same noise weight; the map
/// does not preserve conditional (measurement-record) dynamics. Errors if `S`
/// mixes channels of unequal weight.
pub fn strip_scattering(sys: &LinearSLH, weights: Option<&[f64]>) -> Result<LinearSLH> {
    check_weights(weights, sys.n_channels(), "strip_scattering")?;
    if let Some(w) = weights {
        for i in 0..sys.n_channels() {
            for j in 0..sys.n_channels() {
                if sys.s[(i, j)].norm() > UNITARITY_TOL && (w[i] - w[j]).abs() > 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "weights",
                        reason: format!(
                            "scattering mixes channels {i} and {j} of unequal weight"
                        ),
                    });
                }
            }
        }
    }
    Ok(LinearSLH {
        s: CMatrix::identity(sys.n_channels(), sys.n_channels()),
        l: sys.s.adjoint() * &sys.l,
        g: sys.g.clone(),
    })
}

/// Drift and diffusion matrices of the covariance dynamics
/// `dV/dt = A V + V A^T + D`.
#[derive(Debug, Clone)]
pub struct DriftDiffusion {
    /// Drift matrix `A = Sigma_N (G + Im(L^dag W L))`.
    pub a: DMatrix<f64>,
    /// Diffusion matrix `D = Sigma_N Re(L^dag W L) Sigma_N^T`.
    pub d: DMatrix<f64>,
}

/// Computes the drift and diffusion matrices of a model, with optional
/// per-channel noise weights `W = diag(weights)` (vacuum: all ones).
pub fn drift_diffusion(sys: &LinearSLH, weights: Option<&[f64]>) -> Result<DriftDiffusion> {
    check_weights(weights, sys.n_channels(), "drift_diffusion")?;
    let lwl = apply_weights(&sys.l, weights).adjoint() * &sys.l;
    let sig = symplectic_form(sys.n_modes());
    let a = &sig * (&sys.g + lwl.map(|z| z.im));
    let d = &sig * lwl.map(|z| z.re) * sig.transpose();
    Ok(DriftDiffusion { a, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// One-mode damped cavity: `L = sqrt(kappa) (q + i p)`, no Hamiltonian.
    fn damped_cavity(kappa: f64) -> LinearSLH {
        let k = kappa.sqrt();
        let l = CMatrix::from_row_slice(1, 2, &[c(k, 0.0), c(0.0, k)]);
        LinearSLH::new(CMatrix::identity(1, 1), l, DMatrix::zeros(2, 2)).unwrap()
    }

    #[test]
    fn damped_cavity_drift_diffusion() {
        // A = -kappa I, D = kappa I: relaxation to vacuum at rate 2 kappa.
        let dd = drift_diffusion(&damped_cavity(1.3), None).unwrap();
        assert_relative_eq!(dd.a, -DMatrix::identity(2, 2) * 1.3, epsilon = 1e-14);
        assert_relative_eq!(dd.d, DMatrix::identity(2, 2) * 1.3, epsilon = 1e-14);
    }

    #[test]
    fn position_coupled_cavity_diffuses_in_momentum() {
        // L = sqrt(kappa) q: no damping, diffusion only in p.
        let l = CMatrix::from_row_slice(1, 2, &[c(2.0, 0.0), c(0.0, 0.0)]);
        let sys = LinearSLH::new(CMatrix::identity(1, 1), l, DMatrix::zeros(2, 2)).unwrap();
        let dd = drift_diffusion(&sys, None).unwrap();
        assert_relative_eq!(dd.a, DMatrix::zeros(2, 2), epsilon = 1e-14);
        assert_relative_eq!(
            dd.d,
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 4.0]),
            epsilon = 1e-14
        );
    }

    fn random_slh(rng: &mut ChaCha8Rng, n_modes: usize, n_channels: usize) -> LinearSLH {
        // Random coupling and Hamiltonian; random unitary S from QR of a
        // complex Gaussian matrix.
        let raw = CMatrix::from_fn(n_channels, n_channels, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let s = raw.qr().q();
        let l = CMatrix::from_fn(n_channels, 2 * n_modes, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let raw_g = DMatrix::from_fn(2 * n_modes, 2 * n_modes, |_, _| rng.gen_range(-1.0..1.0));
        let g = (&raw_g + raw_g.transpose()) * 0.5;
        LinearSLH::new(s, l, g).unwrap()
    }

    #[test]
    fn series_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (a, b, cc) = (
                random_slh(&mut rng, 2, 2),
                random_slh(&mut rng, 2, 2),
                random_slh(&mut rng, 2, 2),
            );
            let left = series(&cc, &series(&b, &a).unwrap()).unwrap();
            let right = series(&series(&cc, &b).unwrap(), &a).unwrap();
            assert!(max_abs_complex(&(&left.s - &right.s)) < 1e-12);
            assert!(max_abs_complex(&(&left.l - &right.l)) < 1e-12);
            assert!((&left.g - &right.g).abs().max() < 1e-12);
        }
    }

    #[test]
    fn identity_is_series_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = random_slh(&mut rng, 1, 2);
        let id = LinearSLH::identity(1, 2);
        for composed in [series(&id, &sys).unwrap(), series(&sys, &id).unwrap()] {
            assert!(max_abs_complex(&(&composed.s - &sys.s)) < 1e-14);
            assert!(max_abs_complex(&(&composed.l - &sys.l)) < 1e-14);
            assert!((&composed.g - &sys.g).abs().max() < 1e-14);
        }
    }

    #[test]
    fn stripping_scattering_preserves_covariance_dynamics() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let sys = random_slh(&mut rng, 2, 3);
            let before = drift_diffusion(&sys, None).unwrap();
            let stripped = strip_scattering(&sys, None).unwrap();
            let after = drift_diffusion(&stripped, None).unwrap();
            assert_relative_eq!(before.a, after.a, epsilon = 1e-12);
            assert_relative_eq!(before.d, after.d, epsilon = 1e-12);
        }
    }

    #[test]
    fn strip_scattering_rejects_mixing_unequal_weights() {
        // A beam-splitter-like S mixing channels 0 and 1 of unequal weight.
        let th = 0.3f64;
        let s = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(th.cos(), 0.0),
                c(-th.sin(), 0.0),
                c(th.sin(), 0.0),
                c(th.cos(), 0.0),
            ],
        );
        let sys = LinearSLH::new(s, CMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).unwrap();
        assert!(strip_scattering(&sys, Some(&[1.0, 0.5])).is_err());
        assert!(strip_scattering(&sys, Some(&[0.5, 0.5])).is_ok());
    }

    #[test]
    fn channel_weight_equals_row_scaling() {
        // A channel of intensity w behaves as a vacuum channel with its
        // coupling row scaled by sqrt(w), in both drift and diffusion.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let sys = random_slh(&mut rng, 2, 2);
            let w = [1.0, rng.gen_range(0.1..3.0)];
            let weighted = drift_diffusion(&sys, Some(&w)).unwrap();
            let mut scaled_l = sys.l.clone();
            for j in 0..scaled_l.ncols() {
                scaled_l[(1, j)] *= w[1].sqrt();
            }
            let scaled = LinearSLH {
                s: sys.s.clone(),
                l: scaled_l,
                g: sys.g.clone(),
            };
            let vacuum = drift_diffusion(&scaled, None).unwrap();
            assert_relative_eq!(weighted.a, vacuum.a, epsilon = 1e-12);
            assert_relative_eq!(weighted.d, vacuum.d, epsilon = 1e-12);
        }
    }

    #[test]
    fn pad_embeds_block_structure() {
        let sys = damped_cavity(2.0);
        let padded = sys.pad(3, 1, 3, 2).unwrap();
        assert_eq!(padded.n_modes(), 3);
        assert_eq!(padded.n_channels(), 3);
        let dd = drift_diffusion(&padded, None).unwrap();
        let block = dd.a.view((2, 2), (2, 2)).clone_owned();
        assert_relative_eq!(block, -DMatrix::identity(2, 2) * 2.0, epsilon = 1e-14);
        assert_relative_eq!(dd.a.abs().sum(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unitary_scattering_rejected() {
        let s = CMatrix::from_row_slice(1, 1, &[c(0.9, 0.0)]);
        assert!(matches!(
            LinearSLH::new(s, CMatrix::zeros(1, 2), DMatrix::zeros(2, 2)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn feedback_close_matches_manual_cascade() {
        // Close the loop on a damped cavity and compare against the direct
        // formula: L' = L - i g F, G' = G + g (f Re(L)^T + Re(L) f^T) for a
        // vacuum channel.
        let sys = damped_cavity(1.0);
        let f = DVector::from_row_slice(&[0.7, -0.4]);
        let gain = 0.9;
        let closed = feedback_close(&sys, &f, gain, 0, None).unwrap();
        let mut expected_l = sys.l.clone();
        for j in 0..2 {
            expected_l[(0, j)] += c(0.0, -gain * f[j]);
        }
        assert!(max_abs_complex(&(&closed.l - &expected_l)) < 1e-14);
        let re_l = DVector::from_iterator(2, sys.l.row(0).iter().map(|z| z.re));
        let expected_g = gain * (&f * re_l.transpose() + &re_l * f.transpose());
        assert_relative_eq!(closed.g, expected_g, epsilon = 1e-14);
    }

    #[test]
    fn drift_affine_and_diffusion_quadratic_in_gain() {
        // Closing the loop at gain g makes A affine and D quadratic in g:
        // second differences of A vanish and second differences of D are
        // constant.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let sys = random_slh(&mut rng, 2, 2);
        let f = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        let at = |g: f64| {
            let closed = feedback_close(&sys, &f, g, 1, None).unwrap();
            drift_diffusion(&closed, None).unwrap()
        };
        let dd: Vec<DriftDiffusion> = [0.0, 1.0, 2.0, 3.0].iter().map(|&g| at(g)).collect();
        let second = |m: [&DMatrix<f64>; 3]| m[2] - 2.0 * m[1] + m[0];
        let a_dd0 = second([&dd[0].a, &dd[1].a, &dd[2].a]);
        let a_dd1 = second([&dd[1].a, &dd[2].a, &dd[3].a]);
        assert!(a_dd0.abs().max() < 1e-12, "A not affine in gain");
        assert!(a_dd1.abs().max() < 1e-12, "A not affine in gain");
        let d_dd0 = second([&dd[0].d, &dd[1].d, &dd[2].d]);
        let d_dd1 = second([&dd[1].d, &dd[2].d, &dd[3].d]);
        assert!((d_dd0 - d_dd1).abs().max() < 1e-12, "D not quadratic in gain");
    }
}
