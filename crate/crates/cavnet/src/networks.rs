//! Concrete network models: cavity and detector presets, the ideal
//! (loss-free, instantaneous-detector) two-cavity feedback network, and the
//! realistic network with beam-splitter loss and detector dynamics.
//!
//! Both networks are built along two independent routes:
//!
//! * closed-form drift/diffusion expressions, and
//! * the cascade algebra of [`crate::slh`] (pad, series, feedback closure,
//!   scattering stripping).
//!
//! The two routes must agree to machine precision; they are kept separate so
//! each can serve as a cross-check of the other.
//!
//! Mode layout: cavity 1, cavity 2, then (realistic only) the detector mode.
//! Channel layout (realistic): 0 = cascaded beam, 1 = beam-splitter loss
//! port, 2 = measurement output. The measurement channel carries white noise
//! of intensity `a4 dt`, so realistic constructions use channel weights
//! `(1, 1, a4)`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::gaussian::symplectic_form;
use crate::slh::{
    drift_diffusion, feedback_close, series_weighted, strip_scattering, DriftDiffusion, LinearSLH,
};

/// Tolerance for the decoupling check in the cascade-route reduction.
pub const DECOUPLING_TOL: f64 = 1e-12;

type C = Complex<f64>;
type CMatrix = DMatrix<C>;

/// How a cavity couples to the travelling field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityKind {
    /// Energy-damping coupling `L = sqrt(kappa) (q + i p)`.
    Damped,
    /// Position-only coupling `L = sqrt(kappa) q` (quantum non-demolition).
    Dispersive,
}

/// One-mode cavity with internal Hamiltonian `(m q^2 + p^2) / 2` and
/// coupling strength `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Coupling type.
    pub kind: CavityKind,
    /// Curvature of the position quadrature in the internal Hamiltonian.
    pub m: f64,
    /// Coupling rate to the travelling field.
    pub kappa: f64,
}

impl CavityParams {
    /// Convenience constructor.
    pub fn new(kind: CavityKind, m: f64, kappa: f64) -> Self {
        Self { kind, m, kappa }
    }

    fn validate(&self) -> Result<()> {
        if self.kappa <= 0.0 || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("must be finite and positive, got {}", self.kappa),
            });
        }
        if !self.m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "m",
                reason: format!("must be finite, got {}", self.m),
            });
        }
        Ok(())
    }
}

/// Degenerate parametric amplifier parameters: detuning, pump amplitude, and
/// pump phase (measured so that zero phase squeezes along the position axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpaParams {
    /// Cavity detuning.
    pub detuning: f64,
    /// Pump amplitude.
    pub pump: f64,
    /// Pump phase.
    pub phase: f64,
}

/// The amplifier preset realizing the cavity Hamiltonian `(m q^2 + p^2)/2`:
/// detuning `(1 + m)/2`, pump `(1 - m)/2`, zero phase.
pub fn dpa_parameters(m: f64) -> DpaParams {
    DpaParams {
        detuning: (1.0 + m) / 2.0,
        pump: (1.0 - m) / 2.0,
        phase: 0.0,
    }
}

/// Quadrature Hamiltonian matrix of a degenerate parametric amplifier:
/// `G = [[Delta - eps cos(phi), -eps sin(phi)], [-eps sin(phi), Delta + eps cos(phi)]]`.
pub fn dpa_hamiltonian(p: &DpaParams) -> Matrix2<f64> {
    let (d, e, phi) = (p.detuning, p.pump, p.phase);
    Matrix2::new(
        d - e * phi.cos(),
        -e * phi.sin(),
        -e * phi.sin(),
        d + e * phi.cos(),
    )
}

/// First-order detector model `d xi = a1 xi dt + a2 dw`,
/// `dy = a3 xi dt + dv` with measurement-noise intensity `E[dv^2] = a4 dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Internal relaxation rate (negative for a stable detector).
    pub a1: f64,
    /// Input gain.
    pub a2: f64,
    /// Output gain.
    pub a3: f64,
    /// Measurement-noise intensity.
    pub a4: f64,
}

impl DetectorParams {
    /// Low-pass-filter preset with time constant `tau`:
    /// `a1 = -1/tau`, `a2 = 1/tau`, `a3 = 1`.
    pub fn low_pass(tau: f64, a4: f64) -> Self {
        Self {
            a1: -1.0 / tau,
            a2: 1.0 / tau,
            a3: 1.0,
            a4,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a1", self.a1),
            ("a2", self.a2),
            ("a3", self.a3),
            ("a4", self.a4),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "detector",
                    reason: format!("{name} must be finite, got {v}"),
                });
            }
        }
        if self.a4 <= 0.0 || !self.a4.is_finite() {
            return Err(Error::InvalidParameter {
                name: "a4",
                reason: format!("must be positive, got {}", self.a4),
            });
        }
        Ok(())
    }
}

/// Full parameter set of a two-cavity feedback network.
#[derive(Debug, Clone)]
pub struct NetworkParams {
    /// Upstream cavity.
    pub cavity1: CavityParams,
    /// Downstream cavity.
    pub cavity2: CavityParams,
    /// Feedback gain `g`.
    pub gain: f64,
    /// Feedback coefficient vector `f` over the cavity quadratures
    /// `(q1, p1, q2, p2)`.
    pub feedback: DVector<f64>,
    /// Beam-splitter transmissivity (realistic network; 1 = no loss).
    pub alpha: f64,
    /// Detector model (realistic network).
    pub detector: DetectorParams,
}

impl NetworkParams {
    /// Parameters for the ideal network; loss and detector fields are set to
    /// their benign defaults and ignored by the ideal builders.
    pub fn ideal(
        cavity1: CavityParams,
        cavity2: CavityParams,
        gain: f64,
        feedback: DVector<f64>,
    ) -> Self {
        Self {
            cavity1,
            cavity2,
            gain,
            feedback,
            alpha: 1.0,
            detector: DetectorParams::low_pass(0.01, 0.01),
        }
    }

    /// Parameters for the realistic network.
    pub fn realistic(
        cavity1: CavityParams,
        cavity2: CavityParams,
        gain: f64,
        feedback: DVector<f64>,
        alpha: f64,
        detector: DetectorParams,
    ) -> Self {
        Self {
            cavity1,
            cavity2,
            gain,
            feedback,
            alpha,
            detector,
        }
    }

    fn validate(&self, realistic: bool) -> Result<()> {
        self.cavity1.validate()?;
        self.cavity2.validate()?;
        if self.feedback.len() != 4 || self.feedback.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "feedback",
                reason: format!(
                    "must be a finite vector over (q1, p1, q2, p2), got length {}",
                    self.feedback.len()
                ),
            });
        }
        if !self.gain.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gain",
                reason: "must be finite".into(),
            });
        }
        if realistic {
            if !(0.0..=1.0).contains(&self.alpha) {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    reason: format!("transmissivity must lie in [0, 1], got {}", self.alpha),
                });
            }
            self.detector.validate()?;
        }
        Ok(())
    }

    /// Channel weights of the realistic network: vacuum on the beam and loss
    /// channels, intensity `a4` on the measurement channel.
    pub fn channel_weights(&self) -> [f64; 3] {
        [1.0, 1.0, self.detector.a4]
    }
}

/// Quadrature data of a cavity: the `2 x 2` Hamiltonian matrix `G` and the
/// coupling coefficient vector `ell` with `L = ell^T (q, p)`.
pub fn cavity_matrices(p: &CavityParams) -> (Matrix2<f64>, DVector<C>) {
    let g = Matrix2::new(p.m, 0.0, 0.0, 1.0);
    let k = p.kappa.sqrt();
    let ell = match p.kind {
        CavityKind::Damped => DVector::from_row_slice(&[C::new(k, 0.0), C::new(0.0, k)]),
        CavityKind::Dispersive => DVector::from_row_slice(&[C::new(k, 0.0), C::new(0.0, 0.0)]),
    };
    (g, ell)
}

/// One-mode, one-channel input-output model of a cavity.
pub fn cavity_slh(p: &CavityParams) -> Result<LinearSLH> {
    p.validate()?;
    let (g, ell) = cavity_matrices(p);
    let l = CMatrix::from_fn(1, 2, |_, j| ell[j]);
    LinearSLH::new(
        CMatrix::identity(1, 1),
        l,
        DMatrix::from_row_slice(2, 2, &[g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]),
    )
}

/// Three-channel beam splitter with transmissivity `alpha`: mixes the beam
/// channel with the loss port (reflectivity `sqrt(1 - alpha^2)`, so the
/// scattering matrix is unitary) and passes the measurement channel.
pub fn beam_splitter_slh(alpha: f64) -> Result<LinearSLH> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("transmissivity must lie in [0, 1], got {alpha}"),
        });
    }
    let beta = (1.0 - alpha * alpha).sqrt();
    let mut s = CMatrix::identity(3, 3);
    s[(0, 0)] = C::new(alpha, 0.0);
    s[(0, 1)] = C::new(-beta, 0.0);
    s[(1, 0)] = C::new(beta, 0.0);
    s[(1, 1)] = C::new(alpha, 0.0);
    LinearSLH::new(s, CMatrix::zeros(3, 0), DMatrix::zeros(0, 0))
}

/// One-mode quantum realization of the detector in the three-channel layout:
/// the beam channel couples through `-i a2 p`, the measurement channel
/// through `(a3 / (2 a4)) q`, and the internal Hamiltonian is
/// `(a1/2)(q p + p q)`.
pub fn detector_slh(p: &DetectorParams) -> Result<LinearSLH> {
    p.validate()?;
    let mut l = CMatrix::zeros(3, 2);
    l[(0, 1)] = C::new(0.0, -p.a2);
    l[(2, 0)] = C::new(p.a3 / (2.0 * p.a4), 0.0);
    let g = DMatrix::from_row_slice(2, 2, &[0.0, p.a1, p.a1, 0.0]);
    LinearSLH::new(CMatrix::identity(3, 3), l, g)
}

// -- closed-form constructions ------------------------------------------------

fn outer_im(a: &DVector<C>, b: &DVector<C>) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| (a[i].conj() * b[j]).im)
}

fn outer_re(a: &DVector<C>, b: &DVector<C>) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| (a[i].conj() * b[j]).re)
}

fn single_cavity_ad(g: &Matrix2<f64>, ell: &DVector<C>) -> (DMatrix<f64>, DMatrix<f64>) {
    let sig = symplectic_form(1);
    let gd = DMatrix::from_row_slice(2, 2, &[g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]]);
    let a = &sig * (gd + outer_im(ell, ell));
    let d = &sig * outer_re(ell, ell) * sig.transpose();
    (a, d)
}

/// Drift/diffusion of the uncontrolled ideal cascade (`g = 0`) together with
/// the stacked coupling vector `ell = (ell_1; ell_2)`; this triple is the
/// input of the feedback-design problem.
pub fn ideal_uncontrolled(params: &NetworkParams) -> Result<(DriftDiffusion, DVector<C>)> {
    params.validate(false)?;
    let (g1, l1) = cavity_matrices(&params.cavity1);
    let (g2, l2) = cavity_matrices(&params.cavity2);
    let (a1, d1) = single_cavity_ad(&g1, &l1);
    let (a2, d2) = single_cavity_ad(&g2, &l2);
    let sig = symplectic_form(1);

    let mut a = DMatrix::zeros(4, 4);
    a.view_mut((0, 0), (2, 2)).copy_from(&a1);
    a.view_mut((2, 2), (2, 2)).copy_from(&a2);
    a.view_mut((2, 0), (2, 2))
        .copy_from(&(2.0 * &sig * outer_im(&l2, &l1)));

    let cross = &sig * outer_re(&l2, &l1) * sig.transpose();
    let mut d = DMatrix::zeros(4, 4);
    d.view_mut((0, 0), (2, 2)).copy_from(&d1);
    d.view_mut((2, 2), (2, 2)).copy_from(&d2);
    d.view_mut((2, 0), (2, 2)).copy_from(&cross);
    d.view_mut((0, 2), (2, 2)).copy_from(&cross.transpose());

    let ell = DVector::from_fn(4, |i, _| if i < 2 { l1[i] } else { l2[i - 2] });
    Ok((DriftDiffusion { a, d }, ell))
}

/// Ideal network drift/diffusion by the closed-form expressions:
/// `A = A_o + 2 g Sigma f Re(ell)^T` and
/// `D = D_o + Sigma (g^2 f f^T - g Im(ell) f^T - g f Im(ell)^T) Sigma^T`.
pub fn build_ideal(params: &NetworkParams) -> Result<DriftDiffusion> {
    let (base, ell) = ideal_uncontrolled(params)?;
    let g = params.gain;
    let sig = symplectic_form(2);
    let f = &params.feedback;
    let re = DVector::from_iterator(4, ell.iter().map(|z| z.re));
    let im = DVector::from_iterator(4, ell.iter().map(|z| z.im));
    let a = &base.a + 2.0 * g * &sig * f * re.transpose();
    let noise =
        g * g * f * f.transpose() - g * &im * f.transpose() - g * f * im.transpose();
    let d = &base.d + &sig * noise * sig.transpose();
    Ok(DriftDiffusion { a, d })
}

/// Ideal network drift/diffusion by the cascade algebra: pad both cavities
/// into the two-mode space, form the series product, close the feedback
/// loop on the single beam channel, and read off the dynamics.
pub fn build_ideal_cascade(params: &NetworkParams) -> Result<DriftDiffusion> {
    params.validate(false)?;
    let c1 = cavity_slh(&params.cavity1)?.pad(2, 0, 1, 0)?;
    let c2 = cavity_slh(&params.cavity2)?.pad(2, 1, 1, 0)?;
    let cascade = series_weighted(&c2, &c1, None)?;
    let mut f = DVector::zeros(4);
    f.rows_mut(0, 4).copy_from(&params.feedback);
    let closed = feedback_close(&cascade, &f, params.gain, 0, None)?;
    drift_diffusion(&closed, None)
}

/// Realistic network drift/diffusion (5 coordinates: both cavities and the
/// detector state) by the closed-form expressions.
pub fn build_realistic(params: &NetworkParams) -> Result<DriftDiffusion> {
    params.validate(true)?;
    let (g1, l1) = cavity_matrices(&params.cavity1);
    let (g2, l2) = cavity_matrices(&params.cavity2);
    let (a1, d1) = single_cavity_ad(&g1, &l1);
    let (a2, d2) = single_cavity_ad(&g2, &l2);
    let sig = symplectic_form(1);
    let det = &params.detector;
    let (alpha, g) = (params.alpha, params.gain);
    let f1 = params.feedback.rows(0, 2).clone_owned();
    let f2 = params.feedback.rows(2, 2).clone_owned();
    let re1 = DVector::from_iterator(2, l1.iter().map(|z| z.re));
    let re2 = DVector::from_iterator(2, l2.iter().map(|z| z.re));
    let im1 = DVector::from_iterator(2, l1.iter().map(|z| z.im));
    let im2 = DVector::from_iterator(2, l2.iter().map(|z| z.im));

    let mut a = DMatrix::zeros(5, 5);
    a.view_mut((0, 0), (2, 2)).copy_from(&a1);
    a.view_mut((2, 2), (2, 2)).copy_from(&a2);
    a.view_mut((2, 0), (2, 2))
        .copy_from(&(2.0 * alpha * &sig * outer_im(&l2, &l1)));
    a.view_mut((0, 4), (2, 1))
        .copy_from(&(g * det.a3 * &sig * &f1));
    a.view_mut((2, 4), (2, 1))
        .copy_from(&(g * det.a3 * &sig * &f2));
    a.view_mut((4, 0), (1, 2))
        .copy_from(&(2.0 * alpha * det.a2 * re1.transpose()));
    a.view_mut((4, 2), (1, 2))
        .copy_from(&(2.0 * det.a2 * re2.transpose()));
    a[(4, 4)] = det.a1;

    let cross = alpha * &sig * outer_re(&l2, &l1) * sig.transpose();
    let mut d = DMatrix::zeros(5, 5);
    d.view_mut((0, 0), (2, 2)).copy_from(&d1);
    d.view_mut((2, 2), (2, 2)).copy_from(&d2);
    d.view_mut((2, 0), (2, 2)).copy_from(&cross);
    d.view_mut((0, 2), (2, 2)).copy_from(&cross.transpose());
    let dq1 = -alpha * det.a2 * (&sig * &im1);
    let dq2 = -det.a2 * (&sig * &im2);
    d.view_mut((4, 0), (1, 2)).copy_from(&dq1.transpose());
    d.view_mut((0, 4), (2, 1)).copy_from(&dq1);
    d.view_mut((4, 2), (1, 2)).copy_from(&dq2.transpose());
    d.view_mut((2, 4), (2, 1)).copy_from(&dq2);
    d[(4, 4)] = det.a2 * det.a2;

    // Feedback-noise contribution, g^2 a4 Sigma f f^T Sigma^T on the cavity
    // block only.
    let g2a4 = g * g * det.a4;
    let sf1 = &sig * &f1;
    let sf2 = &sig * &f2;
    let mut dn = DMatrix::zeros(5, 5);
    dn.view_mut((0, 0), (2, 2)).copy_from(&(&sf1 * sf1.transpose()));
    dn.view_mut((2, 0), (2, 2)).copy_from(&(&sf2 * sf1.transpose()));
    dn.view_mut((0, 2), (2, 2)).copy_from(&(&sf1 * sf2.transpose()));
    dn.view_mut((2, 2), (2, 2)).copy_from(&(&sf2 * sf2.transpose()));
    Ok(DriftDiffusion {
        a,
        d: d + g2a4 * dn,
    })
}

/// Realistic network drift/diffusion by the cascade algebra: cavity 1, beam
/// splitter, cavity 2, detector, and the feedback controller are composed in
/// the three-mode, three-channel space with channel weights `(1, 1, a4)`; the
/// scattering is stripped, the six-coordinate dynamics are formed, and the
/// decoupled detector momentum is removed after verifying that its couplings
/// vanish within [`DECOUPLING_TOL`].
pub fn build_realistic_cascade(params: &NetworkParams) -> Result<DriftDiffusion> {
    params.validate(true)?;
    let w = params.channel_weights();
    let weights = Some(&w[..]);
    let c1 = cavity_slh(&params.cavity1)?.pad(3, 0, 3, 0)?;
    let bs = beam_splitter_slh(params.alpha)?.pad(3, 0, 3, 0)?;
    let c2 = cavity_slh(&params.cavity2)?.pad(3, 1, 3, 0)?;
    let det = detector_slh(&params.detector)?.pad(3, 2, 3, 0)?;

    let mut sys = series_weighted(&bs, &c1, weights)?;
    sys = series_weighted(&c2, &sys, weights)?;
    sys = series_weighted(&det, &sys, weights)?;
    let mut f = DVector::zeros(6);
    f.rows_mut(0, 4).copy_from(&params.feedback);
    sys = feedback_close(&sys, &f, params.gain, 2, weights)?;
    sys = strip_scattering(&sys, weights)?;
    let dd = drift_diffusion(&sys, weights)?;

    // The detector momentum (coordinate 5) must decouple from the rest.
    let mut worst = 0.0f64;
    for j in 0..5 {
        worst = worst
            .max(dd.a[(5, j)].abs())
            .max(dd.a[(j, 5)].abs())
            .max(dd.d[(5, j)].abs())
            .max(dd.d[(j, 5)].abs());
    }
    if worst > DECOUPLING_TOL {
        return Err(Error::NotDecoupled {
            index: 5,
            worst,
            tol: DECOUPLING_TOL,
        });
    }
    let a = dd.a.remove_row(5).remove_column(5);
    let d = dd.d.remove_row(5).remove_column(5);
    Ok(DriftDiffusion { a, d })
}

/// Extracts the two-cavity block (leading `4 x 4` submatrix) of a network
/// covariance.
pub fn reduce_cavity_covariance(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !v.is_square() || v.nrows() < 4 {
        return Err(Error::DimensionMismatch {
            context: "reduce_cavity_covariance",
            expected: "square matrix of dimension >= 4".into(),
            found: format!("{} x {}", v.nrows(), v.ncols()),
        });
    }
    Ok(v.view((0, 0), (4, 4)).clone_owned())
}

// -- adiabatic elimination ----------------------------------------------------

/// Full two-mode model of the dispersive coupling: the auxiliary mode `b`
/// couples to the probe through `H = 2 Gamma q_a p_b` and decays through a
/// mirror of rate `gamma` (`L = sqrt(gamma/2) (q_b + i p_b)`).
pub fn adiabatic_full_slh(big_gamma: f64, gamma: f64) -> Result<LinearSLH> {
    if gamma <= 0.0 || !gamma.is_finite() || !big_gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("need gamma > 0 and finite Gamma, got ({big_gamma}, {gamma})"),
        });
    }
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 3)] = 2.0 * big_gamma;
    g[(3, 0)] = 2.0 * big_gamma;
    let mut l = CMatrix::zeros(1, 4);
    let c = (gamma / 2.0).sqrt();
    l[(0, 2)] = C::new(c, 0.0);
    l[(0, 3)] = C::new(0.0, c);
    LinearSLH::new(CMatrix::identity(1, 1), l, g)
}

/// Adiabatically eliminates the fast auxiliary mode: for `gamma` much larger
/// than every other rate the two-mode model reduces to a one-mode dispersive
/// coupling `L = sqrt(kappa) q` with `kappa = 8 Gamma^2 / gamma`
/// (equivalently `2 sqrt(2) Gamma = sqrt(kappa gamma)`).
///
/// Returns the reduced one-mode model and the effective `kappa`.
pub fn adiabatic_eliminate(big_gamma: f64, gamma: f64) -> Result<(LinearSLH, f64)> {
    if gamma <= 0.0 || !gamma.is_finite() || !big_gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("need gamma > 0 and finite Gamma, got ({big_gamma}, {gamma})"),
        });
    }
    let kappa = 8.0 * big_gamma * big_gamma / gamma;
    let mut l = CMatrix::zeros(1, 2);
    l[(0, 0)] = C::new(kappa.sqrt(), 0.0);
    let reduced = LinearSLH::new(CMatrix::identity(1, 1), l, DMatrix::zeros(2, 2))?;
    Ok((reduced, kappa))
}
