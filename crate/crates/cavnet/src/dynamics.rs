//! Covariance and mean dynamics: fixed-step propagation, stationary solves,
//! stability classification, and the feedback-design Riccati equation.
//!
//! The covariance of a linear network obeys the Lyapunov matrix ODE
//! `dV/dt = A V + V A^T + D`; the mean obeys `d<x>/dt = A <x>`. Feedback
//! design works on the uncontrolled cascade `(A_o, D_o, ell)`: the optimal
//! stationary covariance solves `R(V) = 0` with
//! `R(V) = A_o V + V A_o^T + D_o - (2 V Re(ell) - Sigma Im(ell)) (...)^T`,
//! and the stationary coefficient vector is
//! `f = 2 Sigma V Re(ell) + Im(ell)`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::symplectic_form;

/// Default tolerance on real parts when classifying drift eigenvalues.
pub const STABILITY_TOL: f64 = 1e-8;

/// Convergence threshold (sup-norm residual) for the Riccati solver.
pub const RICCATI_TOL: f64 = 1e-10;

/// Pole-shift candidates tried for the Riccati starting iterate `V0 = rho I`.
const RHO_GRID: [f64; 12] = [
    0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0,
];

/// Time horizon and step for the Riccati-flow bootstrap used when no grid
/// candidate stabilizes.
const BOOTSTRAP_T_MAX: f64 = 50.0;
const BOOTSTRAP_DT: f64 = 1e-3;
const BOOTSTRAP_CHECK_EVERY: usize = 250;

/// Maximum Newton iterations for the Riccati solve.
const NEWTON_MAX_ITER: usize = 60;

/// Spectral classification of a drift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    /// All eigenvalues have real part `< -tol`.
    Stable,
    /// No eigenvalue has real part `> tol`, but some lie within `[-tol, tol]`.
    Marginal,
    /// Some eigenvalue has real part `> tol`.
    Unstable,
}

impl StabilityClass {
    /// Lower-case label, as emitted by front ends.
    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::Stable => "stable",
            StabilityClass::Marginal => "marginal",
            StabilityClass::Unstable => "unstable",
        }
    }
}

/// Classifies the eigenvalues of `a` by their real parts with tolerance `tol`.
pub fn stability_class(a: &DMatrix<f64>, tol: f64) -> StabilityClass {
    let eigs = a.clone().complex_eigenvalues();
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > tol {
        StabilityClass::Unstable
    } else if max_re >= -tol {
        StabilityClass::Marginal
    } else {
        StabilityClass::Stable
    }
}

/// A fixed-step trajectory: the time grid, the covariance at every step, and
/// optionally the mean at every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample times `i * dt`.
    pub times: Vec<f64>,
    /// Covariance at each sample (empty for mean-only trajectories).
    pub covariances: Vec<DMatrix<f64>>,
    /// Mean at each sample, when propagated.
    pub means: Option<Vec<DVector<f64>>>,
}

fn check_grid(t_end: f64, dt: f64) -> Result<usize> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be finite and positive, got {dt}"),
        });
    }
    if t_end < 0.0 || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must be finite and non-negative, got {t_end}"),
        });
    }
    Ok((t_end / dt).round() as usize)
}

/// Classical fourth-order Runge-Kutta on a matrix ODE `dV/dt = f(V)`, with
/// the iterate re-symmetrized after every step when `symmetrize` is set.
fn rk4_matrix<F>(
    v0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
    symmetrize: bool,
    f: F,
) -> Result<(Vec<f64>, Vec<DMatrix<f64>>)>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let steps = check_grid(t_end, dt)?;
    let mut v = v0.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(v.clone());
    for i in 0..steps {
        let k1 = f(&v);
        let k2 = f(&(&v + 0.5 * dt * &k1));
        let k3 = f(&(&v + 0.5 * dt * &k2));
        let k4 = f(&(&v + dt * &k3));
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if symmetrize {
            v = (&v + v.transpose()) * 0.5;
        }
        let t = (i + 1) as f64 * dt;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { time: t });
        }
        times.push(t);
        states.push(v.clone());
    }
    Ok((times, states))
}

/// Propagates the Lyapunov ODE `dV/dt = A V + V A^T + D` from `v0` with the
/// classical RK4 scheme, re-symmetrizing after every step.
pub fn propagate_lyapunov(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_square_triple(a, d, v0)?;
    let at = a.transpose();
    let (times, covariances) = rk4_matrix(v0, t_end, dt, true, |v| a * v + v * &at + d)?;
    Ok(Trajectory {
        times,
        covariances,
        means: None,
    })
}

/// Propagates the mean ODE `d<x>/dt = A <x>` from `x0` with the classical
/// RK4 scheme. The returned trajectory carries means only.
pub fn propagate_mean(
    a: &DMatrix<f64>,
    x0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if a.nrows() != x0.len() {
        return Err(Error::DimensionMismatch {
            context: "propagate_mean",
            expected: format!("x0 of length {}", a.nrows()),
            found: format!("{}", x0.len()),
        });
    }
    let as_col = DMatrix::from_column_slice(x0.len(), 1, x0.as_slice());
    let (times, cols) = rk4_matrix(&as_col, t_end, dt, false, |x| a * x)?;
    let means = cols
        .into_iter()
        .map(|m| DVector::from_column_slice(m.as_slice()))
        .collect();
    Ok(Trajectory {
        times,
        covariances: Vec::new(),
        means: Some(means),
    })
}

fn check_square_triple(a: &DMatrix<f64>, d: &DMatrix<f64>, v0: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() || d.nrows() != n || d.ncols() != n || v0.nrows() != n || v0.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "lyapunov dynamics",
            expected: format!("square {n} x {n} A, D, V0"),
            found: format!(
                "A {}x{}, D {}x{}, V0 {}x{}",
                a.nrows(),
                a.ncols(),
                d.nrows(),
                d.ncols(),
                v0.nrows(),
                v0.ncols()
            ),
        });
    }
    Ok(())
}

/// Solves the stationary Lyapunov equation `A V + V A^T + D = 0` by Kronecker
/// vectorization: `(I (x) A + A (x) I) vec(V) = -vec(D)`.
///
/// Errors with [`Error::NonStationary`] unless `A` is strictly Hurwitz at
/// [`STABILITY_TOL`].
pub fn steady_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_triple(a, d, d)?;
    match stability_class(a, STABILITY_TOL) {
        StabilityClass::Stable => {}
        cls => {
            return Err(Error::NonStationary {
                class: cls.label(),
            })
        }
    }
    let v = lyapunov_kronecker(a, d)?;
    Ok((&v + v.transpose()) * 0.5)
}

/// Raw Kronecker-vectorized Lyapunov solve (no stability gate); used both by
/// [`steady_lyapunov`] and by the Newton inner iteration.
fn lyapunov_kronecker(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // Column-major vec: vec(AV) = (I (x) A) vec V, vec(V A^T) = (A (x) I) vec V.
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(d.as_slice());
    let sol = k
        .lu()
        .solve(&(-rhs))
        .ok_or(Error::SingularSystem {
            context: "stationary Lyapunov solve",
        })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Ingredients of the feedback-design Riccati problem, derived from the
/// uncontrolled cascade `(A_o, D_o)` and stacked coupling vector `ell`.
struct RiccatiProblem {
    r: DVector<f64>,
    im: DVector<f64>,
    /// `A' = A_o + 2 s r^T` with `s = Sigma Im(ell)`.
    a_prime: DMatrix<f64>,
    /// `Q = D_o - s s^T` (equal to `(Sigma r)(Sigma r)^T`, PSD by structure).
    q: DMatrix<f64>,
    /// `R' = 4 r r^T`.
    r_quad: DMatrix<f64>,
    sigma: DMatrix<f64>,
}

impl RiccatiProblem {
    fn new(a_o: &DMatrix<f64>, d_o: &DMatrix<f64>, ell: &DVector<Complex<f64>>) -> Result<Self> {
        let n = a_o.nrows();
        check_square_triple(a_o, d_o, d_o)?;
        if !n.is_multiple_of(2) || ell.len() != n {
            return Err(Error::DimensionMismatch {
                context: "solve_riccati",
                expected: format!("ell of even length {n}"),
                found: format!("{}", ell.len()),
            });
        }
        let sigma = symplectic_form(n / 2);
        let r = DVector::from_iterator(n, ell.iter().map(|z| z.re));
        let im = DVector::from_iterator(n, ell.iter().map(|z| z.im));
        let s = &sigma * &im;
        let a_prime = a_o + 2.0 * &s * r.transpose();
        let q = d_o - &s * s.transpose();
        let r_quad = 4.0 * &r * r.transpose();
        Ok(Self {
            r,
            im,
            a_prime,
            q,
            r_quad,
            sigma,
        })
    }

    /// `R(V) = A' V + V A'^T + Q - V R' V`, identical to the defining form
    /// on the `(A_o, D_o, ell)` data.
    fn residual_matrix(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a_prime * v + v * self.a_prime.transpose() + &self.q - v * &self.r_quad * v
    }

    fn is_stabilizing(&self, v: &DMatrix<f64>) -> bool {
        let closed = &self.a_prime - v * &self.r_quad;
        matches!(
            stability_class(&closed, 1e-9),
            StabilityClass::Stable
        )
    }
}

/// Result of the feedback-design Riccati solve.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Stabilizing stationary covariance `V_inf`.
    pub v_inf: DMatrix<f64>,
    /// Stationary coefficient vector `f = 2 Sigma V_inf Re(ell) + Im(ell)`.
    pub f_bar: DVector<f64>,
    /// Final sup-norm residual of the Riccati equation.
    pub residual: f64,
    /// Newton iterations used.
    pub iterations: usize,
}

/// The Riccati residual `R(V)` evaluated on raw `(A_o, D_o, ell)` data;
/// exposed for cross-checks.
pub fn riccati_residual(
    v: &DMatrix<f64>,
    a_o: &DMatrix<f64>,
    d_o: &DMatrix<f64>,
    ell: &DVector<Complex<f64>>,
) -> Result<DMatrix<f64>> {
    let prob = RiccatiProblem::new(a_o, d_o, ell)?;
    Ok(prob.residual_matrix(v))
}

/// Propagates the matrix Riccati flow `dV/dt = R(V)` from `v0`. This is the
/// covariance trajectory under the time-variant optimal coefficient vector
/// `f_t = 2 Sigma V_t Re(ell) + Im(ell)` at unit gain.
pub fn propagate_riccati_flow(
    a_o: &DMatrix<f64>,
    d_o: &DMatrix<f64>,
    ell: &DVector<Complex<f64>>,
    v0: &DMatrix<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    let prob = RiccatiProblem::new(a_o, d_o, ell)?;
    let (times, covariances) =
        rk4_matrix(v0, t_end, dt, true, |v| prob.residual_matrix(v))?;
    Ok(Trajectory {
        times,
        covariances,
        means: None,
    })
}

/// Solves the stationary equation `R(V) = 0` for the stabilizing solution by
/// Newton-Kleinman iteration with stationary-Lyapunov inner solves.
///
/// The starting iterate is `V0 = rho I` for the first `rho` on a fixed grid
/// making `A' - V0 R'` Hurwitz; when no grid candidate stabilizes (which
/// happens for marginally stable cascades), the Riccati flow is integrated
/// from the vacuum state until it enters stabilizing territory, and Newton
/// iteration takes over from there.
pub fn solve_riccati(
    a_o: &DMatrix<f64>,
    d_o: &DMatrix<f64>,
    ell: &DVector<Complex<f64>>,
) -> Result<RiccatiSolution> {
    let prob = RiccatiProblem::new(a_o, d_o, ell)?;
    let n = a_o.nrows();

    let mut v = RHO_GRID
        .iter()
        .map(|&rho| DMatrix::identity(n, n) * rho)
        .find(|cand| prob.is_stabilizing(cand));
    if v.is_none() {
        v = bootstrap_from_flow(&prob, n)?;
    }
    let mut v = v.ok_or(Error::RiccatiNoStabilizer)?;

    let mut residual = f64::INFINITY;
    for it in 1..=NEWTON_MAX_ITER {
        // A_k = A' - V R'; solve A_k X + X A_k^T + (Q + V R' V) = 0.
        let a_k = &prob.a_prime - &v * &prob.r_quad;
        let rhs = &prob.q + &v * &prob.r_quad * &v;
        let x = lyapunov_kronecker(&a_k, &rhs)?;
        let x = (&x + x.transpose()) * 0.5;
        residual = prob
            .residual_matrix(&x)
            .iter()
            .map(|e| e.abs())
            .fold(0.0, f64::max);
        v = x;
        if residual <= RICCATI_TOL {
            let f_bar = &prob.sigma * 2.0 * &v * &prob.r + &prob.im;
            return Ok(RiccatiSolution {
                v_inf: v,
                f_bar,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::RiccatiNotConverged {
        residual,
        iterations: NEWTON_MAX_ITER,
    })
}

/// Integrates `dV/dt = R(V)` from the vacuum state until the iterate is
/// stabilizing, checking periodically; `None` if the horizon is exhausted.
fn bootstrap_from_flow(prob: &RiccatiProblem, n: usize) -> Result<Option<DMatrix<f64>>> {
    let mut v = DMatrix::identity(n, n) * 0.5;
    let steps = (BOOTSTRAP_T_MAX / BOOTSTRAP_DT) as usize;
    let dt = BOOTSTRAP_DT;
    for i in 0..steps {
        let k1 = prob.residual_matrix(&v);
        let k2 = prob.residual_matrix(&(&v + 0.5 * dt * &k1));
        let k3 = prob.residual_matrix(&(&v + 0.5 * dt * &k2));
        let k4 = prob.residual_matrix(&(&v + dt * &k3));
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        v = (&v + v.transpose()) * 0.5;
        if (i + 1) % BOOTSTRAP_CHECK_EVERY == 0 && prob.is_stabilizing(&v) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// The coefficient vector induced by a covariance `V`:
/// `f = 2 Sigma V Re(ell) + Im(ell)`. Applied to the Riccati solution this
/// gives the stationary feedback design; applied along a trajectory it gives
/// the time-variant optimal coefficients.
pub fn design_feedback(v: &DMatrix<f64>, ell: &DVector<Complex<f64>>) -> Result<DVector<f64>> {
    let n = v.nrows();
    if !v.is_square() || !n.is_multiple_of(2) || ell.len() != n {
        return Err(Error::DimensionMismatch {
            context: "design_feedback",
            expected: "square 2N x 2N V and ell of length 2N".into(),
            found: format!("V {}x{}, ell {}", v.nrows(), v.ncols(), ell.len()),
        });
    }
    let sigma = symplectic_form(n / 2);
    let r = DVector::from_iterator(n, ell.iter().map(|z| z.re));
    let im = DVector::from_iterator(n, ell.iter().map(|z| z.im));
    Ok(sigma * 2.0 * v * r + im)
}
