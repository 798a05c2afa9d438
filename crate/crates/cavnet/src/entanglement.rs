//! Two-mode Gaussian entanglement and purity metrics.
//!
//! For a two-mode covariance `V = [[V1, V2], [V2^T, V3]]` the
//! partial-transpose invariant is `Delta~ = det V1 + det V3 - 2 det V2`, the
//! smallest partially transposed symplectic eigenvalue is
//! `nu = sqrt((Delta~ - sqrt(Delta~^2 - 4 det V)) / 2)`, the logarithmic
//! negativity is `EN = max(0, -ln(2 nu))` (natural logarithm), and the purity
//! is `P = 1 / (4 sqrt(det V))`. The state is separable iff `nu >= 1/2`.

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;

/// Per-sample entanglement metrics of a two-mode state.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementRecord {
    /// Sample time.
    pub t: f64,
    /// Logarithmic negativity `EN`.
    pub log_negativity: f64,
    /// Purity `P`.
    pub purity: f64,
    /// Partial-transpose invariant `Delta~`.
    pub delta_tilde: f64,
    /// Determinant of the full covariance.
    pub det_v: f64,
}

fn require_two_modes(v: &CovarianceMatrix, context: &'static str) -> Result<()> {
    if v.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            context,
            expected: "2 modes".into(),
            found: format!("{} modes", v.n_modes()),
        });
    }
    Ok(())
}

/// The partial-transpose invariant `Delta~ = det V1 + det V3 - 2 det V2`.
pub fn delta_tilde(v: &CovarianceMatrix) -> Result<f64> {
    require_two_modes(v, "delta_tilde")?;
    let b = v.block_partition()?;
    Ok(b.v1.determinant() + b.v3.determinant() - 2.0 * b.v2.determinant())
}

/// The smallest symplectic eigenvalue of the partially transposed state.
pub fn min_symplectic_eigenvalue(v: &CovarianceMatrix) -> Result<f64> {
    require_two_modes(v, "min_symplectic_eigenvalue")?;
    let dt = delta_tilde(v)?;
    let det_v = v.matrix().determinant();
    if det_v <= 0.0 {
        return Err(Error::InvalidCovariance {
            reason: format!("determinant {det_v:e} is not positive"),
        });
    }
    // Round tiny negative discriminants (degenerate nu pair) up to zero.
    let disc = (dt * dt - 4.0 * det_v).max(0.0);
    let inner = ((dt - disc.sqrt()) / 2.0).max(0.0);
    let nu = inner.sqrt();
    if nu <= 0.0 {
        return Err(Error::InvalidCovariance {
            reason: "smallest partially transposed symplectic eigenvalue is zero".into(),
        });
    }
    Ok(nu)
}

/// Logarithmic negativity `EN = max(0, -ln(2 nu))`.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<f64> {
    let nu = min_symplectic_eigenvalue(v)?;
    Ok((-(2.0 * nu).ln()).max(0.0))
}

/// Purity `P = 1 / (4 sqrt(det V))` of a two-mode state.
pub fn purity(v: &CovarianceMatrix) -> Result<f64> {
    require_two_modes(v, "purity")?;
    let det_v = v.matrix().determinant();
    if det_v <= 0.0 {
        return Err(Error::InvalidCovariance {
            reason: format!("determinant {det_v:e} is not positive"),
        });
    }
    Ok(1.0 / (4.0 * det_v.sqrt()))
}

/// Computes all metrics of a two-mode state at time `t`.
pub fn record(t: f64, v: &CovarianceMatrix) -> Result<EntanglementRecord> {
    Ok(EntanglementRecord {
        t,
        log_negativity: log_negativity(v)?,
        purity: purity(v)?,
        delta_tilde: delta_tilde(v)?,
        det_v: v.matrix().determinant(),
    })
}

/// Direction of an entanglement transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// `EN` leaves zero (entanglement appears).
    Birth,
    /// `EN` reaches zero (entanglement vanishes).
    Death,
}

/// A located entanglement transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// What happened.
    pub kind: TransitionKind,
    /// Estimated event time.
    pub time: f64,
}

/// Locates entanglement births and deaths in a sampled `EN` series by linear
/// interpolation of the zero crossing between adjacent samples.
///
/// The series is clamped at zero, so when the sample at one endpoint is
/// exactly zero the interpolated crossing lands on that endpoint: births are
/// reported at the last zero sample and deaths at the first zero sample,
/// within one grid step of the true event.
pub fn detect_transitions(times: &[f64], log_neg: &[f64]) -> Vec<Transition> {
    assert_eq!(
        times.len(),
        log_neg.len(),
        "times and series must have equal length"
    );
    let mut out = Vec::new();
    for i in 0..times.len().saturating_sub(1) {
        let (y0, y1) = (log_neg[i], log_neg[i + 1]);
        let entering = y0 <= 0.0 && y1 > 0.0;
        let leaving = y0 > 0.0 && y1 <= 0.0;
        if !(entering || leaving) {
            continue;
        }
        // Linear interpolation of the level-zero crossing.
        let frac = if (y1 - y0).abs() > 0.0 {
            (0.0 - y0) / (y1 - y0)
        } else {
            0.0
        };
        let time = times[i] + frac.clamp(0.0, 1.0) * (times[i + 1] - times[i]);
        out.push(Transition {
            kind: if entering {
                TransitionKind::Birth
            } else {
                TransitionKind::Death
            },
            time,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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
    fn vacuum_metrics() {
        let v = CovarianceMatrix::vacuum(2);
        assert_relative_eq!(delta_tilde(&v).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(v.matrix().determinant(), 0.0625, epsilon = 1e-14);
        assert_relative_eq!(min_symplectic_eigenvalue(&v).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(log_negativity(&v).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(purity(&v).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_family_analytic_values() {
        // nu = e^{-2r}/2, EN = 2r, Delta~ = cosh(4r)/2, P = 1 (pure).
        for k in 1..=10 {
            let r = 0.1 * k as f64;
            let v = two_mode_squeezed(r);
            assert_relative_eq!(
                delta_tilde(&v).unwrap(),
                f64::cosh(4.0 * r) / 2.0,
                epsilon = 1e-10
            );
            assert_relative_eq!(
                min_symplectic_eigenvalue(&v).unwrap(),
                (-2.0 * r).exp() / 2.0,
                epsilon = 1e-10
            );
            assert_relative_eq!(log_negativity(&v).unwrap(), 2.0 * r, epsilon = 1e-9);
            assert_relative_eq!(purity(&v).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn thermal_identity_is_separable_and_mixed() {
        // V = 2I: Delta~ = 8, det V = 16, nu = 2, EN = 0, P = 1/16.
        let v = CovarianceMatrix::scaled_identity(2, 2.0);
        assert_relative_eq!(delta_tilde(&v).unwrap(), 8.0, epsilon = 1e-14);
        assert_relative_eq!(v.matrix().determinant(), 16.0, epsilon = 1e-12);
        assert_relative_eq!(min_symplectic_eigenvalue(&v).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(log_negativity(&v).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(purity(&v).unwrap(), 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn transitions_bracket_the_events() {
        let times: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let series = [0.0, 0.0, 0.3, 0.3, 0.0, 0.0];
        let found = detect_transitions(&times, &series);
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].kind, TransitionKind::Birth);
        assert!((1.0..=2.0).contains(&found[0].time), "birth at {}", found[0].time);
        assert_eq!(found[1].kind, TransitionKind::Death);
        assert!((3.0..=4.0).contains(&found[1].time), "death at {}", found[1].time);
    }

    #[test]
    fn no_transitions_in_flat_series() {
        let times: Vec<f64> = (0..4).map(|i| i as f64).collect();
        assert!(detect_transitions(&times, &[0.0; 4]).is_empty());
        assert!(detect_transitions(&times, &[0.4; 4]).is_empty());
    }

    #[test]
    fn interior_crossing_interpolates() {
        // A series that crosses zero strictly between samples (no exact-zero
        // endpoint): the event lands at the interpolated crossing.
        let times = [0.0, 1.0];
        let found = detect_transitions(&times, &[0.2, -0.2]);
        assert_eq!(found.len(), 1);
        assert_relative_eq!(found[0].time, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn wrong_mode_count_rejected() {
        let v = CovarianceMatrix::vacuum(1);
        assert!(delta_tilde(&v).is_err());
        assert!(purity(&v).is_err());
    }

    /// Random 2x2 real matrix with unit determinant (single-mode symplectic).
    fn random_local_symplectic(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        loop {
            let a: f64 = rng.gen_range(-1.5..1.5);
            if a.abs() < 0.2 {
                continue;
            }
            let b: f64 = rng.gen_range(-1.5..1.5);
            let c: f64 = rng.gen_range(-1.5..1.5);
            let d = (1.0 + b * c) / a;
            if d.abs() > 5.0 {
                continue;
            }
            return DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        }
    }

    #[test]
    fn log_negativity_invariant_under_local_symplectics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // A pure squeezed state and a noisy (mixed) entangled state.
        let pure = two_mode_squeezed(0.8);
        let mixed = CovarianceMatrix::new(
            two_mode_squeezed(0.8).matrix() + DMatrix::identity(4, 4) * 0.1,
        )
        .unwrap();
        for v in [pure, mixed] {
            let reference = log_negativity(&v).unwrap();
            assert!(reference > 0.0);
            for _ in 0..20 {
                let s1 = random_local_symplectic(&mut rng);
                let s2 = random_local_symplectic(&mut rng);
                let mut s = DMatrix::zeros(4, 4);
                s.view_mut((0, 0), (2, 2)).copy_from(&s1);
                s.view_mut((2, 2), (2, 2)).copy_from(&s2);
                let transformed =
                    CovarianceMatrix::new(&s * v.matrix() * s.transpose()).unwrap();
                let en = log_negativity(&transformed).unwrap();
                assert!(
                    (en - reference).abs() <= 1e-9,
                    "EN changed from {reference} to {en}"
                );
            }
        }
    }

    #[test]
    fn purity_invariant_under_global_symplectics() {
        // S = exp(Sigma H) with symmetric H is symplectic and preserves
        // det V, hence purity.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = crate::gaussian::symplectic_form(2);
        let v = CovarianceMatrix::new(
            two_mode_squeezed(0.5).matrix() + DMatrix::identity(4, 4) * 0.2,
        )
        .unwrap();
        let reference = purity(&v).unwrap();
        for _ in 0..10 {
            let raw = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-0.4..0.4));
            let h = (&raw + raw.transpose()) * 0.5;
            let gen = &sigma * h;
            // Matrix exponential by scaled Taylor series.
            let mut s = DMatrix::identity(4, 4);
            let mut term = DMatrix::identity(4, 4);
            for k in 1..=30 {
                term = &term * &gen / k as f64;
                s += &term;
            }
            let transformed = CovarianceMatrix::new(&s * v.matrix() * s.transpose()).unwrap();
            let p = purity(&transformed).unwrap();
            assert!(
                (p - reference).abs() <= 1e-9,
                "purity changed from {reference} to {p}"
            );
        }
    }

    #[test]
    fn product_states_are_separable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            // Each mode: a thermal state pushed through a local symplectic
            // (physical single-mode covariance with det >= 1/4).
            let mut v = DMatrix::zeros(4, 4);
            for m in 0..2 {
                let s = random_local_symplectic(&mut rng);
                let n: f64 = rng.gen_range(0.0..1.5);
                let block = &s * DMatrix::identity(2, 2) * (n + 0.5) * s.transpose();
                v.view_mut((2 * m, 2 * m), (2, 2)).copy_from(&block);
            }
            let cv = CovarianceMatrix::new(v).unwrap();
            assert_eq!(log_negativity(&cv).unwrap(), 0.0);
        }
    }

    #[test]
    fn squeezed_symplectic_eigenvalue_to_high_precision() {
        for k in 1..=15 {
            let r = 0.1 * k as f64;
            let v = two_mode_squeezed(r);
            assert!(
                (min_symplectic_eigenvalue(&v).unwrap() - (-2.0 * r).exp() / 2.0).abs() <= 1e-10,
                "r = {r}"
            );
        }
    }
}
