//! Designs feedback coefficients for the dispersive-damped pairing, closes
//! the loop at unit gain, and reports the entanglement of the final state.

use cavnet::dynamics::{propagate_lyapunov, solve_riccati};
use cavnet::entanglement::log_negativity;
use cavnet::gaussian::CovarianceMatrix;
use cavnet::networks::{
    build_ideal, ideal_uncontrolled, CavityKind, CavityParams, NetworkParams,
};
use nalgebra::{DMatrix, DVector};

fn main() -> cavnet::Result<()> {
    let c1 = CavityParams::new(CavityKind::Dispersive, 0.2, 1.0);
    let c2 = CavityParams::new(CavityKind::Damped, 0.2, 1.0);

    // Design stationary feedback coefficients for this cavity pairing.
    let probe = NetworkParams::ideal(c1, c2, 0.0, DVector::zeros(4));
    let (base, ell) = ideal_uncontrolled(&probe)?;
    let design = solve_riccati(&base.a, &base.d, &ell)?;

    // Close the loop at unit gain and integrate from V0 = 2I.
    let params = NetworkParams::ideal(c1, c2, 1.0, design.f_bar);
    let net = build_ideal(&params)?;
    let v0 = DMatrix::identity(4, 4) * 2.0;
    let traj = propagate_lyapunov(&net.a, &net.d, &v0, 12.0, 1e-3)?;

    let v_end = CovarianceMatrix::new(traj.covariances.last().unwrap().clone())?;
    println!("EN at t = 12: {:.4}", log_negativity(&v_end)?);
    Ok(())
}
