//! Exact reference trajectories: dense propagation of the untransformed
//! constant-coefficient equation, mapped into the frame the averaged
//! equations live in. Nothing here touches the averaged right-hand sides,
//! so a disagreement always indicts the equations under test.

use crate::ansatz::RelevantObservables;
use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, CMatrix, C64};
use crate::models::RfModel;
use crate::ode::{self, OdeOptions};
use crate::tol;

/// Reference moments on a grid, with the states they came from.
#[derive(Clone, Debug)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    /// `moments[i][m]` is the m-th tracked moment at `times[i]`.
    pub moments: Vec<Vec<f64>>,
    pub states: Vec<CMatrix>,
}

impl OracleTrajectory {
    /// Column `m` as a time series.
    pub fn component(&self, m: usize) -> Vec<f64> {
        self.moments.iter().map(|row| row[m]).collect()
    }
}

/// Propagates `d rho/dt = (L0 + lambda L1) rho` densely from `rho0`, then
/// undoes the free motion with `e^{-L0 t}` at every node and reads the
/// tracked moments there.
pub fn exact_trajectory(
    model: &RfModel,
    obs: &RelevantObservables,
    lambda: f64,
    rho0: &CMatrix,
    times: &[f64],
    ode_tol: f64,
) -> Result<OracleTrajectory> {
    if rho0.nrows() != model.dim() || rho0.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: rho0.nrows(),
        });
    }
    if obs.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: obs.dim(),
        });
    }
    let deviation = hermiticity_defect(rho0);
    if deviation > tol::HERMITICITY {
        return Err(Error::NotHermitian {
            deviation,
            tol: tol::HERMITICITY,
        });
    }
    if (rho0.trace() - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::InvalidParameter(
            "initial state must have unit trace".into(),
        ));
    }

    let full = model.rotating_frame_generator(lambda);
    let mut f = |_t: f64, y: &CMatrix| Ok(full.apply(y));
    let opts = OdeOptions {
        rtol: ode_tol,
        atol: 1e-2 * ode_tol,
        ..OdeOptions::default()
    };
    let sol = ode::integrate_to_grid(&mut f, times, rho0.clone(), &opts)?;

    let mut moments = Vec::with_capacity(times.len());
    let mut states = Vec::with_capacity(times.len());
    for (t, rot) in times.iter().zip(&sol.values) {
        let undo = model.l0.scale_re(-t).expm();
        let rho = undo.apply(rot);
        moments.push(obs.moments(&rho));
        states.push(rho);
    }
    Ok(OracleTrajectory {
        times: times.to_vec(),
        moments,
        states,
    })
}
