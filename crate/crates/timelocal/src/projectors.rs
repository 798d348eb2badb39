//! Projection superoperators built from moment-tracking state families.
//!
//! For a family `rho_ans(E)` over observables `P_m`, the projector at
//! moments `E` acts as
//!
//! `P_E X = rho_ans(E) Tr X + sum_m (d rho_ans/d E_m) [Tr(P_m X) - E_m Tr X]`.
//!
//! The consistency conditions of the family make this idempotent and
//! trace-preserving, give the lag property `P_E P_E' = P_E` across
//! different moment vectors, and force the time derivative along any
//! unit-trace trajectory to annihilate the trajectory's own state. Those
//! laws are what the reduced dynamics downstream relies on; they are
//! checked here, not assumed.

use std::sync::Arc;

use crate::ansatz::AnsatzFamily;
use crate::error::{Error, Result};
use crate::linalg::{
    hermiticity_defect, kron, partial_trace_b, vectorize, CMatrix, SuperOp, C64,
};
use crate::propagator::StateTrajectory;
use crate::tol;

/// A time-dependent projector `P(t)` with its derivative `dP/dt`.
pub struct ProjectorFamily {
    dim: usize,
    eval: Box<dyn Fn(f64) -> Result<SuperOp> + Send + Sync>,
    deriv: Box<dyn Fn(f64) -> Result<SuperOp> + Send + Sync>,
}

impl ProjectorFamily {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64) -> Result<SuperOp> + Send + Sync + 'static,
        deriv: impl Fn(f64) -> Result<SuperOp> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            eval: Box::new(eval),
            deriv: Box::new(deriv),
        }
    }

    /// Time-independent projector; the derivative vanishes.
    pub fn constant(p: SuperOp) -> Self {
        let dim = p.dim();
        let zero = SuperOp::zero(dim);
        Self::new(dim, move |_| Ok(p.clone()), move |_| Ok(zero.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Result<SuperOp> {
        (self.eval)(t)
    }

    pub fn deriv(&self, t: f64) -> Result<SuperOp> {
        (self.deriv)(t)
    }

    /// The complement `Q(t) = 1 - P(t)`.
    pub fn complement(&self, t: f64) -> Result<SuperOp> {
        Ok(&SuperOp::identity(self.dim) - &self.eval(t)?)
    }
}

/// Projector of the family at a fixed moment vector.
pub fn kg_parametric(family: &dyn AnsatzFamily, e: &[f64]) -> Result<SuperOp> {
    let obs = family.observables();
    let rho = family.eval(e)?;
    let grads = family.grad(e)?;
    let dim = obs.dim();
    let ops: Vec<CMatrix> = obs.ops().to_vec();
    let e = e.to_vec();
    Ok(SuperOp::from_action(dim, |x| {
        let trx = x.trace();
        let mut out = &rho * trx;
        for ((g, p), &em) in grads.iter().zip(&ops).zip(&e) {
            out += g * ((p * x).trace() - trx * C64::new(em, 0.0));
        }
        out
    }))
}

/// Projector of the family at the moments carried by `rho`.
pub fn kg_nonlinear(family: &dyn AnsatzFamily, rho: &CMatrix) -> Result<SuperOp> {
    let e = family.observables().moments(rho);
    kg_parametric(family, &e)
}

/// Projector family along a state trajectory: the moments become
/// `E_m(t) = Tr(P_m rho(t))` and the derivative follows by the chain rule,
/// `dP/dt = sum_m dE_m/dt dP_E/dE_m`, with the moment derivatives taken
/// from the trajectory and the parametric derivatives by central
/// differences.
pub fn kg_time_dependent(
    family: Arc<dyn AnsatzFamily>,
    traj: Arc<StateTrajectory>,
) -> ProjectorFamily {
    let dim = family.observables().dim();
    let (fam_eval, traj_eval) = (family.clone(), traj.clone());
    let eval = move |t: f64| {
        let rho = traj_eval.value(t)?;
        let e = fam_eval.observables().moments(&rho);
        kg_parametric(fam_eval.as_ref(), &e)
    };
    let deriv = move |t: f64| {
        let rho = traj.value(t)?;
        let rhodot = traj.derivative(t)?;
        let e = family.observables().moments(&rho);
        let edot = family.observables().moments(&rhodot);
        let mut out = SuperOp::zero(dim);
        for m in 0..e.len() {
            let h = tol::PROJECTOR_FD_STEP * (1.0 + e[m].abs());
            let mut up = e.clone();
            let mut dn = e.clone();
            up[m] += h;
            dn[m] -= h;
            let diff = &kg_parametric(family.as_ref(), &up)?
                - &kg_parametric(family.as_ref(), &dn)?;
            out = &out + &diff.scale_re(edot[m] / (2.0 * h));
        }
        Ok(out)
    };
    ProjectorFamily::new(dim, eval, deriv)
}

/// Tensor-factorized projector `P X = Tr_B(X) (x) rho_b` for a system of
/// dimension `dim_s` coupled to a bath of dimension `dim_b`.
pub fn argyres_kelley(dim_s: usize, dim_b: usize, rho_b: &CMatrix) -> Result<SuperOp> {
    if rho_b.shape() != (dim_b, dim_b) {
        return Err(Error::DimensionMismatch {
            expected: dim_b,
            got: rho_b.nrows(),
        });
    }
    let dev = hermiticity_defect(rho_b);
    if dev > tol::HERMITICITY {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: tol::HERMITICITY,
        });
    }
    if (rho_b.trace() - C64::new(1.0, 0.0)).norm() > tol::HERMITICITY {
        return Err(Error::InvalidParameter(
            "bath state must have unit trace".into(),
        ));
    }
    let rho_b = rho_b.clone();
    Ok(SuperOp::from_action(dim_s * dim_b, move |x| {
        kron(&partial_trace_b(x, dim_s, dim_b), &rho_b)
    }))
}

/// Largest violation of `Tr(P X) = Tr X` over a matrix unit basis.
pub fn trace_preservation_defect(p: &SuperOp) -> f64 {
    let d = p.dim();
    let id_row = vectorize(&CMatrix::identity(d, d)).adjoint();
    let diff = &id_row * p.mat() - id_row;
    diff.iter().fold(0.0_f64, |acc, x| acc.max(x.norm()))
}

/// Structural defects of a projector family, maximized over the given
/// times (and over time pairs for the lag law).
pub struct ProjectorLaws {
    pub idempotency: f64,
    pub trace_preservation: f64,
    pub lag: f64,
}

pub fn check_projector_laws(family: &ProjectorFamily, times: &[f64]) -> Result<ProjectorLaws> {
    let mut laws = ProjectorLaws {
        idempotency: 0.0,
        trace_preservation: 0.0,
        lag: 0.0,
    };
    let ps: Vec<SuperOp> = times
        .iter()
        .map(|&t| family.eval(t))
        .collect::<Result<_>>()?;
    for p in &ps {
        laws.idempotency = laws
            .idempotency
            .max((&p.compose(p) - p).max_abs());
        laws.trace_preservation = laws.trace_preservation.max(trace_preservation_defect(p));
    }
    for pt in &ps {
        for ps_ in &ps {
            laws.lag = laws.lag.max((&pt.compose(ps_) - pt).max_abs());
        }
    }
    Ok(laws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{GibbsAnsatz, RelevantObservables, TwoLevelAnsatz};
    use crate::linalg::max_abs;
    use crate::models::{self, hermiticity_preservation_defect, RfParams};
    use crate::ode::{self, OdeOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn xz_gibbs() -> GibbsAnsatz {
        let [_, sx, _, sz] = crate::linalg::pauli();
        GibbsAnsatz::new(RelevantObservables::new(vec![sx, sz]).unwrap())
    }

    #[test]
    fn parametric_projector_is_idempotent_and_trace_preserving() {
        let family = xz_gibbs();
        for e in [[0.3, -0.2], [0.0, 0.0], [-0.4, 0.5]] {
            let p = kg_parametric(&family, &e).unwrap();
            assert!((&p.compose(&p) - &p).max_abs() < tol::PROJECTOR_IDEMPOTENCY);
            assert!(trace_preservation_defect(&p) < tol::PROJECTOR_TRACE_PRESERVATION);
            assert!(hermiticity_preservation_defect(&p) < 1e-9);
        }
        let sqrt_family = TwoLevelAnsatz::with_sqrt_g(0.4);
        let p = kg_parametric(&sqrt_family, &[0.36]).unwrap();
        assert!((&p.compose(&p) - &p).max_abs() < tol::PROJECTOR_IDEMPOTENCY);
        assert!(trace_preservation_defect(&p) < tol::PROJECTOR_TRACE_PRESERVATION);
    }

    #[test]
    fn projectors_at_different_moments_lag_onto_the_left_factor() {
        let family = xz_gibbs();
        let pa = kg_parametric(&family, &[0.2, 0.1]).unwrap();
        let pb = kg_parametric(&family, &[-0.3, 0.25]).unwrap();
        assert!((&pa.compose(&pb) - &pa).max_abs() < tol::PROJECTOR_LAG);
        assert!((&pb.compose(&pa) - &pb).max_abs() < tol::PROJECTOR_LAG);
    }

    #[test]
    fn projection_of_a_state_is_the_family_state_at_its_moments() {
        let family = xz_gibbs();
        let [id, sx, sy, sz] = crate::linalg::pauli();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            // Unit-trace Hermitian input with an off-family component.
            let (x, y, z) = (
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.4..0.4),
            );
            let rho = (&id
                + &sx * C64::new(x, 0.0)
                + &sy * C64::new(y, 0.0)
                + &sz * C64::new(z, 0.0))
                * C64::new(0.5, 0.0);
            let p = kg_nonlinear(&family, &rho).unwrap();
            let projected = p.apply(&rho);
            let expected = family.eval(&family.observables().moments(&rho)).unwrap();
            assert!(
                max_abs(&(&projected - &expected)) < tol::PROJECTOR_STATE_CONSISTENCY,
                "{:.3e}",
                max_abs(&(&projected - &expected))
            );
        }
    }

    #[test]
    fn tensor_projector_traces_out_the_bath() {
        let mut rho_b = CMatrix::zeros(2, 2);
        rho_b[(0, 0)] = C64::new(0.7, 0.0);
        rho_b[(1, 1)] = C64::new(0.3, 0.0);
        let p = argyres_kelley(2, 2, &rho_b).unwrap();
        assert!((&p.compose(&p) - &p).max_abs() < 1e-14);
        assert!(trace_preservation_defect(&p) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = CMatrix::from_fn(4, 4, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let expected = kron(&partial_trace_b(&x, 2, 2), &rho_b);
        assert!(max_abs(&(p.apply(&x) - expected)) < 1e-14);

        let mut skew = rho_b.clone();
        skew[(0, 1)] = C64::new(0.1, 0.2);
        assert!(matches!(
            argyres_kelley(2, 2, &skew),
            Err(Error::NotHermitian { .. })
        ));
        let double = &rho_b * C64::new(2.0, 0.0);
        assert!(matches!(
            argyres_kelley(2, 2, &double),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn constant_family_has_a_vanishing_derivative() {
        let family = xz_gibbs();
        let p = kg_parametric(&family, &[0.1, 0.2]).unwrap();
        let constant = ProjectorFamily::constant(p.clone());
        assert!((&constant.eval(0.7).unwrap() - &p).max_abs() == 0.0);
        assert!(constant.deriv(0.7).unwrap().max_abs() == 0.0);
        assert!(
            (&constant.complement(0.0).unwrap() - &(&SuperOp::identity(2) - &p)).max_abs() == 0.0
        );
    }

    // The derivative of the time-dependent projector annihilates the state
    // of the trajectory that drives it, for a trajectory produced by a
    // master equation.
    #[test]
    fn derivative_annihilates_the_driving_trajectory() {
        let model = models::resonance_fluorescence(RfParams {
            omega: 1.2,
            gamma0: 1.0,
            n_bath: 0.0,
        })
        .unwrap();
        let gen = model.interaction_generator().unwrap();
        let [id, sx, _, sz] = crate::linalg::pauli();
        let rho0 = (&id + &sx * C64::new(0.25, 0.0) + &sz * C64::new(0.4, 0.0))
            * C64::new(0.5, 0.0);
        let traj = StateTrajectory::solve(
            &gen,
            0.35,
            &rho0,
            &ode::grid(0.0, 2.0, 257),
            &OdeOptions::default(),
        )
        .unwrap();
        let traj = Arc::new(traj);
        let family: Arc<dyn AnsatzFamily> = Arc::new(xz_gibbs());
        let proj = kg_time_dependent(family, traj.clone());

        let times = [0.1, 0.6, 1.3, 1.9];
        let laws = check_projector_laws(&proj, &times).unwrap();
        assert!(laws.idempotency < tol::PROJECTOR_IDEMPOTENCY);
        assert!(laws.trace_preservation < tol::PROJECTOR_TRACE_PRESERVATION);
        assert!(laws.lag < tol::PROJECTOR_LAG);

        for &t in &times {
            let rho = traj.value(t).unwrap();
            let pdot = proj.deriv(t).unwrap();
            assert!(
                max_abs(&pdot.apply(&rho)) < tol::DERIVATIVE_ANNIHILATION,
                "t = {t}: {:.3e}",
                max_abs(&pdot.apply(&rho))
            );
            // State consistency along the trajectory.
            let p = proj.eval(t).unwrap();
            let expected = kg_nonlinear(&xz_gibbs(), &rho).unwrap();
            assert!((&p - &expected).max_abs() < 1e-12);
        }

        // Chain-rule derivative against direct time differencing.
        let t = 0.9;
        let h = 1e-5;
        let fd = (&proj.eval(t + h).unwrap() - &proj.eval(t - h).unwrap()).scale_re(0.5 / h);
        assert!((&fd - &proj.deriv(t).unwrap()).max_abs() < 1e-4);
    }

    // The annihilation law depends only on differentiability and unit
    // trace, not on the trajectory solving any particular equation.
    #[test]
    fn derivative_annihilates_a_hand_built_trajectory() {
        let [id, sx, sy, sz] = crate::linalg::pauli();
        let bloch = |t: f64| (0.3 * t.cos(), 0.15 + 0.1 * t, 0.3 * t.sin());
        let bloch_dot = |t: f64| (-0.3 * t.sin(), 0.1, 0.3 * t.cos());
        let times = ode::grid(0.0, 1.0, 101);
        let values: Vec<CMatrix> = times
            .iter()
            .map(|&t| {
                let (x, y, z) = bloch(t);
                (&id + &sx * C64::new(x, 0.0) + &sy * C64::new(y, 0.0) + &sz * C64::new(z, 0.0))
                    * C64::new(0.5, 0.0)
            })
            .collect();
        let derivs: Vec<CMatrix> = times
            .iter()
            .map(|&t| {
                let (x, y, z) = bloch_dot(t);
                (&sx * C64::new(x, 0.0) + &sy * C64::new(y, 0.0) + &sz * C64::new(z, 0.0))
                    * C64::new(0.5, 0.0)
            })
            .collect();
        let traj = Arc::new(StateTrajectory::from_nodes(times, values, derivs).unwrap());
        let family: Arc<dyn AnsatzFamily> = Arc::new(xz_gibbs());
        let proj = kg_time_dependent(family, traj.clone());
        for &t in &[0.05, 0.4, 0.77, 0.99] {
            let rho = traj.value(t).unwrap();
            let pdot = proj.deriv(t).unwrap();
            assert!(
                max_abs(&pdot.apply(&rho)) < tol::DERIVATIVE_ANNIHILATION,
                "t = {t}: {:.3e}",
                max_abs(&pdot.apply(&rho))
            );
        }
    }
}
