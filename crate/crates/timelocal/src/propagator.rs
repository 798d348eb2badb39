//! Propagation of `d rho/dt = lambda L(t) rho`: the full propagator, the
//! iterated time-ordered integrals of the generator, and state
//! trajectories.
//!
//! Solutions are stored on a caller-chosen grid together with exact nodal
//! derivatives, and evaluated between nodes by cubic Hermite interpolation.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, SuperOp, C64};
use crate::models::Generator;
use crate::ode::{self, OdeOptions};
use crate::tol;

fn interp_matrix(times: &[f64], values: &[CMatrix], derivs: &[CMatrix], t: f64) -> Result<CMatrix> {
    let (i, theta) = ode::locate_interval(times, t)?;
    let h = times[i + 1] - times[i];
    Ok(ode::hermite(
        &values[i],
        &values[i + 1],
        &derivs[i],
        &derivs[i + 1],
        h,
        theta,
    ))
}

fn interp_matrix_deriv(
    times: &[f64],
    values: &[CMatrix],
    derivs: &[CMatrix],
    t: f64,
) -> Result<CMatrix> {
    let (i, theta) = ode::locate_interval(times, t)?;
    let h = times[i + 1] - times[i];
    Ok(ode::hermite_deriv(
        &values[i],
        &values[i + 1],
        &derivs[i],
        &derivs[i + 1],
        h,
        theta,
    ))
}

/// The propagator `U(t)` of `dU/dt = lambda L(t) U`, `U(t_start) = 1`, on a
/// stored grid.
pub struct PropagatorGrid {
    dim: usize,
    lambda: f64,
    times: Vec<f64>,
    values: Vec<CMatrix>,
    derivs: Vec<CMatrix>,
}

impl PropagatorGrid {
    pub fn solve(
        gen: &Generator,
        lambda: f64,
        times: &[f64],
        opts: &OdeOptions,
    ) -> Result<Self> {
        let dim = gen.dim();
        let d2 = dim * dim;
        let cl = C64::new(lambda, 0.0);
        let mut rhs = |t: f64, u: &CMatrix| Ok(gen.eval(t)?.into_mat() * u * cl);
        let sol = ode::integrate_to_grid(&mut rhs, times, CMatrix::identity(d2, d2), opts)?;
        Ok(Self {
            dim,
            lambda,
            times: sol.times,
            values: sol.values,
            derivs: sol.derivs,
        })
    }

    /// Solve on the default uniform grid.
    pub fn solve_uniform(gen: &Generator, lambda: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::solve(
            gen,
            lambda,
            &ode::grid(t0, t1, tol::GRID_POINTS),
            &OdeOptions::default(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// `U(t)`, interpolated between nodes.
    pub fn value(&self, t: f64) -> Result<SuperOp> {
        Ok(SuperOp::new(
            self.dim,
            interp_matrix(&self.times, &self.values, &self.derivs, t)?,
        ))
    }

    /// Stored node data `(t_i, U(t_i), dU/dt(t_i))`.
    pub fn node(&self, i: usize) -> (f64, SuperOp, SuperOp) {
        (
            self.times[i],
            SuperOp::new(self.dim, self.values[i].clone()),
            SuperOp::new(self.dim, self.derivs[i].clone()),
        )
    }
}

/// `dU/dt` at `t` through the equation of motion: `lambda L(t) U(t)` with
/// the interpolated `U`. At grid nodes this reproduces the stored
/// derivative exactly.
pub fn derivative_u(grid: &PropagatorGrid, gen: &Generator, t: f64) -> Result<SuperOp> {
    Ok(gen
        .eval(t)?
        .scale_re(grid.lambda())
        .compose(&grid.value(t)?))
}

/// Iterated time-ordered integrals `G_k` of the generator, transported in
/// one pass through `dG_k/dt = L(t) G_{k-1}`, `G_0 = 1`, `G_k(t_start) = 0`.
/// The `G_k` do not depend on the coupling, so one solve serves a whole
/// sweep.
pub struct DysonTerms {
    dim: usize,
    order: usize,
    times: Vec<f64>,
    values: Vec<Vec<CMatrix>>,
    derivs: Vec<Vec<CMatrix>>,
}

impl DysonTerms {
    pub fn solve(
        gen: &Generator,
        order: usize,
        times: &[f64],
        opts: &OdeOptions,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "iterated integrals need order at least one".into(),
            ));
        }
        let dim = gen.dim();
        let d2 = dim * dim;
        let mut rhs = |t: f64, y: &Vec<CMatrix>| {
            let l = gen.eval(t)?.into_mat();
            let mut out = Vec::with_capacity(order);
            for k in 0..order {
                if k == 0 {
                    out.push(l.clone());
                } else {
                    out.push(&l * &y[k - 1]);
                }
            }
            Ok(out)
        };
        let y0 = vec![CMatrix::zeros(d2, d2); order];
        let sol = ode::integrate_to_grid(&mut rhs, times, y0, opts)?;
        Ok(Self {
            dim,
            order,
            times: sol.times,
            values: sol.values,
            derivs: sol.derivs,
        })
    }

    pub fn solve_uniform(gen: &Generator, order: usize, t0: f64, t1: f64) -> Result<Self> {
        Self::solve(
            gen,
            order,
            &ode::grid(t0, t1, tol::GRID_POINTS),
            &OdeOptions::default(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// `G_k(t)`; `k = 0` is the identity, higher `k` up to the stored order.
    pub fn value(&self, k: usize, t: f64) -> Result<SuperOp> {
        let d2 = self.dim * self.dim;
        if k == 0 {
            // Still validate the time so k = 0 behaves like the others.
            ode::locate_interval(&self.times, t)?;
            return Ok(SuperOp::identity(self.dim));
        }
        if k > self.order {
            return Err(Error::InvalidParameter(format!(
                "order {k} exceeds stored order {}",
                self.order
            )));
        }
        let vals: Vec<&CMatrix> = self.values.iter().map(|v| &v[k - 1]).collect();
        let (i, theta) = ode::locate_interval(&self.times, t)?;
        let h = self.times[i + 1] - self.times[i];
        let m = ode::hermite(
            vals[i],
            vals[i + 1],
            &self.derivs[i][k - 1],
            &self.derivs[i + 1][k - 1],
            h,
            theta,
        );
        debug_assert_eq!(m.shape(), (d2, d2));
        Ok(SuperOp::new(self.dim, m))
    }

    /// Truncated expansion `sum_{k=0}^{order} lambda^k G_k(t)`.
    pub fn truncated_sum(&self, lambda: f64, t: f64) -> Result<SuperOp> {
        let mut acc = SuperOp::identity(self.dim);
        let mut weight = 1.0;
        for k in 1..=self.order {
            weight *= lambda;
            acc = &acc + &self.value(k, t)?.scale_re(weight);
        }
        Ok(acc)
    }
}

/// A state trajectory `rho(t)` with exact nodal derivatives. Either solved
/// from a generator or assembled from caller-provided nodes (any
/// differentiable trajectory can serve as input elsewhere).
pub struct StateTrajectory {
    times: Vec<f64>,
    values: Vec<CMatrix>,
    derivs: Vec<CMatrix>,
}

impl StateTrajectory {
    pub fn solve(
        gen: &Generator,
        lambda: f64,
        rho0: &CMatrix,
        times: &[f64],
        opts: &OdeOptions,
    ) -> Result<Self> {
        let dim = gen.dim();
        if rho0.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rho0.nrows(),
            });
        }
        let cl = C64::new(lambda, 0.0);
        let mut rhs = |t: f64, rho: &CMatrix| Ok(gen.apply(t, rho)? * cl);
        let sol = ode::integrate_to_grid(&mut rhs, times, rho0.clone(), opts)?;
        Ok(Self {
            times: sol.times,
            values: sol.values,
            derivs: sol.derivs,
        })
    }

    /// Wraps precomputed nodes. `values[i]` and `derivs[i]` belong to
    /// `times[i]`; times must be strictly increasing.
    pub fn from_nodes(times: Vec<f64>, values: Vec<CMatrix>, derivs: Vec<CMatrix>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::TooFewPoints {
                need: 2,
                got: times.len(),
            });
        }
        if times.len() != values.len() || times.len() != derivs.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len().min(derivs.len()),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            values,
            derivs,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.values[0].nrows()
    }

    pub fn value(&self, t: f64) -> Result<CMatrix> {
        interp_matrix(&self.times, &self.values, &self.derivs, t)
    }

    /// Derivative of the interpolant; at nodes this is the stored exact
    /// derivative.
    pub fn derivative(&self, t: f64) -> Result<CMatrix> {
        interp_matrix_deriv(&self.times, &self.values, &self.derivs, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fit::log_log_fit;
    use crate::linalg::{expm, max_abs, pauli};
    use crate::models::{self, RfParams};

    fn rf_interaction() -> Generator {
        models::resonance_fluorescence(RfParams {
            omega: 1.1,
            gamma0: 1.0,
            n_bath: 0.2,
        })
        .unwrap()
        .interaction_generator()
        .unwrap()
    }

    fn constant_test_generator() -> (Generator, SuperOp) {
        let model = models::resonance_fluorescence(RfParams::default()).unwrap();
        let l = model.rotating_frame_generator(0.7);
        (Generator::constant(l.clone()), l)
    }

    #[test]
    fn propagator_starts_at_identity() {
        let gen = rf_interaction();
        let grid = PropagatorGrid::solve(
            &gen,
            0.3,
            &ode::grid(0.0, 2.0, 65),
            &OdeOptions::default(),
        )
        .unwrap();
        let (t0, u0, _) = grid.node(0);
        assert_eq!(t0, 0.0);
        assert!(max_abs(&(u0.mat() - CMatrix::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn propagator_satisfies_the_cocycle_property() {
        let gen = rf_interaction();
        let opts = OdeOptions::default();
        let full = PropagatorGrid::solve(&gen, 0.4, &ode::grid(0.0, 2.0, 129), &opts).unwrap();
        let tail = PropagatorGrid::solve(&gen, 0.4, &ode::grid(1.0, 2.0, 65), &opts).unwrap();
        let composed = tail.value(2.0).unwrap().compose(&full.value(1.0).unwrap());
        let direct = full.value(2.0).unwrap();
        assert!((&direct - &composed).max_abs() < 1e-9);
    }

    #[test]
    fn constant_generator_reproduces_the_exponential() {
        let (gen, l) = constant_test_generator();
        let lambda = 0.9;
        let grid =
            PropagatorGrid::solve(&gen, lambda, &ode::grid(0.0, 1.5, 65), &OdeOptions::default())
                .unwrap();
        let direct = expm(&(l.mat() * C64::new(lambda * 1.5, 0.0)));
        assert!(max_abs(&(grid.value(1.5).unwrap().mat() - direct)) < 1e-10);
    }

    #[test]
    fn dense_output_matches_a_fresh_solve_between_nodes() {
        let gen = rf_interaction();
        let lambda = 0.5;
        let grid = PropagatorGrid::solve(
            &gen,
            lambda,
            &ode::grid(0.0, 3.0, tol::GRID_POINTS),
            &OdeOptions::default(),
        )
        .unwrap();
        let t_probe = 1.2345678;
        let fresh = PropagatorGrid::solve(
            &gen,
            lambda,
            &[0.0, t_probe],
            &OdeOptions::default(),
        )
        .unwrap();
        let diff = &grid.value(t_probe).unwrap() - &fresh.value(t_probe).unwrap();
        assert!(diff.max_abs() < 1e-10);
    }

    #[test]
    fn equation_of_motion_derivative_is_exact_at_nodes_and_tight_between() {
        let gen = rf_interaction();
        let grid = PropagatorGrid::solve(
            &gen,
            0.6,
            &ode::grid(0.0, 2.0, tol::GRID_POINTS),
            &OdeOptions::default(),
        )
        .unwrap();
        let (t_node, _, stored) = grid.node(100);
        let via_identity = derivative_u(&grid, &gen, t_node).unwrap();
        assert!((&via_identity - &stored).max_abs() < 1e-13);

        // Central difference of the interpolant against the identity.
        let t = 0.87654;
        let h = 1e-5;
        let fd = (&grid.value(t + h).unwrap() - &grid.value(t - h).unwrap()).scale_re(0.5 / h);
        let exact = derivative_u(&grid, &gen, t).unwrap();
        assert!((&fd - &exact).max_abs() < 1e-6);
    }

    #[test]
    fn iterated_integrals_start_at_zero_below_the_identity() {
        let gen = rf_interaction();
        let dyson =
            DysonTerms::solve(&gen, 3, &ode::grid(0.0, 1.0, 65), &OdeOptions::default()).unwrap();
        assert!((&dyson.value(0, 0.0).unwrap() - &SuperOp::identity(2)).max_abs() < 1e-15);
        for k in 1..=3 {
            assert!(dyson.value(k, 0.0).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn constant_generator_iterated_integrals_are_monomials() {
        let (gen, l) = constant_test_generator();
        let t1: f64 = 1.7;
        let dyson =
            DysonTerms::solve(&gen, 3, &ode::grid(0.0, 2.0, 129), &OdeOptions::default()).unwrap();
        let mut power = SuperOp::identity(2);
        let mut factorial = 1.0;
        for k in 1..=3 {
            power = power.compose(&l);
            factorial *= k as f64;
            let expected = power.scale_re(t1.powi(k as i32) / factorial);
            let got = dyson.value(k, t1).unwrap();
            assert!(
                (&got - &expected).max_abs() < 1e-10,
                "order {k} mismatch: {:.3e}",
                (&got - &expected).max_abs()
            );
        }
    }

    #[test]
    fn truncation_error_scales_with_the_first_dropped_order() {
        let gen = rf_interaction();
        let t1 = 1.0;
        let times = ode::grid(0.0, t1, 129);
        let opts = OdeOptions::default();
        let dyson = DysonTerms::solve(&gen, 3, &times, &opts).unwrap();
        let lambdas: Vec<f64> = (0..6).map(|i| 0.05 * 1.32_f64.powi(i)).collect();
        let mut errs = vec![Vec::new(); 3];
        for &lambda in &lambdas {
            let u = PropagatorGrid::solve(&gen, lambda, &times, &opts)
                .unwrap()
                .value(t1)
                .unwrap();
            for (k, err) in errs.iter_mut().enumerate() {
                let truncated = DysonTerms {
                    dim: dyson.dim,
                    order: k + 1,
                    times: dyson.times.clone(),
                    values: dyson
                        .values
                        .iter()
                        .map(|v| v[..=k].to_vec())
                        .collect(),
                    derivs: dyson
                        .derivs
                        .iter()
                        .map(|v| v[..=k].to_vec())
                        .collect(),
                }
                .truncated_sum(lambda, t1)
                .unwrap();
                err.push((&u - &truncated).max_abs());
            }
        }
        for (k, err) in errs.iter().enumerate() {
            let fit = log_log_fit(&lambdas, err)
                .unwrap()
                .require_r2(tol::FIT_MIN_R2)
                .unwrap();
            let expected = (k + 2) as f64;
            assert!(
                (fit.slope - expected).abs() < tol::SLOPE_BAND,
                "order {} slope {:.3} (expected {expected})",
                k + 1,
                fit.slope
            );
        }
    }

    #[test]
    fn state_trajectory_interpolates_and_differentiates_consistently() {
        let gen = rf_interaction();
        let [id, _, _, sz] = pauli();
        let rho0 = (&id + &sz * C64::new(0.5, 0.0)) * C64::new(0.5, 0.0);
        let traj = StateTrajectory::solve(
            &gen,
            0.3,
            &rho0,
            &ode::grid(0.0, 2.0, tol::GRID_POINTS),
            &OdeOptions::default(),
        )
        .unwrap();
        // Trace is conserved by a trace-annihilating generator.
        for &t in &[0.0, 0.733, 1.5, 2.0] {
            let rho = traj.value(t).unwrap();
            assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
        // Interpolant derivative against central differences.
        let (t, h) = (1.1357, 1e-5);
        let fd = (traj.value(t + h).unwrap() - traj.value(t - h).unwrap()) * C64::new(0.5 / h, 0.0);
        assert!(max_abs(&(traj.derivative(t).unwrap() - fd)) < 1e-8);
    }

    #[test]
    fn from_nodes_validates_shapes_and_order() {
        let m = CMatrix::identity(2, 2);
        assert!(StateTrajectory::from_nodes(vec![0.0], vec![m.clone()], vec![m.clone()]).is_err());
        assert!(StateTrajectory::from_nodes(
            vec![0.0, 1.0],
            vec![m.clone()],
            vec![m.clone(), m.clone()]
        )
        .is_err());
        assert!(StateTrajectory::from_nodes(
            vec![1.0, 0.0],
            vec![m.clone(), m.clone()],
            vec![m.clone(), m.clone()]
        )
        .is_err());
        assert!(StateTrajectory::from_nodes(
            vec![0.0, 1.0],
            vec![m.clone(), m.clone()],
            vec![m.clone(), m]
        )
        .is_ok());
    }
}
