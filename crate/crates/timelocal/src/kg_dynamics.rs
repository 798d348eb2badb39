//! Mean dynamics of the tracked moments: the averaged first- and
//! second-order evolution equations for `E(t)`, their adaptive integration,
//! and classification of a run against closed-form solution branches.
//!
//! The second-order right-hand side carries three contributions: the
//! averaged generator trace at order one, the memory trace through the
//! running integral `G_1(t) = int_{t0}^t L(s) ds` at order two, and the
//! subtracted product-of-gradients correction at order two. `G_1` is applied
//! to the ansatz state at the current moment vector; no memory in `E` enters.

use std::sync::Arc;

use nalgebra::DVector;

use crate::ansatz::AnsatzFamily;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, SuperOp, C64};
use crate::models::Generator;
use crate::ode::{self, GridSolution, OdeOptions, StopReason};
use crate::tol;

/// Storage-grid size used by [`solve_mean`] when the caller does not
/// provide a grid.
pub const DEFAULT_GRID_NODES: usize = 241;

/// `dE/dt` of the naive averaged equation,
/// `lambda Tr(P_m L(t) rho_ans(E))` per tracked moment.
pub fn first_order_rhs(
    family: &dyn AnsatzFamily,
    gen: &Generator,
    t: f64,
    e: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    if !family.domain().contains(e) {
        return Err(Error::DomainViolation);
    }
    let l = gen.eval(t)?;
    moment_rate(family, &l, None, e, lambda)
}

/// `dE/dt` with the order-two corrections: the memory trace
/// `lambda^2 Tr(P_m L(t) G_1(t) rho_ans(E))` and the subtracted correction
/// `lambda^2 Tr(P_m A B)` built from the ansatz-space matrices
/// `A = sum_k Tr(P_k L rho_ans) d rho_ans/dE_k` and
/// `B = sum_j Tr(P_j G_1 rho_ans) d rho_ans/dE_j`.
///
/// `iterated` is the running integral `G_1(t)`; the order-one term is
/// assembled exactly as in [`first_order_rhs`], so dropping the `lambda^2`
/// contributions recovers it term by term.
pub fn second_order_rhs(
    family: &dyn AnsatzFamily,
    gen: &Generator,
    iterated: &SuperOp,
    t: f64,
    e: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    if !family.domain().contains(e) {
        return Err(Error::DomainViolation);
    }
    let obs = family.observables();
    if iterated.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            got: iterated.dim(),
        });
    }
    let l = gen.eval(t)?;
    moment_rate(family, &l, Some(iterated), e, lambda)
}

// Shared assembly for both orders. Domain membership is the caller's
// responsibility: the area just outside the domain must stay evaluable so
// trial integration stages near an exit do not abort before the guard can
// localize the crossing.
fn moment_rate(
    family: &dyn AnsatzFamily,
    l: &SuperOp,
    iterated: Option<&SuperOp>,
    e: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let obs = family.observables();
    let rho = family.eval(e)?;
    let first = obs.moments(&l.apply(&rho));
    let Some(g1) = iterated else {
        return Ok(first.into_iter().map(|v| lambda * v).collect());
    };

    let g1rho = g1.apply(&rho);
    let memory = obs.moments(&l.apply(&g1rho));
    let weights = obs.moments(&g1rho);
    let grads = family.grad(e)?;
    let d = obs.dim();
    let mut a = CMatrix::zeros(d, d);
    let mut b = CMatrix::zeros(d, d);
    for ((g, &fk), &bk) in grads.iter().zip(&first).zip(&weights) {
        a += g * C64::new(fk, 0.0);
        b += g * C64::new(bk, 0.0);
    }
    let correction = obs.moments(&(&a * &b));

    let l2 = lambda * lambda;
    Ok((0..first.len())
        .map(|m| lambda * first[m] + l2 * (memory[m] - correction[m]))
        .collect())
}

// Rate of the chart coordinate y = +-sqrt(E) for a single-moment two-level
// family. The gradient-product correction is dropped because it vanishes
// identically here: the gradient of any single-moment family is traceless,
// a traceless 2x2 matrix squares to a multiple of the identity, and the
// tracked observable is traceless.
//
// Outside the cutoff band the chain rule dy/dt = (dE/dt) / (2y) is exact.
// Inside the band the velocity is taken from the odd part of the rate at
// the band edges; a non-negligible even part means the equation itself is
// singular at the branch point, which is reported as a domain exit.
fn sqrt_chart_rate(
    family: &dyn AnsatzFamily,
    l: &SuperOp,
    iterated: Option<&SuperOp>,
    t: f64,
    y: f64,
    lambda: f64,
) -> Result<f64> {
    let p = family.observables().op(0);
    let rate = |yy: f64| -> Result<f64> {
        let rho = family.sqrt_chart_eval(yy)?;
        let mut r = lambda * (p * l.apply(&rho)).trace().re;
        if let Some(g1) = iterated {
            r += lambda * lambda * (p * l.apply(&g1.apply(&rho))).trace().re;
        }
        Ok(r)
    };

    let cut = tol::SQRT_CHART_CUTOFF;
    if y.abs() >= cut {
        Ok(rate(y)? / (2.0 * y))
    } else {
        let plus = rate(cut)?;
        let minus = rate(-cut)?;
        let even = 0.5 * (plus + minus);
        let odd = 0.5 * (plus - minus);
        if even.abs() > tol::SQRT_CHART_EVEN_PART * (1.0 + odd.abs()) {
            return Err(Error::DomainExit { t });
        }
        Ok(odd / (2.0 * cut))
    }
}

/// Mean solution on a storage grid: the chart coordinates at every node
/// plus the exact right-hand side there, so values between nodes come from
/// cubic Hermite interpolation at integration accuracy.
pub struct MeanTrajectory {
    family: Arc<dyn AnsatzFamily>,
    sol: GridSolution<DVector<f64>>,
    order: usize,
    lambda: f64,
    sqrt_chart: bool,
    moments: usize,
}

impl std::fmt::Debug for MeanTrajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeanTrajectory")
            .field("order", &self.order)
            .field("lambda", &self.lambda)
            .field("sqrt_chart", &self.sqrt_chart)
            .field("moments", &self.moments)
            .field("nodes", &self.sol.times.len())
            .finish()
    }
}

impl MeanTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.sol.times
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Whether the run integrated `y = sqrt(E)` instead of the moment.
    pub fn uses_sqrt_chart(&self) -> bool {
        self.sqrt_chart
    }

    /// Moment vector stored at grid node `i`, free of interpolation error.
    pub fn node_moments(&self, i: usize) -> Vec<f64> {
        self.to_moments(&self.sol.values[i])
    }

    /// Moment vector at an arbitrary time inside the stored range.
    pub fn moments_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.to_moments(&self.interp(t)?))
    }

    /// Raw chart coordinates at `t`: the signed square root for a
    /// square-root-chart run, the moments themselves otherwise.
    pub fn chart_at(&self, t: f64) -> Result<Vec<f64>> {
        let s = self.interp(t)?;
        let n = if self.sqrt_chart { 1 } else { self.moments };
        Ok(s.rows(0, n).iter().copied().collect())
    }

    /// The ansatz state reconstructed at `t`.
    pub fn state_at(&self, t: f64) -> Result<CMatrix> {
        let s = self.interp(t)?;
        if self.sqrt_chart {
            self.family.sqrt_chart_eval(s[0])
        } else {
            let e: Vec<f64> = s.rows(0, self.moments).iter().copied().collect();
            self.family.eval(&e)
        }
    }

    pub fn final_moments(&self) -> Vec<f64> {
        self.node_moments(self.sol.times.len() - 1)
    }

    fn interp(&self, t: f64) -> Result<DVector<f64>> {
        let (i, theta) = ode::locate_interval(&self.sol.times, t)?;
        let h = self.sol.times[i + 1] - self.sol.times[i];
        Ok(ode::hermite(
            &self.sol.values[i],
            &self.sol.values[i + 1],
            &self.sol.derivs[i],
            &self.sol.derivs[i + 1],
            h,
            theta,
        ))
    }

    fn to_moments(&self, s: &DVector<f64>) -> Vec<f64> {
        if self.sqrt_chart {
            vec![s[0] * s[0]]
        } else {
            s.rows(0, self.moments).iter().copied().collect()
        }
    }
}

/// Integrates the averaged equation of the requested order from `e0` over
/// `[t0, t_max]` on a default uniform storage grid.
pub fn solve_mean(
    family: Arc<dyn AnsatzFamily>,
    gen: &Generator,
    lambda: f64,
    e0: &[f64],
    t0: f64,
    t_max: f64,
    order: usize,
    ode_tol: f64,
) -> Result<MeanTrajectory> {
    if !(t_max > t0) {
        return Err(Error::InvalidParameter(format!(
            "time span [{t0}, {t_max}] is empty"
        )));
    }
    let times = ode::grid(t0, t_max, DEFAULT_GRID_NODES);
    solve_mean_on_grid(family, gen, lambda, e0, &times, order, ode_tol)
}

/// [`solve_mean`] with caller-chosen storage nodes; `times` must be
/// strictly increasing and `e0` refers to `times[0]`.
///
/// Order two co-integrates the running integral `G_1(t)` with the moments,
/// so every trial stage sees the integral at its exact stage time. A family
/// that declares the square-root coordinate is integrated in `y = sqrt(E)`
/// whenever the dropped gradient-product correction provably vanishes
/// (single traceless tracked observable, dimension two); the chart is
/// smooth through `y = 0`, where the two solution branches meet.
pub fn solve_mean_on_grid(
    family: Arc<dyn AnsatzFamily>,
    gen: &Generator,
    lambda: f64,
    e0: &[f64],
    times: &[f64],
    order: usize,
    ode_tol: f64,
) -> Result<MeanTrajectory> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter(format!(
            "equation order must be 1 or 2, got {order}"
        )));
    }
    if !(ode_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {ode_tol}"
        )));
    }
    if times.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: times.len(),
        });
    }
    let obs = family.observables();
    if e0.len() != obs.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            got: e0.len(),
        });
    }
    if gen.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            got: gen.dim(),
        });
    }
    if !family.domain().contains(e0) {
        return Err(Error::DomainViolation);
    }

    let m = obs.len();
    let d = obs.dim();
    let sqrt_chart = family.sqrt_coordinate()
        && m == 1
        && d == 2
        && obs.op(0).trace().norm() <= tol::HERMITICITY;
    let n_chart = if sqrt_chart { 1 } else { m };
    let d2 = d * d;
    let n_aug = if order == 2 { 2 * d2 * d2 } else { 0 };

    let mut y0 = DVector::zeros(n_chart + n_aug);
    if sqrt_chart {
        y0[0] = e0[0].max(0.0).sqrt();
    } else {
        for (i, &v) in e0.iter().enumerate() {
            y0[i] = v;
        }
    }

    let rhs_family = Arc::clone(&family);
    let mut f = move |t: f64, s: &DVector<f64>| -> Result<DVector<f64>> {
        let mut ds = DVector::zeros(s.len());
        let g1 = (order == 2).then(|| unpack_superop(s, n_chart, d));
        let l = gen.eval(t)?;
        if sqrt_chart {
            ds[0] = sqrt_chart_rate(rhs_family.as_ref(), &l, g1.as_ref(), t, s[0], lambda)?;
        } else {
            let e: Vec<f64> = s.rows(0, m).iter().copied().collect();
            let rate = moment_rate(rhs_family.as_ref(), &l, g1.as_ref(), &e, lambda)?;
            for (i, v) in rate.into_iter().enumerate() {
                ds[i] = v;
            }
        }
        if order == 2 {
            pack_tail(&mut ds, n_chart, l.mat());
        }
        Ok(ds)
    };

    let guard_family = Arc::clone(&family);
    let guard = move |_t: f64, s: &DVector<f64>| -> bool {
        if sqrt_chart {
            // The chart regularizes the branch point the moment domain
            // excludes, so membership is probed just off it.
            let x = (s[0] * s[0]).max(tol::SQRT_CHART_CUTOFF * tol::SQRT_CHART_CUTOFF);
            guard_family.domain().contains(&[x])
        } else {
            let e: Vec<f64> = s.rows(0, m).iter().copied().collect();
            guard_family.domain().contains(&e)
        }
    };

    let opts = OdeOptions {
        rtol: ode_tol,
        atol: 1e-2 * ode_tol,
        ..OdeOptions::default()
    };
    let (sol, stop) = ode::integrate_to_grid_guarded(&mut f, times, y0, Some(&guard), &opts)?;
    if let StopReason::GuardTripped { t_exit } = stop {
        return Err(Error::DomainExit { t: t_exit });
    }

    Ok(MeanTrajectory {
        family,
        sol,
        order,
        lambda,
        sqrt_chart,
        moments: m,
    })
}

fn unpack_superop(s: &DVector<f64>, offset: usize, dim: usize) -> SuperOp {
    let d2 = dim * dim;
    let mat = CMatrix::from_fn(d2, d2, |r, c| {
        let k = offset + 2 * (c * d2 + r);
        C64::new(s[k], s[k + 1])
    });
    SuperOp::new(dim, mat)
}

fn pack_tail(ds: &mut DVector<f64>, offset: usize, m: &CMatrix) {
    let d2 = m.nrows();
    for c in 0..d2 {
        for r in 0..d2 {
            let k = offset + 2 * (c * d2 + r);
            let v = m[(r, c)];
            ds[k] = v.re;
            ds[k + 1] = v.im;
        }
    }
}

/// Which closed-form solution branch a run follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
}

/// Sup-norm distances of one run to the two closed-form branches and of
/// each branch to the exact reference, all over the storage grid. The
/// per-branch reference errors are the raw material for asymptotic-order
/// fits across a coupling sweep.
#[derive(Clone, Debug)]
pub struct BranchReport {
    pub tracked: Branch,
    pub gap_minus: f64,
    pub gap_plus: f64,
    pub exact_error_minus: f64,
    pub exact_error_plus: f64,
}

/// Classifies the first tracked moment of `traj` against the two
/// closed-form branches and measures each branch against the exact
/// reference.
pub fn branch_monitor(
    traj: &MeanTrajectory,
    minus: &dyn Fn(f64) -> f64,
    plus: &dyn Fn(f64) -> f64,
    exact: &dyn Fn(f64) -> f64,
) -> BranchReport {
    let mut gap_minus = 0.0_f64;
    let mut gap_plus = 0.0_f64;
    let mut exact_error_minus = 0.0_f64;
    let mut exact_error_plus = 0.0_f64;
    for (i, &t) in traj.times().iter().enumerate() {
        let e = traj.node_moments(i)[0];
        let (bm, bp, ex) = (minus(t), plus(t), exact(t));
        gap_minus = gap_minus.max((e - bm).abs());
        gap_plus = gap_plus.max((e - bp).abs());
        exact_error_minus = exact_error_minus.max((bm - ex).abs());
        exact_error_plus = exact_error_plus.max((bp - ex).abs());
    }
    BranchReport {
        tracked: if gap_minus <= gap_plus {
            Branch::Minus
        } else {
            Branch::Plus
        },
        gap_minus,
        gap_plus,
        exact_error_minus,
        exact_error_plus,
    }
}
