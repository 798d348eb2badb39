//! Adaptive Runge-Kutta integration with output clamped to caller grids.
//!
//! The stepper is the Dormand-Prince 5(4) embedded pair. Steps are chosen
//! adaptively from the embedded error estimate but never cross the next
//! requested grid node, so recorded nodes are hit exactly rather than
//! interpolated. Dense output inside a step, where needed for event
//! localization, uses cubic Hermite interpolation on the step endpoints.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use nalgebra::DVector;

/// State vector usable by the stepper: real or complex, flat or structured.
pub trait OdeState: Clone {
    /// `self += a * x`.
    fn axpy(&mut self, a: f64, x: &Self);
    /// Scaled RMS of `err` against `atol + rtol * max(|y0|, |y1|)` per
    /// component; the step is accepted when this is at most one.
    fn weighted_rms(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64;
    fn is_finite(&self) -> bool;
}

impl OdeState for DVector<f64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.axpy(a, x, 1.0);
    }

    fn weighted_rms(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64 {
        let n = err.len().max(1);
        let sum: f64 = err
            .iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| {
                let scale = atol + rtol * a.abs().max(b.abs());
                (e / scale).powi(2)
            })
            .sum();
        (sum / n as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl OdeState for CVector {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.axpy(C64::new(a, 0.0), x, C64::new(1.0, 0.0));
    }

    fn weighted_rms(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64 {
        let n = err.len().max(1);
        let sum: f64 = err
            .iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| {
                let scale = atol + rtol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum();
        (sum / n as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl OdeState for CMatrix {
    fn axpy(&mut self, a: f64, x: &Self) {
        let ca = C64::new(a, 0.0);
        self.zip_apply(x, |s, xv| *s += xv * ca);
    }

    fn weighted_rms(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64 {
        let n = err.len().max(1);
        let sum: f64 = err
            .iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| {
                let scale = atol + rtol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum();
        (sum / n as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Stacked matrix states, used to transport a family of matrices in one
/// pass. All entries across all matrices enter the error norm.
impl OdeState for Vec<CMatrix> {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        let ca = C64::new(a, 0.0);
        for (m, xm) in self.iter_mut().zip(x.iter()) {
            m.zip_apply(xm, |s, xv| *s += xv * ca);
        }
    }

    fn weighted_rms(err: &Self, y0: &Self, y1: &Self, rtol: f64, atol: f64) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            for ((ev, av), bv) in e.iter().zip(a.iter()).zip(b.iter()) {
                let scale = atol + rtol * av.norm().max(bv.norm());
                sum += (ev.norm() / scale).powi(2);
                n += 1;
            }
        }
        (sum / n.max(1) as f64).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.iter()
            .all(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial trial step; chosen from the span when absent.
    pub h_init: Option<f64>,
    /// Absolute floor on the step size; a relative floor on the span is
    /// used when this is zero.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: crate::tol::ODE_RTOL,
            atol: crate::tol::ODE_ATOL,
            h_init: None,
            h_min: 0.0,
            max_steps: 4_000_000,
        }
    }
}

/// Why a guarded integration stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopReason {
    Completed,
    /// The guard predicate failed; `t_exit` is the localized crossing time.
    GuardTripped { t_exit: f64 },
}

/// Solution recorded at caller-requested nodes. `derivs[i]` is the exact
/// right-hand side at `(times[i], values[i])`, suitable for Hermite
/// interpolation between nodes.
#[derive(Clone, Debug)]
pub struct GridSolution<S> {
    pub times: Vec<f64>,
    pub values: Vec<S>,
    pub derivs: Vec<S>,
}

/// Uniform inclusive grid of `n` points from `t0` to `t1`.
pub fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let h = (t1 - t0) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { t1 } else { t0 + i as f64 * h })
        .collect()
}

/// Cubic Hermite interpolant on `[t, t + h]` with endpoint values and
/// derivatives, evaluated at fraction `theta` of the step.
pub fn hermite<S: OdeState>(y0: &S, y1: &S, f0: &S, f1: &S, h: f64, theta: f64) -> S {
    // y0 at theta = 0, y1 at theta = 1, with matching derivatives h*f0, h*f1.
    let mut d = y1.clone();
    d.axpy(-1.0, y0);
    let mut inner = d.clone();
    inner.axpy(-2.0 * theta, &d);
    inner.axpy((theta - 1.0) * h, f0);
    inner.axpy(theta * h, f1);
    let mut out = y0.clone();
    out.axpy(theta, &d);
    out.axpy(theta * (theta - 1.0), &inner);
    out
}

/// Time derivative of the cubic Hermite interpolant of [`hermite`] at
/// fraction `theta` of the step.
pub fn hermite_deriv<S: OdeState>(y0: &S, y1: &S, f0: &S, f1: &S, h: f64, theta: f64) -> S {
    // With d = y1 - y0 and inner(theta) as in `hermite`,
    // dy/d theta = d + (2 theta - 1) inner + theta (theta - 1) inner',
    // inner' = -2 d + h f0 + h f1, and dy/dt = dy/d theta / h.
    let mut d = y1.clone();
    d.axpy(-1.0, y0);
    let mut inner = d.clone();
    inner.axpy(-2.0 * theta, &d);
    inner.axpy((theta - 1.0) * h, f0);
    inner.axpy(theta * h, f1);
    let mut inner_dot = d.clone();
    inner_dot.axpy(-3.0, &d);
    inner_dot.axpy(h, f0);
    inner_dot.axpy(h, f1);
    let mut slope = d;
    slope.axpy(2.0 * theta - 1.0, &inner);
    slope.axpy(theta * (theta - 1.0), &inner_dot);
    // Rescale to a time derivative without a dedicated scale op.
    let mut out = y0.clone();
    out.axpy(-1.0, y0);
    out.axpy(1.0 / h, &slope);
    out
}

/// Index `i` and fraction `theta` such that `t` lies in
/// `[times[i], times[i + 1]]`. Times a hair outside the grid (relative
/// slack 1e-9 of the span) are clamped to the boundary.
pub fn locate_interval(times: &[f64], t: f64) -> Result<(usize, f64)> {
    if times.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: times.len(),
        });
    }
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let slack = 1e-9 * (t1 - t0).abs().max(1.0);
    if t < t0 - slack || t > t1 + slack {
        return Err(Error::InvalidParameter(format!(
            "time {t} outside stored range [{t0}, {t1}]"
        )));
    }
    let t = t.clamp(t0, t1);
    let i = match times.binary_search_by(|x| x.partial_cmp(&t).expect("finite times")) {
        Ok(i) => i.min(times.len() - 2),
        Err(i) => i.saturating_sub(1).min(times.len() - 2),
    };
    let h = times[i + 1] - times[i];
    Ok((i, (t - times[i]) / h))
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

struct Attempt<S> {
    y_new: S,
    f_new: S,
    err: f64,
}

fn attempt_step<S: OdeState>(
    f: &mut impl FnMut(f64, &S) -> Result<S>,
    t: f64,
    y: &S,
    f_at_y: &S,
    h: f64,
    opts: &OdeOptions,
) -> Result<Attempt<S>> {
    let mut k: Vec<S> = Vec::with_capacity(7);
    k.push(f_at_y.clone());
    for s in 1..7 {
        let mut y_stage = y.clone();
        for (j, kj) in k.iter().enumerate().take(s) {
            if A[s][j] != 0.0 {
                y_stage.axpy(h * A[s][j], kj);
            }
        }
        k.push(f(t + C[s] * h, &y_stage)?);
    }
    let mut y_new = y.clone();
    for (i, ki) in k.iter().enumerate() {
        if B[i] != 0.0 {
            y_new.axpy(h * B[i], ki);
        }
    }
    // Zero of the right shape, then the weighted defect of the two orders.
    let mut err_vec = y.clone();
    err_vec.axpy(-1.0, y);
    for (i, ki) in k.iter().enumerate() {
        if E[i] != 0.0 {
            err_vec.axpy(h * E[i], ki);
        }
    }
    let err = if y_new.is_finite() {
        S::weighted_rms(&err_vec, y, &y_new, opts.rtol, opts.atol)
    } else {
        f64::INFINITY
    };
    let f_new = k.pop().expect("seven stages");
    Ok(Attempt { y_new, f_new, err })
}

/// Integrates `y' = f(t, y)` and records the solution at every grid node,
/// stopping early if `guard` (true = still admissible) fails. The guard is
/// checked on accepted states; a failure is then localized inside the step
/// by bisection on the Hermite interpolant, the last admissible point is
/// appended, and the crossing time is reported.
pub fn integrate_to_grid_guarded<S: OdeState>(
    f: &mut impl FnMut(f64, &S) -> Result<S>,
    times: &[f64],
    y0: S,
    guard: Option<&dyn Fn(f64, &S) -> bool>,
    opts: &OdeOptions,
) -> Result<(GridSolution<S>, StopReason)> {
    if times.is_empty() {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter(
                "grid times must be strictly increasing".into(),
            ));
        }
    }
    let t0 = times[0];
    let span = (times[times.len() - 1] - t0).max(f64::MIN_POSITIVE);
    let h_floor = if opts.h_min > 0.0 {
        opts.h_min
    } else {
        1e-14 * span
    };

    let mut sol = GridSolution {
        times: Vec::with_capacity(times.len()),
        values: Vec::with_capacity(times.len()),
        derivs: Vec::with_capacity(times.len()),
    };

    if let Some(g) = guard {
        if !g(t0, &y0) {
            sol.times.push(t0);
            sol.derivs.push(f(t0, &y0)?);
            sol.values.push(y0);
            return Ok((sol, StopReason::GuardTripped { t_exit: t0 }));
        }
    }

    let mut t = t0;
    let mut y = y0;
    let mut f_cur = f(t, &y)?;
    sol.times.push(t);
    sol.values.push(y.clone());
    sol.derivs.push(f_cur.clone());
    if times.len() == 1 {
        return Ok((sol, StopReason::Completed));
    }

    let mut h_prop = opts.h_init.unwrap_or(1e-3 * span).min(span);
    let mut steps = 0usize;

    for &t_node in &times[1..] {
        while t < t_node {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::MaxStepsExceeded {
                    t,
                    max_steps: opts.max_steps,
                });
            }
            let h = h_prop.min(t_node - t);
            if h < h_floor {
                return Err(Error::StepUnderflow { t, h });
            }
            let att = attempt_step(f, t, &y, &f_cur, h, opts)?;
            if !att.err.is_finite() || att.err > 1.0 {
                let shrink = if att.err.is_finite() {
                    (0.9 * att.err.powf(-0.2)).max(0.2)
                } else {
                    0.2
                };
                h_prop = h * shrink;
                continue;
            }
            // Accepted; grow the proposal from the error estimate.
            let grow = if att.err == 0.0 {
                5.0
            } else {
                (0.9 * att.err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h_prop = h * grow;

            if let Some(g) = guard {
                if !g(t + h, &att.y_new) {
                    // Bisect theta in (0, 1] for the first inadmissible point.
                    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                    for _ in 0..80 {
                        if (hi - lo) * h < 1e-13 * t.abs().max(1.0) {
                            break;
                        }
                        let mid = 0.5 * (lo + hi);
                        let y_mid = hermite(&y, &att.y_new, &f_cur, &att.f_new, h, mid);
                        if g(t + mid * h, &y_mid) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t_star = t + lo * h;
                    let y_star = hermite(&y, &att.y_new, &f_cur, &att.f_new, h, lo);
                    let f_star = f(t_star, &y_star)?;
                    sol.times.push(t_star);
                    sol.values.push(y_star);
                    sol.derivs.push(f_star);
                    return Ok((sol, StopReason::GuardTripped { t_exit: t + hi * h }));
                }
            }

            t += h;
            y = att.y_new;
            f_cur = att.f_new;
        }
        // Clamped stepping lands on the node exactly (up to fp addition).
        t = t_node;
        sol.times.push(t_node);
        sol.values.push(y.clone());
        sol.derivs.push(f_cur.clone());
    }
    Ok((sol, StopReason::Completed))
}

/// [`integrate_to_grid_guarded`] without a guard.
pub fn integrate_to_grid<S: OdeState>(
    f: &mut impl FnMut(f64, &S) -> Result<S>,
    times: &[f64],
    y0: S,
    opts: &OdeOptions,
) -> Result<GridSolution<S>> {
    let (sol, reason) = integrate_to_grid_guarded(f, times, y0, None, opts)?;
    debug_assert_eq!(reason, StopReason::Completed);
    Ok(sol)
}

/// Final value of `y' = f(t, y)` at `t1`, without intermediate output.
pub fn integrate<S: OdeState>(
    f: &mut impl FnMut(f64, &S) -> Result<S>,
    t0: f64,
    y0: S,
    t1: f64,
    opts: &OdeOptions,
) -> Result<S> {
    if t1 == t0 {
        return Ok(y0);
    }
    let sol = integrate_to_grid(f, &[t0, t1], y0, opts)?;
    Ok(sol.values.into_iter().next_back().expect("two nodes"))
}
