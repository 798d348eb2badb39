//! Moment-parameterized state families.
//!
//! A family assigns to each admissible moment vector `E` a unit-trace state
//! `rho_ans(E)` satisfying the consistency conditions
//! `Tr(P_m rho_ans(E)) = E_m` for a fixed set of relevant observables
//! `P_m`. Differentiating those conditions gives
//! `Tr(P_m d rho_ans/d E_n) = delta_mn` and `Tr(d rho_ans/d E_n) = 0`,
//! which every family here must inherit; the tests enforce both.

pub mod gibbs;
pub mod linear;
pub mod renyi;
pub mod two_level;

pub use gibbs::GibbsAnsatz;
pub use linear::LinearAnsatz;
pub use renyi::RenyiAnsatz;
pub use two_level::TwoLevelAnsatz;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, hs_inner, CMatrix, C64};
use crate::tol;

/// The observables whose means are tracked. Hermitian, and together with
/// the identity linearly independent, so that moments can parameterize
/// states at all.
pub struct RelevantObservables {
    dim: usize,
    ops: Vec<CMatrix>,
}

impl RelevantObservables {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one relevant observable".into(),
            ));
        }
        let dim = ops[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidDimension(dim));
        }
        for op in &ops {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.nrows(),
                });
            }
            let dev = hermiticity_defect(op);
            if dev > tol::HERMITICITY {
                return Err(Error::NotHermitian {
                    deviation: dev,
                    tol: tol::HERMITICITY,
                });
            }
        }

        // Gram matrix of the unit-normalized collection {I, P_1, ..., P_M};
        // its smallest eigenvalue is the squared smallest singular value.
        let mut normalized =
            vec![CMatrix::identity(dim, dim) * C64::new(1.0 / (dim as f64).sqrt(), 0.0)];
        for op in &ops {
            let norm = op.norm();
            if norm == 0.0 {
                return Err(Error::LinearlyDependent { min_sv: 0.0 });
            }
            normalized.push(op * C64::new(1.0 / norm, 0.0));
        }
        let n = normalized.len();
        let gram = DMatrix::from_fn(n, n, |a, b| hs_inner(&normalized[a], &normalized[b]).re);
        let min_eig = nalgebra::SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x));
        let min_sv = min_eig.max(0.0).sqrt();
        if min_sv <= tol::OBSERVABLE_INDEPENDENCE {
            return Err(Error::LinearlyDependent { min_sv });
        }

        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn op(&self, m: usize) -> &CMatrix {
        &self.ops[m]
    }

    /// Moments `Tr(P_m x)`; imaginary parts are discarded (they vanish for
    /// Hermitian `x` up to rounding).
    pub fn moments(&self, x: &CMatrix) -> Vec<f64> {
        self.ops.iter().map(|p| (p * x).trace().re).collect()
    }
}

/// Admissible moment vectors. Families are only guaranteed to evaluate
/// inside their domain; the mean dynamics uses membership as its stopping
/// guard.
pub struct Domain {
    check: Box<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl Domain {
    pub fn new(check: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            check: Box::new(check),
        }
    }

    /// `|E_m| <= radius` for every component.
    pub fn sup_ball(radius: f64) -> Self {
        Self::new(move |e| e.iter().all(|x| x.abs() <= radius))
    }

    /// Single-moment interval `lo <= E <= hi`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(move |e| e.len() == 1 && lo <= e[0] && e[0] <= hi)
    }

    pub fn intersect(self, other: Domain) -> Self {
        Self::new(move |e| (self.check)(e) && (other.check)(e))
    }

    pub fn contains(&self, e: &[f64]) -> bool {
        (self.check)(e)
    }
}

/// A moment-parameterized family of states.
pub trait AnsatzFamily: Send + Sync {
    fn observables(&self) -> &RelevantObservables;

    fn domain(&self) -> &Domain;

    /// The state assigned to the moment vector `e`.
    fn eval(&self, e: &[f64]) -> Result<CMatrix>;

    /// Partial derivatives `d rho_ans/d E_n`, one matrix per moment.
    fn grad(&self, e: &[f64]) -> Result<Vec<CMatrix>>;

    /// Whether the single tracked moment enters the family through its
    /// square root, so that the mean dynamics should propagate `sqrt(E)`
    /// instead of `E`.
    fn sqrt_coordinate(&self) -> bool {
        false
    }

    /// The state as a smooth function of `y = +-sqrt(E)`. Families that
    /// declare [`sqrt_coordinate`](Self::sqrt_coordinate) must provide this
    /// chart on an interval around zero; both signs of `y` are admissible
    /// and map to the moment `E = y^2`.
    fn sqrt_chart_eval(&self, _y: f64) -> Result<CMatrix> {
        Err(Error::InvalidParameter(
            "family does not expose a square-root chart".into(),
        ))
    }
}

pub(crate) fn check_moment_count(obs: &RelevantObservables, e: &[f64]) -> Result<()> {
    if e.len() != obs.len() {
        return Err(Error::DimensionMismatch {
            expected: obs.len(),
            got: e.len(),
        });
    }
    Ok(())
}

/// Central-difference gradient of `family.eval`, step
/// `h_m = NUMERIC_GRAD_STEP * (1 + |E_m|)` per component.
pub fn numeric_grad(family: &dyn AnsatzFamily, e: &[f64]) -> Result<Vec<CMatrix>> {
    check_moment_count(family.observables(), e)?;
    let mut out = Vec::with_capacity(e.len());
    for m in 0..e.len() {
        let h = tol::NUMERIC_GRAD_STEP * (1.0 + e[m].abs());
        let mut up = e.to_vec();
        let mut dn = e.to_vec();
        up[m] += h;
        dn[m] -= h;
        let diff = family.eval(&up)? - family.eval(&dn)?;
        out.push(diff / C64::new(2.0 * h, 0.0));
    }
    Ok(out)
}

pub(crate) struct MomentMatch<S> {
    pub state: S,
    pub beta: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

/// Damped Newton iteration for implicit parameterizations: drives the
/// residual returned by `data` to `NEWTON_RESIDUAL` in the sup norm.
/// `data` maps parameters to `(state, residual, jacobian)`; a step that
/// fails to evaluate (for example by leaving the positive cone) is treated
/// like a residual increase and backtracked.
pub(crate) fn moment_match<S>(
    data: &mut dyn FnMut(&DVector<f64>) -> Result<(S, DVector<f64>, DMatrix<f64>)>,
    beta0: DVector<f64>,
) -> Result<MomentMatch<S>> {
    let mut beta = beta0;
    let (mut state, mut res, mut jac) = data(&beta)?;
    for iters in 0..tol::NEWTON_MAX_ITER {
        let r = res.amax();
        if r <= tol::NEWTON_RESIDUAL {
            return Ok(MomentMatch {
                state,
                beta,
                jacobian: jac,
            });
        }
        let step = jac.clone().lu().solve(&res).ok_or(Error::NonConvergence {
            iters,
            residual: r,
        })?;
        let mut alpha = 1.0;
        loop {
            let trial = &beta - &step * alpha;
            match data(&trial) {
                Ok((s, f, j)) if f.amax() < r => {
                    beta = trial;
                    state = s;
                    res = f;
                    jac = j;
                    break;
                }
                _ => {
                    alpha *= 0.5;
                    if alpha < 1e-12 {
                        return Err(Error::NonConvergence {
                            iters,
                            residual: r,
                        });
                    }
                }
            }
        }
    }
    let r = res.amax();
    if r <= tol::NEWTON_RESIDUAL {
        return Ok(MomentMatch {
            state,
            beta,
            jacobian: jac,
        });
    }
    Err(Error::NonConvergence {
        iters: tol::NEWTON_MAX_ITER,
        residual: r,
    })
}
