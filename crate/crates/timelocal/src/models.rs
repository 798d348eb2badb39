//! Generators of the dynamics: commutator terms, GKSL dissipators, and
//! interaction-picture conjugation.
//!
//! A generator here is the time-dependent map `L(t)` in
//! `d rho/dt = lambda L(t) rho`; the coupling `lambda` is never baked into
//! the map and is supplied separately wherever the equation is integrated.
//! Every constructor yields maps that annihilate the trace and preserve
//! Hermiticity, and the corresponding defects are exposed for testing.

use crate::error::{Error, Result};
use crate::linalg::{
    hermiticity_defect, max_abs, sigma_minus, sigma_plus, vectorize, CMatrix, SuperOp, C64,
};
use crate::tol;
use std::sync::Mutex;

/// Time-dependent generator `t -> L(t)`, evaluated on demand. Evaluation
/// can fail (overflowing conjugation factors, invalid times), so results
/// are surfaced rather than panicking.
pub struct Generator {
    dim: usize,
    eval: Box<dyn Fn(f64) -> Result<SuperOp> + Send + Sync>,
}

impl Generator {
    pub fn new(dim: usize, eval: impl Fn(f64) -> Result<SuperOp> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Box::new(eval),
        }
    }

    /// Time-independent generator.
    pub fn constant(op: SuperOp) -> Self {
        let dim = op.dim();
        Self::new(dim, move |_| Ok(op.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> Result<SuperOp> {
        (self.eval)(t)
    }

    /// `L(t) x`.
    pub fn apply(&self, t: f64, x: &CMatrix) -> Result<CMatrix> {
        Ok(self.eval(t)?.apply(x))
    }
}

/// Largest `|Tr(L e_ij)|` over matrix units: zero for maps that annihilate
/// the trace.
pub fn trace_annihilation_defect(op: &SuperOp) -> f64 {
    let d = op.dim();
    let id_vec = vectorize(&CMatrix::identity(d, d));
    let row = id_vec.adjoint() * op.mat();
    row.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest `||L(x^H) - L(x)^H||` over matrix units: zero for maps that send
/// Hermitian operators to Hermitian operators.
pub fn hermiticity_preservation_defect(op: &SuperOp) -> f64 {
    let d = op.dim();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let mut unit_ij = CMatrix::zeros(d, d);
            unit_ij[(i, j)] = C64::new(1.0, 0.0);
            let mut unit_ji = CMatrix::zeros(d, d);
            unit_ji[(j, i)] = C64::new(1.0, 0.0);
            let defect = op.apply(&unit_ji) - op.apply(&unit_ij).adjoint();
            worst = worst.max(max_abs(&defect));
        }
    }
    worst
}

/// Hamiltonian part `x -> -i [h, x]`. Rejects non-Hermitian input.
pub fn commutator_generator(h: &CMatrix) -> Result<SuperOp> {
    let deviation = hermiticity_defect(h);
    if deviation > tol::HERMITICITY {
        return Err(Error::NotHermitian {
            deviation,
            tol: tol::HERMITICITY,
        });
    }
    let bracket = &SuperOp::left_mult(h) - &SuperOp::right_mult(h);
    Ok(bracket.scale(C64::new(0.0, -1.0)))
}

/// A dissipator together with the flag telling whether any rate was
/// negative. Negative rates produce a map of the right algebraic form whose
/// exponential is not completely positive; such maps are accepted and
/// marked rather than rejected.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub map: SuperOp,
    pub formal: bool,
}

/// Sum of GKSL terms `rate * (a x a^H - {a^H a, x} / 2)`.
pub fn gksl_dissipator(dim: usize, terms: &[(f64, CMatrix)]) -> Result<Dissipator> {
    let mut mat = CMatrix::zeros(dim * dim, dim * dim);
    let mut formal = false;
    for (rate, a) in terms {
        if a.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.nrows(),
            });
        }
        if !rate.is_finite() {
            return Err(Error::InvalidParameter("dissipator rate must be finite".into()));
        }
        if *rate < 0.0 {
            formal = true;
        }
        let ada = a.adjoint() * a;
        let jump = SuperOp::mult_pair(a, &a.adjoint());
        let anti = (&SuperOp::left_mult(&ada) + &SuperOp::right_mult(&ada)).scale_re(0.5);
        mat += (&jump - &anti).scale_re(*rate).into_mat();
    }
    Ok(Dissipator {
        map: SuperOp::new(dim, mat),
        formal,
    })
}

fn guard_overflow(t: f64, op: SuperOp) -> Result<SuperOp> {
    let norm = op.max_abs();
    if !op.is_finite() || norm > tol::GENERATOR_OVERFLOW_GUARD {
        return Err(Error::ExponentialOverflow { t, norm });
    }
    Ok(op)
}

/// Conjugated generator `L(t) = exp(-l0 t) l1 exp(l0 t)` for constant `l1`.
///
/// Direct evaluation fails long before the conjugated product does: the
/// factors `exp(+-l0 t)` overflow while `L(t)` itself stays representable.
/// Evaluation therefore steps through cached checkpoints
/// `c_k = exp(-l0 k h) l1 exp(l0 k h)` with `h` sized so each factor has a
/// modest exponent, and finishes with one fractional conjugation. Entries
/// of the result are checked against an overflow guard.
pub fn interaction_picture(l0: &SuperOp, l1: &SuperOp) -> Result<Generator> {
    if l0.dim() != l1.dim() {
        return Err(Error::DimensionMismatch {
            expected: l0.dim(),
            got: l1.dim(),
        });
    }
    let dim = l0.dim();
    let step = 1.0 / l0.mat().norm().max(1.0);
    let forward = l0.scale_re(step).expm();
    let backward = l0.scale_re(-step).expm();
    let l0_own = l0.clone();
    let l1_own = l1.clone();
    let checkpoints: Mutex<Vec<SuperOp>> = Mutex::new(vec![l1.clone()]);

    Ok(Generator::new(dim, move |t| {
        if !t.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if t < 0.0 {
            // Backward times stay in the direct regime for every use here.
            let left = l0_own.scale_re(-t).expm();
            let right = l0_own.scale_re(t).expm();
            return guard_overflow(t, &(&left * &l1_own) * &right);
        }
        let k = (t / step).floor() as usize;
        let delta = t - k as f64 * step;
        let c_k = {
            let mut cache = checkpoints.lock().expect("checkpoint cache");
            while cache.len() <= k {
                let next = &(&backward * cache.last().expect("nonempty cache")) * &forward;
                let norm = next.max_abs();
                if !next.is_finite() || norm > tol::GENERATOR_OVERFLOW_GUARD {
                    return Err(Error::ExponentialOverflow { t, norm });
                }
                cache.push(next);
            }
            cache[k].clone()
        };
        let left = l0_own.scale_re(-delta).expm();
        let right = l0_own.scale_re(delta).expm();
        guard_overflow(t, &(&left * &c_k) * &right)
    }))
}

/// Driven two-level system with radiative damping: coherent drive of
/// strength `omega` plus decay `gamma0` into a bath with thermal occupation
/// `n_bath`.
#[derive(Clone, Copy, Debug)]
pub struct RfParams {
    pub omega: f64,
    pub gamma0: f64,
    pub n_bath: f64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            gamma0: 1.0,
            n_bath: 0.0,
        }
    }
}

impl RfParams {
    /// Total relaxation rate of the population difference.
    pub fn gamma(&self) -> f64 {
        self.gamma0 * (2.0 * self.n_bath + 1.0)
    }
}

/// Split generator `L0 + lambda L1` of the driven damped two-level system:
/// `l0` the dissipative part, `l1` the drive commutator
/// `(i omega / 2) [sigma_+ + sigma_-, .]`.
#[derive(Clone, Debug)]
pub struct RfModel {
    pub params: RfParams,
    pub l0: SuperOp,
    pub l1: SuperOp,
    /// Set when a rate is negative and the semigroup is only formal.
    pub formal: bool,
}

impl RfModel {
    pub fn dim(&self) -> usize {
        2
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    /// `exp(-l0 t) l1 exp(l0 t)`, the drive seen from the dissipative frame.
    pub fn interaction_generator(&self) -> Result<Generator> {
        interaction_picture(&self.l0, &self.l1)
    }

    /// Untransformed generator `l0 + lambda l1`.
    pub fn rotating_frame_generator(&self, lambda: f64) -> SuperOp {
        &self.l0 + &self.l1.scale_re(lambda)
    }
}

fn drive(omega: f64) -> SuperOp {
    let sx = sigma_plus() + sigma_minus();
    (&SuperOp::left_mult(&sx) - &SuperOp::right_mult(&sx)).scale(C64::new(0.0, omega / 2.0))
}

/// Standard construction: decay at `gamma0 (n + 1)`, excitation at
/// `gamma0 n`.
pub fn resonance_fluorescence(params: RfParams) -> Result<RfModel> {
    let d = gksl_dissipator(
        2,
        &[
            (params.gamma0 * (params.n_bath + 1.0), sigma_minus()),
            (params.gamma0 * params.n_bath, sigma_plus()),
        ],
    )?;
    Ok(RfModel {
        params,
        l0: d.map,
        l1: drive(params.omega),
        formal: d.formal,
    })
}

/// High-temperature variant: decay and excitation both at `gamma / 2`, so
/// the dissipative part is unital.
pub fn resonance_fluorescence_high_t(params: RfParams) -> Result<RfModel> {
    let half = params.gamma() / 2.0;
    let d = gksl_dissipator(2, &[(half, sigma_minus()), (half, sigma_plus())])?;
    Ok(RfModel {
        params,
        l0: d.map,
        l1: drive(params.omega),
        formal: d.formal,
    })
}
