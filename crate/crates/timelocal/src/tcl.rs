//! Exact and perturbative time-local kinetic coefficients.
//!
//! For a propagator `U(t)` of `d rho/dt = lambda L(t) rho` and a projector
//! family `P(t)`, with `P0 = P(t_start)` and `Q0 = 1 - P0`, the projected
//! state obeys a time-local equation
//!
//! `d/dt [P rho] = K(t) P rho + I(t) rho(t_start)`,
//!
//! with
//!
//! `K(t) = [Pdot U P0 + P Udot P0] (P U P0)^(-1)`,
//! `I(t) = Pdot U Q0 + P Udot Q0 - K P U Q0`,
//!
//! the inverse taken between `range(P0)` and `range(P(t))`. Expanding `U`
//! in powers of the coupling turns both coefficients into signed sums of
//! products of projected iterated integrals, one term per composition of
//! the order; the signs alternate with the number of factors.
//!
//! The expansion grades by the explicit powers of the coupling carried by
//! the propagator. Projector-derivative blocks keep the grade of their
//! propagator factors, the bookkeeping for a family riding the driven
//! trajectory, where the derivative is itself first order in the
//! coupling. For a family whose motion is prescribed independently of the
//! coupling the exact kernel instead opens at zeroth order with the
//! family's own drift, and it is the dropped-derivative sums that give
//! the literal Taylor coefficients of the dropped-derivative kernel.

use crate::error::{Error, Result};
use crate::linalg::{restricted_inverse_between, SuperOp};
use crate::models::Generator;
use crate::par;
use crate::projectors::ProjectorFamily;
use crate::propagator::{DysonTerms, PropagatorGrid};
use crate::tol;

/// Kinetic coefficients on the propagator's grid, with the worst-case
/// conditioning of the restricted inversions.
pub struct CoefficientGrid {
    times: Vec<f64>,
    k: Vec<SuperOp>,
    inhom: Vec<SuperOp>,
    pub min_sv: f64,
    pub max_cond: f64,
}

impl CoefficientGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn k(&self, i: usize) -> &SuperOp {
        &self.k[i]
    }

    pub fn inhom(&self, i: usize) -> &SuperOp {
        &self.inhom[i]
    }
}

fn node_coefficients(
    grid: &PropagatorGrid,
    proj: &ProjectorFamily,
    p0: &SuperOp,
    q0: &SuperOp,
    i: usize,
    robertson: bool,
) -> Result<(SuperOp, SuperOp, f64, f64)> {
    let (t, u, udot) = grid.node(i);
    let p = proj.eval(t)?;
    let pdot = if robertson {
        SuperOp::zero(grid.dim())
    } else {
        proj.deriv(t)?
    };

    let up0 = u.compose(p0);
    let pup = p.compose(&up0);
    let rinv = restricted_inverse_between(&pup, p0, &p)?;
    if rinv.cond > tol::COEFFICIENT_CONDITION_CAP {
        return Err(Error::IllConditioned {
            cond: rinv.cond,
            cap: tol::COEFFICIENT_CONDITION_CAP,
        });
    }
    let num = &pdot.compose(&up0) + &p.compose(&udot.compose(p0));
    let k = num.compose(&rinv.inv);

    let uq0 = u.compose(q0);
    let inhom = &(&pdot.compose(&uq0) + &p.compose(&udot.compose(q0))) - &k.compose(&p.compose(&uq0));
    Ok((k, inhom, rinv.min_sv, rinv.cond))
}

fn assemble(
    grid: &PropagatorGrid,
    nodes: Vec<(SuperOp, SuperOp, f64, f64)>,
) -> CoefficientGrid {
    let mut out = CoefficientGrid {
        times: grid.times().to_vec(),
        k: Vec::with_capacity(nodes.len()),
        inhom: Vec::with_capacity(nodes.len()),
        min_sv: f64::INFINITY,
        max_cond: 0.0,
    };
    for (k, inhom, min_sv, cond) in nodes {
        out.min_sv = out.min_sv.min(min_sv);
        out.max_cond = out.max_cond.max(cond);
        out.k.push(k);
        out.inhom.push(inhom);
    }
    out
}

/// Exact coefficients at every grid node, in parallel over nodes when the
/// `parallel` feature is active. `robertson` drops the projector-derivative
/// pieces, matching a projector family whose derivative annihilates the
/// physical trajectory.
pub fn exact_coefficients(
    grid: &PropagatorGrid,
    proj: &ProjectorFamily,
    robertson: bool,
) -> Result<CoefficientGrid> {
    if grid.dim() != proj.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: proj.dim(),
        });
    }
    let p0 = proj.eval(grid.t_start())?;
    let q0 = &SuperOp::identity(grid.dim()) - &p0;
    let nodes = par::try_map_indexed(grid.times().len(), |i| {
        node_coefficients(grid, proj, &p0, &q0, i, robertson)
    })?;
    Ok(assemble(grid, nodes))
}

/// Always-sequential twin of [`exact_coefficients`].
pub fn exact_coefficients_seq(
    grid: &PropagatorGrid,
    proj: &ProjectorFamily,
    robertson: bool,
) -> Result<CoefficientGrid> {
    if grid.dim() != proj.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: proj.dim(),
        });
    }
    let p0 = proj.eval(grid.t_start())?;
    let q0 = &SuperOp::identity(grid.dim()) - &p0;
    let nodes = par::try_map_indexed_seq(grid.times().len(), |i| {
        node_coefficients(grid, proj, &p0, &q0, i, robertson)
    })?;
    Ok(assemble(grid, nodes))
}

/// One signed product in the expansion of the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionTerm {
    /// Ordered positive parts summing to the order.
    pub parts: Vec<usize>,
    /// `(-1)^(parts - 1)`.
    pub sign: f64,
}

/// All compositions of `n`: ordered tuples of positive integers summing to
/// `n`, one per subset of the `n - 1` interior cut points, so `2^(n-1)` in
/// total.
pub fn compositions(n: usize) -> Vec<CompositionTerm> {
    if n == 0 {
        return Vec::new();
    }
    assert!(n < 26, "composition enumeration grows as 2^(n-1)");
    let mut out = Vec::with_capacity(1usize << (n - 1));
    for mask in 0..(1u32 << (n - 1)) {
        let mut parts = Vec::new();
        let mut run = 1usize;
        for bit in 0..(n - 1) {
            if mask & (1 << bit) != 0 {
                parts.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        parts.push(run);
        let sign = if (parts.len() - 1) % 2 == 0 { 1.0 } else { -1.0 };
        out.push(CompositionTerm { parts, sign });
    }
    out
}

/// Projected blocks of the iterated integrals at one time, the raw
/// material of the perturbative coefficients:
///
/// `M_k = P G_k P0`, `Mt_k = P G_k Q0`,
/// `Mc_k = Pdot G_k P0 + P L G_{k-1} P0`,
/// `Mct_k = Pdot G_k Q0 + P L G_{k-1} Q0`.
pub struct MTerms {
    order: usize,
    m: Vec<SuperOp>,
    m_tilde: Vec<SuperOp>,
    m_check: Vec<SuperOp>,
    m_check_tilde: Vec<SuperOp>,
}

impl MTerms {
    pub fn order(&self) -> usize {
        self.order
    }
}

/// The projected blocks at time `t` up to `order`. `robertson` zeroes the
/// projector-derivative pieces as in [`exact_coefficients`].
pub fn m_terms(
    dyson: &DysonTerms,
    proj: &ProjectorFamily,
    gen: &Generator,
    t: f64,
    order: usize,
    robertson: bool,
) -> Result<MTerms> {
    if dyson.dim() != proj.dim() || dyson.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: dyson.dim(),
            got: proj.dim().max(gen.dim()),
        });
    }
    if order == 0 || order > dyson.order() {
        return Err(Error::InvalidParameter(format!(
            "expansion order {order} not within the stored order {}",
            dyson.order()
        )));
    }
    let p0 = proj.eval(dyson.t_start())?;
    let q0 = &SuperOp::identity(dyson.dim()) - &p0;
    let p = proj.eval(t)?;
    let pdot = if robertson {
        SuperOp::zero(dyson.dim())
    } else {
        proj.deriv(t)?
    };
    let pl = p.compose(&gen.eval(t)?);

    let mut out = MTerms {
        order,
        m: Vec::with_capacity(order),
        m_tilde: Vec::with_capacity(order),
        m_check: Vec::with_capacity(order),
        m_check_tilde: Vec::with_capacity(order),
    };
    for k in 1..=order {
        let gk = dyson.value(k, t)?;
        let gkm1 = dyson.value(k - 1, t)?;
        out.m.push(p.compose(&gk).compose(&p0));
        out.m_tilde.push(p.compose(&gk).compose(&q0));
        out.m_check
            .push(&pdot.compose(&gk).compose(&p0) + &pl.compose(&gkm1).compose(&p0));
        out.m_check_tilde
            .push(&pdot.compose(&gk).compose(&q0) + &pl.compose(&gkm1).compose(&q0));
    }
    Ok(out)
}

fn check_order(mt: &MTerms, n: usize) -> Result<()> {
    if n == 0 || n > mt.order {
        return Err(Error::InvalidParameter(format!(
            "coefficient order {n} not within the stored order {}",
            mt.order
        )));
    }
    Ok(())
}

/// Order-`n` coefficient of the homogeneous part:
/// `K_n = sum over compositions (c1..cm) of n of sign Mc_{c1} M_{c2} ... M_{cm}`.
pub fn perturbative_k(mt: &MTerms, n: usize) -> Result<SuperOp> {
    check_order(mt, n)?;
    let dim = mt.m[0].dim();
    let mut acc = SuperOp::zero(dim);
    for term in compositions(n) {
        let mut prod = mt.m_check[term.parts[0] - 1].clone();
        for &c in &term.parts[1..] {
            prod = prod.compose(&mt.m[c - 1]);
        }
        acc = &acc + &prod.scale_re(term.sign);
    }
    Ok(acc)
}

/// Order-`n` coefficient of the inhomogeneity: the same signed
/// compositions with the final factor directed at the complement,
/// `I_n = Mct_n + sum over longer compositions of sign Mc_{c1} M ... Mt_{cm}`.
pub fn perturbative_i(mt: &MTerms, n: usize) -> Result<SuperOp> {
    check_order(mt, n)?;
    let dim = mt.m[0].dim();
    let mut acc = SuperOp::zero(dim);
    for term in compositions(n) {
        let parts = &term.parts;
        let prod = if parts.len() == 1 {
            mt.m_check_tilde[n - 1].clone()
        } else {
            let mut prod = mt.m_check[parts[0] - 1].clone();
            for &c in &parts[1..parts.len() - 1] {
                prod = prod.compose(&mt.m[c - 1]);
            }
            prod.compose(&mt.m_tilde[parts[parts.len() - 1] - 1])
        };
        acc = &acc + &prod.scale_re(term.sign);
    }
    Ok(acc)
}
