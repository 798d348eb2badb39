//! Inversion of a map restricted to the ranges of idempotents.
//!
//! For idempotents `p_from` and `p_to` of equal rank (not necessarily
//! Hermitian) the space splits twice, as `range(p_from) (+) range(1-p_from)`
//! and `range(p_to) (+) range(1-p_to)`. A map of the form `p_to u p_from`
//! acts invertibly from the first range onto the second when its
//! compression is nonsingular; its restricted inverse `b` is that inverse
//! extended by zero:
//!
//! `b a = p_from`,  `a b = p_to`,  `b (1-p_to) = (1-p_from) b = 0`.
//!
//! For oblique idempotents this differs from the Moore-Penrose
//! pseudoinverse, which would instead invert across the orthogonal
//! complement of the kernel.

use super::matrices::{max_abs, CMatrix};
use super::superop::SuperOp;
use super::svd::{range_basis, singular_values};
use crate::error::{Error, Result};
use crate::tol;

/// Outcome of a restricted inversion, with the conditioning data of the
/// compressed block for downstream caps.
#[derive(Clone, Debug)]
pub struct RestrictedInverse {
    /// The inverse-on-range map `b`.
    pub inv: SuperOp,
    /// Numerical rank of the idempotents.
    pub rank: usize,
    /// Smallest singular value of the compression of `a`.
    pub min_sv: f64,
    /// Condition number of that compression.
    pub cond: f64,
}

struct Adapted {
    t: CMatrix,
    t_inv: CMatrix,
    rank: usize,
}

// Coordinates adapted to an idempotent: columns of `t` span range(p) then
// range(1-p), so conjugation block-diagonalizes anything sandwiched
// between compatible idempotents.
fn adapted_frame(p: &SuperOp) -> Result<Adapted> {
    let n = p.dim() * p.dim();
    let defect = max_abs(&(&(p * p) - p).into_mat());
    let (rp, rank_p) = range_basis(p.mat(), tol::RANK_TOL_REL);
    let complement = CMatrix::identity(n, n) - p.mat();
    let (rq, rank_q) = range_basis(&complement, tol::RANK_TOL_REL);
    if rank_p + rank_q != n {
        return Err(Error::NotAProjector { defect });
    }
    let mut t = CMatrix::zeros(n, n);
    t.view_mut((0, 0), (n, rank_p)).copy_from(&rp);
    t.view_mut((0, rank_p), (n, rank_q)).copy_from(&rq);
    let t_inv = t
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::NotAProjector { defect })?;
    Ok(Adapted {
        t,
        t_inv,
        rank: rank_p,
    })
}

/// Inverts `a` as a map `range(p_from) -> range(p_to)`, extending by zero.
/// `a` is compressed between the two ranges first, so only its
/// `p_to a p_from` part matters.
pub fn restricted_inverse_between(
    a: &SuperOp,
    p_from: &SuperOp,
    p_to: &SuperOp,
) -> Result<RestrictedInverse> {
    let dim = p_from.dim();
    if a.dim() != dim || p_to.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.dim().max(p_to.dim()),
        });
    }
    let from = adapted_frame(p_from)?;
    let to = adapted_frame(p_to)?;
    if from.rank != to.rank {
        return Err(Error::DimensionMismatch {
            expected: from.rank,
            got: to.rank,
        });
    }
    let rank = from.rank;
    let n = dim * dim;
    if rank == 0 {
        return Ok(RestrictedInverse {
            inv: SuperOp::zero(dim),
            rank: 0,
            min_sv: f64::INFINITY,
            cond: 1.0,
        });
    }

    let w = &to.t_inv * a.mat() * &from.t;
    let a11 = w.view((0, 0), (rank, rank)).into_owned();

    let sv = singular_values(&a11);
    let max_sv = sv.first().copied().unwrap_or(0.0);
    let min_sv = sv.last().copied().unwrap_or(0.0);
    if min_sv < tol::RESTRICTED_SV_ABS {
        return Err(Error::SingularOnRange {
            min_sv,
            tol: tol::RESTRICTED_SV_ABS,
        });
    }
    let cond = max_sv / min_sv;

    let a11_inv = a11.clone().lu().try_inverse().ok_or(Error::SingularOnRange {
        min_sv,
        tol: tol::RESTRICTED_SV_ABS,
    })?;

    let mut inner = CMatrix::zeros(n, n);
    inner.view_mut((0, 0), (rank, rank)).copy_from(&a11_inv);
    let b = &from.t * inner * &to.t_inv;

    Ok(RestrictedInverse {
        inv: SuperOp::new(dim, b),
        rank,
        min_sv,
        cond,
    })
}

/// Inverts `a` on the range of the single idempotent `p`, extending by
/// zero on the range of `1 - p`.
pub fn restricted_inverse(a: &SuperOp, p: &SuperOp) -> Result<RestrictedInverse> {
    restricted_inverse_between(a, p, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrices::C64;
    use crate::tol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn probe(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let x = ((i * n + j) as f64 + seed) * 0.8731;
            c(x.sin(), x.cos() * 0.6)
        })
    }

    /// Oblique idempotent on C^4 conjugated from diag(1, 1, 0, 0).
    fn oblique_projector(seed: f64) -> SuperOp {
        let s = CMatrix::identity(4, 4) * c(2.0, 0.0) + probe(4, seed) * c(0.5, 0.0);
        let s_inv = s.clone().lu().try_inverse().expect("probe conjugator");
        let mut d = CMatrix::zeros(4, 4);
        d[(0, 0)] = c(1.0, 0.0);
        d[(1, 1)] = c(1.0, 0.0);
        SuperOp::new(2, &s * d * s_inv)
    }

    #[test]
    fn inverting_the_idempotent_itself_returns_it() {
        // The restriction of p to its own range is the identity there, so
        // the restricted inverse is p again. The Moore-Penrose inverse of an
        // oblique idempotent is a different matrix, so this pins the oblique
        // construction.
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(1.0, 0.0);
        let p = SuperOp::new(2, m);
        let r = restricted_inverse(&p, &p).unwrap();
        assert_eq!(r.rank, 1);
        assert!(max_abs(&(r.inv.mat() - p.mat())) < 1e-12);

        // Moore-Penrose for comparison: p = e0 (e0 + e1)^T has pseudoinverse
        // (e0 + e1) e0^T / 2, a different matrix entirely. Check the two
        // defining identities, then the distance.
        let mut mp = CMatrix::zeros(4, 4);
        mp[(0, 0)] = c(0.5, 0.0);
        mp[(1, 0)] = c(0.5, 0.0);
        assert!(max_abs(&(p.mat() * &mp * p.mat() - p.mat())) < 1e-15);
        assert!(max_abs(&(&mp * p.mat() * &mp - &mp)) < 1e-15);
        assert!(max_abs(&(&mp - p.mat())) > 0.4);
    }

    #[test]
    fn orthogonal_projector_case_also_returns_it() {
        let mut m = CMatrix::zeros(4, 4);
        m[(2, 2)] = c(1.0, 0.0);
        m[(3, 3)] = c(1.0, 0.0);
        let p = SuperOp::new(2, m);
        let r = restricted_inverse(&p, &p).unwrap();
        assert_eq!(r.rank, 2);
        assert!(max_abs(&(r.inv.mat() - p.mat())) < 1e-13);
    }

    #[test]
    fn restricted_inverse_satisfies_defining_relations() {
        let p = oblique_projector(3.7);
        let u = SuperOp::new(2, probe(4, 11.0));
        let a = &(&p * &u) * &p;
        let r = restricted_inverse(&a, &p).unwrap();
        let b = &r.inv;

        let id = SuperOp::identity(2);
        let q = &id - &p;
        assert!((&(b * &a) - &p).max_abs() < tol::RESTRICTED_INVERSE_RESIDUAL);
        assert!((&(&a * b) - &p).max_abs() < tol::RESTRICTED_INVERSE_RESIDUAL);
        assert!((b * &q).max_abs() < tol::RESTRICTED_INVERSE_ANNIHILATION);
        assert!((&q * b).max_abs() < tol::RESTRICTED_INVERSE_ANNIHILATION);
        assert!(r.cond >= 1.0);
        assert!(r.min_sv > 0.0);
    }

    #[test]
    fn two_sided_inverse_links_distinct_subspaces() {
        let p_from = oblique_projector(3.7);
        let p_to = oblique_projector(15.3);
        let u = SuperOp::new(2, probe(4, 11.0));
        let a = &(&p_to * &u) * &p_from;
        let r = restricted_inverse_between(&a, &p_from, &p_to).unwrap();
        let b = &r.inv;

        let id = SuperOp::identity(2);
        assert!((&(b * &a) - &p_from).max_abs() < tol::RESTRICTED_INVERSE_RESIDUAL);
        assert!((&(&a * b) - &p_to).max_abs() < tol::RESTRICTED_INVERSE_RESIDUAL);
        assert!((b * &(&id - &p_to)).max_abs() < tol::RESTRICTED_INVERSE_ANNIHILATION);
        assert!((&(&id - &p_from) * b).max_abs() < tol::RESTRICTED_INVERSE_ANNIHILATION);
    }

    #[test]
    fn off_range_blocks_of_the_operand_are_ignored() {
        let p = oblique_projector(9.2);
        let u = SuperOp::new(2, probe(4, 2.4));
        let compressed = &(&p * &u) * &p;
        let noisy = &compressed
            + &SuperOp::new(2, probe(4, 6.6)).compose(&(&SuperOp::identity(2) - &p));
        let r_clean = restricted_inverse(&compressed, &p).unwrap();
        let r_noisy = restricted_inverse(&noisy, &p).unwrap();
        assert!((&r_clean.inv - &r_noisy.inv).max_abs() < 1e-10);
    }

    #[test]
    fn nilpotent_compression_is_rejected_as_singular() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        let p = SuperOp::new(2, m);
        let mut shift = CMatrix::zeros(4, 4);
        shift[(0, 1)] = c(1.0, 0.0);
        let a = SuperOp::new(2, shift);
        match restricted_inverse(&a, &p) {
            Err(Error::SingularOnRange { .. }) => {}
            other => panic!("expected SingularOnRange, got {other:?}"),
        }
    }

    #[test]
    fn non_idempotent_input_is_rejected() {
        let p = SuperOp::new(2, CMatrix::identity(4, 4) * c(0.5, 0.0));
        let a = SuperOp::new(2, probe(4, 1.0));
        match restricted_inverse(&a, &p) {
            Err(Error::NotAProjector { .. }) => {}
            other => panic!("expected NotAProjector, got {other:?}"),
        }
    }
}
