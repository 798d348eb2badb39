//! Rank, range, and singular-value computations that stay reliable for
//! complex matrices.
//!
//! The iterative complex SVD shipped with the matrix backend can silently
//! lose accuracy (observed: reconstruction defects around 1e-4 on benign
//! 4x4 inputs with close singular values). Everything here therefore builds
//! on two primitives with solid accuracy guarantees: Householder QR with
//! column pivoting, and the symmetric eigensolver applied to the Hermitian
//! dilation `[[0, m], [m^H, 0]]`, whose eigenvalues are exactly the signed
//! singular values of `m`.

use super::matrices::CMatrix;

/// Singular values of `m` in descending order, computed through the
/// Hermitian dilation. Accurate to machine precision relative to the
/// largest singular value, including values at or near zero.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let (nr, nc) = m.shape();
    let n = nr + nc;
    let mut h = CMatrix::zeros(n, n);
    h.view_mut((0, nr), (nr, nc)).copy_from(m);
    h.view_mut((nr, 0), (nc, nr)).copy_from(&m.adjoint());
    let eig = nalgebra::SymmetricEigen::new(h);
    // Eigenvalues come as +-sigma pairs (zeros paired with themselves);
    // every other entry of the sorted absolute values is one sigma.
    let mut abs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    abs.into_iter()
        .step_by(2)
        .take(nr.min(nc))
        .collect()
}

/// Orthonormal basis of the numerical column space of `m`, with the rank
/// decided by the pivoted-QR diagonal at relative threshold `rel_tol`.
pub fn range_basis(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let k = m.nrows().min(m.ncols());
    let lead = r[(0, 0)].norm();
    let rank = if lead == 0.0 {
        0
    } else {
        (0..k).take_while(|&i| r[(i, i)].norm() > rel_tol * lead).count()
    };
    let q = qr.q();
    (q.columns(0, rank).into_owned(), rank)
}

/// Numerical rank at relative threshold `rel_tol`, via singular values.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrices::{max_abs, C64};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn probe(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let x = ((i * n + j) as f64 + seed) * 0.8731;
            c(x.sin(), x.cos() * 0.6)
        })
    }

    #[test]
    fn singular_values_of_a_unitary_conjugated_diagonal_are_recovered() {
        // Build m with known singular values via Householder Q factors.
        let q1 = probe(4, 1.0).col_piv_qr().q();
        let q2 = probe(4, 2.0).col_piv_qr().q();
        let expected = [3.0, 1.5, 1e-5, 0.0];
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            expected.iter().map(|&x| c(x, 0.0)),
        ));
        let m = &q1 * d * q2.adjoint();
        let sv = singular_values(&m);
        for (got, want) in sv.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-13, "sigma {got} vs {want}");
        }
    }

    #[test]
    fn singular_values_match_frobenius_norm() {
        let m = probe(5, 7.7);
        let sv = singular_values(&m);
        let fro2: f64 = sv.iter().map(|s| s * s).sum();
        assert!((fro2.sqrt() - m.norm()).abs() < 1e-12);
    }

    #[test]
    fn range_basis_spans_the_column_space() {
        // Rank-2 matrix from two independent column factors.
        let a = probe(4, 0.3).columns(0, 2).into_owned();
        let b = probe(4, 5.1).columns(0, 2).into_owned();
        let m = &a * b.adjoint();
        let (basis, rank) = range_basis(&m, 1e-10);
        assert_eq!(rank, 2);
        // Orthonormality and invariance: projecting m onto the basis keeps it.
        assert!(max_abs(&(basis.adjoint() * &basis - CMatrix::identity(2, 2))) < 1e-13);
        let proj = &basis * basis.adjoint() * &m;
        assert!(max_abs(&(proj - m)) < 1e-13);
    }

    #[test]
    fn rank_counts_values_above_the_relative_cut() {
        let q1 = probe(3, 4.0).col_piv_qr().q();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            [1.0, 1e-3, 1e-14].iter().map(|&x| c(x, 0.0)),
        ));
        let m = &q1 * d * q1.adjoint();
        assert_eq!(rank(&m, 1e-10), 2);
        assert_eq!(rank(&CMatrix::zeros(3, 3), 1e-10), 0);
    }
}
