//! Matrix exponentials and Hermitian matrix functions.
//!
//! The dense exponential uses scaling-and-squaring with a Pade-type
//! approximant (nalgebra's implementation of the standard algorithm); the
//! directional derivative comes from the block-augmented exponential, which
//! inherits the accuracy of the exponential itself.

use super::matrices::{CMatrix, C64};

/// Dense matrix exponential.
pub fn expm(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// Exponential together with its Frechet derivative in direction `e`:
/// `exp([[a, e], [0, a]])` has `exp(a)` on the diagonal blocks and the
/// directional derivative `d/ds exp(a + s e)|_{s=0}` in the upper-right one.
pub fn expm_frechet(a: &CMatrix, e: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(e.shape(), (n, n));
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(e);
    block.view_mut((n, n), (n, n)).copy_from(a);
    let eb = block.exp();
    let exp_a = eb.view((0, 0), (n, n)).into_owned();
    let frechet = eb.view((0, n), (n, n)).into_owned();
    (exp_a, frechet)
}

/// `f(w)` for Hermitian `w`, through the eigendecomposition.
pub fn hermitian_function(w: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let se = nalgebra::SymmetricEigen::new(w.clone());
    let fd = CMatrix::from_diagonal(&se.eigenvalues.map(|x| C64::new(f(x), 0.0)));
    &se.eigenvectors * fd * se.eigenvectors.adjoint()
}

/// `f(w)` and its Frechet derivative in direction `dir` for Hermitian `w`,
/// by first divided differences on the eigenbasis. `fp` is `f'`; it is used
/// on the diagonal and whenever two eigenvalues nearly coincide.
pub fn hermitian_function_frechet(
    w: &CMatrix,
    f: impl Fn(f64) -> f64,
    fp: impl Fn(f64) -> f64,
    dir: &CMatrix,
) -> (CMatrix, CMatrix) {
    let se = nalgebra::SymmetricEigen::new(w.clone());
    let u = &se.eigenvectors;
    let lam = &se.eigenvalues;
    let n = lam.len();
    let scale = lam.iter().fold(1.0_f64, |m, &x| m.max(x.abs()));
    let fd = CMatrix::from_diagonal(&lam.map(|x| C64::new(f(x), 0.0)));
    let value = u * fd * u.adjoint();
    let d_in_basis = u.adjoint() * dir * u;
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (lam[i], lam[j]);
            let dd = if (li - lj).abs() < 1e-8 * scale {
                fp(0.5 * (li + lj))
            } else {
                (f(li) - f(lj)) / (li - lj)
            };
            g[(i, j)] = d_in_basis[(i, j)] * C64::new(dd, 0.0);
        }
    }
    let frechet = u * g * u.adjoint();
    (value, frechet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrices::max_abs;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic dense complex matrix with entries of order one.
    fn probe_matrix(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let x = ((i * n + j) as f64 + seed) * 0.7391;
            c(x.sin(), (1.3 * x).cos() * 0.5)
        })
    }

    fn hermitian_probe(n: usize, seed: f64) -> CMatrix {
        let a = probe_matrix(n, seed);
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    #[test]
    fn expm_matches_eigendecomposition_for_hermitian_input() {
        let h = hermitian_probe(4, 0.31);
        let direct = expm(&h);
        let via_eigen = hermitian_function(&h, f64::exp);
        assert!(max_abs(&(direct - via_eigen)) < 1e-12);
    }

    #[test]
    fn expm_inverse_is_exponential_of_negation() {
        let a = probe_matrix(4, 1.7);
        let prod = expm(&a) * expm(&(-&a));
        assert!(max_abs(&(prod - CMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::zeros(3, 3);
        assert!(max_abs(&(expm(&z) - CMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn frechet_matches_central_differences() {
        let a = probe_matrix(4, 2.9);
        let e = probe_matrix(4, 5.3);
        let (_, frechet) = expm_frechet(&a, &e);
        let h = 1e-5;
        let plus = expm(&(&a + &e * c(h, 0.0)));
        let minus = expm(&(&a - &e * c(h, 0.0)));
        let fd = (plus - minus) * c(0.5 / h, 0.0);
        assert!(max_abs(&(frechet - fd)) < 1e-8);
    }

    #[test]
    fn frechet_block_diagonal_reproduces_expm() {
        let a = probe_matrix(3, 0.13);
        let e = probe_matrix(3, 4.4);
        let (exp_a, _) = expm_frechet(&a, &e);
        assert!(max_abs(&(exp_a - expm(&a))) < 1e-12);
    }

    #[test]
    fn hermitian_function_frechet_matches_central_differences() {
        let w0 = hermitian_probe(4, 0.77);
        // Shift to safely positive spectrum for the power function.
        let w = &w0 + CMatrix::identity(4, 4) * c(6.0, 0.0);
        let dir = hermitian_probe(4, 3.1);
        let p = -2.0_f64;
        let (_, frechet) =
            hermitian_function_frechet(&w, |x| x.powf(p), |x| p * x.powf(p - 1.0), &dir);
        let h = 1e-5;
        let plus = hermitian_function(&(&w + &dir * c(h, 0.0)), |x| x.powf(p));
        let minus = hermitian_function(&(&w - &dir * c(h, 0.0)), |x| x.powf(p));
        let fd = (plus - minus) * c(0.5 / h, 0.0);
        assert!(max_abs(&(frechet - fd)) < 1e-7);
    }

    #[test]
    fn hermitian_function_frechet_handles_degenerate_spectrum() {
        // sigma_x has eigenvalues +-1; direction proportional to w itself
        // keeps the same eigenbasis, so d f(w + s w) = f'(w) w exactly.
        let w = crate::linalg::pauli()[1].clone();
        let (_, frechet) = hermitian_function_frechet(&w, |x| x * x * x, |x| 3.0 * x * x, &w);
        // f'(w) w for w = sigma_x: eigenvalues 3 * 1 * (+-1)^2... on each
        // branch f'(l) l = 3 l^3 = 3 l, so the result is 3 sigma_x.
        let expected = &w * c(3.0, 0.0);
        assert!(max_abs(&(frechet - expected)) < 1e-12);
    }
}
