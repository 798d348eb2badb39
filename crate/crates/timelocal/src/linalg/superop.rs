//! Linear maps on operators, stored as dense matrices acting on
//! column-stacked vectorizations.
//!
//! With column stacking, `vec(a x b) = (b^T kron a) vec(x)`; every
//! constructor below reduces to that identity.

use super::expm::expm;
use super::matrices::{devectorize, kron, vectorize, CMatrix, C64};
use std::ops::{Add, Mul, Neg, Sub};

/// A linear map on `dim x dim` matrices, represented as a `dim^2 x dim^2`
/// matrix in the column-stacking convention.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    dim: usize,
    mat: CMatrix,
}

impl SuperOp {
    /// Wraps an explicit `dim^2 x dim^2` matrix.
    ///
    /// Panics if the matrix shape does not match `dim`.
    pub fn new(dim: usize, mat: CMatrix) -> Self {
        assert_eq!(mat.shape(), (dim * dim, dim * dim), "superoperator shape");
        Self { dim, mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, CMatrix::identity(dim * dim, dim * dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, CMatrix::zeros(dim * dim, dim * dim))
    }

    /// Builds the matrix of an arbitrary linear map by evaluating it on
    /// matrix units: column `i + j*dim` is `vec(f(E_ij))`.
    pub fn from_action(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let d2 = dim * dim;
        let mut mat = CMatrix::zeros(d2, d2);
        for j in 0..dim {
            for i in 0..dim {
                let mut unit = CMatrix::zeros(dim, dim);
                unit[(i, j)] = C64::new(1.0, 0.0);
                let image = f(&unit);
                assert_eq!(image.shape(), (dim, dim), "map image shape");
                mat.set_column(i + j * dim, &vectorize(&image));
            }
        }
        Self { dim, mat }
    }

    /// The map `x -> a x`.
    pub fn left_mult(a: &CMatrix) -> Self {
        let dim = a.nrows();
        assert_eq!(a.ncols(), dim);
        let id = CMatrix::identity(dim, dim);
        Self::new(dim, kron(&id, a))
    }

    /// The map `x -> x b`.
    pub fn right_mult(b: &CMatrix) -> Self {
        let dim = b.nrows();
        assert_eq!(b.ncols(), dim);
        let id = CMatrix::identity(dim, dim);
        Self::new(dim, kron(&b.transpose(), &id))
    }

    /// The map `x -> a x b`.
    pub fn mult_pair(a: &CMatrix, b: &CMatrix) -> Self {
        let dim = a.nrows();
        assert_eq!(a.ncols(), dim);
        assert_eq!(b.shape(), (dim, dim));
        Self::new(dim, kron(&b.transpose(), a))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    /// Applies the map to a matrix.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.shape(), (self.dim, self.dim), "operand shape");
        devectorize(&(&self.mat * vectorize(x)), self.dim)
    }

    /// Composition `self after other`: `(self.compose(&g)).apply(x) =
    /// self.apply(&g.apply(x))`.
    pub fn compose(&self, other: &SuperOp) -> Self {
        assert_eq!(self.dim, other.dim, "composition dimension");
        Self::new(self.dim, &self.mat * &other.mat)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.dim, &self.mat * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Frobenius norm of the representing matrix.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Largest entry modulus of the representing matrix.
    pub fn max_abs(&self) -> f64 {
        super::matrices::max_abs(&self.mat)
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Self::new(self.dim, self.mat.adjoint())
    }

    /// `exp(self)` as a map, via the dense matrix exponential.
    pub fn expm(&self) -> Self {
        Self::new(self.dim, expm(&self.mat))
    }

    pub fn is_finite(&self) -> bool {
        self.mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &SuperOp {
    type Output = SuperOp;
    fn add(self, rhs: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, rhs.dim);
        SuperOp::new(self.dim, &self.mat + &rhs.mat)
    }
}

impl Sub for &SuperOp {
    type Output = SuperOp;
    fn sub(self, rhs: &SuperOp) -> SuperOp {
        assert_eq!(self.dim, rhs.dim);
        SuperOp::new(self.dim, &self.mat - &rhs.mat)
    }
}

impl Neg for &SuperOp {
    type Output = SuperOp;
    fn neg(self) -> SuperOp {
        SuperOp::new(self.dim, -&self.mat)
    }
}

impl Mul for &SuperOp {
    type Output = SuperOp;
    fn mul(self, rhs: &SuperOp) -> SuperOp {
        self.compose(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrices::max_abs;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn probe(dim: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(dim, dim, |i, j| {
            let x = ((i * dim + j) as f64 + seed) * 1.137;
            c(x.sin(), x.cos() * 0.4)
        })
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let (a, b, x) = (probe(3, 0.2), probe(3, 7.5), probe(3, 3.3));
        let sandwich = SuperOp::mult_pair(&a, &b);
        assert!(max_abs(&(sandwich.apply(&x) - &a * &x * &b)) < 1e-13);
    }

    #[test]
    fn left_and_right_factors_compose_into_sandwich() {
        let (a, b) = (probe(2, 1.1), probe(2, 2.2));
        let two_step = SuperOp::left_mult(&a).compose(&SuperOp::right_mult(&b));
        let one_step = SuperOp::mult_pair(&a, &b);
        assert!(max_abs(&(two_step.mat() - one_step.mat())) < 1e-13);
    }

    #[test]
    fn from_action_reproduces_left_multiplication() {
        let a = probe(3, 4.9);
        let via_action = SuperOp::from_action(3, |x| &a * x);
        let direct = SuperOp::left_mult(&a);
        assert!(max_abs(&(via_action.mat() - direct.mat())) < 1e-13);
    }

    #[test]
    fn compose_agrees_with_sequential_application() {
        let f = SuperOp::from_action(2, |x| probe(2, 0.4) * x + x * probe(2, 9.0));
        let g = SuperOp::from_action(2, |x| probe(2, 5.5) * x * probe(2, 6.6));
        let x = probe(2, 8.1);
        let composed = f.compose(&g).apply(&x);
        let sequential = f.apply(&g.apply(&x));
        assert!(max_abs(&(composed - sequential)) < 1e-13);
    }

    #[test]
    fn identity_acts_trivially_and_exponentiates_to_e() {
        let id = SuperOp::identity(2);
        let x = probe(2, 0.9);
        assert!(max_abs(&(id.apply(&x) - &x)) < 1e-15);
        let e_id = id.expm();
        let expected = CMatrix::identity(4, 4) * c(std::f64::consts::E, 0.0);
        assert!(max_abs(&(e_id.mat() - &expected)) < 1e-12);
    }

    #[test]
    fn adjoint_transposes_hilbert_schmidt_pairing() {
        let f = SuperOp::from_action(2, |x| probe(2, 1.3) * x * probe(2, 2.6));
        let (a, b) = (probe(2, 3.9), probe(2, 4.2));
        let lhs = (a.adjoint() * f.apply(&b)).trace();
        let rhs = (f.adjoint().apply(&a).adjoint() * b).trace();
        assert!((lhs - rhs).norm() < 1e-13);
    }
}
