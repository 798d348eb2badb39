//! Operator-level helpers: vectorization, inner products, standard bases.

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

/// `[a, b] = ab - ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `{a, b} = ab + ba`.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Hilbert-Schmidt inner product `Tr(a^dagger b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    (a.adjoint() * b).trace()
}

/// Largest entry modulus, as a matrix max-norm for residual checks.
pub fn max_abs(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_ij |x - x^dagger|_ij`, zero for Hermitian input.
pub fn hermiticity_defect(x: &CMatrix) -> f64 {
    max_abs(&(x - x.adjoint()))
}

/// Column-stacking vectorization: entry `(i, j)` lands at position `i + j d`.
pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vectorize`] for a `d x d` operator.
pub fn devectorize(v: &CVector, d: usize) -> CMatrix {
    debug_assert_eq!(v.len(), d * d);
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// Kronecker product, first factor on the slow (block) index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Partial trace over the second factor of a composite space ordered
/// `S (x) B`, with composite index `s * dim_b + b`.
pub fn partial_trace_b(x: &CMatrix, dim_s: usize, dim_b: usize) -> CMatrix {
    debug_assert_eq!(x.nrows(), dim_s * dim_b);
    let mut out = CMatrix::zeros(dim_s, dim_s);
    for s in 0..dim_s {
        for sp in 0..dim_s {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..dim_b {
                acc += x[(s * dim_b + b, sp * dim_b + b)];
            }
            out[(s, sp)] = acc;
        }
    }
    out
}

/// `[I, sigma_x, sigma_y, sigma_z]`, unnormalized.
pub fn pauli() -> [CMatrix; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Raising operator `|0><1|` in the basis where `sigma_z |0> = |0>`.
pub fn sigma_plus() -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[z, o, z, z])
}

/// Lowering operator `|1><0|`.
pub fn sigma_minus() -> CMatrix {
    sigma_plus().transpose()
}

/// Hermitian, Hilbert-Schmidt-orthonormal operator basis with the first
/// element proportional to the identity.
#[derive(Debug, Clone)]
pub struct HSBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl HSBasis {
    /// Generalized Gell-Mann construction for dimension `d >= 2`: identity
    /// over sqrt(d), then the symmetric, antisymmetric, and diagonal
    /// traceless families, each normalized to unit Hilbert-Schmidt norm.
    /// For `d = 2` this is `{I, sigma_x, sigma_y, sigma_z} / sqrt(2)`.
    pub fn gell_mann(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let mut elements = Vec::with_capacity(d * d);
        let inv_sqrt_d = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        elements.push(CMatrix::identity(d, d) * inv_sqrt_d);
        let s = C64::new(1.0 / 2f64.sqrt(), 0.0);
        for j in 0..d {
            for k in (j + 1)..d {
                let mut sym = CMatrix::zeros(d, d);
                sym[(j, k)] = s;
                sym[(k, j)] = s;
                elements.push(sym);
                let mut asym = CMatrix::zeros(d, d);
                asym[(j, k)] = C64::new(0.0, -1.0) * s;
                asym[(k, j)] = C64::new(0.0, 1.0) * s;
                elements.push(asym);
            }
        }
        for l in 1..d {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut diag = CMatrix::zeros(d, d);
            for j in 0..l {
                diag[(j, j)] = C64::new(norm, 0.0);
            }
            diag[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
            elements.push(diag);
        }
        debug_assert_eq!(elements.len(), d * d);
        Ok(Self { dim: d, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Gram matrix of pairwise Hilbert-Schmidt inner products.
    pub fn gram(&self) -> CMatrix {
        let n = self.elements.len();
        CMatrix::from_fn(n, n, |i, j| hs_inner(&self.elements[i], &self.elements[j]))
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.elements.len();
        max_abs(&(self.gram() - CMatrix::identity(n, n)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vectorize_is_column_major() {
        let x = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vectorize(&x);
        // Column stacking: (0,0), (1,0), (0,1), (1,1).
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(v[2], c(2.0, 0.0));
        assert_eq!(v[3], c(4.0, 0.0));
        assert_eq!(devectorize(&v, 2), x);
    }

    #[test]
    fn pauli_algebra() {
        let [id, sx, sy, sz] = pauli();
        assert!(max_abs(&(commutator(&sx, &sy) - &sz * c(0.0, 2.0))) < 1e-15);
        assert!(max_abs(&(&sx * &sx - &id)) < 1e-15);
        assert!(max_abs(&anticommutator(&sx, &sz)) < 1e-15);
        assert!(max_abs(&(sigma_plus() + sigma_minus() - &sx)) < 1e-15);
    }

    #[test]
    fn gell_mann_is_orthonormal_hermitian_and_starts_at_identity() {
        for d in 2..=5 {
            let basis = HSBasis::gell_mann(d).unwrap();
            assert_eq!(basis.len(), d * d);
            assert!(basis.orthonormality_defect() < tol::BASIS_ORTHONORMALITY);
            for b in basis.elements() {
                assert!(hermiticity_defect(b) < tol::HERMITICITY);
            }
            let scaled_id = CMatrix::identity(d, d) * c(1.0 / (d as f64).sqrt(), 0.0);
            assert!(max_abs(&(basis.elements()[0].clone() - scaled_id)) < 1e-15);
        }
    }

    #[test]
    fn gell_mann_dim_two_is_scaled_pauli() {
        let basis = HSBasis::gell_mann(2).unwrap();
        let [id, sx, sy, sz] = pauli();
        let s = c(1.0 / 2f64.sqrt(), 0.0);
        // Construction order: identity, symmetric (x), antisymmetric (y), diagonal (z).
        for (got, want) in basis.elements().iter().zip([id, sx, sy, sz]) {
            assert!(max_abs(&(got - want * s)) < 1e-15);
        }
    }

    #[test]
    fn gell_mann_rejects_dimension_below_two() {
        assert!(HSBasis::gell_mann(1).is_err());
    }

    #[test]
    fn partial_trace_of_product_state_factors() {
        let [_, sx, _, sz] = pauli();
        let rho_s = (CMatrix::identity(2, 2) + &sz * c(0.3, 0.0)) * c(0.5, 0.0);
        let rho_b = (CMatrix::identity(2, 2) + &sx * c(0.7, 0.0)) * c(0.5, 0.0);
        let joint = kron(&rho_s, &rho_b);
        let reduced = partial_trace_b(&joint, 2, 2);
        assert!(max_abs(&(reduced - &rho_s)) < 1e-14);
    }
}
