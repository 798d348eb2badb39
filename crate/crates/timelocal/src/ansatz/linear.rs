//! Linear family `rho(E) = rho_0 + sum_n E_n X_n` on the span of the
//! identity and the relevant observables. The response matrices are
//! biorthogonal to the observables, which makes the consistency conditions
//! hold identically; positivity is not guaranteed and is deliberately not
//! enforced.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{hs_inner, CMatrix, C64};
use crate::tol;

use super::{check_moment_count, AnsatzFamily, Domain, RelevantObservables};

pub struct LinearAnsatz {
    obs: RelevantObservables,
    domain: Domain,
    base: CMatrix,
    responses: Vec<CMatrix>,
}

impl LinearAnsatz {
    pub fn new(obs: RelevantObservables) -> Result<Self> {
        let d = obs.dim();
        let m = obs.len();
        // Basis {I, P_1, ..., P_M}; the coefficients of rho(E) in it are
        // G^{-1} (1, E)^T with G the Gram matrix.
        let mut basis = vec![CMatrix::identity(d, d)];
        basis.extend(obs.ops().iter().cloned());
        let gram = DMatrix::from_fn(m + 1, m + 1, |a, b| hs_inner(&basis[a], &basis[b]).re);
        let inv = gram
            .lu()
            .try_inverse()
            .ok_or(Error::LinearlyDependent { min_sv: 0.0 })?;

        let column = |col: usize| {
            let mut out = CMatrix::zeros(d, d);
            for (a, ba) in basis.iter().enumerate() {
                out += ba * C64::new(inv[(a, col)], 0.0);
            }
            out
        };
        let base = column(0);
        let responses: Vec<CMatrix> = (1..=m).map(column).collect();

        let mut deviation = (base.trace().re - 1.0).abs().max(base.trace().im.abs());
        for (n, x) in responses.iter().enumerate() {
            deviation = deviation.max(x.trace().norm());
            deviation = deviation.max((obs.op(n) * &base).trace().norm());
            for mm in 0..m {
                let delta = if mm == n { 1.0 } else { 0.0 };
                deviation = deviation.max(((obs.op(mm) * x).trace().re - delta).abs());
                deviation = deviation.max((obs.op(mm) * x).trace().im.abs());
            }
        }
        if deviation > tol::BIORTHOGONALITY {
            return Err(Error::BiorthogonalityViolation { deviation });
        }

        Ok(Self {
            obs,
            domain: Domain::sup_ball(tol::DEFAULT_QUBIT_DOMAIN),
            base,
            responses,
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn base_state(&self) -> &CMatrix {
        &self.base
    }

    pub fn responses(&self) -> &[CMatrix] {
        &self.responses
    }
}

impl AnsatzFamily for LinearAnsatz {
    fn observables(&self) -> &RelevantObservables {
        &self.obs
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, e: &[f64]) -> Result<CMatrix> {
        check_moment_count(&self.obs, e)?;
        let mut rho = self.base.clone();
        for (x, &en) in self.responses.iter().zip(e) {
            rho += x * C64::new(en, 0.0);
        }
        Ok(rho)
    }

    fn grad(&self, e: &[f64]) -> Result<Vec<CMatrix>> {
        check_moment_count(&self.obs, e)?;
        Ok(self.responses.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, pauli};

    #[test]
    fn pauli_construction_recovers_the_bloch_form() {
        let [id, sx, _, sz] = pauli();
        let obs = RelevantObservables::new(vec![sx.clone(), sz.clone()]).unwrap();
        let family = LinearAnsatz::new(obs).unwrap();
        let e = [0.3, -0.4];
        let rho = family.eval(&e).unwrap();
        let expected = (&id + &sx * C64::new(0.3, 0.0) + &sz * C64::new(-0.4, 0.0))
            * C64::new(0.5, 0.0);
        assert!(max_abs(&(&rho - &expected)) < 1e-15);
        let grad = family.grad(&e).unwrap();
        assert!(max_abs(&(&grad[0] - &(&sx * C64::new(0.5, 0.0)))) < 1e-15);
        assert!(max_abs(&(&grad[1] - &(&sz * C64::new(0.5, 0.0)))) < 1e-15);
    }

    #[test]
    fn skewed_observables_stay_biorthogonal() {
        let [_, sx, _, sz] = pauli();
        // Non-orthogonal pair: the Gram matrix has off-diagonal entries.
        let skewed = &sz + &sx * C64::new(0.5, 0.0);
        let obs = RelevantObservables::new(vec![sz.clone(), skewed]).unwrap();
        let family = LinearAnsatz::new(obs).unwrap();
        let obs = family.observables();
        assert!((family.base_state().trace().re - 1.0).abs() < 1e-14);
        for (n, x) in family.responses().iter().enumerate() {
            assert!(x.trace().norm() < 1e-14);
            for m in 0..obs.len() {
                let delta = if m == n { 1.0 } else { 0.0 };
                assert!(((obs.op(m) * x).trace().re - delta).abs() < 1e-14);
            }
        }
    }

    // The linear family admits moment vectors whose image is not a state;
    // that deficiency is intrinsic and intentionally left visible.
    #[test]
    fn large_moments_leave_the_positive_cone() {
        let [_, sx, _, sz] = pauli();
        let obs = RelevantObservables::new(vec![sx, sz]).unwrap();
        let family = LinearAnsatz::new(obs).unwrap();
        let rho = family.eval(&[0.8, 0.8]).unwrap();
        let min_eig = nalgebra::SymmetricEigen::new(rho)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &x| acc.min(x));
        assert!(min_eig < -0.05, "min eigenvalue {min_eig}");
    }
}
