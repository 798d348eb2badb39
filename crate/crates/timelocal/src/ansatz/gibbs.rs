//! Exponential family `rho(E) = exp(-sum_m beta_m P_m) / Z`, with the
//! parameters `beta` fixed implicitly by the consistency conditions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{expm_frechet, CMatrix, C64};
use crate::tol;

use super::{check_moment_count, moment_match, AnsatzFamily, Domain, RelevantObservables};

pub struct GibbsAnsatz {
    obs: RelevantObservables,
    domain: Domain,
}

struct Solved {
    rho: CMatrix,
    // d rho / d beta_k at the solution.
    beta_grad: Vec<CMatrix>,
}

impl GibbsAnsatz {
    pub fn new(obs: RelevantObservables) -> Self {
        Self {
            obs,
            domain: Domain::sup_ball(tol::DEFAULT_QUBIT_DOMAIN),
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    // State, residual and Jacobian at fixed parameters. The exponent is
    // shifted so its largest eigenvalue is zero; the shift cancels from
    // every returned quantity and keeps the exponential finite for any
    // parameter vector the iteration wanders through.
    fn data(
        &self,
        beta: &DVector<f64>,
        targets: &[f64],
    ) -> Result<(Solved, DVector<f64>, DMatrix<f64>)> {
        let d = self.obs.dim();
        let m = self.obs.len();
        let mut b = CMatrix::zeros(d, d);
        for (k, p) in self.obs.ops().iter().enumerate() {
            b += p * C64::new(beta[k], 0.0);
        }
        let lam_min = nalgebra::SymmetricEigen::new(b.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &x| acc.min(x));
        let a = CMatrix::identity(d, d) * C64::new(lam_min, 0.0) - b;

        let mut z = 1.0;
        let mut rho = CMatrix::zeros(d, d);
        let mut dk = Vec::with_capacity(m);
        for (k, p) in self.obs.ops().iter().enumerate() {
            let (exp_a, frechet) = expm_frechet(&a, &(-p));
            if k == 0 {
                z = exp_a.trace().re;
                rho = exp_a / C64::new(z, 0.0);
            }
            dk.push(frechet);
        }

        let moments = self.obs.moments(&rho);
        let res = DVector::from_fn(m, |i, _| moments[i] - targets[i]);
        let jac = DMatrix::from_fn(m, m, |row, col| {
            ((self.obs.op(row) * &dk[col]).trace().re - moments[row] * dk[col].trace().re) / z
        });
        let beta_grad = dk
            .iter()
            .map(|dkk| (dkk - &rho * dkk.trace()) / C64::new(z, 0.0))
            .collect();
        Ok((Solved { rho, beta_grad }, res, jac))
    }

    fn solve(&self, e: &[f64], guess: Option<&[f64]>) -> Result<(Solved, DVector<f64>, DMatrix<f64>)> {
        check_moment_count(&self.obs, e)?;
        let beta0 = match guess {
            Some(g) => {
                if g.len() != self.obs.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.obs.len(),
                        got: g.len(),
                    });
                }
                DVector::from_column_slice(g)
            }
            None => DVector::zeros(self.obs.len()),
        };
        let mm = moment_match(&mut |beta| self.data(beta, e), beta0)?;
        Ok((mm.state, mm.beta, mm.jacobian))
    }

    /// Parameters `beta` solving the consistency conditions at `e`.
    pub fn parameters_for(&self, e: &[f64]) -> Result<DVector<f64>> {
        Ok(self.solve(e, None)?.1)
    }

    /// Evaluation warm-started from a nearby parameter vector, for callers
    /// sweeping the moments continuously.
    pub fn eval_with_guess(&self, e: &[f64], guess: &[f64]) -> Result<CMatrix> {
        Ok(self.solve(e, Some(guess))?.0.rho)
    }
}

impl AnsatzFamily for GibbsAnsatz {
    fn observables(&self) -> &RelevantObservables {
        &self.obs
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, e: &[f64]) -> Result<CMatrix> {
        Ok(self.solve(e, None)?.0.rho)
    }

    fn grad(&self, e: &[f64]) -> Result<Vec<CMatrix>> {
        let (solved, _, jac) = self.solve(e, None)?;
        // d beta / d E is the inverse moment-map Jacobian; chain through
        // d rho / d beta.
        let inv = jac.lu().try_inverse().ok_or(Error::IllConditioned {
            cond: f64::INFINITY,
            cap: tol::COEFFICIENT_CONDITION_CAP,
        })?;
        let m = self.obs.len();
        let d = self.obs.dim();
        Ok((0..m)
            .map(|n| {
                let mut g = CMatrix::zeros(d, d);
                for k in 0..m {
                    g += &solved.beta_grad[k] * C64::new(inv[(k, n)], 0.0);
                }
                g
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::numeric_grad;
    use crate::linalg::{max_abs, pauli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z_observable() -> RelevantObservables {
        let [_, _, _, sz] = pauli();
        RelevantObservables::new(vec![sz]).unwrap()
    }

    fn xz_observables() -> RelevantObservables {
        let [_, sx, _, sz] = pauli();
        RelevantObservables::new(vec![sx, sz]).unwrap()
    }

    // One polarization observable: rho = diag(e^-beta, e^beta)/Z, so the
    // moment is E = -tanh(beta). Inverting E = -tanh(1) must find beta = 1.
    #[test]
    fn polarization_inverts_the_known_closed_form() {
        let family = GibbsAnsatz::new(z_observable());
        let e = -0.7615941559557649;
        let beta = family.parameters_for(&[e]).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-9, "beta = {}", beta[0]);

        let [id, _, _, sz] = pauli();
        let expected = (id + &sz * C64::new(e, 0.0)) * C64::new(0.5, 0.0);
        let rho = family.eval(&[e]).unwrap();
        assert!(max_abs(&(rho - expected)) < 1e-12);
    }

    #[test]
    fn moments_round_trip_through_the_family() {
        let family = GibbsAnsatz::new(xz_observables());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let radius = rng.random_range(0.0..0.85);
            let e = [radius * angle.cos(), radius * angle.sin()];
            let rho = family.eval(&e).unwrap();
            let m = family.observables().moments(&rho);
            assert!((m[0] - e[0]).abs() < 1e-11);
            assert!((m[1] - e[1]).abs() < 1e-11);
        }
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let family = GibbsAnsatz::new(xz_observables());
        let e = [0.3, -0.2];
        let analytic = family.grad(&e).unwrap();
        let numeric = numeric_grad(&family, &e).unwrap();
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(max_abs(&(a - n)) < 1e-8);
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let family = GibbsAnsatz::new(xz_observables());
        let beta = family.parameters_for(&[0.3, 0.1]).unwrap();
        let e = [0.32, 0.08];
        let warm = family.eval_with_guess(&e, beta.as_slice()).unwrap();
        let cold = family.eval(&e).unwrap();
        assert!(max_abs(&(warm - cold)) < 1e-12);
    }

    #[test]
    fn unreachable_moments_fail_to_converge() {
        let family = GibbsAnsatz::new(xz_observables());
        assert!(matches!(
            family.eval(&[1.2, 0.0]),
            Err(Error::NonConvergence { .. })
        ));
    }
}
