//! Maximum Renyi entropy family of index `q`. The stationary states have
//! the form
//!
//! `rho(E) = W^{1/(q-1)} / Tr W^{1/(q-1)}`,
//! `W = 1 + ((q-1)/q) sum_m beta_m (E_m - P_m)`,
//!
//! with the parameters `beta` fixed by the consistency conditions. `W`
//! must stay strictly positive for the fractional power to define a state;
//! an indefinite `W` is rejected outright rather than repaired by clipping
//! its spectrum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_function_frechet, CMatrix, C64};
use crate::tol;

use super::{
    check_moment_count, moment_match, numeric_grad, AnsatzFamily, Domain, RelevantObservables,
};

pub struct RenyiAnsatz {
    obs: RelevantObservables,
    domain: Domain,
    q: f64,
}

impl RenyiAnsatz {
    pub fn new(obs: RelevantObservables, q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::InvalidParameter(
                "entropy index must be positive and finite".into(),
            ));
        }
        if (q - 1.0).abs() < 1e-9 {
            return Err(Error::InvalidParameter(
                "entropy index one is the exponential-family limit".into(),
            ));
        }
        Ok(Self {
            obs,
            domain: Domain::sup_ball(tol::DEFAULT_QUBIT_DOMAIN),
            q,
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn data(
        &self,
        beta: &DVector<f64>,
        targets: &[f64],
    ) -> Result<(CMatrix, DVector<f64>, DMatrix<f64>)> {
        let d = self.obs.dim();
        let m = self.obs.len();
        let c = (self.q - 1.0) / self.q;
        let id = CMatrix::identity(d, d);

        let mut w = id.clone();
        for (k, p) in self.obs.ops().iter().enumerate() {
            w += (&id * C64::new(targets[k], 0.0) - p) * C64::new(c * beta[k], 0.0);
        }

        let eigs = nalgebra::SymmetricEigen::new(w.clone()).eigenvalues;
        let min_eig = eigs.iter().fold(f64::INFINITY, |acc, &x| acc.min(x));
        let scale = eigs.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
        // Strict positivity with a relative floor: a numerically singular
        // W is rejected the same way as an indefinite one.
        if min_eig <= f64::EPSILON * scale {
            return Err(Error::PositivityViolation { min_eig });
        }

        let p_exp = 1.0 / (self.q - 1.0);
        let f = |x: f64| x.powf(p_exp);
        let fp = |x: f64| p_exp * x.powf(p_exp - 1.0);

        let mut z = 1.0;
        let mut rho = CMatrix::zeros(d, d);
        let mut dk = Vec::with_capacity(m);
        for (k, p) in self.obs.ops().iter().enumerate() {
            let dir = (&id * C64::new(targets[k], 0.0) - p) * C64::new(c, 0.0);
            let (wp, frechet) = hermitian_function_frechet(&w, f, fp, &dir);
            if k == 0 {
                z = wp.trace().re;
                rho = wp / C64::new(z, 0.0);
            }
            dk.push(frechet);
        }
        if !(z.is_finite() && z > 0.0) || rho.iter().any(|x| !x.re.is_finite() || !x.im.is_finite())
        {
            return Err(Error::PositivityViolation { min_eig });
        }

        let moments = self.obs.moments(&rho);
        let res = DVector::from_fn(m, |i, _| moments[i] - targets[i]);
        let jac = DMatrix::from_fn(m, m, |row, col| {
            ((self.obs.op(row) * &dk[col]).trace().re - moments[row] * dk[col].trace().re) / z
        });
        Ok((rho, res, jac))
    }
}

impl AnsatzFamily for RenyiAnsatz {
    fn observables(&self) -> &RelevantObservables {
        &self.obs
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, e: &[f64]) -> Result<CMatrix> {
        check_moment_count(&self.obs, e)?;
        let beta0 = DVector::zeros(self.obs.len());
        Ok(moment_match(&mut |beta| self.data(beta, e), beta0)?.state)
    }

    // The parameters and the moments are entangled inside W, so the
    // gradient is taken by central differences through the full solve.
    fn grad(&self, e: &[f64]) -> Result<Vec<CMatrix>> {
        numeric_grad(self, e)
    }
}
