//! Two-level family tracking the polarization alone:
//!
//! `rho(E) = (1 + E sigma_z + f(E) sigma_x + g(E) sigma_y) / 2`.
//!
//! The transverse profiles `f` and `g` are arbitrary differentiable
//! functions pinned to the tracked moment; they make the family nonlinear
//! without enlarging the moment vector.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{pauli, CMatrix, C64};
use crate::tol;

use super::{check_moment_count, AnsatzFamily, Domain, RelevantObservables};

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub struct TwoLevelAnsatz {
    obs: RelevantObservables,
    domain: Domain,
    f: Profile,
    fp: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    g: Profile,
    gp: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    sqrt_coord: bool,
}

impl TwoLevelAnsatz {
    /// Family with explicit transverse profiles and their derivatives.
    pub fn with_profiles(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fp: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        gp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let [_, _, _, sz] = pauli();
        let obs = RelevantObservables::new(vec![sz])
            .expect("the polarization observable is admissible");
        let f: Profile = Arc::new(f);
        let g: Profile = Arc::new(g);
        let (fd, gd) = (f.clone(), g.clone());
        let domain = Domain::new(move |e| {
            e.len() == 1 && e[0].abs() <= tol::DEFAULT_QUBIT_DOMAIN && {
                let x = e[0];
                x * x + fd(x).powi(2) + gd(x).powi(2) <= 1.0
            }
        });
        Self {
            obs,
            domain,
            f,
            fp: Box::new(fp),
            g: Arc::clone(&g),
            gp: Box::new(gp),
            sqrt_coord: false,
        }
    }

    /// The square-root profile `g(E) = alpha sqrt(E)`, `f = 0`. The moment
    /// enters through its square root, so the family declares the
    /// square-root coordinate for the mean dynamics and its domain
    /// excludes the branch point at zero.
    pub fn with_sqrt_g(alpha: f64) -> Self {
        Self::with_sqrt_g_profile(alpha, |_| 0.0, |_| 0.0)
    }

    /// Square-root transverse profile `g(E) = alpha sqrt(E)` combined with
    /// an arbitrary in-plane profile `f`.
    pub fn with_sqrt_g_profile(
        alpha: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let g = move |x: f64| alpha * x.max(0.0).sqrt();
        let gp = move |x: f64| alpha / (2.0 * x.sqrt());
        let mut fam = Self::with_profiles(f, fp, g, gp);
        let fd = Arc::clone(&fam.f);
        fam.domain = Domain::new(move |e| {
            e.len() == 1 && {
                let x = e[0];
                x > 0.0
                    && x <= tol::DEFAULT_QUBIT_DOMAIN
                    && x * x + fd(x).powi(2) + alpha * alpha * x <= 1.0
            }
        });
        fam.sqrt_coord = true;
        fam
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }
}

impl AnsatzFamily for TwoLevelAnsatz {
    fn observables(&self) -> &RelevantObservables {
        &self.obs
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, e: &[f64]) -> Result<CMatrix> {
        check_moment_count(&self.obs, e)?;
        let x = e[0];
        if self.sqrt_coord && x < 0.0 {
            return Err(Error::DomainViolation);
        }
        let (fx, gx) = ((self.f)(x), (self.g)(x));
        let bloch = x * x + fx * fx + gx * gx;
        if bloch > 1.0 + 1e-12 {
            return Err(Error::PositivityViolation {
                min_eig: 0.5 * (1.0 - bloch.sqrt()),
            });
        }
        let [id, sx, sy, sz] = pauli();
        Ok(
            (id + sz * C64::new(x, 0.0) + sx * C64::new(fx, 0.0) + sy * C64::new(gx, 0.0))
                * C64::new(0.5, 0.0),
        )
    }

    fn grad(&self, e: &[f64]) -> Result<Vec<CMatrix>> {
        check_moment_count(&self.obs, e)?;
        let x = e[0];
        // The square-root profile has unbounded slope at the branch point.
        if self.sqrt_coord && x <= 0.0 {
            return Err(Error::DomainViolation);
        }
        let [_, sx, sy, sz] = pauli();
        Ok(vec![
            (sz + sx * C64::new((self.fp)(x), 0.0) + sy * C64::new((self.gp)(x), 0.0))
                * C64::new(0.5, 0.0),
        ])
    }

    fn sqrt_coordinate(&self) -> bool {
        self.sqrt_coord
    }

    // With g(E) = alpha sqrt(E) the signed transverse component
    // sign(y) g(y^2) = alpha y is smooth through y = 0, so the chart covers
    // both branch signs.
    fn sqrt_chart_eval(&self, y: f64) -> Result<CMatrix> {
        if !self.sqrt_coord {
            return Err(Error::InvalidParameter(
                "family does not expose a square-root chart".into(),
            ));
        }
        let x = y * y;
        let fx = (self.f)(x);
        let gy = y.signum() * (self.g)(x);
        let bloch = x * x + fx * fx + gy * gy;
        if bloch > 1.0 + 1e-12 {
            return Err(Error::PositivityViolation {
                min_eig: 0.5 * (1.0 - bloch.sqrt()),
            });
        }
        let [id, sx, sy, sz] = pauli();
        Ok(
            (id + sz * C64::new(x, 0.0) + sx * C64::new(fx, 0.0) + sy * C64::new(gy, 0.0))
                * C64::new(0.5, 0.0),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::numeric_grad;
    use crate::linalg::max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sqrt_profile_states_and_gradients() {
        let family = TwoLevelAnsatz::with_sqrt_g(0.4);
        assert!(family.sqrt_coordinate());

        let e = [0.36];
        let rho = family.eval(&e).unwrap();
        let [id, _, sy, sz] = pauli();
        let expected =
            (id + &sz * C64::new(0.36, 0.0) + &sy * C64::new(0.24, 0.0)) * C64::new(0.5, 0.0);
        assert!(max_abs(&(&rho - &expected)) < 1e-15);

        // g'(0.36) = 0.4 / (2 * 0.6) = 1/3.
        let grad = family.grad(&e).unwrap();
        let expected_grad =
            (&sz + &sy * C64::new(1.0 / 3.0, 0.0)) * C64::new(0.5, 0.0);
        assert!(max_abs(&(&grad[0] - &expected_grad)) < 1e-12);

        assert!(matches!(family.eval(&[-0.1]), Err(Error::DomainViolation)));
        assert!(matches!(family.grad(&[0.0]), Err(Error::DomainViolation)));

        let domain = family.domain();
        assert!(domain.contains(&[0.5]));
        assert!(!domain.contains(&[0.0]));
        assert!(!domain.contains(&[-0.1]));
        assert!(!domain.contains(&[0.95]));
    }

    #[test]
    fn signed_chart_covers_both_branch_signs() {
        let family = TwoLevelAnsatz::with_sqrt_g_profile(0.4, |x| 0.1 * x * x, |x| 0.2 * x);
        let [_, sx, sy, sz] = pauli();

        // Positive side agrees with the moment-space evaluation at E = y^2.
        let y = 0.55;
        let chart = family.sqrt_chart_eval(y).unwrap();
        let plain = family.eval(&[y * y]).unwrap();
        assert!(max_abs(&(&chart - &plain)) < 1e-15);

        // Crossing zero flips only the transverse sign.
        let mirror = family.sqrt_chart_eval(-y).unwrap();
        let moment = |m: &CMatrix, rho: &CMatrix| (m * rho).trace().re;
        assert!((moment(&sz, &mirror) - moment(&sz, &chart)).abs() < 1e-15);
        assert!((moment(&sx, &mirror) - moment(&sx, &chart)).abs() < 1e-15);
        assert!((moment(&sy, &mirror) + moment(&sy, &chart)).abs() < 1e-15);

        // The chart is regular at the branch point the moment domain excludes.
        let origin = family.sqrt_chart_eval(0.0).unwrap();
        assert!((origin.trace().re - 1.0).abs() < 1e-15);
        assert!(moment(&sy, &origin).abs() < 1e-15);

        let plain_family = TwoLevelAnsatz::with_profiles(|_| 0.0, |_| 0.0, |_| 0.0, |_| 0.0);
        assert!(matches!(
            plain_family.sqrt_chart_eval(0.3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn bloch_ball_violations_are_rejected() {
        let family = TwoLevelAnsatz::with_profiles(|_| 0.9, |_| 0.0, |_| 0.0, |_| 0.0);
        match family.eval(&[0.5]) {
            Err(Error::PositivityViolation { min_eig }) => assert!(min_eig < 0.0),
            other => panic!("expected a positivity violation, got {other:?}"),
        }
        assert!(!family.domain().contains(&[0.5]));
    }

    #[test]
    fn general_profiles_satisfy_the_consistency_conditions() {
        let family = TwoLevelAnsatz::with_profiles(
            |x| 0.2 * x.sin(),
            |x| 0.2 * x.cos(),
            |x| 0.3 * x * x,
            |x| 0.6 * x,
        );
        let [_, _, _, sz] = pauli();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let e = [rng.random_range(-0.8..0.8)];
            let rho = family.eval(&e).unwrap();
            assert!((rho.trace().re - 1.0).abs() < tol::ANSATZ_TRACE);
            assert!(((&sz * &rho).trace().re - e[0]).abs() < 1e-14);
            let analytic = family.grad(&e).unwrap();
            let numeric = numeric_grad(&family, &e).unwrap();
            assert!(max_abs(&(&analytic[0] - &numeric[0])) < 1e-8);
        }
    }
}
