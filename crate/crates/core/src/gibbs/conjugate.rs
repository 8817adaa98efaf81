//! Closed-form full conditionals of the discrete and conjugate updates.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::model::sample_inv_gamma;

/// Inverse-gamma law in the shape/scale form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_inv_gamma(self.shape, self.scale, rng)
    }

    /// Defined for `shape > 1`.
    pub fn mean(&self) -> f64 {
        self.scale / (self.shape - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let law = Beta::new(self.a, self.b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(law.sample(rng))
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// `P(m = +1 | xi) = 1 / (1 + exp(-2 xi))`.
pub fn m_plus_prob(xi: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * xi).exp())
}

/// Log posterior odds of slab versus spike.
///
/// The exact odds are `sqrt(v0) rho/(1-rho) exp(eta^2 (1-v0) / (2 v0 nu))`,
/// the ratio of `N(eta; 0, nu)` to `N(eta; 0, v0 nu)` times the prior odds.
/// With `printed` set the exponent is `-v0 eta^2 / (2 v0 nu)` instead.
pub fn gamma_log_odds(eta: f64, nu: f64, rho: f64, v0: f64, printed: bool) -> f64 {
    let prior = 0.5 * v0.ln() + rho.ln() - (-rho).ln_1p();
    let exponent = if printed {
        -v0 * eta * eta / (2.0 * v0 * nu)
    } else {
        eta * eta * (1.0 - v0) / (2.0 * v0 * nu)
    };
    prior + exponent
}

/// Probability of the slab given the log odds.
pub fn slab_prob(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}

/// `InvGa(a_nu + 1/2, b_nu + eta^2 / (2 gamma))`.
pub fn nu_posterior(eta: f64, gamma: f64, a_nu: f64, b_nu: f64) -> InvGammaParams {
    InvGammaParams {
        shape: a_nu + 0.5,
        scale: b_nu + eta * eta / (2.0 * gamma),
    }
}

/// `Beta(a_rho + #slab, b_rho + #spike)`.
pub fn rho_posterior(slab_count: usize, spike_count: usize, a_rho: f64, b_rho: f64) -> Result<BetaParams> {
    if slab_count + spike_count == 0 {
        return Err(Error::InvalidParameter(
            "rho update needs at least one coefficient".into(),
        ));
    }
    Ok(BetaParams {
        a: a_rho + slab_count as f64,
        b: b_rho + spike_count as f64,
    })
}

/// `InvGa(a_sigma + n/2, b_sigma + rss/2)`.
pub fn sigma2_posterior(rss: f64, n: usize, a_sigma: f64, b_sigma: f64) -> InvGammaParams {
    InvGammaParams {
        shape: a_sigma + 0.5 * n as f64,
        scale: b_sigma + 0.5 * rss,
    }
}

/// Posterior of the non-unit probability: `Beta(a_pi + #{d != 1}, b_pi + #{d = 1})`.
pub fn pi_posterior(other_count: usize, unit_count: usize, a_pi: f64, b_pi: f64) -> BetaParams {
    BetaParams {
        a: a_pi + other_count as f64,
        b: b_pi + unit_count as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_logpdf(x: f64, var: f64) -> f64 {
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * x * x / var
    }

    #[test]
    fn m_prob_examples() {
        assert_eq!(m_plus_prob(0.0), 0.5);
        assert!(m_plus_prob(40.0) > 1.0 - 1e-15);
        for i in -50..=50 {
            let xi = i as f64 * 0.1;
            let phi = |z: f64| (-0.5 * z * z).exp();
            let expect = phi(xi - 1.0) / (phi(xi - 1.0) + phi(xi + 1.0));
            assert!((m_plus_prob(xi) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_odds_examples() {
        let v0: f64 = 0.01;
        let rho: f64 = 0.3;
        let lo = gamma_log_odds(0.0, 2.0, rho, v0, false);
        assert!((lo - (v0.sqrt() * rho / (1.0 - rho)).ln()).abs() < 1e-14);
        let one = gamma_log_odds(1.7, 0.4, rho, 1.0, false);
        assert!((one - (rho / (1.0 - rho)).ln()).abs() < 1e-14);
    }

    #[test]
    fn gamma_odds_equal_density_ratio() {
        let cases: [(f64, f64, f64, f64); 3] = [(0.3, 1.2, 0.4, 0.05), (-1.1, 0.7, 0.8, 0.01), (0.02, 3.0, 0.1, 0.2)];
        for (eta, nu, rho, v0) in cases {
            let direct = normal_logpdf(eta, nu) - normal_logpdf(eta, v0 * nu) + (rho / (1.0 - rho)).ln();
            let got = gamma_log_odds(eta, nu, rho, v0, false);
            assert!((direct - got).abs() < 1e-12, "{direct} vs {got}");
        }
    }

    #[test]
    fn nu_posterior_examples() {
        let p = nu_posterior(0.0, 1.0, 2.0, 3.0);
        assert_eq!((p.shape, p.scale), (2.5, 3.0));
        let p = nu_posterior(1.0, 1.0, 3.0, 2.0);
        assert!((p.mean() - 1.0).abs() < 1e-15);
        let slab = nu_posterior(0.8, 1.0, 1.0, 1.0);
        let spike = nu_posterior(0.8, 0.01, 1.0, 1.0);
        assert!(((spike.scale - 1.0) - 100.0 * (slab.scale - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rho_posterior_counts() {
        let p = rho_posterior(12, 0, 1.0, 1.0).unwrap();
        assert_eq!((p.a, p.b), (13.0, 1.0));
        assert!(rho_posterior(0, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sigma2_posterior_forms() {
        let p = sigma2_posterior(0.0, 10, 1.0, 1.0);
        assert_eq!((p.shape, p.scale), (6.0, 1.0));
        let a = sigma2_posterior(3.0, 10, 1.0, 1.0);
        let b = sigma2_posterior(12.0, 10, 1.0, 1.0);
        assert!(((b.scale - 1.0) - 4.0 * (a.scale - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn pi_posterior_counts() {
        assert_eq!(pi_posterior(10, 0, 1.0, 1.0), BetaParams { a: 11.0, b: 1.0 });
        assert_eq!(pi_posterior(0, 10, 1.0, 1.0), BetaParams { a: 1.0, b: 11.0 });
    }

    #[test]
    fn slab_prob_is_stable() {
        assert_eq!(slab_prob(800.0), 1.0);
        assert_eq!(slab_prob(-800.0), 0.0);
        assert!((slab_prob(0.0) - 0.5).abs() < 1e-15);
    }
}
