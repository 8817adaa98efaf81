//! Normal-distribution tail functions evaluated in log space, plus a few
//! small numerical helpers.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{LN_2, PI, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this point `erfc` underflows and the asymptotic series takes over.
const ASYMPTOTIC_FROM: f64 = 35.0;

/// `log P(Z > x)` for a standard normal `Z`.
pub fn log_norm_sf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < 0.0 {
        return (-norm_sf(-x)).ln_1p();
    }
    if x < ASYMPTOTIC_FROM {
        return (0.5 * erfc(x / SQRT_2)).ln();
    }
    let z2 = 1.0 / (x * x);
    let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    -0.5 * x * x - x.ln() - LN_SQRT_2PI + series.ln()
}

/// `log P(Z < x)`.
pub fn log_norm_cdf(x: f64) -> f64 {
    log_norm_sf(-x)
}

/// `P(Z > x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `P(Z < x)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `log phi(x)` for the standard normal density.
pub fn log_norm_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `log(Phi(b) - Phi(a))` for `a < b`, stable in both tails.
pub fn log_norm_interval(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        let la = log_norm_sf(a);
        let lb = log_norm_sf(b);
        la + log1m_exp(lb - la)
    } else if b <= 0.0 {
        log_norm_interval(-b, -a)
    } else {
        (-(norm_sf(b) + norm_sf(-a))).ln_1p()
    }
}

/// `log(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Inverse of [`log_norm_sf`]: the `x` with `log P(Z > x) = lq`.
pub fn inv_log_norm_sf(lq: f64) -> f64 {
    if lq >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if lq == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let mut x = if lq > -690.0 {
        if lq < -LN_2 {
            SQRT_2 * erfc_inv(2.0 * lq.exp())
        } else {
            -SQRT_2 * erfc_inv(-2.0 * lq.exp_m1())
        }
    } else {
        // log Q(x) ~ -x^2/2 - log x - log sqrt(2 pi)
        let mut x = (-2.0 * lq).sqrt();
        for _ in 0..4 {
            x = (-2.0 * lq - 2.0 * LN_SQRT_2PI - 2.0 * x.ln()).sqrt();
        }
        x
    };
    if x > 3.0 {
        for _ in 0..3 {
            let lsf = log_norm_sf(x);
            let slope = -(log_norm_pdf(x) - lsf).exp();
            let step = (lsf - lq) / slope;
            x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
    }
    x
}

/// Draws a standard normal restricted to `[a, b]` by inverting the CDF,
/// working on the upper tail whenever the interval lies off the centre.
pub fn sample_std_trunc_normal(a: f64, b: f64, u: f64) -> f64 {
    let x = if a >= 0.0 {
        let la = log_norm_sf(a);
        let lb = log_norm_sf(b);
        let mass = -(lb - la).exp_m1();
        inv_log_norm_sf(la + (-u * mass).ln_1p())
    } else if b <= 0.0 {
        -sample_std_trunc_normal(-b, -a, u)
    } else {
        let pa = norm_cdf(a);
        let pb = norm_cdf(b);
        let p = pa + u * (pb - pa);
        -inv_log_norm_sf(p.ln())
    };
    x.clamp(a, b)
}

/// `log(sum(exp(v)))`; `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges quickly for small lambda.
        let l2 = lambda * lambda;
        let mut cdf = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            cdf += (-(j * j) * PI * PI / (8.0 * l2)).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sf_matches_direct_in_bulk() {
        for i in -60..=60 {
            let x = i as f64 * 0.1;
            assert!((log_norm_sf(x) - norm_sf(x).ln()).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn log_sf_continuous_at_series_switch() {
        let lo = log_norm_sf(ASYMPTOTIC_FROM - 1e-9);
        let hi = log_norm_sf(ASYMPTOTIC_FROM + 1e-9);
        assert!((lo - hi).abs() < 1e-9 * lo.abs());
    }

    #[test]
    fn inverse_roundtrip_across_tails() {
        for &x in &[-8.0, -3.0, -0.5, 0.0, 0.7, 2.5, 6.0, 12.0, 30.0, 40.0, 100.0] {
            let back = inv_log_norm_sf(log_norm_sf(x));
            assert!((back - x).abs() < 1e-8 * (1.0 + x.abs()), "x={x} back={back}");
        }
    }

    #[test]
    fn far_tail_draws_stay_inside() {
        for i in 0..1000 {
            let u = (i as f64 + 0.5) / 1000.0;
            let x = sample_std_trunc_normal(8.0, 9.0, u);
            assert!((8.0..=9.0).contains(&x));
            let y = sample_std_trunc_normal(-60.0, -50.0, u);
            assert!((-60.0..=-50.0).contains(&y));
        }
    }

    #[test]
    fn interval_mass_tails() {
        let l = log_norm_interval(8.0, 9.0);
        let direct = (norm_sf(8.0) - norm_sf(9.0)).ln();
        assert!((l - direct).abs() < 1e-10);
        assert!((log_norm_interval(f64::NEG_INFINITY, f64::INFINITY)).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_branches_agree() {
        let l = 1.18;
        let a = kolmogorov_sf(l - 1e-12);
        let b = kolmogorov_sf(l + 1e-12);
        assert!((a - b).abs() < 1e-9);
        // Critical value of the 5% test.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }
}
