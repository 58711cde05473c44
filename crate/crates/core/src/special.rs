//! Special functions.
//!
//! `bessel_i0` is evaluated here directly. The incomplete gamma/beta and
//! error functions come from `statrs`.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::{beta, erf, gamma};

/// Switch-over from the power series to the asymptotic expansion of I₀.
const I0_ASYMPTOTIC_FROM: f64 = 30.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Uses the power series Σ (z²/4)^k / (k!)² below |z| = 30, where every term
/// is positive so there is no cancellation, and the large-argument
/// expansion e^z/√(2πz) Σ ((2k-1)!!)² / (k! (8z)^k) above it.
pub fn bessel_i0(z: f64) -> f64 {
    let z = z.abs();
    if z < I0_ASYMPTOTIC_FROM {
        i0_series(z)
    } else {
        i0_asymptotic(z)
    }
}

fn i0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i0_asymptotic(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        let next = term * (2.0 * kf - 1.0).powi(2) / (kf * 8.0 * z);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    z.exp() / (2.0 * PI * z).sqrt() * sum
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Standard normal density.
pub fn phi_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// Inverse of [`normal_cdf`] for p in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    SQRT_2 * erf::erf_inv(2.0 * p - 1.0)
}

/// Upper tail P(X ≥ x) of a chi-square variable with `df` degrees of freedom.
pub fn chi2_survival(x: f64, df: u32) -> f64 {
    if df == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma::gamma_ur(0.5 * df as f64, 0.5 * x)
}

/// Upper tail P(F ≥ f) of the F distribution with (d1, d2) degrees of freedom.
pub fn f_survival(f: f64, d1: u32, d2: u32) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    beta::beta_reg(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid rule on the periodic integrand converges geometrically.
    fn i0_quadrature(z: f64) -> f64 {
        let n = 4096;
        (0..n)
            .map(|k| (z * (2.0 * PI * k as f64 / n as f64).cos()).exp())
            .sum::<f64>()
            / n as f64
    }

    /// Composite Gauss-Legendre (5 point) on [a, b] split into `panels`.
    fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        const X: [f64; 5] = [
            0.0,
            0.538_469_310_105_683_1,
            -0.538_469_310_105_683_1,
            0.906_179_845_938_664,
            -0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                X.iter()
                    .zip(W)
                    .map(|(x, w)| w * f(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    fn chi2_pdf(t: f64, df: u32) -> f64 {
        let k = 0.5 * df as f64;
        ((k - 1.0) * t.ln() - 0.5 * t - k * 2f64.ln() - gamma::ln_gamma(k)).exp()
    }

    #[test]
    fn i0_at_zero_is_one() {
        assert_eq!(bessel_i0(0.0), 1.0);
    }

    #[test]
    fn i0_matches_integral_definition() {
        for &z in &[0.01, 0.25, 1.0, 2.5, 3.75, 5.0, 7.5, 10.0, -4.0] {
            let (a, b) = (bessel_i0(z), i0_quadrature(z));
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn i0_branches_agree_at_switch() {
        for &z in &[I0_ASYMPTOTIC_FROM, 35.0] {
            let (s, a) = (i0_series(z), i0_asymptotic(z));
            assert!(((s - a) / a).abs() < 1e-13, "z={z}: {s} vs {a}");
        }
        let (a, b) = (bessel_i0(40.0), i0_quadrature(40.0));
        assert!(((a - b) / b).abs() < 1e-13);
    }

    #[test]
    fn i0_small_argument_is_quadratic() {
        // I0(z) - (1 + z²/4) = z⁴/64 + O(z⁶)
        for &z in &[1e-1, 1e-2] {
            let rem = bessel_i0(z) - (1.0 + z * z / 4.0);
            assert!((rem / z.powi(4) - 1.0 / 64.0).abs() < z * z);
        }
    }

    #[test]
    fn chi2_survival_closed_forms() {
        assert_eq!(chi2_survival(0.0, 12), 1.0);
        assert!((chi2_survival(2.0 * 2f64.ln(), 2) - 0.5).abs() < 1e-14);
        for &x in &[0.3, 1.0, 4.0, 11.0] {
            assert!((chi2_survival(x, 2) - (-x / 2.0).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn chi2_survival_matches_quadrature() {
        for &df in &[1u32, 3, 4, 12, 25, 50] {
            for &x in &[0.5f64, 2.0, 8.0, 16.0, 30.0, 60.0] {
                // tail integral from x to x + 400 of the density
                let lower = if df == 1 { x.max(1e-12) } else { x };
                let quad = gauss_legendre(|t| chi2_pdf(t, df), lower, x + 400.0, 4000);
                let sf = chi2_survival(x, df);
                assert!((sf - quad).abs() < 1e-10, "df={df} x={x}: {sf} vs {quad}");
            }
        }
    }

    #[test]
    fn chi2_survival_twelve_dof_reference() {
        // locate the statistic whose p-value is 0.18, then confirm by quadrature
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if chi2_survival(mid, 12) > 0.18 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        assert!(x > 15.0 && x < 17.0, "{x}");
        let quad = gauss_legendre(|t| chi2_pdf(t, 12), x, x + 500.0, 4000);
        assert!((quad - 0.18).abs() < 1e-10, "{quad}");
    }

    #[test]
    fn chi2_survival_is_monotone() {
        let mut prev = 1.0;
        for i in 1..400 {
            let p = chi2_survival(i as f64 * 0.1, 12);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn f_survival_matches_quadrature() {
        fn f_pdf(x: f64, d1: f64, d2: f64) -> f64 {
            let lb = gamma::ln_gamma(0.5 * d1) + gamma::ln_gamma(0.5 * d2)
                - gamma::ln_gamma(0.5 * (d1 + d2));
            (0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
                - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
                - lb)
                .exp()
        }
        for &(d1, d2) in &[(3u32, 16u32), (2, 10), (5, 40)] {
            for &f in &[0.2, 1.0, 2.5, 6.0] {
                // substitute x = f + u/(1-u) to map the infinite tail to [0, 1)
                let quad = gauss_legendre(
                    |u| {
                        let x = f + u / (1.0 - u);
                        f_pdf(x, d1 as f64, d2 as f64) / (1.0 - u).powi(2)
                    },
                    0.0,
                    1.0 - 1e-12,
                    20000,
                );
                let sf = f_survival(f, d1, d2);
                assert!((sf - quad).abs() < 1e-9, "({d1},{d2}) f={f}: {sf} vs {quad}");
            }
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[0.025, 0.2, 0.5, 0.8, 0.975] {
            // erf_inv is accurate to a few 1e-11 in absolute terms
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-10);
        }
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
    }
}
