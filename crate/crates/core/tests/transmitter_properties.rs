use homcert::rng::StreamKey;
use homcert::transmitter::diagnostics::*;
use homcert::transmitter::overlap::effective_overlap;
use homcert::transmitter::{encode_bb84, sample_pulse, sigma_from_fwhm, Bb84State, LaserModel};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

fn gauss(t: f64, sigma: f64) -> f64 {
    (-0.5 * (t / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// ∫ min(g(t), g(t−d)) dt by the midpoint rule.
fn shared_area(d: f64, sigma: f64) -> f64 {
    let (lo, hi) = (-12.0 * sigma, d.abs() + 12.0 * sigma);
    let n = 400_000;
    let h = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let t = lo + (i as f64 + 0.5) * h;
            gauss(t, sigma).min(gauss(t - d.abs(), sigma))
        })
        .sum::<f64>()
        * h
}

/// Half-depth crossing of the dip converted to a Gaussian σ by bisection on
/// the level 1 − ½e^{−1/2}.
fn width_from_profile(tau_p: f64, a: f64) -> f64 {
    let level = 1.0 - 0.5 * (-0.5f64).exp();
    let (mut lo, mut hi) = (0.0, 10.0 * tau_p);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hom_dip_profile(mid, tau_p, a) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn timing_overlap_matches_envelope_area() {
    for &tau in &[10.0, 30.0, 50.0] {
        let sigma = sigma_from_fwhm(tau);
        for &d in &[sigma, 0.3 * sigma, 2.5 * sigma] {
            let (a, b) = (timing_overlap(d, tau), shared_area(d, sigma));
            assert!((a - b).abs() < 1e-6, "tau={tau} d={d}: {a} vs {b}");
        }
    }
}

#[test]
fn jitter_factor_is_mean_timing_overlap() {
    let (tau, s) = (30.0, 2.2);
    let key = StreamKey::root(21);
    let n = 1_000_000u64;
    let xs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let z: f64 = StandardNormal.sample(&mut key.stream(i));
            timing_overlap(s * z, tau)
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let want = jitter_factor(tau, s);
    assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn intensity_factor_matches_sampling() {
    let s2 = 7e-4;
    let s = f64::sqrt(s2);
    let key = StreamKey::root(22);
    let n = 1_000_000u64;
    let xs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = key.stream(i);
            let za: f64 = StandardNormal.sample(&mut r);
            let zb: f64 = StandardNormal.sample(&mut r);
            let (a, b) = (1.0 + s * za, 1.0 + s * zb);
            2.0 * a * b / (a + b).powi(2)
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let (m, v) = intensity_factor_stats(s2);
    assert!((mean - m).abs() < 3.0 * (var / n as f64).sqrt());
    // sampling error of a variance from a chi-square-like variable is ~√(2/n) relative
    assert!((var / v - 1.0).abs() < 0.05, "{var} vs {v}");
}

#[test]
fn sampled_spectrum_fwhm() {
    for &(tau, a) in &[(30.0, 0.0), (30.0, 4.0), (50.0, 6.6)] {
        let peak = chirped_spectrum(0.0, tau, a);
        let step = 1e-6;
        let mut nu = 0.0;
        while chirped_spectrum(nu, tau, a) > 0.5 * peak {
            nu += step;
        }
        let want = spectral_fwhm(tau, a);
        assert!((2.0 * nu / want - 1.0).abs() < 0.01);
    }
}

#[test]
fn pulse_generation_is_schedule_independent() {
    let laser = LaserModel::default();
    let key = StreamKey::root(5).path(&[3, 1]);
    let seq: Vec<_> = (0..2000u64)
        .map(|i| sample_pulse(&laser, Bb84State::Y0, 0.5, &mut key.stream(i)).unwrap())
        .collect();
    let par: Vec<_> = (0..2000u64)
        .into_par_iter()
        .map(|i| sample_pulse(&laser, Bb84State::Y0, 0.5, &mut key.stream(i)).unwrap())
        .collect();
    assert_eq!(seq, par);
}

proptest! {
    #[test]
    fn chirp_round_trips_through_dip(a in 0.0..10.0f64, tau in 5.0..80.0f64) {
        let sigma = width_from_profile(tau, a);
        prop_assert!((sigma - dip_width(tau, a)).abs() < 1e-9 * tau);
        prop_assert!((chirp_from_dip(tau, sigma).unwrap() - a).abs() < 1e-6);
    }

    #[test]
    fn jitter_factor_is_monotone(tau in 1.0..100.0f64, s in 0.01..20.0f64, ds in 0.01..5.0f64) {
        let j = jitter_factor(tau, s);
        prop_assert!(j > 0.0 && j <= 1.0);
        prop_assert!(jitter_factor(tau, s + ds) < j);
        prop_assert!(jitter_factor(tau + ds, s) > j);
    }

    #[test]
    fn encoding_mean_is_state_independent(mu in 0.0..5.0f64, phi in 0.0..6.3f64) {
        let means: Vec<f64> = Bb84State::ALL.iter().map(|&s| encode_bb84(s, mu, phi).unwrap().total_mean()).collect();
        for m in means {
            prop_assert!((m - mu).abs() <= 1e-14 * (1.0 + mu));
        }
    }

    #[test]
    fn sampled_overlap_is_a_fraction(seed in any::<u64>(), jitter in 0.0..10.0f64, scatter in 0.0..200.0f64, bw in 1.0..1000.0f64) {
        let laser = LaserModel { timing_jitter_ps: jitter, frequency_scatter_ghz: scatter, ..LaserModel::default() };
        let x = effective_overlap(&laser, bw, &mut StreamKey::root(seed).stream(0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
    }
}
