use homcert::algebra::random::{random_density, random_pure, random_unitary};
use homcert::algebra::*;
use homcert::rng::{Stream, StreamKey};
use num_complex::Complex64;
use proptest::prelude::*;

fn rng(seed: u64) -> Stream {
    StreamKey::root(seed).stream(0)
}

/// Σ_{k,l} p_k q_l |⟨μ_k|λ_l⟩|² from the two spectral decompositions.
fn trace_product_by_eigen(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let (pa, va) = a.eigen();
    let (pb, vb) = b.eigen();
    let mut acc = 0.0;
    for k in 0..a.dim() {
        for l in 0..b.dim() {
            let ov: Complex64 = va.column(k).dotc(&vb.column(l));
            acc += pa[k] * pb[l] * ov.norm_sqr();
        }
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cswap_circuit_matches_formula(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let phi = random_pure(d, &mut r).unwrap();
        let psi = random_pure(d, &mut r).unwrap();
        let (a0, a1) = swap_test_probs(&phi, &psi).unwrap();
        let (b0, b1) = simulate_cswap(&phi, &psi).unwrap();
        prop_assert!((a0 - b0).abs() < 1e-12 && (a1 - b1).abs() < 1e-12);
        prop_assert!((a0 + a1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_bracket_uhlmann_fidelity(seed in any::<u64>(), d in 1usize..=8, r1 in 1usize..=8, r2 in 1usize..=8) {
        let mut r = rng(seed);
        let a = random_density(d, r1, &mut r).unwrap();
        let b = random_density(d, r2, &mut r).unwrap();
        let (lo, hi) = fidelity_bounds(&a, &b).unwrap();
        let f2 = uhlmann_fidelity(&a, &b).unwrap().powi(2);
        prop_assert!(lo <= f2 + 1e-9, "lower {} > F² {}", lo, f2);
        prop_assert!(f2 <= hi + 1e-9, "F² {} > upper {}", f2, hi);
    }

    #[test]
    fn identically_sourced_modulation_cannot_raise_overlap(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let rho = random_density(d, d, &mut r).unwrap();
        let u = random_unitary(d, &mut r).unwrap();
        let t = relative_trace_product(&u, &rho, &rho).unwrap();
        prop_assert!(t <= rho.purity() + 1e-10);
    }

    #[test]
    fn trace_product_is_bounded_by_purities(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let a = random_density(d, d, &mut r).unwrap();
        let b = random_density(d, 1 + (seed as usize % d), &mut r).unwrap();
        let t = trace_product(&a, &b).unwrap();
        prop_assert!(t <= a.purity().max(b.purity()) + 1e-12);
        prop_assert!(a.purity().max(b.purity()) <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_product_matches_eigen_oracle(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let a = random_density(d, d, &mut r).unwrap();
        let b = random_density(d, d, &mut r).unwrap();
        let t = trace_product(&a, &b).unwrap();
        prop_assert!((t - trace_product_by_eigen(&a, &b)).abs() < 1e-10);
    }

    #[test]
    fn mixed_swap_test_is_an_ensemble_of_pure_ones(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let a = random_density(d, d, &mut r).unwrap();
        let b = random_density(d, d, &mut r).unwrap();
        let (pa, va) = a.eigen();
        let (pb, vb) = b.eigen();
        let mut p0 = 0.0;
        for k in 0..d {
            for l in 0..d {
                let phi = PureState::new(va.column(k).into_owned()).unwrap();
                let psi = PureState::new(vb.column(l).into_owned()).unwrap();
                p0 += pa[k] * pb[l] * simulate_cswap(&phi, &psi).unwrap().0;
            }
        }
        let (q0, q1) = swap_test_probs_mixed(&a, &b).unwrap();
        prop_assert!((p0 - q0).abs() < 1e-10);
        prop_assert!(((q0 - q1) / (q0 + q1) - trace_product(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn modulated_trace_product_is_cyclic(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let a = random_density(d, d, &mut r).unwrap();
        let b = random_density(d, d, &mut r).unwrap();
        let u1 = random_unitary(d, &mut r).unwrap();
        let u2 = random_unitary(d, &mut r).unwrap();
        let direct = modulated_trace_product(&u1, &u2, &a, &b).unwrap();
        let rel = u2.adjoint().compose(&u1).unwrap();
        prop_assert!((direct - relative_trace_product(&rel, &a, &b).unwrap()).abs() < 1e-12);
        let same = modulated_trace_product(&u1, &u1, &a, &b).unwrap();
        prop_assert!((same - trace_product(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tensor_product_factorizes(seed in any::<u64>(), ds in 1usize..=4, dother in 1usize..=8) {
        let mut r = rng(seed);
        let s1 = random_density(ds, ds, &mut r).unwrap();
        let s2 = random_density(ds, ds, &mut r).unwrap();
        let o1 = random_density(dother, dother, &mut r).unwrap();
        let o2 = random_density(dother, dother, &mut r).unwrap();
        let t1 = tensor_embed(&s1, &o1).unwrap();
        let t2 = tensor_embed(&s2, &o2).unwrap();
        prop_assert!((t1.matrix().trace().re - 1.0).abs() < 1e-12);
        let lhs = trace_product(&t1, &t2).unwrap();
        // product of the factor traces, evaluated element by element
        let rhs = trace_product_by_eigen(&s1, &s2) * trace_product_by_eigen(&o1, &o2);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn pure_states_saturate_bounds() {
    let mut r = rng(42);
    for d in 2..=8 {
        let a = random_pure(d, &mut r).unwrap().density();
        let b = random_pure(d, &mut r).unwrap().density();
        let (lo, hi) = fidelity_bounds(&a, &b).unwrap();
        let f2 = uhlmann_fidelity(&a, &b).unwrap().powi(2);
        assert!((lo - hi).abs() < 1e-12);
        assert!((lo - f2).abs() < 1e-9, "d={d}: {lo} vs {f2}");
    }
}
