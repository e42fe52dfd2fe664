mod common;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;

use woodbury_core::circuits::{
    controlled, fold, hadamard_test, inverse, overlap_test, swap_test, uniform_preparer, CircuitSpec,
    HadamardPart, OverlapForm,
};
use woodbury_core::oracle::{circuit_matrix, circuit_state};
use woodbury_core::simulator::{
    apply, exact_ancilla_statistic, exact_ancilla_statistic_with, is_product_eligible, prepare,
    sample, sample_with, Backend, BranchProductState, ConfusionMatrix, NoiseModel,
};

use common::{circuit, density_ancilla_statistic, mean_and_sd, product_circuit, rng};

#[test]
fn inverse_round_trip() {
    for t in 0..40 {
        let mut r = rng(1, t);
        let n = 1 + (t as usize % 6);
        let psi = prepare(&circuit(&mut r, n)).unwrap();
        let c = circuit(&mut r, n);
        let back = apply(&inverse(&c), &apply(&c, &psi).unwrap()).unwrap();
        let diff = back
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "trial {t}: {diff}");
    }
}

#[test]
fn hadamard_parts_recombine_to_expectation() {
    for t in 0..40 {
        let mut r = rng(2, t);
        let n = 1 + (t as usize % 6);
        let prep = circuit(&mut r, n);
        let w = circuit(&mut r, n);
        let psi = prepare(&prep).unwrap();
        let expected = psi.inner(&apply(&w, &psi).unwrap());
        let re = exact_ancilla_statistic(&hadamard_test(&prep, &w, HadamardPart::Real).unwrap()).unwrap();
        let im = exact_ancilla_statistic(&hadamard_test(&prep, &w, HadamardPart::Imag).unwrap()).unwrap();
        assert!((Complex64::new(re, im) - expected).norm() < 1e-10, "trial {t}");
    }
}

#[test]
fn overlap_forms_match_direct_inner_product() {
    for t in 0..30 {
        let mut r = rng(3, t);
        let n = 1 + (t as usize % 4);
        let (a, m, b) = (circuit(&mut r, n), circuit(&mut r, n), circuit(&mut r, n));
        let middle = if t % 2 == 0 { Some(&m) } else { None };
        let bs = prepare(&b).unwrap();
        let mb = match middle {
            Some(m) => apply(m, &bs).unwrap(),
            None => bs,
        };
        let expected = prepare(&a).unwrap().inner(&mb);
        for form in [OverlapForm::Expectation, OverlapForm::Direct] {
            let stat = |part| exact_ancilla_statistic(&overlap_test(&a, middle, &b, part, form).unwrap()).unwrap();
            let got = Complex64::new(stat(HadamardPart::Real), stat(HadamardPart::Imag));
            assert!((got - expected).norm() < 1e-10, "trial {t} {form:?}");
        }
    }
}

#[test]
fn folding_preserves_exact_statistics() {
    for t in 0..20 {
        let mut r = rng(4, t);
        let n = 1 + (t as usize % 4);
        let c = hadamard_test(&circuit(&mut r, n), &circuit(&mut r, n), HadamardPart::Real).unwrap();
        let base = exact_ancilla_statistic(&c).unwrap();
        for f in 1..=2 {
            let folded = fold(&c, f);
            assert_eq!(folded.len(), c.len() * (2 * f + 1));
            assert_abs_diff_eq!(exact_ancilla_statistic(&folded).unwrap(), base, epsilon = 1e-10);
        }
    }
}

#[test]
fn controlled_is_block_diagonal() {
    let mut r = rng(5, 0);
    let c = circuit(&mut r, 2);
    let u = circuit_matrix(&c).unwrap();
    let cu = circuit_matrix(&controlled(&c)).unwrap();
    // ancilla is bit 0 of the index
    for row in 0..8 {
        for col in 0..8 {
            let expected = match (row & 1, col & 1) {
                (0, 0) => Complex64::new(f64::from(u8::from(row == col)), 0.0),
                (1, 1) => u[(row >> 1, col >> 1)],
                _ => Complex64::new(0.0, 0.0),
            };
            assert!((cu[(row, col)] - expected).norm() < 1e-12);
        }
    }
}

#[test]
fn swap_test_gives_squared_overlap() {
    for t in 0..15 {
        let mut r = rng(6, t);
        let n = 1 + (t as usize % 3);
        let (a, b) = (circuit(&mut r, n), circuit(&mut r, n));
        let overlap = circuit_state(&a).unwrap().inner(&circuit_state(&b).unwrap());
        let stat = exact_ancilla_statistic(&swap_test(&a, &b).unwrap()).unwrap();
        assert_abs_diff_eq!(stat, overlap.norm_sqr(), epsilon = 1e-10);
    }
}

#[test]
fn product_path_matches_statevector() {
    for n in 1..=12 {
        let mut r = rng(7, n as u64);
        let (a, b, m) = (product_circuit(&mut r, n), product_circuit(&mut r, n), product_circuit(&mut r, n));
        for part in [HadamardPart::Real, HadamardPart::Imag] {
            for form in [OverlapForm::Expectation, OverlapForm::Direct] {
                let c = overlap_test(&a, Some(&m), &b, part, form).unwrap();
                assert!(is_product_eligible(&c));
                let sv = exact_ancilla_statistic_with(&c, Backend::Statevector).unwrap();
                let pr = exact_ancilla_statistic_with(&c, Backend::Product).unwrap();
                assert!((sv - pr).abs() < 1e-10, "n={n} {part:?} {form:?}: {sv} vs {pr}");
                let folded = fold(&c, 1);
                let pf = exact_ancilla_statistic_with(&folded, Backend::Product).unwrap();
                assert!((sv - pf).abs() < 1e-10);
            }
        }
    }
    assert_eq!(BranchProductState::zero(3).term_count(), 1);
}

#[test]
fn product_backend_rejects_entangling_circuits() {
    let mut r = rng(8, 0);
    let c = hadamard_test(&circuit(&mut r, 3), &circuit(&mut r, 3), HadamardPart::Real).unwrap();
    assert!(!is_product_eligible(&c));
    assert!(exact_ancilla_statistic_with(&c, Backend::Product).is_err());
    assert!(exact_ancilla_statistic_with(&c, Backend::Auto).is_ok());
}

#[test]
fn uniform_instance_at_full_size_uses_product_path() {
    let h = uniform_preparer(26).unwrap();
    let c = overlap_test(&h, None, &h, HadamardPart::Real, OverlapForm::Expectation).unwrap();
    assert_eq!(c.qubit_count(), 27);
    assert_abs_diff_eq!(exact_ancilla_statistic(&c).unwrap(), 1.0, epsilon = 1e-12);
    assert!(exact_ancilla_statistic_with(&c, Backend::Statevector).is_err());
}

#[test]
fn circuit_json_round_trips() {
    for t in 0..10 {
        let mut r = rng(9, t);
        let c = circuit(&mut r, 3);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<CircuitSpec>(&text).unwrap(), c);
    }
}

#[test]
fn sampling_is_deterministic() {
    let mut r = rng(10, 0);
    let c = hadamard_test(&circuit(&mut r, 3), &circuit(&mut r, 3), HadamardPart::Real).unwrap();
    let noise = NoiseModel::new(0.01, 0.02, ConfusionMatrix::from_flips(0.02, 0.05).unwrap()).unwrap();
    let a = sample(&c, 5000, &noise, 42).unwrap();
    let b = sample(&c, 5000, &noise, 42).unwrap();
    assert_eq!(a, b);
    let other = sample_with(&c, 5000, &noise, 42, 1, Backend::Auto).unwrap();
    assert_ne!(a.counts, other.counts);
    assert_eq!(a.count("0") + a.count("1"), 5000);
}

#[test]
fn noiseless_sampling_is_unbiased() {
    let mut r = rng(11, 0);
    let c = hadamard_test(&circuit(&mut r, 3), &circuit(&mut r, 3), HadamardPart::Real).unwrap();
    let exact = exact_ancilla_statistic(&c).unwrap();
    let shots = 10_000;
    let stats: Vec<f64> = (0..30)
        .map(|s| {
            let f = sample(&c, shots, &NoiseModel::noiseless(), s).unwrap().frequencies();
            f[0] - f[1]
        })
        .collect();
    let (mean, _) = mean_and_sd(&stats);
    let sigma = ((1.0 - exact * exact) / (shots as f64 * 30.0)).sqrt();
    assert!((mean - exact).abs() < 4.0 * sigma, "{mean} vs {exact}, sigma {sigma}");
}

#[test]
fn depolarizing_shrinks_uniform_statistics() {
    for n in 1..=4 {
        let h = uniform_preparer(n).unwrap();
        let c = overlap_test(&h, None, &h, HadamardPart::Real, OverlapForm::Expectation).unwrap();
        let mut last = f64::INFINITY;
        for p1 in [0.0, 0.01, 0.03, 0.1, 0.3] {
            let noise = NoiseModel::depolarizing(p1, 0.0).unwrap();
            let s = density_ancilla_statistic(&c, &noise).abs();
            assert!(s < last, "n={n} p1={p1}: {s} !< {last}");
            last = s;
        }
    }
}

#[test]
fn trajectories_match_density_channel() {
    let mut r = rng(12, 0);
    let c = hadamard_test(&circuit(&mut r, 2), &circuit(&mut r, 2), HadamardPart::Imag).unwrap();
    let noise = NoiseModel::new(0.02, 0.05, ConfusionMatrix::from_flips(0.03, 0.06).unwrap()).unwrap();
    let expected = density_ancilla_statistic(&c, &noise);
    let shots = 200_000;
    let f = sample(&c, shots, &noise, 5).unwrap().frequencies();
    let got = f[0] - f[1];
    let sigma = ((1.0 - expected * expected) / shots as f64).sqrt();
    assert!((got - expected).abs() < 5.0 * sigma, "{got} vs {expected}");
    assert!((expected - exact_ancilla_statistic(&c).unwrap()).abs() > 10.0 * sigma);

    let h = uniform_preparer(3).unwrap();
    let pc = overlap_test(&h, None, &h, HadamardPart::Real, OverlapForm::Expectation).unwrap();
    let expected = density_ancilla_statistic(&pc, &noise);
    for backend in [Backend::Statevector, Backend::Product] {
        let f = sample_with(&pc, shots, &noise, 9, 0, backend).unwrap().frequencies();
        assert!((f[0] - f[1] - expected).abs() < 5.0 * sigma, "{backend:?}");
    }
}
