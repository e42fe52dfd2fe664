use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use woodbury_core::linalg::{
    condition_number, conjectured_condition, direct_solve, singular_values, woodbury_inverse,
    DenseMatrix, DenseVector,
};

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), rows * cols).prop_map(move |v| {
        DenseMatrix::from_vec(rows, cols, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
            .unwrap()
    })
}

fn shaped_matrix() -> impl Strategy<Value = DenseMatrix> {
    (1usize..7, 1usize..7).prop_flat_map(|(r, c)| complex_matrix(r, c))
}

/// Singular values from the eigenvalues of the Gram matrix `MᴴM`.
fn gram_singular_values(m: &DenseMatrix) -> Vec<f64> {
    let nm = DMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        let z = m[(r, c)];
        nalgebra::Complex::new(z.re, z.im)
    });
    let gram = if m.rows() >= m.cols() { nm.adjoint() * &nm } else { &nm * nm.adjoint() };
    let mut s: Vec<f64> = gram
        .symmetric_eigenvalues()
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `I − 2 w wᴴ / |w|²`.
fn householder(w: &[Complex64]) -> DenseMatrix {
    let n = w.len();
    let norm2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut h = DenseMatrix::identity(n);
    for r in 0..n {
        for c in 0..n {
            h[(r, c)] -= 2.0 * w[r] * w[c].conj() / norm2;
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn singular_values_match_gram_eigenvalues(m in shaped_matrix()) {
        let s = singular_values(&m);
        let g = gram_singular_values(&m);
        prop_assert_eq!(s.len(), g.len());
        for (a, b) in s.iter().zip(&g) {
            prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", s, g);
        }
    }

    #[test]
    fn singular_values_invariant_under_householder(
        m in complex_matrix(5, 4),
        wl in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5),
        wr in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
    ) {
        let wl: Vec<Complex64> = wl.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let wr: Vec<Complex64> = wr.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        prop_assume!(wl.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
        prop_assume!(wr.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3);
        let rotated = householder(&wl).matmul(&m).unwrap().matmul(&householder(&wr)).unwrap();
        let (a, b) = (singular_values(&m), singular_values(&rotated));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn conjecture_matches_svd(
        dim in 2usize..12,
        seed_u in prop::collection::vec(-1.0..1.0f64, 12),
        seed_v in prop::collection::vec(-1.0..1.0f64, 12),
    ) {
        let (u, v) = (&seed_u[..dim], &seed_v[..dim]);
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| f64::from(u8::from(r == c)) + u[r] * v[c]).collect())
            .collect();
        let s = singular_values(&DenseMatrix::from_real_rows(&rows).unwrap());
        let conj = conjectured_condition(&DenseVector::from_real(u).unwrap(), &DenseVector::from_real(v).unwrap());
        prop_assume!(conj.is_ok());
        let conj = conj.unwrap();
        prop_assert!((conj.s_max - s[0]).abs() < 1e-8 * s[0]);
        prop_assert!((conj.s_min - s[dim - 1]).abs() < 1e-8 * s[0]);
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    use rand::Rng;
    let mut r = woodbury_core::rng::stream_rng(seed, 0);
    let data = (0..rows * cols)
        .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

#[test]
fn woodbury_inverse_is_an_inverse() {
    let mut seed = 0;
    for n in [2, 5, 8, 16, 33, 64] {
        for k in 1..=4 {
            seed += 1;
            let n_id = DenseMatrix::identity(n);
            let a = n_id.scale(Complex64::new(4.0, 0.0)).add(&random_matrix(n, n, seed).scale(Complex64::new(0.3, 0.0))).unwrap();
            let u = random_matrix(n, k, seed + 100).scale(Complex64::new(0.5, 0.0));
            let v = random_matrix(k, n, seed + 200).scale(Complex64::new(0.5, 0.0));
            let c = DenseMatrix::identity(k).add(&random_matrix(k, k, seed + 300).scale(Complex64::new(0.2, 0.0))).unwrap();
            let m = a.add(&u.matmul(&c).unwrap().matmul(&v).unwrap()).unwrap();
            let inv = woodbury_inverse(&a, &u, &c, &v).unwrap();
            let err = inv.matmul(&m).unwrap().max_abs_diff(&n_id);
            assert!(err < 1e-10, "n={n} k={k}: {err}");
        }
    }
}

#[test]
fn direct_solve_residual_and_condition() {
    for seed in 0..20 {
        let n = 2 + seed as usize % 10;
        let m = DenseMatrix::identity(n).scale(Complex64::new(3.0, 0.0)).add(&random_matrix(n, n, seed)).unwrap();
        let b = DenseVector::new(random_matrix(n, 1, seed + 50).as_slice().to_vec()).unwrap();
        let x = direct_solve(&m, &b).unwrap();
        assert!(m.matvec(&x).unwrap().max_abs_diff(&b) < 1e-12);
        let s = gram_singular_values(&m);
        let k = condition_number(&m);
        assert!((k - s[0] / s[n - 1]).abs() < 1e-8 * k);
    }
}
