mod common;

use binaural_core::linalg::{
    cholesky, gevd_principal, hermitian_eigen, hermitian_factor, hermitian_solve, singular_values,
    CMatrix, HermitianMatrix,
};
use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn residual(
    m: &HermitianMatrix,
    x: &[binaural_core::linalg::C64],
    b: &[binaural_core::linalg::C64],
) -> f64 {
    let mx = m.mul_vec(x).unwrap();
    rel_err(&mx, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solve_matches_lu(seed in any::<u64>(), n in 1usize..7) {
        let mut g = rng(seed);
        let m = random_pd(&mut g, n, 0.05);
        let b = cvec(&mut g, n);
        let x = hermitian_solve(&m, &b, 0.0).unwrap();
        let oracle = to_na(&m).lu().solve(&DVector::from_vec(b.clone())).unwrap();
        prop_assert!(rel_err(&x, oracle.as_slice()) < 1e-10);
        prop_assert!(residual(&m, &x, &b) < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let mut g = rng(seed);
        let m = random_pd(&mut g, n, 0.05);
        let l = cholesky(&m, 0.0).unwrap().factor();
        let back = l.matmul(&l.adjoint()).unwrap();
        prop_assert!(back.sub(&m.to_cmatrix()).frobenius_norm() < 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn eigenvalues_match_nalgebra(seed in any::<u64>(), n in 1usize..7) {
        let mut g = rng(seed);
        let m = random_pd(&mut g, n, 0.0);
        let e = hermitian_eigen(&m);
        let mut oracle: Vec<f64> = to_na(&m).symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (a, b) in e.values.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12 * m.frobenius_norm().max(1.0));
        }
        // M v = lambda v for every pair.
        for k in 0..n {
            let v = e.vector(k);
            let mv = m.mul_vec(&v).unwrap();
            let lv: Vec<_> = v.iter().map(|z| z * e.values[k]).collect();
            prop_assert!(rel_err(&mv, &lv) < 1e-10 || e.values[k].abs() < 1e-12);
        }
    }

    #[test]
    fn singular_values_match_nalgebra(seed in any::<u64>(), rows in 2usize..9, cols in 1usize..5) {
        prop_assume!(cols <= rows);
        let mut g = rng(seed);
        let data = cvec(&mut g, rows * cols);
        let m = CMatrix::from_row_major(rows, cols, data.clone()).unwrap();
        let s = singular_values(&m);
        let mut oracle: Vec<f64> = DMatrix::from_row_slice(rows, cols, &data).singular_values().iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in s.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-12 * oracle[0]);
        }
    }

    #[test]
    fn psd_factor_reconstructs_rank_deficient(seed in any::<u64>(), n in 2usize..7, rank in 1usize..4) {
        let mut g = rng(seed);
        let a = DMatrix::from_fn(n, rank.min(n), |_, _| cgauss(&mut g));
        let m = from_na(&(&a * a.adjoint()));
        let f = hermitian_factor(&m).unwrap();
        let back = f.matmul(&f.adjoint()).unwrap();
        prop_assert!(back.sub(&m.to_cmatrix()).frobenius_norm() < 1e-9 * m.frobenius_norm());
    }

    /// The principal generalized pair against explicit whitening: with
    /// `B = L L^H`, the largest eigenvalue of `L^-1 A L^-H` from nalgebra.
    #[test]
    fn gevd_matches_whitening_oracle(seed in any::<u64>(), n in 2usize..7) {
        let mut g = rng(seed);
        let a = random_pd(&mut g, n, 0.0);
        let b = random_pd(&mut g, n, 0.1);
        let (lambda, x) = gevd_principal(&a, &b).unwrap();
        let l = to_na(&b).cholesky().unwrap().l();
        let linv = l.clone().try_inverse().unwrap();
        let w = &linv * to_na(&a) * linv.adjoint();
        let w = (&w + w.adjoint()) * c(0.5, 0.0);
        let oracle = w.symmetric_eigenvalues().iter().copied().fold(f64::MIN, f64::max);
        prop_assert!((lambda - oracle).abs() < 1e-10 * oracle);
        let ax = a.mul_vec(&x).unwrap();
        let bx: Vec<_> = b.mul_vec(&x).unwrap().iter().map(|z| z * lambda).collect();
        prop_assert!(rel_err(&ax, &bx) < 1e-9);
        prop_assert!((x.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gevd_rejects_singular_denominator() {
    let a = HermitianMatrix::identity(2);
    let b = HermitianMatrix::diagonal(&[1.0, 0.0]);
    assert!(matches!(
        gevd_principal(&a, &b),
        Err(binaural_core::Error::NotPositiveDefinite { .. })
    ));
}

#[test]
fn gevd_dominates_sampled_rayleigh_quotients() {
    for seed in 0..10 {
        let mut g = rng(100 + seed);
        let a = random_pd(&mut g, 4, 0.0);
        let b = random_pd(&mut g, 4, 0.1);
        let (lambda, x) = gevd_principal(&a, &b).unwrap();
        let mut best = f64::MIN;
        for _ in 0..1000 {
            let v = cvec(&mut g, 4);
            best = best.max(a.quad_form(&v).unwrap() / b.quad_form(&v).unwrap());
        }
        // No sampled quotient may exceed the principal eigenvalue.
        assert!(best <= lambda * (1.0 + 1e-6), "{lambda} vs {best}");
        let q = a.quad_form(&x).unwrap() / b.quad_form(&x).unwrap();
        assert!((q - lambda).abs() < 1e-10 * lambda);
        let first = x.iter().find(|z| z.norm() > 1e-12).unwrap();
        assert!(first.arg().abs() < 1e-10);
    }
}

#[test]
fn gevd_rank_one_plus_identity() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = [c(s, 0.0), c(s, 0.0)];
    let a = HermitianMatrix::outer(&v, 10.0)
        .add(&HermitianMatrix::identity(2))
        .unwrap();
    let (lambda, x) = gevd_principal(&a, &HermitianMatrix::identity(2)).unwrap();
    assert!((lambda - 11.0).abs() < 1e-12);
    assert!(rel_err(&x, &v) < 1e-12);
}

#[test]
fn factor_of_sinc_coherence() {
    use binaural_core::scene::{diffuse_coherence, ArrayGeometry};
    let gamma = diffuse_coherence(&ArrayGeometry::default(), 1000.0);
    let f = hermitian_factor(&gamma).unwrap();
    let back = f.matmul(&f.adjoint()).unwrap();
    assert!(back.sub(&gamma.to_cmatrix()).frobenius_norm() < 1e-8 * gamma.frobenius_norm());
    for i in 0..4 {
        for j in i + 1..4 {
            assert_eq!(f.get(i, j), c(0.0, 0.0));
        }
    }
}
