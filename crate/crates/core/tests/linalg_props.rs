use proptest::prelude::*;
use stinespring_lab::linalg::random::{random_density, random_gaussian, random_hermitian};
use stinespring_lab::linalg::{
    apply_id_kron, cholesky, haar_isometry, haar_unitary, herm_eig, id_kron, inverse, operator_norm,
    partial_trace_env, partial_trace_first, polar_unitary, psd_sqrt, qr, svd, trace_norm, ComplexMatrix, RngStream,
};

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    (&u.adjoint_mul(u) - &ComplexMatrix::identity(u.cols())).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs_hermitian(seed in any::<u64>(), n in 1usize..8) {
        let a = random_hermitian(n, &mut RngStream::new(seed).rng());
        let e = herm_eig(&a).unwrap();
        prop_assert!(unitarity_defect(&e.eigenvectors) < 1e-10);
        prop_assert!((&e.reconstruct() - &a).max_abs() < 1e-10 * a.max_abs().max(1.0));
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), r in 1usize..7, c in 1usize..7) {
        let a = random_gaussian(r, c, &mut RngStream::new(seed).rng());
        let s = svd(&a).unwrap();
        let sigma = ComplexMatrix::diag_real(&s.singular_values);
        let back = s.u.matmul(&sigma).matmul(&s.v.adjoint());
        prop_assert!((&back - &a).max_abs() < 1e-9);
        prop_assert!(unitarity_defect(&s.u) < 1e-9);
        prop_assert!(unitarity_defect(&s.v) < 1e-9);
        prop_assert!(s.singular_values.iter().all(|&x| x >= 0.0));
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn norms_are_ordered(seed in any::<u64>(), n in 1usize..6) {
        let a = random_gaussian(n, n, &mut RngStream::new(seed).rng());
        let op = operator_norm(&a).unwrap();
        let tr = trace_norm(&a).unwrap();
        prop_assert!(op <= a.fro_norm() + 1e-12);
        prop_assert!(a.fro_norm() <= tr + 1e-12);
        prop_assert!(tr <= n as f64 * op + 1e-9);
    }

    #[test]
    fn polar_factor_is_nearest_isometry(seed in any::<u64>(), r in 1usize..7, c in 1usize..4) {
        prop_assume!(r >= c);
        let a = random_gaussian(r, c, &mut RngStream::new(seed).rng());
        let u = polar_unitary(&a).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-9);
        // A = U·(A*A)^{1/2}
        let p = psd_sqrt(&a.adjoint_mul(&a)).unwrap();
        prop_assert!((&u.matmul(&p) - &a).max_abs() < 1e-8);
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..7, rank in 1usize..7) {
        let rho = random_density(n, rank.min(n), &mut RngStream::new(seed).rng());
        let s = psd_sqrt(&rho).unwrap();
        prop_assert!((&s.matmul(&s) - &rho).max_abs() < 1e-9);
        prop_assert!(s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn qr_and_cholesky_factor(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = RngStream::new(seed).rng();
        let a = random_gaussian(n + 2, n, &mut rng);
        let (q, r) = qr(&a).unwrap();
        prop_assert!(unitarity_defect(&q) < 1e-10);
        prop_assert!((&q.matmul(&r) - &a).max_abs() < 1e-10);
        let g = &a.adjoint_mul(&a) + &ComplexMatrix::identity(n);
        let l = cholesky(&g).unwrap();
        prop_assert!((&l.matmul(&l.adjoint()) - &g).max_abs() < 1e-9);
        let inv = inverse(&g).unwrap();
        prop_assert!((&inv.matmul(&g) - &ComplexMatrix::identity(n)).max_abs() < 1e-9);
    }

    #[test]
    fn haar_samples_are_isometries(seed in any::<u64>(), r in 1usize..9, c in 1usize..5) {
        prop_assume!(r >= c);
        let mut rng = RngStream::new(seed).rng();
        prop_assert!(unitarity_defect(&haar_isometry(r, c, &mut rng)) < 1e-10);
        prop_assert!(unitarity_defect(&haar_unitary(r, &mut rng)) < 1e-10);
    }

    #[test]
    fn partial_traces_of_products(seed in any::<u64>(), k in 1usize..4, m in 1usize..4) {
        let mut rng = RngStream::new(seed).rng();
        let a = random_density(k, k, &mut rng);
        let b = random_density(m, m, &mut rng);
        let ab = a.kron(&b);
        prop_assert!((&partial_trace_env(&ab, k, m).unwrap() - &a).max_abs() < 1e-12);
        prop_assert!((&partial_trace_first(&ab, k, m).unwrap() - &b).max_abs() < 1e-12);
    }

    #[test]
    fn id_kron_application_matches_product(seed in any::<u64>(), k in 1usize..4, m in 1usize..4, c in 1usize..4) {
        let mut rng = RngStream::new(seed).rng();
        let u = random_gaussian(m, m, &mut rng);
        let v = random_gaussian(k * m, c, &mut rng);
        let direct = id_kron(k, &u).matmul(&v);
        prop_assert!((&apply_id_kron(&u, &v, k) - &direct).max_abs() < 1e-12);
    }

    #[test]
    fn matrix_json_round_trip(seed in any::<u64>(), r in 1usize..5, c in 1usize..5) {
        let a = random_gaussian(r, c, &mut RngStream::new(seed).rng());
        let s = serde_json::to_string(&a).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn rng_streams_are_reproducible_and_independent() {
    let s = RngStream::new(42);
    let a = random_gaussian(3, 3, &mut s.split(1).rng());
    let b = random_gaussian(3, 3, &mut s.split(1).rng());
    let c = random_gaussian(3, 3, &mut s.split(2).rng());
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(cholesky(&ComplexMatrix::diag_real(&[1.0, -1.0])).is_err());
    assert!(psd_sqrt(&ComplexMatrix::diag_real(&[1.0, -0.5])).is_err());
    assert!(inverse(&ComplexMatrix::zeros(2, 2)).is_err());
    assert!(partial_trace_env(&ComplexMatrix::identity(5), 2, 2).is_err());
    assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":1,"cols":1,"data":[[1.0]]}"#).is_err());
}
