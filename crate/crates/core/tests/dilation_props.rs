use proptest::prelude::*;
use stinespring_lab::channels::{
    canonical_kraus, kraus_rank, random_channel, random_dilation, stinespring_from_kraus, KrausChannel,
    StinespringIsometry,
};
use stinespring_lab::dilation::{
    connecting_unitary, example1_closed_form, maximize_scalar, minimize_over_env, optimal_env_unitary,
    sznagy_dilation, MinimizeOptions,
};
use stinespring_lab::linalg::random::random_gaussian;
use stinespring_lab::linalg::{haar_unitary, operator_norm, ComplexMatrix, RngStream, C64};
use stinespring_lab::metrics::{diamond_distance, env_distance};

fn pair(n: usize, k: usize, r1: usize, r2: usize, m: usize, seed: u64) -> (StinespringIsometry, StinespringIsometry) {
    let mut rng = RngStream::new(seed).rng();
    let a = random_channel(n, k, r1, &mut rng).unwrap();
    let b = random_channel(n, k, r2, &mut rng).unwrap();
    (random_dilation(&a, m, &mut rng).unwrap(), random_dilation(&b, m, &mut rng).unwrap())
}

fn ranks() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (1usize..4, 2usize..4, any::<u64>()).prop_flat_map(|(n, k, seed)| {
        let lo = n.div_ceil(k);
        let hi = (n * k).min(3);
        (Just(n), Just(k), lo..=hi, lo..=hi, Just(seed))
    })
}

fn quick(seed: u64) -> MinimizeOptions {
    MinimizeOptions { restarts: 4, stream: RngStream::new(seed), ..MinimizeOptions::default() }
}

#[test]
fn block_dilation_edge_cases() {
    let w = ComplexMatrix::identity(2).scale_real(1.0 + 1e-10);
    assert!(sznagy_dilation(&w).is_ok());
    assert!(sznagy_dilation(&ComplexMatrix::identity(2).scale_real(1.01)).is_err());
    let d = sznagy_dilation(&ComplexMatrix::zeros(1, 2)).unwrap();
    assert_eq!(d.shape(), (3, 3));
    assert!((&d.adjoint_mul(&d) - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
}

#[test]
fn connecting_unitary_on_permuted_environment() {
    let mut rng = RngStream::new(11).rng();
    let ch = random_channel(2, 2, 3, &mut rng).unwrap();
    let va = stinespring_from_kraus(&canonical_kraus(&ch).unwrap(), 3, 0).unwrap();
    let perm = ComplexMatrix::from_real(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let vb = va.rotate_env(&perm).unwrap();
    let u = connecting_unitary(&va, &vb).unwrap();
    assert!(env_distance(&va, &vb, &u).unwrap() <= 1e-6);
    let other = random_dilation(&random_channel(2, 2, 3, &mut rng).unwrap(), 3, &mut rng).unwrap();
    assert!(connecting_unitary(&va, &other).is_err());
}

#[test]
fn optimal_unitary_examples() {
    let id = StinespringIsometry::new(ComplexMatrix::identity(2).kron(&ComplexMatrix::ket(2, 0)), 2, 2).unwrap();
    let r = optimal_env_unitary(&id, &id).unwrap();
    assert!(r.dist <= 1e-6, "{}", r.dist);

    let a = StinespringIsometry::new(ComplexMatrix::ket(2, 0).kron(&ComplexMatrix::ket(2, 0)), 2, 2).unwrap();
    let b = StinespringIsometry::new(ComplexMatrix::ket(2, 1).kron(&ComplexMatrix::ket(2, 0)), 2, 2).unwrap();
    let r = optimal_env_unitary(&a, &b).unwrap();
    assert!((r.dist - 2f64.sqrt()).abs() < 1e-6);

    let (v1, v2) = pair(2, 2, 2, 2, 3, 1);
    assert!(matches!(optimal_env_unitary(&v1, &v2), Err(stinespring_lab::Error::Precondition(_))));
}

#[test]
fn minimizer_examples() {
    let n = 3;
    let d: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).collect();
    let v1 = StinespringIsometry::new(ComplexMatrix::identity(n), n, 1).unwrap();
    let v2 = StinespringIsometry::new(ComplexMatrix::diag(&d), n, 1).unwrap();
    let r = minimize_over_env(&v1, &v2, &MinimizeOptions::default()).unwrap();
    assert!((r.upper - 3f64.sqrt()).abs() < 1e-9 && (r.lower - 3f64.sqrt()).abs() < 1e-9);

    let (v, _) = pair(2, 2, 2, 2, 3, 2);
    let r = minimize_over_env(&v, &v, &quick(0)).unwrap();
    assert!(r.upper < 1e-9 && r.lower <= r.upper);

    let (x, fx) = maximize_scalar(|x| (x - 1.0).sin(), 0.0, 6.0, 64);
    assert!((x - 1.0 - std::f64::consts::FRAC_PI_2).abs() < 1e-6 && (fx - 1.0).abs() < 1e-12);

    assert_eq!(example1_closed_form(1), (0.0, 0.0));
    let (d2, dd) = example1_closed_form(2);
    assert!((d2 - 2f64.sqrt()).abs() < 1e-15 && dd == 2.0);
    assert!((example1_closed_form(3).0 - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn minimizer_is_deterministic() {
    let (v1, v2) = pair(2, 2, 2, 1, 2, 7);
    let a = minimize_over_env(&v1, &v2, &quick(5)).unwrap();
    let b = minimize_over_env(&v1, &v2, &quick(5)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let serial = minimize_over_env(&v1, &v2, &MinimizeOptions { parallel: false, ..quick(5) }).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&serial).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_dilation_is_unitary(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, scale in 0.0f64..=1.0) {
        let g = random_gaussian(p, q, &mut RngStream::new(seed).rng());
        let w = g.scale_real(scale / operator_norm(&g).unwrap());
        let d = sznagy_dilation(&w).unwrap();
        prop_assert!((&d.adjoint_mul(&d) - &ComplexMatrix::identity(p + q)).max_abs() <= 1e-9);
        prop_assert!((&d.submatrix(0, p, p, q) - &w).max_abs() < 1e-12);
    }

    #[test]
    fn connecting_unitary_aligns_rotations((n, k, r, _r2, seed) in ranks(), extra in 0usize..2) {
        let mut rng = RngStream::new(seed).rng();
        let ch = random_channel(n, k, r, &mut rng).unwrap();
        let m = r + extra;
        let va = random_dilation(&ch, m, &mut rng).unwrap();
        let vb = va.rotate_env(&haar_unitary(m, &mut rng)).unwrap();
        let u = connecting_unitary(&va, &vb).unwrap();
        prop_assert!(env_distance(&va, &vb, &u).unwrap() <= 1e-6);
    }

    #[test]
    fn optimal_unitary_attains_bures((n, k, r1, r2, seed) in ranks()) {
        let (v1, v2) = pair(n, k, r1, r2, r1 + r2, seed);
        let r = optimal_env_unitary(&v1, &v2).unwrap();
        let f = r.fidelity.fidelity.value;
        prop_assert!((r.dist.powi(2) - 2.0 * (1.0 - f)).abs() <= 1e-6);
        let d = diamond_distance(&v1.to_channel(), &v2.to_channel()).unwrap();
        prop_assert!(r.dist <= d.value.sqrt() + 1e-6);
        prop_assert!((&r.u.adjoint_mul(&r.u) - &ComplexMatrix::identity(r1 + r2)).max_abs() < 1e-9);
    }

    #[test]
    fn same_channel_different_dilations_are_at_distance_zero((n, k, r, _r2, seed) in ranks()) {
        let mut rng = RngStream::new(seed).rng();
        let ch = random_channel(n, k, r, &mut rng).unwrap();
        let v1 = random_dilation(&ch, 2 * r, &mut rng).unwrap();
        let v2 = random_dilation(&ch, 2 * r, &mut rng).unwrap();
        prop_assert!(optimal_env_unitary(&v1, &v2).unwrap().dist <= 1e-6);
    }

    #[test]
    fn minimizer_interval_is_consistent((n, k, r1, r2, seed) in ranks(), extra in 0usize..3) {
        let m = r1.max(r2) + extra;
        let (v1, v2) = pair(n, k, r1, r2, m, seed);
        let res = minimize_over_env(&v1, &v2, &quick(seed)).unwrap();
        prop_assert!(res.lower <= res.upper + 1e-7);
        prop_assert_eq!(env_distance(&v1, &v2, &res.u_opt).unwrap(), res.upper);
        prop_assert!((res.lower - (2.0 - res.two_f_upper).max(0.0).sqrt().min(res.upper)).abs() < 1e-12 || m == 1);
        if m >= kraus_rank(&v1.to_channel()) + kraus_rank(&v2.to_channel()) {
            prop_assert!(res.upper - res.lower <= 1e-5, "interval [{}, {}]", res.lower, res.upper);
        }
        let d = diamond_distance(&v1.to_channel(), &v2.to_channel()).unwrap();
        prop_assert!(d.value <= 2.0 * res.upper + 1e-6);
    }
}

#[test]
fn mixture_dilation_distance_to_its_parts() {
    let u = ComplexMatrix::diag(&[C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
    let mix = KrausChannel::mixture(&[(0.5, &KrausChannel::identity(2)), (0.5, &KrausChannel::isometric(u).unwrap())]).unwrap();
    let v = stinespring_from_kraus(&canonical_kraus(&mix).unwrap(), 3, 0).unwrap();
    let w = stinespring_from_kraus(&KrausChannel::identity(2), 3, 0).unwrap();
    let r = minimize_over_env(&w, &v, &quick(1)).unwrap();
    assert!(r.upper - r.lower <= 1e-5);
}
