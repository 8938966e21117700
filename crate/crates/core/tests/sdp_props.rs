use proptest::prelude::*;
use stinespring_lab::channels::random_channel;
use stinespring_lab::linalg::random::random_hermitian;
use stinespring_lab::linalg::{herm_eigvals, ComplexMatrix, RngStream};
use stinespring_lab::sdp::{
    build_diamond_sdp, build_diamond_sdp_reduced, solve, BlockMatrix, SdpProblem, SdpSolution, SdpStatus, Sense,
};

/// optimize tr(C X) over density matrices
fn spectral_problem(c: &ComplexMatrix, sense: Sense) -> SdpProblem {
    let n = c.rows();
    let mut p = SdpProblem::new(vec![n], sense);
    p.objective = BlockMatrix { blocks: vec![c.clone()] };
    let mut con = p.new_constraint(1.0);
    con.add(0, ComplexMatrix::identity(n));
    p.push(con);
    p
}

fn min_eig(b: &BlockMatrix) -> f64 {
    b.blocks
        .iter()
        .filter(|m| m.rows() > 0)
        .flat_map(|m| herm_eigvals(&m.hermitian_part()).unwrap())
        .fold(f64::INFINITY, f64::min)
}

/// Primal feasibility, PSD certificates and weak duality, recomputed.
fn certificates_hold(p: &SdpProblem, sol: &SdpSolution) -> bool {
    let feasible = p.constraints.iter().all(|c| (c.eval(&sol.x) - c.b).abs() < 1e-6);
    let by: f64 = p.constraints.iter().zip(&sol.y).map(|(c, y)| c.b * y).sum();
    let cx = p.objective.inner(&sol.x);
    let slack = match p.sense {
        Sense::Minimize => cx - by,
        Sense::Maximize => by - cx,
    };
    feasible && min_eig(&sol.x) > -1e-8 && min_eig(&sol.s) > -1e-8 && slack > -1e-6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extreme_eigenvalues(seed in any::<u64>(), n in 1usize..6) {
        let c = random_hermitian(n, &mut RngStream::new(seed).rng());
        let eig = herm_eigvals(&c).unwrap();
        let p = spectral_problem(&c, Sense::Minimize);
        let sol = solve(&p).unwrap();
        prop_assert_eq!(sol.status, SdpStatus::Optimal);
        prop_assert!((sol.value() - eig[0]).abs() < 1e-6);
        prop_assert!(certificates_hold(&p, &sol));
        let p = spectral_problem(&c, Sense::Maximize);
        let sol = solve(&p).unwrap();
        prop_assert!((sol.value() - eig[n - 1]).abs() < 1e-6);
        prop_assert!(certificates_hold(&p, &sol));
    }

    #[test]
    fn block_problems_pick_the_best_block(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut rng = RngStream::new(seed).rng();
        let c1 = random_hermitian(a, &mut rng);
        let c2 = random_hermitian(b, &mut rng);
        let mut p = SdpProblem::new(vec![a, b], Sense::Minimize);
        p.objective = BlockMatrix { blocks: vec![c1.clone(), c2.clone()] };
        let mut con = p.new_constraint(1.0);
        con.add(0, ComplexMatrix::identity(a)).add(1, ComplexMatrix::identity(b));
        p.push(con);
        let sol = solve(&p).unwrap();
        let expect = herm_eigvals(&c1).unwrap()[0].min(herm_eigvals(&c2).unwrap()[0]);
        prop_assert!((sol.value() - expect).abs() < 1e-6);
        prop_assert!(certificates_hold(&p, &sol));
    }

    #[test]
    fn diamond_forms_agree(seed in any::<u64>(), n in 1usize..3, k in 1usize..3) {
        let mut rng = RngStream::new(seed).rng();
        let r = n.div_ceil(k);
        let a = random_channel(n, k, r, &mut rng).unwrap();
        let b = random_channel(n, k, (r + 1).min(n * k), &mut rng).unwrap();
        let j = a.to_choi().matrix() - b.to_choi().matrix();
        let full = solve(&build_diamond_sdp(&j, n, k).unwrap()).unwrap();
        let reduced = match build_diamond_sdp_reduced(&j, n, k).unwrap() {
            Some(p) => {
                let sol = solve(&p).unwrap();
                prop_assert!(certificates_hold(&p, &sol));
                sol.value()
            }
            None => 0.0,
        };
        prop_assert!((full.value() - reduced).abs() < 1e-5, "full {} reduced {}", full.value(), reduced);
    }
}

#[test]
fn infeasible_problem_is_reported() {
    let c = ComplexMatrix::identity(2);
    let mut p = SdpProblem::new(vec![2], Sense::Minimize);
    p.objective = BlockMatrix { blocks: vec![c] };
    let mut con = p.new_constraint(-1.0);
    con.add(0, ComplexMatrix::identity(2));
    p.push(con);
    match solve(&p) {
        Ok(sol) => assert_ne!(sol.status, SdpStatus::Optimal),
        Err(_) => {}
    }
}

#[test]
fn malformed_problem_is_rejected() {
    let mut p = SdpProblem::new(vec![2], Sense::Minimize);
    let mut con = p.new_constraint(1.0);
    con.add(0, ComplexMatrix::identity(3));
    p.push(con);
    assert!(solve(&p).is_err());
}
