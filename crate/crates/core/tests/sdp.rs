use chancompat::linalg::{
    hermitian_eigenvalues, kron, min_eigenvalue, symmetric_eigen, ComplexMatrix, C64,
};
use chancompat::random::{ginibre, random_hermitian};
use chancompat::sdp::{
    compile, real_embed, solve, solve_with, BlockMap, MatrixEquality, Objective, ScalarEquality,
    SdpProblem, Sense, SolveStatus, SolverSettings,
};
use chancompat::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// max t s.t. X + t𝟙 = H, X ⪰ 0.
fn eigen_lp(h: &ComplexMatrix) -> SdpProblem {
    let d = h.rows();
    let mut p = SdpProblem::new();
    let x = p.add_block(d);
    let t = p.add_scalar();
    p.add_matrix_equality(
        MatrixEquality::new(h.clone())
            .block(x, 1.0, BlockMap::Identity)
            .scalar(t, ComplexMatrix::identity(d)),
    );
    p.optimize_scalar(Sense::Maximize, t);
    p
}

#[test]
fn eigen_lp_diag() {
    let sol = solve(&eigen_lp(&ComplexMatrix::diag_real(&[1.0, 2.0]))).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective_value - 1.0).abs() < 1e-7, "{}", sol.objective_value);
    assert!((sol.scalar_values[0] - 1.0).abs() < 1e-7);
}

#[test]
fn eigen_lp_matches_min_eigenvalue_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut max_iters = 0;
    for k in 0..50 {
        let d = 2 + k % 4;
        let h = random_hermitian(&mut rng, d);
        let lmin = min_eigenvalue(&h).unwrap();
        let sol = solve(&eigen_lp(&h)).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {k}");
        worst = worst.max((sol.objective_value - lmin).abs());
        max_iters = max_iters.max(sol.iterations);
        assert!(sol.primal_residual <= 1e-7);
        assert!(sol.dual_residual <= 1e-7);
        assert!(min_eigenvalue(&sol.block_values[0]).unwrap() >= -1e-8);
    }
    assert!(worst < 1e-7, "worst deviation {worst:e}, iterations {max_iters}");
}

/// Planted problem: random PSD `X*` of rank `k` and complementary `S*` with
/// `X* S* = 0`. Constraints `Tr(A_i X) = Tr(A_i X*)`, cost `C = Σ λ_i A_i + S*`.
/// `X*` is optimal with value `Σ λ_i Tr(A_i X*)`.
#[test]
fn planted_solution_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..10 {
        let d = 3 + trial % 2;
        let g = ginibre(&mut rng, d, d);
        // Orthonormal basis from the eigenvectors of a random Hermitian matrix.
        let basis = chancompat::linalg::hermitian_eig(&(&g + &g.adjoint())).unwrap().vectors;
        let col = |k: usize| -> Vec<C64> { (0..d).map(|i| basis[(i, k)]).collect() };
        let rank = 1 + trial % 2;
        let mut xs = ComplexMatrix::zeros(d, d);
        let mut ss = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let proj = ComplexMatrix::outer(&col(k));
            if k < rank {
                xs += &proj.scale(1.0 + k as f64);
            } else {
                ss += &proj.scale(0.5 + k as f64);
            }
        }
        let m = d * d - 2;
        let mut p = SdpProblem::new();
        let x = p.add_block(d);
        let mut cost = ss.clone();
        let mut opt = 0.0;
        for _ in 0..m {
            let a = random_hermitian(&mut rng, d);
            let rhs = a.inner(&xs).re;
            let lam = rand::Rng::gen_range(&mut rng, -1.0..1.0);
            cost += &a.scale(lam);
            opt += lam * rhs;
            p.add_scalar_equality(ScalarEquality {
                block_terms: vec![(x, a)],
                scalar_terms: Vec::new(),
                rhs,
            });
        }
        p.set_objective(
            Sense::Minimize,
            Objective {
                block_terms: vec![(x, cost.hermitian_part())],
                scalar_terms: Vec::new(),
            },
        );
        let sol = solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
        assert!(
            (sol.objective_value - opt).abs() < 1e-6,
            "trial {trial}: {} vs {opt}",
            sol.objective_value
        );
    }
}

#[test]
fn solver_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_hermitian(&mut rng, 4);
    let a = solve(&eigen_lp(&h)).unwrap();
    let b = solve(&eigen_lp(&h)).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.objective_value.to_bits(), b.objective_value.to_bits());
    assert_eq!(a.block_values[0], b.block_values[0]);
}

#[test]
fn matrix_equality_row_counts() {
    for d in 1..=5 {
        let mut p = SdpProblem::new();
        let x = p.add_block(d);
        p.add_matrix_equality(
            MatrixEquality::new(ComplexMatrix::identity(d)).block(x, 1.0, BlockMap::Identity),
        );
        let c = compile(&p).unwrap();
        let re = c.origins.iter().filter(|o| matches!(o, chancompat::sdp::RowOrigin::Re { .. })).count();
        let im = c.origins.iter().filter(|o| matches!(o, chancompat::sdp::RowOrigin::Im { .. })).count();
        assert_eq!(re, d * (d + 1) / 2);
        assert_eq!(im, d * (d - 1) / 2);
    }
}

#[test]
fn partial_trace_constraint_compiles_consistently() {
    // Tr_2 X = ρ with X = ρ ⊗ 𝟙/2 feasible: minimizing Tr X gives Tr ρ = 1.
    let mut p = SdpProblem::new();
    let x = p.add_block(4);
    let rho = ComplexMatrix::diag_real(&[0.25, 0.75]);
    p.add_matrix_equality(MatrixEquality::new(rho.clone()).block(
        x,
        1.0,
        BlockMap::PartialTrace { dims: vec![2, 2], keep: vec![0] },
    ));
    p.set_objective(
        Sense::Minimize,
        Objective {
            block_terms: vec![(x, ComplexMatrix::identity(4))],
            scalar_terms: Vec::new(),
        },
    );
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective_value - 1.0).abs() < 1e-7);
}

#[test]
fn identity_kron_map() {
    // 𝟙 ⊗ η = 𝟙/2 ⊗ 𝟙 forces η = 𝟙/2.
    let mut p = SdpProblem::new();
    let eta = p.add_block(2);
    let rhs = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2).scale(0.5));
    p.add_matrix_equality(
        MatrixEquality::new(rhs).block(eta, 1.0, BlockMap::IdentityKron { left: 2, right: 1 }),
    );
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.block_values[0].max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-7);
}

#[test]
fn inconsistent_equalities_are_infeasible() {
    let mut p = SdpProblem::new();
    let x = p.add_block(2);
    p.add_trace_equality(x, 1.0);
    p.add_trace_equality(x, 2.0);
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn psd_incompatible_equalities_are_infeasible() {
    // Tr X = −1 with X ⪰ 0.
    let mut p = SdpProblem::new();
    let x = p.add_block(2);
    p.add_trace_equality(x, -1.0);
    let settings = SolverSettings {
        stall_iters: 500,
        ..SolverSettings::default()
    };
    let sol = solve_with(&p, &settings).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
}

#[test]
fn malformed_problems_are_rejected() {
    let mut p = SdpProblem::new();
    let x = p.add_block(2);
    let mut bad = ComplexMatrix::zeros(2, 2);
    bad[(0, 1)] = C64::new(1.0, 0.0);
    p.add_scalar_equality(ScalarEquality {
        block_terms: vec![(x, bad)],
        scalar_terms: Vec::new(),
        rhs: 0.0,
    });
    assert!(matches!(solve(&p), Err(Error::Malformed(_))));

    let mut p = SdpProblem::new();
    let x = p.add_block(3);
    p.add_matrix_equality(
        MatrixEquality::new(ComplexMatrix::identity(2)).block(x, 1.0, BlockMap::Identity),
    );
    assert!(matches!(solve(&p), Err(Error::Malformed(_))));

    let mut p = SdpProblem::new();
    let x = p.add_block(4);
    p.add_matrix_equality(MatrixEquality::new(ComplexMatrix::identity(2)).block(
        x,
        1.0,
        BlockMap::PartialTrace { dims: vec![3, 2], keep: vec![0] },
    ));
    assert!(matches!(solve(&p), Err(Error::Malformed(_))));
}

#[test]
fn size_guard() {
    let mut p = SdpProblem::new();
    p.add_block(40);
    assert!(matches!(solve(&p), Err(Error::TooLarge { dim: 80, limit: 64 })));
    let relaxed = SolverSettings {
        max_real_dim: 100,
        max_iters: 10,
        ..SolverSettings::default()
    };
    assert!(solve_with(&p, &relaxed).is_ok());
}

#[test]
fn embed_pauli_y() {
    let e = real_embed(&ComplexMatrix::pauli_y());
    let mut vals = symmetric_eigen(&e, 4).values;
    vals.sort_by(|a, b| b.total_cmp(a));
    for (v, expect) in vals.iter().zip([1.0, 1.0, -1.0, -1.0]) {
        assert!((v - expect).abs() < 1e-12);
    }
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(e[i * 4 + j], e[j * 4 + i]);
        }
    }
}

#[test]
fn embed_identity() {
    let e = real_embed(&ComplexMatrix::identity(2));
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(e[i * 4 + j], if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn embed_doubles_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in 2..=6 {
        let h = random_hermitian(&mut rng, d);
        let mut expect: Vec<f64> = hermitian_eigenvalues(&h)
            .unwrap()
            .into_iter()
            .flat_map(|v| [v, v])
            .collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        let mut got = symmetric_eigen(&real_embed(&h), 2 * d).values;
        got.sort_by(|a, b| b.total_cmp(a));
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-10);
        }
    }
}

#[test]
fn compiled_problem_dumps_json() {
    let p = eigen_lp(&ComplexMatrix::diag_real(&[1.0, 2.0]));
    let json = compile(&p).unwrap().to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["num_vars"], 5);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}
