use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use distcert::certify::{certify_best_rate, certify_sublinear, CertMode, DEFAULT_DELTA};
use distcert::lmi::{build_program, Assignment};
use distcert::matlib::{is_psd, kron, sym_eigen, Matrix, SymMatrix};
use distcert::model::{
    dgd_algorithm, fixed_point_residuals, laplacian, sector_combine, sector_lipschitz, sector_monotone,
    sector_slope_restricted, DgdParams, Graph, QuadraticCost,
};
use distcert::sdp::{solve_feasibility, SolverOptions, Status};
use distcert::sim::{empirical_contraction, fixed_point_affine, step};

const MU: f64 = 0.05;
const K: f64 = 1.0;

fn example_graph() -> Graph {
    Graph::new(4, &[(1, 2), (2, 3), (3, 4), (4, 2)]).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-5.0..5.0f64, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    matrix(n, n).prop_map(|m| SymMatrix::new(m.add(&m.transpose()).unwrap().scale(0.5)).unwrap())
}

fn sized_sym() -> impl Strategy<Value = SymMatrix> {
    (2usize..=6).prop_flat_map(sym)
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
}

/// PSD test by symmetric pivoted LDLᵀ: every pivot must be nonnegative and a
/// zero pivot must have a zero remaining column.
fn ldl_psd(m: &Matrix) -> bool {
    let n = m.rows();
    let mut a = to_na(m);
    let tol = 1e-10 * a.amax().max(1.0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let &p = active.iter().max_by(|&&i, &&j| a[(i, i)].total_cmp(&a[(j, j)])).unwrap();
        let d = a[(p, p)];
        active.retain(|&i| i != p);
        if d < -tol {
            return false;
        }
        if d <= tol {
            if active.iter().any(|&i| a[(i, p)].abs() > tol.sqrt()) {
                return false;
            }
            continue;
        }
        for &i in &active {
            for &j in &active {
                a[(i, j)] -= a[(i, p)] * a[(p, j)] / d;
            }
        }
    }
    true
}

/// Random DGD step pair, skewed toward the region where certificates exist.
fn steps() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.02..0.6f64, 4), prop::collection::vec(0.01..1.2f64, 4))
}

/// Steps where the exponential program is usually feasible close to γ = 1.
fn contractive_steps() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.1..0.33f64, 4), prop::collection::vec(0.05..0.5f64, 4))
}

fn dgd(rho: &[f64], eta: &[f64]) -> distcert::model::DistributedAlgorithm {
    let p = DgdParams { rho: rho.to_vec(), eta: eta.to_vec(), mu: MU, k: K, n: 1 };
    dgd_algorithm(&p, &example_graph(), None).unwrap()
}

fn scaled(values: &Assignment, c: f64) -> Assignment {
    values.iter().map(|(k, v)| (*k, c * v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eigen_decomposition_reconstructs(m in sized_sym()) {
        let (vals, vecs) = sym_eigen(&m).unwrap();
        let back = vecs.matmul(&Matrix::from_diag(&vals)).unwrap().matmul(&vecs.transpose()).unwrap();
        let scale = m.as_matrix().max_abs().max(1e-300);
        prop_assert!(back.max_abs_diff(m.as_matrix()) / scale < 1e-8);
        let mut oracle: Vec<f64> = nalgebra::SymmetricEigen::new(to_na(m.as_matrix())).eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let mut ours = vals.clone();
        ours.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&oracle) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9 * scale);
        }
    }

    #[test]
    fn kron_mixed_product(
        a in matrix(2, 3), b in matrix(3, 2), c in matrix(3, 2), d in matrix(2, 4), s in -3.0..3.0f64,
    ) {
        let lhs = kron(&a, &b).unwrap().matmul(&kron(&c, &d).unwrap()).unwrap();
        let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10 * rhs.max_abs().max(1.0));
        // bilinearity
        let sum = kron(&a.add(&a.scale(s)).unwrap(), &b).unwrap();
        let parts = kron(&a, &b).unwrap().add(&kron(&a.scale(s), &b).unwrap()).unwrap();
        prop_assert!(sum.max_abs_diff(&parts) <= 1e-10 * parts.max_abs().max(1.0));
    }

    #[test]
    fn linear_oracles_in_sector_satisfy_bounds(
        mu in 0.01..1.0f64, width in 0.0..5.0f64, t in 0.0..=1.0f64, dz in -10.0..10.0f64, wts in (0.0..2.0f64, 0.0..2.0f64),
    ) {
        let k = mu + width;
        let c = mu + t * width;
        let (dz, dw) = ([dz], [c * dz]);
        let slope = sector_slope_restricted(mu, k, 1).unwrap();
        let mono = sector_monotone(mu, 1).unwrap();
        let lip = sector_lipschitz(k, 1).unwrap();
        let tol = 1e-12 * (1.0 + k * k) * dz[0] * dz[0];
        for b in [&slope, &mono, &lip] {
            prop_assert!(b.value(&dz, &dw).unwrap() <= tol);
        }
        prop_assume!(wts.0 + wts.1 > 0.0);
        let combined = sector_combine(&[mono, lip], &[wts.0, wts.1]).unwrap();
        prop_assert!(combined.value(&dz, &dw).unwrap() <= 4.0 * tol);
    }

    #[test]
    fn laplacian_has_zero_row_sums(extra in prop::collection::vec((1usize..=6, 1usize..=6), 0..8)) {
        // a path through all six nodes keeps the graph connected
        let mut edges: std::collections::BTreeSet<(usize, usize)> = (1..6).map(|i| (i, i + 1)).collect();
        edges.extend(extra.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))));
        let edges: Vec<_> = edges.into_iter().collect();
        let g = Graph::new(6, &edges).unwrap();
        let l = g.laplacian_matrix();
        for r in 0..6 {
            prop_assert!((0..6).map(|c| l[(r, c)]).sum::<f64>().abs() < 1e-12);
        }
        let info = laplacian(&g).unwrap();
        let smallest = nalgebra::SymmetricEigen::new(to_na(&l)).eigenvalues.min();
        prop_assert!(smallest.abs() < 1e-10);
        prop_assert!(info.d_max >= 1.0);
    }

    #[test]
    fn dgd_lifts_by_kronecker(rho in 0.01..1.0f64, eta in 0.01..1.0f64, n in 2usize..=4) {
        let base = dgd_algorithm(&DgdParams::homogeneous(4, rho, eta, MU, K, 1), &example_graph(), None).unwrap();
        let lifted = dgd_algorithm(&DgdParams::homogeneous(4, rho, eta, MU, K, n), &example_graph(), None).unwrap();
        let eye = Matrix::identity(n);
        prop_assert_eq!(&lifted.network().m, &kron(&base.network().m, &eye).unwrap());
        for (a, b) in base.agents().iter().zip(lifted.agents()) {
            let (x, y) = (&a.dynamics, &b.dynamics);
            for (small, big) in [(&x.a, &y.a), (&x.b, &y.b), (&x.g, &y.g), (&x.c_con, &y.c_con), (&x.c_opt, &y.c_opt)] {
                prop_assert_eq!(big, &kron(small, &eye).unwrap());
            }
            prop_assert_eq!(b.oracle.bounds[0].s.as_matrix(), &kron(a.oracle.bounds[0].s.as_matrix(), &eye).unwrap());
        }
    }

    #[test]
    fn dgd_step_is_affine((rho, eta) in steps(), a in prop::collection::vec(0.03..0.5f64, 4),
                          x1 in prop::collection::vec(-25.0..25.0f64, 4), x2 in prop::collection::vec(-25.0..25.0f64, 4)) {
        let costs: Vec<QuadraticCost> = a.iter().enumerate().map(|(i, &a)| QuadraticCost::new(a, i as f64 - 1.5).unwrap()).collect();
        let p = DgdParams { rho: rho.clone(), eta: eta.clone(), mu: MU, k: K, n: 1 };
        let alg = dgd_algorithm(&p, &example_graph(), Some(&costs)).unwrap();
        let l = example_graph().laplacian_matrix();
        let map = Matrix::from_fn(4, 4, |r, c| {
            let diag = if r == c { 1.0 - eta[r] * 2.0 * a[r] } else { 0.0 };
            diag - rho[r] * l[(r, c)]
        });
        let diff: Vec<f64> = x1.iter().zip(&x2).map(|(p, q)| p - q).collect();
        let expect = map.mat_vec(&diff).unwrap();
        let (s1, s2) = (step(&alg, &x1).unwrap(), step(&alg, &x2).unwrap());
        for i in 0..4 {
            prop_assert!((s1[i] - s2[i] - expect[i]).abs() <= 1e-12 * diff.iter().fold(1.0f64, |m, d| m.max(d.abs())));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn psd_agrees_with_pivoted_factorization(m in sized_sym(), gram in any::<bool>()) {
        // half the cases are Gram matrices, so both verdicts are exercised
        let m = if gram { SymMatrix::new(m.as_matrix().matmul(&m.as_matrix().transpose()).unwrap()).unwrap() } else { m };
        let exact = nalgebra::SymmetricEigen::new(to_na(m.as_matrix())).eigenvalues.min();
        // a zero eigenvalue is decided by roundoff on either side
        prop_assume!(exact.abs() > 1e-8 * m.as_matrix().max_abs());
        prop_assert_eq!(is_psd(&m, 0.0).unwrap(), ldl_psd(m.as_matrix()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn constraints_are_affine_in_the_witness((rho, eta) in steps(), gamma in 0.2..=1.0f64, theta in 0.0..=1.0f64, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let prog = build_program(&dgd(&rho, &eta), gamma, false).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Assignment { prog.variables.iter().map(|v| (*v, rng.random_range(-10.0..10.0))).collect() };
        let (v1, v2) = (draw(), draw());
        let mix: Assignment = v1.iter().map(|(k, a)| (*k, theta * a + (1.0 - theta) * v2[k])).collect();
        for lmi in &prog.constraints {
            let want = lmi.evaluate(&v1).as_matrix().scale(theta).add(&lmi.evaluate(&v2).as_matrix().scale(1.0 - theta)).unwrap();
            prop_assert!(lmi.evaluate(&mix).as_matrix().max_abs_diff(&want) <= 1e-12 * want.max_abs().max(1.0));
        }
    }

    #[test]
    fn witness_scaling_preserves_feasibility((rho, eta) in contractive_steps(), c in 0.01..100.0f64) {
        let alg = dgd(&rho, &eta);
        let verdict = certify_sublinear(&alg, &SolverOptions::default(), DEFAULT_DELTA).unwrap();
        let Some(cert) = verdict.certificate() else { return Ok(()) };
        let prog = build_program(&alg.strictified(DEFAULT_DELTA).unwrap(), 1.0, true).unwrap();
        let base = prog.margins(&cert.witness).unwrap();
        let after = prog.margins(&scaled(&cert.witness, c)).unwrap();
        for (m0, m1) in base.iter().zip(&after) {
            prop_assert!(*m0 > 0.0 && *m1 > 0.0);
            assert_relative_eq!(*m1, c * m0, max_relative = 1e-8);
        }
    }

    #[test]
    fn margin_doubles_with_box((rho, eta) in contractive_steps(), gamma in 0.99..=1.0f64) {
        let prog = build_program(&dgd(&rho, &eta), gamma, false).unwrap();
        let small = solve_feasibility(&prog, &SolverOptions::default()).unwrap();
        prop_assume!(small.status == Status::Feasible);
        let big = solve_feasibility(&prog, &SolverOptions { bound: 2e4, ..SolverOptions::default() }).unwrap();
        prop_assert_eq!(big.status, Status::Feasible);
        assert_relative_eq!(big.margin, 2.0 * small.margin, max_relative = 1e-3);
    }

    #[test]
    fn feasibility_is_monotone_in_rate((rho, eta) in contractive_steps(), g1 in 0.98..1.0f64, dg in 0.0..0.02f64) {
        let alg = dgd(&rho, &eta);
        let opts = SolverOptions::default();
        let lo = solve_feasibility(&build_program(&alg, g1, false).unwrap(), &opts).unwrap();
        prop_assume!(lo.status == Status::Feasible);
        let hi = solve_feasibility(&build_program(&alg, (g1 + dg).min(1.0), false).unwrap(), &opts).unwrap();
        prop_assert_eq!(hi.status, Status::Feasible);
    }

    #[test]
    fn certified_rate_bounds_simulated_contraction((rho, eta) in contractive_steps(), a in prop::collection::vec(0.025..=0.5f64, 4), seed in any::<u64>()) {
        let costs: Vec<QuadraticCost> = a.iter().map(|&a| QuadraticCost::new(a, 1.0).unwrap()).collect();
        let p = DgdParams { rho, eta, mu: MU, k: K, n: 1 };
        let alg = dgd_algorithm(&p, &example_graph(), Some(&costs)).unwrap();
        let verdict = certify_best_rate(&alg, &SolverOptions::default(), 1e-3).unwrap();
        let Some(cert) = verdict.certificate() else { return Ok(()) };
        let CertMode::Exponential { gamma } = cert.mode else { unreachable!() };
        let est = empirical_contraction(&alg, 5, 20, (-25.0, 25.0), seed, Some(cert)).unwrap();
        prop_assert!(est.rate_estimate <= gamma + 1e-8, "ratio {} above gamma {gamma}", est.rate_estimate);
    }

    #[test]
    fn narrower_sector_stays_certified((rho, eta) in contractive_steps(), shrink in (0.0..0.9f64, 0.0..0.9f64)) {
        // re-solved rather than substituted: the α-weighted slope form of a
        // narrower sector does not dominate the wider one entrywise
        let opts = SolverOptions::default();
        let wide = dgd_algorithm(&DgdParams { rho: rho.clone(), eta: eta.clone(), mu: MU, k: K, n: 1 }, &example_graph(), None).unwrap();
        prop_assume!(certify_sublinear(&wide, &opts, DEFAULT_DELTA).unwrap().is_certified());
        let (mu, k) = (MU + shrink.0 * (K - MU) / 2.0, K - shrink.1 * (K - MU) / 2.0);
        let narrow = dgd_algorithm(&DgdParams { rho, eta, mu, k, n: 1 }, &example_graph(), None).unwrap();
        prop_assert!(certify_sublinear(&narrow, &opts, DEFAULT_DELTA).unwrap().is_certified());
    }
}

#[test]
fn consensus_residual_shrinks_with_step_ratio() {
    let costs: Vec<QuadraticCost> = [(0.125, 1.0), (0.4, 3.0), (0.475, -0.5), (0.06, 4.0)]
        .iter()
        .map(|&(a, b)| QuadraticCost::new(a, b).unwrap())
        .collect();
    let mut last = f64::INFINITY;
    for eta in [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625] {
        let alg = dgd_algorithm(&DgdParams::homogeneous(4, 0.3, eta, MU, K, 1), &example_graph(), Some(&costs)).unwrap();
        let x = fixed_point_affine(&alg).unwrap();
        let w: Vec<f64> = x.iter().zip(&costs).flat_map(|(xi, c)| c.gradient(&[*xi])).collect();
        let (consensus, optimality) = fixed_point_residuals(&x, &w, 4).unwrap();
        assert!(consensus > 0.0 && consensus < last, "eta {eta}: {consensus} vs {last}");
        // Σ_i w_i vanishes exactly at a DGD fixed point because 1ᵀL = 0
        assert!(optimality < 1e-9);
        last = consensus;
    }
    assert!(last < 0.05);
}
