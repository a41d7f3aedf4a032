use minimax_core::convergence::{
    classify_stationary, eigen_residual, eigenvalues, fixed_point_jacobian, sigma_bound, spectral_radius,
    Classification, JacobianMode,
};
use minimax_core::games::{make_quadratic, GameSpec, QuadraticGameSpec};
use minimax_core::vecfield::{joint_jacobian, JacobianSource};
use minimax_core::{
    run_solver, FieldConvention, GNConfig, GameOracle, ParamPoint, SolverConfig, SolverKind, StoppingRule, Verdict,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Greedy nearest matching; both lists must have equal length.
fn max_mismatch(mut a: Vec<Complex64>, b: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for z in b {
        let (i, d) = a.iter().enumerate().map(|(i, w)| (i, (w - z).norm())).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        worst = worst.max(d);
        a.swap_remove(i);
    }
    worst
}

// Characteristic polynomial coefficients c_0..c_n (c_n = 1) by the
// Faddeev-LeVerrier recursion.
fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

#[test]
fn eigenvalues_agree_with_independent_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..500 {
        let dim = rng.random_range(1..=32);
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let ours = eigenvalues(&a).unwrap();
        assert_eq!(ours.len(), dim);

        let schur: Vec<Complex64> = a.clone().complex_eigenvalues().iter().copied().collect();
        assert!(max_mismatch(schur, &ours) <= 1e-6);

        let sum: Complex64 = ours.iter().sum();
        assert!((sum.re - a.trace()).abs() <= 1e-8 * (1.0 + a.trace().abs()) && sum.im.abs() <= 1e-8);

        if dim <= 8 {
            let c = char_poly(&a);
            for z in &ours {
                let (mut val, mut scale) = (Complex64::new(0.0, 0.0), 0.0);
                for (k, ck) in c.iter().enumerate() {
                    val += z.powu(k as u32) * ck;
                    scale += ck.abs() * z.norm().powi(k as i32);
                }
                assert!(val.norm() <= 1e-8 * scale, "p({z}) = {val}");
            }
        }
        for z in &ours {
            assert!(eigen_residual(&a, *z) <= 1e-8);
        }
    }
}

#[test]
fn quadratic_spectrum_at_the_origin() {
    for beta in [0.0, 0.5, 1.0] {
        let b = vec![vec![beta, 0.0], vec![0.0, beta]];
        let game = make_quadratic(&QuadraticGameSpec { a: 1.0, c: 1.0, b }).unwrap();
        let j =
            joint_jacobian(&game, &ParamPoint::zeros(2, 2), FieldConvention::DescentAscent, JacobianSource::Analytic)
                .unwrap();
        let want = vec![
            Complex64::new(-1.0, beta),
            Complex64::new(-1.0, -beta),
            Complex64::new(-1.0, beta),
            Complex64::new(-1.0, -beta),
        ];
        assert!(max_mismatch(want, &eigenvalues(&j).unwrap()) <= 1e-10);
    }
}

#[test]
fn sigma_bound_is_tight() {
    for beta in [0.0, 0.25, 0.5, 1.0] {
        let eigs = [Complex64::new(-1.0, beta), Complex64::new(-1.0, -beta)];
        let bound = sigma_bound(&eigs).unwrap();
        assert!((bound - 2.0 / (1.0 + beta * beta)).abs() <= 1e-12);
        for k in -10..=10 {
            let s = bound + 0.01 * k as f64;
            let radius = spectral_radius(&eigs.map(|z| Complex64::new(1.0, 0.0) + z * s));
            match k {
                k if k < 0 => assert!(radius < 1.0),
                k if k > 0 => assert!(radius > 1.0),
                _ => assert!((radius - 1.0).abs() <= 1e-12),
            }
        }
    }
}

fn nash_games() -> Vec<Box<dyn GameOracle>> {
    vec![
        Box::new(make_quadratic(&QuadraticGameSpec::scalar(1.0, 1.0, 0.5)).unwrap()),
        Box::new(make_quadratic(&QuadraticGameSpec { a: 0.8, c: 0.4, b: vec![vec![0.3, -0.6]] }).unwrap()),
        GameSpec::QuadraticForm {
            p: vec![vec![1.0, 0.2], vec![0.2, 0.5]],
            b: vec![vec![0.4], vec![-0.3]],
            q: vec![vec![-0.7]],
        }
        .build()
        .unwrap(),
    ]
}

#[test]
fn preconditioned_jacobian_is_stable_at_nash_points() {
    for game in nash_games() {
        let p = &game.nash_points()[0];
        let rep = classify_stationary(game.as_ref(), p, FieldConvention::DescentAscent).unwrap();
        assert_eq!(rep.classification, Classification::NashCandidate);
        let j = joint_jacobian(game.as_ref(), p, FieldConvention::DescentAscent, JacobianSource::Analytic).unwrap();
        for lambda in [0.1, 0.5, 0.9] {
            let eigs = eigenvalues(&(&j * (1.0 / lambda - 1.0))).unwrap();
            assert!(eigs.iter().all(|z| z.re < 0.0));
        }
    }
}

#[test]
fn contracting_equilibria_attract_nearby_starts() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut runs = 0;
    for game in nash_games() {
        let nash = game.nash_points()[0].clone();
        let (m, n) = game.dims();
        for sigma in [0.1, 0.4] {
            let gn = GNConfig::from_sigma(0.5, sigma).unwrap();
            let f = fixed_point_jacobian(
                game.as_ref(),
                &nash,
                &gn,
                FieldConvention::DescentAscent,
                JacobianMode::AtEquilibrium,
            )
            .unwrap();
            if spectral_radius(&eigenvalues(&f).unwrap()) >= 1.0 {
                continue;
            }
            let mut cfg = SolverConfig::new(SolverKind::Gn).with_convention(FieldConvention::DescentAscent);
            cfg.gn = gn;
            for _ in 0..10 {
                let dir: Vec<f64> = (0..m + n).map(|_| rng.sample(StandardNormal)).collect();
                let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                let r = rng.random_range(0.0..0.1);
                let p0 = nash.displaced(&dir, r / len).unwrap();
                let traj = run_solver(&p0, game.as_ref(), &cfg, 20_000, &StoppingRule::default(), 0).unwrap();
                assert_eq!(traj.verdict, Verdict::Converged);
                assert!(traj.rows.last().unwrap().field_norm <= 1e-8);
                runs += 1;
            }
        }
    }
    assert_eq!(runs, 60);
}
