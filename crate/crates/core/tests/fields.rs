use minimax_core::games::{
    make_bilinear, make_dirac_gan, make_quadratic, DiracGanSpec, DiracLoss, GameSpec, QuadraticGameSpec,
};
use minimax_core::vecfield::{
    central_difference_jacobian, grad_check, joint_field, joint_jacobian, JacobianSource, JACOBIAN_FD_STEP,
};
use minimax_core::{FieldConvention, GameOracle, ParamPoint};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_game(rng: &mut ChaCha8Rng) -> Box<dyn GameOracle> {
    let (m, n) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let b: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    match rng.random_range(0..5) {
        0 => Box::new(
            make_quadratic(&QuadraticGameSpec { a: rng.random_range(0.0..1.0), c: rng.random_range(0.0..1.0), b })
                .unwrap(),
        ),
        1 => Box::new(make_bilinear(&b).unwrap()),
        2 => Box::new(make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Logistic })),
        3 => Box::new(make_dirac_gan(&DiracGanSpec { loss: DiracLoss::Linear })),
        _ => {
            let sym = |rng: &mut ChaCha8Rng, k: usize| {
                let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
                let s = &a + a.transpose();
                (0..k).map(|i| s.row(i).iter().copied().collect()).collect::<Vec<Vec<f64>>>()
            };
            let p = sym(rng, m);
            let q = sym(rng, n);
            GameSpec::QuadraticForm { p, b, q }.build().unwrap()
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, game: &dyn GameOracle) -> ParamPoint {
    let (m, n) = game.dims();
    ParamPoint::new((0..m + n).map(|_| rng.random_range(-2.0..2.0)).collect(), m).unwrap()
}

proptest! {
    #[test]
    fn conventions_are_exact_negations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = random_game(&mut rng);
        let p = random_point(&mut rng, game.as_ref());
        let a = joint_field(game.as_ref(), &p, FieldConvention::PaperOriented).unwrap().into_inner();
        let b = joint_field(game.as_ref(), &p, FieldConvention::DescentAscent).unwrap().into_inner();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn mixed_blocks_are_negated_transposes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = random_game(&mut rng);
        let p = random_point(&mut rng, game.as_ref());
        let (m, n) = game.dims();
        let j = joint_jacobian(game.as_ref(), &p, FieldConvention::PaperOriented, JacobianSource::AllowNumerical).unwrap();
        let xy = j.view((0, m), (m, n)).into_owned();
        let yx = j.view((m, 0), (n, m)).into_owned();
        prop_assert!((xy + yx.transpose()).amax() <= 1e-10);
    }
}

#[test]
fn analytic_jacobian_matches_differences_of_the_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let game = random_game(&mut rng);
        let p = random_point(&mut rng, game.as_ref());
        for conv in [FieldConvention::PaperOriented, FieldConvention::DescentAscent] {
            let analytic = joint_jacobian(game.as_ref(), &p, conv, JacobianSource::Analytic).unwrap();
            let split = p.split();
            let numeric = central_difference_jacobian(
                |q: &[f64]| {
                    let q = ParamPoint::new(q.to_vec(), split)?;
                    Ok(joint_field(game.as_ref(), &q, conv)?.into_inner())
                },
                p.values(),
                JACOBIAN_FD_STEP,
            )
            .unwrap();
            assert!((analytic - numeric).amax() <= 1e-4);
        }
    }
}

#[test]
fn every_oracle_passes_grad_check_on_the_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let game = random_game(&mut rng);
        let p = random_point(&mut rng, game.as_ref());
        let report = grad_check(game.as_ref(), &p);
        assert!(report.pass && report.gradient_error <= 1e-5, "{report:?}");
    }
}

#[test]
fn equilibria_are_stationary() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let game = random_game(&mut rng);
        for p in game.nash_points() {
            let v = joint_field(game.as_ref(), &p, FieldConvention::PaperOriented).unwrap();
            assert!(v.norm() <= 1e-12);
        }
    }
}
