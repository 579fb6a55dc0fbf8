mod common;

use common::{random_g, random_params, random_point};
use fellerstar::analytic::*;
use fellerstar::quadrature::Quad;
use fellerstar::{BoundaryParams, GraphPoint, JumpMeasure, Tail};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixed() -> BoundaryParams {
    BoundaryParams {
        alpha: 1.0,
        beta: vec![0.5, 0.3, 0.2],
        gamma: 0.5,
        m: JumpMeasure::Finite {
            delta: 1.0,
            p: vec![0.2, 0.3, 0.5],
            radial: vec![Tail::Exponential { rate: 2.0 }; 3],
        },
    }
}

#[test]
fn conservative_resolvent_of_one() {
    let q = Quad::default();
    let mut p = mixed();
    p.gamma = 0.0;
    let heavy = BoundaryParams {
        alpha: 0.3,
        beta: vec![0.4, 0.0],
        gamma: 0.0,
        m: JumpMeasure::Infinite { tails: vec![Tail::zero(), Tail::StableLike { c: 0.5, index: 0.5 }] },
    };
    for params in [p, heavy] {
        let one = EdgeFunction::constant(params.k(), 1.0);
        for lambda in [0.3, 1.0, 4.0] {
            let r = Resolvent::new(&params, lambda, &one, &q).unwrap();
            for x in [GraphPoint::Center, GraphPoint::Edge { edge: 1, x: 0.2 }, GraphPoint::Edge { edge: 0, x: 3.0 }] {
                assert!((lambda * r.eval(x) - 1.0).abs() < 1e-8, "{lambda} {x:?} {}", lambda * r.eval(x));
            }
        }
    }
}

#[test]
fn no_jumps_agrees_with_sinh_form() {
    let q = Quad::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let mut p = random_params(&mut rng);
        p.m = JumpMeasure::Zero;
        let g = random_g(&mut rng, p.k());
        let lambda = rng.random_range(0.2..3.0);
        let x = random_point(&mut rng, p.k());
        let a = resolvent_full(&p, lambda, &g, x, &q).unwrap();
        let b = resolvent_m0(&p, lambda, &g, x, &q).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn finite_jumps_agree_with_killed_form() {
    let q = Quad::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let p = random_params(&mut rng);
        let g = random_g(&mut rng, p.k());
        let lambda = rng.random_range(0.2..3.0);
        let x = random_point(&mut rng, p.k());
        let a = resolvent_full(&p, lambda, &g, x, &q).unwrap();
        let b = resolvent_finite_m(&p, lambda, &g, x, &q).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn small_jump_rate_approaches_no_jumps() {
    let q = Quad::default();
    let mut p = mixed();
    if let JumpMeasure::Finite { delta, .. } = &mut p.m {
        *delta = 1e-8;
    }
    let p0 = BoundaryParams { m: JumpMeasure::Zero, ..p.clone() };
    let g = EdgeFunction::exp_decay(vec![1.0, 2.0, 0.5]);
    for x in [GraphPoint::Center, GraphPoint::Edge { edge: 2, x: 0.7 }] {
        let a = resolvent_full(&p, 1.0, &g, x, &q).unwrap();
        let b = resolvent_full(&p0, 1.0, &g, x, &q).unwrap();
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn singular_case() {
    let q = Quad::default();
    let p = BoundaryParams {
        alpha: 0.0,
        beta: vec![0.0, 0.0],
        gamma: 0.4,
        m: JumpMeasure::Finite {
            delta: 1.5,
            p: vec![0.3, 0.7],
            radial: vec![Tail::Exponential { rate: 1.0 }, Tail::Pareto { scale: 0.5, shape: 2.0 }],
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..5 {
        let g = random_g(&mut rng, 2);
        let lambda = rng.random_range(0.3..2.0);
        let r = Resolvent::new(&p, lambda, &g, &q).unwrap();
        let f = singular_functional(&p, &r.as_edge_function(), &q).unwrap();
        assert!(f.abs() < 1e-8, "{f}");
        let x = random_point(&mut rng, 2);
        let b = resolvent_finite_m(&p, lambda, &g, x, &q).unwrap();
        assert!((r.eval(x) - b).abs() < 1e-9);
    }
}

#[test]
fn hilbert_equation() {
    let q = Quad::with_tol(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..4 {
        let p = random_params(&mut rng);
        let g = random_g(&mut rng, p.k());
        let (lambda, nu) = (rng.random_range(0.3..2.0), rng.random_range(0.3..2.0));
        let x = random_point(&mut rng, p.k());
        let rl = Resolvent::new(&p, lambda, &g, &q).unwrap();
        let rn = Resolvent::new(&p, nu, &g, &q).unwrap();
        let nested = Resolvent::new(&p, nu, &rl.as_edge_function(), &q).unwrap();
        let lhs = (lambda - nu) * nested.eval(x);
        let rhs = rn.eval(x) - rl.eval(x);
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn boundary_condition_holds() {
    let q = Quad::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let p = random_params(&mut rng);
        let g = EdgeFunction::exp_decay((0..p.k()).map(|_| rng.random_range(0.2..3.0)).collect());
        let lambda = rng.random_range(0.3..2.0);
        let r = boundary_residual(&p, lambda, &g, 2e-3, &q).unwrap();
        assert!(r.abs() < 1e-6, "{r}");
    }
}
