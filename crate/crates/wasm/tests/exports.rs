use fellerstar_wasm::{density_curves, resolvent_curve, trajectory};

#[test]
fn density_curves_integrate_to_one() {
    let beta = [0.5, 0.3, 0.2];
    let n = 4000;
    let ymax = 8.0;
    let d = density_curves(&beta, 1.0, ymax, n).unwrap();
    assert_eq!(d.len(), 3 * n);
    // From the center edge j carries mass beta_j.
    for (j, &b) in beta.iter().enumerate() {
        let mass: f64 = d[j * n..(j + 1) * n].iter().sum::<f64>() * ymax / n as f64;
        assert!((mass - b).abs() < 1e-3, "edge {j}: {mass}");
    }
    assert!(density_curves(&[0.5, -0.5], 1.0, 1.0, 10).is_err());
    assert!(density_curves(&beta, 0.0, 1.0, 10).is_err());
}

#[test]
fn resolvent_profile_decays_from_the_center() {
    let p = resolvent_curve(0.5, &[0.5, 0.5], 0.2, 1.0, 0, 5.0, 50).unwrap();
    assert_eq!(p.len(), 51);
    assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
    assert!(p[50] < p[1]);
    // Reflected Brownian motion: u = e^{-x}/(l - 1/2) + c e^{-sqrt(2 l) x} with u'(0) = 0.
    let l = 4.0f64;
    let r = (2.0 * l).sqrt();
    let exact = |x: f64| ((-x).exp() - (-r * x).exp() / r) / (l - 0.5);
    let q = resolvent_curve(0.0, &[1.0], 0.0, l, 0, 3.0, 30).unwrap();
    assert!((q[0] - exact(0.0)).abs() < 1e-9);
    for i in 1..=30 {
        let x = 0.1 * i as f64;
        assert!((q[i] - exact(x)).abs() < 1e-9, "x = {x}: {} vs {}", q[i], exact(x));
    }
    assert!(resolvent_curve(0.0, &[1.0], 0.0, 1.0, 2, 1.0, 5).is_err());
}

#[test]
fn trajectories_are_reproducible_triples() {
    let a = trajectory(0.3, &[0.5, 0.5], 0.0, 1.0, 7).unwrap();
    assert_eq!(a, trajectory(0.3, &[0.5, 0.5], 0.0, 1.0, 7).unwrap());
    assert_eq!(a.len() % 3, 0);
    assert_eq!(a.len() / 3, 501);
    for c in a.chunks(3) {
        assert!(c[1] == -1.0 || c[1] == 0.0 || c[1] == 1.0);
        assert!(c[2] >= 0.0);
    }
    let killed = trajectory(0.0, &[1.0], 50.0, 5.0, 1).unwrap();
    assert!(killed.len() / 3 < 501);
}
