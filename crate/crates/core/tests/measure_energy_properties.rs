mod common;

use common::{brute_quartic, random_measure, random_rotation, rng};
use mildrep::*;
use rand::Rng;

#[test]
fn moment_constraint_inequality() {
    let mut r = rng(1);
    for _ in 0..1000 {
        let dim = r.gen_range(1..=4);
        let count = r.gen_range(1..=12);
        let mu = random_measure(&mut r, dim, count, 2.0);
        let p = 0.1 + 3.0 * r.gen::<f64>();
        let q = p + 0.1 + 3.0 * r.gen::<f64>();
        let mq = mu.radial_moment(q);
        let mp = mu.radial_moment(p);
        let bound = mp.powf(q / p);
        assert!(mq >= bound - 1e-12, "{mq} < {bound}");
        let radii: Vec<f64> = mu
            .points()
            .iter()
            .map(|x| x.iter().map(|c| c * c).sum::<f64>().sqrt())
            .collect();
        let spread = radii.iter().cloned().fold(0.0, f64::max) - radii.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > 1e-6 {
            assert!(mq > bound, "strict inequality expected for spread {spread}");
        }
    }
    // Equality on a sphere.
    let c = cross_polytope(3, 0.7).unwrap();
    assert!((c.radial_moment(4.0) - c.radial_moment(2.0).powf(2.0)).abs() < 1e-15);
}

#[test]
fn second_moment_is_linear_under_mixing() {
    let mut r = rng(2);
    for _ in 0..50 {
        let a = random_measure(&mut r, 3, 7, 1.0);
        let b = random_measure(&mut r, 3, 4, 1.5);
        let t = r.gen::<f64>();
        let mixed = a.mix(&b, t).unwrap().second_moment();
        let (ia, ib) = (a.second_moment(), b.second_moment());
        for i in 0..3 {
            for j in 0..3 {
                let lin = t * ia.get(i, j) + (1.0 - t) * ib.get(i, j);
                assert!((mixed.get(i, j) - lin).abs() <= 1e-14);
            }
        }
    }
}

#[test]
fn energy_is_rigid_motion_invariant() {
    let mut r = rng(3);
    let kernels = [
        Kernel::power_law(4.0, 2.0).unwrap(),
        Kernel::rescaled(5.5, 2.7).unwrap(),
        Kernel::log_limit(3.5).unwrap(),
    ];
    for _ in 0..30 {
        let dim = r.gen_range(1..=4);
        let mu = random_measure(&mut r, dim, 15, 1.0);
        let rot = random_rotation(&mut r, dim);
        let shift: Vec<f64> = (0..dim).map(|_| r.gen::<f64>() - 0.5).collect();
        let moved = mu.affine_image(&rot, &shift);
        for k in &kernels {
            assert!((energy(&mu, k) - energy(&moved, k)).abs() <= 1e-12);
        }
    }
}

#[test]
fn quartic_identity_matches_signed_double_sum() {
    let mut r = rng(4);
    for _ in 0..100 {
        let dim = r.gen_range(1..=4);
        let (na, nb) = (r.gen_range(1..=30), r.gen_range(1..=30));
        let a = random_measure(&mut r, dim, na, 1.0).center();
        let b = random_measure(&mut r, dim, nb, 1.0).center();
        let fast = quartic_quadratic_form(&a, &b).unwrap();
        let slow = brute_quartic(&a, &b);
        assert!(fast >= 0.0);
        assert!(
            (fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300),
            "{fast} vs {slow}"
        );
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(5);
    let h = 1e-6;
    let kernels = [
        Kernel::power_law(4.0, 2.0).unwrap(),
        Kernel::power_law(3.5, 2.5).unwrap(),
        Kernel::rescaled(6.0, 2.5).unwrap(),
        Kernel::log_limit(3.5).unwrap(),
    ];
    for k in &kernels {
        let mu = random_measure(&mut r, 3, 20, 1.0);
        let g = gradient(&mu, k);
        for i in 0..mu.len() {
            for c in 0..3 {
                let shifted = |s: f64| {
                    let mut pts = mu.points().to_vec();
                    pts[i][c] += s;
                    DiscreteMeasure::new(3, pts, mu.weights().to_vec()).unwrap()
                };
                let fd = (energy(&shifted(h), k) - energy(&shifted(-h), k)) / (2.0 * h);
                assert!((fd - g[i][c]).abs() <= 1e-5, "{k:?} i={i} c={c}: {fd} vs {}", g[i][c]);
            }
        }
    }
}

#[test]
fn corner_minimizers_stay_minimal_under_mixing() {
    let mut r = rng(6);
    let k = Kernel::power_law(4.0, 2.0).unwrap();
    for n in 1..=4 {
        let cc = corner_case_constants(n).unwrap();
        let s = unit_simplex(n, 1.0).unwrap();
        let rotated = s.affine_image(&random_rotation(&mut r, n), &vec![0.0; n]);
        let cross = cross_polytope(n, cc.radius).unwrap();
        for (a, b) in [(&s, &cross), (&s, &rotated), (&rotated, &cross)] {
            assert!(verify_min42(a, 1e-9) && verify_min42(b, 1e-9));
            for t in [0.25, 0.5, 0.75] {
                let m = a.mix(b, t).unwrap();
                assert!((energy(&m, &k) - cc.min_energy).abs() <= 1e-10, "n={n} t={t}");
            }
        }
    }
    // A sphere measure of the wrong radius is strictly worse.
    let off = cross_polytope(2, 0.5).unwrap();
    assert!(energy(&off, &k) > corner_case_constants(2).unwrap().min_energy + 1e-6);
}

#[test]
fn circle_quadrature_minimizes_corner_energy() {
    let k = Kernel::power_law(4.0, 2.0).unwrap();
    let cc = corner_case_constants(2).unwrap();
    let q = sphere_quadrature(2, cc.radius, 24).unwrap();
    assert!(verify_min42(&q, 1e-12));
    assert!((energy(&q, &k) - cc.min_energy).abs() <= 1e-14);
    let q3 = sphere_quadrature(3, corner_case_constants(3).unwrap().radius, 400).unwrap();
    assert!(verify_min42(&q3, 1e-10));
    assert!((energy(&q3, &k) - corner_case_constants(3).unwrap().min_energy).abs() <= 1e-12);
}

#[test]
fn northeast_energy_comparison() {
    let mut r = rng(7);
    let eps = 0.05;
    for _ in 0..200 {
        let beta = 2.0 + 2.0 * r.gen::<f64>();
        let alpha = beta + 0.1 + 3.0 * r.gen::<f64>();
        let mu = random_measure(&mut r, 2, 10, 0.8);
        let base = energy(&mu, &Kernel::rescaled(alpha, beta).unwrap());
        let up_a = energy(&mu, &Kernel::rescaled(alpha + eps, beta).unwrap());
        let up_b = energy(&mu, &Kernel::rescaled(alpha, beta + eps).unwrap());
        assert!(base <= up_a + 1e-12 && base <= up_b + 1e-12);
    }
    for n in 1..=4 {
        let s = unit_simplex(n, 1.0).unwrap();
        let pf = s.distance_pushforward();
        assert!(pf
            .atoms()
            .iter()
            .all(|(rad, _)| *rad == 0.0 || (rad - 1.0).abs() < 1e-9));
        let e0 = energy(&s, &Kernel::rescaled(3.0, 2.0).unwrap());
        let e1 = energy(&s, &Kernel::rescaled(3.0 + eps, 2.0).unwrap());
        let e2 = energy(&s, &Kernel::rescaled(3.0, 2.0 + eps).unwrap());
        assert!((e0 - e1).abs() <= 1e-12 && (e0 - e2).abs() <= 1e-12);
    }
}

#[test]
fn energy_matches_pushforward_integral() {
    let mut r = rng(8);
    let k = Kernel::power_law(5.0, 2.5).unwrap();
    for _ in 0..20 {
        let mu = random_measure(&mut r, 3, 12, 1.0);
        let via_pf = 0.5 * mu.distance_pushforward().integrate(|d| k.radial(d));
        assert!((via_pf - energy(&mu, &k)).abs() <= 1e-13);
    }
}

#[test]
fn measure_json_uses_documented_schema() {
    let s = unit_simplex(2, 1.0).unwrap();
    let v: serde_json::Value = serde_json::to_value(&s).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(v["weights"].as_array().unwrap().len(), 3);
    let back: DiscreteMeasure = serde_json::from_value(v).unwrap();
    assert_eq!(back, s);
}
