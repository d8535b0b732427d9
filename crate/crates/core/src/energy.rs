//! Interaction energies of discrete measures and their particle gradients.
//!
//! For `mu = sum_i w_i delta_{x_i}` and a radial kernel `w`,
//!
//! ```text
//! E(mu) = 1/2 sum_i sum_j w_i w_j w(|x_i - x_j|)
//! ```
//!
//! with the diagonal terms included (they vanish since `w(0) = 0`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{dist, norm, DiscreteMeasure, MomentTensor};
use crate::potentials::{rpow, Exponents, Kernel};

/// Above this particle count the outer loop is split across threads.
const PARALLEL_MIN_POINTS: usize = 256;

const CENTERED_TOL: f64 = 1e-9;

/// Row-wise sums `s_i = sum_j f(i, j)` evaluated in parallel for large inputs;
/// summation order within each row is fixed, and rows are reduced in order.
fn row_sums<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    if n >= PARALLEL_MIN_POINTS {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// `E_W(mu)`.
pub fn energy(mu: &DiscreteMeasure, kernel: &Kernel) -> f64 {
    let pts = mu.points();
    let ws = mu.weights();
    let rows = row_sums(mu.len(), |i| {
        let mut s = 0.0;
        for j in 0..pts.len() {
            if j != i {
                s += ws[j] * kernel.radial(dist(&pts[i], &pts[j]));
            }
        }
        ws[i] * s
    });
    0.5 * rows.iter().sum::<f64>()
}

/// Energy split into its attractive and repulsive contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub attractive_part: f64,
    pub repulsive_part: f64,
}

type Profile = Box<dyn Fn(f64) -> f64 + Sync>;

/// Splits `E_W(mu) = attractive - repulsive` along the two terms of the profile:
/// `r^a/a` and `r^b/b` for power laws, `b r^a/(a-b)` and `a r^b/(a-b)` for the
/// rescaled family, `a r^a log r` and `r^a` for the log-limit kernel. A pure
/// attractive kernel has no repulsive part.
pub fn energy_breakdown(mu: &DiscreteMeasure, kernel: &Kernel) -> EnergyBreakdown {
    let (attr, rep): (Profile, Profile) = match *kernel {
        Kernel::PowerLaw(e) => {
            let (a, b) = (e.alpha(), e.beta());
            (Box::new(move |r| rpow(r, a) / a), Box::new(move |r| rpow(r, b) / b))
        }
        Kernel::Rescaled(e) => {
            let (a, b) = (e.alpha(), e.beta());
            (
                Box::new(move |r| b * rpow(r, a) / (a - b)),
                Box::new(move |r| a * rpow(r, b) / (a - b)),
            )
        }
        Kernel::LogLimit { alpha } => (
            Box::new(
                move |r: f64| {
                    if r == 0.0 {
                        0.0
                    } else {
                        alpha * rpow(r, alpha) * r.ln()
                    }
                },
            ),
            Box::new(move |r| rpow(r, alpha)),
        ),
        Kernel::PureAttractive { alpha } => (Box::new(move |r| rpow(r, alpha) / alpha), Box::new(|_| 0.0)),
    };
    let pts = mu.points();
    let ws = mu.weights();
    let (mut a_sum, mut r_sum) = (0.0, 0.0);
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i != j {
                let r = dist(&pts[i], &pts[j]);
                let ww = ws[i] * ws[j];
                a_sum += ww * attr(r);
                r_sum += ww * rep(r);
            }
        }
    }
    EnergyBreakdown {
        total: energy(mu, kernel),
        attractive_part: 0.5 * a_sum,
        repulsive_part: 0.5 * r_sum,
    }
}

/// Energy of the uniform measure on a regular `n`-simplex of side `d`:
/// `n / (2(n+1)) * w(d)`.
pub fn simplex_energy(n: usize, d: f64, kernel: &Kernel) -> Result<f64> {
    if n == 0 || !(d > 0.0) {
        return Err(Error::Domain(format!(
            "simplex_energy needs n >= 1, d > 0; got ({n}, {d})"
        )));
    }
    kernel.validate()?;
    Ok(n as f64 / (2 * (n + 1)) as f64 * kernel.radial(d))
}

/// `8 E_{W_4}(mu0 - mu1) = 4 Tr(J^2) + 2 (Tr J)^2` with `J = I(mu0) - I(mu1)`.
///
/// Valid for centered probability measures; nonnegative, and zero exactly
/// when the two second moment tensors coincide.
pub fn quartic_quadratic_form(mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> Result<f64> {
    if mu0.dim() != mu1.dim() {
        return Err(Error::InvalidMeasure("measures of different dimension".into()));
    }
    for mu in [mu0, mu1] {
        let b = norm(&mu.barycenter());
        if b > CENTERED_TOL {
            return Err(Error::NotCentered(b));
        }
    }
    let j = mu0.second_moment().sub(&mu1.second_moment());
    let tr = j.trace();
    Ok(4.0 * j.trace_of_square() + 2.0 * tr * tr)
}

/// Gradient of the energy with respect to each support point at fixed
/// weights: `sum_{j != i} w_i w_j w'(r_ij) (x_i - x_j) / r_ij`.
/// Coincident points exert no force on each other.
pub fn gradient(mu: &DiscreteMeasure, kernel: &Kernel) -> Vec<Vec<f64>> {
    let dim = mu.dim();
    let pts = mu.points();
    let ws = mu.weights();
    let row = |i: usize| {
        let mut g = vec![0.0; dim];
        for j in 0..pts.len() {
            if j == i {
                continue;
            }
            let r = dist(&pts[i], &pts[j]);
            if r == 0.0 {
                continue;
            }
            let c = ws[j] * kernel.radial_derivative(r) / r;
            for k in 0..dim {
                g[k] += c * (pts[i][k] - pts[j][k]);
            }
        }
        g.iter_mut().for_each(|x| *x *= ws[i]);
        g
    };
    if pts.len() >= PARALLEL_MIN_POINTS {
        (0..pts.len()).into_par_iter().map(row).collect()
    } else {
        (0..pts.len()).map(row).collect()
    }
}

/// Optimal scale, sphere radius and minimal energy for the `(4, 2)` kernel
/// in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerCase {
    pub lambda: f64,
    pub radius: f64,
    pub min_energy: f64,
}

pub fn corner_case_constants(n: usize) -> Result<CornerCase> {
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let nf = n as f64;
    let lambda = 1.0 / (2.0 * nf + 2.0);
    // 2E = n^2 l^2 + n l^2 - n l at the optimal l.
    let min_energy = 0.5 * (nf * nf * lambda * lambda + nf * lambda * lambda - nf * lambda);
    Ok(CornerCase {
        lambda,
        radius: (nf * lambda).sqrt(),
        min_energy,
    })
}

/// Checks whether `mu` (after centering) lies on the sphere of radius
/// `sqrt(n/(2n+2))` with second moment `Id/(2n+2)`, both within `tol`.
pub fn verify_min42(mu: &DiscreteMeasure, tol: f64) -> bool {
    let n = mu.dim();
    let cc = match corner_case_constants(n) {
        Ok(c) => c,
        Err(_) => return false,
    };
    let centered = mu.center();
    let on_sphere = centered
        .points()
        .iter()
        .zip(centered.weights())
        .filter(|(_, w)| **w > 0.0)
        .all(|(p, _)| (norm(p) - cc.radius).abs() <= tol);
    on_sphere
        && centered
            .second_moment()
            .max_abs_diff(&MomentTensor::scaled_identity(n, cc.lambda))
            <= tol
}

/// The `(4, 2)` power-law kernel.
pub fn corner_kernel() -> Kernel {
    Kernel::PowerLaw(Exponents::new(4.0, 2.0).expect("valid exponents"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{cross_polytope, unit_simplex};

    fn brute_energy(mu: &DiscreteMeasure, k: &Kernel) -> f64 {
        let mut s = 0.0;
        for (p, wp) in mu.points().iter().zip(mu.weights()) {
            for (q, wq) in mu.points().iter().zip(mu.weights()) {
                s += wp * wq * k.radial(dist(p, q));
            }
        }
        0.5 * s
    }

    #[test]
    fn simplex_energy_closed_form() {
        for n in 1..=6 {
            for &(a, b) in &[(4.0, 2.0), (5.0, 3.0), (2.5, 2.0)] {
                let k = Kernel::power_law(a, b).unwrap();
                let mu = unit_simplex(n, 1.0).unwrap();
                let expected = n as f64 / (2.0 * (n as f64 + 1.0)) * (1.0 / a - 1.0 / b);
                assert!((energy(&mu, &k) - expected).abs() < 1e-14);
                assert!((brute_energy(&mu, &k) - expected).abs() < 1e-14);
                assert!((simplex_energy(n, 1.0, &k).unwrap() - energy(&mu, &k)).abs() < 1e-14);
            }
        }
        let two = unit_simplex(1, 1.0).unwrap();
        assert!((energy(&two, &corner_kernel()) + 1.0 / 16.0).abs() < 1e-15);
        let pm = DiscreteMeasure::point_mass(vec![1.0, 2.0]).unwrap();
        assert_eq!(energy(&pm, &corner_kernel()), 0.0);
    }

    #[test]
    fn simplex_energy_examples() {
        for n in 1..=5 {
            let e = simplex_energy(n, 1.0, &corner_kernel()).unwrap();
            assert!((e + n as f64 / (8.0 * (n as f64 + 1.0))).abs() < 1e-15);
        }
        let k = Kernel::rescaled(5.0, 2.5).unwrap();
        assert!((simplex_energy(2, 1.0, &k).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        let k = Kernel::power_law(3.3, 2.4).unwrap();
        let z = crate::potentials::zero_radius(3.3, 2.4).unwrap();
        assert!(simplex_energy(1, z, &k).unwrap().abs() < 1e-15);
        assert!(simplex_energy(0, 1.0, &k).is_err());
    }

    #[test]
    fn breakdown_is_consistent() {
        let mu = unit_simplex(3, 1.3).unwrap();
        for k in [
            Kernel::power_law(4.0, 2.0).unwrap(),
            Kernel::rescaled(6.0, 2.5).unwrap(),
            Kernel::log_limit(3.5).unwrap(),
            Kernel::pure_attractive(2.0).unwrap(),
        ] {
            let b = energy_breakdown(&mu, &k);
            assert!(
                (b.total - (b.attractive_part - b.repulsive_part)).abs() < 1e-12,
                "{k:?}"
            );
        }
    }

    #[test]
    fn quartic_form_examples() {
        let s = unit_simplex(3, 1.0).unwrap();
        assert_eq!(quartic_quadratic_form(&s, &s).unwrap(), 0.0);
        for n in 1..=5 {
            let s = unit_simplex(n, 1.0).unwrap();
            let c = cross_polytope(n, (n as f64 / (2 * n + 2) as f64).sqrt()).unwrap();
            assert!(quartic_quadratic_form(&s, &c).unwrap().abs() < 1e-12);
        }
        let off = DiscreteMeasure::point_mass(vec![0.5]).unwrap();
        let s1 = unit_simplex(1, 1.0).unwrap();
        assert!(matches!(quartic_quadratic_form(&off, &s1), Err(Error::NotCentered(_))));
    }

    #[test]
    fn simplex_gradient_vanishes() {
        for n in 1..=5 {
            let mu = unit_simplex(n, 1.0).unwrap();
            for &(a, b) in &[(4.0, 2.0), (7.0, 2.2)] {
                let g = gradient(&mu, &Kernel::power_law(a, b).unwrap());
                assert!(g.iter().flatten().all(|x| x.abs() <= 1e-12));
            }
        }
        let pm = DiscreteMeasure::point_mass(vec![0.3, 0.1]).unwrap();
        assert_eq!(gradient(&pm, &corner_kernel()), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn corner_constants() {
        let c = corner_case_constants(1).unwrap();
        assert!((c.lambda - 0.25).abs() < 1e-16);
        assert!((c.radius - 0.5).abs() < 1e-16);
        assert!((c.min_energy + 1.0 / 16.0).abs() < 1e-16);
        assert!((corner_case_constants(3).unwrap().radius - (3.0f64 / 8.0).sqrt()).abs() < 1e-16);
        for n in 1..=6 {
            let c = corner_case_constants(n).unwrap();
            let e = energy(&unit_simplex(n, 1.0).unwrap(), &corner_kernel());
            assert!((e - c.min_energy).abs() < 1e-14);
            assert!((c.min_energy + n as f64 / (8.0 * (n as f64 + 1.0))).abs() < 1e-15);
        }
    }

    #[test]
    fn min42_verifier() {
        for n in 1..=5 {
            let r = (n as f64 / (2 * n + 2) as f64).sqrt();
            assert!(verify_min42(&unit_simplex(n, 1.0).unwrap(), 1e-9));
            assert!(verify_min42(&cross_polytope(n, r).unwrap(), 1e-9));
            assert!(!verify_min42(&unit_simplex(n, 0.9).unwrap(), 1e-3));
        }
    }
}
