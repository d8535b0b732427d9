//! Bounds on the exponent threshold above which uniform measures on unit
//! simplices minimize the `(alpha, beta)` power-law energy.
//!
//! Three curves are computed for `beta >= 2`:
//!
//! * [`underline_alpha`]: the largest `alpha >= 2` with `f_n(alpha) = f_n(beta)`,
//!   an explicit lower bound obtained from a single test point;
//! * [`alpha_plus`]: the smallest `alpha` at which the simplex satisfies the
//!   Euler-Lagrange condition `spt nu in argmin (W * nu)`, bracketed by
//!   bisection on a numerical global search;
//! * [`alpha_star`]: the largest `alpha` with `e^{alpha/b}/alpha = e^{beta/b}/beta`,
//!   `b` the constant returned by [`beta_star_inf`], an upper bound that is the
//!   same in every dimension `n >= 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{dist, norm, unit_simplex};
use crate::potentials::{zero_radius, Kernel};

/// Dimension regime: the line behaves differently from every `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Line,
    Higher,
}

impl Regime {
    pub fn of(n: usize) -> Regime {
        if n <= 1 {
            Regime::Line
        } else {
            Regime::Higher
        }
    }

    /// `3` on the line, `4` otherwise.
    pub fn four_star(self) -> f64 {
        match self {
            Regime::Line => 3.0,
            Regime::Higher => 4.0,
        }
    }
}

pub fn four_star(n: usize) -> f64 {
    Regime::of(n).four_star()
}

/// `(4* - 2) / log(4*/2)`: `1/log(3/2)` on the line, `2/log 2` otherwise.
pub fn beta_star_inf(regime: Regime) -> f64 {
    let fs = regime.four_star();
    (fs - 2.0) / (fs / 2.0).ln()
}

/// The unimodal family whose level sets give [`underline_alpha`]:
///
/// ```text
/// n = 1:   (1/2 - 2^-t) / t
/// n >= 2:  (n - (2n/(n+1))^(t/2) - n ((n-1)/(n+1))^(t/2)) / t
/// ```
///
/// The `n >= 2` branch is evaluated as `-n expm1(t/2 log1p(-2/(n+1)))` to
/// stay accurate for large `n`.
pub fn f_n(n: usize, t: f64) -> f64 {
    if n <= 1 {
        (0.5 - (-t * std::f64::consts::LN_2).exp()) / t
    } else {
        let nf = n as f64;
        let far = (0.5 * t * (2.0 * nf / (nf + 1.0)).ln()).exp();
        let near = -nf * (0.5 * t * (-2.0 / (nf + 1.0)).ln_1p()).exp_m1();
        (near - far) / t
    }
}

/// Large-dimension limit of [`f_n`], normalized as `1 - e^{t/b}/t` with
/// `b = beta_star_inf(regime)`. Only level sets of this function are used,
/// so the additive constant is immaterial.
pub fn f_inf(t: f64, regime: Regime) -> f64 {
    1.0 - (t / beta_star_inf(regime)).exp() / t
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximizer of a unimodal function on
/// `[lo, hi]`, to within `tol`.
pub fn argmax_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Bracket(format!("invalid interval [{lo}, {hi}] or tol {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x).max(fc).max(fd);
    if f(lo) > fx || f(hi) > fx {
        return Err(Error::Bracket(format!(
            "maximum of [{lo}, {hi}] sits at an endpoint; function not unimodal there"
        )));
    }
    Ok(x)
}

/// A closed interval known to contain a quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn point(x: f64) -> Self {
        Bracket { lo: x, hi: x }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Bisection for a sign change of `g` on `[lo, hi]` with `g(lo) > 0 >= g(hi)`.
fn bisect_decreasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> Bracket {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Bracket { lo, hi }
}

/// Location of the maximum of `f_n` on `(0, inf)`; it lies in `(2, 4*)`.
pub fn underline_beta(n: usize) -> f64 {
    argmax_unimodal(|t| f_n(n, t), 2.0, four_star(n), 1e-10).expect("f_n is unimodal with its maximum inside (2, 4*)")
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold curves need beta >= 2, got {beta}")))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Bracket for the largest `alpha >= 2` with `f_n(alpha) = f_n(beta)`.
pub fn underline_alpha_bracket(n: usize, beta: f64, tol: f64) -> Result<Bracket> {
    check_beta(beta)?;
    check_tol(tol)?;
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let peak = underline_beta(n);
    if beta >= peak {
        return Ok(Bracket::point(beta));
    }
    let level = f_n(n, beta);
    if (f_n(n, peak) - level).abs() < 1e-14 {
        return Ok(Bracket::point(peak));
    }
    let mut hi = four_star(n);
    let mut doublings = 0;
    while f_n(n, hi) >= level {
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Err(Error::NoConvergence("no upper bracket for f_n level set".into()));
        }
    }
    Ok(bisect_decreasing(|a| f_n(n, a) - level, peak, hi, tol))
}

/// `max { alpha >= 2 : f_n(alpha) = f_n(beta) }`, to within `tol`.
pub fn underline_alpha(n: usize, beta: f64, tol: f64) -> Result<f64> {
    underline_alpha_bracket(n, beta, tol).map(|b| b.mid())
}

/// Bracket for the largest solution of `e^{alpha/b}/alpha = e^{beta/b}/beta`.
pub fn alpha_star_bracket(regime: Regime, beta: f64, tol: f64) -> Result<Bracket> {
    check_beta(beta)?;
    check_tol(tol)?;
    let b = beta_star_inf(regime);
    if beta >= b {
        return Ok(Bracket::point(beta));
    }
    // log form: alpha/b - log alpha = beta/b - log beta; the left side is
    // convex with its minimum at alpha = b.
    let level = beta / b - beta.ln();
    let h = |a: f64| level - (a / b - a.ln());
    let mut hi = regime.four_star();
    let mut doublings = 0;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Err(Error::NoConvergence("no upper bracket for alpha_star".into()));
        }
    }
    Ok(bisect_decreasing(h, b, hi, tol))
}

/// Upper bound on the threshold, to within `tol`.
pub fn alpha_star(regime: Regime, beta: f64, tol: f64) -> Result<f64> {
    alpha_star_bracket(regime, beta, tol).map(|b| b.mid())
}

/// The potential `(W * nu)(x)` generated by the uniform measure `nu` on a
/// fixed unit simplex.
#[derive(Clone, Debug)]
pub struct SimplexPotential {
    kernel: Kernel,
    vertices: Vec<Vec<f64>>,
}

impl SimplexPotential {
    pub fn new(n: usize, kernel: Kernel) -> Result<Self> {
        kernel.validate()?;
        let vertices = unit_simplex(n, 1.0)?.points().to_vec();
        Ok(SimplexPotential { kernel, vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let m = self.vertices.len() as f64;
        self.vertices
            .iter()
            .map(|v| self.kernel.radial(dist(x, v)))
            .sum::<f64>()
            / m
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.vertices.len() as f64;
        let mut g = vec![0.0; x.len()];
        for v in &self.vertices {
            let r = dist(x, v);
            if r == 0.0 {
                continue;
            }
            let c = self.kernel.radial_derivative(r) / (r * m);
            for k in 0..x.len() {
                g[k] += c * (x[k] - v[k]);
            }
        }
        g
    }
}

/// `(W * nu)(x)` for `nu` the uniform measure on the unit `n`-simplex.
pub fn el_potential(n: usize, kernel: &Kernel, x: &[f64]) -> Result<f64> {
    if x.len() != n {
        return Err(Error::Domain(format!("point of length {} in dimension {n}", x.len())));
    }
    Ok(SimplexPotential::new(n, *kernel)?.value(x))
}

/// Options for the numerical Euler-Lagrange check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElOptions {
    /// Number of quasi-random descent starts in addition to the fixed probes.
    pub starts: usize,
    pub seed: u64,
    /// A margin above `-el_tol` counts as satisfying the condition.
    pub el_tol: f64,
    /// Target width of the bracket returned by [`alpha_plus_with`].
    pub alpha_tol: f64,
}

impl Default for ElOptions {
    fn default() -> Self {
        ElOptions {
            starts: 64,
            seed: 0,
            el_tol: 1e-7,
            alpha_tol: 1e-3,
        }
    }
}

/// Result of the global search behind [`el_margin`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElSearch {
    /// `min (W * nu) - (W * nu)(x_0)`.
    pub margin: f64,
    pub argmin: Vec<f64>,
    pub min_value: f64,
    pub vertex_value: f64,
    /// Radius of the centered ball that was searched.
    pub radius: f64,
    pub converged_starts: usize,
    pub total_starts: usize,
}

/// Radical-inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `count` points of a randomly shifted Halton sequence that fall inside the
/// centered ball of radius `radius`.
fn halton_ball(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count && i < 1 << 24 {
        let p: Vec<f64> = (0..dim)
            .map(|k| {
                let u = (radical_inverse(i, PRIMES[k % PRIMES.len()]) + shift[k]).fract();
                radius * (2.0 * u - 1.0)
            })
            .collect();
        if norm(&p) <= radius {
            out.push(p);
        }
        i += 1;
    }
    out
}

fn project_ball(x: &mut [f64], radius: f64) {
    let r = norm(x);
    if r > radius {
        x.iter_mut().for_each(|c| *c *= radius / r);
    }
}

/// Projected gradient descent with Armijo backtracking on the ball.
/// Returns the final point, its value and whether a stationary point was
/// reached.
fn descend_in_ball(pot: &SimplexPotential, start: &[f64], radius: f64) -> (Vec<f64>, f64, bool) {
    const MAX_ITERS: usize = 5000;
    let mut x = start.to_vec();
    project_ball(&mut x, radius);
    let mut fx = pot.value(&x);
    let mut h = 1.0;
    for _ in 0..MAX_ITERS {
        let g = pot.gradient(&x);
        let mut unit = x.iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>();
        project_ball(&mut unit, radius);
        let pg = dist(&unit, &x);
        if pg <= 1e-11 {
            return (x, fx, true);
        }
        let mut accepted = false;
        while h > 1e-20 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - h * b).collect();
            project_ball(&mut y, radius);
            let fy = pot.value(&y);
            let decrease: f64 = g
                .iter()
                .zip(y.iter().zip(&x))
                .map(|(gk, (yk, xk))| gk * (yk - xk))
                .sum();
            if fy <= fx + 1e-4 * decrease && fy < fx {
                x = y;
                fx = fy;
                accepted = true;
                h *= 2.0;
                break;
            }
            h *= 0.5;
        }
        if !accepted {
            // Decrease is below rounding; stationary to working precision.
            return (x, fx, pg <= 1e-6);
        }
    }
    (x, fx, false)
}

/// Global minimization of `W_{alpha,beta} * nu` over a centered ball that
/// contains every candidate support point, compared against the value on
/// the simplex itself.
pub fn el_search(n: usize, alpha: f64, beta: f64, starts: usize, seed: u64) -> Result<ElSearch> {
    if !(beta >= 2.0 && alpha > beta) {
        return Err(Error::Domain(format!(
            "el_margin needs alpha > beta >= 2, got ({alpha}, {beta})"
        )));
    }
    let kernel = Kernel::power_law(alpha, beta)?;
    let pot = SimplexPotential::new(n, kernel)?;
    let radius = zero_radius(alpha, beta)?.max((1.0 / beta).exp()) + 0.5;
    let verts = pot.vertices();
    let x0 = verts[0].clone();
    let vertex_value = pot.value(&x0);

    let mut probes: Vec<Vec<f64>> = vec![vec![0.0; n], x0.iter().map(|c| -c).collect()];
    for i in 0..verts.len() {
        for j in 0..i {
            probes.push(verts[i].iter().zip(&verts[j]).map(|(a, b)| 0.5 * (a + b)).collect());
        }
    }
    probes.extend(verts.iter().cloned());
    probes.extend(halton_ball(n, starts, radius, seed));

    let results: Vec<(Vec<f64>, f64, bool)> = probes.iter().map(|p| descend_in_ball(&pot, p, radius)).collect();
    let converged = results.iter().filter(|r| r.2).count();
    if converged == 0 {
        return Err(Error::NoConvergence(format!(
            "none of {} descents reached a stationary point (n={n}, alpha={alpha}, beta={beta})",
            results.len()
        )));
    }
    // Every evaluated point is feasible, so the smallest value found bounds
    // the infimum from above regardless of convergence.
    let mut best = (x0.clone(), vertex_value);
    for (p, (x, fx, _)) in probes.iter().zip(&results) {
        let fp = pot.value(p);
        if fp < best.1 {
            best = (p.clone(), fp);
        }
        if *fx < best.1 {
            best = (x.clone(), *fx);
        }
    }
    Ok(ElSearch {
        margin: best.1 - vertex_value,
        argmin: best.0,
        min_value: best.1,
        vertex_value,
        radius,
        converged_starts: converged,
        total_starts: results.len(),
    })
}

/// `min_x (W * nu)(x) - (W * nu)(x_0)`; negative values certify that the
/// simplex violates the Euler-Lagrange condition.
pub fn el_margin(n: usize, alpha: f64, beta: f64, starts: usize, seed: u64) -> Result<f64> {
    el_search(n, alpha, beta, starts, seed).map(|s| s.margin)
}

/// Bracket for the Euler-Lagrange threshold with default options and the
/// given `alpha` tolerance.
pub fn alpha_plus(n: usize, beta: f64, tol: f64) -> Result<Bracket> {
    alpha_plus_with(
        n,
        beta,
        &ElOptions {
            alpha_tol: tol,
            ..ElOptions::default()
        },
    )
}

/// Bisection on the sign of the Euler-Lagrange margin between the explicit
/// lower bound and the upper bound.
pub fn alpha_plus_with(n: usize, beta: f64, opts: &ElOptions) -> Result<Bracket> {
    check_tol(opts.alpha_tol)?;
    let root_tol = (opts.alpha_tol * 1e-3).min(1e-10);
    let lower = underline_alpha_bracket(n, beta, root_tol)?;
    let upper = alpha_star_bracket(Regime::of(n), beta, root_tol)?;
    let (mut lo, mut hi) = (lower.lo, upper.hi);
    if lo > hi {
        return Err(Error::Invariant(format!(
            "lower bound {lo} exceeds upper bound {hi} at n={n}, beta={beta}"
        )));
    }
    if hi - lo <= opts.alpha_tol {
        // Squeezed: report the hull of both root brackets.
        return Ok(Bracket {
            lo: lo.min(upper.lo),
            hi: hi.max(lower.hi),
        });
    }
    let satisfied = |a: f64| -> Result<bool> { Ok(el_margin(n, a, beta, opts.starts, opts.seed)? >= -opts.el_tol) };
    if !satisfied(hi)? {
        return Err(Error::Invariant(format!(
            "simplex violates the Euler-Lagrange condition at the upper bound alpha={hi} (n={n}, beta={beta})"
        )));
    }
    while hi - lo > opts.alpha_tol {
        let mid = 0.5 * (lo + hi);
        if satisfied(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Bracket { lo, hi })
}

/// The three bounds at one `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    pub beta: f64,
    pub underline_alpha: f64,
    pub alpha_plus: Bracket,
    pub alpha_star: f64,
    pub underline_bracket: Bracket,
    pub alpha_star_bracket: Bracket,
}

impl ThresholdReport {
    /// `underline <= alpha_plus_hi` and `alpha_plus_lo <= alpha_star`, each up
    /// to `slack`, and every value at least `beta`.
    pub fn check_ordering(&self, slack: f64) -> Result<()> {
        let ok = self.underline_alpha <= self.alpha_plus.hi + slack
            && self.alpha_plus.lo <= self.alpha_star + slack
            && self.alpha_plus.lo <= self.alpha_plus.hi
            && [self.underline_alpha, self.alpha_plus.lo, self.alpha_star]
                .iter()
                .all(|v| *v >= self.beta - slack);
        if ok {
            Ok(())
        } else {
            Err(Error::Invariant(format!("threshold ordering violated: {self:?}")))
        }
    }
}

/// Options for [`phase_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Tolerance for the two explicit bounds.
    pub tol: f64,
    pub el: ElOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            tol: 1e-10,
            el: ElOptions::default(),
        }
    }
}

pub fn threshold_report(n: usize, beta: f64, opts: &SweepOptions) -> Result<ThresholdReport> {
    let underline_bracket = underline_alpha_bracket(n, beta, opts.tol)?;
    let alpha_star_bracket = alpha_star_bracket(Regime::of(n), beta, opts.tol)?;
    let alpha_plus = alpha_plus_with(n, beta, &opts.el)?;
    let report = ThresholdReport {
        n,
        beta,
        underline_alpha: underline_bracket.mid(),
        alpha_plus,
        alpha_star: alpha_star_bracket.mid(),
        underline_bracket,
        alpha_star_bracket,
    };
    report.check_ordering(1e-6)?;
    Ok(report)
}

/// One report per grid value, in grid order; the grid is processed in parallel.
pub fn phase_sweep(n: usize, beta_grid: &[f64], opts: &SweepOptions) -> Result<Vec<ThresholdReport>> {
    if let Some(b) = beta_grid.iter().find(|b| !(**b >= 2.0)) {
        return Err(Error::Domain(format!("beta grid value {b} below 2")));
    }
    beta_grid
        .par_iter()
        .map(|&beta| threshold_report(n, beta, opts))
        .collect()
}
