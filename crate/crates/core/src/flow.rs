//! Particle gradient flow for the interaction energy.
//!
//! Particles carry fixed equal masses and move along the mass-normalized
//! negative gradient `v_i = grad_i E / w_i`, which is the explicit Euler
//! discretization of the aggregation dynamics `x_i' = -sum_j w_j grad W(x_i - x_j)`.
//! Step sizes come from a Barzilai-Borwein guess followed by Armijo
//! backtracking, so the energy decreases monotonically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, gradient, simplex_energy};
use crate::error::{Error, Result};
use crate::measures::{norm, Classification, DiscreteMeasure};
use crate::potentials::Kernel;

/// Backtracking line-search parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    /// Trial step of the first iteration.
    pub initial: f64,
    /// Factor applied to a rejected step.
    pub shrink: f64,
    /// Armijo constant `c`: accept when `dE <= -c h sum_i w_i |v_i|^2`.
    pub sufficient_decrease: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n: usize,
    pub particles: usize,
    pub max_steps: usize,
    pub step: StepRule,
    /// Convergence when `max_i |v_i| <= grad_tol`.
    pub grad_tol: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Radius of the ball of random initial positions; `None` selects the
    /// kernel's confinement radius (`e^{1/beta}` for power laws).
    pub init_radius: Option<f64>,
    /// Tolerance handed to [`DiscreteMeasure::classify`].
    pub classify_tol: f64,
}

impl FlowConfig {
    pub fn new(n: usize, particles: usize) -> Self {
        FlowConfig {
            n,
            particles,
            max_steps: 20_000,
            step: StepRule::default(),
            grad_tol: 1e-10,
            seed: 0,
            restarts: 20,
            init_radius: None,
            classify_tol: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        let s = &self.step;
        if !(self.grad_tol > 0.0) {
            return Err(Error::Domain(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(s.initial > 0.0
            && s.shrink > 0.0
            && s.shrink < 1.0
            && s.sufficient_decrease > 0.0
            && s.sufficient_decrease < 1.0)
        {
            return Err(Error::Domain(format!("invalid step rule {s:?}")));
        }
        if !(self.classify_tol > 0.0) {
            return Err(Error::Domain("classify_tol must be positive".into()));
        }
        if let Some(r) = self.init_radius {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Domain(format!("init_radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// Final configuration, translated to zero barycenter.
    #[serde(rename = "final")]
    pub final_measure: DiscreteMeasure,
    /// `energy(final)`, recomputed from scratch.
    pub energy: f64,
    /// Energy after each accepted step, starting with the initial energy.
    pub energy_trace: Vec<f64>,
    pub steps: usize,
    pub classification: Classification,
    pub converged: bool,
    /// `max_i |v_i|` at the final configuration.
    pub max_gradient: f64,
    /// Distance the barycenter moved during the flow (before the final centering).
    pub barycenter_drift: f64,
    /// Index of the restart that produced this result.
    pub restart: usize,
    /// Best energy of every restart (only filled by [`multistart`]).
    pub restart_energies: Vec<f64>,
    pub diagnostics: Option<String>,
}

type Points = Vec<Vec<f64>>;

fn check_kernel(kernel: &Kernel) -> Result<()> {
    kernel.validate()?;
    match kernel {
        Kernel::LogLimit { .. } => Ok(()),
        _ if kernel.min_exponent() > 1.0 => Ok(()),
        _ => Err(Error::Domain(format!(
            "flow needs a kernel with vanishing force at contact, got {kernel:?}"
        ))),
    }
}

/// Mass-normalized gradient `v_i = grad_i E / w_i` and its max norm.
fn velocity(mu: &DiscreteMeasure, kernel: &Kernel) -> (Vec<Vec<f64>>, f64) {
    let mut g = gradient(mu, kernel);
    let mut gmax = 0.0f64;
    for (gi, &w) in g.iter_mut().zip(mu.weights()) {
        if w > 0.0 {
            gi.iter_mut().for_each(|c| *c /= w);
        } else {
            gi.iter_mut().for_each(|c| *c = 0.0);
        }
        gmax = gmax.max(norm(gi));
    }
    (g, gmax)
}

/// `E(x + d) - E(x)` summed pairwise from radial increments, accurate even
/// when the change is far below the rounding level of `E` itself.
fn energy_change(points: &[Vec<f64>], disp: &[Vec<f64>], weights: &[f64], kernel: &Kernel) -> f64 {
    let n = points.len();
    let dim = points.first().map_or(0, |p| p.len());
    let mut total = 0.0;
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..i {
            for k in 0..dim {
                a[k] = points[i][k] - points[j][k];
                b[k] = disp[i][k] - disp[j][k];
            }
            let r = norm(&a);
            let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            let bb: f64 = b.iter().map(|y| y * y).sum();
            let r_new = a.iter().zip(&b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
            let denom = r + r_new;
            if denom == 0.0 {
                continue;
            }
            let dr = (2.0 * ab + bb) / denom;
            row += weights[j] * kernel.radial_delta(r, dr);
        }
        total += weights[i] * row;
    }
    total
}

/// Gradient descent from `init` until the max velocity drops below
/// `config.grad_tol` or `config.max_steps` steps have been taken.
pub fn descend(config: &FlowConfig, kernel: &Kernel, init: &DiscreteMeasure) -> Result<FlowResult> {
    config.validate()?;
    check_kernel(kernel)?;
    let weights = init.weights().to_vec();
    let start_bary = init.barycenter();
    let mut mu = init.clone();
    let mut trace = vec![energy(&mu, kernel)];
    let (mut v, mut gmax) = velocity(&mu, kernel);
    let mut h = config.step.initial;
    // Previous positions and velocities, for the Barzilai-Borwein step.
    let mut prev: Option<(Points, Points)> = None;
    let mut steps = 0;
    let mut converged = gmax <= config.grad_tol;
    let mut diagnostics = None;

    while !converged && steps < config.max_steps {
        if let Some((px, pv)) = &prev {
            // Barzilai-Borwein step in the mass-weighted metric.
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..weights.len() {
                for k in 0..mu.dim() {
                    let s = mu.points()[i][k] - px[i][k];
                    let y = v[i][k] - pv[i][k];
                    ss += weights[i] * s * s;
                    sy += weights[i] * s * y;
                }
            }
            h = if sy > 0.0 && ss > 0.0 { ss / sy } else { 2.0 * h };
            h = h.clamp(1e-12, 1e12);
        }
        let slope: f64 = v
            .iter()
            .zip(&weights)
            .map(|(vi, w)| w * vi.iter().map(|c| c * c).sum::<f64>())
            .sum();
        let mut accepted = None;
        while h > 1e-30 {
            let disp: Vec<Vec<f64>> = v.iter().map(|vi| vi.iter().map(|c| -h * c).collect()).collect();
            let de = energy_change(mu.points(), &disp, &weights, kernel);
            if de <= -config.step.sufficient_decrease * h * slope && de < 0.0 {
                accepted = Some((disp, de));
                break;
            }
            h *= config.step.shrink;
        }
        let Some((disp, de)) = accepted else {
            diagnostics = Some(format!(
                "line search underflow after {steps} steps with max gradient {gmax:e}"
            ));
            break;
        };
        let new_points: Vec<Vec<f64>> = mu
            .points()
            .iter()
            .zip(&disp)
            .map(|(p, d)| p.iter().zip(d).map(|(x, y)| x + y).collect())
            .collect();
        prev = Some((mu.points().to_vec(), v));
        mu = mu.with_points(new_points);
        trace.push(trace.last().copied().unwrap_or(0.0) + de);
        steps += 1;
        let (nv, ng) = velocity(&mu, kernel);
        v = nv;
        gmax = ng;
        converged = gmax <= config.grad_tol;
    }
    if !converged && diagnostics.is_none() {
        diagnostics = Some(format!(
            "step limit {} reached with max gradient {gmax:e}",
            config.max_steps
        ));
    }

    let end_bary = mu.barycenter();
    let drift = norm(&end_bary.iter().zip(&start_bary).map(|(a, b)| a - b).collect::<Vec<_>>());
    let final_measure = mu.center();
    Ok(FlowResult {
        energy: energy(&final_measure, kernel),
        classification: final_measure.classify(config.classify_tol),
        final_measure,
        energy_trace: trace,
        steps,
        converged,
        max_gradient: gmax,
        barycenter_drift: drift,
        restart: 0,
        restart_energies: Vec::new(),
        diagnostics,
    })
}

/// `count` equal-mass particles uniform in the centered ball of `radius`.
fn random_ball(rng: &mut ChaCha8Rng, dim: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut dir: Vec<f64> = Vec::with_capacity(dim + 1);
            while dir.len() < dim {
                // Box-Muller
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                let r = (-2.0 * u1.ln()).sqrt();
                let t = std::f64::consts::TAU * u2;
                dir.push(r * t.cos());
                dir.push(r * t.sin());
            }
            dir.truncate(dim);
            let len = norm(&dir).max(f64::MIN_POSITIVE);
            let scale = radius * rng.gen::<f64>().powf(1.0 / dim as f64) / len;
            dir.iter().map(|c| c * scale).collect()
        })
        .collect()
}

/// Seeded random initial configuration for restart `k`.
pub fn initial_configuration(config: &FlowConfig, kernel: &Kernel, k: usize) -> Result<DiscreteMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(k as u64);
    let radius = config.init_radius.unwrap_or_else(|| kernel.confinement_radius());
    DiscreteMeasure::uniform(config.n, random_ball(&mut rng, config.n, config.particles, radius))
}

/// Runs `config.restarts` independent descents from seeded random
/// initializations and returns the converged run of lowest energy (ties go
/// to the lower restart index).
pub fn multistart(config: &FlowConfig, kernel: &Kernel) -> Result<FlowResult> {
    config.validate()?;
    check_kernel(kernel)?;
    if config.n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if config.particles < config.n + 1 {
        return Err(Error::Domain(format!(
            "need at least {} particles in dimension {}, got {}",
            config.n + 1,
            config.n,
            config.particles
        )));
    }
    if config.restarts == 0 {
        return Err(Error::Domain("restarts must be positive".into()));
    }
    let runs: Vec<Result<FlowResult>> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let init = initial_configuration(config, kernel, k)?;
            let mut r = descend(config, kernel, &init)?;
            r.restart = k;
            Ok(r)
        })
        .collect();
    let mut energies = Vec::with_capacity(runs.len());
    let mut best: Option<FlowResult> = None;
    let mut failures = Vec::new();
    for run in runs {
        match run {
            Ok(r) => {
                energies.push(r.energy);
                if !r.converged {
                    failures.push(format!(
                        "restart {}: {}",
                        r.restart,
                        r.diagnostics.clone().unwrap_or_default()
                    ));
                    continue;
                }
                if best.as_ref().is_none_or(|b| r.energy < b.energy) {
                    best = Some(r);
                }
            }
            Err(e) => {
                energies.push(f64::NAN);
                failures.push(e.to_string());
            }
        }
    }
    match best {
        Some(mut b) => {
            b.restart_energies = energies;
            Ok(b)
        }
        None => Err(Error::NoConvergence(format!(
            "all {} restarts failed: {}",
            config.restarts,
            failures.join("; ")
        ))),
    }
}

/// Outcome of comparing flow minimizers against the unit simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum SimplexVerdict {
    SimplexOptimal {
        best_energy: f64,
        simplex_energy: f64,
    },
    SimplexBeaten {
        gap: f64,
        best_energy: f64,
        simplex_energy: f64,
    },
}

/// Runs [`multistart`] and reports whether any configuration beats the unit
/// simplex by more than `1e-6 |E_simplex|`.
pub fn simplex_optimality_probe(kernel: &Kernel, config: &FlowConfig) -> Result<SimplexVerdict> {
    let simplex = simplex_energy(config.n, 1.0, kernel)?;
    let best = multistart(config, kernel)?.energy;
    let gap = simplex - best;
    if gap > 1e-6 * simplex.abs() {
        Ok(SimplexVerdict::SimplexBeaten {
            gap,
            best_energy: best,
            simplex_energy: simplex,
        })
    } else {
        Ok(SimplexVerdict::SimplexOptimal {
            best_energy: best,
            simplex_energy: simplex,
        })
    }
}
