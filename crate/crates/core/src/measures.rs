//! Discrete probability measures on `R^n` and the geometric quantities built
//! from them: barycenters, second moment tensors, distance push-forwards and
//! the classification of numerically obtained configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const PUSHFORWARD_MERGE_TOL: f64 = 1e-9;

/// A finitely supported probability measure `sum_i w_i delta_{x_i}`.
///
/// Serialized as `{"dim": n, "points": [[..], ..], "weights": [..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.dim, raw.points, raw.weights)
    }
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::InvalidMeasure(format!(
                "point of length {} in dimension {dim}",
                p.len()
            )));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { dim, points, weights })
    }

    /// Equal weights `1/N` on the given points.
    pub fn uniform(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len().max(1);
        let weights = vec![1.0 / n as f64; points.len()];
        Self::new(dim, points, weights)
    }

    pub fn point_mass(at: Vec<f64>) -> Result<Self> {
        let dim = at.len();
        Self::new(dim, vec![at], vec![1.0])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the support points, keeping the weights. Used by the
    /// particle flow, which moves positions at fixed mass.
    pub(crate) fn with_points(&self, points: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(points.len(), self.weights.len());
        DiscreteMeasure {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
        }
    }

    /// The convex combination `t * self + (1 - t) * other`, supported on the
    /// union of both supports.
    pub fn mix(&self, other: &DiscreteMeasure, t: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidMeasure("mixing measures of different dimension".into()));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("mixing parameter {t} outside [0, 1]")));
        }
        let points = self.points.iter().chain(&other.points).cloned().collect();
        let weights = self
            .weights
            .iter()
            .map(|w| t * w)
            .chain(other.weights.iter().map(|w| (1.0 - t) * w))
            .collect();
        Self::new(self.dim, points, weights)
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for (bk, pk) in b.iter_mut().zip(p) {
                *bk += w * pk;
            }
        }
        b
    }

    /// Translates the measure so that its barycenter is the origin.
    pub fn center(&self) -> Self {
        let b = self.barycenter();
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(&b).map(|(x, c)| x - c).collect())
            .collect();
        self.with_points(points)
    }

    /// Applies `x -> A x + t` to every support point (`A` row-major, `dim x dim`).
    pub fn affine_image(&self, matrix: &[f64], shift: &[f64]) -> Self {
        let n = self.dim;
        assert_eq!(matrix.len(), n * n);
        assert_eq!(shift.len(), n);
        let points = self
            .points
            .iter()
            .map(|p| {
                (0..n)
                    .map(|i| shift[i] + (0..n).map(|j| matrix[i * n + j] * p[j]).sum::<f64>())
                    .collect()
            })
            .collect();
        self.with_points(points)
    }

    /// Second moment tensor `I(mu) = sum_i w_i x_i (x) x_i`.
    pub fn second_moment(&self) -> MomentTensor {
        let n = self.dim;
        let mut entries = vec![0.0; n * n];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for i in 0..n {
                let wp = w * p[i];
                for j in i..n {
                    entries[i * n + j] += wp * p[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                entries[i * n + j] = entries[j * n + i];
            }
        }
        MomentTensor { dim: n, entries }
    }

    /// Weighted moment `sum_i w_i |x_i|^p`.
    pub fn radial_moment(&self, p: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * norm(x).powf(p))
            .sum()
    }

    /// Push-forward of `mu (x) mu` under `(x, y) -> |x - y|`, with atoms
    /// closer than `1e-9` merged.
    pub fn distance_pushforward(&self) -> RadialMeasure {
        let n = self.len();
        let mut atoms = Vec::with_capacity(n * n);
        for i in 0..n {
            atoms.push((0.0, self.weights[i] * self.weights[i]));
            for j in 0..i {
                let r = dist(&self.points[i], &self.points[j]);
                atoms.push((r, 2.0 * self.weights[i] * self.weights[j]));
            }
        }
        RadialMeasure::merged(atoms, PUSHFORWARD_MERGE_TOL)
    }

    /// Groups support points by single linkage at threshold `tol`
    /// (points of zero weight are ignored). Each cluster is returned as
    /// `(mass, weighted centroid)`.
    pub fn clusters(&self, tol: f64) -> Vec<(f64, Vec<f64>)> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect();
        let mut parent: Vec<usize> = (0..idx.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for a in 0..idx.len() {
            for b in 0..a {
                if dist(&self.points[idx[a]], &self.points[idx[b]]) <= tol {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for (a, &i) in idx.iter().enumerate() {
            let r = find(&mut parent, a);
            let slot = match roots.iter().position(|&x| x == r) {
                Some(s) => s,
                None => {
                    roots.push(r);
                    out.push((0.0, vec![0.0; self.dim]));
                    out.len() - 1
                }
            };
            let w = self.weights[i];
            out[slot].0 += w;
            for (c, x) in out[slot].1.iter_mut().zip(&self.points[i]) {
                *c += w * x;
            }
        }
        for (m, c) in &mut out {
            for ck in c.iter_mut() {
                *ck /= *m;
            }
        }
        out
    }

    /// Classifies the configuration as a unit simplex measure, a measure on a
    /// centered sphere with isotropic second moment, or neither.
    pub fn classify(&self, tol: f64) -> Classification {
        let n = self.dim;
        let clusters = self.clusters(tol);
        if clusters.len() == n + 1 {
            let target = 1.0 / (n + 1) as f64;
            let masses_ok = clusters.iter().all(|(m, _)| (m - target).abs() <= tol);
            let dists_ok = clusters
                .iter()
                .enumerate()
                .all(|(i, (_, ci))| clusters[..i].iter().all(|(_, cj)| (dist(ci, cj) - 1.0).abs() <= tol));
            if masses_ok && dists_ok {
                return Classification::UnitSimplex;
            }
        }
        let centered = self.center();
        let radii: Vec<f64> = centered
            .points
            .iter()
            .zip(&centered.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, _)| norm(p))
            .collect();
        let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let r = 0.5 * (lo + hi);
        if hi - r <= tol && r - lo <= tol {
            let iso = MomentTensor::scaled_identity(n, r * r / n as f64);
            if centered.second_moment().max_abs_diff(&iso) <= tol {
                return Classification::SphereMoment { radius: r };
            }
        }
        Classification::Other
    }
}

/// Outcome of [`DiscreteMeasure::classify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label")]
pub enum Classification {
    UnitSimplex,
    SphereMoment { radius: f64 },
    Other,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::UnitSimplex => "UnitSimplex",
            Classification::SphereMoment { .. } => "SphereMoment",
            Classification::Other => "Other",
        }
    }
}

/// Symmetric `n x n` matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTensor {
    dim: usize,
    entries: Vec<f64>,
}

impl MomentTensor {
    pub fn zeros(dim: usize) -> Self {
        MomentTensor {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = s;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(M^2)`, i.e. the squared Frobenius norm of a symmetric matrix.
    pub fn trace_of_square(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum()
    }

    pub fn sub(&self, other: &MomentTensor) -> MomentTensor {
        assert_eq!(self.dim, other.dim);
        MomentTensor {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    /// Max-norm distance `max_ij |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &MomentTensor) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A probability measure on `[0, inf)`, stored as sorted `(radius, mass)` atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    atoms: Vec<(f64, f64)>,
}

impl RadialMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(r, m)| !(r >= 0.0) || !(m >= 0.0)) {
            return Err(Error::InvalidMeasure("radii and masses must be nonnegative".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(RadialMeasure { atoms })
    }

    /// Sorts atoms and merges runs whose radii stay within `tol` of the
    /// first radius of the run; merged radii are mass-weighted means.
    fn merged(mut atoms: Vec<(f64, f64)>, tol: f64) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut run_start = f64::NEG_INFINITY;
        for (r, m) in atoms {
            match out.last_mut() {
                Some(last) if r - run_start <= tol => {
                    let total = last.1 + m;
                    if total > 0.0 {
                        last.0 = (last.0 * last.1 + r * m) / total;
                    }
                    last.1 = total;
                }
                _ => {
                    run_start = r;
                    out.push((r, m));
                }
            }
        }
        // The zero atom stays exactly at zero.
        if let Some(first) = out.first_mut() {
            if first.0 <= tol {
                first.0 = 0.0;
            }
        }
        RadialMeasure { atoms: out }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass carried by atoms within `tol` of `r`.
    pub fn mass_near(&self, r: f64, tol: f64) -> f64 {
        self.atoms.iter().filter(|a| (a.0 - r).abs() <= tol).map(|a| a.1).sum()
    }

    /// Largest radius carrying positive mass.
    pub fn max_radius(&self) -> f64 {
        self.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).fold(0.0, f64::max)
    }

    /// `sum_k m_k w(r_k)` for a radial profile `w`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(r, m)| m * f(r)).sum()
    }
}

/// Uniform measure on the vertices of a centered regular `n`-simplex of
/// side length `d`.
///
/// The vertices are `d/sqrt 2 (e_i - c)` in `R^{n+1}`, `c` the centroid of the
/// standard basis, expressed in the orthonormal basis of the hyperplane
/// `{sum x = 0}` obtained by Gram-Schmidt on `e_1 - e_2, ..., e_n - e_{n+1}`.
pub fn unit_simplex(n: usize, d: f64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::Domain("simplex dimension must be positive".into()));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("simplex diameter must be positive, got {d}")));
    }
    let m = n + 1;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = vec![0.0; m];
        v[k] = 1.0;
        v[k + 1] = -1.0;
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
        basis.push(v);
    }
    let scale = d / std::f64::consts::SQRT_2;
    let c = 1.0 / m as f64;
    let points = (0..m)
        .map(|i| {
            let mut v = vec![-c * scale; m];
            v[i] += scale;
            basis.iter().map(|b| dot(&v, b)).collect()
        })
        .collect();
    DiscreteMeasure::uniform(n, points)
}

/// Equal masses `1/(2n)` at `+-r e_i`.
pub fn cross_polytope(n: usize, r: f64) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::Domain("cross-polytope dimension must be positive".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "cross-polytope radius must be positive, got {r}"
        )));
    }
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [r, -r] {
            let mut p = vec![0.0; n];
            p[i] = s;
            points.push(p);
        }
    }
    DiscreteMeasure::uniform(n, points)
}

/// Discrete approximation of the uniform probability on the centered sphere
/// of radius `r` in `R^n`, `n <= 3`.
///
/// * `n = 1`: the two points `+-r` (`k` is ignored).
/// * `n = 2`: `k` equally spaced points on the circle; the second moment is
///   exactly `r^2/2 Id`.
/// * `n = 3`: a Fibonacci spiral of `ceil(k/4)` points, each with its images
///   under quarter turns about the z axis. The z nodes are midpoints rescaled
///   to mean square `1/3`, so the measure is centered and its second moment is
///   `r^2/3 Id` up to rounding.
pub fn sphere_quadrature(n: usize, r: f64, k: usize) -> Result<DiscreteMeasure> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("sphere radius must be positive, got {r}")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if k < 2 * n + 2 {
        return Err(Error::Domain(format!("quadrature needs at least {} points", 2 * n + 2)));
    }
    let points: Vec<Vec<f64>> = match n {
        1 => vec![vec![r], vec![-r]],
        2 => (0..k)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect(),
        _ => {
            let m = k.div_ceil(4);
            let mf = m as f64;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            // Midpoint nodes in z, stretched so that their mean square is 1/3.
            let stretch = 1.0 / (1.0 - 1.0 / (mf * mf)).sqrt();
            let mut pts = Vec::with_capacity(4 * m);
            for i in 0..m {
                let z = stretch * (1.0 - (2 * i + 1) as f64 / mf);
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                let (x, y) = (rho * phi.cos(), rho * phi.sin());
                // Orbit under quarter turns about the z axis.
                for (a, b) in [(x, y), (-y, x), (-x, -y), (y, -x)] {
                    pts.push(vec![r * a, r * b, r * z]);
                }
            }
            pts
        }
    };
    DiscreteMeasure::uniform(n, points)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
