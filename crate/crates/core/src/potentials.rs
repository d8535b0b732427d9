//! Radial pair potentials.
//!
//! Every kernel is a function of the distance `r = |x - y|` only. Four
//! families are supported:
//!
//! ```text
//! PowerLaw(a, b)      w(r)  = r^a / a - r^b / b
//! Rescaled(a, b)      w(r)  = (b r^a - a r^b) / (a - b)      (minimum -1 at r = 1)
//! LogLimit(a)         D(r)  = r^a (a log r - 1)               (Rescaled as b -> a)
//! PureAttractive(a)   w(r)  = r^a / a
//! ```
//!
//! All profiles vanish at `r = 0` (by continuity) whenever the smallest
//! exponent is positive.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `r^p` for `r >= 0`, with the `r = 0` limit taken explicitly.
#[inline]
pub(crate) fn rpow(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        if p > 0.0 {
            0.0
        } else if p == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        r.powf(p)
    }
}

/// Attractive/repulsive exponent pair with `alpha > beta > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    alpha: f64,
    beta: f64,
}

impl Exponents {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return domain(format!("non-finite exponents ({alpha}, {beta})"));
        }
        if !(alpha > beta && beta > 0.0) {
            return domain(format!(
                "exponents must satisfy alpha > beta > 0, got ({alpha}, {beta})"
            ));
        }
        Ok(Exponents { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// A radial pair potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    PowerLaw(Exponents),
    Rescaled(Exponents),
    LogLimit { alpha: f64 },
    PureAttractive { alpha: f64 },
}

impl Kernel {
    pub fn power_law(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Kernel::PowerLaw(Exponents::new(alpha, beta)?))
    }

    pub fn rescaled(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Kernel::Rescaled(Exponents::new(alpha, beta)?))
    }

    pub fn log_limit(alpha: f64) -> Result<Self> {
        let k = Kernel::LogLimit { alpha };
        k.validate()?;
        Ok(k)
    }

    pub fn pure_attractive(alpha: f64) -> Result<Self> {
        let k = Kernel::PureAttractive { alpha };
        k.validate()?;
        Ok(k)
    }

    /// Checks the invariants of the kernel parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::PowerLaw(e) | Kernel::Rescaled(e) => Exponents::new(e.alpha, e.beta).map(|_| ()),
            Kernel::LogLimit { alpha } => {
                if alpha.is_finite() && alpha != 0.0 {
                    Ok(())
                } else {
                    domain(format!("log-limit kernel needs alpha != 0, got {alpha}"))
                }
            }
            Kernel::PureAttractive { alpha } => {
                if alpha.is_finite() && alpha > 0.0 {
                    Ok(())
                } else {
                    domain(format!("pure attractive kernel needs alpha > 0, got {alpha}"))
                }
            }
        }
    }

    /// Smallest exponent appearing in the profile; it governs the behaviour
    /// of `w` and `w'` near `r = 0`.
    pub fn min_exponent(&self) -> f64 {
        match *self {
            Kernel::PowerLaw(e) | Kernel::Rescaled(e) => e.beta,
            Kernel::LogLimit { alpha } | Kernel::PureAttractive { alpha } => alpha,
        }
    }

    /// Radius of the centered ball in which minimizers are sought by default:
    /// `e^{1/beta}` for the two-exponent families, `e^{1/alpha}` for the
    /// log-limit kernel and `1` otherwise.
    pub fn confinement_radius(&self) -> f64 {
        match *self {
            Kernel::PowerLaw(e) | Kernel::Rescaled(e) => (1.0 / e.beta).exp(),
            Kernel::LogLimit { alpha } if alpha > 0.0 => (1.0 / alpha).exp(),
            _ => 1.0,
        }
    }

    /// Radial profile `w(r)`. The kernel is assumed valid and `r >= 0`.
    #[inline]
    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            Kernel::PowerLaw(Exponents { alpha, beta }) => rpow(r, alpha) / alpha - rpow(r, beta) / beta,
            Kernel::Rescaled(Exponents { alpha, beta }) => rescaled_profile(alpha, beta, r),
            Kernel::LogLimit { alpha } => {
                if r == 0.0 {
                    if alpha > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    rpow(r, alpha) * (alpha * r.ln() - 1.0)
                }
            }
            Kernel::PureAttractive { alpha } => rpow(r, alpha) / alpha,
        }
    }

    /// Radial derivative `w'(r)`; at `r = 0` the one-sided limit is returned
    /// (infinite when the smallest exponent is below one).
    #[inline]
    pub fn radial_derivative(&self, r: f64) -> f64 {
        match *self {
            Kernel::PowerLaw(Exponents { alpha, beta }) => rpow(r, alpha - 1.0) - rpow(r, beta - 1.0),
            Kernel::Rescaled(Exponents { alpha, beta }) => {
                alpha * beta * (rpow(r, alpha - 1.0) - rpow(r, beta - 1.0)) / (alpha - beta)
            }
            Kernel::LogLimit { alpha } => {
                if r == 0.0 {
                    if alpha > 1.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    alpha * alpha * rpow(r, alpha - 1.0) * r.ln()
                }
            }
            Kernel::PureAttractive { alpha } => rpow(r, alpha - 1.0),
        }
    }

    /// `w(r + dr) - w(r)` evaluated without cancellation when `dr` is small
    /// relative to `r`. The caller supplies `dr` computed to full relative
    /// accuracy.
    #[inline]
    pub fn radial_delta(&self, r: f64, dr: f64) -> f64 {
        if dr == 0.0 {
            return 0.0;
        }
        if r == 0.0 {
            return self.radial(dr);
        }
        let u = (dr / r).ln_1p();
        // r^p ((r+dr)/r)^p - r^p
        let pow_delta = |p: f64| rpow(r, p) * (p * u).exp_m1();
        match *self {
            Kernel::PowerLaw(Exponents { alpha, beta }) => pow_delta(alpha) / alpha - pow_delta(beta) / beta,
            Kernel::Rescaled(Exponents { alpha, beta }) => {
                (beta * pow_delta(alpha) - alpha * pow_delta(beta)) / (alpha - beta)
            }
            Kernel::LogLimit { alpha } => {
                let r_new = r + dr;
                pow_delta(alpha) * (alpha * r.ln() - 1.0) + alpha * rpow(r_new, alpha) * u
            }
            Kernel::PureAttractive { alpha } => pow_delta(alpha) / alpha,
        }
    }
}

/// `(b r^a - a r^b) / (a - b)` for any `a != b`; symmetric in `(a, b)`.
#[inline]
pub fn rescaled_profile(alpha: f64, beta: f64, r: f64) -> f64 {
    (beta * rpow(r, alpha) - alpha * rpow(r, beta)) / (alpha - beta)
}

/// Checked evaluation of the radial profile.
pub fn eval_radial(kernel: &Kernel, r: f64) -> Result<f64> {
    kernel.validate()?;
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("radius must be finite and nonnegative, got {r}"));
    }
    let w = kernel.radial(r);
    if !w.is_finite() {
        return domain(format!("profile is singular at r = {r}"));
    }
    Ok(w)
}

/// Checked evaluation of the radial derivative. `r = 0` is accepted when the
/// one-sided limit is finite.
pub fn eval_radial_derivative(kernel: &Kernel, r: f64) -> Result<f64> {
    kernel.validate()?;
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("radius must be finite and nonnegative, got {r}"));
    }
    let dw = kernel.radial_derivative(r);
    if !dw.is_finite() {
        return domain(format!("derivative is singular at r = {r}"));
    }
    Ok(dw)
}

/// Positive zero of the rescaled profile: `(alpha/beta)^(1/(alpha-beta))`,
/// and `e^(1/beta)` on the diagonal `alpha = beta`.
pub fn zero_radius(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha.is_finite() && beta.is_finite() && beta > 0.0 && alpha >= beta) {
        return domain(format!("zero radius needs alpha >= beta > 0, got ({alpha}, {beta})"));
    }
    if alpha == beta {
        Ok((1.0 / beta).exp())
    } else {
        Ok(((alpha / beta).ln() / (alpha - beta)).exp())
    }
}

/// Closed form of `alpha * d/dbeta` of the rescaled profile at `r`.
///
/// Equals `alpha^2 r^beta / (alpha-beta)^2 * (s - 1 - log s)` with
/// `s = r^(alpha-beta)`, hence nonnegative with a unique zero at `r = 1`.
pub fn dbeta_rescaled(alpha: f64, beta: f64, r: f64) -> Result<f64> {
    if alpha == beta || alpha == 0.0 || !(r > 0.0) {
        return domain(format!(
            "dbeta_rescaled needs alpha != beta, alpha != 0, r > 0; got ({alpha}, {beta}, {r})"
        ));
    }
    let u = (alpha - beta) * r.ln();
    let gap = u.exp_m1() - u;
    let d = alpha - beta;
    Ok(alpha * alpha * rpow(r, beta) / (d * d) * gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_radius_values() {
        let k = Kernel::power_law(4.0, 2.0).unwrap();
        assert_eq!(eval_radial(&k, 1.0).unwrap(), -0.25);
        for &(a, b) in &[(4.0, 2.0), (3.3, 2.9), (7.0, 0.5)] {
            let k = Kernel::rescaled(a, b).unwrap();
            assert!((eval_radial(&k, 1.0).unwrap() + 1.0).abs() < 1e-15);
        }
        let k = Kernel::log_limit(3.0).unwrap();
        assert_eq!(eval_radial(&k, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn zero_radius_is_a_limit() {
        for k in [
            Kernel::power_law(4.0, 2.0).unwrap(),
            Kernel::rescaled(3.0, 2.5).unwrap(),
            Kernel::log_limit(2.0).unwrap(),
            Kernel::pure_attractive(1.5).unwrap(),
        ] {
            assert_eq!(eval_radial(&k, 0.0).unwrap(), 0.0);
            assert_eq!(eval_radial_derivative(&k, 0.0).unwrap(), 0.0);
        }
        let k = Kernel::log_limit(-1.0).unwrap();
        assert!(eval_radial(&k, 0.0).is_err());
        assert!(eval_radial(&k, 2.0).unwrap().is_finite());
    }

    #[test]
    fn derivative_values() {
        let k = Kernel::power_law(4.0, 2.0).unwrap();
        assert_eq!(eval_radial_derivative(&k, 1.0).unwrap(), 0.0);
        let k = Kernel::log_limit(3.0).unwrap();
        assert_eq!(eval_radial_derivative(&k, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        let cases = [
            (Kernel::power_law(3.5, 2.5).unwrap(), 0.7),
            (Kernel::rescaled(5.0, 2.2).unwrap(), 1.3),
            (Kernel::log_limit(3.5).unwrap(), 0.4),
            (Kernel::pure_attractive(2.7).unwrap(), 1.9),
        ];
        for (k, r) in cases {
            let fd = (k.radial(r + h) - k.radial(r - h)) / (2.0 * h);
            let exact = eval_radial_derivative(&k, r).unwrap();
            assert!(((fd - exact) / exact).abs() <= 1e-6, "{k:?}: {fd} vs {exact}");
        }
    }

    #[test]
    fn singular_derivative_at_origin() {
        let k = Kernel::power_law(2.0, 0.5).unwrap();
        assert!(eval_radial_derivative(&k, 0.0).is_err());
        assert!(eval_radial_derivative(&k, 0.3).is_ok());
    }

    #[test]
    fn invalid_kernels_are_rejected() {
        assert!(Kernel::power_law(2.0, 2.0).is_err());
        assert!(Kernel::power_law(2.0, 3.0).is_err());
        assert!(Kernel::rescaled(1.0, -1.0).is_err());
        assert!(Kernel::log_limit(0.0).is_err());
        assert!(Kernel::pure_attractive(-1.0).is_err());
        let forged = Kernel::PureAttractive { alpha: 0.0 };
        assert!(eval_radial(&forged, 1.0).is_err());
        let k = Kernel::power_law(4.0, 2.0).unwrap();
        assert!(eval_radial(&k, -0.1).is_err());
    }

    #[test]
    fn zero_radius_values() {
        assert!((zero_radius(4.0, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((zero_radius(3.0, 2.0).unwrap() - 1.5).abs() < 1e-15);
        for b in [0.5, 2.0, 3.7] {
            assert_eq!(zero_radius(b, b).unwrap(), (1.0 / b).exp());
        }
        assert!(zero_radius(2.0, 3.0).is_err());
        assert!(zero_radius(2.0, 0.0).is_err());
    }

    #[test]
    fn profiles_vanish_at_zero_radius() {
        for &(a, b) in &[(4.0, 2.0), (3.0, 2.0), (6.0, 2.5), (2.2, 2.1)] {
            let z = zero_radius(a, b).unwrap();
            assert!(Kernel::power_law(a, b).unwrap().radial(z).abs() < 1e-12);
            assert!(Kernel::rescaled(a, b).unwrap().radial(z).abs() < 1e-12);
        }
    }

    #[test]
    fn dbeta_rescaled_values() {
        assert_eq!(dbeta_rescaled(4.0, 2.0, 1.0).unwrap(), 0.0);
        assert!(dbeta_rescaled(4.0, 2.0, 0.5).unwrap() > 0.0);
        assert!(dbeta_rescaled(4.0, 4.0, 0.5).is_err());
        assert!(dbeta_rescaled(4.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn dbeta_rescaled_matches_finite_difference() {
        let (a, b, r) = (3.7, 2.2, 1.3);
        let h = 1e-6;
        let fd = a * (rescaled_profile(a, b + h, r) - rescaled_profile(a, b - h, r)) / (2.0 * h);
        let exact = dbeta_rescaled(a, b, r).unwrap();
        assert!(((fd - exact) / exact).abs() <= 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn radial_delta_agrees_with_direct_difference() {
        let kernels = [
            Kernel::power_law(4.0, 2.0).unwrap(),
            Kernel::rescaled(6.0, 2.5).unwrap(),
            Kernel::log_limit(3.5).unwrap(),
            Kernel::pure_attractive(3.0).unwrap(),
        ];
        for k in kernels {
            for &(r, dr) in &[(0.8, 0.05), (1.2, -0.3), (0.0, 0.4), (0.5, 1e-9)] {
                let direct = k.radial(r + dr) - k.radial(r);
                let delta = k.radial_delta(r, dr);
                assert!((direct - delta).abs() <= 1e-13 + 1e-9 * direct.abs(), "{k:?} {r} {dr}");
            }
        }
    }

    #[test]
    fn kernel_serializes_with_tag() {
        let k = Kernel::power_law(4.0, 2.0).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"kind":"power_law","alpha":4.0,"beta":2.0}"#);
        let back: Kernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
    }
}
