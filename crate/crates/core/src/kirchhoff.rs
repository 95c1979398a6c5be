//! Closed-form reference solutions for `-((1 + alpha u^2) u')' = 0`.
//!
//! With `w = u + alpha u^3 / 3` the equation becomes `w'' = 0`, so `w` is
//! affine in `x`. `u` is recovered from `w` on the strictly increasing
//! cubic.

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// `w(u) = u + alpha u^3 / 3`.
#[inline]
pub fn transform(alpha: f64, u: f64) -> f64 {
    u + alpha * u * u * u / 3.0
}

/// Invert [`transform`] on `[lo, hi]` by bisection.
pub fn invert_transform(alpha: f64, w: f64, mut lo: f64, mut hi: f64) -> f64 {
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    if alpha == 0.0 {
        return w;
    }
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        // bracket exhausted at the rounding level
        if mid <= lo || mid >= hi {
            break;
        }
        if transform(alpha, mid) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse of [`transform`] over all of `R` for `alpha >= 0`.
pub fn recover(alpha: f64, w: f64) -> f64 {
    if alpha == 0.0 || w == 0.0 || !w.is_finite() {
        return w;
    }
    let a = w.abs();
    // Both |w| and (3|w|/alpha)^(1/3) bound the root from above, and the
    // transform is convex on u > 0, so Newton from there decreases
    // monotonically; it stops when rounding ends the decrease.
    let mut u = a.min((3.0 * a / alpha).cbrt());
    for _ in 0..200 {
        let next = u - (transform(alpha, u) - a) / (1.0 + alpha * u * u);
        if !(next < u) {
            break;
        }
        u = next;
    }
    w.signum() * u
}

/// Exact solution at `x` of the homogeneous problem with Dirichlet data.
pub fn kirchhoff_exact(spec: &ProblemSpec, x: f64) -> Result<f64> {
    if !spec.forcing.is_zero() {
        return Err(Error::UnsupportedOracle(format!(
            "Kirchhoff transform needs zero forcing, got {:?}",
            spec.forcing
        )));
    }
    spec.validate()?;
    let (a, b) = (spec.u_left, spec.u_right);
    if a == b {
        return Ok(a);
    }
    let t = (x - spec.x_left) / spec.length();
    let wa = transform(spec.alpha, a);
    let wb = transform(spec.alpha, b);
    let w = wa + t * (wb - wa);
    Ok(invert_transform(spec.alpha, w, a, b))
}

/// The conserved flux `(1 + alpha u^2) u'` of the homogeneous solution.
pub fn kirchhoff_flux(spec: &ProblemSpec) -> Result<f64> {
    if !spec.forcing.is_zero() {
        return Err(Error::UnsupportedOracle("nonzero forcing".into()));
    }
    spec.validate()?;
    Ok((transform(spec.alpha, spec.u_right) - transform(spec.alpha, spec.u_left)) / spec.length())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Forcing;

    #[test]
    fn midpoint_of_standard_problem() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, 0.0, 20.0);
        let u = kirchhoff_exact(&spec, 0.5).unwrap();
        let w_half = (20.0 + 8000.0 / 3.0) / 2.0;
        assert!((transform(1.0, u) - w_half).abs() < 1e-10);
        assert!((u - 15.85).abs() < 5e-3, "{u}");
    }

    #[test]
    fn equal_boundary_values_give_constant() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, 3.25, 3.25);
        for &x in &[0.0, 0.3, 1.0] {
            assert_eq!(kirchhoff_exact(&spec, x).unwrap(), 3.25);
        }
    }

    #[test]
    fn antisymmetric_data_vanish_at_midpoint() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, -5.0, 5.0);
        assert!(kirchhoff_exact(&spec, 0.5).unwrap().abs() < 1e-13);
        let a = kirchhoff_exact(&spec, 0.2).unwrap();
        let b = kirchhoff_exact(&spec, 0.8).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn nonzero_forcing_is_rejected() {
        let spec = ProblemSpec::unit(1.0, Forcing::LinearRamp { c: 100.0 }, 0.0, 1.0);
        assert!(matches!(
            kirchhoff_exact(&spec, 0.5),
            Err(Error::UnsupportedOracle(_))
        ));
    }

    #[test]
    fn flux_is_transform_difference() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, 0.0, 20.0);
        assert!((kirchhoff_flux(&spec).unwrap() - (20.0 + 8000.0 / 3.0)).abs() < 1e-10);
    }
}
