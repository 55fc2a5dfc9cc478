//! Theoretical spectral bounds `c_T <= lambda(M^-1 A) <= c_R` and their
//! comparison with measured spectra.

use alloc::string::String;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Geneo,
    /// GenEO bounds on the extended-subdomain coarse space, with the
    /// multiplicity of the extended decomposition.
    AnnexGeneo,
    Geneo2,
    /// Reported only: the upper estimate depends on the local operators.
    Geneo2NonRobust,
}

impl BoundMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMethod::Geneo => "geneo",
            BoundMethod::AnnexGeneo => "annex-geneo",
            BoundMethod::Geneo2 => "geneo2",
            BoundMethod::Geneo2NonRobust => "geneo2-nonrobust",
        }
    }

    fn family(&self) -> BoundMethod {
        match self {
            BoundMethod::AnnexGeneo => BoundMethod::Geneo,
            m => *m,
        }
    }
}

/// Constants together with the inputs they were computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub method: BoundMethod,
    pub k0: usize,
    pub k1: usize,
    pub tau: f64,
    pub gamma: Option<f64>,
    pub lambda_min_eet: f64,
    pub lambda_max_eet: f64,
    pub eps_a: f64,
    pub c_t: f64,
    pub c_r: f64,
    /// Whether a measured spectrum outside `[c_T, c_R]` is a failure.
    pub asserted: bool,
}

/// `min_{delta > 0} max(c + alpha delta, d + beta / delta)`; zero
/// arguments are accepted as limits.
pub fn optannexe_min(c: f64, d: f64, alpha: f64, beta: f64) -> Result<f64> {
    if [c, d, alpha, beta].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("optimisation constants must be finite and nonnegative"));
    }
    Ok((d + c + ((d - c) * (d - c) + 4.0 * alpha * beta).sqrt()) / 2.0)
}

fn check_common(k0: usize, k1: usize, tau: f64, lmin: f64, lmax: f64) -> Result<()> {
    if k0 < 1 || k1 < 1 {
        return Err(invalid("k0 and k1 must be at least 1"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau must be positive"));
    }
    if !(lmin > 0.0 && lmin <= lmax && lmax.is_finite()) {
        return Err(invalid("need 0 < lambda_min <= lambda_max for spec(E E~^-1)"));
    }
    Ok(())
}

fn eps_from(lmin: f64, lmax: f64) -> f64 {
    (1.0 - lmin).abs().max((1.0 - lmax).abs())
}

/// Optimised `min_delta max((1 + delta) lmax, (1 + eps^2 (1 + 1/delta)) k)`;
/// `k = k0` for GenEO and `k = k0 gamma` for GenEO-2.
pub fn optimised_upper_constant(k: f64, eps: f64, lmax: f64) -> f64 {
    (k * (1.0 + eps * eps) + lmax
        + ((k * (1.0 + eps * eps) - lmax).powi(2) + 4.0 * lmax * k * eps * eps).sqrt())
        / 2.0
}

/// Bounds of the GenEO preconditioner with inexact coarse solve.
pub fn bounds_geneo(k0: usize, k1: usize, tau: f64, lmin: f64, lmax: f64) -> Result<BoundConstants> {
    check_common(k0, k1, tau, lmin, lmax)?;
    let eps = eps_from(lmin, lmax);
    let (k0f, k1f) = (k0 as f64, k1 as f64);
    let c_r = optimised_upper_constant(k0f, eps, lmax);
    let c_t = lmin / ((1.0 + eps * (k0f * k1f * tau).sqrt()).powi(2) + lmin * k1f * tau);
    Ok(BoundConstants {
        method: BoundMethod::Geneo,
        k0,
        k1,
        tau,
        gamma: None,
        lambda_min_eet: lmin,
        lambda_max_eet: lmax,
        eps_a: eps,
        c_t,
        c_r,
        asserted: true,
    })
}

/// Bounds of the modified GenEO-2 preconditioner with inexact coarse solve.
pub fn bounds_geneo2(
    k0: usize,
    k1: usize,
    tau: f64,
    gamma: f64,
    lmin: f64,
    lmax: f64,
) -> Result<BoundConstants> {
    check_common(k0, k1, tau, lmin, lmax)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gamma must be positive"));
    }
    let eps = eps_from(lmin, lmax);
    let (k0f, k1f) = (k0 as f64, k1 as f64);
    let c_r = optimised_upper_constant(k0f * gamma, eps, lmax);
    // lambda_max(E^-1 E~) = 1 / lambda_min(E E~^-1)
    let c_t = 1.0 / ((1.0 / lmin) * (1.0 + eps * (k0f * k1f * gamma / tau).sqrt()).powi(2) + k1f / tau);
    Ok(BoundConstants {
        method: BoundMethod::Geneo2,
        k0,
        k1,
        tau,
        gamma: Some(gamma),
        lambda_min_eet: lmin,
        lambda_max_eet: lmax,
        eps_a: eps,
        c_t,
        c_r,
        asserted: true,
    })
}

/// Context-only estimate for the unmodified GenEO-2 method:
/// `c_R = min_delta max(1 + delta, k0 gamma + (1 + 1/delta) eps^2 k0 L^2)`
/// with `L` the largest eigenvalue of the local operators
/// `B_i^-1 D_i R_i A R_i^T D_i`; `c_T` is that of the modified method.
pub fn bounds_geneo2_nonrobust(
    k0: usize,
    k1: usize,
    tau: f64,
    gamma: f64,
    lmin: f64,
    lmax: f64,
    local_max: f64,
) -> Result<BoundConstants> {
    let mut b = bounds_geneo2(k0, k1, tau, gamma, lmin, lmax)?;
    if !(local_max >= 0.0 && local_max.is_finite()) {
        return Err(invalid("local eigenvalue bound must be finite and nonnegative"));
    }
    let k0f = k0 as f64;
    let t = b.eps_a * b.eps_a * k0f * local_max * local_max;
    b.c_r = optannexe_min(1.0, k0f * gamma + t, 1.0, t)?;
    b.method = BoundMethod::Geneo2NonRobust;
    b.asserted = false;
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBoundReport {
    pub method: BoundMethod,
    pub strategy: String,
    pub constants: BoundConstants,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub condition_bound: f64,
    /// `1e-8 * max(1, c_R)`.
    pub tolerance: f64,
    /// `lambda_min - c_T` and `c_R - lambda_max`; negative means violated.
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub lower_pass: bool,
    pub upper_pass: bool,
    pub condition_pass: bool,
    pub pass: bool,
}

impl SpectralBoundReport {
    /// A failure only counts for asserted constants.
    pub fn failed(&self) -> bool {
        self.constants.asserted && !self.pass
    }
}

/// Compares a measured ascending spectrum of `M^-1 A` with the constants.
pub fn check_bounds(
    method: BoundMethod,
    strategy: &str,
    constants: &BoundConstants,
    spectrum: &[f64],
) -> Result<SpectralBoundReport> {
    if method.family() != constants.method.family() {
        return Err(Error::MethodMismatch {
            method: method.as_str(),
            constants: constants.method.as_str(),
        });
    }
    let (Some(&lo), Some(&hi)) = (spectrum.first(), spectrum.last()) else {
        return Err(invalid("empty spectrum"));
    };
    let tol = 1e-8 * constants.c_r.max(1.0);
    let lower_pass = constants.c_t - tol <= lo;
    let upper_pass = hi <= constants.c_r + tol;
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let condition_bound = constants.c_r / constants.c_t;
    let condition_pass = condition <= condition_bound * (1.0 + 1e-8);
    let mut constants = *constants;
    constants.method = method;
    Ok(SpectralBoundReport {
        method,
        strategy: strategy.into(),
        constants,
        lambda_min: lo,
        lambda_max: hi,
        condition,
        condition_bound,
        tolerance: tol,
        lower_margin: lo - constants.c_t,
        upper_margin: constants.c_r - hi,
        lower_pass,
        upper_pass,
        condition_pass,
        pass: lower_pass && upper_pass && condition_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    /// Minimises `f` over log-spaced `delta` in `[1e-4, 1e4]`, then refines
    /// around the best point by golden section.
    fn grid_min(f: impl Fn(f64) -> f64) -> f64 {
        let pts: Vec<f64> = (0..=4000).map(|k| 10f64.powf(-4.0 + 8.0 * k as f64 / 4000.0)).collect();
        let best = (0..pts.len()).min_by(|&a, &b| f(pts[a]).total_cmp(&f(pts[b]))).unwrap();
        let (mut a, mut b) = (pts[best.saturating_sub(1)], pts[(best + 1).min(pts.len() - 1)]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (x1, x2) = (b - g * (b - a), a + g * (b - a));
            if f(x1) < f(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        f(0.5 * (a + b))
    }

    #[test]
    fn optannexe_examples() {
        assert_eq!(optannexe_min(0.0, 0.0, 1.0, 1.0).unwrap(), 1.0);
        let v = optannexe_min(1.0, 2.0, 1.0, 1.0).unwrap();
        assert!((v - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        let g = grid_min(|d| (1.0 + d).max(2.0 + 1.0 / d));
        assert!((v - g).abs() / v < 1e-6);
        assert_eq!(optannexe_min(1.5, 4.0, 0.0, 3.0).unwrap(), 4.0);
        assert!(optannexe_min(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn geneo_exact_and_perturbed() {
        let b = bounds_geneo(3, 2, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(b.c_r, 3.0);
        assert!((b.c_t - 1.0 / 1.2).abs() < 1e-15);
        // k0 = 3, eps = 0.5, lambda_max = 2
        let expected = (3.75 + 2.0 + (3.0625f64 + 6.0).sqrt()) / 2.0;
        assert!((optimised_upper_constant(3.0, 0.5, 2.0) - expected).abs() < 1e-12);
        let g = grid_min(|d| ((1.0 + d) * 2.0).max((1.0 + 0.25 * (1.0 + 1.0 / d)) * 3.0));
        assert!((expected - g).abs() / g < 1e-6);
        // spec(E E~^-1) in [0.5, 2] gives eps = 1
        let b = bounds_geneo(3, 2, 0.1, 0.5, 2.0).unwrap();
        assert_eq!(b.eps_a, 1.0);
        let g = grid_min(|d| ((1.0 + d) * 2.0).max((1.0 + (1.0 + 1.0 / d)) * 3.0));
        assert!((b.c_r - g).abs() / g < 1e-6);
        assert!((b.c_r - optannexe_min(2.0, 6.0, 2.0, 3.0).unwrap()).abs() < 1e-12);
        let cts: Vec<f64> = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0]
            .iter()
            .map(|&t| bounds_geneo(3, 2, t, 0.5, 2.0).unwrap().c_t)
            .collect();
        assert!(cts.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn geneo2_exact_and_perturbed() {
        let b = bounds_geneo2(3, 2, 2.0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(b.c_r, 1.5);
        assert!((b.c_t - 1.0 / 2.0).abs() < 1e-15);
        let b = bounds_geneo2(3, 2, 2.0, 0.5, 0.5, 2.0).unwrap();
        let g = grid_min(|d| ((1.0 + d) * 2.0).max(1.5 * (1.0 + (1.0 + 1.0 / d))));
        assert!((b.c_r - g).abs() / g < 1e-6);
        let ct = 1.0 / (2.0 * (1.0 + 1.5f64.sqrt()).powi(2) + 1.0);
        assert!((b.c_t - ct).abs() < 1e-14);
        let small = bounds_geneo2(3, 2, 2.0, 1e-9, 1.0, 1.0).unwrap();
        assert!((small.c_r - 1.0).abs() < 1e-8);
        assert!(bounds_geneo2(3, 2, 2.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn report_flags_and_mismatch() {
        let b = bounds_geneo(3, 2, 0.1, 1.0, 1.0).unwrap();
        let r = check_bounds(BoundMethod::Geneo, "exact", &b, &[0.9, 2.5]).unwrap();
        assert!(r.pass && r.lower_margin > 0.0 && r.upper_margin > 0.0);
        let r = check_bounds(BoundMethod::AnnexGeneo, "exact", &b, &[0.5, 2.5]).unwrap();
        assert!(!r.pass && r.lower_margin < 0.0);
        let r = check_bounds(BoundMethod::Geneo, "exact", &b, &[0.9, 3.0 + 1e-9]).unwrap();
        assert!(r.upper_pass);
        assert!(matches!(
            check_bounds(BoundMethod::Geneo2, "exact", &b, &[1.0]),
            Err(Error::MethodMismatch { .. })
        ));
        let nr = bounds_geneo2_nonrobust(3, 2, 2.0, 0.5, 0.5, 2.0, 40.0).unwrap();
        assert!(!nr.asserted);
        let r = check_bounds(BoundMethod::Geneo2NonRobust, "sp", &nr, &[1e-3, 1e9]).unwrap();
        assert!(!r.pass && !r.failed());
    }
}
