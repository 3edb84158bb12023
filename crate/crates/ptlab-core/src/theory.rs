//! Closed-form deterministic predictions for the relaxation of weakly
//! perturbed dynamics: the golden-rule decay factor, the memory kernel and
//! its Fourier transform, the time-dependent and terminal broadened states,
//! the remainder term, the microcanonical average, and the relaxation
//! formula assembled from them.
//!
//! Everything is evaluated by Lorentzian convolution identities over the
//! eigenvalue differences, an O(rank x N) double sum per time point; nested
//! quadrature appears only in the oracle tests.

use std::sync::OnceLock;

use crate::error::{CoreError, Result};
use crate::models::{EnergyWindow, HermitianMatrix};
use crate::spectra::{Eigensystem, OverlapProfile};

/// pi rho0(E0) and friends; the only inputs the scalar predictions need.
#[derive(Debug, Clone, Copy)]
pub struct RateConstants {
    pub rho0_e0: f64,
    pub alpha: f64,
    pub lambda: f64,
}

pub fn rate_constants(rho0_e0: f64, lambda: f64) -> Result<RateConstants> {
    if rho0_e0 <= 0.0 || lambda <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "rate constants need rho0 > 0 and lambda > 0".into(),
        ));
    }
    Ok(RateConstants {
        rho0_e0,
        alpha: std::f64::consts::PI * rho0_e0,
        lambda,
    })
}

impl RateConstants {
    /// Golden-rule width 2 alpha lambda^2, the Lorentzian scale of the
    /// terminal state and the decay rate of |g|^2.
    pub fn beta(&self) -> f64 {
        2.0 * self.alpha * self.lambda * self.lambda
    }

    /// Half width alpha lambda^2 used by the microcanonical state.
    pub fn eta_mc(&self) -> f64 {
        self.alpha * self.lambda * self.lambda
    }
}

/// Survival amplitude g(t) = exp(-alpha lambda^2 t).
pub fn g_factor(rc: &RateConstants, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(CoreError::InvalidParameter("time must be nonnegative".into()));
    }
    Ok((-rc.alpha * rc.lambda * rc.lambda * t).exp())
}

/// |g(t)|^2 = exp(-2 alpha lambda^2 t).
pub fn g_squared(rc: &RateConstants, t: f64) -> f64 {
    (-rc.beta() * t).exp()
}

/// Lorentzian phi_eta(u) = eta / (u^2 + eta^2).
pub fn lorentzian_phi(eta: f64, u: f64) -> f64 {
    debug_assert!(eta > 0.0);
    eta / (u * u + eta * eta)
}

/// sin(x)/x with a series branch for small argument.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Memory kernel
/// K(u) = phi_b(u)/pi * (b t sinc(tu) - cos(tu) + exp(-b t)), b = 2 alpha lambda^2.
pub fn kernel_k(rc: &RateConstants, t: f64, u: f64) -> f64 {
    let b = rc.beta();
    lorentzian_phi(b, u) / std::f64::consts::PI
        * (b * t * sinc(t * u) - (t * u).cos() + (-b * t).exp())
}

/// Fourier transform of the kernel (convention (2 pi)^{-1/2} int f e^{-ipx}):
/// (2 pi)^{-1/2} (1 - exp(-b (t - |p|))) for |p| <= t and 0 beyond.
pub fn kernel_k_hat(rc: &RateConstants, t: f64, p: f64) -> f64 {
    if p.abs() > t {
        0.0
    } else {
        (1.0 - (-rc.beta() * (t - p.abs())).exp()) / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// Remainder kernel
/// R(u) = pi exp(-b t) phi_b(u) (1 - cos(tu) - b t sinc(tu)).
pub fn remainder_kernel(rc: &RateConstants, t: f64, u: f64) -> f64 {
    let b = rc.beta();
    std::f64::consts::PI
        * (-b * t).exp()
        * lorentzian_phi(b, u)
        * (1.0 - (t * u).cos() - b * t * sinc(t * u))
}

/// Full time-dependent weight
/// Phi(u) = (1 - exp(-b t)) pi phi_b(u) + R(u).
pub fn big_phi(rc: &RateConstants, t: f64, u: f64) -> f64 {
    let b = rc.beta();
    (1.0 - (-b * t).exp()) * std::f64::consts::PI * lorentzian_phi(b, u)
        + remainder_kernel(rc, t, u)
}

/// sup_s (s^2 + 1)(1 - cos s)/s^2, the constant in the pointwise remainder
/// bound |R(u)| <= 2 pi alpha lambda^2 t e^{-bt} (C phi_{1/t}(u) + phi_b(u)).
pub fn remainder_bound_constant() -> f64 {
    static CONST: OnceLock<f64> = OnceLock::new();
    *CONST.get_or_init(|| {
        let f = |s: f64| (s * s + 1.0) * (1.0 - s.cos()) / (s * s);
        let mut best = 0.0f64;
        let mut s = 1e-3;
        while s < 1e3 {
            best = best.max(f(s));
            s += 1e-3;
        }
        // golden-section refine around the best coarse point
        let mut lo = 1e-3f64.max(best_arg(&f, 1e-3, 1e3) - 2e-3);
        let mut hi = lo + 4e-3;
        for _ in 0..60 {
            let m1 = lo + (hi - lo) * 0.382;
            let m2 = lo + (hi - lo) * 0.618;
            if f(m1) > f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best.max(f(0.5 * (lo + hi)))
    })
}

fn best_arg(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mut best = lo;
    let mut best_val = f(lo);
    let mut s = lo;
    while s < hi {
        let v = f(s);
        if v > best_val {
            best_val = v;
            best = s;
        }
        s += 1e-3;
    }
    best
}

/// Pointwise envelope for the remainder kernel.
pub fn remainder_kernel_bound(rc: &RateConstants, t: f64, u: f64) -> f64 {
    let b = rc.beta();
    let c = remainder_bound_constant();
    2.0 * std::f64::consts::PI * rc.alpha * rc.lambda * rc.lambda * t * (-b * t).exp()
        * (c * lorentzian_phi(1.0 / t.max(1e-300), u) + lorentzian_phi(b, u))
}

/// Normalization r = pi sum_{j,k} p_k phi_b(mu_j - mu_k); the Lorentzian
/// convolution closed form of the defining energy integral. Strictly positive.
pub fn normalization_r(profile: &OverlapProfile, rc: &RateConstants) -> f64 {
    let b = rc.beta();
    let mut acc = 0.0;
    for &k in &profile.support {
        let pk = profile.p[k];
        let muk = profile.mu[k];
        let mut inner = 0.0;
        for mj in profile.mu.iter() {
            inner += lorentzian_phi(b, mj - muk);
        }
        acc += pk * inner;
    }
    std::f64::consts::PI * acc
}

/// Expectation in the time-dependent broadened state,
/// (1/r) sum_{j,k} a_j p_k Phi(mu_j - mu_k).
pub fn expect_tilde_p_t(profile: &OverlapProfile, rc: &RateConstants, t: f64) -> f64 {
    let r = normalization_r(profile, rc);
    let mut acc = 0.0;
    for &k in &profile.support {
        let pk = profile.p[k];
        let muk = profile.mu[k];
        let mut inner = 0.0;
        for (j, mj) in profile.mu.iter().enumerate() {
            inner += profile.a[j] * big_phi(rc, t, mj - muk);
        }
        acc += pk * inner;
    }
    acc / r
}

/// Terminal (broadened diagonal ensemble) expectation,
/// sum a_j p_k phi_b(mu_j - mu_k) / sum p_k phi_b(mu_j - mu_k).
pub fn expect_tilde_p(profile: &OverlapProfile, rc: &RateConstants) -> f64 {
    let b = rc.beta();
    let mut num = 0.0;
    let mut den = 0.0;
    for &k in &profile.support {
        let pk = profile.p[k];
        let muk = profile.mu[k];
        let mut num_inner = 0.0;
        let mut den_inner = 0.0;
        for (j, mj) in profile.mu.iter().enumerate() {
            let phi = lorentzian_phi(b, mj - muk);
            num_inner += profile.a[j] * phi;
            den_inner += phi;
        }
        num += pk * num_inner;
        den += pk * den_inner;
    }
    num / den
}

/// Remainder contribution (1/r) sum a_j p_k R(mu_j - mu_k).
pub fn remainder_r_total(profile: &OverlapProfile, rc: &RateConstants, t: f64) -> f64 {
    let r = normalization_r(profile, rc);
    let mut acc = 0.0;
    for &k in &profile.support {
        let pk = profile.p[k];
        let muk = profile.mu[k];
        let mut inner = 0.0;
        for (j, mj) in profile.mu.iter().enumerate() {
            inner += profile.a[j] * remainder_kernel(rc, t, mj - muk);
        }
        acc += pk * inner;
    }
    acc / r
}

/// Microcanonical expectation from a precomputed overlap vector:
/// sum a_j phi_{alpha lambda^2}(E0 - mu_j) / sum phi_{alpha lambda^2}(E0 - mu_j).
pub fn microcanonical_from_overlaps(a: &[f64], mu: &[f64], rc: &RateConstants, e0: f64) -> f64 {
    let eta = rc.eta_mc();
    let mut num = 0.0;
    let mut den = 0.0;
    for (aj, mj) in a.iter().zip(mu.iter()) {
        let phi = lorentzian_phi(eta, e0 - mj);
        num += aj * phi;
        den += phi;
    }
    num / den
}

/// Microcanonical expectation of an observable at reference energy E0; the
/// normalized Lorentzian-broadened trace of A at height alpha lambda^2.
pub fn microcanonical_expectation(
    eig0: &Eigensystem,
    a: &HermitianMatrix,
    rc: &RateConstants,
    e0: f64,
) -> Result<f64> {
    let n = eig0.dim();
    if a.dim() != n {
        return Err(CoreError::DimensionMismatch {
            context: "microcanonical: observable dim != eigensystem dim".into(),
        });
    }
    let mut overlaps = Vec::with_capacity(n);
    if let Some(d) = a.as_diagonal() {
        for j in 0..n {
            let mut acc = 0.0;
            for x in 0..n {
                acc += d[x] * eig0.eigenvectors()[[x, j]].norm_sqr();
            }
            overlaps.push(acc);
        }
    } else {
        for j in 0..n {
            let col: Vec<num_complex::Complex64> = eig0.eigenvectors().column(j).to_vec();
            let av = a.apply(&col);
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (x, y) in col.iter().zip(av.iter()) {
                acc += x.conj() * y;
            }
            overlaps.push(acc.re);
        }
    }
    let mu: Vec<f64> = eig0.eigenvalues().to_vec();
    Ok(microcanonical_from_overlaps(&overlaps, &mu, rc, e0))
}

/// Relaxation right-hand side against a time-resolved unperturbed signal:
/// tilde_p + |g|^2 (unperturbed(t) - tilde_p) per grid point.
pub fn relaxation_rhs_series(
    tilde_p: f64,
    unperturbed: &[f64],
    rc: &RateConstants,
    times: &[f64],
) -> Result<Vec<f64>> {
    if unperturbed.len() != times.len() {
        return Err(CoreError::DimensionMismatch {
            context: "relaxation rhs: series and grid lengths differ".into(),
        });
    }
    Ok(times
        .iter()
        .zip(unperturbed.iter())
        .map(|(t, u)| tilde_p + g_squared(rc, *t) * (u - tilde_p))
        .collect())
}

/// Relaxation right-hand side with a constant pre-relaxation value.
pub fn relaxation_rhs_constant(
    tilde_p: f64,
    pre_value: f64,
    rc: &RateConstants,
    times: &[f64],
) -> Vec<f64> {
    times
        .iter()
        .map(|t| tilde_p + g_squared(rc, *t) * (pre_value - tilde_p))
        .collect()
}

/// Local overlap regularity diagnostics over the doubled window I_{2 Delta}.
#[derive(Debug, Clone, Copy)]
pub struct LorDiagnostic {
    pub a_frak: f64,
    pub max_dev: f64,
    /// sqrt((1/N) sum_{in window} (a_j - mean)^2), the l2-style variant.
    pub l2_dev: f64,
    pub in_window: usize,
}

pub fn lor_diagnostic(profile: &OverlapProfile, window: &EnergyWindow) -> Result<LorDiagnostic> {
    let lo = window.e0 - 2.0 * window.delta;
    let hi = window.e0 + 2.0 * window.delta;
    let idx: Vec<usize> = (0..profile.mu.len())
        .filter(|&j| profile.mu[j] >= lo && profile.mu[j] <= hi)
        .collect();
    if idx.len() < 2 {
        return Err(CoreError::InvalidParameter(format!(
            "LOR diagnostic needs >= 2 eigenvalues in [{lo}, {hi}], found {}",
            idx.len()
        )));
    }
    let mean = idx.iter().map(|&j| profile.a[j]).sum::<f64>() / idx.len() as f64;
    let max_dev = idx
        .iter()
        .map(|&j| (profile.a[j] - mean).abs())
        .fold(0.0f64, f64::max);
    let l2 = (idx
        .iter()
        .map(|&j| (profile.a[j] - mean).powi(2))
        .sum::<f64>()
        / profile.mu.len() as f64)
        .sqrt();
    Ok(LorDiagnostic {
        a_frak: mean,
        max_dev,
        l2_dev: l2,
        in_window: idx.len(),
    })
}

/// |pre-relaxation value - terminal value|; the caller compares against its
/// distinguishability threshold.
pub fn pretherm_gap(a0_pre: f64, a0_tilde: f64) -> f64 {
    (a0_pre - a0_tilde).abs()
}

/// All deterministic predictions on one time grid.
#[derive(Debug, Clone)]
pub struct PredictionBundle {
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub g2: Vec<f64>,
    pub tilde_p_t: Vec<f64>,
    pub tilde_p: f64,
    pub remainder: Vec<f64>,
    pub mc: f64,
    pub relax_rhs: Vec<f64>,
    pub r: f64,
}

pub fn prediction_bundle(
    profile: &OverlapProfile,
    rc: &RateConstants,
    times: &[f64],
    unperturbed: &[f64],
    mc: f64,
) -> Result<PredictionBundle> {
    let tilde_p = expect_tilde_p(profile, rc);
    let relax_rhs = relaxation_rhs_series(tilde_p, unperturbed, rc, times)?;
    let mut g2 = Vec::with_capacity(times.len());
    let mut tilde_p_t = Vec::with_capacity(times.len());
    let mut remainder = Vec::with_capacity(times.len());
    for &t in times {
        g2.push(g_squared(rc, t));
        tilde_p_t.push(expect_tilde_p_t(profile, rc, t));
        remainder.push(remainder_r_total(profile, rc, t));
    }
    Ok(PredictionBundle {
        times: times.to_vec(),
        kinetic: times.iter().map(|t| rc.lambda * rc.lambda * t).collect(),
        g2,
        tilde_p_t,
        tilde_p,
        remainder,
        mc,
        relax_rhs,
        r: normalization_r(profile, rc),
    })
}
