//! Empirical verification of the isotropic two-resolvent global law, the
//! averaged single-resolvent law, and the spectrum-inclusion bound, with
//! N-scaling fits of the residuals.

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::mde::{det_two_resolvent_form, solve_mde, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::models::{
    assemble_deformed, realization_rng, sample_wigner_stream, HermitianMatrix, WignerSpec,
};
use crate::spectra::{eigendecompose, Eigensystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualKind {
    TwoResolvent,
    SingleResolvent,
}

/// One measured deviation between a random resolvent quantity and its
/// deterministic approximation.
#[derive(Debug, Clone, Copy)]
pub struct ResidualSample {
    pub n: usize,
    pub seed: u64,
    pub z1: C64,
    pub z2: C64,
    pub residual: f64,
    pub kind: ResidualKind,
}

fn resolvent_apply(eig: &Eigensystem, z: C64, x: &[C64]) -> Vec<C64> {
    let coeffs = linalg::mat_vec_adjoint(eig.eigenvectors(), x);
    let scaled: Vec<C64> = coeffs
        .iter()
        .zip(eig.eigenvalues().iter())
        .map(|(c, mu)| c / (C64::new(*mu, 0.0) - z))
        .collect();
    linalg::mat_vec(eig.eigenvectors(), &scaled)
}

/// Residuals |<x, G(z1) B G(z2) y> - deterministic form| per seed. The
/// deterministic value is computed once from the unperturbed eigensystem;
/// per-seed resolvents reuse one diagonalization of H0 + lambda W.
#[allow(clippy::too_many_arguments)]
pub fn two_resolvent_residuals(
    h0: &HermitianMatrix,
    eig0: &Eigensystem,
    lambda: f64,
    z1: C64,
    z2: C64,
    b: &HermitianMatrix,
    x: &[C64],
    y: &[C64],
    wigner: &WignerSpec,
    seeds: &[u64],
) -> Result<Vec<ResidualSample>> {
    if z1.im == 0.0 || z2.im == 0.0 {
        return Err(CoreError::RealSpectralParameter);
    }
    let norm_x: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let norm_y: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if (norm_x - 1.0).abs() > 1e-10 || (norm_y - 1.0).abs() > 1e-10 {
        return Err(CoreError::InvalidParameter(
            "probe vectors must be normalized".into(),
        ));
    }
    let det = det_two_resolvent_form(eig0, z1, z2, lambda, b, x, y)?;
    let n = h0.dim();
    seeds
        .par_iter()
        .map(|&seed| {
            let w = sample_wigner_stream(wigner, seed);
            let h = assemble_deformed(h0, lambda, &w)?;
            let eig = eigendecompose(&h)
                .map_err(|e| CoreError::Other(format!("seed {seed}: {e}")))?;
            // iso = (G(z1)^dag x)^dag B (G(z2) y); the adjoint resolvent is the
            // resolvent at the conjugate point
            let g1dx = resolvent_apply(&eig, z1.conj(), x);
            let g2y = resolvent_apply(&eig, z2, y);
            let bg2y = b.apply(&g2y);
            let mut iso = C64::new(0.0, 0.0);
            for i in 0..n {
                iso += g1dx[i].conj() * bg2y[i];
            }
            Ok(ResidualSample {
                n,
                seed,
                z1,
                z2,
                residual: (iso - det.value_xy).norm(),
                kind: ResidualKind::TwoResolvent,
            })
        })
        .collect()
}

/// Residuals |<(G(z) - M(z)) B>| per seed (normalized traces).
pub fn single_resolvent_residuals(
    h0: &HermitianMatrix,
    eig0: &Eigensystem,
    lambda: f64,
    z: C64,
    b: &HermitianMatrix,
    wigner: &WignerSpec,
    seeds: &[u64],
) -> Result<Vec<ResidualSample>> {
    if z.im == 0.0 {
        return Err(CoreError::RealSpectralParameter);
    }
    let n = h0.dim();
    let sol = solve_mde(eig0, z, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let mdiag = sol.diagonal(eig0);
    let b_in_0 = diag_overlaps(eig0, b);
    let trace_mb: C64 = (0..n)
        .map(|j| mdiag[j] * C64::new(b_in_0[j], 0.0))
        .sum::<C64>()
        / C64::new(n as f64, 0.0);
    seeds
        .par_iter()
        .map(|&seed| {
            let w = sample_wigner_stream(wigner, seed);
            let h = assemble_deformed(h0, lambda, &w)?;
            let eig = eigendecompose(&h)
                .map_err(|e| CoreError::Other(format!("seed {seed}: {e}")))?;
            let b_in_l = diag_overlaps(&eig, b);
            let mut trace_gb = C64::new(0.0, 0.0);
            for j in 0..n {
                trace_gb +=
                    C64::new(b_in_l[j], 0.0) / (C64::new(eig.eigenvalues()[j], 0.0) - z);
            }
            trace_gb /= C64::new(n as f64, 0.0);
            Ok(ResidualSample {
                n,
                seed,
                z1: z,
                z2: z,
                residual: (trace_gb - trace_mb).norm(),
                kind: ResidualKind::SingleResolvent,
            })
        })
        .collect()
}

fn diag_overlaps(eig: &Eigensystem, b: &HermitianMatrix) -> Vec<f64> {
    let n = eig.dim();
    if let Some(d) = b.as_diagonal() {
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for x in 0..n {
                    acc += d[x] * eig.eigenvectors()[[x, j]].norm_sqr();
                }
                acc
            })
            .collect()
    } else {
        (0..n)
            .map(|j| {
                let col: Vec<C64> = eig.eigenvectors().column(j).to_vec();
                let bv = b.apply(&col);
                let mut acc = C64::new(0.0, 0.0);
                for (u, v) in col.iter().zip(bv.iter()) {
                    acc += u.conj() * v;
                }
                acc.re
            })
            .collect()
    }
}

/// Log-log least-squares fit of median residual against N, with a bootstrap
/// confidence interval over seed resampling.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub medians: Vec<(usize, f64)>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

pub fn scaling_exponent_fit(samples: &[ResidualSample]) -> Result<SlopeFit> {
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for s in samples {
        by_n.entry(s.n).or_default().push(s.residual);
    }
    if by_n.len() < 3 {
        return Err(CoreError::InvalidParameter(format!(
            "scaling fit needs >= 3 distinct N, got {}",
            by_n.len()
        )));
    }
    if by_n.values().any(|v| v.len() < 20) {
        return Err(CoreError::InvalidParameter(
            "scaling fit needs >= 20 seeds per N".into(),
        ));
    }
    let medians: Vec<(usize, f64)> = by_n
        .iter()
        .map(|(n, v)| (*n, median(&mut v.clone())))
        .collect();
    let points: Vec<(f64, f64)> = medians
        .iter()
        .map(|(n, m)| ((*n as f64).ln(), m.max(1e-300).ln()))
        .collect();
    let slope = lsq_slope(&points);

    // bootstrap over seeds within each N group
    let mut rng = realization_rng(0xB001_57AB, 0);
    let mut boot = Vec::with_capacity(200);
    for _ in 0..200 {
        let mut pts = Vec::with_capacity(by_n.len());
        for (n, v) in &by_n {
            let mut res: Vec<f64> = (0..v.len()).map(|_| v[rng.gen_range(0..v.len())]).collect();
            pts.push(((*n as f64).ln(), median(&mut res).max(1e-300).ln()));
        }
        boot.push(lsq_slope(&pts));
    }
    boot.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_lo = boot[(0.025 * boot.len() as f64) as usize];
    let ci_hi = boot[(0.975 * boot.len() as f64) as usize - 1];
    Ok(SlopeFit {
        slope,
        ci_lo,
        ci_hi,
        medians,
    })
}

/// Checks that every perturbed eigenvalue lies within (2 + eps) lambda of the
/// unperturbed spectrum.
#[derive(Debug, Clone, Copy)]
pub struct InclusionReport {
    pub pass: bool,
    pub max_excursion: f64,
    pub max_excursion_over_lambda: f64,
}

pub fn spectrum_inclusion_check(
    eig_lambda: &Eigensystem,
    eig0: &Eigensystem,
    lambda: f64,
    epsilon: f64,
) -> InclusionReport {
    let mu0 = eig0.eigenvalues();
    let mut max_excursion = 0.0f64;
    let mut idx = 0usize;
    for e in eig_lambda.eigenvalues().iter() {
        // both spectra sorted: advance a pointer for the nearest level
        while idx + 1 < mu0.len() && (mu0[idx + 1] - e).abs() <= (mu0[idx] - e).abs() {
            idx += 1;
        }
        max_excursion = max_excursion.max((mu0[idx] - e).abs());
    }
    let allowed = (2.0 + epsilon) * lambda;
    InclusionReport {
        pass: max_excursion <= allowed || lambda == 0.0,
        max_excursion,
        max_excursion_over_lambda: if lambda > 0.0 {
            max_excursion / lambda
        } else {
            0.0
        },
    }
}
