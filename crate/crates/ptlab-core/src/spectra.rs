//! Diagonalization, empirical Stieltjes transforms, density-of-states
//! estimation with an eta-plateau rule, and eigenbasis overlap profiles.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::models::{EnergyWindow, HermitianMatrix, QuantumState};

/// Sorted eigenvalues and the matching unitary of eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<C64>,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Full-matrix residual and orthonormality defects; O(N^3), test use.
    pub fn verify(&self, h: &HermitianMatrix) -> (f64, f64) {
        let n = self.dim();
        let mut residual = 0.0f64;
        for j in 0..n {
            let col: Vec<C64> = self.eigenvectors.column(j).to_vec();
            let hv = h.apply(&col);
            for i in 0..n {
                residual += (hv[i] - col[i] * self.eigenvalues[j]).norm_sqr();
            }
        }
        let residual = residual.sqrt() / linalg::fro_norm(h.data()).max(1e-300);
        let udag = self.eigenvectors.t().mapv(|z| z.conj());
        let gram = linalg::mat_mul(&udag.to_owned(), &self.eigenvectors);
        let mut ortho = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((gram[[i, j]] - C64::new(target, 0.0)).norm());
            }
        }
        (residual, ortho)
    }
}

/// Dense Hermitian eigendecomposition. Real-symmetric inputs are routed to
/// the faster real driver.
pub fn eigendecompose(h: &HermitianMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    let imag_scale = h
        .data()
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0f64, f64::max);
    if imag_scale == 0.0 {
        let hr = h.data().mapv(|z| z.re);
        let (w, ur) = linalg::eigh_real(&hr)?;
        let u = ur.mapv(|x| C64::new(x, 0.0));
        return Ok(Eigensystem {
            eigenvalues: w,
            eigenvectors: u,
        });
    }
    let (w, u) = linalg::eigh(h.data())?;
    debug_assert_eq!(w.len(), n);
    Ok(Eigensystem {
        eigenvalues: w,
        eigenvectors: u,
    })
}

/// N^{-1} sum_j (mu_j - z)^{-1}; the trace of the resolvent of the sampled
/// spectrum. Requires Im z != 0.
pub fn empirical_stieltjes(eig: &Eigensystem, z: C64) -> Result<C64> {
    if z.im == 0.0 {
        return Err(CoreError::RealSpectralParameter);
    }
    let n = eig.dim() as f64;
    let mut acc = C64::new(0.0, 0.0);
    for mu in eig.eigenvalues().iter() {
        acc += (C64::new(*mu, 0.0) - z).inv();
    }
    Ok(acc / n)
}

/// Smoothed density rho_eta(x) = Im m(x + i eta) / pi.
pub fn smoothed_density(eig: &Eigensystem, x: f64, eta: f64) -> f64 {
    let n = eig.dim() as f64;
    let mut acc = 0.0;
    for mu in eig.eigenvalues().iter() {
        let d = x - mu;
        acc += eta / (d * d + eta * eta);
    }
    acc / (std::f64::consts::PI * n)
}

/// Density-of-states estimate at a reference energy plus admissibility data.
#[derive(Debug, Clone, Serialize)]
pub struct DosEstimate {
    #[serde(rename = "rho0")]
    pub rho0_at_e0: f64,
    #[serde(rename = "eta")]
    pub eta_probe: f64,
    pub admissible: bool,
    pub c_observed: f64,
    pub lipschitz_observed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Default geometric eta grid: 8 points from 20/N up to 0.2.
pub fn default_eta_grid(n: usize) -> Vec<f64> {
    let lo = 20.0 / n as f64;
    let hi = 0.2f64;
    let points = 8;
    (0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// Estimates rho0(E0) by the eta-plateau rule: on an ascending eta grid the
/// value is accepted at the smallest eta whose neighbor differs by < 2%.
/// Admissibility additionally needs the smoothed density to stay above c0 on
/// the kappa window and a finite-difference C^{1,1} proxy below 1/c0.
pub fn dos_estimate(
    eig: &Eigensystem,
    window: &EnergyWindow,
    eta_grid: &[f64],
) -> Result<DosEstimate> {
    if eta_grid.len() < 2 || eta_grid.iter().any(|e| *e <= 0.0) {
        return Err(CoreError::InvalidParameter(
            "need at least two positive eta values".into(),
        ));
    }
    let mut etas: Vec<f64> = eta_grid.to_vec();
    etas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let hull_lo = eig.min_eigenvalue();
    let hull_hi = eig.max_eigenvalue();
    if window.e0 < hull_lo || window.e0 > hull_hi {
        return Ok(DosEstimate {
            rho0_at_e0: smoothed_density(eig, window.e0, etas[etas.len() / 2]),
            eta_probe: etas[etas.len() / 2],
            admissible: false,
            c_observed: 0.0,
            lipschitz_observed: f64::INFINITY,
            diagnostic: Some(format!(
                "reference energy {} outside spectrum hull [{:.6}, {:.6}]",
                window.e0, hull_lo, hull_hi
            )),
        });
    }

    let rho: Vec<f64> = etas
        .iter()
        .map(|eta| smoothed_density(eig, window.e0, *eta))
        .collect();
    let mut plateau: Option<usize> = None;
    for i in 0..etas.len() - 1 {
        let denom = rho[i + 1].abs().max(1e-300);
        if (rho[i] - rho[i + 1]).abs() / denom < 0.02 {
            plateau = Some(i);
            break;
        }
    }
    let (idx, plateau_found, diagnostic) = match plateau {
        Some(i) => (i, true, None),
        None => (
            etas.len() / 2,
            false,
            Some("no eta plateau: adjacent smoothed densities differ by >= 2%".to_string()),
        ),
    };
    let eta = etas[idx];
    let rho0 = rho[idx];

    // admissibility scan over the kappa window at the accepted eta
    let kappa = window.kappa0;
    let h = kappa / 8.0;
    let xs: Vec<f64> = (-8..=8).map(|i| window.e0 + i as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|x| smoothed_density(eig, *x, eta)).collect();
    let c_observed = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_rho = vals.iter().cloned().fold(0.0f64, f64::max);
    let deriv: Vec<f64> = (1..xs.len() - 1)
        .map(|i| (vals[i + 1] - vals[i - 1]) / (2.0 * h))
        .collect();
    let max_deriv = deriv.iter().map(|d| d.abs()).fold(0.0f64, f64::max);
    let mut lip = 0.0f64;
    for i in 1..deriv.len() - 1 {
        lip = lip.max((deriv[i + 1] - deriv[i - 1]).abs() / (2.0 * h));
    }
    let c11_norm = max_rho + max_deriv + lip;

    let admissible = plateau_found && c_observed > window.c0 && c11_norm <= 1.0 / window.c0;
    Ok(DosEstimate {
        rho0_at_e0: rho0,
        eta_probe: eta,
        admissible,
        c_observed,
        lipschitz_observed: c11_norm,
        diagnostic,
    })
}

/// Diagonal overlaps of an observable and a state in the eigenbasis:
/// a_j = <u_j, A u_j>, p_k = <u_k, P u_k>.
#[derive(Debug, Clone)]
pub struct OverlapProfile {
    pub a: Array1<f64>,
    pub p: Array1<f64>,
    pub mu: Array1<f64>,
    /// Indices carrying state weight above 1e-14; the double sums in the
    /// closed-form predictions restrict to these.
    pub support: Vec<usize>,
}

pub fn overlaps(
    eig: &Eigensystem,
    a: &HermitianMatrix,
    p: &QuantumState,
) -> Result<OverlapProfile> {
    let n = eig.dim();
    if a.dim() != n || p.dim() != n {
        return Err(CoreError::DimensionMismatch {
            context: format!("overlaps: eig dim {n}, A dim {}, P dim {}", a.dim(), p.dim()),
        });
    }
    let mut avec = Array1::<f64>::zeros(n);
    if let Some(d) = a.as_diagonal() {
        for j in 0..n {
            let mut acc = 0.0;
            for x in 0..n {
                acc += d[x] * eig.eigenvectors()[[x, j]].norm_sqr();
            }
            avec[j] = acc;
        }
    } else {
        for j in 0..n {
            let col: Vec<C64> = eig.eigenvectors().column(j).to_vec();
            let av = a.apply(&col);
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in col.iter().zip(av.iter()) {
                acc += x.conj() * y;
            }
            avec[j] = acc.re;
        }
    }

    let mut pvec = Array1::<f64>::zeros(n);
    for (i, w) in p.weights().iter().enumerate() {
        let v: Vec<C64> = p.vectors().column(i).to_vec();
        let coeffs = linalg::mat_vec_adjoint(eig.eigenvectors(), &v);
        for (k, c) in coeffs.iter().enumerate() {
            pvec[k] += w * c.norm_sqr();
        }
    }
    let support: Vec<usize> = (0..n).filter(|&k| pvec[k] > 1e-14).collect();
    Ok(OverlapProfile {
        a: avec,
        p: pvec,
        mu: eig.eigenvalues().clone(),
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        build_localized_state, build_nnn_hamiltonian, build_observable, EnergyWindow,
        HermitianMatrix, ObservableKind, StateKind,
    };
    use ndarray::Array2;

    #[test]
    fn identity_eigensystem() {
        let h = HermitianMatrix::new(Array2::<C64>::eye(5)).unwrap();
        let eig = eigendecompose(&h).unwrap();
        for mu in eig.eigenvalues().iter() {
            assert!((mu - 1.0).abs() < 1e-14);
        }
        let (res, ortho) = eig.verify(&h);
        assert!(res < 1e-12 && ortho < 1e-12);
    }

    #[test]
    fn stieltjes_single_pole_and_reflection() {
        let mut d = Array2::<C64>::zeros((1, 1));
        d[[0, 0]] = C64::new(0.0, 0.0);
        let h = HermitianMatrix::new(d).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let z = C64::new(0.0, 1.0);
        let m = empirical_stieltjes(&eig, z).unwrap();
        // single pole at 0: 1/(0 - i) = i
        assert!((m - C64::new(0.0, 1.0)).norm() < 1e-15);
        let mc = empirical_stieltjes(&eig, z.conj()).unwrap();
        assert!((mc - m.conj()).norm() < 1e-15);
        assert!(empirical_stieltjes(&eig, C64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn stieltjes_positivity() {
        let (h, _) = build_nnn_hamiltonian(32).unwrap();
        let eig = eigendecompose(&h).unwrap();
        for &re in &[0.3, 1.0, 2.0, 3.7] {
            for &im in &[0.05, 0.5, -0.5, 2.0] {
                let m = empirical_stieltjes(&eig, C64::new(re, im)).unwrap();
                assert!(m.im * im > 0.0, "Im m and Im z must share sign");
            }
        }
    }

    #[test]
    fn dos_flat_synthetic_spectrum() {
        // equispaced eigenvalues on [0, 1]: density 1
        let n = 2048;
        let mut d = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            d[[j, j]] = C64::new((j as f64 + 0.5) / n as f64, 0.0);
        }
        let h = HermitianMatrix::new(d).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let window = EnergyWindow::new(0.5, 0.01, 0.12, 0.2).unwrap();
        let est = dos_estimate(&eig, &window, &default_eta_grid(n)).unwrap();
        assert!(
            (est.rho0_at_e0 - 1.0).abs() < 0.02,
            "flat density estimate {}",
            est.rho0_at_e0
        );
        assert!(est.admissible, "flat spectrum center should be admissible");
    }

    #[test]
    fn dos_outside_support() {
        let (h, _) = build_nnn_hamiltonian(64).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let window = EnergyWindow::new(7.0, 0.1, 1.0, 0.05).unwrap();
        let est = dos_estimate(&eig, &window, &default_eta_grid(64)).unwrap();
        assert!(!est.admissible);
        assert!(est.diagnostic.is_some());
    }

    #[test]
    fn overlap_sum_rules() {
        let (h, info) = build_nnn_hamiltonian(8).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let window = EnergyWindow::new(2.0, 0.5, 3.1, 0.01).unwrap();
        let state = build_localized_state(&eig, &window, StateKind::UniformMixture).unwrap();
        let a = build_observable(ObservableKind::OddSublattice, &info, &eig).unwrap();
        let prof = overlaps(&eig, &a, &state).unwrap();
        let sum_a: f64 = prof.a.iter().sum();
        assert!((sum_a - 4.0).abs() < 1e-10, "sum of overlaps = Tr A");
        let sum_p: f64 = prof.p.iter().sum();
        assert!((sum_p - 1.0).abs() < 1e-10);
        assert!(prof.p.iter().all(|x| *x >= -1e-12));
        // identity observable: all overlaps one
        let ident = HermitianMatrix::new(Array2::<C64>::eye(8)).unwrap();
        let prof = overlaps(&eig, &ident, &state).unwrap();
        assert!(prof.a.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn eigenprojector_state_gives_indicator_profile() {
        let (h, _) = build_nnn_hamiltonian(16).unwrap();
        let eig = eigendecompose(&h).unwrap();
        let window = EnergyWindow::new(2.0, 0.5, 3.1, 0.01).unwrap();
        let idx = crate::models::in_window_indices(&eig, &window);
        let k = idx[1];
        let state = build_localized_state(&eig, &window, StateKind::Eigenprojector(k)).unwrap();
        let ident = HermitianMatrix::new(Array2::<C64>::eye(16)).unwrap();
        let prof = overlaps(&eig, &ident, &state).unwrap();
        // p concentrates on the chosen index up to exact degeneracy mixing
        let mass_near: f64 = (0..16)
            .filter(|&j| (eig.eigenvalues()[j] - eig.eigenvalues()[k]).abs() < 1e-9)
            .map(|j| prof.p[j])
            .sum();
        assert!((mass_near - 1.0).abs() < 1e-10);
    }
}
