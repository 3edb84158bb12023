//! Self-consistent resolvent of the deformed model: the traced fixed-point
//! equation m(z) = <(H0 - z - lambda^2 m(z))^{-1}>, its diagonal resolvent
//! representation in the H0 eigenbasis, and the deterministic two-resolvent
//! approximation built from it.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::models::HermitianMatrix;
use crate::spectra::{empirical_stieltjes, Eigensystem};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Converged solution of the traced self-consistent equation at one (z, lambda).
#[derive(Debug, Clone, Copy)]
pub struct MdeSolution {
    pub z: C64,
    pub lambda: f64,
    pub m: C64,
    /// |m - F(m)| of the undamped map after convergence.
    pub residual: f64,
    pub iterations: usize,
}

impl MdeSolution {
    /// Diagonal entries of M(z) in the H0 eigenbasis: (mu_j - z - lambda^2 m)^{-1}.
    pub fn diagonal(&self, eig0: &Eigensystem) -> Vec<C64> {
        let shift = self.z + C64::new(self.lambda * self.lambda, 0.0) * self.m;
        eig0.eigenvalues()
            .iter()
            .map(|mu| (C64::new(*mu, 0.0) - shift).inv())
            .collect()
    }

    /// <|M|^2> and <|M|> from the diagonal representation.
    pub fn trace_bounds(&self, eig0: &Eigensystem) -> (f64, f64) {
        let diag = self.diagonal(eig0);
        let n = diag.len() as f64;
        let sq = diag.iter().map(|m| m.norm_sqr()).sum::<f64>() / n;
        let ab = diag.iter().map(|m| m.norm()).sum::<f64>() / n;
        (sq, ab)
    }
}

fn mde_map(eig0: &Eigensystem, z: C64, lambda_sq: f64, m: C64) -> C64 {
    let shift = z + C64::new(lambda_sq, 0.0) * m;
    let n = eig0.dim() as f64;
    let mut acc = C64::new(0.0, 0.0);
    for mu in eig0.eigenvalues().iter() {
        acc += (C64::new(*mu, 0.0) - shift).inv();
    }
    acc / n
}

/// Damped fixed-point solve of m = <(H0 - z - lambda^2 m)^{-1}>.
///
/// The damping factor starts at 1 and halves whenever the residual grows;
/// after 50 iterations without progress a secant step on F(m) - m takes over.
/// The upper/lower half plane is invariant under the map, so the Herglotz
/// sign property holds for the converged solution.
pub fn solve_mde(
    eig0: &Eigensystem,
    z: C64,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MdeSolution> {
    if z.im == 0.0 {
        return Err(CoreError::RealSpectralParameter);
    }
    if tol <= 0.0 || lambda < 0.0 {
        return Err(CoreError::InvalidParameter(
            "solve_mde needs tol > 0 and lambda >= 0".into(),
        ));
    }
    let lambda_sq = lambda * lambda;
    // the free solution is exact at lambda = 0 and a good seed otherwise
    let mut m = empirical_stieltjes(eig0, z)?;
    let mut fm = mde_map(eig0, z, lambda_sq, m);
    let mut residual = (fm - m).norm();
    let mut beta = 1.0f64;
    let mut stalled = 0usize;
    let mut best = residual;
    let mut prev: Option<(C64, C64)> = None;
    let mut iterations = 1usize;

    while residual > tol && iterations < max_iter {
        let next = if stalled >= 50 {
            // derivative-free secant acceleration on g(m) = F(m) - m
            match prev {
                Some((mp, gp)) => {
                    let g = fm - m;
                    let denom = g - gp;
                    if denom.norm() > 1e-300 {
                        m - g * (m - mp) / denom
                    } else {
                        m + (fm - m) * beta
                    }
                }
                None => m + (fm - m) * beta,
            }
        } else {
            m + (fm - m) * beta
        };
        prev = Some((m, fm - m));
        let fnext = mde_map(eig0, z, lambda_sq, next);
        let rnext = (fnext - next).norm();
        if rnext > residual {
            beta = (beta * 0.5).max(1.0 / 1024.0);
        }
        if rnext < 0.5 * best {
            best = rnext;
            stalled = 0;
        } else {
            stalled += 1;
        }
        m = next;
        fm = fnext;
        residual = rnext;
        iterations += 1;
    }
    if residual > tol {
        return Err(CoreError::NoConvergence {
            residual,
            iterations,
        });
    }
    // converged-solution invariants
    if m.im * z.im <= 0.0 {
        return Err(CoreError::Other(format!(
            "Herglotz sign violated: Im m = {:.3e} at Im z = {:.3e}",
            m.im, z.im
        )));
    }
    if lambda > 0.0 && m.norm() > 1.0 / lambda {
        return Err(CoreError::Other(format!(
            "trace bound violated: |m| = {:.3e} > 1/lambda = {:.3e}",
            m.norm(),
            1.0 / lambda
        )));
    }
    Ok(MdeSolution {
        z,
        lambda,
        m,
        residual,
        iterations,
    })
}

/// Diagonal overlaps of B in the eigenbasis, d_j = <u_j, B u_j>.
fn diag_in_eigenbasis(eig: &Eigensystem, b: &HermitianMatrix) -> Vec<f64> {
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
                for (x, y) in col.iter().zip(bv.iter()) {
                    acc += x.conj() * y;
                }
                acc.re
            })
            .collect()
    }
}

/// Deterministic approximation to <x, G(z1) B G(z2) y>:
/// the direct term M1 B M2 plus the self-consistent resummation
/// lambda^2 M1 M2 <M1 B M2> / (1 - lambda^2 <M1 M2>), all applied as diagonal
/// operators in the H0 eigenbasis.
#[derive(Debug, Clone, Copy)]
pub struct DetTwoResolvent {
    pub z1: C64,
    pub z2: C64,
    pub value_xy: C64,
    pub trace_form: C64,
    pub denominator_margin: f64,
}

pub fn det_two_resolvent_form(
    eig0: &Eigensystem,
    z1: C64,
    z2: C64,
    lambda: f64,
    b: &HermitianMatrix,
    x: &[C64],
    y: &[C64],
) -> Result<DetTwoResolvent> {
    let n = eig0.dim();
    if b.dim() != n || x.len() != n || y.len() != n {
        return Err(CoreError::DimensionMismatch {
            context: "det_two_resolvent_form operand dimensions".into(),
        });
    }
    if z1.im == 0.0 || z2.im == 0.0 {
        return Err(CoreError::RealSpectralParameter);
    }
    let lambda_sq = lambda * lambda;
    let m1 = solve_mde(eig0, z1, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let m2 = solve_mde(eig0, z2, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let d1 = m1.diagonal(eig0);
    let d2 = m2.diagonal(eig0);

    let trace_m1m2: C64 =
        d1.iter().zip(d2.iter()).map(|(a, b)| a * b).sum::<C64>() / C64::new(n as f64, 0.0);
    let denom = C64::new(1.0, 0.0) - C64::new(lambda_sq, 0.0) * trace_m1m2;
    let margin = denom.norm();
    if margin < 1e-6 {
        return Err(CoreError::NearSingularDenominator { margin });
    }

    let xt = linalg::mat_vec_adjoint(eig0.eigenvectors(), x);
    let yt = linalg::mat_vec_adjoint(eig0.eigenvectors(), y);

    // <x, M1 B M2 y> without forming U^dag B U: push M2 y back to the site
    // basis, apply B there, and return to the eigenbasis.
    let m2y: Vec<C64> = d2.iter().zip(yt.iter()).map(|(m, c)| m * c).collect();
    let m2y_site = linalg::mat_vec(eig0.eigenvectors(), &m2y);
    let bm2y_site = b.apply(&m2y_site);
    let bm2y = linalg::mat_vec_adjoint(eig0.eigenvectors(), &bm2y_site);
    let mut direct = C64::new(0.0, 0.0);
    for j in 0..n {
        direct += xt[j].conj() * d1[j] * bm2y[j];
    }

    let bdiag = diag_in_eigenbasis(eig0, b);
    let trace_m1bm2: C64 = (0..n)
        .map(|j| d1[j] * C64::new(bdiag[j], 0.0) * d2[j])
        .sum::<C64>()
        / C64::new(n as f64, 0.0);
    let mut overlap_m1m2 = C64::new(0.0, 0.0);
    for j in 0..n {
        overlap_m1m2 += xt[j].conj() * d1[j] * d2[j] * yt[j];
    }
    let resummed = C64::new(lambda_sq, 0.0) * overlap_m1m2 * trace_m1bm2 / denom;
    let value_xy = direct + resummed;
    let trace_form = trace_m1bm2 / denom;
    Ok(DetTwoResolvent {
        z1,
        z2,
        value_xy,
        trace_form,
        denominator_margin: margin,
    })
}

/// Self-consistency of the boundary values: compares m(z) against the
/// Poisson-type integral of the eta-regularized boundary density on a grid
/// spanning the spectrum hull padded by 2. Boundary values use the two-point
/// linear extrapolation 2 m(x + i eta) - m(x + 2 i eta). Returns the absolute
/// discrepancy; the caller applies its threshold.
pub fn stieltjes_representation_check(
    eig0: &Eigensystem,
    lambda: f64,
    z: C64,
    eta: f64,
    grid_points: usize,
) -> Result<f64> {
    if z.im < 0.5 {
        return Err(CoreError::InvalidParameter(
            "representation check needs Im z >= 0.5".into(),
        ));
    }
    if eta <= 0.0 {
        return Err(CoreError::InvalidParameter("eta must be positive".into()));
    }
    let lo = eig0.min_eigenvalue() - 2.0;
    let hi = eig0.max_eigenvalue() + 2.0;
    let n_pts = if grid_points % 2 == 0 {
        grid_points + 1
    } else {
        grid_points
    };
    let h = (hi - lo) / (n_pts - 1) as f64;
    if h > eta / 2.0 {
        return Err(CoreError::GridTooCoarse {
            spacing: h,
            limit: eta / 2.0,
        });
    }
    let boundary_im = |x: f64| -> Result<f64> {
        let m1 = solve_mde(eig0, C64::new(x, eta), lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let m2 = solve_mde(
            eig0,
            C64::new(x, 2.0 * eta),
            lambda,
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )?;
        Ok(2.0 * m1.m.im - m2.m.im)
    };
    // composite Simpson over the grid
    let mut integral = C64::new(0.0, 0.0);
    let mut values = Vec::with_capacity(n_pts);
    for i in 0..n_pts {
        let x = lo + i as f64 * h;
        let im = boundary_im(x)?;
        values.push((x, im));
    }
    for (i, (x, im)) in values.iter().enumerate() {
        let weight = if i == 0 || i == n_pts - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        integral += C64::new(weight * im, 0.0) / (C64::new(*x, 0.0) - z);
    }
    integral *= C64::new(h / 3.0 / std::f64::consts::PI, 0.0);
    let m_direct = solve_mde(eig0, z, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok((m_direct.m - integral).norm())
}
