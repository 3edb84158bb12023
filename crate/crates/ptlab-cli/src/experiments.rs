//! End-to-end experiment drivers: the two-plateau relaxation run, the
//! resolvent-law scaling study, the solver probe sweep, and the density-of-
//! states report. Every run is fully determined by (config, master seed).

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;
use std::path::{Path, PathBuf};

use ptlab_core::dynamics::{heisenberg_series, monte_carlo_perturbed, EnsembleStats, TimeGrid};
use ptlab_core::lawcheck::{
    scaling_exponent_fit, two_resolvent_residuals, ResidualSample, SlopeFit,
};
use ptlab_core::mde::{solve_mde, DEFAULT_MAX_ITER, DEFAULT_TOL};
use ptlab_core::models::{
    build_free_fermion_hamiltonian, build_localized_state, build_nnn_hamiltonian,
    build_observable, even_sector_eigenprojector, in_window_indices, nnn_dos, realization_rng,
    EnergyWindow, HermitianMatrix, ModelInfo, ModelKind, ObservableKind, QuantumState, StateKind,
    WignerSpec,
};
use ptlab_core::spectra::{
    default_eta_grid, dos_estimate, eigendecompose, DosEstimate, Eigensystem,
};
use ptlab_core::theory::{
    lor_diagnostic, microcanonical_expectation, prediction_bundle, pretherm_gap, rate_constants,
    LorDiagnostic, PredictionBundle, RateConstants,
};
use rand::Rng;

use crate::artifacts;
use crate::config::{
    ExperimentConfig, ModelConfig, ObservableConfig, Rho0Source, StateConfig,
};

pub struct ModelSetup {
    pub h0: HermitianMatrix,
    pub info: ModelInfo,
    pub eig0: Eigensystem,
    pub window: EnergyWindow,
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<ModelSetup> {
    let (h0, info) = match &cfg.model {
        ModelConfig::Nnn { n } => build_nnn_hamiltonian(*n)?,
        ModelConfig::FreeFermion { l } => build_free_fermion_hamiltonian(*l)?,
        ModelConfig::CustomFile { path } => {
            let h = HermitianMatrix::read_binary(Path::new(path))?;
            let dim = h.dim();
            (
                h,
                ModelInfo {
                    kind: ModelKind::Custom,
                    dim,
                },
            )
        }
    };
    let eig0 = eigendecompose(&h0)?;
    let window = EnergyWindow::new(cfg.e0, cfg.delta, cfg.kappa0, cfg.c0)?;
    Ok(ModelSetup {
        h0,
        info,
        eig0,
        window,
    })
}

pub fn build_state(cfg: &ExperimentConfig, setup: &ModelSetup) -> Result<QuantumState> {
    let state = match &cfg.state {
        StateConfig::Eigenprojector { index } => {
            let k = match index {
                Some(i) => *i,
                None => nearest_in_window(&setup.eig0, &setup.window)?,
            };
            build_localized_state(&setup.eig0, &setup.window, StateKind::Eigenprojector(k))?
        }
        StateConfig::EvenEigenprojector => {
            if !matches!(setup.info.kind, ModelKind::NnnLattice { .. }) {
                bail!("even-eigenprojector states need the lattice model");
            }
            even_sector_eigenprojector(&setup.eig0, &setup.window)?
        }
        StateConfig::UniformMixture => {
            build_localized_state(&setup.eig0, &setup.window, StateKind::UniformMixture)?
        }
        StateConfig::Gaussian { width } => {
            build_localized_state(&setup.eig0, &setup.window, StateKind::GaussianWeighted(*width))?
        }
    };
    Ok(state)
}

fn nearest_in_window(eig: &Eigensystem, window: &EnergyWindow) -> Result<usize> {
    let idx = in_window_indices(eig, window);
    idx.into_iter()
        .min_by(|a, b| {
            let da = (eig.eigenvalues()[*a] - window.e0).abs();
            let db = (eig.eigenvalues()[*b] - window.e0).abs();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or_else(|| anyhow!("no eigenvalue inside the energy window"))
}

pub fn build_observable_from_config(
    cfg: &ExperimentConfig,
    setup: &ModelSetup,
) -> Result<HermitianMatrix> {
    let a = match &cfg.observable {
        ObservableConfig::OddSublattice => {
            build_observable(ObservableKind::OddSublattice, &setup.info, &setup.eig0)?
        }
        ObservableConfig::EnergyPolynomial { coefficients } => {
            let coeffs = coefficients.clone();
            let f = move |x: f64| -> f64 {
                let mut acc = 0.0;
                for c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            };
            build_observable(ObservableKind::EnergyFunction(&f), &setup.info, &setup.eig0)?
        }
        ObservableConfig::RandomHermitian { seed } => {
            build_observable(ObservableKind::RandomHermitian(*seed), &setup.info, &setup.eig0)?
        }
        ObservableConfig::SectorComplement { sector } => build_observable(
            ObservableKind::SectorComplement(*sector),
            &setup.info,
            &setup.eig0,
        )?,
    };
    Ok(a)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PlateauReport {
    /// Median ensemble mean over kinetic times [0.02, 0.2].
    pub early_plateau: f64,
    /// Median ensemble mean over kinetic times [4, 8].
    pub late_plateau: f64,
    pub tilde_p: f64,
    pub mc: f64,
    /// Long-time value of the unperturbed evolution.
    pub pre_value: f64,
    pub gap: f64,
    pub threshold: f64,
    pub pretherm_pass: bool,
    pub no_relaxation: bool,
}

pub struct PrethermRun {
    pub dos: DosEstimate,
    pub rho0_used: f64,
    pub rho0_source_used: &'static str,
    pub rate: Option<RateConstants>,
    pub times: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub unperturbed: Vec<f64>,
    pub ensemble: EnsembleStats,
    pub bundle: Option<PredictionBundle>,
    pub plateau: PlateauReport,
    pub lor: Option<LorDiagnostic>,
    pub written: Vec<PathBuf>,
}

fn median_over(kinetic: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut sel: Vec<f64> = kinetic
        .iter()
        .zip(values.iter())
        .filter(|(k, _)| **k >= lo && **k <= hi)
        .map(|(_, v)| *v)
        .collect();
    if sel.is_empty() {
        return f64::NAN;
    }
    sel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sel.len();
    if n % 2 == 1 {
        sel[n / 2]
    } else {
        0.5 * (sel[n / 2 - 1] + sel[n / 2])
    }
}

/// The headline experiment: ensemble exact evolution, the unperturbed
/// reference, the closed-form prediction bundle, and the plateau report.
pub fn run_prethermalization(
    cfg: &ExperimentConfig,
    emit_svg: bool,
    per_seed_files: bool,
) -> Result<PrethermRun> {
    let setup = build_model(cfg)?;
    let dos = dos_estimate(&setup.eig0, &setup.window, &default_eta_grid(setup.info.dim))?;
    if !dos.admissible {
        bail!(
            "reference energy not admissible: {} (c_observed = {:.4}, C11 proxy = {:.4})",
            dos.diagnostic.clone().unwrap_or_else(|| "eta plateau found but window fails the density/regularity floor".into()),
            dos.c_observed,
            dos.lipschitz_observed,
        );
    }
    let (rho0_used, rho0_source_used) = match (cfg.rho0_source, &cfg.model) {
        (Rho0Source::Analytic, ModelConfig::Nnn { .. }) => (nnn_dos(cfg.e0), "analytic"),
        (Rho0Source::Analytic, _) => (dos.rho0_at_e0, "estimated (no closed form for model)"),
        (Rho0Source::Estimated, _) => (dos.rho0_at_e0, "estimated"),
    };

    let state = build_state(cfg, &setup)?;
    let a = build_observable_from_config(cfg, &setup)?;
    let grid = TimeGrid::geometric_kinetic(cfg.t_min, cfg.t_max, cfg.points, cfg.lambda)?;
    let unperturbed = heisenberg_series(&setup.eig0, &state, &a, &grid)?;

    let spec = WignerSpec {
        dim: setup.info.dim,
        symmetry_class: cfg.symmetry,
        entry_law: cfg.entry_law,
        seed: cfg.master_seed,
    };
    let ensemble = monte_carlo_perturbed(
        &setup.h0,
        &state,
        &a,
        cfg.lambda,
        &spec,
        cfg.realizations,
        &grid,
    )?;

    let kinetic = grid.kinetic();
    let (rate, bundle, lor) = if cfg.lambda > 0.0 {
        let rc = rate_constants(rho0_used, cfg.lambda)?;
        let profile = ptlab_core::spectra::overlaps(&setup.eig0, &a, &state)?;
        let mc = microcanonical_expectation(&setup.eig0, &a, &rc, cfg.e0)?;
        let bundle = prediction_bundle(&profile, &rc, grid.times(), &unperturbed.values, mc)?;
        let lor = lor_diagnostic(&profile, &setup.window).ok();
        (Some(rc), Some(bundle), lor)
    } else {
        (None, None, None)
    };

    let no_relaxation = cfg.lambda == 0.0
        || ensemble
            .mean
            .iter()
            .zip(unperturbed.values.iter())
            .all(|(m, u)| (m - u).abs() < 1e-12);
    let pre_value = median_over(&kinetic, &unperturbed.values, 4.0, 8.0);
    let pre_value = if pre_value.is_nan() {
        *unperturbed.values.last().unwrap()
    } else {
        pre_value
    };
    let tilde_p = bundle.as_ref().map(|b| b.tilde_p).unwrap_or(f64::NAN);
    let gap = if let Some(b) = &bundle {
        pretherm_gap(pre_value, b.tilde_p)
    } else {
        0.0
    };
    let plateau = PlateauReport {
        early_plateau: median_over(&kinetic, &ensemble.mean, 0.02, 0.2),
        late_plateau: median_over(&kinetic, &ensemble.mean, 4.0, 8.0),
        tilde_p,
        mc: bundle.as_ref().map(|b| b.mc).unwrap_or(f64::NAN),
        pre_value,
        gap,
        threshold: cfg.pretherm_threshold,
        pretherm_pass: gap >= cfg.pretherm_threshold,
        no_relaxation,
    };

    let mut written = Vec::new();
    if let Some(out) = &cfg.out {
        let dir = PathBuf::from(out);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        written.extend(artifacts::write_pretherm_artifacts(
            &dir,
            cfg,
            &dos,
            rho0_used,
            rho0_source_used,
            &ensemble,
            &unperturbed.values,
            bundle.as_ref(),
            &plateau,
            emit_svg,
            per_seed_files,
        )?);
    }

    Ok(PrethermRun {
        dos,
        rho0_used,
        rho0_source_used,
        rate,
        times: grid.times().to_vec(),
        kinetic,
        unperturbed: unperturbed.values,
        ensemble,
        bundle,
        plateau,
        lor,
        written,
    })
}

#[derive(Debug, serde::Serialize)]
pub struct LawcheckSummary {
    pub medians: Vec<(usize, f64)>,
    pub slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub degenerate: bool,
    pub surrogate_pass: bool,
    pub surrogate_k: f64,
    pub q90: Vec<(usize, f64)>,
}

pub struct LawcheckRun {
    pub samples: Vec<ResidualSample>,
    pub fit: Option<SlopeFit>,
    pub summary: LawcheckSummary,
    pub written: Vec<PathBuf>,
}

fn quantile(values: &mut Vec<f64>, q: f64) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((values.len() as f64 - 1.0) * q).round() as usize;
    values[idx]
}

/// Stress test of the isotropic two-resolvent approximation across matrix
/// sizes: per-seed residuals, the fitted log-log slope, and the fixed-K
/// stochastic-domination surrogate q90(N) <= K N^{-1/2 + 0.1} with K pinned
/// on the smallest size.
pub fn run_lawcheck(cfg: &ExperimentConfig) -> Result<LawcheckRun> {
    if cfg.lawcheck_sizes.is_empty() {
        bail!("lawcheck needs at least one size");
    }
    let mut samples: Vec<ResidualSample> = Vec::new();
    for &n in &cfg.lawcheck_sizes {
        let (h0, _) = build_nnn_hamiltonian(n)?;
        let eig0 = eigendecompose(&h0)?;
        let z1 = C64::new(cfg.e0, cfg.lawcheck_im_z);
        let z2 = C64::new(cfg.e0, -cfg.lawcheck_im_z);
        let b = HermitianMatrix::new(ndarray::Array2::<C64>::eye(n))?;
        let (x, y) = probe_vectors(n, cfg.master_seed);
        let spec = WignerSpec {
            dim: n,
            symmetry_class: cfg.symmetry,
            entry_law: cfg.entry_law,
            seed: cfg.master_seed,
        };
        let seeds: Vec<u64> = (0..cfg.lawcheck_seeds as u64).collect();
        samples.extend(two_resolvent_residuals(
            &h0, &eig0, cfg.lambda, z1, z2, &b, &x, &y, &spec, &seeds,
        )?);
    }

    let degenerate = cfg.lambda == 0.0 || samples.iter().all(|s| s.residual < 1e-8);
    let fit = if !degenerate && cfg.lawcheck_sizes.len() >= 3 && cfg.lawcheck_seeds >= 20 {
        Some(scaling_exponent_fit(&samples)?)
    } else {
        None
    };

    // fixed-K surrogate for stochastic domination
    let delta = 0.1;
    let mut q90: Vec<(usize, f64)> = Vec::new();
    for &n in &cfg.lawcheck_sizes {
        let mut vals: Vec<f64> = samples
            .iter()
            .filter(|s| s.n == n)
            .map(|s| s.residual)
            .collect();
        q90.push((n, quantile(&mut vals, 0.9)));
    }
    let n_min = *cfg.lawcheck_sizes.iter().min().unwrap();
    let q90_min = q90.iter().find(|(n, _)| *n == n_min).unwrap().1;
    let k = q90_min / (n_min as f64).powf(-0.5 + delta);
    let surrogate_pass = degenerate
        || q90
            .iter()
            .all(|(n, q)| *q <= k * (*n as f64).powf(-0.5 + delta) * (1.0 + 1e-12));

    let summary = LawcheckSummary {
        medians: fit
            .as_ref()
            .map(|f| f.medians.clone())
            .unwrap_or_default(),
        slope: fit.as_ref().map(|f| f.slope),
        slope_ci: fit.as_ref().map(|f| (f.ci_lo, f.ci_hi)),
        degenerate,
        surrogate_pass,
        surrogate_k: k,
        q90,
    };

    let mut written = Vec::new();
    if let Some(out) = &cfg.out {
        let dir = PathBuf::from(out);
        std::fs::create_dir_all(&dir)?;
        written.extend(artifacts::write_lawcheck_artifacts(&dir, &samples, &summary)?);
    }
    Ok(LawcheckRun {
        samples,
        fit,
        summary,
        written,
    })
}

/// Deterministic normalized probe vectors for the isotropic law.
pub fn probe_vectors(n: usize, master_seed: u64) -> (Vec<C64>, Vec<C64>) {
    let mut rng = realization_rng(master_seed ^ 0x1507_AB1E, n as u64);
    let draw = |rng: &mut rand_chacha::ChaCha12Rng| -> Vec<C64> {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect()
    };
    let x = draw(&mut rng);
    let y = draw(&mut rng);
    (x, y)
}

/// CSV sweep of the self-consistent solve over a spectral-parameter grid.
pub fn mde_probe_csv(
    cfg: &ExperimentConfig,
    re_min: f64,
    re_max: f64,
    points: usize,
    im_values: &[f64],
) -> Result<String> {
    if points < 2 {
        bail!("probe sweep needs at least two grid points");
    }
    let setup = build_model(cfg)?;
    let mut out = String::from("re_z,im_z,lambda,re_m,im_m,residual,iterations\n");
    for i in 0..points {
        let re = re_min + (re_max - re_min) * i as f64 / (points - 1) as f64;
        for &im in im_values {
            let sol = solve_mde(
                &setup.eig0,
                C64::new(re, im),
                cfg.lambda,
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
            )?;
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{}\n",
                re, im, cfg.lambda, sol.m.re, sol.m.im, sol.residual, sol.iterations
            ));
        }
    }
    Ok(out)
}

/// Density-of-states report as pretty JSON.
pub fn dos_report_json(cfg: &ExperimentConfig) -> Result<String> {
    let setup = build_model(cfg)?;
    let dos = dos_estimate(&setup.eig0, &setup.window, &default_eta_grid(setup.info.dim))?;
    Ok(serde_json::to_string_pretty(&dos)?)
}
