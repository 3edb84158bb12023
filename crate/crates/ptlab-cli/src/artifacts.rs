//! CSV/JSON artifact writers. Numeric formatting uses Rust's shortest
//! round-trip float display, so identical inputs give identical bytes; the
//! only timestamp lives in the meta sidecar.

use anyhow::Result;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ptlab_core::dynamics::EnsembleStats;
use ptlab_core::lawcheck::{ResidualKind, ResidualSample};
use ptlab_core::spectra::DosEstimate;
use ptlab_core::theory::PredictionBundle;

use crate::config::ExperimentConfig;
use crate::experiments::{LawcheckSummary, PlateauReport};
use crate::svg::{emit_plot, PlotSeries, PlotSpec};

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content.as_bytes())?;
    Ok(())
}

pub fn ensemble_csv(stats: &EnsembleStats, n: usize) -> String {
    let mut s = String::from("t,T,mean,std,n\n");
    for i in 0..stats.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            stats.times[i], stats.kinetic[i], stats.mean[i], stats.std[i], n
        );
    }
    s
}

pub fn series_csv(times: &[f64], kinetic: &[f64], values: &[f64]) -> String {
    let mut s = String::from("t,T,mean,std,n\n");
    for i in 0..times.len() {
        let _ = writeln!(s, "{},{},{},0,1", times[i], kinetic[i], values[i]);
    }
    s
}

pub fn predictions_csv(bundle: &PredictionBundle) -> String {
    let mut s = String::from("t,T,g2,tildePt,tildeP,remainder,mc,relax_rhs\n");
    for i in 0..bundle.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            bundle.times[i],
            bundle.kinetic[i],
            bundle.g2[i],
            bundle.tilde_p_t[i],
            bundle.tilde_p,
            bundle.remainder[i],
            bundle.mc,
            bundle.relax_rhs[i]
        );
    }
    s
}

pub fn residuals_csv(samples: &[ResidualSample]) -> String {
    let mut s = String::from("kind,N,seed,rez1,imz1,rez2,imz2,residual\n");
    for r in samples {
        let kind = match r.kind {
            ResidualKind::TwoResolvent => "two-resolvent",
            ResidualKind::SingleResolvent => "single-resolvent",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{:e}",
            kind, r.n, r.seed, r.z1.re, r.z1.im, r.z2.re, r.z2.im, r.residual
        );
    }
    s
}

#[allow(clippy::too_many_arguments)]
pub fn write_pretherm_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    dos: &DosEstimate,
    rho0_used: f64,
    rho0_source_used: &str,
    ensemble: &EnsembleStats,
    unperturbed: &[f64],
    bundle: Option<&PredictionBundle>,
    plateau: &PlateauReport,
    emit_svg: bool,
    per_seed_files: bool,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut push = |p: PathBuf| written.push(p);

    let p = dir.join("ensemble.csv");
    write_file(&p, &ensemble_csv(ensemble, cfg.realizations))?;
    push(p);

    let p = dir.join("unperturbed.csv");
    write_file(&p, &series_csv(&ensemble.times, &ensemble.kinetic, unperturbed))?;
    push(p);

    if let Some(b) = bundle {
        let p = dir.join("predictions.csv");
        write_file(&p, &predictions_csv(b))?;
        push(p);
        let sidecar = serde_json::json!({
            "alpha": rho0_used * std::f64::consts::PI,
            "lambda": cfg.lambda,
            "rho0": rho0_used,
            "rho0_source": rho0_source_used,
            "r": b.r,
        });
        let p = dir.join("predictions.json");
        write_file(&p, &serde_json::to_string_pretty(&sidecar)?)?;
        push(p);
    }

    let p = dir.join("plateau.json");
    write_file(&p, &serde_json::to_string_pretty(plateau)?)?;
    push(p);

    let seeds: Vec<u64> = ensemble
        .per_seed
        .iter()
        .filter_map(|s| s.realization_seed)
        .collect();
    // the output location is not an experiment parameter; strip it so two
    // runs of the same experiment produce identical provenance bytes
    let mut cfg_echo = cfg.clone();
    cfg_echo.out = None;
    let provenance = serde_json::json!({
        "config": cfg_echo.to_config_string(),
        "master_seed": cfg.master_seed,
        "seeds": seeds,
        "rho0": rho0_used,
        "rho0_source": rho0_source_used,
        "alpha": rho0_used * std::f64::consts::PI,
        "r": bundle.map(|b| b.r),
        "dos_estimate": dos,
        "module_versions": {
            "ptlab-core": ptlab_core::version(),
            "ptlab-cli": env!("CARGO_PKG_VERSION"),
        },
    });
    let p = dir.join("provenance.json");
    write_file(&p, &serde_json::to_string_pretty(&provenance)?)?;
    push(p);

    // wall-clock metadata kept out of the deterministic artifact set
    let meta = serde_json::json!({
        "written_unix_seconds": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    let p = dir.join("meta.json");
    write_file(&p, &serde_json::to_string_pretty(&meta)?)?;
    push(p);

    if per_seed_files {
        for s in &ensemble.per_seed {
            let seed = s.realization_seed.unwrap_or(0);
            let p = dir.join(format!("seed_{seed:04}.csv"));
            write_file(&p, &series_csv(&ensemble.times, &ensemble.kinetic, &s.values))?;
            push(p);
        }
    }

    if emit_svg {
        let mut series = vec![PlotSeries {
            label: "ensemble mean",
            x: &ensemble.kinetic,
            y: &ensemble.mean,
            color: "crimson",
        }];
        if let Some(b) = bundle {
            series.push(PlotSeries {
                label: "relaxation formula",
                x: &ensemble.kinetic,
                y: &b.relax_rhs,
                color: "steelblue",
            });
        }
        let guides = [plateau.pre_value, plateau.tilde_p];
        let n_guides: Vec<f64> = guides.iter().copied().filter(|g| g.is_finite()).collect();
        let svg = emit_plot(
            &series,
            &PlotSpec {
                title: "relaxation of the perturbed expectation value",
                x_label: "kinetic time T",
                y_label: "expectation",
                guides: &n_guides,
            },
        );
        let p = dir.join("plot.svg");
        write_file(&p, &svg)?;
        push(p);
    }
    Ok(written)
}

pub fn write_lawcheck_artifacts(
    dir: &Path,
    samples: &[ResidualSample],
    summary: &LawcheckSummary,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let p = dir.join("residuals.csv");
    write_file(&p, &residuals_csv(samples))?;
    written.push(p);
    let p = dir.join("summary.json");
    write_file(&p, &serde_json::to_string_pretty(summary)?)?;
    written.push(p);
    Ok(written)
}
