//! End-to-end checks of the experiment drivers and the binary surface:
//! deterministic artifacts, flag plumbing, failure modes, and file formats.

use std::path::{Path, PathBuf};
use std::process::Command;

use ptlab_cli::config::{ExperimentConfig, ModelConfig, Rho0Source, StateConfig};
use ptlab_cli::experiments::{run_lawcheck, run_prethermalization};

fn small_config(out: Option<String>) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig::Nnn { n: 128 },
        lambda: 0.3,
        points: 24,
        realizations: 2,
        master_seed: 7,
        out,
        ..Default::default()
    }
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ptlab_cli_test_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn artifacts_are_deterministic() {
    let d1 = tmp_dir("det1");
    let d2 = tmp_dir("det2");
    let cfg1 = small_config(Some(d1.display().to_string()));
    let cfg2 = small_config(Some(d2.display().to_string()));
    run_prethermalization(&cfg1, true, true).unwrap();
    run_prethermalization(&cfg2, true, true).unwrap();
    for name in [
        "ensemble.csv",
        "unperturbed.csv",
        "predictions.csv",
        "predictions.json",
        "plateau.json",
        "provenance.json",
        "seed_0000.csv",
        "seed_0001.csv",
        "plot.svg",
    ] {
        let a = read(&d1.join(name));
        let b = read(&d2.join(name));
        assert_eq!(a, b, "artifact {name} differs between identical runs");
    }
    // a different master seed must change the ensemble
    let d3 = tmp_dir("det3");
    let mut cfg3 = small_config(Some(d3.display().to_string()));
    cfg3.master_seed = 8;
    run_prethermalization(&cfg3, false, false).unwrap();
    assert_ne!(read(&d1.join("ensemble.csv")), read(&d3.join("ensemble.csv")));
    for d in [d1, d2, d3] {
        std::fs::remove_dir_all(d).ok();
    }
}

#[test]
fn lambda_zero_flags_no_relaxation() {
    let mut cfg = small_config(None);
    cfg.lambda = 0.0;
    let run = run_prethermalization(&cfg, false, false).unwrap();
    assert!(run.plateau.no_relaxation);
    assert!(run.bundle.is_none());
    for (m, u) in run.ensemble.mean.iter().zip(run.unperturbed.iter()) {
        assert!((m - u).abs() < 1e-12);
    }
}

#[test]
fn inadmissible_reference_energy_aborts() {
    let mut cfg = small_config(None);
    cfg.e0 = 7.0; // outside the spectrum hull
    let err = run_prethermalization(&cfg, false, false);
    assert!(err.is_err());
    let msg = format!("{}", err.err().unwrap());
    assert!(msg.contains("not admissible"), "got: {msg}");
}

#[test]
fn custom_file_model_round_trip() {
    // export the lattice Hamiltonian, reload it through the custom-file model
    let dir = tmp_dir("custom");
    let path = dir.join("h0.ptlb");
    let (h0, _) = ptlab_core::models::build_nnn_hamiltonian(64).unwrap();
    h0.write_binary(&path).unwrap();
    let mut cfg = small_config(None);
    cfg.model = ModelConfig::CustomFile {
        path: path.display().to_string(),
    };
    cfg.state = StateConfig::Eigenprojector { index: None };
    cfg.rho0_source = Rho0Source::Estimated;
    // sublattice observables are lattice-specific and must be rejected here
    let err = run_prethermalization(&cfg, false, false);
    assert!(err.is_err());
    cfg.observable = ptlab_cli::config::ObservableConfig::EnergyPolynomial {
        coefficients: vec![0.0, 0.25],
    };
    let run = run_prethermalization(&cfg, false, false).unwrap();
    assert_eq!(run.ensemble.mean.len(), 25);
    assert_eq!(run.rho0_source_used, "estimated");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn state_variants_run() {
    for state in [
        StateConfig::UniformMixture,
        StateConfig::Gaussian { width: 0.1 },
        StateConfig::Eigenprojector { index: None },
    ] {
        let mut cfg = small_config(None);
        cfg.state = state;
        cfg.points = 10;
        let run = run_prethermalization(&cfg, false, false).unwrap();
        assert!(run.plateau.tilde_p.is_finite());
        // terminal expectation of the sublattice projector stays in [0, 1]
        assert!(run.plateau.tilde_p >= -1e-9 && run.plateau.tilde_p <= 1.0 + 1e-9);
    }
}

#[test]
fn lawcheck_degenerate_at_zero_coupling() {
    let cfg = ExperimentConfig {
        lambda: 0.0,
        lawcheck_sizes: vec![32, 64],
        lawcheck_seeds: 3,
        master_seed: 5,
        ..Default::default()
    };
    let run = run_lawcheck(&cfg).unwrap();
    assert!(run.summary.degenerate);
    assert!(run.summary.surrogate_pass);
    assert!(run.summary.slope.is_none());
    for s in &run.samples {
        assert!(s.residual <= 1e-8);
    }
}

#[test]
fn binary_subcommands_end_to_end() {
    let bin = env!("CARGO_BIN_EXE_ptlab");
    let dir = tmp_dir("bin");
    let cfg_path = dir.join("run.cfg");
    let out_dir = dir.join("out");
    let cfg = small_config(Some(out_dir.display().to_string()));
    std::fs::write(&cfg_path, cfg.to_config_string()).unwrap();

    let status = Command::new(bin)
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--svg")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out_dir.join("ensemble.csv").is_file());
    assert!(out_dir.join("plot.svg").is_file());

    // plot the ensemble CSV through the dedicated subcommand, twice: the SVG
    // bytes must be identical
    let svg1 = dir.join("a.svg");
    let svg2 = dir.join("b.svg");
    for svg in [&svg1, &svg2] {
        let status = Command::new(bin)
            .args(["plot", "--csv"])
            .arg(out_dir.join("ensemble.csv"))
            .args(["--x", "T", "--y", "mean", "--guides", "0,0.5", "--out"])
            .arg(svg)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(read(&svg1), read(&svg2));

    let dos_out = Command::new(bin)
        .args(["dos", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(dos_out.status.success());
    let dos: serde_json::Value = serde_json::from_slice(&dos_out.stdout).unwrap();
    assert!(dos["admissible"].as_bool().unwrap());
    assert!(dos["rho0"].as_f64().unwrap() > 0.0);

    let probe_out = Command::new(bin)
        .args(["mde-probe", "--config"])
        .arg(&cfg_path)
        .args(["--re-min", "1.5", "--re-max", "2.5", "--points", "3", "--im", "0.5,1.0"])
        .output()
        .unwrap();
    assert!(probe_out.status.success());
    let text = String::from_utf8(probe_out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "re_z,im_z,lambda,re_m,im_m,residual,iterations"
    );
    assert_eq!(lines.count(), 6, "3 re points x 2 im values");
    std::fs::remove_dir_all(dir).ok();
}
