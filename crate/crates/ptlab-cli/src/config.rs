//! Flat sectioned key = value experiment configuration with strict unknown-key
//! rejection and lossless round-trip serialization.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use ptlab_core::models::{EntryLaw, SymmetryClass};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Nnn { n: usize },
    FreeFermion { l: usize },
    CustomFile { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateConfig {
    /// Eigenprojector onto the in-window eigenvector nearest E0 (or an
    /// explicit global index).
    Eigenprojector { index: Option<usize> },
    /// Parity-resolved eigenprojector on the even sublattice.
    EvenEigenprojector,
    UniformMixture,
    Gaussian { width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableConfig {
    OddSublattice,
    /// Polynomial of the Hamiltonian: f(x) = sum_k coefficients[k] x^k.
    EnergyPolynomial { coefficients: Vec<f64> },
    RandomHermitian { seed: u64 },
    SectorComplement { sector: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rho0Source {
    Analytic,
    Estimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub e0: f64,
    pub delta: f64,
    pub kappa0: f64,
    pub c0: f64,
    pub lambda: f64,
    pub symmetry: SymmetryClass,
    pub entry_law: EntryLaw,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub state: StateConfig,
    pub observable: ObservableConfig,
    pub realizations: usize,
    pub master_seed: u64,
    pub rho0_source: Rho0Source,
    pub pretherm_threshold: f64,
    pub out: Option<String>,
    /// lawcheck-only: matrix sizes, seeds per size, |Im z| of the probe pair.
    pub lawcheck_sizes: Vec<usize>,
    pub lawcheck_seeds: usize,
    pub lawcheck_im_z: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::Nnn { n: 1024 },
            e0: 2.0,
            delta: 0.2,
            kappa0: 1.5,
            c0: 0.05,
            lambda: 0.05,
            symmetry: SymmetryClass::ComplexHermitian,
            entry_law: EntryLaw::Gaussian,
            t_min: 0.01,
            t_max: 8.0,
            points: 80,
            state: StateConfig::EvenEigenprojector,
            observable: ObservableConfig::OddSublattice,
            realizations: 5,
            master_seed: 42,
            rho0_source: Rho0Source::Analytic,
            pretherm_threshold: 0.1,
            out: None,
            lawcheck_sizes: vec![128, 256, 512, 1024],
            lawcheck_seeds: 50,
            lawcheck_im_z: 1.0,
        }
    }
}

fn fmt_f(x: f64) -> String {
    // shortest round-trip formatting; lossless through parse
    format!("{x}")
}

impl ExperimentConfig {
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        s.push_str("[model]\n");
        match &self.model {
            ModelConfig::Nnn { n } => {
                let _ = writeln!(s, "kind = nnn\nn = {n}");
            }
            ModelConfig::FreeFermion { l } => {
                let _ = writeln!(s, "kind = free-fermion\nl = {l}");
            }
            ModelConfig::CustomFile { path } => {
                let _ = writeln!(s, "kind = custom-file\npath = {path}");
            }
        }
        s.push_str("\n[window]\n");
        let _ = writeln!(s, "e0 = {}", fmt_f(self.e0));
        let _ = writeln!(s, "delta = {}", fmt_f(self.delta));
        let _ = writeln!(s, "kappa0 = {}", fmt_f(self.kappa0));
        let _ = writeln!(s, "c0 = {}", fmt_f(self.c0));
        s.push_str("\n[perturbation]\n");
        let _ = writeln!(s, "lambda = {}", fmt_f(self.lambda));
        let _ = writeln!(
            s,
            "symmetry = {}",
            match self.symmetry {
                SymmetryClass::ComplexHermitian => "complex-hermitian",
                SymmetryClass::RealSymmetric => "real-symmetric",
            }
        );
        let _ = writeln!(
            s,
            "entry-law = {}",
            match self.entry_law {
                EntryLaw::Gaussian => "gaussian",
                EntryLaw::Rademacher => "rademacher",
                EntryLaw::Uniform => "uniform",
            }
        );
        s.push_str("\n[time]\n");
        let _ = writeln!(s, "t-min = {}", fmt_f(self.t_min));
        let _ = writeln!(s, "t-max = {}", fmt_f(self.t_max));
        let _ = writeln!(s, "points = {}", self.points);
        s.push_str("\n[state]\n");
        match &self.state {
            StateConfig::Eigenprojector { index } => {
                s.push_str("kind = eigenprojector\n");
                if let Some(i) = index {
                    let _ = writeln!(s, "index = {i}");
                }
            }
            StateConfig::EvenEigenprojector => s.push_str("kind = even-eigenprojector\n"),
            StateConfig::UniformMixture => s.push_str("kind = uniform-mixture\n"),
            StateConfig::Gaussian { width } => {
                let _ = writeln!(s, "kind = gaussian\nwidth = {}", fmt_f(*width));
            }
        }
        s.push_str("\n[observable]\n");
        match &self.observable {
            ObservableConfig::OddSublattice => s.push_str("kind = odd-sublattice\n"),
            ObservableConfig::EnergyPolynomial { coefficients } => {
                s.push_str("kind = energy-polynomial\n");
                let list: Vec<String> = coefficients.iter().map(|c| fmt_f(*c)).collect();
                let _ = writeln!(s, "coefficients = {}", list.join(" "));
            }
            ObservableConfig::RandomHermitian { seed } => {
                let _ = writeln!(s, "kind = random-hermitian\nseed = {seed}");
            }
            ObservableConfig::SectorComplement { sector } => {
                let _ = writeln!(s, "kind = sector-complement\nsector = {sector}");
            }
        }
        s.push_str("\n[run]\n");
        let _ = writeln!(s, "realizations = {}", self.realizations);
        let _ = writeln!(s, "master-seed = {}", self.master_seed);
        let _ = writeln!(
            s,
            "rho0-source = {}",
            match self.rho0_source {
                Rho0Source::Analytic => "analytic",
                Rho0Source::Estimated => "estimated",
            }
        );
        let _ = writeln!(s, "pretherm-threshold = {}", fmt_f(self.pretherm_threshold));
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {out}");
        }
        s.push_str("\n[lawcheck]\n");
        let sizes: Vec<String> = self.lawcheck_sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "sizes = {}", sizes.join(" "));
        let _ = writeln!(s, "seeds-per-size = {}", self.lawcheck_seeds);
        let _ = writeln!(s, "im-z = {}", fmt_f(self.lawcheck_im_z));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            if current.is_empty() {
                bail!("line {}: key outside any [section]", lineno + 1);
            }
            let prev = sections
                .get_mut(&current)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
            if prev.is_some() {
                bail!("duplicate key '{}' in [{}]", key.trim(), current);
            }
        }

        const KNOWN: &[(&str, &[&str])] = &[
            ("model", &["kind", "n", "l", "path"]),
            ("window", &["e0", "delta", "kappa0", "c0"]),
            ("perturbation", &["lambda", "symmetry", "entry-law"]),
            ("time", &["t-min", "t-max", "points"]),
            ("state", &["kind", "index", "width"]),
            ("observable", &["kind", "coefficients", "seed", "sector"]),
            (
                "run",
                &[
                    "realizations",
                    "master-seed",
                    "rho0-source",
                    "pretherm-threshold",
                    "out",
                ],
            ),
            ("lawcheck", &["sizes", "seeds-per-size", "im-z"]),
        ];
        for (sec, keys) in &sections {
            let allowed = KNOWN
                .iter()
                .find(|(name, _)| name == sec)
                .ok_or_else(|| anyhow!("unknown section [{sec}]"))?
                .1;
            for key in keys.keys() {
                if !allowed.contains(&key.as_str()) {
                    bail!("unknown key '{key}' in section [{sec}]");
                }
            }
        }

        let get = |sec: &str, key: &str| -> Option<String> {
            sections.get(sec).and_then(|m| m.get(key)).cloned()
        };
        let req = |sec: &str, key: &str| -> Result<String> {
            get(sec, key).ok_or_else(|| anyhow!("missing key '{key}' in section [{sec}]"))
        };
        let parse_f = |sec: &str, key: &str| -> Result<f64> {
            req(sec, key)?
                .parse::<f64>()
                .with_context(|| format!("[{sec}] {key} must be a number"))
        };
        let parse_u = |sec: &str, key: &str| -> Result<usize> {
            req(sec, key)?
                .parse::<usize>()
                .with_context(|| format!("[{sec}] {key} must be a nonnegative integer"))
        };

        let model = match req("model", "kind")?.as_str() {
            "nnn" => ModelConfig::Nnn {
                n: parse_u("model", "n")?,
            },
            "free-fermion" => ModelConfig::FreeFermion {
                l: parse_u("model", "l")?,
            },
            "custom-file" => ModelConfig::CustomFile {
                path: req("model", "path")?,
            },
            other => bail!("unknown model kind '{other}'"),
        };
        let symmetry = match req("perturbation", "symmetry")?.as_str() {
            "complex-hermitian" => SymmetryClass::ComplexHermitian,
            "real-symmetric" => SymmetryClass::RealSymmetric,
            other => bail!("unknown symmetry class '{other}'"),
        };
        let entry_law = match req("perturbation", "entry-law")?.as_str() {
            "gaussian" => EntryLaw::Gaussian,
            "rademacher" => EntryLaw::Rademacher,
            "uniform" => EntryLaw::Uniform,
            other => bail!("unknown entry law '{other}'"),
        };
        let state = match req("state", "kind")?.as_str() {
            "eigenprojector" => StateConfig::Eigenprojector {
                index: match get("state", "index") {
                    Some(v) => Some(v.parse::<usize>().context("[state] index")?),
                    None => None,
                },
            },
            "even-eigenprojector" => StateConfig::EvenEigenprojector,
            "uniform-mixture" => StateConfig::UniformMixture,
            "gaussian" => StateConfig::Gaussian {
                width: parse_f("state", "width")?,
            },
            other => bail!("unknown state kind '{other}'"),
        };
        let observable = match req("observable", "kind")?.as_str() {
            "odd-sublattice" => ObservableConfig::OddSublattice,
            "energy-polynomial" => {
                let coeffs: Vec<f64> = req("observable", "coefficients")?
                    .split_whitespace()
                    .map(|v| v.parse::<f64>().context("[observable] coefficients"))
                    .collect::<Result<_>>()?;
                if coeffs.is_empty() {
                    bail!("energy-polynomial needs at least one coefficient");
                }
                ObservableConfig::EnergyPolynomial {
                    coefficients: coeffs,
                }
            }
            "random-hermitian" => ObservableConfig::RandomHermitian {
                seed: req("observable", "seed")?.parse().context("[observable] seed")?,
            },
            "sector-complement" => ObservableConfig::SectorComplement {
                sector: parse_u("observable", "sector")?,
            },
            other => bail!("unknown observable kind '{other}'"),
        };
        let rho0_source = match req("run", "rho0-source")?.as_str() {
            "analytic" => Rho0Source::Analytic,
            "estimated" => Rho0Source::Estimated,
            other => bail!("unknown rho0 source '{other}'"),
        };
        let defaults = ExperimentConfig::default();
        let lawcheck_sizes = match get("lawcheck", "sizes") {
            Some(v) => v
                .split_whitespace()
                .map(|x| x.parse::<usize>().context("[lawcheck] sizes"))
                .collect::<Result<_>>()?,
            None => defaults.lawcheck_sizes.clone(),
        };
        Ok(ExperimentConfig {
            model,
            e0: parse_f("window", "e0")?,
            delta: parse_f("window", "delta")?,
            kappa0: parse_f("window", "kappa0")?,
            c0: parse_f("window", "c0")?,
            lambda: parse_f("perturbation", "lambda")?,
            symmetry,
            entry_law,
            t_min: parse_f("time", "t-min")?,
            t_max: parse_f("time", "t-max")?,
            points: parse_u("time", "points")?,
            state,
            observable,
            realizations: parse_u("run", "realizations")?,
            master_seed: req("run", "master-seed")?.parse().context("[run] master-seed")?,
            rho0_source,
            pretherm_threshold: match get("run", "pretherm-threshold") {
                Some(v) => v.parse::<f64>().context("[run] pretherm-threshold")?,
                None => defaults.pretherm_threshold,
            },
            out: get("run", "out"),
            lawcheck_sizes,
            lawcheck_seeds: match get("lawcheck", "seeds-per-size") {
                Some(v) => v.parse::<usize>().context("[lawcheck] seeds-per-size")?,
                None => defaults.lawcheck_seeds,
            },
            lawcheck_im_z: match get("lawcheck", "im-z") {
                Some(v) => v.parse::<f64>().context("[lawcheck] im-z")?,
                None => defaults.lawcheck_im_z,
            },
        })
    }
}
