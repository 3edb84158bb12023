use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use ptlab_cli::config::ExperimentConfig;
use ptlab_cli::experiments;
use ptlab_cli::svg::{emit_plot, PlotSeries, PlotSpec};

#[derive(Parser)]
#[command(
    name = "ptlab",
    about = "Relaxation experiments for weakly perturbed Hamiltonians",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-plateau relaxation experiment from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write plot.svg.
        #[arg(long)]
        svg: bool,
        /// Override the number of realizations.
        #[arg(long)]
        realizations: Option<usize>,
        /// Write one CSV per realization.
        #[arg(long)]
        per_seed: bool,
    },
    /// Residual scaling study of the two-resolvent deterministic law.
    Lawcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the self-consistent resolvent solver over a z grid (CSV on stdout).
    MdeProbe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        re_min: f64,
        #[arg(long, default_value_t = 3.5)]
        re_max: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Comma-separated imaginary parts of the probe points.
        #[arg(long, default_value = "0.05,0.2,1.0")]
        im: String,
    },
    /// Density-of-states estimate and admissibility report (JSON on stdout).
    Dos {
        #[arg(long)]
        config: PathBuf,
    },
    /// Plot columns of a CSV file as an SVG with a log-scaled x axis.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// Column used for x values.
        #[arg(long, default_value = "T")]
        x: String,
        /// Comma-separated columns plotted as polylines.
        #[arg(long, default_value = "mean")]
        y: String,
        /// Comma-separated y-values of horizontal guide lines.
        #[arg(long)]
        guides: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(
    path: &PathBuf,
    seed: Option<u64>,
    out: Option<&PathBuf>,
    realizations: Option<usize>,
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.out = Some(o.display().to_string());
    }
    if let Some(r) = realizations {
        cfg.realizations = r;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("PTLB_THREADS") {
        let threads: usize = threads.parse().context("PTLB_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            svg,
            realizations,
            per_seed,
        } => {
            let cfg = load_config(&config, seed, out.as_ref(), realizations)?;
            let run = experiments::run_prethermalization(&cfg, svg, per_seed)?;
            println!(
                "rho0 = {:.6} ({}), tilde_p = {:.6}, mc = {:.6}",
                run.rho0_used, run.rho0_source_used, run.plateau.tilde_p, run.plateau.mc
            );
            println!(
                "early plateau = {:.6}, late plateau = {:.6}, pre value = {:.6}",
                run.plateau.early_plateau, run.plateau.late_plateau, run.plateau.pre_value
            );
            if run.plateau.no_relaxation {
                println!("no relaxation: perturbed evolution matches the unperturbed one");
            }
            println!(
                "gap |pre - terminal| = {:.6} (threshold {}): {}",
                run.plateau.gap,
                run.plateau.threshold,
                if run.plateau.pretherm_pass { "pass" } else { "fail" }
            );
            for p in &run.written {
                println!("wrote {}", p.display());
            }
            if !run.plateau.no_relaxation && !run.plateau.pretherm_pass {
                std::process::exit(1);
            }
        }
        Command::Lawcheck { config, seed, out } => {
            let cfg = load_config(&config, seed, out.as_ref(), None)?;
            let run = experiments::run_lawcheck(&cfg)?;
            match (&run.summary.slope, run.summary.degenerate) {
                (_, true) => println!("degenerate run: residuals at solver precision"),
                (Some(slope), _) => println!(
                    "fitted slope = {:.4} (95% CI [{:.4}, {:.4}])",
                    slope,
                    run.summary.slope_ci.unwrap().0,
                    run.summary.slope_ci.unwrap().1
                ),
                (None, _) => println!("no slope fit (need >= 3 sizes and >= 20 seeds)"),
            }
            for (n, q) in &run.summary.q90 {
                println!("N = {n}: q90 residual = {q:.6e}");
            }
            println!(
                "fixed-K domination surrogate: {}",
                if run.summary.surrogate_pass { "pass" } else { "fail" }
            );
            for p in &run.written {
                println!("wrote {}", p.display());
            }
            if !run.summary.surrogate_pass {
                std::process::exit(1);
            }
        }
        Command::MdeProbe {
            config,
            re_min,
            re_max,
            points,
            im,
        } => {
            let cfg = load_config(&config, None, None, None)?;
            let ims: Vec<f64> = im
                .split(',')
                .map(|v| v.trim().parse::<f64>().context("bad --im value"))
                .collect::<Result<_>>()?;
            print!("{}", experiments::mde_probe_csv(&cfg, re_min, re_max, points, &ims)?);
        }
        Command::Dos { config } => {
            let cfg = load_config(&config, None, None, None)?;
            println!("{}", experiments::dos_report_json(&cfg)?);
        }
        Command::Plot {
            csv,
            x,
            y,
            guides,
            out,
        } => {
            let text = std::fs::read_to_string(&csv)
                .with_context(|| format!("reading {}", csv.display()))?;
            let mut lines = text.lines();
            let header: Vec<&str> = lines
                .next()
                .ok_or_else(|| anyhow::anyhow!("empty CSV"))?
                .split(',')
                .collect();
            let xcol = header
                .iter()
                .position(|h| *h == x)
                .ok_or_else(|| anyhow::anyhow!("missing column '{x}'"))?;
            let ycols: Vec<(usize, String)> = y
                .split(',')
                .map(|name| {
                    header
                        .iter()
                        .position(|h| *h == name)
                        .map(|i| (i, name.to_string()))
                        .ok_or_else(|| anyhow::anyhow!("missing column '{name}'"))
                })
                .collect::<Result<_>>()?;
            let mut xs = Vec::new();
            let mut ys: Vec<Vec<f64>> = vec![Vec::new(); ycols.len()];
            for line in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != header.len() {
                    bail!("ragged CSV row: {line}");
                }
                xs.push(fields[xcol].parse::<f64>()?);
                for (slot, (col, _)) in ys.iter_mut().zip(ycols.iter()) {
                    slot.push(fields[*col].parse::<f64>()?);
                }
            }
            let colors = ["crimson", "steelblue", "seagreen", "darkorange", "purple"];
            let series: Vec<PlotSeries> = ycols
                .iter()
                .enumerate()
                .map(|(i, (_, name))| PlotSeries {
                    label: name,
                    x: &xs,
                    y: &ys[i],
                    color: colors[i % colors.len()],
                })
                .collect();
            let guide_vals: Vec<f64> = match guides {
                Some(g) => g
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().context("bad --guides value"))
                    .collect::<Result<_>>()?,
                None => Vec::new(),
            };
            let svg = emit_plot(
                &series,
                &PlotSpec {
                    title: csv.file_name().and_then(|s| s.to_str()).unwrap_or("plot"),
                    x_label: &x,
                    y_label: &y,
                    guides: &guide_vals,
                },
            );
            std::fs::write(&out, svg.as_bytes())?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
