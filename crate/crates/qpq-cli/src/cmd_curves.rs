//! `qpq curves`: error-rate comparison curves and per-query attack traces.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use qpq::analysis::fig5_curves;
use qpq::attack_nn::run_aks_attack;
use qpq::key::{run_rng, SimParams};

use crate::config::{resolve_out_dir, write_file, write_manifest, FileConfig};

#[derive(Args)]
pub struct CurvesArgs {
    /// Which figure: 2 (H and N_E per query) or 5 (error-rate comparison).
    #[arg(long)]
    fig: u32,
    /// Figure 5: largest channel error rate on the grid.
    #[arg(long)]
    e_max: Option<f64>,
    /// Figure 5: number of grid steps (emits steps + 1 rows).
    #[arg(long)]
    steps: Option<usize>,
    /// Figure 5: shift-addition multiplicity.
    #[arg(long)]
    g: Option<usize>,
    /// Figure 2: database size N.
    #[arg(long)]
    n: Option<usize>,
    /// Figure 2: parity window k.
    #[arg(long)]
    k: Option<usize>,
    /// Figure 2: knowledge probability p.
    #[arg(long)]
    p: Option<f64>,
    /// Figure 2: attack runs to trace.
    #[arg(long)]
    runs: Option<usize>,
    /// Figure 2: re-emit (n_q, H, N_E) from a stored attack trace CSV
    /// instead of running a fresh attack.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: CurvesArgs) -> Result<()> {
    let config = FileConfig::load(args.config.as_deref())?;
    let out = resolve_out_dir(args.out, &config)?;
    let seed = config.resolve(args.seed, "seed", 0)?;

    match args.fig {
        5 => {
            let e_max = config.resolve(args.e_max, "e_max", 0.5)?;
            let steps = config.resolve(args.steps, "steps", 50)?;
            let g = config.resolve(args.g, "g", 6)?;
            anyhow::ensure!(steps >= 1 && e_max > 0.0 && e_max <= 1.0, "bad grid");
            let grid: Vec<f64> = (0..=steps)
                .map(|i| e_max * i as f64 / steps as f64)
                .collect();
            let mut csv = String::from("e,p_e,p_dprime_e\n");
            for (e, pe, pde) in fig5_curves(&grid, g as u32) {
                csv.push_str(&format!("{e:.6},{pe:.6},{pde:.6}\n"));
            }
            write_file(&out, "fig5.csv", &csv)?;
            write_manifest(
                &out,
                "curves",
                &[
                    ("fig", "5".into()),
                    ("e_max", format!("{e_max}")),
                    ("steps", steps.to_string()),
                    ("g", g.to_string()),
                ],
            )?;
            println!("fig5.csv: {} rows", steps + 1);
        }
        2 => {
            let mut csv = String::from("run,n_q,H,N_E\n");
            let manifest_source;
            if let Some(path) = &args.trace {
                // Strip a stored attack-nn trace down to the figure columns.
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let mut lines = text.lines();
                let header = lines.next().unwrap_or_default();
                anyhow::ensure!(
                    header.starts_with("n_q,H,N_E"),
                    "{} does not look like an attack-nn trace",
                    path.display()
                );
                for line in lines {
                    let mut cells = line.split(',');
                    let (Some(n_q), Some(h), Some(n_e)) =
                        (cells.next(), cells.next(), cells.next())
                    else {
                        bail!("short row in {}", path.display());
                    };
                    csv.push_str(&format!("0,{n_q},{h},{n_e}\n"));
                }
                manifest_source = format!("trace:{}", path.display());
            } else {
                let params = SimParams {
                    n: config.resolve(args.n, "n", 1024)?,
                    k: config.resolve(args.k, "k", 4)?,
                    p: config.resolve(args.p, "p", 0.25)?,
                    e: 0.0,
                    seed,
                    ..SimParams::default()
                };
                params.validate_n_n()?;
                let runs = config.resolve(args.runs, "runs", 1)?;
                for run in 0..runs as u64 {
                    let outcome = run_aks_attack(&params, &mut run_rng(seed, run))?;
                    for row in &outcome.trace {
                        csv.push_str(&format!(
                            "{run},{},{},{}\n",
                            row.n_q, row.h, row.explicit_known
                        ));
                    }
                }
                manifest_source = format!(
                    "simulated:n={},k={},p={},runs={runs}",
                    params.n, params.k, params.p
                );
            }
            write_file(&out, "fig2.csv", &csv)?;
            write_manifest(
                &out,
                "curves",
                &[
                    ("fig", "2".into()),
                    ("source", manifest_source),
                    ("seed", seed.to_string()),
                ],
            )?;
            println!("fig2.csv written");
        }
        other => bail!("unknown figure {other}; expected 2 or 5"),
    }
    Ok(())
}
