//! `qpq attack-nn`: the almost-known-set attack, with traces and snapshots.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use qpq::attack_nn::{run_aks_attack_observed, AksOptions, AksOutcome, TraceRow};
use qpq::key::{run_rng, SimParams};

use crate::config::{
    grid_dims, parse_grid, resolve_out_dir, write_file, write_manifest, FileConfig,
};
use crate::ppm::render_grid;

#[derive(Args)]
pub struct AttackNnArgs {
    /// Database size N.
    #[arg(long)]
    n: Option<usize>,
    /// Parity window k.
    #[arg(long)]
    k: Option<usize>,
    /// Alice's per-bit knowledge probability.
    #[arg(long)]
    p: Option<f64>,
    /// Per-known-bit error probability.
    #[arg(long)]
    e: Option<f64>,
    /// Independent attack runs.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated query counts at which to snapshot the first run's
    /// database state as a pixmap.
    #[arg(long)]
    snapshot_at: Option<String>,
    /// Snapshot grid as WxH (default: the most square factorization of N).
    #[arg(long)]
    grid: Option<String>,
    /// Approximate the shift search with this many random candidates per
    /// query instead of trying all N shifts.
    #[arg(long)]
    sample_shifts: Option<usize>,
    /// Drop the leaked parity relations (kN–N-style knowledge baseline).
    #[arg(long)]
    no_relations: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn trace_csv(trace: &[TraceRow]) -> String {
    let mut text = String::from("n_q,H,N_E,n_aks,n_u,conflicts\n");
    for row in trace {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.n_q, row.h, row.explicit_known, row.aks, row.unknown_singletons, row.conflicts
        ));
    }
    text
}

pub fn run(args: AttackNnArgs) -> Result<()> {
    let config = FileConfig::load(args.config.as_deref())?;
    let out = resolve_out_dir(args.out, &config)?;
    let params = SimParams {
        n: config.resolve(args.n, "n", 225)?,
        k: config.resolve(args.k, "k", 3)?,
        p: config.resolve(args.p, "p", 0.25)?,
        e: config.resolve(args.e, "e", 0.0)?,
        seed: config.resolve(args.seed, "seed", 0)?,
        ..SimParams::default()
    };
    params.validate_n_n()?;
    let runs = config.resolve(args.runs, "runs", 10)?;
    anyhow::ensure!(runs >= 1, "need at least one run");
    let sample_shifts = config.resolve_opt(args.sample_shifts, "sample_shifts")?;
    let options = AksOptions {
        suppress_relations: args.no_relations,
        sampled_shifts: sample_shifts,
    };
    let snapshots: BTreeSet<u32> = match config.resolve_opt(args.snapshot_at, "snapshot_at")? {
        None => BTreeSet::new(),
        Some(raw) => raw
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .context("parsing --snapshot-at")?,
    };
    let (width, height) = match config.resolve_opt(args.grid, "grid")? {
        Some(raw) => parse_grid(&raw, params.n)?,
        None => grid_dims(params.n),
    };

    let mut outcomes: Vec<AksOutcome> = Vec::with_capacity(runs);
    for run in 0..runs as u64 {
        let mut rng = run_rng(params.seed, run);
        let mut pending: Vec<(u32, String)> = Vec::new();
        let outcome = run_aks_attack_observed(&params, &mut rng, &options, |n_q, state| {
            // Snapshots come from the first run only.
            if run == 0 && snapshots.contains(&n_q) {
                let classes = state.snapshot_grid(width, height);
                pending.push((n_q, render_grid(&classes, width, height)));
            }
        })?;
        for (n_q, image) in pending {
            write_file(&out, &format!("snap_q{n_q}.ppm"), &image)?;
        }
        write_file(
            &out,
            &format!("trace_run{run}.csv"),
            &trace_csv(&outcome.trace),
        )?;
        outcomes.push(outcome);
    }

    let mut dqa_csv = String::from("run,dqa,conflicts\n");
    for (run, outcome) in outcomes.iter().enumerate() {
        dqa_csv.push_str(&format!("{run},{},{}\n", outcome.dqa, outcome.conflicts));
    }
    write_file(&out, "dqa.csv", &dqa_csv)?;

    let dqas: Vec<f64> = outcomes.iter().map(|o| o.dqa as f64).collect();
    let mean = dqas.iter().sum::<f64>() / runs as f64;
    let sd = if runs > 1 {
        (dqas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    let summary = format!(
        "n,k,p,runs,dqa_mean,dqa_sd\n{},{},{},{},{mean:.2},{sd:.2}\n",
        params.n, params.k, params.p, runs
    );
    write_file(&out, "summary.csv", &summary)?;

    let shift_search = match sample_shifts {
        None => "exhaustive".to_string(),
        Some(c) => format!("sampled(c={c},approximation)"),
    };
    write_manifest(
        &out,
        "attack-nn",
        &[
            ("n", params.n.to_string()),
            ("k", params.k.to_string()),
            ("p", params.p.to_string()),
            ("e", params.e.to_string()),
            ("seed", params.seed.to_string()),
            ("runs", runs.to_string()),
            ("relations", (!args.no_relations).to_string()),
            ("shift_search", shift_search),
            ("grid", format!("{width}x{height}")),
            (
                "snapshot_at",
                snapshots
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ],
    )?;
    println!("attack-nn: {runs} runs, mean DQA {mean:.2} (sd {sd:.2})");
    Ok(())
}
