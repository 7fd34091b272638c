//! Command-line front end for the oblivious-key post-processing lab.

mod cmd_attack_nn;
mod cmd_attack_rm;
mod cmd_curves;
mod cmd_dilute;
mod cmd_tables;
mod config;
mod ppm;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "qpq",
    version,
    about = "Oblivious-key post-processing lab: dilution, attacks, and error-corrected pipelines",
    after_help = "Every command is deterministic for a fixed seed: CSVs, key files, and \
                  images are byte-identical across reruns. Outputs land in --out \
                  (default: $QPQ_OUT_DIR, else ./qpq-out) along with a manifest.txt \
                  echoing the resolved configuration."
)]
enum Cli {
    /// Run one dilution method and write the key files it produces.
    Dilute(cmd_dilute::DiluteArgs),
    /// Run the multi-query almost-known-set attack on the N–N dilution.
    AttackNn(cmd_attack_nn::AttackNnArgs),
    /// Run the basis-reconstruction attack on the rM–N dilution.
    AttackRm(cmd_attack_rm::AttackRmArgs),
    /// Emit the summary tables (death queries, survivors, method comparison).
    Tables(cmd_tables::TablesArgs),
    /// Emit per-query traces and the error-rate comparison curves.
    Curves(cmd_curves::CurvesArgs),
}

fn main() {
    let result = match Cli::parse() {
        Cli::Dilute(args) => cmd_dilute::run(args),
        Cli::AttackNn(args) => cmd_attack_nn::run(args),
        Cli::AttackRm(args) => cmd_attack_rm::run(args),
        Cli::Tables(args) => cmd_tables::run(args),
        Cli::Curves(args) => cmd_curves::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
