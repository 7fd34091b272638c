//! `qpq attack-rm`: the basis-reconstruction attack, transcripts, verdict.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use qpq::attack_rm::{run_rank_attack_with, QueryTranscript, Strategy};
use qpq::gf2::binomial;
use qpq::key::{sim_rng, SimParams};
use qpq::BitVec;

use crate::config::{resolve_out_dir, write_file, write_manifest, FileConfig};

#[derive(Args)]
pub struct AttackRmArgs {
    /// Sub-key length M.
    #[arg(long)]
    m: Option<usize>,
    /// Parity subset size k.
    #[arg(long)]
    k: Option<usize>,
    /// Sub-key count r.
    #[arg(long)]
    r: Option<usize>,
    /// Database size N (default: C(M,k)).
    #[arg(long)]
    n: Option<usize>,
    /// Alice's per-bit knowledge probability.
    #[arg(long)]
    p: Option<f64>,
    /// Per-known-bit error probability.
    #[arg(long)]
    e: Option<f64>,
    /// Query strategy: greedy (harvest every known bit) or literal
    /// (one basis target per query).
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn transcript_log(transcripts: &[QueryTranscript]) -> String {
    let mut text = String::new();
    for tr in transcripts {
        let known: Vec<String> = tr
            .known
            .iter()
            .map(|&(pos, v)| format!("{pos}:{}", u8::from(v)))
            .collect();
        text.push_str(&format!(
            "round={} shift={} cipher={} known={}\n",
            tr.round,
            tr.announced_shift,
            tr.ciphertext.to_hex(),
            known.join(",")
        ));
    }
    text
}

pub fn run(args: AttackRmArgs) -> Result<()> {
    let config = FileConfig::load(args.config.as_deref())?;
    let out = resolve_out_dir(args.out, &config)?;
    let m = config.resolve(args.m, "m", 8)?;
    let k = config.resolve(args.k, "k", 3)?;
    let max_n = binomial(m as u64, k as u64).min(usize::MAX as u128) as usize;
    let params = SimParams {
        m,
        k,
        r: config.resolve(args.r, "r", 2)?,
        n: config.resolve(args.n, "n", max_n)?,
        p: config.resolve(args.p, "p", 0.25)?,
        e: config.resolve(args.e, "e", 0.0)?,
        seed: config.resolve(args.seed, "seed", 0)?,
        ..SimParams::default()
    };
    params.validate_rm_n()?;
    let strategy = match config
        .resolve(args.strategy, "strategy", "greedy".to_string())?
        .as_str()
    {
        "greedy" => Strategy::Greedy,
        "literal" => Strategy::Literal,
        other => bail!("unknown strategy {other:?}; expected greedy or literal"),
    };

    let mut rng = sim_rng(params.seed);
    let database = BitVec::random(params.n, &mut rng);
    let outcome = run_rank_attack_with(&params, &database, &mut rng, strategy)?;

    let mismatches = (&outcome.recovered ^ &database).count_ones();
    let exact = mismatches == 0;
    let bound = params.r * params.m;

    write_file(&out, "database.txt", &format!("{database}\n"))?;
    write_file(&out, "recovered.txt", &format!("{}\n", outcome.recovered))?;
    write_file(
        &out,
        "transcript.log",
        &transcript_log(&outcome.transcripts),
    )?;

    let mut verdict = format!(
        "recovered_exact={exact}\nmismatches={mismatches}\nqueries_used={}\n\
         basis_size={}\nbound_rm={bound}\nretries={}\ninconsistencies={}\n",
        outcome.queries_used, outcome.basis_size, outcome.retries, outcome.inconsistencies
    );
    if params.e > 0.0 {
        verdict.push_str("warning=channel errors present; recovery is best-effort\n");
    }
    write_file(&out, "verdict.txt", &verdict)?;

    write_manifest(
        &out,
        "attack-rm",
        &[
            ("m", params.m.to_string()),
            ("k", params.k.to_string()),
            ("r", params.r.to_string()),
            ("n", params.n.to_string()),
            ("p", params.p.to_string()),
            ("e", params.e.to_string()),
            ("seed", params.seed.to_string()),
            (
                "strategy",
                match strategy {
                    Strategy::Greedy => "greedy".into(),
                    Strategy::Literal => "literal".into(),
                },
            ),
        ],
    )?;

    if exact {
        println!(
            "attack-rm: recovered exact, queries {} <= rank {} <= rM {bound}",
            outcome.queries_used, outcome.basis_size
        );
    } else {
        println!(
            "attack-rm: {} mismatches (e = {}), queries {}",
            mismatches, params.e, outcome.queries_used
        );
    }
    Ok(())
}
