//! `qpq dilute`: run one dilution method and write the resulting keys.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use qpq::dilution::{dilute_kn_n, dilute_n_n, dilute_rm_n, ParityRelation};
use qpq::key::{generate_rok, sim_rng, SimParams, TriStateKey};
use qpq::protocol::{gkn_post_process, records_to_csv, EccOptions};

use crate::config::{load_code, resolve_out_dir, write_file, write_manifest, FileConfig};

#[derive(Args)]
pub struct DiluteArgs {
    /// Dilution method: kn-n, n-n, rm-n, or gkn-n (the error-corrected
    /// pipeline).
    #[arg(long)]
    method: String,
    /// Database size N (the FOK length).
    #[arg(long)]
    n: Option<usize>,
    /// Parity group size k.
    #[arg(long)]
    k: Option<usize>,
    /// Alice's per-bit knowledge probability.
    #[arg(long)]
    p: Option<f64>,
    /// Per-known-bit error probability.
    #[arg(long)]
    e: Option<f64>,
    /// Sub-key length M (rm-n only).
    #[arg(long)]
    m: Option<usize>,
    /// Sub-key count r (rm-n only).
    #[arg(long)]
    r: Option<usize>,
    /// Comma-separated per-sub-key shifts (rm-n only; random when omitted).
    #[arg(long)]
    shifts: Option<String>,
    /// Middle-key multiplicity (gkn-n only).
    #[arg(long)]
    g: Option<usize>,
    /// Run the pipeline's dishonest receiver instead of the honest one
    /// (gkn-n only).
    #[arg(long)]
    dishonest: bool,
    /// Generator-matrix file overriding the built-in \[7,4,3\] code
    /// (gkn-n only).
    #[arg(long)]
    code_file: Option<PathBuf>,
    /// Read the raw key from a two-line `bob=`/`alice=` file instead of
    /// generating one (kn-n and n-n only).
    #[arg(long)]
    rok_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Config file with key=value lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn relations_csv(relations: &[ParityRelation]) -> String {
    let mut text = String::from("i,j,parity\n");
    for rel in relations {
        text.push_str(&format!("{},{},{}\n", rel.i, rel.j, u8::from(rel.parity)));
    }
    text
}

fn load_rok_file(path: &PathBuf, expected_len: usize) -> Result<TriStateKey> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let key: TriStateKey = text
        .parse()
        .map_err(|e| anyhow::anyhow!("parsing {}: {e}", path.display()))?;
    if key.len() != expected_len {
        bail!(
            "raw key in {} has {} bits, expected {expected_len}",
            path.display(),
            key.len()
        );
    }
    Ok(key)
}

pub fn run(args: DiluteArgs) -> Result<()> {
    let config = FileConfig::load(args.config.as_deref())?;
    let out = resolve_out_dir(args.out, &config)?;
    let mut params = SimParams {
        n: config.resolve(args.n, "n", 12)?,
        k: config.resolve(args.k, "k", 2)?,
        p: config.resolve(args.p, "p", 0.25)?,
        e: config.resolve(args.e, "e", 0.0)?,
        m: config.resolve(args.m, "m", 4)?,
        r: config.resolve(args.r, "r", 2)?,
        g: config.resolve(args.g, "g", 2)?,
        seed: config.resolve(args.seed, "seed", 0)?,
    };
    let mut rng = sim_rng(params.seed);
    let mut manifest: Vec<(&str, String)> = vec![("method", args.method.clone())];
    // Every arm extends the manifest with the settings it actually used.
    let base_entries = |p: &SimParams| {
        vec![
            ("n", p.n.to_string()),
            ("k", p.k.to_string()),
            ("p", p.p.to_string()),
            ("e", p.e.to_string()),
            ("seed", p.seed.to_string()),
        ]
    };

    match args.method.as_str() {
        "kn-n" => {
            params.validate_kn_n()?;
            let rok = match &args.rok_file {
                None => generate_rok(params.k * params.n, params.p, params.e, &mut rng),
                Some(path) => load_rok_file(path, params.k * params.n)?,
            };
            let fok = dilute_kn_n(&rok, params.n, params.k);
            write_file(&out, "rok.txt", &rok.to_string())?;
            write_file(&out, "fok.txt", &fok.to_string())?;
            manifest.extend(base_entries(&params));
            println!(
                "kn-n: {} ROK bits -> {} FOK bits, alice knows {}",
                rok.len(),
                fok.len(),
                fok.known_count()
            );
        }
        "n-n" => {
            params.validate_n_n()?;
            let rok = match &args.rok_file {
                None => generate_rok(params.n, params.p, params.e, &mut rng),
                Some(path) => load_rok_file(path, params.n)?,
            };
            let (fok, relations) = dilute_n_n(&rok, params.k);
            write_file(&out, "rok.txt", &rok.to_string())?;
            write_file(&out, "fok.txt", &fok.to_string())?;
            write_file(&out, "relations.csv", &relations_csv(&relations))?;
            manifest.extend(base_entries(&params));
            println!(
                "n-n: {} FOK bits, alice knows {}, {} parity relations leaked",
                fok.len(),
                fok.known_count(),
                relations.len()
            );
        }
        "rm-n" => {
            params.validate_rm_n()?;
            if args.rok_file.is_some() {
                bail!("--rok-file is not supported for rm-n (it needs r separate sub-keys)");
            }
            let subs: Vec<TriStateKey> = (0..params.r)
                .map(|_| generate_rok(params.m, params.p, params.e, &mut rng))
                .collect();
            let shifts: Vec<usize> = match config.resolve_opt(args.shifts, "shifts")? {
                Some(raw) => {
                    let parsed: Result<Vec<usize>, _> =
                        raw.split(',').map(|s| s.trim().parse()).collect();
                    let shifts = parsed.context("parsing --shifts")?;
                    if shifts.len() != params.r {
                        bail!("need {} shifts, got {}", params.r, shifts.len());
                    }
                    if let Some(bad) = shifts.iter().find(|&&s| s >= params.n) {
                        bail!("shift {bad} out of range 0..{}", params.n);
                    }
                    shifts
                }
                None => {
                    use rand::Rng;
                    (0..params.r)
                        .map(|_| rng.random_range(0..params.n))
                        .collect()
                }
            };
            let fok = dilute_rm_n(&subs, &shifts, params.k, params.n);
            let mut subs_text = String::new();
            for sub in &subs {
                subs_text.push_str(&sub.to_string());
            }
            write_file(&out, "subs.txt", &subs_text)?;
            write_file(&out, "fok.txt", &fok.to_string())?;
            manifest.extend(base_entries(&params));
            manifest.push(("m", params.m.to_string()));
            manifest.push(("r", params.r.to_string()));
            manifest.push((
                "shifts",
                shifts
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ));
            println!(
                "rm-n: {} sub-keys of {} bits -> {} FOK bits, alice knows {}",
                params.r,
                params.m,
                fok.len(),
                fok.known_count()
            );
        }
        "gkn-n" => {
            if args.rok_file.is_some() {
                bail!("--rok-file is not supported for gkn-n (it draws g fresh raw keys)");
            }
            let code_path = config.resolve_opt(args.code_file, "code_file")?;
            let spec = load_code(code_path.as_ref())?;
            // The coded round fixes the group size to the code length.
            params.k = config.resolve(args.k, "k", spec.n())?;
            params.validate_gkn_n()?;
            anyhow::ensure!(
                params.k == spec.n(),
                "gkn-n groups k = {} raw bits per coded round, but the code length is {}",
                params.k,
                spec.n()
            );
            let options = EccOptions {
                dishonest: args.dishonest,
                ..EccOptions::default()
            };
            let result = gkn_post_process(&params, &spec, &options, &mut rng);
            for (i, mok) in result.moks.iter().enumerate() {
                write_file(&out, &format!("mok{i}.txt"), &mok.to_string())?;
            }
            write_file(&out, "fok.txt", &result.fok.to_string())?;
            // Audit records for the first middle key, regenerated from the
            // same stream position the pipeline used.
            let mut audit_rng = sim_rng(params.seed);
            let rok = generate_rok(spec.n() * params.n, params.p, params.e, &mut audit_rng);
            let (_, records) = qpq::protocol::build_mok(&rok, &spec, &options, &mut audit_rng);
            write_file(&out, "records_mok0.csv", &records_to_csv(&records))?;
            manifest.extend(base_entries(&params));
            manifest.push(("g", params.g.to_string()));
            manifest.push(("dishonest", args.dishonest.to_string()));
            manifest.push((
                "shifts",
                result
                    .shifts
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            ));
            println!(
                "gkn-n: {} middle keys of {} bits -> FOK, alice knows {}",
                params.g,
                params.n,
                result.fok.known_count()
            );
        }
        other => bail!("unknown method {other:?}; expected kn-n, n-n, rm-n, or gkn-n"),
    }

    if let Some(path) = &args.rok_file {
        manifest.push(("rok_file", path.display().to_string()));
    }
    write_manifest(&out, "dilute", &manifest)?;
    Ok(())
}
