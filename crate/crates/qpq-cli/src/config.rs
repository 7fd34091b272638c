//! Flag/file/default resolution and the run manifest.
//!
//! Every value resolves as: explicit CLI flag, then the `key=value` config
//! file, then the built-in default. Each run writes a `manifest.txt` echoing
//! the fully resolved configuration, so a run can be reproduced from its
//! output directory alone.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

/// Parsed `key=value` config file (empty when none was given).
#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag wins over file value wins over default.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    /// Like `resolve` but without a default.
    pub fn resolve_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key} = {raw:?}: {e}"),
            },
        }
    }
}

/// Output directory: `--out`, else `QPQ_OUT_DIR`, else `./qpq-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, config: &FileConfig) -> Result<PathBuf> {
    if let Some(dir) = flag {
        return Ok(dir);
    }
    if let Some(raw) = config.values.get("out") {
        return Ok(PathBuf::from(raw));
    }
    if let Ok(env) = std::env::var("QPQ_OUT_DIR") {
        if !env.is_empty() {
            return Ok(PathBuf::from(env));
        }
    }
    Ok(PathBuf::from("qpq-out"))
}

/// The block code for coded-pipeline commands: a generator-matrix file
/// (one `'0'`/`'1'` row per line) or the built-in \[7,4,3\] code.
pub fn load_code(path: Option<&PathBuf>) -> Result<qpq::CodeSpec> {
    match path {
        None => Ok(qpq::CodeSpec::hamming_7_4()),
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            qpq::CodeSpec::from_generator_text(&text)
                .with_context(|| format!("parsing generator matrix in {}", path.display()))
        }
    }
}

/// Writes `manifest.txt`: tool version, the command, and every resolved
/// setting in a fixed order. No timestamps, so reruns are byte-identical.
pub fn write_manifest(dir: &Path, command: &str, entries: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("tool=qpq {}\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("command={command}\n"));
    for (key, value) in entries {
        text.push_str(&format!("{key}={value}\n"));
    }
    write_file(dir, "manifest.txt", &text)
}

/// Creates the directory if needed and writes one output file.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `N` as a near-square `width×height` grid: the divisor pair closest to a
/// square, width ≤ height.
pub fn grid_dims(n: usize) -> (usize, usize) {
    assert!(n >= 1);
    let mut w = (n as f64).sqrt().floor() as usize;
    while w > 1 && !n.is_multiple_of(w) {
        w -= 1;
    }
    (w.max(1), n / w.max(1))
}

/// Parses a `WxH` grid override.
pub fn parse_grid(raw: &str, n: usize) -> Result<(usize, usize)> {
    let Some((w, h)) = raw.split_once('x') else {
        bail!("grid must look like WxH, got {raw:?}");
    };
    let (w, h): (usize, usize) = (w.trim().parse()?, h.trim().parse()?);
    if w * h != n {
        bail!("grid {w}x{h} does not cover {n} items");
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_square_grids() {
        assert_eq!(grid_dims(225), (15, 15));
        assert_eq!(grid_dims(1024), (32, 32));
        assert_eq!(grid_dims(10_000), (100, 100));
        assert_eq!(grid_dims(12), (3, 4));
        assert_eq!(grid_dims(13), (1, 13));
        assert_eq!(grid_dims(1), (1, 1));
    }

    #[test]
    fn precedence_flag_file_default() {
        let dir = std::env::temp_dir().join("qpq-config-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.txt");
        fs::write(&path, "# comment\nn = 99\nseed=5\n").unwrap();
        let config = FileConfig::load(Some(&path)).unwrap();
        assert_eq!(config.resolve(Some(7usize), "n", 1).unwrap(), 7);
        assert_eq!(config.resolve(None::<usize>, "n", 1).unwrap(), 99);
        assert_eq!(config.resolve(None::<usize>, "k", 3).unwrap(), 3);
    }
}
