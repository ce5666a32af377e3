//! Flat `key = value` run configuration. Command-line flags override file
//! values; relative paths in a file resolve against the file's directory.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

/// Keys holding file or directory paths.
const PATH_KEYS: &[&str] = &[
    "real",
    "ai",
    "queries",
    "relevance",
    "out",
    "original",
    "debiased",
    "params",
    "pvectors",
    "real_ranks",
    "ai_ranks",
    "real_flows",
    "ai_flows",
];

const OTHER_KEYS: &[&str] = &[
    "seed",
    "pool",
    "frames",
    "frame",
    "ks",
    "seeds",
    "mode",
    "rho",
    "lambda",
    "epochs",
    "lr",
    "batch_size",
    "tau",
    "holdout",
    "space",
    "variant",
    "target",
    "bins",
    "n_items",
    "dim",
    "alpha",
    "beta",
    "gamma",
    "sigma",
    "drift",
    "temporal_bias",
    "pairs",
    "rows",
    "cols",
    "ai_spread",
];

fn is_known(key: &str) -> bool {
    PATH_KEYS.contains(&key) || OTHER_KEYS.contains(&key)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse_str(text: &str, base: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("line {}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !is_known(key) {
                return Err(bad(format!("unknown key `{key}`")));
            }
            let value = if PATH_KEYS.contains(&key) && Path::new(value).is_relative() {
                base.join(value).to_string_lossy().into_owned()
            } else {
                value.to_string()
            };
            if values.insert(key.to_string(), value).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse_str(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Override `key` when a flag supplied a value.
    pub fn set<V: Display>(&mut self, key: &str, value: Option<V>) {
        debug_assert!(is_known(key), "unregistered key {key}");
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::Config(format!("`{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn parse_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        self.get(key)
            .map(PathBuf::from)
            .ok_or_else(|| Error::Config(format!("missing `{key}` (flag --{} or config key)", key.replace('_', "-"))))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse_or("seed", DEFAULT_SEED)
    }

    /// Every resolved entry, sorted by key.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Render as a config file that [`Settings::parse_str`] reads back.
    pub fn to_config_text(&self) -> String {
        self.entries().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_resolves_paths() {
        let s = Settings::parse_str("# run\nreal = r.jsonl\nseed = 7 # inline\n\nout=/tmp/x\n", Path::new("/data")).unwrap();
        assert_eq!(s.get("real"), Some("/data/r.jsonl"));
        assert_eq!(s.get("out"), Some("/tmp/x"));
        assert_eq!(s.seed().unwrap(), 7);
    }

    #[test]
    fn flags_override_file_values() {
        let mut s = Settings::parse_str("seed = 7\n", Path::new("")).unwrap();
        s.set("seed", Some(9));
        s.set::<u64>("frames", None);
        assert_eq!(s.seed().unwrap(), 9);
        assert_eq!(s.get("frames"), None);
    }

    #[test]
    fn seed_defaults_to_42() {
        assert_eq!(Settings::default().seed().unwrap(), 42);
    }

    #[test]
    fn rejects_unknown_duplicate_and_malformed_lines() {
        for text in ["colour = red\n", "seed = 1\nseed = 2\n", "seed 1\n"] {
            let err = Settings::parse_str(text, Path::new("")).unwrap_err();
            assert!(err.to_string().contains("line"), "{err}");
            assert_eq!(err.exit_code(), 2);
        }
        assert!(Settings::parse_str("seed = x\n", Path::new("")).unwrap().seed().is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = Settings::parse_str("beta = 0.5\nreal = /a/b.jsonl\n", Path::new("")).unwrap();
        assert_eq!(Settings::parse_str(&s.to_config_text(), Path::new("/elsewhere")).unwrap(), s);
    }
}
