//! Flat key-value run configuration (INI-style, no sections).
//!
//! A config file collects the settings of a whole experiment; each command
//! reads the keys it needs, and command-line flags override file values.
//! Unknown keys are rejected at parse time so typos surface immediately.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qmatch::{Error, Result};

/// Every key any subcommand understands. A shared file may hold keys for
/// several commands; each command reads its own subset.
pub const KNOWN_KEYS: &[&str] = &[
    "pool",
    "corpus",
    "pairs",
    "embeddings",
    "index",
    "model",
    "evalset",
    "batch",
    "out",
    "history",
    "json_out",
    "dump_relation",
    "tokenizer_mode",
    "metric",
    "transform",
    "tau",
    "top_r",
    "min_count",
    "dim",
    "window",
    "negative",
    "epochs",
    "learning_rate",
    "batch_size",
    "weight_decay",
    "d_hidden",
    "dense_hidden",
    "max_len",
    "dropout",
    "n",
    "blend",
    "stage1_only",
    "ks",
    "seed",
    "oov_seed",
    "text",
    "query_id",
];

/// Parsed configuration: raw string values by key.
#[derive(Debug, Default, Clone)]
pub struct RunConfig {
    values: HashMap<String, String>,
}

/// Parses config text. Blank lines and lines starting with `#` or `;` are
/// ignored; everything else must be `key = value`. Later assignments to the
/// same key win.
pub fn parse_config(input: &str) -> Result<RunConfig> {
    let mut values = HashMap::new();
    for (lineno, raw) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected `key = value`, found {:?}", line),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty key".into(),
            });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unknown config key {:?}", key),
            });
        }
        values.insert(key.to_owned(), value.to_owned());
    }
    Ok(RunConfig { values })
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e))?;
                parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e))
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered key {:?}", key);
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the config value, else the default.
    pub fn value<T>(&self, key: &str, flag: Option<T>, default: T) -> anyhow::Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => match self.get(key) {
                None => Ok(default),
                Some(raw) => raw
                    .parse()
                    .map_err(|e| anyhow::anyhow!("config key {:?}: {}", key, e)),
            },
        }
    }

    /// Flag value if given, else the config value; `None` when absent.
    pub fn optional<T>(&self, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => match self.get(key) {
                None => Ok(None),
                Some(raw) => raw
                    .parse()
                    .map(Some)
                    .map_err(|e| anyhow::anyhow!("config key {:?}: {}", key, e)),
            },
        }
    }

    /// A path that must be supplied by flag or config.
    pub fn required_path(&self, key: &str, flag: Option<PathBuf>) -> anyhow::Result<PathBuf> {
        self.optional(key, flag)?
            .ok_or_else(|| anyhow::anyhow!("missing required option --{}", key.replace('_', "-")))
    }

    pub fn optional_path(&self, key: &str, flag: Option<PathBuf>) -> anyhow::Result<Option<PathBuf>> {
        self.optional(key, flag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_comments_and_overrides() {
        let config = parse_config(
            "# experiment\n\n; alt comment\npool = data/pool.tsv\n seed=7 \nseed = 9\n",
        )
        .unwrap();
        assert_eq!(config.get("pool"), Some("data/pool.tsv"));
        assert_eq!(config.get("seed"), Some("9"), "later assignment wins");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        let err = parse_config("nonsense_key = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown config key"), "{err}");
        let err = parse_config("just some words\n").unwrap_err();
        assert!(err.to_string().contains("key = value"), "{err}");
    }

    #[test]
    fn precedence_flag_over_file_over_default() {
        let config = parse_config("n = 25\n").unwrap();
        assert_eq!(config.value("n", Some(10usize), 50).unwrap(), 10);
        assert_eq!(config.value("n", None::<usize>, 50).unwrap(), 25);
        let empty = RunConfig::default();
        assert_eq!(empty.value("n", None::<usize>, 50).unwrap(), 50);
    }

    #[test]
    fn type_errors_name_the_key() {
        let config = parse_config("tau = not-a-number\n").unwrap();
        let err = config.value("tau", None::<f64>, 0.4).unwrap_err();
        assert!(err.to_string().contains("tau"), "{err}");
    }
}
