//! Plain-text `key = value` files: curve definitions and suite manifests.

use crate::error::{AppError, AppResult};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use twistvan_core::family::Sign;
use twistvan_core::lvalue::DEFAULT_EPSILON;
use twistvan_core::conjecture::DEFAULT_PRIME_CUTOFF;
use twistvan_core::CurveSpec;

/// Parsed `key = value` lines with their line numbers; `#` starts a comment.
pub struct KeyValues {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str, path: &Path) -> AppResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| AppError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            if entries.insert(key.clone(), (value.trim().to_string(), i + 1)).is_some() {
                return Err(AppError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate key {key}"),
                });
            }
        }
        Ok(KeyValues {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text, path)
    }

    fn error(&self, line: usize, message: String) -> AppError {
        AppError::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    pub fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    pub fn required(&self, key: &str) -> AppResult<(&str, usize)> {
        self.raw(key).ok_or_else(|| self.error(0, format!("missing key {key}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> AppResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.error(line, format!("{key}: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> AppResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.required(key)?;
        Ok(self.get(key)?.unwrap())
    }

    /// Keys not in `known`, reported as an error.
    pub fn reject_unknown(&self, known: &[&str]) -> AppResult<()> {
        match self.entries.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            Some((k, (_, line))) => Err(self.error(*line, format!("unknown key {k}"))),
            None => Ok(()),
        }
    }
}

/// A curve file: `label`, `weierstrass` (five integers), `conductor`,
/// `root_number` and optionally `bad_ap` as `p:a_p` pairs.
pub fn parse_curve(text: &str, path: &Path) -> AppResult<CurveSpec> {
    let kv = KeyValues::parse(text, path)?;
    kv.reject_unknown(&["label", "weierstrass", "conductor", "root_number", "bad_ap"])?;
    let (label, _) = kv.required("label")?;
    let (w, line) = kv.required("weierstrass")?;
    let coeffs: Vec<i64> = w
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| kv.error(line, format!("weierstrass: {e}")))?;
    let weierstrass: [i64; 5] = coeffs
        .try_into()
        .map_err(|v: Vec<i64>| kv.error(line, format!("weierstrass needs 5 integers, got {}", v.len())))?;
    let conductor: u64 = kv.require("conductor")?;
    let root_number: i8 = kv.require("root_number")?;
    let mut pinned = Vec::new();
    if let Some((list, line)) = kv.raw("bad_ap") {
        for item in list.split([',', ' ']).filter(|s| !s.is_empty()) {
            let parsed = item
                .split_once(':')
                .and_then(|(p, a)| Some((p.trim().parse::<u64>().ok()?, a.trim().parse::<i8>().ok()?)));
            pinned.push(parsed.ok_or_else(|| kv.error(line, format!("bad_ap entry {item:?} is not p:a_p")))?);
        }
    }
    Ok(CurveSpec::new(label, weierstrass, conductor, root_number, &pinned)?)
}

pub fn load_curve(path: &Path) -> AppResult<CurveSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_curve(&text, path)
}

pub fn parse_sign(s: &str) -> Option<Sign> {
    match s {
        "minus" => Some(Sign::Minus),
        "plus" => Some(Sign::Plus),
        _ => None,
    }
}

/// The list of curves and parameters for a residual suite. Relative paths
/// are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteManifest {
    pub curves: Vec<PathBuf>,
    pub x: u64,
    pub q_max: u64,
    pub signs: Vec<Sign>,
    pub epsilon: f64,
    pub cutoff: u64,
    pub records_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

pub fn load_manifest(path: &Path) -> AppResult<SuiteManifest> {
    let kv = KeyValues::load(path)?;
    kv.reject_unknown(&["curves", "X", "q_max", "sign", "epsilon", "P", "records_dir", "cache_dir"])?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (list, _) = kv.required("curves")?;
    let curves = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| base.join(s))
        .collect();
    let signs = match kv.raw("sign") {
        None | Some(("both", _)) => vec![Sign::Minus, Sign::Plus],
        Some((s, line)) => vec![parse_sign(s).ok_or_else(|| kv.error(line, format!("sign must be minus, plus or both, got {s}")))?],
    };
    Ok(SuiteManifest {
        curves,
        x: kv.get("X")?.unwrap_or(100_000),
        q_max: kv.get("q_max")?.unwrap_or(500),
        signs,
        epsilon: kv.get("epsilon")?.unwrap_or(DEFAULT_EPSILON),
        cutoff: kv.get("P")?.unwrap_or(DEFAULT_PRIME_CUTOFF),
        records_dir: base.join(kv.raw("records_dir").map_or("records", |(v, _)| v)),
        cache_dir: kv.raw("cache_dir").map(|(v, _)| base.join(v)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_curve_file() {
        let text = "# 11a\nlabel = 11a\nweierstrass = 0 -1 1 -10 -20\nconductor = 11\nroot_number = 1\nbad_ap = 11:1\n";
        let e = parse_curve(text, Path::new("t.cfg")).unwrap();
        assert_eq!(e.conductor, 11);
        assert_eq!(e.bad_primes(), &[(11, 1)]);
    }

    #[test]
    fn pinned_mismatch_is_a_model_error() {
        let text = "label = 11a\nweierstrass = 0 -1 1 -10 -20\nconductor = 11\nroot_number = 1\nbad_ap = 11:-1\n";
        let err = parse_curve(text, Path::new("t.cfg")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(matches!(err, AppError::Core(twistvan_core::Error::Model(_))));
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = parse_curve("label = x\nweierstrass = 1 2\n", Path::new("t.cfg")).unwrap_err();
        assert!(matches!(err, AppError::Parse { line: 2, .. }), "{err}");
        let err = parse_curve("label\n", Path::new("t.cfg")).unwrap_err();
        assert!(matches!(err, AppError::Parse { line: 1, .. }));
        let err = parse_curve("colour = red\n", Path::new("t.cfg")).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }
}
