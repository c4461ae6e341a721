use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{ErpxError, Result};
use crate::formation::{GroupingMode, NameSchema, Test5Rule};
use crate::ingest::{LogBase, ResponseColumn, Transform};
use crate::regress::{BaseRegressorSpec, RegressorKind};
use crate::seed::{stable_hash, RngSeed};
use crate::simulate::{NoiseLevel, ResponseKind};

/// Every key accepted in a config file or on the command line.
pub const KNOWN_KEYS: &[&str] = &[
    "data",
    "response",
    "base",
    "alpha",
    "seed",
    "groups",
    "reps",
    "cv_reps",
    "out_dir",
    "threads",
    "dataset_id",
    "n_permutations",
    "test5",
    "drop_rows",
    "log_offset",
    "log_base",
    "top_variance",
    "trees_formation",
    "trees_final",
    "noise",
    "kind",
    "n_signals",
    "model",
    "out",
];

/// Keys that do not change any computed value and so stay out of the hash.
const UNHASHED: &[&str] = &["threads", "out_dir", "out"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ErpxError::Config(format!("line {}: expected key=value", no + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&k.as_str()) {
            return Err(ErpxError::Config(format!("line {}: unknown key '{k}'", no + 1)));
        }
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(ErpxError::Config(format!("line {}: duplicate key '{k}'", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| ErpxError::io(path, e))?;
    parse_config_text(&text)
}

/// Fully resolved and validated run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub response: ResponseColumn,
    pub base: RegressorKind,
    pub alpha: f64,
    pub seed: u64,
    pub groups: GroupingMode,
    pub reps: usize,
    pub cv_reps: usize,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub dataset_id: String,
    pub n_permutations: usize,
    pub test5: Test5Rule,
    pub transforms: Vec<Transform>,
    pub trees_formation: Option<usize>,
    pub trees_final: Option<usize>,
    pub noise: NoiseLevel,
    pub kind: ResponseKind,
    pub n_signals: usize,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Merged key/value view the config was built from.
    pub entries: BTreeMap<String, String>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| ErpxError::Config(format!("invalid value '{v}' for {key}")))
}

fn parse_groups(v: &str) -> Result<GroupingMode> {
    let v = v.trim();
    if v == "none" {
        return Ok(GroupingMode::None);
    }
    if v == "name" {
        return Ok(GroupingMode::ByName { schema: NameSchema::StripDigits });
    }
    if let Some(delim) = v.strip_prefix("name:prefix:") {
        return Ok(GroupingMode::ByName {
            schema: NameSchema::Prefix { delimiter: delim.to_string() },
        });
    }
    if let Some(d) = v.strip_prefix("cluster:") {
        let d: usize = parse("groups", d)?;
        if d == 0 {
            return Err(ErpxError::Config("cluster count must be positive".into()));
        }
        return Ok(GroupingMode::Clustering { d });
    }
    Err(ErpxError::Config(format!(
        "invalid groups '{v}'; expected none, name, name:prefix:<delim> or cluster:<d>"
    )))
}

fn parse_rows(v: &str) -> Result<Vec<usize>> {
    let mut rows = Vec::new();
    for part in v.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse("drop_rows", a)?, parse("drop_rows", b)?);
                if a > b {
                    return Err(ErpxError::Config(format!("invalid row range '{part}'")));
                }
                rows.extend(a..=b);
            }
            None => rows.push(parse("drop_rows", part)?),
        }
    }
    Ok(rows)
}

impl RunConfig {
    pub fn from_entries(entries: BTreeMap<String, String>) -> Result<Self> {
        for k in entries.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(ErpxError::Config(format!("unknown key '{k}'")));
            }
        }
        let get = |k: &str| entries.get(k).map(String::as_str);
        let alpha: f64 = get("alpha").map_or(Ok(0.05), |v| parse("alpha", v))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ErpxError::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let reps: usize = get("reps").map_or(Ok(1), |v| parse("reps", v))?;
        if reps == 0 {
            return Err(ErpxError::Config("reps must be at least 1".into()));
        }
        let cv_reps: usize = get("cv_reps").map_or(Ok(20), |v| parse("cv_reps", v))?;
        if cv_reps == 0 {
            return Err(ErpxError::Config("cv_reps must be at least 1".into()));
        }
        let n_permutations: usize = get("n_permutations").map_or(Ok(1), |v| parse("n_permutations", v))?;
        if n_permutations == 0 {
            return Err(ErpxError::Config("n_permutations must be at least 1".into()));
        }
        let test5 = match get("test5").unwrap_or("exists") {
            "exists" => Test5Rule::Exists,
            "forall" => Test5Rule::ForAll,
            other => return Err(ErpxError::Config(format!("invalid test5 '{other}'; expected exists or forall"))),
        };
        let mut transforms = Vec::new();
        if let Some(v) = get("drop_rows") {
            transforms.push(Transform::DropRows { rows: parse_rows(v)? });
        }
        if let Some(v) = get("log_offset") {
            let base = match get("log_base").unwrap_or("e") {
                "e" => LogBase::E,
                "10" => LogBase::Ten,
                "2" => LogBase::Two,
                other => return Err(ErpxError::Config(format!("invalid log_base '{other}'"))),
            };
            transforms.push(Transform::LogOffset { offset: parse("log_offset", v)?, base });
        } else if get("log_base").is_some() {
            return Err(ErpxError::Config("log_base given without log_offset".into()));
        }
        if let Some(v) = get("top_variance") {
            transforms.push(Transform::TopVariance { k: parse("top_variance", v)? });
        }
        let positive = |k: &str| -> Result<Option<usize>> {
            match get(k) {
                None => Ok(None),
                Some(v) => {
                    let n: usize = parse(k, v)?;
                    if n == 0 {
                        return Err(ErpxError::Config(format!("{k} must be at least 1")));
                    }
                    Ok(Some(n))
                }
            }
        };
        let n_signals = positive("n_signals")?.unwrap_or(10);
        Ok(RunConfig {
            data: get("data").map(PathBuf::from),
            response: get("response").map_or(Ok(ResponseColumn::default()), str::parse)?,
            base: get("base").map_or(Ok(RegressorKind::Lasso), |v| parse("base", v))?,
            alpha,
            seed: get("seed").map_or(Ok(1), |v| parse("seed", v))?,
            groups: get("groups").map_or(Ok(GroupingMode::None), parse_groups)?,
            reps,
            cv_reps,
            out_dir: PathBuf::from(get("out_dir").unwrap_or(".")),
            threads: get("threads").map_or(Ok(0), |v| parse("threads", v))?,
            dataset_id: get("dataset_id").map_or_else(
                || {
                    get("data")
                        .and_then(|d| Path::new(d).file_stem())
                        .map_or("data".to_string(), |s| s.to_string_lossy().into_owned())
                },
                str::to_string,
            ),
            n_permutations,
            test5,
            transforms,
            trees_formation: positive("trees_formation")?,
            trees_final: positive("trees_final")?,
            noise: get("noise").map_or(Ok(NoiseLevel::None), str::parse)?,
            kind: get("kind").map_or(Ok(ResponseKind::Linear), str::parse)?,
            n_signals,
            model: get("model").map(PathBuf::from),
            out: get("out").map(PathBuf::from),
            entries,
        })
    }

    pub fn root_seed(&self) -> RngSeed {
        RngSeed(self.seed)
    }

    pub fn spec(&self) -> BaseRegressorSpec {
        let mut spec = BaseRegressorSpec::of_kind(self.base);
        if let Some(t) = self.trees_formation {
            spec.forest.n_trees_formation = t;
        }
        if let Some(t) = self.trees_final {
            spec.forest.n_trees_final = t;
        }
        spec
    }

    /// Stable hash of every value-affecting key, in hex.
    pub fn config_hash(&self) -> String {
        let canon: String = self
            .entries
            .iter()
            .filter(|(k, _)| !UNHASHED.contains(&k.as_str()))
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        format!("{:016x}", stable_hash(canon.as_bytes()))
    }

    pub fn require_data(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| ErpxError::Config("--data is required".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn config_text_parsing() {
        let m = parse_config_text("# comment\nalpha = 0.1\n\nbase=forest # trailing\nout-dir = runs\n").unwrap();
        assert_eq!(m["alpha"], "0.1");
        assert_eq!(m["base"], "forest");
        assert_eq!(m["out_dir"], "runs");
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("alpha").is_err());
        assert!(parse_config_text("alpha=0.1\nalpha=0.2").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::from_entries(BTreeMap::new()).unwrap();
        assert_eq!((c.alpha, c.reps, c.cv_reps, c.base), (0.05, 1, 20, RegressorKind::Lasso));
        assert!(RunConfig::from_entries(entries(&[("alpha", "1.5")])).is_err());
        assert!(RunConfig::from_entries(entries(&[("reps", "0")])).is_err());
        assert!(RunConfig::from_entries(entries(&[("base", "svm")])).is_err());
        assert!(RunConfig::from_entries(entries(&[("bogus", "1")])).is_err());
    }

    #[test]
    fn groups_and_rows() {
        assert_eq!(parse_groups("cluster:12").unwrap(), GroupingMode::Clustering { d: 12 });
        assert!(matches!(parse_groups("name").unwrap(), GroupingMode::ByName { .. }));
        assert!(parse_groups("cluster:0").is_err());
        assert!(parse_groups("kmeans").is_err());
        assert_eq!(parse_rows("25,26 36-39").unwrap(), vec![25, 26, 36, 37, 38, 39]);
    }

    #[test]
    fn hash_ignores_threads_and_paths() {
        let a = RunConfig::from_entries(entries(&[("seed", "3"), ("threads", "1")])).unwrap();
        let b = RunConfig::from_entries(entries(&[("seed", "3"), ("threads", "8"), ("out_dir", "x")])).unwrap();
        let c = RunConfig::from_entries(entries(&[("seed", "4")])).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
    }
}
