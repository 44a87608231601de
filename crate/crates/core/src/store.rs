//! JSON-lines persistence for every pipeline artifact, plus the
//! seeded raw -> eval/test/clean bench splits and their manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backtest::BackTestRecord;
use crate::dialogue::Dialogue;

/// Write records as JSON-lines: one compact object per line, UTF-8, no
/// BOM, trailing newline per record.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| StoreError::io(path, e))?;
        }
    }
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| StoreError::Encode(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| StoreError::io(path, e))
}

/// Read JSON-lines strictly: any malformed line is an error carrying
/// its line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let mut content = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut content))
        .map_err(|e| StoreError::io(path, e))?;
    let mut items = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn sha256_hex_file(path: &Path) -> Result<String, StoreError> {
    let bytes = std::fs::read(path).map_err(|e| StoreError::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Sizes, seed, and content hashes of one bench build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub raw: usize,
    pub eval: usize,
    pub test: usize,
    pub clean_source: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clean: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filtered_failures: Option<usize>,
    pub seed: u64,
    pub hashes: BTreeMap<String, String>,
}

impl BenchManifest {
    pub fn validate(&self) -> Result<(), StoreError> {
        if self.eval + self.test + self.clean_source != self.raw {
            return Err(StoreError::Manifest(format!(
                "split sizes {} + {} + {} do not sum to raw {}",
                self.eval, self.test, self.clean_source, self.raw
            )));
        }
        if let Some(clean) = self.clean {
            if clean > self.clean_source {
                return Err(StoreError::Manifest(format!(
                    "clean {} exceeds clean_source {}",
                    clean, self.clean_source
                )));
            }
        }
        Ok(())
    }
}

/// The eval, test, and clean-source partitions, in that order.
pub type SplitSets = (Vec<Dialogue>, Vec<Dialogue>, Vec<Dialogue>);

/// Seeded shuffle then prefix slicing: disjoint, exhaustive, and
/// reproducible per seed.
pub fn split_raw(
    mut raw: Vec<Dialogue>,
    eval_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<SplitSets, StoreError> {
    if eval_n + test_n > raw.len() {
        return Err(StoreError::InsufficientRaw { raw: raw.len(), requested: eval_n + test_n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    raw.shuffle(&mut rng);
    let clean_source = raw.split_off(eval_n + test_n);
    let test = raw.split_off(eval_n);
    Ok((raw, test, clean_source))
}

/// Keep a dialogue when back-testing succeeded on every judged
/// dimension of both roles, or of at least one role with `per_role`.
pub fn build_clean<'a>(
    clean_source: &'a [Dialogue],
    records: &[BackTestRecord],
    per_role: bool,
) -> Result<Vec<&'a Dialogue>, StoreError> {
    let by_key: HashMap<(&str, &str), &BackTestRecord> = records
        .iter()
        .map(|r| ((r.dialogue_id.as_str(), r.role_id.as_str()), r))
        .collect();
    let mut missing = Vec::new();
    let mut kept = Vec::new();
    for dialogue in clean_source {
        let initiator = by_key.get(&(dialogue.id.as_str(), dialogue.initiator_id.as_str()));
        let partner = by_key.get(&(dialogue.id.as_str(), dialogue.partner_id.as_str()));
        let (Some(initiator), Some(partner)) = (initiator, partner) else {
            missing.push(dialogue.id.clone());
            continue;
        };
        let all_ok = |record: &BackTestRecord| {
            record.dims.values().all(|d| d.success == Some(true))
        };
        let keep = if per_role {
            all_ok(initiator) || all_ok(partner)
        } else {
            all_ok(initiator) && all_ok(partner)
        };
        if keep {
            kept.push(dialogue);
        }
    }
    if !missing.is_empty() {
        return Err(StoreError::MissingRecords { dialogue_ids: missing });
    }
    Ok(kept)
}

/// Check that the three splits are disjoint and cover the raw set.
pub fn check_partition(
    raw_ids: &[String],
    splits: [&[Dialogue]; 3],
) -> Result<(), StoreError> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut total = 0;
    for split in splits {
        for dialogue in split {
            total += 1;
            if !seen.insert(dialogue.id.as_str()) {
                return Err(StoreError::Manifest(format!(
                    "dialogue {} appears in more than one split",
                    dialogue.id
                )));
            }
        }
    }
    if total != raw_ids.len() || raw_ids.iter().any(|id| !seen.contains(id.as_str())) {
        return Err(StoreError::Manifest("splits do not cover the raw set".into()));
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("cannot encode record: {0}")]
    Encode(String),
    #[error("raw set has {raw} dialogues, fewer than the {requested} requested for eval+test")]
    InsufficientRaw { raw: usize, requested: usize },
    #[error("{} dialogue(s) lack back-test records for both roles: {}", dialogue_ids.len(), dialogue_ids.join(", "))]
    MissingRecords { dialogue_ids: Vec<String> },
    #[error("manifest: {0}")]
    Manifest(String),
}

impl StoreError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::{DimOutcome, Verdict};
    use crate::dialogue::{AblationConfig, Termination, Utterance};
    use crate::persona::{Dimension, Level, Polarity, TraitSpec};

    fn dialogue(id: &str) -> Dialogue {
        Dialogue {
            id: id.into(),
            initiator_id: "rA".into(),
            partner_id: "rB".into(),
            topic_id: "topic-0001".into(),
            topic_text: "t".into(),
            ablation: AblationConfig::default(),
            termination: Termination::EndMarker,
            utterances: vec![Utterance::new("rA".into(), "hi".into())],
        }
    }

    fn record(dialogue_id: &str, role_id: &str, success: bool) -> BackTestRecord {
        let spec = TraitSpec {
            dimension: Dimension::Agr,
            polarity: Polarity::High,
            level: Level::Very,
        };
        let verdict = if success { Verdict::HighLevel } else { Verdict::LowLevel };
        BackTestRecord {
            dialogue_id: dialogue_id.into(),
            role_id: role_id.into(),
            judge_model_id: "judge".into(),
            dims: BTreeMap::from([(
                Dimension::Agr,
                DimOutcome { spec, verdict: Some(verdict), success: Some(success) },
            )]),
        }
    }

    #[test]
    fn jsonl_roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dialogues.jsonl");
        let items = vec![dialogue("d1"), dialogue("d2")];
        write_jsonl(&path, &items).unwrap();
        let first = std::fs::read(&path).unwrap();
        let parsed: Vec<Dialogue> = read_jsonl(&path).unwrap();
        assert_eq!(parsed, items);
        write_jsonl(&path, &parsed).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn jsonl_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\": 1}\nnot json\n").unwrap();
        match read_jsonl::<serde_json::Value>(&path) {
            Err(StoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn split_matches_requested_sizes() {
        let raw: Vec<Dialogue> = (0..100).map(|i| dialogue(&format!("d{i}"))).collect();
        let (eval, test, clean_source) = split_raw(raw, 10, 30, 7).unwrap();
        assert_eq!(eval.len(), 10);
        assert_eq!(test.len(), 30);
        assert_eq!(clean_source.len(), 60);
    }

    #[test]
    fn split_is_deterministic_and_exhaustive() {
        let raw: Vec<Dialogue> = (0..50).map(|i| dialogue(&format!("d{i}"))).collect();
        let ids: Vec<String> = raw.iter().map(|d| d.id.clone()).collect();
        let (e1, t1, c1) = split_raw(raw.clone(), 5, 10, 99).unwrap();
        let (e2, t2, c2) = split_raw(raw, 5, 10, 99).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(t1, t2);
        assert_eq!(c1, c2);
        check_partition(&ids, [&e1, &t1, &c1]).unwrap();
    }

    #[test]
    fn split_edge_cases() {
        let raw: Vec<Dialogue> = (0..5).map(|i| dialogue(&format!("d{i}"))).collect();
        let (eval, test, clean_source) = split_raw(raw.clone(), 5, 0, 1).unwrap();
        assert_eq!(eval.len(), 5);
        assert!(test.is_empty());
        assert!(clean_source.is_empty());
        assert!(matches!(
            split_raw(raw, 4, 2, 1),
            Err(StoreError::InsufficientRaw { .. })
        ));
    }

    #[test]
    fn clean_filter_is_strict_per_dialogue() {
        let dialogues = vec![dialogue("d1"), dialogue("d2")];
        let records = vec![
            record("d1", "rA", true),
            record("d1", "rB", true),
            record("d2", "rA", true),
            record("d2", "rB", false),
        ];
        let clean = build_clean(&dialogues, &records, false).unwrap();
        assert_eq!(clean.len(), 1);
        assert_eq!(clean[0].id, "d1");

        let relaxed = build_clean(&dialogues, &records, true).unwrap();
        assert_eq!(relaxed.len(), 2);
    }

    #[test]
    fn clean_requires_records_for_both_roles() {
        let dialogues = vec![dialogue("d1")];
        let records = vec![record("d1", "rA", true)];
        assert!(matches!(
            build_clean(&dialogues, &records, false),
            Err(StoreError::MissingRecords { .. })
        ));
    }

    #[test]
    fn manifest_validation() {
        let mut manifest = BenchManifest {
            raw: 100,
            eval: 10,
            test: 30,
            clean_source: 60,
            clean: Some(40),
            filtered_failures: Some(20),
            seed: 1,
            hashes: BTreeMap::new(),
        };
        manifest.validate().unwrap();
        manifest.clean = Some(80);
        assert!(manifest.validate().is_err());
        manifest.clean = None;
        manifest.eval = 11;
        assert!(manifest.validate().is_err());
    }
}
