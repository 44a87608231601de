//! Aggregate reporting: portrayal success rates with polarity and
//! grouping splits, judge/human agreement, Fleiss' kappa, and the
//! trait-diversity matrix.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{
    classify_report_polarity, BackTestRecord, DiversityRecord, HumanAnnotation, HumanLabel,
    ReportPolarity, Verdict,
};
use crate::dialogue::{AblationConfig, Dialogue};
use crate::exec::Exec;
use crate::persona::{Dimension, Level};

/// A trial count with its success tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub successes: usize,
}

impl Cell {
    pub fn add(&mut self, success: bool) {
        self.n += 1;
        if success {
            self.successes += 1;
        }
    }

    pub fn merge(&mut self, other: Cell) {
        self.n += other.n;
        self.successes += other.successes;
    }

    /// Percentage in [0, 100]; 0 for an empty cell.
    pub fn rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            100.0 * self.successes as f64 / self.n as f64
        }
    }
}

/// Half-up rounding to two decimals, as printed in reports.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

/// Per-dimension cells plus their overall roll-up.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessBreakdown {
    pub per_dim: BTreeMap<Dimension, Cell>,
    pub overall: Cell,
}

impl SuccessBreakdown {
    fn add(&mut self, dimension: Dimension, success: bool) {
        self.per_dim.entry(dimension).or_default().add(success);
        self.overall.add(success);
    }

    fn merge(&mut self, other: SuccessBreakdown) {
        for (dimension, cell) in other.per_dim {
            self.per_dim.entry(dimension).or_default().merge(cell);
        }
        self.overall.merge(other.overall);
    }
}

/// The report shape: positive and negative rows plus their union.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub positive: SuccessBreakdown,
    pub negative: SuccessBreakdown,
    pub combined: SuccessBreakdown,
}

impl SuccessReport {
    fn add(&mut self, trial: &Trial) {
        match trial.report_polarity {
            ReportPolarity::Positive => self.positive.add(trial.dimension, trial.success),
            ReportPolarity::Negative => self.negative.add(trial.dimension, trial.success),
        }
        self.combined.add(trial.dimension, trial.success);
    }

    pub fn merge(&mut self, other: SuccessReport) {
        self.positive.merge(other.positive);
        self.negative.merge(other.negative);
        self.combined.merge(other.combined);
    }
}

/// One (record, dimension) trial flattened for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub dimension: Dimension,
    pub report_polarity: ReportPolarity,
    pub level: Level,
    pub success: bool,
    pub pair_count: Option<usize>,
    pub ablation: Option<AblationConfig>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuccessOptions {
    /// Skip dimensions that never received a verdict instead of erroring.
    pub skip_incomplete: bool,
}

/// Flatten records into trials, joining dialogue context when given.
pub fn trials_from_records(
    records: &[BackTestRecord],
    dialogues: Option<&[Dialogue]>,
    options: SuccessOptions,
) -> Result<Vec<Trial>, MetricsError> {
    let by_id: HashMap<&str, &Dialogue> = dialogues
        .unwrap_or(&[])
        .iter()
        .map(|d| (d.id.as_str(), d))
        .collect();
    let mut trials = Vec::new();
    for record in records {
        let dialogue = by_id.get(record.dialogue_id.as_str());
        for (dimension, outcome) in &record.dims {
            let success = match outcome.success {
                Some(success) => success,
                None if options.skip_incomplete => continue,
                None => {
                    return Err(MetricsError::IncompleteRecord {
                        dialogue_id: record.dialogue_id.clone(),
                        role_id: record.role_id.clone(),
                        dimension: *dimension,
                    })
                }
            };
            trials.push(Trial {
                dimension: *dimension,
                report_polarity: classify_report_polarity(&outcome.spec),
                level: outcome.spec.level,
                success,
                pair_count: dialogue.map(|d| d.pair_count()),
                ablation: dialogue.map(|d| d.ablation),
            });
        }
    }
    Ok(trials)
}

/// The Table-2-shaped report over all records.
pub fn success_rates(
    records: &[BackTestRecord],
    options: SuccessOptions,
    exec: Exec,
) -> Result<SuccessReport, MetricsError> {
    let trials = trials_from_records(records, None, options)?;
    if trials.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(aggregate(trials, exec))
}

fn aggregate(trials: Vec<Trial>, exec: Exec) -> SuccessReport {
    exec.fold_merge(
        trials,
        SuccessReport::default,
        |mut report, trial| {
            report.add(&trial);
            report
        },
        |mut left, right| {
            left.merge(right);
            left
        },
    )
}

/// Grouping key for breakdown reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupKey {
    Level(Level),
    PairCount(usize),
    Ablation { include_traits: bool, include_experience: bool },
}

impl std::fmt::Display for GroupKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupKey::Level(level) => write!(f, "level={}", level.word()),
            GroupKey::PairCount(pairs) => write!(f, "pairs={pairs}"),
            GroupKey::Ablation { include_traits, include_experience } => {
                write!(f, "traits={include_traits},experience={include_experience}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Level,
    PairCount,
    Ablation,
}

/// Success rates partitioned by a grouping key. Level groups always
/// list all three levels; pair-count groups cover 1..=max observed.
/// Empty groups are retained with n = 0.
pub fn grouped_success_rates(
    records: &[BackTestRecord],
    dialogues: &[Dialogue],
    group_by: GroupBy,
    options: SuccessOptions,
    exec: Exec,
) -> Result<Vec<(GroupKey, SuccessReport)>, MetricsError> {
    let trials = trials_from_records(records, Some(dialogues), options)?;
    if trials.is_empty() {
        return Err(MetricsError::EmptyInput);
    }

    let key_of = |trial: &Trial| -> Option<GroupKey> {
        match group_by {
            GroupBy::Level => Some(GroupKey::Level(trial.level)),
            GroupBy::PairCount => trial.pair_count.map(GroupKey::PairCount),
            GroupBy::Ablation => trial.ablation.map(|a| GroupKey::Ablation {
                include_traits: a.include_traits,
                include_experience: a.include_experience,
            }),
        }
    };

    let mut groups: BTreeMap<GroupKey, Vec<Trial>> = BTreeMap::new();
    match group_by {
        GroupBy::Level => {
            for level in Level::ALL {
                groups.insert(GroupKey::Level(level), Vec::new());
            }
        }
        GroupBy::PairCount => {
            let max = trials.iter().filter_map(|t| t.pair_count).max().unwrap_or(0);
            for pairs in 1..=max {
                groups.insert(GroupKey::PairCount(pairs), Vec::new());
            }
        }
        GroupBy::Ablation => {}
    }
    for trial in trials {
        if let Some(key) = key_of(&trial) {
            groups.entry(key).or_default().push(trial);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, trials)| (key, aggregate(trials, exec)))
        .collect())
}

/// The level-effect and turn-effect breakdowns together.
#[derive(Debug)]
pub struct Breakdowns {
    pub by_level: Vec<(GroupKey, SuccessReport)>,
    pub by_pairs: Vec<(GroupKey, SuccessReport)>,
}

pub fn turn_and_level_breakdowns(
    records: &[BackTestRecord],
    dialogues: &[Dialogue],
    options: SuccessOptions,
    exec: Exec,
) -> Result<Breakdowns, MetricsError> {
    Ok(Breakdowns {
        by_level: grouped_success_rates(records, dialogues, GroupBy::Level, options, exec)?,
        by_pairs: grouped_success_rates(records, dialogues, GroupBy::PairCount, options, exec)?,
    })
}

/// How a human label is compared to a judge verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMapping {
    /// Yes matches HighLevel, No matches LowLevel, Uncertain matches
    /// NotSure (annotation guidelines describe the poles directly).
    DirectPoles,
    /// Agree when the human-implied portrayal success equals the
    /// judge's success flag for the predefined spec.
    SuccessConsistent,
}

/// Per-dimension agreement counts, Table-1 shaped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub per_dim: BTreeMap<Dimension, Cell>,
    pub total: Cell,
}

fn majority_label(labels: &[HumanLabel]) -> HumanLabel {
    let mut counts: BTreeMap<HumanLabel, usize> = BTreeMap::new();
    for label in labels {
        *counts.entry(*label).or_default() += 1;
    }
    for (label, count) in counts {
        if count * 2 > labels.len() {
            return label;
        }
    }
    HumanLabel::Uncertain
}

/// Compare judge records against majority human labels on the
/// (dialogue, role, dimension) join.
pub fn agreement(
    records: &[BackTestRecord],
    annotations: &[HumanAnnotation],
    mapping: AgreementMapping,
) -> Result<AgreementReport, MetricsError> {
    if annotations.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut by_key: BTreeMap<(String, String, Dimension), Vec<HumanLabel>> = BTreeMap::new();
    for annotation in annotations {
        by_key
            .entry((
                annotation.dialogue_id.clone(),
                annotation.role_id.clone(),
                annotation.dimension,
            ))
            .or_default()
            .push(annotation.label);
    }

    let mut judged: HashMap<(&str, &str, Dimension), (&crate::backtest::DimOutcome, Verdict)> =
        HashMap::new();
    for record in records {
        for (dimension, outcome) in &record.dims {
            if let Some(verdict) = outcome.verdict {
                judged.insert(
                    (record.dialogue_id.as_str(), record.role_id.as_str(), *dimension),
                    (outcome, verdict),
                );
            }
        }
    }

    let mut report = AgreementReport::default();
    let mut orphans = Vec::new();
    for ((dialogue_id, role_id, dimension), labels) in &by_key {
        let Some(&(outcome, verdict)) =
            judged.get(&(dialogue_id.as_str(), role_id.as_str(), *dimension))
        else {
            orphans.push(format!("{dialogue_id}/{role_id}/{dimension}"));
            continue;
        };
        let human = majority_label(&labels.clone());
        let agrees = match mapping {
            AgreementMapping::DirectPoles => matches!(
                (human, verdict),
                (HumanLabel::Yes, Verdict::HighLevel)
                    | (HumanLabel::No, Verdict::LowLevel)
                    | (HumanLabel::Uncertain, Verdict::NotSure)
            ),
            AgreementMapping::SuccessConsistent => {
                let human_success = match outcome.spec.polarity {
                    crate::persona::Polarity::High => human == HumanLabel::Yes,
                    crate::persona::Polarity::Low => human == HumanLabel::No,
                };
                Some(human_success) == outcome.success
            }
        };
        report.per_dim.entry(*dimension).or_default().add(agrees);
        report.total.add(agrees);
    }
    if !orphans.is_empty() {
        return Err(MetricsError::UnmatchedKeys { orphans });
    }
    Ok(report)
}

/// Fleiss' kappa over an items x raters table of categorical labels.
///
/// With every rating in a single category the chance term degenerates
/// (expected agreement 1); all raters necessarily agree, so kappa is 1.
pub fn fleiss_kappa<C: Eq + Hash>(rows: &[Vec<C>]) -> Result<f64, MetricsError> {
    if rows.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let raters = rows[0].len();
    if raters < 2 {
        return Err(MetricsError::InsufficientRaters { raters });
    }
    for (item, row) in rows.iter().enumerate() {
        if row.len() != raters {
            return Err(MetricsError::UnequalRaterCounts {
                item,
                expected: raters,
                found: row.len(),
            });
        }
    }

    let items = rows.len() as f64;
    let r = raters as f64;
    let mut category_totals: HashMap<&C, usize> = HashMap::new();
    let mut mean_item_agreement = 0.0;
    for row in rows {
        let mut counts: HashMap<&C, usize> = HashMap::new();
        for label in row {
            *counts.entry(label).or_default() += 1;
            *category_totals.entry(label).or_default() += 1;
        }
        let sum_squares: usize = counts.values().map(|&c| c * c).sum();
        mean_item_agreement += (sum_squares as f64 - r) / (r * (r - 1.0));
    }
    mean_item_agreement /= items;

    let total_ratings = items * r;
    let expected_agreement: f64 = category_totals
        .values()
        .map(|&c| {
            let p = c as f64 / total_ratings;
            p * p
        })
        .sum();

    if (1.0 - expected_agreement).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((mean_item_agreement - expected_agreement) / (1.0 - expected_agreement))
}

/// 5x5 detection percentages: rows are predefined single-trait groups,
/// columns are back-tested dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityMatrix {
    pub group_sizes: BTreeMap<Dimension, usize>,
    /// Percentage of the group with a definitive (High or Low) verdict.
    pub detected: BTreeMap<Dimension, BTreeMap<Dimension, f64>>,
    /// Percentage of the group judged HighLevel, the alternative
    /// reading of "detected".
    pub judged_high: BTreeMap<Dimension, BTreeMap<Dimension, f64>>,
}

/// Tally diversity records into the matrix. Missing verdicts (judge
/// errors) stay in the denominator and count as not detected.
pub fn diversity_matrix(records: &[DiversityRecord]) -> Result<DiversityMatrix, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut group_sizes: BTreeMap<Dimension, usize> = BTreeMap::new();
    let mut definitive: BTreeMap<Dimension, BTreeMap<Dimension, usize>> = BTreeMap::new();
    let mut high: BTreeMap<Dimension, BTreeMap<Dimension, usize>> = BTreeMap::new();
    for group in Dimension::ALL {
        group_sizes.insert(group, 0);
        definitive.insert(group, Dimension::ALL.iter().map(|&d| (d, 0)).collect());
        high.insert(group, Dimension::ALL.iter().map(|&d| (d, 0)).collect());
    }
    for record in records {
        *group_sizes.get_mut(&record.predefined).unwrap() += 1;
        for (&dimension, verdict) in &record.verdicts {
            match verdict {
                Some(Verdict::HighLevel) => {
                    *definitive.get_mut(&record.predefined).unwrap().get_mut(&dimension).unwrap() += 1;
                    *high.get_mut(&record.predefined).unwrap().get_mut(&dimension).unwrap() += 1;
                }
                Some(Verdict::LowLevel) => {
                    *definitive.get_mut(&record.predefined).unwrap().get_mut(&dimension).unwrap() += 1;
                }
                Some(Verdict::NotSure) | None => {}
            }
        }
    }

    let percentages = |counts: BTreeMap<Dimension, BTreeMap<Dimension, usize>>,
                       sizes: &BTreeMap<Dimension, usize>| {
        counts
            .into_iter()
            .map(|(group, row)| {
                let n = sizes[&group];
                let row = row
                    .into_iter()
                    .map(|(dimension, count)| {
                        let pct = if n == 0 { 0.0 } else { 100.0 * count as f64 / n as f64 };
                        (dimension, pct)
                    })
                    .collect();
                (group, row)
            })
            .collect()
    };

    Ok(DiversityMatrix {
        detected: percentages(definitive, &group_sizes),
        judged_high: percentages(high, &group_sizes),
        group_sizes,
    })
}

impl DiversityMatrix {
    /// CSV emission: one row per (definition, predefined group), with a
    /// column per back-tested dimension.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("definition,predefined,n,AGR,CON,EXT,NEU,OPN\n");
        for (label, matrix) in
            [("detected", &self.detected), ("judged_high", &self.judged_high)]
        {
            for group in Dimension::ALL {
                out.push_str(&format!("{label},{},{}", group.code(), self.group_sizes[&group]));
                for dimension in Dimension::ALL {
                    out.push_str(&format!(",{:.2}", round2(matrix[&group][&dimension])));
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no trials to aggregate")]
    EmptyInput,
    #[error("record {dialogue_id}/{role_id} is missing a verdict for {dimension}")]
    IncompleteRecord { dialogue_id: String, role_id: String, dimension: Dimension },
    #[error("{} annotation key(s) have no judge verdict: {}", orphans.len(), orphans.join(", "))]
    UnmatchedKeys { orphans: Vec<String> },
    #[error("item {item} has {found} ratings, expected {expected}")]
    UnequalRaterCounts { item: usize, expected: usize, found: usize },
    #[error("need at least 2 raters, got {raters}")]
    InsufficientRaters { raters: usize },
}
