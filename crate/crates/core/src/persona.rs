//! Big Five trait encoding: questionnaire scores to (polarity, level)
//! specifications, the adjectival descriptor table, and rendered
//! personality descriptions.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five personality dimensions, in canonical order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Dimension {
    #[serde(rename = "AGR")]
    Agr,
    #[serde(rename = "CON")]
    Con,
    #[serde(rename = "EXT")]
    Ext,
    #[serde(rename = "NEU")]
    Neu,
    #[serde(rename = "OPN")]
    Opn,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Agr,
        Dimension::Con,
        Dimension::Ext,
        Dimension::Neu,
        Dimension::Opn,
    ];

    /// Three-letter code used in score files and reports.
    pub fn code(self) -> &'static str {
        match self {
            Dimension::Agr => "AGR",
            Dimension::Con => "CON",
            Dimension::Ext => "EXT",
            Dimension::Neu => "NEU",
            Dimension::Opn => "OPN",
        }
    }

    /// Lowercase name used in trait clauses ("very high in agreeableness").
    pub fn full_name(self) -> &'static str {
        match self {
            Dimension::Agr => "agreeableness",
            Dimension::Con => "conscientiousness",
            Dimension::Ext => "extraversion",
            Dimension::Neu => "neuroticism",
            Dimension::Opn => "openness",
        }
    }

    /// Capitalized name used in the judge prompt.
    pub fn title_name(self) -> &'static str {
        match self {
            Dimension::Agr => "Agreeableness",
            Dimension::Con => "Conscientiousness",
            Dimension::Ext => "Extraversion",
            Dimension::Neu => "Neuroticism",
            Dimension::Opn => "Openness",
        }
    }

    /// Parse a score-file column/key. Case-insensitive; accepts the
    /// descriptor table's OPE alias for openness.
    pub fn from_code(code: &str) -> Option<Dimension> {
        match code.trim().to_ascii_uppercase().as_str() {
            "AGR" => Some(Dimension::Agr),
            "CON" => Some(Dimension::Con),
            "EXT" => Some(Dimension::Ext),
            "NEU" => Some(Dimension::Neu),
            "OPN" | "OPE" => Some(Dimension::Opn),
            _ => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A questionnaire score on the 1.0..7.0 half-point grid.
///
/// Stored as half-steps above 1.0 so equality and hashing are exact.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Score {
    half_steps: u8,
}

impl Score {
    /// Validate a raw value against the grid. Off-grid values (wrong
    /// step or out of range) are rejected, never rounded.
    pub fn new(value: f64) -> Result<Score, PersonaError> {
        let doubled = value * 2.0;
        let rounded = doubled.round();
        if !value.is_finite() || (doubled - rounded).abs() > 1e-9 || !(2.0..=14.0).contains(&rounded)
        {
            return Err(PersonaError::OffGridScore(value));
        }
        Ok(Score {
            half_steps: rounded as u8 - 2,
        })
    }

    pub fn value(self) -> f64 {
        1.0 + 0.5 * f64::from(self.half_steps)
    }

    /// All 13 legal grid values in ascending order.
    pub fn grid() -> impl Iterator<Item = Score> {
        (0..=12u8).map(|half_steps| Score { half_steps })
    }
}

impl TryFrom<f64> for Score {
    type Error = PersonaError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Score::new(value)
    }
}

impl From<Score> for f64 {
    fn from(score: Score) -> f64 {
        score.value()
    }
}

impl fmt::Debug for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Score({})", self.value())
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Trait intensity, ordered weakest to strongest.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    ABit,
    Very,
    Extremely,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::ABit, Level::Very, Level::Extremely];

    /// The word rendered into prompts.
    pub fn word(self) -> &'static str {
        match self {
            Level::ABit => "a bit",
            Level::Very => "very",
            Level::Extremely => "extremely",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

/// Which side of the neutral midpoint a score falls on.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Low,
    High,
}

impl Polarity {
    pub fn word(self) -> &'static str {
        match self {
            Polarity::Low => "low",
            Polarity::High => "high",
        }
    }
}

/// One trait to inject: dimension plus its derived polarity and level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraitSpec {
    pub dimension: Dimension,
    pub polarity: Polarity,
    pub level: Level,
}

impl TraitSpec {
    /// Trait clause fragment, e.g. "very high in agreeableness".
    pub fn clause(&self) -> String {
        format!(
            "{} {} in {}",
            self.level.word(),
            self.polarity.word(),
            self.dimension.full_name()
        )
    }
}

/// A role's raw scores and the trait specifications derived from them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraitProfile {
    pub scores: BTreeMap<Dimension, Score>,
    pub specs: Vec<TraitSpec>,
}

/// Map a score to its (polarity, level), or `None` for the neutral 4.0.
///
/// Low side: 1.0/1.5 extremely, 2.0/2.5 very, 3.0/3.5 a bit. High side
/// mirrors: 4.5/5.0 a bit, 5.5/6.0 very, 6.5/7.0 extremely.
pub fn map_score_to_level(score: Score) -> Option<(Polarity, Level)> {
    let h = score.half_steps; // 0..=12; 6 is the neutral 4.0
    if h == 6 {
        return None;
    }
    let polarity = if h < 6 { Polarity::Low } else { Polarity::High };
    let distance = h.abs_diff(6);
    let level = match distance {
        1 | 2 => Level::ABit,
        3 | 4 => Level::Very,
        _ => Level::Extremely,
    };
    Some((polarity, level))
}

/// Derive a profile from per-dimension scores. Neutral (4.0) and absent
/// dimensions contribute no spec; a profile with no specs at all is an
/// error because every role must carry at least one trait.
pub fn derive_profile(
    scores: BTreeMap<Dimension, Score>,
) -> Result<TraitProfile, PersonaError> {
    let specs: Vec<TraitSpec> = scores
        .iter()
        .filter_map(|(&dimension, &score)| {
            map_score_to_level(score).map(|(polarity, level)| TraitSpec {
                dimension,
                polarity,
                level,
            })
        })
        .collect();
    if specs.is_empty() {
        return Err(PersonaError::AllNeutral);
    }
    Ok(TraitProfile { scores, specs })
}

/// One row of the adjectival marker table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Descriptor {
    pub domain: Dimension,
    /// Domain label as printed in the source table (openness rows are "OPE").
    pub raw_domain: &'static str,
    pub facet: &'static str,
    pub low_marker: &'static str,
    pub high_marker: &'static str,
}

impl Descriptor {
    pub fn marker(&self, polarity: Polarity) -> &'static str {
        match polarity {
            Polarity::Low => self.low_marker,
            Polarity::High => self.high_marker,
        }
    }
}

macro_rules! descriptor {
    ($dim:ident, $raw:literal, $facet:literal, $low:literal, $high:literal) => {
        Descriptor {
            domain: Dimension::$dim,
            raw_domain: $raw,
            facet: $facet,
            low_marker: $low,
            high_marker: $high,
        }
    };
}

/// The embedded marker table: 52 facet rows, 104 adjectives.
pub const DESCRIPTORS: [Descriptor; 52] = [
    descriptor!(Ext, "EXT", "E1 - Friendliness", "unfriendly", "friendly"),
    descriptor!(Ext, "EXT", "E2 - Gregariousness", "introverted", "extraverted"),
    descriptor!(Ext, "EXT", "E2 - Gregariousness", "silent", "talkative"),
    descriptor!(Ext, "EXT", "E3 - Assertiveness", "timid", "bold"),
    descriptor!(Ext, "EXT", "E3 - Assertiveness", "unassertive", "assertive"),
    descriptor!(Ext, "EXT", "E4 - Activity Level", "inactive", "active"),
    descriptor!(Ext, "EXT", "E5 - Excitement-Seeking", "unenergetic", "energetic"),
    descriptor!(
        Ext,
        "EXT",
        "E5 - Excitement-Seeking",
        "unadventurous",
        "adventurous and daring"
    ),
    descriptor!(Ext, "EXT", "E6 - Cheerfulness", "gloomy", "cheerful"),
    descriptor!(Agr, "AGR", "A1 - Trust", "distrustful", "trustful"),
    descriptor!(Agr, "AGR", "A2 - Morality", "immoral", "moral"),
    descriptor!(Agr, "AGR", "A2 - Morality", "dishonest", "honest"),
    descriptor!(Agr, "AGR", "A3 - Altruism", "unkind", "kind"),
    descriptor!(Agr, "AGR", "A3 - Altruism", "stingy", "generous"),
    descriptor!(Agr, "AGR", "A3 - Altruism", "unaltruistic", "altruistic"),
    descriptor!(Agr, "AGR", "A4 - Cooperation", "uncooperative", "cooperative"),
    descriptor!(Agr, "AGR", "A5 - Modesty", "self-important", "humble"),
    descriptor!(Agr, "AGR", "A6 - Sympathy", "unsympathetic", "sympathetic"),
    descriptor!(Agr, "AGR", "AGR", "selfish", "unselfish"),
    descriptor!(Agr, "AGR", "AGR", "disagreeable", "agreeable"),
    descriptor!(Con, "CON", "C1 - Self-Efficacy", "unsure", "self-efficacious"),
    descriptor!(Con, "CON", "C2 - Orderliness", "messy", "orderly"),
    descriptor!(Con, "CON", "C3 - Dutifulness", "irresponsible", "responsible"),
    descriptor!(Con, "CON", "C4 - Achievement-Striving", "lazy", "hardworking"),
    descriptor!(Con, "CON", "C5 - Self-Discipline", "undisciplined", "self-disciplined"),
    descriptor!(Con, "CON", "C6 - Cautiousness", "impractical", "practical"),
    descriptor!(Con, "CON", "C6 - Cautiousness", "extravagant", "thrifty"),
    descriptor!(Con, "CON", "CON", "disorganized", "organized"),
    descriptor!(Con, "CON", "CON", "negligent", "conscientious"),
    descriptor!(Con, "CON", "CON", "careless", "thorough"),
    descriptor!(Neu, "NEU", "N1 - Anxiety", "relaxed", "tense"),
    descriptor!(Neu, "NEU", "N1 - Anxiety", "at ease", "nervous"),
    descriptor!(Neu, "NEU", "N1 - Anxiety", "easygoing", "anxious"),
    descriptor!(Neu, "NEU", "N2 - Anger", "calm", "angry"),
    descriptor!(Neu, "NEU", "N2 - Anger", "patient", "irritable"),
    descriptor!(Neu, "NEU", "N3 - Depression", "happy", "depressed"),
    descriptor!(
        Neu,
        "NEU",
        "N4 - Self-Consciousness",
        "unselfconscious",
        "self-conscious"
    ),
    descriptor!(Neu, "NEU", "N5 - Immoderation", "level-headed", "impulsive"),
    descriptor!(Neu, "NEU", "N6 - Vulnerability", "contented", "discontented"),
    descriptor!(
        Neu,
        "NEU",
        "N6 - Vulnerability",
        "emotionally stable",
        "emotionally unstable"
    ),
    descriptor!(Opn, "OPE", "O1 - Imagination", "unimaginative", "imaginative"),
    descriptor!(Opn, "OPE", "O2 - Artistic Interests", "uncreative", "creative"),
    descriptor!(
        Opn,
        "OPE",
        "O2 - Artistic Interests",
        "artistically unappreciative",
        "artistically appreciative"
    ),
    descriptor!(Opn, "OPE", "O2 - Artistic Interests", "unaesthetic", "aesthetic"),
    descriptor!(Opn, "OPE", "O3 - Emotionality", "unreflective", "reflective"),
    descriptor!(
        Opn,
        "OPE",
        "O3 - Emotionality",
        "emotionally closed",
        "emotionally aware"
    ),
    descriptor!(Opn, "OPE", "O4 - Adventurousness", "uninquisitive", "curious"),
    descriptor!(Opn, "OPE", "O4 - Adventurousness", "predictable", "spontaneous"),
    descriptor!(Opn, "OPE", "O5 - Intellect", "unintelligent", "intelligent"),
    descriptor!(Opn, "OPE", "O5 - Intellect", "unanalytical", "analytical"),
    descriptor!(Opn, "OPE", "O5 - Intellect", "unsophisticated", "sophisticated"),
    descriptor!(
        Opn,
        "OPE",
        "O6 - Liberalism",
        "socially conservative",
        "socially progressive"
    ),
];

/// Rows of the table for one dimension, in table order.
pub fn descriptors_for(dimension: Dimension) -> Vec<&'static Descriptor> {
    DESCRIPTORS.iter().filter(|d| d.domain == dimension).collect()
}

/// The table as CSV, column order Domain, Facet, Low Marker, High Marker.
pub fn descriptors_csv() -> String {
    let mut out = String::from("Domain,Facet,Low Marker,High Marker\n");
    for d in &DESCRIPTORS {
        out.push_str(d.raw_domain);
        out.push(',');
        out.push_str(d.facet);
        out.push(',');
        out.push_str(d.low_marker);
        out.push(',');
        out.push_str(d.high_marker);
        out.push('\n');
    }
    out
}

/// A sampled marker: the table row it came from, the polarity-selected
/// adjective, and the level word it will be prefixed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampledDescriptor {
    pub descriptor: &'static Descriptor,
    pub marker: &'static str,
    pub level: Level,
}

/// Sample `k` distinct table rows for one trait, without replacement.
/// The marker is chosen by the spec's polarity. Deterministic for a
/// fixed seed.
pub fn sample_descriptors<R: Rng + ?Sized>(
    spec: &TraitSpec,
    k: usize,
    rng: &mut R,
) -> Result<Vec<SampledDescriptor>, PersonaError> {
    let rows = descriptors_for(spec.dimension);
    if k == 0 || k > rows.len() {
        return Err(PersonaError::InsufficientDescriptors {
            dimension: spec.dimension,
            requested: k,
            available: rows.len(),
        });
    }
    let picks = rand::seq::index::sample(rng, rows.len(), k);
    Ok(picks
        .into_iter()
        .map(|i| SampledDescriptor {
            descriptor: rows[i],
            marker: rows[i].marker(spec.polarity),
            level: spec.level,
        })
        .collect())
}

/// A rendered personality description plus the markers it used.
#[derive(Debug, Clone)]
pub struct PersonalityDescription {
    pub text: String,
    pub used_descriptors: Vec<SampledDescriptor>,
}

/// Render the description template for a profile: the trait clause
/// ("very high in agreeableness and ...") followed by `k_per_trait`
/// level-prefixed markers per trait.
pub fn render_description<R: Rng + ?Sized>(
    profile: &TraitProfile,
    k_per_trait: usize,
    rng: &mut R,
) -> Result<PersonalityDescription, PersonaError> {
    if profile.specs.is_empty() {
        return Err(PersonaError::AllNeutral);
    }
    let trait_clause = profile
        .specs
        .iter()
        .map(TraitSpec::clause)
        .collect::<Vec<_>>()
        .join(" and ");

    let mut used = Vec::with_capacity(profile.specs.len() * k_per_trait);
    for spec in &profile.specs {
        used.extend(sample_descriptors(spec, k_per_trait, rng)?);
    }
    let descriptor_clause = used
        .iter()
        .map(|s| format!("{} {}", s.level.word(), s.marker))
        .collect::<Vec<_>>()
        .join(", ");

    Ok(PersonalityDescription {
        text: format!(
            "The personality traits are {trait_clause}, with {descriptor_clause}"
        ),
        used_descriptors: used,
    })
}

/// A score row that could not become a profile.
#[derive(Debug)]
pub struct RowIssue {
    pub row: usize,
    pub error: PersonaError,
}

/// Deduplicate score rows by their derived specs (not raw scores),
/// keeping first occurrences in input order. Rows that derive no specs
/// are reported with their index and skipped.
pub fn collect_unique_profiles(
    rows: Vec<BTreeMap<Dimension, Score>>,
) -> (Vec<TraitProfile>, Vec<RowIssue>) {
    let mut seen: std::collections::HashSet<Vec<TraitSpec>> = std::collections::HashSet::new();
    let mut profiles = Vec::new();
    let mut issues = Vec::new();
    for (row, scores) in rows.into_iter().enumerate() {
        match derive_profile(scores) {
            Ok(profile) => {
                if seen.insert(profile.specs.clone()) {
                    profiles.push(profile);
                }
            }
            Err(error) => issues.push(RowIssue { row, error }),
        }
    }
    (profiles, issues)
}

/// Parse a score file: JSON-lines (objects keyed AGR/CON/EXT/NEU/OPN)
/// or delimited text with those columns. Any off-grid or unparseable
/// value aborts with every bad row listed.
pub fn parse_score_rows(
    content: &str,
) -> Result<Vec<BTreeMap<Dimension, Score>>, PersonaError> {
    let trimmed = content.trim_start();
    if trimmed.starts_with('{') {
        parse_score_jsonl(content)
    } else {
        parse_score_delimited(content)
    }
}

fn parse_score_jsonl(content: &str) -> Result<Vec<BTreeMap<Dimension, Score>>, PersonaError> {
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row_no = idx + 1;
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                bad.push(format!("row {row_no}: {e}"));
                continue;
            }
        };
        let Some(object) = value.as_object() else {
            bad.push(format!("row {row_no}: not a JSON object"));
            continue;
        };
        let mut scores = BTreeMap::new();
        let mut row_ok = true;
        for (key, raw) in object {
            let Some(dimension) = Dimension::from_code(key) else {
                continue;
            };
            if raw.is_null() {
                continue;
            }
            match raw.as_f64().ok_or(()).and_then(|v| Score::new(v).map_err(|_| ())) {
                Ok(score) => {
                    scores.insert(dimension, score);
                }
                Err(()) => {
                    bad.push(format!("row {row_no}: bad {key} value {raw}"));
                    row_ok = false;
                }
            }
        }
        if row_ok {
            rows.push(scores);
        }
    }
    if bad.is_empty() {
        Ok(rows)
    } else {
        Err(PersonaError::ScoreFile(bad))
    }
}

fn parse_score_delimited(
    content: &str,
) -> Result<Vec<BTreeMap<Dimension, Score>>, PersonaError> {
    let first_line = content.lines().next().unwrap_or("");
    let delimiter = if first_line.contains('\t') && !first_line.contains(',') {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PersonaError::ScoreFile(vec![format!("header: {e}")]))?
        .clone();
    let mut columns: Vec<(usize, Dimension)> = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        if let Some(dimension) = Dimension::from_code(name) {
            columns.push((idx, dimension));
        }
    }
    let found: std::collections::HashSet<Dimension> =
        columns.iter().map(|&(_, d)| d).collect();
    if found.len() != 5 {
        let missing: Vec<&str> = Dimension::ALL
            .iter()
            .filter(|d| !found.contains(d))
            .map(|d| d.code())
            .collect();
        return Err(PersonaError::ScoreFile(vec![format!(
            "missing column(s): {}",
            missing.join(", ")
        )]));
    }

    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("row {row_no}: {e}"));
                continue;
            }
        };
        let mut scores = BTreeMap::new();
        let mut row_ok = true;
        for &(col, dimension) in &columns {
            let cell = record.get(col).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            match cell.parse::<f64>().map_err(|_| ()).and_then(|v| {
                Score::new(v).map_err(|_| ())
            }) {
                Ok(score) => {
                    scores.insert(dimension, score);
                }
                Err(()) => {
                    bad.push(format!(
                        "row {row_no}: bad {} value {cell:?}",
                        dimension.code()
                    ));
                    row_ok = false;
                }
            }
        }
        if row_ok {
            rows.push(scores);
        }
    }
    if bad.is_empty() {
        Ok(rows)
    } else {
        Err(PersonaError::ScoreFile(bad))
    }
}

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("score {0} is off the 1.0-7.0 half-point grid")]
    OffGridScore(f64),
    #[error("every provided score is neutral (4.0); the role would carry no traits")]
    AllNeutral,
    #[error("requested {requested} descriptors for {dimension} but only {available} exist")]
    InsufficientDescriptors {
        dimension: Dimension,
        requested: usize,
        available: usize,
    },
    #[error("score file has {} malformed row(s): {}", .0.len(), .0.join("; "))]
    ScoreFile(Vec<String>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn score(v: f64) -> Score {
        Score::new(v).unwrap()
    }

    #[test]
    fn level_mapping_matches_interval_rules() {
        assert_eq!(
            map_score_to_level(score(6.5)),
            Some((Polarity::High, Level::Extremely))
        );
        assert_eq!(map_score_to_level(score(4.0)), None);
        assert_eq!(
            map_score_to_level(score(3.5)),
            Some((Polarity::Low, Level::ABit))
        );
        assert_eq!(
            map_score_to_level(score(1.0)),
            Some((Polarity::Low, Level::Extremely))
        );
    }

    #[test]
    fn level_mapping_is_total_and_symmetric() {
        let mut neutral = 0;
        for s in Score::grid() {
            match map_score_to_level(s) {
                None => neutral += 1,
                Some((polarity, level)) => {
                    let mirror = score(8.0 - s.value());
                    let (mirror_polarity, mirror_level) =
                        map_score_to_level(mirror).unwrap();
                    assert_eq!(level, mirror_level, "level symmetry at {s}");
                    assert_ne!(polarity, mirror_polarity, "polarity flips at {s}");
                }
            }
        }
        assert_eq!(neutral, 1);
        assert_eq!(Score::grid().count(), 13);
    }

    #[test]
    fn off_grid_scores_rejected() {
        for v in [3.25, 0.5, 7.5, 3.1, f64::NAN, -1.0] {
            assert!(Score::new(v).is_err(), "{v} should be off-grid");
        }
    }

    #[test]
    fn derive_profile_keeps_canonical_order() {
        let mut scores = BTreeMap::new();
        scores.insert(Dimension::Ext, score(5.5));
        scores.insert(Dimension::Agr, score(6.0));
        let profile = derive_profile(scores).unwrap();
        assert_eq!(
            profile.specs,
            vec![
                TraitSpec {
                    dimension: Dimension::Agr,
                    polarity: Polarity::High,
                    level: Level::Very
                },
                TraitSpec {
                    dimension: Dimension::Ext,
                    polarity: Polarity::High,
                    level: Level::Very
                },
            ]
        );
    }

    #[test]
    fn derive_profile_all_neutral_errors() {
        let scores: BTreeMap<Dimension, Score> = Dimension::ALL
            .iter()
            .map(|&d| (d, score(4.0)))
            .collect();
        assert!(matches!(
            derive_profile(scores),
            Err(PersonaError::AllNeutral)
        ));
    }

    #[test]
    fn derive_profile_single_low_neu() {
        // 2.5 sits in the [2.0, 2.5] band: very, low side.
        let mut scores = BTreeMap::new();
        scores.insert(Dimension::Neu, score(2.5));
        let profile = derive_profile(scores).unwrap();
        assert_eq!(
            profile.specs,
            vec![TraitSpec {
                dimension: Dimension::Neu,
                polarity: Polarity::Low,
                level: Level::Very
            }]
        );
    }

    #[test]
    fn table_has_expected_shape() {
        assert_eq!(DESCRIPTORS.len(), 52);
        assert_eq!(descriptors_for(Dimension::Ext).len(), 9);
        assert_eq!(descriptors_for(Dimension::Agr).len(), 11);
        assert_eq!(descriptors_for(Dimension::Con).len(), 10);
        assert_eq!(descriptors_for(Dimension::Neu).len(), 10);
        assert_eq!(descriptors_for(Dimension::Opn).len(), 12);
        for d in &DESCRIPTORS {
            assert_eq!(Dimension::from_code(d.raw_domain), Some(d.domain));
        }
    }

    #[test]
    fn sampling_is_seeded_and_polarity_correct() {
        let spec = TraitSpec {
            dimension: Dimension::Agr,
            polarity: Polarity::High,
            level: Level::Very,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let first = sample_descriptors(&spec, 2, &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let second = sample_descriptors(&spec, 2, &mut rng).unwrap();
        assert_eq!(first, second);
        // Distinct table rows (facets can repeat across rows).
        assert_ne!(first[0].descriptor.low_marker, first[1].descriptor.low_marker);
        for s in &first {
            assert_eq!(s.marker, s.descriptor.high_marker);
            assert_eq!(s.level, Level::Very);
        }
    }

    #[test]
    fn sampling_low_openness_uses_low_column() {
        let spec = TraitSpec {
            dimension: Dimension::Opn,
            polarity: Polarity::Low,
            level: Level::ABit,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let picked = sample_descriptors(&spec, 1, &mut rng).unwrap();
        let lows: Vec<&str> = descriptors_for(Dimension::Opn)
            .iter()
            .map(|d| d.low_marker)
            .collect();
        assert!(lows.contains(&picked[0].marker));
    }

    #[test]
    fn sampling_pigeonhole() {
        let spec = TraitSpec {
            dimension: Dimension::Con,
            polarity: Polarity::High,
            level: Level::Extremely,
        };
        let available = descriptors_for(Dimension::Con).len();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_descriptors(&spec, available + 1, &mut rng),
            Err(PersonaError::InsufficientDescriptors { .. })
        ));
    }

    #[test]
    fn rendered_description_shape() {
        let mut scores = BTreeMap::new();
        scores.insert(Dimension::Agr, score(6.0));
        scores.insert(Dimension::Ext, score(5.5));
        let profile = derive_profile(scores).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let description = render_description(&profile, 2, &mut rng).unwrap();
        assert!(description.text.starts_with("The personality traits are "));
        assert!(description
            .text
            .contains("very high in agreeableness and very high in extraversion"));
        assert_eq!(description.used_descriptors.len(), 4);
        // Every marker is level-prefixed in the rendered text.
        for s in &description.used_descriptors {
            assert!(description
                .text
                .contains(&format!("{} {}", s.level.word(), s.marker)));
        }
    }

    #[test]
    fn rendered_description_single_extreme_trait() {
        let mut scores = BTreeMap::new();
        scores.insert(Dimension::Con, score(7.0));
        let profile = derive_profile(scores).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let description = render_description(&profile, 1, &mut rng).unwrap();
        assert_eq!(
            description
                .text
                .matches("extremely high in conscientiousness")
                .count(),
            1
        );
    }

    #[test]
    fn description_well_formedness() {
        // Random profiles: level words outnumber specs + descriptors,
        // and every adjective comes from the correct polarity column.
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut scores = BTreeMap::new();
            for (i, &dimension) in Dimension::ALL.iter().enumerate() {
                let h = (seed as usize + i * 3) % 13;
                scores.insert(dimension, score(1.0 + 0.5 * h as f64));
            }
            let Ok(profile) = derive_profile(scores) else { continue };
            let k = 1 + (seed as usize % 3);
            let description = render_description(&profile, k, &mut rng).unwrap();

            let level_words: usize = ["a bit", "very", "extremely"]
                .iter()
                .map(|w| description.text.matches(w).count())
                .sum();
            assert!(
                level_words >= profile.specs.len() + description.used_descriptors.len(),
                "seed {seed}: {level_words} level words for {} specs + {} descriptors",
                profile.specs.len(),
                description.used_descriptors.len()
            );
            for sampled in &description.used_descriptors {
                let spec = profile
                    .specs
                    .iter()
                    .find(|s| s.dimension == sampled.descriptor.domain)
                    .unwrap();
                assert_eq!(sampled.marker, sampled.descriptor.marker(spec.polarity));
            }
        }
    }

    #[test]
    fn dedup_keys_on_specs_not_scores() {
        let mut a = BTreeMap::new();
        a.insert(Dimension::Agr, score(6.0));
        let mut b = BTreeMap::new();
        b.insert(Dimension::Agr, score(5.5));
        let (profiles, issues) = collect_unique_profiles(vec![a, b]);
        assert_eq!(profiles.len(), 1);
        assert!(issues.is_empty());

        let (empty, _) = collect_unique_profiles(vec![]);
        assert!(empty.is_empty());
    }

    #[test]
    fn dedup_is_idempotent() {
        let rows: Vec<BTreeMap<Dimension, Score>> = (0..10)
            .map(|i| {
                let mut m = BTreeMap::new();
                m.insert(Dimension::Ext, score(1.0 + 0.5 * f64::from(i % 5)));
                m
            })
            .collect();
        let (once, _) = collect_unique_profiles(rows);
        let again: Vec<BTreeMap<Dimension, Score>> =
            once.iter().map(|p| p.scores.clone()).collect();
        let (twice, _) = collect_unique_profiles(again);
        assert_eq!(once, twice);
    }

    #[test]
    fn parse_csv_scores() {
        let content = "id,AGR,CON,EXT,NEU,OPN\n1,6.0,4.0,5.5,,3.0\n2,1.0,2.5,4.5,7.0,4.0\n";
        let rows = parse_score_rows(content).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][&Dimension::Agr].value(), 6.0);
        assert!(!rows[0].contains_key(&Dimension::Neu));
        assert_eq!(rows[1][&Dimension::Neu].value(), 7.0);
    }

    #[test]
    fn parse_jsonl_scores() {
        let content = "{\"AGR\": 6.0, \"EXT\": 5.5}\n{\"NEU\": 2.5, \"ignored\": \"x\"}\n";
        let rows = parse_score_rows(content).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][&Dimension::Neu].value(), 2.5);
    }

    #[test]
    fn parse_rejects_corrupt_rows_with_indices() {
        let content = "AGR,CON,EXT,NEU,OPN\n6.0,4.0,5.5,2.0,3.0\n3.25,4.0,5.5,2.0,3.0\n";
        match parse_score_rows(content) {
            Err(PersonaError::ScoreFile(issues)) => {
                assert_eq!(issues.len(), 1);
                assert!(issues[0].contains("row 2"));
            }
            other => panic!("expected ScoreFile error, got {other:?}"),
        }
    }

    #[test]
    fn parse_requires_all_columns() {
        let content = "AGR,CON,EXT\n6.0,4.0,5.5\n";
        assert!(matches!(
            parse_score_rows(content),
            Err(PersonaError::ScoreFile(_))
        ));
    }

    #[test]
    fn csv_export_shape() {
        let csv = descriptors_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 53); // header + 52 rows
        assert_eq!(lines[0], "Domain,Facet,Low Marker,High Marker");
        assert_eq!(lines[1], "EXT,E1 - Friendliness,unfriendly,friendly");
        assert_eq!(
            lines[52],
            "OPE,O6 - Liberalism,socially conservative,socially progressive"
        );
    }
}
