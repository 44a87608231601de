//! Pipeline entry point: every stage as a subcommand over shared
//! config, seeds, and JSON-lines artifacts.
//!
//! Exit codes: 0 success, 2 input error, 3 empty or degenerate data,
//! 4 backend exhaustion.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{build_backend, PipelineConfig, Stage, StageBackend};
use traitplay::backend::BackendError;
use traitplay::backtest::{
    backtest_dialogue, judge_all_dimensions, DiversityRecord, HumanAnnotation,
};
use traitplay::dialogue::{batch_generate, token_stats, DialogueError};
use traitplay::metrics::{
    agreement, diversity_matrix, grouped_success_rates, round2, success_rates, AgreementMapping,
    AgreementReport, GroupBy, MetricsError, SuccessOptions, SuccessReport,
};
use traitplay::persona::{collect_unique_profiles, descriptors_csv, parse_score_rows, Dimension};
use traitplay::rolegen::{build_role_set, RoleGenError};
use traitplay::store::{
    build_clean, read_jsonl, sha256_hex_file, split_raw, write_jsonl, BenchManifest, StoreError,
};
use traitplay::topics::{dedupe_topics, extract_topics, load_corpus, TopicsError};
use traitplay::{AblationConfig, BackTestRecord, Dialogue, Exec, RoleCard, Topic};

#[derive(Parser)]
#[command(
    name = "traitplay",
    version,
    about = "Generate personality-infused two-agent dialogues and back-test the traits they express"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use this scripted-backend rule file for every stage (overrides
    /// the config's backend sections).
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    /// Persist the backend call log (JSON-lines) here.
    #[arg(long, global = true)]
    call_log: Option<PathBuf>,
    /// Cap concurrent live requests (http backends).
    #[arg(long, global = true)]
    max_parallel: Option<usize>,
    /// Force sequential execution of batch stages.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build role cards from a Big Five score file.
    CreateRoles {
        /// Score file: CSV or JSON-lines with AGR/CON/EXT/NEU/OPN values.
        scores: PathBuf,
        /// How many role cards to generate.
        #[arg(long)]
        target: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Descriptors sampled per trait in the personality description.
        #[arg(long)]
        k_per_trait: Option<usize>,
        #[arg(long)]
        max_attempts: Option<u32>,
        #[arg(long, default_value = "roles.jsonl")]
        out: PathBuf,
    },
    /// Extract one-sentence discussion topics from a text corpus.
    ExtractTopics {
        /// Corpus file: CSV or JSON-lines with a text column/key.
        corpus: PathBuf,
        #[arg(long, default_value = "text")]
        text_column: String,
        #[arg(long)]
        max_attempts: Option<u32>,
        #[arg(long, default_value = "topics.jsonl")]
        out: PathBuf,
    },
    /// Generate dialogues over sampled (initiator, partner, topic) triples.
    Generate {
        roles: PathBuf,
        topics: PathBuf,
        /// Number of dialogues to generate.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        max_pairs: Option<usize>,
        /// Which persona ingredients the prompts carry:
        /// both|traits|experience|none.
        #[arg(long, default_value = "both")]
        ablation: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "dialogues.jsonl")]
        out: PathBuf,
    },
    /// Judge every predefined dimension of both roles in each dialogue.
    Backtest {
        dialogues: PathBuf,
        roles: PathBuf,
        #[arg(long, default_value = "backtests.jsonl")]
        out: PathBuf,
    },
    /// Success-rate reports from back-test records.
    Metrics {
        backtests: PathBuf,
        dialogues: PathBuf,
        /// Extra breakdown: level|pairs|ablation.
        #[arg(long)]
        group_by: Option<String>,
        /// Skip dimensions without a verdict instead of failing.
        #[arg(long)]
        skip_incomplete: bool,
        /// Human annotations (JSON-lines); adds the judge/human
        /// agreement report.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Human-label mapping for agreement: direct|success.
        #[arg(long, default_value = "direct")]
        mapping: String,
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
    },
    /// Split raw dialogues into eval/test/clean-source and build the
    /// clean set from back-test records.
    BenchSplit {
        raw: PathBuf,
        #[arg(long)]
        eval: usize,
        #[arg(long)]
        test: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Back-test records; required to build the clean split.
        #[arg(long)]
        backtests: Option<PathBuf>,
        /// Keep a dialogue when at least one role fully succeeded
        /// (default: both roles must).
        #[arg(long)]
        per_role: bool,
        #[arg(long, default_value = "splits")]
        out_dir: PathBuf,
    },
    /// Judge all five dimensions for sampled single-trait roles and
    /// tally the detection matrix.
    Diversity {
        roles: PathBuf,
        dialogues: PathBuf,
        /// Roles sampled per predefined-trait group.
        #[arg(long, default_value_t = 10)]
        per_group: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "diversity.csv")]
        out: PathBuf,
    },
    /// Write the embedded descriptor table as CSV.
    ExportDescriptors {
        #[arg(long, default_value = "descriptors.csv")]
        out: PathBuf,
    },
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
    fn degenerate(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
    fn backend(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::input(format!("{e:#}"))
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<RoleGenError> for CliError {
    fn from(e: RoleGenError) -> Self {
        match e {
            RoleGenError::TooManyFailures { .. } => CliError::backend(e.to_string()),
            RoleGenError::NoProfiles => CliError::degenerate(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<TopicsError> for CliError {
    fn from(e: TopicsError) -> Self {
        match e {
            TopicsError::EmptyCorpus | TopicsError::EmptyResult => {
                CliError::degenerate(e.to_string())
            }
            TopicsError::Corpus(_) => CliError::input(e.to_string()),
        }
    }
}

impl From<DialogueError> for CliError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::TooManyFailures { .. } => CliError::backend(e.to_string()),
            other => CliError::degenerate(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::EmptyInput => CliError::degenerate(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::ExhaustedRetries { .. } | BackendError::ScriptExhausted => {
                CliError::backend(e.to_string())
            }
            other => CliError::input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = PipelineConfig::load(cli.config.as_deref())?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let script = cli.script.as_deref();
    let seed_of = |flag: Option<u64>| flag.or(config.seed).unwrap_or(0);

    let generator = |cfg: &PipelineConfig| -> Result<StageBackend, CliError> {
        Ok(build_backend(&cfg.generator, Stage::Generation, script, cli.max_parallel)?)
    };
    let judge = |cfg: &PipelineConfig| -> Result<StageBackend, CliError> {
        Ok(build_backend(&cfg.judge, Stage::Judging, script, cli.max_parallel)?)
    };
    let flush_log = |stage: &StageBackend| -> Result<(), CliError> {
        if let Some(path) = &cli.call_log {
            stage
                .backend
                .call_log()
                .write_jsonl(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    };

    match cli.command {
        Command::CreateRoles { scores, target, seed, k_per_trait, max_attempts, out } => {
            let content = read_input(&scores)?;
            let rows = parse_score_rows(&content).map_err(|e| CliError::input(e.to_string()))?;
            let (profiles, issues) = collect_unique_profiles(rows);
            for issue in &issues {
                log::warn!("score row {} skipped: {}", issue.row + 1, issue.error);
            }
            if target > 0 && profiles.is_empty() {
                return Err(CliError::degenerate("no usable trait profiles in the score file"));
            }
            log::info!("{} unique trait profiles", profiles.len());
            let stage = generator(&config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed_of(seed));
            let cards = build_role_set(
                &profiles,
                target,
                k_per_trait.or(config.k_per_trait).unwrap_or(3),
                stage.backend.as_ref(),
                &stage.params,
                max_attempts.or(config.max_attempts).unwrap_or(3),
                &mut rng,
                exec,
            )?;
            write_jsonl(&out, &cards)?;
            flush_log(&stage)?;
            println!("wrote {} role cards to {}", cards.len(), out.display());
            Ok(())
        }
        Command::ExtractTopics { corpus, text_column, max_attempts, out } => {
            let content = read_input(&corpus)?;
            let records = load_corpus(&content, &text_column)
                .map_err(|e| CliError::input(e.to_string()))?;
            if records.is_empty() {
                return Err(CliError::degenerate("corpus has no text records"));
            }
            let stage = generator(&config)?;
            let topics = extract_topics(
                &records,
                stage.backend.as_ref(),
                &stage.params,
                max_attempts.or(config.max_attempts).unwrap_or(3),
                exec,
            )?;
            let topics = dedupe_topics(topics);
            write_jsonl(&out, &topics)?;
            flush_log(&stage)?;
            println!(
                "wrote {} topics to {} (from {} corpus records)",
                topics.len(),
                out.display(),
                records.len()
            );
            Ok(())
        }
        Command::Generate { roles, topics, n, max_pairs, ablation, seed, out } => {
            let roles: Vec<RoleCard> = read_jsonl(&roles)?;
            let topics: Vec<Topic> = read_jsonl(&topics)?;
            let ablation = AblationConfig::parse(&ablation).ok_or_else(|| {
                CliError::input(format!(
                    "unknown ablation {ablation:?} (expected both|traits|experience|none)"
                ))
            })?;
            let stage = generator(&config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed_of(seed));
            let outcome = batch_generate(
                &roles,
                &topics,
                n,
                max_pairs.or(config.max_pairs).unwrap_or(4),
                ablation,
                &mut rng,
                stage.backend.as_ref(),
                &stage.params,
                exec,
            )?;
            write_jsonl(&out, &outcome.dialogues)?;
            flush_log(&stage)?;
            println!(
                "wrote {} dialogues to {} ({} backend failures excluded)",
                outcome.dialogues.len(),
                out.display(),
                outcome.backend_failures
            );
            Ok(())
        }
        Command::Backtest { dialogues, roles, out } => {
            let dialogues: Vec<Dialogue> = read_jsonl(&dialogues)?;
            let roles: Vec<RoleCard> = read_jsonl(&roles)?;
            let by_id: BTreeMap<String, RoleCard> =
                roles.into_iter().map(|r| (r.id.clone(), r)).collect();
            let names: BTreeMap<String, String> =
                by_id.values().map(|r| (r.id.clone(), r.name.clone())).collect();
            let mut missing = Vec::new();
            let mut jobs: Vec<(&Dialogue, &RoleCard)> = Vec::new();
            for dialogue in &dialogues {
                for role_id in [&dialogue.initiator_id, &dialogue.partner_id] {
                    match by_id.get(role_id) {
                        Some(role) => jobs.push((dialogue, role)),
                        None => missing.push(format!("{}/{}", dialogue.id, role_id)),
                    }
                }
            }
            if !missing.is_empty() {
                return Err(CliError::input(format!(
                    "dialogues reference unknown roles: {}",
                    missing.join(", ")
                )));
            }
            let stage = judge(&config)?;
            let records: Vec<BackTestRecord> = exec.map(jobs, |(dialogue, role)| {
                backtest_dialogue(dialogue, role, &names, stage.backend.as_ref(), &stage.params)
            });
            write_jsonl(&out, &records)?;
            flush_log(&stage)?;
            println!("wrote {} back-test records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Metrics {
            backtests,
            dialogues,
            group_by,
            skip_incomplete,
            annotations,
            mapping,
            out_dir,
        } => {
            let records: Vec<BackTestRecord> = read_jsonl(&backtests)?;
            let dialogues: Vec<Dialogue> = read_jsonl(&dialogues)?;
            let options = SuccessOptions { skip_incomplete };
            let report = success_rates(&records, options, exec)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
            let mut rows = vec![("all".to_owned(), report.clone())];
            if let Some(key) = group_by.as_deref() {
                let group_by = match key {
                    "level" => GroupBy::Level,
                    "pairs" => GroupBy::PairCount,
                    "ablation" => GroupBy::Ablation,
                    other => {
                        return Err(CliError::input(format!(
                            "unknown group key {other:?} (expected level|pairs|ablation)"
                        )))
                    }
                };
                let groups = grouped_success_rates(&records, &dialogues, group_by, options, exec)?;
                rows.extend(groups.into_iter().map(|(k, r)| (k.to_string(), r)));
            }
            let csv_path = out_dir.join("success.csv");
            std::fs::write(&csv_path, success_csv(&rows))
                .map_err(|e| CliError::input(format!("{}: {e}", csv_path.display())))?;
            print_success_tables(&rows);
            if let Some(stats) = token_stats(&dialogues) {
                println!(
                    "dialogues: {} | avg pairs {:.2} | tokens per turn min {} max {} avg {:.2} over {} utterances",
                    stats.dialogues,
                    stats.avg_pairs,
                    stats.min_tokens,
                    stats.max_tokens,
                    stats.avg_tokens,
                    stats.utterances
                );
            }
            if let Some(annotations_path) = annotations {
                let annotations: Vec<HumanAnnotation> = read_jsonl(&annotations_path)?;
                let mapping = match mapping.as_str() {
                    "direct" => AgreementMapping::DirectPoles,
                    "success" => AgreementMapping::SuccessConsistent,
                    other => {
                        return Err(CliError::input(format!(
                            "unknown mapping {other:?} (expected direct|success)"
                        )))
                    }
                };
                let agreement_report = agreement(&records, &annotations, mapping)?;
                let agreement_path = out_dir.join("agreement.csv");
                std::fs::write(&agreement_path, agreement_csv(&agreement_report))
                    .map_err(|e| CliError::input(format!("{}: {e}", agreement_path.display())))?;
                println!("\nAgreement with human evaluation (%)");
                println!("{:<10} {:>8} {:>8} {:>8}", "dimension", "samples", "agrees", "rate");
                for dimension in REPORT_DIMS {
                    let cell =
                        agreement_report.per_dim.get(&dimension).copied().unwrap_or_default();
                    println!(
                        "{:<10} {:>8} {:>8} {:>8.2}",
                        dimension.code(),
                        cell.n,
                        cell.successes,
                        round2(cell.rate())
                    );
                }
                println!(
                    "{:<10} {:>8} {:>8} {:>8.2}",
                    "Total",
                    agreement_report.total.n,
                    agreement_report.total.successes,
                    round2(agreement_report.total.rate())
                );
                println!("wrote {}", agreement_path.display());
            }
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::BenchSplit { raw, eval, test, seed, backtests, per_role, out_dir } => {
            let raw_dialogues: Vec<Dialogue> = read_jsonl(&raw)?;
            let raw_count = raw_dialogues.len();
            let seed = seed_of(seed);
            let (eval_set, test_set, clean_source) = split_raw(raw_dialogues, eval, test, seed)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
            let eval_path = out_dir.join("eval.jsonl");
            let test_path = out_dir.join("test.jsonl");
            let clean_source_path = out_dir.join("clean_source.jsonl");
            write_jsonl(&eval_path, &eval_set)?;
            write_jsonl(&test_path, &test_set)?;
            write_jsonl(&clean_source_path, &clean_source)?;
            let mut hashes = BTreeMap::new();
            for (name, path) in [
                ("eval.jsonl", &eval_path),
                ("test.jsonl", &test_path),
                ("clean_source.jsonl", &clean_source_path),
            ] {
                hashes.insert(name.to_owned(), sha256_hex_file(path)?);
            }
            let (clean_len, filtered) = if let Some(backtests) = backtests {
                let records: Vec<BackTestRecord> = read_jsonl(&backtests)?;
                let clean: Vec<Dialogue> = build_clean(&clean_source, &records, per_role)?
                    .into_iter()
                    .cloned()
                    .collect();
                let clean_path = out_dir.join("clean.jsonl");
                write_jsonl(&clean_path, &clean)?;
                hashes.insert("clean.jsonl".to_owned(), sha256_hex_file(&clean_path)?);
                (Some(clean.len()), Some(clean_source.len() - clean.len()))
            } else {
                (None, None)
            };
            let manifest = BenchManifest {
                raw: raw_count,
                eval: eval_set.len(),
                test: test_set.len(),
                clean_source: clean_source.len(),
                clean: clean_len,
                filtered_failures: filtered,
                seed,
                hashes,
            };
            manifest.validate()?;
            let manifest_path = out_dir.join("manifest.json");
            let pretty = serde_json::to_string_pretty(&manifest)
                .map_err(|e| CliError::input(e.to_string()))?;
            std::fs::write(&manifest_path, pretty + "\n")
                .map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
            println!(
                "split {} raw dialogues into eval={} test={} clean_source={}{}",
                raw_count,
                manifest.eval,
                manifest.test,
                manifest.clean_source,
                manifest
                    .clean
                    .map(|c| format!(" clean={c}"))
                    .unwrap_or_default()
            );
            Ok(())
        }
        Command::Diversity { roles, dialogues, per_group, seed, out } => {
            let roles: Vec<RoleCard> = read_jsonl(&roles)?;
            let dialogues: Vec<Dialogue> = read_jsonl(&dialogues)?;
            let names: BTreeMap<String, String> =
                roles.iter().map(|r| (r.id.clone(), r.name.clone())).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed_of(seed));
            let jobs = pick_diversity_jobs(&roles, &dialogues, per_group, &mut rng);
            if jobs.is_empty() {
                return Err(CliError::degenerate(
                    "no single-trait roles with dialogues to judge",
                ));
            }
            let stage = judge(&config)?;
            let records: Vec<DiversityRecord> = exec
                .map(jobs, |(dialogue, role)| {
                    judge_all_dimensions(
                        dialogue,
                        role,
                        &names,
                        stage.backend.as_ref(),
                        &stage.params,
                    )
                })
                .into_iter()
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::input(e.to_string()))?;
            let matrix = diversity_matrix(&records)?;
            std::fs::write(&out, matrix.to_csv())
                .map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
            flush_log(&stage)?;
            for group in Dimension::ALL {
                println!(
                    "group {} (n={}): detected {}",
                    group.code(),
                    matrix.group_sizes[&group],
                    Dimension::ALL
                        .iter()
                        .map(|d| format!("{}={:.1}", d.code(), matrix.detected[&group][d]))
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::ExportDescriptors { out } => {
            std::fs::write(&out, descriptors_csv())
                .map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Seeded choice of (dialogue, role) pairs: per predefined-trait group,
/// up to `per_group` single-trait roles that appear in at least one
/// dialogue (their first, in file order).
fn pick_diversity_jobs<'a>(
    roles: &'a [RoleCard],
    dialogues: &'a [Dialogue],
    per_group: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(&'a Dialogue, &'a RoleCard)> {
    use rand::seq::SliceRandom;
    let mut jobs = Vec::new();
    for group in Dimension::ALL {
        let mut candidates: Vec<(&Dialogue, &RoleCard)> = roles
            .iter()
            .filter(|r| {
                r.profile.specs.len() == 1 && r.profile.specs[0].dimension == group
            })
            .filter_map(|role| {
                dialogues
                    .iter()
                    .find(|d| d.initiator_id == role.id || d.partner_id == role.id)
                    .map(|dialogue| (dialogue, role))
            })
            .collect();
        candidates.shuffle(rng);
        candidates.truncate(per_group);
        jobs.extend(candidates);
    }
    jobs
}

const REPORT_DIMS: [Dimension; 5] = [
    Dimension::Agr,
    Dimension::Con,
    Dimension::Ext,
    Dimension::Neu,
    Dimension::Opn,
];

fn success_csv(rows: &[(String, SuccessReport)]) -> String {
    let mut out = String::from("group,polarity,dimension,n,successes,rate\n");
    for (group, report) in rows {
        for (polarity, breakdown) in [
            ("positive", &report.positive),
            ("negative", &report.negative),
            ("overall", &report.combined),
        ] {
            for dimension in REPORT_DIMS {
                let cell = breakdown.per_dim.get(&dimension).copied().unwrap_or_default();
                out.push_str(&format!(
                    "{group},{polarity},{},{},{},{:.2}\n",
                    dimension.code(),
                    cell.n,
                    cell.successes,
                    round2(cell.rate())
                ));
            }
            out.push_str(&format!(
                "{group},{polarity},Overall,{},{},{:.2}\n",
                breakdown.overall.n,
                breakdown.overall.successes,
                round2(breakdown.overall.rate())
            ));
        }
    }
    out
}

fn agreement_csv(report: &AgreementReport) -> String {
    let mut out = String::from("dimension,samples,agrees,rate\n");
    for dimension in REPORT_DIMS {
        let cell = report.per_dim.get(&dimension).copied().unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.2}\n",
            dimension.code(),
            cell.n,
            cell.successes,
            round2(cell.rate())
        ));
    }
    out.push_str(&format!(
        "Total,{},{},{:.2}\n",
        report.total.n,
        report.total.successes,
        round2(report.total.rate())
    ));
    out
}

fn print_success_tables(rows: &[(String, SuccessReport)]) {
    for (group, report) in rows {
        println!("\nSuccess rate (%) [{group}]");
        println!(
            "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}",
            "polarity", "AGR", "CON", "EXT", "NEU", "OPN", "Overall"
        );
        for (polarity, breakdown) in [
            ("positive", &report.positive),
            ("negative", &report.negative),
            ("overall", &report.combined),
        ] {
            let mut line = format!("{polarity:<10}");
            for dimension in REPORT_DIMS {
                let cell = breakdown.per_dim.get(&dimension).copied().unwrap_or_default();
                line.push_str(&format!(" {:>8.2}", round2(cell.rate())));
            }
            line.push_str(&format!(" {:>9.2}", round2(breakdown.overall.rate())));
            println!("{line}");
        }
        println!(
            "trials: {} ({} successes)",
            report.combined.overall.n, report.combined.overall.successes
        );
    }
}
