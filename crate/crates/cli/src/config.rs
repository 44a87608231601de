//! Pipeline configuration: a TOML file merged with flags (flags win).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use traitplay::backend::{BackendConfig, GenParams, HttpBackend};
use traitplay::{ChatBackend, ScriptedBackend};

/// One backend section of the config file.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    /// "scripted" or "http".
    pub kind: Option<String>,
    /// Script path for the scripted kind.
    pub script: Option<PathBuf>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    // http-only knobs
    pub base_url: Option<String>,
    pub api_key_env: Option<String>,
    pub max_retries: Option<u32>,
    pub max_parallel: Option<usize>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub k_per_trait: Option<usize>,
    pub max_pairs: Option<usize>,
    pub max_attempts: Option<u32>,
    #[serde(default)]
    pub generator: BackendSection,
    #[serde(default)]
    pub judge: BackendSection,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: PipelineConfig = toml::from_str(&content)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(config)
    }
}

/// Which pipeline stage a backend serves; sets the decoding defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generation,
    Judging,
}

/// A backend handle plus the decoding parameters its stage uses.
pub struct StageBackend {
    pub backend: Box<dyn ChatBackend>,
    pub params: GenParams,
}

/// Resolve a stage backend. `script_override` (the global `--script`
/// flag) forces a scripted backend regardless of the config section.
pub fn build_backend(
    section: &BackendSection,
    stage: Stage,
    script_override: Option<&Path>,
    max_parallel_override: Option<usize>,
) -> Result<StageBackend> {
    let default_model = |kind: &str| match stage {
        Stage::Generation => format!("{kind}-generator"),
        Stage::Judging => format!("{kind}-judge"),
    };
    let mut params = {
        let model = section.model.clone();
        match stage {
            Stage::Generation => GenParams::generation(model.unwrap_or_default()),
            Stage::Judging => GenParams::judging(model.unwrap_or_default()),
        }
    };
    if let Some(t) = section.temperature {
        params.temperature = t;
    }
    if let Some(m) = section.max_tokens {
        params.max_tokens = m;
    }

    if let Some(script) = script_override {
        if params.model_id.is_empty() {
            params.model_id = default_model("scripted");
        }
        let backend = ScriptedBackend::load(script)
            .with_context(|| format!("cannot load script {}", script.display()))?;
        return Ok(StageBackend { backend: Box::new(backend), params });
    }

    match section.kind.as_deref() {
        Some("scripted") => {
            let Some(script) = section.script.as_deref() else {
                bail!("scripted backend needs a 'script' path in the config");
            };
            if params.model_id.is_empty() {
                params.model_id = default_model("scripted");
            }
            let backend = ScriptedBackend::load(script)
                .with_context(|| format!("cannot load script {}", script.display()))?;
            Ok(StageBackend { backend: Box::new(backend), params })
        }
        Some("http") => {
            let mut config = BackendConfig::default();
            if let Some(u) = &section.base_url {
                config.base_url = u.clone();
            }
            if let Some(e) = &section.api_key_env {
                config.api_key_env = e.clone();
            }
            if let Some(r) = section.max_retries {
                config.max_retries = r;
            }
            if let Some(p) = section.max_parallel {
                config.max_parallel = p;
            }
            if let Some(p) = max_parallel_override {
                config.max_parallel = p;
            }
            if let Some(t) = section.timeout_secs {
                config.timeout_secs = t;
            }
            if params.model_id.is_empty() {
                bail!("http backend needs a 'model' in the config");
            }
            let backend = HttpBackend::new(config).map_err(|e| anyhow::anyhow!("{e}"))?;
            Ok(StageBackend { backend: Box::new(backend), params })
        }
        Some(other) => bail!("unknown backend kind {other:?} (expected scripted or http)"),
        None => bail!(
            "no backend configured for this stage; pass --script <file> or set [generator]/[judge] in the config"
        ),
    }
}
