//! Pipeline configuration: one TOML file, every key shadowed by a global
//! flag of the same name (`[split] seed` becomes `--split-seed`; flags win).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use credi_core::corpus::{Dimension, SplitSpec};
use credi_core::dialogue::{DialogueVariant, Locale, SegmenterConfig};
use credi_core::evaluation::{AblationConfig, AblationMode};
use credi_core::inference::{BackendConfig, BackendKind};
use credi_core::prompting::{default_template, PromptConfig, PromptMode};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub split: Split,
    pub segmenter: Segmenter,
    pub prompt: Prompt,
    pub retrieval: Retrieval,
    pub backend: Backend,
    pub anonymize: Anonymize,
    pub balance: Balance,
    pub ablation: Ablation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub novels: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: "corpus.jsonl".into(),
            novels: "novels".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Split {
    pub train: u32,
    pub val: u32,
    pub test: u32,
    pub seed: u64,
}

impl Default for Split {
    fn default() -> Self {
        Split { train: 8, val: 1, test: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Segmenter {
    pub max_gap_paragraphs: usize,
    pub chapter_marker: Option<String>,
    pub attribution_verbs: Vec<String>,
    /// Open/close pairs, e.g. [["“", "”"], ["「", "」"]].
    pub quote_delimiters: Vec<(String, String)>,
}

impl Default for Segmenter {
    fn default() -> Self {
        let core = SegmenterConfig::default();
        Segmenter {
            max_gap_paragraphs: core.max_gap_paragraphs,
            chapter_marker: None,
            attribution_verbs: core.attribution_verbs,
            quote_delimiters: core.quote_delimiters,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prompt {
    /// joint | per-polarity | per-rel_type | per-hierarchy
    pub mode: String,
    pub variant: DialogueVariant,
    /// Retrieved exemplars per prompt (k).
    pub shots: usize,
    pub locale: Locale,
    /// Template file; omitted means the built-in default for the locale.
    pub template_file: Option<PathBuf>,
}

impl Default for Prompt {
    fn default() -> Self {
        Prompt {
            mode: "joint".into(),
            variant: DialogueVariant::Expanded,
            shots: 3,
            locale: Locale::Zh,
            template_file: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Retrieval {
    /// hash | remote
    pub embedder: String,
    pub dim: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
}

impl Default for Retrieval {
    fn default() -> Self {
        Retrieval { embedder: "hash".into(), dim: 256, endpoint: None, model: None, timeout_secs: 30 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backend {
    /// remote-chat | mock-lookup | mock-rule
    pub kind: String,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub parallelism: usize,
    pub rule_answer: Option<String>,
    pub backoff_base_ms: u64,
}

impl Default for Backend {
    fn default() -> Self {
        let core = BackendConfig::default();
        Backend {
            kind: "mock-rule".into(),
            endpoint: None,
            model: None,
            temperature: core.temperature,
            max_retries: core.max_retries,
            timeout_secs: core.timeout_secs,
            parallelism: core.parallelism,
            rule_answer: None,
            backoff_base_ms: core.backoff_base_ms,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Anonymize {
    pub enabled: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Balance {
    pub enabled: bool,
    /// polarity | rel_type | hierarchy
    pub dimension: String,
    pub min_count: usize,
    /// Omitted means no cap.
    pub max_count: Option<usize>,
    pub seed: u64,
}

impl Default for Balance {
    fn default() -> Self {
        Balance { enabled: false, dimension: "polarity".into(), min_count: 0, max_count: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// joint | per-dimension-all
    pub modes: Vec<String>,
    /// expanded | basic
    pub variants: Vec<String>,
    pub shots: Vec<usize>,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            modes: vec!["joint".into(), "per-dimension-all".into()],
            variants: vec!["expanded".into(), "basic".into()],
            shots: vec![3],
        }
    }
}

impl PipelineConfig {
    /// Loads a config file. Seeds must be written out explicitly: a file
    /// that relies on implicit seeds is rejected so every run stays
    /// reproducible from the file alone.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let raw: toml::Table =
            text.parse().with_context(|| format!("config {} is not valid TOML", path.display()))?;
        let seed_present = |table: &str| {
            raw.get(table).and_then(|t| t.get("seed")).is_some()
        };
        if !seed_present("split") {
            bail!("config {}: split.seed must be set explicitly", path.display());
        }
        let enabled = |table: &str| {
            raw.get(table).and_then(|t| t.get("enabled")).and_then(|v| v.as_bool()) == Some(true)
        };
        for table in ["anonymize", "balance"] {
            if enabled(table) && !seed_present(table) {
                bail!("config {}: {table}.seed must be set explicitly when enabled", path.display());
            }
        }
        let cfg: PipelineConfig = raw
            .try_into()
            .with_context(|| format!("config {} has invalid keys or values", path.display()))?;
        Ok(cfg)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.split.train,
            val: self.split.val,
            test: self.split.test,
            seed: self.split.seed,
        }
    }

    pub fn segmenter_config(&self) -> SegmenterConfig {
        SegmenterConfig {
            quote_delimiters: self.segmenter.quote_delimiters.clone(),
            attribution_verbs: self.segmenter.attribution_verbs.clone(),
            max_gap_paragraphs: self.segmenter.max_gap_paragraphs,
            chapter_marker: self.segmenter.chapter_marker.clone(),
        }
    }

    pub fn prompt_mode(&self) -> Result<PromptMode> {
        parse_prompt_mode(&self.prompt.mode)
    }

    pub fn prompt_config(&self) -> Result<PromptConfig> {
        let template = match &self.prompt.template_file {
            Some(path) => std::fs::read_to_string(path)
                .with_context(|| format!("cannot read template {}", path.display()))?,
            None => default_template(self.prompt.locale).to_string(),
        };
        let cfg = PromptConfig {
            mode: self.prompt_mode()?,
            dialogue_variant: self.prompt.variant,
            exemplar_count: self.prompt.shots,
            locale: self.prompt.locale,
            template,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn backend_config(&self) -> Result<BackendConfig> {
        let kind: BackendKind = self.backend.kind.parse().map_err(|e: String| anyhow!(e))?;
        Ok(BackendConfig {
            kind,
            endpoint: self.backend.endpoint.clone(),
            model: self.backend.model.clone(),
            temperature: self.backend.temperature,
            max_retries: self.backend.max_retries,
            timeout_secs: self.backend.timeout_secs,
            parallelism: self.backend.parallelism,
            rule_answer: self.backend.rule_answer.clone(),
            backoff_base_ms: self.backend.backoff_base_ms,
        })
    }

    pub fn ablation_config(&self) -> Result<AblationConfig> {
        let modes = self
            .ablation
            .modes
            .iter()
            .map(|m| match m.as_str() {
                "joint" => Ok(AblationMode::Joint),
                "per-dimension-all" => Ok(AblationMode::PerDimensionAll),
                other => Err(anyhow!("unknown ablation mode `{other}`")),
            })
            .collect::<Result<Vec<_>>>()?;
        let variants = self
            .ablation
            .variants
            .iter()
            .map(|v| match v.as_str() {
                "expanded" => Ok(DialogueVariant::Expanded),
                "basic" => Ok(DialogueVariant::Basic),
                other => Err(anyhow!("unknown dialogue variant `{other}`")),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AblationConfig { modes, variants, shots: self.ablation.shots.clone() })
    }

    pub fn balance_dimension(&self) -> Result<Dimension> {
        Dimension::from_key(&self.balance.dimension)
            .ok_or_else(|| anyhow!("unknown balance dimension `{}`", self.balance.dimension))
    }
}

pub fn parse_prompt_mode(s: &str) -> Result<PromptMode> {
    match s {
        "joint" => Ok(PromptMode::Joint),
        "per-polarity" => Ok(PromptMode::PerDimension(Dimension::Polarity)),
        "per-rel_type" => Ok(PromptMode::PerDimension(Dimension::RelType)),
        "per-hierarchy" => Ok(PromptMode::PerDimension(Dimension::Hierarchy)),
        other => Err(anyhow!(
            "unknown prompt mode `{other}` (expected joint, per-polarity, per-rel_type or per-hierarchy)"
        )),
    }
}

/// Flag-side shadow of the config file; every key maps to exactly one
/// flag. All fields are optional so the file (or default) value survives
/// unless overridden.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub novels: Option<PathBuf>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub split_train: Option<u32>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub split_val: Option<u32>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub split_test: Option<u32>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub split_seed: Option<u64>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub segmenter_max_gap_paragraphs: Option<usize>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub segmenter_chapter_marker: Option<String>,
    /// Comma-separated verb list.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub segmenter_attribution_verbs: Option<String>,
    /// Comma-separated open|close pairs, e.g. “|”,「|」.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub segmenter_quote_delimiters: Option<String>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub prompt_mode: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub prompt_variant: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub prompt_shots: Option<usize>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub prompt_locale: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub prompt_template_file: Option<PathBuf>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub retrieval_embedder: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub retrieval_dim: Option<usize>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub retrieval_endpoint: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub retrieval_model: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub retrieval_timeout_secs: Option<u64>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_kind: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_endpoint: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_model: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_temperature: Option<f64>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_max_retries: Option<u32>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_timeout_secs: Option<u64>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_parallelism: Option<usize>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_rule_answer: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub backend_backoff_base_ms: Option<u64>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub anonymize_enabled: Option<bool>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub anonymize_seed: Option<u64>,

    #[arg(long, global = true, help_heading = "Config overrides")]
    pub balance_enabled: Option<bool>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub balance_dimension: Option<String>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub balance_min_count: Option<usize>,
    /// 0 means no cap.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub balance_max_count: Option<usize>,
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub balance_seed: Option<u64>,

    /// Comma-separated: joint,per-dimension-all.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub ablation_modes: Option<String>,
    /// Comma-separated: expanded,basic.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub ablation_variants: Option<String>,
    /// Comma-separated shot counts.
    #[arg(long, global = true, help_heading = "Config overrides")]
    pub ablation_shots: Option<String>,
}

fn comma_list(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        macro_rules! set {
            ($field:expr, $target:expr) => {
                if let Some(v) = &$field {
                    $target = v.clone();
                }
            };
        }
        set!(self.corpus, cfg.paths.corpus);
        set!(self.novels, cfg.paths.novels);
        set!(self.out_dir, cfg.paths.out_dir);

        set!(self.split_train, cfg.split.train);
        set!(self.split_val, cfg.split.val);
        set!(self.split_test, cfg.split.test);
        set!(self.split_seed, cfg.split.seed);

        set!(self.segmenter_max_gap_paragraphs, cfg.segmenter.max_gap_paragraphs);
        if let Some(marker) = &self.segmenter_chapter_marker {
            cfg.segmenter.chapter_marker =
                (!marker.is_empty()).then(|| marker.clone());
        }
        if let Some(verbs) = &self.segmenter_attribution_verbs {
            cfg.segmenter.attribution_verbs = comma_list(verbs);
        }
        if let Some(delims) = &self.segmenter_quote_delimiters {
            cfg.segmenter.quote_delimiters = comma_list(delims)
                .iter()
                .map(|pair| {
                    pair.split_once('|')
                        .map(|(o, c)| (o.to_string(), c.to_string()))
                        .ok_or_else(|| anyhow!("quote delimiter `{pair}` must be open|close"))
                })
                .collect::<Result<Vec<_>>>()?;
        }

        set!(self.prompt_mode, cfg.prompt.mode);
        if let Some(variant) = &self.prompt_variant {
            cfg.prompt.variant = match variant.as_str() {
                "expanded" => DialogueVariant::Expanded,
                "basic" => DialogueVariant::Basic,
                other => bail!("unknown dialogue variant `{other}`"),
            };
        }
        set!(self.prompt_shots, cfg.prompt.shots);
        if let Some(locale) = &self.prompt_locale {
            cfg.prompt.locale = match locale.as_str() {
                "zh" => Locale::Zh,
                "en" => Locale::En,
                other => bail!("unknown locale `{other}`"),
            };
        }
        if let Some(path) = &self.prompt_template_file {
            cfg.prompt.template_file = Some(path.clone());
        }

        set!(self.retrieval_embedder, cfg.retrieval.embedder);
        set!(self.retrieval_dim, cfg.retrieval.dim);
        if let Some(v) = &self.retrieval_endpoint {
            cfg.retrieval.endpoint = Some(v.clone());
        }
        if let Some(v) = &self.retrieval_model {
            cfg.retrieval.model = Some(v.clone());
        }
        set!(self.retrieval_timeout_secs, cfg.retrieval.timeout_secs);

        set!(self.backend_kind, cfg.backend.kind);
        if let Some(v) = &self.backend_endpoint {
            cfg.backend.endpoint = Some(v.clone());
        }
        if let Some(v) = &self.backend_model {
            cfg.backend.model = Some(v.clone());
        }
        set!(self.backend_temperature, cfg.backend.temperature);
        set!(self.backend_max_retries, cfg.backend.max_retries);
        set!(self.backend_timeout_secs, cfg.backend.timeout_secs);
        set!(self.backend_parallelism, cfg.backend.parallelism);
        if let Some(v) = &self.backend_rule_answer {
            cfg.backend.rule_answer = Some(v.clone());
        }
        set!(self.backend_backoff_base_ms, cfg.backend.backoff_base_ms);

        set!(self.anonymize_enabled, cfg.anonymize.enabled);
        set!(self.anonymize_seed, cfg.anonymize.seed);

        set!(self.balance_enabled, cfg.balance.enabled);
        set!(self.balance_dimension, cfg.balance.dimension);
        set!(self.balance_min_count, cfg.balance.min_count);
        if let Some(max) = self.balance_max_count {
            cfg.balance.max_count = (max > 0).then_some(max);
        }
        set!(self.balance_seed, cfg.balance.seed);

        if let Some(modes) = &self.ablation_modes {
            cfg.ablation.modes = comma_list(modes);
        }
        if let Some(variants) = &self.ablation_variants {
            cfg.ablation.variants = comma_list(variants);
        }
        if let Some(shots) = &self.ablation_shots {
            cfg.ablation.shots = comma_list(shots)
                .iter()
                .map(|s| s.parse::<usize>().map_err(|_| anyhow!("bad shot count `{s}`")))
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(toml::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn file_without_split_seed_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("credi.toml");
        std::fs::write(&path, "[split]\ntrain = 8\nval = 1\ntest = 1\n").unwrap();
        let err = PipelineConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("split.seed"), "got: {err:#}");

        std::fs::write(&path, "[split]\nseed = 7\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.split.seed, 7);
        assert_eq!(cfg.split.train, 8, "defaults still fill the rest");
    }

    #[test]
    fn enabled_tables_demand_their_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("credi.toml");
        std::fs::write(&path, "[split]\nseed = 1\n\n[anonymize]\nenabled = true\n").unwrap();
        let err = PipelineConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("anonymize.seed"), "got: {err:#}");

        std::fs::write(
            &path,
            "[split]\nseed = 1\n\n[anonymize]\nenabled = true\nseed = 3\n",
        )
        .unwrap();
        assert!(PipelineConfig::load(&path).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("credi.toml");
        std::fs::write(&path, "[split]\nseed = 1\nfraction = 0.5\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }

    #[test]
    fn overrides_win_over_file_values() {
        let mut cfg = PipelineConfig::default();
        let overrides = Overrides {
            split_seed: Some(99),
            prompt_shots: Some(5),
            backend_kind: Some("mock-lookup".into()),
            balance_max_count: Some(0),
            ..Overrides::default()
        };
        overrides.apply(&mut cfg).unwrap();
        assert_eq!(cfg.split.seed, 99);
        assert_eq!(cfg.prompt.shots, 5);
        assert_eq!(cfg.backend.kind, "mock-lookup");
        assert_eq!(cfg.balance.max_count, None, "zero clears the cap");
    }

    #[test]
    fn prompt_modes_parse() {
        assert_eq!(parse_prompt_mode("joint").unwrap(), PromptMode::Joint);
        assert_eq!(
            parse_prompt_mode("per-rel_type").unwrap(),
            PromptMode::PerDimension(Dimension::RelType)
        );
        assert!(parse_prompt_mode("all").is_err());
    }

    #[test]
    fn delimiter_override_parses_pairs() {
        let mut cfg = PipelineConfig::default();
        let overrides = Overrides {
            segmenter_quote_delimiters: Some("“|”,『|』".into()),
            ..Overrides::default()
        };
        overrides.apply(&mut cfg).unwrap();
        assert_eq!(
            cfg.segmenter.quote_delimiters,
            vec![("“".to_string(), "”".to_string()), ("『".to_string(), "』".to_string())]
        );

        let bad = Overrides {
            segmenter_quote_delimiters: Some("“”".into()),
            ..Overrides::default()
        };
        assert!(bad.apply(&mut cfg).is_err());
    }
}
