//! TOML configuration. Every key is optional; flags override file values.

use std::path::{Path, PathBuf};

use codemix::langid::UnknownRule;
use codemix::pipeline::PipelineConfig;
use codemix::segment::UnknownPolicy;
use codemix_nnet::{ModelDims, TrainConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub log_base: Option<f64>,
    pub score_cap: Option<f64>,
    pub thresholds: Option<Vec<u64>>,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub train: TrainSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub langid_model: Option<PathBuf>,
    pub translit_model: Option<PathBuf>,
    pub en_tagger: Option<PathBuf>,
    pub bn_tagger: Option<PathBuf>,
    pub en_mapping: Option<PathBuf>,
    pub bn_mapping: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub unknown_rule: Option<UnknownRule>,
    pub unknown_policy: Option<UnknownPolicy>,
    pub decode_length_factor: Option<usize>,
    pub decode_length_offset: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub langid: NetSection,
    #[serde(default)]
    pub translit: NetSection,
    #[serde(default)]
    pub hmm: HmmSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSection {
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub validation_split: Option<f64>,
    pub learning_rate: Option<f64>,
    pub embed_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmSection {
    pub smoothing: Option<f64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Builds the pipeline configuration; relative model paths resolve
    /// against the config file's directory.
    pub fn pipeline(&self) -> Result<PipelineConfig, String> {
        let p = &self.pipeline;
        let need = |v: &Option<PathBuf>, key: &str| {
            v.clone().ok_or_else(|| format!("missing pipeline.{key}"))
        };
        let mut cfg = PipelineConfig::new(
            need(&p.langid_model, "langid_model")?,
            need(&p.translit_model, "translit_model")?,
            need(&p.en_tagger, "en_tagger")?,
            need(&p.bn_tagger, "bn_tagger")?,
        );
        cfg.en_mapping = p.en_mapping.clone();
        cfg.bn_mapping = p.bn_mapping.clone();
        if let Some(t) = p.threshold {
            cfg.threshold = t;
        }
        if let Some(r) = p.unknown_rule {
            cfg.unknown_rule = r;
        }
        if let Some(u) = p.unknown_policy {
            cfg.unknown_policy = u;
        }
        if let Some(f) = p.decode_length_factor {
            cfg.decode_length_factor = f;
        }
        if let Some(o) = p.decode_length_offset {
            cfg.decode_length_offset = o;
        }
        Ok(cfg.resolve(&self.base_dir))
    }
}

impl NetSection {
    pub fn apply(&self, mut cfg: TrainConfig, seed: Option<u64>) -> TrainConfig {
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.validation_split {
            cfg.validation_split = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg
    }

    pub fn dims(&self) -> ModelDims {
        let d = ModelDims::default();
        ModelDims {
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            hidden_dim: self.hidden_dim.unwrap_or(d.hidden_dim),
            depth: self.depth.unwrap_or(d.depth),
        }
    }
}
