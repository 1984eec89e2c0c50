//! Pipeline configuration: one JSON document, overridable from flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::DEFAULT_FRACTIONS;
use crate::gnn::{GnnConfig, TrainConfig, Variant};
use crate::node_embed::{NodeEmbedConfig, WalkConfig, WalkKind};
use crate::posthoc::{TrendingParams, DEFAULT_TRACKED};
use crate::rng::substream;
use crate::synth::SynthConfig;
use crate::text::{Doc2vecParams, LogisticParams};

/// Model names accepted by `--model`.
pub const MODEL_NAMES: [&str; 8] = ["gcn", "cheb", "sage", "agnn", "gat", "logistic", "deepwalk", "node2vec"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Generate in memory.
    Synth(SynthConfig),
    Files(DataFiles),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synth(SynthConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub edges: PathBuf,
    pub posts: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_times: Option<PathBuf>,
}

impl DataFiles {
    /// The files `synth` writes into `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        use crate::synth::{EDGES_FILE, EDGE_TIMES_FILE, LABELS_FILE, LEXICON_FILE, POSTS_FILE};
        Self {
            edges: dir.join(EDGES_FILE),
            posts: dir.join(POSTS_FILE),
            labels: dir.join(LABELS_FILE),
            lexicon: Some(dir.join(LEXICON_FILE)),
            edge_times: Some(dir.join(EDGE_TIMES_FILE)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    Doc2vec,
    PretrainedMean,
    NodeEmbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeEmbedSettings {
    pub kind: WalkKind,
    pub walks: WalkConfig,
    pub dim: usize,
    pub epochs: usize,
}

impl Default for NodeEmbedSettings {
    fn default() -> Self {
        Self {
            kind: WalkKind::DeepWalk,
            walks: WalkConfig::default(),
            dim: 128,
            epochs: 5,
        }
    }
}

impl NodeEmbedSettings {
    pub fn config(&self, kind: WalkKind) -> NodeEmbedConfig {
        NodeEmbedConfig::new(kind, self.walks.clone(), self.dim, self.epochs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub source: FeatureSource,
    pub doc2vec: Doc2vecParams,
    /// Word-vector text file for `pretrained-mean`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pretrained: Option<PathBuf>,
    /// Used by the `node-embed` source and the deepwalk/node2vec baselines.
    pub node_embed: NodeEmbedSettings,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            source: FeatureSource::Doc2vec,
            doc2vec: Doc2vecParams {
                dim: 64,
                ..Doc2vecParams::default()
            },
            pretrained: None,
            node_embed: NodeEmbedSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnSettings {
    pub hidden: usize,
    pub leaky_slope: f64,
    pub train: TrainConfig,
    pub cheb_k: usize,
    /// Neighbors sampled per node in SAGE training; `null` uses all.
    pub sage_sample: Option<usize>,
    pub gat_heads: usize,
    pub agnn_layers: usize,
}

impl Default for GnnSettings {
    fn default() -> Self {
        Self {
            hidden: 32,
            leaky_slope: 0.2,
            train: TrainConfig::default(),
            cheb_k: 2,
            sage_sample: Some(25),
            gat_heads: 1,
            agnn_layers: 1,
        }
    }
}

impl GnnSettings {
    pub fn variant(&self, name: &str) -> Option<Variant> {
        Some(match Variant::from_name(name)? {
            Variant::Cheb { .. } => Variant::Cheb { k: self.cheb_k },
            Variant::Sage { .. } => Variant::Sage { sample: self.sage_sample },
            Variant::Gat { .. } => Variant::Gat { heads: self.gat_heads },
            Variant::Agnn { .. } => Variant::Agnn { layers: self.agnn_layers },
            v => v,
        })
    }

    pub fn config(&self, variant: Variant) -> GnnConfig {
        GnnConfig {
            variant,
            hidden: self.hidden,
            leaky_slope: self.leaky_slope,
            train: self.train.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldSettings {
    pub k: usize,
    pub fractions: Vec<f64>,
}

impl Default for FoldSettings {
    fn default() -> Self {
        Self {
            k: 5,
            fractions: DEFAULT_FRACTIONS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosthocSettings {
    pub tracked: Vec<String>,
    pub trending: TrendingParams,
    /// First month `YYYY-MM`; defaults to the month of the earliest post.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_month: Option<String>,
    /// Number of months; defaults to the span up to the latest post.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub months: Option<usize>,
}

impl Default for PosthocSettings {
    fn default() -> Self {
        Self {
            tracked: DEFAULT_TRACKED.iter().map(|s| s.to_string()).collect(),
            trending: TrendingParams::default(),
            start_month: None,
            months: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataSource,
    pub features: FeatureConfig,
    /// Models run by `benchmark` and `transfer`; `train` and `posthoc` use
    /// the first.
    pub models: Vec<String>,
    pub gnn: GnnSettings,
    pub logistic: LogisticParams,
    pub folds: FoldSettings,
    /// Target dataset for `transfer`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_target: Option<DataSource>,
    pub posthoc: PosthocSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataSource::default(),
            features: FeatureConfig::default(),
            models: ["gcn", "cheb", "sage", "agnn", "gat", "logistic"].iter().map(|s| s.to_string()).collect(),
            gnn: GnnSettings::default(),
            logistic: LogisticParams::default(),
            folds: FoldSettings::default(),
            transfer_target: None,
            posthoc: PosthocSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_owned(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidInput("no models configured".into()));
        }
        if let Some(m) = self.models.iter().find(|m| !MODEL_NAMES.contains(&m.as_str())) {
            return Err(Error::InvalidInput(format!(
                "unknown model {m:?}; expected one of {}",
                MODEL_NAMES.join(", ")
            )));
        }
        if self.folds.k < 2 {
            return Err(Error::InvalidInput("at least two folds are needed".into()));
        }
        if let Some(f) = self.folds.fractions.iter().find(|f| !(**f > 0.0 && **f <= 100.0)) {
            return Err(Error::InvalidInput(format!("fraction {f} outside (0, 100]")));
        }
        if self.features.source == FeatureSource::PretrainedMean && self.features.pretrained.is_none() {
            return Err(Error::InvalidInput("pretrained-mean features need a `pretrained` path".into()));
        }
        self.gnn.train.validate()?;
        for src in std::iter::once(&self.data).chain(&self.transfer_target) {
            if let DataSource::Synth(s) = src {
                s.validate()?;
            }
        }
        Ok(())
    }

    /// Copy with every component seed derived from the root seed by name.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        let s = self.seed;
        if let DataSource::Synth(ref mut sc) = c.data {
            sc.seed = substream(s, "synth");
        }
        if let Some(DataSource::Synth(ref mut sc)) = c.transfer_target {
            sc.seed = substream(s, "synth-target");
        }
        c.features.doc2vec.seed = substream(s, "doc2vec");
        c.features.node_embed.walks.seed = substream(s, "walks");
        c.gnn.train.seed = substream(s, "gnn");
        c.logistic.seed = substream(s, "logistic");
        c
    }
}
