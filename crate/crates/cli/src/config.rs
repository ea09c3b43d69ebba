use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sflow_core::triples::{circle_triple, weighted_sum_triple, SpectralTripleRep, TripleJson, Truncation};
use sflow_core::zeta::CircleModel;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub triple: TripleSpec,
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Either a named family or an explicit triple in the triples JSON format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum TripleSpec {
    Circle {
        cutoff: usize,
        #[serde(default)]
        truncation: Option<Truncation>,
    },
    /// Two circle copies with trace weights (w1, w2).
    WeightedCircle { cutoff: usize, weights: (f64, f64) },
    Explicit { triple: TripleJson },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Engine {
    Crossing,
    Index,
    Cp,
    Doubled,
    Residue,
    ZetaSum,
    Lowdim,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Crossing => "crossing",
            Engine::Index => "index",
            Engine::Cp => "cp",
            Engine::Doubled => "doubled",
            Engine::Residue => "residue",
            Engine::ZetaSum => "zetaSum",
            Engine::Lowdim => "lowdim",
        }
    }

    /// Multiplier mapping the engine's raw output to sf(D, u*Du).
    pub fn orientation(self) -> f64 {
        match self {
            Engine::Cp => -1.0,
            _ => 1.0,
        }
    }

    pub fn needs_circle_model(self) -> bool {
        matches!(self, Engine::Residue | Engine::ZetaSum | Engine::Lowdim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Parameters {
    /// Overrides the cutoff of a named triple family.
    #[serde(rename = "N", default)]
    pub n_cut: Option<usize>,
    #[serde(default = "default_w")]
    pub w: Vec<i32>,
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "three")]
    pub n: f64,
    #[serde(default = "default_margin")]
    pub edge_margin: usize,
    /// Defaults to the triple's p.
    #[serde(default)]
    pub p_eff: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_generator")]
    pub generator: String,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Record wall-clock times; off by default so output files are reproducible.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Tolerances {
    /// Largest allowed |a − b| between any two engines at the same w.
    #[serde(default = "default_pairwise")]
    pub pairwise: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { pairwise: default_pairwise() }
    }
}

fn default_w() -> Vec<i32> {
    vec![1]
}
fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn default_margin() -> usize {
    8
}
fn default_steps() -> usize {
    4
}
fn default_generator() -> String {
    "u".into()
}
fn default_pairwise() -> f64 {
    2e-2
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            n_cut: None,
            w: default_w(),
            r: 1.0,
            n: 3.0,
            edge_margin: default_margin(),
            p_eff: None,
            steps: default_steps(),
            generator: default_generator(),
            tolerances: Tolerances::default(),
            timing: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn build_triple(&self) -> Result<SpectralTripleRep> {
        let cut = |c: usize| self.parameters.n_cut.unwrap_or(c);
        Ok(match &self.triple {
            TripleSpec::Circle { cutoff, truncation } => circle_triple(cut(*cutoff), truncation.unwrap_or(Truncation::Plain))?,
            TripleSpec::WeightedCircle { cutoff, weights } => {
                let c = circle_triple(cut(*cutoff), Truncation::Plain)?;
                weighted_sum_triple(&c, &c, weights.0, weights.1)?
            }
            TripleSpec::Explicit { triple } => SpectralTripleRep::from_json(triple)?,
        })
    }

    /// Checks everything that can be checked before any engine runs.
    pub fn validate(&self, t: &SpectralTripleRep) -> Result<()> {
        if self.engines.is_empty() {
            bail!("no engines requested; choose from crossing, index, cp, doubled, residue, zetaSum, lowdim");
        }
        if self.parameters.w.is_empty() {
            bail!("parameter w is empty");
        }
        if !(self.parameters.tolerances.pairwise >= 0.0) {
            bail!("pairwise tolerance must be nonnegative");
        }
        t.gen(&self.parameters.generator)?;
        if self.engines.iter().any(|e| e.needs_circle_model()) && CircleModel::detect(t).is_none() {
            bail!("residue engines need a circle-type triple (diagonal D = diag(-N..N) per block)");
        }
        Ok(())
    }
}
