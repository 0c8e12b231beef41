//! Run configuration: a TOML file with top-level experiment keys, one
//! `[dataset.<name>]` section per dataset, and optional `[forest]` and
//! `[method.*]` sections for learner and post-processor knobs.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently fall back
//! to a default. Values that parse but violate an invariant (descending
//! levels, duplicate methods, empty dataset list) fail [`RunConfig::validate`].
//!
//! ```toml
//! out_dir = "results"
//! master_seed = 42
//! kinds = ["label", "select_self"]
//! levels = [0.0, 0.3, 0.6, 0.9]
//!
//! [dataset.student]
//! noise = 0.1
//!
//! [forest]
//! n_trees = 100
//! ```

use crate::bias::BiasKind;
use crate::error::Error;
use crate::learn::{ForestParams, TreeParams};
use crate::mitigate::{CostConstraint, Method};
use crate::pipeline::{EvalMode, ExperimentPlan};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn default_out_dir() -> String {
    "out".into()
}

fn default_cache_dir() -> String {
    "out".into()
}

fn default_master_seed() -> u64 {
    42
}

fn all_methods() -> Vec<Method> {
    Method::MITIGATIONS.to_vec()
}

fn both_modes() -> Vec<EvalMode> {
    EvalMode::ALL.to_vec()
}

fn default_noise() -> f64 {
    0.1
}

/// Per-dataset settings inside a `[dataset.<name>]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Cache file the run reads; defaults to `<name>.bin` in the data dir.
    #[serde(default)]
    pub cache: Option<String>,
    /// Label-noise width for the label bias kind.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            cache: None,
            noise: default_noise(),
        }
    }
}

/// `[forest]` section; defaults match [`ForestParams::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: f64,
    pub min_samples_leaf: f64,
    #[serde(default)]
    pub mtry: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        let p = ForestParams::default();
        ForestConfig {
            n_trees: p.n_trees,
            max_depth: p.tree.max_depth,
            min_samples_split: p.tree.min_samples_split,
            min_samples_leaf: p.tree.min_samples_leaf,
            mtry: p.mtry,
        }
    }
}

impl ForestConfig {
    pub fn to_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            tree: TreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                min_samples_leaf: self.min_samples_leaf,
            },
            mtry: self.mtry,
            seed: 0,
        }
    }
}

/// `[method.ceo]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CeoConfig {
    pub cost: CostConstraint,
}

impl Default for CeoConfig {
    fn default() -> Self {
        CeoConfig {
            cost: CostConstraint::Weighted,
        }
    }
}

/// `[method.roc]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocConfig {
    pub bounds: (f64, f64),
    pub thresholds: usize,
    pub margins: usize,
}

impl Default for RocConfig {
    fn default() -> Self {
        RocConfig {
            bounds: crate::mitigate::DEFAULT_ROC_BOUNDS,
            thresholds: crate::mitigate::DEFAULT_ROC_THRESHOLDS,
            margins: crate::mitigate::DEFAULT_ROC_MARGINS,
        }
    }
}

/// `[method]` table grouping per-method knobs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodKnobs {
    #[serde(default)]
    pub ceo: CeoConfig,
    #[serde(default)]
    pub roc: RocConfig,
}

/// Full run configuration as read from the `--config` TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    /// Directory the dataset caches are read from.
    #[serde(default = "default_cache_dir")]
    pub cache_dir: String,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    pub kinds: Vec<BiasKind>,
    pub levels: Vec<f64>,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Overrides the per-kind fold defaults when set.
    #[serde(default)]
    pub n_folds: Option<usize>,
    /// Evaluation regimes to keep in the emitted records.
    #[serde(default = "both_modes")]
    pub eval_modes: Vec<EvalMode>,
    #[serde(rename = "dataset")]
    pub datasets: BTreeMap<String, DatasetConfig>,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default, rename = "method")]
    pub method_knobs: MethodKnobs,
}

impl RunConfig {
    /// Parses and validates a config file body.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("at least one [dataset.<name>] section required".into()));
        }
        for (name, ds) in &self.datasets {
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(Error::Config(format!(
                    "dataset name {name:?} must be lowercase [a-z0-9_]"
                )));
            }
            if !ds.noise.is_finite() || ds.noise < 0.0 {
                return Err(Error::Config(format!(
                    "dataset {name}: noise must be finite and >= 0"
                )));
            }
        }
        if self.eval_modes.is_empty() {
            return Err(Error::Config("eval_modes must not be empty".into()));
        }
        let mut seen = Vec::new();
        for m in &self.eval_modes {
            if seen.contains(m) {
                return Err(Error::Config(format!("duplicate eval mode {m}")));
            }
            seen.push(*m);
        }
        if self.forest.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        // Grid and method constraints are shared with the plan.
        let sample = self
            .datasets
            .keys()
            .next()
            .expect("datasets checked non-empty");
        self.to_plan(sample).map(|_| ())
    }

    /// Cache file name a dataset resolves to inside the cache directory.
    pub fn cache_file(&self, name: &str) -> Result<String> {
        let ds = self
            .datasets
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown dataset {name:?}")))?;
        Ok(ds.cache.clone().unwrap_or_else(|| format!("{name}.bin")))
    }

    /// Full path of a dataset's cache: absolute entries stand alone, relative
    /// ones resolve against `cache_dir`.
    pub fn cache_path(&self, name: &str) -> Result<std::path::PathBuf> {
        let file = std::path::PathBuf::from(self.cache_file(name)?);
        if file.is_absolute() {
            Ok(file)
        } else {
            Ok(std::path::Path::new(&self.cache_dir).join(file))
        }
    }

    /// Builds the experiment plan for one configured dataset.
    pub fn to_plan(&self, dataset: &str) -> Result<ExperimentPlan> {
        let ds = self
            .datasets
            .get(dataset)
            .ok_or_else(|| Error::Config(format!("unknown dataset {dataset:?}")))?;
        let mut plan = ExperimentPlan::new(self.kinds.clone(), self.levels.clone(), self.master_seed);
        plan.methods = self.methods.clone();
        plan.n_folds = self.n_folds;
        plan.forest = self.forest.to_params();
        plan.noise = ds.noise;
        plan.ceo_cost = self.method_knobs.ceo.cost;
        plan.roc_bounds = self.method_knobs.roc.bounds;
        plan.roc_thresholds = self.method_knobs.roc.thresholds;
        plan.roc_margins = self.method_knobs.roc.margins;
        plan.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kinds = ["label"]
levels = [0.0, 0.5]

[dataset.student]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.out_dir, "out");
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.methods.len(), 8);
        assert_eq!(cfg.n_folds, None);
        assert_eq!(cfg.eval_modes, vec![EvalMode::Fair, EvalMode::Biased]);
        assert_eq!(cfg.forest.n_trees, 100);
        assert_eq!(cfg.method_knobs.roc.bounds, (-0.05, 0.05));
        assert_eq!(cfg.cache_file("student").unwrap(), "student.bin");
        let plan = cfg.to_plan("student").unwrap();
        assert_eq!(plan.noise, 0.1);
        assert_eq!(plan.master_seed, 42);
        assert_eq!(plan.folds_for(BiasKind::Label), 10);
    }

    #[test]
    fn full_config_round_trips_values() {
        let text = r#"
out_dir = "results"
master_seed = 7
kinds = ["label", "select_malicious"]
levels = [0.0, 0.3, 0.9]
methods = ["reweighing", "eop"]
n_folds = 4
eval_modes = ["fair"]

[dataset.student]
cache = "stu.bin"
noise = 0.05

[dataset.oulad_stem]
noise = 0.2

[forest]
n_trees = 30
max_depth = 4
min_samples_split = 6.0
min_samples_leaf = 3.0
mtry = 2

[method.ceo]
cost = "fnr"

[method.roc]
bounds = [-0.02, 0.02]
thresholds = 60
margins = 20
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.out_dir, "results");
        assert_eq!(cfg.cache_file("student").unwrap(), "stu.bin");
        assert_eq!(cfg.cache_file("oulad_stem").unwrap(), "oulad_stem.bin");
        let plan = cfg.to_plan("oulad_stem").unwrap();
        assert_eq!(plan.noise, 0.2);
        assert_eq!(plan.forest.n_trees, 30);
        assert_eq!(plan.forest.tree.max_depth, 4);
        assert_eq!(plan.forest.mtry, Some(2));
        assert_eq!(plan.ceo_cost, CostConstraint::Fnr);
        assert_eq!(plan.roc_bounds, (-0.02, 0.02));
        assert_eq!(plan.folds_for(BiasKind::Label), 4);
        assert_eq!(cfg.eval_modes, vec![EvalMode::Fair]);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        let top = MINIMAL.replace("kinds", "kindz");
        let err = RunConfig::from_toml(&top).unwrap_err().to_string();
        assert!(err.contains("kindz") || err.contains("unknown"), "{err}");

        let nested = format!("{MINIMAL}\n[forest]\nn_tree = 5\n");
        assert!(RunConfig::from_toml(&nested).is_err());

        let dataset = format!("{MINIMAL}\n[dataset.other]\nnois = 0.3\n");
        assert!(RunConfig::from_toml(&dataset).is_err());

        let method = format!("{MINIMAL}\n[method.roc]\nbound = [0.0, 0.1]\n");
        assert!(RunConfig::from_toml(&method).is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        let no_dataset = "kinds = [\"label\"]\nlevels = [0.1]\n";
        assert!(matches!(
            RunConfig::from_toml(no_dataset),
            Err(Error::Config(_))
        ));

        let descending = MINIMAL.replace("[0.0, 0.5]", "[0.5, 0.0]");
        assert!(RunConfig::from_toml(&descending).is_err());

        let bad_method = format!("{MINIMAL}\nmethods = [\"unmitigated\"]\n");
        assert!(RunConfig::from_toml(&bad_method).is_err());

        let bad_kind = MINIMAL.replace("\"label\"", "\"labl\"");
        assert!(RunConfig::from_toml(&bad_kind).is_err());

        let dup_modes = format!("{MINIMAL}\neval_modes = [\"fair\", \"fair\"]\n");
        assert!(RunConfig::from_toml(&dup_modes).is_err());

        let empty_modes = format!("{MINIMAL}\neval_modes = []\n");
        assert!(RunConfig::from_toml(&empty_modes).is_err());

        let bad_name = MINIMAL.replace("[dataset.student]", "[dataset.Student]");
        assert!(RunConfig::from_toml(&bad_name).is_err());

        let zero_trees = format!("{MINIMAL}\n[forest]\nn_trees = 0\nmax_depth = 4\nmin_samples_split = 2.0\nmin_samples_leaf = 1.0\n");
        assert!(RunConfig::from_toml(&zero_trees).is_err());
    }

    #[test]
    fn plan_seed_reaches_through() {
        let text = MINIMAL.replace("levels", "master_seed = 9\nlevels");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.to_plan("student").unwrap().master_seed, 9);
        assert!(cfg.to_plan("missing").is_err());
    }
}
