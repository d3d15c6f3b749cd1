//! End-to-end runs: generate, train, evaluate, compare with expectations.
//!
//! A run is described by a flat JSON [`RunConfig`]. The named presets live in
//! `presets/*.json` and are compiled into the crate.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{
    generate, write_dataset, ClassGrid, DatasetSplits, GenSpec, RegionFilter, TimeWindow,
};
use crate::metrics::{confusion, scores, ConfusionMatrix};
use crate::nn::{init_mlp, train, Arch, MlpModel, Optimizer, SavedModel, TrainConfig, TrainReport};
use crate::qchannel::{BathConstants, NoiseKind};
use crate::report::{confusion_csv, confusion_svg, training_csv, ScoreRecord};
use crate::rng::substream;
use crate::{Error, Result};

/// Substream tag for network initialization, disjoint from the data tags.
const TAG_INIT: u64 = 100;

/// Threshold separating the two macro-classes (`ν <= 1` vs `ν > 1`).
pub const COARSE_THRESHOLD: f64 = 1.0;

/// One experiment, flat so it can be edited by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub description: String,

    pub kind: NoiseKind,
    /// Class grid; empty means the default grid for `kind`.
    pub values: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub omega_c: f64,
    pub quad_tol: f64,
    /// Time window; omitted bounds follow the kind and noise level.
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_states: usize,
    pub n_times: usize,
    pub n_pairs: usize,
    pub purity: f64,
    pub test_purity: Option<f64>,
    pub noise_sigma: f64,
    pub renormalize_noise: bool,
    pub samples_per_class: usize,
    pub split_train: f64,
    pub split_val: f64,
    pub split_test: f64,
    pub seed: u64,
    pub region_lo: Option<f64>,
    pub region_hi: Option<f64>,
    pub two_class: bool,

    pub arch: Arch,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub l1_coeff: f64,
    pub optimizer: Optimizer,

    pub expect_accuracy_min: Option<f64>,
    pub expect_accuracy_max: Option<f64>,
    pub expect_macro_f1_min: Option<f64>,
    pub expect_macro_f1_max: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = GenSpec::desk(NoiseKind::Classical);
        let t = TrainConfig::default();
        let c = BathConstants::default();
        RunConfig {
            name: "custom".into(),
            description: String::new(),
            kind: NoiseKind::Classical,
            values: Vec::new(),
            gamma1: c.gamma1,
            gamma2: c.gamma2,
            omega_c: c.omega_c,
            quad_tol: c.quad_tol,
            t_min: None,
            t_max: None,
            n_states: g.n_states,
            n_times: g.n_times,
            n_pairs: g.n_pairs,
            purity: 1.0,
            test_purity: None,
            noise_sigma: 0.0,
            renormalize_noise: false,
            samples_per_class: g.samples_per_class,
            split_train: g.split_fractions[0],
            split_val: g.split_fractions[1],
            split_test: g.split_fractions[2],
            seed: 0,
            region_lo: None,
            region_hi: None,
            two_class: false,
            arch: Arch::Nn1,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            learning_rate: t.learning_rate,
            l1_coeff: t.l1_coeff,
            optimizer: t.optimizer,
            expect_accuracy_min: None,
            expect_accuracy_max: None,
            expect_macro_f1_min: None,
            expect_macro_f1_max: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn window(&self) -> Result<TimeWindow> {
        let default = match self.kind {
            NoiseKind::Quantum => TimeWindow::OHMIC,
            NoiseKind::Classical if self.noise_sigma > 0.0 => TimeWindow::COLORED_NOISY,
            NoiseKind::Classical => TimeWindow::COLORED_NOISELESS,
        };
        TimeWindow::new(
            self.t_min.unwrap_or(default.t_min),
            self.t_max.unwrap_or(default.t_max),
        )
        .map_err(|e| Error::config("t_min/t_max", e.to_string()))
    }

    pub fn gen_spec(&self) -> Result<GenSpec> {
        let grid = if self.values.is_empty() {
            ClassGrid::default_for(self.kind)
        } else {
            ClassGrid::new(self.kind, self.values.clone())
                .map_err(|e| Error::config("values", e.to_string()))?
        };
        let region_filter = match (self.region_lo, self.region_hi) {
            (None, None) => None,
            (Some(lo), Some(hi)) => Some(RegionFilter { lo, hi }),
            _ => {
                return Err(Error::config(
                    "region_lo/region_hi",
                    "set both bounds or neither",
                ))
            }
        };
        let spec = GenSpec {
            grid,
            constants: BathConstants {
                gamma1: self.gamma1,
                gamma2: self.gamma2,
                quad_tol: self.quad_tol,
                omega_c: self.omega_c,
            },
            window: self.window()?,
            n_states: self.n_states,
            n_times: self.n_times,
            n_pairs: self.n_pairs,
            purity: self.purity,
            test_purity: self.test_purity,
            noise_sigma: self.noise_sigma,
            renormalize_noise: self.renormalize_noise,
            samples_per_class: self.samples_per_class,
            split_fractions: [self.split_train, self.split_val, self.split_test],
            seed: self.seed,
            region_filter,
        };
        spec.validate()
            .map_err(|e| Error::config("generation", e.to_string()))?;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            learning_rate: self.learning_rate,
            l1_coeff: self.l1_coeff,
            optimizer: self.optimizer,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        self.gen_spec()?;
        self.train_config().validate()?;
        if self.two_class {
            let grid = self.gen_spec()?.grid;
            let below = grid
                .values
                .iter()
                .filter(|v| **v <= COARSE_THRESHOLD)
                .count();
            if below == 0 || below == grid.len() {
                return Err(Error::config(
                    "two_class",
                    format!("class grid does not straddle {COARSE_THRESHOLD}"),
                ));
            }
        }
        for (field, lo, hi) in [
            (
                "expect_accuracy",
                self.expect_accuracy_min,
                self.expect_accuracy_max,
            ),
            (
                "expect_macro_f1",
                self.expect_macro_f1_min,
                self.expect_macro_f1_max,
            ),
        ] {
            for v in [lo, hi].into_iter().flatten() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(field, format!("bound {v} outside [0, 1]")));
                }
            }
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi {
                    return Err(Error::config(field, "min exceeds max"));
                }
            }
        }
        Ok(())
    }

    /// Same experiment with the full-size sample counts.
    pub fn to_paper_scale(&self) -> Self {
        let spec = GenSpec::desk(self.kind).to_paper_scale();
        RunConfig {
            samples_per_class: spec.samples_per_class,
            split_train: spec.split_fractions[0],
            split_val: spec.split_fractions[1],
            split_test: spec.split_fractions[2],
            ..self.clone()
        }
    }
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        /// `(name, JSON)` for every shipped preset.
        pub const PRESETS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../presets/", $name, ".json")))),*
        ];
    };
}

presets!(
    "colored-noiseless-16",
    "colored-noiseless-16-mixed",
    "colored-noiseless-16-lp",
    "colored-noiseless-16-lp-mixed",
    "ohmic-16",
    "ohmic-16-mixed",
    "ohmic-16-lp",
    "colored-noisy-16",
    "colored-noisy-16-mixed",
    "colored-noisy-16-nn1",
    "colored-noisy-16-nn1-mixed",
    "colored-noisy-16-lp",
    "ohmic-noisy-16",
    "two-class-colored-noisy",
    "two-class-colored-noisy-mixed",
    "two-class-ohmic-noisy",
    "pure-to-mixed-transfer",
    "pure-to-mixed-transfer-ohmic",
    "bloch-region-generalization",
);

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    RunConfig::from_json(text)
}

/// One comparison against an expected bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn new(metric: &str, value: f64, min: Option<f64>, max: Option<f64>) -> Option<Check> {
        if min.is_none() && max.is_none() {
            return None;
        }
        let passed = min.map_or(true, |m| value >= m) && max.map_or(true, |m| value <= m);
        Some(Check {
            metric: metric.into(),
            value,
            min,
            max,
            passed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub config: RunConfig,
    pub scores: ScoreRecord,
    pub confusion: ConfusionMatrix,
    pub report: TrainReport,
    pub model: MlpModel,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            name: self.config.name.clone(),
            accuracy: self.scores.accuracy,
            macro_f1: self.scores.macro_f1,
            stopped_epoch: self.report.stopped_epoch,
            best_epoch: self.report.best_epoch,
            checks: self.checks.clone(),
            passed: self.passed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Seeded initial network for `classes` outputs.
pub fn initial_model(arch: Arch, classes: usize, seed: u64) -> Result<MlpModel> {
    init_mlp(
        &arch.layer_sizes(classes),
        &mut substream(seed, &[TAG_INIT]),
    )
}

/// Generates the splits a run trains and tests on.
pub fn datasets(cfg: &RunConfig) -> Result<DatasetSplits> {
    let splits = generate(&cfg.gen_spec()?)?;
    if cfg.two_class {
        splits.coarse_grained(COARSE_THRESHOLD)
    } else {
        Ok(splits)
    }
}

/// Trains on `splits.train` (early stopping on `splits.val`) and scores on
/// `splits.test`.
pub fn train_and_score(cfg: &RunConfig, splits: &DatasetSplits) -> Result<Outcome> {
    let m = splits.train.n_classes();
    let init = initial_model(cfg.arch, m, cfg.seed)?;
    let (model, report) = train(
        &init,
        &splits.train.samples,
        &splits.val.samples,
        &cfg.train_config(),
    )?;
    let preds = model.predict_all(&splits.test.samples)?;
    let c = confusion(&preds, &splits.test.labels(), m)?;
    let s = scores(&c)?;
    let record = ScoreRecord::new(&s, &c, &splits.test.class_names, &splits.test.class_values);
    let checks = [
        Check::new(
            "accuracy",
            s.accuracy,
            cfg.expect_accuracy_min,
            cfg.expect_accuracy_max,
        ),
        Check::new(
            "macro_f1",
            s.macro_f1,
            cfg.expect_macro_f1_min,
            cfg.expect_macro_f1_max,
        ),
    ]
    .into_iter()
    .flatten()
    .collect();
    Ok(Outcome {
        config: cfg.clone(),
        scores: record,
        confusion: c,
        report,
        model,
        checks,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    train_and_score(cfg, &datasets(cfg)?)
}

/// Writes every split of `splits` as `<split>.dphc` (plus sidecars) in `dir`.
pub fn write_splits(splits: &DatasetSplits, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for ds in splits.iter() {
        write_dataset(ds, &dir.join(format!("{}.dphc", ds.split.name())))?;
    }
    Ok(())
}

/// Writes the model, scores and plots of a finished run into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let cfg = &outcome.config;
    let saved = SavedModel {
        model: outcome.model.clone(),
        arch: Some(cfg.arch),
        class_values: outcome.scores.class_values.clone(),
        class_names: outcome.scores.class_names.clone(),
        train_config: Some(cfg.train_config()),
    };
    saved.save(&dir.join("model.dphm"))?;
    fs::write(dir.join("config.json"), cfg.to_json()?)?;
    fs::write(dir.join("scores.json"), outcome.scores.to_json()?)?;
    fs::write(
        dir.join("train_report.json"),
        serde_json::to_string_pretty(&outcome.report)? + "\n",
    )?;
    fs::write(dir.join("training.csv"), training_csv(&outcome.report))?;
    fs::write(
        dir.join("confusion.csv"),
        confusion_csv(&outcome.confusion, &outcome.scores.class_names),
    )?;
    fs::write(
        dir.join("confusion.svg"),
        confusion_svg(&outcome.confusion, &outcome.scores.class_names, &cfg.name),
    )?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&outcome.summary())? + "\n",
    )?;
    Ok(())
}
