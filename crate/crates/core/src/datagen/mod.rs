//! Labeled datasets of SIC-POVM snapshots at two times.
//!
//! Each sample is `p(t₁) ⊕ p(t₂)`: the outcome probabilities of a random probe
//! state after dephasing for `t₁` and for `t₂ > t₁`, labeled with the index of
//! the noise parameter that produced the dephasing.
//!
//! Generation is deterministic in [`GenSpec::seed`]. Every random draw comes
//! from a substream keyed by its role and task indices (see [`crate::rng`]),
//! so the class-level fan-out may run on any number of threads.

mod io;

use num_complex::Complex64;
use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qchannel::{dephase, BathConstants, DensityMatrix, NoiseKind};
use crate::rng::{substream, Stream};
use crate::tomo::{perturb, sic_encode, SicPovm};

pub use io::{read_dataset, sidecar_path, write_dataset, DatasetHeader, FORMAT_VERSION, MAGIC};

/// Length of a feature vector: two four-outcome SIC distributions.
pub const FEATURE_DIM: usize = 8;

const TAG_TIMES: u64 = 1;
const TAG_PAIRS: u64 = 2;
const TAG_STATES: u64 = 3;
const TAG_SELECT: u64 = 4;
const TAG_NOISE: u64 = 5;
const TAG_SHUFFLE: u64 = 6;

const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;

/// Ordered list of class parameters; label `l` means `values[l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGrid {
    pub kind: NoiseKind,
    pub values: Vec<f64>,
}

impl ClassGrid {
    pub fn new(kind: NoiseKind, values: Vec<f64>) -> Result<Self> {
        let grid = ClassGrid { kind, values };
        grid.validate()?;
        Ok(grid)
    }

    /// `α ∈ {0.5, 0.6, …, 2.0}` or `s = linspace(0.1, 3, 16)`.
    pub fn default_for(kind: NoiseKind) -> Self {
        let values = match kind {
            NoiseKind::Classical => (0..16).map(|i| (5 + i) as f64 / 10.0).collect(),
            NoiseKind::Quantum => (0..16).map(|i| 0.1 + 2.9 * i as f64 / 15.0).collect(),
        };
        ClassGrid { kind, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::domain("a class grid needs at least two values"));
        }
        if self.values.len() > u16::MAX as usize {
            return Err(Error::domain("too many classes for 16-bit labels"));
        }
        if !self.values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::domain("class values must be strictly increasing"));
        }
        if !self.values.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::domain("class values must be positive and finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_names(&self) -> Vec<String> {
        let sym = self.kind.parameter_symbol();
        self.values
            .iter()
            .map(|v| format!("{sym}={v:.3}"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl TimeWindow {
    #[allow(clippy::approx_constant)]
    pub const COLORED_NOISELESS: TimeWindow = TimeWindow {
        t_min: 0.2,
        t_max: 3.14,
    };
    pub const COLORED_NOISY: TimeWindow = TimeWindow {
        t_min: 0.4,
        t_max: 2.15,
    };
    pub const OHMIC: TimeWindow = TimeWindow {
        t_min: 0.2,
        t_max: 7.0,
    };

    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        let w = TimeWindow { t_min, t_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min >= 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(Error::domain(format!(
                "time window must satisfy 0 <= t_min < t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }
}

/// Constraint on `|Tr[σ_z ρ(0)]|`: training states below `lo`, test states in
/// the shell `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionFilter {
    pub lo: f64,
    pub hi: f64,
}

impl RegionFilter {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lo && self.lo < self.hi && self.hi <= 1.0) {
            return Err(Error::domain(format!(
                "region filter must satisfy 0 <= lo < hi <= 1, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn admits_train(&self, rho: &DensityMatrix) -> bool {
        rho.bloch()[2].abs() < self.lo
    }

    pub fn admits_test(&self, rho: &DensityMatrix) -> bool {
        let z = rho.bloch()[2].abs();
        self.lo < z && z < self.hi
    }
}

/// Everything that determines a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub grid: ClassGrid,
    pub constants: BathConstants,
    pub window: TimeWindow,
    pub n_states: usize,
    pub n_times: usize,
    pub n_pairs: usize,
    /// Purity of the probe states used for train and validation.
    pub purity: f64,
    /// Purity of the test probes; `None` means the same as `purity`.
    pub test_purity: Option<f64>,
    pub noise_sigma: f64,
    /// Rescale each noisy 4-block to unit sum. Off by default: features are
    /// fed raw.
    #[serde(default)]
    pub renormalize_noise: bool,
    pub samples_per_class: usize,
    /// Train, validation and test fractions.
    pub split_fractions: [f64; 3],
    pub seed: u64,
    pub region_filter: Option<RegionFilter>,
}

impl GenSpec {
    /// Desk-scale defaults: 2500 states, 110 times, 1000 pairs and
    /// 2000/250/250 samples per class.
    pub fn desk(kind: NoiseKind) -> Self {
        GenSpec {
            grid: ClassGrid::default_for(kind),
            constants: BathConstants::default(),
            window: match kind {
                NoiseKind::Classical => TimeWindow::COLORED_NOISELESS,
                NoiseKind::Quantum => TimeWindow::OHMIC,
            },
            n_states: 2500,
            n_times: 110,
            n_pairs: 1000,
            purity: 1.0,
            test_purity: None,
            noise_sigma: 0.0,
            renormalize_noise: false,
            samples_per_class: 2500,
            split_fractions: [0.8, 0.1, 0.1],
            seed: 0,
            region_filter: None,
        }
    }

    /// Full-size totals: 22.5·10⁵ samples over 16 classes split 15.3/3.6/3.6.
    pub fn to_paper_scale(&self) -> Self {
        GenSpec {
            samples_per_class: 2_250_000 / 16,
            split_fractions: [0.68, 0.16, 0.16],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.window.validate()?;
        if self.n_states == 0 {
            return Err(Error::domain("n_states must be positive"));
        }
        if self.n_times < 2 {
            return Err(Error::domain("n_times must be at least 2"));
        }
        if self.n_pairs == 0 {
            return Err(Error::domain("n_pairs must be positive"));
        }
        for (name, p) in [
            ("purity", Some(self.purity)),
            ("test_purity", self.test_purity),
        ] {
            if let Some(p) = p {
                if !(p > 0.5 && p <= 1.0) {
                    return Err(Error::domain(format!(
                        "{name} must lie in (1/2, 1], got {p}"
                    )));
                }
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::domain("noise_sigma must be non-negative"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::domain("samples_per_class must be positive"));
        }
        let f = self.split_fractions;
        if f.iter().any(|x| !(*x > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "split fractions must be positive and sum to 1, got {f:?}"
            )));
        }
        if let Some(r) = &self.region_filter {
            r.validate()?;
        }
        Ok(())
    }

    /// Per-class sample counts for train, validation and test.
    pub fn split_counts(&self) -> [usize; 3] {
        let n = self.samples_per_class;
        let train = ((n as f64 * self.split_fractions[0]).round() as usize).min(n);
        let val = ((n as f64 * self.split_fractions[1]).round() as usize).min(n - train);
        [train, val, n - train - val]
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub state: u32,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: [f64; FEATURE_DIM],
    pub label: u16,
    /// Absent for samples read back from disk.
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn index(&self) -> usize {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

/// One split of a dataset with its class bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: NoiseKind,
    pub class_values: Vec<f64>,
    pub class_names: Vec<String>,
    pub split: Split,
    pub spec: Option<GenSpec>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for s in &self.samples {
            counts[s.label as usize] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label as usize).collect()
    }

    /// Relabels into two macro-classes: parameter `<= threshold` → 0, above → 1.
    pub fn coarse_grained(&self, threshold: f64) -> Result<Dataset> {
        if self.class_values.len() != self.class_names.len() {
            return Err(Error::domain("dataset is already coarse-grained"));
        }
        let sym = self.kind.parameter_symbol();
        let map: Vec<u16> = self
            .class_values
            .iter()
            .map(|v| u16::from(*v > threshold))
            .collect();
        if !map.contains(&0) || !map.contains(&1) {
            return Err(Error::domain(format!(
                "threshold {threshold} does not split the class grid"
            )));
        }
        Ok(Dataset {
            kind: self.kind,
            class_values: self.class_values.clone(),
            class_names: vec![format!("{sym}<={threshold}"), format!("{sym}>{threshold}")],
            split: self.split,
            spec: self.spec.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    label: map[s.label as usize],
                    ..s.clone()
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl DatasetSplits {
    pub fn iter(&self) -> impl Iterator<Item = &Dataset> {
        [&self.train, &self.val, &self.test].into_iter()
    }

    pub fn coarse_grained(&self, threshold: f64) -> Result<DatasetSplits> {
        Ok(DatasetSplits {
            train: self.train.coarse_grained(threshold)?,
            val: self.val.coarse_grained(threshold)?,
            test: self.test.coarse_grained(threshold)?,
        })
    }
}

/// Haar-random pure qubit state.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    loop {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let beta1 = Complex64::new(g[0], g[1]);
        let beta2 = Complex64::new(g[2], g[3]);
        if let Ok(rho) = DensityMatrix::from_amplitudes(beta1, beta2) {
            return rho;
        }
    }
}

/// Mixes a pure state with `I/2` so that its purity becomes `purity_target`.
pub fn depolarize(rho: &DensityMatrix, purity_target: f64) -> Result<DensityMatrix> {
    if !(purity_target > 0.5 && purity_target <= 1.0) {
        return Err(Error::domain(format!(
            "target purity must lie in (1/2, 1], got {purity_target}"
        )));
    }
    if (rho.purity() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("depolarize expects a pure input state"));
    }
    // Tr[(λρ + (1-λ)I/2)²] = 1/2 + λ²/2 for pure ρ
    let lambda = (2.0 * purity_target - 1.0).sqrt();
    let a00 = lambda * rho.a00() + 0.5 * (1.0 - lambda);
    DensityMatrix::new(a00, 1.0 - a00, rho.a01() * lambda)
}

/// `n_times` uniform draws in the window, sorted, with near-duplicates removed.
pub fn sample_times<R: Rng + ?Sized>(
    window: &TimeWindow,
    n_times: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    window.validate()?;
    if n_times < 2 {
        return Err(Error::domain("need at least two times"));
    }
    let mut times: Vec<f64> = (0..n_times)
        .map(|_| rng.gen_range(window.t_min..=window.t_max))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|b, a| (*b - *a).abs() <= 1e-12);
    Ok(times)
}

/// Draws `n_pairs` distinct index pairs `(i, j)`, `i < j < n`, uniformly
/// without replacement.
pub fn make_pair_indices<R: Rng + ?Sized>(
    n: usize,
    n_pairs: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let available = n * n.saturating_sub(1) / 2;
    if n_pairs > available {
        return Err(Error::Exhausted {
            what: "time pairs",
            requested: n_pairs,
            available,
        });
    }
    Ok(index::sample(rng, available, n_pairs)
        .into_iter()
        .map(|r| unrank_pair(r, n))
        .collect())
}

fn unrank_pair(mut r: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if r < row {
            return (i, i + 1 + r);
        }
        r -= row;
        i += 1;
    }
}

/// Time-ordered pairs drawn from sorted `times`.
pub fn make_pairs<R: Rng + ?Sized>(
    times: &[f64],
    n_pairs: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::domain("times must be strictly increasing"));
    }
    Ok(make_pair_indices(times.len(), n_pairs, rng)?
        .into_iter()
        .map(|(i, j)| (times[i], times[j]))
        .collect())
}

/// `Λ(t, ν)` evaluator: time first, class parameter second.
pub type LambdaFn<'a> = dyn Fn(f64, f64) -> Result<f64> + Sync + 'a;

/// Memoized `Λ` for every (class, time) of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    pub class_values: Vec<f64>,
    pub times: Vec<f64>,
    values: Vec<f64>,
}

impl LambdaTable {
    pub fn compute(class_values: &[f64], times: &[f64], lam: &LambdaFn<'_>) -> Result<Self> {
        let jobs: Vec<(f64, f64)> = class_values
            .iter()
            .flat_map(|&nu| times.iter().map(move |&t| (t, nu)))
            .collect();
        let values = par_map(&jobs, |&(t, nu)| lam(t, nu))?;
        Ok(LambdaTable {
            class_values: class_values.to_vec(),
            times: times.to_vec(),
            values,
        })
    }

    pub fn get(&self, class: usize, time: usize) -> f64 {
        self.values[class * self.times.len() + time]
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    items.iter().map(f).collect()
}

/// Initial probe states, already depolarized, for the train/val and test sides.
struct StatePools {
    fit: Vec<DensityMatrix>,
    test: Vec<DensityMatrix>,
}

impl StatePools {
    fn generate(spec: &GenSpec) -> Result<Self> {
        let mut attempts = 0usize;
        let mut draw_pool = |pool: u64, accept: &dyn Fn(&DensityMatrix) -> bool| {
            (0..spec.n_states)
                .map(|k| {
                    let mut rng = substream(spec.seed, &[TAG_STATES, pool, k as u64]);
                    loop {
                        attempts += 1;
                        if attempts > MAX_REJECTION_ATTEMPTS {
                            return Err(Error::RejectionExhausted {
                                attempts: attempts - 1,
                            });
                        }
                        let rho = haar_qubit(&mut rng);
                        if accept(&rho) {
                            return Ok(rho);
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()
        };
        let (fit_pure, test_pure) = match spec.region_filter {
            Some(filter) => (
                draw_pool(0, &|r| filter.admits_train(r))?,
                Some(draw_pool(1, &|r| filter.admits_test(r))?),
            ),
            None => (draw_pool(0, &|_| true)?, None),
        };
        let mix = |states: &[DensityMatrix], purity: f64| -> Result<Vec<DensityMatrix>> {
            if purity == 1.0 {
                return Ok(states.to_vec());
            }
            states.iter().map(|r| depolarize(r, purity)).collect()
        };
        let test_purity = spec.test_purity.unwrap_or(spec.purity);
        let test = mix(test_pure.as_deref().unwrap_or(&fit_pure), test_purity)?;
        let fit = mix(&fit_pure, spec.purity)?;
        Ok(StatePools { fit, test })
    }

    fn get(&self, split: Split, k: usize) -> &DensityMatrix {
        match split {
            Split::Test => &self.test[k],
            _ => &self.fit[k],
        }
    }
}

/// The feature vector `p(t₁) ⊕ p(t₂)` for one initial state, before noise.
pub fn features(
    rho0: &DensityMatrix,
    lam1: f64,
    lam2: f64,
    povm: &SicPovm,
) -> Result<[f64; FEATURE_DIM]> {
    let p1 = sic_encode(&dephase(rho0, lam1)?, povm);
    let p2 = sic_encode(&dephase(rho0, lam2)?, povm);
    let mut x = [0.0; FEATURE_DIM];
    x[..4].copy_from_slice(&p1.0);
    x[4..].copy_from_slice(&p2.0);
    Ok(x)
}

/// Generates train/validation/test splits for `spec`, evaluating `Λ` through
/// `lam_eval` once per (class, time).
pub fn build_dataset(spec: &GenSpec, lam_eval: &LambdaFn<'_>) -> Result<DatasetSplits> {
    spec.validate()?;
    let combos = spec.n_states * spec.n_pairs;
    if spec.samples_per_class > combos {
        return Err(Error::Exhausted {
            what: "samples per class (states × pairs)",
            requested: spec.samples_per_class,
            available: combos,
        });
    }
    let times = sample_times(
        &spec.window,
        spec.n_times,
        &mut substream(spec.seed, &[TAG_TIMES]),
    )?;
    let pairs = make_pair_indices(
        times.len(),
        spec.n_pairs,
        &mut substream(spec.seed, &[TAG_PAIRS]),
    )?;
    let table = LambdaTable::compute(&spec.grid.values, &times, lam_eval)?;
    let pools = StatePools::generate(spec)?;
    let counts = spec.split_counts();
    let povm = SicPovm::tetrahedron();

    let classes: Vec<usize> = (0..spec.grid.len()).collect();
    let per_class = par_map(&classes, |&c| {
        let mut select = substream(spec.seed, &[TAG_SELECT, c as u64]);
        let chosen = index::sample(&mut select, combos, spec.samples_per_class).into_vec();
        let split_of = |pos: usize| {
            if pos < counts[0] {
                Split::Train
            } else if pos < counts[0] + counts[1] {
                Split::Val
            } else {
                Split::Test
            }
        };
        // visit by state so each (class, state) task owns one noise stream
        let mut order: Vec<usize> = (0..chosen.len()).collect();
        order.sort_by_key(|&pos| (chosen[pos] / spec.n_pairs, pos));
        let mut out: Vec<Option<Sample>> = vec![None; chosen.len()];
        let mut current: Option<(usize, Stream)> = None;
        for pos in order {
            let k = chosen[pos] / spec.n_pairs;
            let (i, j) = pairs[chosen[pos] % spec.n_pairs];
            if current.as_ref().map(|(s, _)| *s) != Some(k) {
                current = Some((k, substream(spec.seed, &[TAG_NOISE, c as u64, k as u64])));
            }
            let rng = &mut current.as_mut().expect("stream set above").1;
            let rho0 = pools.get(split_of(pos), k);
            let mut x = features(rho0, table.get(c, i), table.get(c, j), &povm)?;
            if spec.noise_sigma > 0.0 {
                for block in x.chunks_exact_mut(4) {
                    let noisy = perturb(
                        &crate::tomo::SicVector([block[0], block[1], block[2], block[3]]),
                        spec.noise_sigma,
                        rng,
                    )?;
                    block.copy_from_slice(&noisy.0);
                    if spec.renormalize_noise {
                        let sum: f64 = block.iter().sum();
                        block.iter_mut().for_each(|v| *v /= sum);
                    }
                }
            }
            out[pos] = Some(Sample {
                x,
                label: c as u16,
                provenance: Some(Provenance {
                    state: k as u32,
                    t1: times[i],
                    t2: times[j],
                }),
            });
        }
        Ok(out
            .into_iter()
            .map(|s| s.expect("every position visited"))
            .collect::<Vec<_>>())
    })?;

    let mut buckets: [Vec<Sample>; 3] = Default::default();
    for class_samples in per_class {
        for (pos, sample) in class_samples.into_iter().enumerate() {
            let split = if pos < counts[0] {
                0
            } else if pos < counts[0] + counts[1] {
                1
            } else {
                2
            };
            buckets[split].push(sample);
        }
    }
    let make = |split: Split, mut samples: Vec<Sample>| {
        samples.shuffle(&mut substream(
            spec.seed,
            &[TAG_SHUFFLE, split.index() as u64],
        ));
        Dataset {
            kind: spec.grid.kind,
            class_values: spec.grid.values.clone(),
            class_names: spec.grid.class_names(),
            split,
            spec: Some(spec.clone()),
            samples,
        }
    };
    let [train, val, test] = buckets;
    Ok(DatasetSplits {
        train: make(Split::Train, train),
        val: make(Split::Val, val),
        test: make(Split::Test, test),
    })
}

/// [`build_dataset`] with `Λ` taken from the spec's own model constants.
pub fn generate(spec: &GenSpec) -> Result<DatasetSplits> {
    let kind = spec.grid.kind;
    let constants = spec.constants;
    build_dataset(spec, &move |t, nu| constants.lambda(kind, t, nu))
}

/// Region-generalization datasets: train/validation probes with
/// `|z| < lo`, test probes with `lo < |z| < hi`.
pub fn region_split(spec: &GenSpec, lam_eval: &LambdaFn<'_>) -> Result<DatasetSplits> {
    if spec.region_filter.is_none() {
        return Err(Error::domain("region_split requires a region filter"));
    }
    build_dataset(spec, lam_eval)
}
