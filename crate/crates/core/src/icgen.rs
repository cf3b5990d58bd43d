//! Parametric initial-condition families and dataset assembly.
//!
//! Each profile is a raw family function `f` evaluated at the cell centres,
//! min-max normalized to `[0, 1]`, then rescaled as `g = a f + b` with
//! `a ~ U(0.05, 1)` and `b ~ U(0, 1 - a)` so that `g` stays in `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3, ArrayView1};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{dimensionless_coefficients, PhysicalParams};
use crate::solver::{solve, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Line,
    Sigmoid,
    Exponential,
    Gaussian,
    Sine,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Line,
        Family::Sigmoid,
        Family::Exponential,
        Family::Gaussian,
        Family::Sine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Line => "line",
            Family::Sigmoid => "sigmoid",
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
            Family::Sine => "sine",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid("family", format!("unknown family `{s}`")))
    }
}

/// Raw family parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Shape {
    /// `m x + q`
    Line { m: f64, q: f64 },
    /// `1 / (1 + exp(-k (x - c)))`
    Sigmoid { k: f64, c: f64 },
    /// `exp(alpha (x - beta))`
    Exponential { alpha: f64, beta: f64 },
    /// `exp(-(x - mu)^2 / (2 sigma^2))`
    Gaussian { mu: f64, sigma: f64 },
    /// `sin(w0 x + phi)`
    Sine { w0: f64, phi: f64 },
}

impl Shape {
    pub fn family(&self) -> Family {
        match self {
            Shape::Line { .. } => Family::Line,
            Shape::Sigmoid { .. } => Family::Sigmoid,
            Shape::Exponential { .. } => Family::Exponential,
            Shape::Gaussian { .. } => Family::Gaussian,
            Shape::Sine { .. } => Family::Sine,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Shape::Line { m, q } => m * x + q,
            Shape::Sigmoid { k, c } => 1.0 / (1.0 + (-k * (x - c)).exp()),
            Shape::Exponential { alpha, beta } => (alpha * (x - beta)).exp(),
            Shape::Gaussian { mu, sigma } => (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp(),
            Shape::Sine { w0, phi } => (w0 * x + phi).sin(),
        }
    }
}

/// A fully specified initial condition; re-evaluating it reproduces the stored profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ICSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Amplitude applied after min-max normalization.
    pub a: f64,
    /// Vertical offset.
    pub b: f64,
    pub seed: u64,
}

impl ICSpec {
    pub fn family(&self) -> Family {
        self.shape.family()
    }
}

/// Half-open interval `[lo, hi)`; `lo == hi` denotes a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        if self.lo == self.hi {
            v == self.lo
        } else {
            (self.lo..=self.hi).contains(&v)
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.lo + self.width() * u
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::invalid(name, format!("bad interval [{}, {})", self.lo, self.hi)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineRanges {
    pub w0: Interval,
    pub phi: Interval,
}

/// Parameter ranges for every family present in a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeTable {
    pub gaussian_mu: Interval,
    pub gaussian_sigma: Interval,
    pub sigmoid_k: Interval,
    pub sigmoid_c: Interval,
    pub exponential_alpha: Interval,
    pub exponential_beta: Interval,
    /// Union of disjoint pieces; a piece is picked with probability proportional to its width.
    pub line_m: Vec<Interval>,
    pub line_q: Interval,
    pub sine: Option<SineRanges>,
    /// Range of the rescale amplitude `a`; `b` is then drawn from `[0, 1 - a)`.
    pub amplitude: Interval,
}

impl RangeTable {
    /// Ranges of the training distribution.
    pub fn in_distribution() -> Self {
        Self {
            gaussian_mu: Interval::new(0.0, 1.0),
            gaussian_sigma: Interval::new(0.05, 2.0),
            sigmoid_k: Interval::new(5.0, 30.0),
            sigmoid_c: Interval::new(0.0, 1.0),
            exponential_alpha: Interval::new(-5.0, 5.0),
            exponential_beta: Interval::fixed(0.5),
            line_m: vec![Interval::new(-2.0, 2.0)],
            line_q: Interval::new(-1.0, 1.0),
            sine: None,
            amplitude: Interval::new(0.05, 1.0),
        }
    }

    /// Extended ranges plus the unseen sine family.
    pub fn out_of_distribution() -> Self {
        Self {
            gaussian_mu: Interval::new(-0.5, 1.5),
            gaussian_sigma: Interval::new(0.2, 0.4),
            sigmoid_k: Interval::new(30.0, 50.0),
            sigmoid_c: Interval::new(-0.8, 1.2),
            exponential_alpha: Interval::new(-7.0, 7.0),
            exponential_beta: Interval::new(0.2, 0.7),
            line_m: vec![Interval::new(-4.0, -2.0), Interval::new(2.0, 4.0)],
            line_q: Interval::new(-1.0, 1.0),
            sine: Some(SineRanges {
                w0: Interval::new(0.1, 0.5),
                phi: Interval::fixed(0.0),
            }),
            amplitude: Interval::new(0.05, 1.0),
        }
    }

    /// Families that can be drawn from this table, in assignment order.
    pub fn families(&self) -> Vec<Family> {
        let mut f = vec![Family::Gaussian, Family::Sigmoid, Family::Exponential, Family::Line];
        if self.sine.is_some() {
            f.push(Family::Sine);
        }
        f
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("gaussian_mu", self.gaussian_mu),
            ("gaussian_sigma", self.gaussian_sigma),
            ("sigmoid_k", self.sigmoid_k),
            ("sigmoid_c", self.sigmoid_c),
            ("exponential_alpha", self.exponential_alpha),
            ("exponential_beta", self.exponential_beta),
            ("line_q", self.line_q),
            ("amplitude", self.amplitude),
        ];
        for (name, iv) in named {
            iv.validate(name)?;
        }
        if self.line_m.is_empty() {
            return Err(Error::invalid("line_m", "needs at least one interval"));
        }
        for iv in &self.line_m {
            iv.validate("line_m")?;
        }
        if let Some(s) = &self.sine {
            s.w0.validate("sine.w0")?;
            s.phi.validate("sine.phi")?;
        }
        if self.gaussian_sigma.lo <= 0.0 {
            return Err(Error::invalid("gaussian_sigma", "must be > 0"));
        }
        if self.amplitude.lo <= 0.0 || self.amplitude.hi > 1.0 {
            return Err(Error::invalid("amplitude", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Whether every parameter of `spec` lies inside this table.
    pub fn admits(&self, spec: &ICSpec) -> bool {
        let shape_ok = match spec.shape {
            Shape::Line { m, q } => self.line_m.iter().any(|iv| iv.contains(m)) && self.line_q.contains(q),
            Shape::Sigmoid { k, c } => self.sigmoid_k.contains(k) && self.sigmoid_c.contains(c),
            Shape::Exponential { alpha, beta } => {
                self.exponential_alpha.contains(alpha) && self.exponential_beta.contains(beta)
            }
            Shape::Gaussian { mu, sigma } => {
                self.gaussian_mu.contains(mu) && self.gaussian_sigma.contains(sigma)
            }
            Shape::Sine { w0, phi } => self
                .sine
                .is_some_and(|s| s.w0.contains(w0) && s.phi.contains(phi)),
        };
        shape_ok && self.amplitude.contains(spec.a) && spec.b >= 0.0 && spec.a + spec.b <= 1.0 + 1e-12
    }
}

fn sample_union<R: Rng>(pieces: &[Interval], rng: &mut R) -> f64 {
    let total: f64 = pieces.iter().map(Interval::width).sum();
    if total == 0.0 {
        return pieces[0].lo;
    }
    let mut pick = rng.gen::<f64>() * total;
    for piece in pieces {
        if pick < piece.width() {
            return piece.sample(rng);
        }
        pick -= piece.width();
    }
    pieces[pieces.len() - 1].sample(rng)
}

/// Draws the family parameters and the rescale factors from `table`.
///
/// The returned spec has `seed = 0`; [`sample_ic_seeded`] records the seed.
pub fn sample_ic<R: Rng>(family: Family, table: &RangeTable, rng: &mut R) -> Result<ICSpec> {
    let shape = match family {
        Family::Line => Shape::Line {
            m: sample_union(&table.line_m, rng),
            q: table.line_q.sample(rng),
        },
        Family::Sigmoid => Shape::Sigmoid {
            k: table.sigmoid_k.sample(rng),
            c: table.sigmoid_c.sample(rng),
        },
        Family::Exponential => Shape::Exponential {
            alpha: table.exponential_alpha.sample(rng),
            beta: table.exponential_beta.sample(rng),
        },
        Family::Gaussian => Shape::Gaussian {
            mu: table.gaussian_mu.sample(rng),
            sigma: table.gaussian_sigma.sample(rng),
        },
        Family::Sine => {
            let sine = table.sine.ok_or_else(|| {
                Error::invalid("family", "sine is not part of this range table")
            })?;
            Shape::Sine {
                w0: sine.w0.sample(rng),
                phi: sine.phi.sample(rng),
            }
        }
    };
    let a = table.amplitude.sample(rng);
    let b = Interval::new(0.0, 1.0 - a).sample(rng);
    Ok(ICSpec { shape, a, b, seed: 0 })
}

pub fn sample_ic_seeded(family: Family, table: &RangeTable, seed: u64) -> Result<ICSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = sample_ic(family, table, &mut rng)?;
    spec.seed = seed;
    Ok(spec)
}

/// Per-sample seed; a pure function of the master seed and the sample index.
pub fn sample_seed(master_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng.gen()
}

/// Evaluates the rescaled profile at the given points.
pub fn evaluate_ic(spec: &ICSpec, xi: &[f64]) -> Array1<f64> {
    let raw: Vec<f64> = xi.iter().map(|&x| spec.shape.eval(x)).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    raw.into_iter()
        .map(|f| {
            let unit = if span < 1e-12 || !span.is_finite() {
                0.5
            } else {
                (f - lo) / span
            };
            (spec.a * unit + spec.b).clamp(0.0, 1.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    InDistribution,
    OutOfDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    /// 72 / 18 / 10 percent, the test split absorbing rounding.
    pub fn proportional(n: usize) -> Self {
        let train = (n as f64 * 0.72).round() as usize;
        let val = ((n as f64 * 0.18).round() as usize).min(n - train);
        Self {
            train,
            val,
            test: n - train - val,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    All,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "all" | "ood" => Ok(Split::All),
            other => Err(Error::invalid("split", format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_samples: usize,
    /// Explicit split sizes; defaults to 72/18/10 (in-distribution) or all-test (OOD).
    pub splits: Option<SplitSizes>,
    /// Overrides the default range table of the dataset kind.
    pub ranges: Option<RangeTable>,
    pub grid: Grid,
    pub params: PhysicalParams,
    /// Worker threads used for solving; results do not depend on it.
    pub threads: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            splits: None,
            ranges: None,
            grid: Grid::default(),
            params: PhysicalParams::default(),
            threads: 1,
        }
    }
}

impl DatasetConfig {
    pub fn with_samples(n_samples: usize) -> Self {
        Self {
            n_samples,
            ..Default::default()
        }
    }
}

/// Initial profiles, solved fields, provenance and the split partition.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub seed: u64,
    pub grid: Grid,
    pub params: PhysicalParams,
    pub ranges: RangeTable,
    /// `N x n_x`
    pub ics: Array2<f64>,
    /// `N x n_x x n_t`
    pub gas: Array3<f64>,
    /// `N x n_x x n_t`
    pub solid: Array3<f64>,
    pub specs: Vec<ICSpec>,
    pub splits: Splits,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        match split {
            Split::Train => self.splits.train.clone(),
            Split::Val => self.splits.val.clone(),
            Split::Test => self.splits.test.clone(),
            Split::All => (0..self.len()).collect(),
        }
    }

    pub fn family_counts(&self) -> BTreeMap<Family, usize> {
        let mut counts = BTreeMap::new();
        for spec in &self.specs {
            *counts.entry(spec.family()).or_insert(0) += 1;
        }
        counts
    }

    pub fn ic(&self, index: usize) -> ArrayView1<'_, f64> {
        self.ics.row(index)
    }
}

pub fn build_dataset(config: &DatasetConfig, master_seed: u64) -> Result<Dataset> {
    build(DatasetKind::InDistribution, config, master_seed)
}

pub fn build_ood_dataset(config: &DatasetConfig, master_seed: u64) -> Result<Dataset> {
    build(DatasetKind::OutOfDistribution, config, master_seed)
}

fn build(kind: DatasetKind, config: &DatasetConfig, master_seed: u64) -> Result<Dataset> {
    let n = config.n_samples;
    if n == 0 {
        return Err(Error::invalid("n_samples", "must be > 0"));
    }
    config.grid.validate()?;
    let coeffs = dimensionless_coefficients(&config.params)?;
    let ranges = config.ranges.clone().unwrap_or_else(|| match kind {
        DatasetKind::InDistribution => RangeTable::in_distribution(),
        DatasetKind::OutOfDistribution => RangeTable::out_of_distribution(),
    });
    ranges.validate()?;
    let sizes = config.splits.unwrap_or(match kind {
        DatasetKind::InDistribution => SplitSizes::proportional(n),
        DatasetKind::OutOfDistribution => SplitSizes {
            train: 0,
            val: 0,
            test: n,
        },
    });
    if sizes.total() != n {
        return Err(Error::invalid(
            "splits",
            format!("split sizes sum to {}, dataset has {n} samples", sizes.total()),
        ));
    }

    // Round-robin assignment gives exact (as equal as possible) family counts.
    let families = ranges.families();
    let xi = config.grid.xi_centers();
    let specs = (0..n)
        .map(|i| sample_ic_seeded(families[i % families.len()], &ranges, sample_seed(master_seed, i)))
        .collect::<Result<Vec<_>>>()?;

    let (nx, nt) = (config.grid.n_x, config.grid.n_t);
    let solve_one = |i: usize| {
        let ic = evaluate_ic(&specs[i], &xi);
        solve(ic.view(), &coeffs, &config.grid)
            .map(|out| (ic, out))
            .map_err(|e| Error::Sample {
                index: i,
                source: Box::new(e),
            })
    };
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?,
        )
    } else {
        None
    };

    // Solved in chunks so that only one chunk of solver output is alive next to the arrays.
    let mut ics = Array2::zeros((n, nx));
    let mut gas = Array3::zeros((n, nx, nt));
    let mut solid = Array3::zeros((n, nx, nt));
    let chunk = 64 * config.threads.max(1);
    for start in (0..n).step_by(chunk) {
        let range = start..(start + chunk).min(n);
        let solved: Vec<_> = match &pool {
            Some(pool) => pool.install(|| range.clone().into_par_iter().map(solve_one).collect::<Result<_>>())?,
            None => range.clone().map(solve_one).collect::<Result<_>>()?,
        };
        for (i, (ic, out)) in range.zip(solved) {
            ics.row_mut(i).assign(&ic);
            gas.index_axis_mut(ndarray::Axis(0), i).assign(&out.gas.values);
            solid.index_axis_mut(ndarray::Axis(0), i).assign(&out.solid.values);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(u64::MAX);
    order.shuffle(&mut rng);
    let mut splits = Splits {
        train: order[..sizes.train].to_vec(),
        val: order[sizes.train..sizes.train + sizes.val].to_vec(),
        test: order[sizes.train + sizes.val..].to_vec(),
    };
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();

    Ok(Dataset {
        kind,
        seed: master_seed,
        grid: config.grid,
        params: config.params,
        ranges,
        ics,
        gas,
        solid,
        specs,
        splits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_in_distribution_ranges() {
        let table = RangeTable::in_distribution();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let spec = sample_ic(Family::Gaussian, &table, &mut rng).unwrap();
            let Shape::Gaussian { mu, sigma } = spec.shape else { unreachable!() };
            assert!((0.0..=1.0).contains(&mu));
            assert!((0.05..=2.0).contains(&sigma));
            assert!(table.admits(&spec));
        }
    }

    #[test]
    fn sine_ood_ranges() {
        let table = RangeTable::out_of_distribution();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let spec = sample_ic(Family::Sine, &table, &mut rng).unwrap();
            let Shape::Sine { w0, phi } = spec.shape else { unreachable!() };
            assert!((0.1..=0.5).contains(&w0));
            assert_eq!(phi, 0.0);
        }
    }

    #[test]
    fn exponential_beta_fixed() {
        let table = RangeTable::in_distribution();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let spec = sample_ic(Family::Exponential, &table, &mut rng).unwrap();
            let Shape::Exponential { beta, .. } = spec.shape else { unreachable!() };
            assert_eq!(beta, 0.5);
        }
    }

    #[test]
    fn sine_rejected_in_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_ic(Family::Sine, &RangeTable::in_distribution(), &mut rng).is_err());
        assert!("cosine".parse::<Family>().is_err());
    }

    #[test]
    fn ood_line_slope_covers_both_halves() {
        let table = RangeTable::out_of_distribution();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut neg, mut pos) = (0, 0);
        for _ in 0..4000 {
            let Shape::Line { m, .. } = sample_ic(Family::Line, &table, &mut rng).unwrap().shape else {
                unreachable!()
            };
            if (-4.0..-2.0).contains(&m) {
                neg += 1;
            } else {
                assert!((2.0..4.0).contains(&m), "m = {m}");
                pos += 1;
            }
        }
        assert!((neg as f64 / 4000.0 - 0.5).abs() < 0.03, "neg {neg} pos {pos}");
    }

    #[test]
    fn flat_line_is_constant() {
        let spec = ICSpec {
            shape: Shape::Line { m: 0.0, q: 0.5 },
            a: 1.0,
            b: 0.0,
            seed: 0,
        };
        let v = evaluate_ic(&spec, &Grid::default().xi_centers());
        assert!(v.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn wide_gaussian_is_nearly_flat_before_rescale() {
        let spec = Shape::Gaussian { mu: 0.5, sigma: 1e7 };
        let xi = Grid::default().xi_centers();
        let raw: Vec<f64> = xi.iter().map(|&x| spec.eval(x)).collect();
        let span = raw.iter().copied().fold(f64::MIN, f64::max) - raw.iter().copied().fold(f64::MAX, f64::min);
        assert!(span < 1e-12);
        let v = evaluate_ic(&ICSpec { shape: spec, a: 0.4, b: 0.3, seed: 0 }, &xi);
        assert!(v.iter().all(|&x| x == 0.5 * 0.4 + 0.3));
    }

    #[test]
    fn steep_sigmoid_spans_unit_range() {
        let spec = ICSpec {
            shape: Shape::Sigmoid { k: 30.0, c: 0.5 },
            a: 1.0,
            b: 0.0,
            seed: 0,
        };
        let xi = Grid::default().xi_centers();
        let v = evaluate_ic(&spec, &xi);
        let at = |x: f64| v[xi.iter().position(|&c| (c - x).abs() < 1e-9).unwrap()];
        assert!(at(0.055) < 0.01);
        assert!(at(0.945) > 0.99);
        // Oracle: direct evaluation of the logistic at the end cell.
        let s = |x: f64| 1.0 / (1.0 + (-30.0 * (x - 0.5_f64)).exp());
        let expected = (s(0.055) - s(0.005)) / (s(0.995) - s(0.005));
        assert!((at(0.055) - expected).abs() < 1e-15);
    }

    #[test]
    fn sampled_profiles_stay_in_unit_interval() {
        let xi = Grid::default().xi_centers();
        for table in [RangeTable::in_distribution(), RangeTable::out_of_distribution()] {
            for (i, fam) in table.families().into_iter().enumerate() {
                for s in 0..100u64 {
                    let spec = sample_ic_seeded(fam, &table, s * 31 + i as u64).unwrap();
                    let v = evaluate_ic(&spec, &xi);
                    assert!(v.iter().all(|x| (0.0..=1.0).contains(x)), "{spec:?}");
                    assert!(spec.a >= 0.05 && spec.a + spec.b <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn proportional_split_sizes() {
        assert_eq!(
            SplitSizes::proportional(10_000),
            SplitSizes { train: 7200, val: 1800, test: 1000 }
        );
        let s = SplitSizes::proportional(7);
        assert_eq!(s.total(), 7);
    }

    #[test]
    fn small_dataset_partition_and_counts() {
        let cfg = DatasetConfig::with_samples(40);
        let ds = build_dataset(&cfg, 11).unwrap();
        let mut all: Vec<usize> = ds
            .splits
            .train
            .iter()
            .chain(&ds.splits.val)
            .chain(&ds.splits.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert!(ds.family_counts().values().all(|&c| c == 10));
        for i in 0..ds.len() {
            let again = evaluate_ic(&ds.specs[i], &ds.grid.xi_centers());
            assert_eq!(again, ds.ic(i));
            assert_eq!(ds.gas.slice(ndarray::s![i, .., 0]), ds.ic(i));
        }
    }

    #[test]
    fn split_mismatch_rejected() {
        let cfg = DatasetConfig {
            n_samples: 10,
            splits: Some(SplitSizes { train: 5, val: 2, test: 2 }),
            ..Default::default()
        };
        assert!(build_dataset(&cfg, 0).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = sample_ic_seeded(Family::Sigmoid, &RangeTable::in_distribution(), 99).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"family\":\"sigmoid\""));
        let back: ICSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
