//! Deme-based stochastic drive model simulated with the Gillespie algorithm.
//!
//! Each deme holds integer counts of drive (`D`) and wild-type (`O`) individuals with
//! densities `n = count / K`. Per-capita event rates are the birth and death parts of the
//! density reaction, so the large-`K` limit recovers the deterministic system. A birth
//! event yields a Poisson(1) batch of offspring of the focal genotype; each newborn
//! emigrates with probability `emigration_prob` to a random nearest neighbour, and the
//! end demes send all emigrants to their single neighbour.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{DemographySpec, GenotypeParams, ModelSpec};
use crate::sweep::{AxisParam, AxisSpec};

/// Starting counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StochasticInitial {
    /// Left half all wild type at `K`, right half `0.95 K` drive and `0.05 K` wild type.
    Standard,
    /// Left half all wild type at `K`, right half all drive at `K`.
    Halves,
    /// The same counts in every deme.
    Uniform { drive: u32, wild: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticConfig {
    pub deme_count: usize,
    /// Deme carrying capacity `K`.
    pub capacity: u32,
    pub emigration_prob: f64,
    /// Density drive model supplying the demography and genotype parameters.
    pub model: ModelSpec<f64>,
    pub t_final: f64,
    pub seed: u64,
    /// Heterozygous matings produce drive offspring only; `false` gives Mendelian transmission.
    pub gene_conversion: bool,
    pub initial: StochasticInitial,
    /// Hard cap on events, reported as a timeout.
    pub max_events: u64,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        Self {
            deme_count: 100,
            capacity: 1000,
            emigration_prob: 0.1,
            model: ModelSpec::density_drive(0.5, 1.0),
            t_final: 2000.0,
            seed: 0,
            gene_conversion: true,
            initial: StochasticInitial::Standard,
            max_events: 2_000_000_000,
        }
    }
}

impl StochasticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.deme_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "deme_count must be at least 2, got {}",
                self.deme_count
            )));
        }
        if self.capacity < 1 {
            return Err(Error::InvalidConfig("capacity K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.emigration_prob) {
            return Err(Error::InvalidConfig(format!(
                "emigration_prob must lie in [0, 1], got {}",
                self.emigration_prob
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_final must be finite and >= 0, got {}",
                self.t_final
            )));
        }
        self.rates()?;
        Ok(())
    }

    fn rates(&self) -> Result<RateModel> {
        match self.model {
            ModelSpec::DensityDrive {
                demography,
                selection,
                s,
            } => {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidConfig(format!(
                        "s must lie in [0, 1], got {s}"
                    )));
                }
                Ok(RateModel {
                    demography,
                    geno: selection.genotype(s),
                    capacity: f64::from(self.capacity),
                    conversion: self.gene_conversion,
                })
            }
            _ => Err(Error::InvalidConfig(format!(
                "stochastic runs need the density drive model, got {}",
                self.model.kind().name()
            ))),
        }
    }

    fn initial_counts(&self) -> Vec<[u32; 2]> {
        let k = self.capacity;
        let half = self.deme_count / 2;
        (0..self.deme_count)
            .map(|i| match self.initial {
                StochasticInitial::Uniform { drive, wild } => [drive, wild],
                _ if i < half => [0, k],
                StochasticInitial::Halves => [k, 0],
                StochasticInitial::Standard => {
                    let drive = (0.95 * f64::from(k)).round() as u32;
                    [drive, k - drive.min(k)]
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StochasticResult {
    /// Wild type extinct.
    DriveFixed,
    /// Drive extinct.
    DriveLost,
    Timeout,
}

impl StochasticResult {
    pub fn name(self) -> &'static str {
        match self {
            Self::DriveFixed => "DriveFixed",
            Self::DriveLost => "DriveLost",
            Self::Timeout => "Timeout",
        }
    }
}

impl fmt::Display for StochasticResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StochasticResult {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DriveFixed" => Ok(Self::DriveFixed),
            "DriveLost" => Ok(Self::DriveLost),
            "Timeout" => Ok(Self::Timeout),
            other => Err(Error::InvalidConfig(format!(
                "unknown stochastic result {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticOutcome {
    pub result: StochasticResult,
    /// Time of the stopping event; `None` on timeout.
    pub extinction_time: Option<f64>,
    pub events: u64,
    /// Final `[drive, wild]` counts per deme.
    pub counts: Vec<[u32; 2]>,
    /// Largest total count seen in any deme.
    pub max_deme_population: u32,
}

impl StochasticOutcome {
    pub fn totals(&self) -> [u64; 2] {
        self.counts.iter().fold([0, 0], |acc, c| {
            [acc[0] + u64::from(c[0]), acc[1] + u64::from(c[1])]
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct RateModel {
    demography: DemographySpec<f64>,
    geno: GenotypeParams<f64>,
    capacity: f64,
    conversion: bool,
}

impl RateModel {
    /// `[birth_D, birth_O, death_D, death_O]` event rates of one deme.
    fn channels(&self, counts: [u32; 2]) -> [f64; 4] {
        let (cd, co) = (f64::from(counts[0]), f64::from(counts[1]));
        if cd + co == 0.0 {
            return [0.0; 4];
        }
        let (nd, no) = (cd / self.capacity, co / self.capacity);
        let n = nd + no;
        let b = self.demography.birth(n).max(0.0);
        let d = self.demography.death(n).max(0.0);
        let g = self.geno;
        let partner_o = if self.conversion { 2.0 * no } else { no };
        let birth_d = cd * g.omega_d * g.beta_d * b * (partner_o + g.beta_d * nd) / n;
        let birth_o = if self.conversion {
            co * b * no / n
        } else {
            co * b * (no + g.beta_d * nd) / n
        };
        [
            birth_d.max(0.0),
            birth_o.max(0.0),
            cd * g.death_d * d,
            co * d,
        ]
    }
}

/// Sum tree over per-deme total rates; internal nodes are recomputed, never incremented.
struct RateTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl RateTree {
    fn new(rates: &[f64]) -> Self {
        let leaves = rates.len().next_power_of_two();
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + rates.len()].copy_from_slice(rates);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        Self { leaves, nodes }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn set(&mut self, index: usize, value: f64) {
        let mut i = index + self.leaves;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target` in `[0, total)`.
    fn find(&self, mut target: f64) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            if target < left || self.nodes[2 * i + 1] <= 0.0 {
                i *= 2;
            } else {
                target -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

struct Demes {
    model: RateModel,
    counts: Vec<[u32; 2]>,
    channels: Vec<[f64; 4]>,
    tree: RateTree,
    totals: [u64; 2],
    max_population: u32,
}

impl Demes {
    fn new(model: RateModel, counts: Vec<[u32; 2]>) -> Self {
        let channels: Vec<[f64; 4]> = counts.iter().map(|&c| model.channels(c)).collect();
        let sums: Vec<f64> = channels.iter().map(|c| c.iter().sum()).collect();
        let totals = counts.iter().fold([0u64, 0], |acc, c| {
            [acc[0] + u64::from(c[0]), acc[1] + u64::from(c[1])]
        });
        let max_population = counts.iter().map(|c| c[0] + c[1]).max().unwrap_or(0);
        Self {
            model,
            counts,
            channels,
            tree: RateTree::new(&sums),
            totals,
            max_population,
        }
    }

    fn refresh(&mut self, deme: usize) {
        let c = self.counts[deme];
        self.max_population = self.max_population.max(c[0] + c[1]);
        self.channels[deme] = self.model.channels(c);
        self.tree.set(deme, self.channels[deme].iter().sum());
    }

    fn add(&mut self, deme: usize, genotype: usize) {
        self.counts[deme][genotype] += 1;
        self.totals[genotype] += 1;
    }
}

fn neighbour(deme: usize, count: usize, rng: &mut ChaCha8Rng) -> usize {
    if deme == 0 {
        1
    } else if deme + 1 == count {
        deme - 1
    } else if rng.random::<bool>() {
        deme + 1
    } else {
        deme - 1
    }
}

/// Runs one realisation until an initially present allele disappears or `t_final`.
pub fn run_stochastic(config: &StochasticConfig) -> Result<StochasticOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let offspring = Poisson::new(1.0).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut demes = Demes::new(config.rates()?, config.initial_counts());
    let present = [demes.totals[0] > 0, demes.totals[1] > 0];
    let count = config.deme_count;

    let mut t = 0.0;
    let mut events = 0u64;
    let mut touched = Vec::with_capacity(3);
    let result = loop {
        if present[0] && demes.totals[0] == 0 {
            break StochasticResult::DriveLost;
        }
        if present[1] && demes.totals[1] == 0 {
            break StochasticResult::DriveFixed;
        }
        let total = demes.tree.total();
        if !(total > 0.0) || events >= config.max_events {
            break StochasticResult::Timeout;
        }
        let wait = -(1.0 - rng.random::<f64>()).ln() / total;
        if t + wait > config.t_final {
            break StochasticResult::Timeout;
        }
        t += wait;
        events += 1;

        let deme = demes.tree.find(rng.random::<f64>() * total);
        let rates = demes.channels[deme];
        let mut target = rng.random::<f64>() * rates.iter().sum::<f64>();
        let mut channel = 3;
        for (k, &rate) in rates.iter().enumerate() {
            if target < rate {
                channel = k;
                break;
            }
            target -= rate;
        }
        while rates[channel] <= 0.0 && channel > 0 {
            channel -= 1;
        }

        touched.clear();
        touched.push(deme);
        match channel {
            0 | 1 => {
                let genotype = channel;
                let born = offspring.sample(&mut rng) as u64;
                for _ in 0..born {
                    let home = if config.emigration_prob > 0.0
                        && rng.random::<f64>() < config.emigration_prob
                    {
                        let dest = neighbour(deme, count, &mut rng);
                        if !touched.contains(&dest) {
                            touched.push(dest);
                        }
                        dest
                    } else {
                        deme
                    };
                    demes.add(home, genotype);
                }
            }
            _ => {
                let genotype = channel - 2;
                if demes.counts[deme][genotype] > 0 {
                    demes.counts[deme][genotype] -= 1;
                    demes.totals[genotype] -= 1;
                }
            }
        }
        for &d in &touched {
            demes.refresh(d);
        }
    };

    let extinction_time = (result != StochasticResult::Timeout).then_some(t);
    Ok(StochasticOutcome {
        result,
        extinction_time,
        events,
        max_deme_population: demes.max_population,
        counts: demes.counts,
    })
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep cell `index`: `splitmix64(base ^ splitmix64(index))`.
pub fn cell_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// One stochastic run per `(s, r)` grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSweepConfig {
    /// Template; its seed is the base seed.
    pub base: StochasticConfig,
    pub s: AxisSpec,
    pub r: AxisSpec,
    pub workers: usize,
}

impl StochasticSweepConfig {
    /// 5 x 5 over `s in [0.3, 0.8]`, `r in [0.5, 8]`, base seed 1.
    pub fn default_grid() -> Self {
        Self {
            base: StochasticConfig {
                seed: 1,
                ..StochasticConfig::default()
            },
            s: AxisSpec::new(AxisParam::S, 0.3, 0.8, 5),
            r: AxisSpec::new(AxisParam::R, 0.5, 8.0, 5),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s.param != AxisParam::S || self.r.param != AxisParam::R {
            return Err(Error::InvalidConfig(
                "stochastic sweep axes must be s and r".into(),
            ));
        }
        self.s.validate(1)?;
        self.r.validate(1)?;
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticCell {
    pub s: f64,
    pub r: f64,
    pub seed: u64,
    pub outcome: StochasticOutcome,
}

/// Runs the grid row-major (`s` outer) on `workers` threads.
///
/// Cell `k` uses [`cell_seed`]`(base, k)`; a single-cell grid uses the base seed itself.
pub fn stochastic_sweep(config: &StochasticSweepConfig) -> Result<Vec<StochasticCell>> {
    config.validate()?;
    let rs = config.r.values();
    let points: Vec<(f64, f64)> = config
        .s
        .values()
        .into_iter()
        .flat_map(|s| rs.iter().map(move |&r| (s, r)))
        .collect();
    let single = points.len() == 1;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, &(s, r))| {
                let model = AxisParam::R.apply(AxisParam::S.apply(config.base.model, s)?, r)?;
                let seed = if single {
                    config.base.seed
                } else {
                    cell_seed(config.base.seed, index as u64)
                };
                let run = StochasticConfig {
                    model,
                    seed,
                    ..config.base.clone()
                };
                Ok(StochasticCell {
                    s,
                    r,
                    seed,
                    outcome: run_stochastic(&run)?,
                })
            })
            .collect()
    })
}
