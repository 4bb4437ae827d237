//! Seeded Monte Carlo sweeps over realizations and the figure pipelines.
//!
//! Realization `r` of a sweep uses the seed `derive_seed(master_seed, r)`.
//! From that seed, sub-stream 0 draws the coupling instance, sub-stream 1 the
//! initial product state and sub-stream 2 any random fragments, so a single
//! realization can be reproduced in isolation. Realizations are collected in
//! index order and reduced with compensated summation, which makes the
//! averages bit-identical for any thread count.

use serde::{Deserialize, Serialize};

use crate::analytics::{asymptotic_chi, asymptotic_i, s_max, EPS_BAR};
use crate::dynamics::{
    evolve_branching, random_product_state, BranchingState, DiagonalPropagator, PureState,
    SpectralPropagator, DIAGONAL_QUBIT_CAP,
};
use crate::error::{invalid, Error, Result};
use crate::information::{
    holevo_branching, mutual_information, mutual_information_branching, subsystem_entropy,
    system_entropy_branching, FragmentSpec,
};
use crate::model::{
    build_model, check_qubit_cap, sample_instance, Axis, ModelKind, ModelOverrides, ModelSpec,
    DENSE_QUBIT_CAP,
};
use crate::rng::{derive_seed, SeededRng};

const STREAM_COUPLINGS: u64 = 0;
const STREAM_INITIAL_STATE: u64 = 1;
const STREAM_FRAGMENTS: u64 = 2;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FragmentPolicy {
    /// Fragment of size `n` is sites `1..=n`.
    #[default]
    Prefix,
    /// `count` uniformly random subsets of each size per realization; the
    /// realization value is their average.
    RandomSubsets { count: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Ratio is `I / h[|α_0|²]`, per realization.
    #[default]
    BySmax,
    /// Ratio is `I` itself.
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Branching if the model has that structure, else diagonal, else dense.
    #[default]
    Auto,
    Dense,
    Diagonal,
    Branching,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Auto => "auto",
            Engine::Dense => "dense",
            Engine::Diagonal => "diagonal",
            Engine::Branching => "branching",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    #[serde(default)]
    pub overrides: ModelOverrides,
    pub n_env: usize,
    pub time_grid: Vec<f64>,
    pub fragment_sizes: Vec<usize>,
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub fragment_policy: FragmentPolicy,
    #[serde(default)]
    pub normalize: Normalization,
    #[serde(default)]
    pub engine: Engine,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_env == 0 {
            return invalid("n_env must be at least 1");
        }
        if self.time_grid.is_empty() {
            return invalid("time_grid must not be empty");
        }
        if let Some(t) = self
            .time_grid
            .iter()
            .find(|t| !(t.is_finite() && **t >= 0.0))
        {
            return invalid(format!("times must be finite and >= 0, got {t}"));
        }
        if self.fragment_sizes.is_empty() {
            return invalid("fragment_sizes must not be empty");
        }
        if let Some(n) = self.fragment_sizes.iter().find(|n| **n > self.n_env) {
            return invalid(format!("fragment size {n} exceeds n_env = {}", self.n_env));
        }
        if self.realizations == 0 {
            return invalid("realizations must be at least 1");
        }
        if self.fragment_policy == (FragmentPolicy::RandomSubsets { count: 0 }) {
            return invalid("random_subsets count must be at least 1");
        }
        self.plan().map(|_| ())
    }

    fn plan(&self) -> Result<Plan> {
        let spec = build_model(self.model, self.n_env, &self.overrides)?;
        let branching = spec_has_branching_form(&spec);
        let diagonal = spec_is_diagonal(&spec);
        let mismatch = |reason: &str| Error::EngineMismatch {
            engine: self.engine.name().into(),
            model: self.model.name().into(),
            reason: reason.into(),
        };
        let engine = match self.engine {
            Engine::Auto if branching => Engine::Branching,
            Engine::Auto if diagonal => Engine::Diagonal,
            Engine::Auto => Engine::Dense,
            Engine::Branching if !branching => {
                return Err(mismatch("needs system-environment z-z couplings only"))
            }
            Engine::Diagonal if !diagonal => return Err(mismatch("needs z-only terms")),
            e => e,
        };
        let qubits = self.n_env + 1;
        match engine {
            Engine::Dense => check_qubit_cap(qubits, DENSE_QUBIT_CAP)?,
            Engine::Diagonal => check_qubit_cap(qubits, DIAGONAL_QUBIT_CAP)?,
            _ => {}
        }
        Ok(Plan {
            spec,
            engine,
            branching,
        })
    }
}

struct Plan {
    spec: ModelSpec,
    engine: Engine,
    branching: bool,
}

/// Only system–environment `z-z` sources are nonzero.
fn spec_has_branching_form(spec: &ModelSpec) -> bool {
    let n = spec.n_env();
    spec.b0.norm() == 0.0
        && (1..=n).all(|site| {
            Axis::ALL.iter().all(|&a| {
                spec.env_field(site, a).is_zero()
                    && Axis::ALL.iter().all(|&b| {
                        (a == Axis::Z && b == Axis::Z) || spec.sys_env(a, site, b).is_zero()
                    })
            })
        })
        && (1..=n).all(|i| {
            (i + 1..=n).all(|j| {
                Axis::ALL.iter().all(|&a| {
                    Axis::ALL
                        .iter()
                        .all(|&b| spec.intra_env(i, j, a, b).is_zero())
                })
            })
        })
}

/// Every nonzero source is a `z-z` coupling or a `z` field.
fn spec_is_diagonal(spec: &ModelSpec) -> bool {
    let n = spec.n_env();
    let zz_only = |a: Axis, b: Axis| a == Axis::Z && b == Axis::Z;
    spec.b0.x == 0.0
        && spec.b0.y == 0.0
        && (1..=n).all(|site| {
            Axis::ALL.iter().all(|&a| {
                (a == Axis::Z || spec.env_field(site, a).is_zero())
                    && Axis::ALL
                        .iter()
                        .all(|&b| zz_only(a, b) || spec.sys_env(a, site, b).is_zero())
            })
        })
        && (1..=n).all(|i| {
            (i + 1..=n).all(|j| {
                Axis::ALL.iter().all(|&a| {
                    Axis::ALL
                        .iter()
                        .all(|&b| zz_only(a, b) || spec.intra_env(i, j, a, b).is_zero())
                })
            })
        })
}

/// Per-realization values on the (time × fragment size) grid, time-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizationRecord {
    pub index: usize,
    pub alpha0_sq: f64,
    pub s_max: f64,
    pub mutual_info: Vec<f64>,
    pub holevo: Option<Vec<f64>>,
    /// `S_S` per time.
    pub system_entropy: Vec<f64>,
}

impl RealizationRecord {
    pub fn at(&self, n_sizes: usize, ti: usize, ni: usize) -> f64 {
        self.mutual_info[ti * n_sizes + ni]
    }
}

enum Evolver {
    Branching,
    Diagonal(DiagonalPropagator),
    Dense(SpectralPropagator),
}

fn draw_fragments(
    policy: &FragmentPolicy,
    sizes: &[usize],
    n_env: usize,
    seed: u64,
) -> Vec<Vec<FragmentSpec>> {
    match policy {
        FragmentPolicy::Prefix => sizes
            .iter()
            .map(|&n| vec![FragmentSpec::prefix(n)])
            .collect(),
        FragmentPolicy::RandomSubsets { count } => {
            let mut rng = SeededRng::new(seed);
            sizes
                .iter()
                .map(|&n| {
                    (0..*count)
                        .map(|_| {
                            // partial Fisher–Yates over sites 1..=n_env
                            let mut pool: Vec<usize> = (1..=n_env).collect();
                            for k in 0..n {
                                let pick = k + rng.index(n_env - k);
                                pool.swap(k, pick);
                            }
                            pool.truncate(n);
                            pool.sort_unstable();
                            FragmentSpec::new(pool, n_env).expect("distinct in-range sites")
                        })
                        .collect()
                })
                .collect()
        }
    }
}

fn mean_of(values: impl Iterator<Item = Result<f64>>, count: usize) -> Result<f64> {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v?);
    }
    Ok(acc.sum() / count as f64)
}

/// Evaluates realization `index` of `config` on the full grid.
pub fn run_realization(config: &ExperimentConfig, index: usize) -> Result<RealizationRecord> {
    config.validate()?;
    realization(config, &config.plan()?, index)
}

fn realization(config: &ExperimentConfig, plan: &Plan, index: usize) -> Result<RealizationRecord> {
    let seed = derive_seed(config.master_seed, index as u64);
    let instance = sample_instance(&plan.spec, derive_seed(seed, STREAM_COUPLINGS))?;
    let init = random_product_state(config.n_env + 1, derive_seed(seed, STREAM_INITIAL_STATE))?;
    let fragments = draw_fragments(
        &config.fragment_policy,
        &config.fragment_sizes,
        config.n_env,
        derive_seed(seed, STREAM_FRAGMENTS),
    );
    let fields = if plan.branching {
        Some(instance.branching_fields()?)
    } else {
        None
    };
    let evolver = match plan.engine {
        Engine::Branching => Evolver::Branching,
        Engine::Diagonal => Evolver::Diagonal(DiagonalPropagator::new(&instance)?),
        _ => Evolver::Dense(SpectralPropagator::new(&instance)?),
    };
    let psi0 = match evolver {
        Evolver::Branching => None,
        _ => Some(PureState::product(&init)),
    };

    let alpha0_sq = init.sites()[0].0.norm_sqr();
    let cells = config.time_grid.len() * fragments.len();
    let mut mutual_info = Vec::with_capacity(cells);
    let mut holevo = fields.as_ref().map(|_| Vec::with_capacity(cells));
    let mut system_entropy = Vec::with_capacity(config.time_grid.len());

    for &t in &config.time_grid {
        let bs: Option<BranchingState> = match &fields {
            Some(f) => Some(evolve_branching(&init, f, t)?),
            None => None,
        };
        let psi = match (&evolver, &psi0) {
            (Evolver::Diagonal(p), Some(psi0)) => Some(p.evolve(psi0, t)?),
            (Evolver::Dense(p), Some(psi0)) => Some(p.evolve(psi0, t)?),
            _ => None,
        };
        match (&psi, &bs) {
            (Some(psi), _) => system_entropy.push(subsystem_entropy(psi, &[0])?),
            (None, Some(bs)) => system_entropy.push(system_entropy_branching(bs)),
            (None, None) => unreachable!("branching engine always has a branching state"),
        }
        for frags in &fragments {
            let i = mean_of(
                frags.iter().map(|f| match (&psi, &bs) {
                    (Some(psi), _) => mutual_information(psi, f),
                    (None, Some(bs)) => mutual_information_branching(bs, f),
                    (None, None) => unreachable!(),
                }),
                frags.len(),
            )?;
            mutual_info.push(i);
            if let (Some(h), Some(bs)) = (holevo.as_mut(), &bs) {
                h.push(mean_of(
                    frags.iter().map(|f| holevo_branching(bs, f)),
                    frags.len(),
                )?);
            }
        }
    }

    Ok(RealizationRecord {
        index,
        alpha0_sq,
        s_max: s_max(alpha0_sq),
        mutual_info,
        holevo,
        system_entropy,
    })
}

/// How realizations are scheduled. Without the `parallel` feature every
/// variant runs serially.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// `threads = 0` uses the global pool.
    Parallel {
        threads: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: 0 }
        } else {
            Execution::Serial
        }
    }
}

fn map_realizations(
    config: &ExperimentConfig,
    plan: &Plan,
    execution: Execution,
) -> Result<Vec<RealizationRecord>> {
    let work = |r: usize| realization(config, plan, r);
    match execution {
        Execution::Serial => (0..config.realizations).map(work).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let run = || (0..config.realizations).into_par_iter().map(work).collect();
            if threads == 0 {
                run()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
                    .install(run)
            }
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => (0..config.realizations).map(work).collect(),
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(R)`; 0 for a single realization.
    pub stderr: f64,
}

impl Stat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mut s = Neumaier::default();
        xs.iter().for_each(|&x| s.add(x));
        let mean = s.sum() / n as f64;
        if n < 2 {
            return Stat { mean, stderr: 0.0 };
        }
        let mut d = Neumaier::default();
        xs.iter().for_each(|&x| d.add((x - mean) * (x - mean)));
        let var = d.sum() / (n - 1) as f64;
        Stat {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub time: f64,
    pub fragment_size: usize,
    pub mutual_info: Stat,
    pub holevo: Option<Stat>,
    pub discord: Option<Stat>,
    pub system_entropy: Stat,
    /// `I` after the configured normalization.
    pub ratio: Stat,
    /// `S_S / S_max`.
    pub system_entropy_ratio: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    /// Engine actually used after resolving `Auto`.
    pub engine: Engine,
    pub realizations: usize,
    /// `|α_0|²` of every realization, by index.
    pub alpha0_sq: Vec<f64>,
    /// Ordered by time, then fragment size.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, time: f64, fragment_size: usize) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.time == time && p.fragment_size == fragment_size)
    }

    pub fn has_holevo(&self) -> bool {
        self.points.iter().all(|p| p.holevo.is_some())
    }
}

fn safe_ratio(x: f64, denom: f64) -> f64 {
    if denom > 0.0 {
        x / denom
    } else {
        0.0
    }
}

fn aggregate(
    config: &ExperimentConfig,
    engine: Engine,
    records: &[RealizationRecord],
) -> SweepResult {
    let n_sizes = config.fragment_sizes.len();
    let column = |f: &dyn Fn(&RealizationRecord) -> f64| {
        Stat::from_samples(&records.iter().map(f).collect::<Vec<_>>())
    };
    let with_holevo = records.iter().all(|r| r.holevo.is_some());
    let mut points = Vec::with_capacity(config.time_grid.len() * n_sizes);
    for (ti, &time) in config.time_grid.iter().enumerate() {
        let s_sys = column(&|r| r.system_entropy[ti]);
        let s_ratio = column(&|r| safe_ratio(r.system_entropy[ti], r.s_max));
        for (ni, &fragment_size) in config.fragment_sizes.iter().enumerate() {
            let k = ti * n_sizes + ni;
            let holevo_at = |r: &RealizationRecord| r.holevo.as_ref().map_or(0.0, |h| h[k]);
            points.push(SweepPoint {
                time,
                fragment_size,
                mutual_info: column(&|r| r.mutual_info[k]),
                holevo: with_holevo.then(|| column(&holevo_at)),
                discord: with_holevo.then(|| column(&|r| r.mutual_info[k] - holevo_at(r))),
                system_entropy: s_sys,
                ratio: match config.normalize {
                    Normalization::BySmax => column(&|r| safe_ratio(r.mutual_info[k], r.s_max)),
                    Normalization::None => column(&|r| r.mutual_info[k]),
                },
                system_entropy_ratio: s_ratio,
            });
        }
    }
    SweepResult {
        config: config.clone(),
        engine,
        realizations: records.len(),
        alpha0_sq: records.iter().map(|r| r.alpha0_sq).collect(),
        points,
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with(config, Execution::default())
}

pub fn run_sweep_with(config: &ExperimentConfig, execution: Execution) -> Result<SweepResult> {
    config.validate()?;
    let plan = config.plan()?;
    let records = map_realizations(config, &plan, execution)?;
    Ok(aggregate(config, plan.engine, &records))
}

/// Per-realization records, in index order.
pub fn run_realizations(
    config: &ExperimentConfig,
    execution: Execution,
) -> Result<Vec<RealizationRecord>> {
    config.validate()?;
    let plan = config.plan()?;
    map_realizations(config, &plan, execution)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub n: usize,
    pub i_inf: f64,
    pub chi_inf: f64,
}

pub const FIG2_N_ENV: usize = 50;

/// Long-time `I` and `χ` against fragment size, `n = 0..=n_env`, with `ε̄ = 2/3`.
pub fn reproduce_fig2(n_env: usize, alpha0_sq: f64) -> Result<Vec<Fig2Row>> {
    (0..=n_env)
        .map(|n| {
            Ok(Fig2Row {
                n,
                i_inf: asymptotic_i(n, n_env, alpha0_sq, EPS_BAR)?,
                chi_inf: asymptotic_chi(n, alpha0_sq, EPS_BAR)?,
            })
        })
        .collect()
}

pub const FIG3_N_ENV: usize = 8;
pub const FIG3_REALIZATIONS: usize = 100;

/// `0, 0.1, ..., 5`, extended by `5.25, 5.5, ..., 50` for CPDI_S.
pub fn fig3_time_grid(kind: ModelKind) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=50).map(|k| k as f64 / 10.0).collect();
    if kind == ModelKind::CpdiS {
        grid.extend((1..=180).map(|k| 5.0 + k as f64 * 0.25));
    }
    grid
}

pub fn fig3_config(kind: ModelKind, overrides: ModelOverrides) -> ExperimentConfig {
    ExperimentConfig {
        model: kind,
        overrides,
        n_env: FIG3_N_ENV,
        time_grid: fig3_time_grid(kind),
        fragment_sizes: (0..=FIG3_N_ENV).collect(),
        realizations: FIG3_REALIZATIONS,
        master_seed: 0,
        fragment_policy: FragmentPolicy::Prefix,
        normalize: Normalization::BySmax,
        engine: Engine::Auto,
    }
}

pub fn reproduce_fig3(kind: ModelKind, overrides: ModelOverrides) -> Result<SweepResult> {
    run_sweep(&fig3_config(kind, overrides))
}

/// Metadata written next to sweep outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: ExperimentConfig,
    pub engine: Engine,
    pub master_seed: u64,
    pub code_version: String,
    pub seed_mixing: String,
}

impl Sidecar {
    pub fn for_result(result: &SweepResult) -> Self {
        Sidecar {
            config: result.config.clone(),
            engine: result.engine,
            master_seed: result.config.master_seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed_mixing: "seed_r = splitmix64(master ^ splitmix64(r)); \
                          streams: 0 couplings, 1 initial state, 2 fragments"
                .to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
