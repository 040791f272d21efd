//! Monte Carlo ensembles and parameter sweeps.
//!
//! Realization `r` of an ensemble is always drawn from
//! `derive_seed(master_seed, r)`, so results do not depend on the worker
//! count, and every grid point of a sweep sees the same realizations
//! (common random numbers). Samples are pooled per user across
//! realizations in realization order.
//!
//! Sweeps cache one compact [`LinkTable`] per realization and reuse it for
//! every grid point. With `full_buffer_interference = false` the interfering
//! set depends on the association, so tables are rebuilt per grid point.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::assoc::{associate_biased, associate_max_power, associate_max_sinr, Association};
use crate::error::{Error, Result};
use crate::loadopt::{solve_binary, RateMatrix, SolverParams};
use crate::netgen::{derive_seed, generate_realization, NetworkRealization};
use crate::radio::{build_link_table, LinkTable, SinrMode};
use crate::scenario::{BlankingConfig, BlankingVariant, ScenarioConfig};
use crate::sched::{all_rates, compute_loads, RateModel, RateSample};
use crate::stats::RateStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// 5th percentile (cell edge).
    Pct5,
    /// Median.
    Pct50,
    /// Mean log rate over users with a positive rate.
    MeanLog,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Pct5 => "pct5",
            Objective::Pct50 => "pct50",
            Objective::MeanLog => "mean-log",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "pct5" => Some(Objective::Pct5),
            "pct50" => Some(Objective::Pct50),
            "mean-log" => Some(Objective::MeanLog),
            _ => None,
        }
    }

    /// An all-zero sample set scores `-inf` under `MeanLog`.
    pub fn evaluate(self, stats: &RateStats) -> Result<f64> {
        match self {
            Objective::Pct5 => stats.percentile(5.0),
            Objective::Pct50 => stats.percentile(50.0),
            Objective::MeanLog => {
                if stats.is_empty() {
                    return Err(Error::EmptySamples);
                }
                match stats.mean_log_excluding_zeros() {
                    Ok((v, _)) => Ok(v),
                    Err(Error::EmptySamples) => Ok(f64::NEG_INFINITY),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    MaxPower,
    MaxSinr,
    /// Cell range expansion with the scenario's tier biases.
    Biased,
    /// Per-realization log-utility optimization.
    LoadAware,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::MaxPower => "max-power",
            Policy::MaxSinr => "max-sinr",
            Policy::Biased => "biased",
            Policy::LoadAware => "load-aware",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "max-power" => Some(Policy::MaxPower),
            "max-sinr" => Some(Policy::MaxSinr),
            "biased" => Some(Policy::Biased),
            "load-aware" => Some(Policy::LoadAware),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    /// Pooled per-user samples in realization order.
    pub samples: Vec<RateSample>,
    pub stats: RateStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub bias_db: f64,
    pub eta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Bias-major, then η.
    pub points: Vec<SweepPoint>,
    /// Index of the first maximum in `points`.
    pub argmax: usize,
    pub samples_per_point: usize,
    /// For every η, the best bias (first maximum).
    pub per_eta_best: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn best(&self) -> SweepPoint {
        self.points[self.argmax]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendMode {
    InBand,
    InBandBlank,
    OutOfBand,
}

impl TrendMode {
    pub fn name(self) -> &'static str {
        match self {
            TrendMode::InBand => "in-band",
            TrendMode::InBandBlank => "in-band-blank",
            TrendMode::OutOfBand => "out-of-band",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "in-band" => Some(TrendMode::InBand),
            "in-band-blank" => Some(TrendMode::InBandBlank),
            "out-of-band" => Some(TrendMode::OutOfBand),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub ratio: f64,
    pub best: SweepPoint,
    pub sweep: SweepResult,
}

/// Bias grid `0..=30 dB` in 1 dB steps.
pub fn default_bias_grid() -> Vec<f64> {
    (0..=30).map(f64::from).collect()
}

/// η grid `0, 0.1, …, 0.9`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=9).map(|i| i as f64 / 10.0).collect()
}

/// Candidate base stations per tier offered to the load-aware solver.
pub const DEFAULT_CANDIDATES_PER_TIER: usize = 5;

#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub realizations: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    pub solver: SolverParams,
    pub candidates_per_tier: Option<usize>,
    /// Replaces random draws with this fixed deployment.
    pub layout: Option<NetworkRealization>,
}

impl MonteCarlo {
    pub fn new(realizations: usize, master_seed: u64) -> Self {
        MonteCarlo {
            realizations,
            master_seed,
            workers: 0,
            solver: SolverParams::default(),
            candidates_per_tier: Some(DEFAULT_CANDIDATES_PER_TIER),
            layout: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_layout(mut self, layout: NetworkRealization) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn realization(
        &self,
        scenario: &ScenarioConfig,
        index: usize,
    ) -> Result<NetworkRealization> {
        match &self.layout {
            Some(l) => Ok(l.clone()),
            None => generate_realization(scenario, derive_seed(self.master_seed, index as u64)),
        }
    }

    fn par_map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        if self.realizations == 0 {
            return Err(Error::OutOfRange("mc.realizations".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        pool.install(|| (0..self.realizations).into_par_iter().map(&f).collect())
    }

    fn table(&self, scenario: &ScenarioConfig, index: usize) -> Result<LinkTable> {
        build_link_table(&self.realization(scenario, index)?, scenario)
    }

    fn associate(
        &self,
        table: &LinkTable,
        scenario: &ScenarioConfig,
        policy: Policy,
    ) -> Result<Association> {
        Ok(match policy {
            Policy::MaxPower => associate_max_power(table),
            Policy::MaxSinr => associate_max_sinr(table),
            Policy::Biased => {
                let biases: Vec<f64> = scenario.tiers.iter().map(|t| t.bias).collect();
                associate_biased(table, &biases)
            }
            Policy::LoadAware => {
                if table.num_users() == 0 {
                    return Ok(associate_max_power(table));
                }
                let rates = RateMatrix::from_link_table(table, self.candidates_per_tier)?;
                solve_binary(&rates, &self.solver)?.0
            }
        })
    }

    /// Pooled per-user rates of one policy.
    pub fn run_ensemble(&self, scenario: &ScenarioConfig, policy: Policy) -> Result<Ensemble> {
        let model = RateModel::from_scenario(scenario);
        let per: Vec<Vec<RateSample>> = self.par_map(|r| {
            let table = self.table(scenario, r)?;
            let a = self.associate(&table, scenario, policy)?;
            rates_for(&table, &a, scenario, &model)
        })?;
        let samples: Vec<RateSample> = per.into_iter().flatten().collect();
        let stats = RateStats::new(samples.iter().map(|s| s.rate_bps).collect());
        Ok(Ensemble { samples, stats })
    }

    /// Full-load SINR of every user on its serving link.
    pub fn sinr_samples(&self, scenario: &ScenarioConfig, policy: Policy) -> Result<Vec<f64>> {
        let per: Vec<Vec<f64>> = self.par_map(|r| {
            let table = self.table(scenario, r)?;
            let a = self.associate(&table, scenario, policy)?;
            a.serving
                .iter()
                .enumerate()
                .map(|(u, &b)| table.sinr(u, b, SinrMode::Full))
                .collect()
        })?;
        Ok(per.into_iter().flatten().collect())
    }

    /// Objective versus small-cell bias, blanking as configured in the scenario.
    pub fn sweep_bias(
        &self,
        scenario: &ScenarioConfig,
        bias_grid_db: &[f64],
        objective: Objective,
    ) -> Result<SweepResult> {
        let eta = scenario.blanking.effective_eta();
        self.sweep(
            scenario,
            bias_grid_db,
            &[eta],
            scenario.blanking.variant,
            objective,
        )
    }

    /// Objective over the (bias, η) grid for one blanking variant.
    pub fn sweep_blanking(
        &self,
        scenario: &ScenarioConfig,
        bias_grid_db: &[f64],
        eta_grid: &[f64],
        variant: BlankingVariant,
        objective: Objective,
    ) -> Result<SweepResult> {
        if variant == BlankingVariant::Off {
            return Err(Error::InvalidValue {
                key: "blanking.variant".into(),
                msg: "a blanking sweep needs re-only-in-blank or all-subframes".into(),
            });
        }
        if eta_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::OutOfRange("eta_grid".into()));
        }
        self.sweep(scenario, bias_grid_db, eta_grid, variant, objective)
    }

    fn sweep(
        &self,
        scenario: &ScenarioConfig,
        bias_grid_db: &[f64],
        eta_grid: &[f64],
        variant: BlankingVariant,
        objective: Objective,
    ) -> Result<SweepResult> {
        if bias_grid_db.is_empty() {
            return Err(Error::OutOfRange("bias_grid".into()));
        }
        if eta_grid.is_empty() {
            return Err(Error::OutOfRange("eta_grid".into()));
        }
        let cached: Option<Vec<LinkTable>> = if scenario.full_buffer_interference {
            Some(self.par_map(|r| Ok(self.table(scenario, r)?.into_compact()))?)
        } else {
            None
        };
        let models: Vec<RateModel> = eta_grid
            .iter()
            .map(|&eta| {
                let mut m = RateModel::from_scenario(scenario);
                m.blanking = BlankingConfig { eta, variant };
                m
            })
            .collect();

        let mut points = Vec::with_capacity(bias_grid_db.len() * eta_grid.len());
        let mut samples_per_point = 0;
        for &bias_db in bias_grid_db {
            let biased = scenario.with_small_cell_bias_db(bias_db);
            let biases: Vec<f64> = biased.tiers.iter().map(|t| t.bias).collect();
            // per realization: one rate vector per η
            let per: Vec<Vec<Vec<f64>>> = self.par_map(|r| {
                let table: Cow<LinkTable> = match &cached {
                    Some(c) => Cow::Borrowed(&c[r]),
                    None => Cow::Owned(self.table(scenario, r)?),
                };
                let a = associate_biased(&table, &biases);
                models
                    .iter()
                    .map(|m| {
                        Ok(rates_for(&table, &a, &biased, m)?
                            .into_iter()
                            .map(|s| s.rate_bps)
                            .collect())
                    })
                    .collect()
            })?;
            for (k, &eta) in eta_grid.iter().enumerate() {
                let pooled: Vec<f64> = per.iter().flat_map(|v| v[k].iter().copied()).collect();
                samples_per_point = pooled.len();
                let value = objective.evaluate(&RateStats::new(pooled))?;
                points.push(SweepPoint {
                    bias_db,
                    eta,
                    value,
                });
            }
        }

        let argmax = first_max(points.iter().map(|p| p.value)).expect("non-empty grid");
        let per_eta_best = (0..eta_grid.len())
            .map(|k| {
                let column: Vec<SweepPoint> = points
                    .iter()
                    .skip(k)
                    .step_by(eta_grid.len())
                    .copied()
                    .collect();
                column[first_max(column.iter().map(|p| p.value)).unwrap()]
            })
            .collect();
        Ok(SweepResult {
            points,
            argmax,
            samples_per_point,
            per_eta_best,
        })
    }

    /// Optimal bias (and η in blanked mode) as the small-cell to macro
    /// density ratio varies.
    pub fn density_trend(
        &self,
        scenario: &ScenarioConfig,
        ratios: &[f64],
        mode: TrendMode,
        objective: Objective,
        bias_grid_db: &[f64],
        eta_grid: &[f64],
    ) -> Result<Vec<TrendPoint>> {
        if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::OutOfRange("ratios".into()));
        }
        let co_channel = scenario.is_co_channel();
        if co_channel == (mode == TrendMode::OutOfBand) {
            return Err(Error::InvalidValue {
                key: "mode".into(),
                msg: format!(
                    "mode {} does not match the scenario's band plan",
                    mode.name()
                ),
            });
        }
        ratios
            .iter()
            .map(|&ratio| {
                let s = scenario.with_density_ratio(ratio);
                let sweep = match mode {
                    TrendMode::InBand | TrendMode::OutOfBand => self.sweep_bias(
                        &s.with_blanking(BlankingConfig::OFF),
                        bias_grid_db,
                        objective,
                    )?,
                    TrendMode::InBandBlank => {
                        let variant = match s.blanking.variant {
                            BlankingVariant::Off => BlankingVariant::ReOnlyInBlank,
                            v => v,
                        };
                        self.sweep_blanking(&s, bias_grid_db, eta_grid, variant, objective)?
                    }
                };
                Ok(TrendPoint {
                    ratio,
                    best: sweep.best(),
                    sweep,
                })
            })
            .collect()
    }
}

/// Rates for one association, with the interfering set restricted to
/// loaded base stations when the scenario is not full-buffer.
fn rates_for(
    table: &LinkTable,
    a: &Association,
    scenario: &ScenarioConfig,
    model: &RateModel,
) -> Result<Vec<RateSample>> {
    let loads = compute_loads(a, table);
    if scenario.full_buffer_interference {
        return all_rates(a, &loads, table, model);
    }
    let active: Vec<bool> = loads.per_bs.iter().map(|l| l.total > 0).collect();
    all_rates(a, &loads, &table.with_active_interferers(&active), model)
}

fn first_max(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
