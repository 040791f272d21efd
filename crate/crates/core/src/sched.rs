//! Long-term user rates under round-robin sharing, with optional
//! almost-blank subframes and an AMC decoding floor.
//!
//! A user's rate is `B · (a_n · se(SINR_full) + a_b · se(SINR_blanked))`
//! where `a_n` and `a_b` are its airtime fractions in normal and blanked
//! subframes and `se(x) = log2(1 + x)` (zero below the AMC floor).

use crate::assoc::Association;
use crate::config::db_to_linear;
use crate::error::Result;
use crate::radio::{LinkTable, SinrMode};
use crate::scenario::{BlankingConfig, BlankingVariant, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BsLoad {
    pub total: usize,
    /// Range-expanded users.
    pub re: usize,
}

impl BsLoad {
    pub fn nre(&self) -> usize {
        self.total - self.re
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadState {
    pub per_bs: Vec<BsLoad>,
    /// Served by a small cell although the strongest unbiased link is a macro.
    pub range_expanded: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub user: usize,
    pub rate_bps: f64,
    pub tier_id: u32,
    pub range_expanded: bool,
}

/// Fractions of total time during which a user is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Airtime {
    pub normal: f64,
    pub blanked: f64,
}

/// The parts of a scenario that turn loads and SINR into rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub blanking: BlankingConfig,
    /// Linear SINR floor.
    pub amc_floor: Option<f64>,
}

impl RateModel {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        RateModel {
            blanking: s.blanking,
            amc_floor: s.amc_floor_db.map(db_to_linear),
        }
    }

    pub fn spectral_efficiency(&self, sinr: f64) -> f64 {
        match self.amc_floor {
            Some(floor) if sinr < floor => 0.0,
            _ => (1.0 + sinr).log2(),
        }
    }
}

pub fn compute_loads(association: &Association, table: &LinkTable) -> LoadState {
    let mut per_bs = vec![BsLoad::default(); table.num_bs()];
    let range_expanded: Vec<bool> = association
        .serving
        .iter()
        .enumerate()
        .map(|(u, &b)| {
            let re = !table.bs_info(b).is_macro
                && table
                    .strongest(u)
                    .is_some_and(|s| table.bs_info(s).is_macro);
            per_bs[b].total += 1;
            if re {
                per_bs[b].re += 1;
            }
            re
        })
        .collect();
    LoadState {
        per_bs,
        range_expanded,
    }
}

fn share(fraction: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        fraction / k as f64
    }
}

/// Airtime of `user` given the loads of its serving base station.
pub fn airtime(
    user: usize,
    association: &Association,
    loads: &LoadState,
    table: &LinkTable,
    model: &RateModel,
) -> Airtime {
    let b = association.serving[user];
    let load = loads.per_bs[b];
    if !model.blanking.is_active() {
        return Airtime {
            normal: share(1.0, load.total),
            blanked: 0.0,
        };
    }
    let eta = model.blanking.eta;
    if table.bs_info(b).is_macro {
        return Airtime {
            normal: share(1.0 - eta, load.total),
            blanked: 0.0,
        };
    }
    match model.blanking.variant {
        BlankingVariant::ReOnlyInBlank if loads.range_expanded[user] => Airtime {
            normal: 0.0,
            blanked: share(eta, load.re),
        },
        BlankingVariant::ReOnlyInBlank => Airtime {
            normal: share(1.0 - eta, load.nre()),
            blanked: 0.0,
        },
        _ => Airtime {
            normal: share(1.0 - eta, load.total),
            blanked: share(eta, load.total),
        },
    }
}

pub fn user_rate_with(
    user: usize,
    association: &Association,
    loads: &LoadState,
    table: &LinkTable,
    model: &RateModel,
) -> Result<RateSample> {
    let b = association.serving[user];
    let a = airtime(user, association, loads, table, model);
    let mut se = 0.0;
    if a.normal > 0.0 {
        se += a.normal * model.spectral_efficiency(table.sinr(user, b, SinrMode::Full)?);
    }
    if a.blanked > 0.0 {
        se += a.blanked * model.spectral_efficiency(table.sinr(user, b, SinrMode::MacroBlanked)?);
    }
    Ok(RateSample {
        user,
        rate_bps: table.bandwidth_hz(b) * se,
        tier_id: table.tier_id(table.bs_info(b).tier),
        range_expanded: loads.range_expanded[user],
    })
}

pub fn user_rate(
    user: usize,
    association: &Association,
    loads: &LoadState,
    table: &LinkTable,
    scenario: &ScenarioConfig,
) -> Result<RateSample> {
    user_rate_with(
        user,
        association,
        loads,
        table,
        &RateModel::from_scenario(scenario),
    )
}

/// Rates of every user, in user order.
pub fn all_rates(
    association: &Association,
    loads: &LoadState,
    table: &LinkTable,
    model: &RateModel,
) -> Result<Vec<RateSample>> {
    (0..association.num_users())
        .map(|u| user_rate_with(u, association, loads, table, model))
        .collect()
}
