//! Received powers, per-band interference aggregates and SINR.

use crate::error::{Error, Result};
use crate::netgen::{torus_distance_sq, NetworkRealization};
use crate::scenario::ScenarioConfig;

/// Which base stations are transmitting when a link is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinrMode {
    /// Every base station on the band transmits.
    Full,
    /// Macro tiers are muted (almost-blank subframe).
    MacroBlanked,
}

/// Power-law pathloss with a near-field clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossModel {
    pub exponent: f64,
    pub min_distance_m: f64,
}

impl PathlossModel {
    pub fn from_scenario(s: &ScenarioConfig) -> Self {
        PathlossModel {
            exponent: s.pathloss_exponent,
            min_distance_m: s.min_distance_m,
        }
    }

    /// `tx · max(d, d_min)^-α` with `d` in metres.
    pub fn received_power(&self, tx_power_mw: f64, distance_km: f64) -> f64 {
        let d = (distance_km * 1e3).max(self.min_distance_m);
        tx_power_mw * d.powf(-self.exponent)
    }

    #[inline]
    fn received_power_sq(&self, tx_power_mw: f64, distance_km_sq: f64) -> f64 {
        let d2 = (distance_km_sq * 1e6).max(self.min_distance_m * self.min_distance_m);
        tx_power_mw * (-0.5 * self.exponent * d2.ln()).exp()
    }
}

pub fn received_power(tx_power_mw: f64, distance_km: f64, model: &PathlossModel) -> f64 {
    model.received_power(tx_power_mw, distance_km)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsInfo {
    /// Index into the scenario's tier list.
    pub tier: usize,
    /// Index into the scenario's band list.
    pub band: usize,
    pub is_macro: bool,
}

/// Strongest base station of one tier as seen by one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierLink {
    pub bs: usize,
    pub power_mw: f64,
}

/// Per user×BS received powers plus the aggregates every association and
/// rate computation needs.
///
/// A table produced by [`LinkTable::compact`] drops the dense power matrix
/// and keeps only the strongest link of each tier, which is all that the
/// max-power, max-SINR and biased policies ever serve on.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    num_users: usize,
    num_tiers: usize,
    num_bands: usize,
    bs: Vec<BsInfo>,
    tier_ids: Vec<u32>,
    bandwidth_hz: Vec<f64>,
    noise_mw: Vec<f64>,
    /// Row-major `users × bs`.
    powers: Option<Vec<f64>>,
    /// `users × bands`, sum over all interfering BSs on the band.
    total: Vec<f64>,
    /// `users × bands`, macro-tier part of `total`.
    macro_part: Vec<f64>,
    /// `users × tiers`.
    tier_best: Vec<Option<TierLink>>,
    strongest: Vec<Option<usize>>,
    /// Interfering set when not every BS transmits.
    active: Option<Vec<bool>>,
}

pub fn build_link_table(
    realization: &NetworkRealization,
    scenario: &ScenarioConfig,
) -> Result<LinkTable> {
    build_link_table_with_gain(realization, scenario, |_, _| 1.0)
}

/// Like [`build_link_table`] with a multiplicative power gain per
/// (user, BS) link, e.g. i.i.d. fading for sensitivity studies.
pub fn build_link_table_with_gain<G>(
    realization: &NetworkRealization,
    scenario: &ScenarioConfig,
    mut gain: G,
) -> Result<LinkTable>
where
    G: FnMut(usize, usize) -> f64,
{
    realization.check_against(scenario)?;
    let model = PathlossModel::from_scenario(scenario);
    let bs: Vec<BsInfo> = realization
        .base_stations
        .iter()
        .map(|b| {
            let tier = scenario.tier_index(b.tier_id).unwrap();
            let t = &scenario.tiers[tier];
            BsInfo {
                tier,
                band: scenario.band_index(t.band_id).unwrap(),
                is_macro: t.is_macro,
            }
        })
        .collect();
    let tx: Vec<f64> = bs
        .iter()
        .map(|b| scenario.tiers[b.tier].tx_power_mw)
        .collect();
    let side = realization.region_side_km;
    let n_bs = bs.len();
    let n_users = realization.users.len();
    let mut powers = Vec::with_capacity(n_users * n_bs);
    for (u, user) in realization.users.iter().enumerate() {
        for (b, station) in realization.base_stations.iter().enumerate() {
            let d2 = torus_distance_sq(*user, station.pos, side);
            powers.push(model.received_power_sq(tx[b], d2) * gain(u, b));
        }
    }
    let mut table = LinkTable {
        num_users: n_users,
        num_tiers: scenario.tiers.len(),
        num_bands: scenario.bands.len(),
        bs,
        tier_ids: scenario.tiers.iter().map(|t| t.tier_id).collect(),
        bandwidth_hz: scenario.bands.iter().map(|b| b.bandwidth_hz).collect(),
        noise_mw: scenario.bands.iter().map(|b| b.noise_mw).collect(),
        powers: Some(powers),
        total: Vec::new(),
        macro_part: Vec::new(),
        tier_best: Vec::new(),
        strongest: Vec::new(),
        active: None,
    };
    table.summarize(None);
    Ok(table)
}

impl LinkTable {
    /// Recomputes aggregates and per-tier maxima from the dense matrix.
    /// Base stations with `active[b] == false` still serve but do not
    /// interfere.
    fn summarize(&mut self, active: Option<&[bool]>) {
        let powers = self.powers.as_ref().expect("dense powers");
        let (nu, nb, nt, nbands) = (
            self.num_users,
            self.bs.len(),
            self.num_tiers,
            self.num_bands,
        );
        self.total = vec![0.0; nu * nbands];
        self.macro_part = vec![0.0; nu * nbands];
        self.tier_best = vec![None; nu * nt];
        self.strongest = vec![None; nu];
        for u in 0..nu {
            let row = &powers[u * nb..(u + 1) * nb];
            let total = &mut self.total[u * nbands..(u + 1) * nbands];
            let macro_part = &mut self.macro_part[u * nbands..(u + 1) * nbands];
            let best = &mut self.tier_best[u * nt..(u + 1) * nt];
            let mut strongest: Option<(usize, f64)> = None;
            for (b, (&p, info)) in row.iter().zip(&self.bs).enumerate() {
                if active.is_none_or(|a| a[b]) {
                    total[info.band] += p;
                    if info.is_macro {
                        macro_part[info.band] += p;
                    }
                }
                let slot = &mut best[info.tier];
                if slot.is_none_or(|l| p > l.power_mw) {
                    *slot = Some(TierLink { bs: b, power_mw: p });
                }
                if strongest.is_none_or(|(_, sp)| p > sp) {
                    strongest = Some((b, p));
                }
            }
            self.strongest[u] = strongest.map(|(b, _)| b);
        }
    }

    /// Copy in which only base stations flagged in `active` interfere.
    /// Requires the dense matrix.
    pub fn with_active_interferers(&self, active: &[bool]) -> LinkTable {
        assert_eq!(active.len(), self.bs.len());
        let mut t = self.clone();
        t.summarize(Some(active));
        t.active = Some(active.to_vec());
        t
    }

    /// Drops the dense power matrix, keeping aggregates and per-tier maxima.
    pub fn into_compact(mut self) -> LinkTable {
        self.powers = None;
        self
    }

    pub fn has_dense_powers(&self) -> bool {
        self.powers.is_some()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_bs(&self) -> usize {
        self.bs.len()
    }

    pub fn num_tiers(&self) -> usize {
        self.num_tiers
    }

    pub fn bs_info(&self, bs: usize) -> BsInfo {
        self.bs[bs]
    }

    pub fn tier_id(&self, tier: usize) -> u32 {
        self.tier_ids[tier]
    }

    pub fn bandwidth_hz(&self, bs: usize) -> f64 {
        self.bandwidth_hz[self.bs[bs].band]
    }

    pub fn noise_mw(&self, bs: usize) -> f64 {
        self.noise_mw[self.bs[bs].band]
    }

    pub fn tier_best(&self, user: usize, tier: usize) -> Option<TierLink> {
        self.tier_best[user * self.num_tiers + tier]
    }

    /// Unbiased strongest base station, lowest index on ties.
    pub fn strongest(&self, user: usize) -> Option<usize> {
        self.strongest[user]
    }

    pub fn band_total(&self, user: usize, band: usize) -> f64 {
        self.total[user * self.num_bands + band]
    }

    pub fn band_macro(&self, user: usize, band: usize) -> f64 {
        self.macro_part[user * self.num_bands + band]
    }

    pub fn received_power(&self, user: usize, bs: usize) -> Result<f64> {
        if let Some(p) = &self.powers {
            return Ok(p[user * self.bs.len() + bs]);
        }
        match self.tier_best(user, self.bs[bs].tier) {
            Some(l) if l.bs == bs => Ok(l.power_mw),
            _ => Err(Error::MissingLink { user, bs }),
        }
    }

    /// Dense row of received powers; `None` for compact tables.
    pub fn row(&self, user: usize) -> Option<&[f64]> {
        let n = self.bs.len();
        self.powers.as_ref().map(|p| &p[user * n..(user + 1) * n])
    }

    pub fn sinr(&self, user: usize, bs: usize, mode: SinrMode) -> Result<f64> {
        let info = self.bs[bs];
        let signal = self.received_power(user, bs)?;
        let mut interference = self.band_total(user, info.band);
        if mode == SinrMode::MacroBlanked {
            if info.is_macro {
                return Err(Error::InvalidMode(bs));
            }
            interference -= self.band_macro(user, info.band);
        }
        if self.interferes(bs) {
            interference -= signal;
        }
        let denom = interference.max(0.0) + self.noise_mw[info.band];
        Ok(signal / denom)
    }

    /// Whether `bs` contributes to the interference aggregates.
    pub fn interferes(&self, bs: usize) -> bool {
        self.active.as_ref().is_none_or(|a| a[bs])
    }
}
