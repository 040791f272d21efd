//! User association policies.
//!
//! Every policy breaks ties toward the lowest base station index, except the
//! biased rule, which first picks a tier (lowest tier index on ties) and then
//! the strongest base station within it.

use crate::error::{Error, Result};
use crate::loadopt::RateMatrix;
use crate::radio::{LinkTable, SinrMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyTag {
    MaxPower,
    MaxSinr,
    Biased,
    LoadAware,
    Oracle,
}

/// Binary user → serving BS map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    pub serving: Vec<usize>,
    pub policy: PolicyTag,
}

impl Association {
    pub fn num_users(&self) -> usize {
        self.serving.len()
    }

    /// Users per base station.
    pub fn counts(&self, num_bs: usize) -> Vec<usize> {
        let mut k = vec![0; num_bs];
        for &b in &self.serving {
            k[b] += 1;
        }
        k
    }
}

/// Serves each user from its strongest received power, across all bands.
///
/// # Panics
/// If the table has users but no base station.
pub fn associate_max_power(table: &LinkTable) -> Association {
    let serving = (0..table.num_users())
        .map(|u| table.strongest(u).expect("at least one base station"))
        .collect();
    Association {
        serving,
        policy: PolicyTag::MaxPower,
    }
}

/// Cell range expansion: tier `argmax_i bias_i · P_i` where `P_i` is the
/// strongest received power from tier `i`, then the strongest BS of that tier.
/// `biases` is indexed like the scenario's tier list.
pub fn associate_biased(table: &LinkTable, biases: &[f64]) -> Association {
    assert_eq!(biases.len(), table.num_tiers());
    let serving = (0..table.num_users())
        .map(|u| {
            let mut chosen: Option<(usize, f64)> = None;
            for (tier, &bias) in biases.iter().enumerate() {
                if let Some(link) = table.tier_best(u, tier) {
                    let score = bias * link.power_mw;
                    if chosen.is_none_or(|(_, s)| score > s) {
                        chosen = Some((link.bs, score));
                    }
                }
            }
            chosen.expect("at least one base station").0
        })
        .collect();
    Association {
        serving,
        policy: PolicyTag::Biased,
    }
}

/// Serves each user from the base station with the highest full-load SINR.
pub fn associate_max_sinr(table: &LinkTable) -> Association {
    let candidates: Box<dyn Fn(usize) -> Vec<usize>> = if table.has_dense_powers() {
        Box::new(|_| (0..table.num_bs()).collect())
    } else {
        // within a tier every BS shares one band, so the strongest has the best SINR
        Box::new(|u| {
            let mut c: Vec<usize> = (0..table.num_tiers())
                .filter_map(|t| table.tier_best(u, t).map(|l| l.bs))
                .collect();
            c.sort_unstable();
            c
        })
    };
    let serving = (0..table.num_users())
        .map(|u| {
            let mut best: Option<(usize, f64)> = None;
            for b in candidates(u) {
                let s = table
                    .sinr(u, b, SinrMode::Full)
                    .expect("candidate link is stored");
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((b, s));
                }
            }
            best.expect("at least one base station").0
        })
        .collect();
    Association {
        serving,
        policy: PolicyTag::MaxSinr,
    }
}

/// Default cap on `num_bs ^ num_users` for the exhaustive search.
pub const DEFAULT_MAX_SEARCH: u64 = 10_000_000;

/// Exhaustive maximization of `Σ_u ln(c_{u,b(u)} / K_{b(u)})` over all
/// binary assignments. Returns the first maximizer in lexicographic order
/// (user 0 most significant) and the objective in nats.
pub fn brute_force_log_utility(rates: &RateMatrix, max_size: u64) -> Result<(Association, f64)> {
    let (nu, nb) = (rates.num_users(), rates.num_bs());
    let size = (nb as f64).powi(nu as i32);
    if size > max_size as f64 {
        return Err(Error::TooLarge {
            size,
            limit: max_size,
        });
    }
    if let Some(u) = (0..nu).find(|&u| rates.row(u).is_empty()) {
        return Err(Error::NoFeasibleUser(u));
    }
    let log_rate: Vec<Vec<f64>> = (0..nu)
        .map(|u| {
            (0..nb)
                .map(|b| {
                    let c = rates.rate(u, b);
                    if c > 0.0 {
                        c.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let k_ln_k: Vec<f64> = (0..=nu)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                k as f64 * (k as f64).ln()
            }
        })
        .collect();

    let mut assign = vec![0usize; nu];
    let mut counts = vec![0usize; nb];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        counts.iter_mut().for_each(|k| *k = 0);
        let mut value = 0.0;
        for (u, &b) in assign.iter().enumerate() {
            value += log_rate[u][b];
            counts[b] += 1;
        }
        if value > f64::NEG_INFINITY {
            value -= counts.iter().map(|&k| k_ln_k[k]).sum::<f64>();
            if best.as_ref().is_none_or(|(_, v)| value > *v) {
                best = Some((assign.clone(), value));
            }
        }
        // odometer, last user least significant
        let mut pos = nu;
        loop {
            if pos == 0 {
                let (serving, value) = best.expect("every user has a positive rate");
                return Ok((
                    Association {
                        serving,
                        policy: PolicyTag::Oracle,
                    },
                    value,
                ));
            }
            pos -= 1;
            assign[pos] += 1;
            if assign[pos] < nb {
                break;
            }
            assign[pos] = 0;
        }
    }
}
