//! Load-aware association by dual decomposition.
//!
//! The relaxed problem is
//!
//! ```text
//! maximize   Σ_{u,b} x_ub ln c_ub − Σ_b K_b ln K_b,   K_b = Σ_u x_ub
//! subject to x_ub ≥ 0,  Σ_b x_ub = 1
//! ```
//!
//! whose value at a binary `x` is `Σ_u ln(c_{u,b(u)} / K_{b(u)})`, the log
//! utility of round-robin rates. Pricing the load constraint with `μ_b` gives
//! the dual
//!
//! ```text
//! D(μ) = Σ_u max_b (ln c_ub − μ_b) + Σ_b e^(μ_b − 1)
//! ```
//!
//! which splits into an argmax per user and a closed-form load response
//! `K̂_b = e^(μ_b − 1)` per base station. Every evaluated `D(μ)` is an upper
//! bound on every binary association, and every user step is a feasible
//! binary association, so the solver always carries a certified gap.

use std::collections::VecDeque;

use crate::assoc::{Association, PolicyTag};
use crate::error::{Error, Result};
use crate::radio::{LinkTable, SinrMode};

/// Full-resource link rates `c_ub = B · log2(1 + SINR)` in bit/s.
/// Only positive entries are stored; absent pairs are unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    num_bs: usize,
    /// Positive `(bs, rate)` entries, sorted by bs.
    rows: Vec<Vec<(usize, f64)>>,
}

impl RateMatrix {
    /// From a dense `users × bs` matrix. Fails on negative or non-finite
    /// entries and ragged rows.
    pub fn from_dense<R: AsRef<[f64]>>(dense: &[R]) -> Result<Self> {
        let num_bs = dense.first().map_or(0, |r| r.as_ref().len());
        let mut rows = Vec::with_capacity(dense.len());
        for (u, row) in dense.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != num_bs {
                return Err(Error::InvalidValue {
                    key: format!("rates[{u}]"),
                    msg: format!("expected {num_bs} entries, got {}", row.len()),
                });
            }
            let mut sparse = Vec::new();
            for (b, &c) in row.iter().enumerate() {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::OutOfRange(format!("rates[{u}][{b}]")));
                }
                if c > 0.0 {
                    sparse.push((b, c));
                }
            }
            rows.push(sparse);
        }
        Ok(RateMatrix { num_bs, rows })
    }

    /// Rates from full-load SINR. With `candidates_per_tier = Some(m)` only
    /// the `m` strongest base stations of each tier are kept per user; the
    /// rest are treated as unreachable.
    pub fn from_link_table(table: &LinkTable, candidates_per_tier: Option<usize>) -> Result<Self> {
        let nb = table.num_bs();
        let mut rows = Vec::with_capacity(table.num_users());
        let mut by_tier: Vec<Vec<(usize, f64)>> = vec![Vec::new(); table.num_tiers()];
        for u in 0..table.num_users() {
            let powers = table.row(u).ok_or(Error::MissingLink { user: u, bs: 0 })?;
            let mut keep: Vec<usize> = match candidates_per_tier {
                None => (0..nb).collect(),
                Some(m) => {
                    by_tier.iter_mut().for_each(Vec::clear);
                    for (b, &p) in powers.iter().enumerate() {
                        by_tier[table.bs_info(b).tier].push((b, p));
                    }
                    let mut keep = Vec::new();
                    for list in &mut by_tier {
                        if list.len() > m {
                            list.select_nth_unstable_by(m - 1, |a, b| {
                                b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
                            });
                            list.truncate(m);
                        }
                        keep.extend(list.iter().map(|&(b, _)| b));
                    }
                    keep.sort_unstable();
                    keep
                }
            };
            let row = keep
                .drain(..)
                .map(|b| {
                    let sinr = table.sinr(u, b, SinrMode::Full)?;
                    Ok((b, table.bandwidth_hz(b) * (1.0 + sinr).log2()))
                })
                .filter(|r| !matches!(r, Ok((_, c)) if *c <= 0.0))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(RateMatrix { num_bs: nb, rows })
    }

    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn rate(&self, user: usize, bs: usize) -> f64 {
        self.rows[user]
            .binary_search_by_key(&bs, |&(b, _)| b)
            .map_or(0.0, |i| self.rows[user][i].1)
    }

    /// Positive entries of one user, sorted by bs.
    pub fn row(&self, user: usize) -> &[(usize, f64)] {
        &self.rows[user]
    }
}

/// Per-user association fractions over the user's reachable base stations.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssociation {
    num_bs: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl FractionalAssociation {
    /// From a dense matrix; entries must lie in `[0, 1]` and rows sum to 1.
    pub fn from_dense<R: AsRef<[f64]>>(dense: &[R]) -> Result<Self> {
        let num_bs = dense.first().map_or(0, |r| r.as_ref().len());
        let mut rows = Vec::new();
        for (u, row) in dense.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != num_bs || row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::OutOfRange(format!("x[{u}]")));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidValue {
                    key: format!("x[{u}]"),
                    msg: "row does not sum to 1".into(),
                });
            }
            rows.push(
                row.iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, x)| x > 0.0)
                    .collect(),
            );
        }
        Ok(FractionalAssociation { num_bs, rows })
    }

    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn get(&self, user: usize, bs: usize) -> f64 {
        self.rows[user]
            .iter()
            .find(|&&(b, _)| b == bs)
            .map_or(0.0, |&(_, x)| x)
    }

    /// Non-zero `(bs, fraction)` entries of one user, sorted by bs.
    pub fn row(&self, user: usize) -> &[(usize, f64)] {
        &self.rows[user]
    }

    /// Fractional loads `K_b`.
    pub fn loads(&self) -> Vec<f64> {
        let mut k = vec![0.0; self.num_bs];
        for row in &self.rows {
            for &(b, x) in row {
                k[b] += x;
            }
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Initial step of the diminishing rule `step0 / √t`.
    pub step0: f64,
    pub max_iters: usize,
    /// Stop when `(dual − primal) / max(|primal|, 1)` drops below this.
    pub gap_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            step0: 1.0,
            max_iters: 5000,
            gap_tol: 1e-4,
        }
    }
}

impl SolverParams {
    pub fn check(&self) -> Result<()> {
        if !(self.step0.is_finite() && self.step0 > 0.0) {
            return Err(Error::OutOfRange("solver.step0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::OutOfRange("solver.max_iters".into()));
        }
        if !(self.gap_tol.is_finite() && self.gap_tol > 0.0) {
            return Err(Error::OutOfRange("solver.gap_tol".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    /// Per-BS load prices.
    pub mu: Vec<f64>,
    /// Iterations performed.
    pub iteration: usize,
    /// Smallest dual value seen: an upper bound on the relaxed optimum.
    pub best_dual: f64,
    /// Best binary log utility seen.
    pub best_primal: f64,
    /// The binary association achieving `best_primal`.
    pub best_assignment: Vec<usize>,
}

impl DualState {
    pub fn gap(&self) -> f64 {
        relative_gap(self.best_dual, self.best_primal)
    }
}

fn relative_gap(dual: f64, primal: f64) -> f64 {
    (dual - primal) / primal.abs().max(1.0)
}

/// Optimal load of a base station priced at `mu`.
pub fn load_response(mu: f64) -> f64 {
    (mu - 1.0).exp()
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub dual: f64,
    pub primal: f64,
    pub gap: f64,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iteration,dual,primal,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.dual, r.primal, r.gap
        ));
    }
    out
}

pub fn solve_relaxed(
    rates: &RateMatrix,
    params: &SolverParams,
) -> Result<(FractionalAssociation, DualState)> {
    solve(rates, params, None)
}

/// Best binary association found while solving: the rounded ergodic
/// average or an intermediate user step, whichever has higher log utility.
pub fn solve_binary(rates: &RateMatrix, params: &SolverParams) -> Result<(Association, DualState)> {
    let (_, state) = solve(rates, params, None)?;
    let association = Association {
        serving: state.best_assignment.clone(),
        policy: PolicyTag::LoadAware,
    };
    Ok((association, state))
}

/// [`solve_relaxed`] that also records the best dual/primal per iteration.
pub fn solve_relaxed_traced(
    rates: &RateMatrix,
    params: &SolverParams,
) -> Result<(FractionalAssociation, DualState, Vec<TraceRow>)> {
    let mut trace = Vec::new();
    let (x, state) = solve(rates, params, Some(&mut trace))?;
    Ok((x, state, trace))
}

fn solve(
    rates: &RateMatrix,
    params: &SolverParams,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<(FractionalAssociation, DualState)> {
    params.check()?;
    let (nu, nb) = (rates.num_users(), rates.num_bs());
    if let Some(u) = (0..nu).find(|&u| rates.row(u).is_empty()) {
        return Err(Error::NoFeasibleUser(u));
    }
    let log_rates: Vec<Vec<(usize, f64)>> = rates
        .rows
        .iter()
        .map(|row| row.iter().map(|&(b, c)| (b, c.ln())).collect())
        .collect();

    // start from the price of a perfectly balanced load
    let balanced = (nu as f64 / nb.max(1) as f64).max(1e-12);
    let mut mu = vec![1.0 + balanced.ln(); nb];
    let mut choice = vec![0usize; nu];
    let mut load = vec![0usize; nb];
    let mut state = DualState {
        mu: Vec::new(),
        iteration: 0,
        best_dual: f64::INFINITY,
        best_primal: f64::NEG_INFINITY,
        best_assignment: Vec::new(),
    };
    let mut history: VecDeque<Vec<usize>> = VecDeque::new();

    for t in 1..=params.max_iters {
        state.iteration = t;
        load.iter_mut().for_each(|k| *k = 0);
        let mut user_part = 0.0;
        let mut sum_log_rate = 0.0;
        for (u, row) in log_rates.iter().enumerate() {
            let mut best = (row[0].0, row[0].1 - mu[row[0].0], row[0].1);
            for &(b, lc) in &row[1..] {
                let v = lc - mu[b];
                if v > best.1 {
                    best = (b, v, lc);
                }
            }
            choice[u] = best.0;
            load[best.0] += 1;
            user_part += best.1;
            sum_log_rate += best.2;
        }
        let dual = user_part + mu.iter().map(|&m| load_response(m)).sum::<f64>();
        let primal = sum_log_rate - load.iter().map(|&k| k_ln_k(k as f64)).sum::<f64>();
        if dual < state.best_dual {
            state.best_dual = dual;
        }
        if primal > state.best_primal {
            state.best_primal = primal;
            state.best_assignment.clone_from(&choice);
        }

        history.push_back(choice.clone());
        while history.len() > t.div_ceil(10) {
            history.pop_front();
        }

        let gap = state.gap();
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceRow {
                iteration: t,
                dual: state.best_dual,
                primal: state.best_primal,
                gap,
            });
        }
        if gap <= params.gap_tol {
            break;
        }

        // Subgradient of D is K̂_b − load_b. Each component is scaled by the
        // larger of the two loads, which keeps an e^μ response from
        // overshooting when a price lands far from its fixed point.
        let step = params.step0 / (t as f64).sqrt();
        for (m, &k) in mu.iter_mut().zip(&load) {
            let response = load_response(*m);
            let k = k as f64;
            *m -= step * (response - k) / response.max(k).max(1.0);
        }
    }
    state.mu = mu;

    // ergodic average of the retained user steps
    let w = history.len() as f64;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nu];
    for step in &history {
        for (u, &b) in step.iter().enumerate() {
            match rows[u].iter_mut().find(|(bb, _)| *bb == b) {
                Some(e) => e.1 += 1.0,
                None => rows[u].push((b, 1.0)),
            }
        }
    }
    for row in &mut rows {
        row.iter_mut().for_each(|e| e.1 /= w);
        row.sort_unstable_by_key(|e| e.0);
    }
    let fractional = FractionalAssociation { num_bs: nb, rows };

    let rounded = round_association(&fractional, rates);
    if let Ok(v) = log_utility(&rounded, rates) {
        if v > state.best_primal {
            state.best_primal = v;
            state.best_assignment = rounded.serving;
        }
    }
    Ok((fractional, state))
}

fn k_ln_k(k: f64) -> f64 {
    if k > 0.0 {
        k * k.ln()
    } else {
        0.0
    }
}

/// Each user goes to its largest fraction, lowest bs index on ties.
pub fn round_association(fractional: &FractionalAssociation, rates: &RateMatrix) -> Association {
    debug_assert_eq!(fractional.num_users(), rates.num_users());
    let serving = fractional
        .rows
        .iter()
        .map(|row| {
            let mut best = row[0];
            for &e in &row[1..] {
                if e.1 > best.1 || (e.1 == best.1 && e.0 < best.0) {
                    best = e;
                }
            }
            best.0
        })
        .collect();
    Association {
        serving,
        policy: PolicyTag::LoadAware,
    }
}

/// `Σ_u ln(c_{u,b(u)} / K_{b(u)})` in nats.
pub fn log_utility(association: &Association, rates: &RateMatrix) -> Result<f64> {
    let k = association.counts(rates.num_bs());
    association
        .serving
        .iter()
        .enumerate()
        .map(|(u, &b)| {
            let c = rates.rate(u, b);
            if c > 0.0 {
                Ok((c / k[b] as f64).ln())
            } else {
                Err(Error::UndefinedUtility(u))
            }
        })
        .sum()
}

/// `Σ x ln c − Σ K ln K` for a fractional association.
pub fn relaxed_objective(fractional: &FractionalAssociation, rates: &RateMatrix) -> f64 {
    let mut v = 0.0;
    for (u, row) in fractional.rows.iter().enumerate() {
        for &(b, x) in row {
            v += x * rates.rate(u, b).ln();
        }
    }
    v - fractional.loads().into_iter().map(k_ln_k).sum::<f64>()
}
