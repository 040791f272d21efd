//! Small frozen instances with exhaustively or analytically computed
//! expectations. `gen-fixtures` rewrites them; the test suite checks that
//! regeneration reproduces the committed files byte for byte.
//!
//! | file | contents |
//! |---|---|
//! | `oracle_instances.csv` | dense rate matrices, `instance,user,bs,rate_bps` |
//! | `oracle_expected.csv` | exhaustive-search optimum per instance |
//! | `empty_tier.cfg` | every tier at zero density; realizations must fail |
//! | `single_user.cfg`, `single_user_layout.csv` | one user, one macro, one pico |
//! | `single_user_sweep.csv` | closed-form median rate per bias |
//! | `single_user_switch.csv` | bias at which the user moves to the pico |

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assoc::{brute_force_log_utility, DEFAULT_MAX_SEARCH};
use crate::error::{Error, Result};
use crate::loadopt::RateMatrix;
use crate::netgen::{BaseStation, NetworkRealization, Point};
use crate::output::fmt_num;

pub const ORACLE_INSTANCES: &str = "oracle_instances.csv";
pub const ORACLE_EXPECTED: &str = "oracle_expected.csv";
pub const EMPTY_TIER: &str = "empty_tier.cfg";
pub const SINGLE_USER: &str = "single_user.cfg";
pub const SINGLE_USER_LAYOUT: &str = "single_user_layout.csv";
pub const SINGLE_USER_SWEEP: &str = "single_user_sweep.csv";
pub const SINGLE_USER_SWITCH: &str = "single_user_switch.csv";

const ORACLE_SEED: u64 = 2014;
const RANDOM_INSTANCES: usize = 24;

/// Directory of the committed fixtures.
pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Dense rate matrices; instance 0 is the textbook 3 user, 2 BS case.
pub fn oracle_instances() -> Vec<Vec<Vec<f64>>> {
    let mut out = vec![vec![vec![4.0, 1.0], vec![4.0, 1.0], vec![1.0, 4.0]]];
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    for _ in 0..RANDOM_INSTANCES {
        let users = rng.random_range(1..=12usize);
        let bss = rng.random_range(1..=3usize);
        let rows = (0..users)
            .map(|_| loop {
                let row: Vec<f64> = (0..bss)
                    .map(|_| {
                        if rng.random_bool(0.2) {
                            0.0
                        } else {
                            let r = 10f64.powf(rng.random_range(5.0..7.0));
                            fmt_num(r).parse().unwrap()
                        }
                    })
                    .collect();
                if row.iter().any(|&r| r > 0.0) {
                    break row;
                }
            })
            .collect();
        out.push(rows);
    }
    out
}

/// One expected optimum per oracle instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleExpectation {
    pub instance: usize,
    pub objective: f64,
    pub serving: Vec<usize>,
}

pub fn instances_csv(instances: &[Vec<Vec<f64>>]) -> String {
    let mut out = String::from("instance,user,bs,rate_bps\n");
    for (i, rows) in instances.iter().enumerate() {
        for (u, row) in rows.iter().enumerate() {
            for (b, &r) in row.iter().enumerate() {
                writeln!(out, "{i},{u},{b},{}", fmt_num(r)).unwrap();
            }
        }
    }
    out
}

/// Parses `instance,user,bs,rate_bps`; matrix sizes are the largest indices
/// seen, infeasible links included as zero rates.
pub fn parse_instances(text: &str) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut entries = Vec::new();
    for (n, line) in data_lines(text, "instance,user,bs,rate_bps")? {
        let f = fields::<4>(line, n)?;
        let idx = |k: usize| -> Result<usize> {
            f[k].parse().map_err(|_| Error::Parse {
                line: n,
                msg: format!("bad index `{}`", f[k]),
            })
        };
        let rate: f64 = f[3].parse().map_err(|_| Error::Parse {
            line: n,
            msg: format!("bad rate `{}`", f[3]),
        })?;
        entries.push((idx(0)?, idx(1)?, idx(2)?, rate));
    }
    let count = entries.iter().map(|e| e.0 + 1).max().unwrap_or(0);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mine: Vec<_> = entries.iter().filter(|e| e.0 == i).collect();
        let users = mine.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        let bss = mine.iter().map(|e| e.2 + 1).max().unwrap_or(0);
        let mut rows = vec![vec![0.0; bss]; users];
        for e in mine {
            rows[e.1][e.2] = e.3;
        }
        out.push(rows);
    }
    Ok(out)
}

pub fn expected_csv(expected: &[OracleExpectation]) -> String {
    let mut out = String::from("instance,objective,association\n");
    for e in expected {
        let serving: Vec<String> = e.serving.iter().map(|b| b.to_string()).collect();
        writeln!(
            out,
            "{},{},{}",
            e.instance,
            fmt_num(e.objective),
            serving.join(" ")
        )
        .unwrap();
    }
    out
}

pub fn parse_expected(text: &str) -> Result<Vec<OracleExpectation>> {
    data_lines(text, "instance,objective,association")?
        .map(|(n, line)| {
            let f = fields::<3>(line, n)?;
            let bad = |what: &str| Error::Parse {
                line: n,
                msg: format!("bad {what}"),
            };
            Ok(OracleExpectation {
                instance: f[0].parse().map_err(|_| bad("instance"))?,
                objective: f[1].parse().map_err(|_| bad("objective"))?,
                serving: f[2]
                    .split(' ')
                    .map(|s| s.parse().map_err(|_| bad("association")))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == header => Ok(lines.filter(|(_, l)| !l.is_empty())),
        _ => Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{header}`"),
        }),
    }
}

fn fields<const N: usize>(line: &str, n: usize) -> Result<[&str; N]> {
    let f: Vec<&str> = line.split(',').collect();
    f.try_into().map_err(|_| Error::Parse {
        line: n,
        msg: format!("expected {N} fields"),
    })
}

pub const EMPTY_TIER_CFG: &str = "\
# Both tiers are empty, so no realization can serve the users.
[region]
side_km = 1
pathloss_exponent = 3.5

[band.1]
bandwidth = 10 MHz
noise = -95 dBm

[tier.1]
density = 0
tx_power = 46 dBm
band = 1
macro = true

[tier.2]
density = 0
tx_power = 23 dBm
band = 1

[users]
density = 30
";

pub const SINGLE_USER_CFG: &str = "\
# One user, a macro 1 km away and a pico at 10^-0.5 km.
[region]
side_km = 10
pathloss_exponent = 3.5

[band.1]
bandwidth = 10 MHz
noise = -95 dBm

[tier.1]
density = 0.01
tx_power = 46 dBm
band = 1
macro = true

[tier.2]
density = 0.01
tx_power = 23 dBm
band = 1

[users]
density = 0.01
";

/// Closed-form quantities of the single-user geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleUser {
    pub macro_km: f64,
    pub pico_km: f64,
    /// Small-cell bias above which the user is served by the pico.
    pub switching_bias_db: f64,
    pub macro_rate_bps: f64,
    pub pico_rate_bps: f64,
}

impl SingleUser {
    pub fn new() -> Self {
        let macro_km = 1.0;
        let pico_km = 10f64.powf(-0.5);
        let (alpha, macro_dbm, pico_dbm, noise_dbm, bandwidth) = (3.5, 46.0, 23.0, -95.0, 10e6);
        let rx_dbm = |tx: f64, d_km: f64| tx - 10.0 * alpha * (d_km * 1000.0).log10();
        let (pm, pp) = (rx_dbm(macro_dbm, macro_km), rx_dbm(pico_dbm, pico_km));
        let mw = |dbm: f64| 10f64.powf(dbm / 10.0);
        let noise = mw(noise_dbm);
        SingleUser {
            macro_km,
            pico_km,
            switching_bias_db: pm - pp,
            macro_rate_bps: bandwidth * (1.0 + mw(pm) / (mw(pp) + noise)).log2(),
            pico_rate_bps: bandwidth * (1.0 + mw(pp) / (mw(pm) + noise)).log2(),
        }
    }

    pub fn layout(&self) -> NetworkRealization {
        let user = Point::new(5.0, 5.0);
        NetworkRealization {
            region_side_km: 10.0,
            base_stations: vec![
                BaseStation {
                    tier_id: 1,
                    pos: Point::new(user.x + self.macro_km, user.y),
                },
                BaseStation {
                    tier_id: 2,
                    pos: Point::new(user.x, user.y + self.pico_km),
                },
            ],
            users: vec![user],
            seed: 0,
        }
    }

    /// Bias grid of the committed sweep.
    pub fn bias_grid() -> Vec<f64> {
        (0..=10).map(f64::from).collect()
    }

    /// Median rate at each grid bias; ties stay on the macro.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("bias_db,eta,objective_value\n");
        for b in Self::bias_grid() {
            let rate = if b > self.switching_bias_db {
                self.pico_rate_bps
            } else {
                self.macro_rate_bps
            };
            writeln!(out, "{},0,{}", fmt_num(b), fmt_num(rate)).unwrap();
        }
        out
    }
}

impl Default for SingleUser {
    fn default() -> Self {
        Self::new()
    }
}

/// Every fixture file name with its contents.
pub fn render() -> Result<Vec<(&'static str, String)>> {
    let instances = oracle_instances();
    let expected = instances
        .iter()
        .enumerate()
        .map(|(i, rows)| {
            let (a, v) =
                brute_force_log_utility(&RateMatrix::from_dense(rows)?, DEFAULT_MAX_SEARCH)?;
            Ok(OracleExpectation {
                instance: i,
                objective: v,
                serving: a.serving,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let single = SingleUser::new();
    Ok(vec![
        (ORACLE_INSTANCES, instances_csv(&instances)),
        (ORACLE_EXPECTED, expected_csv(&expected)),
        (EMPTY_TIER, EMPTY_TIER_CFG.to_string()),
        (SINGLE_USER, SINGLE_USER_CFG.to_string()),
        (SINGLE_USER_LAYOUT, single.layout().to_csv()),
        (SINGLE_USER_SWEEP, single.sweep_csv()),
        (
            SINGLE_USER_SWITCH,
            format!("switching_bias_db\n{}\n", fmt_num(single.switching_bias_db)),
        ),
    ])
}

/// Writes every fixture into `dir`, creating it if needed.
pub fn generate(dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    render()?
        .into_iter()
        .map(|(name, text)| {
            let path = dir.join(name);
            fs::write(&path, text)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_round_trip_through_csv() {
        let inst = oracle_instances();
        assert_eq!(inst.len(), RANDOM_INSTANCES + 1);
        assert!(inst
            .iter()
            .all(|r| r.len() <= 12 && r.iter().all(|row| row.len() <= 3)));
        assert_eq!(
            parse_instances(&instances_csv(&inst)).unwrap().len(),
            inst.len()
        );
        assert!(parse_instances("nope\n").is_err());
    }

    #[test]
    fn single_user_closed_form() {
        let s = SingleUser::new();
        assert!((s.switching_bias_db - 5.5).abs() < 1e-9);
        assert!(s.macro_rate_bps > s.pico_rate_bps);
        let csv = s.sweep_csv();
        assert_eq!(csv.lines().count(), 12);
    }

    #[test]
    fn expectations_round_trip() {
        let e = vec![OracleExpectation {
            instance: 3,
            objective: 2.5,
            serving: vec![0, 2, 1],
        }];
        assert_eq!(parse_expected(&expected_csv(&e)).unwrap(), e);
    }
}
