//! Poisson point process deployments on a toroidal square.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Redraws allowed before a scenario is declared degenerate.
pub const MAX_REDRAWS: u32 = 100;

/// Position in km, `0 <= x, y < region side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseStation {
    pub tier_id: u32,
    pub pos: Point,
}

/// One random draw of base station and user positions.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub region_side_km: f64,
    /// Grouped by tier in scenario order; the position in this list is the
    /// BS index used everywhere downstream.
    pub base_stations: Vec<BaseStation>,
    pub users: Vec<Point>,
    pub seed: u64,
}

/// Wrap-around Euclidean distance.
pub fn torus_distance(p: Point, q: Point, side: f64) -> f64 {
    torus_distance_sq(p, q, side).sqrt()
}

#[inline]
pub(crate) fn torus_distance_sq(p: Point, q: Point, side: f64) -> f64 {
    let wrap = |d: f64| {
        let d = d.abs();
        d.min(side - d)
    };
    let dx = wrap(p.x - q.x);
    let dy = wrap(p.y - q.y);
    dx * dx + dy * dy
}

/// Per-realization seed derived from a master seed and the realization
/// index (SplitMix64 finalizer), so parallel ensembles do not depend on
/// scheduling order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    d.sample(rng) as usize
}

fn uniform_point<R: Rng>(side: f64, rng: &mut R) -> Point {
    Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side))
}

/// Samples a realization: Poisson counts per tier and for users, uniform
/// positions. A draw with users but no base station at all is redrawn on the
/// next ChaCha stream, up to [`MAX_REDRAWS`] times.
pub fn generate_realization(scenario: &ScenarioConfig, seed: u64) -> Result<NetworkRealization> {
    let side = scenario.region_side_km;
    let area = scenario.area_km2();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..=MAX_REDRAWS {
        rng.set_stream(attempt as u64);
        rng.set_word_pos(0);
        let mut base_stations = Vec::new();
        for tier in &scenario.tiers {
            let n = poisson_count(tier.density * area, &mut rng);
            base_stations.extend((0..n).map(|_| BaseStation {
                tier_id: tier.tier_id,
                pos: uniform_point(side, &mut rng),
            }));
        }
        let n_users = poisson_count(scenario.user_density * area, &mut rng);
        let users: Vec<Point> = (0..n_users)
            .map(|_| uniform_point(side, &mut rng))
            .collect();
        if users.is_empty() || !base_stations.is_empty() {
            return Ok(NetworkRealization {
                region_side_km: side,
                base_stations,
                users,
                seed,
            });
        }
    }
    Err(Error::DegenerateScenario(MAX_REDRAWS))
}

impl NetworkRealization {
    /// `kind,tier_id,x_km,y_km`; users carry tier_id -1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,tier_id,x_km,y_km\n");
        for bs in &self.base_stations {
            writeln!(out, "bs,{},{},{}", bs.tier_id, bs.pos.x, bs.pos.y).unwrap();
        }
        for u in &self.users {
            writeln!(out, "user,-1,{},{}", u.x, u.y).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str, region_side_km: f64) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "kind,tier_id,x_km,y_km")) => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "expected header `kind,tier_id,x_km,y_km`".into(),
                })
            }
        }
        let mut base_stations = Vec::new();
        let mut users = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: n + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(err("expected 4 fields"));
            }
            let coord = |s: &str| -> Result<f64> {
                let v: f64 = s.parse().map_err(|_| err("bad coordinate"))?;
                if (0.0..region_side_km).contains(&v) {
                    Ok(v)
                } else {
                    Err(err("coordinate outside the region"))
                }
            };
            let pos = Point::new(coord(fields[2])?, coord(fields[3])?);
            match fields[0] {
                "bs" => base_stations.push(BaseStation {
                    tier_id: fields[1].parse().map_err(|_| err("bad tier_id"))?,
                    pos,
                }),
                "user" => users.push(pos),
                _ => return Err(err("kind must be bs or user")),
            }
        }
        Ok(NetworkRealization {
            region_side_km,
            base_stations,
            users,
            seed: 0,
        })
    }

    /// Fails with `BadReference` if a base station names an unknown tier.
    pub fn check_against(&self, scenario: &ScenarioConfig) -> Result<()> {
        for (i, bs) in self.base_stations.iter().enumerate() {
            if scenario.tier_index(bs.tier_id).is_none() {
                return Err(Error::BadReference(format!("base_stations[{i}].tier_id")));
            }
        }
        Ok(())
    }
}
