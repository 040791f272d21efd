//! Validated experiment description shared by every other module.
//!
//! Quantities configured in dB/dBm are stored as linear ratios and mW.
//! A [`ScenarioConfig`] is immutable once validated and is `Sync`, so Monte
//! Carlo workers share it by reference.

use crate::config::{db_to_linear, linear_to_db, RawConfig, Section, Unit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandConfig {
    pub band_id: u32,
    pub bandwidth_hz: f64,
    /// Total noise power over the band.
    pub noise_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TierConfig {
    pub tier_id: u32,
    /// Base stations per km².
    pub density: f64,
    pub tx_power_mw: f64,
    /// Linear association bias.
    pub bias: f64,
    pub band_id: u32,
    /// Blanking mutes macro tiers only.
    pub is_macro: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlankingVariant {
    Off,
    /// Range-expanded small-cell users are served only in blanked subframes.
    ReOnlyInBlank,
    /// Every small-cell user is served in both subframe kinds.
    AllSubframes,
}

impl BlankingVariant {
    pub fn name(self) -> &'static str {
        match self {
            BlankingVariant::Off => "off",
            BlankingVariant::ReOnlyInBlank => "re-only-in-blank",
            BlankingVariant::AllSubframes => "all-subframes",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "off" => Some(BlankingVariant::Off),
            "re-only-in-blank" => Some(BlankingVariant::ReOnlyInBlank),
            "all-subframes" => Some(BlankingVariant::AllSubframes),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlankingConfig {
    /// Fraction of subframes in which every macro is muted.
    pub eta: f64,
    pub variant: BlankingVariant,
}

impl BlankingConfig {
    pub const OFF: BlankingConfig = BlankingConfig {
        eta: 0.0,
        variant: BlankingVariant::Off,
    };

    /// Whether subframe partitioning changes rates at all. A zero blanking
    /// fraction leaves no blanked subframes, which is the same as no ABS.
    pub fn is_active(&self) -> bool {
        self.variant != BlankingVariant::Off && self.eta > 0.0
    }

    pub fn effective_eta(&self) -> f64 {
        if self.variant == BlankingVariant::Off {
            0.0
        } else {
            self.eta
        }
    }
}

/// Default AMC decoding floor when the floor is switched on without a value.
pub const DEFAULT_AMC_FLOOR_DB: f64 = -6.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Side of the square (toroidal) region.
    pub region_side_km: f64,
    /// Tiers in association order; the lower index wins association ties.
    pub tiers: Vec<TierConfig>,
    pub bands: Vec<BandConfig>,
    /// Users per km².
    pub user_density: f64,
    pub pathloss_exponent: f64,
    pub min_distance_m: f64,
    pub blanking: BlankingConfig,
    /// SINR in dB below which a link carries no data.
    pub amc_floor_db: Option<f64>,
    /// All base stations interfere regardless of load.
    pub full_buffer_interference: bool,
}

impl ScenarioConfig {
    /// Two-tier co-channel reference deployment: 1 macro/km² at 46 dBm,
    /// 5 small cells/km² at 23 dBm, one 10 MHz band with −95 dBm noise,
    /// 30 users/km² on a 10 km torus, α = 3.5.
    pub fn reference() -> Self {
        ScenarioConfig {
            region_side_km: 10.0,
            tiers: vec![
                TierConfig {
                    tier_id: 1,
                    density: 1.0,
                    tx_power_mw: db_to_linear(46.0),
                    bias: 1.0,
                    band_id: 1,
                    is_macro: true,
                },
                TierConfig {
                    tier_id: 2,
                    density: 5.0,
                    tx_power_mw: db_to_linear(23.0),
                    bias: 1.0,
                    band_id: 1,
                    is_macro: false,
                },
            ],
            bands: vec![BandConfig {
                band_id: 1,
                bandwidth_hz: 10e6,
                noise_mw: db_to_linear(-95.0),
            }],
            user_density: 30.0,
            pathloss_exponent: 3.5,
            min_distance_m: 1.0,
            blanking: BlankingConfig::OFF,
            amc_floor_db: None,
            full_buffer_interference: true,
        }
    }

    /// Reference deployment with the small-cell tier moved to its own
    /// 20 MHz band, so macros and small cells never interfere.
    pub fn out_of_band() -> Self {
        let mut s = Self::reference();
        s.bands.push(BandConfig {
            band_id: 2,
            bandwidth_hz: 20e6,
            // thermal noise over 20 MHz plus the same 9 dB figure
            noise_mw: db_to_linear(-174.0 + 10.0 * 20e6f64.log10() + 9.0),
        });
        s.tiers[1].band_id = 2;
        s
    }

    pub fn area_km2(&self) -> f64 {
        self.region_side_km * self.region_side_km
    }

    pub fn band_index(&self, band_id: u32) -> Option<usize> {
        self.bands.iter().position(|b| b.band_id == band_id)
    }

    pub fn tier_index(&self, tier_id: u32) -> Option<usize> {
        self.tiers.iter().position(|t| t.tier_id == tier_id)
    }

    pub fn macro_density(&self) -> f64 {
        self.tiers
            .iter()
            .filter(|t| t.is_macro)
            .map(|t| t.density)
            .sum()
    }

    /// Bias of the first non-macro tier in dB, 0 if there is none.
    pub fn small_cell_bias_db(&self) -> f64 {
        self.tiers
            .iter()
            .find(|t| !t.is_macro)
            .map(|t| linear_to_db(t.bias))
            .unwrap_or(0.0)
    }

    /// Copy with every non-macro tier biased by `bias_db`.
    pub fn with_small_cell_bias_db(&self, bias_db: f64) -> Self {
        let mut s = self.clone();
        let bias = db_to_linear(bias_db);
        for t in s.tiers.iter_mut().filter(|t| !t.is_macro) {
            t.bias = bias;
        }
        s
    }

    /// Copy with every non-macro tier at `ratio` times the macro density.
    pub fn with_density_ratio(&self, ratio: f64) -> Self {
        let mut s = self.clone();
        let macro_density = self.macro_density();
        for t in s.tiers.iter_mut().filter(|t| !t.is_macro) {
            t.density = ratio * macro_density;
        }
        s
    }

    pub fn with_blanking(&self, blanking: BlankingConfig) -> Self {
        let mut s = self.clone();
        s.blanking = blanking;
        s
    }

    /// True when at least one non-macro tier shares a band with a macro tier.
    pub fn is_co_channel(&self) -> bool {
        self.tiers.iter().filter(|t| !t.is_macro).any(|s| {
            self.tiers
                .iter()
                .any(|m| m.is_macro && m.band_id == s.band_id)
        })
    }

    /// Checks every invariant of a programmatically built scenario.
    pub fn check(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let non_negative = |x: f64| x.is_finite() && x >= 0.0;
        if !positive(self.region_side_km) {
            return Err(Error::OutOfRange("region.side_km".into()));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 2.0) {
            return Err(Error::OutOfRange("region.pathloss_exponent".into()));
        }
        if !positive(self.min_distance_m) {
            return Err(Error::OutOfRange("region.min_distance_m".into()));
        }
        if !non_negative(self.user_density) {
            return Err(Error::OutOfRange("users.density".into()));
        }
        if let Some(floor) = self.amc_floor_db {
            if !floor.is_finite() {
                return Err(Error::OutOfRange("region.amc_floor".into()));
            }
        }
        for (i, b) in self.bands.iter().enumerate() {
            let key = |f: &str| format!("bands[{}].{f}", b.band_id);
            if self.bands[..i].iter().any(|o| o.band_id == b.band_id) {
                return Err(Error::InvalidValue {
                    key: key("band_id"),
                    msg: "duplicate band id".into(),
                });
            }
            if !positive(b.bandwidth_hz) {
                return Err(Error::OutOfRange(key("bandwidth")));
            }
            if !non_negative(b.noise_mw) {
                return Err(Error::OutOfRange(key("noise")));
            }
        }
        for (i, t) in self.tiers.iter().enumerate() {
            let key = |f: &str| format!("tiers[{}].{f}", t.tier_id);
            if self.tiers[..i].iter().any(|o| o.tier_id == t.tier_id) {
                return Err(Error::InvalidValue {
                    key: key("tier_id"),
                    msg: "duplicate tier id".into(),
                });
            }
            if !non_negative(t.density) {
                return Err(Error::OutOfRange(key("density")));
            }
            if !positive(t.tx_power_mw) {
                return Err(Error::OutOfRange(key("tx_power")));
            }
            if !positive(t.bias) || (t.is_macro && t.bias != 1.0) {
                return Err(Error::OutOfRange(key("bias")));
            }
            if self.band_index(t.band_id).is_none() {
                return Err(Error::BadReference(key("band")));
            }
        }
        let eta = self.blanking.eta;
        if !(eta.is_finite() && (0.0..=1.0).contains(&eta)) {
            return Err(Error::OutOfRange("blanking.eta".into()));
        }
        Ok(())
    }

    /// Builds and validates a scenario from a parsed config file.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let region = raw
            .section("region")
            .ok_or_else(|| Error::MissingField("region".into()))?;
        region.check_keys(&[
            "side_km",
            "pathloss_exponent",
            "min_distance_m",
            "amc_floor",
            "full_buffer_interference",
        ])?;
        let region_side_km = required_number(region, "side_km")?;
        let pathloss_exponent = required_number(region, "pathloss_exponent")?;
        let min_distance_m = region.number("min_distance_m")?.unwrap_or(1.0);
        let amc_floor_db = match region.get("amc_floor") {
            None | Some("off") => None,
            Some("on") => Some(DEFAULT_AMC_FLOOR_DB),
            Some(_) => region.number("amc_floor")?,
        };
        let full_buffer_interference = region.boolean("full_buffer_interference")?.unwrap_or(true);

        let mut bands = Vec::new();
        for s in raw.indexed("band") {
            s.check_keys(&["bandwidth", "noise"])?;
            bands.push(BandConfig {
                band_id: s.index.unwrap(),
                bandwidth_hz: required_quantity(s, "bandwidth", Unit::Frequency)?,
                noise_mw: required_quantity(s, "noise", Unit::Power)?,
            });
        }
        if bands.is_empty() {
            return Err(Error::MissingField("bands".into()));
        }

        let mut tiers = Vec::new();
        for s in raw.indexed("tier") {
            s.check_keys(&["density", "tx_power", "bias", "band", "macro"])?;
            let band = s.require("band")?;
            let band_id = band
                .parse::<u32>()
                .map_err(|_| Error::BadReference(s.key("band")))?;
            tiers.push(TierConfig {
                tier_id: s.index.unwrap(),
                density: required_number(s, "density")?,
                tx_power_mw: required_quantity(s, "tx_power", Unit::Power)?,
                bias: s.quantity("bias", Unit::Ratio)?.unwrap_or(1.0),
                band_id,
                is_macro: s.boolean("macro")?.unwrap_or(false),
            });
        }
        if tiers.is_empty() {
            return Err(Error::MissingField("tiers".into()));
        }
        tiers.sort_by_key(|t| t.tier_id);
        bands.sort_by_key(|b| b.band_id);

        let users = raw
            .section("users")
            .ok_or_else(|| Error::MissingField("users".into()))?;
        users.check_keys(&["density"])?;
        let user_density = required_number(users, "density")?;

        let blanking = match raw.section("blanking") {
            None => BlankingConfig::OFF,
            Some(s) => {
                s.check_keys(&["eta", "variant"])?;
                let variant = match s.get("variant") {
                    None => BlankingVariant::Off,
                    Some(v) => {
                        BlankingVariant::from_name(v).ok_or_else(|| Error::InvalidValue {
                            key: s.key("variant"),
                            msg: format!(
                                "expected off, re-only-in-blank or all-subframes, got `{v}`"
                            ),
                        })?
                    }
                };
                BlankingConfig {
                    eta: s.number("eta")?.unwrap_or(0.0),
                    variant,
                }
            }
        };

        let scenario = ScenarioConfig {
            region_side_km,
            tiers,
            bands,
            user_density,
            pathloss_exponent,
            min_distance_m,
            blanking,
            amc_floor_db,
            full_buffer_interference,
        };
        scenario.check()?;
        Ok(scenario)
    }

    /// Serializes into config sections using canonical units (mW, Hz,
    /// linear bias), so that re-validation reproduces the exact values.
    pub fn to_raw(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        let mut region = Section::build("region", None)
            .set("side_km", self.region_side_km.to_string())
            .set("pathloss_exponent", self.pathloss_exponent.to_string())
            .set("min_distance_m", self.min_distance_m.to_string())
            .set(
                "full_buffer_interference",
                self.full_buffer_interference.to_string(),
            );
        region = match self.amc_floor_db {
            Some(f) => region.set("amc_floor", f.to_string()),
            None => region.set("amc_floor", "off"),
        };
        raw.push(region);
        for b in &self.bands {
            raw.push(
                Section::build("band", Some(b.band_id))
                    .set("bandwidth", format!("{} Hz", b.bandwidth_hz))
                    .set("noise", format!("{} mW", b.noise_mw)),
            );
        }
        for t in &self.tiers {
            raw.push(
                Section::build("tier", Some(t.tier_id))
                    .set("density", t.density.to_string())
                    .set("tx_power", format!("{} mW", t.tx_power_mw))
                    .set("bias", format!("{} lin", t.bias))
                    .set("band", t.band_id.to_string())
                    .set("macro", t.is_macro.to_string()),
            );
        }
        raw.push(Section::build("users", None).set("density", self.user_density.to_string()));
        raw.push(
            Section::build("blanking", None)
                .set("variant", self.blanking.variant.name())
                .set("eta", self.blanking.eta.to_string()),
        );
        raw
    }

    pub fn to_config_string(&self) -> String {
        self.to_raw().to_text()
    }
}

fn required_number(s: &Section, key: &str) -> Result<f64> {
    s.number(key)?
        .ok_or_else(|| Error::MissingField(s.key(key)))
}

fn required_quantity(s: &Section, key: &str, unit: Unit) -> Result<f64> {
    s.quantity(key, unit)?
        .ok_or_else(|| Error::MissingField(s.key(key)))
}
