//! Sectioned key-value config files.
//!
//! ```text
//! # comment
//! [region]
//! side_km = 10
//!
//! [tier.1]
//! tx_power = 46 dBm
//! ```
//!
//! Section names may carry a numeric suffix (`[band.2]`). Values are kept as
//! raw strings; typed access goes through [`Section`] getters that name the
//! offending key on failure.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    /// Numeric suffix of `[name.N]` headers.
    pub index: Option<u32>,
    entries: Vec<(String, String)>,
    /// Prefix used in error messages, e.g. `tiers[1]`.
    label: String,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, raw_line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let header = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: "unterminated section header".into(),
                })?;
                let header = header.trim();
                if !seen.insert(header.to_string()) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("duplicate section [{header}]"),
                    });
                }
                sections.push(Section::new(header, line_no)?);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected `key = value`".into(),
            })?;
            let section = sections.last_mut().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "key outside of any section".into(),
            })?;
            let key = key.trim().to_string();
            if section.entries.iter().any(|(k, _)| *k == key) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            section.entries.push((key, value.trim().to_string()));
        }
        Ok(RawConfig { sections })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections
            .iter()
            .find(|s| s.name == name && s.index.is_none())
    }

    /// All `[name.N]` sections in file order.
    pub fn indexed(&self, name: &str) -> impl Iterator<Item = &Section> + '_ {
        let name = name.to_string();
        self.sections
            .iter()
            .filter(move |s| s.name == name && s.index.is_some())
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            match s.index {
                Some(idx) => writeln!(out, "[{}.{}]", s.name, idx).unwrap(),
                None => writeln!(out, "[{}]", s.name).unwrap(),
            }
            for (k, v) in &s.entries {
                writeln!(out, "{k} = {v}").unwrap();
            }
        }
        out
    }
}

fn section_label(name: &str, index: Option<u32>) -> String {
    let plural = match name {
        "tier" => "tiers",
        "band" => "bands",
        other => other,
    };
    match index {
        Some(i) => format!("{plural}[{i}]"),
        None => plural.to_string(),
    }
}

impl Section {
    fn new(header: &str, line: usize) -> Result<Self> {
        let (name, index) = match header.split_once('.') {
            Some((name, idx)) => {
                let idx = idx.trim().parse::<u32>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad section index in [{header}]"),
                })?;
                (name.trim().to_string(), Some(idx))
            }
            None => (header.to_string(), None),
        };
        if name.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty section name".into(),
            });
        }
        Ok(Section {
            label: section_label(&name, index),
            name,
            index,
            entries: Vec::new(),
        })
    }

    pub fn build(name: &str, index: Option<u32>) -> Self {
        Section {
            label: section_label(name, index),
            name: name.to_string(),
            index,
            entries: Vec::new(),
        }
    }

    pub fn set(mut self, key: &str, value: impl Into<String>) -> Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    /// Fully qualified key for error messages.
    pub fn key(&self, key: &str) -> String {
        format!("{}.{}", self.label, key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::MissingField(self.key(key)))
    }

    /// Fails on any key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|(k, _)| !allowed.contains(&k.as_str()))
        {
            Some((k, _)) => Err(Error::UnknownKey(self.key(k))),
            None => Ok(()),
        }
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_number(v).map_err(|msg| self.invalid(key, msg)))
            .transpose()
    }

    pub fn quantity(&self, key: &str, unit: Unit) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_quantity(v, unit).map_err(|msg| self.invalid(key, msg)))
            .transpose()
    }

    pub fn integer(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    self.invalid(key, format!("expected a non-negative integer, got `{v}`"))
                })
            })
            .transpose()
    }

    pub fn boolean(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "on" => Ok(true),
                "false" | "no" | "off" => Ok(false),
                _ => Err(self.invalid(key, format!("expected true/false, got `{v}`"))),
            })
            .transpose()
    }

    fn invalid(&self, key: &str, msg: String) -> Error {
        Error::InvalidValue {
            key: self.key(key),
            msg,
        }
    }
}

/// Physical dimension of a config value; determines accepted unit suffixes
/// and the canonical unit the value is converted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Canonical mW. Bare numbers are dBm.
    Power,
    /// Canonical linear ratio. Bare numbers are dB.
    Ratio,
    /// Canonical Hz. Bare numbers are Hz.
    Frequency,
}

fn parse_number(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{v}`"))
    }
}

pub fn parse_quantity(v: &str, unit: Unit) -> std::result::Result<f64, String> {
    let v = v.trim();
    let split = v
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .or_else(|| v.find(' '))
        .unwrap_or(v.len());
    let (num, suffix) = v.split_at(split);
    let x = parse_number(num)?;
    let suffix = suffix.trim();
    let converted = match (unit, suffix) {
        (Unit::Power, "" | "dBm") => db_to_linear(x),
        (Unit::Power, "mW") => x,
        (Unit::Power, "W") => x * 1e3,
        (Unit::Ratio, "" | "dB") => db_to_linear(x),
        (Unit::Ratio, "lin") => x,
        (Unit::Frequency, "" | "Hz") => x,
        (Unit::Frequency, "kHz") => x * 1e3,
        (Unit::Frequency, "MHz") => x * 1e6,
        (Unit::Frequency, "GHz") => x * 1e9,
        _ => return Err(format!("unsupported unit `{suffix}` for {unit:?}")),
    };
    Ok(converted)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
