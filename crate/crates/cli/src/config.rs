//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use boson_pairing::model::{equal_spacing_spectrum, LevelSpectrum, PairSector};

use crate::CliError;

pub const KEYS: [&str; 15] = [
    "levels",
    "spectrum",
    "pairs",
    "seniorities",
    "rho",
    "g_start",
    "g_end",
    "points",
    "spacing",
    "coupling",
    "label",
    "tol",
    "check_tol",
    "seed",
    "out",
];

const TOL_RANGE: (f64, f64) = (1e-14, 1e-6);

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSource {
    EqualSpacing(usize),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// Whether sweep values are bare couplings `g` or already divided by `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingScale {
    Bare,
    Effective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 || self.start == self.end {
            return vec![self.start];
        }
        let n = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let s = k as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + s * (self.end - self.start),
                    Spacing::Log => (self.start.ln() + s * (self.end.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spectrum: SpectrumSource,
    pub pairs: Option<usize>,
    pub seniorities: Option<Vec<u32>>,
    pub rho: Vec<f64>,
    pub sweep: Sweep,
    pub coupling: CouplingScale,
    pub label: Option<Vec<u32>>,
    pub tol: f64,
    /// Threshold override for the cross-check suite; not a solver tolerance.
    pub check_tol: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    /// Every key with its resolved value, for the manifest.
    pub echo: BTreeMap<String, String>,
}

fn defaults() -> BTreeMap<String, String> {
    [
        ("levels", "4"),
        ("rho", "1"),
        ("g_start", "1"),
        ("g_end", "1"),
        ("points", "1"),
        ("spacing", "linear"),
        ("coupling", "bare"),
        ("tol", "1e-11"),
        ("seed", "42"),
        ("out", "out"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs<'a, I: IntoIterator<Item = &'a str>>(
    lines: I,
    origin: &str,
    into: &mut BTreeMap<String, String>,
) -> Result<(), CliError> {
    for (n, raw) in lines.into_iter().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value, got '{line}'", n + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("{origin}:{}: unknown key '{key}'", n + 1)));
        }
        into.insert(key.to_string(), value.trim().to_string());
    }
    Ok(())
}

fn parse_value<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("cannot parse {key} = '{v}'"))),
    }
}

fn required<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    parse_value(map, key)?.ok_or_else(|| CliError::Config(format!("missing key {key}")))
}

fn parse_list<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<T>>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|x| x.trim().parse())
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("cannot parse list {key} = '{v}'"))),
    }
}

fn check_tolerance(key: &str, value: f64) -> Result<f64, CliError> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&value) {
        return Err(CliError::Config(format!(
            "{key} = {value:e} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(value)
}

impl RunConfig {
    /// Defaults, then the file, then the overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut map = defaults();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_pairs(text.lines(), &path.display().to_string(), &mut map)?;
        }
        parse_pairs(overrides.iter().map(String::as_str), "override", &mut map)?;
        Self::from_map(map)
    }

    pub fn from_map(map: BTreeMap<String, String>) -> Result<Self, CliError> {
        let spectrum = match map.get("spectrum") {
            Some(path) => SpectrumSource::File(PathBuf::from(path)),
            None => {
                let l: usize = required(&map, "levels")?;
                if l < 2 {
                    return Err(CliError::Config(format!("levels = {l}, need at least 2")));
                }
                SpectrumSource::EqualSpacing(l)
            }
        };
        let sweep = Sweep {
            start: required(&map, "g_start")?,
            end: required(&map, "g_end")?,
            points: required(&map, "points")?,
            spacing: match map.get("spacing").map(String::as_str) {
                Some("linear") => Spacing::Linear,
                Some("log") => Spacing::Log,
                other => return Err(CliError::Config(format!("spacing must be linear or log, got {other:?}"))),
            },
        };
        for (name, v) in [("g_start", sweep.start), ("g_end", sweep.end)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if sweep.points < 1 {
            return Err(CliError::Config("points must be at least 1".into()));
        }
        let rho: Vec<f64> = parse_list(&map, "rho")?.unwrap_or_default();
        if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(CliError::Config(format!("rho values must be positive, got {rho:?}")));
        }
        let coupling = match map.get("coupling").map(String::as_str) {
            Some("bare") => CouplingScale::Bare,
            Some("effective") => CouplingScale::Effective,
            other => return Err(CliError::Config(format!("coupling must be bare or effective, got {other:?}"))),
        };
        let check_tol: Option<f64> = parse_value(&map, "check_tol")?;
        if let Some(t) = check_tol {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("check_tol must be positive, got {t}")));
            }
        }
        Ok(RunConfig {
            spectrum,
            pairs: parse_value(&map, "pairs")?,
            seniorities: parse_list(&map, "seniorities")?,
            rho,
            sweep,
            coupling,
            label: parse_list(&map, "label")?,
            tol: check_tolerance("tol", required(&map, "tol")?)?,
            check_tol,
            seed: required(&map, "seed")?,
            out: PathBuf::from(required::<String>(&map, "out")?),
            echo: map,
        })
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<(), CliError> {
        let mut map = self.echo.clone();
        map.insert(key.to_string(), value);
        *self = Self::from_map(map)?;
        Ok(())
    }

    pub fn load_spectrum(&self) -> Result<LevelSpectrum, CliError> {
        let base = match &self.spectrum {
            SpectrumSource::EqualSpacing(l) => equal_spacing_spectrum(*l),
            SpectrumSource::File(path) => LevelSpectrum::from_file(path),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        match &self.seniorities {
            Some(nu) => base.with_seniorities(nu).map_err(|e| CliError::Config(e.to_string())),
            None => Ok(base),
        }
    }

    pub fn sector(&self, spectrum: &LevelSpectrum) -> Result<PairSector, CliError> {
        let pairs = self.pairs.ok_or_else(|| CliError::Config("missing key pairs".into()))?;
        Ok(PairSector::new(spectrum, pairs))
    }

    /// Effective couplings `g/L` for the sweep.
    pub fn effective_couplings(&self, levels: usize) -> Vec<f64> {
        let values = self.sweep.values();
        match self.coupling {
            CouplingScale::Bare => values.iter().map(|g| g / levels as f64).collect(),
            CouplingScale::Effective => values,
        }
    }

    pub fn bare_couplings(&self, levels: usize) -> Vec<f64> {
        let values = self.sweep.values();
        match self.coupling {
            CouplingScale::Bare => values,
            CouplingScale::Effective => values.iter().map(|g| g * levels as f64).collect(),
        }
    }
}
