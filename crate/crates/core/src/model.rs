//! Single-particle data shared by every solver: levels, couplings and pair sectors.
//!
//! Sign convention: every public solver takes `g_eff > 0` to mean attraction,
//! i.e. the Hamiltonian `H = Σ ε_α n_α − g_eff B⁺B⁻`. In the Richardson
//! equations this is the `+2/g_eff` term of the defect (see [`Coupling::richardson_rhs`]).

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),
    #[error("spectrum file {path}: {reason}")]
    SpectrumFile { path: String, reason: String },
}

/// One (possibly degenerate) energy level.
///
/// A shell of degeneracy `omega` is stored once; its pair algebra only
/// depends on the charge `omega + nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub epsilon: f64,
    pub omega: u32,
    pub nu: u32,
}

impl Level {
    pub fn new(epsilon: f64, omega: u32, nu: u32) -> Self {
        Level { epsilon, omega, nu }
    }

    pub fn charge(&self) -> u32 {
        charge(self)
    }
}

/// `C = Ω + ν`.
pub fn charge(level: &Level) -> u32 {
    level.omega + level.nu
}

/// Ordered list of levels with strictly increasing energies.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpectrum {
    levels: Vec<Level>,
}

impl LevelSpectrum {
    pub fn new(levels: Vec<Level>) -> Result<Self, ModelError> {
        if levels.is_empty() {
            return Err(ModelError::InvalidSpectrum("no levels".into()));
        }
        for (i, lv) in levels.iter().enumerate() {
            if !lv.epsilon.is_finite() {
                return Err(ModelError::InvalidSpectrum(format!("level {i}: non-finite energy")));
            }
            if lv.omega == 0 {
                return Err(ModelError::InvalidSpectrum(format!("level {i}: degeneracy must be positive")));
            }
            if lv.omega == 1 && lv.nu > 1 {
                return Err(ModelError::InvalidSpectrum(format!(
                    "level {i}: non-degenerate level allows nu in {{0, 1}}, got {}",
                    lv.nu
                )));
            }
        }
        for (i, w) in levels.windows(2).enumerate() {
            if w[1].epsilon <= w[0].epsilon {
                return Err(ModelError::InvalidSpectrum(format!(
                    "energies must be strictly increasing (levels {i} and {})",
                    i + 1
                )));
            }
        }
        Ok(LevelSpectrum { levels })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.epsilon).collect()
    }

    pub fn charges(&self) -> Vec<u32> {
        self.levels.iter().map(charge).collect()
    }

    pub fn seniorities(&self) -> Vec<u32> {
        self.levels.iter().map(|l| l.nu).collect()
    }

    pub fn lowest(&self) -> f64 {
        self.levels[0].epsilon
    }

    pub fn min_spacing(&self) -> Option<f64> {
        self.levels
            .windows(2)
            .map(|w| w[1].epsilon - w[0].epsilon)
            .min_by(f64::total_cmp)
    }

    /// Same levels with every seniority replaced.
    pub fn with_seniorities(&self, nu: &[u32]) -> Result<Self, ModelError> {
        if nu.len() != self.levels.len() {
            return Err(ModelError::InvalidSector(format!(
                "{} seniorities for {} levels",
                nu.len(),
                self.levels.len()
            )));
        }
        let levels = self
            .levels
            .iter()
            .zip(nu)
            .map(|(l, &n)| Level::new(l.epsilon, l.omega, n))
            .collect();
        LevelSpectrum::new(levels)
    }

    /// Parses the plain-text format `epsilon omega nu`, one level per line.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut levels = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(ModelError::InvalidSpectrum(format!(
                    "line {}: expected 3 fields 'epsilon omega nu', found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let bad = |what: &str| {
                ModelError::InvalidSpectrum(format!("line {}: cannot parse {what}", lineno + 1))
            };
            let epsilon: f64 = fields[0].parse().map_err(|_| bad("epsilon"))?;
            let omega: u32 = fields[1].parse().map_err(|_| bad("omega"))?;
            let nu: u32 = fields[2].parse().map_err(|_| bad("nu"))?;
            levels.push(Level::new(epsilon, omega, nu));
        }
        LevelSpectrum::new(levels)
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::SpectrumFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        LevelSpectrum::parse(&text).map_err(|e| ModelError::SpectrumFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

impl fmt::Display for LevelSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# epsilon omega nu")?;
        for l in &self.levels {
            writeln!(f, "{:.17e} {} {}", l.epsilon, l.omega, l.nu)?;
        }
        Ok(())
    }
}

/// `ε_α = α/L`, all non-degenerate, no unpaired bosons; bandwidth `L ε₁ = 1`.
pub fn equal_spacing_spectrum(l: usize) -> Result<LevelSpectrum, ModelError> {
    if l < 2 {
        return Err(ModelError::InvalidSpectrum(format!(
            "equal spacing needs at least 2 levels, got {l}"
        )));
    }
    let lf = l as f64;
    let levels = (0..l).map(|a| Level::new(a as f64 / lf, 1, 0)).collect();
    LevelSpectrum::new(levels)
}

/// Attraction strength, stored as the bare value together with the level count
/// used for the `g → g/L` rescaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    g_bare: f64,
    levels: usize,
}

impl Coupling {
    pub fn from_bare(g_bare: f64, levels: usize) -> Result<Self, ModelError> {
        if !(g_bare.is_finite() && g_bare >= 0.0) {
            return Err(ModelError::InvalidCoupling(format!("g must be finite and non-negative, got {g_bare}")));
        }
        if levels == 0 {
            return Err(ModelError::InvalidCoupling("level count must be positive".into()));
        }
        Ok(Coupling { g_bare, levels })
    }

    pub fn from_effective(g_eff: f64, levels: usize) -> Result<Self, ModelError> {
        Coupling::from_bare(g_eff * levels as f64, levels)
    }

    pub fn g_bare(&self) -> f64 {
        self.g_bare
    }

    pub fn g_eff(&self) -> f64 {
        self.g_bare / self.levels as f64
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Constant term of the Richardson defect for attraction: `2/g_eff`.
    pub fn richardson_rhs(&self) -> f64 {
        2.0 / self.g_eff()
    }
}

/// Hilbert-space block: `M` pairs on top of the frozen seniorities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSector {
    pairs: usize,
    seniorities: Vec<u32>,
    n_bosons: usize,
}

impl PairSector {
    pub fn new(spectrum: &LevelSpectrum, pairs: usize) -> Self {
        let seniorities = spectrum.seniorities();
        let unpaired: usize = seniorities.iter().map(|&n| n as usize).sum();
        PairSector {
            pairs,
            seniorities,
            n_bosons: unpaired + 2 * pairs,
        }
    }

    /// Sector holding `n_bosons` bosons; fails if the parity does not match the seniorities.
    pub fn with_bosons(spectrum: &LevelSpectrum, n_bosons: usize) -> Result<Self, ModelError> {
        let unpaired: usize = spectrum.seniorities().iter().map(|&n| n as usize).sum();
        if n_bosons < unpaired || !(n_bosons - unpaired).is_multiple_of(2) {
            return Err(ModelError::InvalidSector(format!(
                "{n_bosons} bosons incompatible with {unpaired} unpaired"
            )));
        }
        Ok(PairSector::new(spectrum, (n_bosons - unpaired) / 2))
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn seniorities(&self) -> &[u32] {
        &self.seniorities
    }

    pub fn n_bosons(&self) -> usize {
        self.n_bosons
    }

    pub fn check(&self, spectrum: &LevelSpectrum) -> Result<(), ModelError> {
        if self.seniorities != spectrum.seniorities() {
            return Err(ModelError::InvalidSector("seniorities do not match the spectrum".into()));
        }
        Ok(())
    }
}

/// `ρ = N_b / L`.
pub fn density(spectrum: &LevelSpectrum, sector: &PairSector) -> f64 {
    sector.n_bosons() as f64 / spectrum.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_spacing_levels() {
        let s = equal_spacing_spectrum(2).unwrap();
        assert_eq!(s.epsilons(), vec![0.0, 0.5]);
        let s = equal_spacing_spectrum(4).unwrap();
        assert_eq!(s.epsilons(), vec![0.0, 0.25, 0.5, 0.75]);
        let s = equal_spacing_spectrum(1000).unwrap();
        let e = s.epsilons();
        assert_eq!(e[1], 0.001);
        assert_eq!(e[999], 0.999);
        assert!((1000.0 * e[1] - 1.0).abs() < 1e-15);
        assert!(matches!(equal_spacing_spectrum(1), Err(ModelError::InvalidSpectrum(_))));
    }

    #[test]
    fn density_examples() {
        let s = equal_spacing_spectrum(4).unwrap();
        assert_eq!(density(&s, &PairSector::new(&s, 2)), 1.0);
        let s10 = equal_spacing_spectrum(10).unwrap();
        assert_eq!(density(&s10, &PairSector::new(&s10, 10)), 2.0);
        let s1 = s.with_seniorities(&[1, 0, 0, 0]).unwrap();
        let sec = PairSector::new(&s1, 1);
        assert_eq!(sec.n_bosons(), 3);
        assert_eq!(density(&s1, &sec), 0.75);
    }

    #[test]
    fn charge_examples() {
        assert_eq!(charge(&Level::new(0.0, 1, 0)), 1);
        assert_eq!(charge(&Level::new(0.0, 1, 1)), 2);
        assert_eq!(charge(&Level::new(0.0, 5, 2)), 7);
    }

    #[test]
    fn non_degenerate_level_rule() {
        assert!(LevelSpectrum::new(vec![Level::new(0.0, 1, 2)]).is_err());
        assert!(LevelSpectrum::new(vec![Level::new(0.0, 3, 2)]).is_ok());
        assert!(LevelSpectrum::new(vec![Level::new(0.0, 0, 0)]).is_err());
        assert!(LevelSpectrum::new(vec![Level::new(0.5, 1, 0), Level::new(0.5, 1, 0)]).is_err());
    }

    #[test]
    fn coupling_rescaling() {
        let c = Coupling::from_bare(3.0, 10).unwrap();
        assert_eq!(c.g_eff(), 0.3);
        let c = Coupling::from_effective(0.25, 4).unwrap();
        assert_eq!(c.g_bare(), 1.0);
        assert!(Coupling::from_bare(-1.0, 4).is_err());
    }

    #[test]
    fn parse_spectrum_file_format() {
        let text = "# comment\n0.0 1 0\n\n1.0 2 1\n";
        let s = LevelSpectrum::parse(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.charges(), vec![1, 3]);
        assert!(LevelSpectrum::parse("0.0 1\n").is_err());
        assert!(LevelSpectrum::parse("x 1 0\n").is_err());
        let back = LevelSpectrum::parse(&s.to_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn sector_boson_count() {
        let s = equal_spacing_spectrum(3).unwrap().with_seniorities(&[1, 0, 1]).unwrap();
        let sec = PairSector::new(&s, 2);
        assert_eq!(sec.n_bosons(), 6);
        assert!(PairSector::with_bosons(&s, 5).is_err());
        assert_eq!(PairSector::with_bosons(&s, 6).unwrap(), sec);
    }
}
