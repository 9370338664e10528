//! Finite-size mean-field treatment.
//!
//! A Bogoliubov rotation with angle `φ_i` per level, `th 2φ_i = −Δ/(ε_i+μ)`,
//! gives the variational energy
//!
//! ```text
//! E_MF(μ, Δ) = Σ_i Ω_i (√((ε_i+μ)² − Δ²) − (ε_i+μ)) − μ N_b + Δ²/g
//! ```
//!
//! and particle number `Σ_i Ω_i ((ε_i+μ)/√((ε_i+μ)² − Δ²) − 1)`. Energies are
//! measured from the lowest level internally and shifted back on output.
//!
//! The naive scheme looks for a stationary point with fixed particle number;
//! it exists only in the gapped phase. The modified scheme sets `μ = Δ`,
//! puts the lowest level in charge of the condensate, and minimizes over `Δ`.

use thiserror::Error;

use nalgebra::DVector;

use crate::fock::{build_hamiltonian, raise_element, FockError, PairBasis, DEFAULT_BASIS_CAP};
use crate::model::{LevelSpectrum, PairSector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanFieldError {
    #[error("Δ = {delta} is not below ε + μ = {bound} on every level")]
    Domain { delta: f64, bound: f64 },
    #[error("boson number must be positive, got {0}")]
    InvalidBosonNumber(f64),
    #[error("coupling must be non-negative and finite, got {0}")]
    InvalidCoupling(f64),
    #[error("stationarity equations did not converge (relative residual {residual:e})")]
    NewtonFailed { residual: f64 },
    #[error("depletion {depletion} reaches the boson number {n_bosons}: condensate picture breaks down")]
    BeyondValidity { depletion: f64, n_bosons: f64 },
    #[error("{expected} amplitudes needed, got {got}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error(transparent)]
    Fock(#[from] FockError),
}

type Result<T> = std::result::Result<T, MeanFieldError>;

/// Relative residual accepted for the stationarity equations.
pub const MF_TOL: f64 = 1e-10;

struct Shifted {
    eps: Vec<f64>,
    omega: Vec<f64>,
    offset: f64,
}

impl Shifted {
    fn new(spectrum: &LevelSpectrum) -> Self {
        let offset = spectrum.lowest();
        Shifted {
            eps: spectrum.epsilons().iter().map(|e| e - offset).collect(),
            omega: spectrum.levels().iter().map(|l| l.omega as f64).collect(),
            offset,
        }
    }

    /// Real quasiparticle energies need `|Δ| < ε_0 + μ`; the energy itself
    /// stays finite at equality, the particle number does not.
    fn check(&self, mu: f64, delta: f64, strict: bool) -> Result<()> {
        let bound = mu + self.eps[0];
        let ok = if strict && delta != 0.0 {
            delta.abs() < bound
        } else {
            delta.abs() <= bound
        };
        if ok {
            Ok(())
        } else {
            Err(MeanFieldError::Domain { delta, bound })
        }
    }

    fn radius(&self, e: f64, mu: f64, delta: f64) -> f64 {
        ((e + mu - delta) * (e + mu + delta)).sqrt()
    }
}

/// `E_MF(μ, Δ)` for `N_b` bosons, with energies relative to the spectrum as given.
pub fn emf(mu: f64, delta: f64, spectrum: &LevelSpectrum, n_bosons: f64, g_eff: f64) -> Result<f64> {
    let s = Shifted::new(spectrum);
    let mu_s = mu + s.offset;
    emf_shifted(&s, mu_s, delta, n_bosons, g_eff).map(|e| e + s.offset * n_bosons)
}

fn emf_shifted(s: &Shifted, mu: f64, delta: f64, n_bosons: f64, g_eff: f64) -> Result<f64> {
    s.check(mu, delta, false)?;
    let sum: f64 = s
        .eps
        .iter()
        .zip(&s.omega)
        .map(|(&e, &w)| w * (s.radius(e, mu, delta) - (e + mu)))
        .sum();
    let pairing = if delta == 0.0 { 0.0 } else { delta * delta / g_eff };
    Ok(sum - mu * n_bosons + pairing)
}

/// `Σ_i Ω_i ((ε_i+μ)/√((ε_i+μ)² − Δ²) − 1)`.
pub fn particle_number_mf(mu: f64, delta: f64, spectrum: &LevelSpectrum) -> Result<f64> {
    let s = Shifted::new(spectrum);
    let mu = mu + s.offset;
    s.check(mu, delta, true)?;
    Ok(number_shifted(&s, mu, delta))
}

fn number_shifted(s: &Shifted, mu: f64, delta: f64) -> f64 {
    s.eps
        .iter()
        .zip(&s.omega)
        .map(|(&e, &w)| {
            let y = e + mu;
            let r = s.radius(e, mu, delta);
            w * delta * delta / (r * (y + r))
        })
        .sum()
}

/// `α_i = th φ_i` with `th 2φ_i = −Δ/(ε_i+μ)`.
pub fn variational_amplitudes(mu: f64, delta: f64, spectrum: &LevelSpectrum) -> Result<Vec<f64>> {
    spectrum
        .epsilons()
        .iter()
        .map(|&e| {
            let x = -delta / (e + mu);
            if !(x.abs() < 1.0) {
                return Err(MeanFieldError::Domain { delta, bound: e + mu });
            }
            Ok(x / (1.0 + (1.0 - x * x).sqrt()))
        })
        .collect()
}

/// Bogoliubov angles `φ_i = ½ atanh(−Δ/(ε_i+μ))`; infinite on a level where
/// `Δ = ε_i + μ`.
pub fn bogoliubov_angles(mu: f64, delta: f64, spectrum: &LevelSpectrum) -> Vec<f64> {
    spectrum
        .epsilons()
        .iter()
        .map(|&e| {
            let x = -delta / (e + mu);
            if x <= -1.0 {
                f64::NEG_INFINITY
            } else {
                0.5 * x.atanh()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfStatus {
    Solved,
    NoStationaryPoint,
}

impl MfStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MfStatus::Solved => "solved",
            MfStatus::NoStationaryPoint => "no_stationary_point",
        }
    }
}

/// A converged mean-field state.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub mu: f64,
    pub delta: f64,
    pub angles: Vec<f64>,
    pub energy: f64,
    /// Mean boson number per level.
    pub occupations: Vec<f64>,
    /// Bosons on the lowest level; set by the modified scheme only.
    pub condensate: Option<f64>,
    /// Largest relative residual of the equations that fixed `(μ, Δ)`.
    pub residual: f64,
}

impl MeanFieldState {
    /// Quasiparticle energies `√((ε_i+μ)² − Δ²)`.
    pub fn quasiparticle_energies(&self, spectrum: &LevelSpectrum) -> Vec<f64> {
        spectrum
            .epsilons()
            .iter()
            .map(|&e| ((e + self.mu - self.delta) * (e + self.mu + self.delta)).max(0.0).sqrt())
            .collect()
    }

    /// `th φ_i`, reaching `−1` on a level that holds a condensate.
    pub fn amplitudes(&self, spectrum: &LevelSpectrum) -> Vec<f64> {
        spectrum
            .epsilons()
            .iter()
            .map(|&e| {
                let x = (-self.delta / (e + self.mu)).clamp(-1.0, 1.0);
                x / (1.0 + (1.0 - x * x).sqrt())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeanFieldOutcome {
    Solved(MeanFieldState),
    NoStationaryPoint,
}

impl MeanFieldOutcome {
    pub fn status(&self) -> MfStatus {
        match self {
            MeanFieldOutcome::Solved(_) => MfStatus::Solved,
            MeanFieldOutcome::NoStationaryPoint => MfStatus::NoStationaryPoint,
        }
    }

    pub fn state(&self) -> Option<&MeanFieldState> {
        match self {
            MeanFieldOutcome::Solved(s) => Some(s),
            MeanFieldOutcome::NoStationaryPoint => None,
        }
    }
}

fn check_inputs(n_bosons: f64, g_eff: f64) -> Result<()> {
    if !(n_bosons > 0.0 && n_bosons.is_finite()) {
        return Err(MeanFieldError::InvalidBosonNumber(n_bosons));
    }
    if !(g_eff >= 0.0 && g_eff.is_finite()) {
        return Err(MeanFieldError::InvalidCoupling(g_eff));
    }
    Ok(())
}

fn free_state(s: &Shifted, spectrum: &LevelSpectrum, n_bosons: f64) -> MeanFieldState {
    let mut occupations = vec![0.0; s.eps.len()];
    occupations[0] = n_bosons;
    MeanFieldState {
        mu: -s.offset,
        delta: 0.0,
        angles: vec![0.0; spectrum.len()],
        energy: s.offset * n_bosons,
        occupations,
        condensate: Some(n_bosons),
        residual: 0.0,
    }
}

/// Level weights spread evenly over the interval up to the next level; the
/// top interval repeats the last spacing. For equal spacing this is exactly
/// the uniform continuum density.
struct Smeared {
    cells: Vec<(f64, f64, f64)>,
    total_weight: f64,
}

impl Smeared {
    fn new(s: &Shifted) -> Self {
        let n = s.eps.len();
        let cells = (0..n)
            .map(|i| {
                let width = if i + 1 < n {
                    s.eps[i + 1] - s.eps[i]
                } else if n > 1 {
                    s.eps[n - 1] - s.eps[n - 2]
                } else {
                    1.0
                };
                (s.eps[i], width, s.omega[i])
            })
            .collect();
        Smeared {
            cells,
            total_weight: s.omega.iter().sum(),
        }
    }

    /// `(∫ 1/R, ∫ (ε+μ)/R)` with `R² = ε² + 2εμ + G²`.
    fn integrals(&self, mu: f64, gap: f64) -> (f64, f64) {
        let r = |e: f64| (e * e + 2.0 * e * mu + gap * gap).sqrt();
        let mut i0 = 0.0;
        let mut i1 = 0.0;
        for &(a, w, weight) in &self.cells {
            let (lo, hi) = (r(a), r(a + w));
            i0 += weight / w * ((a + w + mu + hi) / (a + mu + lo)).ln();
            i1 += weight / w * (hi - lo);
        }
        (i0, i1)
    }

    fn number(&self, mu: f64, gap: f64) -> f64 {
        self.integrals(mu, gap).1 - self.total_weight
    }

    /// Chemical potential fixing the number at gap `G`; `μ ≥ G` keeps `Δ` real.
    fn mu_for_gap(&self, gap: f64, n_bosons: f64) -> f64 {
        let mut lo = gap;
        let mut hi = gap.max(1.0);
        while self.number(hi, gap) < n_bosons {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.number(mid, gap) < n_bosons {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn gap_residual(&self, gap: f64, n_bosons: f64, g_eff: f64) -> (f64, f64) {
        let mu = self.mu_for_gap(gap, n_bosons);
        (self.integrals(mu, gap).0 - 2.0 / g_eff, mu)
    }
}

const SCAN_FACTOR: f64 = 1.25;

/// Stationary point of `E_MF` at fixed particle number.
///
/// Existence is decided on the level-density form of the equations: the
/// gap `G = √(μ² − Δ²)` is scanned on a geometric grid, with `μ` eliminated
/// through the particle number. Without a sign change of the gap equation
/// the outcome is [`MeanFieldOutcome::NoStationaryPoint`]. Otherwise the
/// bracketed root seeds a Newton solve of the discrete equations.
pub fn solve_naive_mf(spectrum: &LevelSpectrum, n_bosons: f64, g_eff: f64) -> Result<MeanFieldOutcome> {
    check_inputs(n_bosons, g_eff)?;
    let s = Shifted::new(spectrum);
    if g_eff == 0.0 {
        let mut free = free_state(&s, spectrum, n_bosons);
        free.condensate = None;
        return Ok(MeanFieldOutcome::Solved(free));
    }
    let smeared = Smeared::new(&s);
    let width = smeared.cells.last().map(|&(a, w, _)| a + w).unwrap_or(1.0);
    let mut gap = 1e-9 * width;
    if smeared.gap_residual(gap, n_bosons, g_eff).0 <= 0.0 {
        return Ok(MeanFieldOutcome::NoStationaryPoint);
    }
    let mut lo = gap;
    let mut hi = loop {
        gap *= SCAN_FACTOR;
        if gap > 1e6 * width * (1.0 + n_bosons * g_eff) {
            return Ok(MeanFieldOutcome::NoStationaryPoint);
        }
        if smeared.gap_residual(gap, n_bosons, g_eff).0 <= 0.0 {
            break gap;
        }
        lo = gap;
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if smeared.gap_residual(mid, n_bosons, g_eff).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gap = 0.5 * (lo + hi);
    let mu0 = smeared.mu_for_gap(gap, n_bosons);
    let delta0 = ((mu0 - gap) * (mu0 + gap)).max(0.0).sqrt();
    let (mu, delta, residual) = polish_discrete(&s, mu0, delta0, n_bosons, g_eff)?;
    let n = s.eps.len();
    let mut occupations = Vec::with_capacity(n);
    for i in 0..n {
        let y = s.eps[i] + mu;
        let r = s.radius(s.eps[i], mu, delta);
        occupations.push(s.omega[i] * delta * delta / (r * (y + r)));
    }
    let energy = emf_shifted(&s, mu, delta, n_bosons, g_eff)? + s.offset * n_bosons;
    Ok(MeanFieldOutcome::Solved(MeanFieldState {
        mu: mu - s.offset,
        delta,
        angles: bogoliubov_angles(mu - s.offset, delta, spectrum),
        energy,
        occupations,
        condensate: None,
        residual,
    }))
}

/// Relative residuals `(Σ Ω/R − 2/g)/(2/g)` and `(N − N_b)/N_b`.
fn discrete_residuals(s: &Shifted, mu: f64, delta: f64, n_bosons: f64, g_eff: f64) -> Result<[f64; 2]> {
    s.check(mu, delta, true)?;
    let inv: f64 = s
        .eps
        .iter()
        .zip(&s.omega)
        .map(|(&e, &w)| w / s.radius(e, mu, delta))
        .sum();
    let rhs = 2.0 / g_eff;
    Ok([(inv - rhs) / rhs, (number_shifted(s, mu, delta) - n_bosons) / n_bosons])
}

fn discrete_jacobian(s: &Shifted, mu: f64, delta: f64, n_bosons: f64, g_eff: f64) -> [[f64; 2]; 2] {
    let (mut p, mut q) = (0.0, 0.0);
    for (&e, &w) in s.eps.iter().zip(&s.omega) {
        let r = s.radius(e, mu, delta);
        let r3 = r * r * r;
        p += w / r3;
        q += w * (e + mu) / r3;
    }
    let a = g_eff / 2.0;
    [[-q * a, delta * p * a], [-delta * delta * p / n_bosons, delta * q / n_bosons]]
}

fn polish_discrete(s: &Shifted, mu: f64, delta: f64, n_bosons: f64, g_eff: f64) -> Result<(f64, f64, f64)> {
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let (mut mu, mut delta) = (mu, delta);
    let mut r = discrete_residuals(s, mu, delta, n_bosons, g_eff)?;
    for _ in 0..100 {
        if norm(r) <= MF_TOL {
            return Ok((mu, delta, norm(r)));
        }
        let j = discrete_jacobian(s, mu, delta, n_bosons, g_eff);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dmu = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dd = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            if let Ok(rn) = discrete_residuals(s, mu + lambda * dmu, delta + lambda * dd, n_bosons, g_eff) {
                if norm(rn) < norm(r) {
                    mu += lambda * dmu;
                    delta += lambda * dd;
                    r = rn;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if norm(r) <= MF_TOL {
        Ok((mu, delta, norm(r)))
    } else {
        Err(MeanFieldError::NewtonFailed { residual: norm(r) })
    }
}

/// `E_MF(Δ, Δ)` in the shifted frame and its first two derivatives.
fn modified_energy(s: &Shifted, delta: f64, n_bosons: f64, g_eff: f64) -> (f64, f64, f64) {
    let mut e = -delta * n_bosons + delta * delta / g_eff;
    let mut d1 = -n_bosons + 2.0 * delta / g_eff;
    let mut d2 = 2.0 / g_eff;
    for (&eps, &w) in s.eps.iter().zip(&s.omega) {
        let r = (eps * (eps + 2.0 * delta)).sqrt();
        e += w * (r - eps - delta);
        let ratio = (eps / (eps + 2.0 * delta)).sqrt();
        d1 += w * (ratio - 1.0);
        d2 -= w * eps.sqrt() * (eps + 2.0 * delta).powf(-1.5);
    }
    (e, d1, d2)
}

/// Minimum of `E_MF(Δ, Δ)` over `Δ > 0`, with the lowest level holding the
/// condensate `N₀ = N_b − Σ_{i>0} Ω_i 2s_i²`.
pub fn solve_modified_mf(spectrum: &LevelSpectrum, n_bosons: f64, g_eff: f64) -> Result<MeanFieldState> {
    check_inputs(n_bosons, g_eff)?;
    let s = Shifted::new(spectrum);
    if g_eff == 0.0 {
        return Ok(free_state(&s, spectrum, n_bosons));
    }
    let total: f64 = s.omega.iter().sum();
    let mut lo = 0.0;
    let mut hi = 0.5 * g_eff * (n_bosons + total);
    let scale = n_bosons + total;
    let mut delta = 0.5 * hi;
    for _ in 0..300 {
        let (_, d1, d2) = modified_energy(&s, delta, n_bosons, g_eff);
        if d1.abs() <= MF_TOL * scale {
            break;
        }
        if d1 < 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let newton = delta - d1 / d2;
        delta = if d2 > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let (e, d1, _) = modified_energy(&s, delta, n_bosons, g_eff);
    let mut occupations: Vec<f64> = s
        .eps
        .iter()
        .zip(&s.omega)
        .skip(1)
        .map(|(&e, &w)| {
            let r = (e * (e + 2.0 * delta)).sqrt();
            w * delta * delta / (r * (e + delta + r))
        })
        .collect();
    let depletion: f64 = occupations.iter().sum();
    occupations.insert(0, 0.0);
    if depletion >= n_bosons {
        return Err(MeanFieldError::BeyondValidity { depletion, n_bosons });
    }
    occupations[0] = n_bosons - depletion;
    let mu = delta - s.offset;
    Ok(MeanFieldState {
        mu,
        delta,
        angles: bogoliubov_angles(mu, delta, spectrum),
        energy: e + s.offset * n_bosons,
        occupations,
        condensate: Some(n_bosons - depletion),
        residual: d1.abs() / scale,
    })
}

/// `(Σ_i α_i b_i⁺)^M |ν⟩` in the pair basis, normalized.
pub fn projected_trial_state(spectrum: &LevelSpectrum, sector: &PairSector, amplitudes: &[f64]) -> Result<DVector<f64>> {
    let l = spectrum.len();
    if amplitudes.len() != l {
        return Err(MeanFieldError::AmplitudeCount {
            expected: l,
            got: amplitudes.len(),
        });
    }
    let charges = spectrum.charges();
    let mut current = DVector::from_element(1, 1.0);
    for m in 0..sector.pairs() {
        let from = PairBasis::new(l, m, DEFAULT_BASIS_CAP)?;
        let to = PairBasis::new(l, m + 1, DEFAULT_BASIS_CAP)?;
        let mut next = DVector::zeros(to.len());
        for (i, state) in from.states().iter().enumerate() {
            if current[i] == 0.0 {
                continue;
            }
            let mut raised = state.clone();
            for (a, &alpha) in amplitudes.iter().enumerate() {
                raised[a] += 1;
                let j = to.index_of(&raised).expect("raised state lies in the next sector");
                next[j] += alpha * raise_element(state[a], charges[a]) * current[i];
                raised[a] -= 1;
            }
        }
        current = next;
    }
    let norm = current.norm();
    Ok(current / norm)
}

/// Expectation value of the Hamiltonian in [`projected_trial_state`]; an
/// upper bound on the ground energy of the sector.
pub fn projected_energy(spectrum: &LevelSpectrum, sector: &PairSector, g_eff: f64, amplitudes: &[f64]) -> Result<f64> {
    let psi = projected_trial_state(spectrum, sector, amplitudes)?;
    let h = build_hamiltonian(spectrum, sector, g_eff)?;
    Ok(psi.dot(&(&h.matrix * &psi)))
}

/// Small-coupling, high-density limit: `μ = gρ/2`, dispersion `√(ε(ε+gρ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovLimit {
    pub mu: f64,
    g_rho: f64,
}

impl BogoliubovLimit {
    pub fn dispersion(&self, epsilon: f64) -> f64 {
        (epsilon * (epsilon + self.g_rho)).sqrt()
    }
}

pub fn bogoliubov_limit(g_bare: f64, rho: f64) -> BogoliubovLimit {
    BogoliubovLimit {
        mu: 0.5 * g_bare * rho,
        g_rho: g_bare * rho,
    }
}
