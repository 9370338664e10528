//! Bethe roots of the attractive pairing model.
//!
//! An eigenstate with `M` pairs is fixed by roots `t_1 … t_M` solving
//!
//! ```text
//! Σ_α C_α/(t_i − ε_α) + Σ_{j≠i} 2/(t_i − t_j) + 2/g_eff = 0,
//! ```
//!
//! with energy `Σ_α ε_α ν_α + 2 Σ_i t_i`. Roots are labelled by where they
//! emerge as `g → 0`: a level hosting `n_α` pairs in the free state sends a
//! cluster of `n_α` roots out of `ε_α`, just below it. For attraction the
//! roots stay real and never cross a level, so the label is kept along the
//! whole continuation path.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{LevelSpectrum, ModelError, PairSector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RichardsonError {
    #[error("singular root configuration: {0}")]
    Singular(String),
    #[error("Newton step rejected: {0}")]
    StepRejected(String),
    #[error("root initialization failed after {retries} retries (residual {residual:e})")]
    InitializationFailed { retries: usize, residual: f64 },
    #[error("continuation stuck at g = {last_good_g} (target {target_g})")]
    ContinuationStuck { last_good_g: f64, target_g: f64 },
    #[error("roots do not close under conjugation: imaginary energy {0:e}")]
    Inconsistent(f64),
    #[error("label {label:?} does not describe {pairs} pairs on {levels} levels")]
    InvalidLabel {
        label: Vec<u32>,
        pairs: usize,
        levels: usize,
    },
    #[error("coupling must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

type Result<T> = std::result::Result<T, RichardsonError>;

/// Absolute residual accepted at the end of a continuation.
pub const DEFAULT_TOL: f64 = 1e-11;
/// Multiplier on machine epsilon times the summed term magnitudes; below this
/// a defect is indistinguishable from rounding.
const ROUNDOFF_FACTOR: f64 = 64.0;
const MAX_HALVINGS: usize = 30;
const POLISH_STEPS: usize = 3;

/// Converged roots at one coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub g_eff: f64,
    /// Free-limit pair occupancies the state descends from.
    pub label: Vec<u32>,
    /// Largest equation defect.
    pub residual: f64,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

/// Level data in the form the equations use.
#[derive(Debug, Clone)]
struct System {
    eps: Vec<f64>,
    charges: Vec<f64>,
}

impl System {
    fn new(spectrum: &LevelSpectrum, sector: &PairSector) -> Result<Self> {
        sector.check(spectrum)?;
        Ok(System {
            eps: spectrum.epsilons(),
            charges: spectrum.charges().iter().map(|&c| c as f64).collect(),
        })
    }

    /// Defects and, per equation, the size of their rounding error in units
    /// of machine epsilon: each term's magnitude plus its sensitivity to the
    /// rounding of the difference in its denominator.
    fn defects(&self, t: &[Complex64], g: f64) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let rhs = 2.0 / g;
        let mut d = Vec::with_capacity(t.len());
        let mut scale = Vec::with_capacity(t.len());
        for (i, &ti) in t.iter().enumerate() {
            let mut s = Complex64::new(rhs, 0.0);
            let mut mag = rhs;
            for (&e, &c) in self.eps.iter().zip(&self.charges) {
                let diff = ti - e;
                if diff == Complex64::new(0.0, 0.0) {
                    return Err(RichardsonError::Singular(format!("root {i} sits on level {e}")));
                }
                let term = c / diff;
                s += term;
                mag += term.norm() * (1.0 + (ti.norm() + e.abs()) / diff.norm());
            }
            for (j, &tj) in t.iter().enumerate() {
                if i == j {
                    continue;
                }
                let diff = ti - tj;
                if diff == Complex64::new(0.0, 0.0) {
                    return Err(RichardsonError::Singular(format!("roots {i} and {j} coincide")));
                }
                let term = 2.0 / diff;
                s += term;
                mag += term.norm() * (1.0 + (ti.norm() + tj.norm()) / diff.norm());
            }
            d.push(s);
            scale.push(mag);
        }
        Ok((d, scale))
    }

    fn jacobian(&self, t: &[Complex64]) -> DMatrix<Complex64> {
        let m = t.len();
        let mut j = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            let mut diag = Complex64::new(0.0, 0.0);
            for (&e, &c) in self.eps.iter().zip(&self.charges) {
                let diff = t[i] - e;
                diag -= c / (diff * diff);
            }
            for k in 0..m {
                if k == i {
                    continue;
                }
                let diff = t[i] - t[k];
                let w = 2.0 / (diff * diff);
                diag -= w;
                j[(i, k)] = w;
            }
            j[(i, i)] = diag;
        }
        j
    }

    /// Interval of each real root: the number of levels below it.
    fn cells(&self, t: &[Complex64]) -> Vec<Option<usize>> {
        t.iter()
            .map(|ti| {
                if ti.im != 0.0 {
                    None
                } else {
                    Some(self.eps.iter().filter(|&&e| e < ti.re).count())
                }
            })
            .collect()
    }
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Defects with their rounding floor: `(max |d_i|, max over i of |d_i| / allowed_i)`.
fn assess(d: &[Complex64], scale: &[f64], tol: f64) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut ratio = 0.0f64;
    for (di, &s) in d.iter().zip(scale) {
        let allowed = tol.max(ROUNDOFF_FACTOR * f64::EPSILON * s);
        worst = worst.max(di.norm());
        ratio = ratio.max(di.norm() / allowed);
    }
    (worst, ratio)
}

fn check_coupling(g: f64) -> Result<f64> {
    if g > 0.0 && g.is_finite() {
        Ok(g)
    } else {
        Err(RichardsonError::InvalidCoupling(g))
    }
}

/// Per-root defects of the equations at `g_eff`.
pub fn richardson_residual(
    roots: &[Complex64],
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    g_eff: f64,
) -> Result<Vec<Complex64>> {
    let g = check_coupling(g_eff)?;
    Ok(System::new(spectrum, sector)?.defects(roots, g)?.0)
}

/// Zeros of the generalized Laguerre polynomial `L_n^{(a)}`, ascending.
///
/// They satisfy `Σ_{j≠k} 2/(x_k − x_j) + (a+1)/x_k = 1`, which is the
/// equation of an isolated cluster of `n` roots at a level of charge `a+1`.
pub fn laguerre_zeros(n: usize, a: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jm[(k, k)] = 2.0 * k as f64 + a + 1.0;
        if k > 0 {
            let off = (k as f64 * (k as f64 + a)).sqrt();
            jm[(k, k - 1)] = off;
            jm[(k - 1, k)] = off;
        }
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    x
}

/// Options for placing roots near the free limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    /// Starting coupling; `None` picks `1e-3` times the smallest level spacing.
    pub g0: Option<f64>,
    pub retries: usize,
    pub seed: u64,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions {
            g0: None,
            retries: 5,
            seed: 42,
        }
    }
}

/// Default starting coupling for a spectrum.
pub fn default_g0(spectrum: &LevelSpectrum) -> f64 {
    1e-3 * spectrum.min_spacing().unwrap_or(1.0)
}

fn validate_label(label: &[u32], spectrum: &LevelSpectrum, sector: &PairSector) -> Result<()> {
    let total: u64 = label.iter().map(|&n| n as u64).sum();
    if label.len() != spectrum.len() || total != sector.pairs() as u64 {
        return Err(RichardsonError::InvalidLabel {
            label: label.to_vec(),
            pairs: sector.pairs(),
            levels: spectrum.len(),
        });
    }
    Ok(())
}

/// Label of the ground state: every pair on the lowest level.
pub fn ground_label(spectrum: &LevelSpectrum, sector: &PairSector) -> Vec<u32> {
    let mut label = vec![0; spectrum.len()];
    if let Some(first) = label.first_mut() {
        *first = sector.pairs() as u32;
    }
    label
}

/// Cluster placement `t = ε_α − (g₀/2) x_k` polished by at most three Newton
/// steps until the largest defect is below 0.1.
pub fn initial_roots(
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    label: &[u32],
    options: InitOptions,
) -> Result<RootSet> {
    validate_label(label, spectrum, sector)?;
    let sys = System::new(spectrum, sector)?;
    let mut g0 = check_coupling(options.g0.unwrap_or_else(|| default_g0(spectrum)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut last = f64::INFINITY;
    for attempt in 0..=options.retries {
        let jitter = if attempt == 0 { 0.0 } else { 1e-6 };
        let mut t = Vec::with_capacity(sector.pairs());
        for (alpha, &n) in label.iter().enumerate() {
            let x = laguerre_zeros(n as usize, sys.charges[alpha] - 1.0);
            for xk in x {
                let wiggle = 1.0 + jitter * rng.gen_range(-1.0..1.0);
                t.push(Complex64::new(sys.eps[alpha] - 0.5 * g0 * xk * wiggle, 0.0));
            }
        }
        let mut polished = t;
        for _ in 0..POLISH_STEPS {
            match damped_newton(&sys, &polished, g0) {
                Ok((roots, r)) => {
                    polished = roots;
                    if r <= 0.1 {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        if let Ok((d, _)) = sys.defects(&polished, g0) {
            let residual = max_norm(&d);
            if residual <= 0.1 && sys.cells(&polished) == expected_cells(label) {
                return Ok(RootSet {
                    roots: polished,
                    g_eff: g0,
                    label: label.to_vec(),
                    residual,
                });
            }
            last = residual;
        }
        g0 *= 0.5;
    }
    Err(RichardsonError::InitializationFailed {
        retries: options.retries,
        residual: last,
    })
}

fn expected_cells(label: &[u32]) -> Vec<Option<usize>> {
    label
        .iter()
        .enumerate()
        .flat_map(|(alpha, &n)| std::iter::repeat_n(Some(alpha), n as usize))
        .collect()
}

/// One Newton update with backtracking; returns the new roots and their
/// largest defect.
fn damped_newton(sys: &System, t: &[Complex64], g: f64) -> Result<(Vec<Complex64>, f64)> {
    let (d, scale) = sys.defects(t, g)?;
    let norm0 = max_norm(&d);
    if assess(&d, &scale, 0.0).1 <= 1.0 {
        return Ok((t.to_vec(), norm0));
    }
    let j = sys.jacobian(t);
    let rhs = DVector::from_iterator(d.len(), d.iter().map(|z| -z));
    let step = j
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or_else(|| RichardsonError::StepRejected("singular Jacobian".into()))?;
    let cells = sys.cells(t);
    let mut lambda = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let trial: Vec<Complex64> = t.iter().zip(step.iter()).map(|(a, s)| a + s * lambda).collect();
        if sys.cells(&trial) == cells {
            if let Ok((dn, _)) = sys.defects(&trial, g) {
                let n = max_norm(&dn);
                if n < norm0 {
                    return Ok((trial, n));
                }
            }
        }
        lambda *= 0.5;
    }
    Err(RichardsonError::StepRejected("no decrease after backtracking".into()))
}

/// One damped Newton update of `roots` at `g_eff`.
pub fn newton_step(
    roots: &[Complex64],
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    g_eff: f64,
) -> Result<Vec<Complex64>> {
    let g = check_coupling(g_eff)?;
    let sys = System::new(spectrum, sector)?;
    Ok(damped_newton(&sys, roots, g)?.0)
}

/// Newton iterations until every defect is at tolerance or at the rounding floor.
fn correct(sys: &System, t: &[Complex64], g: f64, tol: f64, max_iter: usize) -> Option<(Vec<Complex64>, f64)> {
    let mut cur = t.to_vec();
    for _ in 0..=max_iter {
        let (d, scale) = sys.defects(&cur, g).ok()?;
        let (worst, ratio) = assess(&d, &scale, tol);
        if ratio <= 1.0 {
            return Some((cur, worst));
        }
        cur = damped_newton(sys, &cur, g).ok()?.0;
    }
    None
}

/// Step control for [`continue_in_g`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Initial step in `ln g`.
    pub initial: f64,
    /// Largest step in `ln g`.
    pub max: f64,
    /// Smallest step before giving up.
    pub min: f64,
    /// Consecutive successes before the step doubles.
    pub grow_after: usize,
    pub corrector_iterations: usize,
    pub tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            initial: 0.1,
            max: 0.5,
            min: 1e-10,
            grow_after: 3,
            corrector_iterations: 12,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub g_eff: f64,
    pub roots: Vec<Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub end: RootSet,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// `dt/dg = J⁻¹ (2/g²)`, from differentiating the equations along the path.
fn tangent(sys: &System, t: &[Complex64], g: f64) -> Option<DVector<Complex64>> {
    let rhs = DVector::from_element(t.len(), Complex64::new(2.0 / (g * g), 0.0));
    sys.jacobian(t).lu().solve(&rhs)
}

/// Tracks `start` from its coupling to `target` with a tangent predictor and
/// Newton corrector, in geometric steps of `g`.
pub fn continue_in_g(
    start: &RootSet,
    target: f64,
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    control: StepControl,
) -> Result<Continuation> {
    let target = check_coupling(target)?;
    let sys = System::new(spectrum, sector)?;
    let stuck = |g: f64| RichardsonError::ContinuationStuck {
        last_good_g: g,
        target_g: target,
    };
    let cells = sys.cells(&start.roots);
    let (mut t, mut residual) = correct(&sys, &start.roots, start.g_eff, control.tol, control.corrector_iterations)
        .ok_or_else(|| stuck(start.g_eff))?;
    let mut g = start.g_eff;
    let mut trajectory = vec![TrajectoryPoint {
        g_eff: g,
        roots: t.clone(),
        residual,
    }];
    let direction = if target >= g { 1.0 } else { -1.0 };
    let mut h = control.initial;
    let mut streak = 0;
    while g != target {
        let remaining = (target / g).ln().abs();
        let last = h >= remaining;
        let next = if last { target } else { g * (direction * h).exp() };
        let accepted = tangent(&sys, &t, g).and_then(|v| {
            let predicted: Vec<Complex64> = t.iter().zip(v.iter()).map(|(a, s)| a + s * (next - g)).collect();
            let start = if sys.cells(&predicted) == cells { predicted } else { t.clone() };
            correct(&sys, &start, next, control.tol, control.corrector_iterations)
                .filter(|(roots, _)| sys.cells(roots) == cells)
        });
        match accepted {
            Some((roots, r)) => {
                t = roots;
                residual = r;
                g = next;
                trajectory.push(TrajectoryPoint {
                    g_eff: g,
                    roots: t.clone(),
                    residual,
                });
                streak += 1;
                if streak >= control.grow_after {
                    h = (2.0 * h).min(control.max);
                    streak = 0;
                }
            }
            None => {
                h = if last { 0.5 * remaining } else { 0.5 * h };
                streak = 0;
                if h < control.min {
                    return Err(stuck(g));
                }
            }
        }
    }
    Ok(Continuation {
        end: RootSet {
            roots: t,
            g_eff: g,
            label: start.label.clone(),
            residual,
        },
        trajectory,
    })
}

/// `E = Σ ε_α ν_α + 2 Σ Re t_i`.
pub fn energy_from_roots(roots: &RootSet, spectrum: &LevelSpectrum) -> Result<f64> {
    let sum: Complex64 = roots.roots.iter().sum();
    if sum.im.abs() > 1e-10 {
        return Err(RichardsonError::Inconsistent(sum.im));
    }
    let seniority: f64 = spectrum.levels().iter().map(|l| l.epsilon * l.nu as f64).sum();
    Ok(seniority + 2.0 * sum.re)
}

/// Solution of one labelled state at a sequence of couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSweep {
    pub label: Vec<u32>,
    pub points: Vec<RootSet>,
    pub energies: Vec<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Solves the state `label` at every coupling in `g_values`, continuing
/// from the free limit through the couplings in ascending order.
///
/// Results are returned in the order of `g_values`.
pub fn solve_state(
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    label: &[u32],
    g_values: &[f64],
    init: InitOptions,
    control: StepControl,
) -> Result<StateSweep> {
    for &g in g_values {
        check_coupling(g)?;
    }
    validate_label(label, spectrum, sector)?;
    if sector.pairs() == 0 {
        let energy = energy_from_roots(
            &RootSet {
                roots: Vec::new(),
                g_eff: 0.0,
                label: label.to_vec(),
                residual: 0.0,
            },
            spectrum,
        )?;
        let points: Vec<RootSet> = g_values
            .iter()
            .map(|&g| RootSet {
                roots: Vec::new(),
                g_eff: g,
                label: label.to_vec(),
                residual: 0.0,
            })
            .collect();
        return Ok(StateSweep {
            label: label.to_vec(),
            energies: vec![energy; points.len()],
            points,
            trajectory: Vec::new(),
        });
    }
    let mut order: Vec<usize> = (0..g_values.len()).collect();
    order.sort_by(|&a, &b| g_values[a].total_cmp(&g_values[b]));
    let mut init = init;
    if let Some(&first) = order.first() {
        let g0 = init.g0.unwrap_or_else(|| default_g0(spectrum));
        init.g0 = Some(g0.min(g_values[first]));
    }
    let mut current = initial_roots(spectrum, sector, label, init)?;
    let mut trajectory = Vec::new();
    let mut solved: Vec<Option<RootSet>> = vec![None; g_values.len()];
    for &k in &order {
        let run = continue_in_g(&current, g_values[k], spectrum, sector, control)?;
        let skip = usize::from(!trajectory.is_empty());
        trajectory.extend(run.trajectory.into_iter().skip(skip));
        current = run.end;
        solved[k] = Some(current.clone());
    }
    let points: Vec<RootSet> = solved.into_iter().map(|p| p.expect("every coupling visited")).collect();
    let energies = points
        .iter()
        .map(|p| energy_from_roots(p, spectrum))
        .collect::<Result<Vec<f64>>>()?;
    Ok(StateSweep {
        label: label.to_vec(),
        points,
        energies,
        trajectory,
    })
}

/// Trajectory CSV with columns `g,root_index,re_t,im_t,residual`.
pub fn write_trajectory_csv<W: Write>(trajectory: &[TrajectoryPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "g,root_index,re_t,im_t,residual")?;
    for p in trajectory {
        for (i, t) in p.roots.iter().enumerate() {
            writeln!(out, "{:.16e},{},{:.16e},{:.16e},{:.16e}", p.g_eff, i, t.re, t.im, p.residual)?;
        }
    }
    Ok(())
}
