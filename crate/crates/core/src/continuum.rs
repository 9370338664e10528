//! Thermodynamic limit of the attractive model.
//!
//! Level sums become `L ∫ w(ε) dε` over a normalized density on `[0, 1]`.
//! Below the critical coupling the ground state is a condensate described by
//! one parameter `b`; above it the pairs form a gapped state described by a
//! chemical potential `μ` and a pairing field `Δ`.

use thiserror::Error;

use crate::quad::{integrate_unit_sqrt, QuadError, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuumError {
    #[error("{name} = {value} is outside its domain")]
    Domain { name: &'static str, value: f64 },
    #[error("no strong-coupling solution at g = {g} (critical coupling {g_c})")]
    NoSolution { g: f64, g_c: f64 },
    #[error("gap equations did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("root search for b failed to converge (residual {residual:e})")]
    RootSearch { residual: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

type Result<T> = std::result::Result<T, ContinuumError>;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ContinuumError::Domain { name, value })
    }
}

/// Normalized single-particle level density `w(ε)` on `[0, 1]`.
///
/// Every observable is a weighted average `∫ w h`. The provided methods
/// evaluate those averages by quadrature; implementors with closed forms
/// override them.
pub trait LevelDensity: Sync {
    fn weight(&self, epsilon: f64) -> f64;

    fn average(&self, h: &dyn Fn(f64) -> f64) -> Result<f64> {
        Ok(integrate_unit_sqrt(|e| self.weight(e) * h(e), DEFAULT_TOL)?)
    }

    fn mean_energy(&self) -> Result<f64> {
        self.average(&|e| e)
    }

    /// `f(b) = ∫ w (1 − √(ε/(ε+b)))`.
    fn f(&self, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Ok(0.0);
        }
        self.average(&|e| b / ((e + b).sqrt() * ((e + b).sqrt() + e.sqrt())))
    }

    fn f_prime(&self, b: f64) -> Result<f64> {
        self.average(&|e| 0.5 * e.sqrt() * (e + b).powf(-1.5))
    }

    /// `∫ w √(ε(ε+b))`.
    fn phonon_sum(&self, b: f64) -> Result<f64> {
        self.average(&|e| (e * (e + b)).sqrt())
    }

    /// Depletion per level, `∫ w ((ε + b/2)/√(ε(ε+b)) − 1)`.
    fn depletion_per_level(&self, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Ok(0.0);
        }
        // (ε + b/2)/√(ε(ε+b)) − 1 written without cancellation
        self.average(&|e| {
            let r = (e * (e + b)).sqrt();
            let num = e + 0.5 * b;
            0.25 * b * b / (r * (num + r))
        })
    }

    /// `(∫ w/R, ∫ w (ε+μ)/R, ∫ w R)` with `R = √((ε+μ)² − Δ²)`.
    fn strong_integrals(&self, mu: f64, delta: f64) -> Result<[f64; 3]> {
        let r = |e: f64| ((e + mu - delta) * (e + mu + delta)).sqrt();
        Ok([
            self.average(&|e| 1.0 / r(e))?,
            self.average(&|e| (e + mu) / r(e))?,
            self.average(&|e| r(e))?,
        ])
    }

    /// `∫ w R`, which stays finite at `μ = Δ`.
    fn strong_sqrt_sum(&self, mu: f64, delta: f64) -> Result<f64> {
        self.average(&|e| ((e + mu - delta) * (e + mu + delta)).sqrt())
    }

    /// Jacobian of `(∫ w/R, ∫ w (ε+μ)/R)` in `(μ, Δ)`, rows by function.
    fn strong_jacobian(&self, mu: f64, delta: f64) -> Result<[[f64; 2]; 2]> {
        let r3 = |e: f64| ((e + mu - delta) * (e + mu + delta)).powf(1.5);
        let p = self.average(&|e| 1.0 / r3(e))?;
        let q = self.average(&|e| (e + mu) / r3(e))?;
        Ok([[-q, delta * p], [-delta * delta * p, delta * q]])
    }
}

/// Uniform density, the continuum of equally spaced levels `ε_α = α/L`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EqualSpacing;

/// `w(ε) = (p+1) ε^p`, e.g. `p = 1/2` for free particles in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    exponent: f64,
}

impl PowerLaw {
    pub fn new(exponent: f64) -> Result<Self> {
        if exponent > -0.5 && exponent.is_finite() {
            Ok(PowerLaw { exponent })
        } else {
            Err(ContinuumError::Domain {
                name: "exponent",
                value: exponent,
            })
        }
    }
}

impl LevelDensity for PowerLaw {
    fn weight(&self, epsilon: f64) -> f64 {
        (self.exponent + 1.0) * epsilon.powf(self.exponent)
    }
}

/// `∫_lo^hi √(y² − Δ²) dy`.
fn sqrt_antiderivative(y: f64, delta: f64) -> f64 {
    let s = ((y - delta) * (y + delta)).max(0.0).sqrt();
    let log = if delta == 0.0 { 0.0 } else { (y + s).ln() };
    0.5 * y * s - 0.5 * delta * delta * log
}

impl LevelDensity for EqualSpacing {
    fn weight(&self, _epsilon: f64) -> f64 {
        1.0
    }

    fn mean_energy(&self) -> Result<f64> {
        Ok(0.5)
    }

    fn f(&self, b: f64) -> Result<f64> {
        f_equal_spacing(b)
    }

    fn f_prime(&self, b: f64) -> Result<f64> {
        let b = positive("b", b)?;
        let s = (1.0 + b).sqrt();
        Ok(((1.0 + s) / b.sqrt()).ln() - 1.0 / s)
    }

    fn phonon_sum(&self, b: f64) -> Result<f64> {
        if b < 0.0 {
            return Err(ContinuumError::Domain { name: "b", value: b });
        }
        if b == 0.0 {
            return Ok(0.5);
        }
        let s = (1.0 + b).sqrt();
        Ok(0.25 * (2.0 + b) * s - 0.125 * b * b * ((2.0 + b + 2.0 * s) / b).ln())
    }

    fn depletion_per_level(&self, b: f64) -> Result<f64> {
        if b < 0.0 {
            return Err(ContinuumError::Domain { name: "b", value: b });
        }
        Ok(b / ((1.0 + b).sqrt() + 1.0))
    }

    fn strong_integrals(&self, mu: f64, delta: f64) -> Result<[f64; 3]> {
        let (g0, g1) = strong_roots(mu, delta)?;
        Ok([
            ((1.0 + mu + g1) / (mu + g0)).ln(),
            g1 - g0,
            sqrt_antiderivative(1.0 + mu, delta) - sqrt_antiderivative(mu, delta),
        ])
    }

    fn strong_sqrt_sum(&self, mu: f64, delta: f64) -> Result<f64> {
        if !(delta >= 0.0 && mu >= delta) {
            return Err(ContinuumError::Domain { name: "mu - delta", value: mu - delta });
        }
        Ok(sqrt_antiderivative(1.0 + mu, delta) - sqrt_antiderivative(mu, delta))
    }

    fn strong_jacobian(&self, mu: f64, delta: f64) -> Result<[[f64; 2]; 2]> {
        let (g0, g1) = strong_roots(mu, delta)?;
        Ok([
            [
                1.0 / g1 - 1.0 / g0,
                -delta / (g1 * (1.0 + mu + g1)) + delta / (g0 * (mu + g0)),
            ],
            [(1.0 + mu) / g1 - mu / g0, -delta / g1 + delta / g0],
        ])
    }
}

/// `(√(μ²−Δ²), √((1+μ)²−Δ²))`, requiring `μ > Δ ≥ 0`.
fn strong_roots(mu: f64, delta: f64) -> Result<(f64, f64)> {
    if !(delta >= 0.0 && mu > delta) {
        return Err(ContinuumError::Domain { name: "mu - delta", value: mu - delta });
    }
    Ok((
        ((mu - delta) * (mu + delta)).sqrt(),
        ((1.0 + mu - delta) * (1.0 + mu + delta)).sqrt(),
    ))
}

/// `f(b) = b ln((1+√(1+b))/√b) + 1 − √(1+b)`, rising from 0 to 1.
pub fn f_equal_spacing(b: f64) -> Result<f64> {
    if b < 0.0 || b.is_nan() {
        return Err(ContinuumError::Domain { name: "b", value: b });
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    if b > 1e4 {
        // large-b series, free of the cancellation in the closed form
        let r = b.sqrt().recip();
        let x = r * r;
        let tail = 2.0 / 3.0 - x * (1.0 / 5.0 - x * (3.0 / 28.0 - x * (5.0 / 72.0 - x * 35.0 / 704.0)));
        return Ok(1.0 - r * tail);
    }
    let s = (1.0 + b).sqrt();
    Ok(b * ((1.0 + s) / b.sqrt()).ln() + 1.0 - s)
}

/// Root of `b = g (f(b) + ρ)` for the uniform density.
pub fn solve_b(g_bare: f64, rho: f64) -> Result<f64> {
    solve_b_with(&EqualSpacing, g_bare, rho)
}

pub const B_TOL: f64 = 1e-12;

/// Root of `b = g (f(b) + ρ)`, bracketed by `f ∈ (0, 1)`.
pub fn solve_b_with<D: LevelDensity + ?Sized>(density: &D, g_bare: f64, rho: f64) -> Result<f64> {
    let g = positive("g", g_bare)?;
    let rho = positive("rho", rho)?;
    let phi = |b: f64| -> Result<f64> { Ok(b - g * (density.f(b)? + rho)) };
    let (mut lo, mut hi) = (g * rho, g * (rho + 1.0));
    let mut b = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = phi(b)?;
        if r.abs() <= B_TOL {
            return Ok(b);
        }
        if r < 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let slope = 1.0 - g * density.f_prime(b)?;
        let newton = b - r / slope;
        b = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            let r = phi(b)?;
            if r.abs() <= B_TOL.max(8.0 * f64::EPSILON * b) {
                return Ok(b);
            }
            return Err(ContinuumError::RootSearch { residual: r.abs() });
        }
    }
    Err(ContinuumError::RootSearch {
        residual: phi(b)?.abs(),
    })
}

/// Phonon dispersion `√(ε(ε+b))`.
pub fn phonon_energy(epsilon: f64, b: f64) -> f64 {
    (epsilon * (epsilon + b)).sqrt()
}

/// Mean boson number on a non-condensate level, `(ε+b/2)/√(ε(ε+b)) − 1`.
pub fn occupation_weak(epsilon: f64, b: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(ContinuumError::Domain {
            name: "epsilon",
            value: epsilon,
        });
    }
    if b < 0.0 {
        return Err(ContinuumError::Domain { name: "b", value: b });
    }
    let r = phonon_energy(epsilon, b);
    let num = epsilon + 0.5 * b;
    Ok(0.25 * b * b / (r * (num + r)))
}

/// Bosons outside the condensate, `N′ = L(√(1+b) − 1)`.
pub fn depletion(b: f64, levels: f64) -> Result<f64> {
    Ok(levels * EqualSpacing.depletion_per_level(b)?)
}

/// Weak-branch energy per level for the uniform density.
pub fn weak_energy(g_bare: f64, rho: f64, b: f64) -> Result<f64> {
    weak_energy_with(&EqualSpacing, g_bare, rho, b)
}

/// `E/L = −∫wε + ∫w√(ε(ε+b)) − (b/2)(ρ+1) + b²/(4g)`.
pub fn weak_energy_with<D: LevelDensity + ?Sized>(
    density: &D,
    g_bare: f64,
    rho: f64,
    b: f64,
) -> Result<f64> {
    let g = positive("g", g_bare)?;
    Ok(-density.mean_energy()? + density.phonon_sum(b)? - 0.5 * b * (rho + 1.0) + b * b / (4.0 * g))
}

/// `g_c(ρ) = 2 / ln(1 + 2/ρ)`.
pub fn critical_coupling(rho: f64) -> Result<f64> {
    let rho = positive("rho", rho)?;
    Ok(2.0 / (2.0 / rho).ln_1p())
}

/// Critical coupling for a general density: the `g` at which the weak-branch
/// depletion reaches `ρ`.
pub fn critical_coupling_with<D: LevelDensity + ?Sized>(density: &D, rho: f64) -> Result<f64> {
    let rho = positive("rho", rho)?;
    let excess = |b: f64| -> Result<f64> { Ok(density.depletion_per_level(b)? - rho) };
    let mut hi = rho.max(1.0);
    while excess(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(ContinuumError::RootSearch { residual: excess(hi)?.abs() });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    Ok(b / (density.f(b)? + rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongClosedForm {
    pub c: f64,
    pub mu: f64,
    pub delta: f64,
    pub gap: f64,
}

/// Closed-form strong branch for the uniform density.
pub fn strong_closed_form(g_bare: f64, rho: f64) -> Result<StrongClosedForm> {
    let g = positive("g", g_bare)?;
    let g_c = critical_coupling(rho)?;
    if g <= g_c {
        return Err(ContinuumError::NoSolution { g, g_c });
    }
    let c = (2.0 + rho) / (2.0 / g).exp_m1();
    let gap = (2.0 * c - rho * (rho + 2.0)) / (2.0 * (rho + 2.0));
    if !(gap > 0.0) {
        return Err(ContinuumError::NoSolution { g, g_c });
    }
    let delta = (c * (c - 2.0 * gap)).sqrt();
    let mu = (c * c + delta * delta) / (2.0 * c);
    Ok(StrongClosedForm { c, mu, delta, gap })
}

pub const GAP_TOL: f64 = 1e-10;

/// Residuals of the two gap equations, `∫w/R − 2/g` and `∫w(ε+μ)/R − (ρ+1)`.
pub fn gap_residuals<D: LevelDensity + ?Sized>(
    density: &D,
    mu: f64,
    delta: f64,
    g_bare: f64,
    rho: f64,
) -> Result<[f64; 2]> {
    let [i0, i1, _] = density.strong_integrals(mu, delta)?;
    Ok([i0 - 2.0 / g_bare, i1 - (rho + 1.0)])
}

/// Strong-branch `(μ, Δ)` for the uniform density.
pub fn solve_gap_equations(g_bare: f64, rho: f64) -> Result<(f64, f64)> {
    solve_gap_equations_with(&EqualSpacing, g_bare, rho)
}

/// Damped Newton on the gap equations, seeded by the uniform closed form.
pub fn solve_gap_equations_with<D: LevelDensity + ?Sized>(
    density: &D,
    g_bare: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    let g = positive("g", g_bare)?;
    let rho = positive("rho", rho)?;
    let g_c = critical_coupling_with(density, rho)?;
    if g <= g_c {
        return Err(ContinuumError::NoSolution { g, g_c });
    }
    let seed = strong_closed_form(g.max(critical_coupling(rho)? * (1.0 + 1e-6)), rho)?;
    let (mut mu, mut delta) = (seed.mu, seed.delta);
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut r = gap_residuals(density, mu, delta, g, rho)?;
    const MAX_ITER: usize = 100;
    for _ in 0..MAX_ITER {
        if norm(r) <= GAP_TOL {
            return Ok((mu, delta));
        }
        let j = density.strong_jacobian(mu, delta)?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dmu = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let ddelta = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (m, d) = (mu + lambda * dmu, (delta + lambda * ddelta).abs());
            if let Ok(rn) = gap_residuals(density, m, d, g, rho) {
                if norm(rn) < norm(r) {
                    mu = m;
                    delta = d;
                    r = rn;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm(r) <= GAP_TOL {
        return Ok((mu, delta));
    }
    Err(ContinuumError::NewtonDiverged {
        iterations: MAX_ITER,
        residual: norm(r),
    })
}

/// Strong-branch energy per level for the uniform density.
pub fn strong_energy(mu: f64, delta: f64, g_bare: f64, rho: f64) -> Result<f64> {
    strong_energy_with(&EqualSpacing, mu, delta, g_bare, rho)
}

/// `E/L = −∫wε + ∫w√((ε+μ)²−Δ²) − (ρ+1)μ + Δ²/g`.
pub fn strong_energy_with<D: LevelDensity + ?Sized>(
    density: &D,
    mu: f64,
    delta: f64,
    g_bare: f64,
    rho: f64,
) -> Result<f64> {
    let g = positive("g", g_bare)?;
    let sqrt_sum = density.strong_sqrt_sum(mu, delta)?;
    Ok(-density.mean_energy()? + sqrt_sum - (rho + 1.0) * mu + delta * delta / g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Weak,
    Strong,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Weak => "weak",
            Phase::Strong => "strong",
        }
    }
}

/// Strong iff `g > g_c(ρ)`; the boundary belongs to the weak branch.
pub fn classify_phase(g_bare: f64, rho: f64) -> Result<Phase> {
    classify_phase_with(&EqualSpacing, g_bare, rho)
}

pub fn classify_phase_with<D: LevelDensity + ?Sized>(density: &D, g_bare: f64, rho: f64) -> Result<Phase> {
    let g = positive("g", g_bare)?;
    let g_c = match density_is_uniform(density) {
        true => critical_coupling(rho)?,
        false => critical_coupling_with(density, rho)?,
    };
    Ok(if g > g_c { Phase::Strong } else { Phase::Weak })
}

fn density_is_uniform<D: LevelDensity + ?Sized>(density: &D) -> bool {
    density.weight(0.1) == 1.0 && density.weight(0.7) == 1.0 && density.weight(0.999) == 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchParams {
    Weak { b: f64 },
    Strong { mu: f64, delta: f64 },
}

/// Thermodynamic-limit ground state at one `(g, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumSolution {
    pub g_bare: f64,
    pub rho: f64,
    pub params: BranchParams,
    pub energy_per_level: f64,
    pub gap: f64,
    /// `N′/N_b`.
    pub depletion_fraction: f64,
    /// `N₀/N_b`, zero on the strong branch.
    pub condensate_fraction: f64,
}

impl ContinuumSolution {
    pub fn phase(&self) -> Phase {
        match self.params {
            BranchParams::Weak { .. } => Phase::Weak,
            BranchParams::Strong { .. } => Phase::Strong,
        }
    }

    pub fn b(&self) -> Option<f64> {
        match self.params {
            BranchParams::Weak { b } => Some(b),
            BranchParams::Strong { .. } => None,
        }
    }

    /// `(μ, Δ)`; on the weak branch both equal `b/2`.
    pub fn mu_delta(&self) -> (f64, f64) {
        match self.params {
            BranchParams::Weak { b } => (0.5 * b, 0.5 * b),
            BranchParams::Strong { mu, delta } => (mu, delta),
        }
    }

    /// A weak-branch `b` below ten level spacings is dominated by finite-size
    /// effects at `L` levels.
    pub fn finite_size_suspect(&self, levels: usize) -> bool {
        match self.params {
            BranchParams::Weak { b } => b < 10.0 / levels as f64,
            BranchParams::Strong { .. } => false,
        }
    }
}

pub fn solve_continuum(g_bare: f64, rho: f64) -> Result<ContinuumSolution> {
    solve_continuum_with(&EqualSpacing, g_bare, rho)
}

pub fn solve_continuum_with<D: LevelDensity + ?Sized>(
    density: &D,
    g_bare: f64,
    rho: f64,
) -> Result<ContinuumSolution> {
    match classify_phase_with(density, g_bare, rho)? {
        Phase::Weak => {
            let b = solve_b_with(density, g_bare, rho)?;
            let depleted = (density.depletion_per_level(b)? / rho).min(1.0);
            Ok(ContinuumSolution {
                g_bare,
                rho,
                params: BranchParams::Weak { b },
                energy_per_level: weak_energy_with(density, g_bare, rho, b)?,
                gap: 0.0,
                depletion_fraction: depleted,
                condensate_fraction: 1.0 - depleted,
            })
        }
        Phase::Strong => {
            let (mu, delta) = solve_gap_equations_with(density, g_bare, rho)?;
            Ok(ContinuumSolution {
                g_bare,
                rho,
                params: BranchParams::Strong { mu, delta },
                energy_per_level: strong_energy_with(density, mu, delta, g_bare, rho)?,
                gap: ((mu - delta) * (mu + delta)).sqrt(),
                depletion_fraction: 1.0,
                condensate_fraction: 0.0,
            })
        }
    }
}

/// How the depletion integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Adaptive,
    /// Midpoint rule with `n` nodes in `u = √ε`.
    Midpoint(usize),
}

/// `|N′(b) − N_b| / N_b` at `g = g_c(ρ)` for the uniform density.
///
/// Both sides scale with `L`, so the ratio is size-independent; only the
/// quadrature resolution matters.
pub fn consistency_depletion_at_gc(rho: f64, rule: QuadratureRule) -> Result<f64> {
    let g_c = critical_coupling(rho)?;
    let b = solve_b(g_c, rho)?;
    let integrand = |u: f64| {
        let e = u * u;
        let r = (e * (e + b)).sqrt();
        let num = e + 0.5 * b;
        // 2u · ((ε + b/2)/√(ε(ε+b)) − 1), with the u cancelled analytically
        2.0 * 0.25 * b * b / ((e + b).sqrt() * (num + r))
    };
    let per_level = match rule {
        QuadratureRule::Adaptive => crate::quad::integrate(integrand, 0.0, 1.0, DEFAULT_TOL)?,
        QuadratureRule::Midpoint(n) => {
            let n = n.max(1);
            let h = 1.0 / n as f64;
            (0..n).map(|k| integrand((k as f64 + 0.5) * h)).sum::<f64>() * h
        }
    };
    Ok((per_level - rho).abs() / rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_values() {
        assert_eq!(f_equal_spacing(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(f_equal_spacing(3.0).unwrap(), 0.647918, epsilon = 5e-7);
        assert!((f_equal_spacing(1e9).unwrap() - 1.0).abs() < 1e-4);
        assert!(f_equal_spacing(-1.0).is_err());
    }

    #[test]
    fn f_series_branch_continuous() {
        let below = f_equal_spacing(1e4 * (1.0 - 1e-12)).unwrap();
        let above = f_equal_spacing(1e4 * (1.0 + 1e-12)).unwrap();
        assert_abs_diff_eq!(below, above, epsilon = 1e-11);
    }

    #[test]
    fn closed_forms_match_generic_quadrature() {
        let generic = PowerLaw::new(0.0).unwrap();
        for b in [0.01, 0.3, 3.0, 40.0] {
            assert_abs_diff_eq!(EqualSpacing.f(b).unwrap(), generic.f(b).unwrap(), epsilon = 1e-11);
            assert_abs_diff_eq!(EqualSpacing.f_prime(b).unwrap(), generic.f_prime(b).unwrap(), epsilon = 1e-9);
            assert_abs_diff_eq!(EqualSpacing.phonon_sum(b).unwrap(), generic.phonon_sum(b).unwrap(), epsilon = 1e-11);
            assert_abs_diff_eq!(
                EqualSpacing.depletion_per_level(b).unwrap(),
                generic.depletion_per_level(b).unwrap(),
                epsilon = 1e-11
            );
        }
        for (mu, delta) in [(2.61, 2.55), (0.5, 0.1), (1.0, 0.0)] {
            let a = EqualSpacing.strong_integrals(mu, delta).unwrap();
            let b = generic.strong_integrals(mu, delta).unwrap();
            for k in 0..3 {
                assert_abs_diff_eq!(a[k], b[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn strong_jacobian_matches_generic() {
        let generic = PowerLaw::new(0.0).unwrap();
        let a = EqualSpacing.strong_jacobian(2.61, 2.55).unwrap();
        let b = generic.strong_jacobian(2.61, 2.55).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(a[i][j], b[i][j], epsilon = 1e-7 * a[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn solve_b_limits() {
        let b = solve_b(1e-6, 1.0).unwrap();
        assert!((b - 1e-6).abs() / 1e-6 < 1e-2);
        let b = solve_b(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(b, 0.1 * (f_equal_spacing(b).unwrap() + 1.0), epsilon = 1e-12);
        assert!(b > 0.1 && b < 0.2);
    }

    #[test]
    fn phonon_and_occupation() {
        assert_eq!(phonon_energy(0.0, 1.0), 0.0);
        assert_abs_diff_eq!(phonon_energy(0.5, 1.0), 0.75f64.sqrt(), epsilon = 1e-15);
        assert_eq!(phonon_energy(0.3, 0.0), 0.3);
        assert_abs_diff_eq!(occupation_weak(0.5, 1.0).unwrap(), 1.0 / 0.75f64.sqrt() - 1.0, epsilon = 1e-14);
        assert_eq!(occupation_weak(0.5, 0.0).unwrap(), 0.0);
        assert!(occupation_weak(1e8, 1.0).unwrap() < 1e-15);
        assert!(occupation_weak(0.0, 1.0).is_err());
    }

    #[test]
    fn depletion_values() {
        assert_eq!(depletion(0.0, 100.0).unwrap(), 0.0);
        assert_abs_diff_eq!(depletion(0.21, 100.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(depletion(3.0, 100.0).unwrap(), 100.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_energy_limits() {
        assert_abs_diff_eq!(weak_energy(1.0, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let b = solve_b(1e-4, 1.0).unwrap();
        assert!(weak_energy(1e-4, 1.0, b).unwrap().abs() < 1e-3);
    }

    #[test]
    fn critical_coupling_values() {
        assert_abs_diff_eq!(critical_coupling(1.0).unwrap(), 1.820478, epsilon = 1e-6);
        assert_abs_diff_eq!(critical_coupling(2.0).unwrap(), 2.885390, epsilon = 1e-6);
        assert!(critical_coupling(1e-8).unwrap() < 0.2);
        for rho in [0.5, 1.0, 2.0] {
            assert_abs_diff_eq!(
                critical_coupling_with(&PowerLaw::new(0.0).unwrap(), rho).unwrap(),
                critical_coupling(rho).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn strong_closed_form_values() {
        let s = strong_closed_form(3.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.c, 3.165445, epsilon = 1e-6);
        assert_abs_diff_eq!(s.gap, 0.555148, epsilon = 1e-6);
        assert_abs_diff_eq!(s.delta, 2.550578, epsilon = 1e-5);
        assert_abs_diff_eq!(s.mu, 2.610294, epsilon = 1e-5);
        assert_abs_diff_eq!(s.mu * s.mu - s.delta * s.delta, s.gap * s.gap, epsilon = 1e-10);
        assert!(strong_closed_form(1.0, 1.0).is_err());
    }

    #[test]
    fn gap_newton_matches_closed_form() {
        for g in [1.9, 3.0, 10.0] {
            let (mu, delta) = solve_gap_equations(g, 1.0).unwrap();
            let s = strong_closed_form(g, 1.0).unwrap();
            assert_abs_diff_eq!(mu, s.mu, epsilon = 1e-8);
            assert_abs_diff_eq!(delta, s.delta, epsilon = 1e-8);
        }
        assert!(matches!(solve_gap_equations(1.0, 1.0), Err(ContinuumError::NoSolution { .. })));
    }

    #[test]
    fn strong_energy_is_stationary() {
        let (mu, delta) = solve_gap_equations(3.0, 1.0).unwrap();
        let h = 1e-5;
        let e = |m: f64, d: f64| strong_energy(m, d, 3.0, 1.0).unwrap();
        let dmu = (e(mu + h, delta) - e(mu - h, delta)) / (2.0 * h);
        let ddelta = (e(mu, delta + h) - e(mu, delta - h)) / (2.0 * h);
        assert!(dmu.abs() < 1e-7 && ddelta.abs() < 1e-7);
    }

    #[test]
    fn phases() {
        assert_eq!(classify_phase(1.0, 1.0).unwrap(), Phase::Weak);
        assert_eq!(classify_phase(3.0, 1.0).unwrap(), Phase::Strong);
        let g_c = critical_coupling(1.0).unwrap();
        assert_eq!(classify_phase(g_c, 1.0).unwrap(), Phase::Weak);
        let at = solve_continuum(g_c, 1.0).unwrap();
        assert!(at.condensate_fraction < 1e-9);
        assert_eq!(at.gap, 0.0);
    }

    #[test]
    fn branches_meet_at_critical_coupling() {
        let rho = 1.0;
        let g_c = critical_coupling(rho).unwrap();
        let b = solve_b(g_c, rho).unwrap();
        assert_abs_diff_eq!(b, rho * (rho + 2.0), epsilon = 1e-10);
        let weak = weak_energy(g_c, rho, b).unwrap();
        let strong = strong_energy(0.5 * b, 0.5 * b, g_c, rho).unwrap();
        assert_abs_diff_eq!(weak, strong, epsilon = 1e-12);
    }

    #[test]
    fn depletion_consistency_rules() {
        for rho in [1.0, 2.0] {
            assert!(consistency_depletion_at_gc(rho, QuadratureRule::Adaptive).unwrap() <= 1e-6);
        }
        assert!(consistency_depletion_at_gc(1.0, QuadratureRule::Midpoint(100)).unwrap() <= 1e-2);
    }

    #[test]
    fn power_law_density_runs() {
        let d = PowerLaw::new(0.5).unwrap();
        let weak = solve_continuum_with(&d, 0.5, 1.0).unwrap();
        assert_eq!(weak.phase(), Phase::Weak);
        let g_c = critical_coupling_with(&d, 1.0).unwrap();
        let strong = solve_continuum_with(&d, 1.5 * g_c, 1.0).unwrap();
        assert_eq!(strong.phase(), Phase::Strong);
        let (mu, delta) = strong.mu_delta();
        let r = gap_residuals(&d, mu, delta, 1.5 * g_c, 1.0).unwrap();
        assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
    }
}
