//! Cross-checks between the independent solvers, each reduced to one number
//! compared against a threshold.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::continuum::{
    consistency_depletion_at_gc, critical_coupling, solve_b, solve_gap_equations, strong_closed_form,
    strong_energy, weak_energy, QuadratureRule,
};
use crate::fock::{build_hamiltonian, diagonalize, PairBasis};
use crate::integrability::{build_charge, build_two_parameter_hamiltonian, commutator_norm, shared_eigenbasis_check};
use crate::model::{equal_spacing_spectrum, Level, LevelSpectrum, PairSector};
use crate::richardson::{ground_label, solve_state, InitOptions, StepControl};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Replaces every threshold when set.
    pub tolerance: Option<f64>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tolerance: None,
            seed: 42,
        }
    }
}

type Check = fn(&VerifyOptions) -> Result<f64, Error>;

const CHECKS: [(&str, f64, Check); 8] = [
    ("closed_form_two_level", 1e-10, closed_form_two_level),
    ("richardson_vs_oracle", 1e-8, richardson_vs_oracle),
    ("exhaustive_labels", 1e-8, exhaustive_labels),
    ("charges_commute", 1e-10, charges_commute),
    ("shared_eigenbasis", 1e-8, shared_eigenbasis),
    ("branch_matching", 1e-10, branch_matching),
    ("depletion_at_critical_coupling", 1e-6, depletion_at_critical_coupling),
    ("strong_closed_form_vs_newton", 1e-8, strong_closed_form_vs_newton),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check; a check that errors is reported as an infinite value.
pub fn run_checks(options: &VerifyOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, threshold, check)| CheckResult {
            name,
            value: check(options).unwrap_or(f64::INFINITY),
            threshold: options.tolerance.unwrap_or(threshold),
        })
        .collect()
}

fn closed_form_two_level(_: &VerifyOptions) -> Result<f64, Error> {
    let s = LevelSpectrum::new(vec![Level::new(0.0, 1, 0), Level::new(1.0, 1, 0)])?;
    let sec = PairSector::new(&s, 1);
    let exact = -std::f64::consts::SQRT_2;
    let oracle = diagonalize(&build_hamiltonian(&s, &sec, 1.0)?)?.values[0];
    let sweep = solve_state(&s, &sec, &[1, 0], &[1.0], InitOptions::default(), StepControl::default())?;
    Ok((oracle - exact).abs().max((sweep.energies[0] - exact).abs()))
}

fn richardson_vs_oracle(options: &VerifyOptions) -> Result<f64, Error> {
    let s = equal_spacing_spectrum(4)?;
    let sec = PairSector::new(&s, 2);
    let g: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64 / 4.0).collect();
    let init = InitOptions {
        seed: options.seed,
        ..InitOptions::default()
    };
    let sweep = solve_state(&s, &sec, &ground_label(&s, &sec), &g, init, StepControl::default())?;
    let mut worst = 0.0f64;
    for (ge, e) in g.iter().zip(&sweep.energies) {
        let exact = diagonalize(&build_hamiltonian(&s, &sec, *ge)?)?.values[0];
        worst = worst.max((e - exact).abs());
    }
    Ok(worst)
}

fn exhaustive_labels(options: &VerifyOptions) -> Result<f64, Error> {
    let s = equal_spacing_spectrum(3)?;
    let sec = PairSector::new(&s, 2);
    let g = 0.5;
    let init = InitOptions {
        seed: options.seed,
        ..InitOptions::default()
    };
    let mut energies = Vec::new();
    for label in PairBasis::new(3, 2, 100)?.states() {
        energies.push(solve_state(&s, &sec, label, &[g], init, StepControl::default())?.energies[0]);
    }
    energies.sort_by(f64::total_cmp);
    let exact = diagonalize(&build_hamiltonian(&s, &sec, g)?)?.values;
    Ok(energies
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn random_draws(seed: u64, levels: usize, draws: usize) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..draws)
        .map(|_| {
            let xi = (0..levels).map(|k| k as f64 + rng.gen_range(0.1..0.9)).collect();
            (xi, rng.gen_range(0.2..2.0))
        })
        .collect()
}

fn charges_for(xi: &[f64], g: f64) -> Result<(Vec<Level>, Vec<DMatrix<f64>>), Error> {
    let levels = equal_spacing_spectrum(xi.len())?.levels().to_vec();
    let charges = (0..xi.len())
        .map(|i| build_charge(i, &levels, xi, g, 2).map(|c| c.matrix))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((levels, charges))
}

fn charges_commute(options: &VerifyOptions) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for (xi, g) in random_draws(options.seed, 4, 3) {
        let (_, charges) = charges_for(&xi, g)?;
        for a in &charges {
            for b in &charges {
                worst = worst.max(commutator_norm(a, b)? / (a.norm() * b.norm()));
            }
        }
    }
    Ok(worst)
}

fn shared_eigenbasis(options: &VerifyOptions) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for (xi, g) in random_draws(options.seed, 4, 3) {
        let (levels, charges) = charges_for(&xi, g)?;
        let h = build_two_parameter_hamiltonian(&levels, &xi, g, 2)?;
        worst = worst.max(shared_eigenbasis_check(&h, &charges)?);
    }
    Ok(worst)
}

fn branch_matching(_: &VerifyOptions) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for rho in [0.5, 1.0, 2.0] {
        let g_c = critical_coupling(rho)?;
        let b = solve_b(g_c, rho)?;
        let weak = weak_energy(g_c, rho, b)?;
        let strong = strong_energy(0.5 * b, 0.5 * b, g_c, rho)?;
        worst = worst
            .max((weak - strong).abs())
            .max((b - rho * (rho + 2.0)).abs() / b);
    }
    Ok(worst)
}

fn depletion_at_critical_coupling(_: &VerifyOptions) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for rho in [0.5, 1.0, 2.0] {
        worst = worst.max(consistency_depletion_at_gc(rho, QuadratureRule::Adaptive)?);
    }
    Ok(worst)
}

fn strong_closed_form_vs_newton(_: &VerifyOptions) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for (g, rho) in [(3.0, 1.0), (1.9, 1.0), (5.0, 2.0)] {
        let c = strong_closed_form(g, rho)?;
        let (mu, delta) = solve_gap_equations(g, rho)?;
        worst = worst.max((mu - c.mu).abs()).max((delta - c.delta).abs());
    }
    Ok(worst)
}
