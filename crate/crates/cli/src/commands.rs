use std::io::Write;

use boson_pairing::continuum::{critical_coupling, solve_continuum, BranchParams};
use boson_pairing::fock::{
    basis_dimension, build_hamiltonian, diagonalize, occupations_exact, DEFAULT_BASIS_CAP,
};
use boson_pairing::meanfield::{solve_modified_mf, solve_naive_mf, MeanFieldError, MeanFieldOutcome, MeanFieldState};
use boson_pairing::richardson::{ground_label, solve_state, write_trajectory_csv, InitOptions, StepControl};
use boson_pairing::verify::{run_checks, VerifyOptions};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::{num, opt, OutputDir};
use crate::CliError;

/// Richardson energies must match the oracle this closely under `--verify`.
pub const VERIFY_TOL: f64 = 1e-8;

pub fn oracle(config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.load_spectrum()?;
    let sector = config.sector(&spectrum)?;
    let l = spectrum.len();
    let g_eff = config.effective_couplings(l);
    let g_bare = config.bare_couplings(l);
    let solved = g_eff
        .par_iter()
        .map(|&g| {
            let h = build_hamiltonian(&spectrum, &sector, g)?;
            let eig = diagonalize(&h)?;
            let occ = occupations_exact(&eig.ground_vector(), &h.basis, spectrum.levels());
            Ok((eig.values.as_slice().to_vec(), occ))
        })
        .collect::<Result<Vec<_>, boson_pairing::fock::FockError>>()
        .map_err(CliError::solver)?;

    let mut out = OutputDir::create(&config.out)?;
    out.write("oracle_eigenvalues.csv", |w| {
        writeln!(w, "g_bare,g_eff,index,energy")?;
        for ((gb, ge), (values, _)) in g_bare.iter().zip(&g_eff).zip(&solved) {
            for (i, e) in values.iter().enumerate() {
                writeln!(w, "{},{},{i},{}", num(*gb), num(*ge), num(*e))?;
            }
        }
        Ok(())
    })?;
    out.write("oracle_occupations.csv", |w| {
        writeln!(w, "g_bare,g_eff,level,epsilon,occupation")?;
        for ((gb, ge), (_, occ)) in g_bare.iter().zip(&g_eff).zip(&solved) {
            for (a, (n, lvl)) in occ.iter().zip(spectrum.levels()).enumerate() {
                writeln!(w, "{},{},{a},{},{}", num(*gb), num(*ge), num(lvl.epsilon), num(*n))?;
            }
        }
        Ok(())
    })?;
    out.manifest("oracle", config, &[("basis_dimension".into(), basis_dimension(l, sector.pairs()).to_string())])?;
    for (gb, (values, _)) in g_bare.iter().zip(&solved) {
        println!("g = {gb}: ground energy {:.12}", values[0]);
    }
    Ok(())
}

pub fn richardson(config: &RunConfig, verify: bool) -> Result<(), CliError> {
    let spectrum = config.load_spectrum()?;
    let sector = config.sector(&spectrum)?;
    let l = spectrum.len();
    let g_eff = config.effective_couplings(l);
    let g_bare = config.bare_couplings(l);
    let label = match &config.label {
        Some(label) => label.clone(),
        None => ground_label(&spectrum, &sector),
    };
    let init = InitOptions {
        seed: config.seed,
        ..InitOptions::default()
    };
    let control = StepControl {
        tol: config.tol,
        ..StepControl::default()
    };
    let sweep = solve_state(&spectrum, &sector, &label, &g_eff, init, control).map_err(CliError::solver)?;

    let check = if verify {
        if basis_dimension(l, sector.pairs()) > DEFAULT_BASIS_CAP as u128 {
            println!("verify skipped: basis dimension exceeds {DEFAULT_BASIS_CAP}");
            None
        } else {
            let diffs = g_eff
                .par_iter()
                .zip(&sweep.energies)
                .map(|(&g, &e)| {
                    let eig = diagonalize(&build_hamiltonian(&spectrum, &sector, g)?)?;
                    Ok(eig.values.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min))
                })
                .collect::<Result<Vec<f64>, boson_pairing::fock::FockError>>()
                .map_err(CliError::solver)?;
            Some(diffs.into_iter().fold(0.0, f64::max))
        }
    } else {
        None
    };

    let mut out = OutputDir::create(&config.out)?;
    out.write("richardson_roots.csv", |w| write_trajectory_csv(&sweep.trajectory, w))?;
    out.write("richardson_energy.csv", |w| {
        writeln!(w, "g_bare,g_eff,energy,residual")?;
        for ((gb, ge), (e, p)) in g_bare.iter().zip(&g_eff).zip(sweep.energies.iter().zip(&sweep.points)) {
            writeln!(w, "{},{},{},{}", num(*gb), num(*ge), num(*e), num(p.residual))?;
        }
        Ok(())
    })?;
    let label_text: Vec<String> = label.iter().map(u32::to_string).collect();
    let mut extra = vec![("state_label".to_string(), label_text.join(","))];
    if let Some(d) = check {
        extra.push(("verify_max_abs_diff".into(), format!("{d:e}")));
        extra.push(("verify_tol".into(), format!("{VERIFY_TOL:e}")));
    }
    out.manifest("richardson", config, &extra)?;
    if let (Some(gb), Some(e)) = (g_bare.last(), sweep.energies.last()) {
        println!("g = {gb}: energy {e:.12}");
    }
    if let Some(d) = check {
        println!("max |dE| against exact diagonalization: {d:.3e}");
        if d > VERIFY_TOL {
            return Err(CliError::Verification(format!(
                "richardson_vs_oracle: max |dE| {d:e} > {VERIFY_TOL:e}"
            )));
        }
    }
    Ok(())
}

pub fn continuum(config: &RunConfig) -> Result<(), CliError> {
    let grid: Vec<(f64, f64)> = config
        .rho
        .iter()
        .flat_map(|&rho| config.sweep.values().into_iter().map(move |g| (g, rho)))
        .collect();
    let solved = grid
        .par_iter()
        .map(|&(g, rho)| Ok((solve_continuum(g, rho)?, critical_coupling(rho)?)))
        .collect::<Result<Vec<_>, boson_pairing::continuum::ContinuumError>>()
        .map_err(CliError::solver)?;
    let mut out = OutputDir::create(&config.out)?;
    out.write("continuum.csv", |w| {
        writeln!(
            w,
            "g_bare,rho,g_c,branch,b,mu,delta,gap,energy_per_level,depletion_fraction,condensate_fraction"
        )?;
        for (s, g_c) in &solved {
            let (mu, delta) = s.mu_delta();
            let b = match s.params {
                BranchParams::Weak { b } => Some(b),
                BranchParams::Strong { .. } => None,
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                num(s.g_bare),
                num(s.rho),
                num(*g_c),
                s.phase().as_str(),
                opt(b),
                num(mu),
                num(delta),
                num(s.gap),
                num(s.energy_per_level),
                num(s.depletion_fraction),
                num(s.condensate_fraction)
            )?;
        }
        Ok(())
    })?;
    out.manifest("continuum", config, &[])?;
    for (s, _) in solved.iter().take(1).chain(solved.iter().skip(1).last()) {
        let (mu, delta) = s.mu_delta();
        println!(
            "g = {}, rho = {}: {} branch, mu {mu:.7}, delta {delta:.7}, E/L {:.9}",
            s.g_bare,
            s.rho,
            s.phase().as_str(),
            s.energy_per_level
        );
    }
    Ok(())
}

enum Modified {
    Solved(MeanFieldState),
    BeyondValidity,
}

pub fn meanfield(config: &RunConfig) -> Result<(), CliError> {
    let spectrum = config.load_spectrum()?;
    let l = spectrum.len();
    let n_bosons = match config.pairs {
        Some(m) => (2 * m) as f64 + spectrum.seniorities().iter().map(|&v| v as f64).sum::<f64>(),
        None => config.rho[0] * spectrum.levels().iter().map(|x| x.omega as f64).sum::<f64>(),
    };
    let g_eff = config.effective_couplings(l);
    let g_bare = config.bare_couplings(l);
    let solved = g_eff
        .par_iter()
        .map(|&g| {
            let naive = solve_naive_mf(&spectrum, n_bosons, g)?;
            let modified = match solve_modified_mf(&spectrum, n_bosons, g) {
                Ok(s) => Modified::Solved(s),
                Err(MeanFieldError::BeyondValidity { .. }) => Modified::BeyondValidity,
                Err(e) => return Err(e),
            };
            Ok((naive, modified))
        })
        .collect::<Result<Vec<_>, MeanFieldError>>()
        .map_err(CliError::solver)?;

    let row = |w: &mut dyn Write, gb: f64, ge: f64, scheme: &str, status: &str, s: Option<&MeanFieldState>| {
        writeln!(
            w,
            "{},{},{scheme},{status},{},{},{},{}",
            num(gb),
            num(ge),
            opt(s.map(|s| s.mu)),
            opt(s.map(|s| s.delta)),
            opt(s.map(|s| s.energy)),
            opt(s.and_then(|s| s.condensate)),
        )
    };
    let mut out = OutputDir::create(&config.out)?;
    out.write("meanfield.csv", |w| {
        writeln!(w, "g_bare,g_eff,scheme,status,mu,delta,energy,n0")?;
        for ((&gb, &ge), (naive, modified)) in g_bare.iter().zip(&g_eff).zip(&solved) {
            row(w, gb, ge, "naive", naive.status().as_str(), naive.state())?;
            match modified {
                Modified::Solved(s) => row(w, gb, ge, "modified", "solved", Some(s))?,
                Modified::BeyondValidity => row(w, gb, ge, "modified", "beyond_validity", None)?,
            }
        }
        Ok(())
    })?;
    out.manifest("meanfield", config, &[("n_bosons".into(), num(n_bosons))])?;
    for (gb, (naive, _)) in g_bare.iter().zip(&solved) {
        if let MeanFieldOutcome::NoStationaryPoint = naive {
            println!("g = {gb}: naive mean field has no stationary point");
        }
    }
    Ok(())
}

pub fn verify(config: &RunConfig) -> Result<(), CliError> {
    let options = VerifyOptions {
        tolerance: config.check_tol,
        seed: config.seed,
    };
    let results = run_checks(&options);
    let mut out = OutputDir::create(&config.out)?;
    out.write("verify.csv", |w| {
        writeln!(w, "check,value,threshold,passed")?;
        for r in &results {
            writeln!(w, "{},{},{},{}", r.name, num(r.value), num(r.threshold), r.passed())?;
        }
        Ok(())
    })?;
    out.manifest("verify", config, &[])?;
    println!("{:<34} {:>12} {:>12}  result", "check", "value", "threshold");
    for r in &results {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        println!("{:<34} {:>12.3e} {:>12.3e}  {verdict}", r.name, r.value, r.threshold);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}
