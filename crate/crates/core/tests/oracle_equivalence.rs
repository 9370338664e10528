use boson_pairing::fock::{build_hamiltonian, diagonalize, PairBasis};
use boson_pairing::model::{equal_spacing_spectrum, Level, LevelSpectrum, PairSector};
use boson_pairing::richardson::{ground_label, solve_state, InitOptions, StepControl};

fn oracle_values(s: &LevelSpectrum, sec: &PairSector, g: f64) -> Vec<f64> {
    diagonalize(&build_hamiltonian(s, sec, g).unwrap()).unwrap().values
}

#[test]
fn ground_energy_matches_oracle_along_sweep() {
    let s = equal_spacing_spectrum(4).unwrap();
    let sec = PairSector::new(&s, 2);
    let g_bare: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let g_eff: Vec<f64> = g_bare.iter().map(|g| g / 4.0).collect();
    let sweep = solve_state(&s, &sec, &ground_label(&s, &sec), &g_eff, InitOptions::default(), StepControl::default())
        .unwrap();
    for (g, e) in g_eff.iter().zip(&sweep.energies) {
        let exact = oracle_values(&s, &sec, *g)[0];
        assert!((e - exact).abs() <= 1e-8, "g_eff={g}: {e} vs {exact}");
    }
}

fn all_label_energies(s: &LevelSpectrum, sec: &PairSector, g: f64) -> Vec<f64> {
    let basis = PairBasis::new(s.len(), sec.pairs(), 10_000).unwrap();
    let mut energies: Vec<f64> = basis
        .states()
        .iter()
        .map(|label| {
            solve_state(s, sec, label, &[g], InitOptions::default(), StepControl::default())
                .unwrap()
                .energies[0]
        })
        .collect();
    energies.sort_by(f64::total_cmp);
    energies
}

#[test]
fn every_label_reproduces_full_spectrum() {
    let s = equal_spacing_spectrum(3).unwrap();
    let sec = PairSector::new(&s, 2);
    for g in [0.1, 0.4, 1.0] {
        let from_roots = all_label_energies(&s, &sec, g);
        let exact = oracle_values(&s, &sec, g);
        assert_eq!(from_roots.len(), exact.len());
        for (a, b) in from_roots.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-8, "g={g}: {a} vs {b}");
        }
    }
}

#[test]
fn degenerate_and_seniority_levels() {
    let s = LevelSpectrum::new(vec![
        Level::new(0.0, 2, 1),
        Level::new(0.3, 1, 1),
        Level::new(0.7, 3, 0),
        Level::new(1.0, 1, 0),
    ])
    .unwrap();
    let sec = PairSector::new(&s, 3);
    for g in [0.05, 0.3, 0.9] {
        let from_roots = all_label_energies(&s, &sec, g);
        let exact = oracle_values(&s, &sec, g);
        for (a, b) in from_roots.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-8, "g={g}: {a} vs {b}");
        }
    }
}

#[test]
fn ground_roots_real_and_below_lowest_level() {
    let s = equal_spacing_spectrum(12).unwrap();
    let sec = PairSector::new(&s, 6);
    let gs = [0.02, 0.1, 0.3];
    let sweep = solve_state(&s, &sec, &ground_label(&s, &sec), &gs, InitOptions::default(), StepControl::default())
        .unwrap();
    for p in &sweep.trajectory {
        assert!(p.roots.iter().all(|t| t.im == 0.0 && t.re < 0.0));
    }
}
