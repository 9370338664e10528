use boson_pairing::continuum::{
    critical_coupling, f_equal_spacing, phonon_energy, solve_b, solve_continuum, strong_closed_form,
    strong_energy,
};
use boson_pairing::fock::{build_hamiltonian, diagonalize, PairBasis};
use boson_pairing::meanfield::{bogoliubov_limit, emf, particle_number_mf, solve_naive_mf};
use boson_pairing::model::{equal_spacing_spectrum, Coupling, Level, LevelSpectrum, PairSector};
use boson_pairing::quad::integrate_unit_sqrt;
use boson_pairing::richardson::{ground_label, solve_state, InitOptions, StepControl};
use proptest::prelude::*;

fn spectrum_strategy(max_levels: usize) -> impl Strategy<Value = LevelSpectrum> {
    prop::collection::vec((0.1f64..1.0, 1u32..3, 0u32..2), 2..=max_levels).prop_map(|raw| {
        let mut eps = 0.0;
        let levels = raw
            .into_iter()
            .map(|(gap, omega, nu)| {
                let level = Level::new(eps, omega, nu);
                eps += gap;
                level
            })
            .collect();
        LevelSpectrum::new(levels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectrum_text_round_trips(s in spectrum_strategy(6)) {
        let back = LevelSpectrum::parse(&s.to_string()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn coupling_rescales_by_level_count(g in 0.0f64..10.0, l in 1usize..500) {
        let c = Coupling::from_bare(g, l).unwrap();
        prop_assert!((c.g_eff() * l as f64 - g).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn hamiltonian_is_symmetric_and_moves_one_pair(s in spectrum_strategy(4), m in 1usize..4, g in 0.0f64..2.0) {
        let sec = PairSector::new(&s, m);
        let h = build_hamiltonian(&s, &sec, g).unwrap();
        let basis = PairBasis::new(s.len(), m, 1000).unwrap();
        prop_assert_eq!(h.matrix.nrows(), basis.len());
        for i in 0..basis.len() {
            prop_assert_eq!(basis.state(i).iter().sum::<u32>() as usize, m);
            for j in 0..basis.len() {
                prop_assert_eq!(h.matrix[(i, j)], h.matrix[(j, i)]);
                let moved: u32 = basis
                    .state(i)
                    .iter()
                    .zip(basis.state(j))
                    .map(|(a, b)| a.abs_diff(*b))
                    .sum();
                if moved > 2 {
                    prop_assert_eq!(h.matrix[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn richardson_ground_state_matches_oracle(s in spectrum_strategy(3), m in 1usize..4, g in 0.05f64..2.0) {
        let sec = PairSector::new(&s, m);
        let sweep = solve_state(&s, &sec, &ground_label(&s, &sec), &[g], InitOptions::default(), StepControl::default())
            .unwrap();
        let exact = diagonalize(&build_hamiltonian(&s, &sec, g).unwrap()).unwrap().values[0];
        prop_assert!((sweep.energies[0] - exact).abs() <= 1e-8 * exact.abs().max(1.0));
        for t in &sweep.points[0].roots {
            prop_assert!(t.im.abs() <= 1e-10);
            prop_assert!(t.re < s.lowest());
        }
    }

    #[test]
    fn weak_parameter_grows_with_coupling(g in 0.05f64..1.5, dg in 0.01f64..0.3, rho in 0.5f64..3.0) {
        let g_c = critical_coupling(rho).unwrap();
        prop_assume!(g + dg < g_c);
        prop_assert!(solve_b(g + dg, rho).unwrap() > solve_b(g, rho).unwrap());
    }

    #[test]
    fn gap_grows_with_coupling(excess in 0.01f64..3.0, dg in 0.01f64..0.5, rho in 0.5f64..3.0) {
        let g = critical_coupling(rho).unwrap() + excess;
        let lo = strong_closed_form(g, rho).unwrap().gap;
        let hi = strong_closed_form(g + dg, rho).unwrap().gap;
        prop_assert!(lo > 0.0 && hi > lo);
    }

    #[test]
    fn mean_field_mu_gradient_is_number_mismatch(mu in 0.2f64..2.0, frac in 0.0f64..0.9, n_b in 1.0f64..20.0) {
        let s = equal_spacing_spectrum(6).unwrap();
        let delta = frac * mu;
        let h = 1e-6;
        let fd = (emf(mu + h, delta, &s, n_b, 0.3).unwrap() - emf(mu - h, delta, &s, n_b, 0.3).unwrap()) / (2.0 * h);
        let analytic = particle_number_mf(mu, delta, &s).unwrap() - n_b;
        prop_assert!((fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()));
    }
}

#[test]
fn f_matches_quadrature_of_its_integrand() {
    for b in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let direct = integrate_unit_sqrt(|e| 1.0 - (e / (e + b)).sqrt(), 1e-13).unwrap();
        let closed = f_equal_spacing(b).unwrap();
        assert!((direct - closed).abs() <= 1e-10, "b={b}: {direct} vs {closed}");
    }
}

#[test]
fn bogoliubov_window_at_high_density() {
    for rho in [10.0, 100.0] {
        for g in [0.001, 0.003, 0.01] {
            let b = solve_b(g, rho).unwrap();
            let limit = bogoliubov_limit(g, rho);
            let worst = (1..=1000)
                .map(|k| {
                    let e = k as f64 / 1000.0;
                    (phonon_energy(e, b) / limit.dispersion(e) - 1.0).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst <= 1.0 / rho, "rho={rho} g={g}: {worst}");
        }
    }
}

#[test]
fn naive_mean_field_approaches_strong_branch_as_one_over_l() {
    let (g, rho) = (3.0, 1.0);
    let c = strong_closed_form(g, rho).unwrap();
    let limit = strong_energy(c.mu, c.delta, g, rho).unwrap();
    assert!((solve_continuum(g, rho).unwrap().energy_per_level - limit).abs() < 1e-8);
    let scaled: Vec<f64> = [100usize, 300, 1000]
        .iter()
        .map(|&l| {
            let s = equal_spacing_spectrum(l).unwrap();
            let n = rho * l as f64;
            let st = solve_naive_mf(&s, n, g / l as f64).unwrap();
            let state = st.state().expect("strong coupling has a stationary point");
            (state.energy / l as f64 - limit).abs() * l as f64
        })
        .collect();
    for w in scaled.windows(2) {
        assert!(w[1] / w[0] > 0.5 && w[1] / w[0] < 2.0, "{scaled:?}");
    }
}
