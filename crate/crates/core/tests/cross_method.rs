use qhj::oracle::{oracle_eigenvalue, OracleConfig};
use qhj::quantize::qhj_energy;
use qhj::wkb::wkb_energy;
use qhj::{PotentialModel, SolverConfig};

#[test]
fn qhj_agrees_with_oracle_on_catalog() {
    let cfg = SolverConfig::default();
    let ocfg = OracleConfig::default();
    let catalog = [
        (PotentialModel::harmonic(1.0, 1.0).unwrap(), 5),
        (PotentialModel::morse(1.0, 8.0, 1.0, 0.0).unwrap(), 3),
        (PotentialModel::quartic(1.0, 1.0).unwrap(), 5),
        (PotentialModel::polynomial(1.0, vec![0.0, 0.3, 1.0, 0.0, 0.2]).unwrap(), 5),
    ];
    for (m, n_max) in &catalog {
        for n in 0..=*n_max {
            let (e, _) = qhj_energy(m, n, &cfg).unwrap();
            let o = oracle_eigenvalue(m, n, cfg.hbar, &ocfg).unwrap();
            assert!((e - o).abs() <= 1e-6, "{} n={n}: {e} vs {o}", m.name());
            if let Ok(Some(exact)) = m.closed_form_energy(n, cfg.hbar) {
                assert!((o - exact).abs() <= 1e-7, "{} n={n}: oracle {o} vs {exact}", m.name());
            }
        }
    }
}

#[test]
fn quartic_wkb_improves_with_level() {
    let m = PotentialModel::quartic(1.0, 1.0).unwrap();
    let cfg = SolverConfig::default();
    let errors: Vec<f64> = (1..=5)
        .map(|n| {
            let o = oracle_eigenvalue(&m, n, cfg.hbar, &OracleConfig::default()).unwrap();
            (wkb_energy(&m, n, &cfg).unwrap() - o).abs() / o
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
}
