use fairsoc_web::{case14_lines, case14_load_buses, levels_native, shed_case14_native, w_curve_native};

#[test]
fn levels_at_the_ends() {
    let l = levels_native(0.0, 11).unwrap();
    assert_eq!(l.kappa, 1.0);
    assert!((l.w - 1.0 / 11.0).abs() < 1e-15);
    assert!((l.h - 11.0).abs() < 1e-12);

    let l = levels_native(1.0, 11).unwrap();
    assert!((l.kappa - 11f64.sqrt()).abs() < 1e-15);
    assert!((l.w - 1.0).abs() < 1e-15);
    assert!(l.h.abs() < 1e-12);

    assert!(levels_native(1.2, 11).is_err());
    assert!(levels_native(0.5, 1).is_err());
}

#[test]
fn w_curve_is_increasing() {
    let c = w_curve_native(4, 5).unwrap();
    // w = (1 + eps)^2 / 4 when n = 4
    for (i, w) in c.iter().enumerate() {
        let e = i as f64 / 4.0;
        assert!((w - (1.0 + e).powi(2) / 4.0).abs() < 1e-15);
    }
    assert!(c.windows(2).all(|p| p[0] < p[1]));
    assert!(w_curve_native(4, 1).is_err());
}

#[test]
fn case14_tables() {
    let lines = case14_lines();
    assert_eq!(lines.len(), 60);
    assert_eq!(&lines[..3], &[1, 1, 2]);
    assert_eq!(case14_load_buses().len(), 11);
}

#[test]
fn shed_on_case14() {
    let intact = shed_case14_native(&[], 0.5).unwrap();
    assert_eq!(intact.status(), "optimal");
    assert!(intact.total().unwrap() < 1e-6);

    // lines 1 and 2 are the only ties to the large unit at bus 1
    let s = shed_case14_native(&[1, 2, 3], 0.0).unwrap();
    assert_eq!(s.status(), "optimal");
    let z0 = s.total().unwrap();
    assert!(z0 > 0.0);
    assert_eq!(s.base_total(), s.total());
    assert!(s.eta_pct().unwrap().abs() < 1e-9);

    let fair = shed_case14_native(&[3, 2, 1, 1], 0.3).unwrap();
    if fair.status() == "optimal" {
        let z = fair.total().unwrap();
        assert!(z >= z0 - 1e-6 * (1.0 + z0));
        assert_eq!(fair.shed().len(), 11);
        assert!(fair.eta_pct().unwrap() >= -1e-6);
        let w = levels_native(0.3, 11).unwrap().w;
        assert!(fair.jain().unwrap() >= w - 1e-6);
    } else {
        assert_eq!(fair.status(), "primal_infeasible");
        assert!(fair.shed().is_empty());
    }

    assert!(shed_case14_native(&[99], 0.5).is_err());
    assert!(shed_case14_native(&[], 2.0).is_err());
}
