use std::sync::Arc;

use fracp_core::analysis::{
    comparison_check, fit_boundary_exponent, hardy_quotient, hardy_refinement, nonexistence_scan, sobolev_scan,
    FitWindow, ScanOptions,
};
use fracp_core::grid::{build_grid, GridFunction};
use fracp_core::kernel::EnergyValue;
use fracp_core::params::make_params;
use fracp_core::Error;

fn power(n: usize, q: f64, a: f64) -> GridFunction {
    let grid = Arc::new(build_grid(0.0, 1.0, n, q).unwrap());
    GridFunction::from_distance(grid, |d| d.powf(a))
}

#[test]
fn hardy_quotient_of_powers() {
    // (d^s / d^s)^p integrates to |Omega|.
    let u = power(4000, 1.0, 0.5);
    assert!((hardy_quotient(&u, 1.0, 0.5, 2.0) - 1.0).abs() < 1e-12);

    // d^(-1/2) over (0, 1) integrates to 2 sqrt 2; graded nodes resolve it.
    let u = power(4000, 3.0, 0.25);
    let q = hardy_quotient(&u, 1.0, 0.5, 2.0);
    assert!((q - 2.0 * 2f64.sqrt()).abs() / (2.0 * 2f64.sqrt()) < 0.02, "{q}");
}

#[test]
fn hardy_refinement_separates_integrable_powers() {
    let seq = |a: f64| -> Vec<GridFunction> { [256, 512, 1024, 2048].iter().map(|&n| power(n, 2.0, a)).collect() };
    // (0.1 - 0.75) * 2 = -1.3 is not integrable
    match hardy_refinement(&seq(0.1), 1.0, 0.75, 2.0) {
        EnergyValue::Divergent { slope } => assert!(slope > 0.1),
        other => panic!("expected divergence, got {other:?}"),
    }
    assert!(matches!(
        hardy_refinement(&seq(0.5), 1.0, 0.75, 2.0),
        EnergyValue::Finite(_)
    ));
}

#[test]
fn fitted_exponent_of_exact_power_on_graded_grid() {
    let u = power(1024, 2.0, 0.3);
    let fit = fit_boundary_exponent(&u, None, 0.3).unwrap();
    assert!(fit.deviation < 1e-10);
    let window = FitWindow { d_lo: 0.01, d_hi: 0.1 };
    let fit = fit_boundary_exponent(&u, Some(window), 0.3).unwrap();
    assert!((fit.mean_slope() - 0.3).abs() < 1e-10);
}

#[test]
fn comparison_reports_worst_violation() {
    let u = [1.0, 2.0, 3.0];
    let r = comparison_check(&[0.5, 2.5, 1.0], &u, &[2.0, 2.0, 2.9], 1e-3).unwrap();
    assert!((r.below - 0.5).abs() < 1e-15);
    assert!((r.above - 0.1).abs() < 1e-12);
    assert!(!r.passed);
    assert!(matches!(
        comparison_check(&[0.0], &u, &u, 1e-3),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn nonexistence_scan_rejects_delta_at_sp() {
    let base = make_params(0.5, 2.0, 1.0, 0.5, 0.0, 1.0).unwrap();
    let grid = build_grid(0.0, 1.0, 64, 3.0).unwrap();
    let err = nonexistence_scan(&base, &[0.6, 1.0], &grid, &ScanOptions::default()).unwrap_err();
    assert!(matches!(err, Error::RegimeError { .. }));
    let err = nonexistence_scan(&base, &[0.8, 0.6], &grid, &ScanOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn sobolev_scan_preconditions() {
    let params = make_params(0.75, 2.0, 2.0, 0.5, 0.0, 1.0).unwrap();
    let opts = ScanOptions::default();
    assert!(matches!(
        sobolev_scan(&params, &[0.5], &[32, 64, 128], &opts),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        sobolev_scan(&params, &[1.0], &[64, 32, 128], &opts),
        Err(Error::Precondition(_))
    ));
    let beyond = make_params(0.75, 2.0, 2.0, 1.5, 0.0, 1.0).unwrap();
    assert!(matches!(
        sobolev_scan(&beyond, &[1.0], &[32, 64, 128], &opts),
        Err(Error::RegimeError { .. })
    ));
}
