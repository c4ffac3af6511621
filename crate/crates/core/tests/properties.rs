mod common;

use common::*;

#[test]
fn differentiation_is_linear() {
    diff_linearity(48).unwrap();
}

#[test]
fn constants_are_annihilated() {
    constant_annihilation(32).unwrap();
}

#[test]
fn exact_on_low_degree_polynomials() {
    polynomial_exactness(48).unwrap();
}

#[test]
fn shd_is_a_metric() {
    shd_metric_axioms(256).unwrap();
}

#[test]
fn stlsq_recovers_planted_support() {
    stlsq_exact_recovery(64).unwrap();
}

#[test]
fn evolutionary_front_is_nondominated() {
    pareto_nondomination(16).unwrap();
}

#[test]
fn differentiation_is_deterministic() {
    let spec = diffbench::datasets::DatasetSpec::kdv().with_grid(vec![
        diffbench::grid::AxisRange::new(0.0, 1.0, 40),
        diffbench::grid::AxisRange::new(-10.0, 10.0, 80),
    ]);
    let data = spec.generate().unwrap();
    for m in diffbench::diffmethods::DiffMethod::ALL {
        let spec = m.default_spec();
        let a = spec.differentiate(&data.field, 1, 2).unwrap();
        let b = spec.differentiate(&data.field, 1, 2).unwrap();
        assert!(
            a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()),
            "{m}"
        );
    }
}
