//! Property checks shared by the integration suites and the acceptance
//! target. Each returns a description of the first counterexample.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use diffbench::bench::{run_matrix_into, ExperimentConfig};
use diffbench::datasets::DatasetSpec;
use diffbench::diffmethods::{DiffMethod, DiffMethodSpec};
use diffbench::discovery::{evolutionary_discover, sindy_fit, EvoConfig, SindyConfig, TermLibrary, TermSpec};
use diffbench::grid::{make_uniform_grid, Field, Grid, MultiIndex};
use diffbench::metrics::support_distance;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub type Check = Result<(), String>;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn line(lo: f64, hi: f64, n: usize) -> Arc<Grid> {
    Arc::new(make_uniform_grid(&[(lo, hi, n)]).unwrap())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn linear_methods() -> Vec<DiffMethodSpec> {
    [DiffMethod::Gradient, DiffMethod::Polynomial, DiffMethod::Spectral, DiffMethod::Inverse]
        .iter()
        .map(|m| m.default_spec())
        .collect()
}

/// `D(a·u + b·v) = a·Du + b·Dv` for the linear backends.
pub fn diff_linearity(cases: u32) -> Check {
    let g = line(0.0, 2.0, 48);
    let strat = (
        prop::collection::vec(-1.0f64..1.0, 48),
        prop::collection::vec(-1.0f64..1.0, 48),
        -3.0f64..3.0,
        -3.0f64..3.0,
        1usize..=3,
    );
    runner(cases)
        .run(&strat, |(u, v, a, b, order)| {
            let fu = Field::from_vec(g.clone(), u).unwrap();
            let fv = Field::from_vec(g.clone(), v).unwrap();
            let mix = fu.lin_comb(a, &fv, b).unwrap();
            for spec in linear_methods() {
                let du = spec.differentiate(&fu, 0, order).unwrap();
                let dv = spec.differentiate(&fv, 0, order).unwrap();
                let dm = spec.differentiate(&mix, 0, order).unwrap();
                let want = du.lin_comb(a, &dv, b).unwrap();
                let scale = (a.abs() * max_abs(du.as_slice())).max(b.abs() * max_abs(dv.as_slice())).max(1.0);
                for (x, y) in dm.as_slice().iter().zip(want.as_slice()) {
                    prop_assert!((x - y).abs() <= 1e-10 * scale, "{spec}: {x} vs {y}");
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every backend maps a constant to zero.
pub fn constant_annihilation(cases: u32) -> Check {
    let g = line(-1.0, 3.0, 40);
    let h = g.step(0);
    runner(cases)
        .run(&(-50.0f64..50.0, 1usize..=3), |(c, order)| {
            let f = Field::from_fn(g.clone(), |_| c).unwrap();
            for m in DiffMethod::ALL {
                let d = m.default_spec().differentiate(&f, 0, order).unwrap();
                let tol = 1e-8 * c.abs().max(1.0) / h.powi(order as i32);
                prop_assert!(max_abs(d.as_slice()) <= tol, "{m}: order {order} gives {}", max_abs(d.as_slice()));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Gradient is exact on quadratics; Polynomial on polynomials up to its
/// fitting degree.
pub fn polynomial_exactness(cases: u32) -> Check {
    let g = line(-1.0, 1.5, 41);
    let poly = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck);
    let deriv = |c: &[f64], r: usize| {
        let mut c = c.to_vec();
        for _ in 0..r {
            c = c.iter().enumerate().skip(1).map(|(k, ck)| ck * k as f64).collect();
        }
        c
    };
    let strat = (prop::collection::vec(-2.0f64..2.0, 5), 1usize..=3);
    runner(cases)
        .run(&strat, |(coeffs, r)| {
            let cases = [(DiffMethodSpec::Gradient, 3usize, r.min(2)), (DiffMethod::Polynomial.default_spec(), 5, r)];
            for (spec, n_coeffs, order) in cases {
                let c = &coeffs[..n_coeffs];
                let f = Field::from_fn(g.clone(), |x| poly(c, x[0])).unwrap();
                let d = spec.differentiate(&f, 0, order).unwrap();
                let dc = deriv(c, order);
                let scale = 10.0 * coeffs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for (x, v) in g.axis(0).iter().zip(d.as_slice()) {
                    let want = poly(&dc, *x);
                    prop_assert!((v - want).abs() <= 1e-8 * scale, "{spec} order {order} at {x}: {v} vs {want}");
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn universe() -> Vec<TermSpec> {
    (0..8).map(|r| TermSpec::deriv(MultiIndex::new(vec![r]))).collect()
}

fn subset(mask: u8) -> BTreeSet<TermSpec> {
    universe()
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, t)| t)
        .collect()
}

/// Symmetry, identity of indiscernibles and the triangle inequality.
pub fn shd_metric_axioms(cases: u32) -> Check {
    runner(cases)
        .run(&(any::<u8>(), any::<u8>(), any::<u8>()), |(a, b, c)| {
            let (a, b, c) = (subset(a), subset(b), subset(c));
            prop_assert_eq!(support_distance(&a, &b), support_distance(&b, &a));
            prop_assert_eq!(support_distance(&a, &b) == 0, a == b);
            prop_assert!(support_distance(&a, &c) <= support_distance(&a, &b) + support_distance(&b, &c));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// STLSQ returns exactly the planted support of a noiseless sparse
/// relation among random columns.
pub fn stlsq_exact_recovery(cases: u32) -> Check {
    let terms = universe();
    let strat = (
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 60), 7),
        prop::collection::btree_set(1usize..8, 1..=3),
        prop::collection::vec((0.5f64..2.0, any::<bool>()), 3),
    );
    runner(cases)
        .run(&strat, |(cols, planted, coeffs)| {
            let mut target = vec![0.0; 60];
            for (&j, (c, neg)) in planted.iter().zip(&coeffs) {
                let c = if *neg { -c } else { *c };
                for (t, x) in target.iter_mut().zip(&cols[j - 1]) {
                    *t += c * x;
                }
            }
            let mut columns = vec![target];
            columns.extend(cols);
            let lib = TermLibrary::from_columns(terms.clone(), columns, vec!["x".into()]).unwrap();
            let eq = sindy_fit(&lib, &terms[0], &SindyConfig::stlsq(0.05)).unwrap();
            let got: BTreeSet<usize> = eq.support.iter().map(|t| lib.position(t).unwrap()).collect();
            prop_assert_eq!(got, planted);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// No member of a returned front dominates another.
pub fn pareto_nondomination(cases: u32) -> Check {
    let terms = universe();
    let strat = (prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 40), 8), any::<u64>());
    runner(cases)
        .run(&strat, |(columns, seed)| {
            let lib = TermLibrary::from_columns(terms.clone(), columns, vec!["x".into()]).unwrap();
            let cfg = EvoConfig {
                epochs: 10,
                seed,
                ..EvoConfig::default()
            };
            let front = evolutionary_discover(&lib, &cfg).unwrap();
            prop_assert!(!front.is_empty());
            for a in &front {
                for b in &front {
                    let dominates = a.relative_loss <= b.relative_loss
                        && a.complexity <= b.complexity
                        && (a.relative_loss < b.relative_loss || a.complexity < b.complexity);
                    prop_assert!(!dominates, "{} dominates {}", a.canonical_text(), b.canonical_text());
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// A small matrix with noise, two methods and both engines exercised.
pub fn small_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::minimal(DatasetSpec::damped_ode());
    c.methods = vec![DiffMethodSpec::Gradient, DiffMethod::Polynomial.default_spec()];
    c.noise = vec![0.0, 1.0];
    c.repeats = 3;
    c.seed = 11;
    c
}

/// Every output file except the manifest, by name.
pub fn output_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Manifest with its timestamps blanked.
pub fn manifest_without_times(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["started"] = serde_json::Value::Null;
    v["finished"] = serde_json::Value::Null;
    v
}

/// Two runs, with different worker counts, write identical bytes.
pub fn run_determinism(config: &ExperimentConfig) -> Check {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_matrix_into(config, a.path(), 1).map_err(|e| e.to_string())?;
    run_matrix_into(config, b.path(), 3).map_err(|e| e.to_string())?;
    let (fa, fb) = (output_bytes(a.path()), output_bytes(b.path()));
    if fa.is_empty() {
        return Err("no outputs written".into());
    }
    for ((na, ba), (nb, bb)) in fa.iter().zip(&fb) {
        if na != nb || ba != bb {
            return Err(format!("{na} differs from {nb}"));
        }
    }
    if fa.len() != fb.len() {
        return Err("different file sets".into());
    }
    if manifest_without_times(a.path()) != manifest_without_times(b.path()) {
        return Err("manifests differ beyond timestamps".into());
    }
    Ok(())
}
