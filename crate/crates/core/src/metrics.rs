//! Scores for discovered equations and differentiation jets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetKind, DatasetSpec};
use crate::diffmethods::Jet;
use crate::discovery::{normalize_equation, CandidateEquation, Convention, TermSpec};
use crate::error::{Error, Result};
use crate::grid::{field_mse, BoundaryMode, MultiIndex};

/// Known equation of a dataset, written in implicit form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub terms: Vec<(TermSpec, f64)>,
    /// Term whose coefficient fixes the scale.
    pub designated: TermSpec,
    pub convention: Convention,
    pub names: Vec<String>,
}

impl GroundTruth {
    pub fn new(terms: Vec<(TermSpec, f64)>, designated: TermSpec, convention: Convention, names: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("ground-truth support"));
        }
        if terms.iter().any(|(_, c)| !c.is_finite() || *c == 0.0) {
            return Err(Error::param("coefficients", "must be finite and nonzero"));
        }
        let c = terms
            .iter()
            .find(|(t, _)| *t == designated)
            .map(|(_, c)| *c)
            .ok_or_else(|| Error::TermAbsent(designated.label(&names)))?;
        let scale = convention.sign() / c;
        let mut terms: Vec<(TermSpec, f64)> = terms.into_iter().map(|(t, v)| (t, v * scale)).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self {
            terms,
            designated,
            convention,
            names,
        })
    }

    /// The equation a dataset was generated from, with the designated term
    /// at +1.
    pub fn for_dataset(spec: &DatasetSpec) -> Self {
        let names: Vec<String> = spec.kind.axis_names().iter().map(|s| s.to_string()).collect();
        let dim = names.len();
        let d = |orders: &[usize]| MultiIndex::new(orders.to_vec());
        let single = |orders: &[usize]| TermSpec::deriv(d(orders));
        let u = MultiIndex::zero(dim);
        let (terms, designated) = match &spec.kind {
            DatasetKind::DampedOde(p) => (
                vec![(single(&[2]), p.m), (single(&[1]), p.q), (single(&[0]), p.k)],
                single(&[2]),
            ),
            DatasetKind::KdvSoliton(_) => (
                vec![
                    (single(&[1, 0]), 1.0),
                    (TermSpec::product([u.clone(), d(&[0, 1])]), 6.0),
                    (single(&[0, 3]), 1.0),
                ],
                single(&[1, 0]),
            ),
            DatasetKind::Burgers(p) => (
                vec![
                    (single(&[1, 0]), 1.0),
                    (single(&[0, 2]), -p.v),
                    (TermSpec::product([u, d(&[0, 1])]), 1.0),
                ],
                single(&[1, 0]),
            ),
            DatasetKind::Wave(p) => (
                vec![(single(&[0, 2]), 1.0), (single(&[2, 0]), -p.c * p.c)],
                single(&[0, 2]),
            ),
            DatasetKind::Laplace(_) => (vec![(single(&[2, 0]), 1.0), (single(&[0, 2]), 1.0)], single(&[2, 0])),
        };
        let terms: Vec<(TermSpec, f64)> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Self::new(terms, designated, Convention::Sindy, names).expect("dataset equations are well formed")
    }

    pub fn with_convention(&self, convention: Convention) -> Self {
        Self::new(self.terms.clone(), self.designated.clone(), convention, self.names.clone()).expect("valid truth")
    }

    pub fn support(&self) -> BTreeSet<TermSpec> {
        self.terms.iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn coefficient(&self, term: &TermSpec) -> Option<f64> {
        self.terms.iter().find(|(t, _)| t == term).map(|(_, c)| *c)
    }

    pub fn label(&self, term: &TermSpec) -> String {
        term.label(&self.names)
    }
}

/// Size of the symmetric difference between two term sets.
pub fn support_distance(a: &BTreeSet<TermSpec>, b: &BTreeSet<TermSpec>) -> usize {
    a.symmetric_difference(b).count()
}

/// Structural Hamming distance between a candidate (target included) and
/// the truth. Every term of both must belong to `universe`.
pub fn shd(candidate: &CandidateEquation, truth: &GroundTruth, universe: &[TermSpec]) -> Result<usize> {
    let cand = candidate.full_support();
    let want = truth.support();
    for t in cand.iter().chain(&want) {
        if !universe.contains(t) {
            return Err(Error::TermNotInUniverse(t.label(&truth.names)));
        }
    }
    Ok(support_distance(&cand, &want))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStat {
    pub term: TermSpec,
    pub label: String,
    pub true_value: f64,
    /// Recovered values from the runs containing the term.
    pub values: Vec<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation; zero for a single value.
    pub sd: Option<f64>,
    pub presence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffStats {
    pub terms: Vec<TermStat>,
    /// Mean over true terms and runs of `|c − c_true| / |c_true|`, a
    /// missing term counting as 1.
    pub pooled_error: f64,
    /// Mean over true terms of `|mean(c) − c_true| / |c_true|`, over the
    /// terms recovered at least once.
    pub bias_error: Option<f64>,
}

/// Coefficient statistics per true term after normalizing every run to the
/// truth's convention. Runs lacking the designated term count as missing
/// for every term.
pub fn coeff_stats(runs: &[CandidateEquation], truth: &GroundTruth) -> Result<CoeffStats> {
    if runs.is_empty() {
        return Err(Error::Empty("run list"));
    }
    let normalized: Vec<Option<CandidateEquation>> = runs
        .iter()
        .map(|eq| normalize_equation(eq, &truth.designated, truth.convention).ok())
        .collect();
    let n = runs.len() as f64;
    let mut terms = Vec::new();
    let mut pooled = 0.0;
    let mut bias = Vec::new();
    for (term, true_value) in &truth.terms {
        let values: Vec<f64> = normalized
            .iter()
            .filter_map(|eq| eq.as_ref().and_then(|e| e.coefficient(term)))
            .collect();
        let k = values.len();
        let rel = |v: f64| (v - true_value).abs() / true_value.abs();
        pooled += (values.iter().map(|&v| rel(v)).sum::<f64>() + (n - k as f64)) / n;
        let (mean, sd) = if k == 0 {
            (None, None)
        } else {
            let m = values.iter().sum::<f64>() / k as f64;
            let sd = if k > 1 {
                (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
            } else {
                0.0
            };
            bias.push(rel(m));
            (Some(m), Some(sd))
        };
        terms.push(TermStat {
            term: term.clone(),
            label: truth.label(term),
            true_value: *true_value,
            values,
            mean,
            sd,
            presence: k as f64 / n,
        });
    }
    let pooled_error = pooled / truth.terms.len() as f64;
    let bias_error = (!bias.is_empty()).then(|| bias.iter().sum::<f64>() / bias.len() as f64);
    Ok(CoeffStats {
        terms,
        pooled_error,
        bias_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffError {
    pub mse_full: f64,
    pub mse_interior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffErrorReport {
    pub strip: usize,
    /// Keyed by derivative label, e.g. `u_xx`.
    pub entries: BTreeMap<String, DiffError>,
    /// Means over derivatives of equal total order.
    pub per_order: BTreeMap<usize, DiffError>,
}

impl DiffErrorReport {
    /// Mean over all derivatives.
    pub fn mean(&self) -> DiffError {
        let n = self.entries.len().max(1) as f64;
        DiffError {
            mse_full: self.entries.values().map(|e| e.mse_full).sum::<f64>() / n,
            mse_interior: self.entries.values().map(|e| e.mse_interior).sum::<f64>() / n,
        }
    }
}

/// Full-domain and interior MSE of every derivative in `jet` against
/// `reference`. Both jets must hold the same derivative set.
pub fn diff_error_report(jet: &Jet, reference: &Jet, strip: usize) -> Result<DiffErrorReport> {
    let a: BTreeSet<&MultiIndex> = jet.indices().collect();
    let b: BTreeSet<&MultiIndex> = reference.indices().collect();
    if let Some(missing) = a.symmetric_difference(&b).next() {
        return Err(Error::MissingDerivative((*missing).clone()));
    }
    let mode = BoundaryMode::interior(strip.max(1));
    let mut entries = BTreeMap::new();
    let mut by_order: BTreeMap<usize, Vec<DiffError>> = BTreeMap::new();
    for idx in a {
        let x = jet.get(idx)?;
        let y = reference.get(idx)?;
        let e = DiffError {
            mse_full: field_mse(x, y, BoundaryMode::FullDomain)?,
            mse_interior: field_mse(x, y, mode)?,
        };
        entries.insert(jet.label(idx), e);
        by_order.entry(idx.total()).or_default().push(e);
    }
    let per_order = by_order
        .into_iter()
        .map(|(o, v)| {
            let n = v.len() as f64;
            (
                o,
                DiffError {
                    mse_full: v.iter().map(|e| e.mse_full).sum::<f64>() / n,
                    mse_interior: v.iter().map(|e| e.mse_interior).sum::<f64>() / n,
                },
            )
        })
        .collect();
    Ok(DiffErrorReport {
        strip: strip.max(1),
        entries,
        per_order,
    })
}

/// Identifies one cell of an experiment matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub dataset: String,
    pub method: String,
    /// Noise level in percent, stored as a string to keep ordering exact.
    pub noise: String,
    pub repeat: usize,
}

impl CellId {
    pub fn new(dataset: &str, method: &str, noise_percent: f64, repeat: usize) -> Self {
        Self {
            dataset: dataset.to_string(),
            method: method.to_string(),
            noise: format_noise(noise_percent),
            repeat,
        }
    }

    pub fn noise_percent(&self) -> f64 {
        self.noise.parse().unwrap_or(f64::NAN)
    }

    pub fn key(&self) -> String {
        format!("{}/{}/{}/{}", self.dataset, self.method, self.noise, self.repeat)
    }
}

pub fn format_noise(p: f64) -> String {
    let s = format!("{p}");
    if s.contains('.') || s.contains('e') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Result of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cell: CellId,
    pub seed: u64,
    /// One equation for sparse regression, the Pareto front otherwise.
    pub equations: Vec<CandidateEquation>,
    /// SHD of each equation.
    pub shd: Vec<usize>,
    pub diff_errors: DiffErrorReport,
    /// Coefficient statistics of this cell's runs against the truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff: Option<CoeffStats>,
}

impl ExperimentReport {
    pub fn best_shd(&self) -> Option<usize> {
        self.shd.iter().copied().min()
    }

    /// Equations with the smallest SHD, which feed coefficient statistics.
    pub fn best_equations(&self) -> Vec<&CandidateEquation> {
        match self.best_shd() {
            Some(b) => self
                .equations
                .iter()
                .zip(&self.shd)
                .filter(|(_, s)| **s == b)
                .map(|(e, _)| e)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// Equations that enter coefficient statistics: a single regression result
/// is always used, front members only when their support is exact.
pub fn coefficient_runs(reports: &[&ExperimentReport]) -> Vec<CandidateEquation> {
    let mut out = Vec::new();
    for r in reports {
        if r.equations.len() == 1 {
            out.push(r.equations[0].clone());
        } else {
            out.extend(
                r.equations
                    .iter()
                    .zip(&r.shd)
                    .filter(|(_, s)| **s == 0)
                    .map(|(e, _)| e.clone()),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub method: String,
    pub noise: String,
    pub mean_diff_error_full: f64,
    pub mean_diff_error_interior: f64,
    pub mean_shd: f64,
    pub count: usize,
}

/// One point per `(method, noise)` averaging over every report in the
/// group, across datasets.
pub fn scatter_points(reports: &[ExperimentReport]) -> Vec<ScatterPoint> {
    let mut groups: BTreeMap<(String, String), Vec<&ExperimentReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.cell.method.clone(), r.cell.noise.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((method, noise), rs)| {
            let n = rs.len() as f64;
            let shds: Vec<f64> = rs.iter().filter_map(|r| r.best_shd()).map(|s| s as f64).collect();
            ScatterPoint {
                method,
                noise,
                mean_diff_error_full: rs.iter().map(|r| r.diff_errors.mean().mse_full).sum::<f64>() / n,
                mean_diff_error_interior: rs.iter().map(|r| r.diff_errors.mean().mse_interior).sum::<f64>() / n,
                mean_shd: if shds.is_empty() {
                    f64::NAN
                } else {
                    shds.iter().sum::<f64>() / shds.len() as f64
                },
                count: rs.len(),
            }
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((m, sd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmethods::{build_jet, DiffMethod, DiffMethodSpec};
    use proptest::prelude::*;

    fn names() -> Vec<String> {
        vec!["t".into(), "x".into()]
    }

    fn term(s: &str) -> TermSpec {
        TermSpec::parse(s, &names()).unwrap()
    }

    fn universe() -> Vec<TermSpec> {
        ["1", "u", "u_t", "u_x", "u_xx", "u_xxx", "u·u_x", "u^2"].map(term).to_vec()
    }

    fn equation(target: &str, support: &[(&str, f64)]) -> CandidateEquation {
        let terms: Vec<TermSpec> = support.iter().map(|(s, _)| term(s)).collect();
        let xi: Vec<f64> = support.iter().map(|(_, c)| -c).collect();
        CandidateEquation::from_regression(term(target), &terms, &xi, 0.0, 1.0, names())
    }

    fn kdv_truth() -> GroundTruth {
        GroundTruth::for_dataset(&DatasetSpec::kdv())
    }

    #[test]
    fn shd_examples() {
        let truth = kdv_truth();
        let u = universe();
        let same = equation("u_t", &[("u·u_x", 6.0), ("u_xxx", 1.0)]);
        assert_eq!(shd(&same, &truth, &u).unwrap(), 0);
        let missing = equation("u_t", &[("u·u_x", 6.0)]);
        assert_eq!(shd(&missing, &truth, &u).unwrap(), 1);
        let messy = equation("u_t", &[("u·u_x", 6.0), ("u", 1.0), ("u_xx", 2.0)]);
        assert_eq!(shd(&messy, &truth, &u).unwrap(), 3);
        let outside = equation("u_t", &[("u_x^2", 1.0)]);
        assert!(matches!(shd(&outside, &truth, &u), Err(Error::TermNotInUniverse(_))));
    }

    #[test]
    fn dataset_truths() {
        let ode = GroundTruth::for_dataset(&DatasetSpec::damped_ode());
        let n = |s: &str| TermSpec::parse(s, &["t".to_string()]).unwrap();
        assert_eq!(ode.coefficient(&n("u_tt")), Some(1.0));
        assert_eq!(ode.coefficient(&n("u_t")), Some(0.25));
        assert_eq!(ode.coefficient(&n("u")), Some(3.0));
        let epde = ode.with_convention(Convention::Epde);
        assert_eq!(epde.coefficient(&n("u")), Some(-3.0));
        let burgers = GroundTruth::for_dataset(&DatasetSpec::burgers());
        assert_eq!(burgers.coefficient(&term("u_xx")), Some(-0.05));
        assert_eq!(burgers.coefficient(&term("u·u_x")), Some(1.0));
        let wave = GroundTruth::for_dataset(&DatasetSpec::wave());
        assert_eq!(wave.coefficient(&term("u_tt")), Some(-0.0625));
        let lap = GroundTruth::for_dataset(&DatasetSpec::laplace());
        assert_eq!(lap.support().len(), 2);
    }

    #[test]
    fn coeff_stats_examples() {
        let ode = GroundTruth::for_dataset(&DatasetSpec::damped_ode());
        let nm = vec!["t".to_string()];
        let n = |s: &str| TermSpec::parse(s, &nm).unwrap();
        let mk = |cu: f64, cut: Option<f64>| {
            let mut terms = vec![n("u")];
            let mut xi = vec![-cu];
            if let Some(c) = cut {
                terms.push(n("u_t"));
                xi.push(-c);
            }
            CandidateEquation::from_regression(n("u_tt"), &terms, &xi, 0.0, 1.0, nm.clone())
        };
        let exact = coeff_stats(&[mk(3.0, Some(0.25))], &ode).unwrap();
        assert_eq!(exact.pooled_error, 0.0);
        assert!(exact.terms.iter().all(|t| t.sd == Some(0.0)));

        let runs = [mk(2.8, None), mk(3.0, None), mk(3.2, None)];
        let s = coeff_stats(&runs, &ode).unwrap();
        let u = s.terms.iter().find(|t| t.label == "u").unwrap();
        assert!((u.mean.unwrap() - 3.0).abs() < 1e-12);
        assert!((u.sd.unwrap() - 0.2).abs() < 1e-12);
        let ut = s.terms.iter().find(|t| t.label == "u_t").unwrap();
        assert_eq!(ut.presence, 0.0);
        assert_eq!(ut.mean, None);
        assert!(s.pooled_error > 0.0);
        assert!(coeff_stats(&[], &ode).is_err());
    }

    #[test]
    fn diff_errors_against_itself_are_zero() {
        let spec = DatasetSpec::kdv();
        let data = spec.generate().unwrap();
        let r = diff_error_report(&data.reference, &data.reference, 3).unwrap();
        assert!(r.entries.values().all(|e| e.mse_full == 0.0 && e.mse_interior == 0.0));
        assert_eq!(r.per_order.keys().copied().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn kdv_gradient_beats_spectral_full_domain() {
        let data = DatasetSpec::kdv().generate().unwrap();
        let g = build_jet(&data.field, &[1, 3], &DiffMethodSpec::Gradient).unwrap();
        let s = build_jet(&data.field, &[1, 3], &DiffMethod::Spectral.default_spec()).unwrap();
        let rg = diff_error_report(&g, &data.reference, 3).unwrap();
        let rs = diff_error_report(&s, &data.reference, 3).unwrap();
        let gx = rg.entries["u_x"];
        let sx = rs.entries["u_x"];
        assert!(gx.mse_interior < 1e-3);
        assert!(gx.mse_interior < sx.mse_full);
        let st = rs.entries["u_t"];
        assert!(st.mse_full >= st.mse_interior);
    }

    #[test]
    fn missing_derivative_is_an_error() {
        let data = DatasetSpec::kdv().generate().unwrap();
        let g = build_jet(&data.field, &[1, 1], &DiffMethodSpec::Gradient).unwrap();
        assert!(matches!(
            diff_error_report(&g, &data.reference, 3),
            Err(Error::MissingDerivative(_))
        ));
    }

    fn report(method: &str, noise: f64, shd: usize, err: f64) -> ExperimentReport {
        let mut entries = BTreeMap::new();
        entries.insert("u_x".into(), DiffError { mse_full: err, mse_interior: err / 2.0 });
        ExperimentReport {
            cell: CellId::new("kdv", method, noise, 0),
            seed: 0,
            equations: vec![equation("u_t", &[("u", 1.0)])],
            shd: vec![shd],
            diff_errors: DiffErrorReport { strip: 1, entries, per_order: BTreeMap::new() },
            coeff: None,
        }
    }

    #[test]
    fn scatter_grouping() {
        let one = scatter_points(&[report("gradient", 0.0, 2, 1.0)]);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].mean_shd, 2.0);
        assert_eq!(one[0].mean_diff_error_full, 1.0);
        let two = scatter_points(&[report("gradient", 0.0, 2, 1.0), report("gradient", 0.0, 4, 3.0)]);
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].mean_shd, 3.0);
        assert_eq!(two[0].mean_diff_error_full, 2.0);
        let many: Vec<ExperimentReport> = ["gradient", "spectral"]
            .iter()
            .flat_map(|m| [0.0, 0.5, 1.0].map(|n| report(m, n, 1, 1.0)))
            .collect();
        assert_eq!(scatter_points(&many).len(), 6);
    }

    fn support_strategy() -> impl Strategy<Value = BTreeSet<TermSpec>> {
        proptest::sample::subsequence(universe(), 0..=8).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn support_distance_is_a_metric(a in support_strategy(), b in support_strategy(), c in support_strategy()) {
            prop_assert_eq!(support_distance(&a, &b), support_distance(&b, &a));
            prop_assert_eq!(support_distance(&a, &b) == 0, a == b);
            prop_assert!(support_distance(&a, &c) <= support_distance(&a, &b) + support_distance(&b, &c));
        }

        #[test]
        fn shd_ignores_scaling(cs in proptest::collection::vec(-5.0f64..5.0, 3), scale in 0.01f64..100.0) {
            prop_assume!(cs.iter().all(|c| c.abs() > 1e-3));
            let truth = kdv_truth();
            let eq = equation("u_t", &[("u·u_x", cs[0]), ("u_xx", cs[1]), ("u", cs[2])]);
            let base = shd(&eq, &truth, &universe()).unwrap();
            let mut scaled = eq.clone();
            scaled.target_coefficient *= scale;
            for v in &mut scaled.coefficients { *v *= scale; }
            prop_assert_eq!(shd(&scaled, &truth, &universe()).unwrap(), base);
            for conv in [Convention::Sindy, Convention::Epde] {
                let n = normalize_equation(&eq, &term("u_t"), conv).unwrap();
                prop_assert_eq!(shd(&n, &truth, &universe()).unwrap(), base);
            }
        }

        #[test]
        fn pooled_error_zero_iff_exact(
            runs in proptest::collection::vec(proptest::option::of(-0.5f64..0.5), 1..6),
        ) {
            let truth = kdv_truth();
            let eqs: Vec<CandidateEquation> = runs
                .iter()
                .map(|r| match r {
                    Some(d) => equation("u_t", &[("u·u_x", 6.0 + d), ("u_xxx", 1.0)]),
                    None => equation("u_t", &[("u·u_x", 6.0)]),
                })
                .collect();
            let s = coeff_stats(&eqs, &truth).unwrap();
            let exact = runs.iter().all(|r| *r == Some(0.0));
            prop_assert_eq!(s.pooled_error == 0.0, exact);
            prop_assert!(s.terms.iter().all(|t| t.sd.is_none_or(|v| v >= 0.0)));
        }
    }
}
