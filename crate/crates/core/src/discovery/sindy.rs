use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::equation::CandidateEquation;
use super::library::TermLibrary;
use super::terms::TermSpec;
use crate::error::{Error, Result};
use crate::linalg::lstsq;

const RCOND: f64 = 1e-12;
const LASSO_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sparsifier {
    /// Sequentially thresholded least squares; the threshold applies to
    /// coefficients of RMS-normalized columns.
    Stlsq { threshold: f64 },
    /// `½‖y − Xξ‖²/n + α‖ξ‖₁` on RMS-normalized columns.
    Lasso { alpha: f64 },
}

impl Default for Sparsifier {
    fn default() -> Self {
        Sparsifier::Stlsq { threshold: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SindyConfig {
    pub sparsifier: Sparsifier,
    /// Leaves out every regressor that shares a factor with the target,
    /// e.g. `u·u_t` when regressing `u_t`.
    pub exclude_target_factors: bool,
    pub max_iterations: usize,
}

impl Default for SindyConfig {
    fn default() -> Self {
        Self {
            sparsifier: Sparsifier::default(),
            exclude_target_factors: true,
            max_iterations: 10_000,
        }
    }
}

impl SindyConfig {
    pub fn stlsq(threshold: f64) -> Self {
        Self {
            sparsifier: Sparsifier::Stlsq { threshold },
            ..Default::default()
        }
    }

    pub fn lasso(alpha: f64) -> Self {
        Self {
            sparsifier: Sparsifier::Lasso { alpha },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.sparsifier {
            Sparsifier::Stlsq { threshold } if !(threshold >= 0.0 && threshold.is_finite()) => {
                Err(Error::param("threshold", "must be finite and non-negative"))
            }
            Sparsifier::Lasso { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => {
                Err(Error::param("alpha", "must be finite and non-negative"))
            }
            _ if self.max_iterations == 0 => Err(Error::param("max_iterations", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// The library with every column divided by its RMS and compressed to the
/// triangular factor of a QR decomposition. Least squares between any
/// subsets of columns is exact on the compressed form.
#[derive(Debug, Clone)]
pub(crate) struct ScaledDesign {
    r: DMatrix<f64>,
    scales: Vec<f64>,
}

impl ScaledDesign {
    pub(crate) fn new(library: &TermLibrary) -> Self {
        let x = library.matrix();
        let n = x.nrows() as f64;
        let mut scaled = x.clone();
        let mut scales = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let rms = (x.column(j).norm_squared() / n).sqrt();
            scales.push(rms);
            if rms > 0.0 {
                scaled.column_mut(j).unscale_mut(rms);
            }
        }
        let r = scaled.qr().r();
        Self { r, scales }
    }

    pub(crate) fn is_zero(&self, j: usize) -> bool {
        !(self.scales[j] > 0.0)
    }

    pub(crate) fn scale(&self, j: usize) -> f64 {
        self.scales[j]
    }

    /// Least squares of column `target` on `subset`, returning normalized
    /// coefficients and the residual mean square relative to the target's.
    pub(crate) fn fit(&self, target: usize, subset: &[usize], rows: usize) -> Result<(Vec<f64>, f64)> {
        let y: DVector<f64> = self.r.column(target).into_owned();
        if subset.is_empty() {
            return Ok((Vec::new(), y.norm_squared() / rows as f64));
        }
        let a = self.r.select_columns(subset);
        let xi = lstsq(&a, &y, RCOND)?;
        let resid = &y - &a * &xi;
        Ok((xi.iter().copied().collect(), resid.norm_squared() / rows as f64))
    }

    /// Gram block `AᵀA/n` and `Aᵀy/n` of the normalized columns.
    fn gram(&self, target: usize, subset: &[usize], rows: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
        let a = self.r.select_columns(subset);
        let y: DVector<f64> = self.r.column(target).into_owned();
        let n = rows as f64;
        (a.transpose() * &a / n, a.transpose() * &y / n, y.norm_squared() / n)
    }

    /// Converts normalized coefficients back to the original column units.
    pub(crate) fn unscale(&self, target: usize, subset: &[usize], xi: &[f64]) -> Vec<f64> {
        subset
            .iter()
            .zip(xi)
            .map(|(&j, &c)| c * self.scales[target] / self.scales[j])
            .collect()
    }
}

/// Regresses `target` on the remaining library columns.
pub fn sindy_fit(library: &TermLibrary, target: &TermSpec, config: &SindyConfig) -> Result<CandidateEquation> {
    sindy_fit_restricted(library, target, library.terms(), config)
}

/// Like [`sindy_fit`] but only terms in `allowed` may enter the support.
pub fn sindy_fit_restricted(
    library: &TermLibrary,
    target: &TermSpec,
    allowed: &[TermSpec],
    config: &SindyConfig,
) -> Result<CandidateEquation> {
    config.validate()?;
    let design = ScaledDesign::new(library);
    fit_with_design(library, &design, target, allowed, config)
}

/// Fits every candidate target and keeps the equation with the smallest
/// relative residual.
pub fn sindy_select_target(
    library: &TermLibrary,
    candidates: &[TermSpec],
    config: &SindyConfig,
) -> Result<CandidateEquation> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::Empty("candidate targets"));
    }
    let design = ScaledDesign::new(library);
    let mut best: Option<CandidateEquation> = None;
    for t in candidates {
        let eq = fit_with_design(library, &design, t, library.terms(), config)?;
        if best.as_ref().is_none_or(|b| eq.relative_loss < b.relative_loss) {
            best = Some(eq);
        }
    }
    Ok(best.expect("at least one candidate"))
}

fn fit_with_design(
    library: &TermLibrary,
    design: &ScaledDesign,
    target: &TermSpec,
    allowed: &[TermSpec],
    config: &SindyConfig,
) -> Result<CandidateEquation> {
    let t = library
        .position(target)
        .ok_or_else(|| Error::TermNotInUniverse(library.label(target)))?;
    let rows = library.rows();
    let mut dropped = Vec::new();
    let mut regressors = Vec::new();
    for (j, term) in library.terms().iter().enumerate() {
        if j == t || !allowed.contains(term) {
            continue;
        }
        if config.exclude_target_factors && term.shares_factor(target) {
            continue;
        }
        if design.is_zero(j) {
            log::warn!("dropping all-zero library column {}", library.label(term));
            dropped.push(library.label(term));
            continue;
        }
        regressors.push(j);
    }
    let names = library.names().to_vec();
    let target_ms = design.scale(t).powi(2);
    if design.is_zero(t) {
        let mut eq = CandidateEquation::from_regression(target.clone(), &[], &[], 0.0, 0.0, names);
        eq.flags.dropped = dropped;
        return Ok(eq);
    }

    let (subset, xi, rel) = match config.sparsifier {
        Sparsifier::Stlsq { threshold } => stlsq(design, t, regressors, threshold, rows, config.max_iterations)?,
        Sparsifier::Lasso { alpha } => {
            let xi = lasso(design, t, &regressors, alpha, rows, config.max_iterations)?;
            let (_, rel) = design.fit(t, &[], rows)?;
            let (g, b, yy) = design.gram(t, &regressors, rows);
            let x = DVector::from_column_slice(&xi);
            let rel = if regressors.is_empty() {
                rel
            } else {
                (yy - 2.0 * b.dot(&x) + x.dot(&(&g * &x))).max(0.0)
            };
            (regressors, xi, rel)
        }
    };
    let coeffs = design.unscale(t, &subset, &xi);
    let terms: Vec<TermSpec> = subset.iter().map(|&j| library.terms()[j].clone()).collect();
    let mut eq = CandidateEquation::from_regression(target.clone(), &terms, &coeffs, rel * target_ms, target_ms, names);
    eq.relative_loss = rel;
    eq.flags.dropped = dropped;
    Ok(eq)
}

fn stlsq(
    design: &ScaledDesign,
    target: usize,
    mut active: Vec<usize>,
    threshold: f64,
    rows: usize,
    max_iterations: usize,
) -> Result<(Vec<usize>, Vec<f64>, f64)> {
    let (mut xi, mut rel) = design.fit(target, &active, rows)?;
    for _ in 0..max_iterations {
        let keep: Vec<usize> = active
            .iter()
            .zip(&xi)
            .filter(|(_, c)| c.abs() >= threshold)
            .map(|(&j, _)| j)
            .collect();
        if keep.len() == active.len() {
            break;
        }
        active = keep;
        (xi, rel) = design.fit(target, &active, rows)?;
    }
    Ok((active, xi, rel))
}

/// Cyclic coordinate descent, stopped on the duality gap.
fn lasso(
    design: &ScaledDesign,
    target: usize,
    subset: &[usize],
    alpha: f64,
    rows: usize,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let p = subset.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let (g, b, yy) = design.gram(target, subset, rows);
    let mut xi = DVector::<f64>::zeros(p);
    let mut gx = DVector::<f64>::zeros(p);
    let mut gap = f64::INFINITY;
    for _ in 0..max_iterations {
        for j in 0..p {
            let gjj = g[(j, j)];
            let old = xi[j];
            let rho = b[j] - gx[j] + gjj * old;
            let new = soft_threshold(rho, alpha) / gjj;
            if new != old {
                let d = new - old;
                for k in 0..p {
                    gx[k] += g[(k, j)] * d;
                }
                xi[j] = new;
            }
        }
        gap = duality_gap(&xi, &gx, &b, yy, alpha);
        if gap <= LASSO_TOLERANCE * yy {
            return Ok(xi.iter().copied().collect());
        }
    }
    Err(Error::NonConvergence {
        solver: "LASSO",
        iterations: max_iterations,
        residual: gap,
    })
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn duality_gap(xi: &DVector<f64>, gx: &DVector<f64>, b: &DVector<f64>, yy: f64, alpha: f64) -> f64 {
    let bx = b.dot(xi);
    let r2 = (yy - 2.0 * bx + xi.dot(gx)).max(0.0);
    let dual_norm = (b - gx).amax();
    let l1: f64 = xi.iter().map(|v| v.abs()).sum();
    let (c, mut gap) = if dual_norm > alpha {
        let c = alpha / dual_norm;
        (c, 0.5 * r2 * (1.0 + c * c))
    } else {
        (1.0, r2)
    };
    gap += alpha * l1 - c * (yy - bx);
    gap.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names() -> Vec<String> {
        vec!["t".into(), "x".into()]
    }

    fn term(s: &str) -> TermSpec {
        TermSpec::parse(s, &names()).unwrap()
    }

    /// Random columns for `u, u_x, u_xx, u·u_x` and a target `u_t` built
    /// from the given coefficients.
    fn synthetic(coeffs: [f64; 4], seed: u64, rows: usize) -> TermLibrary {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..rows)
            .map(|i| (0..4).map(|k| coeffs[k] * cols[k][i]).sum())
            .collect();
        cols.push(y);
        let terms = ["u", "u_x", "u_xx", "u·u_x", "u_t"].map(term).to_vec();
        TermLibrary::from_columns(terms, cols, names()).unwrap()
    }

    #[test]
    fn exact_relation_recovered() {
        let lib = synthetic([0.0, -1.5, 0.1, -1.0], 1, 200);
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::stlsq(0.01)).unwrap();
        let support: Vec<String> = eq.support.iter().map(|t| eq.label(t)).collect();
        assert_eq!(support, vec!["u_x", "u_xx", "u·u_x"]);
        for (t, want) in [("u_x", 1.5), ("u_xx", -0.1), ("u·u_x", 1.0)] {
            assert!((eq.coefficient(&term(t)).unwrap() - want).abs() < 1e-10);
        }
        assert!(eq.loss < 1e-20);
        assert!(!eq.flags.poor_fit);
    }

    #[test]
    fn lasso_shrinks_but_keeps_support() {
        let lib = synthetic([0.0, -1.5, 0.4, -1.0], 2, 400);
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::lasso(1e-3)).unwrap();
        let c = eq.coefficient(&term("u_x")).unwrap();
        assert!((c - 1.5).abs() < 0.01, "{c}");
        assert!(eq.coefficient(&term("u·u_x")).is_some());
    }

    #[test]
    fn lasso_with_large_penalty_is_empty() {
        let lib = synthetic([0.0, -1.5, 0.4, -1.0], 3, 100);
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::lasso(100.0)).unwrap();
        assert!(eq.flags.empty_support);
        assert!((eq.relative_loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_noise_target_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows = 2000;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let terms = ["u", "u_x", "u_t"].map(term).to_vec();
        let lib = TermLibrary::from_columns(terms, cols, names()).unwrap();
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::stlsq(0.1)).unwrap();
        assert!(eq.complexity == 0);
        assert!(eq.flags.poor_fit && eq.flags.empty_support);
    }

    #[test]
    fn zero_columns_dropped() {
        let rows = 50;
        let u: Vec<f64> = (0..rows).map(|i| (i as f64 * 0.3).sin()).collect();
        let ut: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        let terms = ["u", "u_x", "u_t"].map(term).to_vec();
        let lib = TermLibrary::from_columns(terms, vec![u, vec![0.0; rows], ut], names()).unwrap();
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::default()).unwrap();
        assert_eq!(eq.flags.dropped, vec!["u_x".to_string()]);
        assert!((eq.coefficient(&term("u")).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn target_factor_exclusion() {
        let rows = 64;
        let ut: Vec<f64> = (0..rows).map(|i| (i as f64 * 0.1).cos()).collect();
        let u: Vec<f64> = (0..rows).map(|i| 1.0 + (i as f64 * 0.2).sin()).collect();
        let uut: Vec<f64> = u.iter().zip(&ut).map(|(a, b)| a * b).collect();
        let terms = ["u", "u_t", "u·u_t"].map(term).to_vec();
        let lib = TermLibrary::from_columns(terms, vec![u, ut, uut], names()).unwrap();
        let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::default()).unwrap();
        assert!(eq.coefficient(&term("u·u_t")).is_none());
        let cfg = SindyConfig {
            exclude_target_factors: false,
            ..Default::default()
        };
        let eq = sindy_fit(&lib, &term("u_t"), &cfg).unwrap();
        assert!(eq.coefficient(&term("u·u_t")).is_some());
    }

    #[test]
    fn target_selection_prefers_best_fit() {
        let lib = synthetic([0.0, -1.5, 0.0, 0.0], 4, 100);
        let eq = sindy_select_target(&lib, &[term("u_xx"), term("u_t")], &SindyConfig::default()).unwrap();
        assert!(eq.target == term("u_t") || eq.target == term("u_x"));
        assert!(eq.relative_loss < 1e-20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn stlsq_support_invariant_under_scaling(seed in any::<u64>(), scale in 1e-3f64..1e3) {
            let lib = synthetic([0.3, -1.5, 0.02, -1.0], seed, 120);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let noisy: Vec<Vec<f64>> = (0..5)
                .map(|j| lib.matrix().column(j).iter().map(|v| v + 0.05 * rng.random_range(-1.0..1.0)).collect())
                .collect();
            let lib = TermLibrary::from_columns(lib.terms().to_vec(), noisy, names()).unwrap();
            let cfg = SindyConfig::stlsq(0.1);
            let a = sindy_fit(&lib, &term("u_t"), &cfg).unwrap();
            let b = sindy_fit(&lib.scaled(scale), &term("u_t"), &cfg).unwrap();
            prop_assert_eq!(&a.support, &b.support);
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
            }
        }

        #[test]
        fn stlsq_is_a_fixed_point(seed in any::<u64>(), threshold in 0.01f64..0.5) {
            let lib = synthetic([0.3, -1.5, 0.05, -1.0], seed, 80);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7));
            let noisy: Vec<Vec<f64>> = (0..5)
                .map(|j| lib.matrix().column(j).iter().map(|v| v + 0.2 * rng.random_range(-1.0..1.0)).collect())
                .collect();
            let lib = TermLibrary::from_columns(lib.terms().to_vec(), noisy, names()).unwrap();
            let cfg = SindyConfig::stlsq(threshold);
            let first = sindy_fit(&lib, &term("u_t"), &cfg).unwrap();
            let again = sindy_fit_restricted(&lib, &term("u_t"), &first.support, &cfg).unwrap();
            prop_assert_eq!(&first.support, &again.support);
            for (x, y) in first.coefficients.iter().zip(&again.coefficients) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn stlsq_recovers_exact_sparse_relations(
            seed in any::<u64>(),
            mask in 1u8..16,
            mags in proptest::array::uniform4(0.2f64..3.0),
            signs in proptest::array::uniform4(any::<bool>()),
        ) {
            let coeffs: [f64; 4] = std::array::from_fn(|k| {
                if mask & (1 << k) != 0 { if signs[k] { mags[k] } else { -mags[k] } } else { 0.0 }
            });
            let lib = synthetic(coeffs, seed, 60);
            // uniform(−1, 1) columns have RMS ≈ 0.58, so normalized
            // coefficients stay above 0.2 · 0.58 / RMS(target)
            let eq = sindy_fit(&lib, &term("u_t"), &SindyConfig::stlsq(1e-3)).unwrap();
            let want: Vec<TermSpec> = ["u", "u_x", "u_xx", "u·u_x"]
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| *c != 0.0)
                .map(|(s, _)| term(s))
                .collect();
            let mut want = want;
            want.sort();
            prop_assert_eq!(&eq.support, &want);
        }
    }
}
