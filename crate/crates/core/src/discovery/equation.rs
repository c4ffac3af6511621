use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::terms::TermSpec;
use crate::error::{Error, Result};

/// Diagnostics attached to a fitted equation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquationFlags {
    pub empty_support: bool,
    /// Relative residual above [`POOR_FIT_THRESHOLD`].
    pub poor_fit: bool,
    /// Labels of all-zero columns left out of the regression.
    pub dropped: Vec<String>,
}

/// Relative residual `‖r‖² / ‖target‖²` above which a fit is flagged.
pub const POOR_FIT_THRESHOLD: f64 = 0.5;

/// Implicit equation `c_target · target + Σ cⱼ · termⱼ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEquation {
    pub target: TermSpec,
    pub target_coefficient: f64,
    /// Sorted, never containing the target.
    pub support: Vec<TermSpec>,
    pub coefficients: Vec<f64>,
    /// Mean squared residual over the evaluation nodes.
    pub loss: f64,
    /// `loss` divided by the mean square of the target column.
    pub relative_loss: f64,
    pub complexity: usize,
    pub names: Vec<String>,
    #[serde(default)]
    pub flags: EquationFlags,
}

/// Sign given to the designated term after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Designated term → +1.
    Sindy,
    /// Designated term → −1.
    Epde,
}

impl Convention {
    pub fn sign(self) -> f64 {
        match self {
            Convention::Sindy => 1.0,
            Convention::Epde => -1.0,
        }
    }
}

impl CandidateEquation {
    /// Builds the equation from `target = Σ ξⱼ termⱼ`, i.e. coefficients
    /// `−ξⱼ` next to a unit target. Zero coefficients are left out.
    pub fn from_regression(
        target: TermSpec,
        terms: &[TermSpec],
        xi: &[f64],
        loss: f64,
        target_mean_square: f64,
        names: Vec<String>,
    ) -> Self {
        let mut pairs: Vec<(TermSpec, f64)> = terms
            .iter()
            .zip(xi)
            .filter(|(t, c)| **c != 0.0 && **t != target)
            .map(|(t, c)| (t.clone(), -c))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let relative_loss = if target_mean_square > 0.0 {
            loss / target_mean_square
        } else {
            f64::INFINITY
        };
        let (support, coefficients): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let complexity = support.len();
        Self {
            target,
            target_coefficient: 1.0,
            flags: EquationFlags {
                empty_support: complexity == 0,
                poor_fit: !(relative_loss <= POOR_FIT_THRESHOLD),
                dropped: Vec::new(),
            },
            support,
            coefficients,
            loss,
            relative_loss,
            complexity,
            names,
        }
    }

    /// Every term with a nonzero coefficient, target included.
    pub fn full_support(&self) -> BTreeSet<TermSpec> {
        let mut s: BTreeSet<TermSpec> = self.support.iter().cloned().collect();
        s.insert(self.target.clone());
        s
    }

    pub fn coefficient(&self, term: &TermSpec) -> Option<f64> {
        if *term == self.target {
            return Some(self.target_coefficient);
        }
        self.support
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    pub fn label(&self, term: &TermSpec) -> String {
        term.label(&self.names)
    }

    /// Every term with its coefficient, in term order.
    pub fn terms(&self) -> Vec<(TermSpec, f64)> {
        let mut all: Vec<(TermSpec, f64)> = self
            .support
            .iter()
            .cloned()
            .zip(self.coefficients.iter().copied())
            .collect();
        all.push((self.target.clone(), self.target_coefficient));
        all.sort_by(|a, b| a.0.cmp(&b.0));
        all
    }

    /// Canonical one-line form, e.g. `+1.000000e0 u_t -5.000000e-2 u_xx = 0`.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (t, c) in self.terms() {
            s.push_str(&format!("{c:+.6e} {} ", t.label(&self.names)));
        }
        s.push_str("= 0");
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Term set of a canonical text line produced by
/// [`CandidateEquation::canonical_text`].
pub fn support_from_text(text: &str, names: &[String]) -> Result<BTreeSet<TermSpec>> {
    let body = text
        .trim()
        .strip_suffix("= 0")
        .ok_or_else(|| Error::Format("equation text must end in `= 0`".into()))?;
    let tokens: Vec<&str> = body.split_whitespace().collect();
    if !tokens.len().is_multiple_of(2) {
        return Err(Error::Format("expected coefficient/term pairs".into()));
    }
    let mut out = BTreeSet::new();
    for pair in tokens.chunks(2) {
        let c: f64 = pair[0]
            .parse()
            .map_err(|_| Error::Format(format!("bad coefficient `{}`", pair[0])))?;
        if c != 0.0 {
            out.insert(TermSpec::parse(pair[1], names)?);
        }
    }
    Ok(out)
}

/// Rescales every coefficient so that `term` carries the convention's sign.
pub fn normalize_equation(eq: &CandidateEquation, term: &TermSpec, convention: Convention) -> Result<CandidateEquation> {
    let c = eq
        .coefficient(term)
        .filter(|c| *c != 0.0)
        .ok_or_else(|| Error::TermAbsent(term.label(&eq.names)))?;
    let scale = convention.sign() / c;
    let mut out = eq.clone();
    out.target_coefficient *= scale;
    for v in &mut out.coefficients {
        *v *= scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["t".into()]
    }

    fn term(s: &str) -> TermSpec {
        TermSpec::parse(s, &names()).unwrap()
    }

    fn ode(target_c: f64, cs: &[(&str, f64)]) -> CandidateEquation {
        let mut eq = CandidateEquation::from_regression(
            term("u_tt"),
            &cs.iter().map(|(s, _)| term(s)).collect::<Vec<_>>(),
            &cs.iter().map(|(_, c)| -c).collect::<Vec<_>>(),
            0.0,
            1.0,
            names(),
        );
        eq.target_coefficient = target_c;
        eq
    }

    #[test]
    fn normalization_examples() {
        let eq = ode(1.0, &[("u_t", 0.5), ("u", 6.0)]);
        let n = normalize_equation(&eq, &term("u_tt"), Convention::Sindy).unwrap();
        assert_eq!(n.target_coefficient, 1.0);
        assert_eq!(n.coefficient(&term("u_t")), Some(0.5));
        assert_eq!(n.coefficient(&term("u")), Some(6.0));

        let eq = ode(2.0, &[("u", 0.5)]);
        let n = normalize_equation(&eq, &term("u_tt"), Convention::Sindy).unwrap();
        assert_eq!(n.coefficient(&term("u")), Some(0.25));

        let n = normalize_equation(&eq, &term("u_tt"), Convention::Epde).unwrap();
        assert_eq!(n.target_coefficient, -1.0);
        assert_eq!(n.coefficient(&term("u")), Some(-0.25));
        assert_eq!(n.full_support(), eq.full_support());
    }

    #[test]
    fn normalizing_on_absent_term_fails() {
        let eq = ode(1.0, &[("u", 3.0)]);
        assert!(matches!(
            normalize_equation(&eq, &term("u_t"), Convention::Sindy),
            Err(Error::TermAbsent(_))
        ));
    }

    #[test]
    fn canonical_text_round_trip() {
        let eq = ode(1.0, &[("u_t", 0.25), ("u", 3.0)]);
        let text = eq.canonical_text();
        assert_eq!(text, "+3.000000e0 u +2.500000e-1 u_t +1.000000e0 u_tt = 0");
        assert_eq!(support_from_text(&text, &names()).unwrap(), eq.full_support());
        let back = CandidateEquation::from_json(&eq.to_json().unwrap()).unwrap();
        assert_eq!(back, eq);
    }

    #[test]
    fn empty_support_is_flagged() {
        let eq = CandidateEquation::from_regression(term("u_t"), &[term("u")], &[0.0], 1.0, 1.0, names());
        assert!(eq.flags.empty_support);
        assert!(eq.flags.poor_fit);
        assert_eq!(eq.complexity, 0);
    }
}
