use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MultiIndex;

/// One multiplicand of a library term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// `∂^α u`; the zero index is `u` itself.
    Deriv(MultiIndex),
    /// The coordinate along one grid axis.
    Coord(usize),
}

impl Factor {
    pub fn label(&self, names: &[String]) -> String {
        match self {
            Factor::Deriv(idx) => idx.label(names),
            Factor::Coord(k) => names.get(*k).cloned().unwrap_or_else(|| format!("x{k}")),
        }
    }

    fn parse(s: &str, names: &[String]) -> Option<Self> {
        if let Some(idx) = MultiIndex::parse_label(s, names) {
            return Some(Factor::Deriv(idx));
        }
        names.iter().position(|n| n == s).map(Factor::Coord)
    }
}

/// A product of factors with positive integer powers, kept in canonical
/// order so that structural equality is plain `==`. The empty product is
/// the constant term `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermSpec {
    factors: Vec<(Factor, u32)>,
}

impl TermSpec {
    pub fn constant() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn new(factors: impl IntoIterator<Item = (Factor, u32)>) -> Self {
        let mut v: Vec<(Factor, u32)> = factors.into_iter().filter(|(_, p)| *p > 0).collect();
        v.sort();
        let mut merged: Vec<(Factor, u32)> = Vec::with_capacity(v.len());
        for (f, p) in v {
            match merged.last_mut() {
                Some((g, q)) if *g == f => *q += p,
                _ => merged.push((f, p)),
            }
        }
        Self { factors: merged }
    }

    pub fn deriv(index: MultiIndex) -> Self {
        Self::new([(Factor::Deriv(index), 1)])
    }

    /// Product of derivative factors given as multi-indices (repeats allowed).
    pub fn product(indices: impl IntoIterator<Item = MultiIndex>) -> Self {
        Self::new(indices.into_iter().map(|i| (Factor::Deriv(i), 1)))
    }

    pub fn factors(&self) -> &[(Factor, u32)] {
        &self.factors
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    /// Sum of powers.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }

    /// Highest total derivative order among the factors.
    pub fn max_order(&self) -> usize {
        self.factors
            .iter()
            .map(|(f, _)| match f {
                Factor::Deriv(i) => i.total(),
                Factor::Coord(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Whether this is a single derivative (or `u`) to the first power.
    pub fn as_single(&self) -> Option<&MultiIndex> {
        match self.factors.as_slice() {
            [(Factor::Deriv(i), 1)] => Some(i),
            _ => None,
        }
    }

    pub fn shares_factor(&self, other: &TermSpec) -> bool {
        self.factors
            .iter()
            .any(|(f, _)| other.factors.iter().any(|(g, _)| f == g))
    }

    pub fn mul(&self, other: &TermSpec) -> TermSpec {
        TermSpec::new(self.factors.iter().chain(&other.factors).cloned())
    }

    /// Human-readable label such as `u·u_x`, `u^2` or `1`.
    pub fn label(&self, names: &[String]) -> String {
        if self.factors.is_empty() {
            return "1".to_string();
        }
        self.factors
            .iter()
            .map(|(f, p)| {
                let l = f.label(names);
                if *p == 1 {
                    l
                } else {
                    format!("{l}^{p}")
                }
            })
            .collect::<Vec<_>>()
            .join("·")
    }

    /// Parses labels produced by [`TermSpec::label`]; `*` is accepted as a
    /// separator as well as `·`.
    pub fn parse(s: &str, names: &[String]) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Self::constant());
        }
        let mut factors = Vec::new();
        for part in s.split(['·', '*']) {
            let part = part.trim();
            let (base, power) = match part.split_once('^') {
                Some((b, p)) => {
                    let p: u32 = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::Format(format!("bad power in term `{s}`")))?;
                    (b.trim(), p)
                }
                None => (part, 1),
            };
            if power == 0 {
                return Err(Error::Format(format!("zero power in term `{s}`")));
            }
            let f = Factor::parse(base, names)
                .ok_or_else(|| Error::Format(format!("unknown factor `{base}` in term `{s}`")))?;
            factors.push((f, power));
        }
        Ok(Self::new(factors))
    }
}

impl PartialOrd for TermSpec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermSpec {
    /// Graded lexicographic: by degree, then over the factor sequence with
    /// powers expanded (`u^2` before `u·u_x`).
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let expand = |t: &TermSpec| -> Vec<Factor> {
            t.factors
                .iter()
                .flat_map(|(f, p)| std::iter::repeat_n(f.clone(), *p as usize))
                .collect()
        };
        self.degree()
            .cmp(&other.degree())
            .then_with(|| expand(self).cmp(&expand(other)))
    }
}

impl fmt::Display for TermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dim = self
            .factors
            .iter()
            .find_map(|(f, _)| match f {
                Factor::Deriv(i) => Some(i.dim()),
                Factor::Coord(_) => None,
            })
            .unwrap_or(1);
        let names: Vec<String> = match dim {
            1 => vec!["t".into()],
            2 => vec!["t".into(), "x".into()],
            d => (0..d).map(|k| format!("x{k}")).collect(),
        };
        f.write_str(&self.label(&names))
    }
}
