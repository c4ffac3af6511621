use std::fmt;

use serde::{Deserialize, Serialize};

/// Differential multi-index: the derivative order along each grid axis.
///
/// Ordering is by total order first, then lexicographic on the per-axis
/// orders, so that sorted collections list `u`, first derivatives, second
/// derivatives and so on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(orders: Vec<usize>) -> Self {
        Self(orders)
    }

    /// The zero index, i.e. the field itself.
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// Pure partial derivative of `order` along `axis`.
    pub fn along(dim: usize, axis: usize, order: usize) -> Self {
        let mut v = vec![0; dim];
        v[axis] = order;
        Self(v)
    }

    pub fn orders(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&o| o == 0)
    }

    /// Label in subscript notation, e.g. `u_txx` for `[1, 2]` with axes `t, x`.
    pub fn label(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "u".to_string();
        }
        let mut s = String::from("u_");
        for (k, &o) in self.0.iter().enumerate() {
            let name = names.get(k).map(String::as_str).unwrap_or("?");
            for _ in 0..o {
                s.push_str(name);
            }
        }
        s
    }

    /// Inverse of [`MultiIndex::label`] for single-character axis names.
    pub fn parse_label(label: &str, names: &[String]) -> Option<Self> {
        if label == "u" {
            return Some(Self::zero(names.len()));
        }
        let rest = label.strip_prefix("u_")?;
        if rest.is_empty() {
            return None;
        }
        let mut orders = vec![0; names.len()];
        let mut rest = rest;
        while !rest.is_empty() {
            let (k, name) = names
                .iter()
                .enumerate()
                .filter(|(_, n)| rest.starts_with(n.as_str()))
                .max_by_key(|(_, n)| n.len())?;
            orders[k] += 1;
            rest = &rest[name.len()..];
        }
        Some(Self(orders))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, o) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")")
    }
}
