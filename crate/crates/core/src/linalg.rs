//! Small linear-algebra kernels: a banded LU with partial pivoting, the
//! Thomas algorithm, and an SVD least-squares wrapper.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` columns
/// hold fill-in created by row interchanges during factorisation.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off >= self.width as isize {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` at `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let within = j + self.kl >= i && j <= i + self.ku;
        assert!(within, "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j).expect("checked above");
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting restricted to the band.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::Singular("zero matrix".into()));
        }
        let tiny = scale * 1e-14;
        let mut pivots = vec![0usize; n];
        let mut mult = vec![0.0; n * kl.max(1)];
        for r in 0..n {
            let last_row = (r + kl).min(n - 1);
            let last_col = (r + kl + ku).min(n - 1);
            let mut p = r;
            let mut best = self.get(r, r).abs();
            for i in r + 1..=last_row {
                let v = self.get(i, r).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(Error::Singular(format!("pivot {best:.3e} at row {r}")));
            }
            pivots[r] = p;
            if p != r {
                for c in r..=last_col {
                    let a = self.slot(r, c).expect("in band");
                    let b = self.slot(p, c).expect("in band");
                    self.data.swap(a, b);
                }
            }
            let piv = self.get(r, r);
            for i in r + 1..=last_row {
                let f = self.get(i, r) / piv;
                mult[r * kl + (i - r - 1)] = f;
                if f == 0.0 {
                    continue;
                }
                for c in r..=last_col {
                    let a = self.get(r, c);
                    if a != 0.0 {
                        let s = self.slot(i, c).expect("in band");
                        self.data[s] -= f * a;
                    }
                }
            }
        }
        Ok(BandedLu {
            u: self,
            pivots,
            mult,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    u: BandedMatrix,
    pivots: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.u.n, self.u.kl, self.u.ku);
        let mut x = b.to_vec();
        for r in 0..n {
            x.swap(r, self.pivots[r]);
            let xr = x[r];
            for i in r + 1..=(r + kl).min(n - 1) {
                x[i] -= self.mult[r * kl + (i - r - 1)] * xr;
            }
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..=(r + kl + ku).min(n - 1) {
                s -= self.u.get(r, c) * x[c];
            }
            x[r] = s / self.u.get(r, r);
        }
        x
    }
}

/// Thomas algorithm for `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`.
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::param("tridiagonal", "band lengths differ"));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Singular("zero leading diagonal".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::Singular(format!("zero pivot at row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Minimum-norm least-squares solution via SVD; singular values below
/// `rcond · σ_max` are treated as zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Result<DVector<f64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    svd.solve(b, rcond * smax)
        .map_err(|e| Error::Singular(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_from(b: &BandedMatrix) -> DMatrix<f64> {
        DMatrix::from_fn(b.dim(), b.dim(), |i, j| b.get(i, j))
    }

    proptest! {
        #[test]
        fn banded_lu_matches_dense_solve(
            n in 3usize..40,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = BandedMatrix::zeros(n, kl, ku);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    m.add(i, j, rng.random_range(-1.0..1.0));
                }
                // zero diagonal on some rows forces pivoting
                if i % 3 == 1 && kl > 0 {
                    let d = m.get(i, i);
                    m.add(i, i, -d);
                }
            }
            let dense = dense_from(&m);
            prop_assume!(dense.clone().svd(false, false).singular_values.min() > 1e-6);
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = m.matvec(&x_true);
            let lu = m.factor().unwrap();
            let x = lu.solve(&b);
            let cond = {
                let s = dense.svd(false, false).singular_values;
                s.max() / s.min()
            };
            for (a, e) in x.iter().zip(&x_true) {
                prop_assert!((a - e).abs() < 1e-12 * cond.max(1.0) * 10.0, "{} vs {}", a, e);
            }
        }
    }

    #[test]
    fn singular_band_detected() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(0, 1, 2.0);
        m.add(1, 0, 2.0);
        m.add(1, 1, 4.0);
        m.add(2, 2, 1.0);
        assert!(matches!(m.factor(), Err(Error::Singular(_))));
    }

    #[test]
    fn thomas_solves_poisson_rows() {
        let n = 6;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let l = if i > 0 { -x_true[i - 1] } else { 0.0 };
                let u = if i + 1 < n { -x_true[i + 1] } else { 0.0 };
                l + 2.0 * x_true[i] + u
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_overdetermined_line() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let x = lstsq(&a, &b, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }
}
