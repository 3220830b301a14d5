
use crate::error::{Error, Result};
use crate::padic::Zp;
use crate::scalar::Scalar;

/// Dense row-major matrix over Z/p^N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat<S: Scalar> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<S>]) -> Self {
        let cols = columns.len();
        let mut m = Mat::zero(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

/// Elementary divisor data of a matrix over Z/p^N.
///
/// `pivot_vals[k]` is the valuation of the k-th diagonal entry of the Smith
/// form; `None` marks a divisor that is zero mod p^N (free direction within
/// working precision).
#[derive(Clone, Debug)]
pub struct SnfReport {
    pub pivot_vals: Vec<Option<u32>>,
    pub prec: u32,
}

impl SnfReport {
    pub fn free_rank(&self) -> usize {
        self.pivot_vals.iter().filter(|v| v.is_none()).count()
    }

    pub fn unit_rank(&self) -> usize {
        self.pivot_vals.iter().filter(|v| **v == Some(0)).count()
    }

    pub fn torsion_length(&self) -> u64 {
        self.pivot_vals.iter().flatten().map(|&v| v as u64).sum()
    }

    pub fn max_finite_valuation(&self) -> u32 {
        self.pivot_vals.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Errors when some divisor sits too close to the precision ceiling to
    /// distinguish torsion from a free direction.
    pub fn check_guard(&self, guard: u32) -> Result<()> {
        let bad = self.max_finite_valuation();
        if bad + guard > self.prec {
            return Err(Error::PrecisionExhausted(format!(
                "elementary divisor valuation {bad} within {guard} digits of precision {}",
                self.prec
            )));
        }
        Ok(())
    }
}

/// Smith normal form valuations over the local ring Z/p^N: repeatedly pivots
/// on an entry of minimal valuation, normalises its unit part and clears its
/// row and column. Divisor valuations come out non-decreasing.
pub fn snf<S: Scalar>(zp: &Zp<S>, mut m: Mat<S>) -> Result<SnfReport> {
    let n = m.rows.min(m.cols);
    let mut pivot_vals = Vec::with_capacity(n);
    for k in 0..n {
        // locate minimal valuation in the trailing block
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..m.rows {
            for j in k..m.cols {
                if let Some(v) = zp.ord(m.get(i, j)) {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                        if v == 0 {
                            break;
                        }
                    }
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let Some((val, pi, pj)) = best else {
            // trailing block is zero mod p^N
            for _ in k..n {
                pivot_vals.push(None);
            }
            return Ok(SnfReport { pivot_vals, prec: zp.prec() });
        };
        m.swap_rows(k, pi);
        m.swap_cols(k, pj);
        // normalise pivot to p^val
        let unit = zp.div_exact_p(m.get(k, k), val)?;
        let unit_inv = zp.inv_unit(&unit)?;
        for j in k..m.cols {
            let v = zp.mul(m.get(k, j), &unit_inv);
            m.set(k, j, v);
        }
        // clear the column below: every entry has valuation >= val
        for i in (k + 1)..m.rows {
            let e = m.get(i, k).clone();
            if e.is_zero() {
                continue;
            }
            let q = zp.div_exact_p(&e, val)?;
            for j in k..m.cols {
                let t = zp.mul(&q, m.get(k, j));
                let v = zp.sub(m.get(i, j), &t);
                m.set(i, j, v);
            }
        }
        // clear the row to the right
        let pivot = m.get(k, k).clone();
        for j in (k + 1)..m.cols {
            let e = m.get(k, j).clone();
            if e.is_zero() {
                continue;
            }
            let q = zp.div_exact_p(&e, val)?;
            for i in k..m.rows {
                let t = zp.mul(&q, m.get(i, k));
                let v = zp.sub(m.get(i, j), &t);
                m.set(i, j, v);
            }
        }
        debug_assert_eq!(m.get(k, k), &pivot);
        pivot_vals.push(Some(val));
    }
    Ok(SnfReport { pivot_vals, prec: zp.prec() })
}

/// Result of [`solve_unit`]: the solution together with the number of digits
/// to which the leftover rows of the right-hand side vanished. `residual_digits`
/// equals the working precision when the system was exactly consistent.
#[derive(Clone, Debug)]
pub struct Solution<S: Scalar> {
    pub x: Mat<S>,
    pub residual_digits: u32,
}

/// Solves A x = b (several right-hand sides at once) by Gauss elimination
/// with unit pivots only. Intended for systems known to be unimodular onto
/// their image; errors if a unit pivot is missing. Consistency of the
/// leftover rows is reported, not enforced.
pub fn solve_unit<S: Scalar>(zp: &Zp<S>, a: &Mat<S>, rhs: &Mat<S>) -> Result<Solution<S>> {
    if a.rows != rhs.rows {
        return Err(Error::ContextMismatch("row counts differ".into()));
    }
    let rows = a.rows;
    let cols = a.cols;
    let nrhs = rhs.cols;
    let mut m = Mat::zero(rows, cols + nrhs);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, a.get(i, j).clone());
        }
        for j in 0..nrhs {
            m.set(i, cols + j, rhs.get(i, j).clone());
        }
    }
    let mut pivot_row_of_col = vec![usize::MAX; cols];
    let mut row = 0usize;
    for col in 0..cols {
        let Some(pr) = (row..rows).find(|&i| zp.is_unit(m.get(i, col))) else {
            return Err(Error::SingularSystem(format!(
                "no unit pivot in column {col}"
            )));
        };
        m.swap_rows(row, pr);
        let inv = zp.inv_unit(m.get(row, col))?;
        for j in col..(cols + nrhs) {
            let v = zp.mul(m.get(row, j), &inv);
            m.set(row, j, v);
        }
        for i in 0..rows {
            if i == row || m.get(i, col).is_zero() {
                continue;
            }
            let f = m.get(i, col).clone();
            for j in col..(cols + nrhs) {
                let t = zp.mul(&f, m.get(row, j));
                let v = zp.sub(m.get(i, j), &t);
                m.set(i, j, v);
            }
        }
        pivot_row_of_col[col] = row;
        row += 1;
    }
    // consistency of the remaining rows, reported as a digit count
    let mut residual_digits = zp.prec();
    for i in row..rows {
        for j in 0..nrhs {
            if let Some(v) = zp.ord(m.get(i, cols + j)) {
                residual_digits = residual_digits.min(v);
            }
        }
    }
    let mut x = Mat::zero(cols, nrhs);
    for col in 0..cols {
        let r = pivot_row_of_col[col];
        for j in 0..nrhs {
            x.set(col, j, m.get(r, cols + j).clone());
        }
    }
    Ok(Solution { x, residual_digits })
}

/// [`solve_unit`] with exact consistency required.
pub fn solve_exact<S: Scalar>(zp: &Zp<S>, a: &Mat<S>, rhs: &Mat<S>) -> Result<Mat<S>> {
    let sol = solve_unit(zp, a, rhs)?;
    if sol.residual_digits < zp.prec() {
        return Err(Error::SingularSystem(format!(
            "inconsistent system: residual only vanishes to {} of {} digits",
            sol.residual_digits,
            zp.prec()
        )));
    }
    Ok(sol.x)
}
