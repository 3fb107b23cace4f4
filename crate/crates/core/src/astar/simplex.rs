//! Exact two-phase simplex for `min c x  s.t.  A x = b, x >= 0` with integer
//! `A`, `b` and nonnegative rational `c`.
//!
//! Arithmetic runs on checked `Ratio<i128>` and restarts on arbitrary
//! precision if any intermediate value overflows. Bland's rule is used for
//! both entering and leaving choices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Optimal {
        value: Rational,
        /// Primal solution; absent when it does not fit the small rational type.
        x: Option<Vec<Rational>>,
    },
}

/// Constraint system in column form: `columns[j]` lists `(row, coefficient)`.
#[derive(Clone, Debug)]
pub struct EqualityLp<'a> {
    pub rows: usize,
    pub columns: &'a [Vec<(usize, i64)>],
    pub rhs: &'a [i64],
    pub costs: &'a [Rational],
}

pub fn solve(lp: &EqualityLp<'_>) -> LpOutcome {
    match Tableau::<Ratio<i128>>::run(lp) {
        Some(out) => out,
        None => Tableau::<BigRational>::run(lp).expect("arbitrary precision cannot overflow"),
    }
}

trait Field: Clone + PartialOrd + Sized {
    fn zero_f() -> Self;
    fn one_f() -> Self;
    fn from_int(v: i64) -> Self;
    fn from_rational(v: &Rational) -> Self;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn div(&self, o: &Self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn to_small(&self) -> Option<Rational>;
    /// Largest multiple of `1/denom` not above the value.
    fn floor_to(&self, denom: i128) -> Rational;
}

impl Field for Ratio<i128> {
    fn zero_f() -> Self {
        Zero::zero()
    }
    fn one_f() -> Self {
        One::one()
    }
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }
    fn from_rational(v: &Rational) -> Self {
        *v
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        self.checked_div(o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn to_small(&self) -> Option<Rational> {
        Some(*self)
    }
    fn floor_to(&self, _denom: i128) -> Rational {
        *self
    }
}

impl Field for BigRational {
    fn zero_f() -> Self {
        Zero::zero()
    }
    fn one_f() -> Self {
        One::one()
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_rational(v: &Rational) -> Self {
        BigRational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn to_small(&self) -> Option<Rational> {
        Some(Rational::new(self.numer().to_i128()?, self.denom().to_i128()?))
    }
    fn floor_to(&self, denom: i128) -> Rational {
        if let Some(v) = self.to_small() {
            return v;
        }
        let scaled = (self.numer() * BigInt::from(denom)).div_floor(self.denom());
        Rational::new(scaled.to_i128().unwrap_or(i128::MAX / denom.max(1)), denom)
    }
}

struct Tableau<F> {
    /// Row-major constraint rows; the last entry of each row is the rhs.
    rows: Vec<Vec<F>>,
    /// Reduced costs with the negated objective value in the last entry.
    obj: Vec<F>,
    basis: Vec<usize>,
    n_struct: usize,
    n_cols: usize,
}

impl<F: Field> Tableau<F> {
    fn run(lp: &EqualityLp<'_>) -> Option<LpOutcome> {
        let m = lp.rows;
        let n = lp.columns.len();
        let n_cols = n + m;
        let mut rows: Vec<Vec<F>> = (0..m).map(|_| vec![F::zero_f(); n_cols + 1]).collect();
        for (j, col) in lp.columns.iter().enumerate() {
            for &(r, v) in col {
                rows[r][j] = rows[r][j].add(&F::from_int(v))?;
            }
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row[n_cols] = F::from_int(lp.rhs[r]);
            if lp.rhs[r] < 0 {
                for v in row.iter_mut() {
                    if !v.is_zero() {
                        *v = F::zero_f().sub(v)?;
                    }
                }
            }
            row[n + r] = F::one_f();
        }
        // Phase 1 objective: minimise the sum of artificials.
        let mut obj = vec![F::zero_f(); n_cols + 1];
        for row in &rows {
            for (j, v) in row.iter().enumerate() {
                if (j < n || j == n_cols) && !v.is_zero() {
                    obj[j] = obj[j].sub(v)?;
                }
            }
        }
        let mut t = Tableau {
            rows,
            obj,
            basis: (n..n + m).collect(),
            n_struct: n,
            n_cols,
        };
        t.optimise(n_cols)?;
        if t.obj[n_cols].is_negative() {
            return Some(LpOutcome::Infeasible);
        }
        t.drive_out_artificials()?;

        // Phase 2 objective on the structural columns.
        let costs: Vec<F> = lp.costs.iter().map(F::from_rational).collect();
        let mut obj = vec![F::zero_f(); n_cols + 1];
        obj[..n].clone_from_slice(&costs);
        for (r, &b) in t.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in t.rows[r].iter().enumerate() {
                if !v.is_zero() && (j < n || j == n_cols) {
                    obj[j] = obj[j].sub(&cb.mul(v)?)?;
                }
            }
        }
        t.obj = obj;
        t.optimise(n)?;

        let value = F::zero_f().sub(&t.obj[n_cols])?;
        let mut x: Option<Vec<Rational>> = Some(vec![Rational::zero(); n]);
        for (r, &b) in t.basis.iter().enumerate() {
            let v = &t.rows[r][n_cols];
            if let Some(xs) = x.as_mut() {
                match v.to_small() {
                    Some(s) => xs[b] = s,
                    None => x = None,
                }
            }
        }
        let value = value.floor_to(1_000_000_000_000);
        Some(LpOutcome::Optimal { value, x })
    }

    /// Pivots until no column below `limit` has a negative reduced cost.
    fn optimise(&mut self, limit: usize) -> Option<()> {
        loop {
            let Some(enter) = (0..limit).find(|&j| self.obj[j].is_negative()) else {
                return Some(());
            };
            let mut leave: Option<(usize, F)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = row[self.n_cols].div(a)?;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            // Costs are nonnegative and x >= 0, so the problem is never unbounded.
            let (r, _) = leave?;
            self.pivot(r, enter)?;
        }
    }

    fn pivot(&mut self, r: usize, c: usize) -> Option<()> {
        let p = self.rows[r][c].clone();
        let nz: Vec<usize> = (0..=self.n_cols).filter(|&j| !self.rows[r][j].is_zero()).collect();
        if !is_one(&p) {
            for &j in &nz {
                self.rows[r][j] = self.rows[r][j].div(&p)?;
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] = row[j].sub(&f.mul(&pivot_row[j])?)?;
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for &j in &nz {
                self.obj[j] = self.obj[j].sub(&f.mul(&pivot_row[j])?)?;
            }
        }
        self.basis[r] = c;
        Some(())
    }

    fn drive_out_artificials(&mut self) -> Option<()> {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.n_struct {
                match (0..self.n_struct).find(|&j| !self.rows[r][j].is_zero()) {
                    Some(j) => self.pivot(r, j)?,
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        Some(())
    }
}

fn is_one<F: Field>(v: &F) -> bool {
    v.sub(&F::one_f()).is_some_and(|d| d.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_solve(rows: usize, cols: &[Vec<(usize, i64)>], rhs: &[i64], costs: &[Rational]) -> LpOutcome {
        solve(&EqualityLp {
            rows,
            columns: cols,
            rhs,
            costs,
        })
    }

    #[test]
    fn two_route_choice_takes_the_cheaper() {
        // x0 + x1 = 1, costs 3 and 2.
        let cols = vec![vec![(0, 1)], vec![(0, 1)]];
        let out = lp_solve(1, &cols, &[1], &[Rational::from_integer(3), Rational::from_integer(2)]);
        assert_eq!(
            out,
            LpOutcome::Optimal {
                value: Rational::from_integer(2),
                x: Some(vec![Rational::zero(), Rational::one()]),
            }
        );
    }

    #[test]
    fn fractional_optimum_is_exact() {
        // 2 x0 = 1 -> x0 = 1/2.
        let cols = vec![vec![(0, 2)]];
        let out = lp_solve(1, &cols, &[1], &[Rational::new(1, 3)]);
        assert_eq!(
            out,
            LpOutcome::Optimal {
                value: Rational::new(1, 6),
                x: Some(vec![Rational::new(1, 2)]),
            }
        );
    }

    #[test]
    fn infeasible_and_redundant_systems() {
        // x0 = -1 has no nonnegative solution.
        let cols = vec![vec![(0, 1)]];
        assert_eq!(lp_solve(1, &cols, &[-1], &[Rational::one()]), LpOutcome::Infeasible);
        // Duplicate rows: x0 + x1 = 2 twice.
        let cols = vec![vec![(0, 1), (1, 1)], vec![(0, 1), (1, 1)]];
        match lp_solve(2, &cols, &[2, 2], &[Rational::one(), Rational::from_integer(5)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, Rational::from_integer(2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let cols = vec![vec![(0, 1), (1, -1)], vec![(1, 1)]];
        match lp_solve(2, &cols, &[0, 0], &[Rational::one(), Rational::one()]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, Rational::zero()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycle_prone_instance_terminates() {
        // A classic degenerate system; Bland's rule must not cycle.
        let cols = vec![
            vec![(0, 1), (1, 0)],
            vec![(0, 1), (1, 1)],
            vec![(0, -1), (1, 1)],
            vec![(0, 0), (1, -1)],
        ];
        let costs = [Rational::from_integer(1), Rational::from_integer(2), Rational::from_integer(1), Rational::zero()];
        match lp_solve(2, &cols, &[0, 0], &costs) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, Rational::zero()),
            other => panic!("{other:?}"),
        }
    }
}
