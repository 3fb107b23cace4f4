//! Step-indexed integer program on the synchronous product. Built for
//! structural inspection only; nothing here solves it.

use std::ops::Range;

use num_traits::Zero;

use crate::matrix::{IntMatrix, SparseIntMatrix};
use crate::rational::Rational;
use crate::sync::{cost_vector, SynchronousProduct};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
}

/// Variables: `x[j,k]` at `(k-1)*|T| + j` for `k` in `1..=n`, then `z[k]` at
/// `n*|T| + k - 1`. Rows in order: final marking (`|P|`), prefix
/// nonnegativity (`n*|P|`), one move per step (`n`), termination
/// monotonicity (`n-1`).
#[derive(Clone, Debug)]
pub struct MilpMatrices {
    pub horizon: usize,
    pub num_places: usize,
    pub num_transitions: usize,
    pub constraints: IntMatrix,
    pub senses: Vec<Sense>,
    pub rhs: Vec<i64>,
    pub objective: Vec<Rational>,
    pub final_rows: Range<usize>,
    pub prefix_rows: Range<usize>,
    pub step_rows: Range<usize>,
    pub monotone_rows: Range<usize>,
}

impl MilpMatrices {
    pub fn num_variables(&self) -> usize {
        self.horizon * self.num_transitions + self.horizon
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.rows()
    }

    /// Column of `x[j,k]`, with `k` starting at 1.
    pub fn x_index(&self, j: usize, k: usize) -> usize {
        (k - 1) * self.num_transitions + j
    }

    pub fn z_index(&self, k: usize) -> usize {
        self.horizon * self.num_transitions + k - 1
    }

    pub fn sparse(&self) -> SparseIntMatrix {
        SparseIntMatrix::from(&self.constraints)
    }
}

pub fn build_milp_matrices(sp: &SynchronousProduct, n: usize) -> MilpMatrices {
    assert!(n >= 1, "horizon must be positive");
    let inc = sp.net.incidence_matrices().incidence;
    let np = sp.net.num_places();
    let nt = sp.net.num_transitions();
    let m_i = sp.initial_marking().tokens();
    let m_f = sp.final_marking().tokens();
    let nvars = n * nt + n;
    let final_rows = 0..np;
    let prefix_rows = np..np + n * np;
    let step_rows = prefix_rows.end..prefix_rows.end + n;
    let monotone_rows = step_rows.end..step_rows.end + (n - 1);
    let nrows = monotone_rows.end;

    let mut a = IntMatrix::zeros(nrows, nvars);
    let mut senses = Vec::with_capacity(nrows);
    let mut rhs = Vec::with_capacity(nrows);
    let x = |j: usize, k: usize| (k - 1) * nt + j;
    let z = |k: usize| n * nt + k - 1;

    for p in 0..np {
        for k in 1..=n {
            for j in 0..nt {
                a.set(p, x(j, k), inc.get(p, j));
            }
        }
        senses.push(Sense::Eq);
        rhs.push(m_f[p] as i64 - m_i[p] as i64);
    }
    for k in 1..=n {
        for p in 0..np {
            let row = prefix_rows.start + (k - 1) * np + p;
            for tau in 1..=k {
                for j in 0..nt {
                    a.set(row, x(j, tau), inc.get(p, j));
                }
            }
            senses.push(Sense::Ge);
            rhs.push(-(m_i[p] as i64));
        }
    }
    for k in 1..=n {
        let row = step_rows.start + k - 1;
        for j in 0..nt {
            a.set(row, x(j, k), 1);
        }
        a.set(row, z(k), 1);
        senses.push(Sense::Eq);
        rhs.push(1);
    }
    for k in 1..n {
        let row = monotone_rows.start + k - 1;
        a.set(row, z(k + 1), 1);
        a.set(row, z(k), -1);
        senses.push(Sense::Ge);
        rhs.push(0);
    }

    let costs = cost_vector(sp);
    let mut objective = vec![Rational::zero(); nvars];
    for k in 1..=n {
        for j in 0..nt {
            objective[x(j, k)] = costs[j];
        }
    }

    MilpMatrices {
        horizon: n,
        num_places: np,
        num_transitions: nt,
        constraints: a,
        senses,
        rhs,
        objective,
        final_rows,
        prefix_rows,
        step_rows,
        monotone_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{acyclic_net, insurance_net, insurance_trace, toy_trace};
    use crate::petri::build_trace_model;
    use crate::sync::{build_sync_product, CostConfig};

    #[test]
    fn toy_dimensions() {
        let sp = build_sync_product(&acyclic_net(), &build_trace_model(&toy_trace()), &CostConfig::default()).unwrap();
        let m = build_milp_matrices(&sp, 6);
        assert_eq!(m.num_rows(), 10 + 60 + 6 + 5);
        assert_eq!(m.num_variables(), 72);
        assert_eq!(m.constraints.cols(), 72);
        let one = build_milp_matrices(&sp, 1);
        assert!(one.monotone_rows.is_empty());
        assert_eq!(one.num_rows(), 10 + 10 + 1);
    }

    #[test]
    fn insurance_dimensions() {
        let sp = build_sync_product(&insurance_net(), &build_trace_model(&insurance_trace()), &CostConfig::default()).unwrap();
        let m = build_milp_matrices(&sp, 7);
        assert_eq!(m.num_rows(), 18 + 126 + 7 + 6);
        assert_eq!(m.num_variables(), 147);
    }

    #[test]
    fn prefix_block_stacks_copies_of_incidence() {
        let sp = build_sync_product(&acyclic_net(), &build_trace_model(&toy_trace()), &CostConfig::default()).unwrap();
        let inc = sp.net.incidence_matrices().incidence;
        let m = build_milp_matrices(&sp, 4);
        let (np, nt) = (m.num_places, m.num_transitions);
        for k in 1..=4 {
            for p in 0..np {
                let row = m.prefix_rows.start + (k - 1) * np + p;
                for kk in 1..=4 {
                    for j in 0..nt {
                        let expected = if kk <= k { inc.get(p, j) } else { 0 };
                        assert_eq!(m.constraints.get(row, m.x_index(j, kk)), expected);
                    }
                }
                for kk in 1..=4 {
                    assert_eq!(m.constraints.get(row, m.z_index(kk)), 0);
                }
            }
        }
        assert_eq!(m.objective[m.x_index(0, 3)], Rational::zero());
    }
}
