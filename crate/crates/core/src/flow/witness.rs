//! Search for square submatrices with `|det| >= 2`, which certify that a
//! matrix is not totally unimodular.
//!
//! A submatrix whose nonzero pattern splits into independent blocks has a
//! determinant equal to the product of the block determinants, so when orders
//! are searched in ascending sequence it suffices to look at column sets that
//! are connected through shared rows.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{determinant, IntMatrix, SparseIntMatrix};

const SAMPLING_SEED: u64 = 0x7715_0001;
const EXHAUSTIVE_MAX_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonTuWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub determinant: i128,
}

/// Outcome of a witness search, including how far the exhaustive phase got.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSearch {
    pub witness: Option<NonTuWitness>,
    /// Highest order for which every connected submatrix was checked.
    pub exhaustive_through: usize,
    pub determinants_evaluated: u64,
    pub timed_out: bool,
}

pub fn find_non_tu_witness(m: &IntMatrix, order_limit: usize, budget: Duration) -> Option<NonTuWitness> {
    search_non_tu_witness(&SparseIntMatrix::from(m), order_limit, budget).witness
}

pub fn search_non_tu_witness(m: &SparseIntMatrix, order_limit: usize, budget: Duration) -> WitnessSearch {
    assert!(order_limit >= 2, "order_limit must be at least 2");
    let deadline = Instant::now() + budget;
    let mut search = Searcher {
        m,
        supports: m.row_supports(),
        deadline,
        evaluated: 0,
    };
    let mut report = WitnessSearch {
        witness: None,
        exhaustive_through: 0,
        determinants_evaluated: 0,
        timed_out: false,
    };

    for c in 0..m.cols() {
        if let Some(&(r, v)) = m.column(c).iter().find(|(_, v)| v.abs() >= 2) {
            report.witness = Some(NonTuWitness {
                rows: vec![r],
                cols: vec![c],
                determinant: v as i128,
            });
            return report;
        }
    }
    report.exhaustive_through = 1;

    for k in 2..=order_limit.min(EXHAUSTIVE_MAX_ORDER) {
        match search.exhaustive(k) {
            Ok(Some(w)) => {
                report.witness = Some(w);
                report.determinants_evaluated = search.evaluated;
                return report;
            }
            Ok(None) => report.exhaustive_through = k,
            Err(TimedOut) => {
                report.timed_out = true;
                report.determinants_evaluated = search.evaluated;
                return report;
            }
        }
    }

    if order_limit > EXHAUSTIVE_MAX_ORDER && m.cols() > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
        let orders: Vec<usize> = (EXHAUSTIVE_MAX_ORDER + 1..=order_limit).collect();
        'sampling: loop {
            for &k in &orders {
                if Instant::now() >= deadline {
                    report.timed_out = true;
                    break 'sampling;
                }
                if let Some(w) = search.sample(k, &mut rng) {
                    report.witness = Some(w);
                    break 'sampling;
                }
            }
        }
    }
    report.determinants_evaluated = search.evaluated;
    report
}

struct TimedOut;

struct Searcher<'a> {
    m: &'a SparseIntMatrix,
    supports: Vec<Vec<usize>>,
    deadline: Instant,
    evaluated: u64,
}

impl Searcher<'_> {
    fn neighbours(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.m
            .column(c)
            .iter()
            .flat_map(move |&(r, _)| self.supports[r].iter().copied())
            .filter(move |&d| d != c)
    }

    fn row_union(&self, cols: &[usize]) -> Vec<usize> {
        let mut rows: Vec<usize> = cols.iter().flat_map(|&c| self.m.column(c).iter().map(|&(r, _)| r)).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    fn check(&mut self, rows: &[usize], cols: &[usize]) -> Option<NonTuWitness> {
        self.evaluated += 1;
        let det = determinant(&self.m.submatrix(rows, cols));
        (det.abs() >= 2).then(|| NonTuWitness {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            determinant: det,
        })
    }

    fn check_all_row_sets(&mut self, cols: &[usize]) -> Option<NonTuWitness> {
        let rows = self.row_union(cols);
        let k = cols.len();
        if rows.len() < k {
            return None;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let chosen: Vec<usize> = idx.iter().map(|&i| rows[i]).collect();
            if let Some(w) = self.check(&chosen, cols) {
                return Some(w);
            }
            // Next k-combination of 0..rows.len().
            let mut i = k;
            while i > 0 && idx[i - 1] == rows.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return None;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    fn exhaustive(&mut self, k: usize) -> Result<Option<NonTuWitness>, TimedOut> {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut stack: Vec<Vec<usize>> = (0..self.m.cols()).map(|c| vec![c]).collect();
        stack.reverse();
        let mut counter = 0u32;
        while let Some(set) = stack.pop() {
            counter = counter.wrapping_add(1);
            if counter.is_multiple_of(256) && Instant::now() >= self.deadline {
                return Err(TimedOut);
            }
            if set.len() == k {
                if let Some(w) = self.check_all_row_sets(&set) {
                    return Ok(Some(w));
                }
                continue;
            }
            let mut ext: Vec<usize> = set.iter().flat_map(|&c| self.neighbours(c)).filter(|d| !set.contains(d)).collect();
            ext.sort_unstable();
            ext.dedup();
            for d in ext.into_iter().rev() {
                let mut next = set.clone();
                next.push(d);
                next.sort_unstable();
                if seen.insert(next.clone()) {
                    stack.push(next);
                }
            }
        }
        Ok(None)
    }

    fn sample(&mut self, k: usize, rng: &mut ChaCha8Rng) -> Option<NonTuWitness> {
        let mut cols = vec![rng.gen_range(0..self.m.cols())];
        while cols.len() < k {
            let ext: Vec<usize> = cols.iter().flat_map(|&c| self.neighbours(c)).filter(|d| !cols.contains(d)).collect();
            let &d = ext.choose(rng)?;
            cols.push(d);
        }
        cols.sort_unstable();
        let mut rows = self.row_union(&cols);
        if rows.len() < k {
            return None;
        }
        rows.shuffle(rng);
        rows.truncate(k);
        rows.sort_unstable();
        self.check(&rows, &cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{acyclic_net, toy_trace};
    use crate::flow::build_milp_matrices;
    use crate::petri::build_trace_model;
    use crate::reach::{build_reachability_graph, node_arc_incidence, ExplorationLimits};
    use crate::sync::{build_sync_product, CostConfig};

    #[test]
    fn identity_has_no_witness() {
        let id = IntMatrix::from_rows(&[vec![1, 0], vec![0, 1]]);
        assert_eq!(find_non_tu_witness(&id, 2, Duration::from_secs(1)), None);
    }

    #[test]
    fn finds_order_two_witness() {
        let m = IntMatrix::from_rows(&[vec![1, 1, 0], vec![1, -1, 0], vec![0, 0, 1]]);
        let w = find_non_tu_witness(&m, 3, Duration::from_secs(1)).unwrap();
        assert_eq!(w.determinant.abs(), 2);
        assert_eq!(determinant(&m.submatrix(&w.rows, &w.cols)), w.determinant);
    }

    #[test]
    fn finds_order_three_odd_cycle() {
        let m = IntMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        let w = find_non_tu_witness(&m, 3, Duration::from_secs(1)).unwrap();
        assert_eq!(w.rows.len(), 3);
        assert_eq!(w.determinant.abs(), 2);
    }

    #[test]
    fn large_entry_is_an_order_one_witness() {
        let m = IntMatrix::from_rows(&[vec![0, 2]]);
        let w = find_non_tu_witness(&m, 2, Duration::from_secs(1)).unwrap();
        assert_eq!((w.rows, w.cols, w.determinant), (vec![0], vec![1], 2));
    }

    #[test]
    fn toy_milp_is_not_tu_but_its_graph_matrix_has_no_small_witness() {
        let sp = build_sync_product(&acyclic_net(), &build_trace_model(&toy_trace()), &CostConfig::default()).unwrap();
        let milp = build_milp_matrices(&sp, 6);
        let w = find_non_tu_witness(&milp.constraints, 3, Duration::from_secs(10)).expect("witness");
        assert!(w.determinant.abs() >= 2);
        assert_eq!(determinant(&milp.constraints.submatrix(&w.rows, &w.cols)), w.determinant);

        let rg = build_reachability_graph(&sp, &ExplorationLimits::for_product(&sp)).unwrap();
        let report = search_non_tu_witness(&node_arc_incidence(&rg).to_sparse(), 3, Duration::from_secs(10));
        assert_eq!(report.witness, None);
        assert_eq!(report.exhaustive_through, 3);
    }

    #[test]
    fn sampling_phase_runs_within_budget() {
        let sp = build_sync_product(&acyclic_net(), &build_trace_model(&toy_trace()), &CostConfig::default()).unwrap();
        let rg = build_reachability_graph(&sp, &ExplorationLimits::for_product(&sp)).unwrap();
        let start = Instant::now();
        let report = search_non_tu_witness(&node_arc_incidence(&rg).to_sparse(), 5, Duration::from_millis(200));
        assert_eq!(report.witness, None);
        assert!(report.timed_out);
        assert!(start.elapsed() < Duration::from_secs(2));
    }
}
