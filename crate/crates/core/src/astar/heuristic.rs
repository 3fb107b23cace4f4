//! Marking-equation lower bound: `min c x  s.t.  I x = m_f - m, x >= 0`.

use std::collections::HashMap;

use num_traits::Zero;

use super::simplex::{self, EqualityLp, LpOutcome};
use crate::petri::Marking;
use crate::rational::Rational;
use crate::sync::{cost_vector, SynchronousProduct};

/// Heuristic value with the relaxation's optimal solution when available.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Estimate {
    pub value: Rational,
    pub solution: Option<Vec<Rational>>,
}

/// Per-search solver with a cache keyed by marking.
pub struct MarkingEquation<'a> {
    sp: &'a SynchronousProduct,
    columns: Vec<Vec<(usize, i64)>>,
    costs: Vec<Rational>,
    cache: HashMap<Marking, Option<Estimate>>,
    solves: usize,
}

impl<'a> MarkingEquation<'a> {
    pub fn new(sp: &'a SynchronousProduct) -> Self {
        let columns = (0..sp.net.num_transitions()).map(|t| sp.net.effect(t).to_vec()).collect();
        MarkingEquation {
            sp,
            columns,
            costs: cost_vector(sp),
            cache: HashMap::new(),
            solves: 0,
        }
    }

    /// Number of relaxations actually solved (cache hits and derived values excluded).
    pub fn solves(&self) -> usize {
        self.solves
    }

    /// `None` means the relaxation is infeasible, i.e. the marking is a dead end.
    pub fn estimate(&mut self, m: &Marking) -> Option<Estimate> {
        if let Some(hit) = self.cache.get(m) {
            return hit.clone();
        }
        let est = self.solve(m);
        self.cache.insert(m.clone(), est.clone());
        est
    }

    /// Records the value for a successor reached through a transition that the
    /// parent's solution fires at least once: `x - e_t` stays optimal.
    pub fn derive(&mut self, parent: &Estimate, t: usize, successor: &Marking) -> Option<Estimate> {
        let x = parent.solution.as_ref()?;
        if x[t] < Rational::from_integer(1) {
            return None;
        }
        if let Some(hit) = self.cache.get(successor) {
            return hit.clone();
        }
        let mut y = x.clone();
        y[t] -= Rational::from_integer(1);
        let est = Estimate {
            value: parent.value - self.costs[t],
            solution: Some(y),
        };
        self.cache.insert(successor.clone(), Some(est.clone()));
        Some(est)
    }

    fn solve(&mut self, m: &Marking) -> Option<Estimate> {
        let target = self.sp.final_marking();
        if m == target {
            return Some(Estimate {
                value: Rational::zero(),
                solution: Some(vec![Rational::zero(); self.columns.len()]),
            });
        }
        self.solves += 1;
        let rhs: Vec<i64> = target
            .tokens()
            .iter()
            .zip(m.tokens())
            .map(|(&f, &v)| f as i64 - v as i64)
            .collect();
        let lp = EqualityLp {
            rows: rhs.len(),
            columns: &self.columns,
            rhs: &rhs,
            costs: &self.costs,
        };
        match simplex::solve(&lp) {
            LpOutcome::Infeasible => None,
            LpOutcome::Optimal { value, x } => Some(Estimate { value, solution: x }),
        }
    }
}

/// One-off evaluation; `None` stands for an infinite bound.
pub fn marking_equation_heuristic(sp: &SynchronousProduct, m: &Marking) -> Option<Rational> {
    MarkingEquation::new(sp).estimate(m).map(|e| e.value)
}
