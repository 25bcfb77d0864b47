use serde::{Deserialize, Serialize};

use crate::matcore::{pair_at, DisjointSet, SymMatrix};

/// State of one upper-triangle edge position in a partial assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeState {
    Absent,
    Present,
    Undecided,
}

/// A node of the search tree: a ternary assignment over the
/// `n(n-1)/2` edge positions plus cached counts and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    /// Row-major upper-triangle edge states.
    pub assignment: Vec<EdgeState>,
    pub n_present: usize,
    pub n_absent: usize,
    /// Value of present edges plus the best possible from undecided ones.
    pub ub: f64,
    /// Achieved value for fully decided connected nodes, 0 otherwise.
    pub lb: f64,
    pub visited: bool,
    /// Set when no feasible completion exists (budget or connectivity).
    pub dead: bool,
}

impl SearchNode {
    /// Root node: everything undecided.
    pub fn root(positions: usize) -> SearchNode {
        SearchNode {
            assignment: vec![EdgeState::Undecided; positions],
            n_present: 0,
            n_absent: 0,
            ub: f64::INFINITY,
            lb: 0.0,
            visited: false,
            dead: false,
        }
    }

    pub fn undecided(&self) -> usize {
        self.assignment.len() - self.n_present - self.n_absent
    }

    pub fn is_decided(&self) -> bool {
        self.undecided() == 0
    }

    /// Sets one undecided position, keeping counts consistent.
    pub fn decide(&mut self, pos: usize, state: EdgeState) {
        debug_assert_eq!(self.assignment[pos], EdgeState::Undecided);
        debug_assert_ne!(state, EdgeState::Undecided);
        self.assignment[pos] = state;
        match state {
            EdgeState::Present => self.n_present += 1,
            EdgeState::Absent => self.n_absent += 1,
            EdgeState::Undecided => unreachable!(),
        }
    }

    /// Sum of `k_star` over present positions.
    pub fn present_value(&self, k_star: &SymMatrix) -> f64 {
        let n = k_star.n();
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &st)| st == EdgeState::Present)
            .map(|(p, _)| {
                let (i, j) = pair_at(n, p);
                k_star.get(i, j)
            })
            .sum()
    }

    /// True when the graph of present-or-undecided edges still connects all
    /// vertices; a node failing this has no connected completion.
    pub fn connectable(&self, n: usize) -> bool {
        let mut dsu = DisjointSet::new(n);
        for (p, &st) in self.assignment.iter().enumerate() {
            if st != EdgeState::Absent {
                let (i, j) = pair_at(n, p);
                dsu.union(i, j);
            }
        }
        dsu.components() == 1
    }
}

/// Applies the forced-fill rules for edge budget `m`: once the budget is
/// used up all undecided positions become absent; once the non-edge budget
/// is used up they all become present. Otherwise the node is unchanged.
pub fn force_fill(mut node: SearchNode, m: usize) -> SearchNode {
    let p = node.assignment.len();
    debug_assert!(node.n_present <= m && node.n_absent <= p - m);
    if node.n_present == m {
        for st in node.assignment.iter_mut() {
            if *st == EdgeState::Undecided {
                *st = EdgeState::Absent;
            }
        }
        node.n_absent = p - m;
    } else if node.n_absent == p - m {
        for st in node.assignment.iter_mut() {
            if *st == EdgeState::Undecided {
                *st = EdgeState::Present;
            }
        }
        node.n_present = m;
    }
    node
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node_from(states: &[EdgeState]) -> SearchNode {
        let mut n = SearchNode::root(states.len());
        for (p, &st) in states.iter().enumerate() {
            if st != EdgeState::Undecided {
                n.decide(p, st);
            }
        }
        n
    }

    use EdgeState::{Absent as A, Present as P, Undecided as U};

    #[test]
    fn fill_absent_when_budget_spent() {
        // n = 3, m = 2: two present edges exhaust the budget.
        let filled = force_fill(node_from(&[P, P, U]), 2);
        assert_eq!(filled.assignment, vec![P, P, A]);
        assert_eq!(filled.n_present, 2);
        assert_eq!(filled.n_absent, 1);
    }

    #[test]
    fn fill_present_when_non_edges_spent() {
        // n = 3, m = 2: one absent edge exhausts the non-edge budget.
        let filled = force_fill(node_from(&[A, U, U]), 2);
        assert_eq!(filled.assignment, vec![A, P, P]);
        assert_eq!(filled.n_present, 2);
    }

    #[test]
    fn fill_is_noop_with_slack_on_both_sides() {
        let node = node_from(&[P, U, U]);
        let filled = force_fill(node.clone(), 2);
        assert_eq!(filled, node);
    }
}
