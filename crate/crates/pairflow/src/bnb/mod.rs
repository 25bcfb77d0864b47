//! Best-first branch and bound for the connected M-edge selection problem.
//!
//! Given the estimated volume matrix `K*`, find the connected graph with
//! exactly `m` edges maximizing the covered volume. Nodes fix one edge
//! position at a time (present/absent); a max-heap keyed on the upper bound
//! drives expansion, forced-fill closes nodes whose edge or non-edge budget
//! is spent, and subtrees whose bound cannot beat the incumbent are pruned.
//! A greedy spanning-tree solution seeds the incumbent so pruning bites
//! from the first expansion.

mod node;

pub use node::{force_fill, EdgeState, SearchNode};

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{covered_volume, pair_at, pair_count, DisjointSet, PairGraph, SymMatrix};

/// Search parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Edge budget (unordered pairs); connectivity needs at least `n - 1`.
    pub m: usize,
    /// Maximum nodes expanded before returning the best solution so far.
    pub node_cap: usize,
    /// Branching-position heuristic.
    pub branch_rule: BranchRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    /// Branch on the undecided position with the largest `K*` value.
    LargestValue,
    /// Branch on the first undecided position in pair order.
    FirstOpen,
}

impl SearchConfig {
    pub fn new(m: usize) -> Self {
        SearchConfig { m, node_cap: 10_000_000, branch_rule: BranchRule::LargestValue }
    }
}

/// Outcome of [`search`]: the selected graph always has exactly `m` edges
/// and is connected; `optimal` is true iff the search space was exhausted
/// rather than cut off by the node cap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub graph: PairGraph,
    pub objective: f64,
    pub optimal: bool,
    pub nodes_expanded: usize,
    pub nodes_pruned: usize,
}

/// Shared per-search data: cell values by position and the positions in
/// descending value order (ties by position for determinism).
struct SearchContext<'a> {
    k_star: &'a SymMatrix,
    m: usize,
    /// K* value at each upper-triangle position.
    values: Vec<f64>,
    /// Positions sorted by descending value, ties ascending by position.
    order: Vec<usize>,
}

impl<'a> SearchContext<'a> {
    fn new(k_star: &'a SymMatrix, m: usize) -> Result<Self> {
        let n = k_star.n();
        for i in 0..n {
            if k_star.get(i, i) != 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "k_star diagonal must be zero, found {} at {i}",
                    k_star.get(i, i)
                )));
            }
        }
        let p = pair_count(n);
        if m < n.saturating_sub(1) || m > p {
            return Err(Error::InfeasibleBudget(format!(
                "m = {m} outside [{}, {p}] for {n} assets",
                n.saturating_sub(1)
            )));
        }
        let values: Vec<f64> = (0..p)
            .map(|pos| {
                let (i, j) = pair_at(n, pos);
                k_star.get(i, j)
            })
            .collect();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Ok(SearchContext { k_star, m, values, order })
    }

    fn n(&self) -> usize {
        self.k_star.n()
    }

    /// Admissible bound: present value plus the `m - n_present` largest
    /// positive undecided values. Negative candidates are skipped (adding
    /// one could only lower the bound below a feasible completion's value
    /// only if that completion were forced to take it, which still keeps
    /// the bound on the safe side).
    fn upper_bound(&self, node: &SearchNode) -> f64 {
        let mut total = node.present_value(self.k_star);
        let mut left = self.m - node.n_present;
        for &pos in &self.order {
            if left == 0 || self.values[pos] <= 0.0 {
                break;
            }
            if node.assignment[pos] == EdgeState::Undecided {
                total += self.values[pos];
                left -= 1;
            }
        }
        total
    }

    /// Position to branch on, by the configured rule.
    fn pick_branch_position(&self, node: &SearchNode, rule: BranchRule) -> Option<usize> {
        match rule {
            BranchRule::LargestValue => self
                .order
                .iter()
                .copied()
                .find(|&pos| node.assignment[pos] == EdgeState::Undecided),
            BranchRule::FirstOpen => node
                .assignment
                .iter()
                .position(|&st| st == EdgeState::Undecided),
        }
    }
}

/// Value of present edges plus the best possible completion from undecided
/// positions; never less than the value of any feasible completion.
pub fn upper_bound(node: &SearchNode, k_star: &SymMatrix, m: usize) -> Result<f64> {
    let ctx = SearchContext::new(k_star, m)?;
    Ok(ctx.upper_bound(node))
}

/// Connected M-edge warm start: maximum-weight spanning tree under `k_star`
/// (Kruskal over descending values), topped up with the heaviest remaining
/// pairs until `m` edges.
pub fn greedy_incumbent(k_star: &SymMatrix, m: usize) -> Result<PairGraph> {
    let ctx = SearchContext::new(k_star, m)?;
    let n = ctx.n();
    let mut dsu = DisjointSet::new(n);
    let mut graph = PairGraph::empty(n);
    let mut picked = 0usize;
    for &pos in &ctx.order {
        let (i, j) = pair_at(n, pos);
        if dsu.union(i, j) {
            graph.set_edge(i, j, true);
            picked += 1;
        }
    }
    debug_assert_eq!(picked, n - 1);
    for &pos in &ctx.order {
        if picked == m {
            break;
        }
        let (i, j) = pair_at(n, pos);
        if !graph.has_edge(i, j) {
            graph.set_edge(i, j, true);
            picked += 1;
        }
    }
    Ok(graph)
}

/// Fixes the branch position to present / absent, returning the two children
/// (present first). Children are force-filled, re-bounded, and marked dead
/// when no feasible completion can exist.
pub fn branch(node: &SearchNode, k_star: &SymMatrix, cfg: &SearchConfig) -> Result<(SearchNode, SearchNode)> {
    let ctx = SearchContext::new(k_star, cfg.m)?;
    let pos = ctx
        .pick_branch_position(node, cfg.branch_rule)
        .ok_or_else(|| Error::InvalidProblem("branch on a fully decided node".into()))?;
    Ok(branch_at(&ctx, node, pos))
}

fn finish_child(ctx: &SearchContext, mut child: SearchNode) -> SearchNode {
    let p = child.assignment.len();
    if child.n_present > ctx.m || child.n_absent > p - ctx.m {
        child.dead = true;
        return child;
    }
    child = force_fill(child, ctx.m);
    if !child.connectable(ctx.n()) {
        child.dead = true;
        return child;
    }
    child.ub = ctx.upper_bound(&child);
    child.lb = if child.is_decided() { child.ub } else { 0.0 };
    child
}

fn branch_at(ctx: &SearchContext, node: &SearchNode, pos: usize) -> (SearchNode, SearchNode) {
    let mut with_edge = node.clone();
    with_edge.decide(pos, EdgeState::Present);
    let mut without_edge = node.clone();
    without_edge.decide(pos, EdgeState::Absent);
    (finish_child(ctx, with_edge), finish_child(ctx, without_edge))
}

/// Heap entry ordering: largest upper bound first, then fewest undecided
/// positions, then lexicographically smallest assignment.
struct HeapEntry(SearchNode);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .ub
            .total_cmp(&other.0.ub)
            .then_with(|| other.0.undecided().cmp(&self.0.undecided()))
            .then_with(|| other.0.assignment.cmp(&self.0.assignment))
    }
}

/// Finds the connected `m`-edge graph maximizing covered `K*` volume.
///
/// Returns `optimal = true` when the search exhausted the space (every open
/// node's bound is at most the incumbent value); hitting the node cap
/// returns the incumbent with `optimal = false`.
pub fn search(k_star: &SymMatrix, config: &SearchConfig) -> Result<SearchResult> {
    if config.node_cap == 0 {
        return Err(Error::InvalidConfig("node_cap must be positive".into()));
    }
    let ctx = SearchContext::new(k_star, config.m)?;
    let n = ctx.n();
    let p = pair_count(n);

    let mut best_graph = greedy_incumbent(k_star, config.m)?;
    let mut best_value = covered_volume(k_star, &best_graph)?;

    let mut nodes_expanded = 0usize;
    let mut nodes_pruned = 0usize;
    let mut optimal = true;

    let mut heap = BinaryHeap::new();
    let root = finish_child(&ctx, SearchNode::root(p));
    let consider_decided = |node: &SearchNode, best_graph: &mut PairGraph, best_value: &mut f64| {
        debug_assert_eq!(node.n_present, ctx.m);
        let value = node.present_value(ctx.k_star);
        if value > *best_value {
            *best_value = value;
            let mut g = PairGraph::empty(n);
            for (pos, &st) in node.assignment.iter().enumerate() {
                if st == EdgeState::Present {
                    let (i, j) = pair_at(n, pos);
                    g.set_edge(i, j, true);
                }
            }
            *best_graph = g;
        }
    };
    if !root.dead {
        if root.is_decided() {
            consider_decided(&root, &mut best_graph, &mut best_value);
        } else {
            heap.push(HeapEntry(root));
        }
    }

    while let Some(HeapEntry(mut top)) = heap.pop() {
        if top.ub <= best_value {
            break; // no open node can beat the incumbent
        }
        if nodes_expanded >= config.node_cap {
            optimal = false;
            break;
        }
        top.visited = true;
        nodes_expanded += 1;
        let pos = ctx
            .pick_branch_position(&top, config.branch_rule)
            .expect("only undecided nodes are enqueued");
        let (yes, no) = branch_at(&ctx, &top, pos);
        for child in [yes, no] {
            if child.dead {
                nodes_pruned += 1;
            } else if child.is_decided() {
                consider_decided(&child, &mut best_graph, &mut best_value);
            } else if child.ub > best_value {
                heap.push(HeapEntry(child));
            } else {
                nodes_pruned += 1;
            }
        }
    }

    Ok(SearchResult {
        objective: best_value,
        graph: best_graph,
        optimal,
        nodes_expanded,
        nodes_pruned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> SymMatrix {
        let mut k = SymMatrix::zeros(3);
        k.set(0, 1, 5.0);
        k.set(0, 2, 3.0);
        k.set(1, 2, 4.0);
        k
    }

    #[test]
    fn greedy_picks_best_two_edge_tree() {
        let g = greedy_incumbent(&k3(), 2).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 2));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn greedy_full_budget_is_complete() {
        let g = greedy_incumbent(&k3(), 3).unwrap();
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn greedy_rejects_small_budget() {
        assert!(matches!(
            greedy_incumbent(&k3(), 1),
            Err(Error::InfeasibleBudget(_))
        ));
    }

    #[test]
    fn greedy_star_dominant_matches_enumeration() {
        // Star around vertex 0 dominates; m = 4 leaves room for one extra edge.
        let mut k = SymMatrix::zeros(4);
        k.set(0, 1, 10.0);
        k.set(0, 2, 9.0);
        k.set(0, 3, 8.0);
        k.set(1, 2, 2.0);
        k.set(1, 3, 1.0);
        k.set(2, 3, 0.5);
        let g = greedy_incumbent(&k, 4).unwrap();
        let got = covered_volume(&k, &g).unwrap();
        // Exhaustive check over all connected 4-edge graphs.
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << 6) {
            if mask.count_ones() != 4 {
                continue;
            }
            let mut cand = PairGraph::empty(4);
            for pos in 0..6 {
                if mask & (1 << pos) != 0 {
                    let (i, j) = pair_at(4, pos);
                    cand.set_edge(i, j, true);
                }
            }
            if cand.is_connected() {
                best = best.max(covered_volume(&k, &cand).unwrap());
            }
        }
        assert_eq!(got, best);
    }

    #[test]
    fn root_bound_is_sum_of_largest_positive_values() {
        let root = SearchNode::root(3);
        let ub = upper_bound(&root, &k3(), 2).unwrap();
        assert_eq!(ub, 9.0);
    }

    #[test]
    fn decided_node_bound_is_its_value() {
        let mut node = SearchNode::root(3);
        node.decide(0, EdgeState::Present);
        node.decide(2, EdgeState::Present);
        node.decide(1, EdgeState::Absent);
        let ub = upper_bound(&node, &k3(), 2).unwrap();
        assert_eq!(ub, 9.0);
    }

    #[test]
    fn branch_fixes_largest_undecided_position() {
        let cfg = SearchConfig::new(2);
        let root = SearchNode::root(3);
        let (yes, no) = branch(&root, &k3(), &cfg).unwrap();
        // Largest value is position 0 (edge (0,1), value 5).
        assert_eq!(yes.assignment[0], EdgeState::Present);
        assert_eq!(no.assignment[0], EdgeState::Absent);
    }

    #[test]
    fn child_losing_connectivity_is_dead() {
        // n = 4, m = 3: forbidding every edge at vertex 3 makes any
        // completion disconnected.
        let mut node = SearchNode::root(6);
        let n = 4;
        for pos in 0..6 {
            let (i, j) = pair_at(n, pos);
            if i == 3 || j == 3 {
                node.decide(pos, EdgeState::Absent);
            }
        }
        // Positions touching vertex 3 are (0,3), (1,3), (2,3) = 2, 4, 5.
        assert_eq!(node.n_absent, 3);
        let mut k = SymMatrix::zeros(4);
        k.set(0, 1, 1.0);
        let cfg = SearchConfig::new(3);
        let (yes, no) = branch(&node, &k, &cfg).unwrap();
        assert!(yes.dead && no.dead);
    }

    #[test]
    fn search_triangle_budget_two() {
        let res = search(&k3(), &SearchConfig::new(2)).unwrap();
        assert_eq!(res.objective, 9.0);
        assert!(res.optimal);
        assert!(res.graph.has_edge(0, 1) && res.graph.has_edge(1, 2));
        assert!(res.graph.is_connected());
    }

    #[test]
    fn search_full_budget_returns_complete_graph() {
        let res = search(&k3(), &SearchConfig::new(3)).unwrap();
        assert_eq!(res.graph.edge_count(), 3);
        assert_eq!(res.objective, 12.0);
        assert!(res.optimal);
    }

    #[test]
    fn search_rejects_infeasible_budget() {
        assert!(matches!(
            search(&k3(), &SearchConfig::new(1)),
            Err(Error::InfeasibleBudget(_))
        ));
    }

    #[test]
    fn node_cap_returns_incumbent_non_optimal() {
        // Heavy near-equal clique avoiding vertex 0 with only cheap edges
        // into it: the root bound overshoots every connected solution, so
        // closing the gap needs more than two expansions.
        let n = 7;
        let mut k = SymMatrix::zeros(n);
        let mut bump = 0.0;
        for i in 1..n {
            for j in (i + 1)..n {
                k.set(i, j, 10.0 + bump);
                bump += 1e-3;
            }
        }
        for j in 1..n {
            k.set(0, j, 0.1 + 1e-4 * j as f64);
        }
        let mut cfg = SearchConfig::new(15);
        cfg.node_cap = 2;
        let res = search(&k, &cfg).unwrap();
        assert!(!res.optimal);
        assert_eq!(res.graph.edge_count(), 15);
        assert!(res.graph.is_connected());
    }
}
