use serde::{Deserialize, Serialize};

use super::{pair_at, pair_count};

/// Union-find with path compression and union by rank.
///
/// Used for incremental connectivity checks inside the branch-and-bound
/// search, where edges arrive one at a time.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Undirected simple graph over `n` assets: which unordered pairs are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGraph {
    n: usize,
    /// Strict-upper-triangle edge flags in row-major pair order.
    edges: Vec<bool>,
}

impl PairGraph {
    pub fn empty(n: usize) -> Self {
        PairGraph { n, edges: vec![false; pair_count(n)] }
    }

    pub fn complete(n: usize) -> Self {
        PairGraph { n, edges: vec![true; pair_count(n)] }
    }

    pub fn from_edges(n: usize, list: &[(usize, usize)]) -> Self {
        let mut g = PairGraph::empty(n);
        for &(i, j) in list {
            g.set_edge(i, j, true);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges[super::pair_index(self.n, a, b)]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert_ne!(i, j, "self-pairs do not exist");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges[super::pair_index(self.n, a, b)] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    /// Edges as `(i, j)` with `i < j` in row-major pair order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(p, _)| pair_at(self.n, p))
            .collect()
    }

    /// True iff all `n` vertices lie in a single connected component.
    /// A single vertex (or the empty graph on one vertex) is connected.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut dsu = DisjointSet::new(self.n);
        for (i, j) in self.edge_list() {
            dsu.union(i, j);
        }
        dsu.components() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_is_connected() {
        let g = PairGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert!(g.is_connected());
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn isolated_vertex_disconnects() {
        let g = PairGraph::from_edges(3, &[(0, 1)]);
        assert!(!g.is_connected());
    }

    #[test]
    fn single_vertex_is_connected() {
        assert!(PairGraph::empty(1).is_connected());
    }

    #[test]
    fn connectivity_matches_bfs_on_small_graphs() {
        // Brute-force reachability oracle over every graph with n <= 4 and a
        // random sample at n in {5, 6}.
        fn bfs_connected(g: &PairGraph) -> bool {
            let n = g.n();
            if n <= 1 {
                return true;
            }
            let mut seen = vec![false; n];
            let mut queue = vec![0usize];
            seen[0] = true;
            while let Some(v) = queue.pop() {
                for u in 0..n {
                    if u != v && g.has_edge(v, u) && !seen[u] {
                        seen[u] = true;
                        queue.push(u);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        }

        for n in 1..=4usize {
            let p = pair_count(n);
            for mask in 0u32..(1 << p) {
                let mut g = PairGraph::empty(n);
                for b in 0..p {
                    if mask & (1 << b) != 0 {
                        let (i, j) = pair_at(n, b);
                        g.set_edge(i, j, true);
                    }
                }
                assert_eq!(g.is_connected(), bfs_connected(&g), "n={n} mask={mask:b}");
            }
        }
        for n in [5usize, 6] {
            let p = pair_count(n);
            let mut state = 0x9e3779b97f4a7c15u64;
            for _ in 0..500 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let mask = state >> (64 - p as u64);
                let mut g = PairGraph::empty(n);
                for b in 0..p {
                    if mask & (1 << b) != 0 {
                        let (i, j) = pair_at(n, b);
                        g.set_edge(i, j, true);
                    }
                }
                assert_eq!(g.is_connected(), bfs_connected(&g));
            }
        }
    }
}
