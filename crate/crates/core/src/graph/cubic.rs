//! Connected cubic (3-regular) graphs: exhaustive enumeration up to
//! isomorphism for small orders, and seeded random sampling.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WeightedGraph;
use crate::error::{CimError, Result};

/// Largest order accepted by [`enumerate_cubic_graphs`].
pub const MAX_ENUMERATION_ORDER: usize = 10;

/// Canonical adjacency code of a graph given as neighbor bitmasks.
///
/// The code is the column-major upper-triangular adjacency bit string,
/// lexicographically maximised over all vertex orderings; column `k` is
/// packed into one `u16` with row 0 in the most significant bit. Two
/// graphs are isomorphic iff their codes are equal.
pub fn canonical_form(adj: &[u16]) -> Vec<u16> {
    let n = adj.len();
    assert!(n <= 16, "canonical_form supports at most 16 vertices");
    let mut search = CanonicalSearch {
        adj,
        order: Vec::with_capacity(n),
        code: Vec::with_capacity(n),
        best: None,
    };
    search.descend(0);
    search.best.unwrap_or_default()
}

struct CanonicalSearch<'a> {
    adj: &'a [u16],
    order: Vec<usize>,
    code: Vec<u16>,
    best: Option<Vec<u16>>,
}

impl CanonicalSearch<'_> {
    fn column(&self, v: usize) -> u16 {
        self.order
            .iter()
            .enumerate()
            .filter(|(_, &u)| self.adj[u] >> v & 1 == 1)
            .fold(0u16, |acc, (i, _)| acc | 1 << (15 - i))
    }

    fn descend(&mut self, used: u16) {
        let n = self.adj.len();
        let depth = self.order.len();
        if depth == n {
            if self.best.as_ref().is_none_or(|b| self.code > *b) {
                self.best = Some(self.code.clone());
            }
            return;
        }
        // Only the maximal next column can extend to the maximal code.
        let cols: Vec<(usize, u16)> = (0..n)
            .filter(|&v| used >> v & 1 == 0)
            .map(|v| (v, self.column(v)))
            .collect();
        let top = cols.iter().map(|&(_, c)| c).max().expect("at least one unused vertex");
        if let Some(best) = &self.best {
            if self.code[..] == best[..depth] && top < best[depth] {
                return;
            }
            if self.code[..] < best[..depth] {
                return;
            }
        }
        for (v, c) in cols {
            if c != top {
                continue;
            }
            self.order.push(v);
            self.code.push(c);
            self.descend(used | 1 << v);
            self.order.pop();
            self.code.pop();
        }
    }
}

/// All connected cubic graphs on `n` vertices up to isomorphism, with unit
/// weights, in increasing order of their canonical codes.
pub fn enumerate_cubic_graphs(n: usize) -> Result<Vec<WeightedGraph>> {
    if !n.is_multiple_of(2) || !(4..=MAX_ENUMERATION_ORDER).contains(&n) {
        return Err(CimError::Capability(format!(
            "cubic graph enumeration needs an even order in 4..={MAX_ENUMERATION_ORDER}, got {n}"
        )));
    }
    let mut codes = BTreeSet::new();
    let mut adj = vec![0u16; n];
    let mut deg = vec![0u8; n];
    extend(&mut adj, &mut deg, 0, &mut codes);
    Ok(codes.into_iter().map(|code| graph_from_code(n, &code)).collect())
}

/// Backtracking over labelled cubic graphs: the lowest unsaturated vertex
/// takes its next neighbour, neighbours are added in increasing order, and
/// among still-untouched vertices only the lowest is tried since they are
/// interchangeable.
fn extend(adj: &mut [u16], deg: &mut [u8], min_next: usize, codes: &mut BTreeSet<Vec<u16>>) {
    let n = adj.len();
    let Some(v) = (0..n).find(|&v| deg[v] < 3) else {
        if is_connected_mask(adj) {
            codes.insert(canonical_form(adj));
        }
        return;
    };
    let mut tried_fresh = false;
    for u in min_next.max(v + 1)..n {
        if deg[u] >= 3 || adj[v] >> u & 1 == 1 {
            continue;
        }
        if deg[u] == 0 {
            if tried_fresh {
                continue;
            }
            tried_fresh = true;
        }
        adj[v] |= 1 << u;
        adj[u] |= 1 << v;
        deg[v] += 1;
        deg[u] += 1;
        let next = if deg[v] == 3 { 0 } else { u + 1 };
        extend(adj, deg, next, codes);
        adj[v] &= !(1 << u);
        adj[u] &= !(1 << v);
        deg[v] -= 1;
        deg[u] -= 1;
    }
}

fn is_connected_mask(adj: &[u16]) -> bool {
    let mut seen = 1u16;
    let mut frontier = 1u16;
    while frontier != 0 {
        let mut next = 0;
        for v in 0..adj.len() {
            if frontier >> v & 1 == 1 {
                next |= adj[v];
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen.count_ones() as usize == adj.len()
}

fn graph_from_code(n: usize, code: &[u16]) -> WeightedGraph {
    let mut pairs = Vec::new();
    for (v, &col) in code.iter().enumerate() {
        for u in 0..v {
            if col >> (15 - u) & 1 == 1 {
                pairs.push((u, v));
            }
        }
    }
    pairs.sort_unstable();
    WeightedGraph::unweighted(n, &pairs).expect("canonical code describes a simple graph")
}

#[cfg(test)]
/// Neighbour bitmasks of a graph with at most 16 vertices.
pub(crate) fn adjacency_masks(g: &WeightedGraph) -> Vec<u16> {
    assert!(g.n() <= 16);
    let mut adj = vec![0u16; g.n()];
    for e in g.edges() {
        adj[e.u] |= 1 << e.v;
        adj[e.v] |= 1 << e.u;
    }
    adj
}

/// Uniform connected cubic graph from the pairing model, rejecting loops,
/// multi-edges and disconnected outcomes. Deterministic in `(n, seed)`.
pub fn random_cubic_graph(n: usize, seed: u64) -> Result<WeightedGraph> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(CimError::Capability(format!(
            "cubic graphs need an even order >= 4, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    loop {
        points.shuffle(&mut rng);
        let mut pairs: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        if pairs.iter().any(|&(u, v)| u == v) {
            continue;
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        let g = WeightedGraph::unweighted(n, &pairs)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relabel(g: &WeightedGraph, perm: &[usize]) -> WeightedGraph {
        let pairs: Vec<_> = g.edges().iter().map(|e| (perm[e.u], perm[e.v])).collect();
        WeightedGraph::unweighted(g.n(), &pairs).unwrap()
    }

    #[test]
    fn small_order_counts() {
        assert_eq!(enumerate_cubic_graphs(4).unwrap().len(), 1);
        assert_eq!(enumerate_cubic_graphs(6).unwrap().len(), 2);
        assert_eq!(enumerate_cubic_graphs(8).unwrap().len(), 5);
    }

    #[test]
    fn order_four_is_complete_graph() {
        let g = &enumerate_cubic_graphs(4).unwrap()[0];
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn rejects_bad_orders() {
        for n in [2, 5, 12] {
            assert!(matches!(enumerate_cubic_graphs(n), Err(CimError::Capability(_))));
        }
        assert!(random_cubic_graph(7, 1).is_err());
    }

    #[test]
    fn canonical_form_is_relabelling_invariant() {
        for g in enumerate_cubic_graphs(8).unwrap() {
            let base = canonical_form(&adjacency_masks(&g));
            for perm in [
                [7, 6, 5, 4, 3, 2, 1, 0],
                [3, 1, 4, 0, 5, 2, 7, 6],
                [1, 2, 3, 4, 5, 6, 7, 0],
            ] {
                assert_eq!(canonical_form(&adjacency_masks(&relabel(&g, &perm))), base);
            }
        }
    }

    #[test]
    fn random_graphs_are_simple_connected_cubic() {
        let k4 = random_cubic_graph(4, 99).unwrap();
        assert_eq!(k4.edge_count(), 6);
        for seed in 0..20 {
            let g = random_cubic_graph(6, seed).unwrap();
            assert!(g.degrees().iter().all(|&d| d == 3));
            assert!(g.is_connected());
        }
        assert_eq!(random_cubic_graph(12, 5).unwrap(), random_cubic_graph(12, 5).unwrap());
    }
}
