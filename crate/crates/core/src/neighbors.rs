//! Exact nearest-neighbor ordering over a point set.
//!
//! Neighbors are ordered by `(squared distance, index)`, so equidistant points
//! come out in ascending index order. The kd-tree yields neighbors lazily with
//! a best-first traversal; the brute-force strategy sorts everything up front
//! and is kept as the reference the tree is tested against.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::problem::{sq_dist, Points};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    KdTree,
    BruteForce,
}

/// A neighbor as yielded by [`NeighborStream`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub sq_dist: f64,
}

#[derive(Debug, Clone)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Split { left: usize, right: usize },
}

/// Immutable exact neighbor index. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    points: Points,
    strategy: SearchStrategy,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

impl NeighborIndex {
    pub fn build(points: Points) -> Self {
        Self::with_strategy(points, SearchStrategy::KdTree)
    }

    pub fn brute_force(points: Points) -> Self {
        Self::with_strategy(points, SearchStrategy::BruteForce)
    }

    pub fn with_strategy(points: Points, strategy: SearchStrategy) -> Self {
        let mut index = Self {
            perm: (0..points.len()).collect(),
            points,
            strategy,
            nodes: Vec::new(),
        };
        if strategy == SearchStrategy::KdTree && !index.points.is_empty() {
            let n = index.points.len();
            index.build_node(0, n);
        }
        index
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &self.perm[start..end] {
            for (d, &v) in self.points.get(i).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo: lo.clone(),
            hi: hi.clone(),
            kind: NodeKind::Leaf { start, end },
        });
        let (axis, width) =
            (0..dim).map(|d| (d, hi[d] - lo[d])).fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if end - start <= LEAF_SIZE || width <= 0.0 {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points.get(a)[axis].total_cmp(&points.get(b)[axis])
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id].kind = NodeKind::Split { left, right };
        id
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn strategy(&self) -> SearchStrategy {
        self.strategy
    }

    /// All points in nondecreasing distance from `query`, lazily.
    pub fn stream<'a>(&'a self, query: &'a [f64]) -> NeighborStream<'a> {
        let mut heap = BinaryHeap::new();
        match self.strategy {
            SearchStrategy::KdTree if !self.nodes.is_empty() => {
                heap.push(Reverse(Entry::node(node_lower_bound(&self.nodes[0], query), 0)));
            }
            SearchStrategy::KdTree => {}
            SearchStrategy::BruteForce => {
                for (i, p) in self.points.iter().enumerate() {
                    heap.push(Reverse(Entry::point(sq_dist(p, query), i)));
                }
            }
        }
        NeighborStream {
            index: self,
            query,
            heap,
        }
    }

    /// Index of the `k`-th nearest point (`k` is 1-based).
    pub fn kth_neighbor(&self, query: &[f64], k: usize) -> Result<usize> {
        self.check_query(query)?;
        if k == 0 || k > self.len() {
            return Err(Error::RankOutOfRange { k, len: self.len() });
        }
        Ok(self.stream(query).nth(k - 1).map(|n| n.index).expect("k <= len"))
    }

    /// The `k` nearest points, closest first.
    pub fn knn(&self, query: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.check_query(query)?;
        Ok(self.stream(query).take(k).collect())
    }

    pub fn nearest(&self, query: &[f64]) -> Result<Neighbor> {
        self.check_query(query)?;
        self.stream(query).next().ok_or(Error::EmptyPool)
    }

    /// Whether at most `max_count` points lie strictly within distance `r`.
    pub fn at_most_within(&self, query: &[f64], r: f64, max_count: usize) -> bool {
        if max_count >= self.len() {
            return true;
        }
        let r2 = r * r;
        match self.stream(query).nth(max_count) {
            Some(n) => n.sq_dist >= r2,
            None => true,
        }
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                got: query.len(),
            });
        }
        Ok(())
    }
}

/// Reference ordering: every index sorted by `(squared distance, index)`.
pub fn brute_force_order(points: &Points, query: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (sq_dist(p, query), i)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

// Per-axis gap to the box is never larger than the gap to any point inside
// it, and rounding is monotone, so this bound never exceeds `sq_dist`.
fn node_lower_bound(node: &Node, query: &[f64]) -> f64 {
    query
        .iter()
        .zip(node.lo.iter().zip(&node.hi))
        .map(|(&q, (&lo, &hi))| {
            let d = q - q.clamp(lo, hi);
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    dist: f64,
    // Nodes (0) sort before points (1) at equal distance, so a point is
    // emitted only after every box that could still hold a tie is opened.
    kind: u8,
    id: usize,
}

impl Entry {
    fn node(dist: f64, id: usize) -> Self {
        Self { dist, kind: 0, id }
    }

    fn point(dist: f64, id: usize) -> Self {
        Self { dist, kind: 1, id }
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.kind.cmp(&other.kind))
            .then(self.id.cmp(&other.id))
    }
}

/// Incremental nearest-neighbor iterator; see [`NeighborIndex::stream`].
pub struct NeighborStream<'a> {
    index: &'a NeighborIndex,
    query: &'a [f64],
    heap: BinaryHeap<Reverse<Entry>>,
}

impl Iterator for NeighborStream<'_> {
    type Item = Neighbor;

    fn next(&mut self) -> Option<Neighbor> {
        while let Some(Reverse(entry)) = self.heap.pop() {
            if entry.kind == 1 {
                return Some(Neighbor {
                    index: entry.id,
                    sq_dist: entry.dist,
                });
            }
            let node = &self.index.nodes[entry.id];
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &i in &self.index.perm[start..end] {
                        let d = sq_dist(self.index.points.get(i), self.query);
                        self.heap.push(Reverse(Entry::point(d, i)));
                    }
                }
                NodeKind::Split { left, right } => {
                    for child in [left, right] {
                        let lb = node_lower_bound(&self.index.nodes[child], self.query);
                        self.heap.push(Reverse(Entry::node(lb, child)));
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(values: &[f64]) -> Points {
        Points::new(1, values.to_vec()).unwrap()
    }

    #[test]
    fn kth_neighbor_examples() {
        let idx = NeighborIndex::build(line(&[0.0, 1.0, 3.0]));
        assert_eq!(idx.kth_neighbor(&[0.9], 1).unwrap(), 1);
        assert_eq!(idx.kth_neighbor(&[0.9], 2).unwrap(), 0);
        assert_eq!(idx.kth_neighbor(&[0.9], 3).unwrap(), 2);
        assert_eq!(idx.kth_neighbor(&[3.0], 1).unwrap(), 2);
        assert!(matches!(
            idx.kth_neighbor(&[0.0], 4),
            Err(Error::RankOutOfRange { k: 4, len: 3 })
        ));
        assert!(idx.kth_neighbor(&[0.0], 0).is_err());
        assert!(idx.kth_neighbor(&[0.0, 1.0], 1).is_err());
    }

    #[test]
    fn ties_go_to_lower_index() {
        for strategy in [SearchStrategy::KdTree, SearchStrategy::BruteForce] {
            let idx = NeighborIndex::with_strategy(line(&[-1.0, 1.0]), strategy);
            assert_eq!(idx.kth_neighbor(&[0.0], 1).unwrap(), 0);
            let idx = NeighborIndex::with_strategy(line(&[1.0, -1.0]), strategy);
            assert_eq!(idx.kth_neighbor(&[0.0], 1).unwrap(), 0);
        }
    }

    #[test]
    fn duplicate_points_are_ordered_by_index() {
        let values = vec![2.0; 40];
        let idx = NeighborIndex::build(line(&values));
        let order: Vec<usize> = idx.stream(&[0.0]).map(|n| n.index).collect();
        assert_eq!(order, (0..40).collect::<Vec<_>>());
    }

    #[test]
    fn single_point_stream() {
        let idx = NeighborIndex::build(line(&[4.0]));
        assert_eq!(idx.stream(&[0.0]).count(), 1);
    }

    #[test]
    fn stream_matches_brute_force_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in 1..=3 {
            let coords: Vec<f64> = (0..100 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pts = Points::new(dim, coords).unwrap();
            let idx = NeighborIndex::build(pts.clone());
            for _ in 0..20 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
                let got: Vec<usize> = idx.stream(&q).map(|n| n.index).collect();
                assert_eq!(got, brute_force_order(&pts, &q));
            }
        }
    }

    #[test]
    fn at_most_within_counts_open_ball() {
        let idx = NeighborIndex::build(line(&[0.0, 1.0, 2.0]));
        // open ball of radius 1 around 0 holds only the point 0
        assert!(idx.at_most_within(&[0.0], 1.0, 1));
        assert!(!idx.at_most_within(&[0.0], 1.0, 0));
        assert!(idx.at_most_within(&[0.0], 0.0, 0));
        assert!(!idx.at_most_within(&[0.0], 1.5, 1));
        assert!(idx.at_most_within(&[0.0], 100.0, 3));
    }
}
