//! In-memory graph representations shared by every pipeline stage: the
//! COO triple, the partition/block addressing scheme, the CSC graph, and
//! the renumbering map produced by zero-degree removal.
//!
//! CSC here always means in-neighbor lists: `edges[offsets[v]..offsets[v+1]]`
//! holds the sources of the edges pointing at `v`. An out-neighbor view is
//! obtained by [`crate::builder::transpose`], never by reinterpretation.

pub mod io;

use crate::error::{Error, Result};

/// Vertex identifier. The toolkit limit is |V| <= 2^32 - 1.
pub type VertexId = u32;

/// Edge weight (similarity score).
pub type Weight = u32;

/// One record of the edges array: an in-neighbor and the edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Edge {
    pub neighbor: VertexId,
    pub weight: Weight,
}

impl Edge {
    pub fn new(neighbor: VertexId, weight: Weight) -> Self {
        Edge { neighbor, weight }
    }
}

/// An edge-list triple as emitted by the aligner: edge `src -> dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CooTriple {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionKind {
    Asymmetric,
    Symmetric,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::Asymmetric => "asymmetric",
            DirectionKind::Symmetric => "symmetric",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "asymmetric" => Ok(DirectionKind::Asymmetric),
            "symmetric" => Ok(DirectionKind::Symmetric),
            other => Err(Error::Domain(format!("unknown direction kind: {other}"))),
        }
    }
}

/// Contiguous partitioning of the vertex range [0, |V|) into P partitions.
///
/// `boundaries` has P+1 entries, `boundaries[0] = 0`, `boundaries[P] = |V|`,
/// non-decreasing. Block (i, j) of the adjacency matrix is defined for
/// 0 <= i <= j < P, so there are P(P+1)/2 blocks in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionScheme {
    boundaries: Vec<VertexId>,
}

impl PartitionScheme {
    pub fn new(boundaries: Vec<VertexId>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::Domain(
                "partition scheme needs at least one partition".into(),
            ));
        }
        if boundaries[0] != 0 {
            return Err(Error::Domain("partition boundaries must start at 0".into()));
        }
        if boundaries.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Domain(
                "partition boundaries must be non-decreasing".into(),
            ));
        }
        Ok(PartitionScheme { boundaries })
    }

    /// Splits `vertex_count` vertices into `partition_count` contiguous
    /// partitions whose sizes differ by at most one; the first
    /// `vertex_count % partition_count` partitions get the extra vertex.
    pub fn near_equal(vertex_count: u64, partition_count: usize) -> Result<Self> {
        if partition_count == 0 {
            return Err(Error::Domain("partition count must be positive".into()));
        }
        if vertex_count > u64::from(u32::MAX) {
            return Err(Error::Domain(format!(
                "vertex count {vertex_count} exceeds the 2^32 - 1 toolkit limit"
            )));
        }
        let n = vertex_count as usize;
        let base = n / partition_count;
        let extra = n % partition_count;
        let mut boundaries = Vec::with_capacity(partition_count + 1);
        let mut acc = 0usize;
        boundaries.push(0);
        for i in 0..partition_count {
            acc += base + usize::from(i < extra);
            boundaries.push(acc as VertexId);
        }
        PartitionScheme::new(boundaries)
    }

    pub fn partition_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn vertex_count(&self) -> u64 {
        u64::from(*self.boundaries.last().unwrap())
    }

    pub fn boundaries(&self) -> &[VertexId] {
        &self.boundaries
    }

    /// Vertex range of partition `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<VertexId> {
        self.boundaries[i]..self.boundaries[i + 1]
    }

    /// Partition index holding vertex `v`.
    pub fn partition_of(&self, v: VertexId) -> Result<usize> {
        if u64::from(v) >= self.vertex_count() {
            return Err(Error::Domain(format!(
                "vertex {v} out of range (|V| = {})",
                self.vertex_count()
            )));
        }
        // Last boundary index with boundaries[i] <= v; empty partitions have
        // boundaries[i] == boundaries[i+1] and can never win.
        let idx = self.boundaries.partition_point(|&b| b <= v) - 1;
        Ok(idx)
    }

    /// Adjacency-matrix block holding an edge between `src` and `dst`,
    /// orientation-normalized so that i <= j.
    pub fn block_of(&self, src: VertexId, dst: VertexId) -> Result<(usize, usize)> {
        let a = self.partition_of(src)?;
        let b = self.partition_of(dst)?;
        Ok((a.min(b), a.max(b)))
    }

    /// Total number of blocks: P(P+1)/2.
    pub fn block_count(&self) -> u64 {
        let p = self.partition_count() as u64;
        p * (p + 1) / 2
    }

    /// All blocks (i, j) with i <= j in deterministic order: j major, i minor.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let p = self.partition_count();
        (0..p).flat_map(move |j| (0..=j).map(move |i| (i, j)))
    }
}

/// In-neighbor CSC graph: `edges[offsets[v]..offsets[v+1]]` lists the
/// sources of edges into `v`, sorted ascending by neighbor ID (strictly
/// ascending once deduplicated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscGraph {
    pub offsets: Vec<u64>,
    pub edges: Vec<Edge>,
    pub direction: DirectionKind,
}

impl CscGraph {
    pub fn new(offsets: Vec<u64>, edges: Vec<Edge>, direction: DirectionKind) -> Result<Self> {
        let g = CscGraph {
            offsets,
            edges,
            direction,
        };
        g.validate_structure()?;
        Ok(g)
    }

    pub fn empty(vertex_count: u64, direction: DirectionKind) -> Self {
        CscGraph {
            offsets: vec![0; vertex_count as usize + 1],
            edges: Vec::new(),
            direction,
        }
    }

    pub fn vertex_count(&self) -> u64 {
        (self.offsets.len() - 1) as u64
    }

    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn degree(&self, v: VertexId) -> u64 {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn in_neighbors(&self, v: VertexId) -> &[Edge] {
        &self.edges[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    /// Iterates all edges as (destination, edge) pairs in storage order.
    pub fn iter_with_dst(&self) -> impl Iterator<Item = (VertexId, Edge)> + '_ {
        (0..self.vertex_count() as VertexId)
            .flat_map(move |v| self.in_neighbors(v).iter().map(move |&e| (v, e)))
    }

    /// Checks the structural invariants: offsets shape, monotonicity, and
    /// per-vertex neighbor ordering (non-decreasing; duplicates allowed).
    /// Reports the first offending vertex.
    pub fn validate_structure(&self) -> Result<()> {
        if self.offsets.is_empty() {
            return Err(Error::Validation("offsets array is empty".into()));
        }
        if self.offsets.len() - 1 > u32::MAX as usize {
            return Err(Error::Validation(
                "vertex count exceeds the 2^32 - 1 toolkit limit".into(),
            ));
        }
        if self.offsets[0] != 0 {
            return Err(Error::Validation("offsets[0] must be 0".into()));
        }
        if *self.offsets.last().unwrap() != self.edges.len() as u64 {
            return Err(Error::Validation(format!(
                "offsets[{}] = {} does not equal edge count {}",
                self.offsets.len() - 1,
                self.offsets.last().unwrap(),
                self.edges.len()
            )));
        }
        for v in 0..self.offsets.len() - 1 {
            if self.offsets[v] > self.offsets[v + 1] {
                return Err(Error::Validation(format!(
                    "offsets not monotone at vertex {v}"
                )));
            }
            let slice =
                &self.edges[self.offsets[v] as usize..self.offsets[v + 1] as usize];
            if slice.windows(2).any(|w| w[0].neighbor > w[1].neighbor) {
                return Err(Error::Validation(format!(
                    "neighbors of vertex {v} are not sorted ascending"
                )));
            }
            if slice
                .iter()
                .any(|e| u64::from(e.neighbor) >= self.vertex_count())
            {
                return Err(Error::Validation(format!(
                    "vertex {v} has a neighbor outside the vertex range"
                )));
            }
        }
        Ok(())
    }

    /// True when every per-vertex slice is strictly ascending, i.e. the
    /// graph has been deduplicated.
    pub fn is_deduplicated(&self) -> bool {
        (0..self.vertex_count() as VertexId).all(|v| {
            self.in_neighbors(v)
                .windows(2)
                .all(|w| w[0].neighbor < w[1].neighbor)
        })
    }
}

/// Sentinel for vertices dropped by renumbering.
pub const ABSENT: VertexId = VertexId::MAX;

/// Order-preserving renumbering produced by zero-degree removal.
///
/// `forward` is indexed by old ID and yields the new ID or [`ABSENT`];
/// `reverse` is indexed by new ID and yields the old ID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenumberMap {
    pub forward: Vec<VertexId>,
    pub reverse: Vec<VertexId>,
}

impl RenumberMap {
    pub fn identity(n: u64) -> Self {
        let ids: Vec<VertexId> = (0..n as VertexId).collect();
        RenumberMap {
            forward: ids.clone(),
            reverse: ids,
        }
    }

    pub fn forward_of(&self, old: VertexId) -> Option<VertexId> {
        match self.forward.get(old as usize) {
            Some(&ABSENT) | None => None,
            Some(&new) => Some(new),
        }
    }

    pub fn new_count(&self) -> u64 {
        self.reverse.len() as u64
    }

    /// Verifies reverse[forward[v]] = v for retained vertices and that
    /// forward is order-preserving.
    pub fn validate(&self) -> Result<()> {
        let mut prev_new: Option<VertexId> = None;
        for (old, &new) in self.forward.iter().enumerate() {
            if new == ABSENT {
                continue;
            }
            if self.reverse.get(new as usize) != Some(&(old as VertexId)) {
                return Err(Error::Validation(format!(
                    "reverse[{new}] does not map back to old vertex {old}"
                )));
            }
            if let Some(p) = prev_new {
                if new <= p {
                    return Err(Error::Validation(format!(
                        "forward map not order-preserving at old vertex {old}"
                    )));
                }
            }
            prev_new = Some(new);
        }
        if self.reverse.len() != self.forward.iter().filter(|&&n| n != ABSENT).count() {
            return Err(Error::Validation(
                "reverse length does not match retained vertex count".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_equal_split_sizes() {
        let s = PartitionScheme::near_equal(10, 3).unwrap();
        assert_eq!(s.boundaries(), &[0, 4, 7, 10]);
        assert_eq!(s.partition_count(), 3);
        assert_eq!(s.vertex_count(), 10);
    }

    #[test]
    fn block_count_matches_pair_formula() {
        for (p, want) in [(1u64, 1u64), (4, 10), (16, 136), (120, 7260)] {
            let s = PartitionScheme::near_equal(p * 10, p as usize).unwrap();
            assert_eq!(s.block_count(), want);
            assert_eq!(s.blocks().count() as u64, want);
        }
    }

    #[test]
    fn block_order_is_j_major() {
        let s = PartitionScheme::near_equal(30, 3).unwrap();
        let blocks: Vec<_> = s.blocks().collect();
        assert_eq!(blocks, vec![(0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (2, 2)]);
    }

    #[test]
    fn block_of_normalizes_orientation() {
        let s = PartitionScheme::new(vec![0, 10, 20]).unwrap();
        assert_eq!(s.block_of(3, 15).unwrap(), (0, 1));
        assert_eq!(s.block_of(15, 3).unwrap(), (0, 1));
        assert_eq!(s.block_of(3, 5).unwrap(), (0, 0));
        assert!(s.block_of(3, 25).is_err());
    }

    #[test]
    fn single_partition_always_block_zero() {
        let s = PartitionScheme::near_equal(100, 1).unwrap();
        assert_eq!(s.block_of(0, 99).unwrap(), (0, 0));
    }

    #[test]
    fn partition_cover_is_exact() {
        let s = PartitionScheme::near_equal(23, 5).unwrap();
        let mut sizes = vec![0u64; 5];
        for v in 0..23 {
            sizes[s.partition_of(v).unwrap()] += 1;
        }
        assert_eq!(sizes.iter().sum::<u64>(), 23);
        for i in 0..5 {
            assert_eq!(sizes[i], u64::from(s.range(i).end - s.range(i).start));
        }
    }

    #[test]
    fn csc_structure_validation_names_vertex() {
        let g = CscGraph::new(
            vec![0, 1, 1],
            vec![Edge::new(1, 5)],
            DirectionKind::Asymmetric,
        )
        .unwrap();
        assert_eq!(g.in_neighbors(0), &[Edge::new(1, 5)]);

        let bad = CscGraph {
            offsets: vec![0, 2, 2],
            edges: vec![Edge::new(1, 5), Edge::new(0, 3)],
            direction: DirectionKind::Asymmetric,
        };
        let err = bad.validate_structure().unwrap_err();
        assert!(err.to_string().contains("vertex 0"), "{err}");
    }

    #[test]
    fn renumber_identity_roundtrip() {
        let m = RenumberMap::identity(5);
        m.validate().unwrap();
        assert_eq!(m.forward_of(3), Some(3));
        assert_eq!(m.new_count(), 5);
    }
}
