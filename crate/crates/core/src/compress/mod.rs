//! Succinct graph container: a gamma-coded bitstream for the underlying
//! graph, a label (weight) bitstream written in the same pass, and
//! Elias-Fano indexes over the per-vertex bit offsets of both streams.
//!
//! Per vertex the graph stream holds gamma(degree + 1), then for non-empty
//! slices gamma(first_neighbor + 1) followed by gamma(gap) for each further
//! strictly positive neighbor gap. The label stream holds gamma(weight + 1)
//! per edge in the same edge order. No vertex encoding references another
//! vertex, so vertices can be compressed in independent chunks and the
//! concatenated output is bit-identical to a single-chunk run.

pub mod bits;
pub mod ef;

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CscGraph, DirectionKind, Edge, PartitionScheme, VertexId, Weight};
use bits::{BitReader, BitWriter};
use ef::EliasFanoIndex;

pub const CONTAINER_MAGIC: &[u8; 8] = b"MSBBVZ\0\x01";

const FLAG_HAS_LABELS: u8 = 0b0000_0001;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedGraph {
    pub vertex_count: u64,
    pub edge_count: u64,
    pub direction: DirectionKind,
    graph_bits: Vec<u8>,
    graph_bit_len: u64,
    label_bits: Vec<u8>,
    label_bit_len: u64,
    graph_offsets: EliasFanoIndex,
    label_offsets: EliasFanoIndex,
}

fn encode_vertex(graph_w: &mut BitWriter, label_w: &mut BitWriter, v: VertexId, slice: &[Edge]) -> Result<()> {
    graph_w.write_gamma(slice.len() as u64 + 1);
    let mut prev: Option<VertexId> = None;
    for e in slice {
        match prev {
            None => graph_w.write_gamma(u64::from(e.neighbor) + 1),
            Some(p) => {
                if e.neighbor <= p {
                    return Err(Error::Precondition(format!(
                        "vertex {v} has duplicate or unsorted neighbor {}; deduplicate first",
                        e.neighbor
                    )));
                }
                graph_w.write_gamma(u64::from(e.neighbor - p));
            }
        }
        prev = Some(e.neighbor);
        label_w.write_gamma(u64::from(e.weight) + 1);
    }
    Ok(())
}

/// Compresses a deduplicated CSC graph. Vertices are split into
/// `chunk_count` contiguous ranges compressed independently and then
/// concatenated, which yields the same bits as a sequential run.
pub fn compress(graph: &CscGraph, chunk_count: usize) -> Result<CompressedGraph> {
    if chunk_count == 0 {
        return Err(Error::Domain("chunk_count must be positive".into()));
    }
    let n = graph.vertex_count();
    let ranges = PartitionScheme::near_equal(n, chunk_count.min(n.max(1) as usize))?;

    struct Chunk {
        graph_w: BitWriter,
        label_w: BitWriter,
        // bit offset of each vertex in this chunk, chunk-relative
        graph_starts: Vec<u64>,
        label_starts: Vec<u64>,
    }

    let chunks: Result<Vec<Chunk>> = (0..ranges.partition_count())
        .into_par_iter()
        .map(|c| {
            let range = ranges.range(c);
            let mut chunk = Chunk {
                graph_w: BitWriter::new(),
                label_w: BitWriter::new(),
                graph_starts: Vec::with_capacity(range.len()),
                label_starts: Vec::with_capacity(range.len()),
            };
            for v in range {
                chunk.graph_starts.push(chunk.graph_w.bit_len());
                chunk.label_starts.push(chunk.label_w.bit_len());
                encode_vertex(&mut chunk.graph_w, &mut chunk.label_w, v, graph.in_neighbors(v))?;
            }
            Ok(chunk)
        })
        .collect();
    let chunks = chunks?;

    let mut graph_w = BitWriter::new();
    let mut label_w = BitWriter::new();
    let mut graph_positions = Vec::with_capacity(n as usize + 1);
    let mut label_positions = Vec::with_capacity(n as usize + 1);
    for chunk in &chunks {
        let gbase = graph_w.bit_len();
        let lbase = label_w.bit_len();
        graph_positions.extend(chunk.graph_starts.iter().map(|s| gbase + s));
        label_positions.extend(chunk.label_starts.iter().map(|s| lbase + s));
        graph_w.append(&chunk.graph_w);
        label_w.append(&chunk.label_w);
    }
    graph_positions.push(graph_w.bit_len());
    label_positions.push(label_w.bit_len());

    let graph_offsets = EliasFanoIndex::build(&graph_positions, graph_w.bit_len() + 1)?;
    let label_offsets = EliasFanoIndex::build(&label_positions, label_w.bit_len() + 1)?;
    let (graph_bits, graph_bit_len) = graph_w.into_parts();
    let (label_bits, label_bit_len) = label_w.into_parts();

    Ok(CompressedGraph {
        vertex_count: n,
        edge_count: graph.edge_count(),
        direction: graph.direction,
        graph_bits,
        graph_bit_len,
        label_bits,
        label_bit_len,
        graph_offsets,
        label_offsets,
    })
}

impl CompressedGraph {
    /// Streaming decode: one pass over both bitstreams, no offset index use.
    pub fn decompress_stream(&self) -> Result<CscGraph> {
        let mut graph_r = BitReader::new(&self.graph_bits, self.graph_bit_len);
        let mut label_r = BitReader::new(&self.label_bits, self.label_bit_len);
        let mut offsets = Vec::with_capacity(self.vertex_count as usize + 1);
        offsets.push(0u64);
        let mut edges = Vec::with_capacity(self.edge_count as usize);
        for v in 0..self.vertex_count {
            let ctx = |e: Error| match e {
                Error::Corruption { reason, .. } => Error::Corruption { vertex: v, reason },
                other => other,
            };
            let degree = graph_r.read_gamma().map_err(ctx)? - 1;
            let mut prev = 0u64;
            for k in 0..degree {
                let neighbor = if k == 0 {
                    graph_r.read_gamma().map_err(ctx)? - 1
                } else {
                    prev + graph_r.read_gamma().map_err(ctx)?
                };
                if neighbor > u64::from(u32::MAX) {
                    return Err(Error::Corruption {
                        vertex: v,
                        reason: format!("decoded neighbor {neighbor} exceeds the ID range"),
                    });
                }
                prev = neighbor;
                let weight = label_r.read_gamma().map_err(ctx)? - 1;
                edges.push(Edge::new(neighbor as VertexId, weight as Weight));
            }
            offsets.push(edges.len() as u64);
        }
        if edges.len() as u64 != self.edge_count {
            return Err(Error::Corruption {
                vertex: self.vertex_count,
                reason: format!(
                    "decoded {} edges, header declares {}",
                    edges.len(),
                    self.edge_count
                ),
            });
        }
        CscGraph::new(offsets, edges, self.direction)
    }

    /// Random access to one vertex's in-neighbor slice via the offset
    /// indexes; cost is O(degree) plus the select overhead.
    pub fn neighbors(&self, v: VertexId) -> Result<Vec<Edge>> {
        if u64::from(v) >= self.vertex_count {
            return Err(Error::Domain(format!(
                "vertex {v} out of range (|V| = {})",
                self.vertex_count
            )));
        }
        let mut graph_r = BitReader::new(&self.graph_bits, self.graph_bit_len);
        graph_r.seek(self.graph_offsets.access(u64::from(v))?)?;
        let mut label_r = BitReader::new(&self.label_bits, self.label_bit_len);
        label_r.seek(self.label_offsets.access(u64::from(v))?)?;

        let degree = graph_r.read_gamma()? - 1;
        let mut out = Vec::with_capacity(degree as usize);
        let mut prev = 0u64;
        for k in 0..degree {
            let neighbor = if k == 0 {
                graph_r.read_gamma()? - 1
            } else {
                prev + graph_r.read_gamma()?
            };
            prev = neighbor;
            let weight = label_r.read_gamma()? - 1;
            out.push(Edge::new(neighbor as VertexId, weight as Weight));
        }
        Ok(out)
    }

    pub fn graph_offsets(&self) -> &EliasFanoIndex {
        &self.graph_offsets
    }

    pub fn label_offsets(&self) -> &EliasFanoIndex {
        &self.label_offsets
    }

    pub fn graph_bit_len(&self) -> u64 {
        self.graph_bit_len
    }

    pub fn label_bit_len(&self) -> u64 {
        self.label_bit_len
    }

    // -- container ------------------------------------------------------

    /// Serializes the container. The stored chunk table always describes
    /// the stream as one segment: chunking is a build-time parallelization
    /// detail and normalizing it keeps output bytes independent of it.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTAINER_MAGIC);
        out.extend_from_slice(&self.vertex_count.to_le_bytes());
        out.extend_from_slice(&self.edge_count.to_le_bytes());
        out.push(match self.direction {
            DirectionKind::Asymmetric => 0,
            DirectionKind::Symmetric => 1,
        });
        out.push(FLAG_HAS_LABELS);
        out.extend_from_slice(&[0u8; 2]); // reserved
        out.extend_from_slice(&1u32.to_le_bytes()); // stored segment count
        out.extend_from_slice(&self.graph_bit_len.to_le_bytes());
        out.extend_from_slice(&self.label_bit_len.to_le_bytes());
        out.extend_from_slice(&self.graph_bit_len.to_le_bytes());
        out.extend_from_slice(&(self.graph_bits.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.graph_bits);
        out.extend_from_slice(&self.label_bit_len.to_le_bytes());
        out.extend_from_slice(&(self.label_bits.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.label_bits);
        self.graph_offsets.write_to(&mut out);
        self.label_offsets.write_to(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        fn take<'a>(bytes: &'a [u8], cursor: &mut usize, len: usize) -> Result<&'a [u8]> {
            let end = cursor.checked_add(len).filter(|&e| e <= bytes.len());
            let Some(end) = end else {
                return Err(Error::Corruption {
                    vertex: 0,
                    reason: format!("container truncated at byte {}", bytes.len()),
                });
            };
            let s = &bytes[*cursor..end];
            *cursor = end;
            Ok(s)
        }
        fn take_u64(bytes: &[u8], cursor: &mut usize) -> Result<u64> {
            Ok(u64::from_le_bytes(
                take(bytes, cursor, 8)?.try_into().unwrap(),
            ))
        }

        let mut cursor = 0usize;
        if take(bytes, &mut cursor, 8)? != CONTAINER_MAGIC {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "bad container magic".into(),
            });
        }
        let vertex_count = take_u64(bytes, &mut cursor)?;
        let edge_count = take_u64(bytes, &mut cursor)?;
        let dir_byte = take(bytes, &mut cursor, 1)?[0];
        let direction = match dir_byte {
            0 => DirectionKind::Asymmetric,
            1 => DirectionKind::Symmetric,
            other => {
                return Err(Error::Corruption {
                    vertex: 0,
                    reason: format!("bad direction byte {other}"),
                })
            }
        };
        let flags = take(bytes, &mut cursor, 1)?[0];
        if flags & FLAG_HAS_LABELS == 0 {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "container without labels is not supported".into(),
            });
        }
        take(bytes, &mut cursor, 2)?; // reserved
        let segments = u32::from_le_bytes(take(bytes, &mut cursor, 4)?.try_into().unwrap());
        let mut seg_graph_bits = 0u64;
        let mut seg_label_bits = 0u64;
        for _ in 0..segments {
            seg_graph_bits += take_u64(bytes, &mut cursor)?;
            seg_label_bits += take_u64(bytes, &mut cursor)?;
        }

        let graph_bit_len = take_u64(bytes, &mut cursor)?;
        let graph_byte_len = take_u64(bytes, &mut cursor)? as usize;
        if graph_byte_len as u64 != graph_bit_len.div_ceil(8) || graph_bit_len != seg_graph_bits {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "graph stream length disagrees with chunk table".into(),
            });
        }
        let graph_bits = take(bytes, &mut cursor, graph_byte_len)?.to_vec();

        let label_bit_len = take_u64(bytes, &mut cursor)?;
        let label_byte_len = take_u64(bytes, &mut cursor)? as usize;
        if label_byte_len as u64 != label_bit_len.div_ceil(8) || label_bit_len != seg_label_bits {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "label stream length disagrees with chunk table".into(),
            });
        }
        let label_bits = take(bytes, &mut cursor, label_byte_len)?.to_vec();

        let graph_offsets = EliasFanoIndex::read_from(bytes, &mut cursor)?;
        let label_offsets = EliasFanoIndex::read_from(bytes, &mut cursor)?;
        if cursor != bytes.len() {
            return Err(Error::Corruption {
                vertex: 0,
                reason: format!("{} trailing bytes after container", bytes.len() - cursor),
            });
        }
        if graph_offsets.len() != vertex_count + 1 || label_offsets.len() != vertex_count + 1 {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "offset index length disagrees with vertex count".into(),
            });
        }
        Ok(CompressedGraph {
            vertex_count,
            edge_count,
            direction,
            graph_bits,
            graph_bit_len,
            label_bits,
            label_bit_len,
            graph_offsets,
            label_offsets,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        crate::model::io::commit_bytes(path, &self.to_bytes())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Total compressed payload in bytes (streams plus offset indexes).
    pub fn payload_bytes(&self) -> u64 {
        self.graph_bits.len() as u64
            + self.label_bits.len() as u64
            + self.graph_offsets.size_bits().div_ceil(8)
            + self.label_offsets.size_bits().div_ceil(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DirectionKind;

    fn bits_string(bytes: &[u8], len: u64) -> String {
        (0..len)
            .map(|i| {
                if bytes[(i / 8) as usize] & (0x80 >> (i % 8)) != 0 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    #[test]
    fn hand_encoded_single_vertex() {
        // one vertex with in-neighbors [0, 5], weights [3, 7]:
        // graph bits gamma(3) gamma(1) gamma(5) = 011 1 00101
        // label bits gamma(4) gamma(8) = 00100 0001000
        let g = CscGraph::new(
            vec![0, 2, 2, 2, 2, 2, 2],
            vec![Edge::new(0, 3), Edge::new(5, 7)],
            DirectionKind::Asymmetric,
        )
        .unwrap();
        let cg = compress(&g, 1).unwrap();
        let gbits = bits_string(&cg.graph_bits, cg.graph_bit_len);
        assert!(gbits.starts_with("011100101"), "{gbits}");
        let lbits = bits_string(&cg.label_bits, cg.label_bit_len);
        assert!(lbits.starts_with("001000001000"), "{lbits}");
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = CscGraph::empty(0, DirectionKind::Symmetric);
        let cg = compress(&g, 4).unwrap();
        assert_eq!(cg.graph_bit_len, 0);
        assert_eq!(cg.label_bit_len, 0);
        let bytes = cg.to_bytes();
        let back = CompressedGraph::from_bytes(&bytes).unwrap();
        assert_eq!(back.decompress_stream().unwrap(), g);
    }

    #[test]
    fn chunk_counts_are_bit_identical() {
        let g = test_graph(500, 9);
        let reference = compress(&g, 1).unwrap().to_bytes();
        for chunks in [2usize, 3, 4, 8, 17] {
            assert_eq!(compress(&g, chunks).unwrap().to_bytes(), reference);
        }
    }

    #[test]
    fn neighbors_matches_source() {
        let g = test_graph(300, 3);
        let cg = compress(&g, 4).unwrap();
        for v in 0..g.vertex_count() as VertexId {
            assert_eq!(cg.neighbors(v).unwrap().as_slice(), g.in_neighbors(v));
        }
        assert!(cg.neighbors(g.vertex_count() as VertexId).is_err());
    }

    #[test]
    fn rejects_duplicate_neighbors() {
        let g = CscGraph {
            offsets: vec![0, 2],
            edges: vec![Edge::new(0, 1), Edge::new(0, 2)],
            direction: DirectionKind::Asymmetric,
        };
        assert!(matches!(compress(&g, 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn truncated_container_is_error() {
        let g = test_graph(100, 5);
        let bytes = compress(&g, 2).unwrap().to_bytes();
        for cut in [10usize, 40, bytes.len() / 2, bytes.len() - 3] {
            assert!(
                CompressedGraph::from_bytes(&bytes[..cut]).is_err(),
                "cut {cut} accepted"
            );
        }
    }

    #[test]
    fn truncated_stream_decode_is_error() {
        let g = test_graph(100, 5);
        let mut cg = compress(&g, 1).unwrap();
        cg.graph_bit_len = cg.graph_bit_len / 2;
        assert!(cg.decompress_stream().is_err());
    }

    fn test_graph(n: u32, seed: u64) -> CscGraph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut offsets = vec![0u64];
        let mut edges = Vec::new();
        for _ in 0..n {
            let deg = rng.gen_range(0..8);
            let mut nbrs: Vec<u32> = (0..deg).map(|_| rng.gen_range(0..n)).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            for nb in nbrs {
                edges.push(Edge::new(nb, rng.gen_range(0..10_000)));
            }
            offsets.push(edges.len() as u64);
        }
        CscGraph::new(offsets, edges, DirectionKind::Asymmetric).unwrap()
    }

    #[test]
    fn stream_decode_round_trip() {
        for seed in 0..20 {
            let g = test_graph(200, seed);
            let cg = compress(&g, 3).unwrap();
            let bytes = cg.to_bytes();
            let back = CompressedGraph::from_bytes(&bytes).unwrap();
            assert_eq!(back.decompress_stream().unwrap(), g);
        }
    }
}
