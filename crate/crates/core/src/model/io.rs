//! On-disk formats. Every binary file starts with an 8-byte magic and a
//! format-version byte folded into the magic's last byte, followed by
//! declared counts; all multi-byte integers are little-endian. Manifests
//! are line-oriented `key=value` text ending in a crc32 checksum line.

use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{
    CooTriple, CscGraph, DirectionKind, Edge, PartitionScheme, RenumberMap, VertexId, ABSENT,
};

pub const COO_MAGIC: &[u8; 8] = b"MSBCOO\0\x01";
pub const OFFSETS_MAGIC: &[u8; 8] = b"MSBOFF\0\x01";
pub const EDGES_MAGIC: &[u8; 8] = b"MSBEDG\0\x01";
pub const RENUMBER_MAGIC: &[u8; 8] = b"MSBREN\0\x01";

pub const OFFSETS_FILE: &str = "offsets.bin";
pub const EDGES_FILE: &str = "edges.bin";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SCHEME_FILE: &str = "scheme.txt";

pub fn crc32(bytes: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(bytes);
    h.finalize()
}

/// Writes `bytes` to a unique temporary in the target directory and
/// renames over `path`. Rename is the commit point, so concurrent
/// re-executions of the same job settle on one complete file.
pub fn commit_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let tmp = path.with_extension(format!("tmp.{}.{}", std::process::id(), nanos));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

/// Ordered key=value manifest with a trailing checksum line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        debug_assert!(!key.contains('=') && !key.contains('\n'));
        debug_assert!(!value.contains('\n'));
        self.entries.push((key.to_string(), value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str, path: &Path) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::format(path, format!("manifest missing key `{key}`")))
    }

    pub fn require_u64(&self, key: &str, path: &Path) -> Result<u64> {
        self.require(key, path)?
            .parse::<u64>()
            .map_err(|e| Error::format(path, format!("manifest key `{key}`: {e}")))
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut body = String::new();
        for (k, v) in &self.entries {
            body.push_str(k);
            body.push('=');
            body.push_str(v);
            body.push('\n');
        }
        let sum = crc32(body.as_bytes());
        body.push_str(&format!("checksum={sum:08x}\n"));
        body
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        commit_bytes(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let Some(split) = text.rfind("checksum=") else {
            return Err(Error::format(path, "manifest has no checksum line"));
        };
        let (body, sum_line) = text.split_at(split);
        let declared = sum_line
            .trim_end()
            .strip_prefix("checksum=")
            .and_then(|s| u32::from_str_radix(s, 16).ok())
            .ok_or_else(|| Error::format(path, "bad checksum line"))?;
        let actual = crc32(body.as_bytes());
        if declared != actual {
            return Err(Error::format(
                path,
                format!("manifest checksum mismatch: declared {declared:08x}, actual {actual:08x}"),
            ));
        }
        let mut entries = Vec::new();
        for line in body.lines() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::format(path, format!("bad manifest line: {line}")));
            };
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Manifest { entries })
    }
}

// ---------------------------------------------------------------------------
// COO block files
// ---------------------------------------------------------------------------

pub fn coo_block_name(i: usize, j: usize) -> String {
    format!("coo_{i}_{j}.bin")
}

pub fn write_coo_block(path: &Path, triples: &[CooTriple]) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + triples.len() * 12);
    bytes.extend_from_slice(COO_MAGIC);
    bytes.extend_from_slice(&(triples.len() as u64).to_le_bytes());
    for t in triples {
        bytes.extend_from_slice(&t.src.to_le_bytes());
        bytes.extend_from_slice(&t.dst.to_le_bytes());
        bytes.extend_from_slice(&t.weight.to_le_bytes());
    }
    commit_bytes(path, &bytes)
}

/// Streaming reader over one COO block file.
///
/// Yields exactly the header-declared number of triples; a body shorter
/// than declared surfaces as a truncation error carrying the byte offset.
pub struct CooBlockReader {
    reader: BufReader<File>,
    path: PathBuf,
    declared: u64,
    yielded: u64,
}

impl CooBlockReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut header = [0u8; 16];
        reader
            .read_exact(&mut header)
            .map_err(|_| Error::format(path, "file too short for COO header"))?;
        if &header[..8] != COO_MAGIC {
            return Err(Error::format(path, "bad COO magic"));
        }
        let declared = u64::from_le_bytes(header[8..16].try_into().unwrap());
        Ok(CooBlockReader {
            reader,
            path: path.to_path_buf(),
            declared,
            yielded: 0,
        })
    }

    pub fn declared_count(&self) -> u64 {
        self.declared
    }
}

impl Iterator for CooBlockReader {
    type Item = Result<CooTriple>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.yielded == self.declared {
            return None;
        }
        let mut buf = [0u8; 12];
        let mut filled = 0usize;
        while filled < 12 {
            match self.reader.read(&mut buf[filled..]) {
                Ok(0) => {
                    let offset = 16 + self.yielded * 12 + filled as u64;
                    self.yielded = self.declared; // stop iteration after the error
                    return Some(Err(Error::Truncated {
                        path: self.path.clone(),
                        offset,
                        reason: format!("declared {} triples, body ends early", self.declared),
                    }));
                }
                Ok(n) => filled += n,
                Err(e) => {
                    self.yielded = self.declared;
                    return Some(Err(Error::io(&self.path, e)));
                }
            }
        }
        self.yielded += 1;
        Some(Ok(CooTriple {
            src: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
            dst: u32::from_le_bytes(buf[4..8].try_into().unwrap()),
            weight: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
        }))
    }
}

pub fn read_coo_block(path: &Path) -> Result<Vec<CooTriple>> {
    CooBlockReader::open(path)?.collect()
}

// ---------------------------------------------------------------------------
// CSC directories
// ---------------------------------------------------------------------------

fn offsets_bytes(graph: &CscGraph) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + graph.offsets.len() * 8);
    bytes.extend_from_slice(OFFSETS_MAGIC);
    bytes.extend_from_slice(&graph.vertex_count().to_le_bytes());
    for &o in &graph.offsets {
        bytes.extend_from_slice(&o.to_le_bytes());
    }
    bytes
}

fn edges_bytes(graph: &CscGraph) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(16 + graph.edges.len() * 8);
    bytes.extend_from_slice(EDGES_MAGIC);
    bytes.extend_from_slice(&graph.edge_count().to_le_bytes());
    for e in &graph.edges {
        bytes.extend_from_slice(&e.neighbor.to_le_bytes());
        bytes.extend_from_slice(&e.weight.to_le_bytes());
    }
    bytes
}

/// Writes a CSC graph into `dir` as offsets + edges files plus a manifest
/// with counts, direction kind, and per-file checksums. `extra` entries
/// are appended to the manifest (filter provenance, metrics pointers).
/// Returns the manifest.
pub fn write_csc_with(graph: &CscGraph, dir: &Path, extra: &[(String, String)]) -> Result<Manifest> {
    graph.validate_structure()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let off = offsets_bytes(graph);
    let edg = edges_bytes(graph);
    let mut m = Manifest::new();
    m.push("format", "csc");
    m.push("vertex_count", graph.vertex_count());
    m.push("edge_count", graph.edge_count());
    m.push("direction", graph.direction.as_str());
    m.push("offsets_crc32", format!("{:08x}", crc32(&off)));
    m.push("edges_crc32", format!("{:08x}", crc32(&edg)));
    for (k, v) in extra {
        m.push(k, v);
    }
    commit_bytes(&dir.join(OFFSETS_FILE), &off)?;
    commit_bytes(&dir.join(EDGES_FILE), &edg)?;
    m.write(&dir.join(MANIFEST_FILE))?;
    Ok(m)
}

pub fn write_csc(graph: &CscGraph, dir: &Path) -> Result<Manifest> {
    write_csc_with(graph, dir, &[])
}

pub fn read_csc(dir: &Path) -> Result<CscGraph> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let m = Manifest::read(&manifest_path)?;
    let vertex_count = m.require_u64("vertex_count", &manifest_path)?;
    let edge_count = m.require_u64("edge_count", &manifest_path)?;
    let direction = DirectionKind::parse(m.require("direction", &manifest_path)?)?;

    let off_path = dir.join(OFFSETS_FILE);
    let off_bytes = fs::read(&off_path).map_err(|e| Error::io(&off_path, e))?;
    check_crc(&off_path, &off_bytes, m.require("offsets_crc32", &manifest_path)?)?;
    let offsets = parse_offsets(&off_path, &off_bytes, vertex_count)?;

    let edg_path = dir.join(EDGES_FILE);
    let edg_bytes = fs::read(&edg_path).map_err(|e| Error::io(&edg_path, e))?;
    check_crc(&edg_path, &edg_bytes, m.require("edges_crc32", &manifest_path)?)?;
    let edges = parse_edges(&edg_path, &edg_bytes, edge_count)?;

    CscGraph::new(offsets, edges, direction)
}

fn check_crc(path: &Path, bytes: &[u8], declared_hex: &str) -> Result<()> {
    let declared = u32::from_str_radix(declared_hex, 16)
        .map_err(|e| Error::format(path, format!("bad crc in manifest: {e}")))?;
    let actual = crc32(bytes);
    if declared != actual {
        return Err(Error::format(
            path,
            format!("checksum mismatch: declared {declared:08x}, actual {actual:08x}"),
        ));
    }
    Ok(())
}

fn parse_offsets(path: &Path, bytes: &[u8], vertex_count: u64) -> Result<Vec<u64>> {
    if bytes.len() < 16 || &bytes[..8] != OFFSETS_MAGIC {
        return Err(Error::format(path, "bad offsets magic"));
    }
    let declared = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if declared != vertex_count {
        return Err(Error::format(
            path,
            format!("offsets declare {declared} vertices, manifest says {vertex_count}"),
        ));
    }
    let need = 16 + (vertex_count as usize + 1) * 8;
    if bytes.len() < need {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            reason: format!("need {need} bytes for {vertex_count}+1 offsets"),
        });
    }
    Ok(bytes[16..need]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn parse_edges(path: &Path, bytes: &[u8], edge_count: u64) -> Result<Vec<Edge>> {
    if bytes.len() < 16 || &bytes[..8] != EDGES_MAGIC {
        return Err(Error::format(path, "bad edges magic"));
    }
    let declared = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if declared != edge_count {
        return Err(Error::format(
            path,
            format!("edges declare {declared} edges, manifest says {edge_count}"),
        ));
    }
    let need = 16 + edge_count as usize * 8;
    if bytes.len() < need {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            reason: format!("need {need} bytes for {edge_count} edges"),
        });
    }
    Ok(bytes[16..need]
        .chunks_exact(8)
        .map(|c| Edge {
            neighbor: u32::from_le_bytes(c[0..4].try_into().unwrap()),
            weight: u32::from_le_bytes(c[4..8].try_into().unwrap()),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Renumber map files (reverse array only: new ID -> old ID)
// ---------------------------------------------------------------------------

pub fn write_renumber(path: &Path, map: &RenumberMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + map.reverse.len() * 4);
    bytes.extend_from_slice(RENUMBER_MAGIC);
    bytes.extend_from_slice(&map.new_count().to_le_bytes());
    for &old in &map.reverse {
        bytes.extend_from_slice(&old.to_le_bytes());
    }
    commit_bytes(path, &bytes)
}

/// Rebuilds the full map from the published reverse array; `old_count`
/// is the vertex count of the graph the renumbering was derived from.
pub fn read_renumber(path: &Path, old_count: u64) -> Result<RenumberMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..8] != RENUMBER_MAGIC {
        return Err(Error::format(path, "bad renumber magic"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let need = 16 + n as usize * 4;
    if bytes.len() < need {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            reason: format!("need {need} bytes for {n} reverse entries"),
        });
    }
    let reverse: Vec<VertexId> = bytes[16..need]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut forward = vec![ABSENT; old_count as usize];
    for (new, &old) in reverse.iter().enumerate() {
        if u64::from(old) >= old_count {
            return Err(Error::format(
                path,
                format!("reverse entry {new} points past old vertex count {old_count}"),
            ));
        }
        forward[old as usize] = new as VertexId;
    }
    let map = RenumberMap { forward, reverse };
    map.validate()?;
    Ok(map)
}

// ---------------------------------------------------------------------------
// Partition scheme files
// ---------------------------------------------------------------------------

pub fn write_scheme(path: &Path, scheme: &PartitionScheme) -> Result<()> {
    let mut m = Manifest::new();
    m.push("format", "partition-scheme");
    m.push("vertex_count", scheme.vertex_count());
    m.push("partition_count", scheme.partition_count());
    let bounds: Vec<String> = scheme.boundaries().iter().map(|b| b.to_string()).collect();
    m.push("boundaries", bounds.join(","));
    m.write(path)
}

pub fn read_scheme(path: &Path) -> Result<PartitionScheme> {
    let m = Manifest::read(path)?;
    let bounds: Result<Vec<VertexId>> = m
        .require("boundaries", path)?
        .split(',')
        .map(|s| {
            s.parse::<u32>()
                .map_err(|e| Error::format(path, format!("bad boundary `{s}`: {e}")))
        })
        .collect();
    PartitionScheme::new(bounds?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DirectionKind;

    #[test]
    fn coo_roundtrip_preserves_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coo_0_0.bin");
        let triples = vec![
            CooTriple { src: 0, dst: 1, weight: 98 },
            CooTriple { src: 0, dst: 2, weight: 150 },
            CooTriple { src: 1, dst: 2, weight: 200 },
        ];
        write_coo_block(&path, &triples).unwrap();
        let back = read_coo_block(&path).unwrap();
        assert_eq!(back, triples);
    }

    #[test]
    fn coo_empty_block() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coo_0_0.bin");
        write_coo_block(&path, &[]).unwrap();
        assert_eq!(read_coo_block(&path).unwrap(), vec![]);
    }

    #[test]
    fn coo_truncation_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coo_0_0.bin");
        let triples = vec![
            CooTriple { src: 0, dst: 1, weight: 7 },
            CooTriple { src: 1, dst: 2, weight: 9 },
        ];
        write_coo_block(&path, &triples).unwrap();
        let full = fs::read(&path).unwrap();
        fs::write(&path, &full[..full.len() - 5]).unwrap();
        let items: Vec<_> = CooBlockReader::open(&path).unwrap().collect();
        assert!(matches!(items[0], Ok(_)));
        match &items[1] {
            Err(Error::Truncated { offset, .. }) => assert_eq!(*offset, 16 + 12 + 7),
            other => panic!("expected truncation, got {other:?}"),
        }
        assert_eq!(items.len(), 2);
    }

    #[test]
    fn coo_bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        fs::write(&path, b"NOTMAGIC\x01\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(
            CooBlockReader::open(&path),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn csc_roundtrip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = CscGraph::new(
            vec![0, 1, 1],
            vec![Edge::new(1, 5)],
            DirectionKind::Asymmetric,
        )
        .unwrap();
        write_csc(&g, dir.path()).unwrap();
        let back = read_csc(dir.path()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn csc_empty_graph_offsets_single_zero() {
        let dir = tempfile::tempdir().unwrap();
        let g = CscGraph::empty(0, DirectionKind::Asymmetric);
        write_csc(&g, dir.path()).unwrap();
        let bytes = fs::read(dir.path().join(OFFSETS_FILE)).unwrap();
        // magic + count(0) + exactly one u64 zero offset
        assert_eq!(bytes.len(), 16 + 8);
        assert_eq!(&bytes[16..], &[0u8; 8]);
        assert_eq!(read_csc(dir.path()).unwrap(), g);
    }

    #[test]
    fn csc_rejects_invariant_violation() {
        let dir = tempfile::tempdir().unwrap();
        let bad = CscGraph {
            offsets: vec![0, 2],
            edges: vec![Edge::new(0, 1), Edge::new(0, 1)],
            direction: DirectionKind::Asymmetric,
        };
        // duplicate non-decreasing neighbors are allowed pre-dedup
        write_csc(&bad, dir.path()).unwrap();
        let worse = CscGraph {
            offsets: vec![0, 1],
            edges: vec![],
            direction: DirectionKind::Asymmetric,
        };
        assert!(write_csc(&worse, dir.path()).is_err());
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let mut m = Manifest::new();
        m.push("a", 1);
        m.push("b", "two");
        m.write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("a=1", "a=2")).unwrap();
        assert!(Manifest::read(&path).is_err());
    }

    #[test]
    fn renumber_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ren.bin");
        let map = RenumberMap {
            forward: vec![0, ABSENT, 1],
            reverse: vec![0, 2],
        };
        write_renumber(&path, &map).unwrap();
        let back = read_renumber(&path, 3).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn scheme_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SCHEME_FILE);
        let s = PartitionScheme::near_equal(10, 3).unwrap();
        write_scheme(&path, &s).unwrap();
        assert_eq!(read_scheme(&path).unwrap(), s);
    }
}
