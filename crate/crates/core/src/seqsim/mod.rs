//! Corpus partitioning with ID assignment, the lower-triangular block
//! schedule, and the pluggable pairwise aligner feeding COO blocks.

pub mod align;
pub mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::io::{self, SCHEME_FILE};
use crate::model::{PartitionScheme, VertexId, Weight};

/// The 20 canonical amino acid letters, in index order.
pub const ALPHABET: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

pub fn residue_index(c: u8) -> Option<usize> {
    ALPHABET.iter().position(|&a| a == c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: VertexId,
    pub name: String,
    pub residues: Vec<u8>,
}

/// Symmetric 20x20 substitution matrix with a linear gap penalty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionMatrix {
    pub scores: [[i32; 20]; 20],
    pub gap_penalty: i32,
}

impl SubstitutionMatrix {
    pub fn new(scores: [[i32; 20]; 20], gap_penalty: i32) -> Result<Self> {
        for a in 0..20 {
            for b in 0..a {
                if scores[a][b] != scores[b][a] {
                    return Err(Error::Domain(format!(
                        "substitution matrix not symmetric at ({}, {})",
                        ALPHABET[a] as char, ALPHABET[b] as char
                    )));
                }
            }
        }
        if gap_penalty >= 0 {
            return Err(Error::Domain("gap penalty must be negative".into()));
        }
        Ok(SubstitutionMatrix {
            scores,
            gap_penalty,
        })
    }

    /// Uniform match/mismatch matrix; defaults are +2/-1 with gap -2.
    pub fn uniform(match_score: i32, mismatch_score: i32, gap_penalty: i32) -> Result<Self> {
        let mut scores = [[mismatch_score; 20]; 20];
        for (i, row) in scores.iter_mut().enumerate() {
            row[i] = match_score;
        }
        SubstitutionMatrix::new(scores, gap_penalty)
    }

    pub fn score(&self, a: u8, b: u8) -> i32 {
        let (Some(i), Some(j)) = (residue_index(a), residue_index(b)) else {
            return i32::MIN / 2;
        };
        self.scores[i][j]
    }

    /// Loads a matrix from text: optional `#` comments, a `gap=<neg>` line,
    /// a header line with the 20 letters, then 20 rows of `letter v0..v19`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut gap = None;
        let mut header: Option<Vec<usize>> = None;
        let mut scores = [[i32::MIN; 20]; 20];
        let mut rows_seen = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(g) = line.strip_prefix("gap=") {
                gap = Some(g.trim().parse::<i32>().map_err(|e| Error::Parse {
                    record: lineno,
                    reason: format!("bad gap value: {e}"),
                })?);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if header.is_none() {
                if fields.len() != 20 {
                    return Err(Error::Parse {
                        record: lineno,
                        reason: format!("header needs 20 letters, found {}", fields.len()),
                    });
                }
                let mut cols = Vec::with_capacity(20);
                for f in &fields {
                    let c = f.as_bytes();
                    let idx = (c.len() == 1).then(|| residue_index(c[0])).flatten();
                    cols.push(idx.ok_or_else(|| Error::Parse {
                        record: lineno,
                        reason: format!("unknown residue `{f}` in header"),
                    })?);
                }
                header = Some(cols);
                continue;
            }
            let cols = header.as_ref().unwrap();
            if fields.len() != 21 {
                return Err(Error::Parse {
                    record: lineno,
                    reason: format!("row needs letter + 20 values, found {}", fields.len()),
                });
            }
            let row_letter = fields[0].as_bytes();
            let row = (row_letter.len() == 1)
                .then(|| residue_index(row_letter[0]))
                .flatten()
                .ok_or_else(|| Error::Parse {
                    record: lineno,
                    reason: format!("unknown residue `{}`", fields[0]),
                })?;
            for (k, f) in fields[1..].iter().enumerate() {
                scores[row][cols[k]] = f.parse().map_err(|e| Error::Parse {
                    record: lineno,
                    reason: format!("bad score `{f}`: {e}"),
                })?;
            }
            rows_seen += 1;
        }
        if rows_seen != 20 {
            return Err(Error::Domain(format!(
                "matrix text has {rows_seen} rows, need 20"
            )));
        }
        let gap = gap.ok_or_else(|| Error::Domain("matrix text missing gap= line".into()))?;
        SubstitutionMatrix::new(scores, gap)
    }
}

impl Default for SubstitutionMatrix {
    fn default() -> Self {
        SubstitutionMatrix::uniform(2, -1, -2).unwrap()
    }
}

/// One alignment job: block (i, j) with i <= j plus its file locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignJob {
    pub block: (usize, usize),
    pub left_partition: PathBuf,
    pub right_partition: PathBuf,
    pub output: PathBuf,
}

/// All P(P+1)/2 jobs for a scheme in deterministic order (j major, i minor).
pub fn enumerate_blocks(scheme: &PartitionScheme, seq_dir: &Path, out_dir: &Path) -> Vec<AlignJob> {
    scheme
        .blocks()
        .map(|(i, j)| AlignJob {
            block: (i, j),
            left_partition: seq_dir.join(partition_file_name(i)),
            right_partition: seq_dir.join(partition_file_name(j)),
            output: out_dir.join(io::coo_block_name(i, j)),
        })
        .collect()
}

pub fn partition_file_name(i: usize) -> String {
    format!("part_{i:04}.seq")
}

pub fn names_file_name(i: usize) -> String {
    format!("part_{i:04}.names")
}

// ---------------------------------------------------------------------------
// FASTA-like corpus input
// ---------------------------------------------------------------------------

/// Parses `> name` / sequence-line text. Residues outside the 20-letter
/// alphabet are a parse error carrying the record index.
pub fn parse_fasta(text: &str) -> Result<Vec<(String, Vec<u8>)>> {
    let mut records: Vec<(String, Vec<u8>)> = Vec::new();
    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('>') {
            records.push((name.trim().to_string(), Vec::new()));
        } else {
            let Some(last) = records.last_mut() else {
                return Err(Error::Parse {
                    record: 0,
                    reason: "sequence data before any > header".into(),
                });
            };
            for &c in line.trim().as_bytes() {
                if residue_index(c).is_none() {
                    return Err(Error::Parse {
                        record: records.len() - 1,
                        reason: format!("invalid residue `{}`", c as char),
                    });
                }
                last.1.push(c);
            }
        }
    }
    for (idx, (name, residues)) in records.iter().enumerate() {
        if residues.is_empty() {
            return Err(Error::Parse {
                record: idx,
                reason: format!("record `{name}` has no residues"),
            });
        }
    }
    Ok(records)
}

pub fn write_fasta(path: &Path, records: &[(String, Vec<u8>)]) -> Result<()> {
    let mut text = String::new();
    for (name, residues) in records {
        text.push('>');
        text.push_str(name);
        text.push('\n');
        text.push_str(std::str::from_utf8(residues).expect("alphabet is ascii"));
        text.push('\n');
    }
    io::commit_bytes(path, text.as_bytes())
}

/// Splits a corpus into P ID-sequence partitions plus ID-name sidecars.
///
/// IDs are assigned 0..N-1 in input order; the partition files replace
/// names with IDs so downstream output needs no name translation, and the
/// sidecars (`ID<TAB>name`) recover the names.
pub fn partition_corpus(
    fasta_input: &Path,
    partition_count: usize,
    out_dir: &Path,
) -> Result<PartitionScheme> {
    let text = fs::read_to_string(fasta_input).map_err(|e| Error::io(fasta_input, e))?;
    let records = parse_fasta(&text)?;
    if records.is_empty() {
        return Err(Error::Domain("empty corpus".into()));
    }
    let scheme = PartitionScheme::near_equal(records.len() as u64, partition_count)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for p in 0..scheme.partition_count() {
        let range = scheme.range(p);
        let mut seq_text = String::new();
        let mut name_text = String::new();
        for id in range {
            let (name, residues) = &records[id as usize];
            seq_text.push('>');
            seq_text.push_str(&id.to_string());
            seq_text.push('\n');
            seq_text.push_str(std::str::from_utf8(residues).unwrap());
            seq_text.push('\n');
            name_text.push_str(&format!("{id}\t{name}\n"));
        }
        io::commit_bytes(&out_dir.join(partition_file_name(p)), seq_text.as_bytes())?;
        io::commit_bytes(&out_dir.join(names_file_name(p)), name_text.as_bytes())?;
    }
    io::write_scheme(&out_dir.join(SCHEME_FILE), &scheme)?;
    Ok(scheme)
}

/// Loads one ID-sequence partition file.
pub fn load_partition(path: &Path) -> Result<Vec<SequenceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_fasta(&text)?;
    records
        .into_iter()
        .map(|(name, residues)| {
            let id = name.parse::<u32>().map_err(|e| {
                Error::format(path, format!("partition record name `{name}` is not an ID: {e}"))
            })?;
            Ok(SequenceRecord {
                id,
                name,
                residues,
            })
        })
        .collect()
}

/// Deterministic random corpus for demos and end-to-end tests. Sequences
/// are given blocky shared motifs so the toy aligner finds real structure.
pub fn generate_random_corpus(
    count: usize,
    len_range: (usize, usize),
    seed: u64,
) -> Vec<(String, Vec<u8>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let motifs: Vec<Vec<u8>> = (0..8)
        .map(|_| {
            (0..12)
                .map(|_| ALPHABET[rng.gen_range(0..20)])
                .collect::<Vec<u8>>()
        })
        .collect();
    (0..count)
        .map(|i| {
            let len = rng.gen_range(len_range.0..=len_range.1);
            let mut residues = Vec::with_capacity(len);
            while residues.len() < len {
                if rng.gen_bool(0.4) {
                    let m = &motifs[rng.gen_range(0..motifs.len())];
                    residues.extend_from_slice(m);
                } else {
                    residues.push(ALPHABET[rng.gen_range(0..20)]);
                }
            }
            residues.truncate(len);
            (format!("seq{i:06}"), residues)
        })
        .collect()
}

/// Per-pair score cap and threshold settings for the toy aligner.
#[derive(Debug, Clone)]
pub struct AlignParams {
    pub matrix: SubstitutionMatrix,
    pub min_score: Weight,
    pub max_alignments_per_pair: usize,
    pub include_self_pairs: bool,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            matrix: SubstitutionMatrix::default(),
            min_score: 30,
            max_alignments_per_pair: 3,
            include_self_pairs: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignStats {
    pub pairs_considered: u64,
    pub triples_emitted: u64,
    /// True when the job output already existed and was left untouched.
    pub skipped: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_corpus_sizes_and_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.fa");
        let records: Vec<(String, Vec<u8>)> = (0..10)
            .map(|i| (format!("protein-{i}"), b"ACDEFGHIK".to_vec()))
            .collect();
        write_fasta(&corpus, &records).unwrap();
        let scheme = partition_corpus(&corpus, 3, dir.path()).unwrap();
        assert_eq!(scheme.boundaries(), &[0, 4, 7, 10]);

        let p0 = load_partition(&dir.path().join(partition_file_name(0))).unwrap();
        assert_eq!(p0.len(), 4);
        assert_eq!(p0[0].id, 0);
        assert_eq!(p0[3].id, 3);

        let names = fs::read_to_string(dir.path().join(names_file_name(1))).unwrap();
        assert_eq!(names, "4\tprotein-4\n5\tprotein-5\n6\tprotein-6\n");

        let loaded = io::read_scheme(&dir.path().join(SCHEME_FILE)).unwrap();
        assert_eq!(loaded, scheme);
    }

    #[test]
    fn single_sequence_single_partition() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("one.fa");
        write_fasta(&corpus, &[("only".to_string(), b"MKV".to_vec())]).unwrap();
        let scheme = partition_corpus(&corpus, 1, dir.path()).unwrap();
        assert_eq!(scheme.boundaries(), &[0, 1]);
    }

    #[test]
    fn empty_corpus_is_domain_error() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("empty.fa");
        fs::write(&corpus, "").unwrap();
        assert!(matches!(
            partition_corpus(&corpus, 2, dir.path()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invalid_residue_names_record() {
        let err = parse_fasta(">a\nACDX\n").unwrap_err();
        match err {
            Error::Parse { record, reason } => {
                assert_eq!(record, 0);
                assert!(reason.contains('X'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn block_enumeration_counts() {
        let out = PathBuf::from("/tmp/out");
        for (p, want) in [(1usize, 1usize), (4, 10), (120, 7260)] {
            let scheme = PartitionScheme::near_equal(p as u64 * 2, p).unwrap();
            let jobs = enumerate_blocks(&scheme, &out, &out);
            assert_eq!(jobs.len(), want);
        }
        let scheme = PartitionScheme::near_equal(2, 1).unwrap();
        let jobs = enumerate_blocks(&scheme, &out, &out);
        assert_eq!(jobs[0].block, (0, 0));
    }

    #[test]
    fn matrix_text_roundtrip() {
        let m = SubstitutionMatrix::default();
        let mut text = String::from("# demo matrix\ngap=-2\n");
        let letters: Vec<String> = ALPHABET.iter().map(|&c| (c as char).to_string()).collect();
        text.push_str(&letters.join(" "));
        text.push('\n');
        for (i, l) in letters.iter().enumerate() {
            let row: Vec<String> = (0..20).map(|j| m.scores[i][j].to_string()).collect();
            text.push_str(&format!("{l} {}\n", row.join(" ")));
        }
        let parsed = SubstitutionMatrix::from_text(&text).unwrap();
        assert_eq!(parsed, m);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let mut scores = [[0i32; 20]; 20];
        scores[0][1] = 5;
        assert!(SubstitutionMatrix::new(scores, -2).is_err());
    }
}
