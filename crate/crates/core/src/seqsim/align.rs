//! Toy Smith-Waterman local aligner with linear gap penalty.
//!
//! Multiple alignments per pair come from re-running the DP with the
//! cells of previously traced paths masked to zero, capped at
//! `max_alignments_per_pair`, so the same (x, y) pair can legitimately
//! appear in a block with several weights.

use rayon::prelude::*;

use crate::error::Result;
use crate::model::io::write_coo_block;
use crate::model::{CooTriple, Weight};
use crate::seqsim::{load_partition, AlignJob, AlignParams, AlignStats, SubstitutionMatrix};

const STOP: u8 = 0;
const DIAG: u8 = 1;
const UP: u8 = 2;
const LEFT: u8 = 3;

struct Dp {
    rows: usize,
    cols: usize,
    score: Vec<i32>,
    dir: Vec<u8>,
    masked: Vec<bool>,
}

impl Dp {
    fn new(rows: usize, cols: usize) -> Self {
        Dp {
            rows,
            cols,
            score: vec![0; (rows + 1) * (cols + 1)],
            dir: vec![STOP; (rows + 1) * (cols + 1)],
            masked: vec![false; rows * cols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> i32 {
        self.score[i * (self.cols + 1) + j]
    }

    /// Fills the matrix and returns the best score with its cell,
    /// ties broken toward the smallest (i, j) in row-major order.
    fn fill(&mut self, a: &[u8], b: &[u8], m: &SubstitutionMatrix) -> (i32, usize, usize) {
        let w = self.cols + 1;
        let mut best = (0i32, 0usize, 0usize);
        for i in 1..=self.rows {
            for j in 1..=self.cols {
                let idx = i * w + j;
                let (score, dir) = if self.masked[(i - 1) * self.cols + (j - 1)] {
                    (0, STOP)
                } else {
                    let diag = self.score[idx - w - 1] + m.score(a[i - 1], b[j - 1]);
                    let up = self.score[idx - w] + m.gap_penalty;
                    let left = self.score[idx - 1] + m.gap_penalty;
                    // priority on ties: diagonal, then up, then left
                    let mut s = 0;
                    let mut d = STOP;
                    if diag > s {
                        s = diag;
                        d = DIAG;
                    }
                    if up > s {
                        s = up;
                        d = UP;
                    }
                    if left > s {
                        s = left;
                        d = LEFT;
                    }
                    (s, d)
                };
                self.score[idx] = score;
                self.dir[idx] = dir;
                if score > best.0 {
                    best = (score, i, j);
                }
            }
        }
        best
    }

    /// Masks every cell on the path ending at (i, j).
    fn mask_path(&mut self, mut i: usize, mut j: usize) {
        let w = self.cols + 1;
        while i > 0 && j > 0 && self.score[i * w + j] > 0 {
            self.masked[(i - 1) * self.cols + (j - 1)] = true;
            match self.dir[i * w + j] {
                DIAG => {
                    i -= 1;
                    j -= 1;
                }
                UP => i -= 1,
                LEFT => j -= 1,
                _ => break,
            }
        }
    }
}

/// All local alignment scores >= `min_score` for one sequence pair, best
/// first, at most `cap` entries.
pub fn local_alignment_scores(
    a: &[u8],
    b: &[u8],
    matrix: &SubstitutionMatrix,
    min_score: Weight,
    cap: usize,
) -> Vec<Weight> {
    if a.is_empty() || b.is_empty() || cap == 0 {
        return Vec::new();
    }
    let mut dp = Dp::new(a.len(), b.len());
    let mut out = Vec::new();
    while out.len() < cap {
        let (score, i, j) = dp.fill(a, b, matrix);
        if score < min_score as i32 || score <= 0 {
            break;
        }
        out.push(score as Weight);
        dp.mask_path(i, j);
    }
    out
}

/// Best local alignment score for a pair (0 when nothing aligns).
pub fn best_alignment_score(a: &[u8], b: &[u8], matrix: &SubstitutionMatrix) -> i32 {
    let mut dp = Dp::new(a.len().max(1), b.len().max(1));
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    dp.fill(a, b, matrix).0
}

/// Runs one block job: aligns every pair (x in p_i, y in p_j) with x <= y
/// (x < y on the diagonal unless self-pairs are enabled) and commits the
/// resulting triples as a COO block file. A job whose output already
/// exists is an idempotent no-op.
pub fn align_block(job: &AlignJob, params: &AlignParams) -> Result<AlignStats> {
    if job.output.exists() {
        return Ok(AlignStats {
            skipped: true,
            ..AlignStats::default()
        });
    }
    let (i, j) = job.block;
    let left = load_partition(&job.left_partition)?;
    let right = if i == j {
        Vec::new()
    } else {
        load_partition(&job.right_partition)?
    };
    let right_ref: &[_] = if i == j { &left } else { &right };

    let per_row: Vec<(u64, Vec<CooTriple>)> = left
        .par_iter()
        .map(|x| {
            let mut triples = Vec::new();
            let mut pairs = 0u64;
            for y in right_ref {
                if i == j {
                    if y.id < x.id || (y.id == x.id && !params.include_self_pairs) {
                        continue;
                    }
                }
                pairs += 1;
                for score in local_alignment_scores(
                    &x.residues,
                    &y.residues,
                    &params.matrix,
                    params.min_score,
                    params.max_alignments_per_pair,
                ) {
                    triples.push(CooTriple {
                        src: x.id,
                        dst: y.id,
                        weight: score,
                    });
                }
            }
            (pairs, triples)
        })
        .collect();

    let mut stats = AlignStats::default();
    let mut triples = Vec::new();
    for (pairs, row) in per_row {
        stats.pairs_considered += pairs;
        triples.extend(row);
    }
    stats.triples_emitted = triples.len() as u64;
    write_coo_block(&job.output, &triples)?;
    Ok(stats)
}
