//! Deterministic synthetic COO generator: a desk-scale stand-in for
//! full-corpus alignment that exercises the same block interfaces.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::model::io::{self, SCHEME_FILE};
use crate::model::{CooTriple, PartitionScheme, Weight};

/// Edge-weight law. `Skewed` is a truncated Pareto so the weight
/// frequency plot gets the long tail seen in real similarity scores.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightLaw {
    Uniform { min: Weight, max: Weight },
    Skewed { min: Weight, max: Weight, alpha: f64 },
}

impl WeightLaw {
    pub fn sample(&self, rng: &mut ChaCha20Rng) -> Weight {
        match *self {
            WeightLaw::Uniform { min, max } => rng.gen_range(min..=max),
            WeightLaw::Skewed { min, max, alpha } => {
                // inverse-CDF sampling of a Pareto truncated to [min, max+1)
                let lo = f64::from(min);
                let hi = f64::from(max) + 1.0;
                let u: f64 = rng.gen_range(0.0..1.0);
                let a = 1.0 - alpha;
                let x = (lo.powf(a) + u * (hi.powf(a) - lo.powf(a))).powf(1.0 / a);
                (x.floor() as u32).clamp(min, max)
            }
        }
    }

    /// Parses `uniform:MIN:MAX` or `skewed:MIN:MAX:ALPHA`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|e| Error::Domain(format!("bad weight-law number `{s}`: {e}")))
        };
        let law = match parts.as_slice() {
            ["uniform", min, max] => WeightLaw::Uniform {
                min: num(min)?,
                max: num(max)?,
            },
            ["skewed", min, max, alpha] => WeightLaw::Skewed {
                min: num(min)?,
                max: num(max)?,
                alpha: alpha
                    .parse()
                    .map_err(|e| Error::Domain(format!("bad alpha `{alpha}`: {e}")))?,
            },
            _ => {
                return Err(Error::Domain(format!(
                    "weight law must be uniform:MIN:MAX or skewed:MIN:MAX:ALPHA, got `{text}`"
                )))
            }
        };
        match law {
            WeightLaw::Uniform { min, max } | WeightLaw::Skewed { min, max, .. } if min > max => {
                Err(Error::Domain(format!("weight law min {min} > max {max}")))
            }
            WeightLaw::Skewed { alpha, .. } if !(alpha > 0.0) || (alpha - 1.0).abs() < 1e-9 => {
                Err(Error::Domain("alpha must be positive and not 1".into()))
            }
            other => Ok(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub vertex_count: u64,
    pub edge_count: u64,
    pub law: WeightLaw,
    pub include_self_loops: bool,
    /// Fraction of extra triples repeating an existing pair with a fresh
    /// weight, so downstream deduplication has real work.
    pub duplicate_fraction: f64,
    /// When set, endpoints are drawn as floor(N * r^beta), skewing edges
    /// toward low vertex IDs (power-law-ish degrees, gap-friendly).
    pub endpoint_skew: Option<f64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            vertex_count: 0,
            edge_count: 0,
            law: WeightLaw::Skewed {
                min: 98,
                max: 100_000,
                alpha: 1.8,
            },
            include_self_loops: false,
            duplicate_fraction: 0.0,
            endpoint_skew: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SynthStats {
    pub distinct_pairs: u64,
    pub triples_written: u64,
    pub blocks_written: u64,
}

fn lower_triangle_capacity(n: u64, with_loops: bool) -> u64 {
    if with_loops {
        n * (n + 1) / 2
    } else {
        n * (n - 1) / 2
    }
}

/// Generates block-complete COO files for `scheme` under `out_dir`
/// (plus the scheme file itself). Deterministic for a fixed seed; every
/// emitted triple satisfies the block contract `src <= dst`.
pub fn generate_synthetic_coo(
    spec: &SyntheticSpec,
    scheme: &PartitionScheme,
    seed: u64,
    out_dir: &Path,
) -> Result<SynthStats> {
    if spec.vertex_count == 0 {
        return Err(Error::Domain("vertex_count must be positive".into()));
    }
    if spec.vertex_count != scheme.vertex_count() {
        return Err(Error::Domain(format!(
            "spec has {} vertices but scheme covers {}",
            spec.vertex_count,
            scheme.vertex_count()
        )));
    }
    let capacity = lower_triangle_capacity(spec.vertex_count, spec.include_self_loops);
    if spec.edge_count > capacity {
        return Err(Error::Domain(format!(
            "edge_count {} exceeds lower-triangle capacity {capacity}",
            spec.edge_count
        )));
    }
    if !(0.0..=10.0).contains(&spec.duplicate_fraction) {
        return Err(Error::Domain("duplicate_fraction out of range".into()));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = spec.vertex_count as u32;

    let mut draw_vertex = |rng: &mut ChaCha20Rng| -> u32 {
        match spec.endpoint_skew {
            None => rng.gen_range(0..n),
            Some(beta) => {
                let r: f64 = rng.gen_range(0.0..1.0);
                ((f64::from(n) * r.powf(beta)) as u32).min(n - 1)
            }
        }
    };

    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(spec.edge_count as usize);
    let mut triples: Vec<CooTriple> = Vec::with_capacity(spec.edge_count as usize);
    while (triples.len() as u64) < spec.edge_count {
        let a = draw_vertex(&mut rng);
        let b = draw_vertex(&mut rng);
        if a == b && !spec.include_self_loops {
            continue;
        }
        let (src, dst) = (a.min(b), a.max(b));
        if !seen.insert((src, dst)) {
            continue;
        }
        triples.push(CooTriple {
            src,
            dst,
            weight: spec.law.sample(&mut rng),
        });
    }
    let distinct = triples.len() as u64;

    let dup_count = (spec.duplicate_fraction * distinct as f64).floor() as u64;
    for _ in 0..dup_count {
        let idx = rng.gen_range(0..distinct) as usize;
        let base = triples[idx];
        triples.push(CooTriple {
            weight: spec.law.sample(&mut rng),
            ..base
        });
    }

    // group per block, preserving generation order within each block
    let p = scheme.partition_count();
    let mut per_block: Vec<Vec<CooTriple>> = vec![Vec::new(); p * p];
    for t in &triples {
        let (i, j) = scheme.block_of(t.src, t.dst)?;
        per_block[i * p + j].push(*t);
    }
    let mut blocks_written = 0u64;
    for (i, j) in scheme.blocks() {
        io::write_coo_block(&out_dir.join(io::coo_block_name(i, j)), &per_block[i * p + j])?;
        blocks_written += 1;
    }
    io::write_scheme(&out_dir.join(SCHEME_FILE), scheme)?;

    Ok(SynthStats {
        distinct_pairs: distinct,
        triples_written: triples.len() as u64,
        blocks_written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_fixed_seed() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let scheme = PartitionScheme::near_equal(200, 4).unwrap();
        let spec = SyntheticSpec {
            vertex_count: 200,
            edge_count: 1000,
            duplicate_fraction: 0.05,
            ..SyntheticSpec::default()
        };
        generate_synthetic_coo(&spec, &scheme, 99, dir_a.path()).unwrap();
        generate_synthetic_coo(&spec, &scheme, 99, dir_b.path()).unwrap();
        for (i, j) in scheme.blocks() {
            let name = io::coo_block_name(i, j);
            let a = std::fs::read(dir_a.path().join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "block {name} differs across runs");
        }
    }

    #[test]
    fn zero_vertices_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scheme = PartitionScheme::near_equal(1, 1).unwrap();
        let spec = SyntheticSpec {
            vertex_count: 0,
            edge_count: 0,
            ..SyntheticSpec::default()
        };
        assert!(matches!(
            generate_synthetic_coo(&spec, &scheme, 1, dir.path()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn infeasible_edge_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scheme = PartitionScheme::near_equal(10, 2).unwrap();
        let spec = SyntheticSpec {
            vertex_count: 10,
            edge_count: 46, // capacity without loops is 45
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic_coo(&spec, &scheme, 1, dir.path()).is_err());
    }

    #[test]
    fn triples_respect_block_contract() {
        let dir = tempfile::tempdir().unwrap();
        let scheme = PartitionScheme::near_equal(500, 5).unwrap();
        let spec = SyntheticSpec {
            vertex_count: 500,
            edge_count: 5000,
            endpoint_skew: Some(2.0),
            ..SyntheticSpec::default()
        };
        let stats = generate_synthetic_coo(&spec, &scheme, 7, dir.path()).unwrap();
        assert_eq!(stats.distinct_pairs, 5000);
        assert_eq!(stats.blocks_written, scheme.block_count());
        let mut total = 0u64;
        for (i, j) in scheme.blocks() {
            let triples = io::read_coo_block(&dir.path().join(io::coo_block_name(i, j))).unwrap();
            for t in &triples {
                assert!(t.src <= t.dst);
                assert!(scheme.range(i).contains(&t.src));
                assert!(scheme.range(j).contains(&t.dst));
            }
            total += triples.len() as u64;
        }
        assert_eq!(total, 5000);
    }

    #[test]
    fn duplicates_repeat_existing_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let scheme = PartitionScheme::near_equal(100, 2).unwrap();
        let spec = SyntheticSpec {
            vertex_count: 100,
            edge_count: 400,
            duplicate_fraction: 0.25,
            ..SyntheticSpec::default()
        };
        let stats = generate_synthetic_coo(&spec, &scheme, 5, dir.path()).unwrap();
        assert_eq!(stats.triples_written, 500);
        let mut pairs = std::collections::HashMap::new();
        for (i, j) in scheme.blocks() {
            for t in io::read_coo_block(&dir.path().join(io::coo_block_name(i, j))).unwrap() {
                *pairs.entry((t.src, t.dst)).or_insert(0u32) += 1;
            }
        }
        assert_eq!(pairs.len(), 400);
        assert_eq!(pairs.values().map(|&c| u64::from(c)).sum::<u64>(), 500);
    }

    #[test]
    fn skewed_law_spans_range_and_skews_low() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let law = WeightLaw::Skewed {
            min: 98,
            max: 10_000,
            alpha: 1.8,
        };
        let samples: Vec<Weight> = (0..20_000).map(|_| law.sample(&mut rng)).collect();
        assert!(samples.iter().all(|&w| (98..=10_000).contains(&w)));
        let low = samples.iter().filter(|&&w| w < 1000).count();
        assert!(low > samples.len() / 2, "skew missing: {low}");
        let distinct: std::collections::HashSet<_> = samples.iter().collect();
        assert!(distinct.len() > 1000);
    }

    #[test]
    fn weight_law_parsing() {
        assert_eq!(
            WeightLaw::parse("uniform:1:50").unwrap(),
            WeightLaw::Uniform { min: 1, max: 50 }
        );
        assert!(matches!(
            WeightLaw::parse("skewed:98:634925:1.8").unwrap(),
            WeightLaw::Skewed { min: 98, .. }
        ));
        assert!(WeightLaw::parse("skewed:5:2:1.8").is_err());
        assert!(WeightLaw::parse("zipf:1:2").is_err());
    }
}
