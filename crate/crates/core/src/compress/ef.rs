//! Elias-Fano encoding of monotone sequences, used for the per-vertex
//! offset indexes of the compressed container.
//!
//! A sequence of n non-decreasing values below a universe u is split into
//! lower bits (l = max(0, floor(log2(u/n))) per value, stored packed) and
//! upper bits (a bitvector with a one at position (value >> l) + i for the
//! i-th value). access(i) recovers the value as
//! ((select1(i) - i) << l) | lower(i). Select is accelerated by sampling
//! the position of every 1024th one-bit and scanning words in between.

use crate::error::{Error, Result};

const SELECT_SAMPLE: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliasFanoIndex {
    n: u64,
    universe: u64,
    low_width: u32,
    /// n * low_width bits, LSB-first packing within u64 words.
    lower: Vec<u64>,
    /// n + (universe >> low_width) bits, LSB-first within words.
    upper: Vec<u64>,
    /// Bit position of every SELECT_SAMPLE-th one (rank 0, 1024, ...).
    samples: Vec<u64>,
}

impl EliasFanoIndex {
    /// Builds the index over `values`, which must be non-decreasing and
    /// strictly below `universe`.
    pub fn build(values: &[u64], universe: u64) -> Result<Self> {
        let n = values.len() as u64;
        if n == 0 {
            return Ok(EliasFanoIndex {
                n: 0,
                universe,
                low_width: 0,
                lower: Vec::new(),
                upper: Vec::new(),
                samples: Vec::new(),
            });
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::Domain(format!(
                    "values not monotone at index {}",
                    i + 1
                )));
            }
        }
        let max = *values.last().unwrap();
        if max >= universe {
            return Err(Error::Domain(format!(
                "value {max} not below universe {universe}"
            )));
        }

        let low_width = {
            let q = universe / n;
            if q < 2 {
                0
            } else {
                63 - q.leading_zeros()
            }
        };

        let lower_bits = n * u64::from(low_width);
        let mut lower = vec![0u64; lower_bits.div_ceil(64) as usize];
        let upper_bits = n + (universe >> low_width);
        let mut upper = vec![0u64; upper_bits.div_ceil(64) as usize];
        let mut samples = Vec::with_capacity((n / SELECT_SAMPLE) as usize + 1);

        for (i, &v) in values.iter().enumerate() {
            if low_width > 0 {
                let low = v & ((1u64 << low_width) - 1);
                let bit = i as u64 * u64::from(low_width);
                let word = (bit / 64) as usize;
                let shift = bit % 64;
                lower[word] |= low << shift;
                if shift + u64::from(low_width) > 64 {
                    lower[word + 1] |= low >> (64 - shift);
                }
            }
            let pos = (v >> low_width) + i as u64;
            upper[(pos / 64) as usize] |= 1u64 << (pos % 64);
            if i as u64 % SELECT_SAMPLE == 0 {
                samples.push(pos);
            }
        }

        Ok(EliasFanoIndex {
            n,
            universe,
            low_width,
            lower,
            upper,
            samples,
        })
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn low_width(&self) -> u32 {
        self.low_width
    }

    fn lower_at(&self, i: u64) -> u64 {
        if self.low_width == 0 {
            return 0;
        }
        let bit = i * u64::from(self.low_width);
        let word = (bit / 64) as usize;
        let shift = bit % 64;
        let mut v = self.lower[word] >> shift;
        if shift + u64::from(self.low_width) > 64 {
            v |= self.lower[word + 1] << (64 - shift);
        }
        v & ((1u64 << self.low_width) - 1)
    }

    /// Position of the i-th one-bit (0-based) in the upper bitvector.
    fn select1(&self, i: u64) -> u64 {
        let sample_idx = (i / SELECT_SAMPLE) as usize;
        let start = self.samples[sample_idx];
        let mut remaining = i - (i / SELECT_SAMPLE) * SELECT_SAMPLE;
        let mut word_idx = (start / 64) as usize;
        // mask off ones below the sampled position, keep the sampled one
        let mut word = self.upper[word_idx] & !((1u64 << (start % 64)) - 1);
        loop {
            let ones = word.count_ones() as u64;
            if remaining < ones {
                let mut w = word;
                for _ in 0..remaining {
                    w &= w - 1; // clear lowest set bit
                }
                return word_idx as u64 * 64 + w.trailing_zeros() as u64;
            }
            remaining -= ones;
            word_idx += 1;
            word = self.upper[word_idx];
        }
    }

    /// The i-th value of the encoded sequence.
    pub fn access(&self, i: u64) -> Result<u64> {
        if i >= self.n {
            return Err(Error::Domain(format!(
                "index {i} out of range (n = {})",
                self.n
            )));
        }
        let high = self.select1(i) - i;
        Ok((high << self.low_width) | self.lower_at(i))
    }

    /// Sequential scan over the upper bitvector yielding all values in
    /// order. Independent of the sampled select path.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let mut pos = 0u64;
        (0..self.n).map(move |i| {
            loop {
                let word = self.upper[(pos / 64) as usize] >> (pos % 64);
                if word == 0 {
                    pos = (pos / 64 + 1) * 64;
                } else {
                    pos += word.trailing_zeros() as u64;
                    break;
                }
            }
            let v = ((pos - i) << self.low_width) | self.lower_at(i);
            pos += 1;
            v
        })
    }

    /// Cross-checks sampled-select access against the sequential scan.
    pub fn select_scan_check(&self) -> Result<u64> {
        let mut checked = 0u64;
        let mut prev = 0u64;
        for (i, v) in self.iter().enumerate() {
            let a = self.access(i as u64)?;
            if a != v {
                return Err(Error::Validation(format!(
                    "access({i}) = {a} disagrees with sequential scan value {v}"
                )));
            }
            if (i as u64) > 0 && v < prev {
                return Err(Error::Validation(format!("scan not monotone at {i}")));
            }
            prev = v;
            checked += 1;
        }
        Ok(checked)
    }

    /// Logical size in bits: upper bitvector + packed lower bits +
    /// select samples.
    pub fn size_bits(&self) -> u64 {
        let upper_bits = if self.n == 0 {
            0
        } else {
            self.n + (self.universe >> self.low_width)
        };
        upper_bits + self.n * u64::from(self.low_width) + self.samples.len() as u64 * 64
    }

    // -- serialization --------------------------------------------------

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.universe.to_le_bytes());
        out.extend_from_slice(&u64::from(self.low_width).to_le_bytes());
        for arr in [&self.lower, &self.upper, &self.samples] {
            out.extend_from_slice(&(arr.len() as u64).to_le_bytes());
            for &w in arr.iter() {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
    }

    pub fn read_from(bytes: &[u8], cursor: &mut usize) -> Result<Self> {
        fn take_u64(bytes: &[u8], cursor: &mut usize) -> Result<u64> {
            let end = *cursor + 8;
            if end > bytes.len() {
                return Err(Error::Corruption {
                    vertex: 0,
                    reason: "container ends inside an offset index".into(),
                });
            }
            let v = u64::from_le_bytes(bytes[*cursor..end].try_into().unwrap());
            *cursor = end;
            Ok(v)
        }
        fn take_words(bytes: &[u8], cursor: &mut usize) -> Result<Vec<u64>> {
            let len = take_u64(bytes, cursor)? as usize;
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                words.push(take_u64(bytes, cursor)?);
            }
            Ok(words)
        }
        let n = take_u64(bytes, cursor)?;
        let universe = take_u64(bytes, cursor)?;
        let low_width = take_u64(bytes, cursor)? as u32;
        let lower = take_words(bytes, cursor)?;
        let upper = take_words(bytes, cursor)?;
        let samples = take_words(bytes, cursor)?;
        let idx = EliasFanoIndex {
            n,
            universe,
            low_width,
            lower,
            upper,
            samples,
        };
        // shape checks so corrupt files fail loudly instead of panicking
        if n > 0 {
            let want_lower = (n * u64::from(low_width)).div_ceil(64) as usize;
            let want_upper = ((n + (universe >> low_width)).div_ceil(64)) as usize;
            let want_samples = (n.div_ceil(SELECT_SAMPLE).max(1)) as usize;
            if idx.lower.len() != want_lower
                || idx.upper.len() != want_upper
                || idx.samples.len() != want_samples
            {
                return Err(Error::Corruption {
                    vertex: 0,
                    reason: "offset index shape does not match its header".into(),
                });
            }
        }
        Ok(idx)
    }
}
