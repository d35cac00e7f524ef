//! MSB-first bitstreams and the Elias gamma code.
//!
//! gamma(x) for x >= 1 is floor(log2 x) zero bits followed by the binary
//! representation of x in floor(log2 x) + 1 bits, most significant bit
//! first (the leading 1 doubles as the unary terminator).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter::default()
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn push_bit(&mut self, bit: bool) {
        let byte = (self.bit_len / 8) as usize;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 0x80 >> (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    /// Writes the low `width` bits of `value`, MSB first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for k in (0..width).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    pub fn write_gamma(&mut self, x: u64) {
        debug_assert!(x >= 1, "gamma is defined for x >= 1");
        let n = 63 - x.leading_zeros();
        for _ in 0..n {
            self.push_bit(false);
        }
        self.write_bits(x, n + 1);
    }

    /// Appends another stream at the bit level, without padding. This is
    /// what makes chunked compression bit-identical to sequential output.
    pub fn append(&mut self, other: &BitWriter) {
        if self.bit_len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.bit_len += other.bit_len;
        } else {
            for i in 0..other.bit_len {
                let byte = other.bytes[(i / 8) as usize];
                self.push_bit(byte & (0x80 >> (i % 8)) != 0);
            }
        }
    }

    /// Final bytes, zero-padded to a byte boundary at the end only.
    pub fn into_parts(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        debug_assert!(bit_len <= bytes.len() as u64 * 8);
        BitReader {
            bytes,
            bit_len,
            pos: 0,
        }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn seek(&mut self, bit_pos: u64) -> Result<()> {
        if bit_pos > self.bit_len {
            return Err(Error::Corruption {
                vertex: 0,
                reason: format!("seek to bit {bit_pos} past stream end {}", self.bit_len),
            });
        }
        self.pos = bit_pos;
        Ok(())
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bit_len {
            return Err(Error::Corruption {
                vertex: 0,
                reason: "bitstream exhausted".into(),
            });
        }
        let bit = self.bytes[(self.pos / 8) as usize] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 63 {
                return Err(Error::Corruption {
                    vertex: 0,
                    reason: "gamma prefix longer than 63 zeros".into(),
                });
            }
        }
        let rest = self.read_bits(zeros)?;
        Ok((1u64 << zeros) | rest)
    }
}
