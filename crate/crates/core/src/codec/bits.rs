//! Bit packing: bits fill each byte starting at the least significant bit,
//! multi-bit fields are emitted most significant bit first.

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn put_bit(&mut self, bit: bool) {
        let shift = (self.len % 8) as u32;
        if shift == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << shift;
        }
        self.len += 1;
    }

    /// Writes the low `nbits` of `value`, most significant first.
    #[inline]
    pub fn put(&mut self, value: u32, nbits: u32) {
        debug_assert!(nbits <= 32);
        debug_assert!(nbits == 32 || value >> nbits == 0, "{value} overflows {nbits} bits");
        for i in (0..nbits).rev() {
            self.put_bit((value >> i) & 1 == 1);
        }
    }

    /// `n` zeros followed by a one.
    #[inline]
    pub fn put_unary(&mut self, n: u32) {
        for _ in 0..n {
            self.put_bit(false);
        }
        self.put_bit(true);
    }

    pub fn bit_len(&self) -> u64 {
        self.len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    #[inline]
    pub fn bit(&mut self) -> Result<bool> {
        let byte = self
            .bytes
            .get((self.pos / 8) as usize)
            .ok_or_else(|| Error::Bitstream("truncated stream".into()))?;
        let bit = (byte >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    #[inline]
    pub fn get(&mut self, nbits: u32) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..nbits {
            v = (v << 1) | self.bit()? as u32;
        }
        Ok(v)
    }

    /// Counts zeros up to the terminating one; fails past `limit` zeros.
    #[inline]
    pub fn unary(&mut self, limit: u32) -> Result<u32> {
        let mut n = 0;
        while !self.bit()? {
            n += 1;
            if n > limit {
                return Err(Error::Bitstream("unary code out of range".into()));
            }
        }
        Ok(n)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }
}
