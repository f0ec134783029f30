//! Length-2^n GF(2) frames and the polar transform.

use crate::error::{Error, Result};

/// A length-`N = 2^n` vector over GF(2), the unit of all polar processing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitFrame {
    bits: Vec<u8>,
}

impl BitFrame {
    /// Wraps a bit vector, checking that the length is a power of two and
    /// every element is 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() || !bits.len().is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "frame length {} is not a positive power of two",
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidInput(format!(
                "non-binary symbol {} at index {}",
                bits[pos], pos
            )));
        }
        Ok(Self { bits })
    }

    /// All-zero frame of length `2^n`.
    pub fn zeros(n: u32) -> Self {
        Self { bits: vec![0u8; 1usize << n] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// log2 of the frame length.
    pub fn log_len(&self) -> u32 {
        self.bits.len().trailing_zeros()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.bits
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.bits
    }

    /// Hamming distance to another frame, normalized by length.
    pub fn normalized_distance(&self, other: &BitFrame) -> f64 {
        assert_eq!(self.len(), other.len());
        let d: usize = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count();
        d as f64 / self.len() as f64
    }
}

impl std::ops::Index<usize> for BitFrame {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

/// Applies the in-place butterfly for multiplication by the n-fold Kronecker
/// power of [[1,0],[1,1]] (row-vector convention). O(N log N).
pub fn polar_transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut step = 1;
    while step < n {
        let mut i = 0;
        while i < n {
            for j in 0..step {
                bits[i + j] ^= bits[i + j + step];
            }
            i += 2 * step;
        }
        step *= 2;
    }
}

/// `x = u · G_N` over GF(2). The transform is an involution: applying it
/// twice returns the input.
pub fn polar_transform(u: &BitFrame) -> BitFrame {
    let mut bits = u.as_slice().to_vec();
    polar_transform_in_place(&mut bits);
    BitFrame { bits }
}
