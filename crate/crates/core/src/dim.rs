//! Ambient dimension and block-major coordinate indexing.
//!
//! The configuration space is `R^{8n}`. Coordinates are grouped into eight
//! blocks of size `n`; the flat index of the coordinate at `(block, offset)`
//! is `block * n + offset`. All structure matrices act block-wise under this
//! convention.

use std::fmt;

/// Number of coordinate blocks; fixed by the structure algebra.
pub const BLOCKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DimError {
    #[error("block size n must be >= 1")]
    ZeroBlockSize,
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch between operands: {left} vs {right}")]
    OperandMismatch { left: usize, right: usize },
}

/// Ambient dimension of the configuration space, `8n` for block size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimension {
    n: usize,
}

impl Dimension {
    pub fn new(n: usize) -> Result<Self, DimError> {
        if n == 0 {
            return Err(DimError::ZeroBlockSize);
        }
        Ok(Dimension { n })
    }

    /// Block size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total ambient dimension `8n`.
    pub fn total(&self) -> usize {
        BLOCKS * self.n
    }

    /// Flat index of `(block, offset)`.
    pub fn flat(&self, block: usize, offset: usize) -> usize {
        debug_assert!(block < BLOCKS && offset < self.n);
        block * self.n + offset
    }

    /// Checks that `len` equals the ambient dimension.
    pub fn check_len(&self, len: usize) -> Result<(), DimError> {
        if len != self.total() {
            return Err(DimError::LengthMismatch {
                expected: self.total(),
                actual: len,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R^{}", self.total())
    }
}

/// Position of a coordinate as `(block, offset)` within the block-major layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndex {
    pub block: usize,
    pub offset: usize,
}

impl BlockIndex {
    pub fn new(block: usize, offset: usize, dim: Dimension) -> Option<Self> {
        (block < BLOCKS && offset < dim.n()).then_some(BlockIndex { block, offset })
    }

    pub fn from_flat(flat: usize, dim: Dimension) -> Option<Self> {
        (flat < dim.total()).then(|| BlockIndex {
            block: flat / dim.n(),
            offset: flat % dim.n(),
        })
    }

    pub fn to_flat(self, dim: Dimension) -> usize {
        dim.flat(self.block, self.offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_eight_n() {
        for n in 1..=5 {
            let d = Dimension::new(n).unwrap();
            assert_eq!(d.total(), 8 * n);
        }
    }

    #[test]
    fn zero_block_size_rejected() {
        assert_eq!(Dimension::new(0), Err(DimError::ZeroBlockSize));
    }

    #[test]
    fn flat_block_round_trip_is_bijective() {
        let d = Dimension::new(3).unwrap();
        let mut seen = vec![false; d.total()];
        for block in 0..BLOCKS {
            for offset in 0..d.n() {
                let ix = BlockIndex::new(block, offset, d).unwrap();
                let flat = ix.to_flat(d);
                assert!(!seen[flat]);
                seen[flat] = true;
                assert_eq!(BlockIndex::from_flat(flat, d), Some(ix));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_range_indices_rejected() {
        let d = Dimension::new(2).unwrap();
        assert_eq!(BlockIndex::new(8, 0, d), None);
        assert_eq!(BlockIndex::new(0, 2, d), None);
        assert_eq!(BlockIndex::from_flat(16, d), None);
    }
}
