//! Multi-index pairs indexing the Taylor-Fourier expansion.
//!
//! Each coefficient of the expansion is indexed by a pair (alpha, gamma) of
//! 2-dimensional multi-indices: alpha counts powers of the two forward phases
//! and gamma powers of their conjugates. The pair carries a total order
//! |alpha| + |gamma| and, given the kernel wavenumbers (k1, k2), an integer
//! wavenumber (alpha1 - gamma1) k1 + (alpha2 - gamma2) k2.

use serde::{Deserialize, Serialize};

/// A pair (alpha, gamma) with alpha = (a1, a2), gamma = (g1, g2).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct MultiIndexPair {
    pub a1: u8,
    pub a2: u8,
    pub g1: u8,
    pub g2: u8,
}

impl MultiIndexPair {
    pub const fn new(a1: u8, a2: u8, g1: u8, g2: u8) -> Self {
        MultiIndexPair { a1, a2, g1, g2 }
    }

    /// Total order |alpha| + |gamma|.
    pub fn order(&self) -> usize {
        self.a1 as usize + self.a2 as usize + self.g1 as usize + self.g2 as usize
    }

    /// Wavenumber (a1 - g1) k1 + (a2 - g2) k2.
    pub fn wavenumber(&self, k1: u32, k2: u32) -> i64 {
        (self.a1 as i64 - self.g1 as i64) * k1 as i64
            + (self.a2 as i64 - self.g2 as i64) * k2 as i64
    }

    /// The index with alpha and gamma swapped; negates the wavenumber.
    pub fn swapped(&self) -> Self {
        MultiIndexPair {
            a1: self.g1,
            a2: self.g2,
            g1: self.a1,
            g2: self.a2,
        }
    }

    /// Canonical representative of the {index, swapped} orbit, plus whether
    /// a swap was applied. Coefficients are symmetric under the swap, so
    /// tables only store canonical keys.
    pub fn canonical(&self) -> (Self, bool) {
        let sw = self.swapped();
        if *self <= sw {
            (*self, false)
        } else {
            (sw, true)
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self <= self.swapped()
    }

    pub fn is_zero(&self) -> bool {
        self.a1 == 0 && self.a2 == 0 && self.g1 == 0 && self.g2 == 0
    }

    /// Componentwise sum.
    pub fn plus(&self, other: &Self) -> Self {
        MultiIndexPair {
            a1: self.a1 + other.a1,
            a2: self.a2 + other.a2,
            g1: self.g1 + other.g1,
            g2: self.g2 + other.g2,
        }
    }

    /// Componentwise difference, if nonnegative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        Some(MultiIndexPair {
            a1: self.a1.checked_sub(other.a1)?,
            a2: self.a2.checked_sub(other.a2)?,
            g1: self.g1.checked_sub(other.g1)?,
            g2: self.g2.checked_sub(other.g2)?,
        })
    }

    /// r^(alpha+gamma) for r = (r1, r2).
    pub fn amplitude_power(&self, r1: f64, r2: f64) -> f64 {
        r1.powi(self.a1 as i32 + self.g1 as i32) * r2.powi(self.a2 as i32 + self.g2 as i32)
    }

    /// Total phase (alpha - gamma) . (k1 theta1, k2 theta2).
    pub fn phase(&self, k1: u32, k2: u32, theta1: f64, theta2: f64) -> f64 {
        (self.a1 as f64 - self.g1 as f64) * k1 as f64 * theta1
            + (self.a2 as f64 - self.g2 as f64) * k2 as f64 * theta2
    }
}

/// All multi-index pairs of the given total order, in lexicographic order.
pub fn indices_of_order(order: usize) -> Vec<MultiIndexPair> {
    let mut out = Vec::new();
    let n = order as u8;
    for a1 in 0..=n {
        for a2 in 0..=(n - a1) {
            for g1 in 0..=(n - a1 - a2) {
                let g2 = n - a1 - a2 - g1;
                out.push(MultiIndexPair::new(a1, a2, g1, g2));
            }
        }
    }
    out
}

/// The resonance index ((0, k1), (k2-1, 0)); it has order k1 + k2 - 1 and
/// wavenumber k1.
pub fn resonance_index(k1: u32, k2: u32) -> MultiIndexPair {
    MultiIndexPair::new(0, k1 as u8, (k2 - 1) as u8, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_index_order_and_wavenumber() {
        // forced by the definitions: k = (0-2)*2 + (2-0)*3 = 2, order 4
        let idx = resonance_index(2, 3);
        assert_eq!(idx, MultiIndexPair::new(0, 2, 2, 0));
        assert_eq!(idx.order(), 4);
        assert_eq!(idx.wavenumber(2, 3), 2);
    }

    #[test]
    fn swap_negates_wavenumber() {
        let idx = MultiIndexPair::new(3, 1, 0, 2);
        assert_eq!(idx.wavenumber(2, 5), -idx.swapped().wavenumber(2, 5));
        assert_eq!(idx.order(), idx.swapped().order());
    }

    #[test]
    fn order_enumeration_counts() {
        // compositions of n into 4 nonnegative parts: C(n+3, 3)
        assert_eq!(indices_of_order(0).len(), 1);
        assert_eq!(indices_of_order(1).len(), 4);
        assert_eq!(indices_of_order(4).len(), 35);
        for idx in indices_of_order(3) {
            assert_eq!(idx.order(), 3);
        }
    }

    #[test]
    fn canonical_is_involution_fixed() {
        let idx = MultiIndexPair::new(0, 1, 2, 0);
        let (c, swapped) = idx.canonical();
        assert!(c.is_canonical());
        let (c2, _) = c.canonical();
        assert_eq!(c, c2);
        assert_eq!(swapped, c != idx);
    }
}
