//! Binary sum-tree over nonnegative weights.
//!
//! Flat layout: `cells[1]` is the root, the children of cell `c` are `2c` and
//! `2c + 1`, and leaf `i` lives at `capacity + i`. Internal cells are always
//! recomputed as `left + right` (never patched by deltas), so parents equal
//! the sum of their children exactly after every operation.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SumTree {
    capacity: usize,
    cells: Vec<f64>,
    len: usize,
}

fn check_weight(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("weight {x} is negative or non-finite")))
    }
}

impl SumTree {
    /// O(n) bottom-up construction; the leaf count is padded to a power of two.
    pub fn new(weights: &[f64]) -> Result<Self> {
        for &w in weights {
            check_weight(w)?;
        }
        let capacity = weights.len().next_power_of_two().max(2);
        let mut t = SumTree {
            capacity,
            cells: vec![0.0; 2 * capacity],
            len: weights.len(),
        };
        t.cells[capacity..capacity + weights.len()].copy_from_slice(weights);
        t.rebuild_internal();
        Ok(t)
    }

    /// All-zero tree with `len` leaves.
    pub fn zeros(len: usize) -> Self {
        let capacity = len.next_power_of_two().max(2);
        SumTree {
            capacity,
            cells: vec![0.0; 2 * capacity],
            len,
        }
    }

    fn rebuild_internal(&mut self) {
        for c in (1..self.capacity).rev() {
            self.cells[c] = self.cells[2 * c] + self.cells[2 * c + 1];
        }
    }

    /// Overwrites every leaf and rebuilds in O(n). Values are trusted to be
    /// valid weights (checked in debug builds).
    pub(crate) fn refill(&mut self, weights: impl IntoIterator<Item = f64>) {
        let mut k = 0;
        for w in weights {
            debug_assert!(w.is_finite() && w >= 0.0);
            self.cells[self.capacity + k] = w;
            k += 1;
        }
        debug_assert_eq!(k, self.len);
        self.rebuild_internal();
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.cells[1]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.cells[self.capacity + i]
    }

    /// Raw cell array (index 0 unused).
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// O(log n) leaf replacement.
    pub fn replace(&mut self, i: usize, x: f64) -> Result<()> {
        if i >= self.len {
            return Err(Error::InvalidInput(format!(
                "index {i} out of range for {} leaves",
                self.len
            )));
        }
        check_weight(x)?;
        self.set(i, x);
        Ok(())
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, x: f64) {
        debug_assert!(i < self.len && x.is_finite() && x >= 0.0);
        let mut c = self.capacity + i;
        self.cells[c] = x;
        while c > 1 {
            c >>= 1;
            self.cells[c] = self.cells[2 * c] + self.cells[2 * c + 1];
        }
    }

    /// Draws leaf `i` with probability `w_i / Σ w`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let r = rng.random::<f64>() * total;
        Ok(self.descend(r))
    }

    /// Descends with target mass `r ∈ [0, total]`: left when `r ≤ left`,
    /// otherwise subtract and go right.
    pub fn descend(&self, mut r: f64) -> usize {
        let mut c = 1;
        while c < self.capacity {
            let left = self.cells[2 * c];
            if r <= left && left > 0.0 {
                c *= 2;
            } else {
                r -= left;
                c = 2 * c + 1;
            }
        }
        let i = c - self.capacity;
        if self.cells[c] > 0.0 && i < self.len {
            return i;
        }
        // rounding pushed us onto an empty leaf
        (0..self.len.min(i + 1))
            .rev()
            .find(|&k| self.get(k) > 0.0)
            .or_else(|| (i..self.len).find(|&k| self.get(k) > 0.0))
            .expect("descend on a tree with positive total")
    }

    /// Checks every internal cell against the sum of its children.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        (1..self.capacity).all(|c| {
            let s = self.cells[2 * c] + self.cells[2 * c + 1];
            (self.cells[c] - s).abs() <= rel_tol * s.abs().max(f64::MIN_POSITIVE)
        }) && self.cells[self.capacity + self.len..].iter().all(|&x| x == 0.0)
    }
}
