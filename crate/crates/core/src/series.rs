//! Order-graded coefficient tables and their convolution algebra.
//!
//! The expansion recursion works order by order: the order-o component of a
//! product of two series only involves factors of strictly smaller order, so
//! a graded table (one sorted slice of (index, value) entries per order) can
//! be extended incrementally. Convolving two graded tables at a target order
//! sums over ordered splits, which matches the ordered-tuple semantics of the
//! multilinear nonlinearities.

use std::collections::HashMap;

use crate::multi_index::MultiIndexPair;

/// One order slice: (index, value) pairs sorted by index.
pub type OrderSlice = Vec<(MultiIndexPair, f64)>;

/// A series coefficient table graded by total order.
#[derive(Debug, Clone, Default)]
pub struct Graded {
    orders: Vec<OrderSlice>,
}

impl Graded {
    pub fn new() -> Self {
        Graded { orders: Vec::new() }
    }

    /// Highest order stored so far (0 when empty).
    pub fn max_order(&self) -> usize {
        self.orders.len().saturating_sub(1)
    }

    pub fn order(&self, o: usize) -> &[(MultiIndexPair, f64)] {
        self.orders.get(o).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Installs the slice for order `o`; orders must be pushed in increasing
    /// sequence and entries must be sorted by index.
    pub fn set_order(&mut self, o: usize, mut entries: OrderSlice) {
        entries.retain(|&(_, v)| v != 0.0);
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        while self.orders.len() < o {
            self.orders.push(Vec::new());
        }
        if self.orders.len() == o {
            self.orders.push(entries);
        } else {
            self.orders[o] = entries;
        }
    }
}

/// The order-`o` component of the product x * y, summing over ordered splits
/// o1 + o2 = o with o1, o2 >= 1. Accumulation order is deterministic.
pub fn conv_order(x: &Graded, y: &Graded, o: usize) -> OrderSlice {
    let mut acc: HashMap<MultiIndexPair, f64> = HashMap::new();
    for o1 in 1..o {
        let o2 = o - o1;
        let xs = x.order(o1);
        let ys = y.order(o2);
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        for &(p, xv) in xs {
            for &(q, yv) in ys {
                *acc.entry(p.plus(&q)).or_insert(0.0) += xv * yv;
            }
        }
    }
    let mut out: OrderSlice = acc.into_iter().collect();
    out.sort_unstable_by_key(|&(idx, _)| idx);
    out
}

/// Merges several slices into one sorted slice, summing duplicate indices in
/// argument order.
pub fn merge_slices(slices: Vec<OrderSlice>) -> OrderSlice {
    let mut acc: HashMap<MultiIndexPair, f64> = HashMap::new();
    for slice in slices {
        for (idx, v) in slice {
            *acc.entry(idx).or_insert(0.0) += v;
        }
    }
    let mut out: OrderSlice = acc.into_iter().collect();
    out.sort_unstable_by_key(|&(idx, _)| idx);
    out
}

/// Computes the order-`o` component of the nonlinearity N(u) from the
/// completed lower orders of u. One evaluator instance is created per table
/// build; `push_order` is called with the finished coefficients of each order
/// before `order_component` is asked for any higher order.
pub trait SeriesEvaluator {
    fn push_order(&mut self, order: usize, coeffs: &OrderSlice);
    fn order_component(&mut self, order: usize) -> OrderSlice;
}
