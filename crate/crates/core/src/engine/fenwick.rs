//! Fenwick (binary indexed) tree over researcher weights, supporting
//! append, point increment and weight-proportional prefix search.

use super::weight::Weight;
use super::EngineError;

#[inline(always)]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

#[derive(Debug, Clone)]
pub struct Fenwick<W: Weight> {
    // 1-based: tree[i - 1] holds the partial sum of node i.
    tree: Vec<W>,
}

impl<W: Weight> Default for Fenwick<W> {
    fn default() -> Self {
        Fenwick { tree: Vec::new() }
    }
}

impl<W: Weight> Fenwick<W> {
    pub fn with_capacity(cap: usize) -> Self {
        Fenwick {
            tree: Vec::with_capacity(cap),
        }
    }

    pub fn from_weights(weights: &[W]) -> Result<Self, EngineError> {
        let mut f = Fenwick::with_capacity(weights.len());
        for &w in weights {
            f.push(w)?;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Append a new position holding `value`.
    pub fn push(&mut self, value: W) -> Result<(), EngineError> {
        let i = self.tree.len() + 1;
        let mut node = value;
        let stop = i - lowbit(i);
        let mut j = i - 1;
        while j > stop {
            node = node.try_add(self.tree[j - 1])?;
            j -= lowbit(j);
        }
        self.tree.push(node);
        Ok(())
    }

    /// Add `delta` at 0-based position `pos`.
    pub fn add(&mut self, pos: usize, delta: W) -> Result<(), EngineError> {
        let mut i = pos + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] = self.tree[i - 1].try_add(delta)?;
            i += lowbit(i);
        }
        Ok(())
    }

    /// Sum of the first `len` positions.
    pub fn prefix(&self, len: usize) -> W {
        let mut acc = W::ZERO;
        let mut i = len;
        while i > 0 {
            // cannot overflow: partial of an already-checked total
            acc = acc.try_add(self.tree[i - 1]).expect("prefix below total");
            i -= lowbit(i);
        }
        acc
    }

    pub fn total(&self) -> W {
        self.prefix(self.tree.len())
    }

    /// Smallest 0-based position whose inclusive prefix sum exceeds `target`.
    /// `target` must lie in `[0, total)`.
    pub fn search(&self, target: W) -> usize {
        let n = self.tree.len();
        let mut pos = 0;
        let mut rem = target;
        let mut step = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= rem {
                pos = next;
                rem = rem.sub(self.tree[next - 1]);
            }
            step >>= 1;
        }
        // Floating rounding can push `pos` past the end.
        pos.min(n.saturating_sub(1))
    }
}
