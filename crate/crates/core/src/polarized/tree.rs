//! Weighted index tree: an AVL tree keyed by site index, each node carrying the
//! total weight of its subtree, so prefix-sum search and weight updates are
//! `O(log n)`.
//!
//! Subtree sums are always recomputed from the children on the way back up,
//! never patched with deltas, so rounding error does not accumulate over long
//! runs.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("tree is empty")]
    EmptyTree,
    #[error("key {0} not present")]
    KeyNotFound(usize),
    #[error("weight {0} must be finite and non-negative")]
    InvalidWeight(f64),
    #[error("search threshold {0} is not a number")]
    InvalidThreshold(f64),
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: usize,
    weight: f64,
    left: usize,
    right: usize,
    height: i32,
    sum: f64,
}

/// Ordered map from small integer keys to non-negative weights.
///
/// Keys index a dense lookup table, so they should be site indices rather than
/// arbitrary large integers.
#[derive(Debug, Clone, Default)]
pub struct WeightedIndexTree {
    nodes: Vec<Node>,
    free: Vec<usize>,
    root: usize,
    slot: Vec<usize>,
    len: usize,
}

impl WeightedIndexTree {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            slot: Vec::new(),
            len: 0,
        }
    }

    /// Balanced tree from `(key, weight)` pairs in `O(n log n)`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, TreeError> {
        let mut sorted: Vec<(usize, f64)> = pairs.into_iter().collect();
        sorted.sort_by_key(|p| p.0);
        sorted.dedup_by_key(|p| p.0);
        let mut t = Self::new();
        for &(_, w) in &sorted {
            check_weight(w)?;
        }
        t.nodes.reserve(sorted.len());
        t.root = t.build(&sorted);
        t.len = sorted.len();
        Ok(t)
    }

    fn build(&mut self, pairs: &[(usize, f64)]) -> usize {
        if pairs.is_empty() {
            return NIL;
        }
        let mid = pairs.len() / 2;
        let i = self.alloc(pairs[mid].0, pairs[mid].1);
        let l = self.build(&pairs[..mid]);
        let r = self.build(&pairs[mid + 1..]);
        self.nodes[i].left = l;
        self.nodes[i].right = r;
        self.pull(i);
        i
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total stored weight.
    pub fn sum(&self) -> f64 {
        self.s(self.root)
    }

    pub fn contains(&self, key: usize) -> bool {
        self.slot.get(key).is_some_and(|&s| s != NIL)
    }

    pub fn weight(&self, key: usize) -> Option<f64> {
        match self.slot.get(key) {
            Some(&s) if s != NIL => Some(self.nodes[s].weight),
            _ => None,
        }
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.free.clear();
        self.slot.iter_mut().for_each(|s| *s = NIL);
        self.root = NIL;
        self.len = 0;
    }

    /// Sets the weight of `key`, inserting it if absent.
    pub fn update(&mut self, key: usize, weight: f64) -> Result<(), TreeError> {
        check_weight(weight)?;
        if let Some(&s) = self.slot.get(key) {
            if s != NIL && self.nodes[s].weight == weight {
                return Ok(());
            }
        }
        self.root = self.insert_rec(self.root, key, weight);
        Ok(())
    }

    pub fn insert(&mut self, key: usize, weight: f64) -> Result<(), TreeError> {
        self.update(key, weight)
    }

    pub fn delete(&mut self, key: usize) -> Result<(), TreeError> {
        if !self.contains(key) {
            return Err(TreeError::KeyNotFound(key));
        }
        self.root = self.delete_rec(self.root, key);
        self.slot[key] = NIL;
        self.len -= 1;
        Ok(())
    }

    /// Key whose cumulative interval `[Σ_{j<i} w_j, Σ_{j≤i} w_j)` contains `ell`.
    ///
    /// With `ell ~ Uniform[0, sum)` this returns `i` with probability
    /// `w_i / sum`. A threshold exactly on a boundary returns the key that
    /// starts there; thresholds at or beyond the total return the last key.
    pub fn range_search(&self, ell: f64) -> Result<usize, TreeError> {
        if self.root == NIL {
            return Err(TreeError::EmptyTree);
        }
        if ell.is_nan() {
            return Err(TreeError::InvalidThreshold(ell));
        }
        let mut ell = ell.max(0.0);
        let mut v = self.root;
        loop {
            let node = &self.nodes[v];
            let left = self.s(node.left);
            if ell < left && node.left != NIL {
                v = node.left;
            } else if ell < left + node.weight || node.right == NIL {
                return Ok(node.key);
            } else {
                ell -= left + node.weight;
                v = node.right;
            }
        }
    }

    /// Smallest key `i` with `Σ_{j<i} w_j ≥ ell`, if any.
    pub fn prefix_lower_bound(&self, ell: f64) -> Option<usize> {
        let mut best = None;
        let mut v = self.root;
        let mut before = 0.0;
        while v != NIL {
            let node = &self.nodes[v];
            let prefix = before + self.s(node.left);
            if prefix >= ell {
                best = Some(node.key);
                v = node.left;
            } else {
                before = prefix + node.weight;
                v = node.right;
            }
        }
        best
    }

    /// Draws a key with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, TreeError> {
        let total = self.sum();
        if self.root == NIL || total <= 0.0 {
            return Err(TreeError::EmptyTree);
        }
        loop {
            let k = self.range_search(rng.random::<f64>() * total)?;
            if self.nodes[self.slot[k]].weight > 0.0 {
                return Ok(k);
            }
        }
    }

    /// In-order `(key, weight)` pairs.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack = Vec::new();
        let mut v = self.root;
        while v != NIL || !stack.is_empty() {
            while v != NIL {
                stack.push(v);
                v = self.nodes[v].left;
            }
            let u = stack.pop().expect("non-empty");
            out.push((self.nodes[u].key, self.nodes[u].weight));
            v = self.nodes[u].right;
        }
        out
    }

    /// Checks ordering, AVL balance, and every cached sum/height against a
    /// fresh recomputation. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut count = 0;
        self.check_rec(self.root, None, None, &mut count)?;
        if count != self.len {
            return Err(format!("len {} but {} reachable nodes", self.len, count));
        }
        Ok(())
    }

    fn check_rec(
        &self,
        v: usize,
        lo: Option<usize>,
        hi: Option<usize>,
        count: &mut usize,
    ) -> Result<(i32, f64), String> {
        if v == NIL {
            return Ok((0, 0.0));
        }
        *count += 1;
        let n = &self.nodes[v];
        if lo.is_some_and(|l| n.key <= l) || hi.is_some_and(|h| n.key >= h) {
            return Err(format!("key {} out of order", n.key));
        }
        if self.slot.get(n.key) != Some(&v) {
            return Err(format!("lookup slot for key {} is stale", n.key));
        }
        let (hl, sl) = self.check_rec(n.left, lo, Some(n.key), count)?;
        let (hr, sr) = self.check_rec(n.right, Some(n.key), hi, count)?;
        if (hl - hr).abs() > 1 {
            return Err(format!("unbalanced at key {}", n.key));
        }
        if n.height != 1 + hl.max(hr) {
            return Err(format!("stale height at key {}", n.key));
        }
        let total = sl + n.weight + sr;
        if (self.s(n.left) - sl).abs() > 1e-12 * sl.abs().max(1e-300)
            || (n.sum - total).abs() > 1e-12 * total.abs().max(1e-300)
        {
            return Err(format!("stale subtree sum at key {}", n.key));
        }
        Ok((n.height, total))
    }

    #[inline]
    fn s(&self, i: usize) -> f64 {
        if i == NIL {
            0.0
        } else {
            self.nodes[i].sum
        }
    }

    #[inline]
    fn h(&self, i: usize) -> i32 {
        if i == NIL {
            0
        } else {
            self.nodes[i].height
        }
    }

    fn alloc(&mut self, key: usize, weight: f64) -> usize {
        let node = Node {
            key,
            weight,
            left: NIL,
            right: NIL,
            height: 1,
            sum: weight,
        };
        let i = if let Some(i) = self.free.pop() {
            self.nodes[i] = node;
            i
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        };
        if self.slot.len() <= key {
            self.slot.resize(key + 1, NIL);
        }
        self.slot[key] = i;
        i
    }

    fn pull(&mut self, i: usize) {
        let (l, r) = (self.nodes[i].left, self.nodes[i].right);
        let height = 1 + self.h(l).max(self.h(r));
        let sum = self.s(l) + self.nodes[i].weight + self.s(r);
        let n = &mut self.nodes[i];
        n.height = height;
        n.sum = sum;
    }

    fn rotate_right(&mut self, y: usize) -> usize {
        let x = self.nodes[y].left;
        self.nodes[y].left = self.nodes[x].right;
        self.nodes[x].right = y;
        self.pull(y);
        self.pull(x);
        x
    }

    fn rotate_left(&mut self, x: usize) -> usize {
        let y = self.nodes[x].right;
        self.nodes[x].right = self.nodes[y].left;
        self.nodes[y].left = x;
        self.pull(x);
        self.pull(y);
        y
    }

    fn rebalance(&mut self, i: usize) -> usize {
        self.pull(i);
        let (l, r) = (self.nodes[i].left, self.nodes[i].right);
        let bf = self.h(l) - self.h(r);
        if bf > 1 {
            if self.h(self.nodes[l].left) < self.h(self.nodes[l].right) {
                let nl = self.rotate_left(l);
                self.nodes[i].left = nl;
            }
            return self.rotate_right(i);
        }
        if bf < -1 {
            if self.h(self.nodes[r].right) < self.h(self.nodes[r].left) {
                let nr = self.rotate_right(r);
                self.nodes[i].right = nr;
            }
            return self.rotate_left(i);
        }
        i
    }

    fn insert_rec(&mut self, i: usize, key: usize, weight: f64) -> usize {
        if i == NIL {
            self.len += 1;
            return self.alloc(key, weight);
        }
        let k = self.nodes[i].key;
        if key < k {
            let c = self.insert_rec(self.nodes[i].left, key, weight);
            self.nodes[i].left = c;
        } else if key > k {
            let c = self.insert_rec(self.nodes[i].right, key, weight);
            self.nodes[i].right = c;
        } else {
            self.nodes[i].weight = weight;
        }
        self.rebalance(i)
    }

    fn delete_rec(&mut self, i: usize, key: usize) -> usize {
        debug_assert!(i != NIL);
        let k = self.nodes[i].key;
        if key < k {
            let c = self.delete_rec(self.nodes[i].left, key);
            self.nodes[i].left = c;
        } else if key > k {
            let c = self.delete_rec(self.nodes[i].right, key);
            self.nodes[i].right = c;
        } else {
            let (l, r) = (self.nodes[i].left, self.nodes[i].right);
            self.free.push(i);
            if l == NIL {
                return r;
            }
            if r == NIL {
                return l;
            }
            let (nr, m) = self.remove_min(r);
            self.nodes[m].left = l;
            self.nodes[m].right = nr;
            return self.rebalance(m);
        }
        self.rebalance(i)
    }

    fn remove_min(&mut self, i: usize) -> (usize, usize) {
        let l = self.nodes[i].left;
        if l == NIL {
            return (self.nodes[i].right, i);
        }
        let (nl, m) = self.remove_min(l);
        self.nodes[i].left = nl;
        (self.rebalance(i), m)
    }
}

fn check_weight(w: f64) -> Result<(), TreeError> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(TreeError::InvalidWeight(w));
    }
    Ok(())
}
