//! Augmented order-statistic tree.
//!
//! An AVL tree over `(f64 key, index)` pairs where every node additionally
//! carries two user weights `a` and `b`, and every subtree maintains its
//! element count together with Σa and Σb. One root-to-leaf walk then answers
//! "count / Σa / Σb over all keys ≤ x" in O(log n), which is the only query
//! the donation procedures need: split the rejected set at a wealth
//! threshold and read off both halves' aggregates.
//!
//! Equal keys are disambiguated by the index, so duplicates are retained in
//! insertion order. Keys must not be NaN (enforced by the evidence types
//! upstream). Node visits are counted so tests can pin the logarithmic
//! behaviour of each operation.

use std::cell::Cell;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    idx: u32,
    left: u32,
    right: u32,
    height: i32,
    // Subtree aggregates (include this node).
    cnt: u32,
    sum_a: f64,
    sum_b: f64,
    // This node's own weights.
    a: f64,
    b: f64,
}

/// Aggregates over a key range.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Agg {
    pub count: usize,
    pub sum_a: f64,
    pub sum_b: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OrderStatTree {
    nodes: Vec<Node>,
    root: Option<u32>,
    visits: Cell<u64>,
}

impl OrderStatTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        match self.root {
            Some(r) => self.nodes[r as usize].cnt as usize,
            None => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Total node visits performed so far across inserts and queries.
    pub fn visits(&self) -> u64 {
        self.visits.get()
    }

    pub fn reset_visits(&self) {
        self.visits.set(0);
    }

    fn touch(&self, n: u32) -> &Node {
        self.visits.set(self.visits.get() + 1);
        &self.nodes[n as usize]
    }

    fn height(&self, n: u32) -> i32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].height
        }
    }

    fn agg_of(&self, n: u32) -> (u32, f64, f64) {
        if n == NIL {
            (0, 0.0, 0.0)
        } else {
            let nd = &self.nodes[n as usize];
            (nd.cnt, nd.sum_a, nd.sum_b)
        }
    }

    fn update(&mut self, n: u32) {
        let (left, right) = {
            let nd = &self.nodes[n as usize];
            (nd.left, nd.right)
        };
        let hl = self.height(left);
        let hr = self.height(right);
        let (cl, al, bl) = self.agg_of(left);
        let (cr, ar, br) = self.agg_of(right);
        let nd = &mut self.nodes[n as usize];
        nd.height = 1 + hl.max(hr);
        nd.cnt = 1 + cl + cr;
        nd.sum_a = nd.a + al + ar;
        nd.sum_b = nd.b + bl + br;
    }

    fn rotate_right(&mut self, y: u32) -> u32 {
        let x = self.nodes[y as usize].left;
        let t2 = self.nodes[x as usize].right;
        self.nodes[x as usize].right = y;
        self.nodes[y as usize].left = t2;
        self.update(y);
        self.update(x);
        x
    }

    fn rotate_left(&mut self, x: u32) -> u32 {
        let y = self.nodes[x as usize].right;
        let t2 = self.nodes[y as usize].left;
        self.nodes[y as usize].left = x;
        self.nodes[x as usize].right = t2;
        self.update(x);
        self.update(y);
        y
    }

    fn rebalance(&mut self, n: u32) -> u32 {
        self.update(n);
        let bal = self.height(self.nodes[n as usize].left)
            - self.height(self.nodes[n as usize].right);
        if bal > 1 {
            let l = self.nodes[n as usize].left;
            if self.height(self.nodes[l as usize].left)
                < self.height(self.nodes[l as usize].right)
            {
                let nl = self.rotate_left(l);
                self.nodes[n as usize].left = nl;
            }
            self.rotate_right(n)
        } else if bal < -1 {
            let r = self.nodes[n as usize].right;
            if self.height(self.nodes[r as usize].right)
                < self.height(self.nodes[r as usize].left)
            {
                let nr = self.rotate_right(r);
                self.nodes[n as usize].right = nr;
            }
            self.rotate_left(n)
        } else {
            n
        }
    }

    fn insert_at(&mut self, n: u32, new: u32) -> u32 {
        if n == NIL {
            return new;
        }
        self.touch(n);
        let goes_left = {
            let nd = &self.nodes[n as usize];
            let nw = &self.nodes[new as usize];
            debug_assert!(!nw.key.is_nan());
            nw.key < nd.key || (nw.key == nd.key && nw.idx < nd.idx)
        };
        if goes_left {
            let child = self.nodes[n as usize].left;
            let sub = self.insert_at(child, new);
            self.nodes[n as usize].left = sub;
        } else {
            let child = self.nodes[n as usize].right;
            let sub = self.insert_at(child, new);
            self.nodes[n as usize].right = sub;
        }
        self.rebalance(n)
    }

    /// Inserts a node keyed by `(key, idx)` with weights `a` and `b`.
    pub fn insert(&mut self, key: f64, idx: u32, a: f64, b: f64) {
        debug_assert!(!key.is_nan(), "tree keys must not be NaN");
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            key,
            idx,
            left: NIL,
            right: NIL,
            height: 1,
            cnt: 1,
            sum_a: a,
            sum_b: b,
            a,
            b,
        });
        self.visits.set(self.visits.get() + 1);
        let root = self.root.unwrap_or(NIL);
        let new_root = self.insert_at(root, id);
        self.root = Some(new_root);
    }

    /// Aggregates over all nodes with key ≤ `bound` (ties included, indices
    /// ignored). One root-to-leaf walk.
    pub fn prefix_leq(&self, bound: f64) -> Agg {
        self.prefix(bound, true)
    }

    /// Aggregates over all nodes with key < `bound` (strict).
    pub fn prefix_lt(&self, bound: f64) -> Agg {
        self.prefix(bound, false)
    }

    fn prefix(&self, bound: f64, inclusive: bool) -> Agg {
        let mut acc = Agg::default();
        let mut cur = match self.root {
            Some(r) => r,
            None => return acc,
        };
        loop {
            if cur == NIL {
                return acc;
            }
            let nd = self.touch(cur);
            let take = if inclusive {
                nd.key <= bound
            } else {
                nd.key < bound
            };
            if take {
                let (lc, la, lb) = self.agg_of(nd.left);
                acc.count += lc as usize + 1;
                acc.sum_a += la + nd.a;
                acc.sum_b += lb + nd.b;
                cur = nd.right;
            } else {
                cur = nd.left;
            }
        }
    }

    pub fn totals(&self) -> Agg {
        match self.root {
            Some(r) => {
                let (c, a, b) = self.agg_of(r);
                Agg {
                    count: c as usize,
                    sum_a: a,
                    sum_b: b,
                }
            }
            None => Agg::default(),
        }
    }

    /// Recomputes every subtree aggregate from scratch and checks the AVL
    /// balance and ordering invariants. Intended for tests and debug use.
    pub fn validate(&self) -> bool {
        fn walk(
            tree: &OrderStatTree,
            n: u32,
            lo: Option<(f64, u32)>,
            hi: Option<(f64, u32)>,
        ) -> Option<(i32, u32, f64, f64)> {
            if n == NIL {
                return Some((0, 0, 0.0, 0.0));
            }
            let nd = &tree.nodes[n as usize];
            let me = (nd.key, nd.idx);
            if let Some(l) = lo {
                if me <= l {
                    return None;
                }
            }
            if let Some(h) = hi {
                if me >= h {
                    return None;
                }
            }
            let (hl, cl, al, bl) = walk(tree, nd.left, lo, Some(me))?;
            let (hr, cr, ar, br) = walk(tree, nd.right, Some(me), hi)?;
            if (hl - hr).abs() > 1 {
                return None;
            }
            let h = 1 + hl.max(hr);
            let c = 1 + cl + cr;
            let a = nd.a + al + ar;
            let b = nd.b + bl + br;
            let ok = nd.height == h
                && nd.cnt == c
                && (nd.sum_a - a).abs() <= 1e-9 * (1.0 + a.abs())
                && (nd.sum_b - b).abs() <= 1e-9 * (1.0 + b.abs());
            if ok {
                Some((h, c, a, b))
            } else {
                None
            }
        }
        match self.root {
            None => true,
            Some(r) => walk(self, r, None, None).is_some(),
        }
    }
}
