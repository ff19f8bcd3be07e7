/// Binary indexed tree over nonnegative `f64` weights: point update,
/// total and inverse-prefix search in `O(log n)`.
///
/// Accumulated rounding is bounded by rebuilding the tree from the stored
/// weights every `REBUILD_EVERY` updates.
#[derive(Clone, Debug)]
pub struct Fenwick {
    tree: Vec<f64>,
    weights: Vec<f64>,
    size: usize,
    updates: usize,
}

const REBUILD_EVERY: usize = 1 << 16;

impl Fenwick {
    pub fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        Fenwick {
            tree: vec![0.0; size + 1],
            weights: vec![0.0; n],
            size,
            updates: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.weights[i];
        self.weights[i] = w;
        let mut j = i + 1;
        while j <= self.size {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
        self.updates += 1;
        if self.updates >= REBUILD_EVERY {
            self.rebuild();
        }
    }

    pub fn rebuild(&mut self) {
        self.tree.iter_mut().for_each(|t| *t = 0.0);
        for (i, &w) in self.weights.iter().enumerate() {
            self.tree[i + 1] = w;
        }
        for j in 1..=self.size {
            let parent = j + (j & j.wrapping_neg());
            if parent <= self.size {
                self.tree[parent] += self.tree[j];
            }
        }
        self.updates = 0;
    }

    /// Sum of all weights (the root node of the power-of-two tree).
    pub fn total(&self) -> f64 {
        self.tree[self.size]
    }

    /// Sum recomputed from the stored weights.
    pub fn exact_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Index `i` with `prefix(i) ≤ u < prefix(i + 1)`, skipping zero
    /// weights that rounding might otherwise select. Requires a positive
    /// total.
    pub fn find(&self, u: f64) -> usize {
        let mut pos = 0;
        let mut rem = u;
        let mut step = self.size;
        while step > 0 {
            let next = pos + step;
            if next <= self.size && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        let n = self.weights.len();
        if pos < n && self.weights[pos] > 0.0 {
            return pos;
        }
        // rounding at the top end: take the nearest positive weight
        let start = pos.min(n - 1);
        (0..=start)
            .rev()
            .chain(start + 1..n)
            .find(|&i| self.weights[i] > 0.0)
            .expect("find() needs a positive total")
    }
}
