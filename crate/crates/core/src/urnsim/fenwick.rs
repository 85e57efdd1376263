//! Binary indexed tree over nonnegative `f64` weights that can grow at the end.

#[derive(Debug, Clone, Default)]
pub struct Fenwick {
    tree: Vec<f64>,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl Fenwick {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Fenwick {
            tree: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Sum of the first `n` weights.
    pub fn prefix_sum(&self, mut n: usize) -> f64 {
        let mut s = 0.0;
        while n > 0 {
            s += self.tree[n - 1];
            n -= lowbit(n);
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix_sum(self.len())
    }

    /// Appends a weight in O(log n).
    pub fn push(&mut self, w: f64) {
        let i = self.tree.len() + 1;
        let covered = self.prefix_sum(i - 1) - self.prefix_sum(i - lowbit(i));
        self.tree.push(w + covered);
    }

    pub fn add(&mut self, index: usize, delta: f64) {
        let mut i = index + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += lowbit(i);
        }
    }

    /// Index `i` with `prefix_sum(i) <= u < prefix_sum(i + 1)`, clamped to the last slot.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.tree.len();
        debug_assert!(n > 0);
        let mut pos = 0;
        let mut step = if n == 0 {
            0
        } else {
            1usize << (usize::BITS - 1 - n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= u {
                u -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums_match_naive() {
        let weights: Vec<f64> = (0..37).map(|i| (i % 5) as f64 + 0.5).collect();
        let mut f = Fenwick::new();
        for &w in &weights {
            f.push(w);
        }
        f.add(3, 2.0);
        let mut naive = weights.clone();
        naive[3] += 2.0;
        for n in 0..=naive.len() {
            let want: f64 = naive[..n].iter().sum();
            assert!((f.prefix_sum(n) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn find_locates_bucket() {
        let mut f = Fenwick::new();
        for w in [1.0, 0.0, 2.0, 3.0] {
            f.push(w);
        }
        assert_eq!(f.find(0.0), 0);
        assert_eq!(f.find(0.999), 0);
        assert_eq!(f.find(1.0), 2);
        assert_eq!(f.find(2.999), 2);
        assert_eq!(f.find(3.0), 3);
        assert_eq!(f.find(5.999), 3);
        assert_eq!(f.find(100.0), 3);
    }
}
