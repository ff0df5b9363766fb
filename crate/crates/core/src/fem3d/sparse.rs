use rayon::prelude::*;

/// Compressed sparse row matrix with a fixed pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Pattern covering every pair of dofs sharing an element; entries equal
    /// to `usize::MAX` are skipped.
    pub fn from_element_dofs<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in elements {
            for &r in dofs.iter().filter(|&&d| d != usize::MAX) {
                rows[r].extend(dofs.iter().copied().filter(|&d| d != usize::MAX));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(&r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self { n, row_ptr, col_idx, values }
    }

    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].binary_search(&c).ok().map(|p| lo + p)
    }

    /// Adds `m[(a, b)]` at `(dofs[a], dofs[b])` for every pair of free dofs.
    pub fn add_element<const D: usize>(&mut self, dofs: &[usize; D], m: &nalgebra::SMatrix<f64, D, D>) {
        for (a, &r) in dofs.iter().enumerate() {
            if r == usize::MAX {
                continue;
            }
            for (b, &c) in dofs.iter().enumerate() {
                if c == usize::MAX {
                    continue;
                }
                let p = self.position(r, c).expect("entry inside the sparsity pattern");
                self.values[p] += m[(a, b)];
            }
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`; each row is summed serially, so the result does not depend
    /// on the thread count.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().with_min_len(4096).enumerate().for_each(|(r, yr)| {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for p in lo..hi {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *yr = s;
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Largest `|A - A^T|` entry.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                worst = worst.max((self.values[p] - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
