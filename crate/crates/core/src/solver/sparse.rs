//! Symmetric envelope (skyline) storage, reverse Cuthill-McKee ordering and
//! Cholesky factorization.

use std::collections::VecDeque;

/// Reverse Cuthill-McKee permutation of an undirected graph on `n` nodes.
///
/// Returns `order` where `order[new] = old`. Ties are broken by degree then by
/// index, so the result is deterministic.
pub fn reverse_cuthill_mckee(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let node = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[node].iter().copied().filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                order.push(j);
            }
        }
    }
    order.reverse();
    order
}

/// Level structure of a breadth-first search: (eccentricity, last level).
fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut reached = vec![start];
    while let Some(node) = queue.pop_front() {
        for &j in &adj[node] {
            if dist[j] == usize::MAX {
                dist[j] = dist[node] + 1;
                queue.push_back(j);
                reached.push(j);
            }
        }
    }
    let ecc = reached.iter().map(|&i| dist[i]).max().unwrap_or(0);
    let last = reached.into_iter().filter(|&i| dist[i] == ecc).collect();
    (ecc, last)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut node = seed;
    let (mut ecc, mut last) = bfs_levels(node, adj);
    loop {
        let candidate = *last.iter().min_by_key(|&&i| (degree[i], i)).unwrap();
        let (e, l) = bfs_levels(candidate, adj);
        if e <= ecc {
            return node;
        }
        node = candidate;
        ecc = e;
        last = l;
    }
}

/// Lower triangle of a symmetric matrix stored row by row from the first
/// structurally nonzero column to the diagonal.
#[derive(Debug, Clone)]
pub struct Skyline {
    first: Vec<usize>,
    ptr: Vec<usize>,
    pub values: Vec<f64>,
}

/// Cholesky failed at this (permuted) row: the matrix is not positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite(pub usize);

impl Skyline {
    /// Envelope covering the given lower or upper entries plus the diagonal.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j) in entries {
            let (r, c) = (i.max(j), i.min(j));
            first[r] = first[r].min(c);
        }
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for r in 0..n {
            ptr.push(ptr[r] + r - first[r] + 1);
        }
        let values = vec![0.0; ptr[n]];
        Self { first, ptr, values }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Storage offset of entry `(i, j)`; panics when outside the envelope.
    pub fn position(&self, i: usize, j: usize) -> usize {
        let (r, c) = (i.max(j), i.min(j));
        assert!(c >= self.first[r], "entry ({r}, {c}) outside envelope");
        self.ptr[r] + c - self.first[r]
    }

    pub fn diagonal_position(&self, i: usize) -> usize {
        self.ptr[i + 1] - 1
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.values[self.ptr[r]..self.ptr[r + 1]]
    }

    /// `y = A x` using both triangles.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for r in 0..self.n() {
            let f = self.first[r];
            let row = self.row(r);
            let (off, diag) = row.split_at(row.len() - 1);
            let mut acc = diag[0] * x[r];
            for (k, &a) in off.iter().enumerate() {
                acc += a * x[f + k];
                y[f + k] += a * x[r];
            }
            y[r] += acc;
        }
    }

    /// In-place factorization `A = L Lᵀ`.
    pub fn factor(&mut self) -> Result<(), NotPositiveDefinite> {
        let n = self.n();
        for i in 0..n {
            let fi = self.first[i];
            let pi = self.ptr[i];
            for j in fi..i {
                let fj = self.first[j];
                let pj = self.ptr[j];
                let k0 = fi.max(fj);
                let (li, lj) = (
                    &self.values[pi + k0 - fi..pi + j - fi],
                    &self.values[pj + k0 - fj..pj + j - fj],
                );
                let dot: f64 = li.iter().zip(lj).map(|(a, b)| a * b).sum();
                let djj = self.values[pj + j - fj];
                self.values[pi + j - fi] = (self.values[pi + j - fi] - dot) / djj;
            }
            let row = &self.values[pi..pi + i - fi];
            let sq: f64 = row.iter().map(|a| a * a).sum();
            let a_ii = self.values[pi + i - fi];
            let d = a_ii - sq;
            if !(d > 1e-13 * a_ii.abs()) || !d.is_finite() {
                return Err(NotPositiveDefinite(i));
            }
            self.values[pi + i - fi] = d.sqrt();
        }
        Ok(())
    }

    /// Solves `L Lᵀ x = b` in place after [`Skyline::factor`].
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let f = self.first[i];
            let row = self.row(i);
            let dot: f64 = row[..row.len() - 1].iter().zip(&b[f..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - dot) / row[row.len() - 1];
        }
        for i in (0..n).rev() {
            let f = self.first[i];
            let row = self.row(i);
            b[i] /= row[row.len() - 1];
            let xi = b[i];
            for (k, &a) in row[..row.len() - 1].iter().enumerate() {
                b[f + k] -= a * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_to_skyline(a: &DMatrix<f64>) -> Skyline {
        let n = a.nrows();
        let entries = (0..n)
            .flat_map(|i| (0..=i).map(move |j| (i, j)))
            .filter(|&(i, j)| a[(i, j)] != 0.0);
        let mut s = Skyline::new(n, entries);
        for i in 0..n {
            for j in 0..=i {
                if a[(i, j)] != 0.0 {
                    let p = s.position(i, j);
                    s.values[p] = a[(i, j)];
                }
            }
        }
        s
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_path() {
        let perm = [5, 2, 8, 0, 7, 3, 9, 1, 6, 4];
        let edges: Vec<(usize, usize)> = (0..9).map(|i| (perm[i], perm[i + 1])).collect();
        let order = reverse_cuthill_mckee(10, &edges);
        let mut inv = [0; 10];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let bw = edges.iter().map(|&(a, b)| inv[a].abs_diff(inv[b])).max().unwrap();
        assert_eq!(bw, 1);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn rcm_handles_disconnected_and_isolated_nodes() {
        let order = reverse_cuthill_mckee(5, &[(0, 1), (3, 4)]);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut s = dense_to_skyline(&a);
        assert_eq!(s.factor(), Err(NotPositiveDefinite(1)));
    }

    proptest! {
        #[test]
        fn solves_random_banded_spd_systems(
            n in 1usize..25,
            seed in proptest::collection::vec(-1.0f64..1.0, 25 * 25),
            rhs in proptest::collection::vec(-1.0f64..1.0, 25),
            band in 0usize..6,
        ) {
            let m = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) <= band { seed[i * 25 + j] } else { 0.0 });
            let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
            let b = DVector::from_column_slice(&rhs[..n]);
            let mut s = dense_to_skyline(&a);
            let mut y = vec![0.0; n];
            s.mul(b.as_slice(), &mut y);
            let ab = &a * &b;
            for i in 0..n {
                prop_assert!((y[i] - ab[i]).abs() < 1e-12);
            }
            s.factor().unwrap();
            let mut x = b.as_slice().to_vec();
            s.solve(&mut x);
            let resid = &a * DVector::from_vec(x) - b;
            prop_assert!(resid.amax() < 1e-9);
        }
    }
}
