//! Compressed sparse row storage and the dense/sparse [`SystemMatrix`] wrapper.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real sparse matrix in canonical CSR form: column indices sorted within each
/// row and duplicates summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triples. Duplicate positions are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, v) in &triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("sparse entry ({i}, {j})")));
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("non-empty after first entry") += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
            last = Some((i, j));
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sparse copy of a dense matrix keeping only nonzero entries.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t).expect("dense entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate the stored entries row by row.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t).expect("transposed indices are in range")
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::dims("sparse sum operands differ in shape"));
        }
        let t = self
            .triplets()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, beta * v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    /// Dense product `self * x`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.ncols, x.nrows(), "sparse product shape mismatch");
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            for i in 0..self.nrows {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * xc[self.col_idx[k]];
                }
                y[(i, c)] = acc;
            }
        }
        y
    }

    /// Dense product `selfᵀ * x`.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.nrows, x.nrows(), "sparse product shape mismatch");
        let mut y = DMatrix::zeros(self.ncols, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, c)];
                if xi == 0.0 {
                    continue;
                }
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    y[(self.col_idx[k], c)] += self.values[k] * xi;
                }
            }
        }
        y
    }

    /// Induced 1-norm (max column absolute sum).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        self.triplets().all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * scale)
    }

    /// Block-diagonal concatenation.
    pub fn block_diag(blocks: &[&SparseMatrix]) -> Self {
        let nrows = blocks.iter().map(|b| b.nrows).sum();
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut t = Vec::new();
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            t.extend(b.triplets().map(|(i, j, v)| (i + r0, j + c0, v)));
            r0 += b.nrows;
            c0 += b.ncols;
        }
        Self::from_triplets(nrows, ncols, t).expect("block indices are in range")
    }

    /// Place `blocks[i][j]` (if present) at the corresponding offsets.
    /// Row heights and column widths must be consistent across the grid.
    pub fn from_blocks(row_sizes: &[usize], col_sizes: &[usize], blocks: &[(usize, usize, &SparseMatrix)]) -> Result<Self> {
        let row_off: Vec<usize> = row_sizes.iter().scan(0, |s, &n| { let o = *s; *s += n; Some(o) }).collect();
        let col_off: Vec<usize> = col_sizes.iter().scan(0, |s, &n| { let o = *s; *s += n; Some(o) }).collect();
        let mut t = Vec::new();
        for &(bi, bj, m) in blocks {
            if m.nrows != row_sizes[bi] || m.ncols != col_sizes[bj] {
                return Err(Error::dims(format!("block ({bi}, {bj}) has the wrong shape")));
            }
            t.extend(m.triplets().map(|(i, j, v)| (i + row_off[bi], j + col_off[bj], v)));
        }
        Self::from_triplets(row_sizes.iter().sum(), col_sizes.iter().sum(), t)
    }
}

/// Reverse Cuthill–McKee ordering of a symmetric adjacency structure.
/// Returns `perm` with `perm[new] = old`.
pub(crate) fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // Start each component at an unvisited node of minimum degree, then move
        // once to the far end of its BFS tree (pseudo-peripheral heuristic).
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node exists");
        let start = farthest_node(adj, seed, &visited, &degree);

        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_unstable_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

fn farthest_node(adj: &[Vec<usize>], seed: usize, visited: &[bool], degree: &[usize]) -> usize {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[seed] = 0;
    queue.push_back(seed);
    let mut best = seed;
    while let Some(u) = queue.pop_front() {
        if dist[u] > dist[best] || (dist[u] == dist[best] && degree[u] < degree[best]) {
            best = u;
        }
        for &v in &adj[u] {
            if !visited[v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    best
}

/// System matrix held either densely or sparsely.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemMatrix {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

impl SystemMatrix {
    pub fn identity_sparse(n: usize) -> Self {
        SystemMatrix::Sparse(SparseMatrix::identity(n))
    }

    pub fn nrows(&self) -> usize {
        match self {
            SystemMatrix::Dense(m) => m.nrows(),
            SystemMatrix::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            SystemMatrix::Dense(m) => m.ncols(),
            SystemMatrix::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, SystemMatrix::Dense(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SystemMatrix::Dense(m) => m.clone(),
            SystemMatrix::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            SystemMatrix::Dense(m) => SparseMatrix::from_dense(m),
            SystemMatrix::Sparse(m) => m.clone(),
        }
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SystemMatrix::Dense(m) => m * x,
            SystemMatrix::Sparse(m) => m.mul_dense(x),
        }
    }

    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SystemMatrix::Dense(m) => m.tr_mul(x),
            SystemMatrix::Sparse(m) => m.tr_mul_dense(x),
        }
    }

    pub fn transpose(&self) -> Self {
        match self {
            SystemMatrix::Dense(m) => SystemMatrix::Dense(m.transpose()),
            SystemMatrix::Sparse(m) => SystemMatrix::Sparse(m.transpose()),
        }
    }

    pub fn norm1(&self) -> f64 {
        match self {
            SystemMatrix::Dense(m) => m
                .column_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            SystemMatrix::Sparse(m) => m.norm1(),
        }
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        match self {
            SystemMatrix::Dense(m) => m.norm(),
            SystemMatrix::Sparse(m) => m.triplets().map(|(_, _, v)| v * v).sum::<f64>().sqrt(),
        }
    }

    /// Nonzero entries, row-major for sparse, column-major for dense.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match self {
            SystemMatrix::Dense(m) => {
                let mut t = Vec::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        let v = m[(i, j)];
                        if v != 0.0 {
                            t.push((i, j, v));
                        }
                    }
                }
                t
            }
            SystemMatrix::Sparse(m) => m.triplets().collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SystemMatrix::Dense(m) => m.iter().all(|v| v.is_finite()),
            SystemMatrix::Sparse(m) => m.values.iter().all(|v| v.is_finite()),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        match self {
            SystemMatrix::Dense(m) => {
                let scale = m.amax().max(f64::MIN_POSITIVE);
                m.is_square() && (m - m.transpose()).amax() <= tol * scale
            }
            SystemMatrix::Sparse(m) => m.is_symmetric(tol),
        }
    }

    /// Block-diagonal concatenation; dense only when every block is dense.
    pub fn block_diag(blocks: &[&SystemMatrix]) -> Self {
        if blocks.iter().all(|b| b.is_dense()) {
            let n: usize = blocks.iter().map(|b| b.nrows()).sum();
            let m: usize = blocks.iter().map(|b| b.ncols()).sum();
            let mut out = DMatrix::zeros(n, m);
            let (mut r, mut c) = (0, 0);
            for b in blocks {
                let d = b.to_dense();
                out.view_mut((r, c), (d.nrows(), d.ncols())).copy_from(&d);
                r += d.nrows();
                c += d.ncols();
            }
            SystemMatrix::Dense(out)
        } else {
            let sparse: Vec<SparseMatrix> = blocks.iter().map(|b| b.to_sparse()).collect();
            let refs: Vec<&SparseMatrix> = sparse.iter().collect();
            SystemMatrix::Sparse(SparseMatrix::block_diag(&refs))
        }
    }
}

impl From<DMatrix<f64>> for SystemMatrix {
    fn from(m: DMatrix<f64>) -> Self {
        SystemMatrix::Dense(m)
    }
}

impl From<SparseMatrix> for SystemMatrix {
    fn from(m: SparseMatrix) -> Self {
        SystemMatrix::Sparse(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -2.0, 3.0, 0.0, 4.0]);
        let s = SparseMatrix::from_dense(&d);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mul_dense(&x), &d * &x);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, -1.0, 2.0]);
        assert_eq!(s.tr_mul_dense(&y), d.tr_mul(&y));
        assert_eq!(s.transpose().to_dense(), d.transpose());
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_path() {
        // Path graph 0-5-1-4-2-3 has bandwidth 5 in natural order.
        let edges = [(0, 5), (5, 1), (1, 4), (4, 2), (2, 3)];
        let mut adj = vec![Vec::new(); 6];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = [0; 6];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let bw = edges.iter().map(|&(a, b)| inv[a].abs_diff(inv[b])).max().unwrap();
        assert_eq!(bw, 1);
    }
}
