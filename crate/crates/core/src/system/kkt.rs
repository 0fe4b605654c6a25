//! Sparse symmetric indefinite solver for the saddle-point systems.
//!
//! Up-looking LDL^T factorization on a reverse-Cuthill-McKee ordering, with
//! globally coupled columns (volume and centroid multipliers) pinned to the
//! end of the elimination order. No pivoting: degenerate pivots are bumped,
//! counted and reported, and iterative refinement against the unfactored
//! matrix drives the solve residual below the requested tolerance.

use crate::{Error, KernelHint, Result};
use alloc::vec;
use alloc::vec::Vec;

/// Symmetric matrix under assembly. Entries may be added in any order and
/// are accumulated; only the upper triangle is stored.
#[derive(Debug, Clone)]
pub struct SymmetricBuilder {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl SymmetricBuilder {
    pub fn new(n: usize) -> Self {
        let mut entries = Vec::new();
        // Structural diagonal, so zero multiplier diagonals exist.
        for k in 0..n {
            entries.push((k as u32, k as u32, 0.0));
        }
        SymmetricBuilder { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Accumulate `A[i, j] += v` (and symmetrically `A[j, i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((r as u32, c as u32, v));
    }

    /// Upper-triangular CSC with sorted, deduplicated columns.
    pub fn build(mut self) -> SparseSym {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.n + 1];
        let mut rows: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            let (r, c, mut v) = self.entries[i];
            let mut j = i + 1;
            while j < self.entries.len()
                && self.entries[j].0 == r
                && self.entries[j].1 == c
            {
                v += self.entries[j].2;
                j += 1;
            }
            rows.push(r);
            vals.push(v);
            col_ptr[c as usize + 1] += 1;
            i = j;
        }
        for k in 0..self.n {
            col_ptr[k + 1] += col_ptr[k];
        }
        SparseSym {
            n: self.n,
            col_ptr,
            rows,
            vals,
        }
    }
}

/// Upper-triangular CSC storage of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub rows: Vec<u32>,
    pub vals: Vec<f64>,
}

impl SparseSym {
    /// Symmetric matrix-vector product `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.rows[p] as usize;
                let v = self.vals[p];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest relative asymmetry; zero by construction here, but kept for
    /// assembly diagnostics on the full builder path.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }
}

/// Reverse Cuthill-McKee ordering over the nodes marked in `include`
/// (adjacency restricted to included nodes). Returns `order` with
/// `order[new] = old`, length = number of included nodes.
pub fn rcm_order(a: &SparseSym, include: &[bool]) -> Vec<usize> {
    let n = a.n;

    // Adjacency (both directions), restricted to included nodes.
    let mut degree = vec![0usize; n];
    for c in 0..n {
        for p in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.rows[p] as usize;
            if r != c && include[r] && include[c] {
                degree[r] += 1;
                degree[c] += 1;
            }
        }
    }
    let mut adj_ptr = vec![0usize; n + 1];
    for k in 0..n {
        adj_ptr[k + 1] = adj_ptr[k] + degree[k];
    }
    let mut adj = vec![0u32; adj_ptr[n]];
    let mut fill = adj_ptr.clone();
    for c in 0..n {
        for p in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.rows[p] as usize;
            if r != c && include[r] && include[c] {
                adj[fill[r]] = c as u32;
                fill[r] += 1;
                adj[fill[c]] = r as u32;
                fill[c] += 1;
            }
        }
    }

    let mut order: Vec<usize> = Vec::new();
    let mut visited: Vec<bool> = include.iter().map(|&inc| !inc).collect();

    let bfs = |start: usize, visited: &mut Vec<bool>, order: &mut Vec<usize>| -> usize {
        let first = order.len();
        order.push(start);
        visited[start] = true;
        let mut head = first;
        let mut last = start;
        while head < order.len() {
            let u = order[head];
            head += 1;
            last = u;
            let mut nbrs: Vec<u32> = adj[adj_ptr[u]..adj_ptr[u + 1]]
                .iter()
                .copied()
                .filter(|&v| !visited[v as usize])
                .collect();
            nbrs.sort_unstable_by_key(|&v| (degree[v as usize], v));
            for v in nbrs {
                if !visited[v as usize] {
                    visited[v as usize] = true;
                    order.push(v as usize);
                }
            }
        }
        last
    };

    loop {
        // Lowest-degree unvisited node as a component seed.
        let seed = (0..n)
            .filter(|&k| !visited[k])
            .min_by_key(|&k| (degree[k], k));
        let Some(seed) = seed else { break };
        // One probe sweep to find a pseudo-peripheral start, then the real one.
        let mut probe_visited = visited.clone();
        let mut probe_order = Vec::new();
        let far = bfs(seed, &mut probe_visited, &mut probe_order);
        bfs(far, &mut visited, &mut order);
    }

    order.reverse();
    order
}

/// Elimination order for a saddle-point system: RCM over the first
/// `n_primal` nodes, each remaining sparse constraint row interleaved right
/// after its last adjacent primal node (a zero-diagonal row eliminated
/// before its primal support would break the factorization), and the listed
/// globally coupled rows last.
pub fn saddle_order(a: &SparseSym, n_primal: usize, dense_cols: &[usize]) -> Vec<usize> {
    let n = a.n;
    let mut include = vec![false; n];
    for k in 0..n_primal.min(n) {
        include[k] = true;
    }
    let primal_order = rcm_order(a, &include);
    let mut inv = vec![usize::MAX; n];
    for (new, &old) in primal_order.iter().enumerate() {
        inv[old] = new;
    }

    let mut is_dense = vec![false; n];
    for &d in dense_cols {
        is_dense[d] = true;
    }

    // For each sparse constraint row: the latest primal position it touches.
    let mut key = vec![0usize; n];
    for c in 0..n {
        for p in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.rows[p] as usize;
            if r == c {
                continue;
            }
            let (con, primal) = if r >= n_primal && c < n_primal {
                (r, c)
            } else if c >= n_primal && r < n_primal {
                (c, r)
            } else {
                continue;
            };
            if !is_dense[con] && inv[primal] != usize::MAX {
                key[con] = key[con].max(inv[primal] + 1);
            }
        }
    }

    let mut constraints: Vec<usize> = (n_primal..n).filter(|&k| !is_dense[k]).collect();
    constraints.sort_unstable_by_key(|&k| (key[k], k));

    let mut order = Vec::with_capacity(n);
    let mut ci = 0;
    for (pos, &p) in primal_order.iter().enumerate() {
        order.push(p);
        while ci < constraints.len() && key[constraints[ci]] <= pos + 1 {
            order.push(constraints[ci]);
            ci += 1;
        }
    }
    // Constraint rows with no primal support (structurally singular) and any
    // primal stragglers keep their places before the dense tail.
    while ci < constraints.len() {
        order.push(constraints[ci]);
        ci += 1;
    }
    order.extend_from_slice(dense_cols);
    order
}

/// LDL^T factorization result and diagnostics.
pub struct LdlFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
    /// `order[new] = old`.
    order: Vec<usize>,
    /// Count of pivots at or below the breakdown threshold (bumped to
    /// proceed; a nonzero count means the matrix is numerically singular).
    pub degenerate_pivots: usize,
    /// (positive, negative) pivot counts.
    pub inertia: (usize, usize),
}

/// Factor `a` with the elimination order `order` (`order[new] = old`).
///
/// `pivot_floor` is the absolute pivot magnitude below which a pivot counts
/// as degenerate; degenerate pivots are replaced by `+-pivot_floor` (keeping
/// their sign, defaulting to positive) so the factorization can finish and
/// report diagnostics.
pub fn ldl_factor(a: &SparseSym, order: Vec<usize>, pivot_floor: f64) -> LdlFactor {
    let n = a.n;
    let mut inv_order = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        inv_order[old] = new;
    }
    let inv = inv_order;

    // Permuted upper CSC: B = P A P^T.
    let mut perm_entries: Vec<(u32, u32, f64)> = Vec::with_capacity(a.nnz());
    for c in 0..n {
        for p in a.col_ptr[c]..a.col_ptr[c + 1] {
            let r = a.rows[p] as usize;
            let (nr, nc) = {
                let (ir, ic) = (inv[r], inv[c]);
                if ir <= ic {
                    (ir, ic)
                } else {
                    (ic, ir)
                }
            };
            perm_entries.push((nr as u32, nc as u32, a.vals[p]));
        }
    }
    perm_entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
    let mut bp = vec![0usize; n + 1];
    let mut bi: Vec<u32> = Vec::with_capacity(perm_entries.len());
    let mut bx: Vec<f64> = Vec::with_capacity(perm_entries.len());
    let mut i = 0;
    while i < perm_entries.len() {
        let (r, c, mut v) = perm_entries[i];
        let mut j = i + 1;
        while j < perm_entries.len() && perm_entries[j].0 == r && perm_entries[j].1 == c {
            v += perm_entries[j].2;
            j += 1;
        }
        bi.push(r);
        bx.push(v);
        bp[c as usize + 1] += 1;
        i = j;
    }
    for k in 0..n {
        bp[k + 1] += bp[k];
    }

    // Symbolic: elimination tree and column counts of L.
    let mut parent = vec![usize::MAX; n];
    let mut flag = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for p in bp[k]..bp[k + 1] {
            let mut i = bi[p] as usize;
            while flag[i] != k {
                if parent[i] == usize::MAX {
                    parent[i] = k;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }
    let mut lp = vec![0usize; n + 1];
    for k in 0..n {
        lp[k + 1] = lp[k] + lnz[k];
    }
    let total = lp[n];
    let mut li = vec![0u32; total];
    let mut lx = vec![0.0f64; total];
    let mut d = vec![0.0f64; n];
    let mut next_in_col = lp.clone();

    // Numeric: compute row k of L via a sparse solve along the etree.
    let mut y = vec![0.0f64; n];
    let mut pattern: Vec<usize> = Vec::with_capacity(64);
    let mut flag2 = vec![usize::MAX; n];
    let mut degenerate = 0usize;
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for k in 0..n {
        pattern.clear();
        flag2[k] = k;
        let mut dk = 0.0;
        for p in bp[k]..bp[k + 1] {
            let i = bi[p] as usize;
            if i == k {
                dk += bx[p];
                continue;
            }
            y[i] += bx[p];
            let mut node = i;
            while flag2[node] != k {
                flag2[node] = k;
                pattern.push(node);
                node = parent[node];
                if node == usize::MAX || node >= k {
                    break;
                }
            }
        }
        // Ascending index is a topological order of the etree.
        pattern.sort_unstable();
        for &c in &pattern {
            // Structural entries are written even for exact-zero values so
            // the numeric pattern matches the symbolic counts.
            let yc = y[c];
            y[c] = 0.0;
            for q in lp[c]..next_in_col[c] {
                y[li[q] as usize] -= lx[q] * yc;
            }
            let lkc = yc / d[c];
            dk -= lkc * yc;
            li[next_in_col[c]] = k as u32;
            lx[next_in_col[c]] = lkc;
            next_in_col[c] += 1;
        }
        if dk.abs() <= pivot_floor {
            degenerate += 1;
            dk = if dk < 0.0 { -pivot_floor } else { pivot_floor };
        }
        if dk > 0.0 {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
        d[k] = dk;
    }

    LdlFactor {
        n,
        lp,
        li,
        lx,
        d,
        order,
        degenerate_pivots: degenerate,
        inertia: (n_pos, n_neg),
    }
}

impl LdlFactor {
    /// Solve `A x = b` with the factored, permuted system.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z: Vec<f64> = (0..n).map(|k| b[self.order[k]]).collect();
        // L z' = z (unit lower triangular, stored by columns).
        for c in 0..n {
            let zc = z[c];
            if zc != 0.0 {
                for p in self.lp[c]..self.lp[c + 1] {
                    z[self.li[p] as usize] -= self.lx[p] * zc;
                }
            }
        }
        for k in 0..n {
            z[k] /= self.d[k];
        }
        // L^T x = z.
        for c in (0..n).rev() {
            let mut acc = z[c];
            for p in self.lp[c]..self.lp[c + 1] {
                acc -= self.lx[p] * z[self.li[p] as usize];
            }
            z[c] = acc;
        }
        let mut x = vec![0.0f64; n];
        for k in 0..n {
            x[self.order[k]] = z[k];
        }
        x
    }
}

/// Diagnostics from a successful KKT solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub inertia: (usize, usize),
    pub refine_iterations: usize,
    pub relative_residual: f64,
}

/// Solve the symmetric system to a relative residual of `1e-10`, with RCM
/// ordering and the listed dense columns eliminated last.
///
/// Returns a structured error when the factorization exposes degenerate
/// pivots (numerical rank deficiency) or refinement cannot reach the target.
pub fn solve_symmetric(
    a: &SparseSym,
    b: &[f64],
    n_primal: usize,
    dense_cols: &[usize],
    hint: KernelHint,
) -> Result<(Vec<f64>, SolveStats)> {
    const TARGET: f64 = 1e-10;
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::SingularSystem {
            hint,
            bad_pivots: a.n,
        });
    }
    let order = saddle_order(a, n_primal, dense_cols);
    let factor = ldl_factor(a, order, 1e-12 * scale);
    if factor.degenerate_pivots > 0 {
        return Err(Error::SingularSystem {
            hint,
            bad_pivots: factor.degenerate_pivots,
        });
    }

    let b_norm = norm2(b).max(f64::MIN_POSITIVE);
    let mut x = factor.solve(b);
    let mut r = vec![0.0f64; a.n];
    let mut best_rel = f64::INFINITY;
    let mut iterations = 0usize;
    for it in 0..20 {
        a.mul_vec(&x, &mut r);
        for k in 0..a.n {
            r[k] = b[k] - r[k];
        }
        let rel = norm2(&r) / b_norm;
        iterations = it;
        if rel <= TARGET {
            return Ok((
                x,
                SolveStats {
                    inertia: factor.inertia,
                    refine_iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        if rel >= best_rel * 0.5 && it > 3 {
            break;
        }
        best_rel = best_rel.min(rel);
        let dx = factor.solve(&r);
        for k in 0..a.n {
            x[k] += dx[k];
        }
    }
    a.mul_vec(&x, &mut r);
    for k in 0..a.n {
        r[k] = b[k] - r[k];
    }
    let rel = norm2(&r) / b_norm;
    if rel <= TARGET {
        Ok((
            x,
            SolveStats {
                inertia: factor.inertia,
                refine_iterations: iterations,
                relative_residual: rel,
            },
        ))
    } else {
        Err(Error::SingularSystem {
            hint,
            bad_pivots: 0,
        })
    }
}

fn norm2(v: &[f64]) -> f64 {
    crate::mathx::sqrt(v.iter().map(|x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::seeded_field;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let p = a[col][col];
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let f = a[row][col] / p;
                    for k in col..n {
                        a[row][k] -= f * a[col][k];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
        (0..n).map(|k| b[k] / a[k][k]).collect()
    }

    #[test]
    fn two_by_two_saddle() {
        let mut builder = SymmetricBuilder::new(2);
        builder.add(0, 0, 2.0);
        builder.add(0, 1, 1.0);
        let a = builder.build();
        let (x, stats) = solve_symmetric(&a, &[0.0, 1.0], 1, &[], KernelHint::Unknown).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
        assert_eq!(stats.inertia, (1, 1));
    }

    #[test]
    fn matches_dense_solver_on_random_saddle_systems() {
        // Shape block + constraint rows, like a miniature KKT system.
        let n_shape = 24;
        let n_con = 6;
        let n = n_shape + n_con;
        let noise = seeded_field(n * n, 77);
        let mut dense = vec![vec![0.0f64; n]; n];
        let mut builder = SymmetricBuilder::new(n);
        // SPD-ish banded shape block.
        for i in 0..n_shape {
            for j in i..n_shape.min(i + 4) {
                let v = if i == j {
                    4.0 + noise[i].x.abs()
                } else {
                    0.5 * noise[i + 3 * j].y
                };
                builder.add(i, j, v);
                dense[i][j] += v;
                if i != j {
                    dense[j][i] += v;
                }
            }
        }
        // Sparse constraint rows plus one dense volume-like row.
        for c in 0..n_con - 1 {
            let row = n_shape + c;
            let col = (c * 5) % n_shape;
            let v = 1.0 + noise[row + col].z.abs();
            builder.add(row, col, v);
            dense[row][col] += v;
            dense[col][row] += v;
        }
        let dense_row = n - 1;
        for col in 0..n_shape {
            let v = 0.3 + 0.1 * noise[col].x;
            builder.add(dense_row, col, v);
            dense[dense_row][col] += v;
            dense[col][dense_row] += v;
        }

        let a = builder.build();
        let b: Vec<f64> = (0..n).map(|k| noise[k].y).collect();
        let (x, stats) =
            solve_symmetric(&a, &b, n_shape, &[dense_row], KernelHint::Unknown).unwrap();
        let x_ref = dense_solve(dense, b.clone());
        for k in 0..n {
            assert!(
                (x[k] - x_ref[k]).abs() < 1e-8 * x_ref[k].abs().max(1.0),
                "component {k}: {} vs {}",
                x[k],
                x_ref[k]
            );
        }
        assert!(stats.relative_residual <= 1e-10);
    }

    #[test]
    fn indefinite_system_with_negative_leading_entry() {
        // Leading block indefinite; still factorable without pivoting here.
        let mut builder = SymmetricBuilder::new(3);
        builder.add(0, 0, -2.0);
        builder.add(1, 1, 3.0);
        builder.add(0, 1, 1.0);
        builder.add(2, 2, 1.0);
        builder.add(1, 2, 0.5);
        let a = builder.build();
        let b = [1.0, -1.0, 2.0];
        let (x, stats) = solve_symmetric(&a, &b, 3, &[], KernelHint::Unknown).unwrap();
        let mut r = vec![0.0; 3];
        a.mul_vec(&x, &mut r);
        for k in 0..3 {
            assert!((r[k] - b[k]).abs() < 1e-10);
        }
        assert_eq!(stats.inertia.0 + stats.inertia.1, 3);
        assert!(stats.inertia.1 >= 1);
    }

    #[test]
    fn exactly_singular_matrix_reports_degenerate_pivots() {
        let mut builder = SymmetricBuilder::new(2);
        builder.add(0, 0, 1.0);
        builder.add(0, 1, 1.0);
        builder.add(1, 1, 1.0);
        let a = builder.build();
        match solve_symmetric(&a, &[1.0, 1.0], 2, &[], KernelHint::Translation) {
            Err(Error::SingularSystem { hint, bad_pivots }) => {
                assert_eq!(hint, KernelHint::Translation);
                assert!(bad_pivots > 0);
            }
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    #[test]
    fn rcm_reduces_bandwidth_on_a_path_graph() {
        // Path graph numbered badly; RCM should recover a banded order.
        let n = 64;
        let scramble = |k: usize| (k * 37) % n;
        let mut builder = SymmetricBuilder::new(n);
        for k in 0..n {
            builder.add(scramble(k), scramble(k), 2.0);
        }
        for k in 0..n - 1 {
            builder.add(scramble(k), scramble(k + 1), -1.0);
        }
        let a = builder.build();
        let order = rcm_order(&a, &vec![true; n]);
        let mut inv = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let mut bandwidth = 0usize;
        for k in 0..n - 1 {
            bandwidth =
                bandwidth.max(inv[scramble(k)].abs_diff(inv[scramble(k + 1)]));
        }
        assert!(bandwidth <= 2, "bandwidth {bandwidth}");
    }
}
