//! Transportation simplex: north-west-corner start, MODI potentials, and
//! Bland's rule once degenerate pivots start to repeat.
//!
//! The basis is kept explicitly as a spanning tree of `m + n - 1` cells,
//! zero-flow basic cells included, so degeneracy never loses track of the
//! basis.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Consecutive degenerate pivots tolerated before switching to Bland's rule for good.
const DEGENERATE_SWITCH: usize = 32;

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    pub flow: DMatrix<f64>,
    pub objective: f64,
}

pub(crate) fn solve(
    supply: &[f64],
    demand: &[f64],
    cost: &DMatrix<f64>,
) -> Result<SimplexSolution> {
    let m = supply.len();
    let n = demand.len();
    debug_assert_eq!(cost.shape(), (m, n));
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    let scale = if total_d > 0.0 {
        total_s / total_d
    } else {
        1.0
    };

    let mut flow = DMatrix::zeros(m, n);
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    {
        let mut s = supply.to_vec();
        let mut d: Vec<f64> = demand.iter().map(|x| x * scale).collect();
        let (mut i, mut j) = (0, 0);
        loop {
            let q = s[i].min(d[j]);
            flow[(i, j)] = q;
            basis.push((i, j));
            s[i] -= q;
            d[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || s[i] < d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let cost_scale = cost.amax().max(1.0);
    let tol = 1e-12 * cost_scale;
    let max_pivots = (20 * m * n).max(10_000);
    let mut bland = false;
    let mut degenerate_run = 0usize;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut pivots = 0usize;

    loop {
        let adjacency = tree_adjacency(&basis, m, n);
        potentials(&adjacency, &basis, cost, m, &mut u, &mut v);

        let entering = if bland {
            (0..m)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| cost[(i, j)] - u[i] - v[j] < -tol)
        } else {
            let mut best: Option<((usize, usize), f64)> = None;
            for i in 0..m {
                for j in 0..n {
                    let r = cost[(i, j)] - u[i] - v[j];
                    if r < -tol && best.is_none_or(|(_, b)| r < b) {
                        best = Some(((i, j), r));
                    }
                }
            }
            best.map(|(cell, _)| cell)
        };
        let Some((ei, ej)) = entering else {
            break;
        };
        if pivots >= max_pivots {
            return Err(Error::LpNonConvergence { iterations: pivots });
        }
        pivots += 1;

        let path = tree_path(&adjacency, m, ej, ei);
        // path[0] touches column ej and gets -theta, then signs alternate
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (k, &b) in path.iter().enumerate() {
            if k % 2 == 0 {
                let (i, j) = basis[b];
                let f = flow[(i, j)];
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        let (li, lj) = basis[l];
                        f < theta || (f == theta && (i, j) < (li, lj))
                    }
                };
                if better {
                    theta = f;
                    leaving = Some(b);
                }
            }
        }
        let leaving = leaving.expect("cycle has a decreasing cell");
        for (k, &b) in path.iter().enumerate() {
            let (i, j) = basis[b];
            if k % 2 == 0 {
                flow[(i, j)] -= theta;
            } else {
                flow[(i, j)] += theta;
            }
        }
        let (li, lj) = basis[leaving];
        flow[(li, lj)] = 0.0;
        flow[(ei, ej)] = theta;
        basis[leaving] = (ei, ej);

        if theta == 0.0 {
            degenerate_run += 1;
            if degenerate_run >= DEGENERATE_SWITCH {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }

    let flow = flow.map(|f| f.max(0.0));
    let objective = flow.component_mul(cost).sum();
    Ok(SimplexSolution { flow, objective })
}

/// Node `i < m` is row `i`, node `m + j` is column `j`; edges carry basis indices.
fn tree_adjacency(basis: &[(usize, usize)], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + n];
    for (b, &(i, j)) in basis.iter().enumerate() {
        adj[i].push((m + j, b));
        adj[m + j].push((i, b));
    }
    adj
}

fn potentials(
    adj: &[Vec<(usize, usize)>],
    basis: &[(usize, usize)],
    cost: &DMatrix<f64>,
    m: usize,
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &(next, b) in &adj[node] {
            if seen[next] {
                continue;
            }
            seen[next] = true;
            let (i, j) = basis[b];
            if next >= m {
                v[j] = cost[(i, j)] - u[i];
            } else {
                u[i] = cost[(i, j)] - v[j];
            }
            queue.push_back(next);
        }
    }
}

/// Basis indices along the tree path from column `col` to row `row`.
fn tree_path(adj: &[Vec<(usize, usize)>], m: usize, col: usize, row: usize) -> Vec<usize> {
    let start = m + col;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &(next, b) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, b));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = row;
    while node != start {
        let (prev, b) = parent[node].expect("basis is a spanning tree");
        path.push(b);
        node = prev;
    }
    path.reverse();
    path
}
