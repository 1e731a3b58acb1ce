//! Transportation simplex on a dense cost matrix.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + k − 1` cells, seeded by the northwest-corner rule. Entering cells are
//! chosen by Bland's rule (first negative reduced cost in row-major order) and
//! ties for the leaving cell go to the smallest row-major index.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Solution {
    /// Basic cells `(row, col, flow)`, degenerate zeros included.
    pub basis: Vec<(usize, usize, f64)>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub fn solve(supply: &[f64], demand: &[f64], cost: &DMatrix<f64>) -> Result<Solution> {
    let m = supply.len();
    let k = demand.len();
    if m == 0 || k == 0 {
        return Err(Error::arg("transport problem needs nonempty marginals"));
    }
    if cost.nrows() != m || cost.ncols() != k {
        return Err(Error::dim("cost matrix does not match the marginals"));
    }
    let mut cells = northwest_corner(supply, demand);
    let mut basic = vec![false; m * k];
    for &(i, j, _) in &cells {
        basic[i * k + j] = true;
    }
    let cmax = cost.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let eps = 1e-12 * (1.0 + cmax);
    let limit = 50 * m * k + 1000;
    let mut pivots = 0;
    loop {
        let adj = adjacency(m, k, &cells);
        let (u, v) = potentials(m, k, &cells, &adj, cost);
        let entering = (0..m * k).find(|&c| {
            let (i, j) = (c / k, c % k);
            !basic[c] && cost[(i, j)] - u[i] - v[j] < -eps
        });
        let Some(enter) = entering else {
            let objective = cells.iter().map(|&(i, j, x)| x * cost[(i, j)]).sum();
            return Ok(Solution {
                basis: cells,
                u,
                v,
                objective,
                pivots,
            });
        };
        pivots += 1;
        if pivots > limit {
            return Err(Error::Solver(format!("transportation simplex exceeded {limit} pivots")));
        }
        let (ei, ej) = (enter / k, enter % k);
        // Tree path from column ej back to row ei closes the cycle.
        let path = tree_path(m + k, &adj, m + ej, ei);
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (step, &cell) in path.iter().enumerate() {
            if step % 2 == 0 {
                let (i, j, x) = cells[cell];
                let idx = i * k + j;
                if x < theta || (x == theta && idx < cells[leave].0 * k + cells[leave].1) {
                    theta = x;
                    leave = cell;
                }
            }
        }
        for (step, &cell) in path.iter().enumerate() {
            if step % 2 == 0 {
                cells[cell].2 -= theta;
            } else {
                cells[cell].2 += theta;
            }
        }
        let (li, lj, _) = cells[leave];
        basic[li * k + lj] = false;
        basic[enter] = true;
        cells[leave] = (ei, ej, theta);
    }
}

fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<(usize, usize, f64)> {
    let (m, k) = (supply.len(), demand.len());
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let mut cells = Vec::with_capacity(m + k - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = if j == k - 1 {
            ra[i]
        } else if i == m - 1 {
            rb[j]
        } else {
            ra[i].min(rb[j])
        };
        let x = x.max(0.0);
        cells.push((i, j, x));
        if i == m - 1 && j == k - 1 {
            break;
        }
        let row_done = j == k - 1 || (i < m - 1 && ra[i] <= rb[j]);
        if row_done {
            rb[j] -= x;
            ra[i] = 0.0;
            i += 1;
        } else {
            ra[i] -= x;
            rb[j] = 0.0;
            j += 1;
        }
    }
    cells
}

/// Node `i < m` is row `i`; node `m + j` is column `j`. Each entry lists
/// `(neighbour, cell index)`.
fn adjacency(m: usize, k: usize, cells: &[(usize, usize, f64)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); m + k];
    for (c, &(i, j, _)) in cells.iter().enumerate() {
        adj[i].push((m + j, c));
        adj[m + j].push((i, c));
    }
    adj
}

fn potentials(
    m: usize,
    k: usize,
    cells: &[(usize, usize, f64)],
    adj: &[Vec<(usize, usize)>],
    cost: &DMatrix<f64>,
) -> (Vec<f64>, Vec<f64>) {
    let mut pot = vec![f64::NAN; m + k];
    pot[0] = 0.0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(a) = queue.pop_front() {
        for &(b, c) in &adj[a] {
            if pot[b].is_nan() {
                let (i, j, _) = cells[c];
                pot[b] = cost[(i, j)] - pot[a];
                queue.push_back(b);
            }
        }
    }
    (pot[..m].to_vec(), pot[m..].to_vec())
}

/// Cells along the unique tree path between two nodes, in order from `from`.
fn tree_path(nodes: usize, adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<usize> {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
    let mut seen = vec![false; nodes];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        if a == to {
            break;
        }
        for &(b, c) in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                parent[b] = Some((a, c));
                queue.push_back(b);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while let Some((prev, c)) = parent[cur] {
        path.push(c);
        cur = prev;
    }
    path.reverse();
    path
}
