//! Reachability, m-connectedness, ergodicity and invariant blocks.
//!
//! Everything here is combinatorial on the support digraph `i → j` iff
//! `P_ij > 0`, except the kernel dimension of `Δ_m`, which is read off the
//! spectrum of the symmetrized kernel.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg::{sorted_eigenvalues, symmetrized_kernel, DENSE_LIMIT};
use crate::space::{ScalarField, Space, Subset};

/// Eigenvalues of the symmetrized kernel within this distance of 1 count
/// towards `dim ker Δ_m`.
pub const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityResult {
    /// Points from which `D` is never reached.
    pub n_set: Subset,
    /// Points from which `D` is reached with positive probability.
    pub h_set: Subset,
    /// Least `k ≥ 1` with `m_x^{*k}(D) > 0`, or −1 on `n_set`.
    pub first_hit: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub blocks: Vec<Subset>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ergodicity {
    pub ergodic: bool,
    pub kernel_dim: usize,
    /// A nonconstant harmonic function, present when not ergodic.
    pub witness: Option<ScalarField>,
}

fn support_graph(kernel: &DMatrix<f64>) -> DiGraph<(), ()> {
    let n = kernel.nrows();
    let mut g = DiGraph::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && kernel[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    g
}

/// Strongly connected components, each sorted, ordered by smallest member.
pub fn communicating_classes(kernel: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let g = support_graph(kernel);
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|ix| ix.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Closed communicating classes and the remaining transient points.
pub fn closed_classes(kernel: &DMatrix<f64>) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = kernel.nrows();
    let classes = communicating_classes(kernel);
    let mut class_of = vec![0; n];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }
    let mut closed = Vec::new();
    let mut transient = Vec::new();
    for (c, members) in classes.into_iter().enumerate() {
        let leaks = members
            .iter()
            .any(|&i| (0..n).any(|j| kernel[(i, j)] > 0.0 && class_of[j] != c));
        if leaks {
            transient.extend(members);
        } else {
            closed.push(members);
        }
    }
    transient.sort_unstable();
    (closed, transient)
}

/// Computes `N^m_D` and `H^m_D` by backward search from `D`.
pub fn reachability(space: &Space, d: &Subset) -> Result<ReachabilityResult> {
    space.check_subset(d)?;
    if d.count() == 0 {
        return Err(Error::arg("target set must be nonempty"));
    }
    let n = space.len();
    let p = space.kernel();
    let preds: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| p[(i, j)] > 0.0).collect())
        .collect();
    // dist[y] = least number of jumps from y into D, with dist = 0 on D.
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for i in d.indices() {
        dist[i] = 0;
        queue.push_back(i);
    }
    while let Some(y) = queue.pop_front() {
        for &x in &preds[y] {
            if dist[x] == usize::MAX {
                dist[x] = dist[y] + 1;
                queue.push_back(x);
            }
        }
    }
    let first_hit: Vec<i64> = (0..n)
        .map(|x| {
            space
                .neighbors(x)
                .filter(|&y| dist[y] != usize::MAX)
                .map(|y| dist[y] as i64 + 1)
                .min()
                .unwrap_or(-1)
        })
        .collect();
    let h_mask: Vec<bool> = first_hit.iter().map(|&k| k >= 1).collect();
    let h_set = Subset::from_mask(h_mask);
    Ok(ReachabilityResult {
        n_set: h_set.complement(),
        h_set,
        first_hit,
    })
}

pub fn is_m_connected(space: &Space) -> bool {
    communicating_classes(space.kernel()).len() == 1
}

pub fn invariant_blocks(space: &Space) -> BlockDecomposition {
    let n = space.len();
    let (closed, _) = closed_classes(space.kernel());
    let blocks: Vec<Subset> = closed
        .iter()
        .map(|c| Subset::from_indices(n, c).expect("indices in range"))
        .collect();
    BlockDecomposition {
        count: blocks.len(),
        blocks,
    }
}

/// Dimension of `ker Δ_m`: eigenvalues of the symmetrized kernel within
/// [`KERNEL_TOL`] of 1, or the closed-class count for large spaces.
pub fn kernel_dimension(space: &Space) -> usize {
    if space.len() > DENSE_LIMIT {
        return invariant_blocks(space).count;
    }
    sorted_eigenvalues(&symmetrized_kernel(space))
        .iter()
        .filter(|&&l| (l - 1.0).abs() <= KERNEL_TOL)
        .count()
}

pub fn is_ergodic(space: &Space) -> Ergodicity {
    let kernel_dim = kernel_dimension(space);
    let ergodic = kernel_dim == 1;
    let witness = if ergodic {
        None
    } else {
        let blocks = invariant_blocks(space);
        (blocks.count > 1).then(|| ScalarField::indicator(&blocks.blocks[0]))
    };
    Ergodicity {
        ergodic,
        kernel_dim,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::heat::apply_laplacian;

    #[test]
    fn p3_reachability_from_a() {
        let p3 = fixtures::p3();
        let r = reachability(&p3, &Subset::from_indices(3, &[0]).unwrap()).unwrap();
        assert_eq!(r.n_set.count(), 0);
        assert_eq!(r.h_set.count(), 3);
        // a returns to itself after two jumps.
        assert_eq!(r.first_hit, vec![2, 1, 2]);
    }

    #[test]
    fn two_block_unreachable_half() {
        let tb = fixtures::two_block(0.1);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        let r = reachability(&tb, &b1).unwrap();
        assert_eq!(r.n_set, b2);
        assert!(r.first_hit.iter().zip(b2.mask()).all(|(&k, &inb2)| (k == -1) == inb2));
    }

    #[test]
    fn whole_space_and_empty_target() {
        let k3 = fixtures::k3();
        let r = reachability(&k3, &Subset::full(3)).unwrap();
        assert_eq!(r.n_set.count(), 0);
        assert_eq!(r.first_hit, vec![1, 1, 1]);
        assert!(reachability(&k3, &Subset::empty(3)).is_err());
    }

    #[test]
    fn connectedness_verdicts() {
        assert!(is_m_connected(&fixtures::p3()));
        assert!(!is_m_connected(&fixtures::two_block(0.1)));
        let one = crate::builders::grid_kernel_neumann(&[(0.0, 0.0)], 1.0, 1.0).unwrap();
        assert!(is_m_connected(&one));
        assert!(is_ergodic(&one).ergodic);
    }

    #[test]
    fn ergodicity_and_kernel_dim() {
        let e = is_ergodic(&fixtures::p3());
        assert!(e.ergodic && e.kernel_dim == 1 && e.witness.is_none());

        let tb = fixtures::two_block(0.1);
        let e = is_ergodic(&tb);
        assert!(!e.ergodic);
        assert_eq!(e.kernel_dim, 2);
        let w = e.witness.unwrap();
        assert_eq!(w, ScalarField::indicator(&fixtures::two_block_halves(&tb).0));
        assert!(apply_laplacian(&tb, &w).unwrap().max_abs() == 0.0);

        for k in 1..=4 {
            let u = fixtures::disjoint_union(&vec![fixtures::p3(); k]);
            assert_eq!(is_ergodic(&u).kernel_dim, k);
            assert_eq!(invariant_blocks(&u).count, k);
        }
    }

    #[test]
    fn block_counts() {
        assert_eq!(invariant_blocks(&fixtures::p3()).count, 1);
        assert_eq!(invariant_blocks(&fixtures::lazy_cycle(6, 0.5)).count, 1);
        let tb = fixtures::two_block(0.1);
        let blocks = invariant_blocks(&tb);
        let (b1, b2) = fixtures::two_block_halves(&tb);
        assert_eq!(blocks.blocks, vec![b1, b2]);
    }

    #[test]
    fn transient_points_detected() {
        let k = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let (closed, transient) = closed_classes(&k);
        assert_eq!(closed, vec![vec![1, 2]]);
        assert_eq!(transient, vec![0]);
    }
}
