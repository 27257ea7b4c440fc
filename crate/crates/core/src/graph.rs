//! Dependency graph of a time-driven ODE.
//!
//! One vertex per variable; an edge `j -> i` exists when `f_i` reads
//! `x_j`, i.e. `j` is in the input set of `i`. External variables have
//! empty input sets since they depend on time only.

use crate::error::{Error, Result};
use crate::tdode::TdOde;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    n_external: usize,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds a graph from explicit per-vertex input sets. The first
    /// `n_external` sets must be empty.
    pub fn from_input_sets(n_external: usize, in_edges: Vec<Vec<usize>>) -> Result<Self> {
        let n = in_edges.len();
        if n_external > n {
            return Err(Error::Structure(format!(
                "{n_external} external vertices but only {n} total"
            )));
        }
        for (i, set) in in_edges.iter().enumerate() {
            if i < n_external && !set.is_empty() {
                return Err(Error::Structure(format!(
                    "external vertex {i} must have an empty input set"
                )));
            }
            for &j in set {
                if j >= n {
                    return Err(Error::Structure(format!(
                        "input set of vertex {i} references vertex {j}, but n = {n}"
                    )));
                }
            }
        }
        let mut in_edges = in_edges;
        for set in &mut in_edges {
            set.sort_unstable();
            set.dedup();
        }
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, set) in in_edges.iter().enumerate() {
            for &j in set {
                out_edges[j].push(i);
            }
        }
        // transposing sorted-by-target insertion already yields sorted lists
        Ok(Self {
            n_external,
            in_edges,
            out_edges,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.in_edges.len()
    }

    pub fn n_external(&self) -> usize {
        self.n_external
    }

    /// Input set of vertex `v` (the variables `f_v` reads).
    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    /// Output set of vertex `v` (the variables whose `f` reads `x_v`).
    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn edge_count(&self) -> usize {
        self.in_edges.iter().map(Vec::len).sum()
    }
}

/// Derives the dependency graph from the structural sparsity declared
/// by the model.
pub fn build_dependency_graph(ode: &TdOde) -> Result<DependencyGraph> {
    let n_e = ode.n_external();
    let n = ode.n();
    let mut in_edges = vec![Vec::new(); n_e];
    for (i, set) in ode.sparsity().iter().enumerate() {
        for &j in set {
            if j >= n {
                return Err(Error::Structure(format!(
                    "sparsity of internal component {i} references variable {j}, but n = {n}"
                )));
            }
        }
        in_edges.push(set.clone());
    }
    DependencyGraph::from_input_sets(n_e, in_edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdode::sparsity_from_finite_differences;

    /// The 4x4 linear cascade x' = A x used throughout the unit tests.
    pub fn linear_cascade_matrix() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 1.0],
        ]
    }

    fn linear_cascade_ode() -> TdOde {
        let a = linear_cascade_matrix();
        let sparsity = a
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let a2 = a.clone();
        TdOde::new(
            0,
            4,
            |_t, _out| {},
            move |_xe, xi, out, mask| {
                for &i in mask {
                    out[i] = a2[i].iter().zip(xi).map(|(aij, xj)| aij * xj).sum();
                }
            },
            sparsity,
        )
        .unwrap()
    }

    #[test]
    fn linear_cascade_input_output_sets() {
        let g = build_dependency_graph(&linear_cascade_ode()).unwrap();
        assert_eq!(g.in_edges(0), &[1]);
        assert_eq!(g.in_edges(1), &[2]);
        assert_eq!(g.in_edges(2), &[3]);
        assert_eq!(g.in_edges(3), &[1, 3]);
        assert_eq!(g.out_edges(0), &[] as &[usize]);
        assert_eq!(g.out_edges(1), &[0, 3]);
        assert_eq!(g.out_edges(2), &[1]);
        assert_eq!(g.out_edges(3), &[2, 3]);
    }

    #[test]
    fn adjacency_is_transposed_system_matrix() {
        // For x' = A x the graph's adjacency matrix equals A^T.
        let a = linear_cascade_matrix();
        let g = build_dependency_graph(&linear_cascade_ode()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let has_edge = g.out_edges(j).contains(&i); // edge j -> i
                assert_eq!(has_edge, a[i][j] != 0.0, "edge {j}->{i}");
            }
        }
    }

    #[test]
    fn graph_matches_finite_difference_sparsity() {
        let ode = linear_cascade_ode();
        let g = build_dependency_graph(&ode).unwrap();
        let fd = sparsity_from_finite_differences(
            |x| {
                let mut out = vec![0.0; 4];
                ode.eval_internal(&[], x, &mut out, &[0, 1, 2, 3]);
                out
            },
            &[0.4, -0.9, 1.3, 0.2],
            1e-8,
        )
        .unwrap();
        for i in 0..4 {
            assert_eq!(g.in_edges(i), fd[i].as_slice());
        }
    }

    #[test]
    fn external_only_system_has_no_edges() {
        let ode = TdOde::new(1, 0, |t, out| out[0] = t.sin(), |_e, _i, _o, _m| {}, vec![]).unwrap();
        let g = build_dependency_graph(&ode).unwrap();
        assert_eq!(g.n_vertices(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn out_of_range_sparsity_is_rejected() {
        let ode = TdOde::new(
            1,
            1,
            |_t, out| out[0] = 0.0,
            |_e, _i, out, _m| out[0] = 0.0,
            vec![vec![5]],
        )
        .unwrap();
        match build_dependency_graph(&ode) {
            Err(Error::Structure(_)) => {}
            other => panic!("expected structural error, got {other:?}"),
        }
    }

    #[test]
    fn duality_in_vs_out() {
        let g =
            DependencyGraph::from_input_sets(1, vec![vec![], vec![0, 2], vec![1], vec![1, 2, 3]])
                .unwrap();
        for i in 0..g.n_vertices() {
            for &j in g.in_edges(i) {
                assert!(g.out_edges(j).contains(&i));
            }
            for &j in g.out_edges(i) {
                assert!(g.in_edges(j).contains(&i));
            }
        }
    }
}
