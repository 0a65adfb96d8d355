//! Hand-crafted graph features for an Ising instance.
//!
//! Node `i` carries `[h_i; sgn(h_i - h_j); sgn(h_i - J_ij); sgn(h_i h_j J_ij)]` with one
//! entry per neighbour `j` (ascending), each block zero-padded to `max_qubits - 1`.
//! The directed edge `(i, j)` carries `[sgn J_ij, sgn(J_ij - h_i), sgn(J_ij - h_j), sgn(h_i h_j J_ij)]`
//! and is consumed by node `i` when it aggregates neighbour `j`.

use ndarray::Array2;

use crate::error::Result;
use crate::ising::{check_permutation, IsingProblem};
use crate::scalar::Real;

/// Width of each directed edge feature vector.
pub const EDGE_FEATURES: usize = 4;

/// Sign with `sgn(0) = 0`.
pub fn sgn<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Node width produced for a given `max_qubits` padding.
pub fn node_feature_width(max_qubits: usize) -> usize {
    1 + 3 * (max_qubits - 1)
}

/// Graph view of a problem, ready for the encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemGraph<T> {
    pub n_nodes: usize,
    /// Padding width of each neighbour block.
    pub n_pad: usize,
    pub node_features: Array2<T>,
    /// Directed pairs `(receiver, sender)`, sorted lexicographically.
    pub edge_index: Vec<(usize, usize)>,
    pub edge_features: Array2<T>,
    /// For each node, its neighbours in ascending order.
    pub neighbor_order: Vec<Vec<usize>>,
}

impl<T: Real> ProblemGraph<T> {
    /// Contiguous ranges of `edge_index` grouped by receiving node.
    pub fn incoming_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::with_capacity(self.n_nodes);
        let mut start = 0;
        for i in 0..self.n_nodes {
            let mut end = start;
            while end < self.edge_index.len() && self.edge_index[end].0 == i {
                end += 1;
            }
            ranges.push(start..end);
            start = end;
        }
        ranges
    }

    /// Senders of each directed edge, in `edge_index` order.
    pub fn senders(&self) -> Vec<usize> {
        self.edge_index.iter().map(|&(_, j)| j).collect()
    }

    /// The three sign entries node `i` stores for neighbour `j`, if `j` is a neighbour.
    pub fn neighbor_signs(&self, i: usize, j: usize) -> Option<[T; 3]> {
        let slot = self.neighbor_order[i].iter().position(|&k| k == j)?;
        let row = self.node_features.row(i);
        Some([row[1 + slot], row[1 + self.n_pad + slot], row[1 + 2 * self.n_pad + slot]])
    }

    pub fn edge_feature(&self, i: usize, j: usize) -> Option<Vec<T>> {
        let e = self.edge_index.iter().position(|&p| p == (i, j))?;
        Some(self.edge_features.row(e).to_vec())
    }

    /// Relabels nodes (`i -> perm[i]`) without touching feature contents.
    ///
    /// Rows move with their nodes and edges are re-sorted; this is the action a
    /// message-passing encoder must be equivariant under.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_nodes)?;
        let mut node_features = Array2::zeros(self.node_features.raw_dim());
        for i in 0..self.n_nodes {
            node_features.row_mut(perm[i]).assign(&self.node_features.row(i));
        }
        let mut edges: Vec<((usize, usize), usize)> =
            self.edge_index.iter().enumerate().map(|(e, &(i, j))| ((perm[i], perm[j]), e)).collect();
        edges.sort();
        let mut edge_features = Array2::zeros(self.edge_features.raw_dim());
        for (new, &(_, old)) in edges.iter().enumerate() {
            edge_features.row_mut(new).assign(&self.edge_features.row(old));
        }
        let mut neighbor_order = vec![Vec::new(); self.n_nodes];
        for &((i, j), _) in &edges {
            neighbor_order[i].push(j);
        }
        Ok(Self {
            n_nodes: self.n_nodes,
            n_pad: self.n_pad,
            node_features,
            edge_index: edges.into_iter().map(|(p, _)| p).collect(),
            edge_features,
            neighbor_order,
        })
    }
}

/// Builds the graph representation, padding neighbour blocks to `max_qubits - 1`.
pub fn embed<T: Real>(p: &IsingProblem<T>, max_qubits: usize) -> ProblemGraph<T> {
    let n = p.n();
    assert!(n <= max_qubits, "problem size {n} exceeds padding width {max_qubits}");
    let n_pad = max_qubits.saturating_sub(1).max(1);
    let h = p.h();

    let mut neighbor_order = vec![Vec::new(); n];
    for (a, b, _) in p.couplings() {
        neighbor_order[a].push(b);
        neighbor_order[b].push(a);
    }
    for list in &mut neighbor_order {
        list.sort_unstable();
    }

    let mut node_features = Array2::zeros((n, 1 + 3 * n_pad));
    for i in 0..n {
        node_features[[i, 0]] = h[i];
        for (slot, &j) in neighbor_order[i].iter().enumerate() {
            let jij = p.coupling(i, j).expect("neighbour implies coupling");
            node_features[[i, 1 + slot]] = sgn(h[i] - h[j]);
            node_features[[i, 1 + n_pad + slot]] = sgn(h[i] - jij);
            node_features[[i, 1 + 2 * n_pad + slot]] = sgn(h[i] * h[j] * jij);
        }
    }

    let mut edge_index = Vec::with_capacity(2 * p.num_couplings());
    for (i, list) in neighbor_order.iter().enumerate() {
        for &j in list {
            edge_index.push((i, j));
        }
    }
    let mut edge_features = Array2::zeros((edge_index.len(), EDGE_FEATURES));
    for (e, &(i, j)) in edge_index.iter().enumerate() {
        let jij = p.coupling(i, j).expect("edge implies coupling");
        edge_features[[e, 0]] = sgn(jij);
        edge_features[[e, 1]] = sgn(jij - h[i]);
        edge_features[[e, 2]] = sgn(jij - h[j]);
        edge_features[[e, 3]] = sgn(h[i] * h[j] * jij);
    }

    ProblemGraph { n_nodes: n, n_pad, node_features, edge_index, edge_features, neighbor_order }
}

/// Number of coupling triangles whose product `J_ij J_jk J_ik` is positive.
pub fn frustration_count<T: Real>(p: &IsingProblem<T>) -> usize {
    let n = p.n();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            let Some(a) = p.coupling(i, j) else { continue };
            for k in j + 1..n {
                if let (Some(b), Some(c)) = (p.coupling(j, k), p.coupling(i, k)) {
                    if a * b * c > T::zero() {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

/// Writes the node and edge feature matrices as CSV text.
pub fn features_csv<T: Real>(g: &ProblemGraph<T>) -> (String, String) {
    let mut nodes = String::from("node");
    for c in 0..g.node_features.ncols() {
        nodes.push_str(&format!(",f{c}"));
    }
    nodes.push('\n');
    for (i, row) in g.node_features.rows().into_iter().enumerate() {
        nodes.push_str(&i.to_string());
        for v in row {
            nodes.push_str(&format!(",{v}"));
        }
        nodes.push('\n');
    }
    let mut edges = String::from("receiver,sender,sgn_j,sgn_j_minus_hi,sgn_j_minus_hj,sgn_product\n");
    for (e, &(i, j)) in g.edge_index.iter().enumerate() {
        edges.push_str(&format!("{i},{j}"));
        for v in g.edge_features.row(e) {
            edges.push_str(&format!(",{v}"));
        }
        edges.push('\n');
    }
    (nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{random_problem, MAX_QUBITS};
    use proptest::prelude::*;

    #[test]
    fn two_spin_edge_features_by_hand() {
        let p = IsingProblem::new(vec![1.0, -1.0], [(0, 1, 0.5)]).unwrap();
        let g = embed(&p, MAX_QUBITS);
        // sgn(0.5) = +1, sgn(0.5 - 1) = -1, sgn(0.5 + 1) = +1, sgn(1 * -1 * 0.5) = -1
        assert_eq!(g.edge_feature(0, 1).unwrap(), vec![1.0, -1.0, 1.0, -1.0]);
        // reverse direction swaps the h_i / h_j entries
        assert_eq!(g.edge_feature(1, 0).unwrap(), vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(g.node_features.ncols(), node_feature_width(MAX_QUBITS));
        assert_eq!(g.neighbor_signs(0, 1).unwrap(), [1.0, 1.0, -1.0]);
    }

    #[test]
    fn zero_problem_has_zero_features() {
        let p = IsingProblem::new(vec![0.0; 3], [(0, 1, 0.0), (0, 2, 0.0), (1, 2, 0.0)]).unwrap();
        let g = embed(&p, MAX_QUBITS);
        assert!(g.node_features.iter().all(|&v| v == 0.0));
        assert!(g.edge_features.iter().all(|&v| v == 0.0));
        assert_eq!(g.edge_index.len(), 6);
    }

    #[test]
    fn uniform_ferromagnet_features_by_hand() {
        let p = IsingProblem::new(vec![0.0; 3], [(0, 1, -1.0), (0, 2, -1.0), (1, 2, -1.0)]).unwrap();
        let g = embed(&p, 6);
        for i in 0..3 {
            let row = g.node_features.row(i);
            assert!(row.iter().skip(1).take(g.n_pad).all(|&v| v == 0.0));
            // sgn(0 - (-1)) = +1 for both neighbours, padding stays 0
            assert_eq!(row[1 + g.n_pad], 1.0);
            assert_eq!(row[2 + g.n_pad], 1.0);
            assert_eq!(row[3 + g.n_pad], 0.0);
        }
        for row in g.edge_features.rows() {
            assert_eq!(row.to_vec(), vec![-1.0, -1.0, -1.0, 0.0]);
        }
    }

    #[test]
    fn edges_come_in_both_directions_and_sorted() {
        let p: IsingProblem<f64> = random_problem(4, 3).unwrap();
        let g = embed(&p, MAX_QUBITS);
        assert_eq!(g.edge_index.len(), 12);
        for &(i, j) in &g.edge_index {
            assert!(g.edge_index.contains(&(j, i)));
        }
        assert!(g.edge_index.windows(2).all(|w| w[0] < w[1]));
        let ranges = g.incoming_ranges();
        assert_eq!(ranges, vec![0..3, 3..6, 6..9, 9..12]);
    }

    #[test]
    fn sparse_problem_has_isolated_node() {
        let p = IsingProblem::new(vec![0.3, -0.1, 0.2], [(0, 1, 0.7)]).unwrap();
        let g = embed(&p, 5);
        assert!(g.neighbor_order[2].is_empty());
        assert_eq!(g.incoming_ranges()[2], 2..2);
    }

    #[test]
    fn frustration_examples() {
        let tri = |v: f64| IsingProblem::new(vec![0.0; 3], [(0, 1, v), (1, 2, v), (0, 2, v)]).unwrap();
        assert_eq!(frustration_count(&tri(1.0)), 1);
        assert_eq!(frustration_count(&tri(-1.0)), 0);
        let k4 = IsingProblem::new(vec![0.0; 4], (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b, 1.0)))).unwrap();
        assert_eq!(frustration_count(&k4), 4);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p: IsingProblem<f64> = random_problem(3, 1).unwrap();
        let (nodes, edges) = features_csv(&embed(&p, 4));
        assert_eq!(nodes.lines().count(), 4);
        assert_eq!(edges.lines().count(), 7);
        assert!(nodes.starts_with("node,f0,"));
    }

    proptest! {
        #[test]
        fn relabeling_equivariance(seed in any::<u64>(), n in 3usize..=5, perm_seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let p: IsingProblem<f64> = random_problem(n, seed).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
            let g = embed(&p, MAX_QUBITS);
            let gp = embed(&p.permuted(&perm).unwrap(), MAX_QUBITS);
            for i in 0..n {
                prop_assert_eq!(g.node_features[[i, 0]], gp.node_features[[perm[i], 0]]);
                for j in (0..n).filter(|&j| j != i) {
                    prop_assert_eq!(g.neighbor_signs(i, j), gp.neighbor_signs(perm[i], perm[j]));
                    prop_assert_eq!(g.edge_feature(i, j), gp.edge_feature(perm[i], perm[j]));
                }
            }
        }

        #[test]
        fn features_are_signs_except_field(seed in any::<u64>(), n in 3usize..=8) {
            let p: IsingProblem<f64> = random_problem(n, seed).unwrap();
            let g = embed(&p, MAX_QUBITS);
            for i in 0..n {
                prop_assert_eq!(g.node_features[[i, 0]], p.h()[i]);
                prop_assert!(g.node_features.row(i).iter().skip(1).all(|v| [-1.0, 0.0, 1.0].contains(v)));
            }
            prop_assert!(g.edge_features.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
            prop_assert_eq!(&g, &embed(&p, MAX_QUBITS));
        }
    }
}
