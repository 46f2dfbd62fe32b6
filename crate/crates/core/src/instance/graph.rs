use crate::error::ModelError;

/// Simple undirected graph in compressed adjacency form.
///
/// Vertex ids are `0..n`. Each neighbor list is sorted ascending, and every
/// adjacency slot also records the id of the undirected edge it belongs to,
/// so per-edge data can be looked up in O(1) while scanning a neighborhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    slot_edge: Vec<usize>,
    edges: Vec<(usize, usize)>,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Edge ids follow list order and
    /// each edge is stored in canonical orientation `(min, max)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut degree = vec![0usize; n];
        let mut canon = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(ModelError::VertexOutOfRange {
                    vertex: u.max(v),
                    n,
                });
            }
            if u == v {
                return Err(ModelError::SelfLoop(u));
            }
            degree[u] += 1;
            degree[v] += 1;
            canon.push((u.min(v), u.max(v)));
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut slots = vec![(0usize, 0usize); offsets[n]];
        for (id, &(u, v)) in canon.iter().enumerate() {
            slots[fill[u]] = (v, id);
            fill[u] += 1;
            slots[fill[v]] = (u, id);
            fill[v] += 1;
        }
        for v in 0..n {
            let list = &mut slots[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            for w in list.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(ModelError::DuplicateEdge(v.min(w[0].0), v.max(w[0].0)));
                }
            }
        }

        let (targets, slot_edge) = slots.into_iter().unzip();
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Ok(Graph {
            offsets,
            targets,
            slot_edge,
            edges: canon,
            max_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge ids aligned with `neighbors(v)`.
    #[inline]
    pub fn neighbor_edges(&self, v: usize) -> &[usize] {
        &self.slot_edge[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Edges in canonical `(smaller, larger)` orientation, indexed by edge id.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }
}
