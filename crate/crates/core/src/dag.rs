//! Directed acyclic graphs with explicit, ordered parent lists.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DagError {
    #[error("graph has no vertices")]
    Empty,
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("graph contains a directed cycle through `{0}`")]
    Cycle(String),
}

/// A DAG whose vertices carry names and whose parent lists are ordered.
///
/// Parent order is significant: it fixes how the columns of a vertex's
/// mechanism are indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    pub fn new(names: Vec<String>, parents: Vec<Vec<usize>>) -> Result<Self, DagError> {
        if names.is_empty() {
            return Err(DagError::Empty);
        }
        assert_eq!(names.len(), parents.len(), "one parent list per vertex");
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(DagError::DuplicateVertex(n.clone()));
            }
        }
        let n = names.len();
        let mut children = vec![Vec::new(); n];
        for (child, ps) in parents.iter().enumerate() {
            for (k, &p) in ps.iter().enumerate() {
                if p >= n {
                    return Err(DagError::IndexOutOfRange(p));
                }
                if p == child {
                    return Err(DagError::SelfLoop(names[p].clone()));
                }
                if ps[..k].contains(&p) {
                    return Err(DagError::DuplicateEdge(names[p].clone(), names[child].clone()));
                }
                children[p].push(child);
            }
        }
        let topo = topological_order(&parents, &children)
            .map_err(|v| DagError::Cycle(names[v].clone()))?;
        Ok(Self { names, index, parents, children, topo })
    }

    /// Builds from named edges; parent order follows the order edges are listed.
    pub fn from_edges<S: AsRef<str>>(names: &[S], edges: &[(S, S)]) -> Result<Self, DagError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let lookup: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut parents = vec![Vec::new(); names.len()];
        for (p, c) in edges {
            let pi = *lookup
                .get(p.as_ref())
                .ok_or_else(|| DagError::UnknownVertex(p.as_ref().to_string()))?;
            let ci = *lookup
                .get(c.as_ref())
                .ok_or_else(|| DagError::UnknownVertex(c.as_ref().to_string()))?;
            parents[ci].push(pi);
        }
        Self::new(names, parents)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, DagError> {
        self.index_of(name).ok_or_else(|| DagError::UnknownVertex(name.to_string()))
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(&from)
    }

    /// Edges as `(parent, child)`, grouped by child in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Same vertices with the incoming edges of every vertex in `targets` removed.
    pub fn without_parents(&self, targets: &[usize]) -> Dag {
        let mut parents = self.parents.clone();
        for &t in targets {
            parents[t].clear();
        }
        Dag::new(self.names.clone(), parents).expect("removing edges keeps a DAG")
    }

    /// Stable identity of the graph (names plus ordered parent lists).
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.names.hash(&mut h);
        self.parents.hash(&mut h);
        h.finish()
    }
}

/// Kahn's algorithm, smallest ready index first. Returns a vertex on a cycle on failure.
fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, usize> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&v| indeg[v] > 0).unwrap_or(0))
    }
}
