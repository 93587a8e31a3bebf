//! The syntactic layer: box signatures, surgered diagrams in normal form,
//! the monoid of cut sets, graph homomorphisms and the diagram map they induce.
//!
//! A diagram is kept as `(graph, support, cut set)`. The support is the set of
//! vertices that carry a box; it is the whole vertex set for a graph's own
//! diagram and the image of the vertex map for a mapped diagram. Boxes are a
//! pure function of those three pieces, so diagram equality is structural.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dag::{Dag, DagError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("cut set and diagram belong to different graphs")]
    GraphMismatch,
    #[error("source vertex `{0}` is not mapped")]
    Unmapped(String),
    #[error("source vertex `{0}` is mapped more than once")]
    DuplicateMapping(String),
    #[error("map has {found} entries, source graph has {expected} vertices")]
    MapLength { expected: usize, found: usize },
    #[error("merged group of `{macro_vertex}` is only partially cut (cut: {cut:?}, uncut: {uncut:?}); the image is not a diagram over the target graph")]
    UnrepresentableImage { macro_vertex: String, cut: Vec<String>, uncut: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    /// A generator box reading the vertex's parents.
    Mechanism,
    /// An input-free intervened state left behind by a cut.
    IntervenedState,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BoxSignature {
    pub output: usize,
    pub inputs: Vec<usize>,
    pub kind: BoxKind,
}

/// An element of the cut monoid of one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutSet {
    graph: u64,
    targets: BTreeSet<usize>,
}

impl CutSet {
    /// The identity element: the null intervention.
    pub fn empty(dag: &Dag) -> Self {
        Self { graph: dag.fingerprint(), targets: BTreeSet::new() }
    }

    pub fn new(dag: &Dag, targets: impl IntoIterator<Item = usize>) -> Result<Self, SyntaxError> {
        let targets: BTreeSet<usize> = targets.into_iter().collect();
        if let Some(&bad) = targets.iter().find(|&&t| t >= dag.len()) {
            return Err(DagError::IndexOutOfRange(bad).into());
        }
        Ok(Self { graph: dag.fingerprint(), targets })
    }

    pub fn from_names<S: AsRef<str>>(dag: &Dag, names: &[S]) -> Result<Self, SyntaxError> {
        let idx = names.iter().map(|n| dag.require(n.as_ref())).collect::<Result<Vec<_>, _>>()?;
        Self::new(dag, idx)
    }

    /// Every subset of the vertex set, ordered lexicographically by sorted index list.
    pub fn all(dag: &Dag) -> Vec<CutSet> {
        let n = dag.len();
        assert!(n < usize::BITS as usize, "too many vertices to enumerate subsets");
        let mut sets: Vec<Vec<usize>> = (0..1usize << n)
            .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
            .collect();
        sets.sort();
        sets.into_iter().map(|t| CutSet::new(dag, t).expect("in range")).collect()
    }

    /// The empty cut followed by every singleton.
    pub fn singletons(dag: &Dag) -> Vec<CutSet> {
        std::iter::once(CutSet::empty(dag))
            .chain((0..dag.len()).map(|v| CutSet::new(dag, [v]).expect("in range")))
            .collect()
    }

    pub fn targets(&self) -> &BTreeSet<usize> {
        &self.targets
    }

    pub fn contains(&self, v: usize) -> bool {
        self.targets.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn belongs_to(&self, dag: &Dag) -> bool {
        self.graph == dag.fingerprint()
    }

    pub fn names(&self, dag: &Dag) -> Vec<String> {
        self.targets.iter().map(|&t| dag.name(t).to_string()).collect()
    }

    pub fn is_subset(&self, other: &CutSet) -> bool {
        self.graph == other.graph && self.targets.is_subset(&other.targets)
    }
}

/// Monoid product: `cut_b · cut_a = cut_{a ∪ b}`.
pub fn compose_cuts(a: &CutSet, b: &CutSet) -> Result<CutSet, SyntaxError> {
    if a.graph != b.graph {
        return Err(SyntaxError::GraphMismatch);
    }
    Ok(CutSet { graph: a.graph, targets: a.targets.union(&b.targets).copied().collect() })
}

/// A string diagram over a graph, after some cut surgery, in normal form.
#[derive(Debug, Clone)]
pub struct SurgeredDiagram {
    graph: Dag,
    support: BTreeSet<usize>,
    cut_set: BTreeSet<usize>,
    boxes: Vec<BoxSignature>,
}

impl SurgeredDiagram {
    /// The uncut diagram of `dag`: one generator box per vertex.
    pub fn syn(dag: &Dag) -> Self {
        Self::build(dag.clone(), (0..dag.len()).collect(), BTreeSet::new())
    }

    fn build(graph: Dag, support: BTreeSet<usize>, cut_set: BTreeSet<usize>) -> Self {
        let boxes = support
            .iter()
            .map(|&v| {
                if cut_set.contains(&v) {
                    BoxSignature { output: v, inputs: Vec::new(), kind: BoxKind::IntervenedState }
                } else {
                    BoxSignature { output: v, inputs: graph.parents(v).to_vec(), kind: BoxKind::Mechanism }
                }
            })
            .collect();
        Self { graph, support, cut_set, boxes }
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn cut_set(&self) -> &BTreeSet<usize> {
        &self.cut_set
    }

    /// Boxes ordered by output vertex.
    pub fn boxes(&self) -> &[BoxSignature] {
        &self.boxes
    }

    /// Removes the boxes of the cut targets together with their incoming wires.
    pub fn apply_cut(&self, cut: &CutSet) -> Result<Self, SyntaxError> {
        if !cut.belongs_to(&self.graph) {
            return Err(SyntaxError::GraphMismatch);
        }
        let cut_set = self.cut_set.union(&cut.targets).copied().collect();
        Ok(Self::build(self.graph.clone(), self.support.clone(), cut_set))
    }
}

impl PartialEq for SurgeredDiagram {
    fn eq(&self, other: &Self) -> bool {
        // cuts on vertices without a box are invisible
        self.graph == other.graph && self.support == other.support && self.boxes == other.boxes
    }
}

impl Eq for SurgeredDiagram {}

impl fmt::Display for SurgeredDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.boxes {
            let out = self.graph.name(b.output);
            match b.kind {
                BoxKind::IntervenedState => writeln!(f, "{out} <- do({out})")?,
                BoxKind::Mechanism => {
                    let ins: Vec<&str> = b.inputs.iter().map(|&i| self.graph.name(i)).collect();
                    writeln!(f, "{out} <- [{}]", ins.join(", "))?
                }
            }
        }
        Ok(())
    }
}

/// A vertex map between two DAGs. Edge preservation is checked by
/// [`GraphHom::validate`], not at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphHom {
    source: Dag,
    target: Dag,
    map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeImage {
    pub from: String,
    pub to: String,
    pub image_from: String,
    pub image_to: String,
    /// Both endpoints land on the same target vertex, which would need a self-loop.
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreimageClass {
    pub target: String,
    pub members: Vec<String>,
    /// No edge of the source graph joins two members.
    pub independent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomReport {
    pub missing_edges: Vec<EdgeImage>,
    pub preimage_classes: Vec<PreimageClass>,
}

impl HomReport {
    pub fn is_valid(&self) -> bool {
        self.missing_edges.is_empty()
    }
}

impl GraphHom {
    pub fn new(source: Dag, target: Dag, map: Vec<usize>) -> Result<Self, SyntaxError> {
        if map.len() != source.len() {
            return Err(SyntaxError::MapLength { expected: source.len(), found: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&m| m >= target.len()) {
            return Err(DagError::IndexOutOfRange(bad).into());
        }
        Ok(Self { source, target, map })
    }

    /// Builds from `(source name, target name)` pairs; every source vertex must appear once.
    pub fn from_names<'a>(
        source: Dag,
        target: Dag,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, SyntaxError> {
        let mut map: Vec<Option<usize>> = vec![None; source.len()];
        for (s, t) in pairs {
            let si = source.require(s)?;
            let ti = target.require(t)?;
            if map[si].replace(ti).is_some() {
                return Err(SyntaxError::DuplicateMapping(s.to_string()));
            }
        }
        let map = map
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| SyntaxError::Unmapped(source.name(i).to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(source, target, map)
    }

    /// The identity homomorphism of a graph.
    pub fn identity(dag: &Dag) -> Self {
        Self { source: dag.clone(), target: dag.clone(), map: (0..dag.len()).collect() }
    }

    pub fn source(&self) -> &Dag {
        &self.source
    }

    pub fn target(&self) -> &Dag {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, v: usize) -> usize {
        self.map[v]
    }

    /// Source vertices mapped onto `target_vertex`, in source vertex order.
    pub fn preimage(&self, target_vertex: usize) -> Vec<usize> {
        (0..self.map.len()).filter(|&v| self.map[v] == target_vertex).collect()
    }

    pub fn is_surjective(&self) -> bool {
        let hit: BTreeSet<usize> = self.map.iter().copied().collect();
        hit.len() == self.target.len()
    }

    pub fn validate(&self) -> HomReport {
        let missing_edges = self
            .source
            .edges()
            .filter(|&(p, c)| !self.target.has_edge(self.map[p], self.map[c]))
            .map(|(p, c)| EdgeImage {
                from: self.source.name(p).to_string(),
                to: self.source.name(c).to_string(),
                image_from: self.target.name(self.map[p]).to_string(),
                image_to: self.target.name(self.map[c]).to_string(),
                collapsed: self.map[p] == self.map[c],
            })
            .collect();
        let preimage_classes = (0..self.target.len())
            .map(|t| {
                let members = self.preimage(t);
                let independent = members
                    .iter()
                    .all(|&a| members.iter().all(|&b| !self.source.has_edge(a, b)));
                PreimageClass {
                    target: self.target.name(t).to_string(),
                    members: members.iter().map(|&m| self.source.name(m).to_string()).collect(),
                    independent,
                }
            })
            .collect();
        HomReport { missing_edges, preimage_classes }
    }

    pub fn is_valid(&self) -> bool {
        self.source
            .edges()
            .all(|(p, c)| self.target.has_edge(self.map[p], self.map[c]))
    }

    /// `φ*`: a target cut set pulled back to the cut of its full preimage.
    pub fn phi_star(&self, cut: &CutSet) -> Result<CutSet, SyntaxError> {
        if !cut.belongs_to(&self.target) {
            return Err(SyntaxError::GraphMismatch);
        }
        CutSet::new(&self.source, (0..self.map.len()).filter(|&v| cut.contains(self.map[v])))
    }

    /// `ω`: a source cut set pushed forward to its image.
    pub fn omega(&self, cut: &CutSet) -> Result<CutSet, SyntaxError> {
        if !cut.belongs_to(&self.source) {
            return Err(SyntaxError::GraphMismatch);
        }
        CutSet::new(&self.target, cut.targets().iter().map(|&v| self.map[v]))
    }

    /// The induced map on diagrams.
    ///
    /// Each uncut source box for `Y` becomes the target generator box of
    /// `φ(Y)`, whose inputs are all of `PA(φ(Y))` (the images of `Y`'s parents
    /// plus any extra target parents). Boxes with the same image collapse.
    pub fn phi_on_diagram(&self, diagram: &SurgeredDiagram) -> Result<SurgeredDiagram, SyntaxError> {
        if diagram.graph != self.source {
            return Err(SyntaxError::GraphMismatch);
        }
        let support: BTreeSet<usize> = diagram.support.iter().map(|&v| self.map[v]).collect();
        let mut cut_set = BTreeSet::new();
        for &t in &support {
            let (cut, uncut): (Vec<usize>, Vec<usize>) = self
                .preimage(t)
                .into_iter()
                .filter(|v| diagram.support.contains(v))
                .partition(|v| diagram.cut_set.contains(v));
            match (cut.is_empty(), uncut.is_empty()) {
                (false, false) => {
                    return Err(SyntaxError::UnrepresentableImage {
                        macro_vertex: self.target.name(t).to_string(),
                        cut: cut.iter().map(|&v| self.source.name(v).to_string()).collect(),
                        uncut: uncut.iter().map(|&v| self.source.name(v).to_string()).collect(),
                    })
                }
                (false, true) => {
                    cut_set.insert(t);
                }
                _ => {}
            }
        }
        Ok(SurgeredDiagram::build(self.target.clone(), support, cut_set))
    }

    /// Checks `cut_{X'} · Φ = Φ · φ*(cut_{X'})` on the source graph's diagram.
    pub fn check_cut_image(&self, macro_cut: &CutSet) -> bool {
        let syn = SurgeredDiagram::syn(&self.source);
        let lhs = self.phi_on_diagram(&syn).and_then(|d| d.apply_cut(macro_cut));
        let rhs = self
            .phi_star(macro_cut)
            .and_then(|c| syn.apply_cut(&c))
            .and_then(|d| self.phi_on_diagram(&d));
        matches!((lhs, rhs), (Ok(l), Ok(r)) if l == r)
    }
}

/// Every edge-preserving vertex map from `source` to `target`, in
/// lexicographic order of the map (source vertex order), optionally
/// surjective only. Stops after `limit` results when given.
pub fn find_homomorphisms(source: &Dag, target: &Dag, surjective_only: bool, limit: Option<usize>) -> Vec<GraphHom> {
    let n = source.len();
    let mut out = Vec::new();
    let mut map = vec![usize::MAX; n];

    fn consistent(source: &Dag, target: &Dag, map: &[usize], v: usize, t: usize) -> bool {
        source.parents(v).iter().all(|&p| map[p] == usize::MAX || target.has_edge(map[p], t))
            && source.children(v).iter().all(|&c| map[c] == usize::MAX || target.has_edge(t, map[c]))
    }

    fn go(
        v: usize,
        source: &Dag,
        target: &Dag,
        map: &mut Vec<usize>,
        surjective_only: bool,
        limit: Option<usize>,
        out: &mut Vec<GraphHom>,
    ) {
        if limit.is_some_and(|l| out.len() >= l) {
            return;
        }
        if v == source.len() {
            if surjective_only {
                let hit: BTreeSet<usize> = map.iter().copied().collect();
                if hit.len() != target.len() {
                    return;
                }
            }
            out.push(GraphHom { source: source.clone(), target: target.clone(), map: map.clone() });
            return;
        }
        for t in 0..target.len() {
            if consistent(source, target, map, v, t) {
                map[v] = t;
                go(v + 1, source, target, map, surjective_only, limit, out);
                map[v] = usize::MAX;
            }
        }
    }

    go(0, source, target, &mut map, surjective_only, limit, &mut out);
    out
}
