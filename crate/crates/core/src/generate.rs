//! Seeded random instances: models, channels with a known homogeneous
//! structure, and source/target pairs with a known abstraction.
//!
//! All functions draw from a caller-supplied RNG, so a fixed seed gives a
//! fixed instance.

use std::ops::RangeInclusive;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;
use thiserror::Error;

use crate::abstraction::{synthesize_abstraction, AbstractionCandidate, DeterministicMap};
use crate::channel::{Distribution, StochasticChannel};
use crate::dag::Dag;
use crate::model::{CausalModel, VariableSpec};
use crate::syntax::GraphHom;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Arbitrary,
    HomogeneousPair,
    EquivalencePair,
}

impl FromStr for GeneratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arbitrary" => Ok(Self::Arbitrary),
            "homogeneous-pair" => Ok(Self::HomogeneousPair),
            "equivalence-pair" => Ok(Self::EquivalencePair),
            other => Err(format!(
                "unknown kind `{other}` (expected arbitrary, homogeneous-pair or equivalence-pair)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid generator config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Number of source vertices.
    pub vertices: RangeInclusive<usize>,
    /// Arity of each source variable.
    pub arities: RangeInclusive<usize>,
    pub edge_prob: f64,
    pub kind: GeneratorKind,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { vertices: 2..=5, arities: 2..=3, edge_prob: 0.5, kind: GeneratorKind::Arbitrary, seed: 0 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.vertices.is_empty() || *self.vertices.start() == 0 {
            return Err(ConfigError(format!("vertex range {:?} must be non-empty and start at 1 or more", self.vertices)));
        }
        if self.arities.is_empty() || *self.arities.start() == 0 {
            return Err(ConfigError(format!("arity range {:?} must be non-empty and start at 1 or more", self.arities)));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(ConfigError(format!("edge probability {} is outside [0, 1]", self.edge_prob)));
        }
        Ok(())
    }
}

/// A generated source model and, for the pair kinds, a target model with
/// the abstraction relating them.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub micro: CausalModel,
    pub macro_model: Option<CausalModel>,
    pub alpha: Option<AbstractionCandidate>,
    /// The value maps behind a deterministic `alpha`.
    pub maps: Option<Vec<DeterministicMap>>,
}

pub fn generate(config: &GeneratorConfig) -> Result<Instance, ConfigError> {
    config.validate()?;
    let mut rng = rng(config.seed);
    let r = &mut rng;
    Ok(match config.kind {
        GeneratorKind::Arbitrary => {
            let n = r.random_range(config.vertices.clone());
            let dag = random_dag(r, n, config.edge_prob, "V");
            let arities: Vec<usize> = (0..n).map(|_| r.random_range(config.arities.clone())).collect();
            Instance { micro: random_model(r, dag, &arities), macro_model: None, alpha: None, maps: None }
        }
        GeneratorKind::HomogeneousPair => {
            homogeneous_pair(r, config.vertices.clone(), config.arities.clone(), config.edge_prob)
        }
        GeneratorKind::EquivalencePair => {
            equivalence_pair(r, config.vertices.clone(), config.arities.clone(), config.edge_prob)
        }
    })
}

/// Uniform on the simplex (normalized exponential draws).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    Distribution::from_weights(w.into_iter().map(|x| x / total).collect())
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> StochasticChannel {
    let cols: Vec<Distribution> = (0..cols).map(|_| random_distribution(rng, rows)).collect();
    channel_from_columns(rows, &cols)
}

fn channel_from_columns(rows: usize, cols: &[Distribution]) -> StochasticChannel {
    StochasticChannel::from_matrix(DMatrix::from_fn(rows, cols.len(), |r, c| cols[c].weights()[r]))
}

/// Random DAG on `n` vertices named `{prefix}0..`: each pair `i < j` is
/// an edge `i -> j` with probability `p`.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64, prefix: &str) -> Dag {
    let names: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let parents: Vec<Vec<usize>> = (0..n).map(|j| (0..j).filter(|_| rng.random_bool(p)).collect()).collect();
    Dag::new(names, parents).expect("forward edges form a DAG")
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, dag: Dag, arities: &[usize]) -> CausalModel {
    let variables: Vec<VariableSpec> =
        (0..dag.len()).map(|v| VariableSpec::indexed(dag.name(v), arities[v])).collect();
    let mechanisms = (0..dag.len())
        .map(|v| {
            let cols: usize = dag.parents(v).iter().map(|&p| arities[p]).product();
            random_channel(rng, arities[v], cols)
        })
        .collect();
    CausalModel::new(dag, variables, mechanisms).expect("shapes agree")
}

/// A random surjection from the product `domain` onto `codomain` values.
pub fn random_surjection<R: Rng + ?Sized>(rng: &mut R, domain: Vec<usize>, codomain: usize) -> DeterministicMap {
    let size: usize = domain.iter().product();
    assert!(codomain >= 1 && codomain <= size, "no surjection from {size} onto {codomain} values");
    let mut table: Vec<usize> = (0..codomain).chain((codomain..size).map(|_| rng.random_range(0..codomain))).collect();
    table.shuffle(rng);
    DeterministicMap::new(domain, codomain, table).expect("surjective by construction")
}

pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DeterministicMap {
    random_surjection(rng, vec![n], n)
}

/// A channel `f` built blockwise from a target channel `g`: each block is
/// `g[j][i]` times a random column-stochastic block, so `f` is homogeneous
/// with constants `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousChannel {
    pub f: StochasticChannel,
    pub g: StochasticChannel,
    pub tau_x: DeterministicMap,
    pub tau_y: DeterministicMap,
}

/// Entries of `g` are at least `min_entry`.
pub fn homogeneous_channel<R: Rng + ?Sized>(
    rng: &mut R,
    tau_x: DeterministicMap,
    tau_y: DeterministicMap,
    min_entry: f64,
) -> HomogeneousChannel {
    let (m, s) = (tau_x.codomain_arity(), tau_y.codomain_arity());
    assert!(min_entry * s as f64 <= 1.0);
    let slack = 1.0 - min_entry * s as f64;
    let g_cols: Vec<Distribution> = (0..m)
        .map(|_| {
            let d = random_distribution(rng, s);
            Distribution::from_weights(d.weights().iter().map(|w| min_entry + slack * w).collect())
        })
        .collect();
    let g = channel_from_columns(s, &g_cols);
    let y_cells = tau_y.cells();
    let mut f = DMatrix::zeros(tau_y.domain_size(), tau_x.domain_size());
    for x in 0..tau_x.domain_size() {
        let i = tau_x.apply(x);
        for (j, cell) in y_cells.iter().enumerate() {
            let spread = random_distribution(rng, cell.len());
            for (&y, w) in cell.iter().zip(spread.weights()) {
                f[(y, x)] = g.get(j, i) * w;
            }
        }
    }
    HomogeneousChannel { f: StochasticChannel::from_matrix(f), g, tau_x, tau_y }
}

/// Random sizes up to `max_x` columns and `max_y` rows, random surjective
/// cell maps, and a homogeneous channel on them.
pub fn random_homogeneous_channel<R: Rng + ?Sized>(rng: &mut R, max_x: usize, max_y: usize) -> HomogeneousChannel {
    let nx = rng.random_range(1..=max_x);
    let ny = rng.random_range(1..=max_y);
    let (m, s) = (rng.random_range(1..=nx), rng.random_range(1..=ny));
    let tau_x = random_surjection(rng, vec![nx], m);
    let tau_y = random_surjection(rng, vec![ny], s);
    homogeneous_channel(rng, tau_x, tau_y, 0.0)
}

/// Moves mass between two row cells in one column of a multi-column cell,
/// so that block column sums differ by at least `2 * delta` in that column.
/// Needs an x-cell with two or more columns, two or more y-cells and
/// `2 * delta` below every entry of `g`.
pub fn perturb_homogeneity<R: Rng + ?Sized>(
    rng: &mut R,
    h: &HomogeneousChannel,
    delta: f64,
) -> Option<StochasticChannel> {
    let wide: Vec<Vec<usize>> = h.tau_x.cells().into_iter().filter(|c| c.len() >= 2).collect();
    let y_cells = h.tau_y.cells();
    if wide.is_empty() || y_cells.len() < 2 {
        return None;
    }
    let cell = &wide[rng.random_range(0..wide.len())];
    let x = cell[rng.random_range(0..cell.len())];
    let i = h.tau_x.apply(x);
    let j = rng.random_range(0..y_cells.len());
    let k = (j + rng.random_range(1..y_cells.len())) % y_cells.len();
    let (from, to) = (h.g.get(j, i), h.g.get(k, i));
    if from <= 2.0 * delta || to <= 0.0 {
        return None;
    }
    let amount = rng.random_range(2.0 * delta..=(2.0 * delta).max(0.8 * from));
    let mut f = h.f.matrix().clone();
    for &y in &y_cells[j] {
        f[(y, x)] *= (from - amount) / from;
    }
    for &y in &y_cells[k] {
        f[(y, x)] *= (to + amount) / to;
    }
    Some(StochasticChannel::from_matrix(f))
}

/// A homogeneous channel on at least two columns per some cell and two row
/// cells, with `g` bounded away from zero, and its perturbation.
pub fn random_nonhomogeneous_channel<R: Rng + ?Sized>(
    rng: &mut R,
    max_x: usize,
    max_y: usize,
    delta: f64,
) -> (HomogeneousChannel, StochasticChannel) {
    assert!(max_x >= 2 && max_y >= 2);
    let min_entry = (4.0 * delta).max(0.02);
    loop {
        let nx = rng.random_range(2..=max_x);
        let ny = rng.random_range(2..=max_y);
        let (m, s) = (rng.random_range(1..nx), rng.random_range(2..=ny));
        let tau_x = random_surjection(rng, vec![nx], m);
        let tau_y = random_surjection(rng, vec![ny], s);
        if tau_y.codomain_arity() as f64 * min_entry > 1.0 {
            continue;
        }
        let h = homogeneous_channel(rng, tau_x, tau_y, min_entry);
        if let Some(f) = perturb_homogeneity(rng, &h, delta) {
            return (h, f);
        }
    }
}

/// Source vertices are grouped in runs of one or two onto a random target
/// DAG; every target edge becomes all source edges between the two groups.
/// Singleton groups get blockwise-homogeneous mechanisms, larger groups get
/// mechanisms constant on each parent cell. The target model is
/// synthesized from the source model and random surjective value maps.
pub fn homogeneous_pair<R: Rng + ?Sized>(
    rng: &mut R,
    vertices: RangeInclusive<usize>,
    arities: RangeInclusive<usize>,
    edge_prob: f64,
) -> Instance {
    let n = rng.random_range(vertices);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    while next < n {
        let size = if n - next >= 2 && rng.random_bool(0.5) { 2 } else { 1 };
        groups.push((next..next + size).collect());
        next += size;
    }
    let h = random_dag(rng, groups.len(), edge_prob, "M");
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut edges = Vec::new();
    for (t, members) in groups.iter().enumerate() {
        for &p in h.parents(t) {
            for &a in &groups[p] {
                for &y in members {
                    edges.push((names[a].clone(), names[y].clone()));
                }
            }
        }
    }
    let g = Dag::from_edges(&names, &edges).expect("edges follow a DAG");
    let micro_arities: Vec<usize> = (0..n).map(|_| rng.random_range(arities.clone())).collect();

    let mut maps = Vec::with_capacity(groups.len());
    let mut macro_variables = Vec::with_capacity(groups.len());
    for (t, members) in groups.iter().enumerate() {
        let domain: Vec<usize> = members.iter().map(|&v| micro_arities[v]).collect();
        let size: usize = domain.iter().product();
        let lo = (*arities.start()).min(size);
        let hi = (*arities.end()).min(size).max(lo);
        let codomain = rng.random_range(lo..=hi);
        maps.push(random_surjection(rng, domain, codomain));
        macro_variables.push(VariableSpec::indexed(h.name(t), codomain));
    }

    let mut mechanisms: Vec<Option<StochasticChannel>> = vec![None; n];
    for (t, members) in groups.iter().enumerate() {
        let tau_x = DeterministicMap::tensor_all(h.parents(t).iter().map(|&p| &maps[p]));
        if let [y] = members[..] {
            mechanisms[y] = Some(homogeneous_channel(rng, tau_x, maps[t].clone(), 0.0).f);
        } else {
            for &y in members {
                let per_cell: Vec<Distribution> =
                    (0..tau_x.codomain_arity()).map(|_| random_distribution(rng, micro_arities[y])).collect();
                let cols: Vec<Distribution> =
                    (0..tau_x.domain_size()).map(|u| per_cell[tau_x.apply(u)].clone()).collect();
                mechanisms[y] = Some(channel_from_columns(micro_arities[y], &cols));
            }
        }
    }
    let variables = (0..n).map(|v| VariableSpec::indexed(g.name(v), micro_arities[v])).collect();
    let micro = CausalModel::new(g.clone(), variables, mechanisms.into_iter().map(Option::unwrap).collect())
        .expect("shapes agree");
    let map: Vec<usize> = (0..n).map(|v| groups.iter().position(|m| m.contains(&v)).unwrap()).collect();
    let hom = GraphHom::new(g, h, map).expect("group map preserves edges");
    let s = synthesize_abstraction(&micro, &hom, &macro_variables, &maps, 1e-9)
        .expect("constructed mechanisms are homogeneous");
    Instance { micro, macro_model: Some(s.macro_model), alpha: Some(s.alpha), maps: Some(maps) }
}

/// A random model and a copy with every variable's values permuted and its
/// vertices renamed; `alpha` is the permutations.
pub fn equivalence_pair<R: Rng + ?Sized>(
    rng: &mut R,
    vertices: RangeInclusive<usize>,
    arities: RangeInclusive<usize>,
    edge_prob: f64,
) -> Instance {
    let n = rng.random_range(vertices);
    let g = random_dag(rng, n, edge_prob, "V");
    let micro_arities: Vec<usize> = (0..n).map(|_| rng.random_range(arities.clone())).collect();
    let micro = random_model(rng, g.clone(), &micro_arities);
    let perms: Vec<StochasticChannel> =
        micro_arities.iter().map(|&a| random_permutation(rng, a).to_channel()).collect();

    let names: Vec<String> = (0..n).map(|i| format!("M{i}")).collect();
    let h = Dag::new(names, (0..n).map(|v| g.parents(v).to_vec()).collect()).expect("same shape");
    let mechanisms = (0..n)
        .map(|v| {
            let inputs = g.parents(v).iter().fold(StochasticChannel::unit(), |acc, &p| acc.tensor(&perms[p]));
            let inverse = StochasticChannel::from_matrix(inputs.matrix().transpose());
            perms[v].compose(micro.mechanism(v)).and_then(|c| c.compose(&inverse)).expect("shapes agree")
        })
        .collect();
    let variables = (0..n).map(|v| VariableSpec::indexed(h.name(v), micro_arities[v])).collect();
    let macro_model = CausalModel::new(h.clone(), variables, mechanisms).expect("shapes agree");
    let hom = GraphHom::new(g, h, (0..n).collect()).expect("isomorphic graphs");
    let alpha = AbstractionCandidate::grouped(hom, perms);
    Instance { micro, macro_model: Some(macro_model), alpha: Some(alpha), maps: None }
}
