use serde::Serialize;

use super::candidate::group_channel;
use super::{AbstractionCandidate, AbstractionError, Components};
use crate::channel::{Distribution, IndexScheme, StochasticChannel};
use crate::model::CausalModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NaturalityMode {
    /// One square per target vertex, over the merged group of its preimage.
    Grouped,
    /// One square per source mechanism, with per-source-vertex components.
    Edgewise,
}

impl std::str::FromStr for NaturalityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grouped" => Ok(Self::Grouped),
            "edgewise" => Ok(Self::Edgewise),
            other => Err(format!("unknown mode `{other}` (expected grouped or edgewise)")),
        }
    }
}

/// Both composites of one naturality square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareCheck {
    /// `"Y"` for a grouped check, `"X1,X2 -> Y"` for an edgewise one.
    pub label: String,
    /// Transform after the source mechanism.
    pub left: Vec<Vec<f64>>,
    /// Target mechanism after transforming the inputs.
    pub right: Vec<Vec<f64>>,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaturalityReport {
    pub mode: NaturalityMode,
    pub checks: Vec<SquareCheck>,
    pub max_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

impl NaturalityReport {
    fn from_checks(mode: NaturalityMode, checks: Vec<SquareCheck>, tol: f64) -> Self {
        let max_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
        let pass = checks.iter().all(|c| c.pass);
        Self { mode, checks, max_deviation, tol, pass }
    }
}

fn square(label: String, left: StochasticChannel, right: StochasticChannel, tol: f64) -> SquareCheck {
    let deviation = left.max_abs_diff(&right).unwrap_or(f64::INFINITY);
    SquareCheck { label, left: left.rows(), right: right.rows(), deviation, pass: deviation <= tol }
}

/// Checks that `α` is natural between the source model and the target model
/// precomposed with the induced diagram map.
pub fn check_naturality(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    mode: NaturalityMode,
    tol: f64,
) -> Result<NaturalityReport, AbstractionError> {
    alpha.check(micro, macro_, tol)?;
    match mode {
        NaturalityMode::Grouped => grouped(micro, macro_, alpha, tol),
        NaturalityMode::Edgewise => edgewise(micro, macro_, alpha, tol),
    }
}

fn grouped(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    tol: f64,
) -> Result<NaturalityReport, AbstractionError> {
    let comps = match &alpha.components {
        Components::Grouped(c) => c,
        Components::PerMicro(_) => {
            return Err(AbstractionError::ModePrecondition {
                vertex: macro_.dag().name(0).to_string(),
                reason: "grouped mode needs one component per target vertex".into(),
            })
        }
    };
    let hom = &alpha.hom;
    let h = macro_.dag();
    let mut checks = Vec::with_capacity(h.len());
    for t in 0..h.len() {
        let left = comps[t].compose(&group_channel(micro, hom, t)?)?;
        let inputs = h
            .parents(t)
            .iter()
            .fold(StochasticChannel::unit(), |acc, &p| acc.tensor(&comps[p]));
        let right = macro_.mechanism(t).compose(&inputs)?;
        checks.push(square(h.name(t).to_string(), left, right, tol));
    }
    Ok(NaturalityReport::from_checks(NaturalityMode::Grouped, checks, tol))
}

/// Per-source-vertex components, if the candidate provides or implies them.
fn per_micro_components(
    micro: &CausalModel,
    alpha: &AbstractionCandidate,
) -> Result<Vec<StochasticChannel>, AbstractionError> {
    match &alpha.components {
        Components::PerMicro(c) => Ok(c.clone()),
        Components::Grouped(c) => {
            let hom = &alpha.hom;
            (0..micro.len())
                .map(|v| {
                    let t = hom.image(v);
                    if hom.preimage(t).len() == 1 {
                        Ok(c[t].clone())
                    } else {
                        Err(AbstractionError::ModePrecondition {
                            vertex: micro.dag().name(v).to_string(),
                            reason: format!(
                                "edgewise mode needs per-vertex components; `{}` merges several source vertices",
                                hom.target().name(t)
                            ),
                        })
                    }
                })
                .collect()
        }
    }
}

fn edgewise(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    tol: f64,
) -> Result<NaturalityReport, AbstractionError> {
    let comps = per_micro_components(micro, alpha)?;
    let hom = &alpha.hom;
    let (g, h) = (micro.dag(), macro_.dag());
    let mut checks = Vec::with_capacity(g.len());
    for y in 0..g.len() {
        let ty = hom.image(y);
        let micro_parents = g.parents(y);
        let macro_parents = h.parents(ty);
        // each target parent must be the image of exactly one source parent
        let mut source_of = Vec::with_capacity(macro_parents.len());
        for &tp in macro_parents {
            let hits: Vec<usize> = micro_parents.iter().copied().filter(|&p| hom.image(p) == tp).collect();
            if hits.len() != 1 {
                return Err(AbstractionError::ModePrecondition {
                    vertex: g.name(y).to_string(),
                    reason: format!(
                        "target parent `{}` of `{}` is the image of {} source parents, edgewise mode needs exactly one",
                        h.name(tp),
                        h.name(ty),
                        hits.len()
                    ),
                });
            }
            source_of.push(micro_parents.iter().position(|&p| p == hits[0]).unwrap());
        }
        if let Some(&stray) = micro_parents.iter().find(|&&p| !macro_parents.contains(&hom.image(p))) {
            return Err(AbstractionError::ModePrecondition {
                vertex: g.name(y).to_string(),
                reason: format!("parent `{}` does not map to a parent of `{}`", g.name(stray), h.name(ty)),
            });
        }

        let left = comps[y].compose(micro.mechanism(y))?;
        // transform the source parents and reorder them into target parent order
        let pa_scheme = micro.parent_scheme(y);
        let mut cols = Vec::with_capacity(pa_scheme.size());
        for u in 0..pa_scheme.size() {
            let digits = pa_scheme.decode(u);
            let col = source_of.iter().fold(Distribution::from_weights(vec![1.0]), |acc, &k| {
                acc.tensor(&Distribution::from_weights(comps[micro_parents[k]].column(digits[k])))
            });
            cols.push(col);
        }
        let out = IndexScheme::new(macro_parents.iter().map(|&p| macro_.arity(p)).collect())?.size();
        let transform = StochasticChannel::from_matrix(nalgebra::DMatrix::from_fn(out, cols.len(), |r, c| {
            cols[c].weights()[r]
        }));
        let right = macro_.mechanism(ty).compose(&transform)?;
        let label = if micro_parents.is_empty() {
            g.name(y).to_string()
        } else {
            let names: Vec<&str> = micro_parents.iter().map(|&p| g.name(p)).collect();
            format!("{} -> {}", names.join(","), g.name(y))
        };
        checks.push(square(label, left, right, tol));
    }
    Ok(NaturalityReport::from_checks(NaturalityMode::Edgewise, checks, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub naturality: NaturalityReport,
    /// Components (by vertex name) that are not permutation matrices.
    pub non_permutations: Vec<String>,
}

/// Natural and every component a permutation. Grouped components are
/// checked in grouped mode, per-vertex components in edgewise mode.
pub fn check_equivalence(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    tol: f64,
) -> Result<EquivalenceReport, AbstractionError> {
    let (mode, list, names) = match &alpha.components {
        Components::Grouped(c) => (NaturalityMode::Grouped, c, macro_.dag().names()),
        Components::PerMicro(c) => (NaturalityMode::Edgewise, c, micro.dag().names()),
    };
    let naturality = check_naturality(micro, macro_, alpha, mode, tol)?;
    let non_permutations: Vec<String> = list
        .iter()
        .zip(names)
        .filter(|(c, _)| !c.is_permutation(tol))
        .map(|(_, n)| n.clone())
        .collect();
    Ok(EquivalenceReport { equivalent: naturality.pass && non_permutations.is_empty(), naturality, non_permutations })
}
