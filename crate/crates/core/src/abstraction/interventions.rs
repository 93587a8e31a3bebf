use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{AbstractionCandidate, AbstractionError, Components};
use crate::channel::{Distribution, IndexScheme, StochasticChannel};
use crate::model::CausalModel;
use crate::syntax::CutSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Every subset of the target vertices.
    All,
    /// The empty cut and every single target vertex.
    Singletons,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutComparison {
    pub macro_cut: Vec<String>,
    pub micro_cut: Vec<String>,
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterventionReport {
    pub sweep: Sweep,
    pub tol: f64,
    pub cuts: Vec<CutComparison>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Pushes a joint distribution of the source model through the tensor of
/// grouped components, giving a joint over the target variables.
pub fn pushforward(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    joint: &Distribution,
) -> Result<Distribution, AbstractionError> {
    let comps = grouped_components(alpha)?;
    let hom = &alpha.hom;
    let micro_scheme = micro.joint_scheme()?;
    let macro_scheme = macro_.joint_scheme()?;
    let groups: Vec<Vec<usize>> = (0..macro_.len()).map(|t| hom.preimage(t)).collect();
    let group_schemes = groups
        .iter()
        .map(|g| IndexScheme::new(g.iter().map(|&v| micro.arity(v)).collect()))
        .collect::<Result<Vec<_>, _>>()?;
    // sparse columns of each component
    let support: Vec<Vec<Vec<(usize, f64)>>> = comps
        .iter()
        .map(|c| {
            (0..c.domain_arity())
                .map(|col| {
                    c.column(col).into_iter().enumerate().filter(|(_, w)| *w != 0.0).collect()
                })
                .collect()
        })
        .collect();

    let mut out = vec![0.0; macro_scheme.size()];
    let mut digits = vec![0usize; macro_.len()];
    for (i, &w) in joint.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let state = micro_scheme.decode(i);
        let cols: Vec<&Vec<(usize, f64)>> = (0..macro_.len())
            .map(|t| {
                let sub: Vec<usize> = groups[t].iter().map(|&v| state[v]).collect();
                &support[t][group_schemes[t].encode(&sub)]
            })
            .collect();
        scatter(&cols, 0, w, &mut digits, &macro_scheme, &mut out);
    }
    Ok(Distribution::from_weights(out))
}

fn scatter(
    cols: &[&Vec<(usize, f64)>],
    t: usize,
    w: f64,
    digits: &mut Vec<usize>,
    scheme: &IndexScheme,
    out: &mut [f64],
) {
    if t == cols.len() {
        out[scheme.encode(digits)] += w;
        return;
    }
    for &(row, p) in cols[t] {
        digits[t] = row;
        scatter(cols, t + 1, w * p, digits, scheme, out);
    }
}

fn grouped_components(alpha: &AbstractionCandidate) -> Result<&[StochasticChannel], AbstractionError> {
    match &alpha.components {
        Components::Grouped(c) => Ok(c),
        Components::PerMicro(_) => Err(AbstractionError::ModePrecondition {
            vertex: alpha.hom.target().name(0).to_string(),
            reason: "intervention sweeps need one component per target vertex".into(),
        }),
    }
}

/// For each target cut set `X'`: intervene on the source model at the full
/// preimage of `X'` and push the resulting joint forward through `α`; on the
/// other side intervene on the target model at `X'`, each target vertex
/// receiving its component applied to the product of its group's
/// interventions. Compares the two target joints entrywise.
pub fn check_intervention_consistency(
    micro: &CausalModel,
    macro_: &CausalModel,
    alpha: &AbstractionCandidate,
    interventions: &BTreeMap<String, Distribution>,
    sweep: Sweep,
    tol: f64,
    state_cap: usize,
) -> Result<InterventionReport, AbstractionError> {
    alpha.check(micro, macro_, f64::INFINITY)?;
    let comps = grouped_components(alpha)?;
    let hom = &alpha.hom;
    let mut dists = Vec::with_capacity(micro.len());
    for v in 0..micro.len() {
        let name = micro.dag().name(v);
        let d = interventions
            .get(name)
            .ok_or_else(|| AbstractionError::MissingIntervention(name.to_string()))?;
        if d.arity() != micro.arity(v) {
            return Err(crate::model::ModelError::InterventionArity {
                vertex: name.to_string(),
                expected: micro.arity(v),
                found: d.arity(),
            }
            .into());
        }
        dists.push(d.clone());
    }
    // the macro state a cut target is set to: its component applied to the group's interventions
    let macro_dists = (0..macro_.len())
        .map(|t| {
            let group = hom
                .preimage(t)
                .into_iter()
                .fold(Distribution::from_weights(vec![1.0]), |acc, v| acc.tensor(&dists[v]));
            comps[t].push(&group)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cuts = match sweep {
        Sweep::All => CutSet::all(macro_.dag()),
        Sweep::Singletons => CutSet::singletons(macro_.dag()),
    };
    let results = cuts
        .par_iter()
        .map(|cut| -> Result<CutComparison, AbstractionError> {
            let micro_cut = hom.phi_star(cut)?;
            let micro_targets: Vec<(usize, Distribution)> =
                micro_cut.targets().iter().map(|&v| (v, dists[v].clone())).collect();
            let micro_joint = micro.intervene_at(&micro_targets)?.joint_distribution(state_cap)?;
            let pushed = pushforward(micro, macro_, alpha, &micro_joint)?;
            let macro_targets: Vec<(usize, Distribution)> =
                cut.targets().iter().map(|&t| (t, macro_dists[t].clone())).collect();
            let macro_joint = macro_.intervene_at(&macro_targets)?.joint_distribution(state_cap)?;
            let deviation = pushed.max_abs_diff(&macro_joint).unwrap_or(f64::INFINITY);
            Ok(CutComparison {
                macro_cut: cut.names(macro_.dag()),
                micro_cut: micro_cut.names(micro.dag()),
                deviation,
                pass: deviation <= tol,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_deviation = results.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let pass = results.iter().all(|c| c.pass);
    Ok(InterventionReport { sweep, tol, cuts: results, max_deviation, pass })
}
