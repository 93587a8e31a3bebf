use std::collections::BTreeSet;

use serde::Serialize;

use super::candidate::{alpha_from_tau, group_channel};
use super::homogeneity::{check_homogeneity, HomogeneityReport};
use super::{AbstractionCandidate, AbstractionError, DeterministicMap};
use crate::channel::{IndexScheme, StochasticChannel};
use crate::model::{CausalModel, VariableSpec};
use crate::syntax::GraphHom;

/// One target vertex whose group mechanism is not homogeneous.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexFailure {
    pub vertex: String,
    /// Target parents whose joint cells index the column blocks.
    pub parents: Vec<String>,
    /// Human labels of the column cells, e.g. `TC=t1`.
    pub x_cell_labels: Vec<String>,
    /// Human labels of the row cells, e.g. `HD=y1`.
    pub y_cell_labels: Vec<String>,
    pub report: HomogeneityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub macro_model: CausalModel,
    pub alpha: AbstractionCandidate,
}

fn cell_labels(vars: &[&VariableSpec]) -> Vec<String> {
    let scheme = IndexScheme::new(vars.iter().map(|v| v.arity()).collect()).expect("small product");
    scheme
        .states()
        .map(|digits| {
            if vars.is_empty() {
                return "*".to_string();
            }
            vars.iter()
                .zip(digits)
                .map(|(v, d)| format!("{}={}", v.name, v.values[d]))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

/// Builds the coarse-grained model from one deterministic map per target
/// vertex: each target mechanism is read off the block column sums of the
/// merged source mechanism, provided every such mechanism is homogeneous.
///
/// There is no shortcut for a target that reuses a mechanism pushed forward
/// from another level; synthesize the intermediate model first and chain.
pub fn synthesize_abstraction(
    micro: &CausalModel,
    hom: &GraphHom,
    macro_variables: &[VariableSpec],
    maps: &[DeterministicMap],
    tol: f64,
) -> Result<Synthesis, AbstractionError> {
    let report = hom.validate();
    if let Some(e) = report.missing_edges.first() {
        return Err(AbstractionError::InvalidHom(format!(
            "edge {} -> {} maps to {} -> {}, which is not an edge",
            e.from, e.to, e.image_from, e.image_to
        )));
    }
    let h = hom.target();
    if macro_variables.len() != h.len() {
        return Err(AbstractionError::ComponentCount { expected: h.len(), found: macro_variables.len() });
    }
    for (t, v) in macro_variables.iter().enumerate() {
        if v.name != h.name(t) {
            return Err(AbstractionError::GraphMismatch);
        }
        if maps.get(t).is_some_and(|m| m.codomain_arity() != v.arity()) {
            return Err(AbstractionError::CodomainMismatch {
                vertex: v.name.clone(),
                expected: v.arity(),
                found: maps[t].codomain_arity(),
            });
        }
    }
    let alpha = alpha_from_tau(micro, hom, maps)?;

    // no extra target parents: PA(t) must be exactly the image of the group's parents
    for t in 0..h.len() {
        let hit: BTreeSet<usize> = hom
            .preimage(t)
            .iter()
            .flat_map(|&y| micro.dag().parents(y).iter().map(|&p| hom.image(p)))
            .collect();
        if let Some(&extra) = h.parents(t).iter().find(|p| !hit.contains(p)) {
            return Err(AbstractionError::ExtraMacroParent {
                vertex: h.name(t).to_string(),
                parent: h.name(extra).to_string(),
            });
        }
    }

    let mut mechanisms = Vec::with_capacity(h.len());
    let mut failures = Vec::new();
    for t in 0..h.len() {
        let f = group_channel(micro, hom, t)?;
        let tau_x = DeterministicMap::tensor_all(h.parents(t).iter().map(|&p| &maps[p]));
        let report = check_homogeneity(&f, &tau_x, &maps[t], tol)?;
        if report.pass {
            let (s, m) = (report.constants.len(), report.constants[0].len());
            mechanisms.push(StochasticChannel::from_matrix(nalgebra::DMatrix::from_fn(s, m, |j, i| {
                report.constants[j][i]
            })));
        } else {
            let parents: Vec<&VariableSpec> = h.parents(t).iter().map(|&p| &macro_variables[p]).collect();
            failures.push(VertexFailure {
                vertex: h.name(t).to_string(),
                parents: parents.iter().map(|v| v.name.clone()).collect(),
                x_cell_labels: cell_labels(&parents),
                y_cell_labels: cell_labels(&[&macro_variables[t]]),
                report,
            });
            mechanisms.push(StochasticChannel::unit());
        }
    }
    if !failures.is_empty() {
        return Err(AbstractionError::SynthesisFailed(failures));
    }
    let macro_model = CausalModel::new(h.clone(), macro_variables.to_vec(), mechanisms)?;
    Ok(Synthesis { macro_model, alpha })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::naturality::{check_equivalence, check_naturality, NaturalityMode};
    use super::*;
    use crate::dag::Dag;

    fn hd(second: [f64; 2]) -> StochasticChannel {
        ch(&[&[0.2, second[0], 0.2, 0.7], &[0.8, second[1], 0.8, 0.3]])
    }

    #[test]
    fn heart_merge_with_equal_columns() {
        let micro = heart_micro(hd([0.2, 0.8]));
        let s = synthesize_abstraction(&micro, &heart_hom(), &heart_macro_variables(), &heart_maps(), 1e-9).unwrap();
        let m = &s.macro_model;
        assert_eq!(m.mechanism(0), micro.mechanism(0));
        let tc = m.mechanism(1);
        assert!((tc.get(0, 0) - 0.82).abs() < 1e-12);
        assert!((tc.get(0, 1) - 0.72).abs() < 1e-12);
        let hd = m.mechanism(2);
        assert!((hd.get(0, 0) - 0.2).abs() < 1e-12 && (hd.get(0, 1) - 0.7).abs() < 1e-12);
        let r = check_naturality(&micro, m, &s.alpha, NaturalityMode::Grouped, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn heart_merge_with_unequal_columns_names_cells() {
        let micro = heart_micro(hd([0.25, 0.75]));
        match synthesize_abstraction(&micro, &heart_hom(), &heart_macro_variables(), &heart_maps(), 1e-9) {
            Err(AbstractionError::SynthesisFailed(failures)) => {
                assert_eq!(failures.len(), 1);
                let f = &failures[0];
                assert_eq!(f.vertex, "HD");
                assert_eq!(f.parents, ["TC"]);
                assert_eq!(f.x_cell_labels, ["TC=t1", "TC=t2"]);
                assert_eq!(f.y_cell_labels, ["HD=y1", "HD=y2"]);
                assert!(f.report.failures.iter().all(|b| b.x_cell == 0));
                assert!((f.report.worst_deviation - 0.05 * 2.0 / 3.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bijective_maps_give_equivalence() {
        let micro = heart_micro(hd([0.6, 0.4]));
        let hom = crate::syntax::GraphHom::identity(micro.dag());
        let maps = vec![
            DeterministicMap::new(vec![2], 2, vec![1, 0]).unwrap(),
            DeterministicMap::identity(2),
            DeterministicMap::new(vec![2], 2, vec![1, 0]).unwrap(),
            DeterministicMap::new(vec![2], 2, vec![1, 0]).unwrap(),
        ];
        let s = synthesize_abstraction(&micro, &hom, micro.variables(), &maps, 1e-12).unwrap();
        assert!(check_equivalence(&micro, &s.macro_model, &s.alpha, 1e-12).unwrap().equivalent);
    }

    #[test]
    fn trivial_target() {
        let micro = heart_micro(hd([0.6, 0.4]));
        let g = micro.dag().clone();
        let h = Dag::from_edges(&["Diet", "TC", "HD"], &[("Diet", "TC"), ("TC", "HD")]).unwrap();
        let hom = heart_hom();
        assert_eq!(hom.target(), &h);
        let vars: Vec<VariableSpec> = ["Diet", "TC", "HD"].iter().map(|n| var(n, &["*"])).collect();
        let maps: Vec<DeterministicMap> =
            (0..3).map(|t| DeterministicMap::constant(hom.preimage(t).iter().map(|&v| micro.arity(v)).collect())).collect();
        let s = synthesize_abstraction(&micro, &hom, &vars, &maps, 1e-12).unwrap();
        assert!(s.macro_model.mechanisms().iter().all(|m| m == &StochasticChannel::unit()));
        assert_eq!(s.alpha.hom.source(), &g);
    }

    #[test]
    fn extra_macro_parent_is_refused() {
        let g = Dag::from_edges(&["A", "C"], &[("A", "C")]).unwrap();
        let h = Dag::from_edges(&["P", "R", "Q"], &[("P", "Q"), ("R", "Q")]).unwrap();
        let hom = GraphHom::from_names(g.clone(), h, [("A", "P"), ("C", "Q")]).unwrap();
        let micro = CausalModel::new(
            g,
            vec![var("A", &["0", "1"]), var("C", &["0", "1"])],
            vec![ch(&[&[0.5], &[0.5]]), ch(&[&[0.9, 0.2], &[0.1, 0.8]])],
        )
        .unwrap();
        let vars = vec![var("P", &["0", "1"]), var("R", &["r"]), var("Q", &["0", "1"])];
        let maps = vec![DeterministicMap::identity(2), DeterministicMap::constant(vec![]), DeterministicMap::identity(2)];
        match synthesize_abstraction(&micro, &hom, &vars, &maps, 1e-9) {
            Err(AbstractionError::ExtraMacroParent { vertex, parent }) => assert_eq!((vertex.as_str(), parent.as_str()), ("Q", "R")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn codomain_must_match_variable() {
        let micro = heart_micro(hd([0.2, 0.8]));
        let mut maps = heart_maps();
        maps[2] = DeterministicMap::constant(vec![2]);
        assert!(matches!(
            synthesize_abstraction(&micro, &heart_hom(), &heart_macro_variables(), &maps, 1e-9),
            Err(AbstractionError::CodomainMismatch { .. })
        ));
    }
}
