use nalgebra::DMatrix;

use super::{AbstractionError, DeterministicMap};
use crate::channel::{Distribution, IndexScheme, StochasticChannel};
use crate::model::CausalModel;
use crate::syntax::GraphHom;

/// How the components of `α` are indexed.
#[derive(Debug, Clone, PartialEq)]
pub enum Components {
    /// One channel per target vertex, from the product of its preimage
    /// (source vertex order) to the target variable.
    Grouped(Vec<StochasticChannel>),
    /// One channel per source vertex `Y`, from `Y` to `φ(Y)`.
    PerMicro(Vec<StochasticChannel>),
}

/// A vertex map together with a family of transformation channels `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractionCandidate {
    pub hom: GraphHom,
    pub components: Components,
}

impl AbstractionCandidate {
    pub fn grouped(hom: GraphHom, components: Vec<StochasticChannel>) -> Self {
        Self { hom, components: Components::Grouped(components) }
    }

    pub fn per_micro(hom: GraphHom, components: Vec<StochasticChannel>) -> Self {
        Self { hom, components: Components::PerMicro(components) }
    }

    /// Checks the graphs against the models, the component count, shapes and stochasticity.
    pub fn check(&self, micro: &CausalModel, macro_: &CausalModel, tol: f64) -> Result<(), AbstractionError> {
        if micro.dag() != self.hom.source() || macro_.dag() != self.hom.target() {
            return Err(AbstractionError::GraphMismatch);
        }
        let (list, expected_count) = match &self.components {
            Components::Grouped(c) => (c, macro_.len()),
            Components::PerMicro(c) => (c, micro.len()),
        };
        if list.len() != expected_count {
            return Err(AbstractionError::ComponentCount { expected: expected_count, found: list.len() });
        }
        for (k, comp) in list.iter().enumerate() {
            let (name, expected) = match &self.components {
                Components::Grouped(_) => (
                    macro_.dag().name(k),
                    (macro_.arity(k), group_arity(micro, &self.hom.preimage(k))),
                ),
                Components::PerMicro(_) => {
                    (micro.dag().name(k), (macro_.arity(self.hom.image(k)), micro.arity(k)))
                }
            };
            let found = (comp.codomain_arity(), comp.domain_arity());
            if found != expected {
                return Err(AbstractionError::ComponentShape { vertex: name.to_string(), expected, found });
            }
            if let Some(violation) = comp.violations(tol).into_iter().next() {
                return Err(AbstractionError::ComponentNotStochastic { vertex: name.to_string(), violation });
            }
        }
        Ok(())
    }

    /// True when every component is a 0/1 matrix.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        let list = match &self.components {
            Components::Grouped(c) | Components::PerMicro(c) => c,
        };
        list.iter().all(|c| {
            (0..c.domain_arity()).all(|col| {
                let column = c.column(col);
                column.iter().filter(|v| (*v - 1.0).abs() <= tol).count() == 1
                    && column.iter().filter(|v| v.abs() <= tol).count() == column.len() - 1
            })
        })
    }
}

pub(crate) fn group_arity(model: &CausalModel, members: &[usize]) -> usize {
    members.iter().map(|&m| model.arity(m)).product()
}

/// Assembles the 0/1 components induced by one deterministic map per target vertex.
pub fn alpha_from_tau(
    micro: &CausalModel,
    hom: &GraphHom,
    maps: &[DeterministicMap],
) -> Result<AbstractionCandidate, AbstractionError> {
    if micro.dag() != hom.source() {
        return Err(AbstractionError::GraphMismatch);
    }
    if maps.len() != hom.target().len() {
        return Err(AbstractionError::ComponentCount { expected: hom.target().len(), found: maps.len() });
    }
    let mut components = Vec::with_capacity(maps.len());
    for (t, map) in maps.iter().enumerate() {
        let expected: Vec<usize> = hom.preimage(t).iter().map(|&m| micro.arity(m)).collect();
        if map.domain_factors() != expected.as_slice() {
            return Err(AbstractionError::DomainMismatch {
                vertex: hom.target().name(t).to_string(),
                expected,
                found: map.domain_factors().to_vec(),
            });
        }
        components.push(map.to_channel());
    }
    Ok(AbstractionCandidate::grouped(hom.clone(), components))
}

/// Source variables feeding the merged group of `macro_vertex`: the
/// preimages of its target parents, parent by parent in target parent order,
/// each preimage in source vertex order.
pub fn group_inputs(hom: &GraphHom, macro_vertex: usize) -> Vec<usize> {
    hom.target()
        .parents(macro_vertex)
        .iter()
        .flat_map(|&p| hom.preimage(p))
        .collect()
}

/// The source model's mechanisms for the merged group of `macro_vertex`,
/// tensored together: a channel from the product of the preimages of the
/// target parents (see [`group_inputs`]) to the product of the group.
///
/// Each member reads only its own parents out of that input; members
/// without parents contribute their prior. An empty group is the discard
/// map onto a singleton.
pub fn group_channel(
    model: &CausalModel,
    hom: &GraphHom,
    macro_vertex: usize,
) -> Result<StochasticChannel, AbstractionError> {
    if model.dag() != hom.source() {
        return Err(AbstractionError::GraphMismatch);
    }
    let members = hom.preimage(macro_vertex);
    let inputs = group_inputs(hom, macro_vertex);
    let in_scheme = IndexScheme::new(inputs.iter().map(|&v| model.arity(v)).collect())?;
    let out_size = IndexScheme::new(members.iter().map(|&v| model.arity(v)).collect())?.size();

    // position of each member's parents within the input tuple
    let mut parent_slots = Vec::with_capacity(members.len());
    for &y in &members {
        let slots = model
            .dag()
            .parents(y)
            .iter()
            .map(|&p| {
                inputs.iter().position(|&i| i == p).ok_or_else(|| AbstractionError::ParentOutsideGroupInputs {
                    vertex: model.dag().name(y).to_string(),
                    parent: model.dag().name(p).to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        parent_slots.push(slots);
    }
    let parent_schemes: Vec<IndexScheme> = members.iter().map(|&y| model.parent_scheme(y)).collect();

    let mut m = DMatrix::zeros(out_size, in_scheme.size());
    for u in 0..in_scheme.size() {
        let digits = in_scheme.decode(u);
        let mut col = Distribution::from_weights(vec![1.0]);
        for (k, &y) in members.iter().enumerate() {
            let pa: Vec<usize> = parent_slots[k].iter().map(|&s| digits[s]).collect();
            let mech_col = model.mechanism(y).column(parent_schemes[k].encode(&pa));
            col = col.tensor(&Distribution::from_weights(mech_col));
        }
        m.set_column(u, &nalgebra::DVector::from_column_slice(col.weights()));
    }
    Ok(StochasticChannel::from_matrix(m))
}
