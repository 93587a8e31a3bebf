//! The semantic layer: transformation channels `α` between a fine-grained
//! and a coarse-grained model, naturality and equivalence checks,
//! intervention sweeps, causal homogeneity and synthesis of coarse models.

mod candidate;
mod homogeneity;
mod interventions;
mod naturality;
mod synthesis;
mod tau;

use thiserror::Error;

use crate::channel::{ChannelError, StochasticViolation};
use crate::model::ModelError;
use crate::syntax::SyntaxError;

pub use candidate::{alpha_from_tau, group_channel, group_inputs, AbstractionCandidate, Components};
pub use homogeneity::{
    check_homogeneity, partition_blocks, synthesize_macro_mechanism, BlockFailure, BlockPartition,
    HomogeneityReport,
};
pub use interventions::{check_intervention_consistency, pushforward, CutComparison, InterventionReport, Sweep};
pub use naturality::{
    check_equivalence, check_naturality, EquivalenceReport, NaturalityMode, NaturalityReport, SquareCheck,
};
pub use synthesis::{synthesize_abstraction, Synthesis, VertexFailure};
pub use tau::DeterministicMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractionError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("map is not surjective onto {codomain} values (missing {missing:?})")]
    NotSurjective { codomain: usize, missing: Vec<usize> },
    #[error("map table has {found} entries, domain has {expected} states")]
    TableLength { expected: usize, found: usize },
    #[error("map sends state {index} to {value}, outside a codomain of {codomain} values")]
    TableValue { index: usize, value: usize, codomain: usize },
    #[error("map for `{vertex}` has domain factors {found:?}, preimage arities are {expected:?}")]
    DomainMismatch { vertex: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("map for `{vertex}` has {found} values, variable has {expected}")]
    CodomainMismatch { vertex: String, expected: usize, found: usize },
    #[error("models do not match the graphs of the homomorphism")]
    GraphMismatch,
    #[error("homomorphism is invalid: {0}")]
    InvalidHom(String),
    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("component for `{vertex}` is {}x{}, expected {}x{}", found.0, found.1, expected.0, expected.1)]
    ComponentShape { vertex: String, expected: (usize, usize), found: (usize, usize) },
    #[error("component for `{vertex}`: {violation}")]
    ComponentNotStochastic { vertex: String, violation: StochasticViolation },
    #[error("mode precondition fails at `{vertex}`: {reason}")]
    ModePrecondition { vertex: String, reason: String },
    #[error("parent `{parent}` of `{vertex}` is not in the preimage of any target parent")]
    ParentOutsideGroupInputs { vertex: String, parent: String },
    #[error("target vertex `{vertex}` has parent `{parent}` that no source edge maps onto")]
    ExtraMacroParent { vertex: String, parent: String },
    #[error("channel is {rows}x{cols} but the maps cover {tau_y} rows and {tau_x} columns")]
    PartitionShape { rows: usize, cols: usize, tau_x: usize, tau_y: usize },
    #[error("channel is not causally homogeneous (worst deviation {:.3e})", .0.worst_deviation)]
    NotHomogeneous(Box<HomogeneityReport>),
    #[error("not homogeneous at {}", .0.iter().map(|f| f.vertex.as_str()).collect::<Vec<_>>().join(", "))]
    SynthesisFailed(Vec<VertexFailure>),
    #[error("no intervention distribution for `{0}`")]
    MissingIntervention(String),
}
