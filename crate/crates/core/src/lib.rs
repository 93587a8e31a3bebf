//! Finite causal models as column-stochastic channels on a DAG, the
//! syntactic category of surgered diagrams, and checks for when one causal
//! model abstracts another.
//!
//! The crate is organised in layers:
//!
//! - [`channel`]: stochastic matrices, distributions and product indexing;
//! - [`dag`] and [`model`]: causal models, exact joints and interventions;
//! - [`syntax`]: cut sets, surgered diagrams and graph homomorphisms;
//! - [`abstraction`]: naturality, equivalence, intervention sweeps and
//!   homogeneity-based synthesis;
//! - [`io`] and [`generate`]: file formats and seeded random instances.

pub mod abstraction;
pub mod channel;
pub mod dag;
pub mod generate;
pub mod io;
pub mod model;
pub mod syntax;

pub use abstraction::{AbstractionCandidate, AbstractionError, DeterministicMap};
pub use channel::{ChannelError, Distribution, IndexScheme, StochasticChannel};
pub use dag::{Dag, DagError};
pub use model::{CausalModel, ModelError, VariableSpec, DEFAULT_STATE_CAP};
pub use syntax::{CutSet, GraphHom, SurgeredDiagram, SyntaxError};

/// Default absolute tolerance for numeric comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default tolerance for intervention sweeps, which compare joints built
/// from many products.
pub const SWEEP_TOL: f64 = 1e-7;

/// Environment variable that overrides [`DEFAULT_TOL`] in the command-line tool.
pub const TOL_ENV: &str = "CAUSAL_ABS_TOL";
