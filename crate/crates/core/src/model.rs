//! Causal models: a DAG, a finite value set per vertex, and one mechanism
//! channel per vertex from the product of its (ordered) parents.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{fmt_num, ChannelError, Distribution, IndexScheme, StochasticChannel, StochasticViolation};
use crate::dag::{Dag, DagError};

/// Default cap on the number of joint states enumerated.
pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("expected {expected} {what}, found {found}")]
    Count { what: &'static str, expected: usize, found: usize },
    #[error("variable #{index} is named `{found}` but graph vertex is `{expected}`")]
    NameMismatch { index: usize, expected: String, found: String },
    #[error("model is invalid: {0}")]
    Invalid(String),
    #[error("joint state space has {states} states, above the cap of {cap}")]
    StateSpaceTooLarge { states: String, cap: usize },
    #[error("intervention on `{vertex}` has arity {found}, variable has {expected} values")]
    InterventionArity { vertex: String, expected: usize, found: usize },
    #[error("factor {factor} out of range for a product of {len} factors")]
    UnknownFactor { factor: usize, len: usize },
    #[error("variable `{vertex}` has no value `{value}`")]
    UnknownValue { vertex: String, value: String },
    #[error("variable `{vertex}` has no preset `{preset}`")]
    UnknownPreset { vertex: String, preset: String },
}

/// A finite variable: a name and an ordered list of value labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableSpec {
    pub name: String,
    pub values: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { name: name.into(), values: values.into_iter().map(Into::into).collect() }
    }

    /// Values labelled `0..arity`.
    pub fn indexed(name: impl Into<String>, arity: usize) -> Self {
        Self::new(name, (0..arity).map(|i| i.to_string()))
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// One failed invariant found by [`CausalModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelViolation {
    EmptyVariable { vertex: String },
    DuplicateValue { vertex: String, value: String },
    CodomainArity { vertex: String, expected: usize, found: usize },
    DomainArity { vertex: String, expected: usize, found: usize },
    Mechanism { vertex: String, violation: StochasticViolation },
    PresetArity { vertex: String, preset: String, expected: usize, found: usize },
    Preset { vertex: String, preset: String, violation: StochasticViolation },
}

impl std::fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use ModelViolation::*;
        match self {
            EmptyVariable { vertex } => write!(f, "variable {vertex} has no values"),
            DuplicateValue { vertex, value } => {
                write!(f, "variable {vertex} lists value `{value}` more than once")
            }
            CodomainArity { vertex, expected, found } => {
                write!(f, "mechanism {vertex}: codomain arity {found} ≠ {expected}")
            }
            DomainArity { vertex, expected, found } => {
                write!(f, "mechanism {vertex}: domain arity {found} ≠ {expected}")
            }
            Mechanism { vertex, violation } => match violation {
                StochasticViolation::ColumnSum { col, sum } => {
                    write!(f, "column {col} of mechanism {vertex} sums to {}", fmt_num(*sum))
                }
                StochasticViolation::NegativeEntry { row, col, value } => write!(
                    f,
                    "entry ({row}, {col}) of mechanism {vertex} is negative ({})",
                    fmt_num(*value)
                ),
            },
            PresetArity { vertex, preset, expected, found } => {
                write!(f, "preset {vertex}@{preset}: arity {found} ≠ {expected}")
            }
            Preset { vertex, preset, violation } => write!(f, "preset {vertex}@{preset}: {violation}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelReport {
    pub violations: Vec<ModelViolation>,
}

impl ModelReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A finite causal model (equivalently, a discrete Bayesian network).
///
/// Construction only checks that the pieces line up with the graph;
/// arities and stochasticity are checked by [`CausalModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CausalModel {
    dag: Dag,
    variables: Vec<VariableSpec>,
    mechanisms: Vec<StochasticChannel>,
    presets: Vec<BTreeMap<String, Distribution>>,
}

impl CausalModel {
    pub fn new(
        dag: Dag,
        variables: Vec<VariableSpec>,
        mechanisms: Vec<StochasticChannel>,
    ) -> Result<Self, ModelError> {
        let presets = vec![BTreeMap::new(); dag.len()];
        Self::with_presets(dag, variables, mechanisms, presets)
    }

    pub fn with_presets(
        dag: Dag,
        variables: Vec<VariableSpec>,
        mechanisms: Vec<StochasticChannel>,
        presets: Vec<BTreeMap<String, Distribution>>,
    ) -> Result<Self, ModelError> {
        let n = dag.len();
        for (what, found) in [
            ("variables", variables.len()),
            ("mechanisms", mechanisms.len()),
            ("preset tables", presets.len()),
        ] {
            if found != n {
                return Err(ModelError::Count { what, expected: n, found });
            }
        }
        for (i, v) in variables.iter().enumerate() {
            if v.name != dag.name(i) {
                return Err(ModelError::NameMismatch {
                    index: i,
                    expected: dag.name(i).to_string(),
                    found: v.name.clone(),
                });
            }
        }
        Ok(Self { dag, variables, mechanisms, presets })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn len(&self) -> usize {
        self.dag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dag.is_empty()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, v: usize) -> &VariableSpec {
        &self.variables[v]
    }

    pub fn arity(&self, v: usize) -> usize {
        self.variables[v].arity()
    }

    pub fn arities(&self) -> Vec<usize> {
        self.variables.iter().map(VariableSpec::arity).collect()
    }

    pub fn mechanism(&self, v: usize) -> &StochasticChannel {
        &self.mechanisms[v]
    }

    pub fn mechanisms(&self) -> &[StochasticChannel] {
        &self.mechanisms
    }

    pub fn presets(&self, v: usize) -> &BTreeMap<String, Distribution> {
        &self.presets[v]
    }

    pub fn vertex(&self, name: &str) -> Result<usize, ModelError> {
        Ok(self.dag.require(name)?)
    }

    /// Mixed-radix scheme over the ordered parents of `v`.
    pub fn parent_scheme(&self, v: usize) -> IndexScheme {
        IndexScheme::new(self.dag.parents(v).iter().map(|&p| self.arity(p)).collect())
            .expect("parent product fits in usize")
    }

    /// Scheme of the joint state space, in vertex order.
    pub fn joint_scheme(&self) -> Result<IndexScheme, ModelError> {
        Ok(IndexScheme::new(self.arities())?)
    }

    pub fn point_mass(&self, vertex: &str, value: &str) -> Result<Distribution, ModelError> {
        let v = self.vertex(vertex)?;
        let idx = self.variables[v].value_index(value).ok_or_else(|| ModelError::UnknownValue {
            vertex: vertex.to_string(),
            value: value.to_string(),
        })?;
        Ok(Distribution::point_mass(self.arity(v), idx))
    }

    pub fn preset(&self, vertex: &str, name: &str) -> Result<&Distribution, ModelError> {
        let v = self.vertex(vertex)?;
        self.presets[v].get(name).ok_or_else(|| ModelError::UnknownPreset {
            vertex: vertex.to_string(),
            preset: name.to_string(),
        })
    }

    /// Lists every violated invariant; an empty report means the model is a
    /// valid assignment of channels to the graph's generators.
    pub fn validate(&self, tol: f64) -> ModelReport {
        let mut violations = Vec::new();
        for v in 0..self.len() {
            let name = self.dag.name(v).to_string();
            let spec = &self.variables[v];
            if spec.values.is_empty() {
                violations.push(ModelViolation::EmptyVariable { vertex: name.clone() });
            }
            let mut seen = BTreeSet::new();
            for val in &spec.values {
                if !seen.insert(val) {
                    violations.push(ModelViolation::DuplicateValue { vertex: name.clone(), value: val.clone() });
                }
            }
            let mech = &self.mechanisms[v];
            let dom = self
                .dag
                .parents(v)
                .iter()
                .try_fold(1usize, |acc, &p| acc.checked_mul(self.arity(p)))
                .unwrap_or(usize::MAX);
            let mut shape_ok = true;
            if mech.codomain_arity() != spec.arity() {
                shape_ok = false;
                violations.push(ModelViolation::CodomainArity {
                    vertex: name.clone(),
                    expected: spec.arity(),
                    found: mech.codomain_arity(),
                });
            }
            if mech.domain_arity() != dom {
                shape_ok = false;
                violations.push(ModelViolation::DomainArity {
                    vertex: name.clone(),
                    expected: dom,
                    found: mech.domain_arity(),
                });
            }
            if shape_ok {
                for violation in mech.violations(tol) {
                    violations.push(ModelViolation::Mechanism { vertex: name.clone(), violation });
                }
            }
            for (preset, d) in &self.presets[v] {
                if d.arity() != spec.arity() {
                    violations.push(ModelViolation::PresetArity {
                        vertex: name.clone(),
                        preset: preset.clone(),
                        expected: spec.arity(),
                        found: d.arity(),
                    });
                } else {
                    for violation in d.violations(tol) {
                        violations.push(ModelViolation::Preset {
                            vertex: name.clone(),
                            preset: preset.clone(),
                            violation,
                        });
                    }
                }
            }
        }
        ModelReport { violations }
    }

    fn check_shapes(&self) -> Result<(), ModelError> {
        for v in 0..self.len() {
            let mech = &self.mechanisms[v];
            let dom = self.parent_scheme(v).size();
            if mech.codomain_arity() != self.arity(v) || mech.domain_arity() != dom {
                return Err(ModelError::Invalid(format!(
                    "mechanism {} is {}x{}, expected {}x{}",
                    self.dag.name(v),
                    mech.codomain_arity(),
                    mech.domain_arity(),
                    self.arity(v),
                    dom
                )));
            }
        }
        Ok(())
    }

    /// Exact joint distribution over all variables in vertex order:
    /// `P(v) = Π_Y P(y | pa(y))`.
    pub fn joint_distribution(&self, state_cap: usize) -> Result<Distribution, ModelError> {
        self.check_shapes()?;
        let scheme = match IndexScheme::new(self.arities()) {
            Ok(s) if s.size() <= state_cap => s,
            Ok(s) => {
                return Err(ModelError::StateSpaceTooLarge { states: s.size().to_string(), cap: state_cap })
            }
            Err(_) => {
                return Err(ModelError::StateSpaceTooLarge { states: "> usize::MAX".into(), cap: state_cap })
            }
        };
        let parent_schemes: Vec<IndexScheme> = (0..self.len()).map(|v| self.parent_scheme(v)).collect();
        let weights: Vec<f64> = (0..scheme.size())
            .into_par_iter()
            .map(|i| {
                let state = scheme.decode(i);
                let mut p = 1.0;
                // fixed multiplication order: vertex order
                for v in 0..self.len() {
                    let pa: Vec<usize> = self.dag.parents(v).iter().map(|&q| state[q]).collect();
                    p *= self.mechanisms[v].get(state[v], parent_schemes[v].encode(&pa));
                    if p == 0.0 {
                        break;
                    }
                }
                p
            })
            .collect();
        Ok(Distribution::from_weights(weights))
    }

    /// Surgery: each target becomes exogenous with the given distribution as
    /// its mechanism; everything else is unchanged.
    pub fn intervene(&self, targets: &BTreeMap<String, Distribution>) -> Result<CausalModel, ModelError> {
        let mut resolved = Vec::with_capacity(targets.len());
        for (name, d) in targets {
            resolved.push((self.vertex(name)?, d.clone()));
        }
        self.intervene_at(&resolved)
    }

    /// Index-keyed form of [`CausalModel::intervene`].
    pub fn intervene_at(&self, targets: &[(usize, Distribution)]) -> Result<CausalModel, ModelError> {
        let mut mechanisms = self.mechanisms.clone();
        let mut cut = Vec::with_capacity(targets.len());
        for (v, d) in targets {
            if *v >= self.len() {
                return Err(DagError::IndexOutOfRange(*v).into());
            }
            if d.arity() != self.arity(*v) {
                return Err(ModelError::InterventionArity {
                    vertex: self.dag.name(*v).to_string(),
                    expected: self.arity(*v),
                    found: d.arity(),
                });
            }
            mechanisms[*v] = StochasticChannel::from_distribution(d);
            cut.push(*v);
        }
        Ok(CausalModel {
            dag: self.dag.without_parents(&cut),
            variables: self.variables.clone(),
            mechanisms,
            presets: self.presets.clone(),
        })
    }
}

/// Sums out every factor not in `keep`; kept factors stay in scheme order.
pub fn marginal(joint: &Distribution, scheme: &IndexScheme, keep: &[usize]) -> Result<Distribution, ModelError> {
    let n = scheme.arities().len();
    if joint.arity() != scheme.size() {
        return Err(ChannelError::DistributionArity { expected: scheme.size(), found: joint.arity() }.into());
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
        return Err(ModelError::UnknownFactor { factor: bad, len: n });
    }
    let out_scheme = IndexScheme::new(kept.iter().map(|&k| scheme.arities()[k]).collect())?;
    let mut out = vec![0.0; out_scheme.size()];
    for (i, &w) in joint.weights().iter().enumerate() {
        let digits = scheme.decode(i);
        let sub: Vec<usize> = kept.iter().map(|&k| digits[k]).collect();
        out[out_scheme.encode(&sub)] += w;
    }
    Ok(Distribution::from_weights(out))
}
