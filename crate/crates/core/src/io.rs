//! JSON file formats (model, homomorphism, abstraction, channel) and the
//! small argument grammars used on the command line.
//!
//! Every parser here accepts untrusted text and reports failures as
//! [`FormatError`] with a location; none of them panic.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractionCandidate, DeterministicMap};
use crate::channel::{Distribution, IndexScheme, StochasticChannel};
use crate::dag::Dag;
use crate::model::{CausalModel, VariableSpec};
use crate::syntax::{CutSet, GraphHom};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{location}: {message}")]
pub struct FormatError {
    pub location: String,
    pub message: String,
}

impl FormatError {
    pub fn new(location: impl Into<String>, message: impl ToString) -> Self {
        Self { location: location.into(), message: message.to_string() }
    }

    fn json(e: serde_json::Error) -> Self {
        Self::new(format!("line {}, column {}", e.line(), e.column()), e)
    }
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariable {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    variables: Vec<RawVariable>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    parents: IndexMap<String, Vec<String>>,
    #[serde(default)]
    mechanisms: IndexMap<String, Rows>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    presets: IndexMap<String, IndexMap<String, Vec<f64>>>,
}

/// A parsed model file. Mechanisms may be absent when the file is used
/// only as a graph-and-values schema (e.g. the target of a synthesis).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub dag: Dag,
    pub variables: Vec<VariableSpec>,
    pub mechanisms: Vec<Option<StochasticChannel>>,
    pub presets: Vec<BTreeMap<String, Distribution>>,
}

impl ModelFile {
    pub fn into_model(self) -> Result<CausalModel, FormatError> {
        let mechanisms = self
            .mechanisms
            .into_iter()
            .enumerate()
            .map(|(v, m)| m.ok_or_else(|| FormatError::new(format!("mechanisms.{}", self.dag.name(v)), "missing")))
            .collect::<Result<Vec<_>, _>>()?;
        CausalModel::with_presets(self.dag, self.variables, mechanisms, self.presets)
            .map_err(|e| FormatError::new("model", e))
    }
}

pub fn parse_model_file(text: &str) -> Result<ModelFile, FormatError> {
    let raw: RawModel = serde_json::from_str(text).map_err(FormatError::json)?;
    if raw.variables.is_empty() {
        return Err(FormatError::new("variables", "model has no variables"));
    }
    let names: Vec<String> = raw.variables.iter().map(|v| v.name.clone()).collect();
    let dag = Dag::from_edges(&names, &raw.edges).map_err(|e| FormatError::new("edges", e))?;
    // an explicit parent list must be a reordering of the parents given by `edges`
    let mut parents: Vec<Vec<usize>> = (0..dag.len()).map(|v| dag.parents(v).to_vec()).collect();
    for (child, list) in &raw.parents {
        let loc = format!("parents.{child}");
        let c = dag.require(child).map_err(|e| FormatError::new(&loc, e))?;
        let idx = list
            .iter()
            .map(|p| dag.require(p).map_err(|e| FormatError::new(&loc, e)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut a = idx.clone();
        let mut b = parents[c].clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(FormatError::new(loc, "parent list does not match the edges into this vertex"));
        }
        parents[c] = idx;
    }
    let dag = Dag::new(names, parents).map_err(|e| FormatError::new("parents", e))?;
    let variables: Vec<VariableSpec> =
        raw.variables.into_iter().map(|v| VariableSpec { name: v.name, values: v.values }).collect();

    let mut mechanisms = vec![None; dag.len()];
    for (name, rows) in &raw.mechanisms {
        let loc = format!("mechanisms.{name}");
        let v = dag.require(name).map_err(|e| FormatError::new(&loc, e))?;
        mechanisms[v] = Some(StochasticChannel::from_rows(rows).map_err(|e| FormatError::new(&loc, e))?);
    }
    let mut presets = vec![BTreeMap::new(); dag.len()];
    for (name, table) in &raw.presets {
        let v = dag.require(name).map_err(|e| FormatError::new(format!("presets.{name}"), e))?;
        for (preset, weights) in table {
            if weights.iter().any(|w| !w.is_finite()) {
                return Err(FormatError::new(format!("presets.{name}.{preset}"), "non-finite weight"));
            }
            presets[v].insert(preset.clone(), Distribution::from_weights(weights.clone()));
        }
    }
    Ok(ModelFile { dag, variables, mechanisms, presets })
}

pub fn parse_model(text: &str) -> Result<CausalModel, FormatError> {
    parse_model_file(text)?.into_model()
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Canonical JSON for a model. Edges are listed child by child in parent
/// order, so parent order survives a round trip.
pub fn model_to_json(model: &CausalModel) -> String {
    let dag = model.dag();
    let raw = RawModel {
        variables: model
            .variables()
            .iter()
            .map(|v| RawVariable { name: v.name.clone(), values: v.values.clone() })
            .collect(),
        edges: dag.edges().map(|(p, c)| (dag.name(p).to_string(), dag.name(c).to_string())).collect(),
        parents: IndexMap::new(),
        mechanisms: (0..model.len())
            .map(|v| (dag.name(v).to_string(), model.mechanism(v).rows()))
            .collect(),
        presets: (0..model.len())
            .filter(|&v| !model.presets(v).is_empty())
            .map(|v| {
                let table = model
                    .presets(v)
                    .iter()
                    .map(|(k, d)| (k.clone(), d.weights().to_vec()))
                    .collect();
                (dag.name(v).to_string(), table)
            })
            .collect(),
    };
    to_pretty(&raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub map: IndexMap<String, String>,
}

impl HomFile {
    pub fn resolve(&self, source: &Dag, target: &Dag) -> Result<GraphHom, FormatError> {
        GraphHom::from_names(
            source.clone(),
            target.clone(),
            self.map.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
        .map_err(|e| FormatError::new("map", e))
    }

    pub fn from_hom(hom: &GraphHom, source: Option<String>, target: Option<String>) -> Self {
        let map = (0..hom.source().len())
            .map(|v| (hom.source().name(v).to_string(), hom.target().name(hom.image(v)).to_string()))
            .collect();
        Self { source, target, map }
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }
}

pub fn parse_hom_file(text: &str) -> Result<HomFile, FormatError> {
    serde_json::from_str(text).map_err(FormatError::json)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hom: Option<String>,
    /// Grouped components keyed by target vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<IndexMap<String, Rows>>,
    /// Per-source-vertex components keyed by source vertex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_components: Option<IndexMap<String, Rows>>,
    /// Deterministic maps keyed by target vertex: value tuple -> target value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taus: Option<IndexMap<String, IndexMap<String, String>>>,
}

pub fn parse_alpha_file(text: &str) -> Result<AlphaFile, FormatError> {
    let f: AlphaFile = serde_json::from_str(text).map_err(FormatError::json)?;
    let given = [f.components.is_some(), f.micro_components.is_some(), f.taus.is_some()]
        .iter()
        .filter(|b| **b)
        .count();
    if given != 1 {
        return Err(FormatError::new(
            "alpha",
            "exactly one of `components`, `micro_components`, `taus` is required",
        ));
    }
    Ok(f)
}

/// The key of a preimage state in a `taus` table: member value labels joined by commas.
pub fn tuple_key(variables: &[&VariableSpec], digits: &[usize]) -> String {
    variables.iter().zip(digits).map(|(v, &d)| v.values[d].as_str()).collect::<Vec<_>>().join(",")
}

fn channel_table(
    table: &IndexMap<String, Rows>,
    names: &[String],
    section: &str,
) -> Result<Vec<StochasticChannel>, FormatError> {
    for key in table.keys() {
        if !names.contains(key) {
            return Err(FormatError::new(format!("{section}.{key}"), "unknown vertex"));
        }
    }
    names
        .iter()
        .map(|n| {
            let loc = format!("{section}.{n}");
            let rows = table.get(n).ok_or_else(|| FormatError::new(&loc, "missing"))?;
            StochasticChannel::from_rows(rows).map_err(|e| FormatError::new(&loc, e))
        })
        .collect()
}

impl AlphaFile {
    /// Resolves explicit components into a candidate. A `taus` file resolves
    /// through [`AlphaFile::resolve_taus`] instead.
    pub fn resolve_components(&self, hom: &GraphHom) -> Result<AbstractionCandidate, FormatError> {
        if let Some(c) = &self.components {
            Ok(AbstractionCandidate::grouped(hom.clone(), channel_table(c, hom.target().names(), "components")?))
        } else if let Some(c) = &self.micro_components {
            Ok(AbstractionCandidate::per_micro(hom.clone(), channel_table(c, hom.source().names(), "micro_components")?))
        } else {
            Err(FormatError::new("alpha", "file carries `taus`, not components"))
        }
    }

    /// Resolves a `taus` table into one deterministic map per target vertex.
    pub fn resolve_taus(
        &self,
        micro_variables: &[VariableSpec],
        hom: &GraphHom,
        macro_variables: &[VariableSpec],
    ) -> Result<Vec<DeterministicMap>, FormatError> {
        let taus = self.taus.as_ref().ok_or_else(|| FormatError::new("alpha", "file has no `taus`"))?;
        let h = hom.target();
        for key in taus.keys() {
            if h.index_of(key).is_none() {
                return Err(FormatError::new(format!("taus.{key}"), "unknown vertex"));
            }
        }
        (0..h.len())
            .map(|t| {
                let loc = format!("taus.{}", h.name(t));
                let table = taus.get(h.name(t)).ok_or_else(|| FormatError::new(&loc, "missing"))?;
                let members: Vec<&VariableSpec> = hom.preimage(t).iter().map(|&m| &micro_variables[m]).collect();
                let scheme = IndexScheme::new(members.iter().map(|v| v.arity()).collect())
                    .map_err(|e| FormatError::new(&loc, e))?;
                let keys: IndexMap<String, usize> =
                    scheme.states().enumerate().map(|(i, d)| (tuple_key(&members, &d), i)).collect();
                let mut image = vec![None; scheme.size()];
                for (k, target_value) in table {
                    let state = *keys
                        .get(k)
                        .ok_or_else(|| FormatError::new(format!("{loc}.{k}"), "not a value tuple of the preimage"))?;
                    let value = macro_variables[t].value_index(target_value).ok_or_else(|| {
                        FormatError::new(format!("{loc}.{k}"), format!("`{target_value}` is not a value of {}", h.name(t)))
                    })?;
                    image[state] = Some(value);
                }
                let table = image
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| v.ok_or_else(|| FormatError::new(&loc, format!("no image for `{}`", keys.get_index(i).unwrap().0))))
                    .collect::<Result<Vec<_>, _>>()?;
                DeterministicMap::new(members.iter().map(|v| v.arity()).collect(), macro_variables[t].arity(), table)
                    .map_err(|e| FormatError::new(&loc, e))
            })
            .collect()
    }

    pub fn from_components(hom: Option<String>, names: &[String], components: &[StochasticChannel]) -> Self {
        let table = names.iter().cloned().zip(components.iter().map(StochasticChannel::rows)).collect();
        Self { hom, components: Some(table), micro_components: None, taus: None }
    }

    pub fn from_taus(
        hom_ref: Option<String>,
        micro_variables: &[VariableSpec],
        hom: &GraphHom,
        macro_variables: &[VariableSpec],
        maps: &[DeterministicMap],
    ) -> Self {
        let h = hom.target();
        let taus = (0..h.len())
            .map(|t| {
                let members: Vec<&VariableSpec> = hom.preimage(t).iter().map(|&m| &micro_variables[m]).collect();
                let scheme = IndexScheme::new(members.iter().map(|v| v.arity()).collect()).expect("small product");
                let table = scheme
                    .states()
                    .enumerate()
                    .map(|(i, d)| (tuple_key(&members, &d), macro_variables[t].values[maps[t].apply(i)].clone()))
                    .collect();
                (h.name(t).to_string(), table)
            })
            .collect();
        Self { hom: hom_ref, components: None, micro_components: None, taus: Some(taus) }
    }

    pub fn to_json(&self) -> String {
        to_pretty(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannelFile {
    f: Rows,
    tau_x: Vec<usize>,
    tau_y: Vec<usize>,
}

/// A single channel with value maps on both sides, for homogeneity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFile {
    pub f: StochasticChannel,
    pub tau_x: DeterministicMap,
    pub tau_y: DeterministicMap,
}

fn map_from_table(table: &[usize], loc: &str) -> Result<DeterministicMap, FormatError> {
    let codomain = table.iter().max().map_or(0, |m| m.saturating_add(1));
    DeterministicMap::new(vec![table.len()], codomain, table.to_vec()).map_err(|e| FormatError::new(loc, e))
}

/// `{"f": rows, "tau_x": [cell of each column], "tau_y": [cell of each row]}`.
pub fn parse_channel_file(text: &str) -> Result<ChannelFile, FormatError> {
    let raw: RawChannelFile = serde_json::from_str(text).map_err(FormatError::json)?;
    let f = StochasticChannel::from_rows(&raw.f).map_err(|e| FormatError::new("f", e))?;
    if raw.tau_x.len() != f.domain_arity() {
        return Err(FormatError::new("tau_x", format!("{} entries for {} columns", raw.tau_x.len(), f.domain_arity())));
    }
    if raw.tau_y.len() != f.codomain_arity() {
        return Err(FormatError::new("tau_y", format!("{} entries for {} rows", raw.tau_y.len(), f.codomain_arity())));
    }
    Ok(ChannelFile { tau_x: map_from_table(&raw.tau_x, "tau_x")?, tau_y: map_from_table(&raw.tau_y, "tau_y")?, f })
}

pub fn channel_file_to_json(file: &ChannelFile) -> String {
    to_pretty(&RawChannelFile {
        f: file.f.rows(),
        tau_x: file.tau_x.table().to_vec(),
        tau_y: file.tau_y.table().to_vec(),
    })
}

/// Right-hand side of a `VAR=...` argument before it is resolved against a model.
#[derive(Debug, Clone, PartialEq)]
pub enum InterventionValue {
    /// `VAR=@name`
    Preset(String),
    /// `VAR=label` or `VAR=p1,p2,...`
    Literal(String),
}

pub fn parse_intervention_syntax(arg: &str) -> Result<(String, InterventionValue), FormatError> {
    let (var, rhs) = arg
        .split_once('=')
        .ok_or_else(|| FormatError::new(arg, "expected VAR=p1,p2,..., VAR=@preset or VAR=value"))?;
    let var = var.trim();
    let rhs = rhs.trim();
    if var.is_empty() {
        return Err(FormatError::new(arg, "empty variable name"));
    }
    if rhs.is_empty() {
        return Err(FormatError::new(arg, "empty right-hand side"));
    }
    let value = match rhs.strip_prefix('@') {
        Some(name) if !name.is_empty() => InterventionValue::Preset(name.to_string()),
        Some(_) => return Err(FormatError::new(arg, "empty preset name")),
        None => InterventionValue::Literal(rhs.to_string()),
    };
    Ok((var.to_string(), value))
}

/// Resolves a `VAR=...` argument. A literal that is a value label is a point
/// mass; otherwise it must be a comma-separated weight list of the variable's arity.
pub fn parse_intervention(arg: &str, model: &CausalModel, tol: f64) -> Result<(String, Distribution), FormatError> {
    let (var, value) = parse_intervention_syntax(arg)?;
    let v = model.vertex(&var).map_err(|e| FormatError::new(arg, e))?;
    let dist = match value {
        InterventionValue::Preset(name) => model.preset(&var, &name).map_err(|e| FormatError::new(arg, e))?.clone(),
        InterventionValue::Literal(lit) => {
            if let Some(i) = model.variable(v).value_index(&lit) {
                Distribution::point_mass(model.arity(v), i)
            } else {
                let weights = lit
                    .split(',')
                    .map(|w| w.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| FormatError::new(arg, format!("`{lit}` is neither a value of {var} nor a weight list")))?;
                if weights.len() != model.arity(v) {
                    return Err(FormatError::new(
                        arg,
                        format!("{} weights for a variable with {} values", weights.len(), model.arity(v)),
                    ));
                }
                Distribution::new(weights, tol).map_err(|e| FormatError::new(arg, e))?
            }
        }
    };
    Ok((var, dist))
}

/// Comma-separated vertex names; the empty string is the empty cut.
pub fn parse_cut_list(text: &str, dag: &Dag) -> Result<CutSet, FormatError> {
    let names: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    CutSet::from_names(dag, &names).map_err(|e| FormatError::new(text, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
        "variables": [{"name": "X", "values": ["x1", "x2"]}, {"name": "Y", "values": ["y1", "y2"]}],
        "edges": [["X", "Y"]],
        "mechanisms": {"X": [[0.4], [0.6]], "Y": [[0.3, 0.5], [0.7, 0.5]]},
        "presets": {"X": {"low": [1.0, 0.0]}}
    }"#;

    #[test]
    fn parse_chain() {
        let m = parse_model(CHAIN).unwrap();
        assert!(m.validate(1e-9).is_valid());
        assert_eq!(m.mechanism(1).get(1, 0), 0.7);
        assert_eq!(m.preset("X", "low").unwrap().weights(), &[1.0, 0.0]);
    }

    #[test]
    fn roundtrip_is_stable() {
        let m = parse_model(CHAIN).unwrap();
        let text = model_to_json(&m);
        let back = parse_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_json(&back), text);
    }

    #[test]
    fn explicit_parent_order() {
        let text = r#"{
            "variables": [{"name": "A", "values": ["0","1"]}, {"name": "B", "values": ["0","1"]}, {"name": "C", "values": ["0"]}],
            "edges": [["A", "C"], ["B", "C"]],
            "parents": {"C": ["B", "A"]},
            "mechanisms": {"A": [[0.5],[0.5]], "B": [[0.5],[0.5]], "C": [[1,1,1,1]]}
        }"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.dag().parents(2), &[1, 0]);
        let back = parse_model(&model_to_json(&m)).unwrap();
        assert_eq!(back.dag().parents(2), &[1, 0]);
    }

    #[test]
    fn schema_errors_are_located() {
        let bad_parent = r#"{"variables": [{"name": "A", "values": ["0"]}], "parents": {"A": ["A"]}, "mechanisms": {}}"#;
        assert_eq!(parse_model_file(bad_parent).unwrap_err().location, "parents.A");
        let missing = r#"{"variables": [{"name": "A", "values": ["0"]}]}"#;
        assert_eq!(parse_model(missing).unwrap_err().location, "mechanisms.A");
        let ragged = r#"{"variables": [{"name": "A", "values": ["0","1"]}], "mechanisms": {"A": [[1],[0,1]]}}"#;
        assert_eq!(parse_model(ragged).unwrap_err().location, "mechanisms.A");
        let syntax = "{\"variables\": [";
        assert!(parse_model(syntax).unwrap_err().location.starts_with("line"));
        let empty = r#"{"variables": []}"#;
        assert_eq!(parse_model(empty).unwrap_err().location, "variables");
        let cyc = r#"{"variables": [{"name": "A", "values": ["0"]}, {"name": "B", "values": ["0"]}], "edges": [["A","B"],["B","A"]]}"#;
        assert_eq!(parse_model(cyc).unwrap_err().location, "edges");
    }

    #[test]
    fn intervention_arguments() {
        let m = parse_model(CHAIN).unwrap();
        let (v, d) = parse_intervention("X=x2", &m, 1e-9).unwrap();
        assert_eq!((v.as_str(), d.weights()), ("X", &[0.0, 1.0][..]));
        let (_, d) = parse_intervention("Y=0.25,0.75", &m, 1e-9).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.75]);
        let (_, d) = parse_intervention("X=@low", &m, 1e-9).unwrap();
        assert_eq!(d.weights(), &[1.0, 0.0]);
        assert!(parse_intervention("X=0.5,0.4", &m, 1e-9).is_err());
        assert!(parse_intervention("X=0.5", &m, 1e-9).is_err());
        assert!(parse_intervention("X=@missing", &m, 1e-9).is_err());
        assert!(parse_intervention("Q=x1", &m, 1e-9).is_err());
        assert!(parse_intervention("X", &m, 1e-9).is_err());
        assert!(parse_intervention("X=@", &m, 1e-9).is_err());
    }

    #[test]
    fn cut_lists() {
        let m = parse_model(CHAIN).unwrap();
        assert!(parse_cut_list("", m.dag()).unwrap().is_empty());
        assert_eq!(parse_cut_list("Y, X", m.dag()).unwrap().len(), 2);
        assert!(parse_cut_list("Z", m.dag()).is_err());
    }

    #[test]
    fn channel_file() {
        let text = r#"{"f": [[0.3,0.3,0.6],[0.7,0.7,0.4]], "tau_x": [0,0,1], "tau_y": [0,1]}"#;
        let c = parse_channel_file(text).unwrap();
        assert_eq!(c.tau_x.cells(), vec![vec![0, 1], vec![2]]);
        assert_eq!(parse_channel_file(&channel_file_to_json(&c)).unwrap(), c);
        assert!(parse_channel_file(r#"{"f": [[1.0]], "tau_x": [0,0], "tau_y": [0]}"#).is_err());
        assert!(parse_channel_file(r#"{"f": [[1.0, 1.0]], "tau_x": [1,1], "tau_y": [0]}"#).is_err());
    }

    #[test]
    fn alpha_file_needs_exactly_one_kind() {
        assert!(parse_alpha_file(r#"{"hom": "h.json"}"#).is_err());
        assert!(parse_alpha_file(r#"{"components": {}, "taus": {}}"#).is_err());
        assert!(parse_alpha_file(r#"{"components": {}}"#).is_ok());
    }
}
