//! The `causal-abs` command: argument parsing, dispatch and exit codes.
//!
//! Exit codes: 0 when a check passes or an operation succeeds, 1 for a
//! negative verdict, 2 for invalid input.

mod inputs;
mod render;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use causal_abstraction::abstraction::{
    check_equivalence, check_homogeneity, check_intervention_consistency, check_naturality, synthesize_abstraction,
    AbstractionError, NaturalityMode, Sweep,
};
use causal_abstraction::generate::{generate, GeneratorConfig, GeneratorKind};
use causal_abstraction::io::{model_to_json, parse_channel_file, AlphaFile, HomFile};
use causal_abstraction::{DEFAULT_STATE_CAP, DEFAULT_TOL, SWEEP_TOL, TOL_ENV};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use inputs::{interventions, load_model, resolve, PairArgs};

#[derive(Debug, Parser)]
#[command(name = "causal-abs", version, about = "Check abstractions between finite causal models")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Absolute tolerance for numeric comparisons [default: 1e-9, 1e-7 for check-interventions]
    #[arg(long, global = true, env = TOL_ENV)]
    tol: Option<f64>,
    /// Emit a JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Largest joint state space to enumerate
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

#[derive(Debug, Args)]
struct PairFlags {
    /// Source (fine-grained) model file
    #[arg(long)]
    micro: Option<PathBuf>,
    /// Target (coarse-grained) model file
    #[arg(long = "macro")]
    macro_: Option<PathBuf>,
    /// Homomorphism file
    #[arg(long)]
    hom: Option<PathBuf>,
    /// Abstraction file (components or value maps)
    #[arg(long)]
    alpha: Option<PathBuf>,
}

impl PairFlags {
    fn as_args(&self) -> PairArgs<'_> {
        PairArgs {
            micro: self.micro.as_deref(),
            macro_: self.macro_.as_deref(),
            hom: self.hom.as_deref(),
            alpha: self.alpha.as_deref(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file against the model invariants
    Validate { model: PathBuf },
    /// Print the joint distribution, optionally after interventions
    Joint {
        model: PathBuf,
        /// Intervention: VAR=p1,p2,..., VAR=@preset or VAR=value
        #[arg(long = "do")]
        interventions: Vec<String>,
    },
    /// Write the intervened model
    Intervene {
        model: PathBuf,
        #[arg(long = "do")]
        interventions: Vec<String>,
        /// Output file (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the abstraction's components form a natural transformation
    CheckAbstraction {
        #[command(flatten)]
        files: PairFlags,
        #[arg(long, default_value = "grouped")]
        mode: NaturalityMode,
    },
    /// Check naturality and that every component is a permutation
    CheckEquivalence {
        #[command(flatten)]
        files: PairFlags,
    },
    /// Compare pushed-forward source joints with target joints under every target cut
    CheckInterventions {
        #[command(flatten)]
        files: PairFlags,
        /// Intervened state per source vertex; defaults to the vertex's first preset
        #[arg(long = "do")]
        interventions: Vec<String>,
        /// Only the empty cut and single-vertex cuts
        #[arg(long)]
        singletons: bool,
    },
    /// Check a channel for constant block column sums
    Homogeneity { channel: PathBuf },
    /// Build the target model from value maps, if every mechanism is homogeneous
    Synthesize {
        #[command(flatten)]
        files: PairFlags,
        /// Write the target model here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the abstraction components here
        #[arg(long)]
        alpha_out: Option<PathBuf>,
    },
    /// Generate a seeded random instance
    Generate {
        #[arg(long, default_value = "arbitrary")]
        kind: GeneratorKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        min_vertices: usize,
        #[arg(long, default_value_t = 5)]
        max_vertices: usize,
        #[arg(long, default_value_t = 2)]
        min_arity: usize,
        #[arg(long, default_value_t = 3)]
        max_arity: usize,
        #[arg(long, default_value_t = 0.5)]
        edge_prob: f64,
        /// Write micro.json (and macro.json, hom.json, alpha.json for pairs) here
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn verdict(pass: bool, stdout: String) -> Self {
        Self { code: if pass { 0 } else { 1 }, stdout, stderr: String::new() }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {e:#}\n") },
    }
}

fn tol(common: &Common, default: f64) -> Result<f64> {
    let t = common.tol.unwrap_or(default);
    if !t.is_finite() || t < 0.0 {
        bail!("tolerance must be a finite non-negative number, got {t}");
    }
    Ok(t)
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

fn model_value(m: &causal_abstraction::CausalModel) -> Value {
    serde_json::from_str(&model_to_json(m)).expect("model JSON parses")
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    match &cli.command {
        Command::Validate { model } => {
            let t = tol(c, DEFAULT_TOL)?;
            let file = inputs::load_model_file(model)?;
            let m = file.into_model().map_err(|e| anyhow!("{}: {e}", model.display()))?;
            let report = m.validate(t);
            let out = if c.json {
                let violations: Vec<Value> = report
                    .violations
                    .iter()
                    .map(|v| {
                        let mut o = serde_json::to_value(v).expect("serializes");
                        o["message"] = Value::String(v.to_string());
                        o
                    })
                    .collect();
                to_json(&json!({ "valid": report.is_valid(), "tol": t, "violations": violations }))
            } else {
                render::validation(&m, &report)
            };
            Ok(Outcome::verdict(report.is_valid(), out))
        }
        Command::Joint { model, interventions: dos } => {
            let t = tol(c, DEFAULT_TOL)?;
            let m = load_model(model, t)?;
            let targets = interventions(dos, &m, t)?;
            let m = m.intervene(&targets)?;
            let joint = m.joint_distribution(c.state_cap)?;
            let scheme = m.joint_scheme()?;
            let out = if c.json {
                let states: Vec<Value> = scheme
                    .states()
                    .zip(joint.weights())
                    .map(|(d, p)| {
                        let values: Vec<&str> = d.iter().enumerate().map(|(v, &i)| m.variable(v).values[i].as_str()).collect();
                        json!({ "values": values, "p": p })
                    })
                    .collect();
                to_json(&json!({ "variables": m.dag().names(), "states": states }))
            } else {
                render::joint(&m, &scheme, &joint)
            };
            Ok(Outcome::verdict(true, out))
        }
        Command::Intervene { model, interventions: dos, out } => {
            let t = tol(c, DEFAULT_TOL)?;
            let m = load_model(model, t)?;
            let targets = interventions(dos, &m, t)?;
            let text = model_to_json(&m.intervene(&targets)?);
            match out {
                Some(p) => {
                    write_file(p, &text)?;
                    Ok(Outcome::verdict(true, format!("wrote {}\n", p.display())))
                }
                None => Ok(Outcome::verdict(true, text)),
            }
        }
        Command::CheckAbstraction { files, mode } => {
            let t = tol(c, DEFAULT_TOL)?;
            let r = resolve(&files.as_args(), t)?;
            let report = check_naturality(&r.micro, r.macro_model()?, &r.candidate()?, *mode, t)?;
            let out = if c.json { to_json(&report) } else { render::naturality(&report) };
            Ok(Outcome::verdict(report.pass, out))
        }
        Command::CheckEquivalence { files } => {
            let t = tol(c, DEFAULT_TOL)?;
            let r = resolve(&files.as_args(), t)?;
            let report = check_equivalence(&r.micro, r.macro_model()?, &r.candidate()?, t)?;
            let out = if c.json { to_json(&report) } else { render::equivalence(&report) };
            Ok(Outcome::verdict(report.equivalent, out))
        }
        Command::CheckInterventions { files, interventions: dos, singletons } => {
            let t = tol(c, SWEEP_TOL)?;
            let r = resolve(&files.as_args(), DEFAULT_TOL.max(t))?;
            let mut targets = interventions(dos, &r.micro, DEFAULT_TOL.max(t))?;
            let mut missing = Vec::new();
            for v in 0..r.micro.len() {
                let name = r.micro.dag().name(v);
                if !targets.contains_key(name) {
                    match r.micro.presets(v).values().next() {
                        Some(d) => {
                            targets.insert(name.to_string(), d.clone());
                        }
                        None => missing.push(name.to_string()),
                    }
                }
            }
            if !missing.is_empty() {
                bail!("no intervened state for {}: pass --do or add a preset", missing.join(", "));
            }
            let sweep = if *singletons { Sweep::Singletons } else { Sweep::All };
            let report =
                check_intervention_consistency(&r.micro, r.macro_model()?, &r.candidate()?, &targets, sweep, t, c.state_cap)?;
            let out = if c.json { to_json(&report) } else { render::interventions(&report) };
            Ok(Outcome::verdict(report.pass, out))
        }
        Command::Homogeneity { channel } => {
            let t = tol(c, DEFAULT_TOL)?;
            let file = parse_channel_file(&inputs::read(channel)?).map_err(|e| anyhow!("{}: {e}", channel.display()))?;
            if let Some(v) = file.f.violations(t).first() {
                bail!("{}: f is not stochastic: {v}", channel.display());
            }
            let report = check_homogeneity(&file.f, &file.tau_x, &file.tau_y, t)?;
            let out = if c.json { to_json(&report) } else { render::homogeneity(&file, &report, t) };
            Ok(Outcome::verdict(report.pass, out))
        }
        Command::Synthesize { files, out, alpha_out } => {
            let t = tol(c, DEFAULT_TOL)?;
            let r = resolve(&files.as_args(), t)?;
            let maps = r.maps()?;
            match synthesize_abstraction(&r.micro, &r.hom, &r.macro_file.variables, &maps, t) {
                Ok(s) => {
                    if let Some(p) = out {
                        write_file(p, &model_to_json(&s.macro_model))?;
                    }
                    let causal_abstraction::abstraction::Components::Grouped(comps) = &s.alpha.components else {
                        unreachable!("synthesis yields grouped components")
                    };
                    let alpha_file = AlphaFile::from_components(None, s.macro_model.dag().names(), comps);
                    if let Some(p) = alpha_out {
                        write_file(p, &alpha_file.to_json())?;
                    }
                    let text = if c.json {
                        to_json(&json!({ "pass": true, "macro_model": model_value(&s.macro_model) }))
                    } else {
                        render::synthesis(&s.macro_model)
                    };
                    Ok(Outcome::verdict(true, text))
                }
                Err(AbstractionError::SynthesisFailed(failures)) => {
                    let text = if c.json {
                        to_json(&json!({ "pass": false, "failures": failures }))
                    } else {
                        render::synthesis_failures(&failures, t)
                    };
                    Ok(Outcome::verdict(false, text))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Generate { kind, seed, min_vertices, max_vertices, min_arity, max_arity, edge_prob, out_dir } => {
            let config = GeneratorConfig {
                vertices: *min_vertices..=*max_vertices,
                arities: *min_arity..=*max_arity,
                edge_prob: *edge_prob,
                kind: *kind,
                seed: *seed,
            };
            let inst = generate(&config)?;
            let mut files: Vec<(&str, String)> = vec![("micro.json", model_to_json(&inst.micro))];
            if let (Some(m), Some(a)) = (&inst.macro_model, &inst.alpha) {
                files.push(("macro.json", model_to_json(m)));
                let hom = HomFile::from_hom(&a.hom, Some("micro.json".into()), Some("macro.json".into()));
                files.push(("hom.json", hom.to_json()));
                let alpha = match &inst.maps {
                    Some(maps) => AlphaFile::from_taus(
                        Some("hom.json".into()),
                        inst.micro.variables(),
                        &a.hom,
                        m.variables(),
                        maps,
                    ),
                    None => {
                        let causal_abstraction::abstraction::Components::Grouped(comps) = &a.components else {
                            unreachable!("generated pairs use grouped components")
                        };
                        AlphaFile::from_components(Some("hom.json".into()), m.dag().names(), comps)
                    }
                };
                files.push(("alpha.json", alpha.to_json()));
            }
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir).with_context(|| format!("{}: cannot create", dir.display()))?;
                    let mut listing = String::new();
                    for (name, text) in &files {
                        let p = dir.join(name);
                        write_file(&p, text)?;
                        listing.push_str(&format!("wrote {}\n", p.display()));
                    }
                    Ok(Outcome::verdict(true, listing))
                }
                None => {
                    let bundle: serde_json::Map<String, Value> = files
                        .iter()
                        .map(|(name, text)| {
                            (name.trim_end_matches(".json").to_string(), serde_json::from_str(text).expect("valid JSON"))
                        })
                        .collect();
                    Ok(Outcome::verdict(true, to_json(&bundle)))
                }
            }
        }
    }
}
