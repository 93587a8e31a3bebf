//! Loading and cross-resolving input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use causal_abstraction::abstraction::{alpha_from_tau, AbstractionCandidate, DeterministicMap};
use causal_abstraction::io::{
    parse_alpha_file, parse_hom_file, parse_intervention, parse_model_file, AlphaFile, HomFile, ModelFile,
};
use causal_abstraction::{CausalModel, Distribution, GraphHom};

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

pub fn load_model_file(path: &Path) -> Result<ModelFile> {
    parse_model_file(&read(path)?).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Loads a model and requires it to pass validation at `tol`.
pub fn load_model(path: &Path, tol: f64) -> Result<CausalModel> {
    let model = load_model_file(path)?.into_model().map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let report = model.validate(tol);
    if !report.is_valid() {
        let list: Vec<String> = report.violations.iter().map(|v| format!("  {v}")).collect();
        bail!("{}: invalid model\n{}", path.display(), list.join("\n"));
    }
    Ok(model)
}

fn relative_to(file: &Path, reference: &str) -> PathBuf {
    file.parent().unwrap_or(Path::new("")).join(reference)
}

/// Paths given on the command line; missing ones are taken from file references.
pub struct PairArgs<'a> {
    pub micro: Option<&'a Path>,
    pub macro_: Option<&'a Path>,
    pub hom: Option<&'a Path>,
    pub alpha: Option<&'a Path>,
}

pub struct Resolved {
    pub micro: CausalModel,
    /// `None` when the target file carries no mechanisms (a schema).
    pub macro_: Option<CausalModel>,
    pub macro_file: ModelFile,
    pub hom: GraphHom,
    pub alpha: Option<AlphaFile>,
}

pub fn resolve(args: &PairArgs, tol: f64) -> Result<Resolved> {
    let alpha = match args.alpha {
        Some(p) => Some((p, parse_alpha_file(&read(p)?).map_err(|e| anyhow!("{}: {e}", p.display()))?)),
        None => None,
    };
    let hom_path = match (args.hom, &alpha) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some((p, a))) => match &a.hom {
            Some(r) => relative_to(p, r),
            None => bail!("no homomorphism: pass --hom or set `hom` in {}", p.display()),
        },
        (None, None) => bail!("no homomorphism: pass --hom"),
    };
    let hom_file: HomFile = parse_hom_file(&read(&hom_path)?).map_err(|e| anyhow!("{}: {e}", hom_path.display()))?;
    let locate = |flag: Option<&Path>, reference: &Option<String>, what: &str| -> Result<PathBuf> {
        match (flag, reference) {
            (Some(p), _) => Ok(p.to_path_buf()),
            (None, Some(r)) => Ok(relative_to(&hom_path, r)),
            (None, None) => bail!("no {what} model: pass --{what} or set `{}` in {}", if what == "micro" { "source" } else { "target" }, hom_path.display()),
        }
    };
    let micro_path = locate(args.micro, &hom_file.source, "micro")?;
    let macro_path = locate(args.macro_, &hom_file.target, "macro")?;
    let micro = load_model(&micro_path, tol)?;
    let macro_file = load_model_file(&macro_path)?;
    let macro_ = if macro_file.mechanisms.iter().all(Option::is_some) {
        Some(load_model(&macro_path, tol)?)
    } else {
        None
    };
    let hom = hom_file.resolve(micro.dag(), &macro_file.dag).map_err(|e| anyhow!("{}: {e}", hom_path.display()))?;
    let report = hom.validate();
    if let Some(e) = report.missing_edges.first() {
        bail!(
            "{}: edge {} -> {} maps to {} -> {}, which is not an edge of the target",
            hom_path.display(),
            e.from,
            e.to,
            e.image_from,
            e.image_to
        );
    }
    Ok(Resolved { micro, macro_, macro_file, hom, alpha: alpha.map(|(_, a)| a) })
}

impl Resolved {
    pub fn macro_model(&self) -> Result<&CausalModel> {
        self.macro_.as_ref().ok_or_else(|| anyhow!("target model has no mechanisms"))
    }

    pub fn maps(&self) -> Result<Vec<DeterministicMap>> {
        let alpha = self.alpha.as_ref().ok_or_else(|| anyhow!("no abstraction file: pass --alpha"))?;
        alpha
            .resolve_taus(self.micro.variables(), &self.hom, &self.macro_file.variables)
            .map_err(|e| anyhow!("alpha: {e}"))
    }

    pub fn candidate(&self) -> Result<AbstractionCandidate> {
        let alpha = self.alpha.as_ref().ok_or_else(|| anyhow!("no abstraction file: pass --alpha"))?;
        if alpha.taus.is_some() {
            Ok(alpha_from_tau(&self.micro, &self.hom, &self.maps()?)?)
        } else {
            alpha.resolve_components(&self.hom).map_err(|e| anyhow!("alpha: {e}"))
        }
    }
}

/// `--do` arguments keyed by vertex; a vertex given twice is an error.
pub fn interventions(args: &[String], model: &CausalModel, tol: f64) -> Result<BTreeMap<String, Distribution>> {
    let mut out = BTreeMap::new();
    for arg in args {
        let (var, dist) = parse_intervention(arg, model, tol).map_err(|e| anyhow!("--do {e}"))?;
        if out.insert(var.clone(), dist).is_some() {
            bail!("--do {var}: given more than once");
        }
    }
    Ok(out)
}
