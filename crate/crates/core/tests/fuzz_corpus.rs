//! Replays the checked-in fuzz corpus, plus byte-level mutations of it,
//! through the same entry points as the fuzz targets.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use causal_abstraction::abstraction::check_homogeneity;
use causal_abstraction::io::{
    model_to_json, parse_alpha_file, parse_channel_file, parse_cut_list, parse_hom_file, parse_intervention,
    parse_model, parse_model_file, ModelFile,
};
use causal_abstraction::{CausalModel, GraphHom};
use proptest::prelude::*;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn seeds(target: &str) -> BTreeMap<String, Vec<u8>> {
    let dir = root().join("fuzz/corpus").join(target);
    fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn sample(rel: &str) -> String {
    fs::read_to_string(root().join("samples").join(rel)).unwrap()
}

struct Heart {
    micro: CausalModel,
    micro_file: ModelFile,
    target: ModelFile,
    hom: GraphHom,
}

fn heart() -> Heart {
    let micro_file = parse_model_file(&sample("heart/micro.json")).unwrap();
    let target = parse_model_file(&sample("heart/macro-schema.json")).unwrap();
    let hom = parse_hom_file(&sample("heart/hom.json")).unwrap().resolve(&micro_file.dag, &target.dag).unwrap();
    Heart { micro: micro_file.clone().into_model().unwrap(), micro_file, target, hom }
}

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

/// True when the input made it through every stage.
fn model(data: &[u8]) -> bool {
    let Some(t) = text(data) else { return false };
    let Ok(file) = parse_model_file(t) else { return false };
    let Ok(model) = file.into_model() else { return false };
    if !model.validate(1e-9).is_valid() {
        return false;
    }
    let _ = model.joint_distribution(4096);
    let saved = model_to_json(&model);
    let reloaded = parse_model(&saved).expect("saved model parses");
    assert_eq!(model_to_json(&reloaded), saved);
    true
}

fn hom(data: &[u8], h: &Heart) -> bool {
    let Some(t) = text(data) else { return false };
    let Ok(file) = parse_hom_file(t) else { return false };
    match file.resolve(&h.micro_file.dag, &h.target.dag) {
        Ok(g) => g.validate().missing_edges.is_empty(),
        Err(_) => false,
    }
}

fn alpha(data: &[u8], h: &Heart) -> bool {
    let Some(t) = text(data) else { return false };
    let Ok(file) = parse_alpha_file(t) else { return false };
    if file.taus.is_some() {
        file.resolve_taus(&h.micro_file.variables, &h.hom, &h.target.variables).is_ok()
    } else {
        file.resolve_components(&h.hom).is_ok()
    }
}

fn channel(data: &[u8]) -> Option<bool> {
    let file = parse_channel_file(text(data)?).ok()?;
    check_homogeneity(&file.f, &file.tau_x, &file.tau_y, 1e-9).ok().map(|r| r.pass)
}

fn intervention(data: &[u8], h: &Heart) -> bool {
    let Some(arg) = text(data) else { return false };
    let Ok((var, dist)) = parse_intervention(arg, &h.micro, 1e-9) else { return false };
    let cut = h.micro.intervene(&[(var, dist)].into_iter().collect()).expect("parsed intervention applies");
    cut.joint_distribution(4096).is_ok()
}

fn cut_list(data: &[u8], h: &Heart) -> Option<usize> {
    parse_cut_list(text(data)?, &h.micro_file.dag).ok().map(|c| c.len())
}

fn outcomes<T>(target: &str, f: impl Fn(&[u8]) -> T) -> BTreeMap<String, T> {
    seeds(target).into_iter().map(|(name, data)| (name, f(&data))).collect()
}

#[test]
fn model_seeds() {
    let got = outcomes("model", model);
    for name in ["heart", "heart-unequal", "heart-macro", "chain", "ordered-parents"] {
        assert!(got[name], "{name}");
    }
    assert!(!got["schema"]);
    assert!(!got["bad-column"]);
    assert!(!got["no-values"]);
    assert!(!got["duplicate"]);
}

#[test]
fn hom_seeds() {
    let h = heart();
    let got = outcomes("hom", |d| hom(d, &h));
    assert!(got["heart"] && got["inline"]);
    assert!(!got["not-an-edge"]);
}

#[test]
fn alpha_seeds() {
    let h = heart();
    let got = outcomes("alpha", |d| alpha(d, &h));
    assert!(got["taus"] && got["components"] && got["micro-components"]);
    assert!(!got["bad-tuple"]);
}

#[test]
fn channel_seeds() {
    let got = outcomes("channel", channel);
    assert_eq!(got["homogeneous"], Some(true));
    assert_eq!(got["perturbed"], Some(false));
    assert_eq!(got["trivial"], Some(true));
    assert_eq!(got["huge-cell"], None);
}

#[test]
fn intervention_seeds() {
    let h = heart();
    let got = outcomes("intervention", |d| intervention(d, &h));
    assert!(got["label"] && got["weights"] && got["preset"]);
    assert!(!got["empty"]);
}

#[test]
fn cut_list_seeds() {
    let h = heart();
    let got = outcomes("cut_list", |d| cut_list(d, &h));
    assert_eq!(got["empty"], Some(0));
    assert_eq!(got["pair"], Some(2));
    assert_eq!(got["spaces"], Some(2));
    assert_eq!(got["repeat"], Some(1));
}

#[derive(Debug, Clone)]
enum Edit {
    Flip(usize, u8),
    Insert(usize, u8),
    Delete(usize),
    Truncate(usize),
}

fn edits() -> impl Strategy<Value = Vec<Edit>> {
    let byte = prop_oneof![any::<u8>(), proptest::sample::select(b"{}[]\",:.-0123456789eE ".to_vec())];
    let edit = prop_oneof![
        (any::<usize>(), byte.clone()).prop_map(|(i, b)| Edit::Flip(i, b)),
        (any::<usize>(), byte).prop_map(|(i, b)| Edit::Insert(i, b)),
        any::<usize>().prop_map(Edit::Delete),
        any::<usize>().prop_map(Edit::Truncate),
    ];
    proptest::collection::vec(edit, 1..6)
}

fn mutate(seed: &[u8], edits: &[Edit]) -> Vec<u8> {
    let mut d = seed.to_vec();
    for e in edits {
        let n = d.len().max(1);
        match *e {
            Edit::Flip(i, b) if !d.is_empty() => d[i % n] = b,
            Edit::Insert(i, b) => d.insert(i % (d.len() + 1), b),
            Edit::Delete(i) if !d.is_empty() => {
                d.remove(i % n);
            }
            Edit::Truncate(i) => d.truncate(i % n),
            _ => {}
        }
    }
    d
}

fn all_seeds() -> Vec<(String, Vec<u8>)> {
    ["model", "hom", "alpha", "channel", "intervention", "cut_list"]
        .into_iter()
        .flat_map(|t| seeds(t).into_values().map(|d| (t.to_string(), d)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_seeds_never_panic(pick in any::<prop::sample::Index>(), e in edits()) {
        let h = heart();
        let seeds = all_seeds();
        let (target, seed) = &seeds[pick.index(seeds.len())];
        let data = mutate(seed, &e);
        match target.as_str() {
            "model" => { model(&data); }
            "hom" => { hom(&data, &h); }
            "alpha" => { alpha(&data, &h); }
            "channel" => { channel(&data); }
            "intervention" => { intervention(&data, &h); }
            _ => { cut_list(&data, &h); }
        }
    }
}
