//! Acceptance suite: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use causal_abstraction::abstraction::{
    check_equivalence, check_homogeneity, check_intervention_consistency, check_naturality, pushforward,
    synthesize_abstraction, synthesize_macro_mechanism, AbstractionCandidate, AbstractionError, Components,
    DeterministicMap, NaturalityMode, Sweep,
};
use causal_abstraction::generate::{
    equivalence_pair, homogeneous_pair, random_channel, random_dag, random_distribution, random_homogeneous_channel,
    random_model, random_nonhomogeneous_channel, rng,
};
use causal_abstraction::syntax::{compose_cuts, find_homomorphisms};
use causal_abstraction::{
    CausalModel, CutSet, Dag, Distribution, GraphHom, StochasticChannel, VariableSpec, DEFAULT_TOL, SWEEP_TOL,
};
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("homogeneous channels yield an exact target mechanism", homogeneity_forward),
        ("non-homogeneous channels admit no target mechanism", homogeneity_converse),
        ("equivalence holds exactly for permutation components", equivalence),
        ("cut then image equals image of the pulled-back cut", cut_image),
        ("deterministic abstractions agree under every target cut", intervention_consistency),
        ("pullback of cuts is a monoid homomorphism", monoid_laws),
        ("heart-disease merge succeeds iff merged columns agree", heart_disease),
        ("normalization and stochasticity are preserved", hygiene),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{status}] {title}: {} ({:.2}s)", k + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn homogeneity_forward() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for seed in 0..200 {
        let mut r = rng(1_000 + seed);
        let h = random_homogeneous_channel(&mut r, 6, 6);
        let Ok(g) = synthesize_macro_mechanism(&h.f, &h.tau_x, &h.tau_y, DEFAULT_TOL) else { continue };
        let lhs = h.tau_y.to_channel().compose(&h.f).unwrap();
        let rhs = g.compose(&h.tau_x.to_channel()).unwrap();
        let dev = lhs.max_abs_diff(&rhs).unwrap();
        worst = worst.max(dev);
        ok += usize::from(dev <= 1e-8);
    }
    let elapsed = start.elapsed();
    outcome(
        ok == 200 && elapsed < Duration::from_secs(5),
        format!("{ok}/200 synthesized, worst square deviation {worst:.2e}, {:.2}s total", elapsed.as_secs_f64()),
    )
}

fn homogeneity_converse() -> Outcome {
    let mut detected = 0;
    let mut confirmed = 0;
    let mut min_residual = f64::INFINITY;
    for seed in 0..200 {
        let mut r = rng(2_000 + seed);
        let (h, f) = random_nonhomogeneous_channel(&mut r, 6, 6, 1e-3);
        let report = check_homogeneity(&f, &h.tau_x, &h.tau_y, DEFAULT_TOL).unwrap();
        detected += usize::from(!report.pass && report.worst_deviation >= 1e-3);
        let residual = least_squares_residual(&f, &h.tau_x, &h.tau_y);
        min_residual = min_residual.min(residual);
        confirmed += usize::from(residual > 1e-4);
    }
    outcome(
        detected == 200 && confirmed == 200,
        format!("{detected}/200 rejected, {confirmed}/200 with least-squares residual > 1e-4 (min {min_residual:.2e})"),
    )
}

/// Half the channel plus half uniform: stochastic and never a permutation for n >= 2.
fn blur<R: Rng>(r: &mut R, c: &StochasticChannel) -> StochasticChannel {
    let (rows, cols) = (c.codomain_arity(), c.domain_arity());
    let noise = random_channel(r, rows, cols);
    let m = noise.matrix() * 0.5 + DMatrix::from_element(rows, cols, 0.5 / rows as f64);
    StochasticChannel::from_matrix(m)
}

fn equivalence() -> Outcome {
    let mut passed = 0;
    let mut flips = 0;
    let mut replacements = 0;
    for seed in 0..100 {
        let mut r = rng(3_000 + seed);
        let inst = equivalence_pair(&mut r, 1..=6, 2..=3, 0.5);
        let (macro_, alpha) = (inst.macro_model.unwrap(), inst.alpha.unwrap());
        passed += usize::from(check_equivalence(&inst.micro, &macro_, &alpha, DEFAULT_TOL).unwrap().equivalent);
        let Components::Grouped(comps) = &alpha.components else { unreachable!() };
        for t in 0..comps.len() {
            let mut altered = comps.clone();
            altered[t] = blur(&mut r, &comps[t]);
            let candidate = AbstractionCandidate::grouped(alpha.hom.clone(), altered);
            let report = check_equivalence(&inst.micro, &macro_, &candidate, DEFAULT_TOL).unwrap();
            replacements += 1;
            flips += usize::from(!report.equivalent);
        }
    }
    outcome(
        passed == 100 && flips == replacements,
        format!("{passed}/100 pairs equivalent, {flips}/{replacements} single-component replacements rejected"),
    )
}

fn cut_image() -> Outcome {
    let mut homs = 0;
    let mut checks = 0;
    let mut held = 0;
    for seed in 0..50 {
        let mut r = rng(4_000 + seed);
        let n = r.random_range(1..=8);
        let k = r.random_range(1..=4);
        let g = random_dag(&mut r, n, 0.2, "G");
        let h = random_dag(&mut r, k, 0.5, "H");
        let cuts = CutSet::all(&h);
        for hom in find_homomorphisms(&g, &h, false, None) {
            homs += 1;
            for cut in &cuts {
                checks += 1;
                held += usize::from(hom.check_cut_image(cut));
            }
        }
    }
    outcome(homs > 0 && held == checks, format!("{held}/{checks} checks over {homs} homomorphisms from 50 graph pairs"))
}

fn intervention_consistency() -> Outcome {
    let mut instances = 0;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    let mut cuts = 0;
    for seed in 0..30 {
        let mut r = rng(5_000 + seed);
        let inst = homogeneous_pair(&mut r, 1..=8, 1..=3, 0.5);
        let (macro_, alpha) = (inst.macro_model.unwrap(), inst.alpha.unwrap());
        if !check_naturality(&inst.micro, &macro_, &alpha, NaturalityMode::Grouped, DEFAULT_TOL).unwrap().pass {
            return outcome(false, format!("synthesized pair for seed {seed} is not natural"));
        }
        let dists: BTreeMap<String, Distribution> = (0..inst.micro.len())
            .map(|v| (inst.micro.dag().name(v).to_string(), random_distribution(&mut r, inst.micro.arity(v))))
            .collect();
        let start = Instant::now();
        let report = check_intervention_consistency(
            &inst.micro,
            &macro_,
            &alpha,
            &dists,
            Sweep::All,
            SWEEP_TOL,
            causal_abstraction::DEFAULT_STATE_CAP,
        )
        .unwrap();
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        instances += 1;
        cuts += report.cuts.len();
        worst = worst.max(report.max_deviation);
        let full = report.cuts.len() == 1 << macro_.len();
        passed += usize::from(report.pass && full && elapsed < Duration::from_secs(10));
    }
    outcome(
        passed == instances,
        format!(
            "{passed}/{instances} instances, {cuts} cut sets, worst deviation {worst:.2e}, slowest {:.2}s",
            slowest.as_secs_f64()
        ),
    )
}

fn monoid_laws() -> Outcome {
    let mut pairs = 0usize;
    let mut bad = 0usize;
    for seed in 0..20 {
        let mut r = rng(6_000 + seed);
        let n = r.random_range(1..=5);
        let k = r.random_range(1..=5);
        let g = random_dag(&mut r, n, 0.4, "G");
        let h = random_dag(&mut r, k, 0.5, "H");
        let cuts_g = CutSet::all(&g);
        // the cut monoid itself on the source graph
        let empty = CutSet::empty(&g);
        for a in &cuts_g {
            bad += usize::from(compose_cuts(a, &empty).unwrap() != *a || compose_cuts(a, a).unwrap() != *a);
            for b in &cuts_g {
                let ab = compose_cuts(a, b).unwrap();
                bad += usize::from(ab != compose_cuts(b, a).unwrap());
                for c in &cuts_g {
                    bad += usize::from(
                        compose_cuts(&ab, c).unwrap() != compose_cuts(a, &compose_cuts(b, c).unwrap()).unwrap(),
                    );
                }
            }
        }
        let cuts_h = CutSet::all(&h);
        for hom in find_homomorphisms(&g, &h, false, Some(64)) {
            bad += usize::from(!hom.phi_star(&CutSet::empty(&h)).unwrap().is_empty());
            for a in &cuts_h {
                for b in &cuts_h {
                    pairs += 1;
                    let lhs = hom.phi_star(&compose_cuts(a, b).unwrap()).unwrap();
                    let rhs = compose_cuts(&hom.phi_star(a).unwrap(), &hom.phi_star(b).unwrap()).unwrap();
                    bad += usize::from(lhs != rhs);
                }
            }
        }
    }
    outcome(pairs > 0 && bad == 0, format!("{pairs} cut pairs pulled back, {bad} law violations"))
}

fn heart_model<R: Rng>(r: &mut R, hd: StochasticChannel) -> CausalModel {
    let dag = Dag::from_edges(
        &["Diet", "LDL", "HDL", "HD"],
        &[("Diet", "LDL"), ("Diet", "HDL"), ("LDL", "HD"), ("HDL", "HD")],
    )
    .unwrap();
    let vars = vec![
        VariableSpec::new("Diet", ["d1", "d2"]),
        VariableSpec::new("LDL", ["l1", "l2"]),
        VariableSpec::new("HDL", ["h1", "h2"]),
        VariableSpec::new("HD", ["y1", "y2"]),
    ];
    let mechanisms = vec![random_channel(r, 2, 1), random_channel(r, 2, 2), random_channel(r, 2, 2), hd];
    CausalModel::new(dag, vars, mechanisms).unwrap()
}

/// HD mechanism with columns (l1,h1), (l1,h2), (l2,h1) at `base + shifts[k]` and (l2,h2) free.
fn hd_mechanism(base: f64, shifts: [f64; 3], last: f64) -> StochasticChannel {
    let top = [base + shifts[0], base + shifts[1], base + shifts[2], last];
    StochasticChannel::from_matrix(DMatrix::from_fn(2, 4, |row, col| if row == 0 { top[col] } else { 1.0 - top[col] }))
}

fn heart_disease() -> Outcome {
    let tol = DEFAULT_TOL;
    let g = Dag::from_edges(
        &["Diet", "LDL", "HDL", "HD"],
        &[("Diet", "LDL"), ("Diet", "HDL"), ("LDL", "HD"), ("HDL", "HD")],
    )
    .unwrap();
    let h = Dag::from_edges(&["Diet", "TC", "HD"], &[("Diet", "TC"), ("TC", "HD")]).unwrap();
    let hom = GraphHom::from_names(g, h, [("Diet", "Diet"), ("LDL", "TC"), ("HDL", "TC"), ("HD", "HD")]).unwrap();
    let macro_vars = vec![
        VariableSpec::new("Diet", ["d1", "d2"]),
        VariableSpec::new("TC", ["t1", "t2"]),
        VariableSpec::new("HD", ["y1", "y2"]),
    ];
    let maps = vec![
        DeterministicMap::identity(2),
        DeterministicMap::new(vec![2, 2], 2, vec![0, 0, 0, 1]).unwrap(),
        DeterministicMap::identity(2),
    ];

    let mut r = rng(7_000);
    let (mut equal_ok, mut unequal_ok) = (0, 0);
    let cases = 100;
    for _ in 0..cases {
        let base = r.random_range(0.1..0.9);
        let last = r.random_range(0.0..1.0);
        // columns equal within tol: pairwise differences at most 2 tol / 3
        let noise = [0, 1, 2].map(|_| r.random_range(-tol / 3.0..=tol / 3.0));
        let micro = heart_model(&mut r, hd_mechanism(base, noise, last));
        if let Ok(s) = synthesize_abstraction(&micro, &hom, &macro_vars, &maps, tol) {
            let natural = check_naturality(&micro, &s.macro_model, &s.alpha, NaturalityMode::Grouped, 10.0 * tol);
            equal_ok += usize::from(natural.is_ok_and(|n| n.pass));
        }

        // one merged column moved away by at least 3 tol
        let mut shifts = [0.0; 3];
        let delta = r.random_range(3.0 * tol..0.09);
        shifts[r.random_range(0..3)] = if r.random_bool(0.5) { delta } else { -delta };
        let micro = heart_model(&mut r, hd_mechanism(base, shifts, last));
        if let Err(AbstractionError::SynthesisFailed(f)) = synthesize_abstraction(&micro, &hom, &macro_vars, &maps, tol) {
            unequal_ok += usize::from(f.len() == 1 && f[0].vertex == "HD" && f[0].x_cell_labels[0] == "TC=t1");
        }
    }
    outcome(
        equal_ok == cases && unequal_ok == cases,
        format!("{equal_ok}/{cases} equal-column cases synthesized, {unequal_ok}/{cases} unequal cases rejected at HD"),
    )
}

fn hygiene() -> Outcome {
    let eps = DEFAULT_TOL;
    let mut r = rng(8_000);
    let mut channel_ok = 0;
    for _ in 0..1_000 {
        let (a, b, c) = (r.random_range(1..=6), r.random_range(1..=6), r.random_range(1..=6));
        let f = random_channel(&mut r, b, a);
        let g = random_channel(&mut r, c, b);
        let composed = g.compose(&f).unwrap();
        let tensored = f.tensor(&g);
        channel_ok += usize::from(column_sums_ok(&composed, eps) && column_sums_ok(&tensored, eps));
    }
    let mut joints_ok = 0;
    let mut joints = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=7);
        let dag = random_dag(&mut r, n, 0.5, "V");
        let arities: Vec<usize> = (0..n).map(|_| r.random_range(1..=3)).collect();
        let m = random_model(&mut r, dag, &arities);
        joints += 1;
        joints_ok += usize::from(total_ok(&m.joint_distribution(1_000_000).unwrap(), eps));
    }
    for _ in 0..50 {
        let inst = homogeneous_pair(&mut r, 1..=7, 1..=3, 0.5);
        let (macro_, alpha) = (inst.macro_model.unwrap(), inst.alpha.unwrap());
        let joint = inst.micro.joint_distribution(1_000_000).unwrap();
        let pushed = pushforward(&inst.micro, &macro_, &alpha, &joint).unwrap();
        joints += 2;
        joints_ok += usize::from(total_ok(&joint, eps)) + usize::from(total_ok(&pushed, eps));
    }
    outcome(
        channel_ok == 1_000 && joints_ok == joints,
        format!("{channel_ok}/1000 channel pairs stochastic, {joints_ok}/{joints} joints and pushforwards normalized"),
    )
}
