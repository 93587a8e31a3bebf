//! Aligned text reports. Deviations use three significant digits; the JSON
//! reports carry full precision.

use std::fmt::Write;

use causal_abstraction::abstraction::{
    EquivalenceReport, HomogeneityReport, InterventionReport, NaturalityMode, NaturalityReport, Sweep, VertexFailure,
};
use causal_abstraction::channel::fmt_num;
use causal_abstraction::io::ChannelFile;
use causal_abstraction::model::ModelReport;
use causal_abstraction::{CausalModel, Distribution, IndexScheme};

fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn width<'a>(labels: impl Iterator<Item = &'a str>) -> usize {
    labels.map(|l| l.chars().count()).max().unwrap_or(0)
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

/// 1-based indices as a set.
fn cell(indices: &[usize]) -> String {
    let list: Vec<String> = indices.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", list.join(","))
}

pub fn validation(model: &CausalModel, report: &ModelReport) -> String {
    let mut s = String::new();
    if report.is_valid() {
        let _ = writeln!(s, "valid: {} variables, {} edges", model.len(), model.dag().edge_count());
    } else {
        let _ = writeln!(s, "invalid: {} violation(s)", report.violations.len());
        for v in &report.violations {
            let _ = writeln!(s, "  {v}");
        }
    }
    s
}

pub fn joint(model: &CausalModel, scheme: &IndexScheme, joint: &Distribution) -> String {
    let rows: Vec<String> = scheme
        .states()
        .map(|d| {
            d.iter()
                .enumerate()
                .map(|(v, &i)| format!("{}={}", model.dag().name(v), model.variable(v).values[i]))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let w = width(rows.iter().map(String::as_str));
    let mut s = String::new();
    for (row, p) in rows.iter().zip(joint.weights()) {
        let _ = writeln!(s, "{row:<w$}  {}", fmt_num(*p));
    }
    s
}

pub fn naturality(report: &NaturalityReport) -> String {
    let mode = match report.mode {
        NaturalityMode::Grouped => "grouped",
        NaturalityMode::Edgewise => "edgewise",
    };
    let mut s = String::new();
    let _ = writeln!(s, "naturality ({mode} mode, tol {}): {}", sci(report.tol), verdict(report.pass));
    let w = width(report.checks.iter().map(|c| c.label.as_str()));
    for c in &report.checks {
        let _ = writeln!(s, "  {:<w$}  deviation {:<9}  {}", c.label, sci(c.deviation), if c.pass { "ok" } else { "FAIL" });
    }
    let _ = writeln!(s, "max deviation {}", sci(report.max_deviation));
    s
}

pub fn equivalence(report: &EquivalenceReport) -> String {
    let mut s = naturality(&report.naturality);
    if report.non_permutations.is_empty() {
        let _ = writeln!(s, "components: all permutations");
    } else {
        let _ = writeln!(s, "components not permutations: {}", report.non_permutations.join(", "));
    }
    let _ = writeln!(s, "equivalence: {}", verdict(report.equivalent));
    s
}

pub fn interventions(report: &InterventionReport) -> String {
    let sweep = match report.sweep {
        Sweep::All => "all cut sets",
        Sweep::Singletons => "empty and single-vertex cut sets",
    };
    let mut s = String::new();
    let _ = writeln!(s, "intervention consistency ({sweep}, tol {}): {}", sci(report.tol), verdict(report.pass));
    let labels: Vec<(String, String)> =
        report.cuts.iter().map(|c| (set(&c.macro_cut), set(&c.micro_cut))).collect();
    let wm = width(labels.iter().map(|l| l.0.as_str()));
    let wg = width(labels.iter().map(|l| l.1.as_str()));
    for (c, (m, g)) in report.cuts.iter().zip(&labels) {
        let _ = writeln!(
            s,
            "  cut {m:<wm$}  source cut {g:<wg$}  deviation {:<9}  {}",
            sci(c.deviation),
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "max deviation {}", sci(report.max_deviation));
    s
}

fn constants(s: &mut String, report: &HomogeneityReport) {
    let _ = writeln!(s, "block constants (row cell j, column cell i):");
    for (j, row) in report.constants.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|c| fmt_num(*c)).collect();
        let _ = writeln!(s, "  j={}: {}", j + 1, vals.join("  "));
    }
}

fn block_failures(s: &mut String, report: &HomogeneityReport, indent: &str) {
    for b in &report.failures {
        let sums: Vec<String> = b.column_sums.iter().map(|x| fmt_num(*x)).collect();
        let _ = writeln!(
            s,
            "{indent}block ({},{}): columns {} sum to {} around {} (deviation {})",
            b.x_cell + 1,
            b.y_cell + 1,
            cell(&b.columns),
            sums.join(", "),
            fmt_num(b.constant),
            sci(b.deviation)
        );
    }
}

pub fn homogeneity(file: &ChannelFile, report: &HomogeneityReport, tol: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "homogeneity (tol {}): {}", sci(tol), verdict(report.pass));
    let xs: Vec<String> = file.tau_x.cells().iter().map(|c| cell(c)).collect();
    let ys: Vec<String> = file.tau_y.cells().iter().map(|c| cell(c)).collect();
    let _ = writeln!(s, "column cells: {}", xs.join(" "));
    let _ = writeln!(s, "row cells: {}", ys.join(" "));
    constants(&mut s, report);
    if !report.failures.is_empty() {
        let _ = writeln!(s, "failing blocks:");
        block_failures(&mut s, report, "  ");
    }
    let _ = writeln!(s, "worst deviation {}", sci(report.worst_deviation));
    s
}

pub fn synthesis(model: &CausalModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "synthesis: PASS");
    for v in 0..model.len() {
        let parents: Vec<&str> = model.dag().parents(v).iter().map(|&p| model.dag().name(p)).collect();
        let _ = writeln!(s, "{} <- [{}]", model.dag().name(v), parents.join(", "));
        for row in model.mechanism(v).rows() {
            let vals: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            let _ = writeln!(s, "  {}", vals.join("  "));
        }
    }
    s
}

pub fn synthesis_failures(failures: &[VertexFailure], tol: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "synthesis (tol {}): FAIL", sci(tol));
    for f in failures {
        let parents = if f.parents.is_empty() { "no parents".to_string() } else { f.parents.join(", ") };
        let _ = writeln!(s, "{} is not homogeneous over {} (worst deviation {})", f.vertex, parents, sci(f.report.worst_deviation));
        for b in &f.report.failures {
            let sums: Vec<String> = b.column_sums.iter().map(|x| fmt_num(*x)).collect();
            let _ = writeln!(
                s,
                "  {} -> {}: column sums {} around {} (deviation {})",
                f.x_cell_labels[b.x_cell],
                f.y_cell_labels[b.y_cell],
                sums.join(", "),
                fmt_num(b.constant),
                sci(b.deviation)
            );
        }
    }
    s
}
