//! Report tables (csv and markdown) and the trade-off scatter plot.
//!
//! Everything here formats numbers already computed by earlier stages.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triage_core::consensus::{Interval, PairRow};
use triage_core::evaluation::{Comparison, EvaluationReport};
use triage_core::{PromptSetting, TriageLabel};

/// Missing values print as this in every table.
pub const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn to_markdown(&self) -> String {
        let cell = |s: &str| s.replace('|', "\\|");
        let mut out = String::new();
        let _ = writeln!(out, "| {} |", self.headers.iter().map(|h| cell(h)).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.headers.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | "));
        }
        out
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x:.4}"))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{:.2}", 100.0 * x))
}

fn with_ci(row: &mut Vec<String>, iv: &Interval) {
    row.extend([num(iv.point), num(iv.lo), num(iv.hi)]);
}

fn with_pct_ci(row: &mut Vec<String>, iv: &Interval) {
    row.extend([pct(iv.point), pct(iv.lo), pct(iv.hi)]);
}

fn class_columns(prefix: &str) -> Vec<String> {
    TriageLabel::ALL.iter().map(|l| format!("{prefix}{}", l.as_str().replace('-', "_"))).collect()
}

pub fn performance_table(reports: &[EvaluationReport]) -> Table {
    let mut t = Table::new(&[
        "configuration",
        "model",
        "setting",
        "n",
        "valid_n",
        "parse_fail_pct",
        "macro_f1",
        "macro_f1_lo",
        "macro_f1_hi",
        "accuracy",
        "accuracy_lo",
        "accuracy_hi",
    ]);
    t.headers.extend(class_columns("f1_"));
    for r in reports {
        let mut row = vec![
            r.config_name.clone(),
            r.model_name.clone(),
            r.setting.to_string(),
            r.n_cases.to_string(),
            r.valid_n.to_string(),
            pct(Some(r.parse_fail_rate)),
        ];
        with_ci(&mut row, &r.macro_f1);
        with_ci(&mut row, &r.accuracy);
        for k in 0..TriageLabel::COUNT {
            row.push(num(r.scores.map(|s| s.per_class_f1[k])));
        }
        t.rows.push(row);
    }
    t
}

pub fn safety_table(reports: &[EvaluationReport]) -> Table {
    let mut t = Table::new(&[
        "configuration",
        "under_triage",
        "under_triage_lo",
        "under_triage_hi",
        "severe_under_triage",
        "severe_under_triage_lo",
        "severe_under_triage_hi",
        "over_triage",
        "over_triage_lo",
        "over_triage_hi",
        "urgent_or_higher_recall",
        "urgent_or_higher_recall_lo",
        "urgent_or_higher_recall_hi",
        "emergency_recall",
        "emergency_recall_lo",
        "emergency_recall_hi",
        "emergency_false_negatives",
    ]);
    for r in reports {
        let mut row = vec![r.config_name.clone()];
        for iv in [
            &r.under_triage,
            &r.severe_under_triage,
            &r.over_triage,
            &r.urgent_or_higher_recall,
            &r.emergency_recall,
        ] {
            with_ci(&mut row, iv);
        }
        row.push(r.safety.map_or_else(|| NA.to_string(), |s| s.emergency_false_negatives.to_string()));
        t.rows.push(row);
    }
    t
}

/// Prompted configurations grouped by model, settings in 0/4/12 order.
pub fn prompt_sensitivity_table(reports: &[EvaluationReport]) -> Table {
    let mut t = Table::new(&[
        "model",
        "setting",
        "macro_f1",
        "macro_f1_lo",
        "macro_f1_hi",
        "under_triage",
        "parse_fail_pct",
        "delta_macro_f1_vs_0_shot",
    ]);
    let mut models: Vec<&str> = Vec::new();
    for r in reports.iter().filter(|r| r.setting != PromptSetting::External) {
        if !models.contains(&r.model_name.as_str()) {
            models.push(&r.model_name);
        }
    }
    for m in models {
        let mut rows: Vec<&EvaluationReport> = reports
            .iter()
            .filter(|r| r.model_name == m && r.setting != PromptSetting::External)
            .collect();
        rows.sort_by_key(|r| r.setting);
        let zero = rows
            .iter()
            .find(|r| r.setting == PromptSetting::ZeroShot)
            .and_then(|r| r.macro_f1.point);
        for r in rows {
            let mut row = vec![m.to_string(), r.setting.to_string()];
            with_ci(&mut row, &r.macro_f1);
            row.push(num(r.under_triage.point));
            row.push(pct(Some(r.parse_fail_rate)));
            row.push(num(zero.zip(r.macro_f1.point).map(|(z, p)| p - z)));
            t.rows.push(row);
        }
    }
    t
}

pub fn pairs_table(pairs: &[PairRow]) -> Table {
    let mut t = Table::new(&[
        "model_a",
        "model_b",
        "best_single_macro_f1",
        "best_single_macro_f1_lo",
        "best_single_macro_f1_hi",
        "escalation_pct",
        "escalation_pct_lo",
        "escalation_pct_hi",
        "invalid_output_pct",
        "consensus_accuracy",
        "consensus_accuracy_lo",
        "consensus_accuracy_hi",
        "consensus_macro_f1",
        "consensus_macro_f1_lo",
        "consensus_macro_f1_hi",
        "oracle_hitl_macro_f1",
        "oracle_hitl_macro_f1_lo",
        "oracle_hitl_macro_f1_hi",
        "oracle_hitl_accuracy",
        "oracle_hitl_accuracy_lo",
        "oracle_hitl_accuracy_hi",
    ]);
    for p in pairs {
        let mut row = vec![p.model_a.clone(), p.model_b.clone()];
        with_ci(&mut row, &p.best_single_macro_f1);
        with_pct_ci(&mut row, &p.escalation_rate);
        row.push(pct(Some(p.report.invalid_output_rate)));
        for iv in [
            &p.consensus_accuracy,
            &p.consensus_macro_f1,
            &p.oracle_hitl_macro_f1,
            &p.oracle_hitl_accuracy,
        ] {
            with_ci(&mut row, iv);
        }
        t.rows.push(row);
    }
    t
}

pub fn per_class_consensus_table(pairs: &[PairRow]) -> Table {
    let mut t = Table::new(&[
        "model_a",
        "model_b",
        "class",
        "consensus_accuracy",
        "consensus_accuracy_by_gold",
        "oracle_hitl_f1",
    ]);
    for p in pairs {
        for (k, label) in TriageLabel::ALL.iter().enumerate() {
            t.rows.push(vec![
                p.model_a.clone(),
                p.model_b.clone(),
                label.to_string(),
                num(p.report.per_class_consensus_accuracy[k]),
                num(p.report.per_class_consensus_accuracy_by_gold[k]),
                num(Some(p.report.per_class_oracle_f1[k])),
            ]);
        }
    }
    t
}

pub fn mcnemar_table(comparisons: &[Comparison]) -> Table {
    let mut t = Table::new(&[
        "configuration_a",
        "configuration_b",
        "jointly_valid",
        "b",
        "c",
        "method",
        "statistic",
        "p_value",
        "delta_macro_f1",
        "delta_accuracy",
        "delta_under_triage",
        "delta_severe_under_triage",
        "delta_over_triage",
        "delta_urgent_or_higher_recall",
        "delta_emergency_recall",
    ]);
    for c in comparisons {
        let m = &c.mcnemar;
        let d = &c.deltas;
        let method = match m.method {
            triage_core::metrics::McNemarMethod::ExactBinomial => "exact-binomial",
            triage_core::metrics::McNemarMethod::ContinuityCorrected => "continuity-corrected",
        };
        t.rows.push(vec![
            c.config_a.clone(),
            c.config_b.clone(),
            c.jointly_valid.to_string(),
            m.b.to_string(),
            m.c.to_string(),
            method.to_string(),
            num(Some(m.statistic)),
            format!("{:.6}", m.p_value),
            num(d.macro_f1),
            num(d.accuracy),
            num(d.under_triage),
            num(d.severe_under_triage),
            num(d.over_triage),
            num(d.urgent_or_higher_recall),
            num(d.emergency_recall),
        ]);
    }
    t
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const W: f64 = 640.0;
const H: f64 = 560.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

/// Pixel position for (macro-F1, under-triage). Under-triage grows downward,
/// so better configurations sit toward the upper right.
pub fn plot_position(macro_f1: f64, under_triage: f64) -> (f64, f64) {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    (LEFT + macro_f1.clamp(0.0, 1.0) * pw, TOP + under_triage.clamp(0.0, 1.0) * ph)
}

/// One labeled point per configuration with both values defined.
pub fn tradeoff_svg(reports: &[EvaluationReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">Macro-F1 vs under-triage rate</text>"#,
        W / 2.0
    );
    let (x0, y0) = plot_position(0.0, 0.0);
    let (x1, y1) = plot_position(1.0, 1.0);
    let (xm, ym) = plot_position(0.5, 0.5);
    let _ = writeln!(
        s,
        r##"<rect class="favorable" x="{xm}" y="{y0}" width="{}" height="{}" fill="#e3f4e3"/>"##,
        x1 - xm,
        ym - y0
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" text-anchor="end" fill="#3a7a3a">higher F1, less under-triage</text>"##,
        x1 - 6.0,
        y0 + 16.0
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let (gx, _) = plot_position(v, 0.0);
        let (_, gy) = plot_position(0.0, v);
        let _ = writeln!(s, r##"<line x1="{gx}" y1="{y0}" x2="{gx}" y2="{y1}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{gy}" x2="{x1}" y2="{gy}" stroke="#dddddd"/>"##);
        let _ = writeln!(s, r#"<text x="{gx}" y="{}" text-anchor="middle">{v:.1}</text>"#, y1 + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, x0 - 8.0, gy + 4.0);
    }
    let _ = writeln!(
        s,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#333333"/>"##,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Macro-F1</text>"#,
        (x0 + x1) / 2.0,
        H - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">Under-triage rate (0 at top)</text>"#,
        (y0 + y1) / 2.0
    );
    for r in reports {
        let (Some(f1), Some(under)) = (r.macro_f1.point, r.under_triage.point) else {
            continue;
        };
        let (px, py) = plot_position(f1, under);
        let (tx, anchor) = if px > x1 - 120.0 { (px - 7.0, "end") } else { (px + 7.0, "start") };
        let name = xml_escape(&r.config_name);
        let _ = writeln!(
            s,
            r##"<g class="point"><title>{name}: macro-F1 {f1:.4}, under-triage {under:.4}</title><circle cx="{px:.2}" cy="{py:.2}" r="4.5" fill="#1f5fa8"/><text x="{tx:.2}" y="{:.2}" text-anchor="{anchor}">{name}</text></g>"##,
            py + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes every table as `<name>.csv` and `<name>.md` plus `tradeoff.svg`.
/// Returns the written paths relative to `dir`.
pub fn emit_report(
    dir: &Path,
    reports: &[EvaluationReport],
    comparisons: &[Comparison],
    pairs: &[PairRow],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let tables = [
        ("model_performance", performance_table(reports)),
        ("safety_metrics", safety_table(reports)),
        ("prompt_sensitivity", prompt_sensitivity_table(reports)),
        ("model_pairs", pairs_table(pairs)),
        ("consensus_per_class", per_class_consensus_table(pairs)),
        ("mcnemar", mcnemar_table(comparisons)),
    ];
    for (name, table) in &tables {
        for (ext, body) in [("csv", table.to_csv()), ("md", table.to_markdown())] {
            let rel = PathBuf::from(format!("{name}.{ext}"));
            fs::write(dir.join(&rel), body)?;
            written.push(rel);
        }
    }
    fs::write(dir.join("tradeoff.svg"), tradeoff_svg(reports))?;
    written.push(PathBuf::from("tradeoff.svg"));
    Ok(written)
}
