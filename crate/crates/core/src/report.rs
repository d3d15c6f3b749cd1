//! Text and SVG artifacts: confusion tables and heatmaps, score records,
//! training curves and `Λ(t)` curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datagen::TimeWindow;
use crate::metrics::{ConfusionMatrix, Scores};
use crate::nn::TrainReport;
use crate::qchannel::{BathConstants, NoiseKind};
use crate::{Error, Result};

/// CSV with a header row and a header column of class labels.
/// Rows are actual classes, columns predicted classes.
pub fn confusion_csv(c: &ConfusionMatrix, labels: &[String]) -> String {
    let mut out = String::from("actual\\predicted");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (j, row) in c.rows().enumerate() {
        out.push_str(&labels[j]);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

const LOW: [f64; 3] = [214.0, 234.0, 248.0];
const HIGH: [f64; 3] = [200.0, 16.0, 32.0];

/// Light blue at 0, red at 1.
fn heat(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let c: Vec<u8> = (0..3)
        .map(|i| (LOW[i] + (HIGH[i] - LOW[i]) * f).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Heatmap with cell shade proportional to the count over the largest count.
pub fn confusion_svg(c: &ConfusionMatrix, labels: &[String], title: &str) -> String {
    let m = c.n_classes();
    let cell = 36.0;
    let left = 90.0;
    let top = 60.0;
    let size = cell * m as f64;
    let width = left + size + 20.0;
    let height = top + size + 80.0;
    let max = c.counts().iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        left + size / 2.0,
        esc(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#,
        left + size / 2.0,
        top + size + 60.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">actual</text>"#,
        top + size / 2.0,
        top + size / 2.0
    );
    for j in 0..m {
        let y = top + cell * j as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            left - 4.0,
            y + cell / 2.0 + 3.0,
            esc(&labels[j])
        );
        let x = left + cell * j as f64 + cell / 2.0;
        let ly = top + size + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{ly}" text-anchor="end" transform="rotate(-45 {x} {ly})">{}</text>"#,
            esc(&labels[j])
        );
        for k in 0..m {
            let v = c.get(j, k);
            let f = v as f64 / max;
            let x = left + cell * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{}" stroke="white"/>"#,
                heat(f)
            );
            if v > 0 {
                let ink = if f > 0.5 { "white" } else { "black" };
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v}</text>"#,
                    x + cell / 2.0,
                    y + cell / 2.0 + 3.0
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Scores plus the labels they refer to, as written to `scores.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub class_names: Vec<String>,
    pub class_values: Vec<f64>,
    pub samples: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Diagonal over row sum (per actual class).
    pub row_ratio: Vec<f64>,
    /// Diagonal over column sum (per predicted class).
    pub col_ratio: Vec<f64>,
    pub f1: Vec<f64>,
    pub degenerate_classes: Vec<usize>,
    pub confusion: Vec<Vec<u64>>,
}

impl ScoreRecord {
    pub fn new(scores: &Scores, c: &ConfusionMatrix, names: &[String], values: &[f64]) -> Self {
        ScoreRecord {
            class_names: names.to_vec(),
            class_values: values.to_vec(),
            samples: c.total(),
            accuracy: scores.accuracy,
            macro_f1: scores.macro_f1,
            row_ratio: scores.row_ratio.clone(),
            col_ratio: scores.col_ratio.clone(),
            f1: scores.f1.clone(),
            degenerate_classes: scores.degenerate_classes.clone(),
            confusion: c.rows().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn training_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for e in &report.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        );
    }
    out
}

/// `Λ(t)` sampled on a uniform grid, one curve per class value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub kind: NoiseKind,
    pub class_values: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[c][i]` is `Λ(times[i])` for class value `c`.
    pub values: Vec<Vec<f64>>,
}

impl Curves {
    pub fn compute(
        kind: NoiseKind,
        constants: &BathConstants,
        class_values: &[f64],
        window: TimeWindow,
        n_points: usize,
    ) -> Result<Self> {
        window.validate()?;
        if n_points < 2 {
            return Err(Error::config("n_points", "need at least 2 points"));
        }
        let step = (window.t_max - window.t_min) / (n_points - 1) as f64;
        let times: Vec<f64> = (0..n_points)
            .map(|i| {
                if i == n_points - 1 {
                    window.t_max
                } else {
                    window.t_min + step * i as f64
                }
            })
            .collect();
        let values = class_values
            .iter()
            .map(|&nu| {
                times
                    .iter()
                    .map(|&t| constants.lambda(kind, t, nu))
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Curves {
            kind,
            class_values: class_values.to_vec(),
            times,
            values,
        })
    }

    pub fn to_csv(&self) -> String {
        let sym = self.kind.parameter_symbol();
        let mut out = String::from("t");
        for v in &self.class_values {
            let _ = write!(out, ",{sym}={v}");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for c in &self.values {
                let _ = write!(out, ",{}", c[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Line plot; curve colour runs from red (first value) to blue (last).
    pub fn to_svg(&self) -> String {
        let (w, h) = (640.0, 400.0);
        let (l, r, t, b) = (60.0, 110.0, 20.0, 40.0);
        let pw = w - l - r;
        let ph = h - t - b;
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        let flat = self.values.iter().flatten();
        let lo = flat.clone().cloned().fold(f64::INFINITY, f64::min).min(0.0);
        let hi = flat.cloned().fold(f64::NEG_INFINITY, f64::max).max(1.0);
        let sx = |x: f64| l + (x - t0) / (t1 - t0) * pw;
        let sy = |y: f64| t + (hi - y) / (hi - lo) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for (val, anchor) in [(lo, "end"), (hi, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="{anchor}">{val:.2}</text>"#,
                l - 4.0,
                sy(val) + 4.0
            );
        }
        if lo < 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="{l}" x2="{}" y1="{y}" y2="{y}" stroke="#999" stroke-dasharray="4 3"/>"##,
                l + pw,
                y = sy(0.0)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{l}" y="{}" text-anchor="middle">{t0:.2}</text><text x="{}" y="{}" text-anchor="middle">{t1:.2}</text>"#,
            t + ph + 16.0,
            l + pw,
            t + ph + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
            l + pw / 2.0,
            h - 8.0
        );
        let n = self.values.len().max(2) - 1;
        let sym = self.kind.parameter_symbol();
        for (c, curve) in self.values.iter().enumerate() {
            let f = c as f64 / n as f64;
            let colour = format!(
                "rgb({},{},{})",
                (210.0 * (1.0 - f)).round(),
                40,
                (210.0 * f).round()
            );
            let pts: Vec<String> = self
                .times
                .iter()
                .zip(curve)
                .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
                pts.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{colour}">{sym}={:.3}</text>"#,
                l + pw + 8.0,
                t + 12.0 + 14.0 * c as f64,
                self.class_values[c]
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
