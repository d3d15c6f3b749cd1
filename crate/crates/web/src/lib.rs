//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>`
//! so the logic can be tested off the browser.

use serde_json::json;
use wasm_bindgen::prelude::*;

use dephasing::datagen::{features, TimeWindow};
use dephasing::experiment::{self, preset};
use dephasing::qchannel::{BathConstants, DensityMatrix, NoiseKind};
use dephasing::report::{confusion_svg, Curves};
use dephasing::tomo::SicPovm;

fn parse_kind(kind: &str) -> Result<NoiseKind, String> {
    match kind {
        "classical" => Ok(NoiseKind::Classical),
        "quantum" => Ok(NoiseKind::Quantum),
        other => Err(format!("unknown noise kind '{other}'")),
    }
}

pub fn curves_svg(
    kind: &str,
    values: &[f64],
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<String, String> {
    let kind = parse_kind(kind)?;
    let window = TimeWindow::new(t_min, t_max).map_err(|e| e.to_string())?;
    let curves = Curves::compute(kind, &BathConstants::default(), values, window, points)
        .map_err(|e| e.to_string())?;
    Ok(curves.to_svg())
}

/// Evolves the state with Bloch vector `r·(sinθ cosφ, sinθ sinφ, cosθ)` to
/// `t1` and `t2` and returns `{"lambda": [Λ(t1), Λ(t2)], "features": [8 SIC
/// probabilities]}`.
#[allow(clippy::too_many_arguments)]
pub fn probe_json(
    kind: &str,
    nu: f64,
    theta: f64,
    phi: f64,
    radius: f64,
    t1: f64,
    t2: f64,
) -> Result<String, String> {
    let kind = parse_kind(kind)?;
    let b = [
        radius * theta.sin() * phi.cos(),
        radius * theta.sin() * phi.sin(),
        radius * theta.cos(),
    ];
    let rho = DensityMatrix::from_bloch(b).map_err(|e| e.to_string())?;
    let consts = BathConstants::default();
    let l1 = consts.lambda(kind, t1, nu).map_err(|e| e.to_string())?;
    let l2 = consts.lambda(kind, t2, nu).map_err(|e| e.to_string())?;
    let x = features(&rho, l1, l2, &SicPovm::tetrahedron()).map_err(|e| e.to_string())?;
    Ok(json!({ "lambda": [l1, l2], "features": x }).to_string())
}

/// Runs a shipped preset with a reduced sample count and returns the test
/// scores and a confusion-matrix SVG as JSON.
pub fn train_json(
    name: &str,
    samples_per_class: usize,
    max_epochs: usize,
) -> Result<String, String> {
    let mut cfg = preset(name).map_err(|e| e.to_string())?;
    cfg.samples_per_class = samples_per_class;
    cfg.max_epochs = max_epochs;
    let out = experiment::run(&cfg).map_err(|e| e.to_string())?;
    let svg = confusion_svg(&out.confusion, &out.scores.class_names, &cfg.name);
    Ok(json!({
        "name": cfg.name,
        "description": cfg.description,
        "accuracy": out.scores.accuracy,
        "macro_f1": out.scores.macro_f1,
        "epochs": out.report.stopped_epoch,
        "best_epoch": out.report.best_epoch,
        "svg": svg,
    })
    .to_string())
}

#[wasm_bindgen(js_name = presetNames)]
pub fn preset_names() -> Vec<String> {
    experiment::preset_names().map(String::from).collect()
}

#[wasm_bindgen(js_name = lambdaCurves)]
pub fn lambda_curves(
    kind: &str,
    values: Vec<f64>,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<String, JsError> {
    curves_svg(kind, &values, t_min, t_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = probeFeatures)]
#[allow(clippy::too_many_arguments)]
pub fn probe_features(
    kind: &str,
    nu: f64,
    theta: f64,
    phi: f64,
    radius: f64,
    t1: f64,
    t2: f64,
) -> Result<String, JsError> {
    probe_json(kind, nu, theta, phi, radius, t1, t2).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainPreset)]
pub fn train_preset(
    name: &str,
    samples_per_class: usize,
    max_epochs: usize,
) -> Result<String, JsError> {
    train_json(name, samples_per_class, max_epochs).map_err(|e| JsError::new(&e))
}
