//! Browser playground for the hpelm classifier.
//!
//! Thin wasm-bindgen wrappers around [`api`]: train a model on a synthetic
//! 2-D dataset and return a decision field, feature rankings, or an
//! accuracy-vs-neurons curve as JSON for the static page to draw. The API
//! layer is plain Rust so the host test suite exercises it directly.

pub mod api;

use wasm_bindgen::prelude::*;

fn to_js<T>(r: Result<T, hpelm::Error>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Train on a synthetic dataset and rasterize the decision function.
/// `kind` is `two_gaussians` or `xor`; returns JSON (see `api::DecisionField`).
#[wasm_bindgen]
pub fn decision_boundary(
    kind: &str,
    combo: &str,
    n: usize,
    seed: u64,
    ridge: &str,
    resolution: usize,
) -> Result<String, JsValue> {
    to_js(api::decision_boundary_json(
        kind, combo, n, seed, ridge, resolution,
    ))
}

/// Rank the features of a planted-feature dataset with both methods.
#[wasm_bindgen]
pub fn feature_ranking(n: usize, d: usize, seed: u64) -> Result<String, JsValue> {
    to_js(api::feature_ranking_json(n, d, seed))
}

/// Accuracy as a function of hidden-layer size, for one activation kind.
#[wasm_bindgen]
pub fn accuracy_curve(
    kind: &str,
    activation: &str,
    n: usize,
    seed: u64,
) -> Result<String, JsValue> {
    to_js(api::accuracy_curve_json(kind, activation, n, seed))
}
