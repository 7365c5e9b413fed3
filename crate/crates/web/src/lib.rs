//! WebAssembly bindings for the browser demo.
//!
//! Each exported function has a plain Rust counterpart (`*_json`) that does
//! the work and reports errors as strings, so the logic is testable without a
//! JavaScript host.

use fairfront_core::fairness::{DisparityVariant, GateParams, PreProcessor};
use fairfront_core::harness::{generate, FrontierDocument, SyntheticSpec};
use fairfront_core::pareto::{frontier_indices, frontier_query, ObjectiveSpec, QueryObjective};
use fairfront_core::SeededRng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Stream positions sampled for each cumulative curve.
const CURVE_POINTS: usize = 200;

fn load(doc_json: &str) -> Result<FrontierDocument, String> {
    FrontierDocument::from_json(doc_json).map_err(|e| e.to_string())
}

/// Indices of the Pareto-optimal records of a `frontier.json` document.
pub fn frontier_json(doc_json: &str, objectives: &str) -> Result<Vec<usize>, String> {
    let doc = load(doc_json)?;
    let spec = if objectives.trim().is_empty() {
        ObjectiveSpec::default()
    } else {
        ObjectiveSpec::parse(objectives).map_err(|e| e.to_string())?
    };
    Ok(frontier_indices(&doc.records, &spec))
}

pub fn frontier_query_json(doc_json: &str, max_eps: f64, max_gamma: f64, objective: &str) -> Result<Option<usize>, String> {
    let doc = load(doc_json)?;
    let objective: QueryObjective = objective.parse().map_err(|e: fairfront_core::Error| e.to_string())?;
    frontier_query(&doc.records, max_eps, max_gamma, objective).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantTrace {
    pub variant: DisparityVariant,
    pub answered: usize,
    /// Answered count after each of `positions`.
    pub curve: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSimulation {
    pub stream_length: usize,
    pub positions: Vec<usize>,
    pub variants: Vec<VariantTrace>,
}

/// Streams the three-group variant task through the pre-processor once per
/// disparity variant and records how many examples each one admits.
pub fn simulate_gate_variants_json(rho_fair: f64, min_count: u32, seed: u32) -> Result<VariantSimulation, String> {
    let seed = u64::from(seed);
    let data = generate(&SyntheticSpec::variant_task(seed)).map_err(|e| e.to_string())?;
    let mut stream: Vec<_> = data.all().cloned().collect();
    SeededRng::new(seed).shuffle(&mut stream);

    let n = stream.len();
    let positions: Vec<usize> = (1..=CURVE_POINTS).map(|i| (i * n).div_ceil(CURVE_POINTS)).collect();
    let mut variants = Vec::new();
    for variant in DisparityVariant::ALL {
        let params = GateParams::new(rho_fair, u64::from(min_count))
            .map_err(|e| e.to_string())?
            .with_variant(variant);
        let mut pre = PreProcessor::new(data.groups, data.classes, params).map_err(|e| e.to_string())?;
        let (mut answered, mut curve, mut next) = (0, Vec::with_capacity(CURVE_POINTS), 0);
        for (i, example) in stream.iter().enumerate() {
            if pre.accept(example).map_err(|e| e.to_string())? {
                answered += 1;
            }
            while next < positions.len() && positions[next] == i + 1 {
                curve.push(answered);
                next += 1;
            }
        }
        variants.push(VariantTrace { variant, answered, curve });
    }
    Ok(VariantSimulation {
        stream_length: n,
        positions,
        variants,
    })
}

/// Pareto-optimal record indices as a JSON array.
#[wasm_bindgen]
pub fn frontier(doc_json: &str, objectives: &str) -> Result<Vec<u32>, JsError> {
    frontier_json(doc_json, objectives)
        .map(|v| v.into_iter().map(|i| i as u32).collect())
        .map_err(|e| JsError::new(&e))
}

/// Index of the best feasible record, or `undefined` when none qualifies.
#[wasm_bindgen(js_name = frontierQuery)]
pub fn frontier_query_js(doc_json: &str, max_eps: f64, max_gamma: f64, objective: &str) -> Result<Option<u32>, JsError> {
    frontier_query_json(doc_json, max_eps, max_gamma, objective)
        .map(|o| o.map(|i| i as u32))
        .map_err(|e| JsError::new(&e))
}

/// JSON-encoded [`VariantSimulation`].
#[wasm_bindgen(js_name = simulateGateVariants)]
pub fn simulate_gate_variants(rho_fair: f64, min_count: u32, seed: u32) -> Result<String, JsError> {
    let sim = simulate_gate_variants_json(rho_fair, min_count, seed).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&sim).map_err(|e| JsError::new(&e.to_string()))
}
