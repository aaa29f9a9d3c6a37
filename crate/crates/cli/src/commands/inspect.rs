use std::fs;
use std::path::Path;

use ndarray::Array1;
use pdf_core::dataset::dataset_from_json;
use pdf_core::family::{build_family, FamilySpec, Preset, Sparsity};
use pdf_core::graph::Graph;
use pdf_core::spectral::{classify_filter, eigendecompose, smoothness_normalized, smoothness_quadratic, FilterVerdict, PolyFilter};
use pdf_core::DenseSymMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::config::config_err;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorReport {
    pub name: String,
    pub spectrum: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_verdict: Option<FilterVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InspectReport {
    pub graph: String,
    pub n: usize,
    pub edges: usize,
    /// Laplacian quadratic form of each feature column.
    pub smoothness: Vec<f64>,
    /// Normalized-Laplacian quadratic form of each feature column.
    pub smoothness_normalized: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<Vec<f64>>,
    pub operators: Vec<OperatorReport>,
}

/// Operators to inspect: a named preset or a family spec.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorChoice {
    Preset(Preset),
    Family(FamilySpec),
}

/// Accepts a preset name (`laplacian`, `norm_laplacian_selfloop`,
/// `sym_norm_adj`) or a JSON list of `[eps, k]` pairs, optionally followed by
/// `@` and a sparsity such as `hop_masked(2)`.
pub fn parse_family(arg: &str) -> anyhow::Result<OperatorChoice> {
    let arg = arg.trim();
    if let Ok(p) = arg.parse::<Preset>() {
        return Ok(OperatorChoice::Preset(p));
    }
    let (list, sparsity) = match arg.split_once('@') {
        Some((l, s)) => (l, s.parse::<Sparsity>().map_err(|e| config_err(format!("--family: {e}")))?),
        None => (arg, Sparsity::Dense),
    };
    let pairs: Vec<(f64, usize)> =
        serde_json::from_str(list).map_err(|e| config_err(format!("--family: expected a preset or [[eps, k], ...]: {e}")))?;
    let spec = FamilySpec::dense(&pairs)
        .map_err(|e| config_err(format!("--family: {e}")))?
        .with_sparsity(sparsity);
    Ok(OperatorChoice::Family(spec))
}

pub fn parse_filter(arg: &str) -> anyhow::Result<PolyFilter> {
    let coeffs = arg
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_err(format!("--filter: {e}")))?;
    PolyFilter::new(coeffs).map_err(|e| config_err(format!("--filter: {e}")))
}

/// Reads a graph from a dataset fixture (picking `index`) or from a single
/// graph object in the same schema, where `target` may be omitted.
pub fn load_graph(path: &Path, index: usize) -> anyhow::Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("graph: cannot read {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| config_err(format!("graph: {e}")))?;
    if value.get("graphs").is_none() {
        if let Some(obj) = value.as_object_mut() {
            obj.entry("target").or_insert(Value::from(0.0));
        }
        value = serde_json::json!({"task": "regression", "graphs": [value]});
    }
    let ds = dataset_from_json(&value.to_string()).map_err(|e| config_err(format!("graph: {e}")))?;
    ds.graphs()
        .get(index)
        .cloned()
        .ok_or_else(|| config_err(format!("--index: graph {index} of {}", ds.len())))
}

fn operator_report(name: String, m: &DenseSymMatrix, filter: Option<&PolyFilter>) -> anyhow::Result<OperatorReport> {
    let dec = eigendecompose(m)?;
    Ok(OperatorReport {
        name,
        filter_verdict: filter.map(|p| classify_filter(p, &dec.lambda)),
        spectrum: dec.lambda.to_vec(),
    })
}

pub fn cmd_inspect(g: &Graph, ops: &OperatorChoice, filter: Option<&PolyFilter>) -> anyhow::Result<InspectReport> {
    let signals = g.features().as_signals();
    let mut smooth = Vec::new();
    let mut smooth_norm = Vec::new();
    for col in signals.columns() {
        let f: Array1<f64> = col.to_owned();
        smooth.push(smoothness_quadratic(g, &f)?);
        smooth_norm.push(smoothness_normalized(g, &f)?);
    }
    let operators = match ops {
        OperatorChoice::Preset(p) => vec![operator_report(p.to_string(), &pdf_core::family::preset_operator(g, *p), filter)?],
        OperatorChoice::Family(spec) => {
            let fam = build_family(g, spec)?;
            fam.members()
                .iter()
                .map(|(tag, m)| operator_report(format!("{tag}"), m, filter))
                .collect::<anyhow::Result<Vec<_>>>()?
        }
    };
    Ok(InspectReport {
        graph: g.name().to_string(),
        n: g.n(),
        edges: g.edges().len(),
        smoothness: smooth,
        smoothness_normalized: smooth_norm,
        filter: filter.map(|p| p.coeffs().to_vec()),
        operators,
    })
}
