//! JSON metric reports. Each report carries its inputs and the conventions
//! that were in force so a number can be traced back to how it was made.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    accuracy_vs_consensus, cohen_kappa, compression, edge_prf, majority_consensus, prob_precision_recall, wke, EdgeSet,
    EvalError, WkeWeights,
};

pub const ZERO_COMPONENT_WKE: &str = "a zero component gives WKE 0";
pub const BOTH_EMPTY: &str = "product with empty prediction and empty reference scores P=R=1";
pub const ONE_SIDE_EMPTY: &str = "product with exactly one empty side scores P=R=0";
pub const F1_FROM_MACRO: &str = "F1 is computed from macro P and macro R, not averaged per product";
pub const SUBSTRING_MATCH: &str =
    "value matches when the normalized reference value contains the normalized predicted value under the same key";
pub const RECALL_COVERAGE: &str = "value recall counts reference facts covered by at least one matching prediction";
pub const MACRO_OVER_SHARED: &str = "macro average over product ids present in both sets";
pub const EMPTY_KEYSET: &str = "P-Prec of an empty key set is 0; P-Rec is 0 when the pool is empty";
pub const KAPPA_DEGENERATE: &str = "kappa is 1 when chance agreement is 1";
pub const CONSENSUS_TIES: &str = "instances where no single label reaches the threshold abstain";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metric: String,
    pub inputs: Value,
    pub results: Value,
    pub conventions: Vec<String>,
}

/// Inputs for the product-type score. Compression comes either as a rate or
/// as the raw (N, V) counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMetricInputs {
    pub acceptance: f64,
    pub coverage: f64,
    pub compression: Option<f64>,
    pub products: Option<u64>,
    pub canonical_types: Option<u64>,
}

pub fn types_report(inputs: TypeMetricInputs) -> Result<MetricsReport, EvalError> {
    let comp = match (inputs.compression, inputs.products, inputs.canonical_types) {
        (Some(c), _, _) => c,
        (None, Some(n), Some(v)) => compression(n, v)?,
        _ => return Err(EvalError::Domain("need either a compression rate or both N and V".into())),
    };
    let score = wke(inputs.acceptance, comp, inputs.coverage)?;
    Ok(MetricsReport {
        metric: "types".into(),
        inputs: serde_json::to_value(inputs).expect("plain struct"),
        results: json!({
            "acceptance": inputs.acceptance,
            "compression": comp,
            "coverage": inputs.coverage,
            "wke": score,
            "weights": WkeWeights::default(),
        }),
        conventions: vec![ZERO_COMPONENT_WKE.into()],
    })
}

/// Per-model probabilistic key precision/recall plus the key-level WKE,
/// using each model's prior as its acceptance rate.
pub fn keys_report(
    keysets: &BTreeMap<String, BTreeSet<String>>,
    priors: &BTreeMap<String, f64>,
) -> Result<MetricsReport, EvalError> {
    let scores = prob_precision_recall(keysets, priors)?;
    let mut models = serde_json::Map::new();
    for (m, s) in &scores {
        let score = wke(priors[m], s.p_prec, s.p_rec)?;
        models.insert(
            m.clone(),
            json!({
                "p_prec": s.p_prec,
                "p_rec": s.p_rec,
                "tp": s.tp,
                "keys": s.keys,
                "wke": score,
            }),
        );
    }
    let gt_hat = scores.values().next().map(|s| s.gt_hat).unwrap_or(0.0);
    Ok(MetricsReport {
        metric: "keys".into(),
        inputs: json!({ "priors": priors, "keysets": keysets }),
        results: json!({ "gt_hat": gt_hat, "models": models }),
        conventions: vec![EMPTY_KEYSET.into(), ZERO_COMPONENT_WKE.into()],
    })
}

pub fn edges_report(predicted: &EdgeSet, reference: &EdgeSet) -> MetricsReport {
    let r = edge_prf(predicted, reference);
    MetricsReport {
        metric: "edges".into(),
        inputs: json!({
            "predicted_products": predicted.len(),
            "reference_products": reference.len(),
            "shared_products": r.products.len(),
        }),
        results: json!({
            "keys": r.keys,
            "values": r.values,
            "per_product": r.products,
        }),
        conventions: vec![
            MACRO_OVER_SHARED.into(),
            F1_FROM_MACRO.into(),
            SUBSTRING_MATCH.into(),
            RECALL_COVERAGE.into(),
            BOTH_EMPTY.into(),
            ONE_SIDE_EMPTY.into(),
        ],
    }
}

pub fn kappa_report(a: &[String], b: &[String]) -> Result<MetricsReport, EvalError> {
    let k = cohen_kappa(a, b)?;
    Ok(MetricsReport {
        metric: "kappa".into(),
        inputs: json!({ "instances": a.len() }),
        results: json!({ "kappa": k }),
        conventions: vec![KAPPA_DEGENERATE.into()],
    })
}

/// Consensus labels of a panel, every judge's accuracy against them, the
/// pairwise kappa matrix and, optionally, the accuracy of outside candidates.
pub fn consensus_report(
    panel: &BTreeMap<String, Vec<String>>,
    threshold: usize,
    candidates: &BTreeMap<String, Vec<String>>,
) -> Result<MetricsReport, EvalError> {
    let consensus = majority_consensus(panel, threshold)?;
    let abstained = consensus.iter().filter(|c| c.is_none()).count();
    let mut judge_acc = serde_json::Map::new();
    for (j, labels) in panel {
        judge_acc.insert(j.clone(), json!(accuracy_vs_consensus(labels, &consensus)?));
    }
    let mut cand_acc = serde_json::Map::new();
    for (c, labels) in candidates {
        cand_acc.insert(c.clone(), json!(accuracy_vs_consensus(labels, &consensus)?));
    }
    let mut pairwise = Vec::new();
    let judges: Vec<&String> = panel.keys().collect();
    for (i, a) in judges.iter().enumerate() {
        for b in &judges[i + 1..] {
            pairwise.push(json!({ "a": a, "b": b, "kappa": cohen_kappa(&panel[*a], &panel[*b])? }));
        }
    }
    Ok(MetricsReport {
        metric: "consensus".into(),
        inputs: json!({ "judges": panel.len(), "instances": consensus.len(), "threshold": threshold }),
        results: json!({
            "consensus": consensus,
            "abstained": abstained,
            "judge_accuracy": judge_acc,
            "candidate_accuracy": cand_acc,
            "pairwise_kappa": pairwise,
        }),
        conventions: vec![CONSENSUS_TIES.into(), KAPPA_DEGENERATE.into()],
    })
}
