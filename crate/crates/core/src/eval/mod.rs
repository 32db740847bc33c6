//! Metrics: type/key efficiency scores, probabilistic key precision and
//! recall, edge-level P/R/F1, inter-rater agreement and panel consensus.
//!
//! Everything here is a pure function of its inputs.

mod agreement;
mod edges;
pub mod io;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{accuracy_vs_consensus, cohen_kappa, majority_consensus, DEFAULT_CONSENSUS_THRESHOLD};
pub use edges::{edge_prf, edge_prf_with, f1, EdgeReport, EdgeSet, Prf, ProductScore};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("no reliability prior for model {0:?}")]
    MissingPrior(String),
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {need} judges, got {have}")]
    NotEnoughJudges { have: usize, need: usize },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

fn unit(name: &str, x: f64) -> Result<f64, EvalError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(EvalError::Domain(format!("{name} = {x} is outside [0, 1]")))
    }
}

/// Component weights for [`wke_weighted`]. The default puts three times as
/// much weight on acceptance as on the other two terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkeWeights(pub f64, pub f64, pub f64);

impl Default for WkeWeights {
    fn default() -> Self {
        WkeWeights(3.0, 1.0, 1.0)
    }
}

/// Weighted harmonic mean of acceptance and two further rates
/// (compression and coverage for types, P-Prec and P-Rec for keys).
pub fn wke(acc: f64, m2: f64, m3: f64) -> Result<f64, EvalError> {
    wke_weighted(acc, m2, m3, WkeWeights::default())
}

/// A zero component makes the harmonic mean collapse to 0.
pub fn wke_weighted(acc: f64, m2: f64, m3: f64, w: WkeWeights) -> Result<f64, EvalError> {
    let xs = [unit("acceptance", acc)?, unit("second component", m2)?, unit("third component", m3)?];
    let ws = [w.0, w.1, w.2];
    if ws.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(EvalError::Domain(format!("weights must be positive, got {w:?}")));
    }
    if xs.contains(&0.0) {
        return Ok(0.0);
    }
    let num: f64 = ws.iter().sum();
    let den: f64 = ws.iter().zip(xs).map(|(w, x)| w / x).sum();
    Ok(num / den)
}

/// `1 - V/N`: how much canonicalization shrank `n` raw predictions into `v`
/// canonical nodes.
pub fn compression(n: u64, v: u64) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::Domain("compression needs N > 0".into()));
    }
    if v > n {
        return Err(EvalError::Domain(format!("V = {v} exceeds N = {n}")));
    }
    Ok(1.0 - v as f64 / n as f64)
}

/// Probability that at least one of several independent predictors is right.
///
/// Accumulated as `h += (1 - h) * p` rather than `1 - prod(1 - p)`: the
/// value is then exactly `p` for a single predictor and can only grow when
/// a predictor is appended, with no rounding in between.
pub fn noisy_or_gt_prob(priors: &[f64]) -> Result<f64, EvalError> {
    if priors.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut hit = 0.0;
    for &p in priors {
        hit += (1.0 - hit) * unit("prior", p)?;
    }
    Ok(hit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub p_prec: f64,
    pub p_rec: f64,
    pub tp: f64,
    pub gt_hat: f64,
    pub keys: usize,
}

/// Probabilistic precision/recall of several models' key sets, each key's
/// ground-truth probability coming from the priors of the models that
/// proposed it.
pub fn prob_precision_recall(
    keysets: &BTreeMap<String, BTreeSet<String>>,
    priors: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, ModelScore>, EvalError> {
    for (model, _) in keysets.iter() {
        let p = priors.get(model).ok_or_else(|| EvalError::MissingPrior(model.clone()))?;
        unit(&format!("prior of {model}"), *p)?;
    }
    let pool: BTreeSet<&String> = keysets.values().flatten().collect();
    let mut prob: BTreeMap<&String, f64> = BTreeMap::new();
    for key in &pool {
        let ps: Vec<f64> = keysets
            .iter()
            .filter(|(_, ks)| ks.contains(*key))
            .map(|(m, _)| priors[m])
            .collect();
        prob.insert(key, noisy_or_gt_prob(&ps)?);
    }
    let gt_hat: f64 = prob.values().sum();
    Ok(keysets
        .iter()
        .map(|(m, ks)| {
            let tp: f64 = ks.iter().map(|k| prob[k]).sum();
            let p_prec = if ks.is_empty() { 0.0 } else { tp / ks.len() as f64 };
            let p_rec = if gt_hat > 0.0 { tp / gt_hat } else { 0.0 };
            (
                m.clone(),
                ModelScore {
                    p_prec,
                    p_rec,
                    tp,
                    gt_hat,
                    keys: ks.len(),
                },
            )
        })
        .collect())
}
