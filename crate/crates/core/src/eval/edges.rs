use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::exec::{map_slice, Execution};
use crate::normalize::normalize;

/// product id -> distinct (key, value) facts.
pub type EdgeSet = BTreeMap<String, BTreeSet<(String, String)>>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn new(precision: f64, recall: f64) -> Self {
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductScore {
    pub product_id: String,
    pub keys: Prf,
    pub values: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    /// Products present in both sets, in id order.
    pub products: Vec<ProductScore>,
    /// Macro precision and recall; F1 is computed from those two.
    pub keys: Prf,
    pub values: Prf,
}

pub fn edge_prf(predicted: &EdgeSet, reference: &EdgeSet) -> EdgeReport {
    edge_prf_with(predicted, reference, Execution::Auto)
}

/// Score each shared product (possibly in parallel) and macro-average.
/// The sums run in product-id order either way, so the result does not
/// depend on `exec`.
pub fn edge_prf_with(predicted: &EdgeSet, reference: &EdgeSet, exec: Execution) -> EdgeReport {
    let shared: Vec<&String> = predicted.keys().filter(|id| reference.contains_key(*id)).collect();
    let products = map_slice(&shared, exec, |id| score_product(id, &predicted[*id], &reference[*id]));
    let n = products.len() as f64;
    let macro_avg = |get: fn(&ProductScore) -> (f64, f64)| {
        if products.is_empty() {
            return Prf::default();
        }
        let (mut p, mut r) = (0.0, 0.0);
        for s in &products {
            let (sp, sr) = get(s);
            p += sp;
            r += sr;
        }
        Prf::new(p / n, r / n)
    };
    let keys = macro_avg(|s| (s.keys.precision, s.keys.recall));
    let values = macro_avg(|s| (s.values.precision, s.values.recall));
    EdgeReport { products, keys, values }
}

/// Precision and recall for one product. Both sides empty scores 1/1; one
/// side empty scores 0/0.
fn ratio(hit_pred: usize, n_pred: usize, hit_ref: usize, n_ref: usize) -> Prf {
    match (n_pred, n_ref) {
        (0, 0) => Prf::new(1.0, 1.0),
        (0, _) | (_, 0) => Prf::new(0.0, 0.0),
        _ => Prf::new(hit_pred as f64 / n_pred as f64, hit_ref as f64 / n_ref as f64),
    }
}

fn score_product(id: &str, pred: &BTreeSet<(String, String)>, reference: &BTreeSet<(String, String)>) -> ProductScore {
    let norm = |s: &BTreeSet<(String, String)>| -> BTreeSet<(String, String)> {
        s.iter().map(|(k, v)| (normalize(k), normalize(v))).collect()
    };
    let (pred, reference) = (norm(pred), norm(reference));

    let pk: BTreeSet<&str> = pred.iter().map(|(k, _)| k.as_str()).collect();
    let rk: BTreeSet<&str> = reference.iter().map(|(k, _)| k.as_str()).collect();
    let common = pk.intersection(&rk).count();
    let keys = ratio(common, pk.len(), common, rk.len());

    // A predicted value matches when a reference value under the same key
    // contains it. Recall counts reference facts covered by some prediction.
    let matches = |(pk, pv): &(String, String), (rk, rv): &(String, String)| pk == rk && rv.contains(pv.as_str());
    let tp_pred = pred.iter().filter(|p| reference.iter().any(|r| matches(p, r))).count();
    let tp_ref = reference.iter().filter(|r| pred.iter().any(|p| matches(p, r))).count();
    let values = ratio(tp_pred, pred.len(), tp_ref, reference.len());

    ProductScore {
        product_id: id.to_string(),
        keys,
        values,
    }
}
