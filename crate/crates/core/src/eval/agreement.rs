use std::collections::BTreeMap;

use super::EvalError;

/// A label needs this many votes to become the consensus.
pub const DEFAULT_CONSENSUS_THRESHOLD: usize = 3;

/// Cohen's kappa between two raters over the same instances. When chance
/// agreement is already perfect (both raters use one and the same label)
/// the result is defined as 1.
pub fn cohen_kappa<L: Ord>(a: &[L], b: &[L]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a.len() as f64;
    let mut margins: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    let mut agree = 0usize;
    for (x, y) in a.iter().zip(b) {
        margins.entry(x).or_default().0 += 1;
        margins.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = margins.values().map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n)).sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Per-instance majority label, `None` where no label reaches `threshold`
/// votes. If two labels both reach it (only possible with a threshold at
/// or below half the panel) the instance abstains as well.
pub fn majority_consensus<L: Ord + Clone>(
    judges: &BTreeMap<String, Vec<L>>,
    threshold: usize,
) -> Result<Vec<Option<L>>, EvalError> {
    if threshold == 0 {
        return Err(EvalError::Domain("consensus threshold must be at least 1".into()));
    }
    if judges.len() < threshold {
        return Err(EvalError::NotEnoughJudges {
            have: judges.len(),
            need: threshold,
        });
    }
    let mut lens = judges.values().map(Vec::len);
    let len = lens.next().unwrap_or(0);
    if let Some(other) = lens.find(|&l| l != len) {
        return Err(EvalError::LengthMismatch(len, other));
    }
    Ok((0..len)
        .map(|i| {
            let mut votes: BTreeMap<&L, usize> = BTreeMap::new();
            for labels in judges.values() {
                *votes.entry(&labels[i]).or_default() += 1;
            }
            let mut winners = votes.into_iter().filter(|&(_, c)| c >= threshold);
            match (winners.next(), winners.next()) {
                (Some((label, _)), None) => Some(label.clone()),
                _ => None,
            }
        })
        .collect())
}

/// Fraction of non-abstained instances where `candidate` equals the
/// consensus. `None` if every instance abstained.
pub fn accuracy_vs_consensus<L: PartialEq>(candidate: &[L], consensus: &[Option<L>]) -> Result<Option<f64>, EvalError> {
    if candidate.len() != consensus.len() {
        return Err(EvalError::LengthMismatch(candidate.len(), consensus.len()));
    }
    let mut total = 0usize;
    let mut hits = 0usize;
    for (c, k) in candidate.iter().zip(consensus) {
        if let Some(k) = k {
            total += 1;
            if c == k {
                hits += 1;
            }
        }
    }
    Ok((total > 0).then(|| hits as f64 / total as f64))
}
