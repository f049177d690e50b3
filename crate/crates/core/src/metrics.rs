//! Agreement between two community labelings of the same actants.
//!
//! Entropies use the natural log. Homogeneity is `1 - H(gr|pred)/H(gr)` and
//! completeness `1 - H(pred|gr)/H(pred)`; each is 1 when its denominator is
//! 0. The V-measure is their harmonic mean, 0 when both are 0.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `H(a | b)` from a contingency table keyed by `(a, b)`.
fn conditional_entropy(
    joint: &BTreeMap<(usize, usize), usize>,
    b_counts: &BTreeMap<usize, usize>,
    n: f64,
) -> f64 {
    joint
        .iter()
        .map(|(&(_, b), &c)| {
            let p = c as f64 / n;
            -p * (c as f64 / b_counts[&b] as f64).ln()
        })
        .sum()
}

/// Homogeneity, completeness and V-measure of `pred` against `truth`.
pub fn homogeneity_completeness_v(truth: &[usize], pred: &[usize]) -> (f64, f64, f64) {
    assert_eq!(truth.len(), pred.len(), "labelings differ in length");
    let n = truth.len() as f64;
    if truth.is_empty() {
        return (1.0, 1.0, 1.0);
    }
    let mut gt: BTreeMap<usize, usize> = BTreeMap::new();
    let mut pr: BTreeMap<usize, usize> = BTreeMap::new();
    let mut joint_gp: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut joint_pg: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&g, &p) in truth.iter().zip(pred) {
        *gt.entry(g).or_default() += 1;
        *pr.entry(p).or_default() += 1;
        *joint_gp.entry((g, p)).or_default() += 1;
        *joint_pg.entry((p, g)).or_default() += 1;
    }
    let h_gt = entropy(gt.values().copied(), n);
    let h_pr = entropy(pr.values().copied(), n);
    let h = if h_gt == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy(&joint_gp, &pr, n) / h_gt
    };
    let c = if h_pr == 0.0 {
        1.0
    } else {
        1.0 - conditional_entropy(&joint_pg, &gt, n) / h_pr
    };
    let (h, c) = (h.clamp(0.0, 1.0), c.clamp(0.0, 1.0));
    let v = if h + c == 0.0 {
        0.0
    } else {
        2.0 * h * c / (h + c)
    };
    (h, c, v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub window: Option<usize>,
    pub start: Option<NaiveDate>,
    pub matched: usize,
    /// Distinct actants across the news communities.
    pub total: usize,
    /// `matched / total`.
    pub coverage: f64,
    /// `None` when no actant matched.
    pub homogeneity: Option<f64>,
    pub completeness: Option<f64>,
    pub v_measure: Option<f64>,
}

/// Compares news communities `C_i` against social-media communities `K_j`.
///
/// Each actant of any `C_i` found in some `K_j` gets `Y_pred = i` and
/// `Y_gr = j`. An actant in several communities takes the lowest index on
/// either side.
pub fn evaluate_communities<S: AsRef<str>, T: AsRef<str>>(
    news: &[Vec<S>],
    socmed: &[Vec<T>],
) -> Result<AgreementReport> {
    if news.is_empty() || socmed.is_empty() {
        return Err(Error::InvalidInput(
            "both community sets must be non-empty".into(),
        ));
    }
    let mut socmed_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (j, k) in socmed.iter().enumerate() {
        for a in k {
            socmed_of.entry(a.as_ref()).or_insert(j);
        }
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for (i, c) in news.iter().enumerate() {
        for a in c {
            let a = a.as_ref();
            if !seen.insert(a) {
                continue;
            }
            if let Some(&j) = socmed_of.get(a) {
                truth.push(j);
                pred.push(i);
            }
        }
    }
    let total = seen.len();
    let matched = truth.len();
    let coverage = if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    };
    let metrics = (matched > 0).then(|| homogeneity_completeness_v(&truth, &pred));
    Ok(AgreementReport {
        window: None,
        start: None,
        matched,
        total,
        coverage,
        homogeneity: metrics.map(|m| m.0),
        completeness: metrics.map(|m| m.1),
        v_measure: metrics.map(|m| m.2),
    })
}
