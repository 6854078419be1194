use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    /// Sorted label alphabet; rows are annotator A, columns annotator B.
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    /// Present when every label parses as a number.
    pub mean_abs_diff: Option<f64>,
}

/// Cohen's kappa between two annotators over the same items. When chance
/// agreement is 1 (both used a single identical label) kappa is 1.
pub fn cohens_kappa<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<AgreementReport> {
    if a.len() != b.len() {
        return Err(Error::Param(format!("{} labels vs {} labels", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Param("no labels to compare".into()));
    }
    let labels: Vec<String> = a
        .iter()
        .chain(b)
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |s: &str| labels.binary_search_by(|l| l.as_str().cmp(s)).unwrap();
    let k = labels.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (x, y) in a.iter().zip(b) {
        confusion[pos(x.as_ref())][pos(y.as_ref())] += 1;
    }
    let n = a.len() as f64;
    let observed = (0..k).map(|i| confusion[i][i]).sum::<u64>() as f64 / n;
    let expected = (0..k)
        .map(|i| {
            let row: u64 = confusion[i].iter().sum();
            let col: u64 = confusion.iter().map(|r| r[i]).sum();
            (row as f64 / n) * (col as f64 / n)
        })
        .sum::<f64>();
    let kappa = if expected >= 1.0 {
        1.0
    } else {
        (observed - expected) / (1.0 - expected)
    };
    let numeric: Option<Vec<(f64, f64)>> = a
        .iter()
        .zip(b)
        .map(|(x, y)| Some((x.as_ref().trim().parse().ok()?, y.as_ref().trim().parse().ok()?)))
        .collect();
    let mean_abs_diff = numeric.map(|v: Vec<(f64, f64)>| v.iter().map(|(x, y)| (x - y).abs()).sum::<f64>() / n);
    Ok(AgreementReport {
        kappa,
        observed,
        expected,
        labels,
        confusion,
        mean_abs_diff,
    })
}
