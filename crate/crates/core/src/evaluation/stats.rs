//! Significance tests and rank statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numerics::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TTestTwoTailed,
    MannWhitneyU,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Welch's unequal-variance two-tailed t-test with Welch-Satterthwaite
/// degrees of freedom.
pub fn t_test_two_tailed(sample_a: &[f64], sample_b: &[f64]) -> Result<SignificanceResult> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::Statistical(
            "t-test needs at least two observations per sample".into(),
        ));
    }
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (sample_variance(sample_a, ma), sample_variance(sample_b, mb));
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        return Err(Error::Statistical(
            "degenerate variance: both samples are constant".into(),
        ));
    }
    let statistic = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Statistical(format!("t distribution: {e}")))?;
    let p_value = (2.0 * (1.0 - dist.cdf(statistic.abs()))).clamp(0.0, 1.0);
    Ok(SignificanceResult {
        test: TestKind::TTestTwoTailed,
        statistic,
        p_value,
        n_a: sample_a.len(),
        n_b: sample_b.len(),
    })
}

/// Average ranks of the combined sample (ties get the mean of their ranks).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

/// Mann-Whitney U with a tie-corrected normal approximation, two-sided,
/// without continuity correction. The statistic is `U1` for `sample_a`;
/// when every observation is tied the p-value is 1.
pub fn mann_whitney_u(sample_a: &[f64], sample_b: &[f64]) -> Result<SignificanceResult> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::Statistical(
            "Mann-Whitney U needs at least one observation per sample".into(),
        ));
    }
    let n1 = sample_a.len();
    let n2 = sample_b.len();
    let combined: Vec<f64> = sample_a.iter().chain(sample_b).copied().collect();
    let ranks = average_ranks(&combined);
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let n = n1 + n2;
    let mut tie_term = 0.0;
    let mut sorted = combined.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let mu = (n1 * n2) as f64 / 2.0;
    let sigma2 = (n1 * n2) as f64 / 12.0
        * ((n as f64 + 1.0) - tie_term / (n as f64 * (n as f64 - 1.0)));
    let p_value = if sigma2 <= 0.0 {
        1.0
    } else {
        let z = (u1 - mu) / sigma2.sqrt();
        (2.0 * (1.0 - normal_cdf(z.abs()))).clamp(0.0, 1.0)
    };
    Ok(SignificanceResult {
        test: TestKind::MannWhitneyU,
        statistic: u1,
        p_value,
        n_a: n1,
        n_b: n2,
    })
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape(format!(
            "spearman: {} vs {} observations",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Statistical(
            "spearman needs at least two observations".into(),
        ));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Statistical(
            "spearman undefined for constant ranks".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}
