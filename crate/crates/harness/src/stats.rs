//! Paired statistical tests for result-set comparison: the Wilcoxon
//! signed-rank test (exact distribution up to n = 25, normal approximation
//! with tie correction above) and the paired t-test.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Exact/approximate boundary for the signed-rank null distribution.
pub const WILCOXON_EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// Non-zero differences used.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Signed ranks of the non-zero differences, average ranks on ties.
/// Returns `(ranks, signs)` aligned with the filtered differences.
fn ranked(diffs: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| nonzero[a].abs().total_cmp(&nonzero[b].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && nonzero[order[j + 1]].abs() == nonzero[order[i]].abs() {
            j += 1;
        }
        // 1-based positions i+1 ..= j+1 share their average rank.
        let avg = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let signs = nonzero.iter().map(|d| *d > 0.0).collect();
    (ranks, signs)
}

/// Two-sided Wilcoxon signed-rank test on paired differences. Zero
/// differences are dropped; returns `None` when nothing remains.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Option<WilcoxonResult> {
    let (ranks, signs) = ranked(diffs);
    let n = ranks.len();
    if n == 0 {
        return None;
    }
    let w_plus: f64 = ranks
        .iter()
        .zip(&signs)
        .filter(|(_, &pos)| pos)
        .map(|(r, _)| *r)
        .sum();
    let total: f64 = ranks.iter().sum();
    let w_minus = total - w_plus;
    let (p, exact) = if n <= WILCOXON_EXACT_MAX_N {
        (exact_two_sided_p(&ranks, w_plus.min(w_minus)), true)
    } else {
        (normal_two_sided_p(&ranks, w_plus), false)
    };
    Some(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p: p.min(1.0),
        exact,
    })
}

/// `min(1, 2 * P(W+ <= w_low))` under the exact null: every sign vector
/// equally likely. Average ranks are half-integers, so doubling makes the
/// subset-sum table integral.
fn exact_two_sided_p(ranks: &[f64], w_low: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u128; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let threshold = (w_low * 2.0).round() as usize;
    let tail: u128 = counts[..=threshold.min(total)].iter().sum();
    let all: u128 = 1u128 << ranks.len();
    2.0 * tail as f64 / all as f64
}

fn normal_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mu = n * (n + 1.0) / 4.0;
    // Tie correction: subtract (t^3 - t)/48 per group of tied ranks.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += (t * t * t - t) / 48.0;
        i = j + 1;
    }
    let sigma2 = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if sigma2 <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mu) / sigma2.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    2.0 * (1.0 - normal.cdf(z.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedTResult {
    pub n: usize,
    pub t: f64,
    pub p: f64,
}

/// Two-sided paired t-test on the differences.
pub fn paired_t(diffs: &[f64]) -> Option<PairedTResult> {
    let n = diffs.len();
    if n < 2 {
        return None;
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        let p = if mean == 0.0 { 1.0 } else { 0.0 };
        return Some(PairedTResult {
            n,
            t: if mean == 0.0 { 0.0 } else { f64::INFINITY },
            p,
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Some(PairedTResult { n, t, p })
}
