//! Evaluation metrics and nonparametric statistics.
//!
//! Covers the full methodology used by the evaluation harness: Dice overlap,
//! Mann–Whitney AUC with tie handling, accuracy/macro-F1, percentile
//! bootstrap confidence intervals, one-sided Wilcoxon signed-rank tests
//! (exact enumeration for small n, tie-corrected normal approximation
//! otherwise), one-sided paired sign-flip permutation tests, and seeded
//! k-fold splitting. All randomized procedures are fully determined by
//! their explicit seed.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Paired per-case scores for two models under comparison.
#[derive(Debug, Clone)]
pub struct PairedScores {
    case_ids: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedScores {
    pub fn new(case_ids: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.len() != case_ids.len() {
            return Err(Error::InvalidParameter(format!(
                "paired scores require equal lengths, got {} ids, {} vs {}",
                case_ids.len(),
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "paired scores must be finite".into(),
            ));
        }
        Ok(Self { case_ids, a, b })
    }

    /// Convenience constructor with synthetic case ids.
    pub fn from_pairs(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let ids = (0..a.len()).map(|i| format!("case-{i}")).collect();
        Self::new(ids, a, b)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    /// Per-case differences a - b.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }
}

/// Point estimate with a bootstrap confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricSummary {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
    pub level: f64,
}

/// Dice similarity coefficient between two binary masks of equal shape.
///
/// Both masks empty is perfect agreement (1.0); exactly one empty is 0.0.
pub fn dice(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![a.len()],
            got: vec![b.len()],
        });
    }
    let mut inter = 0usize;
    let mut na = 0usize;
    let mut nb = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        inter += (x && y) as usize;
        na += x as usize;
        nb += y as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

/// Area under the ROC curve via the Mann–Whitney statistic; tied scores
/// count one half (mid-rank formulation).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![scores.len()],
            got: vec![labels.len()],
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("scores must be finite".into()));
    }
    let ranks = midranks(scores);
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Mid-ranks (1-based) with ties receiving their average rank.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Average of ranks i+1 ..= j+1.
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Fraction of exactly matching predictions.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("accuracy of empty input".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![predictions.len()],
            got: vec![labels.len()],
        });
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Unweighted mean of per-class F1 scores over `n_classes` classes.
///
/// A class absent from both predictions and labels contributes F1 = 0
/// unless `exclude_absent` drops it from the average.
pub fn macro_f1(
    predictions: &[usize],
    labels: &[usize],
    n_classes: usize,
    exclude_absent: bool,
) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("macro-F1 of empty input".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![predictions.len()],
            got: vec![labels.len()],
        });
    }
    if n_classes == 0 {
        return Err(Error::InvalidParameter("n_classes must be > 0".into()));
    }
    if let Some(&bad) = predictions.iter().chain(labels).find(|&&v| v >= n_classes) {
        return Err(Error::InvalidParameter(format!(
            "class id {bad} out of range 0..{n_classes}"
        )));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for c in 0..n_classes {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom == 0 {
            if !exclude_absent {
                counted += 1;
            }
            continue;
        }
        sum += 2.0 * tp[c] as f64 / denom as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::EmptyInput("no classes left to average".into()));
    }
    Ok(sum / counted as f64)
}

/// Percentile-method bootstrap confidence interval of an arbitrary
/// statistic, with `b` resamples drawn with replacement.
pub fn bootstrap_ci(
    values: &[f64],
    statistic: impl Fn(&[f64]) -> f64,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("bootstrap of empty sample".into()));
    }
    if b == 0 {
        return Err(Error::InvalidParameter(
            "bootstrap replicates must be > 0".into(),
        ));
    }
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let point = statistic(values);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut sample = vec![0.0f64; n];
    let mut stats = Vec::with_capacity(b);
    for _ in 0..b {
        for s in sample.iter_mut() {
            *s = values[rng.gen_range(0..n)];
        }
        stats.push(statistic(&sample));
    }
    stats.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let alpha = 1.0 - level;
    Ok(MetricSummary {
        point,
        ci_low: percentile(&stats, alpha / 2.0),
        ci_high: percentile(&stats, 1.0 - alpha / 2.0),
        replicates: b,
        level,
    })
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Signed ranks of the non-zero differences: (doubled mid-rank, is_positive).
/// Ranks are doubled so tied mid-ranks stay integral.
fn signed_ranks(diffs: &[f64]) -> Result<Vec<(u64, bool)>> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::UndefinedTest(
            "all paired differences are zero".into(),
        ));
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    Ok(nonzero
        .iter()
        .zip(ranks)
        .map(|(d, r)| ((2.0 * r).round() as u64, *d > 0.0))
        .collect())
}

/// Exact one-sided Wilcoxon signed-rank p-value: the probability, under
/// independent random signs, of a positive-rank sum at least as large as
/// observed. Zero differences are dropped. Alternative: A > B.
pub fn wilcoxon_one_sided_exact(paired: &PairedScores) -> Result<f64> {
    let ranks = signed_ranks(&paired.differences())?;
    let n = ranks.len();
    let w_obs: u64 = ranks.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let total: u64 = ranks.iter().map(|(r, _)| r).sum();

    // Null distribution of the (doubled) positive-rank sum by dynamic
    // programming over independent sign flips.
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    for &(r, _) in &ranks {
        let r = r as usize;
        for s in (r..counts.len()).rev() {
            counts[s] += counts[s - r];
        }
    }
    let at_least: f64 = counts[w_obs as usize..].iter().sum();
    Ok(at_least / 2f64.powi(n as i32))
}

/// One-sided Wilcoxon signed-rank p-value via the tie- and
/// continuity-corrected normal approximation. Alternative: A > B.
pub fn wilcoxon_one_sided_normal(paired: &PairedScores) -> Result<f64> {
    let ranks = signed_ranks(&paired.differences())?;
    let n = ranks.len() as f64;
    // Undo the rank doubling for the classical formulas.
    let w_obs: f64 = ranks
        .iter()
        .filter(|(_, pos)| *pos)
        .map(|(r, _)| *r as f64 / 2.0)
        .sum();
    let mean = n * (n + 1.0) / 4.0;
    // Tie correction: group equal ranks.
    let mut sorted: Vec<u64> = ranks.iter().map(|(r, _)| *r).collect();
    sorted.sort_unstable();
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return Err(Error::UndefinedTest(
            "zero variance in Wilcoxon ranks".into(),
        ));
    }
    let z = (w_obs - mean - 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(1.0 - normal.cdf(z))
}

/// Exact enumeration threshold for the Wilcoxon signed-rank test.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// One-sided Wilcoxon signed-rank test (alternative: A > B): exact sign
/// enumeration for n ≤ 20 non-zero differences, normal approximation above.
pub fn wilcoxon_one_sided(paired: &PairedScores) -> Result<f64> {
    let nonzero = paired.differences().iter().filter(|d| **d != 0.0).count();
    if nonzero == 0 {
        return Err(Error::UndefinedTest(
            "all paired differences are zero".into(),
        ));
    }
    if nonzero <= WILCOXON_EXACT_MAX_N {
        wilcoxon_one_sided_exact(paired)
    } else {
        wilcoxon_one_sided_normal(paired)
    }
}

/// One-sided paired sign-flip permutation test on the mean difference
/// (alternative: A > B). Enumerates all 2ⁿ sign patterns when that is no
/// more work than `n_permutations`; otherwise Monte-Carlo with the
/// add-one convention p = (1 + #{T ≥ T_obs}) / (N + 1).
pub fn paired_permutation_one_sided(
    paired: &PairedScores,
    n_permutations: usize,
    seed: u64,
) -> Result<f64> {
    if paired.is_empty() {
        return Err(Error::EmptyInput(
            "permutation test of empty pairing".into(),
        ));
    }
    if n_permutations == 0 {
        return Err(Error::InvalidParameter(
            "permutation count must be > 0".into(),
        ));
    }
    let n = paired.len();
    let exhaustive = n < usize::BITS as usize && (1usize << n) <= n_permutations;
    if exhaustive {
        paired_permutation_exhaustive(paired)
    } else {
        paired_permutation_monte_carlo(paired, n_permutations, seed)
    }
}

/// Exhaustive sign-flip enumeration of the mean-difference statistic.
/// The identity pattern always counts, so p is never 0.
pub fn paired_permutation_exhaustive(paired: &PairedScores) -> Result<f64> {
    if paired.is_empty() {
        return Err(Error::EmptyInput(
            "permutation test of empty pairing".into(),
        ));
    }
    let diffs = paired.differences();
    let n = diffs.len();
    if n >= usize::BITS as usize {
        return Err(Error::InvalidParameter(format!(
            "cannot enumerate 2^{n} sign patterns"
        )));
    }
    let t_obs: f64 = diffs.iter().sum();
    let total = 1usize << n;
    let mut count = 0usize;
    for mask in 0..total {
        let mut t = 0.0;
        for (i, d) in diffs.iter().enumerate() {
            t += if mask >> i & 1 == 1 { -d } else { *d };
        }
        if t >= t_obs {
            count += 1;
        }
    }
    Ok(count as f64 / total as f64)
}

/// Monte-Carlo sign-flip sampling with the add-one convention
/// p = (1 + #{T ≥ T_obs}) / (N + 1); p is never 0.
pub fn paired_permutation_monte_carlo(
    paired: &PairedScores,
    n_permutations: usize,
    seed: u64,
) -> Result<f64> {
    if paired.is_empty() {
        return Err(Error::EmptyInput(
            "permutation test of empty pairing".into(),
        ));
    }
    if n_permutations == 0 {
        return Err(Error::InvalidParameter(
            "permutation count must be > 0".into(),
        ));
    }
    let diffs = paired.differences();
    let t_obs: f64 = diffs.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count = 0usize;
    for _ in 0..n_permutations {
        let mut t = 0.0;
        for d in &diffs {
            t += if rng.gen::<bool>() { -d } else { *d };
        }
        if t >= t_obs {
            count += 1;
        }
    }
    Ok((1 + count) as f64 / (n_permutations + 1) as f64)
}

/// Disjoint test folds covering `0..n_cases`, sizes differing by at most
/// one, shuffled deterministically by the seed.
pub fn kfold_splits(n_cases: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be > 0".into()));
    }
    if n_cases < k {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n_cases} cases into {k} folds"
        )));
    }
    let mut indices: Vec<usize> = (0..n_cases).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates, spelled out for cross-version stability.
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    let base = n_cases / k;
    let extra = n_cases % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0usize;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(indices[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // -------- dice --------

    #[test]
    fn dice_identity_disjoint_and_empty() {
        let a = vec![true, false, true, true];
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        let b = vec![false, true, false, false];
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        let empty = vec![false; 4];
        assert_eq!(dice(&empty, &empty).unwrap(), 1.0);
        assert_eq!(dice(&a, &empty).unwrap(), 0.0);
        assert!(dice(&a, &vec![true; 3]).is_err());
    }

    #[test]
    fn dice_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..1000 {
            let n = 64;
            let a: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let b: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            // Oracle: explicit set counting.
            let inter = (0..n).filter(|&i| a[i] && b[i]).count();
            let na = a.iter().filter(|&&v| v).count();
            let nb = b.iter().filter(|&&v| v).count();
            let expected = if na + nb == 0 {
                1.0
            } else {
                2.0 * inter as f64 / (na + nb) as f64
            };
            assert_eq!(dice(&a, &b).unwrap(), expected);
        }
    }

    #[test]
    fn dice_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            let a: Vec<bool> = (0..32).map(|_| rng.gen_bool(0.3)).collect();
            let b: Vec<bool> = (0..32).map(|_| rng.gen_bool(0.7)).collect();
            assert_eq!(dice(&a, &b).unwrap(), dice(&b, &a).unwrap());
        }
    }

    // -------- auc --------

    fn auc_pair_count_oracle(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0f64;
        let mut total = 0.0f64;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                total += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / total
    }

    #[test]
    fn auc_perfect_and_degenerate_cases() {
        let scores = vec![0.1, 0.2, 0.8, 0.9];
        let labels = vec![false, false, true, true];
        assert_eq!(auc(&scores, &labels).unwrap(), 1.0);
        let tied = vec![0.5; 4];
        assert_eq!(auc(&tied, &labels).unwrap(), 0.5);
        assert!(matches!(auc(&scores, &[true; 4]), Err(Error::UndefinedAuc)));
    }

    #[test]
    fn auc_matches_pair_counting_oracle_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        for _ in 0..500 {
            let n = rng.gen_range(3..=20);
            // Coarse score grid provokes plenty of ties.
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 / 5.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if labels.iter().all(|&l| l) {
                labels[0] = false;
            }
            if labels.iter().all(|&l| !l) {
                labels[0] = true;
            }
            assert_eq!(
                auc(&scores, &labels).unwrap(),
                auc_pair_count_oracle(&scores, &labels)
            );
        }
    }

    #[test]
    fn auc_complement_and_rank_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for _ in 0..100 {
            let n = rng.gen_range(4..30);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
            let a1 = auc(&scores, &labels).unwrap();
            let a2 = auc(&scores, &flipped).unwrap();
            assert!((a1 + a2 - 1.0).abs() < 1e-12);

            // Strictly monotone transform preserves ranks, hence AUC.
            let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.5).exp() + 7.0).collect();
            assert_eq!(a1, auc(&transformed, &labels).unwrap());
        }
    }

    // -------- accuracy / macro-F1 --------

    #[test]
    fn perfect_predictions_score_one() {
        let labels = vec![0usize, 1, 2, 1, 0, 2];
        assert_eq!(accuracy(&labels, &labels).unwrap(), 1.0);
        assert_eq!(macro_f1(&labels, &labels, 3, false).unwrap(), 1.0);
    }

    #[test]
    fn binary_f1_matches_confusion_matrix_oracle() {
        // 10 items, hand-computed confusion matrix.
        let labels = vec![1usize, 1, 1, 1, 0, 0, 0, 0, 0, 0];
        let preds = vec![1usize, 1, 0, 0, 1, 0, 0, 0, 0, 0];
        // Class 1: tp=2 fp=1 fn=2 -> P=2/3, R=2/4, F1=2PR/(P+R)=4/7.
        // Class 0: tp=5 fp=2 fn=1 -> F1=10/13.
        let expected = (4.0 / 7.0 + 10.0 / 13.0) / 2.0;
        let got = macro_f1(&preds, &labels, 2, false).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(accuracy(&preds, &labels).unwrap(), 0.7);
    }

    #[test]
    fn never_predicted_class_contributes_zero() {
        // Class 2 occurs in labels but never in predictions.
        let labels = vec![0usize, 1, 2, 2];
        let preds = vec![0usize, 1, 0, 1];
        let f = macro_f1(&preds, &labels, 3, false).unwrap();
        // class0: tp=1 fp=1 fn=0 -> 2/3; class1: tp=1 fp=1 fn=0 -> 2/3; class2: 0.
        assert!((f - (2.0 / 3.0 + 2.0 / 3.0) / 3.0).abs() < 1e-12);

        // Class absent from both sides: zero unless excluded.
        let labels = vec![0usize, 1];
        let preds = vec![0usize, 1];
        assert!((macro_f1(&preds, &labels, 3, false).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(macro_f1(&preds, &labels, 3, true).unwrap(), 1.0);
        assert!(macro_f1(&[], &[], 3, false).is_err());
    }

    // -------- bootstrap --------

    #[test]
    fn bootstrap_degenerate_and_deterministic() {
        let values = vec![0.7; 12];
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let s = bootstrap_ci(&values, mean, 1000, 0.95, 5).unwrap();
        assert_eq!(s.ci_low, s.point);
        assert_eq!(s.ci_high, s.point);
        assert!((s.point - 0.7).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sample: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s1 = bootstrap_ci(&sample, mean, 1000, 0.95, 42).unwrap();
        let s2 = bootstrap_ci(&sample, mean, 1000, 0.95, 42).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.ci_low <= s1.point && s1.point <= s1.ci_high);
    }

    #[test]
    fn bootstrap_width_matches_normal_approximation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sample: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let m = mean(&sample);
        let sd = (sample.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 99.0).sqrt();
        let expected_width = 2.0 * 1.96 * sd / 10.0;
        let s = bootstrap_ci(&sample, mean, 1000, 0.95, 9).unwrap();
        let width = s.ci_high - s.ci_low;
        assert!(
            (width - expected_width).abs() / expected_width < 0.3,
            "width {width} vs normal approx {expected_width}"
        );
    }

    // -------- wilcoxon --------

    /// Independent oracle: enumerate all 2ⁿ sign patterns explicitly and
    /// recompute the positive-rank sum from scratch for each.
    fn wilcoxon_brute_force(diffs: &[f64]) -> f64 {
        let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let n = nonzero.len();
        let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
        let ranks = midranks(&abs);
        let w_obs: f64 = nonzero
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| *r)
            .sum();
        let mut count = 0usize;
        for mask in 0..(1usize << n) {
            let w: f64 = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            if w >= w_obs - 1e-12 {
                count += 1;
            }
        }
        count as f64 / (1usize << n) as f64
    }

    #[test]
    fn five_folds_all_positive_reproduces_one_thirty_second() {
        let paired = PairedScores::from_pairs(
            vec![0.9, 0.8, 0.85, 0.95, 0.9],
            vec![0.7, 0.6, 0.8, 0.9, 0.85],
        )
        .unwrap();
        let p = wilcoxon_one_sided(&paired).unwrap();
        assert_eq!(p, 1.0 / 32.0);
        assert_eq!(format!("{:.3}", p), "0.031");
    }

    #[test]
    fn all_negative_differences_give_p_one() {
        // The exact tail probability P(W ≥ 0) includes every sign pattern.
        let paired = PairedScores::from_pairs(
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            vec![0.2, 0.4, 0.6, 0.8, 1.0],
        )
        .unwrap();
        let p = wilcoxon_one_sided(&paired).unwrap();
        assert_eq!(p, wilcoxon_brute_force(&paired.differences()));
        assert_eq!(p, 1.0);
    }

    #[test]
    fn exact_path_matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            // Quantized differences provoke ties and zeros.
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64 / 4.0).collect();
            let b = vec![0.0; n];
            let paired = PairedScores::from_pairs(a.clone(), b).unwrap();
            if a.iter().all(|&d| d == 0.0) {
                assert!(wilcoxon_one_sided(&paired).is_err());
                continue;
            }
            let exact = wilcoxon_one_sided(&paired).unwrap();
            let brute = wilcoxon_brute_force(&a);
            assert!(
                (exact - brute).abs() < 1e-12,
                "n={n} diffs={a:?}: {exact} vs {brute}"
            );
        }
    }

    #[test]
    fn normal_approximation_is_close_to_exact_at_the_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(201);
        let a: Vec<f64> = (0..18).map(|_| rng.gen_range(-1.0..1.5)).collect();
        let paired = PairedScores::from_pairs(a, vec![0.0; 18]).unwrap();
        let exact = wilcoxon_one_sided_exact(&paired).unwrap();
        let approx = wilcoxon_one_sided_normal(&paired).unwrap();
        assert!((exact - approx).abs() < 0.02, "{exact} vs {approx}");
    }

    #[test]
    fn all_zero_differences_are_rejected() {
        let paired = PairedScores::from_pairs(vec![0.5; 4], vec![0.5; 4]).unwrap();
        assert!(matches!(
            wilcoxon_one_sided(&paired),
            Err(Error::UndefinedTest(_))
        ));
    }

    // -------- permutation --------

    #[test]
    fn permutation_exhaustive_examples() {
        // n=3, all diffs +1: only the identity pattern reaches the observed mean.
        let paired = PairedScores::from_pairs(vec![1.0, 1.0, 1.0], vec![0.0; 3]).unwrap();
        assert_eq!(
            paired_permutation_one_sided(&paired, 10_000, 1).unwrap(),
            1.0 / 8.0
        );

        // Degenerate all-zero differences: every pattern ties the observed.
        let zeros = PairedScores::from_pairs(vec![0.3; 4], vec![0.3; 4]).unwrap();
        assert_eq!(paired_permutation_one_sided(&zeros, 10_000, 1).unwrap(), 1.0);
    }

    #[test]
    fn monte_carlo_close_to_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(300);
        for trial in 0..10 {
            let n = rng.gen_range(6..=10);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.2)).collect();
            let paired = PairedScores::from_pairs(a, vec![0.0; n]).unwrap();
            let exhaustive = paired_permutation_one_sided(&paired, 10_000, 0).unwrap();
            assert_eq!(exhaustive, paired_permutation_exhaustive(&paired).unwrap());
            let mc = paired_permutation_monte_carlo(&paired, 10_000, 1234 + trial).unwrap();
            assert!(
                (exhaustive - mc).abs() < 0.02,
                "exhaustive {exhaustive} vs mc {mc}"
            );
        }
    }

    #[test]
    fn permutation_p_is_never_zero_and_at_most_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        for _ in 0..50 {
            let n = rng.gen_range(1..=14);
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let paired = PairedScores::from_pairs(a, vec![0.0; n]).unwrap();
            let p = paired_permutation_one_sided(&paired, 200, 7).unwrap();
            assert!(p > 0.0 && p <= 1.0);
        }
    }

    // -------- k-fold --------

    #[test]
    fn kfold_partitions_with_balanced_sizes() {
        let folds = kfold_splits(10, 5, 77).unwrap();
        assert_eq!(folds.len(), 5);
        assert!(folds.iter().all(|f| f.len() == 2));

        let folds = kfold_splits(11, 4, 77).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 11);
        assert!(sizes.iter().all(|&s| s == 2 || s == 3));

        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());

        assert!(kfold_splits(3, 5, 0).is_err());
    }

    #[test]
    fn kfold_is_seed_deterministic() {
        let a = kfold_splits(23, 5, 42).unwrap();
        let b = kfold_splits(23, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = kfold_splits(23, 5, 43).unwrap();
        assert_ne!(a, c);
    }
}
