use serde::{Deserialize, Serialize};

use super::ContingencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub f_weighted: f64,
    pub f_micro: f64,
    pub f_macro: f64,
}

/// Per gold class precision, recall and F1 under a cluster → label mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and F1 of every gold class. A class without a mapped
/// cluster predicts nothing and scores 0 throughout.
pub fn class_scores(table: &ContingencyTable, mapping: &[Option<usize>]) -> Vec<ClassScore> {
    let mut cluster_of = vec![None; table.num_labels()];
    for (c, l) in mapping.iter().enumerate() {
        if let Some(l) = *l {
            cluster_of[l] = Some(c);
        }
    }
    cluster_of
        .iter()
        .enumerate()
        .map(|(l, c)| {
            let support = table.row_sums()[l];
            let (tp, predicted) = c.map_or((0, 0), |c| (table.get(l, c), table.col_sums()[c]));
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassScore {
                precision,
                recall,
                f1: f1(precision, recall),
                support,
            }
        })
        .collect()
}

/// Accuracy and F-scores after relabeling clusters through `mapping`.
///
/// Documents in clusters mapped to no label count as wrong. Micro-F pools
/// the counts of all classes, so it equals the accuracy whenever every
/// cluster is mapped.
pub fn accuracy_and_fscores(table: &ContingencyTable, mapping: &[Option<usize>]) -> Scores {
    let per_class = class_scores(table, mapping);
    let n = table.total();
    let correct: u64 = mapping
        .iter()
        .enumerate()
        .filter_map(|(c, l)| l.map(|l| table.get(l, c)))
        .sum();
    let predicted: u64 = mapping
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_some())
        .map(|(c, _)| table.col_sums()[c])
        .sum();
    let f_macro = per_class.iter().map(|s| s.f1).sum::<f64>() / per_class.len() as f64;
    let f_weighted = per_class
        .iter()
        .map(|s| s.f1 * s.support as f64)
        .sum::<f64>()
        / n as f64;
    Scores {
        accuracy: ratio(correct, n),
        f_weighted,
        f_micro: f1(ratio(correct, predicted), ratio(correct, n)),
        f_macro,
    }
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index.
///
/// When both partitions are trivial in the same way (one block each, or all
/// singletons) the expected and maximal index coincide and the partitions
/// are identical, so 1 is returned.
pub fn ari(table: &ContingencyTable) -> f64 {
    let index: f64 = table.counts().iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = table.row_sums().iter().map(|&x| choose2(x)).sum();
    let sum_b: f64 = table.col_sums().iter().map(|&x| choose2(x)).sum();
    let pairs = choose2(table.total());
    let expected = if pairs == 0.0 {
        0.0
    } else {
        sum_a * sum_b / pairs
    };
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

fn entropy(marginal: &[u64], n: u64) -> f64 {
    let n = n as f64;
    marginal
        .iter()
        .filter(|&&x| x > 0)
        .map(|&x| {
            let p = x as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information of the table in nats.
pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let mut mi = 0.0;
    for (i, row) in table.counts().iter().enumerate() {
        let a = table.row_sums()[i] as f64;
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let b = table.col_sums()[j] as f64;
            let nij = nij as f64;
            mi += nij / n * (n * nij / (a * b)).ln();
        }
    }
    mi.max(0.0)
}

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Expected mutual information of two partitions with the table's
/// marginals when one of them is permuted uniformly at random.
pub fn expected_mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total();
    let lf = ln_factorials(n);
    let nf = n as f64;
    let mut emi = 0.0;
    for &a in table.row_sums() {
        for &b in table.col_sums() {
            if a == 0 || b == 0 {
                continue;
            }
            let lo = 1.max((a + b).saturating_sub(n));
            let hi = a.min(b);
            // ln of a! b! (n−a)! (n−b)! / n!, shared by every term
            let common =
                lf[a as usize] + lf[b as usize] + lf[(n - a) as usize] + lf[(n - b) as usize]
                    - lf[n as usize];
            for k in lo..=hi {
                let kf = k as f64;
                let ln_p = common
                    - lf[k as usize]
                    - lf[(a - k) as usize]
                    - lf[(b - k) as usize]
                    - lf[(n + k - a - b) as usize];
                emi += kf / nf * (nf * kf / (a as f64 * b as f64)).ln() * ln_p.exp();
            }
        }
    }
    emi
}

/// Normalized mutual information `I / sqrt(H(U) H(V))`.
///
/// Defined as 0 when either partition has a single block.
pub fn nmi(table: &ContingencyTable) -> f64 {
    let hu = entropy(table.row_sums(), table.total());
    let hv = entropy(table.col_sums(), table.total());
    if hu == 0.0 || hv == 0.0 {
        return 0.0;
    }
    (mutual_information(table) / (hu * hv).sqrt()).clamp(0.0, 1.0)
}

/// Adjusted mutual information `(I − E[I]) / (mean(H(U), H(V)) − E[I])`.
///
/// Defined as 0 when either partition has a single block, and when the
/// denominator vanishes (both partitions all singletons, so every
/// permutation attains the observed information).
pub fn ami(table: &ContingencyTable) -> f64 {
    let hu = entropy(table.row_sums(), table.total());
    let hv = entropy(table.col_sums(), table.total());
    if hu == 0.0 || hv == 0.0 {
        return 0.0;
    }
    let mi = mutual_information(table);
    let emi = expected_mutual_information(table);
    let den = 0.5 * (hu + hv) - emi;
    if den.abs() < 1e-15 {
        return 0.0;
    }
    (mi - emi) / den
}
