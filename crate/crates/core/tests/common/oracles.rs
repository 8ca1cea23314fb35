//! Slow, direct definitions of the clustering metrics over element labels.

use rand::Rng;

/// Every set partition of `n` elements as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, blocks: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for b in 0..=blocks {
            prefix.push(b);
            grow(prefix, n, blocks.max(b + 1), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    grow(&mut Vec::with_capacity(n), n, 0, &mut out);
    out
}

/// Advances `p` to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Best total weight over all permutations and the first (lexicographically
/// smallest) permutation attaining it.
pub fn brute_force_assignment(w: &[Vec<i64>]) -> (i64, Vec<usize>) {
    let n = w.len();
    let mut p: Vec<usize> = (0..n).collect();
    let mut best = (i64::MIN, p.clone());
    loop {
        let s: i64 = p.iter().enumerate().map(|(i, &j)| w[i][j]).sum();
        if s > best.0 {
            best = (s, p.clone());
        }
        if !next_permutation(&mut p) {
            return best;
        }
    }
}

/// ARI from agreement counts over all unordered element pairs.
pub fn pair_counting_ari(u: &[usize], v: &[usize]) -> f64 {
    let (mut a, mut b, mut c, mut d) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            match (u[i] == u[j], v[i] == v[j]) {
                (true, true) => a += 1.0,
                (true, false) => b += 1.0,
                (false, true) => c += 1.0,
                (false, false) => d += 1.0,
            }
        }
    }
    let den = (a + b) * (b + d) + (a + c) * (c + d);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (a * d - b * c) / den
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: usize) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// `(H(U), H(V), H(U, V))` for labels below 16.
pub fn entropies(u: &[usize], v: &[usize]) -> (f64, f64, f64) {
    let n = u.len();
    let mut cu = [0usize; 16];
    let mut cv = [0usize; 16];
    let mut joint = [0usize; 256];
    for (&x, &y) in u.iter().zip(v) {
        cu[x] += 1;
        cv[y] += 1;
        joint[x * 16 + y] += 1;
    }
    (
        entropy_of_counts(cu.into_iter(), n),
        entropy_of_counts(cv.into_iter(), n),
        entropy_of_counts(joint.into_iter(), n),
    )
}

/// Mutual information as `H(U) + H(V) − H(U, V)`.
pub fn mutual_information(u: &[usize], v: &[usize]) -> f64 {
    let (hu, hv, huv) = entropies(u, v);
    hu + hv - huv
}

pub fn nmi(u: &[usize], v: &[usize]) -> f64 {
    let (hu, hv, huv) = entropies(u, v);
    if hu == 0.0 || hv == 0.0 {
        return 0.0;
    }
    (hu + hv - huv) / (hu * hv).sqrt()
}

/// Mean mutual information over all `n!` rearrangements of `v`.
pub fn exhaustive_expected_mi(u: &[usize], v: &[usize]) -> f64 {
    let n = u.len();
    let mut p: Vec<usize> = (0..n).collect();
    let mut shuffled = v.to_vec();
    let (mut sum, mut count) = (0.0, 0u64);
    loop {
        for (i, &j) in p.iter().enumerate() {
            shuffled[i] = v[j];
        }
        sum += mutual_information(u, &shuffled);
        count += 1;
        if !next_permutation(&mut p) {
            return sum / count as f64;
        }
    }
}

/// Monte-Carlo estimate of the expected mutual information and its
/// standard error.
pub fn sampled_expected_mi<R: Rng>(
    u: &[usize],
    v: &[usize],
    samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let mut shuffled = v.to_vec();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        let mi = mutual_information(u, &shuffled);
        sum += mi;
        sum_sq += mi * mi;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

/// AMI with the mean-entropy normalisation from an externally supplied
/// expected mutual information.
pub fn ami(u: &[usize], v: &[usize], expected_mi: f64) -> f64 {
    let (hu, hv, huv) = entropies(u, v);
    if hu == 0.0 || hv == 0.0 {
        return 0.0;
    }
    let den = 0.5 * (hu + hv) - expected_mi;
    if den.abs() < 1e-15 {
        return 0.0;
    }
    (hu + hv - huv - expected_mi) / den
}

/// Sorted block sizes of a labeling; the expected mutual information under
/// random rearrangement depends on nothing else.
pub fn block_sizes(labels: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; labels.len()];
    for &l in labels {
        counts[l] += 1;
    }
    let mut sizes: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable();
    sizes
}

/// A canonical labeling with the given block sizes.
pub fn labeling_from_sizes(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}
