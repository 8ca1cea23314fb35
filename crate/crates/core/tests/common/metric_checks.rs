//! Library metrics against the oracles, parameterised by problem size.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use textclust::eval::{ami, ari, hungarian_assign, max_weight_assignment, nmi, ContingencyTable};

use super::oracles;

/// Largest deviation seen in one family of comparisons.
#[derive(Debug, Default, Clone, Copy)]
pub struct Deviation {
    pub cases: usize,
    pub max_abs: f64,
}

impl Deviation {
    pub fn record(&mut self, a: f64, b: f64) {
        self.cases += 1;
        let d = (a - b).abs();
        if !(d <= self.max_abs) {
            self.max_abs = d;
        }
    }
}

/// Random square and rectangular tables of side at most `max_k`; the
/// solver's mapping must reach the brute-force optimum and equal the
/// lexicographically smallest optimal permutation. Returns the number of
/// mismatching cases.
pub fn hungarian_vs_brute_force(cases: usize, max_k: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for case in 0..cases {
        let rows = rng.gen_range(1..=max_k);
        let cols = if case % 2 == 0 {
            rows
        } else {
            rng.gen_range(1..=max_k)
        };
        // small counts make ties common
        let hi = if case % 3 == 0 { 2 } else { 20 };
        let counts: Vec<Vec<u64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(0..=hi)).collect())
            .collect();
        if counts.iter().flatten().all(|&c| c == 0) {
            continue;
        }
        let table =
            ContingencyTable::from_counts((0..rows as i64).collect(), counts.clone()).unwrap();
        let mapping = hungarian_assign(&table);

        let n = rows.max(cols);
        let w: Vec<Vec<i64>> = (0..n)
            .map(|c| {
                (0..n)
                    .map(|l| {
                        if c < cols && l < rows {
                            counts[l][c] as i64
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        let (best, perm) = oracles::brute_force_assignment(&w);
        let got: i64 = mapping
            .iter()
            .enumerate()
            .filter_map(|(c, l)| l.map(|l| counts[l][c] as i64))
            .sum();
        let expected: Vec<Option<usize>> = perm[..cols]
            .iter()
            .map(|&l| (l < rows).then_some(l))
            .collect();
        if got != best || mapping != expected || max_weight_assignment(&w) != perm {
            bad += 1;
        }
    }
    bad
}

pub struct PartitionSweep {
    pub ari: Deviation,
    pub nmi: Deviation,
    pub ami: Deviation,
    pub expected_mi: Deviation,
}

fn table_of(u: &[usize], v: &[usize]) -> ContingencyTable {
    let gold: Vec<i64> = u.iter().map(|&x| x as i64).collect();
    ContingencyTable::from_assignments(&gold, v, None).unwrap()
}

/// Compares ARI, NMI and AMI against the oracles on every ordered pair of
/// set partitions of `n` elements for each `n` in `sizes`.
///
/// Expected mutual information under random rearrangement depends only on
/// the two block-size multisets, so the exhaustive `n!` oracle runs once
/// per pair of multisets and is reused.
pub fn partition_sweep(sizes: &[usize]) -> PartitionSweep {
    let mut out = PartitionSweep {
        ari: Deviation::default(),
        nmi: Deviation::default(),
        ami: Deviation::default(),
        expected_mi: Deviation::default(),
    };
    for &n in sizes {
        let parts = oracles::set_partitions(n);
        let shapes: Vec<Vec<usize>> = parts.iter().map(|p| oracles::block_sizes(p)).collect();
        let mut emi_cache: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
        for (iu, u) in parts.iter().enumerate() {
            for (iv, v) in parts.iter().enumerate() {
                let t = table_of(u, v);
                out.ari.record(ari(&t), oracles::pair_counting_ari(u, v));
                out.nmi.record(nmi(&t), oracles::nmi(u, v));
                let key = (shapes[iu].clone(), shapes[iv].clone());
                let emi = *emi_cache.entry(key).or_insert_with(|| {
                    let a = oracles::labeling_from_sizes(&shapes[iu]);
                    let b = oracles::labeling_from_sizes(&shapes[iv]);
                    let exact = oracles::exhaustive_expected_mi(&a, &b);
                    let ta = table_of(&a, &b);
                    out.expected_mi
                        .record(textclust::eval::expected_mutual_information(&ta), exact);
                    exact
                });
                out.ami.record(ami(&t), oracles::ami(u, v, emi));
            }
        }
    }
    out
}

/// Monte-Carlo check of AMI's expected mutual information on random
/// labelings of `n` elements. Returns (worst deviation in standard errors,
/// worst absolute deviation).
pub fn ami_monte_carlo(cases: usize, n: usize, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_sigma, mut worst_abs) = (0.0f64, 0.0f64);
    for _ in 0..cases {
        let ku = rng.gen_range(1..=n);
        let kv = rng.gen_range(1..=n);
        let u: Vec<usize> = (0..n).map(|_| rng.gen_range(0..ku)).collect();
        let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..kv)).collect();
        let t = table_of(&u, &v);
        let exact = textclust::eval::expected_mutual_information(&t);
        let (mean, se) = oracles::sampled_expected_mi(&u, &v, samples, &mut rng);
        let d = (exact - mean).abs();
        worst_abs = worst_abs.max(d);
        if se > 0.0 {
            worst_sigma = worst_sigma.max(d / se);
        } else if d > 1e-12 {
            worst_sigma = f64::INFINITY;
        }
    }
    (worst_sigma, worst_abs)
}
