use crate::{Error, Result};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Davies-Bouldin index of `points` grouped by `clusters`, Euclidean.
///
/// Only nonempty clusters take part. The radius of a cluster is the mean
/// distance of its points to the centroid.
pub fn dbi(points: &[Vec<f64>], clusters: &[usize]) -> Result<f64> {
    if points.len() != clusters.len() {
        return Err(Error::Shape(format!(
            "{} points but {} cluster ids",
            points.len(),
            clusters.len()
        )));
    }
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Shape("points differ in dimension".into()));
    }
    let k = clusters.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![vec![0.0; dim]; k];
    let mut sizes = vec![0usize; k];
    for (p, &c) in points.iter().zip(clusters) {
        sizes[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    let live: Vec<usize> = (0..k).filter(|&c| sizes[c] > 0).collect();
    if live.len() < 2 {
        return Err(Error::Degenerate(format!(
            "Davies-Bouldin index needs 2 nonempty clusters, found {}",
            live.len()
        )));
    }
    let centroids: Vec<Vec<f64>> = (0..k)
        .map(|c| sums[c].iter().map(|s| s / sizes[c].max(1) as f64).collect())
        .collect();
    let mut radius = vec![0.0; k];
    for (p, &c) in points.iter().zip(clusters) {
        radius[c] += distance(p, &centroids[c]);
    }
    for &c in &live {
        radius[c] /= sizes[c] as f64;
    }
    let mut total = 0.0;
    for &i in &live {
        let mut worst = 0.0f64;
        for &j in &live {
            if i == j {
                continue;
            }
            let d = distance(&centroids[i], &centroids[j]);
            if d == 0.0 {
                return Err(Error::Degenerate(format!(
                    "clusters {i} and {j} share a centroid"
                )));
            }
            worst = worst.max((radius[i] + radius[j]) / d);
        }
        total += worst;
    }
    Ok(total / live.len() as f64)
}
