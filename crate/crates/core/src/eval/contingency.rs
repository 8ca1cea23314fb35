use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts `n_ij` of documents with gold label `i` (row) and predicted
/// cluster `j` (column).
///
/// Rows follow the sorted distinct gold labels. Columns are cluster ids
/// `0..num_clusters` and may include clusters that received no document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    labels: Vec<i64>,
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds the table from parallel gold labels and cluster ids.
    ///
    /// `num_clusters` widens the table with empty clusters; it must cover
    /// every id in `clusters`.
    pub fn from_assignments(
        gold: &[i64],
        clusters: &[usize],
        num_clusters: Option<usize>,
    ) -> Result<Self> {
        if gold.len() != clusters.len() {
            return Err(Error::Shape(format!(
                "{} gold labels but {} cluster assignments",
                gold.len(),
                clusters.len()
            )));
        }
        if gold.is_empty() {
            return Err(Error::Empty("no documents to evaluate".into()));
        }
        let used = clusters.iter().max().map_or(0, |m| m + 1);
        let width = match num_clusters {
            Some(k) if k < used => {
                return Err(Error::Shape(format!(
                    "cluster id {} outside 0..{k}",
                    used - 1
                )));
            }
            Some(k) => k,
            None => used,
        };
        let mut labels = gold.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let mut counts = vec![vec![0u64; width]; labels.len()];
        for (g, &c) in gold.iter().zip(clusters) {
            let row = labels.binary_search(g).expect("label collected above");
            counts[row][c] += 1;
        }
        Self::from_counts(labels, counts)
    }

    /// Builds the table from explicit counts, one row per label.
    pub fn from_counts(labels: Vec<i64>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if labels.len() != counts.len() {
            return Err(Error::Shape(format!(
                "{} labels but {} rows",
                labels.len(),
                counts.len()
            )));
        }
        let width = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != width) {
            return Err(Error::Shape("ragged contingency rows".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape("labels must be strictly increasing".into()));
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..width)
            .map(|j| counts.iter().map(|r| r[j]).sum())
            .collect();
        let total = row_sums.iter().sum();
        if total == 0 {
            return Err(Error::Empty("contingency table has no documents".into()));
        }
        Ok(Self {
            labels,
            counts,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row][col]
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.col_sums.len()
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.col_sums.iter().filter(|&&b| b > 0).count()
    }

    /// The same table with rows and columns swapped. Row labels of the
    /// transpose are the cluster ids.
    pub fn transpose(&self) -> Self {
        let counts = (0..self.num_clusters())
            .map(|j| self.counts.iter().map(|r| r[j]).collect())
            .collect();
        Self {
            labels: (0..self.num_clusters() as i64).collect(),
            counts,
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
            total: self.total,
        }
    }
}
