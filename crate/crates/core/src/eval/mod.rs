//! Cluster evaluation: Hungarian cluster-to-label mapping, accuracy,
//! F-scores, ARI, NMI, AMI and the Davies-Bouldin index.

mod contingency;
mod dbi;
mod hungarian;
mod metrics;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use contingency::ContingencyTable;
pub use dbi::dbi;
pub use hungarian::{hungarian_assign, mapped_total, max_weight_assignment};
pub use metrics::{
    accuracy_and_fscores, ami, ari, class_scores, expected_mutual_information, mutual_information,
    nmi, ClassScore, Scores,
};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub table: ContingencyTable,
    /// Gold label assigned to each cluster id, `None` when the cluster is
    /// matched to padding.
    pub mapping: Vec<Option<i64>>,
    pub accuracy: f64,
    pub f_weighted: f64,
    pub f_micro: f64,
    pub f_macro: f64,
    pub ari: f64,
    pub ami: f64,
    pub nmi: f64,
    /// Absent when fewer than two clusters are nonempty or no
    /// distributions were supplied.
    pub dbi: Option<f64>,
    pub num_clusters: usize,
    pub nonempty_clusters: usize,
}

/// Evaluates `predictions` (cluster ids) against `gold` labels.
///
/// `distributions`, when given, are the per-document category
/// distributions used for the Davies-Bouldin index. `num_clusters` widens
/// the table with clusters that received no document.
pub fn report(
    gold: &[i64],
    predictions: &[usize],
    distributions: Option<&[Vec<f64>]>,
    num_clusters: Option<usize>,
) -> Result<ClusteringReport> {
    let table = ContingencyTable::from_assignments(gold, predictions, num_clusters)?;
    let rows = hungarian_assign(&table);
    let scores = accuracy_and_fscores(&table, &rows);
    let dbi = match distributions {
        Some(points) => {
            if points.len() != predictions.len() {
                return Err(Error::Shape(format!(
                    "{} distributions but {} predictions",
                    points.len(),
                    predictions.len()
                )));
            }
            match dbi(points, predictions) {
                Ok(v) => Some(v),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            }
        }
        None => None,
    };
    Ok(ClusteringReport {
        mapping: rows.iter().map(|r| r.map(|r| table.labels()[r])).collect(),
        accuracy: scores.accuracy,
        f_weighted: scores.f_weighted,
        f_micro: scores.f_micro,
        f_macro: scores.f_macro,
        ari: ari(&table),
        ami: ami(&table),
        nmi: nmi(&table),
        dbi,
        num_clusters: table.num_clusters(),
        nonempty_clusters: table.nonempty_clusters(),
        table,
    })
}

impl ClusteringReport {
    /// Plain text summary: one header row and one value row.
    pub fn to_table(&self) -> String {
        let header = [
            "F-score(weighted)",
            "F-micro",
            "F-macro",
            "Accuracy",
            "ARI",
            "AMI",
            "NMI",
            "DBI",
        ];
        let values = [
            Some(self.f_weighted),
            Some(self.f_micro),
            Some(self.f_macro),
            Some(self.accuracy),
            Some(self.ari),
            Some(self.ami),
            Some(self.nmi),
            self.dbi,
        ];
        let mut out = String::new();
        for h in header {
            let _ = write!(out, "{h:>18}");
        }
        out.push('\n');
        for v in values {
            match v {
                Some(v) => {
                    let _ = write!(out, "{v:>18.4}");
                }
                None => {
                    let _ = write!(out, "{:>18}", "-");
                }
            }
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "documents: {}  clusters: {} ({} nonempty)  labels: {}",
            self.table.total(),
            self.num_clusters,
            self.nonempty_clusters,
            self.table.num_labels()
        );
        out
    }
}
