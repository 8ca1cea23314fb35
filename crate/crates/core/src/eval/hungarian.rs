use super::ContingencyTable;

/// Maximum-weight perfect assignment of a square integer matrix.
///
/// Returns `assign[row] = column`. Among all optimal assignments the
/// lexicographically smallest `assign` vector is returned.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let n = weights.len();
    assert!(
        weights.iter().all(|r| r.len() == n),
        "weight matrix must be square"
    );
    if n == 0 {
        return Vec::new();
    }
    let cost = |i: usize, j: usize| -weights[i][j];
    let (u, v, mut assign) = min_cost_with_potentials(n, &cost);
    let tight = |i: usize, j: usize| cost(i, j) - u[i] - v[j] == 0;

    // Every optimal assignment is a perfect matching of the tight edges and
    // vice versa, so fix rows in order, each to its smallest column that
    // still completes to a perfect tight matching.
    let mut owner = vec![0usize; n];
    for (i, &j) in assign.iter().enumerate() {
        owner[j] = i;
    }
    for i in 0..n {
        for c in 0..assign[i] {
            if !tight(i, c) {
                continue;
            }
            let r = owner[c];
            if r < i {
                continue;
            }
            let free = assign[i];
            let mut visited = vec![false; n];
            visited[c] = true;
            let mut path = Vec::new();
            if augment(r, free, i, &tight, &assign, &owner, &mut visited, &mut path) {
                // path holds (row, new column) edges that shift along the cycle
                for &(row, col) in &path {
                    assign[row] = col;
                    owner[col] = row;
                }
                assign[i] = c;
                owner[c] = i;
                break;
            }
        }
    }
    assign
}

/// Searches an alternating path from the unmatched `row` to column `free`
/// through rows after `fixed`.
#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    free: usize,
    fixed: usize,
    tight: &dyn Fn(usize, usize) -> bool,
    assign: &[usize],
    owner: &[usize],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for col in 0..assign.len() {
        if visited[col] || !tight(row, col) || col == assign[row] {
            continue;
        }
        visited[col] = true;
        if col == free {
            path.push((row, col));
            return true;
        }
        let next = owner[col];
        if next <= fixed {
            continue;
        }
        if augment(next, free, fixed, tight, assign, owner, visited, path) {
            path.push((row, col));
            return true;
        }
    }
    false
}

/// Shortest augmenting path Hungarian method on an `n × n` cost matrix.
/// Returns the row potentials, column potentials and an optimal assignment.
fn min_cost_with_potentials(
    n: usize,
    cost: &dyn Fn(usize, usize) -> i64,
) -> (Vec<i64>, Vec<i64>, Vec<usize>) {
    const INF: i64 = i64::MAX / 4;
    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), assign)
}

/// Maps clusters to gold label rows so the number of documents on mapped
/// cells is maximal.
///
/// The table is padded to a square with zero rows or columns; clusters
/// matched to a padding label map to `None`. The result is indexed by
/// cluster and is injective over the `Some` entries.
pub fn hungarian_assign(table: &ContingencyTable) -> Vec<Option<usize>> {
    let (rows, cols) = (table.num_labels(), table.num_clusters());
    let n = rows.max(cols);
    // Rows of the weight matrix are clusters, so ties break towards the
    // smallest label for the smallest cluster id.
    let weights: Vec<Vec<i64>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|l| {
                    if c < cols && l < rows {
                        table.get(l, c) as i64
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    max_weight_assignment(&weights)
        .into_iter()
        .take(cols)
        .map(|l| (l < rows).then_some(l))
        .collect()
}

/// Documents on the cells selected by `mapping`.
pub fn mapped_total(table: &ContingencyTable, mapping: &[Option<usize>]) -> u64 {
    mapping
        .iter()
        .enumerate()
        .filter_map(|(c, l)| l.map(|l| table.get(l, c)))
        .sum()
}
