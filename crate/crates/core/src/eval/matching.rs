//! Maximum-weight bipartite matching (Hungarian algorithm, O(n²m)).

/// Assigns rows to distinct columns maximizing the total weight. Returns,
/// for each row, its column or `None`. Every row is matched when there are
/// at least as many columns as rows.
pub fn max_weight_matching(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| weights[i][j]).collect()).collect();
        let mut out = vec![None; rows];
        for (j, i) in max_weight_matching(&transposed).into_iter().enumerate() {
            if let Some(i) = i {
                out[i] = Some(j);
            }
        }
        return out;
    }
    let (n, m) = (rows, cols);
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(w: &[Vec<f64>], m: &[Option<usize>]) -> f64 {
        m.iter().enumerate().filter_map(|(i, j)| j.map(|j| w[i][j])).sum()
    }

    fn brute(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == w.len() {
            return 0.0;
        }
        let mut best = brute(w, row + 1, used);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(w[row][j] + brute(w, row + 1, used));
                used[j] = false;
            }
        }
        best
    }

    #[test]
    fn small_cases() {
        let w = vec![vec![3.0, 0.0], vec![0.0, 2.0]];
        assert_eq!(max_weight_matching(&w), vec![Some(0), Some(1)]);
        let w = vec![vec![1.0, 5.0], vec![1.0, 4.0]];
        assert_eq!(total(&w, &max_weight_matching(&w)), 6.0);
        assert_eq!(max_weight_matching(&[]), Vec::<Option<usize>>::new());
        let w = vec![vec![1.0], vec![7.0], vec![2.0]];
        assert_eq!(max_weight_matching(&w), vec![None, Some(0), None]);
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            w in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u8..10, c), r))
        ) {
            let w: Vec<Vec<f64>> = w.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let m = max_weight_matching(&w);
            let cols: Vec<usize> = m.iter().flatten().copied().collect();
            let mut dedup = cols.clone();
            dedup.sort_unstable();
            dedup.dedup();
            prop_assert_eq!(dedup.len(), cols.len());
            prop_assert_eq!(total(&w, &m), brute(&w, 0, &mut vec![false; w[0].len()]));
        }
    }
}
