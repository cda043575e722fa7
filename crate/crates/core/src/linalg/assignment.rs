//! Dense linear assignment (Hungarian / Kuhn–Munkres, O(n^3)).

/// Minimum-cost perfect assignment for a square cost matrix.
///
/// `costs[i][j]` is the cost of assigning row `i` to column `j`. Returns
/// `assignment` with `assignment[i]` the column matched to row `i`. Costs
/// must be finite.
pub fn hungarian(costs: &[Vec<f64>]) -> Vec<usize> {
    let n = costs.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(costs.iter().all(|row| row.len() == n));

    // Potentials and matching use 1-based indices with 0 as the virtual column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[i0 - 1][j - 1] - u[i0] - v[j];
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Assignment minimising the largest selected cost.
///
/// The bottleneck value is found by bisection over the sorted distinct costs
/// (each probe is a zero/one Hungarian feasibility check); among the
/// bottleneck-optimal assignments the one with the smallest total cost is
/// returned. Returns `(bottleneck, assignment)`.
pub fn bottleneck_assignment(costs: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = costs.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut levels: Vec<f64> = costs.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let feasible = |threshold: f64| {
        let masked: Vec<Vec<f64>> = costs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| if c <= threshold { 0.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        let a = hungarian(&masked);
        a.iter().enumerate().all(|(i, &j)| costs[i][j] <= threshold)
    };

    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let bottleneck = levels[lo];

    // Edges above the bottleneck get a penalty larger than any feasible total.
    let total: f64 = costs.iter().flatten().map(|c| c.abs()).sum();
    let penalty = 1.0 + 2.0 * total;
    let restricted: Vec<Vec<f64>> = costs
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| if c <= bottleneck { c } else { penalty })
                .collect()
        })
        .collect();
    (bottleneck, hungarian(&restricted))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let costs = vec![
            vec![4.0, 1.0, 3.0, 2.5],
            vec![2.0, 0.0, 5.0, 1.0],
            vec![3.0, 2.0, 2.0, 0.5],
            vec![1.5, 3.5, 0.2, 4.0],
        ];
        let a = hungarian(&costs);
        let cost = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| costs[i][j]).sum::<f64>();
        let best = permutations(4)
            .iter()
            .map(|p| cost(p))
            .fold(f64::INFINITY, f64::min);
        assert!((cost(&a) - best).abs() < 1e-12);
    }

    #[test]
    fn bottleneck_matches_enumeration() {
        let costs = vec![
            vec![0.9, 0.1, 0.8],
            vec![0.2, 0.7, 0.3],
            vec![0.4, 0.6, 0.5],
        ];
        let (b, a) = bottleneck_assignment(&costs);
        let best = permutations(3)
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| costs[i][j]).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(b, best);
        let achieved = a.iter().enumerate().map(|(i, &j)| costs[i][j]).fold(0.0, f64::max);
        assert_eq!(achieved, best);
    }

    #[test]
    fn empty_input() {
        assert!(hungarian(&[]).is_empty());
        assert_eq!(bottleneck_assignment(&[]).0, 0.0);
    }
}
