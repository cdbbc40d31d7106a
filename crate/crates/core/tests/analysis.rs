use phaselab::analysis::{match_subclassifiers, select_phase_checkpoints};
use proptest::prelude::*;

/// Best total over all injective maps of `min(r, c)` pairs; ties within
/// 1e-12 go to the lexicographically smallest sorted pair list.
fn brute_force(m: &[Vec<f64>]) -> (Vec<(usize, usize)>, f64) {
    let (r, c) = (m.len(), m[0].len());
    let k = r.min(c);
    let mut best: Option<(Vec<(usize, usize)>, f64)> = None;
    let mut consider = |pairs: Vec<(usize, usize)>| {
        let total: f64 = pairs.iter().map(|&(i, j)| m[i][j]).sum();
        let replace = match &best {
            None => true,
            Some((bp, bt)) => total > bt + 1e-12 || ((total - bt).abs() <= 1e-12 && pairs < *bp),
        };
        if replace {
            best = Some((pairs, total));
        }
    };
    // choose k rows (in order) and an ordered choice of k distinct columns
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    fn arrangements(
        n: usize,
        k: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                arrangements(n, k, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut rows = Vec::new();
    subsets(r, k, 0, &mut Vec::new(), &mut rows);
    let mut cols = Vec::new();
    arrangements(c, k, &mut vec![false; c], &mut Vec::new(), &mut cols);
    for rs in &rows {
        for cs in &cols {
            consider(rs.iter().copied().zip(cs.iter().copied()).collect());
        }
    }
    best.unwrap()
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6, 1usize..=6)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-1.0f64..1.0, c), r))
}

fn tied_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec![-0.5, 0.0, 0.25, 0.5]), c),
            r,
        )
    })
}

proptest! {
    #[test]
    fn matching_equals_brute_force(m in matrix()) {
        let got = match_subclassifiers(&m).unwrap();
        let (pairs, total) = brute_force(&m);
        prop_assert!((got.total - total).abs() < 1e-12);
        prop_assert_eq!(got.pairs, pairs);
    }

    #[test]
    fn matching_with_ties_equals_brute_force(m in tied_matrix()) {
        let got = match_subclassifiers(&m).unwrap();
        let (pairs, total) = brute_force(&m);
        prop_assert!((got.total - total).abs() < 1e-12);
        prop_assert_eq!(&got.pairs, &pairs);
        let rows: Vec<usize> = got.pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = got.pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(cols.len(), rows.len());
        let sum: f64 = got.correlations.iter().sum();
        prop_assert_eq!(sum, got.total);
    }

    #[test]
    fn selected_steps_strictly_increase(
        grid in (2usize..12, 2usize..6).prop_flat_map(|(a, b)| (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, b), a),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, b), a),
            1usize..b,
        ))
    ) {
        let (fg, gf, j) = grid;
        let steps: Vec<usize> = (0..fg.len()).map(|i| 5 * i).collect();
        let s = select_phase_checkpoints(&steps, &fg, &gf, j).unwrap();
        prop_assert!(s.selected.windows(2).all(|w| w[0].step < w[1].step));
        prop_assert!(s.selected.iter().all(|x| x.step > 0));
        prop_assert_eq!(s.diagnostic.is_none(), s.selected.len() == j);
        for x in &s.selected {
            // no later feasible checkpoint beats the chosen one
            let prev = s.selected.iter().find(|p| p.phase + 1 == x.phase).map_or(0, |p| p.step);
            for (a, &st) in steps.iter().enumerate() {
                if st > prev {
                    let obj = fg[a][x.phase].max(gf[a][x.phase - 1]);
                    prop_assert!(obj > x.objective || (obj == x.objective && st >= x.step));
                }
            }
        }
    }
}
