use super::{LinalgError, C64};

/// Optimal matching distance min over permutations π of max_i |x_i − y_π(i)|,
/// by exhaustive search (n is at most a handful here).
pub fn matching_distance(x: &[C64], y: &[C64]) -> Result<f64, LinalgError> {
    if x.len() != y.len() {
        return Err(LinalgError::SizeMismatch(x.len(), y.len()));
    }
    let n = x.len();
    let dist: Vec<Vec<f64>> = x.iter().map(|a| y.iter().map(|b| (a - b).norm()).collect()).collect();
    let mut used = vec![false; n];
    let mut best = f64::INFINITY;
    search(&dist, 0, 0.0, &mut used, &mut best);
    Ok(if n == 0 { 0.0 } else { best })
}

fn search(dist: &[Vec<f64>], row: usize, acc: f64, used: &mut [bool], best: &mut f64) {
    if acc >= *best {
        return;
    }
    if row == dist.len() {
        *best = acc;
        return;
    }
    for j in 0..dist.len() {
        if !used[j] {
            used[j] = true;
            search(dist, row + 1, acc.max(dist[row][j]), used, best);
            used[j] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn examples() {
        let x = [r(0.0), r(1.0)];
        assert_eq!(matching_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(matching_distance(&x, &[r(1.0), r(0.0)]).unwrap(), 0.0);
        assert_eq!(matching_distance(&[r(0.0), r(10.0)], &[r(1.0), r(10.0)]).unwrap(), 1.0);
        assert!(matching_distance(&x, &[r(1.0)]).is_err());
    }

    fn cset() -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 4)
            .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn is_a_metric(a in cset(), b in cset(), c in cset()) {
            let ab = matching_distance(&a, &b).unwrap();
            let ba = matching_distance(&b, &a).unwrap();
            let bc = matching_distance(&b, &c).unwrap();
            let ac = matching_distance(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert_eq!(matching_distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
