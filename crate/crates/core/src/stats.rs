//! Rank and linear correlation for the gap vs. mutation-score study.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("correlation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite value")]
    NonFinite,
}

fn check(points: &[(f64, f64)]) -> Result<(), StatsError> {
    if points.len() < 3 {
        return Err(StatsError::TooFewPoints(points.len()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson_unchecked(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson(points: &[(f64, f64)]) -> Result<f64, StatsError> {
    check(points)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    pearson_unchecked(&xs, &ys)
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman(points: &[(f64, f64)]) -> Result<f64, StatsError> {
    check(points)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    pearson_unchecked(&average_ranks(&xs), &average_ranks(&ys))
}

/// Fixed 4-decimal rendering, `n/a` when undefined.
pub fn format_coefficient(r: Result<f64, StatsError>) -> String {
    match r {
        Ok(v) => {
            let v = (v * 10_000.0).round() / 10_000.0;
            // avoid "-0.0000"
            format!("{:.4}", if v == 0.0 { 0.0 } else { v })
        }
        Err(_) => "n/a".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_correlations() {
        let inv = [(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)];
        assert!((spearman(&inv).unwrap() + 1.0).abs() < 1e-12);
        let id = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert!((spearman(&id).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_use_average_ranks() {
        // y ranks (2.5, 2.5, 1): r = -1.5 / sqrt(2 * 1.5) = -sqrt(3)/2
        let pts = [(1.0, 2.0), (2.0, 2.0), (3.0, 1.0)];
        let r = spearman(&pts).unwrap();
        assert!((r - (-0.866)).abs() <= 0.001, "{r}");
        assert_eq!(average_ranks(&[2.0, 2.0, 1.0]), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn undefined_cases() {
        assert_eq!(spearman(&[(1.0, 1.0), (2.0, 2.0)]), Err(StatsError::TooFewPoints(2)));
        assert_eq!(
            spearman(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]),
            Err(StatsError::ZeroVariance)
        );
        assert_eq!(
            pearson(&[(1.0, f64::NAN), (2.0, 5.0), (3.0, 5.0)]),
            Err(StatsError::NonFinite)
        );
        assert_eq!(format_coefficient(Err(StatsError::ZeroVariance)), "n/a");
        assert_eq!(format_coefficient(Ok(-0.86602)), "-0.8660");
    }

    fn series() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-50i32..50, -50i32..50), 3..30)
            .prop_map(|v| v.into_iter().map(|(x, y)| (x as f64, y as f64)).collect())
    }

    proptest! {
        #[test]
        fn antisymmetric(pts in series()) {
            let neg: Vec<_> = pts.iter().map(|&(x, y)| (x, -y)).collect();
            match (spearman(&pts), spearman(&neg)) {
                (Ok(a), Ok(b)) => prop_assert!((a + b).abs() < 1e-9),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }

        #[test]
        fn invariant_under_monotone_transforms(pts in series()) {
            let t: Vec<_> = pts.iter().map(|&(x, y)| (x * x * x + 3.0 * x, (y / 7.0).exp())).collect();
            match (spearman(&pts), spearman(&t)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }

        #[test]
        fn bounded(pts in series()) {
            if let Ok(r) = spearman(&pts) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
            if let Ok(r) = pearson(&pts) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
