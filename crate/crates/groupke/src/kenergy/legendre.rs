//! Discrete Legendre transforms on sample grids, with round-trip error
//! reporting. The gradient of a strictly convex psi maps the chamber
//! onto the interior of 2P; the discrete conjugate
//! u(y) = sup_x (x . y - psi(x)) over the sample set approximates the
//! continuous transform to O(grid spacing^2).

use super::KEnergyError;

/// Tensor-product grid of n^dim points over [mins, maxs].
pub fn make_grid(mins: &[f64], maxs: &[f64], n: usize) -> Vec<Vec<f64>> {
    let dim = mins.len();
    let mut pts = vec![vec![]];
    for d in 0..dim {
        let mut next = Vec::with_capacity(pts.len() * n);
        for p in &pts {
            for k in 0..n {
                let t = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
                let mut q = p.clone();
                q.push(mins[d] + t * (maxs[d] - mins[d]));
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

/// Reject sample sets that fail a pairwise convexity (cyclic
/// monotonicity) spot check: for convex psi and any two samples,
/// psi(b) >= psi(a) + g_a . (b - a) must admit *some* subgradient, which
/// on a discrete set is implied by midpoint convexity. We test midpoint
/// convexity against nearest-sample interpolation.
fn check_convex(points: &[Vec<f64>], values: &[f64]) -> Result<(), KEnergyError> {
    // pairwise midpoint test against the closest available sample
    let tol = 1e-9;
    let m = points.len().min(64); // spot check; full scan is quadratic
    for i in 0..m {
        for j in (i + 1)..m {
            let mid: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            // nearest sample to the midpoint
            let (k, d2) = points
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let d: f64 = p.iter().zip(&mid).map(|(a, b)| (a - b) * (a - b)).sum();
                    (k, d)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if d2 < 1e-20 {
                // exact midpoint present: hard convexity requirement
                if values[k] > 0.5 * (values[i] + values[j]) + tol {
                    return Err(KEnergyError::NotConvexSamples);
                }
            }
        }
    }
    Ok(())
}

/// Discrete Legendre transform: for each target y, sup over samples of
/// x . y - psi(x).
pub fn legendre_transform(
    points: &[Vec<f64>],
    values: &[f64],
    targets: &[Vec<f64>],
) -> Result<Vec<f64>, KEnergyError> {
    assert_eq!(points.len(), values.len());
    check_convex(points, values)?;
    Ok(targets
        .iter()
        .map(|y| {
            points
                .iter()
                .zip(values)
                .map(|(x, v)| x.iter().zip(y).map(|(xi, yi)| xi * yi).sum::<f64>() - v)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Round-trip sup-error: transform psi on `points` to `targets`, back
/// to `points`, and compare with the original values. For convex psi
/// the biconjugate satisfies psi** <= psi, so the signed gap is
/// reported as a nonnegative sup deficiency.
pub fn round_trip_error(
    points: &[Vec<f64>],
    values: &[f64],
    targets: &[Vec<f64>],
) -> Result<f64, KEnergyError> {
    let u = legendre_transform(points, values, targets)?;
    let back = legendre_transform(targets, &u, points)?;
    Ok(values
        .iter()
        .zip(&back)
        .map(|(v, b)| (v - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_round_trip_is_second_order() {
        // psi = |x|^2/2 is self-conjugate; round trip < grid spacing^2
        let n = 41;
        let pts = make_grid(&[-2.0, -2.0], &[2.0, 2.0], n);
        let vals: Vec<f64> = pts.iter().map(|p| 0.5 * (p[0] * p[0] + p[1] * p[1])).collect();
        // targets must cover the gradient image of psi on the sample box,
        // otherwise the biconjugate clips the outer samples
        let targets = make_grid(&[-2.0, -2.0], &[2.0, 2.0], n);
        let u = legendre_transform(&pts, &vals, &targets).unwrap();
        let h = 4.0 / (n - 1) as f64;
        for (y, uv) in targets.iter().zip(&u) {
            let exact = 0.5 * (y[0] * y[0] + y[1] * y[1]);
            assert!((uv - exact).abs() < h * h, "{uv} vs {exact}");
        }
        let rt = round_trip_error(&pts, &vals, &targets).unwrap();
        assert!(rt < h * h, "{rt}");
    }

    #[test]
    fn exponential_conjugate_matches_closed_form() {
        // psi = e^x has conjugate y log y - y on y > 0
        let pts = make_grid(&[-3.0], &[3.0], 200);
        let vals: Vec<f64> = pts.iter().map(|p| p[0].exp()).collect();
        let targets = make_grid(&[0.2], &[5.0], 200);
        let u = legendre_transform(&pts, &vals, &targets).unwrap();
        for (y, uv) in targets.iter().zip(&u) {
            let exact = y[0] * y[0].ln() - y[0];
            assert!((uv - exact).abs() < 1e-3, "y={} {uv} vs {exact}", y[0]);
        }
    }

    #[test]
    fn linear_shift_translates_the_conjugate() {
        // conjugate of psi(x) + v.x is u(y - v), exactly on samples
        let pts = make_grid(&[-2.0], &[2.0], 81);
        let vals: Vec<f64> = pts.iter().map(|p| 0.5 * p[0] * p[0]).collect();
        let v = 0.75;
        let shifted: Vec<f64> = pts.iter().zip(&vals).map(|(p, f)| f + v * p[0]).collect();
        let targets = make_grid(&[0.0], &[1.0], 11);
        let u_shift = legendre_transform(&pts, &shifted, &targets).unwrap();
        let moved: Vec<Vec<f64>> = targets.iter().map(|y| vec![y[0] - v]).collect();
        let u_moved = legendre_transform(&pts, &vals, &moved).unwrap();
        for (a, b) in u_shift.iter().zip(&u_moved) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn nonconvex_samples_are_rejected() {
        let pts = make_grid(&[-1.0], &[1.0], 21);
        let vals: Vec<f64> = pts.iter().map(|p| -p[0] * p[0]).collect();
        assert!(matches!(
            legendre_transform(&pts, &vals, &pts),
            Err(KEnergyError::NotConvexSamples)
        ));
    }
}
