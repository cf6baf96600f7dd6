//! Grundmann-Moller simplex quadrature for the smooth (non-polynomial)
//! integrands: exponential soliton weights, log-det terms of the
//! K-energy, chi of the gradient.
//!
//! Rule GM[s] on the unit n-simplex is exact for polynomials of degree
//! 2s+1; nested evaluation at two consecutive s levels provides the
//! error estimate used throughout.

use crate::linalg::{self, QMat};
use crate::polytope::ChamberPolytope;

/// Quadrature rule on the unit simplex {x_i >= 0, sum x_i <= 1}.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Grundmann-Moller rule of index s (degree 2s+1) in dimension n.
pub fn grundmann_moeller(n: usize, s: usize) -> SimplexRule {
    let d = 2 * s + 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=s {
        let denom = (d + n - 2 * i) as f64;
        // (-1)^i 2^{-2s} (d+n-2i)^d / (i! (d+n-i)!)
        let mut w = denom.powi(d as i32) / 2f64.powi(2 * s as i32);
        for k in 2..=i {
            w /= k as f64;
        }
        for k in 2..=(d + n - i) {
            w /= k as f64;
        }
        if i % 2 == 1 {
            w = -w;
        }
        for beta in compositions_upto(n, s - i) {
            points.push(beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect());
            weights.push(w);
        }
    }
    SimplexRule { dim: n, degree: d, points, weights }
}

/// All beta in N^n with |beta| <= m, in lexicographic order.
fn compositions_upto(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, left: usize) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(out, cur, pos + 1, left - v);
        }
        cur[pos] = 0;
    }
    rec(&mut out, &mut cur, 0, m);
    out
}

/// One triangulation cell in floating point: vertex v0, edge matrix
/// columns (v_i - v0), and the Jacobian |det|.
#[derive(Debug, Clone)]
pub struct Cell {
    pub v0: Vec<f64>,
    pub edges: Vec<Vec<f64>>, // edges[j] = v_{j+1} - v0
    pub jac: f64,
}

/// Float cell for one full-dimensional rational simplex.
pub fn cell_from_simplex(s: &crate::polytope::Simplex) -> Cell {
    let r = s[0].len();
    let v0 = linalg::vec_to_f64(&s[0]);
    let edges: Vec<Vec<f64>> = (1..=r)
        .map(|i| linalg::vec_to_f64(&linalg::sub(&s[i], &s[0])))
        .collect();
    let rows: Vec<_> = (1..=r).map(|i| linalg::sub(&s[i], &s[0])).collect();
    let jac = linalg::to_f64(&QMat::from_rows(&rows).det()).abs();
    Cell { v0, edges, jac }
}

/// Float cells for the chamber triangulation.
pub fn chamber_cells(cp: &ChamberPolytope) -> Vec<Cell> {
    cp.interior_simplices().map(cell_from_simplex).collect()
}

/// Integrate f over the cells with the given rule.
pub fn integrate_cells<F: Fn(&[f64]) -> f64>(cells: &[Cell], rule: &SimplexRule, f: &F) -> f64 {
    let mut total = 0.0;
    let mut y = vec![0.0; cells.first().map_or(0, |c| c.v0.len())];
    for cell in cells {
        let mut cell_sum = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = cell.v0[k];
                for (j, t) in p.iter().enumerate() {
                    *yk += t * cell.edges[j][k];
                }
            }
            cell_sum += w * f(&y);
        }
        total += cell_sum * cell.jac;
    }
    total
}

/// Two-level evaluation: value at order s+1 plus |difference| as the
/// error estimate.
pub fn integrate_with_error<F: Fn(&[f64]) -> f64>(
    cells: &[Cell],
    dim: usize,
    s: usize,
    f: &F,
) -> (f64, f64) {
    let lo = integrate_cells(cells, &grundmann_moeller(dim, s), f);
    let hi = integrate_cells(cells, &grundmann_moeller(dim, s + 1), f);
    (hi, (hi - lo).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::weight_pi;
    use crate::linalg::{qi, qvec, Q};
    use crate::polytope::{restrict_to_chamber, Facet, Polytope};
    use crate::rootdata::RootSystem;
    use num_traits::ToPrimitive;

    #[test]
    fn exactness_on_unit_interval() {
        // GM[s] integrates x^k exactly for k <= 2s+1
        for s in 0..4usize {
            let rule = grundmann_moeller(1, s);
            for k in 0..=(2 * s + 1) {
                let v: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(k as i32))
                    .sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((v - exact).abs() < 1e-12, "s={s} k={k}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn exactness_on_triangle() {
        let rule = grundmann_moeller(2, 3); // degree 7
        for (a, b) in [(0u32, 0u32), (1, 0), (2, 1), (3, 4), (5, 2)] {
            let v: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                .sum();
            // int over std triangle of x^a y^b = a! b! / (a+b+2)!
            let fact = |m: u32| (1..=m as u64).product::<u64>() as f64;
            let exact = fact(a) * fact(b) / fact(a + b + 2);
            assert!((v - exact).abs() < 1e-12, "({a},{b}): {v} vs {exact}");
        }
    }

    #[test]
    fn pi_integral_matches_exact_rational() {
        let rs = RootSystem::from_cartan_type("A2").unwrap();
        let mut facets = Vec::new();
        for u in [[1i64, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]] {
            facets.push(Facet { u: qvec(&u), lambda: qi(6) });
        }
        let p = Polytope::new(2, facets).unwrap();
        let cp = restrict_to_chamber(&p, &rs).unwrap();
        let pi = weight_pi(&rs);
        let exact: Q = crate::integrate::integrate_chamber(&cp, &pi);
        let cells = chamber_cells(&cp);
        let (v, err) = integrate_with_error(&cells, 2, 3, &|y| pi.eval_f64(y));
        let exact_f = exact.to_f64().unwrap();
        assert!((v - exact_f).abs() < 1e-9 * exact_f.abs(), "{v} vs {exact_f}");
        assert!(err < 1e-9 * exact_f.abs());
    }

    #[test]
    fn smooth_integrand_converges() {
        // int over unit square of e^{x+y}: triangulate as two cells
        let tri1 = Cell {
            v0: vec![0.0, 0.0],
            edges: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            jac: 1.0,
        };
        let tri2 = Cell {
            v0: vec![1.0, 1.0],
            edges: vec![vec![-1.0, 0.0], vec![0.0, -1.0]],
            jac: 1.0,
        };
        let cells = [tri1, tri2];
        let f = |y: &[f64]| (y[0] + y[1]).exp();
        let exact = (std::f64::consts::E - 1.0).powi(2);
        let (v, err) = integrate_with_error(&cells, 2, 5, &f);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        assert!(err < 1e-10);
    }
}
