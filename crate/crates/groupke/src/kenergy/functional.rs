//! Quadrature evaluation of the reduced K-energy K(u) = L(u) + N(u) on
//! smooth candidates, and the soliton-modified variant K^X.

use crate::integrate::weight_pi;
use crate::linalg::{self, to_f64};
use crate::polytope::ChamberPolytope;
use crate::quad::{cell_from_simplex, grundmann_moeller, Cell, SimplexRule};
use crate::rootdata::RootSystem;
use crate::soliton::SolitonField;

use super::candidate::{log_det_pd, SmoothCandidate};
use super::chi::ChiFunction;
use super::{KEnergyError, QuadConfig};

/// A quadrature value with its two-level error estimate and the
/// fraction of absolute quadrature mass dropped at walls / chamber
/// violations.
#[derive(Debug, Clone, Copy)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
    pub dropped_mass: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct KEnergyValue {
    pub linear: QuadValue,
    pub nonlinear: QuadValue,
    pub total: f64,
}

/// One float simplex tagged with its cone (outer facet) index.
#[derive(Debug, Clone)]
struct FCell {
    cone: usize,
    verts: Vec<Vec<f64>>,
    jac: f64,
}

/// Per-cone float cells (cone index = outer facet index).
fn cone_cells(cp: &ChamberPolytope) -> Vec<FCell> {
    cp.cone_simplices
        .iter()
        .map(|(a, s)| {
            let c: Cell = cell_from_simplex(s);
            FCell {
                cone: *a,
                verts: s.iter().map(|v| linalg::vec_to_f64(v)).collect(),
                jac: c.jac,
            }
        })
        .collect()
}

fn diameter(cp: &ChamberPolytope) -> f64 {
    let vs: Vec<Vec<f64>> = cp.parent.vertices.iter().map(|v| linalg::vec_to_f64(v)).collect();
    let mut d: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for b in &vs[i + 1..] {
            let dist = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Unit-normalized Weyl wall covectors in y-coordinates.
fn wall_normals(cp: &ChamberPolytope) -> Vec<Vec<f64>> {
    cp.wall_covectors
        .iter()
        .map(|c| {
            let v = linalg::vec_to_f64(c);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// What the per-node integrand reports.
enum Node {
    Value(f64),
    Dropped,
}

/// Apply one rule to one cell. `f(cone, y)` evaluates the integrand;
/// nodes inside the wall margin are dropped before `f` is called.
/// Returns (integral, dropped |mass|, total |mass|).
fn eval_cell<F>(
    cell: &FCell,
    rule: &SimplexRule,
    walls: &[Vec<f64>],
    margin: f64,
    f: &mut F,
) -> Result<(f64, f64, f64), KEnergyError>
where
    F: FnMut(usize, &[f64]) -> Result<Node, KEnergyError>,
{
    let dim = rule.dim;
    let mut cell_sum = 0.0;
    let mut dropped_abs = 0.0;
    let mut total_abs = 0.0;
    let mut y = vec![0.0; dim];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = cell.verts[0][k];
            for (j, t) in p.iter().enumerate() {
                *yk += t * (cell.verts[j + 1][k] - cell.verts[0][k]);
            }
        }
        let wmass = w.abs() * cell.jac;
        total_abs += wmass;
        let near_wall = walls
            .iter()
            .any(|c| c.iter().zip(&y).map(|(ci, yi)| ci * yi).sum::<f64>().abs() < margin);
        if near_wall {
            dropped_abs += wmass;
            continue;
        }
        match f(cell.cone, &y)? {
            Node::Value(v) => cell_sum += w * v,
            Node::Dropped => dropped_abs += wmass,
        }
    }
    Ok((cell_sum * cell.jac, dropped_abs, total_abs))
}

/// Longest-edge bisection (ties broken lexicographically).
fn bisect(cell: &FCell) -> (FCell, FCell) {
    let mut best = (0usize, 1usize);
    let mut best_d = -1.0;
    for i in 0..cell.verts.len() {
        for j in (i + 1)..cell.verts.len() {
            let d: f64 = cell.verts[i]
                .iter()
                .zip(&cell.verts[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d > best_d {
                best_d = d;
                best = (i, j);
            }
        }
    }
    let (i, j) = best;
    let mid: Vec<f64> = cell.verts[i]
        .iter()
        .zip(&cell.verts[j])
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mut a = cell.clone();
    let mut b = cell.clone();
    a.verts[j] = mid.clone();
    b.verts[i] = mid;
    a.jac = 0.5 * cell.jac;
    b.jac = 0.5 * cell.jac;
    (a, b)
}

/// Adaptive quadrature over the cone cells: each cell is accepted when
/// the two consecutive Grundmann-Moller levels agree within its share
/// of the tolerance, otherwise it is bisected along its longest edge.
/// The Guillemin integrands have l log l singularities at the outer
/// facets; the bisection cascade grades the mesh geometrically there.
fn adaptive<F>(cp: &ChamberPolytope, cfg: &QuadConfig, f: &mut F) -> Result<QuadValue, KEnergyError>
where
    F: FnMut(usize, &[f64]) -> Result<Node, KEnergyError>,
{
    let walls = wall_normals(cp);
    let margin = cfg.wall_margin_rel * diameter(cp);
    let lo_rule = grundmann_moeller(cp.dim, cfg.quad_s);
    let hi_rule = grundmann_moeller(cp.dim, cfg.quad_s + 1);

    // scale pass for the absolute tolerance budget
    let initial = cone_cells(cp);
    let mut scale = 0.0;
    for cell in &initial {
        let (v, _, _) = eval_cell(cell, &lo_rule, &walls, margin, f)?;
        scale += v.abs();
    }
    let tol_total = cfg.refine_rel * scale.max(1.0);

    let mut total = 0.0;
    let mut err = 0.0;
    let mut dropped = 0.0;
    let mut mass = 0.0;
    let mut splits = 0usize;
    let total_jac: f64 = initial.iter().map(|c| c.jac).sum();
    let mut stack: Vec<(FCell, f64, usize)> = initial
        .into_iter()
        .rev()
        .map(|c| {
            let tol = tol_total * c.jac / total_jac;
            (c, tol, 0usize)
        })
        .collect();
    while let Some((cell, tol, depth)) = stack.pop() {
        let (lo, _, _) = eval_cell(&cell, &lo_rule, &walls, margin, f)?;
        let (hi, d, m) = eval_cell(&cell, &hi_rule, &walls, margin, f)?;
        let diff = (hi - lo).abs();
        if diff <= tol || depth >= cfg.max_refine_depth || splits >= cfg.max_refine_splits {
            total += hi;
            err += diff;
            dropped += d;
            mass += m;
        } else {
            splits += 1;
            let (a, b) = bisect(&cell);
            stack.push((b, 0.5 * tol, depth + 1));
            stack.push((a, 0.5 * tol, depth + 1));
        }
    }
    let fraction = if mass > 0.0 { dropped / mass } else { 0.0 };
    if fraction > cfg.dropped_mass_bound {
        return Err(KEnergyError::ChamberViolation { fraction });
    }
    Ok(QuadValue { value: total, error: err, dropped_mass: fraction })
}

/// N(u) = -int log det(u_{,ij}) pi + int [chi(grad u) + 4 rho . grad u] pi,
/// with the bracket evaluated in its bounded form.
pub fn nonlinear_n(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &SmoothCandidate,
    cfg: &QuadConfig,
) -> Result<QuadValue, KEnergyError> {
    let chi = ChiFunction::new(rs);
    let pi = weight_pi(rs);
    let has_roots = !chi.alphas.is_empty();
    adaptive(cp, cfg, &mut |_, y| {
        let h = u.hess(y);
        let Some(logdet) = log_det_pd(&h) else {
            return Err(KEnergyError::NotConvexAtNodes);
        };
        let x = u.grad(y);
        let chi_term = if has_roots {
            if !chi.in_chamber(&x) {
                return Ok(Node::Dropped);
            }
            chi.bounded_value(&x)
        } else {
            0.0
        };
        Ok(Node::Value((chi_term - logdet) * pi.eval_f64(y)))
    })
}

/// L(u) for a smooth candidate, by quadrature of the condensed per-cone
/// integrand [<Lambda_A y - 4 rho, grad u> + (Lambda_A n - Sbar) u] pi.
pub fn linear_l(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &SmoothCandidate,
    cfg: &QuadConfig,
) -> Result<QuadValue, KEnergyError> {
    let pi = weight_pi(rs);
    let lam: Vec<f64> = crate::criteria::lambdas(cp, rs).iter().map(to_f64).collect();
    let sbar = to_f64(&crate::criteria::sbar(cp, rs));
    let n = rs.complex_dim() as f64;
    let four_rho: Vec<f64> = rs.rho.iter().map(|r| 4.0 * to_f64(r)).collect();
    adaptive(cp, cfg, &mut |a, y| {
        let g = u.grad(y);
        let pairing: f64 = y
            .iter()
            .zip(&g)
            .zip(&four_rho)
            .map(|((yi, gi), ri)| (lam[a] * yi - ri) * gi)
            .sum();
        Ok(Node::Value((pairing + (lam[a] * n - sbar) * u.value(y)) * pi.eval_f64(y)))
    })
}

/// K(u) = L(u) + N(u).
pub fn kenergy_value(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    u: &SmoothCandidate,
    cfg: &QuadConfig,
) -> Result<KEnergyValue, KEnergyError> {
    let l = linear_l(cp, rs, u, cfg)?;
    let n = nonlinear_n(cp, rs, u, cfg)?;
    Ok(KEnergyValue { linear: l, nonlinear: n, total: l.value + n.value })
}

/// K^X(u) = L^X(u) + N^X(u) with weight e^{theta_X} pi; the linear part
/// is the Fano-normalized form int <y - 4 rho, grad u> e^theta pi.
pub fn modified_kenergy_value(
    cp: &ChamberPolytope,
    rs: &RootSystem,
    sol: &SolitonField,
    u: &SmoothCandidate,
    cfg: &QuadConfig,
) -> Result<KEnergyValue, KEnergyError> {
    let chi = ChiFunction::new(rs);
    let pi = weight_pi(rs);
    let has_roots = !chi.alphas.is_empty();
    let four_rho: Vec<f64> = rs.rho.iter().map(|r| 4.0 * to_f64(r)).collect();
    let l = adaptive(cp, cfg, &mut |_, y| {
        let g = u.grad(y);
        let pairing: f64 = y
            .iter()
            .zip(&g)
            .zip(&four_rho)
            .map(|((yi, gi), ri)| (yi - ri) * gi)
            .sum();
        Ok(Node::Value(pairing * sol.theta(y).exp() * pi.eval_f64(y)))
    })?;
    let n = adaptive(cp, cfg, &mut |_, y| {
        let h = u.hess(y);
        let Some(logdet) = log_det_pd(&h) else {
            return Err(KEnergyError::NotConvexAtNodes);
        };
        let x = u.grad(y);
        let chi_term = if has_roots {
            if !chi.in_chamber(&x) {
                return Ok(Node::Dropped);
            }
            chi.bounded_value(&x)
        } else {
            0.0
        };
        Ok(Node::Value((chi_term - logdet) * sol.theta(y).exp() * pi.eval_f64(y)))
    })?;
    Ok(KEnergyValue { linear: l, nonlinear: n, total: l.value + n.value })
}
