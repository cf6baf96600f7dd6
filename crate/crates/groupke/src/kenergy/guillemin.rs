//! Guillemin's canonical symplectic potential u0 = 1/2 sum l log l of the
//! full polytope 2P, with closed-form derivatives up to fourth order.

use crate::linalg;
use crate::polytope::Polytope;

#[derive(Debug, Clone)]
pub struct GuilleminFunction {
    /// (covector u, lambda) per facet of 2P, as floats.
    pub facets: Vec<(Vec<f64>, f64)>,
    pub dim: usize,
}

impl GuilleminFunction {
    pub fn new(p: &Polytope) -> Self {
        let facets = p
            .facets
            .iter()
            .map(|f| (linalg::vec_to_f64(&f.u), linalg::to_f64(&f.lambda)))
            .collect();
        GuilleminFunction { facets, dim: p.dim }
    }

    fn l(&self, a: usize, y: &[f64]) -> f64 {
        let (u, lam) = &self.facets[a];
        lam - u.iter().zip(y).map(|(ui, yi)| ui * yi).sum::<f64>()
    }

    /// u0(y); requires y strictly interior to 2P.
    pub fn value(&self, y: &[f64]) -> f64 {
        (0..self.facets.len())
            .map(|a| {
                let l = self.l(a, y);
                0.5 * l * l.ln()
            })
            .sum()
    }

    pub fn grad(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (a, (u, _)) in self.facets.iter().enumerate() {
            let c = -0.5 * (self.l(a, y).ln() + 1.0);
            for (gi, ui) in g.iter_mut().zip(u) {
                *gi += c * ui;
            }
        }
        g
    }

    pub fn hess(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let r = self.dim;
        let mut h = vec![vec![0.0; r]; r];
        for (a, (u, _)) in self.facets.iter().enumerate() {
            let c = 0.5 / self.l(a, y);
            for i in 0..r {
                for j in 0..r {
                    h[i][j] += c * u[i] * u[j];
                }
            }
        }
        h
    }

    /// Third derivatives d3[i][j][k] = u0_{,ijk}.
    pub fn d3(&self, y: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let r = self.dim;
        let mut t = vec![vec![vec![0.0; r]; r]; r];
        for (a, (u, _)) in self.facets.iter().enumerate() {
            let l = self.l(a, y);
            let c = 0.5 / (l * l);
            for i in 0..r {
                for j in 0..r {
                    for k in 0..r {
                        t[i][j][k] += c * u[i] * u[j] * u[k];
                    }
                }
            }
        }
        t
    }

    /// Fourth derivatives d4[i][j][k][l] = u0_{,ijkl}.
    pub fn d4(&self, y: &[f64]) -> Vec<Vec<Vec<Vec<f64>>>> {
        let r = self.dim;
        let mut t = vec![vec![vec![vec![0.0; r]; r]; r]; r];
        for (a, (u, _)) in self.facets.iter().enumerate() {
            let ly = self.l(a, y);
            let c = 1.0 / (ly * ly * ly);
            for i in 0..r {
                for j in 0..r {
                    for k in 0..r {
                        for l in 0..r {
                            t[i][j][k][l] += c * u[i] * u[j] * u[k] * u[l];
                        }
                    }
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qi, qvec};
    use crate::polytope::{Facet, Polytope};

    fn square() -> GuilleminFunction {
        let facets = vec![
            Facet { u: qvec(&[1, 0]), lambda: qi(1) },
            Facet { u: qvec(&[-1, 0]), lambda: qi(1) },
            Facet { u: qvec(&[0, 1]), lambda: qi(1) },
            Facet { u: qvec(&[0, -1]), lambda: qi(1) },
        ];
        GuilleminFunction::new(&Polytope::new(2, facets).unwrap())
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let g = square();
        let y = [0.3, -0.4];
        let h = 1e-5;
        for i in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[i] += h;
            ym[i] -= h;
            let fd = (g.value(&yp) - g.value(&ym)) / (2.0 * h);
            assert!((fd - g.grad(&y)[i]).abs() < 1e-8);
            for j in 0..2 {
                let fd2 = (g.grad(&yp)[j] - g.grad(&ym)[j]) / (2.0 * h);
                assert!((fd2 - g.hess(&y)[i][j]).abs() < 1e-7);
                for k in 0..2 {
                    let fd3 = (g.hess(&yp)[j][k] - g.hess(&ym)[j][k]) / (2.0 * h);
                    assert!((fd3 - g.d3(&y)[j][k][i]).abs() < 1e-6);
                    for l in 0..2 {
                        let fd4 = (g.d3(&yp)[j][k][l] - g.d3(&ym)[j][k][l]) / (2.0 * h);
                        assert!((fd4 - g.d4(&y)[j][k][l][i]).abs() < 1e-5);
                    }
                }
            }
        }
    }

    #[test]
    fn hessian_positive_definite_inside() {
        let g = square();
        for y in [[0.0, 0.0], [0.5, 0.5], [-0.9, 0.2]] {
            let h = g.hess(&y);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            assert!(h[0][0] > 0.0 && det > 0.0);
        }
    }

    #[test]
    fn symmetry_of_square_potential() {
        let g = square();
        let v1 = g.value(&[0.3, 0.7]);
        assert!((v1 - g.value(&[0.7, 0.3])).abs() < 1e-14);
        assert!((v1 - g.value(&[-0.3, 0.7])).abs() < 1e-14);
    }
}
