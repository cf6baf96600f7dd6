//! chi(x) = -2 sum_{alpha in Phi+} log sinh alpha(x) on the positive
//! chamber of a, with the bounded combination chi(x) + 4 rho . x used in
//! the K-energy integrand.

use crate::linalg;
use crate::rootdata::RootSystem;

#[derive(Debug, Clone)]
pub struct ChiFunction {
    /// Positive roots in weight coordinates (alpha(x) = alpha . x).
    pub alphas: Vec<Vec<f64>>,
    pub four_rho: Vec<f64>,
    pub dim: usize,
}

impl ChiFunction {
    pub fn new(rs: &RootSystem) -> Self {
        ChiFunction {
            alphas: rs.positive_roots.iter().map(|a| linalg::vec_to_f64(a)).collect(),
            four_rho: rs
                .rho
                .iter()
                .map(|r| 4.0 * crate::linalg::to_f64(r))
                .collect(),
            dim: rs.rank,
        }
    }

    fn pairings<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (&'a Vec<f64>, f64)> + 'a {
        self.alphas
            .iter()
            .map(move |a| (a, a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>()))
    }

    /// Requires alpha(x) > 0 for all positive roots.
    pub fn value(&self, x: &[f64]) -> f64 {
        // log sinh a = a + log(1 - e^{-2a}) - log 2, stable for large a
        -2.0 * self
            .pairings(x)
            .map(|(_, a)| a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2)
            .sum::<f64>()
    }

    /// chi(x) + 4 rho . x = -2 sum [log(1 - e^{-2 alpha(x)}) - log 2],
    /// bounded as alpha(x) -> infinity.
    pub fn bounded_value(&self, x: &[f64]) -> f64 {
        -2.0 * self
            .pairings(x)
            .map(|(_, a)| (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2)
            .sum::<f64>()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (alpha, a) in self.pairings(x) {
            let c = -2.0 / a.tanh();
            for (gi, ai) in g.iter_mut().zip(alpha) {
                *gi += c * ai;
            }
        }
        g
    }

    pub fn hess(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let r = self.dim;
        let mut h = vec![vec![0.0; r]; r];
        for (alpha, a) in self.pairings(x) {
            let c = 2.0 / a.sinh().powi(2);
            for i in 0..r {
                for j in 0..r {
                    h[i][j] += c * alpha[i] * alpha[j];
                }
            }
        }
        h
    }

    /// All alpha(x) > 0?
    pub fn in_chamber(&self, x: &[f64]) -> bool {
        self.pairings(x).all(|(_, a)| a > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{qr, qvec, QMat};
    use crate::rootdata::{RootSystem, DEFAULT_WEYL_CAP};

    fn a1() -> ChiFunction {
        let gram = QMat::from_rows(&[vec![qr(1, 2)]]);
        let rs = RootSystem::build(1, gram, vec![qvec(&[2])], DEFAULT_WEYL_CAP).unwrap();
        ChiFunction::new(&rs)
    }

    #[test]
    fn gradient_limit_is_minus_four_rho() {
        // d chi / dx -> -4 rho componentwise along interior rays
        let chi = a1();
        let g = chi.grad(&[20.0]);
        assert!((g[0] + chi.four_rho[0]).abs() < 1e-12, "{g:?}");
        let a2 = ChiFunction::new(&RootSystem::from_cartan_type("A2").unwrap());
        let g = a2.grad(&[15.0, 14.0]);
        for (gi, ri) in g.iter().zip(&a2.four_rho) {
            assert!((gi + ri).abs() < 1e-9);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let chi = ChiFunction::new(&RootSystem::from_cartan_type("A2").unwrap());
        let x = [0.7, 0.4];
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (chi.value(&xp) - chi.value(&xm)) / (2.0 * h);
            assert!((fd - chi.grad(&x)[i]).abs() < 1e-6);
            for j in 0..2 {
                let fd2 = (chi.grad(&xp)[j] - chi.grad(&xm)[j]) / (2.0 * h);
                assert!((fd2 - chi.hess(&x)[i][j]).abs() < 1e-4);
            }
        }
        // strict convexity: Hessian PD at a sample
        let hm = chi.hess(&x);
        assert!(hm[0][0] > 0.0 && hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0] > 0.0);
    }

    #[test]
    fn bounded_combination_consistent() {
        let chi = a1();
        for x in [[0.5], [3.0], [10.0]] {
            let direct = chi.value(&x) + chi.four_rho[0] * x[0];
            assert!((direct - chi.bounded_value(&x)).abs() < 1e-10);
        }
        // bounded at large argument
        assert!(chi.bounded_value(&[500.0]).abs() < 2.0);
    }
}
