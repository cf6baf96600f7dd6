//! Exact rational vectors and small dense matrices.
//!
//! Everything here is desk-scale (r <= 4 or so); correctness over speed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;
pub type QVec = Vec<Q>;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

pub fn qvec(xs: &[i64]) -> QVec {
    xs.iter().map(|&x| qi(x)).collect()
}

pub fn zeros(n: usize) -> QVec {
    vec![Q::zero(); n]
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Q], b: &[Q]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Q], c: &Q) -> QVec {
    a.iter().map(|x| x * c).collect()
}

pub fn is_zero_vec(a: &[Q]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Dense rational matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Q>,
}

impl QMat {
    pub fn new(rows: usize, cols: usize, data: Vec<Q>) -> Self {
        assert_eq!(data.len(), rows * cols);
        QMat { rows, cols, data }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[QVec]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend(row.iter().cloned());
        }
        QMat { rows: r, cols: c, data }
    }

    pub fn at(&self, i: usize, j: usize) -> &Q {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> QVec {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> QMat {
        let mut t = QMat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *t.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        t
    }

    pub fn matvec(&self, v: &[Q]) -> QVec {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn matmul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = QMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = Q::zero();
                for k in 0..self.cols {
                    s += self.at(i, k) * other.at(k, j);
                }
                *out.at_mut(i, j) = s;
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self.at(i, j) != self.at(j, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Determinant by fraction-preserving Gaussian elimination.
    pub fn det(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Q::one();
        for k in 0..n {
            // pivot
            let mut piv = None;
            for i in k..n {
                if !m.at(i, k).is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let piv = match piv {
                Some(p) => p,
                None => return Q::zero(),
            };
            if piv != k {
                for j in 0..n {
                    let a = m.at(piv, j).clone();
                    let b = m.at(k, j).clone();
                    *m.at_mut(piv, j) = b;
                    *m.at_mut(k, j) = a;
                }
                det = -det;
            }
            let p = m.at(k, k).clone();
            det *= &p;
            for i in (k + 1)..n {
                let f = m.at(i, k).clone() / &p;
                for j in k..n {
                    let v = m.at(i, j).clone() - &f * m.at(k, j);
                    *m.at_mut(i, j) = v;
                }
            }
        }
        det
    }

    /// Solve A x = b. Returns None if A is singular.
    pub fn solve(&self, b: &[Q]) -> Option<QVec> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut m = self.clone();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let mut piv = None;
            for i in k..n {
                if !m.at(i, k).is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let piv = piv?;
            if piv != k {
                for j in 0..n {
                    let a = m.at(piv, j).clone();
                    let b2 = m.at(k, j).clone();
                    *m.at_mut(piv, j) = b2;
                    *m.at_mut(k, j) = a;
                }
                rhs.swap(piv, k);
            }
            let p = m.at(k, k).clone();
            for i in (k + 1)..n {
                let f = m.at(i, k).clone() / &p;
                for j in k..n {
                    let v = m.at(i, j).clone() - &f * m.at(k, j);
                    *m.at_mut(i, j) = v;
                }
                let v = rhs[i].clone() - &f * &rhs[k];
                rhs[i] = v;
            }
        }
        // back substitution
        let mut x = zeros(n);
        for k in (0..n).rev() {
            let mut s = rhs[k].clone();
            for j in (k + 1)..n {
                s -= m.at(k, j) * &x[j];
            }
            x[k] = s / m.at(k, k);
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = zeros(n);
            e[j] = Q::one();
            cols.push(self.solve(&e)?);
        }
        let mut inv = QMat::zero(n, n);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                *inv.at_mut(i, j) = c[i].clone();
            }
        }
        Some(inv)
    }

    /// Row-reduce in place; returns rank.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            if rank >= m.rows {
                break;
            }
            let mut piv = None;
            for i in rank..m.rows {
                if !m.at(i, col).is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let piv = match piv {
                Some(p) => p,
                None => continue,
            };
            if piv != rank {
                for j in 0..m.cols {
                    let a = m.at(piv, j).clone();
                    let b = m.at(rank, j).clone();
                    *m.at_mut(piv, j) = b;
                    *m.at_mut(rank, j) = a;
                }
            }
            let p = m.at(rank, col).clone();
            for i in (rank + 1)..m.rows {
                let f = m.at(i, col).clone() / &p;
                for j in col..m.cols {
                    let v = m.at(i, j).clone() - &f * m.at(rank, j);
                    *m.at_mut(i, j) = v;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Basis of the kernel {x : A x = 0}.
    pub fn kernel(&self) -> Vec<QVec> {
        let mut m = self.clone();
        let n = m.cols;
        let mut pivots: Vec<usize> = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row >= m.rows {
                break;
            }
            let mut piv = None;
            for i in row..m.rows {
                if !m.at(i, col).is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let piv = match piv {
                Some(p) => p,
                None => continue,
            };
            if piv != row {
                for j in 0..n {
                    let a = m.at(piv, j).clone();
                    let b = m.at(row, j).clone();
                    *m.at_mut(piv, j) = b;
                    *m.at_mut(row, j) = a;
                }
            }
            let p = m.at(row, col).clone();
            for j in 0..n {
                let v = m.at(row, j).clone() / &p;
                *m.at_mut(row, j) = v;
            }
            for i in 0..m.rows {
                if i != row && !m.at(i, col).is_zero() {
                    let f = m.at(i, col).clone();
                    for j in 0..n {
                        let v = m.at(i, j).clone() - &f * m.at(row, j);
                        *m.at_mut(i, j) = v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Vec::new();
        for &fc in &free {
            let mut v = zeros(n);
            v[fc] = Q::one();
            for (ri, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.at(ri, fc).clone();
            }
            basis.push(v);
        }
        basis
    }

    /// Positive definiteness via leading principal minors (symmetric input assumed).
    pub fn is_positive_definite(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for k in 1..=self.rows {
            let mut sub = QMat::zero(k, k);
            for i in 0..k {
                for j in 0..k {
                    *sub.at_mut(i, j) = self.at(i, j).clone();
                }
            }
            if !sub.det().is_positive() {
                return false;
            }
        }
        true
    }
}

/// Affine rank of a point set (dimension of its affine hull).
pub fn affine_dim(points: &[QVec]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0];
    let diffs: Vec<QVec> = points[1..].iter().map(|p| sub(p, base)).collect();
    QMat::from_rows(&diffs).rank()
}

pub fn to_f64(q: &Q) -> f64 {
    // Reduce through f64-sized mantissas; good enough for reporting.
    let n = q.numer();
    let d = q.denom();
    let nf = bigint_to_f64(n);
    let df = bigint_to_f64(d);
    nf / df
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn vec_to_f64(v: &[Q]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_solve() {
        let m = QMat::from_rows(&[qvec(&[2, 1]), qvec(&[1, 3])]);
        assert_eq!(m.det(), qi(5));
        let x = m.solve(&qvec(&[3, 4])).unwrap();
        assert_eq!(x, vec![qi(1), qi(1)]);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = QMat::from_rows(&[qvec(&[2, -1]), qvec(&[-1, 2])]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.matmul(&inv), QMat::identity(2));
    }

    #[test]
    fn kernel_of_rank_one() {
        // x + 2y = 0
        let m = QMat::from_rows(&[qvec(&[1, 2])]);
        let k = m.kernel();
        assert_eq!(k.len(), 1);
        assert!(is_zero_vec(&m.matvec(&k[0])));
    }

    #[test]
    fn pd_check() {
        let g = QMat::from_rows(&[qvec(&[2, -1]), qvec(&[-1, 2])]);
        assert!(g.is_positive_definite());
        let bad = QMat::from_rows(&[qvec(&[1, 2]), qvec(&[2, 1])]);
        assert!(!bad.is_positive_definite());
    }
}
