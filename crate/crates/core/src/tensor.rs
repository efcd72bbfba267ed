//! Dense rank-3 and rank-4 arrays over a chart of dimension `n`.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    t[[a, b, c]] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

impl Index<[usize; 3]> for Tensor3 {
    type Output = f64;
    #[inline]
    fn index(&self, [a, b, c]: [usize; 3]) -> &f64 {
        &self.data[(a * self.n + b) * self.n + c]
    }
}

impl IndexMut<[usize; 3]> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, [a, b, c]: [usize; 3]) -> &mut f64 {
        &mut self.data[(a * self.n + b) * self.n + c]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        t[[a, b, c, d]] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Evaluates the tensor on four vectors.
    pub fn contract(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    let base = ((i * n + j) * n + k) * n;
                    let mut t = 0.0;
                    for l in 0..n {
                        t += self.data[base + l] * d[l];
                    }
                    s += a[i] * b[j] * c[k] * t;
                }
            }
        }
        s
    }
}

impl Index<[usize; 4]> for Tensor4 {
    type Output = f64;
    #[inline]
    fn index(&self, [a, b, c, d]: [usize; 4]) -> &f64 {
        &self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

impl IndexMut<[usize; 4]> for Tensor4 {
    #[inline]
    fn index_mut(&mut self, [a, b, c, d]: [usize; 4]) -> &mut f64 {
        &mut self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `max(1, largest |component|)` over all supplied slices.
pub fn scale_of(parts: &[&[f64]]) -> f64 {
    parts.iter().fold(1.0f64, |m, p| m.max(max_abs(p)))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `g(u, v)` for a bilinear form stored as a matrix.
pub fn bilinear(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for a in 0..n {
        if u[a] == 0.0 {
            continue;
        }
        for b in 0..n {
            s += u[a] * g[(a, b)] * v[b];
        }
    }
    s
}

/// Lowers a vector: `(g v)_a = g_ab v^b`.
pub fn lower(g: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|a| (0..n).map(|b| g[(a, b)] * v[b]).sum())
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn matrix_max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Determinant of the matrix whose columns are the given vectors.
pub fn det_columns(cols: &[&[f64]]) -> f64 {
    let n = cols.len();
    DMatrix::from_fn(n, n, |i, j| cols[j][i]).determinant()
}

/// Serialises a matrix as a list of rows.
pub fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor3_layout() {
        let t = Tensor3::from_fn(3, |a, b, c| (100 * a + 10 * b + c) as f64);
        assert_eq!(t[[2, 1, 0]], 210.0);
        assert_eq!(t.max_abs(), 222.0);
    }

    #[test]
    fn tensor4_contract_matches_loop() {
        let t = Tensor4::from_fn(2, |a, b, c, d| (a + 2 * b + 3 * c + 5 * d) as f64);
        let u = [1.0, 2.0];
        let v = [0.5, -1.0];
        let mut expect = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        expect += t[[a, b, c, d]] * u[a] * v[b] * u[c] * v[d];
                    }
                }
            }
        }
        assert_eq!(t.contract(&u, &v, &u, &v), expect);
    }

    #[test]
    fn scale_is_at_least_one() {
        assert_eq!(scale_of(&[&[0.1, -0.2]]), 1.0);
        assert_eq!(scale_of(&[&[0.1], &[-3.0]]), 3.0);
    }

    #[test]
    fn determinant_of_columns() {
        let a = [1.0, 0.0];
        let b = [0.0, 2.0];
        assert_eq!(det_columns(&[&a, &b]), 2.0);
        assert_eq!(det_columns(&[&b, &a]), -2.0);
    }
}
