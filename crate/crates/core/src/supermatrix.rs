//! Square supermatrices with Grassmann-valued entries.
//!
//! Rows and columns are ordered with the `p` even indices first and the `q`
//! odd indices after. Diagonal blocks hold even elements, off-diagonal blocks
//! hold odd elements.

use crate::error::{CfError, Result};
use crate::grassmann::{gp_inv, Grassmann};
use crate::scalar::Coeff;

#[derive(Clone, Debug, PartialEq)]
pub struct SuperMatrix<T: Coeff> {
    p: usize,
    q: usize,
    n_gen: usize,
    entries: Vec<Grassmann<T>>,
}

fn block_is_even(p: usize, i: usize, j: usize) -> bool {
    (i < p) == (j < p)
}

impl<T: Coeff> SuperMatrix<T> {
    /// Row-major entries; fails on a parity violation.
    pub fn new(p: usize, q: usize, entries: Vec<Grassmann<T>>) -> Result<Self> {
        let n = p + q;
        if entries.len() != n * n {
            return Err(CfError::Invalid(format!(
                "expected {} entries for a {p}|{q} supermatrix, got {}",
                n * n,
                entries.len()
            )));
        }
        let n_gen = entries.first().map(|e| e.n_gen()).unwrap_or(0);
        for (k, e) in entries.iter().enumerate() {
            if e.n_gen() != n_gen {
                return Err(CfError::SizeMismatch(n_gen, e.n_gen()));
            }
            let (i, j) = (k / n, k % n);
            let ok = if block_is_even(p, i, j) {
                e.is_even()
            } else {
                e.is_odd()
            };
            if !ok {
                return Err(CfError::ParityViolation { row: i, col: j });
            }
        }
        Ok(SuperMatrix {
            p,
            q,
            n_gen,
            entries,
        })
    }

    pub fn zeros(p: usize, q: usize, n_gen: usize) -> Result<Self> {
        let z = Grassmann::zero(n_gen)?;
        Ok(SuperMatrix {
            p,
            q,
            n_gen,
            entries: vec![z; (p + q) * (p + q)],
        })
    }

    pub fn identity(p: usize, q: usize, n_gen: usize) -> Result<Self> {
        let mut m = Self::zeros(p, q, n_gen)?;
        for i in 0..p + q {
            m.entries[i * (p + q) + i] = Grassmann::one(n_gen)?;
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn dim(&self) -> usize {
        self.p + self.q
    }
    pub fn n_gen(&self) -> usize {
        self.n_gen
    }

    pub fn get(&self, i: usize, j: usize) -> &Grassmann<T> {
        &self.entries[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Grassmann<T>) -> Result<()> {
        let ok = if block_is_even(self.p, i, j) {
            v.is_even()
        } else {
            v.is_odd()
        };
        if !ok {
            return Err(CfError::ParityViolation { row: i, col: j });
        }
        if v.n_gen() != self.n_gen {
            return Err(CfError::SizeMismatch(self.n_gen, v.n_gen()));
        }
        let n = self.dim();
        self.entries[i * n + j] = v;
        Ok(())
    }

    fn check_shape(&self, o: &Self) -> Result<()> {
        if self.p != o.p || self.q != o.q {
            return Err(CfError::Invalid(format!(
                "shape mismatch {}|{} vs {}|{}",
                self.p, self.q, o.p, o.q
            )));
        }
        if self.n_gen != o.n_gen {
            return Err(CfError::SizeMismatch(self.n_gen, o.n_gen));
        }
        Ok(())
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                let mut acc = Grassmann::zero(self.n_gen)?;
                for j in 0..n {
                    acc = acc + self.get(i, j) * o.get(j, k);
                }
                entries.push(acc);
            }
        }
        Ok(SuperMatrix {
            p: self.p,
            q: self.q,
            n_gen: self.n_gen,
            entries,
        })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(SuperMatrix {
            p: self.p,
            q: self.q,
            n_gen: self.n_gen,
            entries,
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(SuperMatrix {
            p: self.p,
            q: self.q,
            n_gen: self.n_gen,
            entries,
        })
    }

    pub fn scale(&self, c: &T) -> Self {
        SuperMatrix {
            p: self.p,
            q: self.q,
            n_gen: self.n_gen,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    /// Largest coefficient magnitude over all entries.
    pub fn max_abs_coeff(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_abs_coeff())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    fn block(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> Vec<Grassmann<T>> {
        let mut out = Vec::new();
        for i in rows {
            for j in cols.clone() {
                out.push(self.get(i, j).clone());
            }
        }
        out
    }
}

/// Supertrace: even diagonal minus odd diagonal.
pub fn smat_str<T: Coeff>(m: &SuperMatrix<T>) -> Grassmann<T> {
    let mut acc = Grassmann::zero(m.n_gen).expect("valid size");
    for i in 0..m.dim() {
        if i < m.p {
            acc = acc + m.get(i, i).clone();
        } else {
            acc = acc - m.get(i, i).clone();
        }
    }
    acc
}

/// Inverse of a square coefficient matrix by Gauss-Jordan with partial pivoting.
pub fn numeric_inverse<T: Coeff>(a: &[T], n: usize) -> Result<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .magnitude()
                    .partial_cmp(&m[s * n + col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[piv * n + col].is_zero() || m[piv * n + col].magnitude() == 0.0 {
            return Err(CfError::SingularBlock);
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
                inv.swap(piv * n + j, col * n + j);
            }
        }
        let d = T::one() / m[col * n + col].clone();
        for j in 0..n {
            m[col * n + j] = m[col * n + j].clone() * d.clone();
            inv[col * n + j] = inv[col * n + j].clone() * d.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                m[r * n + j] = m[r * n + j].clone() - f.clone() * m[col * n + j].clone();
                inv[r * n + j] = inv[r * n + j].clone() - f.clone() * inv[col * n + j].clone();
            }
        }
    }
    Ok(inv)
}

fn mat_mul<T: Coeff>(
    a: &[Grassmann<T>],
    b: &[Grassmann<T>],
    n: usize,
    n_gen: usize,
) -> Vec<Grassmann<T>> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let mut acc = Grassmann::zero(n_gen).expect("valid size");
            for j in 0..n {
                if a[i * n + j].is_zero() || b[j * n + k].is_zero() {
                    continue;
                }
                acc = acc + &a[i * n + j] * &b[j * n + k];
            }
            out.push(acc);
        }
    }
    out
}

fn lift<T: Coeff>(a: &[T], n_gen: usize) -> Vec<Grassmann<T>> {
    a.iter()
        .map(|c| Grassmann::scalar(n_gen, c.clone()).expect("valid size"))
        .collect()
}

/// Neumann-series inverse `Σ_k (-M0⁻¹ N)^k M0⁻¹` of a square Grassmann matrix
/// whose numeric part `M0` is invertible.
pub fn grassmann_matrix_inverse<T: Coeff>(
    a: &[Grassmann<T>],
    n: usize,
    n_gen: usize,
) -> Result<Vec<Grassmann<T>>> {
    let numeric: Vec<T> = a.iter().map(|e| e.numeric()).collect();
    let m0_inv = numeric_inverse(&numeric, n)?;
    let m0_inv_g = lift(&m0_inv, n_gen);
    let nil: Vec<Grassmann<T>> = a.iter().map(|e| e.nilpotent()).collect();
    let x: Vec<Grassmann<T>> = mat_mul(&m0_inv_g, &nil, n, n_gen)
        .into_iter()
        .map(|e| -e)
        .collect();
    let mut term = m0_inv_g.clone();
    let mut acc = m0_inv_g;
    for _ in 0..=n_gen {
        term = mat_mul(&x, &term, n, n_gen);
        if term.iter().all(|e| e.is_zero()) {
            break;
        }
        acc = acc.iter().zip(&term).map(|(p, t)| p + t).collect();
    }
    Ok(acc)
}

/// Determinant of a square matrix of even elements by elimination, pivoting on
/// the numeric part and dividing through the nilpotent series.
pub fn even_det<T: Coeff>(a: &[Grassmann<T>], n: usize, n_gen: usize) -> Result<Grassmann<T>> {
    let mut m = a.to_vec();
    let mut det = Grassmann::one(n_gen)?;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .numeric()
                    .magnitude()
                    .partial_cmp(&m[s * n + col].numeric().magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[piv * n + col].numeric().magnitude() == 0.0 {
            return Err(CfError::SingularBlock);
        }
        if piv != col {
            for j in 0..n {
                m.swap(piv * n + j, col * n + j);
            }
            det = -det;
        }
        let pivot = m[col * n + col].clone();
        let pinv = gp_inv(&pivot)?;
        for r in col + 1..n {
            if m[r * n + col].is_zero() {
                continue;
            }
            let f = &m[r * n + col] * &pinv;
            for j in col..n {
                let upd = &f * &m[col * n + j];
                m[r * n + j] = &m[r * n + j] - &upd;
            }
        }
        det = &det * &pivot;
    }
    Ok(det)
}

/// Cofactor expansion along the first row; entries are even and commute.
/// Exponential in `n`, but valid when the numeric part is singular.
pub fn det_by_minors<T: Coeff>(a: &[Grassmann<T>], n: usize, n_gen: usize) -> Grassmann<T> {
    if n == 1 {
        return a[0].clone();
    }
    let mut acc = Grassmann::zero(n_gen).expect("size checked by caller");
    for j in 0..n {
        if a[j].is_zero() {
            continue;
        }
        let minor: Vec<Grassmann<T>> = (1..n)
            .flat_map(|r| (0..n).filter(move |&c| c != j).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c].clone())
            .collect();
        let term = &a[j] * &det_by_minors(&minor, n - 1, n_gen);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// Supermatrix inverse by a Neumann series about the numeric part.
pub fn smat_inv<T: Coeff>(m: &SuperMatrix<T>) -> Result<SuperMatrix<T>> {
    let n = m.dim();
    let entries = grassmann_matrix_inverse(&m.entries, n, m.n_gen)?;
    Ok(SuperMatrix {
        p: m.p,
        q: m.q,
        n_gen: m.n_gen,
        entries,
    })
}

/// Berezinian `Det(A - B D⁻¹ C) / Det(D)`. Both diagonal blocks must have
/// invertible numeric parts.
pub fn smat_sdet<T: Coeff>(m: &SuperMatrix<T>) -> Result<Grassmann<T>> {
    sdet_impl(m, true)
}

/// Berezinian for a supermatrix whose even-even block may be singular, as on
/// the boundary of a bounded domain. Only `D` must be invertible; the
/// even-even determinant is then expanded by minors (`p ≤ 6`).
pub fn smat_sdet_schur<T: Coeff>(m: &SuperMatrix<T>) -> Result<Grassmann<T>> {
    if m.p > 6 {
        return Err(CfError::Unsupported(format!(
            "even block of size {} for expansion by minors",
            m.p
        )));
    }
    sdet_impl(m, false)
}

fn sdet_impl<T: Coeff>(m: &SuperMatrix<T>, strict: bool) -> Result<Grassmann<T>> {
    let (p, q, g) = (m.p, m.q, m.n_gen);
    let n = p + q;
    let det_even = |a: &[Grassmann<T>], k: usize| -> Result<Grassmann<T>> {
        if strict {
            even_det(a, k, g)
        } else {
            Ok(det_by_minors(a, k, g))
        }
    };
    if q == 0 {
        return det_even(&m.entries, p);
    }
    let a = m.block(0..p, 0..p);
    let b = m.block(0..p, p..n);
    let c = m.block(p..n, 0..p);
    let d = m.block(p..n, p..n);
    let d_numeric: Vec<T> = d.iter().map(|e| e.numeric()).collect();
    if numeric_inverse(&d_numeric, q).is_err() {
        return Err(CfError::SingularBlock);
    }
    let d_inv = grassmann_matrix_inverse(&d, q, g)?;
    let det_d = even_det(&d, q, g)?;
    if p == 0 {
        return gp_inv(&det_d);
    }
    // B D⁻¹ C with rectangular shapes p×q, q×q, q×p.
    let mut bd = vec![Grassmann::zero(g)?; p * q];
    for i in 0..p {
        for k in 0..q {
            let mut acc = Grassmann::zero(g)?;
            for j in 0..q {
                acc = acc + &b[i * q + j] * &d_inv[j * q + k];
            }
            bd[i * q + k] = acc;
        }
    }
    let mut schur = a.clone();
    for i in 0..p {
        for k in 0..p {
            let mut acc = Grassmann::zero(g)?;
            for j in 0..q {
                acc = acc + &bd[i * q + j] * &c[j * p + k];
            }
            schur[i * p + k] = &schur[i * p + k] - &acc;
        }
    }
    let det_schur = det_even(&schur, p)?;
    Ok(&det_schur * &gp_inv(&det_d)?)
}
