//! Grassmann algebra over at most 63 generators.
//!
//! An element is a sparse list of monomials. Each monomial is a bitmask of
//! generator indices, read in ascending order, paired with a coefficient.

use crate::error::{CfError, Result};
use crate::scalar::{Analytic, Coeff};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub const MAX_GENERATORS: usize = 63;

#[derive(Clone, Debug, PartialEq)]
pub struct Grassmann<T: Coeff> {
    n_gen: usize,
    terms: Vec<(u64, T)>,
}

/// Sign of reordering `ξ_A ξ_B` into ascending order: true when odd.
#[inline]
pub fn reorder_odd(a: u64, b: u64) -> bool {
    let mut count = 0u32;
    let mut bb = b;
    while bb != 0 {
        let y = bb.trailing_zeros();
        count += ((a >> y) >> 1).count_ones();
        bb &= bb - 1;
    }
    count & 1 == 1
}

fn merge_sorted<T: Coeff>(mut pairs: Vec<(u64, T)>) -> Vec<(u64, T)> {
    pairs.sort_unstable_by_key(|p| p.0);
    let mut out: Vec<(u64, T)> = Vec::with_capacity(pairs.len());
    for (m, c) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == m => {
                let acc = last.1.clone() + c;
                last.1 = acc;
            }
            _ => out.push((m, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

impl<T: Coeff> Grassmann<T> {
    pub fn zero(n_gen: usize) -> Result<Self> {
        if n_gen > MAX_GENERATORS {
            return Err(CfError::TooManyGenerators(n_gen));
        }
        Ok(Grassmann {
            n_gen,
            terms: Vec::new(),
        })
    }

    pub fn scalar(n_gen: usize, c: T) -> Result<Self> {
        let mut g = Self::zero(n_gen)?;
        if !c.is_zero() {
            g.terms.push((0, c));
        }
        Ok(g)
    }

    pub fn one(n_gen: usize) -> Result<Self> {
        Self::scalar(n_gen, T::one())
    }

    pub fn generator(n_gen: usize, index: usize) -> Result<Self> {
        let mut g = Self::zero(n_gen)?;
        if index >= n_gen {
            return Err(CfError::GeneratorOutOfRange { index, n_gen });
        }
        g.terms.push((1u64 << index, T::one()));
        Ok(g)
    }

    /// Builds an element from `(mask, coefficient)` pairs, merging duplicates.
    pub fn from_terms(n_gen: usize, terms: Vec<(u64, T)>) -> Result<Self> {
        if n_gen > MAX_GENERATORS {
            return Err(CfError::TooManyGenerators(n_gen));
        }
        let limit = if n_gen == 64 {
            u64::MAX
        } else {
            (1u64 << n_gen) - 1
        };
        for (m, _) in &terms {
            if m & !limit != 0 {
                let index = 63 - (m & !limit).leading_zeros() as usize;
                return Err(CfError::GeneratorOutOfRange { index, n_gen });
            }
        }
        Ok(Grassmann {
            n_gen,
            terms: merge_sorted(terms),
        })
    }

    pub fn n_gen(&self) -> usize {
        self.n_gen
    }

    pub fn terms(&self) -> &[(u64, T)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mask: u64) -> T {
        match self.terms.binary_search_by_key(&mask, |p| p.0) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    /// Coefficient of the empty monomial.
    pub fn numeric(&self) -> T {
        match self.terms.first() {
            Some((0, c)) => c.clone(),
            _ => T::zero(),
        }
    }

    pub fn nilpotent(&self) -> Self {
        Grassmann {
            n_gen: self.n_gen,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| *m != 0)
                .cloned()
                .collect(),
        }
    }

    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.count_ones() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.count_ones() % 2 == 1)
    }

    /// Highest monomial degree, or `None` for zero.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.count_ones()).max()
    }

    pub fn scale(&self, c: &T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(m, x)| (*m, x.clone() * c.clone()))
            .filter(|(_, x)| !x.is_zero())
            .collect();
        Grassmann {
            n_gen: self.n_gen,
            terms,
        }
    }

    pub fn add_scalar(&self, c: T) -> Self {
        let mut terms = self.terms.clone();
        terms.push((0, c));
        Grassmann {
            n_gen: self.n_gen,
            terms: merge_sorted(terms),
        }
    }

    /// Re-embeds into an algebra with `n_gen` generators; fails if a used
    /// generator would be dropped.
    pub fn with_n_gen(&self, n_gen: usize) -> Result<Self> {
        Self::from_terms(n_gen, self.terms.clone())
    }

    pub fn map_coeffs<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Grassmann<U> {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (*m, f(c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Grassmann {
            n_gen: self.n_gen,
            terms,
        }
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Grassmann {
            n_gen: self.n_gen,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.magnitude() > tol)
                .cloned()
                .collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, c)| c.magnitude())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            terms.push((*m, if negate { -c.clone() } else { c.clone() }));
        }
        Grassmann {
            n_gen: self.n_gen.max(other.n_gen),
            terms: merge_sorted(terms),
        }
    }

    /// Left derivative with respect to generator `g`.
    pub fn derivative(&self, g: usize) -> Result<Self> {
        if g >= self.n_gen {
            return Err(CfError::GeneratorOutOfRange {
                index: g,
                n_gen: self.n_gen,
            });
        }
        let bit = 1u64 << g;
        let below = bit - 1;
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m & bit != 0)
            .map(|(m, c)| {
                let c = if (m & below).count_ones() % 2 == 1 {
                    -c.clone()
                } else {
                    c.clone()
                };
                (m & !bit, c)
            })
            .collect();
        Ok(Grassmann {
            n_gen: self.n_gen,
            terms: merge_sorted(terms),
        })
    }
}

/// Grassmann product. Signs follow from reordering generator lists.
pub fn gp_mul<T: Coeff>(a: &Grassmann<T>, b: &Grassmann<T>) -> Result<Grassmann<T>> {
    if a.n_gen != b.n_gen {
        return Err(CfError::SizeMismatch(a.n_gen, b.n_gen));
    }
    Ok(mul_unchecked(a, b))
}

fn mul_unchecked<T: Coeff>(a: &Grassmann<T>, b: &Grassmann<T>) -> Grassmann<T> {
    let mut pairs = Vec::with_capacity(a.terms.len() * b.terms.len());
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            if ma & mb != 0 {
                continue;
            }
            let c = ca.clone() * cb.clone();
            pairs.push((ma | mb, if reorder_odd(*ma, *mb) { -c } else { c }));
        }
    }
    Grassmann {
        n_gen: a.n_gen.max(b.n_gen),
        terms: merge_sorted(pairs),
    }
}

fn require_even<T: Coeff>(x: &Grassmann<T>) -> Result<()> {
    if x.is_even() {
        Ok(())
    } else {
        Err(CfError::NotEven)
    }
}

/// Sums `Σ_k coeffs[k] n^k` for a nilpotent `n`, stopping once `n^k` vanishes.
fn nilpotent_series<T: Coeff>(n: &Grassmann<T>, coeff: impl Fn(usize) -> T) -> Grassmann<T> {
    let mut acc = Grassmann {
        n_gen: n.n_gen,
        terms: vec![(0, coeff(0))],
    };
    acc.terms.retain(|(_, c)| !c.is_zero());
    let mut power = Grassmann {
        n_gen: n.n_gen,
        terms: vec![(0, T::one())],
    };
    let mut k = 0;
    loop {
        k += 1;
        power = mul_unchecked(&power, n);
        if power.is_zero() {
            break;
        }
        acc = acc + power.scale(&coeff(k));
    }
    acc
}

/// Inverse of an element with invertible numeric part: `c⁻¹ Σ (-n/c)^k`.
pub fn gp_inv<T: Coeff>(x: &Grassmann<T>) -> Result<Grassmann<T>> {
    let c = x.numeric();
    if c.magnitude() == 0.0 || c.is_zero() {
        return Err(CfError::NotInvertible(c.magnitude()));
    }
    let inv_c = T::one() / c;
    let n = x.nilpotent().scale(&(-inv_c.clone()));
    Ok(nilpotent_series(&n, |_| T::one()).scale(&inv_c))
}

/// `exp(c + n) = exp(c) Σ n^k / k!` for even `x`.
pub fn gp_exp<T: Analytic>(x: &Grassmann<T>) -> Result<Grassmann<T>> {
    require_even(x)?;
    let c = x.numeric();
    let n = x.nilpotent();
    let mut fact = T::one();
    let mut facts = vec![T::one()];
    for k in 1..=x.n_gen + 1 {
        fact = fact * T::from_i64(k as i64);
        facts.push(T::one() / fact.clone());
    }
    Ok(nilpotent_series(&n, |k| facts[k].clone()).scale(&c.exp()))
}

/// Principal power `(c + n)^p = c^p Σ binom(p, k) (n/c)^k` for even `x`.
pub fn gp_pow<T: Analytic>(x: &Grassmann<T>, p: f64) -> Result<Grassmann<T>> {
    require_even(x)?;
    let c = x.numeric();
    if c.magnitude() == 0.0 {
        return Err(CfError::NotInvertible(0.0));
    }
    let n = x.nilpotent().scale(&(T::one() / c.clone()));
    let mut binoms = vec![1.0f64];
    for k in 1..=x.n_gen + 1 {
        let prev = binoms[k - 1];
        binoms.push(prev * (p - (k as f64 - 1.0)) / k as f64);
    }
    let series = nilpotent_series(&n, |k| T::from_c64(binoms[k].into()));
    Ok(series.scale(&c.powf(p)))
}

/// Principal logarithm of an even element with nonzero numeric part.
pub fn gp_ln<T: Analytic>(x: &Grassmann<T>) -> Result<Grassmann<T>> {
    require_even(x)?;
    let c = x.numeric();
    if c.magnitude() == 0.0 {
        return Err(CfError::NotInvertible(0.0));
    }
    let n = x.nilpotent().scale(&(T::one() / c.clone()));
    let series = nilpotent_series(&n, |k| {
        if k == 0 {
            T::zero()
        } else {
            let s = if k % 2 == 1 { 1 } else { -1 };
            T::from_i64(s) / T::from_i64(k as i64)
        }
    });
    Ok(series.add_scalar(c.ln()))
}

/// Berezin integral: iterated left derivatives applied in the listed order.
pub fn berezin<T: Coeff>(x: &Grassmann<T>, order: &[usize]) -> Result<Grassmann<T>> {
    let mut out = x.clone();
    for &g in order {
        out = out.derivative(g)?;
    }
    Ok(out)
}

impl<T: Coeff> Add for Grassmann<T> {
    type Output = Grassmann<T>;
    fn add(self, o: Self) -> Self {
        self.combine(&o, false)
    }
}

impl<T: Coeff> Add for &Grassmann<T> {
    type Output = Grassmann<T>;
    fn add(self, o: Self) -> Grassmann<T> {
        self.combine(o, false)
    }
}

impl<T: Coeff> Sub for Grassmann<T> {
    type Output = Grassmann<T>;
    fn sub(self, o: Self) -> Self {
        self.combine(&o, true)
    }
}

impl<T: Coeff> Sub for &Grassmann<T> {
    type Output = Grassmann<T>;
    fn sub(self, o: Self) -> Grassmann<T> {
        self.combine(o, true)
    }
}

impl<T: Coeff> Neg for Grassmann<T> {
    type Output = Grassmann<T>;
    fn neg(self) -> Self {
        self.scale(&(-T::one()))
    }
}

impl<T: Coeff> Neg for &Grassmann<T> {
    type Output = Grassmann<T>;
    fn neg(self) -> Grassmann<T> {
        self.scale(&(-T::one()))
    }
}

/// Operator form of [`gp_mul`]. Operands living in algebras of different
/// sizes are embedded into the larger one.
impl<T: Coeff> Mul for &Grassmann<T> {
    type Output = Grassmann<T>;
    fn mul(self, o: Self) -> Grassmann<T> {
        mul_unchecked(self, o)
    }
}

impl<T: Coeff> Mul for Grassmann<T> {
    type Output = Grassmann<T>;
    fn mul(self, o: Self) -> Self {
        mul_unchecked(&self, &o)
    }
}

impl<T: Coeff + fmt::Display> fmt::Display for Grassmann<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for g in 0..self.n_gen {
                if m & (1u64 << g) != 0 {
                    write!(f, "·ξ{g}")?;
                }
            }
        }
        Ok(())
    }
}
