//! Flavor-space supermatrices `Z`, `Z̃` for the three identity families.
//!
//! Flavor indices `0..n0` are bosonic and `n0..n0+n1` fermionic. `Z` is stored
//! with rows `μ` and columns `ν` (entry `Z^{μν}`), `Z̃` with rows `ν` and
//! columns `μ` (entry `Z̃_{νμ}`), so that `Z̃Z` is an ordinary matrix product.
//! Odd entries are Grassmann generators placed after the outer-field
//! generators; even entries are bosonic coordinates supplied per node.

use crate::error::{CfError, Result};
use crate::grassmann::{berezin, gp_pow, Grassmann};
use crate::quadrature::{disk_map, periodic_nodes, plane_map, GaussLegendre};
use crate::scalar::{Analytic, Coeff, C64};
use crate::supermatrix::{smat_sdet, smat_sdet_schur, SuperMatrix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum CfType {
    A,
    BD,
    C,
}

impl std::fmt::Display for CfType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CfType::A => "A",
            CfType::BD => "BD",
            CfType::C => "C",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domain {
    /// Bounded coordinate, `|z| < 1`.
    Disk,
    /// Noncompact coordinate, `z ∈ ℂ`.
    Plane,
}

/// An independent even coordinate `Z^{μν}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BosonCoord {
    pub mu: usize,
    pub nu: usize,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug)]
struct OddSlot {
    gen: usize,
    sign: f64,
}

#[derive(Clone, Debug)]
pub struct ZLayout {
    pub ty: CfType,
    pub n0: usize,
    pub n1: usize,
    pub offset: usize,
    pub n_gen: usize,
    pub coords: Vec<BosonCoord>,
    z_odd: BTreeMap<(usize, usize), OddSlot>,
    zt_odd: BTreeMap<(usize, usize), OddSlot>,
    berezin_order: Vec<usize>,
}

impl ZLayout {
    /// Layout whose odd generators start at `offset`.
    pub fn new(ty: CfType, n0: usize, n1: usize, offset: usize) -> Result<Self> {
        let n = n0 + n1;
        let par = |m: usize| usize::from(m >= n0);
        let mut coords = Vec::new();
        let mut z_odd = BTreeMap::new();
        let mut zt_odd = BTreeMap::new();
        let mut next = offset;
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        match ty {
            CfType::A => {
                for mu in 0..n {
                    for nu in 0..n {
                        if par(mu) == par(nu) {
                            let domain = if par(mu) == 0 {
                                Domain::Disk
                            } else {
                                Domain::Plane
                            };
                            coords.push(BosonCoord { mu, nu, domain });
                        } else {
                            z_odd.insert(
                                (mu, nu),
                                OddSlot {
                                    gen: next,
                                    sign: 1.0,
                                },
                            );
                            zt_odd.insert(
                                (nu, mu),
                                OddSlot {
                                    gen: next + 1,
                                    sign: 1.0,
                                },
                            );
                            pairs.push((mu, nu));
                            next += 2;
                        }
                    }
                }
            }
            CfType::BD | CfType::C => {
                for mu in 0..n {
                    for nu in mu..n {
                        let sigma = exchange_sign(ty, par(mu), par(nu));
                        if mu == nu && sigma < 0.0 {
                            continue;
                        }
                        if par(mu) == par(nu) {
                            let domain = if par(mu) == 0 {
                                Domain::Disk
                            } else {
                                Domain::Plane
                            };
                            coords.push(BosonCoord { mu, nu, domain });
                        } else {
                            let tau = tilde_exchange_sign(ty, par(mu), par(nu));
                            z_odd.insert(
                                (mu, nu),
                                OddSlot {
                                    gen: next,
                                    sign: 1.0,
                                },
                            );
                            z_odd.insert(
                                (nu, mu),
                                OddSlot {
                                    gen: next,
                                    sign: sigma,
                                },
                            );
                            zt_odd.insert(
                                (nu, mu),
                                OddSlot {
                                    gen: next + 1,
                                    sign: 1.0,
                                },
                            );
                            zt_odd.insert(
                                (mu, nu),
                                OddSlot {
                                    gen: next + 1,
                                    sign: tau,
                                },
                            );
                            pairs.push((mu, nu));
                            next += 2;
                        }
                    }
                }
            }
        }
        if next > crate::grassmann::MAX_GENERATORS {
            return Err(CfError::TooManyGenerators(next));
        }
        // D = Π_pairs ∂²/∂a∂b with a = Z^{μν}, b = Z̃_{νμ} for μ < ν and the
        // tilde entry first otherwise. Operators act right to left.
        let mut order = Vec::new();
        for &(mu, nu) in pairs.iter().rev() {
            let zg = z_odd[&(mu, nu)].gen;
            let ztg = zt_odd[&(nu, mu)].gen;
            if mu < nu {
                order.push(ztg);
                order.push(zg);
            } else {
                order.push(zg);
                order.push(ztg);
            }
        }
        Ok(ZLayout {
            ty,
            n0,
            n1,
            offset,
            n_gen: next,
            coords,
            z_odd,
            zt_odd,
            berezin_order: order,
        })
    }

    pub fn berezin_order(&self) -> &[usize] {
        &self.berezin_order
    }

    pub fn n_odd(&self) -> usize {
        self.n_gen - self.offset
    }

    /// Generator holding the odd entry `Z^{μν}` and its sign, if any.
    pub fn z_generator(&self, mu: usize, nu: usize) -> Option<(usize, f64)> {
        self.z_odd.get(&(mu, nu)).map(|s| (s.gen, s.sign))
    }

    /// Generator holding the odd entry `Z̃_{νμ}` (row ν, column μ).
    pub fn zt_generator(&self, nu: usize, mu: usize) -> Option<(usize, f64)> {
        self.zt_odd.get(&(nu, mu)).map(|s| (s.gen, s.sign))
    }

    /// Re-targets the layout to a larger algebra without moving generators.
    pub fn with_total_gens(mut self, n_gen: usize) -> Result<Self> {
        if n_gen < self.n_gen {
            return Err(CfError::SizeMismatch(n_gen, self.n_gen));
        }
        self.n_gen = n_gen;
        Ok(self)
    }

    /// Builds `Z` and `Z̃` from coordinate values `(z, z_bar)`, one pair per
    /// entry of [`ZLayout::coords`]. On the integration domain `z_bar` is the
    /// complex conjugate; `Z̃_BB = Z_BB†` and `Z̃_FF = -Z_FF†`.
    pub fn build<T: Coeff>(&self, values: &[(T, T)]) -> Result<(SuperMatrix<T>, SuperMatrix<T>)> {
        if values.len() != self.coords.len() {
            return Err(CfError::Invalid(format!(
                "expected {} coordinate values, got {}",
                self.coords.len(),
                values.len()
            )));
        }
        let n = self.n0 + self.n1;
        let g = self.n_gen;
        let par = |m: usize| usize::from(m >= self.n0);
        let mut z = vec![Grassmann::zero(g)?; n * n];
        let mut zt = vec![Grassmann::zero(g)?; n * n];
        for (c, (v, vb)) in self.coords.iter().zip(values) {
            let conj_sign = if par(c.mu) == 0 { T::one() } else { -T::one() };
            z[c.mu * n + c.nu] = Grassmann::scalar(g, v.clone())?;
            zt[c.nu * n + c.mu] = Grassmann::scalar(g, conj_sign.clone() * vb.clone())?;
            if self.ty != CfType::A && c.mu != c.nu {
                let s = T::from_i64(exchange_sign(self.ty, par(c.mu), par(c.nu)) as i64);
                z[c.nu * n + c.mu] = Grassmann::scalar(g, s.clone() * v.clone())?;
                zt[c.mu * n + c.nu] = Grassmann::scalar(g, conj_sign * s * vb.clone())?;
            }
        }
        for (&(mu, nu), slot) in &self.z_odd {
            z[mu * n + nu] =
                Grassmann::generator(g, slot.gen)?.scale(&T::from_i64(slot.sign as i64));
        }
        for (&(nu, mu), slot) in &self.zt_odd {
            zt[nu * n + mu] =
                Grassmann::generator(g, slot.gen)?.scale(&T::from_i64(slot.sign as i64));
        }
        Ok((
            SuperMatrix::new(self.n0, self.n1, z)?,
            SuperMatrix::new(self.n0, self.n1, zt)?,
        ))
    }
}

/// Sign `s` in `Z^{μν} = s Z^{νμ}` given the parities of `μ`, `ν`.
pub fn exchange_sign(ty: CfType, pm: usize, pn: usize) -> f64 {
    let e = (pm * pn + pm + pn) % 2;
    let base = if e == 0 { 1.0 } else { -1.0 };
    match ty {
        CfType::BD => base,
        CfType::C => -base,
        CfType::A => 1.0,
    }
}

/// Sign `s` in `Z̃_{νμ} = s Z̃_{μν}`.
pub fn tilde_exchange_sign(ty: CfType, pm: usize, pn: usize) -> f64 {
    let base = if (pm * pn).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    match ty {
        CfType::BD => base,
        CfType::C => -base,
        CfType::A => 1.0,
    }
}

/// `SDet(1 - Z̃Z)`.
pub fn sdet_one_minus<T: Coeff>(z: &SuperMatrix<T>, zt: &SuperMatrix<T>) -> Result<Grassmann<T>> {
    let prod = zt.mul(z)?;
    let one = SuperMatrix::identity(z.p(), z.q(), z.n_gen())?;
    smat_sdet(&one.sub(&prod)?)
}

/// `SDet(1 - Z̃Z)` allowing a singular boson-boson block, as on `|Z^{BB}| = 1`.
pub fn sdet_one_minus_boundary<T: Coeff>(
    z: &SuperMatrix<T>,
    zt: &SuperMatrix<T>,
) -> Result<Grassmann<T>> {
    let prod = zt.mul(z)?;
    let one = SuperMatrix::identity(z.p(), z.q(), z.n_gen())?;
    smat_sdet_schur(&one.sub(&prod)?)
}

/// `D(SDet^p(1 - Z̃Z) · extra)`: flat Berezin integral over the odd entries.
pub fn berezin_weighted<T: Analytic>(
    layout: &ZLayout,
    z: &SuperMatrix<T>,
    zt: &SuperMatrix<T>,
    power: f64,
    extra: Option<&Grassmann<T>>,
) -> Result<Grassmann<T>> {
    let s = gp_pow(&sdet_one_minus(z, zt)?, power)?;
    let integrand = match extra {
        Some(e) => &s * e,
        None => s,
    };
    berezin(&integrand, layout.berezin_order())
}

/// One entry of `Z` or `Z̃` inside a polynomial integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZEntry {
    /// `Z^{μν}`.
    Z(usize, usize),
    /// `Z̃_{νμ}`, given as (row ν, column μ).
    Zt(usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct ZMonomial {
    pub coeff: f64,
    pub factors: Vec<ZEntry>,
}

/// Ordered polynomial in the entries of `Z` and `Z̃`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ZPolynomial {
    pub terms: Vec<ZMonomial>,
}

impl ZPolynomial {
    pub fn one() -> Self {
        ZPolynomial {
            terms: vec![ZMonomial {
                coeff: 1.0,
                factors: vec![],
            }],
        }
    }

    pub fn monomial(coeff: f64, factors: Vec<ZEntry>) -> Self {
        ZPolynomial {
            terms: vec![ZMonomial { coeff, factors }],
        }
    }

    pub fn plus(mut self, other: ZPolynomial) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Product with `other` on the right, factor order preserved.
    pub fn times(&self, other: &ZPolynomial) -> Self {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let mut f = a.factors.clone();
                f.extend(b.factors.iter().copied());
                terms.push(ZMonomial {
                    coeff: a.coeff * b.coeff,
                    factors: f,
                });
            }
        }
        ZPolynomial { terms }
    }

    pub fn eval<T: Coeff>(&self, z: &SuperMatrix<T>, zt: &SuperMatrix<T>) -> Result<Grassmann<T>> {
        let n = z.dim();
        let mut acc = Grassmann::zero(z.n_gen())?;
        for m in &self.terms {
            let mut p = Grassmann::scalar(z.n_gen(), T::from_f64(m.coeff))?;
            for f in &m.factors {
                let e = match *f {
                    ZEntry::Z(a, b) if a < n && b < n => z.get(a, b),
                    ZEntry::Zt(a, b) if a < n && b < n => zt.get(a, b),
                    _ => return Err(CfError::Invalid(format!("entry {f:?} out of range"))),
                };
                p = &p * e;
            }
            acc = acc + p;
        }
        Ok(acc)
    }
}

/// Tensor-product quadrature over the even coordinates of a layout.
#[derive(Clone, Debug)]
pub struct CoordGrid {
    /// Per node: coordinate values and the product weight.
    pub nodes: Vec<(Vec<C64>, f64)>,
}

impl CoordGrid {
    /// `radial` Gauss-Legendre nodes in the mapped radius and `angular`
    /// trapezoid nodes per coordinate. Disk coordinates use `|z|² = 1 - x²`,
    /// plane coordinates `|z|² = (1 - x²)/x²`; weights are Lebesgue `d²z`.
    pub fn new(coords: &[BosonCoord], radial: usize, angular: usize) -> Result<Self> {
        let disks = coords.iter().filter(|c| c.domain == Domain::Disk).count();
        if disks > 1 {
            return Err(CfError::Unsupported(
                "bounded block with more than one independent coordinate".into(),
            ));
        }
        let gl = GaussLegendre::new(radial).on(0.0, 1.0);
        let ang = periodic_nodes(angular);
        let mut per_coord: Vec<Vec<(C64, f64)>> = Vec::new();
        for c in coords {
            let mut pts = Vec::new();
            for &(x, wx) in &gl {
                let (r2, jac) = match c.domain {
                    Domain::Disk => disk_map(x),
                    Domain::Plane => plane_map(x),
                };
                let r = r2.max(0.0).sqrt();
                for &(phi, wphi) in &ang {
                    pts.push((C64::from_polar(r, phi), 0.5 * jac * wx * wphi));
                }
            }
            per_coord.push(pts);
        }
        let mut nodes: Vec<(Vec<C64>, f64)> = vec![(Vec::new(), 1.0)];
        for pts in &per_coord {
            let mut next = Vec::with_capacity(nodes.len() * pts.len());
            for (vals, w) in &nodes {
                for &(z, wz) in pts {
                    let mut v = vals.clone();
                    v.push(z);
                    next.push((v, w * wz));
                }
            }
            nodes = next;
        }
        Ok(CoordGrid { nodes })
    }
}

/// Coordinate values `(z, z̄)` in coefficient type `T`.
pub fn conj_pairs<T: Analytic>(vals: &[C64]) -> Vec<(T, T)> {
    vals.iter()
        .map(|z| (T::from_c64(*z), T::from_c64(z.conj())))
        .collect()
}
