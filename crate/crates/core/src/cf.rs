//! Both sides of the color-flavor identities of types BD, C and A.
//!
//! The group side is a Monte Carlo average over Haar-distributed `g` of the
//! exponentiated color-coupled bilinear, computed as a Grassmann polynomial
//! in the fermionic outer fields. The flavor side is a tensor quadrature over
//! the even coordinates of `Z`, with the odd entries of `Z`, `Z̃` removed by
//! an exact Berezin integral at each node.
//!
//! Fermionic outer fields are Grassmann generators numbered color by color:
//! for color `i` and fermionic flavor `f` the generators are `ψ^f_i`,
//! `ψ̄^i_f` (and `φ^{f i}`, `φ̄_{i f}` for type A). Odd `Z` generators come
//! after all outer generators.

use crate::error::{CfError, Result};
use crate::grassmann::{berezin, gp_exp, gp_pow, Grassmann};
use crate::haar::{
    epsilon_lower, epsilon_upper, haar_expect_charpoly, sample_haar, GroupFamily, GroupSpec,
};
use crate::kernel::stable_range;
use crate::quadrature::{
    integrate_toward_zero, periodic_nodes, Convergence, GaussLegendre, PanelRule,
};
use crate::report::{CheckLine, VerificationReport};
use crate::scalar::C64;
use crate::stats::{mc_vector, VecEstimate};
use crate::superfield::{
    conj_pairs, sdet_one_minus, BosonCoord, CfType, CoordGrid, Domain, ZLayout,
};
use crate::supermatrix::SuperMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest number of fermionic outer generators handled densely.
pub const MAX_OUTER_GENERATORS: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One instance `(type, N, n0, n1)`. For type A the advanced and retarded
/// sectors both carry `n0` bosonic and `n1` fermionic flavors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfSpec {
    pub ty: CfType,
    pub n_colors: usize,
    pub n0: usize,
    pub n1: usize,
    /// Skip the stable-range refusal, for demonstrating failures.
    #[serde(default)]
    pub force: bool,
}

impl CfSpec {
    pub fn new(ty: CfType, n_colors: usize, n0: usize, n1: usize) -> Result<Self> {
        let spec = CfSpec {
            ty,
            n_colors,
            n0,
            n1,
            force: false,
        };
        spec.group()?;
        if n0 + n1 == 0 {
            return Err(CfError::Invalid("at least one flavor is required".into()));
        }
        Ok(spec)
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }

    pub fn n(&self) -> usize {
        self.n0 + self.n1
    }

    pub fn group(&self) -> Result<GroupSpec> {
        let family = match self.ty {
            CfType::A => GroupFamily::Unitary,
            CfType::BD => GroupFamily::Orthogonal,
            CfType::C => GroupFamily::Symplectic,
        };
        GroupSpec::new(family, self.n_colors)
    }

    /// Smallest admissible `N` for this flavor content.
    pub fn stable_min(&self) -> usize {
        if self.n0 == 0 {
            return if self.ty == CfType::C { 2 } else { 1 };
        }
        stable_range(self.ty, self.n0).reported
    }

    pub fn in_stable_range(&self) -> bool {
        self.n_colors >= self.stable_min()
    }

    fn check_range(&self) -> Result<()> {
        if self.force || self.in_stable_range() {
            Ok(())
        } else {
            Err(CfError::OutsideStableRange {
                n: self.n_colors,
                min: self.stable_min(),
            })
        }
    }

    /// Total power of `SDet(1 - Z̃Z)` under the flat Berezin form: the
    /// invariant-measure density times the `N`-dependent weight.
    pub fn weight_power(&self) -> f64 {
        let (n, n0, n1) = (self.n_colors as f64, self.n0 as f64, self.n1 as f64);
        match self.ty {
            CfType::BD => n / 2.0 - n0 + n1 - 1.0,
            CfType::C => n / 2.0 - n0 + n1 + 1.0,
            CfType::A => n - 2.0 * n0 + 2.0 * n1,
        }
    }

    /// Fermionic outer generators per color and fermionic flavor.
    fn slots(&self) -> usize {
        if self.ty == CfType::A {
            4
        } else {
            2
        }
    }

    pub fn n_outer(&self) -> usize {
        self.n_colors * self.n1 * self.slots()
    }

    fn outer_gen(&self, color: usize, f: usize, slot: usize) -> usize {
        (color * self.n1 + f) * self.slots() + slot
    }

    pub fn layout(&self) -> Result<ZLayout> {
        ZLayout::new(self.ty, self.n0, self.n1, self.n_outer())
    }

    /// Color blocks over which the flavor-side exponent decouples.
    fn color_blocks(&self) -> Vec<Vec<usize>> {
        match self.ty {
            CfType::C => {
                let h = self.n_colors / 2;
                (0..h).map(|i| vec![i, i + h]).collect()
            }
            _ => (0..self.n_colors).map(|i| vec![i]).collect(),
        }
    }
}

/// Values of the bosonic outer fields, flavor-major: entry `μ N + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldAssignment {
    pub psi: Vec<C64>,
    pub psibar: Vec<C64>,
    #[serde(default)]
    pub phi: Vec<C64>,
    #[serde(default)]
    pub phibar: Vec<C64>,
}

impl FieldAssignment {
    pub fn zero(spec: &CfSpec) -> Self {
        let k = spec.n0 * spec.n_colors;
        let ka = if spec.ty == CfType::A { k } else { 0 };
        FieldAssignment {
            psi: vec![ZERO; k],
            psibar: vec![ZERO; k],
            phi: vec![ZERO; ka],
            phibar: vec![ZERO; ka],
        }
    }

    /// Independent values uniform in the disk of radius `max_abs`.
    pub fn random(spec: &CfSpec, seed: u64, max_abs: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |k: usize| -> Vec<C64> {
            (0..k)
                .map(|_| {
                    let r = max_abs * rng.random::<f64>().sqrt();
                    C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
                })
                .collect()
        };
        let k = spec.n0 * spec.n_colors;
        let ka = if spec.ty == CfType::A { k } else { 0 };
        let psi = draw(k);
        let psibar = draw(k);
        let phi = draw(ka);
        let phibar = draw(ka);
        FieldAssignment {
            psi,
            psibar,
            phi,
            phibar,
        }
    }

    fn validate(&self, spec: &CfSpec) -> Result<()> {
        let k = spec.n0 * spec.n_colors;
        let ka = if spec.ty == CfType::A { k } else { 0 };
        if self.psi.len() != k
            || self.psibar.len() != k
            || self.phi.len() != ka
            || self.phibar.len() != ka
        {
            return Err(CfError::Invalid(format!(
                "field assignment does not match N = {}, n0 = {}",
                spec.n_colors, spec.n0
            )));
        }
        Ok(())
    }
}

/// Outer fields as Grassmann elements of a fixed algebra: numbers for bosonic
/// flavors, generators for fermionic ones. Indexed `[μ][i]`.
#[derive(Clone, Debug)]
pub struct OuterFields {
    pub n_gen: usize,
    pub psi: Vec<Vec<Grassmann<C64>>>,
    pub psibar: Vec<Vec<Grassmann<C64>>>,
    pub phi: Vec<Vec<Grassmann<C64>>>,
    pub phibar: Vec<Vec<Grassmann<C64>>>,
}

impl OuterFields {
    pub fn new(spec: &CfSpec, fields: &FieldAssignment, n_gen: usize) -> Result<Self> {
        fields.validate(spec)?;
        let nc = spec.n_colors;
        let build = |vals: &[C64], slot: usize| -> Result<Vec<Vec<Grassmann<C64>>>> {
            let mut out = Vec::with_capacity(spec.n());
            for mu in 0..spec.n() {
                let mut row = Vec::with_capacity(nc);
                for i in 0..nc {
                    row.push(if mu < spec.n0 {
                        Grassmann::scalar(n_gen, vals[mu * nc + i])?
                    } else {
                        Grassmann::generator(n_gen, spec.outer_gen(i, mu - spec.n0, slot))?
                    });
                }
                out.push(row);
            }
            Ok(out)
        };
        let is_a = spec.ty == CfType::A;
        Ok(OuterFields {
            n_gen,
            psi: build(&fields.psi, 0)?,
            psibar: build(&fields.psibar, 1)?,
            phi: if is_a {
                build(&fields.phi, 2)?
            } else {
                Vec::new()
            },
            phibar: if is_a {
                build(&fields.phibar, 3)?
            } else {
                Vec::new()
            },
        })
    }
}

fn sign(parity: bool) -> C64 {
    if parity {
        -ONE
    } else {
        ONE
    }
}

/// Exponent of the group side for one group element `g` (entries `g^i_j`).
pub fn lhs_exponent(
    spec: &CfSpec,
    outer: &OuterFields,
    g: &DMatrix<C64>,
) -> Result<Grassmann<C64>> {
    let nc = spec.n_colors;
    let mut x = Grassmann::zero(outer.n_gen)?;
    for mu in 0..spec.n() {
        for i in 0..nc {
            for j in 0..nc {
                match spec.ty {
                    CfType::BD | CfType::C => {
                        // g^i_j ψ̄^j_μ ψ^μ_i
                        let c = g[(i, j)];
                        if c != ZERO {
                            x = x + (&outer.psibar[mu][j] * &outer.psi[mu][i]).scale(&c);
                        }
                    }
                    CfType::A => {
                        // (g⁻¹)^j_i ψ̄^i_μ ψ^μ_j with g⁻¹ = g†
                        let ci = g[(i, j)].conj();
                        if ci != ZERO {
                            x = x + (&outer.psibar[mu][i] * &outer.psi[mu][j]).scale(&ci);
                        }
                        // g^i_j φ^{μ j} (-1)^{|μ|} φ̄_{i μ}
                        let c = g[(i, j)] * sign(mu >= spec.n0);
                        if c != ZERO {
                            x = x + (&outer.phi[mu][j] * &outer.phibar[mu][i]).scale(&c);
                        }
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Flavor-side exponent restricted to one color block.
pub fn rhs_block_exponent(
    spec: &CfSpec,
    outer: &OuterFields,
    z: &SuperMatrix<C64>,
    zt: &SuperMatrix<C64>,
    block: &[usize],
) -> Result<Grassmann<C64>> {
    let n = spec.n();
    let half = ONE * 0.5;
    let mut x = Grassmann::zero(outer.n_gen)?;
    let par = |m: usize| m >= spec.n0;
    match spec.ty {
        CfType::BD => {
            for &j in block {
                for mu in 0..n {
                    for nu in 0..n {
                        let t = zt.get(nu, mu);
                        if !t.is_zero() {
                            let p = &(&outer.psi[nu][j] * t) * &outer.psi[mu][j];
                            x = x + p.scale(&(half * sign(par(nu))));
                        }
                        let w = z.get(mu, nu);
                        if !w.is_zero() {
                            let p = &(&outer.psibar[mu][j] * w) * &outer.psibar[nu][j];
                            x = x + p.scale(&half);
                        }
                    }
                }
            }
        }
        CfType::C => {
            let up = epsilon_upper(spec.n_colors);
            let lo = epsilon_lower(spec.n_colors);
            for &a in block {
                for &b in block {
                    for mu in 0..n {
                        for nu in 0..n {
                            // ½ ε^{ik} ψ^ν_k (-1)^{|ν|} Z̃_{νμ} ψ^μ_i with i = a, k = b
                            let e_up = up[(a, b)];
                            let t = zt.get(nu, mu);
                            if e_up != 0.0 && !t.is_zero() {
                                let p = &(&outer.psi[nu][b] * t) * &outer.psi[mu][a];
                                x = x + p.scale(&(half * e_up * sign(par(nu))));
                            }
                            // ½ ψ̄^j_μ Z^{μν} ψ̄^l_ν ε_{lj} with j = a, l = b
                            let e_lo = lo[(b, a)];
                            let w = z.get(mu, nu);
                            if e_lo != 0.0 && !w.is_zero() {
                                let p = &(&outer.psibar[mu][a] * w) * &outer.psibar[nu][b];
                                x = x + p.scale(&(half * e_lo));
                            }
                        }
                    }
                }
            }
        }
        CfType::A => {
            for &j in block {
                for mu in 0..n {
                    for nu in 0..n {
                        // φ^{ν j} (-1)^{|ν|} Z̃_{νμ} ψ^μ_j
                        let t = zt.get(nu, mu);
                        if !t.is_zero() {
                            let p = &(&outer.phi[nu][j] * t) * &outer.psi[mu][j];
                            x = x + p.scale(&sign(par(nu)));
                        }
                        // ψ̄^j_μ Z^{μν} φ̄_{j ν}
                        let w = z.get(mu, nu);
                        if !w.is_zero() {
                            x = x + &(&outer.psibar[mu][j] * w) * &outer.phibar[nu][j];
                        }
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Full flavor-side exponent, summed over all color blocks.
pub fn rhs_exponent(
    spec: &CfSpec,
    outer: &OuterFields,
    z: &SuperMatrix<C64>,
    zt: &SuperMatrix<C64>,
) -> Result<Grassmann<C64>> {
    let mut x = Grassmann::zero(outer.n_gen)?;
    for b in spec.color_blocks() {
        x = x + rhs_block_exponent(spec, outer, z, zt, &b)?;
    }
    Ok(x)
}

/// Monte Carlo estimate of a Grassmann polynomial: one [`VecEstimate`]
/// component per monomial mask of the outer generators.
#[derive(Clone, Debug)]
pub struct CoeffEstimate {
    pub n_gen: usize,
    pub est: VecEstimate,
}

impl CoeffEstimate {
    pub fn mean_poly(&self) -> Result<Grassmann<C64>> {
        let terms = self
            .est
            .mean
            .iter()
            .enumerate()
            .map(|(m, c)| (m as u64, *c))
            .collect();
        Grassmann::from_terms(self.n_gen, terms)
    }
}

fn check_outer(spec: &CfSpec) -> Result<()> {
    if spec.n_outer() > MAX_OUTER_GENERATORS {
        return Err(CfError::Unsupported(format!(
            "{} fermionic outer generators exceed the dense limit {MAX_OUTER_GENERATORS}",
            spec.n_outer()
        )));
    }
    Ok(())
}

/// Group side: Haar average of `exp(lhs_exponent)`.
pub fn lhs_cf(
    spec: &CfSpec,
    fields: &FieldAssignment,
    samples: usize,
    seed: u64,
) -> Result<CoeffEstimate> {
    check_outer(spec)?;
    let group = spec.group()?;
    let n_gen = spec.n_outer();
    let outer = OuterFields::new(spec, fields, n_gen)?;
    let dim = 1usize << n_gen;
    // Errors cannot occur inside the sampler: the algebra is fixed and the
    // exponent is even by construction.
    let est = mc_vector(seed, samples, dim, |rng, acc| {
        let g = sample_haar(group, rng);
        let x = lhs_exponent(spec, &outer, &g).expect("exponent in a fixed algebra");
        let e = gp_exp(&x).expect("even exponent");
        for (m, c) in e.terms() {
            acc[*m as usize] += c;
        }
    });
    Ok(CoeffEstimate { n_gen, est })
}

/// Quadrature resolution for the flavor side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfQuadrature {
    pub radial: usize,
    pub angular: usize,
}

impl Default for CfQuadrature {
    fn default() -> Self {
        CfQuadrature {
            radial: 12,
            angular: 8,
        }
    }
}

impl CfQuadrature {
    pub fn doubled(&self) -> Self {
        CfQuadrature {
            radial: 2 * self.radial,
            angular: 2 * self.angular,
        }
    }
}

struct RhsContext<'a> {
    spec: &'a CfSpec,
    layout: ZLayout,
    power: f64,
    blocks: Vec<Vec<usize>>,
}

impl<'a> RhsContext<'a> {
    fn new(spec: &'a CfSpec) -> Result<Self> {
        check_outer(spec)?;
        Ok(RhsContext {
            spec,
            layout: spec.layout()?,
            power: spec.weight_power(),
            blocks: spec.color_blocks(),
        })
    }

    fn matrices(&self, vals: &[C64]) -> Result<(SuperMatrix<C64>, SuperMatrix<C64>)> {
        self.layout.build(&conj_pairs::<C64>(vals))
    }

    /// `D SDet^p` at one node: the unnormalized mass density.
    fn mass(&self, vals: &[C64]) -> Result<C64> {
        let (z, zt) = self.matrices(vals)?;
        let w = gp_pow(&sdet_one_minus(&z, &zt)?, self.power)?;
        Ok(berezin(&w, self.layout.berezin_order())?.coeff(0))
    }

    /// `D (SDet^p exp(exponent))` at one node, added into `acc` by mask,
    /// together with the mass density.
    fn integrand(
        &self,
        outer: &OuterFields,
        vals: &[C64],
        acc: &mut [C64],
        weight: f64,
    ) -> Result<C64> {
        let (z, zt) = self.matrices(vals)?;
        let w = gp_pow(&sdet_one_minus(&z, &zt)?, self.power)?;
        let order = self.layout.berezin_order();
        let mass = berezin(&w, order)?.coeff(0);
        let mut e = Grassmann::one(outer.n_gen)?;
        for b in &self.blocks {
            let x = rhs_block_exponent(self.spec, outer, &z, &zt, b)?;
            e = &e * &gp_exp(&x)?;
        }
        let top = berezin(&(&w * &e), order)?;
        for (m, c) in top.terms() {
            acc[*m as usize] += c * weight;
        }
        Ok(mass)
    }
}

/// Parallel weighted sum over grid nodes with a fixed reduction order.
fn grid_sum<F>(grid: &CoordGrid, dim: usize, f: F) -> Result<(Vec<C64>, C64)>
where
    F: Fn(&[C64], &mut [C64], f64) -> Result<C64> + Sync,
{
    const CHUNK: usize = 64;
    let parts: Vec<Result<(Vec<C64>, C64)>> = grid
        .nodes
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![ZERO; dim];
            let mut mass = ZERO;
            for (vals, w) in chunk {
                mass += f(vals, &mut acc, *w)? * *w;
            }
            Ok((acc, mass))
        })
        .collect();
    let mut total = vec![ZERO; dim];
    let mut mass = ZERO;
    for p in parts {
        let (acc, m) = p?;
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        mass += m;
    }
    Ok((total, mass))
}

fn real_mass(mass: C64) -> Result<f64> {
    if !mass.re.is_finite() || mass.norm() == 0.0 {
        return Err(CfError::Divergent(format!("unit-mass integral is {mass}")));
    }
    if mass.im.abs() > 1e-8 * mass.re.abs().max(1e-300) {
        return Err(CfError::Invalid(format!(
            "unit-mass integral {mass} is not real"
        )));
    }
    Ok(mass.re)
}

/// Panel check on the singular end of every radial direction.
///
/// For coordinate `k`, the mapped radius of `k` runs on geometric panels
/// toward its singular end (the disk boundary or infinity) while all other
/// coordinates stay on the tensor grid.
fn radial_convergence(
    ctx: &RhsContext<'_>,
    quad: &CfQuadrature,
) -> Result<Vec<(usize, Convergence, Vec<crate::quadrature::TracePoint>)>> {
    let coords = &ctx.layout.coords;
    let mut out = Vec::new();
    let ang = periodic_nodes(quad.angular);
    for k in 0..coords.len() {
        let others: Vec<BosonCoord> = coords
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, c)| *c)
            .collect();
        let grid = CoordGrid::new(&others, quad.radial, quad.angular)?;
        let c = coords[k];
        let mut err: Option<CfError> = None;
        let profile = |x: f64| -> C64 {
            let (r2, jac) = match c.domain {
                Domain::Disk => crate::quadrature::disk_map(x),
                Domain::Plane => crate::quadrature::plane_map(x),
            };
            let r = r2.max(0.0).sqrt();
            let mut s = ZERO;
            for &(phi, wphi) in &ang {
                let zk = C64::from_polar(r, phi);
                for (vals, w) in &grid.nodes {
                    let mut v = vals.clone();
                    v.insert(k, zk);
                    match ctx.mass(&v) {
                        Ok(m) => s += m * (0.5 * jac * wphi * w),
                        Err(e) => {
                            if err.is_none() {
                                err = Some(e);
                            }
                        }
                    }
                }
            }
            s
        };
        // Disk radii closer to the boundary than ~1e-6 lose the value of
        // 1 - |z|² to rounding, so the panel walk stops there.
        let rule = PanelRule {
            max_panels: if c.domain == Domain::Disk { 10 } else { 30 },
            ..PanelRule::default()
        };
        let res = integrate_toward_zero(profile, rule);
        if let Some(e) = err {
            return Err(e);
        }
        out.push((k, res.status, res.trace));
    }
    Ok(out)
}

/// Reciprocal of the unit-mass integral `∫ D SDet^p(1 - Z̃Z)`.
///
/// Every radial direction is first walked toward its singular end; a
/// non-shrinking panel sequence is reported as a divergence.
pub fn normalization_constant(spec: &CfSpec, quad: &CfQuadrature) -> Result<f64> {
    spec.check_range()?;
    let ctx = RhsContext::new(spec)?;
    for (k, status, _) in radial_convergence(&ctx, quad)? {
        if status == Convergence::Divergent {
            let c = ctx.layout.coords[k];
            return Err(CfError::Divergent(format!(
                "unit-mass integral diverges along Z^{{{}{}}} for {} N = {}",
                c.mu, c.nu, spec.ty, spec.n_colors
            )));
        }
    }
    let grid = CoordGrid::new(&ctx.layout.coords, quad.radial, quad.angular)?;
    let (_, mass) = grid_sum(&grid, 0, |v, _, _| ctx.mass(v))?;
    Ok(1.0 / real_mass(mass)?)
}

/// Flavor side, normalized by the unit-mass integral on the same grid.
pub fn rhs_cf(
    spec: &CfSpec,
    fields: &FieldAssignment,
    quad: &CfQuadrature,
) -> Result<Grassmann<C64>> {
    spec.check_range()?;
    let ctx = RhsContext::new(spec)?;
    if !spec.in_stable_range() {
        for (_, status, _) in radial_convergence(&ctx, quad)? {
            if status == Convergence::Divergent {
                return Err(CfError::Divergent(format!(
                    "{} N = {} lies below the stable range and the integral diverges",
                    spec.ty, spec.n_colors
                )));
            }
        }
    }
    let outer = OuterFields::new(spec, fields, ctx.layout.n_gen)?;
    let grid = CoordGrid::new(&ctx.layout.coords, quad.radial, quad.angular)?;
    let dim = 1usize << spec.n_outer();
    let (acc, mass) = grid_sum(&grid, dim, |v, acc, w| ctx.integrand(&outer, v, acc, w))?;
    let c = 1.0 / real_mass(mass)?;
    let terms = acc
        .into_iter()
        .enumerate()
        .map(|(m, a)| (m as u64, a * c))
        .collect();
    Grassmann::from_terms(spec.n_outer(), terms)
}

fn mask_label(mask: u64) -> String {
    if mask == 0 {
        return "1".into();
    }
    (0..64)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| format!("ξ{b}"))
        .collect::<Vec<_>>()
        .join("")
}

/// Coefficientwise comparison of an estimated polynomial with a reference.
pub fn compare_coefficients(
    name: &str,
    lhs: &CoeffEstimate,
    rhs: &Grassmann<C64>,
    k_sigma: f64,
) -> VerificationReport {
    let mut rep = VerificationReport::new(name);
    for m in 0..lhs.est.mean.len() {
        let e = lhs.est.get(m);
        let r = rhs.coeff(m as u64);
        if e.mean == ZERO && e.stderr() == 0.0 && r.norm() < 1e-12 {
            continue;
        }
        rep.push(CheckLine::statistical(
            mask_label(m as u64),
            e.mean,
            e.stderr(),
            r,
            0.0,
            k_sigma,
        ));
    }
    rep
}

/// Both sides of the identity at one field assignment.
pub fn verify_cf(
    spec: &CfSpec,
    fields: &FieldAssignment,
    samples: usize,
    seed: u64,
    quad: &CfQuadrature,
) -> Result<VerificationReport> {
    let rhs = rhs_cf(spec, fields, quad)?;
    let lhs = lhs_cf(spec, fields, samples, seed)?;
    let mut rep = compare_coefficients(
        &format!("cf-{}-N{}-n{}|{}", spec.ty, spec.n_colors, spec.n0, spec.n1),
        &lhs,
        &rhs,
        3.0,
    );
    rep.note(format!(
        "{} samples, quadrature {}x{}",
        lhs.est.samples, quad.radial, quad.angular
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Determinant identities for O(N)

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DetMode {
    /// Products of characteristic polynomials, skew `Z` over all of ℂ.
    FF,
    /// Products of reciprocals, symmetric `Z` in the unit ball.
    BB,
}

/// Resolution of the determinant-identity quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetQuadrature {
    pub radial: usize,
    pub angular: usize,
    /// Trapezoid nodes per Takagi phase angle (symmetric 2×2 case).
    pub takagi_angular: usize,
}

impl Default for DetQuadrature {
    fn default() -> Self {
        DetQuadrature {
            radial: 24,
            angular: 16,
            takagi_angular: 16,
        }
    }
}

/// Pfaffian of an even-dimensional skew matrix by expansion along row 0.
pub fn pfaffian(a: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    if n % 2 == 1 {
        return ZERO;
    }
    let idx: Vec<usize> = (0..n).collect();
    pf_rec(a, &idx)
}

fn pf_rec(a: &DMatrix<C64>, idx: &[usize]) -> C64 {
    if idx.is_empty() {
        return ONE;
    }
    let first = idx[0];
    let mut s = ZERO;
    for k in 1..idx.len() {
        let c = a[(first, idx[k])];
        if c == ZERO {
            continue;
        }
        let rest: Vec<usize> = idx[1..]
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k - 1)
            .map(|(_, &v)| v)
            .collect();
        let sg = if k % 2 == 1 { 1.0 } else { -1.0 };
        s += c * sg * pf_rec(a, &rest);
    }
    s
}

fn skew_from(n: usize, vals: &[C64]) -> DMatrix<C64> {
    let mut z = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            z[(i, j)] = vals[k];
            z[(j, i)] = -vals[k];
            k += 1;
        }
    }
    z
}

/// `Det^{1/2}[[α, Z], [Z̄, α]]` on the branch equal to `Det α` at `Z = 0`.
pub fn ff_sqrt_det(alpha: &[C64], z: &DMatrix<C64>) -> C64 {
    let n = alpha.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -z[(i, j)];
            m[(n + i, n + j)] = z[(i, j)].conj();
        }
        m[(i, n + i)] = alpha[i];
        m[(n + i, i)] = -alpha[i];
    }
    let s = if (n * (n.saturating_sub(1)) / 2) % 2 == 1 {
        -ONE
    } else {
        ONE
    };
    s * pfaffian(&m)
}

fn ff_rhs(n_colors: usize, alphas: &[Vec<C64>], quad: &DetQuadrature) -> Result<Vec<C64>> {
    let n = alphas[0].len();
    let coords: Vec<BosonCoord> = (0..n * n.saturating_sub(1) / 2)
        .map(|k| BosonCoord {
            mu: 0,
            nu: k,
            domain: Domain::Plane,
        })
        .collect();
    let grid = CoordGrid::new(&coords, quad.radial, quad.angular)?;
    let nf = n_colors as i32;
    let mass_pow = -(n as f64) + 1.0 - n_colors as f64 / 2.0;
    let parts: Vec<(Vec<C64>, f64)> = grid
        .nodes
        .par_chunks(256)
        .map(|chunk| {
            let mut acc = vec![ZERO; alphas.len()];
            let mut mass = 0.0;
            for (vals, w) in chunk {
                let z = skew_from(n, vals);
                let one_plus = DMatrix::<C64>::identity(n, n) + z.adjoint() * &z;
                let d = one_plus.determinant().re.powf(mass_pow) * w;
                mass += d;
                for (a, al) in acc.iter_mut().zip(alphas) {
                    *a += ff_sqrt_det(al, &z).powi(nf) * d;
                }
            }
            (acc, mass)
        })
        .collect();
    let mut total = vec![ZERO; alphas.len()];
    let mut mass = 0.0;
    for (acc, m) in parts {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        mass += m;
    }
    Ok(total.into_iter().map(|t| t / mass).collect())
}

/// `Π_i (1 - λ_i)^{-N/2}` over the eigenvalues of `α⁻¹ Z̄ α⁻¹ Z`, each
/// factor on its principal branch, times `(Det α)^{-N}`.
fn bb_integrand(n_colors: usize, alpha: &[C64], z: &DMatrix<C64>) -> C64 {
    let n = alpha.len();
    let ainv = DMatrix::from_fn(n, n, |i, j| if i == j { ONE / alpha[i] } else { ZERO });
    let m = &ainv * z.map(|c| c.conj()) * &ainv * z;
    let half = n_colors as f64 / 2.0;
    let det_a: C64 = alpha.iter().product();
    let lambdas: Vec<C64> = match n {
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - det * 4.0).sqrt();
            vec![(tr + disc) / 2.0, (tr - disc) / 2.0]
        }
        _ => m.clone().eigenvalues_complex(),
    };
    let mut f = det_a.powi(-(n_colors as i32));
    for l in lambdas {
        f *= (ONE - l).powf(-half);
    }
    f
}

trait ComplexEigen {
    fn eigenvalues_complex(self) -> Vec<C64>;
}

impl ComplexEigen for DMatrix<C64> {
    fn eigenvalues_complex(self) -> Vec<C64> {
        let n = self.nrows();
        let schur = nalgebra::linalg::Schur::new(self);
        let (_, t) = schur.unpack();
        (0..n).map(|i| t[(i, i)]).collect()
    }
}

/// Takagi nodes `Z = U diag(σ₁, σ₂) Uᵀ` for complex symmetric 2×2 `Z` in the
/// unit ball, with weights for `det(1 - Z̄Z)^{N/2-3} d(Z)` up to a constant.
///
/// With `σᵢ² = 1 - xᵢ²` and `x₁ = s x₂`, the Lebesgue measure
/// `|σ₁² - σ₂²| σ₁σ₂ dσ dU` and the weight combine into
/// `x₂ · x₂²(1 - s²) · (x₁x₂)^{N-5}` on the unit square in `(s, x₂)`.
/// `U(2)` is parametrized as `[[c e^{iψ₁}, s e^{iψ₂}], [-s e^{-iψ₂}, c e^{-iψ₁}]]`
/// with `sin²θ = η` uniform; the overall phase drops out of every integrand.
pub fn takagi_nodes(n_colors: usize, radial: usize, angular: usize) -> Vec<(DMatrix<C64>, f64)> {
    let gl = GaussLegendre::new(radial).on(0.0, 1.0);
    let ang = periodic_nodes(angular);
    let a = n_colors as f64 - 5.0;
    let mut out = Vec::new();
    for &(s, ws) in &gl {
        for &(x2, wx) in &gl {
            let x1 = s * x2;
            let w_rad = x2 * x2 * x2 * (1.0 - s * s) * (x1 * x2).powf(a) * ws * wx;
            let sig1 = (1.0 - x1 * x1).sqrt();
            let sig2 = (1.0 - x2 * x2).sqrt();
            for &(eta, we) in &gl {
                let (c, sn) = ((1.0 - eta).sqrt(), eta.sqrt());
                for &(p1, w1) in &ang {
                    for &(p2, w2) in &ang {
                        let e1 = C64::from_polar(1.0, p1);
                        let e2 = C64::from_polar(1.0, p2);
                        let u = DMatrix::from_row_slice(
                            2,
                            2,
                            &[e1 * c, e2 * sn, -e2.conj() * sn, e1.conj() * c],
                        );
                        let d = DMatrix::from_row_slice(
                            2,
                            2,
                            &[C64::new(sig1, 0.0), ZERO, ZERO, C64::new(sig2, 0.0)],
                        );
                        let z = &u * d * u.transpose();
                        out.push((z, w_rad * we * w1 * w2));
                    }
                }
            }
        }
    }
    out
}

fn bb_rhs(n_colors: usize, alphas: &[Vec<C64>], quad: &DetQuadrature) -> Result<Vec<C64>> {
    let n = alphas[0].len();
    let nodes: Vec<(DMatrix<C64>, f64)> = match n {
        1 => {
            let coords = [BosonCoord {
                mu: 0,
                nu: 0,
                domain: Domain::Disk,
            }];
            let grid = CoordGrid::new(&coords, quad.radial, quad.angular)?;
            let p = n_colors as f64 / 2.0 - 2.0;
            grid.nodes
                .iter()
                .map(|(v, w)| {
                    let z = DMatrix::from_element(1, 1, v[0]);
                    (z, w * (1.0 - v[0].norm_sqr()).powf(p))
                })
                .collect()
        }
        2 => takagi_nodes(n_colors, quad.radial.min(16), quad.takagi_angular),
        _ => {
            return Err(CfError::Unsupported(format!(
                "reciprocal determinant identity for n = {n} (only n <= 2 has a quadrature)"
            )))
        }
    };
    let parts: Vec<(Vec<C64>, f64)> = nodes
        .par_chunks(512)
        .map(|chunk| {
            let mut acc = vec![ZERO; alphas.len()];
            let mut mass = 0.0;
            for (z, w) in chunk {
                mass += w;
                for (a, al) in acc.iter_mut().zip(alphas) {
                    *a += bb_integrand(n_colors, al, z) * *w;
                }
            }
            (acc, mass)
        })
        .collect();
    let mut total = vec![ZERO; alphas.len()];
    let mut mass = 0.0;
    for (acc, m) in parts {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        mass += m;
    }
    Ok(total.into_iter().map(|t| t / mass).collect())
}

/// Flavor-side value of the determinant identity for each α vector. The
/// constant in front of the integral is fixed by the large-α limit, where
/// both sides tend to `Π α^{±N}`.
pub fn det_identity_rhs(
    n_colors: usize,
    alphas: &[Vec<C64>],
    mode: DetMode,
    quad: &DetQuadrature,
) -> Result<Vec<C64>> {
    let n = alphas.first().map(|a| a.len()).unwrap_or(0);
    if n == 0 || alphas.iter().any(|a| a.len() != n) {
        return Err(CfError::Invalid(
            "α vectors must be non-empty and of equal length".into(),
        ));
    }
    match mode {
        DetMode::FF => ff_rhs(n_colors, alphas, quad),
        DetMode::BB => {
            if n_colors < 2 * n + 1 {
                return Err(CfError::OutsideStableRange {
                    n: n_colors,
                    min: 2 * n + 1,
                });
            }
            if let Some(a) = alphas.iter().flatten().find(|a| a.norm() <= 1.0) {
                return Err(CfError::Invalid(format!(
                    "|α| = {} must exceed 1",
                    a.norm()
                )));
            }
            bb_rhs(n_colors, alphas, quad)
        }
    }
}

/// Group average against the flavor-space integral, one line per α vector.
pub fn verify_det_identities(
    n_colors: usize,
    alphas: &[Vec<C64>],
    mode: DetMode,
    quad: &DetQuadrature,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let rhs = det_identity_rhs(n_colors, alphas, mode, quad)?;
    let group = GroupSpec::new(GroupFamily::Orthogonal, n_colors)?;
    let mut rep = VerificationReport::new(format!("det-{mode:?}-N{n_colors}-n{}", alphas[0].len()));
    for (k, (al, r)) in alphas.iter().zip(rhs).enumerate() {
        let est = match mode {
            DetMode::FF => {
                haar_expect_charpoly(group, al, &[], samples, seed.wrapping_add(k as u64))?
            }
            DetMode::BB => {
                haar_expect_charpoly(group, &[], al, samples, seed.wrapping_add(k as u64))?
            }
        };
        let label = format!(
            "alpha={:?}",
            al.iter().map(|a| (a.re, a.im)).collect::<Vec<_>>()
        );
        rep.push(CheckLine::statistical(
            label,
            est.mean,
            est.stderr(),
            r,
            0.0,
            3.0,
        ));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Ratio formula from the saddle-point sum

/// `Ω(α) = Π_μ α_μ^{-N} Σ_s F_s(α) Π_ν α_ν^{N(1+s_ν)/2}` for `n0 = n1`, with
/// bosonic parameters first in `alphas`. Sign vectors obey
/// `Σ s_ν ∈ n1 - 4ℤ`.
pub fn weyl_ratio_formula(alphas: &[C64], n0: usize, n1: usize, n_colors: usize) -> Result<C64> {
    if n0 != n1 {
        return Err(CfError::Unsupported(
            "the saddle-point sum is implemented for n0 = n1 only".into(),
        ));
    }
    if alphas.len() != n0 + n1 {
        return Err(CfError::Invalid(format!(
            "expected {} parameters, got {}",
            n0 + n1,
            alphas.len()
        )));
    }
    for i in 0..alphas.len() {
        for j in i + 1..alphas.len() {
            if (alphas[i] - alphas[j]).norm() == 0.0 {
                return Err(CfError::Pole(format!("coincident parameters α{i} = α{j}")));
            }
        }
    }
    if let Some(a) = alphas[..n0].iter().find(|a| a.norm() <= 1.0) {
        return Err(CfError::Invalid(format!(
            "bosonic parameter |α| = {} must exceed 1",
            a.norm()
        )));
    }
    let (bos, fer) = alphas.split_at(n0);
    let nn = n_colors as i32;
    let mut sum = ZERO;
    for bits in 0u32..(1 << n1) {
        let s: Vec<i32> = (0..n1)
            .map(|k| if bits >> k & 1 == 1 { -1 } else { 1 })
            .collect();
        let total: i32 = s.iter().sum();
        if (n1 as i32 - total).rem_euclid(4) != 0 {
            continue;
        }
        let a_s: Vec<C64> = fer.iter().zip(&s).map(|(a, &sv)| a.powi(-sv)).collect();
        let mut num = ONE;
        for am in bos {
            for x in &a_s {
                num *= ONE - x / am;
            }
        }
        let mut den = ONE;
        for i in 0..n0 {
            for j in i..n0 {
                den *= ONE - ONE / (bos[i] * bos[j]);
            }
        }
        for i in 0..n1 {
            for j in i + 1..n1 {
                den *= ONE - a_s[i] * a_s[j];
            }
        }
        if den.norm() < 1e-14 {
            return Err(CfError::Pole(format!(
                "F_s denominator vanishes for s = {s:?}"
            )));
        }
        let mut term = num / den;
        for (a, &sv) in fer.iter().zip(&s) {
            term *= a.powi(nn * (1 + sv) / 2);
        }
        sum += term;
    }
    let pre: C64 = bos.iter().map(|a| a.powi(-nn)).product();
    Ok(pre * sum)
}

/// Formula against the Haar average of the ratio of characteristic
/// polynomials on O(N), for each parameter vector.
pub fn verify_weyl_ratio(
    n_colors: usize,
    n0: usize,
    alphas: &[Vec<C64>],
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let group = GroupSpec::new(GroupFamily::Orthogonal, n_colors)?;
    let mut rep = VerificationReport::new(format!("weyl-ratio-N{n_colors}-n{n0}|{n0}"));
    for (k, al) in alphas.iter().enumerate() {
        let formula = weyl_ratio_formula(al, n0, n0, n_colors)?;
        let est = haar_expect_charpoly(
            group,
            &al[n0..],
            &al[..n0],
            samples,
            seed.wrapping_add(k as u64),
        )?;
        let label = format!(
            "alpha={:?}",
            al.iter().map(|a| (a.re, a.im)).collect::<Vec<_>>()
        );
        rep.push(CheckLine::statistical(
            label,
            est.mean,
            est.stderr(),
            formula,
            0.0,
            3.0,
        ));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Expansion to first order in 1/N (type BD)

/// The three `O(1/N)` polynomials of the BD expansion.
#[derive(Clone, Debug)]
pub struct FirstOrder {
    /// `½ E[X²]` from the Haar second moment.
    pub haar: Grassmann<C64>,
    /// `(2N)⁻¹ (-1)^{|μ|} Q^{μν} Q̃_{νμ}` after the rearrangement.
    pub rearranged: Grassmann<C64>,
    /// `½ ⟨Y²⟩` from the Gaussian `Z` moments.
    pub gaussian: Grassmann<C64>,
}

/// `⟨Z^{μν} Z̃_{λρ}⟩ = N⁻¹ (-1)^{|ν|} (δ^ν_λ δ^μ_ρ + (-1)^{|μ||ν|} δ^μ_λ δ^ν_ρ)`.
pub fn z_moment_formula(spec: &CfSpec, mu: usize, nu: usize, lam: usize, rho: usize) -> f64 {
    let p = |m: usize| usize::from(m >= spec.n0);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let s_nu = if p(nu) == 1 { -1.0 } else { 1.0 };
    let s_mn = if p(mu) * p(nu) == 1 { -1.0 } else { 1.0 };
    s_nu * (d(nu, lam) * d(mu, rho) + s_mn * d(mu, lam) * d(nu, rho)) / spec.n_colors as f64
}

/// Symbolic first-order terms for a BD instance.
pub fn first_order_terms(spec: &CfSpec, fields: &FieldAssignment) -> Result<FirstOrder> {
    if spec.ty != CfType::BD {
        return Err(CfError::Unsupported(
            "the 1/N expansion is implemented for type BD".into(),
        ));
    }
    check_outer(spec)?;
    let n_gen = spec.n_outer();
    let outer = OuterFields::new(spec, fields, n_gen)?;
    let (nc, n) = (spec.n_colors, spec.n());
    let nf = nc as f64;
    let par = |m: usize| m >= spec.n0;
    // A^j_i = ψ̄^j_μ ψ^μ_i; X = g^i_j A^j_i and ∫ g^i_j g^k_l = δ^{ik} δ_{jl} / N.
    let a = |j: usize, i: usize| -> Grassmann<C64> {
        let mut s = Grassmann::zero(n_gen).expect("size");
        for mu in 0..n {
            s = s + &outer.psibar[mu][j] * &outer.psi[mu][i];
        }
        s
    };
    let mut haar = Grassmann::zero(n_gen)?;
    for i in 0..nc {
        for j in 0..nc {
            let aji = a(j, i);
            haar = haar + (&aji * &aji).scale(&C64::new(0.5 / nf, 0.0));
        }
    }
    // Q^{μν} = ψ^μ_j ψ^ν_j (-1)^{|ν|}, Q̃_{νμ} = ψ̄^l_ν ψ̄^l_μ.
    let q = |mu: usize, nu: usize| -> Grassmann<C64> {
        let mut s = Grassmann::zero(n_gen).expect("size");
        for j in 0..nc {
            s = s + (&outer.psi[mu][j] * &outer.psi[nu][j]).scale(&sign(par(nu)));
        }
        s
    };
    let qt = |nu: usize, mu: usize| -> Grassmann<C64> {
        let mut s = Grassmann::zero(n_gen).expect("size");
        for l in 0..nc {
            s = s + &outer.psibar[nu][l] * &outer.psibar[mu][l];
        }
        s
    };
    let mut rearranged = Grassmann::zero(n_gen)?;
    for mu in 0..n {
        for nu in 0..n {
            let t = &q(mu, nu) * &qt(nu, mu);
            rearranged = rearranged + t.scale(&(sign(par(mu)) * (0.5 / nf)));
        }
    }
    // Y = Σ z_a U_a + Σ z̃_b V_b with U = ½(-1)^{|μ|} Q̃_{νμ} after Z^{μν},
    // V = ½(-1)^{|ν|} Q^{μν} after Z̃_{νμ}. Only ⟨z z̃⟩ is nonzero, so
    // ½⟨Y²⟩ = ½ Σ ⟨z_a z̃_b⟩ [σ₁ U_a V_b + σ₂ V_b U_a], where σ₁ moves z̃_b
    // past U_a and σ₂ moves z_a past V_b and then past z̃_b.
    let mut gaussian = Grassmann::zero(n_gen)?;
    let pf = |m: usize| usize::from(par(m));
    for mu in 0..n {
        for nu in 0..n {
            let u = qt(nu, mu).scale(&(sign(par(mu)) * 0.5));
            let pz = (pf(mu) + pf(nu)) % 2;
            for lam in 0..n {
                for rho in 0..n {
                    // z̃_b = Z̃_{λρ}, paired with Q^{ρλ}
                    let mom = z_moment_formula(spec, mu, nu, lam, rho);
                    if mom == 0.0 {
                        continue;
                    }
                    let v = q(rho, lam).scale(&(sign(par(lam)) * 0.5));
                    let pzt = (pf(lam) + pf(rho)) % 2;
                    let s1 = sign((pz * pzt) % 2 == 1);
                    let s2 = sign((pz * pzt + pz * pzt) % 2 == 1);
                    let t = (&u * &v).scale(&s1) + (&v * &u).scale(&s2);
                    gaussian = gaussian + t.scale(&C64::new(0.5 * mom, 0.0));
                }
            }
        }
    }
    Ok(FirstOrder {
        haar,
        rearranged,
        gaussian,
    })
}

/// `⟨Z^{μν} Z̃_{λρ}⟩` under the normalized flavor-side measure.
pub fn z_moment_quadrature(
    spec: &CfSpec,
    quad: &CfQuadrature,
    (mu, nu): (usize, usize),
    (lam, rho): (usize, usize),
) -> Result<C64> {
    spec.check_range()?;
    let layout = ZLayout::new(spec.ty, spec.n0, spec.n1, 0)?;
    let n = spec.n();
    if mu >= n || nu >= n || lam >= n || rho >= n {
        return Err(CfError::Invalid("flavor index out of range".into()));
    }
    let grid = CoordGrid::new(&layout.coords, quad.radial, quad.angular)?;
    let p = spec.weight_power();
    let (acc, mass) = grid_sum(&grid, 1, |vals, acc, w| {
        let (z, zt) = layout.build(&conj_pairs::<C64>(vals))?;
        let s = gp_pow(&sdet_one_minus(&z, &zt)?, p)?;
        let m = berezin(&s, layout.berezin_order())?.coeff(0);
        let f = &(&s * z.get(mu, nu)) * zt.get(lam, rho);
        acc[0] += berezin(&f, layout.berezin_order())?.coeff(0) * w;
        Ok(m)
    })?;
    Ok(acc[0] / real_mass(mass)?)
}

/// Zeroth and first order of the two expansions, and the second moments of
/// the flavor-side measure against the Gaussian pattern.
pub fn moment_expansion_check(
    spec: &CfSpec,
    fields: &FieldAssignment,
    quad: &CfQuadrature,
) -> Result<VerificationReport> {
    let fo = first_order_terms(spec, fields)?;
    let mut rep = VerificationReport::new(format!(
        "moment-expansion-N{}-n{}|{}",
        spec.n_colors, spec.n0, spec.n1
    ));
    rep.push(CheckLine::within("order0-haar", ONE, ONE, 0.0));
    rep.push(CheckLine::within("order0-gaussian", ONE, ONE, 0.0));
    let diff = |a: &Grassmann<C64>, b: &Grassmann<C64>| (a - b).max_abs_coeff();
    let scale = fo.haar.max_abs_coeff();
    rep.push(CheckLine::within(
        "order1-haar-vs-rearranged",
        C64::new(diff(&fo.haar, &fo.rearranged), 0.0),
        ZERO,
        1e-12 * scale.max(1.0),
    ));
    rep.push(CheckLine::within(
        "order1-haar-vs-gaussian",
        C64::new(diff(&fo.haar, &fo.gaussian), 0.0),
        ZERO,
        1e-12 * scale.max(1.0),
    ));
    if spec.in_stable_range() {
        let n = spec.n();
        for mu in 0..n {
            for nu in 0..n {
                for lam in 0..n {
                    for rho in 0..n {
                        let want = z_moment_formula(spec, mu, nu, lam, rho);
                        // Only pairs that are independent coordinates or odd
                        // generators are probed; dependent ones follow by symmetry.
                        let got = match z_moment_quadrature(spec, quad, (mu, nu), (lam, rho)) {
                            Ok(v) => v,
                            Err(CfError::Unsupported(_)) => continue,
                            Err(e) => return Err(e),
                        };
                        rep.push(CheckLine::within(
                            format!("<Z{mu}{nu} Zt{lam}{rho}>"),
                            got,
                            C64::new(want, 0.0),
                            1e-9,
                        ));
                    }
                }
            }
        }
    }
    Ok(rep)
}
