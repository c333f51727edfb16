//! Cayley-transform resolvent identities for a product `U = U_d U_f` of a
//! deterministic unitary and a diagonal random-phase unitary, the Gaussian
//! representation of the squared Green's function, and its random-phase
//! average at finite regularization `|β| < 1`.

use crate::error::{CfError, Result};
use crate::grassmann::{berezin, gp_exp, Grassmann};
use crate::haar::{sample_haar, GroupFamily, GroupSpec};
use crate::quadrature::{periodic_nodes, GaussLegendre};
use crate::report::{CheckLine, Verdict, VerificationReport};
use crate::scalar::C64;
use crate::stats::{mc_scalar, stream_rng, Estimate};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest dimension accepted by the identity checks.
pub const MAX_DIM: usize = 64;
/// Largest dimension for the Monte Carlo pipelines, whose Grassmann sector
/// is integrated exactly.
pub const MAX_PHASE_DIM: usize = 3;
/// Residual bound for the resolvent identities, relative to the resolvent.
pub const IDENTITY_TOL: f64 = 1e-10;

fn identity(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

fn inverse(m: &DMatrix<C64>, what: &str) -> Result<DMatrix<C64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| CfError::Singular(what.into()))
}

fn square(m: &DMatrix<C64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(CfError::Invalid(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || m.nrows() > MAX_DIM {
        return Err(CfError::UnsupportedDimension(format!(
            "d = {} (allowed 1..={MAX_DIM})",
            m.nrows()
        )));
    }
    Ok(m.nrows())
}

/// `A_g = (1 + g)(1 - g)⁻¹`.
pub fn cayley(g: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let d = square(g, "g")?;
    let one = identity(d);
    Ok((&one + g) * inverse(&(&one - g), "1 - g")?)
}

/// Smallest eigenvalue of the Hermitian part `(A + A†)/2`.
pub fn min_real_part(a: &DMatrix<C64>) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<C64>) -> f64 {
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn rel_residual(lhs: &DMatrix<C64>, rhs: &DMatrix<C64>) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(f64::MIN_POSITIVE)
}

/// Relative residuals of the three resolvent identities, in the order
/// `[factorized, h-adapted, g-adapted]`.
pub fn resolvent_residuals(g: &DMatrix<C64>, h: &DMatrix<C64>) -> Result<[f64; 3]> {
    let d = square(g, "g")?;
    if square(h, "h")? != d {
        return Err(CfError::Invalid("g and h differ in dimension".into()));
    }
    let one = identity(d);
    let lhs = inverse(&(&one - g * h), "1 - gh")?;
    let rg = inverse(&(&one - g), "1 - g")?;
    let rh = inverse(&(&one - h), "1 - h")?;
    let m = (cayley(g)? + cayley(h)?) * C64::new(0.5, 0.0);
    let mi = inverse(&m, "(A_g + A_h)/2")?;
    let factorized = &rh * &mi * &rg;
    let h_form = &rh - &rh * &mi * h * &rh;
    let g_form = &rg - g * &rg * &mi * &rg;
    Ok([
        rel_residual(&lhs, &factorized),
        rel_residual(&lhs, &h_form),
        rel_residual(&lhs, &g_form),
    ])
}

const IDENTITY_LABELS: [&str; 3] = ["factorized", "h-adapted", "g-adapted"];

pub fn verify_resolvent_identities(
    g: &DMatrix<C64>,
    h: &DMatrix<C64>,
) -> Result<VerificationReport> {
    let res = resolvent_residuals(g, h)?;
    let mut rep = VerificationReport::new(format!("resolvent-identities-d{}", g.nrows()));
    for (label, r) in IDENTITY_LABELS.iter().zip(res) {
        rep.push(CheckLine::within(
            *label,
            C64::new(r, 0.0),
            ZERO,
            IDENTITY_TOL,
        ));
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Model

/// `U_d` with resolvent parameters `α`, `β` and `ζ = αβ`.
#[derive(Clone, Debug)]
pub struct FloquetModel {
    pub ud: DMatrix<C64>,
    pub alpha: C64,
    pub beta: C64,
}

impl FloquetModel {
    pub fn new(ud: DMatrix<C64>, alpha: C64, beta: C64) -> Result<Self> {
        let d = square(&ud, "U_d")?;
        let defect = (ud.adjoint() * &ud - identity(d)).norm();
        if defect >= 1e-12 {
            return Err(CfError::Invalid(format!(
                "U_d is not unitary (defect {defect:e})"
            )));
        }
        if alpha.norm() >= 1.0 || beta.norm() >= 1.0 {
            return Err(CfError::Invalid(format!(
                "need |α| < 1 and |β| < 1, got {} and {}",
                alpha.norm(),
                beta.norm()
            )));
        }
        Ok(FloquetModel { ud, alpha, beta })
    }

    /// Model with a given `ζ` at regularization `β`, so `α = ζ/β`.
    pub fn with_zeta(ud: DMatrix<C64>, zeta: C64, beta: C64) -> Result<Self> {
        if beta.norm() == 0.0 {
            return Err(CfError::Invalid("β must be nonzero".into()));
        }
        Self::new(ud, zeta / beta, beta)
    }

    /// Haar-random `U_d` of dimension `d`.
    pub fn random(d: usize, alpha: C64, beta: C64, seed: u64) -> Result<Self> {
        let spec = GroupSpec::new(GroupFamily::Unitary, d)?;
        Self::new(sample_haar(spec, &mut stream_rng(seed, 0)), alpha, beta)
    }

    pub fn d(&self) -> usize {
        self.ud.nrows()
    }

    pub fn zeta(&self) -> C64 {
        self.alpha * self.beta
    }

    /// `1 - ζ U_d U_f` for the phases `θ`.
    fn resolvent_arg(&self, theta: &PhaseDisorder) -> DMatrix<C64> {
        let zeta = self.zeta();
        let d = self.d();
        DMatrix::from_fn(d, d, |i, l| {
            let delta = if i == l { ONE } else { ZERO };
            delta - zeta * self.ud[(i, l)] * C64::from_polar(1.0, theta.theta[l])
        })
    }

    /// `⟨j|(1 - ζ U_d U_f)⁻¹|k⟩`.
    pub fn green(&self, theta: &PhaseDisorder, j: usize, k: usize) -> Result<C64> {
        let m = self.resolvent_arg(theta);
        let mut e = nalgebra::DVector::from_element(self.d(), ZERO);
        e[k] = ONE;
        let x = m
            .lu()
            .solve(&e)
            .ok_or_else(|| CfError::Singular("1 - ζ U_d U_f".into()))?;
        Ok(x[j])
    }
}

/// The swap on two sites.
pub fn swap2() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// Site phases of the diagonal random unitary `U_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseDisorder {
    pub theta: Vec<f64>,
}

impl PhaseDisorder {
    pub fn sample<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        PhaseDisorder {
            theta: (0..d).map(|_| rng.random::<f64>() * 2.0 * PI).collect(),
        }
    }

    pub fn uf(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.theta.len(),
            self.theta.iter().map(|&t| C64::from_polar(1.0, t)),
        ))
    }
}

fn check_sites(model: &FloquetModel, theta: &PhaseDisorder, j: usize, k: usize) -> Result<()> {
    let d = model.d();
    if theta.theta.len() != d {
        return Err(CfError::Invalid(format!(
            "{} phases for d = {d}",
            theta.theta.len()
        )));
    }
    if j >= d || k >= d {
        return Err(CfError::Invalid(format!(
            "sites ({j}, {k}) out of range for d = {d}"
        )));
    }
    if j == k {
        return Err(CfError::Invalid(
            "the factorization needs distinct sites j ≠ k".into(),
        ));
    }
    Ok(())
}

/// The two Cayley sums `½(A_{αU_d} + A_{βU_f})` and
/// `½(A_{ᾱU_d⁻¹} + A_{β̄U_f⁻¹})`.
fn cayley_sums(
    model: &FloquetModel,
    theta: &PhaseDisorder,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let half = C64::new(0.5, 0.0);
    let uf = theta.uf();
    let ret = (cayley(&(&model.ud * model.alpha))? + cayley(&(&uf * model.beta))?) * half;
    let adv = (cayley(&(model.ud.adjoint() * model.alpha.conj()))?
        + cayley(&(uf.adjoint() * model.beta.conj()))?)
        * half;
    Ok((ret, adv))
}

/// `|β|² / (|1 - β e^{iθ_j}|² |1 - β e^{iθ_k}|²)`.
fn phase_prefactor(model: &FloquetModel, theta: &PhaseDisorder, j: usize, k: usize) -> f64 {
    let b = model.beta;
    let den = |t: f64| (ONE - b * C64::from_polar(1.0, t)).norm_sqr();
    b.norm_sqr() / (den(theta.theta[j]) * den(theta.theta[k]))
}

/// Right-hand side of the factorized squared Green's function.
pub fn greens_cayley_rhs(
    model: &FloquetModel,
    theta: &PhaseDisorder,
    j: usize,
    k: usize,
) -> Result<C64> {
    check_sites(model, theta, j, k)?;
    let (ret, adv) = cayley_sums(model, theta)?;
    let ri = inverse(&ret, "retarded Cayley sum")?;
    let ai = inverse(&adv, "advanced Cayley sum")?;
    Ok(ri[(j, k)] * ai[(k, j)] * phase_prefactor(model, theta, j, k))
}

pub fn greens_cayley_factorization(
    model: &FloquetModel,
    theta: &PhaseDisorder,
    j: usize,
    k: usize,
) -> Result<VerificationReport> {
    let rhs = greens_cayley_rhs(model, theta, j, k)?;
    let lhs = C64::new(model.green(theta, j, k)?.norm_sqr(), 0.0);
    let mut rep = VerificationReport::new(format!("greens-cayley-d{}", model.d()));
    let scale = lhs.norm().max(rhs.norm());
    rep.push(CheckLine::within(
        format!("|G_{j}{k}|^2"),
        rhs,
        lhs,
        IDENTITY_TOL * scale + 1e-300,
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Gaussian integrals

/// `∫ e^{-ψ̄ B ψ} Π_{i∈S} ψ̄_i ψ_i` for every subset mask `S`, by Berezin
/// integration over `ψ̄_i = ξ_{2i}`, `ψ_i = ξ_{2i+1}`. The measure is fixed by
/// `∫ e^{-ψ̄ψ} = 1` per site, so the empty subset gives `Det B`.
pub fn fermion_pair_moments(b: &DMatrix<C64>) -> Result<Vec<C64>> {
    let d = square(b, "B")?;
    if d > 8 {
        return Err(CfError::UnsupportedDimension(format!(
            "fermionic Gaussian with d = {d} > 8"
        )));
    }
    let n_gen = 2 * d;
    let gen = |i: usize| Grassmann::<C64>::generator(n_gen, i);
    let mut form = Grassmann::zero(n_gen)?;
    for i in 0..d {
        for l in 0..d {
            if b[(i, l)] != ZERO {
                form = &form - &(&gen(2 * i)? * &gen(2 * l + 1)?).scale(&b[(i, l)]);
            }
        }
    }
    let weight = gp_exp(&form)?;
    let order: Vec<usize> = (0..d).flat_map(|i| [2 * i + 1, 2 * i]).collect();
    let pairs: Vec<Grassmann<C64>> = (0..d)
        .map(|i| Ok(&gen(2 * i)? * &gen(2 * i + 1)?))
        .collect::<Result<_>>()?;
    (0..1usize << d)
        .map(|s| {
            let mut x = weight.clone();
            for (i, p) in pairs.iter().enumerate() {
                if s >> i & 1 == 1 {
                    x = &x * p;
                }
            }
            Ok(berezin(&x, &order)?.coeff(0))
        })
        .collect()
}

/// Entry `(M⁻¹)_{jk}` by cofactors, independent of any LU inverse.
fn inverse_entry_by_cofactor(m: &DMatrix<C64>, j: usize, k: usize) -> C64 {
    let minor = m.clone().remove_row(k).remove_column(j);
    let sign = if (j + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let cof = if minor.nrows() == 0 {
        ONE
    } else {
        minor.determinant()
    };
    cof * sign / m.determinant()
}

/// Closed-form Gaussian evaluation of both Cayley-sum matrix elements.
#[derive(Clone, Debug, Serialize)]
pub struct GaussianSector {
    /// `∫ e^{-φ̄Mφ} φ_j φ̄_k = (M⁻¹)_{jk} / Det M`.
    pub bosonic: C64,
    /// `∫ e^{-ψ̄Mψ} = Det M`.
    pub fermionic: C64,
    /// `Det M` from LU.
    pub det: C64,
}

fn gaussian_sector(m: &DMatrix<C64>, j: usize, k: usize) -> Result<GaussianSector> {
    let det = m.determinant();
    let bosonic = inverse_entry_by_cofactor(m, j, k) / det;
    let fermionic = fermion_pair_moments(m)?[0];
    Ok(GaussianSector {
        bosonic,
        fermionic,
        det,
    })
}

pub fn gaussian_rep_check(
    model: &FloquetModel,
    theta: &PhaseDisorder,
    j: usize,
    k: usize,
) -> Result<VerificationReport> {
    check_sites(model, theta, j, k)?;
    let (ret, adv) = cayley_sums(model, theta)?;
    for (m, name) in [(&ret, "retarded"), (&adv, "advanced")] {
        let lam = min_real_part(m);
        if lam <= 0.0 {
            return Err(CfError::Invalid(format!(
                "{name} Cayley sum has non-positive real part ({lam:e})"
            )));
        }
    }
    // The advanced form ψ M ψ̄ reads ψ̄ Mᵀ ψ, and ⟨ψ_j ψ̄_k⟩ = (Mᵀ)⁻¹_{jk}.
    let r = gaussian_sector(&ret, j, k)?;
    let a = gaussian_sector(&adv.transpose(), j, k)?;
    let gi =
        (r.bosonic * r.fermionic) * (a.bosonic * a.fermionic) * phase_prefactor(model, theta, j, k);
    let direct = greens_cayley_rhs(model, theta, j, k)?;
    let mut rep = VerificationReport::new(format!("gaussian-rep-d{}", model.d()));
    rep.push(CheckLine::within(
        "retarded Det_F / Det_B",
        r.fermionic / r.det,
        ONE,
        1e-10,
    ));
    rep.push(CheckLine::within(
        "advanced Det_F / Det_B",
        a.fermionic / a.det,
        ONE,
        1e-10,
    ));
    let scale = direct.norm().max(gi.norm());
    rep.push(CheckLine::within(
        "gaussian vs factorized",
        gi,
        direct,
        1e-9 * scale + 1e-300,
    ));
    Ok(rep)
}

/// Sweep over random contraction pairs and random models with
/// dimensions cycling through `1..=d_max`. Reports the worst residual per
/// identity and the smallest real part seen for contractions.
pub fn resolvent_sweep(cases: usize, d_max: usize, seed: u64) -> Result<VerificationReport> {
    if d_max == 0 || d_max > MAX_DIM {
        return Err(CfError::UnsupportedDimension(format!("d_max = {d_max}")));
    }
    let per_case: Vec<[f64; 5]> = (0..cases)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let d = 1 + c % d_max;
            let g = random_contraction(d, 0.05 + 0.9 * rng.random::<f64>(), &mut rng);
            let h = random_contraction(d, 0.05 + 0.9 * rng.random::<f64>(), &mut rng);
            let res = resolvent_residuals(&g, &h)?;
            let pos = min_real_part(&cayley(&g)?);
            let spec = GroupSpec::new(GroupFamily::Unitary, d)?;
            let ud = sample_haar(spec, &mut rng);
            let alpha = C64::from_polar(0.9 * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
            let beta = C64::from_polar(0.9 * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>());
            let model = FloquetModel::new(ud, alpha, beta)?;
            let theta = PhaseDisorder::sample(d, &mut rng);
            let gf = if d >= 2 {
                let (j, k) = (0, d - 1);
                let lhs = model.green(&theta, j, k)?.norm_sqr();
                let rhs = greens_cayley_rhs(&model, &theta, j, k)?;
                (rhs - lhs).norm() / lhs.max(f64::MIN_POSITIVE)
            } else {
                0.0
            };
            Ok([res[0], res[1], res[2], gf, pos])
        })
        .collect::<Result<_>>()?;
    let worst = |i: usize| per_case.iter().map(|r| r[i]).fold(0.0, f64::max);
    let mut rep = VerificationReport::new(format!("resolvent-sweep-{cases}x-d{d_max}"));
    for (i, label) in IDENTITY_LABELS.iter().enumerate() {
        rep.push(CheckLine::within(
            format!("max {label}"),
            C64::new(worst(i), 0.0),
            ZERO,
            IDENTITY_TOL,
        ));
    }
    rep.push(CheckLine::within(
        "max greens-cayley",
        C64::new(worst(3), 0.0),
        ZERO,
        IDENTITY_TOL,
    ));
    let pos = per_case.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    let line = CheckLine::within(
        "min Re A_g (contractions)",
        C64::new(pos, 0.0),
        ZERO,
        f64::INFINITY,
    );
    rep.push(line.with_verdict(if pos > 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    }));
    Ok(rep)
}

/// Ginibre matrix rescaled to spectral norm `r`.
pub fn random_contraction<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let s = spectral_norm(&m);
    m * C64::new(r / s, 0.0)
}

/// Complex normal with `E|z|² = 1`.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

// ---------------------------------------------------------------------------
// Phase kernels

/// Phase averages at one site for a real bilinear `q`.
#[derive(Clone, Debug, Serialize)]
pub struct PhaseKernels {
    pub q: f64,
    pub beta: C64,
    /// `(2π)⁻¹ ∫ dθ |1 - βe^{iθ}|⁻² exp(..)`; absent in the unitary limit.
    pub delta_value: Option<C64>,
    /// Width `2(1 - |β|²)/(1 + |β|²)` of the regularized δ; zero at `|β| = 1`.
    pub delta_width: f64,
    /// `(2π)⁻¹ ∫ dθ exp(..)`, tending to `e^{-|q|/2}`.
    pub cauchy: C64,
}

/// Trapezoid nodes adequate for an integrand analytic in `|w| < 1/|β|`.
pub fn phase_nodes(beta: C64, min_nodes: usize) -> usize {
    let gap = (1.0 - beta.norm()).max(1e-6);
    min_nodes.max((40.0 / gap).ceil() as usize)
}

/// `A_{βe^{iθ}}` at the trapezoid nodes, with the weights `|1 - βe^{iθ}|⁻²`.
fn kernel_table(beta: C64, nodes: usize) -> Vec<(C64, f64)> {
    periodic_nodes(nodes)
        .into_iter()
        .map(|(t, _)| {
            let w = beta * C64::from_polar(1.0, t);
            ((ONE + w) / (ONE - w), 1.0 / (ONE - w).norm_sqr())
        })
        .collect()
}

/// Phase averages for `q` split as `b = max(q, 0)` in the retarded sector and
/// `f = max(-q, 0)` in the advanced one. At `|β| = 1` the closed forms are
/// returned and the δ-family is reported only through its width.
pub fn phase_average_kernels(q: f64, beta: C64, min_nodes: usize) -> Result<PhaseKernels> {
    let r = beta.norm();
    if r > 1.0 + 1e-15 {
        return Err(CfError::Invalid(format!("|β| = {r} exceeds 1")));
    }
    if (r - 1.0).abs() <= 1e-15 {
        return Ok(PhaseKernels {
            q,
            beta,
            delta_value: None,
            delta_width: 0.0,
            cauchy: C64::new((-q.abs() / 2.0).exp(), 0.0),
        });
    }
    let (b, f) = (q.max(0.0), (-q).max(0.0));
    let table = kernel_table(beta, phase_nodes(beta, min_nodes));
    let n = table.len() as f64;
    let (mut delta, mut cauchy) = (ZERO, ZERO);
    for (a, w) in &table {
        let e = (-(a * b + a.conj() * f) * 0.5).exp();
        delta += e * *w;
        cauchy += e;
    }
    Ok(PhaseKernels {
        q,
        beta,
        delta_value: Some(delta / n),
        delta_width: 2.0 * (1.0 - r * r) / (1.0 + r * r),
        cauchy: cauchy / n,
    })
}

/// `(2π)⁻¹ ∫_ℝ dx e^{-ixq} / (x² + 1/4)` by Gauss-Legendre panels between
/// the zeros of `cos(qx)` and alternating-series acceleration of the panel
/// sums. Returns the value and the change between two acceleration depths.
pub fn cauchy_fourier_quadrature(q: f64) -> (f64, f64) {
    let gl = GaussLegendre::new(24);
    let f = |x: f64| 1.0 / (x * x + 0.25);
    let q = q.abs();
    if q == 0.0 {
        // x = tan(u)/2 makes the integrand constant on u ∈ [0, π/2).
        let s: f64 = gl.on(0.0, PI / 2.0).iter().map(|(_, w)| 2.0 * w).sum();
        return (s / PI, 0.0);
    }
    let half = PI / q;
    let panel = |k: usize| -> f64 {
        let a = if k == 0 { 0.0 } else { (k as f64 - 0.5) * half };
        let b = (k as f64 + 0.5) * half;
        gl.on(a, b)
            .iter()
            .map(|(x, w)| w * (q * x).cos() * f(*x))
            .sum()
    };
    let terms: Vec<f64> = (0..48)
        .map(|k| if k % 2 == 0 { panel(k) } else { -panel(k) })
        .collect();
    let s40 = alternating_sum(&terms[..40]);
    let s48 = alternating_sum(&terms);
    (s48 / PI, (s48 - s40).abs() / PI)
}

/// `Σ (-1)^k a_k` by the Cohen-Rodriguez Villegas-Zagier weights.
fn alternating_sum(a: &[f64]) -> f64 {
    let n = a.len();
    let mut d = (3.0 + 8f64.sqrt()).powi(n as i32);
    d = (d + 1.0 / d) / 2.0;
    let (mut b, mut c, mut s) = (-1.0, -d, 0.0);
    for (k, ak) in a.iter().enumerate() {
        c = b - c;
        s += c * ak;
        let (kf, nf) = (k as f64, n as f64);
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

// ---------------------------------------------------------------------------
// Random-phase average

/// Sample sizes, seeds and θ resolution for the random-phase comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhaseAverageConfig {
    pub field_samples: usize,
    pub phase_samples: usize,
    pub field_seed: u64,
    pub phase_seed: u64,
    pub min_nodes: usize,
}

impl Default for PhaseAverageConfig {
    fn default() -> Self {
        PhaseAverageConfig {
            field_samples: 1_000_000,
            phase_samples: 40_000,
            field_seed: 17,
            phase_seed: 29,
            min_nodes: 64,
        }
    }
}

/// `E |⟨j|(1 - ζ U_d U_f)⁻¹|k⟩|²` over independent uniform phases. Also
/// accepts `j = k`.
pub fn phase_average_lhs(
    model: &FloquetModel,
    j: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let d = model.d();
    if j >= d || k >= d {
        return Err(CfError::Invalid(format!(
            "sites ({j}, {k}) out of range for d = {d}"
        )));
    }
    model.green(
        &PhaseDisorder {
            theta: vec![0.3; d],
        },
        j,
        k,
    )?;
    Ok(mc_scalar(seed, samples, |rng| {
        let theta = PhaseDisorder::sample(d, rng);
        let g = model.green(&theta, j, k).unwrap_or(ZERO);
        C64::new(g.norm_sqr(), 0.0)
    }))
}

/// Precision factors of the proposal mixture. The narrower component puts
/// more draws near the peak of the regularized δ at small fields.
const PROPOSAL_PRECISIONS: [f64; 2] = [1.0, 2.0];

/// Bosonic sampler for `exp(-v̄ B v)`: an equal-weight mixture of complex
/// Gaussians with precision `c·H`, `H` the Hermitian part of `B`, one per
/// factor `c`.
struct GaussianSampler {
    b: DMatrix<C64>,
    components: Vec<(DMatrix<C64>, DMatrix<C64>, f64)>,
}

impl GaussianSampler {
    fn new(b: DMatrix<C64>, factors: &[f64]) -> Result<Self> {
        let h = (&b + b.adjoint()) * C64::new(0.5, 0.0);
        let components = factors
            .iter()
            .map(|&c| {
                let hc = &h * C64::new(c, 0.0);
                let chol = nalgebra::Cholesky::new(hc.clone()).ok_or_else(|| {
                    CfError::Invalid("Cayley form has non-positive real part".into())
                })?;
                let l = chol.l();
                let transform = inverse(&l.adjoint(), "Cholesky factor")?;
                let det: f64 = l.diagonal().iter().map(|x| x.norm_sqr()).product();
                Ok((hc, transform, det))
            })
            .collect::<Result<_>>()?;
        Ok(GaussianSampler { b, components })
    }

    /// A draw `v` and its weight, so that
    /// `∫ Π d²v/π e^{-v̄Bv} F(v) = E[weight · F(v)]`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (nalgebra::DVector<C64>, C64) {
        let d = self.b.nrows();
        let pick = rng.random_range(0..self.components.len());
        let z = nalgebra::DVector::from_fn(d, |_, _| complex_normal(rng));
        let v = &self.components[pick].1 * z;
        let quad = |m: &DMatrix<C64>| (v.adjoint() * m * &v)[(0, 0)];
        let density: f64 = self
            .components
            .iter()
            .map(|(hc, _, det)| det * (-quad(hc).re).exp())
            .sum::<f64>()
            / self.components.len() as f64;
        let target = (-quad(&self.b)).exp();
        (v.clone(), target / density)
    }
}

/// Taylor coefficients of a site kernel in the nilpotent parts of the two
/// bilinears: `[K, ∂_b K, ∂_f K, ∂_b ∂_f K]`.
fn site_kernel(table: &[(C64, f64)], b: f64, f: f64, weighted: bool) -> [C64; 4] {
    let mut out = [ZERO; 4];
    for (a, w) in table {
        let e = (-(a * b + a.conj() * f) * 0.5).exp() * if weighted { *w } else { 1.0 };
        let (da, df) = (-a * 0.5, -a.conj() * 0.5);
        out[0] += e;
        out[1] += e * da;
        out[2] += e * df;
        out[3] += e * da * df;
    }
    let n = table.len() as f64;
    out.map(|x| x / n)
}

/// Regularized right-hand side: bosonic components sampled from the
/// deterministic Cayley forms, the phase average done per site by the
/// θ-quadrature kernel, and the Grassmann components integrated exactly.
pub fn phase_average_rhs(
    model: &FloquetModel,
    j: usize,
    k: usize,
    samples: usize,
    seed: u64,
    min_nodes: usize,
) -> Result<Estimate> {
    let d = model.d();
    check_sites(
        model,
        &PhaseDisorder {
            theta: vec![0.0; d],
        },
        j,
        k,
    )?;
    if d > MAX_PHASE_DIM {
        return Err(CfError::UnsupportedDimension(format!(
            "d = {d} exceeds {MAX_PHASE_DIM}"
        )));
    }
    let half = C64::new(0.5, 0.0);
    let a_ret = cayley(&(&model.ud * model.alpha))?;
    let a_adv = cayley(&(model.ud.adjoint() * model.alpha.conj()))?;
    // Retarded form ½ φ̄ A φ; advanced form ½ ψ A' ψ̄ = ½ ψ̄ A'ᵀ ψ.
    let b_ret = &a_ret * half;
    let b_adv = a_adv.transpose() * half;
    let d_ret = fermion_pair_moments(&b_ret)?;
    let d_adv = fermion_pair_moments(&b_adv)?;
    let table = kernel_table(model.beta, phase_nodes(model.beta, min_nodes));
    let s_ret = GaussianSampler::new(b_ret, &PROPOSAL_PRECISIONS)?;
    let s_adv = GaussianSampler::new(b_adv, &PROPOSAL_PRECISIONS)?;
    let pref = model.beta.norm_sqr();
    Ok(mc_scalar(seed, samples, |rng| {
        let (phi, w_ret) = s_ret.draw(rng);
        let (psi, w_adv) = s_adv.draw(rng);
        let kernels: Vec<[C64; 4]> = (0..d)
            .map(|i| {
                site_kernel(
                    &table,
                    phi[i].norm_sqr(),
                    psi[i].norm_sqr(),
                    i == j || i == k,
                )
            })
            .collect();
        let mut total = ZERO;
        for sb in 0..1usize << d {
            for sf in 0..1usize << d {
                let mut prod = d_ret[sb] * d_adv[sf];
                for (i, kern) in kernels.iter().enumerate() {
                    prod *= kern[(sb >> i & 1) | (sf >> i & 1) << 1];
                }
                total += prod;
            }
        }
        let sources = phi[j] * phi[k].conj() * psi[k].conj() * psi[j];
        w_ret * w_adv * total * sources * pref
    }))
}

/// Loose comparison of the two Monte Carlo pipelines. Pass needs agreement
/// within three combined standard errors that are themselves below 5% of the
/// value; a clear disagreement fails; anything else is inconclusive.
pub fn phase_average_verdict(lhs: &Estimate, rhs: &Estimate) -> Verdict {
    let scale = lhs.mean.norm();
    if lhs.stderr() > 0.2 * scale || rhs.stderr() > 0.2 * rhs.mean.norm() {
        return Verdict::Inconclusive;
    }
    let sigma3 = 3.0 * lhs.stderr().hypot(rhs.stderr());
    let diff = (lhs.mean - rhs.mean).norm();
    if diff <= sigma3 && sigma3 <= 0.05 * scale {
        Verdict::Pass
    } else if diff > sigma3 && diff > 0.05 * scale {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

pub fn verify_random_phase_average(
    model: &FloquetModel,
    j: usize,
    k: usize,
    cfg: &PhaseAverageConfig,
) -> Result<VerificationReport> {
    let lhs = phase_average_lhs(model, j, k, cfg.phase_samples, cfg.phase_seed)?;
    let rhs = phase_average_rhs(
        model,
        j,
        k,
        cfg.field_samples,
        cfg.field_seed,
        cfg.min_nodes,
    )?;
    let mut rep = VerificationReport::new(format!("random-phase-average-d{}", model.d()));
    let line = CheckLine::statistical(
        format!("E|G_{j}{k}|^2"),
        rhs.mean,
        rhs.stderr(),
        lhs.mean,
        lhs.stderr(),
        3.0,
    );
    let tol = line.tolerance;
    rep.push(line.with_verdict(phase_average_verdict(&lhs, &rhs)));
    rep.note(format!(
        "phases: {} ± {:.2e} ({} samples); fields: {} ± {:.2e} ({} samples); 3σ = {tol:.2e}; β = {}",
        lhs.mean.re,
        lhs.stderr(),
        lhs.samples,
        rhs.mean.re,
        rhs.stderr(),
        rhs.samples,
        model.beta
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Hyperbolic symmetry in the unitary limit

/// Multiply every generator `i` by `scale[i]`.
pub fn scale_generators(x: &Grassmann<C64>, scale: &[f64]) -> Result<Grassmann<C64>> {
    let terms = x
        .terms()
        .iter()
        .map(|(m, c)| {
            let f: f64 = (0..scale.len())
                .filter(|i| m >> i & 1 == 1)
                .map(|i| scale[i])
                .product();
            (*m, c * f)
        })
        .collect();
    Grassmann::from_terms(x.n_gen(), terms)
}

/// Field configuration: bosonic components as numbers (barred ones
/// independent), fermionic components as generators `4i..4i+3` in the order
/// `φ¹, φ̄₁, ψ¹, ψ̄₁`.
#[derive(Clone, Debug)]
pub struct HyperbolicFields {
    pub phi: Vec<C64>,
    pub phibar: Vec<C64>,
    pub psi: Vec<C64>,
    pub psibar: Vec<C64>,
}

impl HyperbolicFields {
    pub fn random(d: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 1);
        let mut v = || (0..d).map(|_| complex_normal(&mut rng)).collect::<Vec<_>>();
        HyperbolicFields {
            phi: v(),
            phibar: v(),
            psi: v(),
            psibar: v(),
        }
    }

    fn rotated(&self, s: f64) -> Self {
        let (up, dn) = (s.exp(), (-s).exp());
        let sc = |v: &[C64], f: f64| v.iter().map(|x| x * f).collect();
        HyperbolicFields {
            phi: sc(&self.phi, up),
            phibar: sc(&self.phibar, dn),
            psi: sc(&self.psi, dn),
            psibar: sc(&self.psibar, up),
        }
    }
}

struct Bilinears {
    n_gen: usize,
    fields: HyperbolicFields,
}

impl Bilinears {
    fn gen(&self, site: usize, slot: usize) -> Result<Grassmann<C64>> {
        Grassmann::generator(self.n_gen, 4 * site + slot)
    }

    /// `φ̄_ν(i) φ^ν(l)`.
    fn phi_pair(&self, i: usize, l: usize) -> Result<Grassmann<C64>> {
        let odd = &self.gen(i, 1)? * &self.gen(l, 0)?;
        Ok(odd.add_scalar(self.fields.phibar[i] * self.fields.phi[l]))
    }

    /// `(-1)^{|ν|} ψ^ν(i) ψ̄_ν(l)`.
    fn psi_pair(&self, i: usize, l: usize) -> Result<Grassmann<C64>> {
        let odd = &self.gen(i, 2)? * &self.gen(l, 3)?;
        Ok((-&odd).add_scalar(self.fields.psi[i] * self.fields.psibar[l]))
    }
}

/// Exponent `-½ φ̄ A_U φ - ½ (-1)^{|ν|} ψ A_{U⁻¹} ψ̄` in the unitary limit.
pub fn unitary_limit_exponent(
    ud: &DMatrix<C64>,
    fields: &HyperbolicFields,
) -> Result<Grassmann<C64>> {
    let d = square(ud, "U_d")?;
    let a = cayley(ud)?;
    let a_inv = cayley(&ud.adjoint())?;
    let bl = Bilinears {
        n_gen: 4 * d,
        fields: fields.clone(),
    };
    let mut e = Grassmann::zero(4 * d)?;
    for i in 0..d {
        for l in 0..d {
            e = &e - &bl.phi_pair(i, l)?.scale(&(a[(i, l)] * 0.5));
            e = &e - &bl.psi_pair(i, l)?.scale(&(a_inv[(i, l)] * 0.5));
        }
    }
    Ok(e)
}

/// Single-term form `-½ (A_U)_{il} (φ̄_ν(i) φ^ν(l) - (-1)^{|ν|} ψ^ν(i) ψ̄_ν(l))`.
pub fn hyperbolic_exponent(ud: &DMatrix<C64>, fields: &HyperbolicFields) -> Result<Grassmann<C64>> {
    let d = square(ud, "U_d")?;
    let a = cayley(ud)?;
    let bl = Bilinears {
        n_gen: 4 * d,
        fields: fields.clone(),
    };
    let mut e = Grassmann::zero(4 * d)?;
    for i in 0..d {
        for l in 0..d {
            let form = &bl.phi_pair(i, l)? - &bl.psi_pair(i, l)?;
            e = &e - &form.scale(&(a[(i, l)] * 0.5));
        }
    }
    Ok(e)
}

/// `q(i) = φ̄_ν(i) φ^ν(i) - ψ̄_ν(i) ψ^ν(i)`.
pub fn site_bilinear(d: usize, fields: &HyperbolicFields, i: usize) -> Result<Grassmann<C64>> {
    let bl = Bilinears {
        n_gen: 4 * d,
        fields: fields.clone(),
    };
    Ok(&bl.phi_pair(i, i)? - &bl.psi_pair(i, i)?)
}

/// The unitary-limit exponent against its single-term hyperbolic form, and
/// both, with every `q(i)`, under `φ → e^s φ`, `φ̄ → e^{-s} φ̄`,
/// `ψ → e^{-s} ψ`, `ψ̄ → e^s ψ̄`.
pub fn hyperbolic_symmetry_check(
    ud: &DMatrix<C64>,
    s_values: &[f64],
    seed: u64,
) -> Result<VerificationReport> {
    let d = square(ud, "U_d")?;
    let fields = HyperbolicFields::random(d, seed);
    let two = unitary_limit_exponent(ud, &fields)?;
    let one = hyperbolic_exponent(ud, &fields)?;
    let scale = two.max_abs_coeff().max(1.0);
    let mut rep = VerificationReport::new(format!("hyperbolic-symmetry-d{d}"));
    let diff = |a: &Grassmann<C64>, b: &Grassmann<C64>| C64::new((a - b).max_abs_coeff(), 0.0);
    rep.push(CheckLine::within(
        "A_{U^-1} = -A_U fold",
        diff(&two, &one),
        ZERO,
        1e-12 * scale,
    ));
    for &s in s_values {
        let (up, dn) = (s.exp(), (-s).exp());
        let gens: Vec<f64> = (0..4 * d)
            .map(|g| if g % 4 == 0 || g % 4 == 3 { up } else { dn })
            .collect();
        let rot = fields.rotated(s);
        let e_rot = scale_generators(&hyperbolic_exponent(ud, &rot)?, &gens)?;
        rep.push(CheckLine::within(
            format!("exponent invariant s={s}"),
            diff(&e_rot, &one),
            ZERO,
            1e-12 * scale,
        ));
        let mut worst = 0.0f64;
        for i in 0..d {
            let q = site_bilinear(d, &fields, i)?;
            let q_rot = scale_generators(&site_bilinear(d, &rot, i)?, &gens)?;
            worst = worst.max((&q_rot - &q).max_abs_coeff());
        }
        rep.push(CheckLine::within(
            format!("q(i) invariant s={s}"),
            C64::new(worst, 0.0),
            ZERO,
            1e-12 * scale,
        ));
    }
    Ok(rep)
}
