//! Haar sampling on U(N), O(N) and Sp(N), moment estimation, and averages of
//! characteristic-polynomial ratios.

use crate::error::{CfError, Result};
use crate::quadrature::periodic_nodes;
use crate::report::{CheckLine, VerificationReport};
use crate::scalar::C64;
use crate::stats::{mc_scalar, Estimate};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFamily {
    Unitary,
    Orthogonal,
    Symplectic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GroupSpec {
    pub family: GroupFamily,
    pub n: usize,
}

impl GroupSpec {
    pub fn new(family: GroupFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CfError::UnsupportedDimension("N = 0".into()));
        }
        if n > MAX_DIM {
            return Err(CfError::UnsupportedDimension(format!(
                "N = {n} exceeds {MAX_DIM}"
            )));
        }
        if family == GroupFamily::Symplectic && n % 2 == 1 {
            return Err(CfError::UnsupportedDimension(format!(
                "Sp(N) needs even N, got {n}"
            )));
        }
        Ok(GroupSpec { family, n })
    }
}

/// Lower-index symplectic form `ε = [[0, 1], [-1, 0]]` in N/2 blocks.
pub fn epsilon_lower(n: usize) -> DMatrix<f64> {
    let m = n / 2;
    let mut e = DMatrix::zeros(n, n);
    for i in 0..m {
        e[(i, m + i)] = 1.0;
        e[(m + i, i)] = -1.0;
    }
    e
}

/// Upper-index form with `ε^{ij} ε_{jk} = δ^i_k`, which is `-ε_lower`.
pub fn epsilon_upper(n: usize) -> DMatrix<f64> {
    -epsilon_lower(n)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn sample_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn sample_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if rng.random::<bool>() {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q.map(|x| C64::new(x, 0.0))
}

/// Quaternionic Gram-Schmidt: each new column `v` is paired with `-ε v̄`.
fn sample_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let m = n / 2;
    let eps = epsilon_lower(n);
    let mut g = DMatrix::<C64>::zeros(n, n);
    for k in 0..m {
        let mut v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for prev in (0..k).flat_map(|i| [i, m + i]) {
                let dot: C64 = (0..n).map(|a| g[(a, prev)].conj() * v[a]).sum();
                for (a, va) in v.iter_mut().enumerate() {
                    *va -= g[(a, prev)] * dot;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (a, va) in v.iter().enumerate() {
            g[(a, k)] = va / norm;
        }
        for a in 0..n {
            let mut w = C64::new(0.0, 0.0);
            for b in 0..n {
                w -= g[(b, k)].conj() * eps[(a, b)];
            }
            g[(a, m + k)] = w;
        }
    }
    g
}

/// One Haar-distributed group element as a complex matrix.
pub fn sample_haar<R: Rng + ?Sized>(spec: GroupSpec, rng: &mut R) -> DMatrix<C64> {
    match spec.family {
        GroupFamily::Unitary => sample_unitary(spec.n, rng),
        GroupFamily::Orthogonal => sample_orthogonal(spec.n, rng),
        GroupFamily::Symplectic => sample_symplectic(spec.n, rng),
    }
}

/// One factor `g^row_col`, or `(g⁻¹)^row_col` when `inverse` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub inverse: bool,
    pub row: usize,
    pub col: usize,
}

impl Factor {
    pub fn g(row: usize, col: usize) -> Self {
        Factor {
            inverse: false,
            row,
            col,
        }
    }
    pub fn g_inv(row: usize, col: usize) -> Self {
        Factor {
            inverse: true,
            row,
            col,
        }
    }
}

/// Monte Carlo estimate of `∫ dg Π factors`.
pub fn estimate_moment(
    spec: GroupSpec,
    factors: &[Factor],
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    for f in factors {
        if f.row >= spec.n || f.col >= spec.n {
            return Err(CfError::Invalid(format!(
                "index ({}, {}) out of range for N = {}",
                f.row, f.col, spec.n
            )));
        }
    }
    let needs_inverse = factors.iter().any(|f| f.inverse);
    Ok(mc_scalar(seed, samples, |rng| {
        let g = sample_haar(spec, rng);
        // Group elements are unitary, so g⁻¹ = g†.
        let gi = if needs_inverse {
            g.adjoint()
        } else {
            DMatrix::zeros(0, 0)
        };
        factors.iter().fold(C64::new(1.0, 0.0), |acc, f| {
            acc * if f.inverse {
                gi[(f.row, f.col)]
            } else {
                g[(f.row, f.col)]
            }
        })
    }))
}

/// Closed-form second moments `∫ g^i_k g^j_l` for O(N) and Sp(N), and
/// `∫ g^i_j (g⁻¹)^k_l` for U(N).
pub fn second_moment_exact(
    family: GroupFamily,
    n: usize,
    i: usize,
    k: usize,
    j: usize,
    l: usize,
) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let nf = n as f64;
    match family {
        GroupFamily::Orthogonal => d(i, j) * d(l, k) / nf,
        GroupFamily::Symplectic => {
            let up = epsilon_upper(n);
            let lo = epsilon_lower(n);
            up[(i, j)] * lo[(l, k)] / nf
        }
        // Arguments read as (i, j, k, l) for g^i_j (g⁻¹)^k_l.
        GroupFamily::Unitary => d(i, l) * d(k, j) / nf,
    }
}

/// Monte Carlo average of `Π_ν Det(α_ν - g) / Π_μ Det(α_μ - g)`.
pub fn haar_expect_charpoly(
    spec: GroupSpec,
    numerator: &[C64],
    denominator: &[C64],
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if let Some(a) = denominator.iter().find(|a| a.norm() <= 1.0) {
        return Err(CfError::Invalid(format!(
            "denominator parameter {a} must lie outside the unit circle"
        )));
    }
    let n = spec.n;
    Ok(mc_scalar(seed, samples, |rng| {
        let g = sample_haar(spec, rng);
        let det_at = |a: C64| {
            let m = DMatrix::from_fn(n, n, |i, j| if i == j { a - g[(i, j)] } else { -g[(i, j)] });
            m.determinant()
        };
        let num: C64 = numerator.iter().map(|&a| det_at(a)).product();
        let den: C64 = denominator.iter().map(|&a| det_at(a)).product();
        num / den
    }))
}

/// Modified Bessel function `I₀(z) = Σ (z²/4)^m / (m!)²` for complex `z`.
pub fn bessel_i0(z: C64) -> C64 {
    let q = z * z / 4.0;
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for m in 1..500 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

#[derive(Clone, Debug, Serialize)]
pub struct BesselCheck {
    /// Trapezoid value of `∫ dθ/2π exp(e^{iθ} ζ X + e^{-iθ} ζ̄ Y)`.
    pub quadrature: C64,
    /// `Σ_m (|ζ|² X Y)^m / (m!)²`.
    pub series: C64,
    /// `I₀(2|ζ|√(XY))`.
    pub bessel: C64,
    /// `I₀(|ζ|² X Y)`, the argument as sometimes quoted; differs in general.
    pub quoted_argument: C64,
}

/// Phase integral evaluated three ways.
pub fn bessel_phase_integral(zeta: C64, x: C64, y: C64, nodes: usize) -> BesselCheck {
    let mut quad = C64::new(0.0, 0.0);
    for (theta, w) in periodic_nodes(nodes) {
        let e = C64::from_polar(1.0, theta);
        quad += (e * zeta * x + e.conj() * zeta.conj() * y).exp() * w;
    }
    quad /= 2.0 * std::f64::consts::PI;
    let s = zeta.norm_sqr() * x * y;
    let mut term = C64::new(1.0, 0.0);
    let mut series = term;
    for m in 1..500 {
        term *= s / ((m * m) as f64);
        series += term;
        if term.norm() < 1e-17 * series.norm() {
            break;
        }
    }
    let arg = 2.0 * zeta.norm() * (x * y).sqrt();
    BesselCheck {
        quadrature: quad,
        series,
        bessel: bessel_i0(arg),
        quoted_argument: bessel_i0(s),
    }
}

/// Index patterns probed by [`check_second_moments`], as `(i, k, j, l)` for
/// `g^i_k g^j_l` (O, Sp) or `(i, j, k, l)` for `g^i_j (g⁻¹)^k_l` (U). They
/// cover every coincidence class of the closed forms.
pub fn moment_patterns(spec: GroupSpec) -> Vec<[usize; 4]> {
    let n = spec.n;
    let b = 1.min(n - 1);
    let pats: Vec<[usize; 4]> = match spec.family {
        GroupFamily::Orthogonal => vec![
            [0, 0, 0, 0],
            [0, b, 0, b],
            [0, 0, b, b],
            [0, b, b, 0],
            [0, 0, 0, b],
        ],
        GroupFamily::Unitary => vec![
            [0, 0, 0, 0],
            [0, b, b, 0],
            [0, b, 0, b],
            [0, 0, b, b],
            [0, 0, 0, b],
        ],
        GroupFamily::Symplectic => {
            let m = n / 2;
            vec![
                [0, 0, m, m],
                [0, m, m, 0],
                [0, 0, 0, 0],
                [0, 0, m, 0],
                [0, b, m, b],
            ]
        }
    };
    let mut out: Vec<[usize; 4]> = Vec::new();
    for p in pats {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Monte Carlo second moments against the closed forms, one line per index
/// pattern, each within three standard errors.
pub fn check_second_moments(
    spec: GroupSpec,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new(
        format!("haar-moments-{:?}-N{}", spec.family, spec.n).to_lowercase(),
    );
    for (p, idx) in moment_patterns(spec).into_iter().enumerate() {
        let [a, b, c, d] = idx;
        let factors = match spec.family {
            GroupFamily::Unitary => [Factor::g(a, b), Factor::g_inv(c, d)],
            _ => [Factor::g(a, b), Factor::g(c, d)],
        };
        let est = estimate_moment(spec, &factors, samples, seed.wrapping_add(p as u64))?;
        let exact = second_moment_exact(spec.family, spec.n, a, b, c, d) + 0.0;
        rep.push(CheckLine::statistical(
            format!("{a}{b}{c}{d}"),
            est.mean,
            est.stderr(),
            C64::new(exact, 0.0),
            0.0,
            3.0,
        ));
    }
    Ok(rep)
}
