//! Gauss-Legendre and periodic trapezoid rules, radial maps for the disk and
//! the plane, and a panel integrator that separates convergent endpoint
//! behaviour from divergent behaviour.

use crate::scalar::C64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on [-1, 1], nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (m + h * x, h * w))
            .collect()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `n` equally spaced angles on [0, 2π) with weight 2π/n each.
pub fn periodic_nodes(n: usize) -> Vec<(f64, f64)> {
    let w = 2.0 * PI / n as f64;
    (0..n).map(|k| (w * k as f64, w)).collect()
}

/// Disk map `u = |z|² = 1 - x²` on x ∈ (0, 1]; returns `(u, du/dx)`.
///
/// Endpoint factors `(1 - u)^{k/2}` become `x^k`, so half-integer powers at the
/// boundary turn into polynomials in `x`.
pub fn disk_map(x: f64) -> (f64, f64) {
    (1.0 - x * x, 2.0 * x)
}

/// Plane map `t = |z|² = (1 - x²)/x²` on x ∈ (0, 1]; returns `(t, |dt/dx|)`.
///
/// Here `1 + t = x⁻²`, so rational decay in `t` becomes polynomial in `x`.
pub fn plane_map(x: f64) -> (f64, f64) {
    let x2 = x * x;
    ((1.0 - x2) / x2, 2.0 / (x2 * x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    Converged,
    Divergent,
    Unconverged,
}

/// One refinement step: level, running value, and the size of the last change.
#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub level: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct EndpointIntegral {
    pub value: C64,
    pub status: Convergence,
    pub trace: Vec<TracePoint>,
}

/// Panel settings for [`integrate_toward_zero`].
#[derive(Clone, Copy, Debug)]
pub struct PanelRule {
    pub nodes_per_panel: usize,
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for PanelRule {
    fn default() -> Self {
        PanelRule {
            nodes_per_panel: 16,
            tol: 1e-14,
            max_panels: 40,
        }
    }
}

/// Integrates `g` over (0, 1] on geometric panels `[4^{-k-1}, 4^{-k}]`.
///
/// Panel contributions of a convergent endpoint shrink geometrically. The
/// integral is declared divergent when two consecutive panel contributions
/// fail to shrink below 0.9 of their predecessor, which covers both power and
/// logarithmic growth.
pub fn integrate_toward_zero(mut g: impl FnMut(f64) -> C64, rule: PanelRule) -> EndpointIntegral {
    integrate_toward_zero_vec(1, |x| vec![g(x)], rule)
        .pop()
        .expect("one component")
}

/// Component-wise [`integrate_toward_zero`] for a vector-valued integrand.
/// Panels are added until every component has either converged or been
/// declared divergent; a component's status and trace freeze at that point.
pub fn integrate_toward_zero_vec(
    dim: usize,
    mut g: impl FnMut(f64) -> Vec<C64>,
    rule: PanelRule,
) -> Vec<EndpointIntegral> {
    struct Walk {
        total: C64,
        sizes: Vec<f64>,
        small_run: usize,
        done: Option<Convergence>,
        trace: Vec<TracePoint>,
    }
    let gl = GaussLegendre::new(rule.nodes_per_panel);
    let mut walks: Vec<Walk> = (0..dim)
        .map(|_| Walk {
            total: C64::new(0.0, 0.0),
            sizes: Vec::new(),
            small_run: 0,
            done: None,
            trace: Vec::new(),
        })
        .collect();
    let mut hi = 1.0f64;
    for k in 0..rule.max_panels {
        if walks.iter().all(|w| w.done.is_some()) {
            break;
        }
        let lo = hi / 4.0;
        let mut panel = vec![C64::new(0.0, 0.0); dim];
        for (x, w) in gl.on(lo, hi) {
            for (p, v) in panel.iter_mut().zip(g(x)) {
                *p += v * w;
            }
        }
        for (walk, p) in walks.iter_mut().zip(panel) {
            if walk.done.is_some() {
                continue;
            }
            walk.total += p;
            let d = p.norm();
            walk.trace.push(TracePoint {
                level: k,
                value: walk.total.re,
                error: d,
            });
            walk.sizes.push(d);
            let scale = walk.total.norm().max(1.0);
            if d <= rule.tol * scale {
                walk.small_run += 1;
                if walk.small_run >= 2 {
                    walk.done = Some(Convergence::Converged);
                    continue;
                }
            } else {
                walk.small_run = 0;
            }
            let n = walk.sizes.len();
            if n >= 4 {
                let (a, b, c) = (walk.sizes[n - 3], walk.sizes[n - 2], walk.sizes[n - 1]);
                if c > rule.tol * scale && b >= 0.9 * a && c >= 0.9 * b {
                    walk.done = Some(Convergence::Divergent);
                }
            }
        }
        hi = lo;
    }
    walks
        .into_iter()
        .map(|w| EndpointIntegral {
            value: w.total,
            status: w.done.unwrap_or(Convergence::Unconverged),
            trace: w.trace,
        })
        .collect()
}

/// Integrates a smooth `f` on [a, b], doubling the node count until two
/// successive values agree to `tol`.
pub fn refine_gl(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    start: usize,
    tol: f64,
    max_nodes: usize,
) -> (f64, Convergence, Vec<TracePoint>) {
    let mut n = start.max(2);
    let mut prev: Option<f64> = None;
    let mut trace = Vec::new();
    let mut level = 0;
    while n <= max_nodes {
        let v: f64 = GaussLegendre::new(n)
            .on(a, b)
            .into_iter()
            .map(|(x, w)| w * f(x))
            .sum();
        let err = prev.map(|p| (v - p).abs()).unwrap_or(f64::INFINITY);
        trace.push(TracePoint {
            level,
            value: v,
            error: err,
        });
        if err <= tol * v.abs().max(1.0) {
            return (v, Convergence::Converged, trace);
        }
        prev = Some(v);
        n *= 2;
        level += 1;
    }
    let v = prev.unwrap_or(f64::NAN);
    (v, Convergence::Unconverged, trace)
}
