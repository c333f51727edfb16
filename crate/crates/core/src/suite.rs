//! Named checks, the TOML suite format, and the orchestrator that runs a
//! suite into report records.
//!
//! A suite file is a list of `[[check]]` tables. Every table names one
//! registered check and sets its parameters with typed keys:
//!
//! ```toml
//! [[check]]
//! name = "typea-radial"
//! n_colors = 3
//! tol = 1e-8
//!
//! [[check]]
//! name = "haar-moments"
//! family = "orthogonal"
//! n_colors = 5
//! samples = 100000
//! seed = 11
//! ```

use crate::cayley::{
    cauchy_fourier_quadrature, gaussian_rep_check, greens_cayley_factorization,
    hyperbolic_symmetry_check, phase_average_kernels, resolvent_sweep, swap2,
    verify_random_phase_average, FloquetModel, PhaseAverageConfig, PhaseDisorder,
};
use crate::cf::{
    moment_expansion_check, normalization_constant, verify_cf, verify_det_identities,
    verify_weyl_ratio, CfQuadrature, CfSpec, DetMode, DetQuadrature, FieldAssignment,
};
use crate::error::{CfError, Result};
use crate::haar::{check_second_moments, sample_haar, GroupFamily, GroupSpec};
use crate::kernel::{
    check_circle_repair_n2, check_n1_impossibility, check_reproducing_disk, check_stable_range,
    check_typea_n1, check_typea_radial,
};
use crate::quadrature::TracePoint;
use crate::report::{CheckLine, ReportRecord, Verdict, VerificationReport};
use crate::scalar::C64;
use crate::stats::stream_rng;
use crate::superfield::CfType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

/// Every check name a suite may use.
pub const CHECK_NAMES: &[&str] = &[
    "haar-moments",
    "cf-verify",
    "cf-normalization",
    "moment-expansion",
    "det-identities",
    "weyl-ratio",
    "kernel-disk",
    "kernel-circle",
    "typea-radial",
    "typea-n1",
    "cayley",
    "phase-kernels",
    "phase-average",
    "hyperbolic",
    "stable-range",
];

/// Parameters of one check. Keys a check does not use are ignored by it;
/// unknown keys are rejected when the file is parsed.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Group family (`unitary`, `orthogonal`, `symplectic`) or CF type
    /// (`BD`, `C`, `A`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_colors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Parameter vectors, each a list of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<Vec<[f64; 2]>>>,
    /// `FF` or `BB` for the determinant identities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Number of outer-field assignments for `cf-verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `swap` (two sites) or `random`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    /// Subset of `typea-radial` lines to keep, by label (`norm`, `I^00_00`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrals: Option<Vec<String>>,
    /// Extra verdicts accepted for this entry, such as `inconclusive`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Verdict>,
}

impl CheckSpec {
    pub fn named(name: &str) -> Self {
        CheckSpec {
            name: name.to_string(),
            ..Default::default()
        }
    }

    /// Parameters as strings, keyed by name, for the report.
    pub fn inputs(&self) -> BTreeMap<String, String> {
        let value = serde_json::to_value(self).unwrap_or_default();
        let mut out = BTreeMap::new();
        if let serde_json::Value::Object(map) = value {
            for (k, v) in map {
                if k == "name" || k == "id" || k == "expect" {
                    continue;
                }
                out.insert(k, v.to_string().trim_matches('"').to_string());
            }
        }
        out
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| CfError::Config(format!("check '{}' needs an explicit seed", self.name)))
    }

    fn need<T: Copy>(&self, v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| CfError::Config(format!("check '{}' needs '{key}'", self.name)))
    }

    fn cf_type(&self) -> Result<CfType> {
        match self.family.as_deref().unwrap_or("BD") {
            "BD" | "bd" => Ok(CfType::BD),
            "C" | "c" => Ok(CfType::C),
            "A" | "a" => Ok(CfType::A),
            f => Err(CfError::Config(format!("unknown CF type '{f}'"))),
        }
    }

    fn group_family(&self) -> Result<GroupFamily> {
        match self.family.as_deref().unwrap_or("orthogonal") {
            "unitary" | "U" => Ok(GroupFamily::Unitary),
            "orthogonal" | "O" => Ok(GroupFamily::Orthogonal),
            "symplectic" | "Sp" => Ok(GroupFamily::Symplectic),
            f => Err(CfError::Config(format!("unknown group family '{f}'"))),
        }
    }

    fn alphas(&self) -> Result<Vec<Vec<C64>>> {
        let a = self
            .alphas
            .as_ref()
            .ok_or_else(|| CfError::Config(format!("check '{}' needs 'alphas'", self.name)))?;
        Ok(a.iter()
            .map(|v| v.iter().map(|[re, im]| C64::new(*re, *im)).collect())
            .collect())
    }

    fn unitary(&self, d: usize, seed: u64) -> Result<nalgebra::DMatrix<C64>> {
        match self.unitary.as_deref().unwrap_or("random") {
            "swap" if d == 2 => Ok(swap2()),
            "swap" => Err(CfError::Config("the swap unitary needs d = 2".into())),
            "random" => Ok(sample_haar(
                GroupSpec::new(GroupFamily::Unitary, d)?,
                &mut stream_rng(seed, 0),
            )),
            u => Err(CfError::Config(format!("unknown unitary '{u}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(rename = "check", default)]
    pub checks: Vec<CheckSpec>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| CfError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CfError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.name.as_str()) {
                return Err(CfError::Config(format!("unknown check '{}'", c.name)));
            }
        }
        Ok(())
    }
}

/// Runs one named check.
pub fn run_check(spec: &CheckSpec) -> Result<VerificationReport> {
    match spec.name.as_str() {
        "haar-moments" => {
            let group = GroupSpec::new(spec.group_family()?, spec.n_colors.unwrap_or(3))?;
            check_second_moments(group, spec.samples.unwrap_or(100_000), spec.seed()?)
        }
        "cf-verify" => {
            let cf = CfSpec::new(
                spec.cf_type()?,
                spec.need(spec.n_colors, "n_colors")?,
                spec.n0.unwrap_or(1),
                spec.n1.unwrap_or(1),
            )?;
            let quad = cf_quadrature(spec);
            let seed = spec.seed()?;
            let mut rep = VerificationReport::new(format!(
                "cf-{}-N{}-n{}|{}",
                cf.ty, cf.n_colors, cf.n0, cf.n1
            ));
            for f in 0..spec.fields.unwrap_or(3) {
                let fields = FieldAssignment::random(
                    &cf,
                    seed.wrapping_add(1000 + f as u64),
                    spec.field_scale.unwrap_or(0.6),
                );
                let mut part = verify_cf(
                    &cf,
                    &fields,
                    spec.samples.unwrap_or(20_000),
                    seed.wrapping_add(f as u64),
                    &quad,
                )?;
                for l in &mut part.lines {
                    l.label = format!("fields{f} {}", l.label);
                }
                rep.extend(part);
            }
            Ok(rep)
        }
        "cf-normalization" => {
            let cf = CfSpec::new(
                spec.cf_type()?,
                spec.need(spec.n_colors, "n_colors")?,
                spec.n0.unwrap_or(1),
                spec.n1.unwrap_or(0),
            )?;
            let reference = match (cf.ty, cf.n0, cf.n1) {
                (CfType::BD, 1, 0) => (cf.n_colors as f64 - 2.0) / (2.0 * PI),
                (CfType::A, 1, 1) => 1.0 / (PI * PI),
                _ => {
                    return Err(CfError::Unsupported(
                        "closed-form constant known for BD 1|0 and A 1|1 only".into(),
                    ))
                }
            };
            let c = normalization_constant(&cf, &cf_quadrature(spec))?;
            let mut rep = VerificationReport::new(format!(
                "cf-normalization-{}-N{}-n{}|{}",
                cf.ty, cf.n_colors, cf.n0, cf.n1
            ));
            rep.push(CheckLine::within(
                "c",
                C64::new(c, 0.0),
                C64::new(reference, 0.0),
                spec.tol.unwrap_or(1e-8),
            ));
            Ok(rep)
        }
        "moment-expansion" => {
            let cf = CfSpec::new(
                CfType::BD,
                spec.need(spec.n_colors, "n_colors")?,
                spec.n0.unwrap_or(1),
                spec.n1.unwrap_or(1),
            )?;
            let fields =
                FieldAssignment::random(&cf, spec.seed()?, spec.field_scale.unwrap_or(0.5));
            moment_expansion_check(&cf, &fields, &cf_quadrature(spec))
        }
        "det-identities" => {
            let mode = match spec.mode.as_deref().unwrap_or("FF") {
                "FF" => DetMode::FF,
                "BB" => DetMode::BB,
                m => return Err(CfError::Config(format!("unknown mode '{m}'"))),
            };
            let mut quad = DetQuadrature::default();
            if let Some(n) = spec.nodes {
                quad.radial = n;
            }
            verify_det_identities(
                spec.need(spec.n_colors, "n_colors")?,
                &spec.alphas()?,
                mode,
                &quad,
                spec.samples.unwrap_or(100_000),
                spec.seed()?,
            )
        }
        "weyl-ratio" => verify_weyl_ratio(
            spec.need(spec.n_colors, "n_colors")?,
            spec.n0.unwrap_or(1),
            &spec.alphas()?,
            spec.samples.unwrap_or(100_000),
            spec.seed()?,
        ),
        "kernel-disk" => {
            let n = spec.need(spec.n_colors, "n_colors")?;
            let mut rep =
                check_reproducing_disk(n, spec.m_max.unwrap_or(6), spec.tol.unwrap_or(1e-8));
            if n == 1 {
                rep.extend(check_n1_impossibility(spec.m_max.unwrap_or(20)));
            }
            Ok(rep)
        }
        "kernel-circle" => Ok(check_circle_repair_n2(
            spec.k_max.unwrap_or(10),
            spec.nodes.unwrap_or(64),
        )),
        "typea-radial" => {
            let mut rep = check_typea_radial(
                spec.need(spec.n_colors, "n_colors")?,
                spec.tol.unwrap_or(1e-8),
            )?;
            if let Some(keep) = &spec.integrals {
                if let Some(bad) = keep
                    .iter()
                    .find(|k| !rep.lines.iter().any(|l| &l.label == *k))
                {
                    return Err(CfError::Config(format!("unknown integral '{bad}'")));
                }
                rep.lines.retain(|l| keep.contains(&l.label));
            }
            Ok(rep)
        }
        "typea-n1" => check_typea_n1(spec.k_max.unwrap_or(2), spec.tol.unwrap_or(1e-8)),
        "cayley" => {
            let seed = spec.seed()?;
            let mut rep =
                resolvent_sweep(spec.cases.unwrap_or(100), spec.d_max.unwrap_or(16), seed)?;
            let d = spec.d.unwrap_or(3);
            let zeta = spec.zeta.unwrap_or(0.7);
            let beta = spec.beta.unwrap_or(0.9);
            let model = FloquetModel::with_zeta(
                spec.unitary(d, seed)?,
                C64::new(zeta, 0.0),
                C64::new(beta, 0.0),
            )?;
            let theta = PhaseDisorder::sample(d, &mut stream_rng(seed, 1));
            let (j, k) = (spec.j.unwrap_or(0), spec.k.unwrap_or(d - 1));
            rep.extend(greens_cayley_factorization(&model, &theta, j, k)?);
            rep.extend(gaussian_rep_check(&model, &theta, j, k)?);
            Ok(rep)
        }
        "phase-kernels" => {
            let qs = spec
                .q_values
                .clone()
                .unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 4.0]);
            let betas = spec
                .beta_values
                .clone()
                .unwrap_or_else(|| vec![0.9, 0.99, 0.999]);
            let mut rep = VerificationReport::new("phase-kernels");
            for &q in &qs {
                let exact = C64::new((-q.abs() / 2.0).exp(), 0.0);
                let (v, err) = cauchy_fourier_quadrature(q);
                rep.push(
                    CheckLine::within(
                        format!("fourier q={q}"),
                        C64::new(v, 0.0),
                        exact,
                        spec.tol.unwrap_or(1e-8),
                    )
                    .with_uncertainty(err),
                );
                for &b in &betas {
                    let k = phase_average_kernels(q, C64::new(b, 0.0), spec.nodes.unwrap_or(64))?;
                    rep.push(CheckLine::within(
                        format!("regularized q={q} beta={b}"),
                        k.cauchy,
                        exact,
                        1e-3,
                    ));
                }
            }
            Ok(rep)
        }
        "phase-average" => {
            let d = spec.d.unwrap_or(2);
            let seed = spec.seed()?;
            let ud = spec.unitary(d, seed)?;
            let model = FloquetModel::with_zeta(
                ud,
                C64::new(spec.zeta.unwrap_or(0.7), 0.0),
                C64::new(spec.beta.unwrap_or(0.8), 0.0),
            )?;
            let mut cfg = PhaseAverageConfig {
                field_seed: seed,
                phase_seed: spec.phase_seed.unwrap_or(seed.wrapping_add(1)),
                ..Default::default()
            };
            if let Some(n) = spec.samples {
                cfg.field_samples = n;
            }
            if let Some(n) = spec.phase_samples {
                cfg.phase_samples = n;
            }
            if let Some(n) = spec.nodes {
                cfg.min_nodes = n;
            }
            verify_random_phase_average(&model, spec.j.unwrap_or(0), spec.k.unwrap_or(d - 1), &cfg)
        }
        "hyperbolic" => {
            let d = spec.d.unwrap_or(2);
            let seed = spec.seed()?;
            let s = spec
                .s_values
                .clone()
                .unwrap_or_else(|| vec![0.3, -1.1, 2.0]);
            hyperbolic_symmetry_check(&spec.unitary(d, seed)?, &s, seed)
        }
        "stable-range" => Ok(check_stable_range(spec.n0_max.unwrap_or(8))),
        other => Err(CfError::Config(format!("unknown check '{other}'"))),
    }
}

fn cf_quadrature(spec: &CheckSpec) -> CfQuadrature {
    let mut q = CfQuadrature::default();
    if let Some(n) = spec.nodes {
        q.radial = n;
    }
    if let Some(n) = spec.angular_nodes {
        q.angular = n;
    }
    q
}

/// Records and convergence traces of a suite run.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutcome {
    pub records: Vec<ReportRecord>,
    /// Per entry id, the trace of its last refinement sequence.
    pub traces: Vec<(String, Vec<TracePoint>)>,
}

impl SuiteOutcome {
    pub fn all_as_expected(&self) -> bool {
        self.records.iter().all(ReportRecord::as_expected)
    }
}

/// Runs the checks in declaration order. A check that fails with an error
/// contributes one record carrying the message: a divergence error becomes a
/// divergent verdict, anything else a failure.
pub fn run_suite(config: &SuiteConfig, timings: bool) -> Result<SuiteOutcome> {
    config.validate()?;
    let mut out = SuiteOutcome::default();
    for spec in &config.checks {
        let start = Instant::now();
        let result = run_check(spec);
        let elapsed = start.elapsed().as_secs_f64();
        let inputs = spec.inputs();
        let mut records = match result {
            Ok(rep) => {
                let id = spec.id.clone().unwrap_or_else(|| rep.check.clone());
                if !rep.trace.is_empty() {
                    out.traces.push((id.clone(), rep.trace.clone()));
                }
                rep.lines
                    .iter()
                    .map(|l| ReportRecord::from_line(&id, &inputs, l, &spec.expect))
                    .collect::<Vec<_>>()
            }
            Err(e @ CfError::Config(_)) => return Err(e),
            Err(e) => {
                let verdict = if matches!(e, CfError::Divergent(_)) {
                    Verdict::Divergent
                } else {
                    Verdict::Fail
                };
                let id = spec.id.clone().unwrap_or_else(|| spec.name.clone());
                let line = CheckLine::within(
                    format!("error: {e}"),
                    C64::new(f64::NAN, 0.0),
                    C64::new(0.0, 0.0),
                    0.0,
                )
                .with_verdict(verdict);
                let mut r = ReportRecord::from_line(&id, &inputs, &line, &spec.expect);
                if verdict == Verdict::Divergent && !spec.expect.contains(&Verdict::Divergent) {
                    r.expected = Verdict::Pass;
                }
                vec![r]
            }
        };
        if timings {
            records
                .iter_mut()
                .for_each(|r| r.wall_time_s = Some(elapsed));
        }
        out.records.extend(records);
    }
    Ok(out)
}
