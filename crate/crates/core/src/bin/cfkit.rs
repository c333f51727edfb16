//! Command-line driver: one subcommand per check family plus `suite`.
//!
//! Exit status is 0 when every record carries its expected verdict, 1 when
//! some record does not, and 2 on configuration or I/O errors.

use cfkit::report::{emit_report, write_trace_csv, ReportFormat, Verdict};
use cfkit::stats::WORKERS_ENV;
use cfkit::suite::{run_suite, CheckSpec, SuiteConfig, SuiteOutcome};
use cfkit::{CfError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cfkit",
    version,
    about = "Numerical checks of color-flavor transformation identities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    format: ReportFormat,
    /// Convergence trace CSV (suite: a directory receiving one file per entry).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Add wall times to the records.
    #[arg(long)]
    timings: bool,
    /// Extra verdicts to accept, e.g. `inconclusive`.
    #[arg(long, value_delimiter = ',')]
    expect: Vec<Verdict>,
}

#[derive(Subcommand)]
enum Command {
    /// Haar second moments against the Weingarten values.
    HaarMoments {
        #[arg(long, default_value = "orthogonal")]
        family: String,
        #[arg(short = 'n', long, default_value_t = 3)]
        n_colors: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Full color-flavor identity, coefficient by coefficient.
    CfVerify {
        #[arg(long, default_value = "BD")]
        family: String,
        #[arg(short = 'n', long)]
        n_colors: usize,
        #[arg(long, default_value_t = 1)]
        n0: usize,
        #[arg(long, default_value_t = 1)]
        n1: usize,
        #[arg(long)]
        fields: Option<usize>,
        #[arg(long)]
        field_scale: Option<f64>,
        #[arg(long)]
        angular_nodes: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Averages of products of characteristic polynomials or their inverses.
    DetIdentities {
        #[arg(long, default_value = "FF")]
        mode: String,
        #[arg(short = 'n', long)]
        n_colors: usize,
        /// One parameter vector as `re,im;re,im;...`; repeat for more.
        #[arg(long = "alpha", value_parser = parse_alpha, required = true)]
        alphas: Vec<Vec<[f64; 2]>>,
        #[command(flatten)]
        common: Common,
    },
    /// Ratio averages against the sum over saddle points.
    WeylRatio {
        #[arg(short = 'n', long)]
        n_colors: usize,
        #[arg(long, default_value_t = 1)]
        n0: usize,
        #[arg(long = "alpha", value_parser = parse_alpha, required = true)]
        alphas: Vec<Vec<[f64; 2]>>,
        #[command(flatten)]
        common: Common,
    },
    /// Reproducing property on the unit disk; at N = 1 also the obstruction.
    KernelDisk {
        #[arg(short = 'n', long)]
        n_colors: usize,
        #[arg(long)]
        m_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Repaired boundary kernel on the circle at N = 2.
    KernelCircle {
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Type-A normalization and linearized reproducing integrals.
    TypeaRadial {
        #[arg(short = 'n', long)]
        n_colors: usize,
        /// Keep only these lines, e.g. `I^00_00,I^11_11`.
        #[arg(long, value_delimiter = ',')]
        integrals: Option<Vec<String>>,
        #[command(flatten)]
        common: Common,
    },
    /// Corrected N = 1 measure and the section table.
    TypeaN1 {
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Cayley-transform resolvent identities and the random-phase model.
    Cayley {
        #[arg(long, value_enum, default_value_t = CayleyPart::Identities)]
        part: CayleyPart,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        d_max: Option<usize>,
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// `swap` or `random`.
        #[arg(long)]
        unitary: Option<String>,
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        #[arg(long)]
        phase_samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Root criterion against the closed-form thresholds.
    StableRange {
        #[arg(long)]
        n0_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs every check listed in a TOML file.
    Suite {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CayleyPart {
    /// Resolvent sweep, Green's function factorization, Gaussian form.
    Identities,
    /// Phase-averaged kernels.
    Kernels,
    /// Finite-size random-phase average.
    PhaseAverage,
    /// Hyperbolic symmetry of the field-theory action.
    Hyperbolic,
}

fn parse_alpha(s: &str) -> std::result::Result<Vec<[f64; 2]>, String> {
    s.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            let num = |t: &str| t.parse::<f64>().map_err(|e| format!("'{t}': {e}"));
            match parts.as_slice() {
                [re] => Ok([num(re)?, 0.0]),
                [re, im] => Ok([num(re)?, num(im)?]),
                _ => Err(format!("expected 're,im', got '{pair}'")),
            }
        })
        .collect()
}

fn apply_common(spec: &mut CheckSpec, c: &Common) {
    spec.seed = spec.seed.or(c.seed);
    spec.samples = spec.samples.or(c.samples);
    spec.nodes = spec.nodes.or(c.nodes);
    spec.tol = spec.tol.or(c.tol);
    spec.expect.extend(c.expect.iter().copied());
}

fn build(command: Command) -> Result<(SuiteConfig, Common)> {
    let (spec, common) = match command {
        Command::Suite { config, common } => {
            let mut cfg = SuiteConfig::load(&config)?;
            for spec in &mut cfg.checks {
                apply_common(spec, &common);
            }
            return Ok((cfg, common));
        }
        Command::HaarMoments {
            family,
            n_colors,
            common,
        } => (
            CheckSpec {
                family: Some(family),
                n_colors: Some(n_colors),
                ..CheckSpec::named("haar-moments")
            },
            common,
        ),
        Command::CfVerify {
            family,
            n_colors,
            n0,
            n1,
            fields,
            field_scale,
            angular_nodes,
            common,
        } => (
            CheckSpec {
                family: Some(family),
                n_colors: Some(n_colors),
                n0: Some(n0),
                n1: Some(n1),
                fields,
                field_scale,
                angular_nodes,
                ..CheckSpec::named("cf-verify")
            },
            common,
        ),
        Command::DetIdentities {
            mode,
            n_colors,
            alphas,
            common,
        } => (
            CheckSpec {
                mode: Some(mode),
                n_colors: Some(n_colors),
                alphas: Some(alphas),
                ..CheckSpec::named("det-identities")
            },
            common,
        ),
        Command::WeylRatio {
            n_colors,
            n0,
            alphas,
            common,
        } => (
            CheckSpec {
                n_colors: Some(n_colors),
                n0: Some(n0),
                alphas: Some(alphas),
                ..CheckSpec::named("weyl-ratio")
            },
            common,
        ),
        Command::KernelDisk {
            n_colors,
            m_max,
            common,
        } => (
            CheckSpec {
                n_colors: Some(n_colors),
                m_max,
                ..CheckSpec::named("kernel-disk")
            },
            common,
        ),
        Command::KernelCircle { k_max, common } => (
            CheckSpec {
                k_max,
                ..CheckSpec::named("kernel-circle")
            },
            common,
        ),
        Command::TypeaRadial {
            n_colors,
            integrals,
            common,
        } => (
            CheckSpec {
                n_colors: Some(n_colors),
                integrals,
                ..CheckSpec::named("typea-radial")
            },
            common,
        ),
        Command::TypeaN1 { k_max, common } => (
            CheckSpec {
                k_max,
                ..CheckSpec::named("typea-n1")
            },
            common,
        ),
        Command::Cayley {
            part,
            d,
            d_max,
            cases,
            zeta,
            beta,
            j,
            k,
            unitary,
            q,
            phase_samples,
            common,
        } => {
            let name = match part {
                CayleyPart::Identities => "cayley",
                CayleyPart::Kernels => "phase-kernels",
                CayleyPart::PhaseAverage => "phase-average",
                CayleyPart::Hyperbolic => "hyperbolic",
            };
            (
                CheckSpec {
                    d,
                    d_max,
                    cases,
                    zeta,
                    beta,
                    j,
                    k,
                    unitary,
                    q_values: q,
                    phase_samples,
                    ..CheckSpec::named(name)
                },
                common,
            )
        }
        Command::StableRange { n0_max, common } => (
            CheckSpec {
                n0_max,
                ..CheckSpec::named("stable-range")
            },
            common,
        ),
    };
    let mut spec = spec;
    apply_common(&mut spec, &common);
    Ok((SuiteConfig { checks: vec![spec] }, common))
}

fn write_traces(outcome: &SuiteOutcome, path: &Path, many: bool) -> Result<()> {
    if many {
        std::fs::create_dir_all(path)?;
        for (id, trace) in &outcome.traces {
            let name: String = id
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            write_trace_csv(trace, &mut File::create(path.join(format!("{name}.csv")))?)?;
        }
    } else if let Some((_, trace)) = outcome.traces.first() {
        write_trace_csv(trace, &mut File::create(path)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let many = matches!(cli.command, Command::Suite { .. });
    let (config, common) = build(cli.command)?;
    let outcome = run_suite(&config, common.timings)?;
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            emit_report(&outcome.records, common.format, &mut w)?;
            w.flush()?;
        }
        None => emit_report(
            &outcome.records,
            common.format,
            &mut std::io::stdout().lock(),
        )?,
    }
    if let Some(path) = &common.trace {
        write_traces(&outcome, path, many)?;
    }
    Ok(outcome.all_as_expected())
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CfError::Config(format!("{WORKERS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CfError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_workers().and_then(|_| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("cfkit: {e}");
            ExitCode::from(2)
        }
    }
}
