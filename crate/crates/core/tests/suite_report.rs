use cfkit::report::{emit_report, write_trace_csv, ReportFormat, Verdict};
use cfkit::suite::{run_suite, CheckSpec, SuiteConfig, CHECK_NAMES};
use cfkit::CfError;
use std::path::PathBuf;
use std::process::Command;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn table(cfg: &SuiteConfig) -> String {
    let out = run_suite(cfg, false).unwrap();
    let mut buf = Vec::new();
    emit_report(&out.records, ReportFormat::Table, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn config_parsing_rejects_unknown_names_and_keys() {
    assert!(matches!(
        SuiteConfig::parse("[[check]]\nname = \"no-such-check\"\n"),
        Err(CfError::Config(_))
    ));
    assert!(matches!(
        SuiteConfig::parse("[[check]]\nname = \"stable-range\"\nbogus = 1\n"),
        Err(CfError::Config(_))
    ));
    let cfg = SuiteConfig::parse("[[check]]\nname = \"stable-range\"\nn0_max = 3\n").unwrap();
    assert_eq!(cfg.checks.len(), 1);
    assert_eq!(cfg.checks[0].n0_max, Some(3));
    assert!(matches!(
        SuiteConfig::load(&config_path("missing.toml")),
        Err(CfError::Config(_))
    ));
    assert!(CHECK_NAMES.contains(&"kernel-disk"));
}

#[test]
fn empty_suite_produces_no_records() {
    let cfg = SuiteConfig::load(&config_path("empty.toml")).unwrap();
    let out = run_suite(&cfg, false).unwrap();
    assert!(out.records.is_empty() && out.all_as_expected());
    assert_eq!(table(&cfg).lines().count(), 1);
}

#[test]
fn three_type_a_integrals_pass() {
    let cfg = SuiteConfig::load(&config_path("typea_n3.toml")).unwrap();
    let out = run_suite(&cfg, false).unwrap();
    assert_eq!(out.records.len(), 3);
    assert!(out
        .records
        .iter()
        .all(|r| r.verdict == Verdict::Pass && r.check == "typea-N3"));
    assert_eq!(
        out.records[0].inputs.get("n_colors").map(String::as_str),
        Some("3")
    );
}

#[test]
fn one_color_bulk_normalization_is_an_expected_failure() {
    let cfg = SuiteConfig::load(&config_path("typea_n1_bulk.toml")).unwrap();
    let out = run_suite(&cfg, false).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.records[0].verdict, Verdict::ExpectedFailure);
    assert!(out.all_as_expected());
}

#[test]
fn unknown_integral_label_is_a_config_error() {
    let spec = CheckSpec {
        n_colors: Some(3),
        integrals: Some(vec!["I^99".into()]),
        ..CheckSpec::named("typea-radial")
    };
    assert!(matches!(
        run_suite(&SuiteConfig { checks: vec![spec] }, false),
        Err(CfError::Config(_))
    ));
}

#[test]
fn single_record_table_and_byte_identical_reruns() {
    let spec = CheckSpec {
        n_colors: Some(3),
        integrals: Some(vec!["norm".into()]),
        ..CheckSpec::named("typea-radial")
    };
    let cfg = SuiteConfig { checks: vec![spec] };
    let a = table(&cfg);
    assert_eq!(a.lines().count(), 2);
    assert!(a.lines().nth(1).unwrap().contains("pass"));
    assert_eq!(a, table(&cfg));

    let seeded = SuiteConfig {
        checks: vec![CheckSpec {
            family: Some("orthogonal".into()),
            n_colors: Some(3),
            samples: Some(2_000),
            seed: Some(4),
            ..CheckSpec::named("haar-moments")
        }],
    };
    let json = |cfg: &SuiteConfig| {
        let mut buf = Vec::new();
        emit_report(
            &run_suite(cfg, false).unwrap().records,
            ReportFormat::Json,
            &mut buf,
        )
        .unwrap();
        buf
    };
    let first = json(&seeded);
    assert_eq!(first, json(&seeded));
    assert!(!String::from_utf8(first).unwrap().contains("wall_time"));
}

#[test]
fn timings_are_opt_in() {
    let cfg = SuiteConfig {
        checks: vec![CheckSpec {
            n0_max: Some(2),
            ..CheckSpec::named("stable-range")
        }],
    };
    assert!(run_suite(&cfg, true)
        .unwrap()
        .records
        .iter()
        .all(|r| r.wall_time_s.is_some()));
    assert!(run_suite(&cfg, false)
        .unwrap()
        .records
        .iter()
        .all(|r| r.wall_time_s.is_none()));
}

#[test]
fn disk_trace_is_written_as_monotone_csv() {
    let cfg = SuiteConfig {
        checks: vec![CheckSpec {
            n_colors: Some(3),
            m_max: Some(2),
            ..CheckSpec::named("kernel-disk")
        }],
    };
    let out = run_suite(&cfg, false).unwrap();
    let (_, trace) = &out.traces[0];
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,value,error"));
    let errs: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(errs.len() > 5);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn runtime_errors_become_records() {
    let refused = CheckSpec {
        family: Some("BD".into()),
        n_colors: Some(2),
        n0: Some(1),
        n1: Some(0),
        seed: Some(1),
        ..CheckSpec::named("cf-verify")
    };
    let out = run_suite(
        &SuiteConfig {
            checks: vec![refused.clone()],
        },
        false,
    )
    .unwrap();
    assert_eq!(out.records.len(), 1);
    assert!(out.records[0].label.starts_with("error: "));
    assert_eq!(out.records[0].verdict, Verdict::Fail);
    assert!(!out.all_as_expected());

    let allowed = CheckSpec {
        expect: vec![Verdict::Fail],
        ..refused
    };
    assert!(run_suite(
        &SuiteConfig {
            checks: vec![allowed]
        },
        false
    )
    .unwrap()
    .all_as_expected());

    let unseeded = CheckSpec {
        family: Some("BD".into()),
        n_colors: Some(3),
        ..CheckSpec::named("cf-verify")
    };
    assert!(matches!(
        run_suite(
            &SuiteConfig {
                checks: vec![unseeded]
            },
            false
        ),
        Err(CfError::Config(_))
    ));
}

#[test]
fn divergent_disk_mass_is_expected() {
    let cfg = SuiteConfig {
        checks: vec![CheckSpec {
            n_colors: Some(2),
            ..CheckSpec::named("kernel-disk")
        }],
    };
    let out = run_suite(&cfg, false).unwrap();
    assert!(out.records.iter().any(|r| r.verdict == Verdict::Divergent));
    assert!(out.all_as_expected());
}

#[test]
fn command_line_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cfkit");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(
        status(&["suite", config_path("typea_n3.toml").to_str().unwrap()]),
        Some(0)
    );
    assert_eq!(
        status(&["suite", config_path("typea_n1_bulk.toml").to_str().unwrap()]),
        Some(0)
    );
    assert_eq!(
        status(&["suite", config_path("missing.toml").to_str().unwrap()]),
        Some(2)
    );
    assert_eq!(status(&["stable-range", "--n0-max", "4"]), Some(0));
    assert_eq!(status(&["cf-verify", "-n", "3"]), Some(2));
    assert_eq!(
        status(&["cf-verify", "-n", "2", "--n1", "0", "--seed", "1"]),
        Some(1)
    );
}
