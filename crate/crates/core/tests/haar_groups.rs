use cfkit::haar::{
    bessel_i0, bessel_phase_integral, check_second_moments, epsilon_lower, epsilon_upper,
    estimate_moment, haar_expect_charpoly, sample_haar, second_moment_exact, Factor, GroupFamily,
    GroupSpec,
};
use cfkit::report::Verdict;
use cfkit::stats::{mc_scalar, stream_rng};
use cfkit::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn spec(family: GroupFamily, n: usize) -> GroupSpec {
    GroupSpec::new(family, n).unwrap()
}

fn defect(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn group_spec_rejects_bad_dimensions() {
    assert!(GroupSpec::new(GroupFamily::Unitary, 0).is_err());
    assert!(GroupSpec::new(GroupFamily::Symplectic, 3).is_err());
    assert!(GroupSpec::new(GroupFamily::Orthogonal, 65).is_err());
}

#[test]
fn symplectic_forms_are_mutually_inverse() {
    let n = 6;
    let prod = epsilon_upper(n) * epsilon_lower(n);
    assert_eq!(prod, DMatrix::identity(n, n));
    assert_eq!(epsilon_lower(n).transpose(), -epsilon_lower(n));
}

#[test]
fn orthogonal_determinant_signs_are_balanced() {
    let s = spec(GroupFamily::Orthogonal, 4);
    let mut rng = stream_rng(5, 0);
    let trials = 10_000;
    let neg = (0..trials)
        .filter(|_| sample_haar(s, &mut rng).determinant().re < 0.0)
        .count();
    let freq = neg as f64 / trials as f64;
    assert!((freq - 0.5).abs() < 0.02, "det = -1 frequency {freq}");
}

#[test]
fn first_moment_of_orthogonal_group_vanishes() {
    let s = spec(GroupFamily::Orthogonal, 3);
    for (i, j) in [(0, 0), (1, 2)] {
        let e = estimate_moment(s, &[Factor::g(i, j)], 40_000, 3).unwrap();
        assert!(e.z_score(c(0.0, 0.0)) < 3.0, "E g^{i}_{j} = {:?}", e.mean);
    }
}

#[test]
fn second_moments_match_closed_forms() {
    for (family, n) in [
        (GroupFamily::Orthogonal, 2),
        (GroupFamily::Orthogonal, 3),
        (GroupFamily::Unitary, 3),
        (GroupFamily::Symplectic, 4),
    ] {
        let rep = check_second_moments(spec(family, n), 40_000, 21).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
    }
    assert_eq!(
        second_moment_exact(GroupFamily::Orthogonal, 4, 1, 2, 1, 2),
        0.25
    );
    assert_eq!(
        second_moment_exact(GroupFamily::Unitary, 2, 0, 1, 1, 0),
        0.5
    );
}

#[test]
fn unpaired_unitary_moment_vanishes() {
    let s = spec(GroupFamily::Unitary, 3);
    let e = estimate_moment(
        s,
        &[Factor::g(0, 0), Factor::g(1, 1), Factor::g_inv(0, 0)],
        40_000,
        8,
    )
    .unwrap();
    assert!(e.z_score(c(0.0, 0.0)) < 3.0);
}

#[test]
fn moment_index_out_of_range_is_rejected() {
    assert!(estimate_moment(spec(GroupFamily::Orthogonal, 2), &[Factor::g(0, 2)], 10, 0).is_err());
}

#[test]
fn charpoly_averages_on_two_element_group() {
    let o1 = spec(GroupFamily::Orthogonal, 1);
    let a = c(1.7, 0.3);
    // O(1) = {+1, -1}: the average of (a - g) is a, of 1/(a - g) is a/(a² - 1).
    let num = haar_expect_charpoly(o1, &[a], &[], 20_000, 1).unwrap();
    assert!(num.z_score(a) < 3.0);
    let den = haar_expect_charpoly(o1, &[], &[a], 20_000, 1).unwrap();
    assert!(den.z_score(a / (a * a - 1.0)) < 3.0);
    let empty = haar_expect_charpoly(spec(GroupFamily::Orthogonal, 3), &[], &[], 1_000, 1).unwrap();
    assert_eq!(empty.mean, c(1.0, 0.0));
    assert!(haar_expect_charpoly(o1, &[], &[c(0.5, 0.0)], 10, 1).is_err());
}

#[test]
fn bessel_phase_integral_examples() {
    let zero = bessel_phase_integral(c(0.6, 0.2), c(0.0, 0.0), c(0.0, 0.0), 32);
    assert!((zero.quadrature - 1.0).norm() < 1e-15);
    let r = bessel_phase_integral(c(0.7, 0.0), c(1.3, 0.0), c(1.3, 0.0), 64);
    let standard = (0..60).fold((c(0.0, 0.0), 1.0), |(s, fact): (C64, f64), m| {
        let f = if m == 0 { 1.0 } else { fact * m as f64 };
        (s + c((0.7f64 * 1.3).powi(2 * m) / (f * f), 0.0), f)
    });
    assert!((r.quadrature - standard.0).norm() < 1e-12);
    assert!((bessel_i0(c(2.0 * 0.7 * 1.3, 0.0)) - standard.0).norm() < 1e-12);
    // The squared-modulus argument differs from the series value.
    assert!((r.quoted_argument - r.series).norm() > 1e-2);
}

#[test]
fn left_invariance_of_trace_moments() {
    let s = spec(GroupFamily::Orthogonal, 3);
    let h = sample_haar(s, &mut stream_rng(99, 0));
    for p in 1..=4 {
        let plain = mc_scalar(4, 40_000, |rng| sample_haar(s, rng).trace().powi(p));
        let shifted = mc_scalar(4, 40_000, |rng| (&h * sample_haar(s, rng)).trace().powi(p));
        let sigma = plain.stderr().hypot(shifted.stderr());
        assert!(
            (plain.mean - shifted.mean).norm() < 3.0 * sigma + 1e-12,
            "p = {p}"
        );
    }
}

#[test]
fn estimates_are_reproducible_across_worker_counts() {
    let s = spec(GroupFamily::Unitary, 3);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                estimate_moment(s, &[Factor::g(0, 1), Factor::g_inv(1, 0)], 5_000, 77).unwrap()
            })
    };
    let a = run(1);
    let b = run(1);
    let d = run(3);
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.stderr_re.to_bits(), b.stderr_re.to_bits());
    assert_eq!(a.mean, d.mean);
}

#[test]
fn second_moment_report_verdicts_are_statistical() {
    let rep = check_second_moments(spec(GroupFamily::Orthogonal, 5), 20_000, 2).unwrap();
    assert!(rep
        .lines
        .iter()
        .all(|l| l.uncertainty > 0.0 && l.verdict == Verdict::Pass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_lie_in_their_groups(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = stream_rng(seed, 0);
        let u = sample_haar(spec(GroupFamily::Unitary, n), &mut rng);
        prop_assert!(defect(&(u.adjoint() * &u), &DMatrix::identity(n, n)) < 1e-12);

        let o = sample_haar(spec(GroupFamily::Orthogonal, n), &mut rng);
        prop_assert!(o.iter().all(|z| z.im == 0.0));
        prop_assert!(defect(&(o.transpose() * &o), &DMatrix::identity(n, n)) < 1e-12);

        let m = 2 * n;
        let g = sample_haar(spec(GroupFamily::Symplectic, m), &mut rng);
        let eps = epsilon_lower(m).map(|x| c(x, 0.0));
        prop_assert!(defect(&(g.transpose() * &eps * &g), &eps) < 1e-12);
        prop_assert!(defect(&(g.adjoint() * &g), &DMatrix::identity(m, m)) < 1e-12);
    }
}
