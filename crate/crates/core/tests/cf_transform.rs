use cfkit::cf::{
    det_identity_rhs, lhs_cf, lhs_exponent, moment_expansion_check, normalization_constant, rhs_cf,
    verify_cf, verify_det_identities, verify_weyl_ratio, weyl_ratio_formula, CfQuadrature, CfSpec,
    DetMode, DetQuadrature, FieldAssignment, OuterFields,
};
use cfkit::grassmann::Grassmann;
use cfkit::report::Verdict;
use cfkit::superfield::CfType;
use cfkit::{CfError, C64};
use nalgebra::DMatrix;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_z(lhs: &cfkit::cf::CoeffEstimate, reference: &Grassmann<C64>) -> f64 {
    (0..lhs.est.mean.len())
        .map(|m| {
            let e = lhs.est.get(m);
            let d = (e.mean - reference.coeff(m as u64)).norm();
            if d == 0.0 {
                0.0
            } else {
                d / e.stderr()
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn group_side_at_zero_fields_is_one() {
    // Bosonic fields only, so the exponent vanishes identically.
    let spec = CfSpec::new(CfType::BD, 3, 1, 0).unwrap();
    let lhs = lhs_cf(&spec, &FieldAssignment::zero(&spec), 2_000, 1).unwrap();
    assert_eq!(lhs.mean_poly().unwrap(), Grassmann::one(0).unwrap());
    assert_eq!(lhs.est.get(0).stderr(), 0.0);
}

#[test]
fn group_side_for_two_element_group() {
    // O(1) = {±1}: the average of exp(g ψ̄ψ) is cosh(ψ̄ψ).
    let spec = CfSpec::new(CfType::BD, 1, 1, 0).unwrap();
    let fields = FieldAssignment {
        psi: vec![c(0.4, 0.1)],
        psibar: vec![c(-0.3, 0.2)],
        phi: vec![],
        phibar: vec![],
    };
    let lhs = lhs_cf(&spec, &fields, 20_000, 4).unwrap();
    let want = (fields.psibar[0] * fields.psi[0]).cosh();
    let e = lhs.est.get(0);
    assert!(
        (e.mean - want).norm() <= 3.0 * e.stderr() + 1e-14,
        "{:?} vs {want}",
        e.mean
    );
}

/// Term-by-term expansion of the Haar average using only the first and
/// second moments: with two colors and one fermionic flavor the exponent
/// squares to the top degree, so the series stops there.
#[test]
fn group_side_matches_moment_series() {
    let spec = CfSpec::new(CfType::BD, 2, 0, 1).unwrap();
    let fields = FieldAssignment::zero(&spec);
    let n_gen = spec.n_outer();
    let outer = OuterFields::new(&spec, &fields, n_gen).unwrap();
    let unit = |i: usize, j: usize| {
        let mut e = DMatrix::zeros(2, 2);
        e[(i, j)] = c(1.0, 0.0);
        lhs_exponent(&spec, &outer, &e).unwrap()
    };
    let mut oracle = Grassmann::one(n_gen).unwrap();
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    // ∫ g^i_k g^j_l = δ^{ij} δ_{kl} / N
                    if i == j && k == l {
                        oracle = &oracle + &(&unit(i, k) * &unit(j, l)).scale(&c(0.25, 0.0));
                    }
                }
            }
        }
    }
    let lhs = lhs_cf(&spec, &fields, 40_000, 9).unwrap();
    assert!(max_z(&lhs, &oracle) < 3.0);
}

#[test]
fn flavor_side_is_normalized() {
    let quad = CfQuadrature::default();
    for (ty, n, n0, n1) in [
        (CfType::BD, 3, 1, 0),
        (CfType::BD, 3, 1, 1),
        (CfType::A, 2, 1, 1),
    ] {
        let spec = CfSpec::new(ty, n, n0, n1).unwrap();
        let rhs = rhs_cf(&spec, &FieldAssignment::zero(&spec), &quad).unwrap();
        assert!((rhs.numeric() - 1.0).norm() < 1e-12, "{ty} N={n}");
    }
}

#[test]
fn normalization_constants() {
    let quad = CfQuadrature::default();
    for n in 3..=6 {
        let spec = CfSpec::new(CfType::BD, n, 1, 0).unwrap();
        let cn = normalization_constant(&spec, &quad).unwrap();
        assert!(
            (cn - (n as f64 - 2.0) / (2.0 * PI)).abs() < 1e-10,
            "N = {n}: {cn}"
        );
    }
    let a = CfSpec::new(CfType::A, 2, 1, 1).unwrap();
    assert!((normalization_constant(&a, &quad).unwrap() - 1.0 / (PI * PI)).abs() < 1e-10);
    for n in 1..=4 {
        let spec = CfSpec::new(CfType::BD, n, 0, 1).unwrap();
        let cn = normalization_constant(&spec, &quad).unwrap();
        assert!(cn.is_finite() && cn > 0.0, "N = {n}: {cn}");
    }
}

#[test]
fn below_stable_range_is_refused_or_divergent() {
    let spec = CfSpec::new(CfType::BD, 2, 1, 0).unwrap();
    let quad = CfQuadrature::default();
    assert!(matches!(
        normalization_constant(&spec, &quad),
        Err(CfError::OutsideStableRange { n: 2, min: 3 })
    ));
    assert!(matches!(
        normalization_constant(&spec.forced(), &quad),
        Err(CfError::Divergent(_))
    ));
    assert!(matches!(
        rhs_cf(&spec.forced(), &FieldAssignment::zero(&spec), &quad),
        Err(CfError::Divergent(_))
    ));
}

#[test]
fn identity_holds_for_bd_with_one_boson_one_fermion() {
    let spec = CfSpec::new(CfType::BD, 3, 1, 1).unwrap();
    let fields = FieldAssignment::random(&spec, 31, 0.5);
    let rep = verify_cf(&spec, &fields, 20_000, 3, &CfQuadrature::default()).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
    assert!(rep.lines.len() > 4);
}

#[test]
fn quadrature_is_converged_relative_to_sampling_error() {
    let spec = CfSpec::new(CfType::BD, 3, 1, 1).unwrap();
    let fields = FieldAssignment::random(&spec, 12, 0.5);
    let quad = CfQuadrature::default();
    let coarse = rhs_cf(&spec, &fields, &quad).unwrap();
    let fine = rhs_cf(&spec, &fields, &quad.doubled()).unwrap();
    let lhs = lhs_cf(&spec, &fields, 20_000, 5).unwrap();
    let min_err = (0..lhs.est.mean.len())
        .map(|m| lhs.est.get(m).stderr())
        .filter(|&s| s > 0.0)
        .fold(f64::MAX, f64::min);
    assert!((&coarse - &fine).max_abs_coeff() < 0.1 * min_err);
}

#[test]
fn first_order_expansions_agree() {
    let spec = CfSpec::new(CfType::BD, 3, 1, 1).unwrap();
    let fields = FieldAssignment::random(&spec, 2, 0.5);
    let rep = moment_expansion_check(&spec, &fields, &CfQuadrature::default()).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
    assert!(rep.lines.iter().any(|l| l.label.starts_with("<Z")));
}

#[test]
fn characteristic_polynomial_identity_small_cases() {
    let quad = DetQuadrature::default();
    let alphas = vec![vec![c(1.5, 0.0)], vec![c(2.0, -0.7)]];
    // O(1) enumeration gives α; O(2) gives α² since E tr g = E det g = 0.
    for (n, power) in [(1, 1), (2, 2)] {
        let rhs = det_identity_rhs(n, &alphas, DetMode::FF, &quad).unwrap();
        for (a, r) in alphas.iter().zip(rhs) {
            assert!((r - a[0].powi(power)).norm() < 1e-10, "N = {n}: {r}");
        }
        let rep = verify_det_identities(n, &alphas, DetMode::FF, &quad, 20_000, 3).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
    }
    let rep =
        verify_det_identities(3, &[vec![c(2.0, 0.0)]], DetMode::BB, &quad, 40_000, 6).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
}

#[test]
fn reciprocal_identity_outside_range_is_refused() {
    let quad = DetQuadrature::default();
    let r = det_identity_rhs(2, &[vec![c(2.0, 0.0)]], DetMode::BB, &quad);
    assert!(matches!(
        r,
        Err(CfError::OutsideStableRange { n: 2, min: 3 })
    ));
    assert!(det_identity_rhs(3, &[vec![c(0.9, 0.0)]], DetMode::BB, &quad).is_err());
}

#[test]
fn saddle_point_sum_on_two_element_group_is_exact() {
    let (b, f) = (c(2.0, 0.3), c(0.6, -0.4));
    let exact = ((f - 1.0) / (b - 1.0) + (f + 1.0) / (b + 1.0)) / 2.0;
    let formula = weyl_ratio_formula(&[b, f], 1, 1, 1).unwrap();
    assert!((formula - exact).norm() < 1e-13, "{formula} vs {exact}");
}

#[test]
fn saddle_point_sum_matches_group_average() {
    let rep = verify_weyl_ratio(
        3,
        1,
        &[
            vec![c(2.0, 0.0), c(3.0, 0.0)],
            vec![c(1.5, 0.5), c(0.4, 0.2)],
        ],
        40_000,
        8,
    )
    .unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
}

#[test]
fn saddle_point_sum_is_finite_near_coincident_parameters() {
    let bos = [c(2.0, 0.1), c(2.6, -0.4)];
    let f1 = c(0.8, 0.3);
    let values: Vec<C64> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&eps| weyl_ratio_formula(&[bos[0], bos[1], f1, 1.0 / f1 + eps], 2, 2, 3).unwrap())
        .collect();
    for w in values.windows(2) {
        assert!(w[0].norm().is_finite());
        assert!((w[0] - w[1]).norm() < 0.05 * w[1].norm().max(1.0));
    }
    assert!(matches!(
        weyl_ratio_formula(&[bos[0], bos[0]], 1, 1, 3),
        Err(CfError::Pole(_))
    ));
    assert!(weyl_ratio_formula(&[c(0.5, 0.0), f1], 1, 1, 3).is_err());
}

#[test]
fn identity_report_lines_are_statistical() {
    let spec = CfSpec::new(CfType::A, 2, 1, 1).unwrap();
    let fields = FieldAssignment::random(&spec, 41, 0.5);
    let rep = verify_cf(&spec, &fields, 20_000, 7, &CfQuadrature::default()).unwrap();
    assert!(
        rep.lines
            .iter()
            .all(|l| l.verdict == Verdict::Pass && l.tolerance > 0.0),
        "{rep:#?}"
    );
}
