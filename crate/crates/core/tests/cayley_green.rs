use cfkit::cayley::{
    cauchy_fourier_quadrature, cayley, fermion_pair_moments, gaussian_rep_check,
    greens_cayley_factorization, greens_cayley_rhs, hyperbolic_symmetry_check, min_real_part,
    phase_average_kernels, phase_average_lhs, phase_average_rhs, random_contraction,
    resolvent_residuals, resolvent_sweep, swap2, verify_resolvent_identities, FloquetModel,
    PhaseDisorder,
};
use cfkit::haar::{sample_haar, GroupFamily, GroupSpec};
use cfkit::stats::stream_rng;
use cfkit::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn haar_unitary(d: usize, seed: u64) -> DMatrix<C64> {
    sample_haar(
        GroupSpec::new(GroupFamily::Unitary, d).unwrap(),
        &mut stream_rng(seed, 0),
    )
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `|((1 - ζ U_d U_f)⁻¹)_{jk}|²` through a full inverse.
fn green_sq_by_inverse(model: &FloquetModel, theta: &PhaseDisorder, j: usize, k: usize) -> f64 {
    let d = model.d();
    let m = DMatrix::identity(d, d) - &model.ud * theta.uf() * model.zeta();
    m.try_inverse().unwrap()[(j, k)].norm_sqr()
}

/// `det` of the principal submatrix on the complement of the mask `s`.
fn complementary_minor(b: &DMatrix<C64>, s: usize) -> C64 {
    let keep: Vec<usize> = (0..b.nrows()).filter(|i| s >> i & 1 == 0).collect();
    if keep.is_empty() {
        return c(1.0, 0.0);
    }
    DMatrix::from_fn(keep.len(), keep.len(), |a, b2| b[(keep[a], keep[b2])]).determinant()
}

#[test]
fn cayley_transform_examples() {
    let zero = DMatrix::<C64>::zeros(3, 3);
    assert_eq!(cayley(&zero).unwrap(), DMatrix::identity(3, 3));
    let half = DMatrix::from_element(1, 1, c(0.5, 0.0));
    assert!((cayley(&half).unwrap()[(0, 0)] - 3.0).norm() < 1e-15);
    assert!(cayley(&DMatrix::identity(2, 2)).is_err());
    assert!(cayley(&DMatrix::<C64>::zeros(2, 3)).is_err());
}

#[test]
fn cayley_of_inverse_unitary_flips_sign() {
    for d in 1..=5 {
        let u = haar_unitary(d, 40 + d as u64);
        let a = cayley(&u).unwrap();
        let b = cayley(&u.adjoint()).unwrap();
        assert!(
            max_abs(&(&a + &b)) < 1e-10 * max_abs(&a).max(1.0),
            "d = {d}"
        );
        // A_U is anti-Hermitian for unitary U.
        assert!(max_abs(&(&a + a.adjoint())) < 1e-10 * max_abs(&a).max(1.0));
    }
}

#[test]
fn contractions_have_positive_cayley_real_part() {
    let mut rng = stream_rng(3, 0);
    for d in 1..=8 {
        let g = random_contraction(d, 0.97, &mut rng);
        assert!(min_real_part(&cayley(&g).unwrap()) > 0.0, "d = {d}");
    }
}

#[test]
fn resolvent_identity_scalar_and_trivial_cases() {
    let half = DMatrix::from_element(1, 1, c(0.5, 0.0));
    // (1 - 1/4)⁻¹ = 4/3 and every factorized form must reproduce it.
    let res = resolvent_residuals(&half, &half).unwrap();
    assert!(res.iter().all(|r| *r < 1e-15), "{res:?}");
    let mut rng = stream_rng(8, 0);
    let h = random_contraction(4, 0.6, &mut rng);
    let res = resolvent_residuals(&DMatrix::zeros(4, 4), &h).unwrap();
    assert!(res.iter().all(|r| *r < 1e-13), "{res:?}");
    assert!(resolvent_residuals(&half, &DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn resolvent_identities_at_dimension_five() {
    let mut rng = stream_rng(5, 0);
    let g = random_contraction(5, 0.8, &mut rng);
    let h = random_contraction(5, 0.9, &mut rng);
    let rep = verify_resolvent_identities(&g, &h).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
    assert!(rep.lines.iter().all(|l| l.estimate.re < 1e-11));
}

#[test]
fn sweep_passes_and_reports_positivity() {
    let rep = resolvent_sweep(40, 12, 2).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
    assert_eq!(rep.lines.len(), 5);
    assert!(resolvent_sweep(1, 0, 2).is_err());
}

#[test]
fn squared_green_function_factorizes() {
    let model = FloquetModel::with_zeta(haar_unitary(4, 11), c(0.6, 0.2), c(0.85, 0.0)).unwrap();
    let theta = PhaseDisorder::sample(4, &mut stream_rng(11, 1));
    for (j, k) in [(0, 3), (2, 1)] {
        let want = green_sq_by_inverse(&model, &theta, j, k);
        let got = greens_cayley_rhs(&model, &theta, j, k).unwrap();
        assert!(
            (got - want).norm() < 1e-10 * want,
            "({j},{k}): {got} vs {want}"
        );
    }
    assert!(greens_cayley_factorization(&model, &theta, 1, 2)
        .unwrap()
        .all_pass());
}

#[test]
fn green_factorization_degenerate_limits() {
    let theta = PhaseDisorder {
        theta: vec![0.4, 2.1],
    };
    // Small ζ: the off-diagonal element vanishes like ζ.
    let tiny = FloquetModel::with_zeta(swap2(), c(1e-6, 0.0), c(0.5, 0.0)).unwrap();
    let v = greens_cayley_rhs(&tiny, &theta, 0, 1).unwrap();
    assert!((v - green_sq_by_inverse(&tiny, &theta, 0, 1)).norm() < 1e-20);
    assert!(v.norm() < 1e-11);
    // Diagonal U_d decouples the sites.
    let diag = FloquetModel::with_zeta(DMatrix::identity(2, 2), c(0.7, 0.0), c(0.8, 0.0)).unwrap();
    assert!(greens_cayley_rhs(&diag, &theta, 0, 1).unwrap().norm() < 1e-14);
    assert!(greens_cayley_rhs(&diag, &theta, 1, 1).is_err());
}

#[test]
fn fermion_moments_are_complementary_minors() {
    let mut rng = stream_rng(21, 0);
    for d in 1..=4 {
        let b = random_contraction(d, 0.7, &mut rng) + DMatrix::identity(d, d);
        let moments = fermion_pair_moments(&b).unwrap();
        assert_eq!(moments.len(), 1 << d);
        for (s, m) in moments.iter().enumerate() {
            let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let want = complementary_minor(&b, s) * sign;
            assert!(
                (m - want).norm() < 1e-12,
                "d = {d}, S = {s:b}: {m} vs {want}"
            );
        }
    }
    assert!(fermion_pair_moments(&DMatrix::identity(9, 9)).is_err());
}

#[test]
fn gaussian_representation_matches_factorization() {
    let model = FloquetModel::with_zeta(haar_unitary(3, 9), c(0.5, -0.3), c(0.9, 0.0)).unwrap();
    let theta = PhaseDisorder::sample(3, &mut stream_rng(9, 1));
    let rep = gaussian_rep_check(&model, &theta, 0, 2).unwrap();
    assert!(rep.all_pass(), "{rep:#?}");
    assert!((rep.lines[0].estimate - 1.0).norm() < 1e-12);
    assert!(gaussian_rep_check(&model, &theta, 1, 1).is_err());
}

#[test]
fn fourier_transform_of_cauchy_kernel() {
    for q in [0.0, 0.5, 1.0, 2.0, 4.0, -3.0] {
        let (v, err) = cauchy_fourier_quadrature(q);
        let want = (-f64::abs(q) / 2.0).exp();
        assert!((v - want).abs() < 1e-8, "q = {q}: {v} vs {want}");
        assert!(err < 1e-8);
    }
}

#[test]
fn regularized_phase_kernels() {
    for r in [0.5, 0.9, 0.99] {
        let beta = c(r, 0.0);
        for q in [0.0, 0.5, 2.0, -1.5] {
            let k = phase_average_kernels(q, beta, 64).unwrap();
            // exp(-q A/2) is analytic in βe^{iθ}, so its mean is the value at 0.
            let cauchy = (-f64::abs(q) / 2.0).exp();
            assert!((k.cauchy - cauchy).norm() < 1e-12, "r = {r}, q = {q}");
            // Residue at w = r² of the δ-weighted integrand.
            let s = 1.0 - r * r;
            let delta = (-0.5 * q.abs() * (1.0 + r * r) / s).exp() / s;
            let got = k.delta_value.unwrap();
            assert!(
                (got - delta).norm() < 1e-10 * delta.max(1.0),
                "r = {r}, q = {q}: {got} vs {delta}"
            );
            assert!((k.delta_width - 2.0 * s / (1.0 + r * r)).abs() < 1e-15);
        }
    }
    let limit = phase_average_kernels(2.0, c(0.0, 1.0), 64).unwrap();
    assert!(limit.delta_value.is_none() && limit.delta_width == 0.0);
    assert!((limit.cauchy - (-1.0f64).exp()).norm() < 1e-15);
    assert!(phase_average_kernels(1.0, c(1.1, 0.0), 64).is_err());
}

#[test]
fn single_site_phase_average() {
    let zeta = c(0.6, 0.3);
    let model = FloquetModel::with_zeta(DMatrix::identity(1, 1), zeta, c(0.9, 0.0)).unwrap();
    let est = phase_average_lhs(&model, 0, 0, 40_000, 4).unwrap();
    let want = 1.0 / (1.0 - zeta.norm_sqr());
    assert!(est.z_score(c(want, 0.0)) < 4.0, "{:?} vs {want}", est.mean);
}

#[test]
fn swap_model_phase_average_both_routes() {
    let zeta: f64 = 0.7;
    // G_01 = ζ e^{iθ_1} / (1 - ζ² e^{i(θ_0+θ_1)}), averaged over the phase sum.
    let want = c(zeta * zeta / (1.0 - zeta.powi(4)), 0.0);
    let model = FloquetModel::with_zeta(swap2(), c(zeta, 0.0), c(0.8, 0.0)).unwrap();
    let lhs = phase_average_lhs(&model, 0, 1, 40_000, 6).unwrap();
    assert!(lhs.z_score(want) < 4.0, "{:?}", lhs.mean);
    let rhs = phase_average_rhs(&model, 0, 1, 100_000, 7, 64).unwrap();
    assert!(rhs.z_score(want) < 4.0, "{:?} ± {}", rhs.mean, rhs.stderr());
    assert!(rhs.stderr() < 0.1 * want.re);
}

#[test]
fn hyperbolic_symmetry_holds() {
    // The bare swap has eigenvalue 1, so its Cayley transform does not exist.
    assert!(hyperbolic_symmetry_check(&swap2(), &[0.3], 5).is_err());
    for ud in [
        swap2() * c(0.0, 1.0),
        haar_unitary(2, 13),
        haar_unitary(3, 14),
    ] {
        let rep = hyperbolic_symmetry_check(&ud, &[0.3, -1.1, 2.0], 5).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
        assert_eq!(rep.lines.len(), 7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resolvent_identities_hold_for_contractions(seed in any::<u64>(), d in 1usize..10, rg in 0.05f64..0.95, rh in 0.05f64..0.95) {
        let mut rng = stream_rng(seed, 0);
        let g = random_contraction(d, rg, &mut rng);
        let h = random_contraction(d, rh, &mut rng);
        let res = resolvent_residuals(&g, &h).unwrap();
        prop_assert!(res.iter().all(|r| *r < 1e-10), "{:?}", res);
        prop_assert!(min_real_part(&cayley(&g).unwrap()) > 0.0);
    }
}
