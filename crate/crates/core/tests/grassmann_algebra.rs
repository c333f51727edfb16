use cfkit::grassmann::{berezin, gp_exp, gp_inv, gp_mul, Grassmann};
use cfkit::scalar::Rational;
use cfkit::supermatrix::{det_by_minors, smat_inv, smat_sdet, smat_str, SuperMatrix};
use cfkit::{CfError, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn gen(n: usize, i: usize) -> Grassmann<C64> {
    Grassmann::generator(n, i).unwrap()
}

fn scalar(n: usize, v: C64) -> Grassmann<C64> {
    Grassmann::scalar(n, v).unwrap()
}

fn max_diff(a: &Grassmann<C64>, b: &Grassmann<C64>) -> f64 {
    (a - b).max_abs_coeff()
}

#[test]
fn generators_anticommute_and_square_to_zero() {
    let (x1, x2) = (gen(3, 0), gen(3, 1));
    assert_eq!(&x1 * &x2, -(&x2 * &x1));
    assert!((&x1 * &x1).is_zero());
}

#[test]
fn square_of_one_plus_pair() {
    let p = (&gen(2, 0) * &gen(2, 1)).add_scalar(c(1.0, 0.0));
    let sq = &p * &p;
    let want = Grassmann::from_terms(2, vec![(0, c(1.0, 0.0)), (0b11, c(2.0, 0.0))]).unwrap();
    assert_eq!(sq, want);
}

#[test]
fn product_of_mismatched_sizes_is_rejected() {
    let r = gp_mul(&gen(2, 0), &gen(3, 0));
    assert!(matches!(r, Err(CfError::SizeMismatch(2, 3))));
}

#[test]
fn exponential_examples() {
    assert_eq!(
        gp_exp(&Grassmann::<C64>::zero(2).unwrap()).unwrap(),
        Grassmann::one(2).unwrap()
    );
    let cc = c(0.3, -0.2);
    let pair = &gen(2, 0) * &gen(2, 1);
    let e = gp_exp(&pair.add_scalar(cc)).unwrap();
    let want = pair.add_scalar(c(1.0, 0.0)).scale(&cc.exp());
    assert!(max_diff(&e, &want) < 1e-15);
    assert!(matches!(gp_exp(&gen(2, 0)), Err(CfError::NotEven)));
}

#[test]
fn berezin_examples() {
    let x = gen(2, 0);
    assert_eq!(berezin(&x, &[0]).unwrap(), Grassmann::one(2).unwrap());
    assert!(berezin(&Grassmann::<C64>::one(2).unwrap(), &[0])
        .unwrap()
        .is_zero());

    // exp(ξ0 a ξ1) = 1 + a ξ0ξ1; ∂_1 then ∂_0 gives -a, the other order +a.
    let a = c(1.7, 0.4);
    let e = gp_exp(&(&x * &gen(2, 1)).scale(&a)).unwrap();
    let expanded = Grassmann::from_terms(2, vec![(0, c(1.0, 0.0)), (0b11, a)]).unwrap();
    assert_eq!(e, expanded);
    assert_eq!(berezin(&e, &[1, 0]).unwrap().numeric(), -a);
    assert_eq!(berezin(&e, &[0, 1]).unwrap().numeric(), a);
}

#[test]
fn supertrace_examples() {
    let id = SuperMatrix::<C64>::identity(3, 2, 0).unwrap();
    assert_eq!(smat_str(&id).numeric(), c(1.0, 0.0));
    let mut s3 = SuperMatrix::<C64>::identity(4, 0, 0).unwrap();
    for i in 2..4 {
        s3.set(i, i, scalar(0, c(-1.0, 0.0))).unwrap();
    }
    assert_eq!(smat_str(&s3).numeric(), c(0.0, 0.0));
}

#[test]
fn inverse_examples() {
    let id = SuperMatrix::<C64>::identity(2, 1, 2).unwrap();
    assert_eq!(smat_inv(&id).unwrap(), id);

    let d = [c(2.0, 0.0), c(0.0, 4.0), c(-0.5, 0.0)];
    let entries = (0..9)
        .map(|k| scalar(0, if k % 4 == 0 { d[k / 4] } else { c(0.0, 0.0) }))
        .collect();
    let m = SuperMatrix::new(2, 1, entries).unwrap();
    let inv = smat_inv(&m).unwrap();
    for (i, di) in d.iter().enumerate() {
        assert!((inv.get(i, i).numeric() - 1.0 / di).norm() < 1e-15);
    }

    let sing = SuperMatrix::<C64>::zeros(1, 1, 0).unwrap();
    assert!(smat_inv(&sing).is_err());
    assert!(smat_sdet(&sing).is_err());
}

#[test]
fn parity_violation_is_rejected() {
    let entries = vec![
        gen(1, 0),
        scalar(1, c(0.0, 0.0)),
        scalar(1, c(0.0, 0.0)),
        scalar(1, c(1.0, 0.0)),
    ];
    assert!(matches!(
        SuperMatrix::new(1, 1, entries),
        Err(CfError::ParityViolation { row: 0, col: 0 })
    ));
}

/// The 1|1 superdeterminant `SDet(1 - Z̃Z)` against its printed expansion
/// `S0 + S2 + S4`.
#[test]
fn sdet_one_minus_ztilde_z_expansion() {
    let n = 4;
    let (z00, z11, zt00, zt11) = (c(0.3, 0.2), c(-0.7, 0.4), c(0.1, -0.5), c(0.6, 0.25));
    let (z01, z10, zt01, zt10) = (gen(n, 0), gen(n, 1), gen(n, 2), gen(n, 3));
    let z = SuperMatrix::new(
        1,
        1,
        vec![scalar(n, z00), z01.clone(), z10.clone(), scalar(n, z11)],
    )
    .unwrap();
    let zt = SuperMatrix::new(
        1,
        1,
        vec![scalar(n, zt00), zt01.clone(), zt10.clone(), scalar(n, zt11)],
    )
    .unwrap();
    let one = SuperMatrix::identity(1, 1, n).unwrap();
    let sdet = smat_sdet(&one.sub(&zt.mul(&z).unwrap()).unwrap()).unwrap();

    let d = c(1.0, 0.0) - zt11 * z11;
    let s0 = scalar(n, (c(1.0, 0.0) - zt00 * z00) / d);
    let s2_num = &(&zt01 * &z10) + &(&z01 * &zt10);
    let s2_num = &s2_num + &(&zt01 * &zt10).scale(&(z11 * z00));
    let s2_num = &s2_num + &(&z01 * &z10).scale(&(zt11 * zt00));
    let s2 = s2_num.scale(&(-1.0 / (d * d)));
    let s4 = (&(&zt01 * &z10) * &(&z01 * &zt10)).scale(&((1.0 + zt11 * z11) / (d * d * d)));
    let printed = &(&s0 + &s2) + &s4;
    assert!(max_diff(&sdet, &printed) < 1e-14, "{sdet} vs {printed}");
}

/// `∫ exp(-ψ̄ M ψ)` over all pairs equals `det M`, with `ψ̄_i = 2i`,
/// `ψ_i = 2i + 1` and each pair integrated `ψ_i` first.
#[test]
fn fermionic_gaussian_is_determinant() {
    for size in 1..=4 {
        let n = 2 * size;
        let m = DMatrix::from_fn(size, size, |i, j| {
            c(
                0.3 * i as f64 - 0.2 * j as f64 + 0.1,
                0.15 * (i * j) as f64 - 0.05,
            )
        });
        let mut q = Grassmann::zero(n).unwrap();
        for i in 0..size {
            for j in 0..size {
                q = &q + &(&gen(n, 2 * i) * &gen(n, 2 * j + 1)).scale(&(-m[(i, j)]));
            }
        }
        let order: Vec<usize> = (0..size).flat_map(|i| [2 * i + 1, 2 * i]).collect();
        let integral = berezin(&gp_exp(&q).unwrap(), &order).unwrap().numeric();
        let entries: Vec<_> = (0..size * size)
            .map(|k| scalar(0, m[(k / size, k % size)]))
            .collect();
        let cofactor = det_by_minors(&entries, size, 0).numeric();
        assert!(
            (integral - cofactor).norm() < 1e-13,
            "size {size}: {integral} vs {cofactor}"
        );
    }
}

// ---------------------------------------------------------------------------
// Properties

const NG: usize = 5;

fn rational_poly(parity: Option<u32>) -> impl Strategy<Value = Grassmann<Rational>> {
    prop::collection::vec((0u64..(1 << NG), -4i64..=4), 0..8).prop_map(move |terms| {
        let terms = terms
            .into_iter()
            .filter(|(m, _)| parity.is_none_or(|p| m.count_ones() % 2 == p))
            .map(|(m, k)| (m, Rational::from_integer(k as i128)))
            .collect();
        Grassmann::from_terms(NG, terms).unwrap()
    })
}

fn complex_poly(n: usize, parity: u32, scale: f64) -> impl Strategy<Value = Grassmann<C64>> {
    prop::collection::vec((0u64..(1 << n), -1.0..1.0f64, -1.0..1.0f64), 0..6).prop_map(
        move |terms| {
            let terms = terms
                .into_iter()
                .filter(|(m, _, _)| m.count_ones() % 2 == parity && *m != 0)
                .map(|(m, re, im)| (m, c(scale * re, scale * im)))
                .collect();
            Grassmann::from_terms(n, terms).unwrap()
        },
    )
}

/// Supermatrix `num + nil` with a complex numeric matrix `num` on the even
/// blocks and random nilpotent entries of the right parity everywhere.
fn supermatrix(
    p: usize,
    q: usize,
    n: usize,
    num_scale: f64,
    shift: f64,
) -> impl Strategy<Value = SuperMatrix<C64>> {
    let dim = p + q;
    (
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim),
        prop::collection::vec(complex_poly(n, 0, 0.5), dim * dim),
        prop::collection::vec(complex_poly(n, 1, 0.5), dim * dim),
    )
        .prop_map(move |(num, even, odd)| {
            let entries = (0..dim * dim)
                .map(|k| {
                    let (i, j) = (k / dim, k % dim);
                    if (i < p) == (j < p) {
                        let diag = if i == j { shift } else { 0.0 };
                        even[k].add_scalar(c(num_scale * num[k].0 + diag, num_scale * num[k].1))
                    } else {
                        odd[k].clone()
                    }
                })
                .collect();
            SuperMatrix::new(p, q, entries).unwrap()
        })
}

fn smat_exp(x: &SuperMatrix<C64>) -> SuperMatrix<C64> {
    let mut acc = SuperMatrix::identity(x.p(), x.q(), x.n_gen()).unwrap();
    let mut term = acc.clone();
    for k in 1..40 {
        term = term.mul(x).unwrap().scale(&c(1.0 / k as f64, 0.0));
        acc = acc.add(&term).unwrap();
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative_and_distributive(
        a in rational_poly(None), b in rational_poly(None), d in rational_poly(None)
    ) {
        prop_assert_eq!(&(&a * &b) * &d, &a * &(&b * &d));
        prop_assert_eq!(&a * &(&b + &d), &(&a * &b) + &(&a * &d));
    }

    #[test]
    fn graded_commutativity(a in rational_poly(Some(1)), b in rational_poly(Some(1)), e in rational_poly(Some(0))) {
        prop_assert_eq!(&a * &b, -(&b * &a));
        prop_assert_eq!(&a * &e, &e * &a);
    }

    #[test]
    fn exponential_of_negation_is_inverse(x in complex_poly(6, 0, 1.0), re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let x = x.add_scalar(c(re, im));
        let prod = &gp_exp(&x).unwrap() * &gp_exp(&(-&x)).unwrap();
        prop_assert!(max_diff(&prod, &Grassmann::one(6).unwrap()) < 1e-12);
        let inv = gp_inv(&x.add_scalar(c(1.5, 0.0))).unwrap();
        prop_assert!(max_diff(&(&inv * &x.add_scalar(c(1.5, 0.0))), &Grassmann::one(6).unwrap()) < 1e-12);
    }

    #[test]
    fn berezin_is_linear(a in complex_poly(5, 0, 1.0), b in complex_poly(5, 1, 1.0), k in -2.0..2.0f64) {
        let lhs = berezin(&(&a + &b.scale(&c(k, 0.0))), &[3, 1]).unwrap();
        let rhs = &berezin(&a, &[3, 1]).unwrap() + &berezin(&b, &[3, 1]).unwrap().scale(&c(k, 0.0));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-14);
    }

    #[test]
    fn supertrace_is_cyclic(m in supermatrix(2, 2, 5, 1.0, 0.0), n in supermatrix(2, 2, 5, 1.0, 0.0)) {
        let lhs = smat_str(&m.mul(&n).unwrap());
        let rhs = smat_str(&n.mul(&m).unwrap());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn inverse_is_two_sided(m in supermatrix(2, 1, 5, 0.3, 1.0)) {
        let inv = smat_inv(&m).unwrap();
        let id = SuperMatrix::identity(2, 1, 5).unwrap();
        prop_assert!(m.mul(&inv).unwrap().sub(&id).unwrap().max_abs_coeff() < 1e-12);
        prop_assert!(inv.mul(&m).unwrap().sub(&id).unwrap().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn sdet_is_multiplicative(m in supermatrix(2, 2, 5, 0.3, 1.0), n in supermatrix(2, 2, 5, 0.3, 1.0)) {
        let lhs = smat_sdet(&m.mul(&n).unwrap()).unwrap();
        let rhs = &smat_sdet(&m).unwrap() * &smat_sdet(&n).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn sdet_of_exponential(x in supermatrix(2, 1, 4, 0.4, 0.0)) {
        let lhs = smat_sdet(&smat_exp(&x)).unwrap();
        let rhs = gp_exp(&smat_str(&x)).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }
}
