mod common;

use common::*;
use nsi_core::exact::{q, Rat};
use nsi_core::ktheory::{
    c1_apply, c1_apply_all, cartier_pair_with_divisor, cartier_product, chi_formal, default_period,
    fit_quasi_polynomial, frobenius_ch2_limit, pair_limit, self_pair_limit, self_pair_limit_with_period,
    twisted_chi, FormalClass, KTheoryError,
};
use nsi_core::toric::{chi, export_surface_model, TorusDivisor};
use proptest::prelude::*;

fn smooth_index() -> impl Strategy<Value = usize> {
    0..2usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// On a smooth toric surface `χ(D) = 1 + (D² − D·K)/2` with `K = −Σ D_ρ`.
    #[test]
    fn smooth_riemann_roch(i in smooth_index(), c in proptest::collection::vec(-3i64..=3, 4)) {
        let (_, fan) = &curated()[i];
        let n = fan.num_rays();
        let d = TorusDivisor(c[..n].to_vec());
        let k = TorusDivisor(vec![-1; n]);
        let dd = Rat::from(cartier_product(fan, &[d.clone(), d.clone()]).unwrap());
        let dk = Rat::from(cartier_product(fan, &[d.clone(), k]).unwrap());
        let expected = Rat::one() + (dd - dk) * q(1, 2);
        prop_assert_eq!(Rat::from(chi(fan, &d).unwrap().chi), expected);
    }

    /// Two `c₁` operators on `[𝒪]` leave exactly the intersection number.
    #[test]
    fn double_c1_on_structure_sheaf(i in 0..5usize, a in proptest::collection::vec(-2i64..=2, 4), b in proptest::collection::vec(-2i64..=2, 4)) {
        let (_, fan) = &curated()[i];
        let n = fan.num_rays();
        let l1 = TorusDivisor(a[..n].to_vec());
        let l2 = TorusDivisor(b[..n].to_vec());
        let (k1, k2) = (default_period(fan, &l1).unwrap() as i64, default_period(fan, &l2).unwrap() as i64);
        let (l1, l2) = (l1.scale(k1), l2.scale(k2));
        let alpha = c1_apply_all(fan, &FormalClass::structure_sheaf(n), &[l1.clone(), l2.clone()]).unwrap();
        let e = export_surface_model(fan).unwrap();
        let expected = e.model.pair(&e.weil_class(&l1), &e.weil_class(&l2)).unwrap();
        prop_assert_eq!(Rat::from(chi_formal(fan, &alpha).unwrap()), expected);
    }

    #[test]
    fn chi_formal_is_additive(i in 0..5usize, a in proptest::collection::vec(-3i64..=3, 4), b in proptest::collection::vec(-3i64..=3, 4), k in -3i64..=3) {
        let (_, fan) = &curated()[i];
        let n = fan.num_rays();
        let x = FormalClass::line_bundle(TorusDivisor(a[..n].to_vec()));
        let y = FormalClass::line_bundle(TorusDivisor(b[..n].to_vec()));
        let lhs = chi_formal(fan, &x.scale(k).add(&y)).unwrap();
        let rhs = k * chi_formal(fan, &x).unwrap() + chi_formal(fan, &y).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert!(x.add(&x.scale(-1)).is_empty());
    }

    #[test]
    fn forced_period_multiples_agree(i in 2..5usize, c in proptest::collection::vec(-2i64..=2, 4), mult in 2u64..=3) {
        let (_, fan) = &curated()[i];
        let d = TorusDivisor(c[..fan.num_rays()].to_vec());
        let base = self_pair_limit(fan, &d, &[]).unwrap();
        let forced = self_pair_limit_with_period(fan, &d, &[], Some(base.period_used * mult)).unwrap();
        prop_assert_eq!(base.value, forced.value);
    }
}

#[test]
fn projective_plane_samples() {
    let fan = p2();
    let h = td(&[1, 0, 0]);
    let r = self_pair_limit(&fan, &h, &[]).unwrap();
    assert_eq!(r.value, Rat::one());
    assert_eq!(r.period_used, 1);
    let chis: Vec<i64> = r.samples.iter().take(6).map(|&(_, c)| c).collect();
    assert_eq!(chis, vec![3, 6, 10, 15, 21, 28]);
    assert_eq!(r.residue_leading_coefficients, vec![q(1, 2)]);
}

#[test]
fn quadric_cone_fit_needs_two_residues() {
    let fan = p112();
    let ruling = td(&[1, 0, 0]);
    let (qp, samples) = fit_quasi_polynomial(&fan, &ruling, &[], 2).unwrap();
    assert_eq!(samples.len(), 10);
    // χ(𝒪(m)) on ℙ(1,1,2) differs between odd and even m only in the constant term
    assert_eq!(qp.leading(0), qp.leading(1));
    assert_ne!(qp.coefficients[0][0], qp.coefficients[1][0]);
    for &(m, c) in &samples {
        assert_eq!(qp.eval(m), Rat::from(c));
    }
    // period 1 is too small for a non-Cartier divisor
    assert!(matches!(
        fit_quasi_polynomial(&fan, &ruling, &[], 1),
        Err(KTheoryError::QuasiPolynomialMismatch { .. })
    ));
}

#[test]
fn divisor_classes_of_toric_curves() {
    for (name, fan) in curated() {
        let n = fan.num_rays();
        for r in 0..n {
            // every invariant curve is a ℙ¹
            let class = FormalClass::divisor_class(&TorusDivisor::prime(n, r));
            assert_eq!(chi_formal(&fan, &class).unwrap(), 1, "{name} ray {r}");
        }
    }
}

#[test]
fn cartier_pairing_with_weil_divisors() {
    let fan = p112();
    let o2 = td(&[0, 1, 0]);
    let ruling = td(&[1, 0, 0]);
    assert_eq!(cartier_pair_with_divisor(&fan, &o2, &ruling, &[]).unwrap(), 1);
    assert_eq!(pair_limit(&fan, &o2, &ruling, &[]).unwrap(), Rat::one());
    let twisted = c1_apply(&fan, &FormalClass::line_bundle(ruling.clone()), &o2).unwrap();
    assert_eq!(Rat::from(chi_formal(&fan, &twisted).unwrap()), q(2, 1));
}

#[test]
fn error_paths() {
    let fan = p112();
    let ruling = td(&[1, 0, 0]);
    assert!(matches!(
        c1_apply(&fan, &FormalClass::structure_sheaf(3), &ruling),
        Err(KTheoryError::NotCartier(_))
    ));
    assert_eq!(
        self_pair_limit(&fan, &ruling, std::slice::from_ref(&ruling)),
        Err(KTheoryError::WrongTwistCount { expected: 0, found: 1 })
    );
    assert_eq!(
        self_pair_limit(&p3(), &td(&[1, 0, 0, 0]), &[]),
        Err(KTheoryError::WrongTwistCount { expected: 1, found: 0 })
    );
    assert_eq!(frobenius_ch2_limit(&fan, &ruling, 4, &[]), Err(KTheoryError::NotPrime(4)));
    assert!(matches!(
        self_pair_limit_with_period(&fan, &ruling, &[], Some(0)),
        Err(KTheoryError::InvalidPeriod(_))
    ));
    assert!(twisted_chi(&fan, &td(&[1, 0]), &[]).is_err());
}

#[test]
fn rank_three_twisted_chi() {
    // χ(c₁(H)·𝒪(mH)) on ℙ³ is χ(𝒪_{ℙ²}(m))
    let fan = p3();
    let h = td(&[0, 0, 0, 1]);
    for m in 0..5i64 {
        assert_eq!(twisted_chi(&fan, &h.scale(m), std::slice::from_ref(&h)).unwrap(), (m + 1) * (m + 2) / 2);
    }
    assert_eq!(cartier_product(&fan, &[h.clone(), h.clone(), h.clone()]).unwrap(), 1);
    let d3 = td(&[0, 0, 1, 0]);
    assert_eq!(cartier_product(&p1112(), &[d3.clone(), d3.clone(), d3]).unwrap(), 4);
}
