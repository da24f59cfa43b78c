mod common;

use common::*;
use nsi_core::exact::{q, QVector, Rat};
use nsi_core::surface::{ModelFile, NormalSurfaceModel, SurfaceError, WeilClass};
use nsi_core::toric::{
    chi, chi_with_padding, export_surface_model, lattice_point_count, resolve_fan_2d, support_pullback, Fan,
    FanError, TorusDivisor,
};
use proptest::prelude::*;

fn floor_divisor(v: &QVector) -> TorusDivisor {
    TorusDivisor(v.iter().map(|c| c.floor().to_i64().unwrap()).collect())
}

fn fan_index() -> impl Strategy<Value = usize> {
    0..curated().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wider_character_box_changes_nothing(i in fan_index(), c in proptest::collection::vec(-3i64..=3, 4)) {
        let (_, fan) = &curated()[i];
        let d = TorusDivisor(c[..fan.num_rays()].to_vec());
        prop_assert_eq!(chi(fan, &d).unwrap().h, chi_with_padding(fan, &d, 3).unwrap().h);
    }

    #[test]
    fn chi_survives_the_rounded_pullback(i in fan_index(), c in proptest::collection::vec(-4i64..=4, 4)) {
        let (_, fan) = &curated()[i];
        let d = TorusDivisor(c[..fan.num_rays()].to_vec());
        let res = resolve_fan_2d(fan).unwrap();
        let up = floor_divisor(&support_pullback(fan, &res, &d).unwrap());
        prop_assert_eq!(chi(fan, &d).unwrap().h, chi(&res.fan, &up).unwrap().h);
    }

    #[test]
    fn principal_divisors_are_invisible(i in fan_index(), c in proptest::collection::vec(-3i64..=3, 4), u in (-3i64..=3, -3i64..=3)) {
        let (_, fan) = &curated()[i];
        let d = TorusDivisor(c[..fan.num_rays()].to_vec());
        let shifted = d.add(&fan.principal_divisor(&[u.0, u.1]));
        let e = export_surface_model(fan).unwrap();
        prop_assert_eq!(chi(fan, &d).unwrap().h, chi(fan, &shifted).unwrap().h);
        let p = e.model.pair(&e.weil_class(&d), &e.weil_class(&d)).unwrap();
        let ps = e.model.pair(&e.weil_class(&shifted), &e.weil_class(&shifted)).unwrap();
        prop_assert_eq!(p, ps);
    }

    #[test]
    fn pairing_is_relabel_invariant(i in fan_index(), c in proptest::collection::vec(-3i64..=3, 4), rot in 0usize..4) {
        let (_, fan) = &curated()[i];
        let n = fan.num_rays();
        let d = TorusDivisor(c[..n].to_vec());
        let perm: Vec<usize> = (0..n).map(|k| (k + rot) % n).collect();
        let other = fan.relabel(&perm).unwrap();
        let moved = TorusDivisor(perm.iter().map(|&o| d.0[o]).collect());
        let e1 = export_surface_model(fan).unwrap();
        let e2 = export_surface_model(&other).unwrap();
        prop_assert_eq!(
            e1.model.pair(&e1.weil_class(&d), &e1.weil_class(&d)).unwrap(),
            e2.model.pair(&e2.weil_class(&moved), &e2.weil_class(&moved)).unwrap()
        );
        prop_assert_eq!(chi(fan, &d).unwrap().chi, chi(&other, &moved).unwrap().chi);
    }

    #[test]
    fn pullback_kills_exceptional_pairings(i in fan_index(), c in proptest::collection::vec(-6i64..=6, 4)) {
        let (_, fan) = &curated()[i];
        let e = export_surface_model(fan).unwrap();
        let d = TorusDivisor(c[..fan.num_rays()].to_vec());
        let pull = e.model.mumford_pullback(&e.weil_class(&d)).unwrap();
        for group in e.model.exceptional_groups() {
            for &j in group {
                prop_assert!(e.model.intersect(&pull, &QVector::unit(e.model.dim(), j)).unwrap().is_zero());
            }
        }
    }
}

#[test]
fn nef_divisors_count_lattice_points() {
    for (name, fan) in curated() {
        let e = export_surface_model(&fan).unwrap();
        let n = fan.num_rays();
        let mut nef_seen = 0;
        for d in divisor_box(n, 2) {
            let cl = e.weil_class(&d);
            let nef = (0..n).all(|r| !e.model.pair(&cl, &e.weil_class(&TorusDivisor::prime(n, r))).unwrap().is_negative());
            if nef {
                nef_seen += 1;
                let report = chi(&fan, &d).unwrap();
                assert_eq!(report.h[1..], [0, 0], "{name} {:?}", d.0);
                assert_eq!(report.chi as u64, lattice_point_count(&fan, &d).unwrap(), "{name} {:?}", d.0);
            }
        }
        assert!(nef_seen > 0, "{name}");
    }
}

#[test]
fn projective_plane_values() {
    let fan = p2();
    for k in -4i64..=4 {
        // χ(𝒪(k)) = (k+1)(k+2)/2
        let expected = (k + 1) * (k + 2) / 2;
        assert_eq!(chi(&fan, &td(&[k, 0, 0])).unwrap().chi, expected, "k={k}");
    }
    assert_eq!(chi(&fan, &td(&[-3, 0, 0])).unwrap().h, vec![0, 0, 1]);
}

#[test]
fn quadric_cone_model() {
    let e = export_surface_model(&p112()).unwrap();
    assert_eq!(e.model.exceptional_groups().len(), 1);
    let ruling = e.weil_class(&td(&[1, 0, 0]));
    assert_eq!(e.model.pair(&ruling, &ruling).unwrap(), q(1, 2));
    assert_eq!(e.model.cartier_index(&ruling).unwrap(), 2.into());
    assert_eq!(e.model.cartier_index(&e.weil_class(&td(&[0, 1, 0]))).unwrap(), 1.into());
    // A₁ is canonical: f*K_X = K_X̃
    let k = e.model.canonical_pullback().unwrap();
    assert_eq!(&k, e.model.canonical());
    assert_eq!(e.model.pair_with_canonical(&ruling).unwrap(), q(-2, 1));
}

#[test]
fn one_third_point_discrepancy() {
    let e = export_surface_model(&p113()).unwrap();
    let a = e.model.discrepancies().unwrap();
    assert_eq!(a, vec![QVector::new(vec![q(-1, 3)])]);
}

#[test]
fn model_file_round_trip() {
    let e = export_surface_model(&two_singular()).unwrap();
    let file = e.model.to_file();
    let json = serde_json::to_string(&file).unwrap();
    let back = NormalSurfaceModel::from_file(serde_json::from_str::<ModelFile>(&json).unwrap()).unwrap();
    assert_eq!(back, e.model);
}

#[test]
fn model_validation_errors() {
    let gram = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
    let file = |gram: Vec<Vec<Rat>>, groups: Vec<Vec<usize>>| ModelFile {
        basis: vec!["A".into(), "B".into()],
        gram,
        exceptional_groups: groups,
        canonical: vec![Rat::zero(), Rat::zero()],
        toric_derived: false,
        chi_o: None,
    };
    assert!(matches!(
        NormalSurfaceModel::from_file(file(gram.clone(), vec![vec![0]])),
        Err(SurfaceError::NotNegativeDefinite { group: 0, minor: 0 })
    ));
    let half = vec![vec![q(-1, 2), q(0, 1)], vec![q(0, 1), q(-1, 1)]];
    assert_eq!(NormalSurfaceModel::from_file(file(half, vec![])), Err(SurfaceError::NotIntegral));
    let skew = vec![vec![q(-2, 1), q(1, 1)], vec![q(0, 1), q(-2, 1)]];
    assert_eq!(NormalSurfaceModel::from_file(file(skew, vec![])), Err(SurfaceError::NotSymmetric));
    let m = NormalSurfaceModel::from_file(file(gram, vec![])).unwrap();
    assert!(matches!(m.pair(&WeilClass(vec![1]), &WeilClass(vec![1, 0])), Err(SurfaceError::DimensionMismatch { .. })));
}

#[test]
fn fan_validation_errors() {
    assert_eq!(Fan::planar(vec![[2, 0], [0, 1], [-1, -1]]).unwrap_err(), FanError::NotPrimitive(0));
    assert!(matches!(Fan::planar(vec![[1, 0], [0, 1]]), Err(FanError::NotComplete(_))));
    assert!(matches!(Fan::planar(vec![[1, 0], [0, 1], [1, 0], [-1, -1]]), Err(FanError::DuplicateRay(_))));
}
