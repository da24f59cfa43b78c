//! Chern data of reflexive sheaves on normal surface models: `c₁`, `c₂`,
//! the discriminant, `ch₂`, and Riemann–Roch with local defect terms.
//!
//! Local `c₂` contributions at singular points are supplied data. The ledger
//! only does the bookkeeping that direct sums, twists and Frobenius pullback
//! impose on them.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{QVector, Rat};
use crate::surface::{NormalSurfaceModel, SurfaceError, WeilClass};
use crate::toric::{chi, export_surface_model, ExportedModel, Fan, FanError, TorusDivisor};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChernError {
    #[error("ModelMismatch: {0}")]
    ModelMismatch(String),
    #[error("MissingChiO: the model does not record χ(𝒪_X)")]
    MissingChiO,
    #[error("InvalidRank: rank must be at least 1")]
    InvalidRank,
    #[error("RankOneLocalC2: rank-1 sheaves have no local c2 (group {0})")]
    RankOneLocalC2(usize),
    #[error("DefectAttributionMismatch: oracle total {total}, local sum {local}")]
    DefectAttributionMismatch { total: Rat, local: Rat },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Fan(#[from] FanError),
}

/// Rank, first Chern class and second Chern class bookkeeping of a
/// reflexive sheaf on a normal surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheafData {
    pub rank: u32,
    pub c1: WeilClass,
    /// `c₂(f_x, ·)` per exceptional group.
    #[serde(default)]
    pub local_c2: BTreeMap<usize, Rat>,
    /// Pushed-forward `c₂` of the sheaf on the resolution.
    pub smooth_c2: Rat,
}

impl SheafData {
    /// `𝒪_X(D)`.
    pub fn line_bundle(c1: WeilClass) -> Self {
        SheafData {
            rank: 1,
            c1,
            local_c2: BTreeMap::new(),
            smooth_c2: Rat::zero(),
        }
    }

    /// `𝒪_X^{⊕r}` on a model of dimension `dim`.
    pub fn trivial(rank: u32, dim: usize) -> Self {
        SheafData {
            rank,
            c1: WeilClass::zero(dim),
            local_c2: BTreeMap::new(),
            smooth_c2: Rat::zero(),
        }
    }

    pub fn validate(&self, model: &NormalSurfaceModel) -> Result<(), ChernError> {
        if self.rank == 0 {
            return Err(ChernError::InvalidRank);
        }
        if self.c1.len() != model.dim() {
            return Err(ChernError::ModelMismatch(format!(
                "c1 has {} coefficients, model has {}",
                self.c1.len(),
                model.dim()
            )));
        }
        let groups = model.exceptional_groups().len();
        for (&g, v) in &self.local_c2 {
            if g >= groups {
                return Err(ChernError::ModelMismatch(format!(
                    "local c2 at group {g}, model has {groups} groups"
                )));
            }
            if self.rank == 1 && !v.is_zero() {
                return Err(ChernError::RankOneLocalC2(g));
            }
        }
        Ok(())
    }
}

/// `∫c₂ = f_*c₂ − Σ_x c₂(f_x, ·)`.
pub fn int_c2(data: &SheafData, model: &NormalSurfaceModel) -> Result<Rat, ChernError> {
    data.validate(model)?;
    Ok(data.local_c2.values().fold(data.smooth_c2.clone(), |acc, v| acc - v))
}

/// `Δ = 2r·c₂ − (r−1)·c₁²`.
pub fn delta(data: &SheafData, model: &NormalSurfaceModel) -> Result<Rat, ChernError> {
    let c2 = int_c2(data, model)?;
    let r = Rat::from(data.rank as i64);
    let c1sq = model.pair(&data.c1, &data.c1)?;
    Ok(Rat::from(2) * &r * c2 - (r - Rat::one()) * c1sq)
}

/// `ch₂ = ½c₁² − c₂`.
pub fn ch2(data: &SheafData, model: &NormalSurfaceModel) -> Result<Rat, ChernError> {
    let c2 = int_c2(data, model)?;
    Ok(model.pair(&data.c1, &data.c1)? * Rat::new(1, 2) - c2)
}

/// `𝓔 ⊗ 𝒪(L)`. The splitting-principle correction to `c₂` is booked on the
/// smooth part; local terms are untouched.
pub fn twist(data: &SheafData, model: &NormalSurfaceModel, l: &WeilClass) -> Result<SheafData, ChernError> {
    data.validate(model)?;
    if l.len() != model.dim() {
        return Err(ChernError::ModelMismatch("twist class has the wrong length".into()));
    }
    let r = data.rank as i64;
    let c1l = model.pair(&data.c1, l)?;
    let ll = model.pair(l, l)?;
    let smooth_c2 = &data.smooth_c2 + Rat::from(r - 1) * c1l + Rat::from(r * (r - 1) / 2) * ll;
    Ok(SheafData {
        rank: data.rank,
        c1: &data.c1 + &l.scale(r),
        local_c2: data.local_c2.clone(),
        smooth_c2,
    })
}

/// `𝓔₁ ⊕ 𝓔₂`: ranks and `c₁` add, `c₂` picks up `c₁(𝓔₁)·c₁(𝓔₂)`.
pub fn direct_sum(model: &NormalSurfaceModel, d1: &SheafData, d2: &SheafData) -> Result<SheafData, ChernError> {
    d1.validate(model)?;
    d2.validate(model)?;
    let cross = model.pair(&d1.c1, &d2.c1)?;
    let mut local_c2 = d1.local_c2.clone();
    for (&g, v) in &d2.local_c2 {
        *local_c2.entry(g).or_insert_with(Rat::zero) += v;
    }
    local_c2.retain(|_, v| !v.is_zero());
    Ok(SheafData {
        rank: d1.rank + d2.rank,
        c1: &d1.c1 + &d2.c1,
        local_c2,
        smooth_c2: &d1.smooth_c2 + &d2.smooth_c2 + cross,
    })
}

/// Defect terms `a(x, 𝓔)` of Riemann–Roch, one per exceptional group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub total_defect: Rat,
    pub per_point: BTreeMap<usize, Rat>,
}

impl DefectReport {
    pub fn zero() -> Self {
        DefectReport {
            total_defect: Rat::zero(),
            per_point: BTreeMap::new(),
        }
    }
}

/// `χ(𝓔) = ½c₁·(c₁ − K) − c₂ + r·χ(𝒪_X) + Σ a(x, 𝓔)`.
pub fn riemann_roch(
    data: &SheafData,
    model: &NormalSurfaceModel,
    defects: &DefectReport,
) -> Result<Rat, ChernError> {
    let chi_o = model.chi_o().cloned().ok_or(ChernError::MissingChiO)?;
    let c2 = int_c2(data, model)?;
    let c1sq = model.pair(&data.c1, &data.c1)?;
    let c1k = model.pair_with_canonical(&data.c1)?;
    Ok((c1sq - c1k) * Rat::new(1, 2) - c2 + Rat::from(data.rank as i64) * chi_o + &defects.total_defect)
}

/// Defect of `𝒪(D)` on a toric surface.
///
/// The total is read off the χ oracle. Each singular point is credited with
/// `½(F_x² + F_x·K̃)`, where `F_x` is the fractional part of the Mumford
/// pullback on its exceptional curves: rounding the other points down to
/// Cartier divisors leaves exactly this term. The local terms must add up to
/// the oracle total, otherwise an error is returned.
pub fn rr_defect(fan: &Fan, d: &TorusDivisor) -> Result<DefectReport, ChernError> {
    let exported = export_surface_model(fan)?;
    rr_defect_on(fan, &exported, d)
}

/// As [`rr_defect`], reusing a model already exported from `fan`.
pub fn rr_defect_on(fan: &Fan, exported: &ExportedModel, d: &TorusDivisor) -> Result<DefectReport, ChernError> {
    fan.check_divisor(d)?;
    let model = &exported.model;
    let chi_o = model.chi_o().cloned().ok_or(ChernError::MissingChiO)?;
    let pullback = model.mumford_pullback(&exported.weil_class(d))?;
    let dd = model.intersect(&pullback, &pullback)?;
    let dk = model.intersect(&pullback, &model.canonical_pullback()?)?;
    let predicted = (dd - dk) * Rat::new(1, 2) + chi_o;
    let total = Rat::from(chi(fan, d)?.chi) - predicted;

    let mut per_point = BTreeMap::new();
    for (g, group) in model.exceptional_groups().iter().enumerate() {
        let mut frac = QVector::zeros(model.dim());
        for &j in group {
            frac[j] = pullback[j].fract_part();
        }
        let local = (model.intersect(&frac, &frac)? + model.intersect(&frac, model.canonical())?) * Rat::new(1, 2);
        per_point.insert(g, local);
    }
    let local: Rat = per_point.values().cloned().sum();
    if local != total {
        return Err(ChernError::DefectAttributionMismatch { total, local });
    }
    Ok(DefectReport {
        total_defect: total,
        per_point,
    })
}

/// Frobenius pullback bookkeeping: `c₁ ↦ p^m c₁`, `c₂ ↦ p^{2m} c₂`.
pub fn frobenius_scale(data: &SheafData, p: u64, m: u32) -> SheafData {
    let pm = (p as i64).pow(m);
    let p2m = Rat::from(pm) * Rat::from(pm);
    SheafData {
        rank: data.rank,
        c1: data.c1.scale(pm),
        local_c2: data.local_c2.iter().map(|(&g, v)| (g, v * &p2m)).collect(),
        smooth_c2: &data.smooth_c2 * &p2m,
    }
}

/// `Δ ≥ 0`.
pub fn bogomolov_check(data: &SheafData, model: &NormalSurfaceModel) -> Result<bool, ChernError> {
    Ok(!delta(data, model)?.is_negative())
}

/// Every torus divisor with `|d_ρ| ≤ bound`, in lexicographic order.
fn divisor_box(n: usize, bound: i64) -> Vec<TorusDivisor> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-bound..=bound).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(TorusDivisor).collect()
}

/// Representative of the linear-equivalence class of `D`: if the fan has a
/// unimodular cone, the divisor equivalent to `D` vanishing on its rays.
fn class_representative(fan: &Fan, unimodular: Option<usize>, d: &TorusDivisor) -> TorusDivisor {
    match unimodular {
        Some(c) => {
            let u: Vec<i64> = fan
                .cone_character(c, d)
                .iter()
                .map(|x| x.to_i64().expect("unimodular cone gives an integral character"))
                .collect();
            d.add(&fan.principal_divisor(&u))
        }
        None => d.clone(),
    }
}

/// Distinct total defects of `𝒪(D)` over all `D` with `|d_ρ| ≤ bound`.
///
/// The defect only depends on the linear-equivalence class of `D`, so each
/// class in the box is evaluated once.
pub fn defect_values(fan: &Fan, bound: i64) -> Result<BTreeSet<Rat>, ChernError> {
    let exported = export_surface_model(fan)?;
    let unimodular = (0..fan.cones().len()).find(|&c| fan.multiplicity(c) == 1);
    let classes: BTreeSet<TorusDivisor> = divisor_box(fan.num_rays(), bound.max(0))
        .iter()
        .map(|d| class_representative(fan, unimodular, d))
        .collect();
    let classes: Vec<TorusDivisor> = classes.into_iter().collect();
    classes
        .par_iter()
        .map(|d| rr_defect_on(fan, &exported, d).map(|r| BTreeSet::from([r.total_defect])))
        .try_reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            Ok(a)
        })
}

/// Extremal total defects over the sweep box.
pub fn defect_sweep(fan: &Fan, bound: i64) -> Result<(Rat, Rat), ChernError> {
    let values = defect_values(fan, bound)?;
    let min = values.first().cloned().unwrap_or_else(Rat::zero);
    let max = values.last().cloned().unwrap_or_else(Rat::zero);
    Ok((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn p2() -> Fan {
        Fan::planar(vec![[1, 0], [0, 1], [-1, -1]]).unwrap()
    }

    fn p112() -> Fan {
        Fan::planar(vec![[1, 0], [0, 1], [-1, -2]]).unwrap()
    }

    fn p113() -> Fan {
        Fan::planar(vec![[1, 0], [0, 1], [-1, -3]]).unwrap()
    }

    fn td(v: &[i64]) -> TorusDivisor {
        TorusDivisor(v.to_vec())
    }

    fn line(e: &ExportedModel, d: &[i64]) -> SheafData {
        SheafData::line_bundle(e.weil_class(&td(d)))
    }

    #[test]
    fn int_c2_examples() {
        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let ruling = line(&e, &[0, 0, 1]);
        assert_eq!(int_c2(&ruling, m).unwrap(), Rat::zero());
        let s = direct_sum(m, &ruling, &ruling).unwrap();
        assert_eq!(int_c2(&s, m).unwrap(), q(1, 2));

        let e2 = export_surface_model(&p2()).unwrap();
        let s = direct_sum(&e2.model, &line(&e2, &[1, 0, 0]), &line(&e2, &[2, 0, 0])).unwrap();
        assert_eq!(int_c2(&s, &e2.model).unwrap(), q(2, 1));
    }

    #[test]
    fn delta_and_bogomolov_examples() {
        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let plus = line(&e, &[0, 0, 1]);
        let minus = line(&e, &[0, 0, -1]);
        let s = direct_sum(m, &plus, &minus).unwrap();
        assert_eq!(delta(&s, m).unwrap(), q(-2, 1));
        assert!(!bogomolov_check(&s, m).unwrap());
        let s = direct_sum(m, &plus, &plus).unwrap();
        assert_eq!(delta(&s, m).unwrap(), Rat::zero());
        assert!(bogomolov_check(&s, m).unwrap());
        let triv = SheafData::trivial(2, m.dim());
        assert_eq!(delta(&triv, m).unwrap(), Rat::zero());
        assert_eq!(delta(&plus, m).unwrap(), Rat::zero());
    }

    #[test]
    fn twist_examples() {
        let e = export_surface_model(&p2()).unwrap();
        let m = &e.model;
        let h = e.weil_class(&td(&[1, 0, 0]));
        let triv = SheafData::trivial(2, m.dim());
        let t = twist(&triv, m, &h).unwrap();
        assert_eq!(t.c1, h.scale(2));
        assert_eq!(int_c2(&t, m).unwrap(), q(1, 1));
        assert_eq!(delta(&t, m).unwrap(), Rat::zero());
        assert_eq!(twist(&triv, m, &WeilClass::zero(m.dim())).unwrap(), triv);

        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let s = direct_sum(m, &line(&e, &[0, 0, 1]), &line(&e, &[0, 0, -1])).unwrap();
        let t = twist(&s, m, &e.weil_class(&td(&[0, 0, 1]))).unwrap();
        assert_eq!(delta(&t, m).unwrap(), delta(&s, m).unwrap());
    }

    #[test]
    fn direct_sum_examples() {
        let e = export_surface_model(&p2()).unwrap();
        let m = &e.model;
        let a = line(&e, &[1, 0, 0]);
        let b = line(&e, &[0, -1, 0]);
        let c = line(&e, &[0, 0, 3]);
        let o = SheafData::trivial(1, m.dim());
        assert_eq!(int_c2(&direct_sum(m, &a, &o).unwrap(), m).unwrap(), Rat::zero());
        let left = direct_sum(m, &direct_sum(m, &a, &b).unwrap(), &c).unwrap();
        let right = direct_sum(m, &a, &direct_sum(m, &b, &c).unwrap()).unwrap();
        assert_eq!(int_c2(&left, m).unwrap(), int_c2(&right, m).unwrap());
        assert!(matches!(
            direct_sum(m, &a, &SheafData::trivial(1, 2)),
            Err(ChernError::ModelMismatch(_))
        ));
    }

    #[test]
    fn validation_rules() {
        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let mut d = line(&e, &[0, 0, 1]);
        d.local_c2.insert(0, q(1, 2));
        assert_eq!(d.validate(m), Err(ChernError::RankOneLocalC2(0)));
        d.rank = 2;
        assert!(d.validate(m).is_ok());
        d.local_c2.insert(5, q(1, 2));
        assert!(matches!(d.validate(m), Err(ChernError::ModelMismatch(_))));
        d.rank = 0;
        assert_eq!(d.validate(m), Err(ChernError::InvalidRank));
    }

    #[test]
    fn riemann_roch_examples() {
        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let o = SheafData::trivial(1, m.dim());
        assert_eq!(riemann_roch(&o, m, &DefectReport::zero()).unwrap(), q(1, 1));
        let mut defect = DefectReport::zero();
        defect.total_defect = q(-1, 4);
        assert_eq!(riemann_roch(&line(&e, &[0, 0, 1]), m, &defect).unwrap(), q(2, 1));
        assert_eq!(
            riemann_roch(&line(&e, &[0, 0, 2]), m, &DefectReport::zero()).unwrap(),
            q(4, 1)
        );
        let bare = m.clone().with_chi_o(None);
        assert_eq!(riemann_roch(&o, &bare, &defect), Err(ChernError::MissingChiO));
    }

    #[test]
    fn rr_defect_examples() {
        let r = rr_defect(&p112(), &td(&[0, 0, 1])).unwrap();
        assert_eq!(r.total_defect, q(-1, 4));
        assert_eq!(r.per_point, BTreeMap::from([(0, q(-1, 4))]));
        assert_eq!(rr_defect(&p112(), &td(&[0, 0, 2])).unwrap().total_defect, Rat::zero());
        assert_eq!(rr_defect(&p2(), &td(&[2, -1, 1])).unwrap().total_defect, Rat::zero());
        assert_eq!(rr_defect(&p113(), &td(&[0, 0, 1])).unwrap().total_defect, Rat::zero());
        assert_eq!(rr_defect(&p113(), &td(&[0, 0, 2])).unwrap().total_defect, q(-1, 3));
    }

    #[test]
    fn frobenius_scale_examples() {
        let e = export_surface_model(&p112()).unwrap();
        let m = &e.model;
        let d = line(&e, &[0, 0, 1]);
        assert_eq!(frobenius_scale(&d, 2, 0), d);
        let f = frobenius_scale(&d, 2, 1);
        assert_eq!(f, line(&e, &[0, 0, 2]));
        let mut s = direct_sum(m, &d, &line(&e, &[0, 0, -1])).unwrap();
        s.local_c2.insert(0, q(1, 3));
        let f = frobenius_scale(&s, 3, 2);
        assert_eq!(delta(&f, m).unwrap(), delta(&s, m).unwrap() * Rat::from(81));
    }

    #[test]
    fn sweep_examples() {
        assert_eq!(defect_sweep(&p2(), 2).unwrap(), (Rat::zero(), Rat::zero()));
        assert_eq!(defect_values(&p112(), 3).unwrap(), BTreeSet::from([q(-1, 4), Rat::zero()]));
        assert_eq!(defect_values(&p113(), 3).unwrap(), BTreeSet::from([q(-1, 3), Rat::zero()]));
    }
}
