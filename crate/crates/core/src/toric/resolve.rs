//! Hirzebruch–Jung resolution of rank-2 fans and the bridge to
//! [`NormalSurfaceModel`].

use crate::exact::{QMatrix, QVector, Rat};
use crate::surface::{NormalSurfaceModel, WeilClass};

use super::fan::{det2, Fan, TorusDivisor};
use super::FanError;

/// A smooth refinement of a rank-2 fan together with the bookkeeping that
/// ties its rays back to the original fan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub fan: Fan,
    /// For each resolved ray, the original ray it equals (if any).
    pub original: Vec<Option<usize>>,
    /// For each original ray, its position in the resolved fan.
    pub original_position: Vec<usize>,
    /// For each resolved ray, the original cone it subdivides (new rays only).
    pub provenance: Vec<Option<usize>>,
    /// Exceptional groups: resolved-ray indices, one group per singular cone,
    /// ordered counterclockwise inside the cone.
    pub groups: Vec<Vec<usize>>,
    /// Original cone index of each group.
    pub singular_cones: Vec<usize>,
}

impl Resolution {
    pub fn group_of(&self, resolved_ray: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&resolved_ray))
    }
}

/// New rays subdividing the cone `(a, b)` (counterclockwise, `det(a,b) = n`)
/// into unimodular cones, ordered from `a` to `b`.
fn hj_rays(a: &[i64], b: &[i64]) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    let mut cur = [a[0], a[1]];
    loop {
        let n = det2(&cur, b);
        if n == 1 {
            return out;
        }
        // w = (b + k·cur)/n with det(cur, w) = 1; smallest k ≥ 0 keeps w on
        // the boundary of the convex hull of nonzero lattice points.
        let k = (0..n)
            .find(|k| (b[0] + k * cur[0]) % n == 0 && (b[1] + k * cur[1]) % n == 0)
            .expect("primitive cone ray admits a unimodular neighbour");
        let w = [(b[0] + k * cur[0]) / n, (b[1] + k * cur[1]) / n];
        out.push(w);
        cur = w;
    }
}

/// Minimal resolution of a rank-2 fan: every cone of multiplicity `> 1` is
/// subdivided by its Hirzebruch–Jung rays.
pub fn resolve_fan_2d(fan: &Fan) -> Result<Resolution, FanError> {
    if fan.rank() != 2 {
        return Err(FanError::UnsupportedRank(fan.rank()));
    }
    let n = fan.num_rays();
    let mut rays: Vec<[i64; 2]> = Vec::new();
    let mut original = Vec::new();
    let mut original_position = vec![0; n];
    let mut provenance = Vec::new();
    let mut groups = Vec::new();
    let mut singular_cones = Vec::new();
    for i in 0..n {
        let a = fan.ray(i);
        let b = fan.ray((i + 1) % n);
        original_position[i] = rays.len();
        rays.push([a[0], a[1]]);
        original.push(Some(i));
        provenance.push(None);
        // cone i is (i, i+1) by the planar invariant
        let cone = fan
            .cones()
            .iter()
            .position(|c| c[0] == i)
            .expect("planar fan has a cone starting at every ray");
        let new = hj_rays(a, b);
        if !new.is_empty() {
            let mut group = Vec::new();
            for w in new {
                group.push(rays.len());
                rays.push(w);
                original.push(None);
                provenance.push(Some(cone));
            }
            groups.push(group);
            singular_cones.push(cone);
        }
    }
    let fan = Fan::planar(rays)?;
    Ok(Resolution {
        fan,
        original,
        original_position,
        provenance,
        groups,
        singular_cones,
    })
}

/// Intersection matrix `D_ρ·D_ρ′` of the invariant curves on a smooth
/// complete toric surface: neighbours meet once, `D_ρ² = −b` where
/// `v_prev + v_next = b·v_ρ`.
pub fn smooth_gram(fan: &Fan) -> Result<QMatrix, FanError> {
    if fan.rank() != 2 {
        return Err(FanError::UnsupportedRank(fan.rank()));
    }
    if !fan.is_smooth() {
        return Err(FanError::NotSmooth);
    }
    let n = fan.num_rays();
    let mut g = QMatrix::zeros(n, n);
    for i in 0..n {
        let prev = fan.ray((i + n - 1) % n);
        let next = fan.ray((i + 1) % n);
        let v = fan.ray(i);
        let sum = [prev[0] + next[0], prev[1] + next[1]];
        let k = if v[0] != 0 { 0 } else { 1 };
        let b = sum[k] / v[k];
        if sum[0] != b * v[0] || sum[1] != b * v[1] {
            return Err(FanError::NotSmooth);
        }
        g[(i, i)] = Rat::from(-b);
        g[(i, (i + 1) % n)] = Rat::one();
        g[((i + 1) % n, i)] = Rat::one();
    }
    Ok(g)
}

/// Toric Mumford pullback: original rays keep their coefficient, a new ray
/// `w` gets `−ψ_D(w)` where `ψ_D` is the support function of `D`.
pub fn support_pullback(fan: &Fan, res: &Resolution, d: &TorusDivisor) -> Result<QVector, FanError> {
    fan.check_divisor(d)?;
    Ok((0..res.fan.num_rays())
        .map(|j| match (res.original[j], res.provenance[j]) {
            (Some(i), _) => Rat::from(d.0[i]),
            (None, Some(c)) => {
                let u = fan.cone_character(c, d);
                let w = res.fan.ray(j);
                -(&u[0] * Rat::from(w[0]) + &u[1] * Rat::from(w[1]))
            }
            (None, None) => unreachable!("resolved ray without origin"),
        })
        .collect())
}

/// A surface model exported from a rank-2 fan, with the resolution used to
/// translate fan divisors into model classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedModel {
    pub model: NormalSurfaceModel,
    pub resolution: Resolution,
}

impl ExportedModel {
    /// Strict transform of a fan divisor in the model basis.
    pub fn weil_class(&self, d: &TorusDivisor) -> WeilClass {
        let mut v = vec![0; self.resolution.fan.num_rays()];
        for (i, &c) in d.0.iter().enumerate() {
            v[self.resolution.original_position[i]] = c;
        }
        WeilClass(v)
    }
}

fn ray_label(prefix: &str, v: &[i64]) -> String {
    format!("{prefix}({},{})", v[0], v[1])
}

/// Resolves the fan and packages the resolution as a toric-derived
/// [`NormalSurfaceModel`] with `χ(𝒪_X) = 1` and `K = −Σ D_ρ`.
pub fn export_surface_model(fan: &Fan) -> Result<ExportedModel, FanError> {
    let res = resolve_fan_2d(fan)?;
    let gram = smooth_gram(&res.fan)?;
    let n = res.fan.num_rays();
    let basis = (0..n)
        .map(|j| {
            let prefix = if res.original[j].is_some() { "D" } else { "E" };
            ray_label(prefix, res.fan.ray(j))
        })
        .collect();
    let canonical = QVector::from_i64(&vec![-1; n]);
    let model = NormalSurfaceModel::new(basis, gram, res.groups.clone(), canonical)?
        .with_toric_derived(true)
        .with_chi_o(Some(Rat::one()));
    Ok(ExportedModel {
        model,
        resolution: res,
    })
}

/// The multiplication-by-`d` cover `X → X` coming from the sublattice
/// `d·N ⊂ N`; its degree is `d^rank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SublatticeCover {
    pub fan: Fan,
    pub index: i64,
    pub degree: i64,
}

impl SublatticeCover {
    /// Pullback of a torus divisor along the cover.
    pub fn pull_back(&self, d: &TorusDivisor) -> TorusDivisor {
        d.scale(self.index)
    }
}

pub fn sublattice_cover(fan: &Fan, index: i64) -> Result<SublatticeCover, FanError> {
    if index < 1 {
        return Err(FanError::InvalidCoverIndex(index));
    }
    // A ray v is d·v in dN; in the basis d·eᵢ of dN that is v again, then
    // made primitive.
    let rays = fan
        .rays()
        .iter()
        .map(|v| {
            let scaled: Vec<i64> = v.iter().map(|x| x * index).collect();
            let g = scaled.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
            scaled.iter().map(|x| x / g).collect()
        })
        .collect();
    let cover_fan = Fan::new(fan.rank(), rays, fan.cones().to_vec())?;
    Ok(SublatticeCover {
        fan: cover_fan,
        index,
        degree: index.pow(fan.rank() as u32),
    })
}
