//! Sheaf cohomology of torus-invariant divisors, degree by degree.
//!
//! For a character `u`, the `u`-graded piece of `Hⁱ(X, 𝒪(D))` is the reduced
//! cohomology `H̃ⁱ⁻¹` of the subcomplex of the fan spanned by the rays with
//! `⟨u, v_ρ⟩ < −d_ρ` (an empty subcomplex has `H̃⁻¹ = ℚ`). Only characters in a
//! box around the local characters `u_σ` can contribute.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{QMatrix, Rat};

use super::fan::{dot, Fan, TorusDivisor};
use super::FanError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedCohomologyReport {
    /// `h⁰ … hⁿ`.
    pub h: Vec<u64>,
    pub chi: i64,
    /// Number of characters examined.
    pub contributing_points: u64,
}

/// Euler characteristic and cohomology dimensions of `𝒪_X(D)`.
pub fn chi(fan: &Fan, d: &TorusDivisor) -> Result<GradedCohomologyReport, FanError> {
    chi_with_padding(fan, d, 1)
}

/// As [`chi`], with the character box padded by `pad` on every side.
pub fn chi_with_padding(
    fan: &Fan,
    d: &TorusDivisor,
    pad: i64,
) -> Result<GradedCohomologyReport, FanError> {
    let (lo, hi) = character_box(fan, d, pad)?;
    let n = fan.num_rays();
    if n > 64 {
        return Err(FanError::TooManyRays(n));
    }
    let masks = negative_set_histogram(fan, d, &lo, &hi);
    let complex = FanComplex::new(fan);
    let rank = fan.rank();
    let mut h = vec![0u64; rank + 1];
    let mut examined = 0u64;
    for (mask, count) in masks {
        examined += count;
        let betti = complex.reduced_betti(mask);
        // betti[k] is H̃_{k-1}; it lands in degree k.
        for (k, b) in betti.iter().enumerate() {
            h[k] += b * count;
        }
    }
    let chi = h
        .iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 { x as i64 } else { -(x as i64) })
        .sum();
    Ok(GradedCohomologyReport {
        h,
        chi,
        contributing_points: examined,
    })
}

/// `h⁰` by counting characters with `⟨u, v_ρ⟩ ≥ −d_ρ` for every ray. Equals
/// `χ` only when the caller knows `D` is nef.
pub fn lattice_point_count(fan: &Fan, d: &TorusDivisor) -> Result<u64, FanError> {
    let (lo, hi) = character_box(fan, d, 1)?;
    let masks = negative_set_histogram(fan, d, &lo, &hi);
    Ok(masks.get(&0).copied().unwrap_or(0))
}

/// Integral bounding box of the local characters `u_σ`, padded.
pub fn character_box(fan: &Fan, d: &TorusDivisor, pad: i64) -> Result<(Vec<i64>, Vec<i64>), FanError> {
    let chars = fan.support_function(d)?;
    let r = fan.rank();
    let mut lo = vec![i64::MAX; r];
    let mut hi = vec![i64::MIN; r];
    for u in &chars {
        for k in 0..r {
            let f = u[k].floor().to_i64().expect("character coordinate fits in i64");
            let c = u[k].ceil().to_i64().expect("character coordinate fits in i64");
            lo[k] = lo[k].min(f);
            hi[k] = hi[k].max(c);
        }
    }
    for k in 0..r {
        lo[k] -= pad;
        hi[k] += pad;
    }
    Ok((lo, hi))
}

fn negative_mask(fan: &Fan, d: &TorusDivisor, u: &[i64]) -> u64 {
    let mut mask = 0u64;
    for (i, v) in fan.rays().iter().enumerate() {
        if dot(u, v) < -d.0[i] {
            mask |= 1 << i;
        }
    }
    mask
}

/// How many characters in the box produce each negative-ray set.
fn negative_set_histogram(fan: &Fan, d: &TorusDivisor, lo: &[i64], hi: &[i64]) -> HashMap<u64, u64> {
    let r = fan.rank();
    (lo[0]..=hi[0])
        .into_par_iter()
        .map(|x| {
            let mut local: HashMap<u64, u64> = HashMap::new();
            let mut u = vec![0i64; r];
            u[0] = x;
            match r {
                2 => {
                    for y in lo[1]..=hi[1] {
                        u[1] = y;
                        *local.entry(negative_mask(fan, d, &u)).or_default() += 1;
                    }
                }
                _ => {
                    for y in lo[1]..=hi[1] {
                        u[1] = y;
                        for z in lo[2]..=hi[2] {
                            u[2] = z;
                            *local.entry(negative_mask(fan, d, &u)).or_default() += 1;
                        }
                    }
                }
            }
            local
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        })
}

/// The simplicial complex of cones of a simplicial fan, as ray-index sets.
struct FanComplex {
    /// `faces[k]`: faces with `k + 1` rays, as bitmasks and sorted index lists.
    faces: Vec<Vec<(u64, Vec<usize>)>>,
}

impl FanComplex {
    fn new(fan: &Fan) -> Self {
        let r = fan.rank();
        let mut faces: Vec<Vec<(u64, Vec<usize>)>> = vec![Vec::new(); r];
        let mut seen = std::collections::HashSet::new();
        for cone in fan.cones() {
            let mut sorted = cone.clone();
            sorted.sort_unstable();
            for sub in 1u32..(1 << r) {
                let face: Vec<usize> = (0..r).filter(|&b| sub & (1 << b) != 0).map(|b| sorted[b]).collect();
                let mask = face.iter().fold(0u64, |m, &i| m | (1 << i));
                if seen.insert(mask) {
                    faces[face.len() - 1].push((mask, face));
                }
            }
        }
        for level in &mut faces {
            level.sort();
        }
        FanComplex { faces }
    }

    /// Reduced Betti numbers `H̃_{-1}, H̃_0, …, H̃_{r-1}` of the induced
    /// subcomplex on `mask`, over ℚ.
    fn reduced_betti(&self, mask: u64) -> Vec<u64> {
        let r = self.faces.len();
        let sub: Vec<Vec<&Vec<usize>>> = self
            .faces
            .iter()
            .map(|level| {
                level
                    .iter()
                    .filter(|(m, _)| m & !mask == 0)
                    .map(|(_, f)| f)
                    .collect()
            })
            .collect();
        // chain groups C_{-1} = ℚ, C_k = faces with k+1 rays
        let mut dims = Vec::with_capacity(r + 1);
        dims.push(1usize);
        dims.extend(sub.iter().map(Vec::len));
        // ranks[k] = rank of ∂: C_k → C_{k-1}, indexed by k+1
        let mut ranks = vec![0usize; r + 2];
        ranks[1] = usize::from(!sub[0].is_empty());
        for k in 1..r {
            ranks[k + 1] = boundary_rank(&sub[k], &sub[k - 1]);
        }
        (0..=r)
            .map(|k| (dims[k] - ranks[k] - ranks[k + 1]) as u64)
            .collect()
    }
}

fn boundary_rank(higher: &[&Vec<usize>], lower: &[&Vec<usize>]) -> usize {
    if higher.is_empty() || lower.is_empty() {
        return 0;
    }
    let index: HashMap<&Vec<usize>, usize> = lower.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut m = QMatrix::zeros(lower.len(), higher.len());
    for (j, face) in higher.iter().enumerate() {
        for drop in 0..face.len() {
            let bd: Vec<usize> = face
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != drop)
                .map(|(_, &x)| x)
                .collect();
            let sign = if drop % 2 == 0 { 1 } else { -1 };
            let i = index[&bd];
            m[(i, j)] = Rat::from(sign);
        }
    }
    m.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Fan {
        Fan::planar(vec![[1, 0], [0, 1], [-1, -1]]).unwrap()
    }

    fn p112() -> Fan {
        Fan::planar(vec![[1, 0], [0, 1], [-1, -2]]).unwrap()
    }

    /// Rank-2 reference: the induced subcomplex is a union of arcs of the
    /// circle of rays.
    fn arcs_betti(n: usize, mask: u64) -> Vec<u64> {
        let full = (1u64 << n) - 1;
        if mask == 0 {
            return vec![1, 0, 0];
        }
        if mask == full {
            return vec![0, 0, 1];
        }
        // count maximal runs of consecutive set bits, cyclically
        let arcs = (0..n)
            .filter(|&i| mask & (1 << i) != 0 && mask & (1 << ((i + n - 1) % n)) == 0)
            .count() as u64;
        vec![0, arcs - 1, 0]
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(&p2(), &TorusDivisor(vec![0, 0, 0])).unwrap().chi, 1);
        assert_eq!(chi(&p2(), &TorusDivisor(vec![1, 0, 0])).unwrap().chi, 3);
        assert_eq!(chi(&p112(), &TorusDivisor(vec![0, 0, 1])).unwrap().chi, 2);
        assert_eq!(chi(&p112(), &TorusDivisor(vec![0, 0, 2])).unwrap().chi, 4);
    }

    #[test]
    fn canonical_of_p2_has_h2() {
        let r = chi(&p2(), &TorusDivisor(vec![-1, -1, -1])).unwrap();
        assert_eq!(r.h, vec![0, 0, 1]);
        assert_eq!(r.chi, 1);
        let r = chi(&p2(), &TorusDivisor(vec![-1, 0, 0])).unwrap();
        assert_eq!(r.h, vec![0, 0, 0]);
    }

    #[test]
    fn h1_appears_on_nonnef_divisors() {
        let quadric = Fan::planar(vec![[1, 0], [0, 1], [-1, 0], [0, -1]]).unwrap();
        let r = chi(&quadric, &TorusDivisor(vec![0, -2, 0, 0])).unwrap();
        // 𝒪(0,−2) on P¹×P¹: h¹ = h⁰(P¹,𝒪)·h¹(P¹,𝒪(−2)) = 1
        assert_eq!(r.h, vec![0, 1, 0]);
        assert_eq!(r.chi, -1);
    }

    #[test]
    fn planar_betti_matches_arcs() {
        for fan in [p2(), p112(), Fan::planar(vec![[1, 0], [0, 1], [-1, 0], [0, -1]]).unwrap()] {
            let n = fan.num_rays();
            let cx = FanComplex::new(&fan);
            for mask in 0..(1u64 << n) {
                assert_eq!(cx.reduced_betti(mask), arcs_betti(n, mask), "mask {mask:b}");
            }
        }
    }

    #[test]
    fn spatial_sphere_betti() {
        let p3 = Fan::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        )
        .unwrap();
        let cx = FanComplex::new(&p3);
        assert_eq!(cx.reduced_betti(0b1111), vec![0, 0, 0, 1]);
        assert_eq!(cx.reduced_betti(0), vec![1, 0, 0, 0]);
        assert_eq!(cx.reduced_betti(0b0111), vec![0, 0, 0, 0]);
        // O(-4) on P³ has h³ = 1
        let r = chi(&p3, &TorusDivisor(vec![0, 0, 0, -4])).unwrap();
        assert_eq!(r.h, vec![0, 0, 0, 1]);
        assert_eq!(r.chi, -1);
        // O(2): h⁰ = 10
        let r = chi(&p3, &TorusDivisor(vec![0, 0, 0, 2])).unwrap();
        assert_eq!(r.chi, 10);
    }

    #[test]
    fn lattice_points_for_nef() {
        assert_eq!(lattice_point_count(&p2(), &TorusDivisor(vec![2, 0, 0])).unwrap(), 6);
        assert_eq!(lattice_point_count(&p112(), &TorusDivisor(vec![0, 0, 2])).unwrap(), 4);
    }
}
