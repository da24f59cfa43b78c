use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::exact::{lcm_of_denominators, QMatrix, QVector, Rat};

use super::FanError;

/// On-disk fan: integer rays and maximal cones as ray-index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FanFile {
    pub rank: usize,
    pub rays: Vec<Vec<i64>>,
    /// May be omitted for rank-2 fans whose rays are listed counterclockwise.
    #[serde(default)]
    pub cones: Vec<Vec<usize>>,
}

/// Torus-invariant Weil divisor `Σ d_ρ D_ρ`, one coefficient per ray.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusDivisor(pub Vec<i64>);

impl TorusDivisor {
    pub fn zero(n: usize) -> Self {
        TorusDivisor(vec![0; n])
    }

    /// The prime divisor of ray `i`.
    pub fn prime(n: usize, i: usize) -> Self {
        let mut d = vec![0; n];
        d[i] = 1;
        TorusDivisor(d)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn scale(&self, k: i64) -> Self {
        TorusDivisor(self.0.iter().map(|x| x * k).collect())
    }

    pub fn add(&self, other: &TorusDivisor) -> Self {
        TorusDivisor(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &TorusDivisor) -> Self {
        TorusDivisor(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Self {
        TorusDivisor(self.0.iter().map(|a| -a).collect())
    }
}

/// Complete simplicial fan in a rank-2 or rank-3 lattice.
///
/// Rank-2 rays are stored counterclockwise and the maximal cones are the
/// consecutive pairs `(i, i+1 mod n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    rank: usize,
    rays: Vec<Vec<i64>>,
    cones: Vec<Vec<usize>>,
}

impl Fan {
    /// Validates and builds a fan.
    pub fn new(rank: usize, rays: Vec<Vec<i64>>, cones: Vec<Vec<usize>>) -> Result<Self, FanError> {
        let fan = Fan { rank, rays, cones };
        fan.validate()?;
        Ok(fan)
    }

    /// Rank-2 fan from counterclockwise rays; cones are consecutive pairs.
    pub fn planar(rays: Vec<[i64; 2]>) -> Result<Self, FanError> {
        let n = rays.len();
        let cones = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        Self::new(2, rays.into_iter().map(|r| r.to_vec()).collect(), cones)
    }

    pub fn from_file(file: FanFile) -> Result<Self, FanError> {
        let cones = if file.rank == 2 && file.cones.is_empty() {
            let n = file.rays.len();
            (0..n).map(|i| vec![i, (i + 1) % n]).collect()
        } else {
            file.cones
        };
        Self::new(file.rank, file.rays, cones)
    }

    pub fn to_file(&self) -> FanFile {
        FanFile {
            rank: self.rank,
            rays: self.rays.clone(),
            cones: self.cones.clone(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> &[i64] {
        &self.rays[i]
    }

    pub fn num_rays(&self) -> usize {
        self.rays.len()
    }

    pub fn cones(&self) -> &[Vec<usize>] {
        &self.cones
    }

    /// Checks primitivity, distinctness, simpliciality and completeness.
    pub fn validate(&self) -> Result<(), FanError> {
        if self.rank != 2 && self.rank != 3 {
            return Err(FanError::UnsupportedRank(self.rank));
        }
        for (i, r) in self.rays.iter().enumerate() {
            if r.len() != self.rank {
                return Err(FanError::RayDimension(i));
            }
            let g = r.iter().fold(0i64, |g, &x| g.gcd(&x));
            if g != 1 {
                return Err(FanError::NotPrimitive(i));
            }
        }
        for i in 0..self.rays.len() {
            for j in 0..i {
                if self.rays[i] == self.rays[j] {
                    return Err(FanError::DuplicateRay(i));
                }
            }
        }
        for (c, cone) in self.cones.iter().enumerate() {
            if cone.len() != self.rank {
                return Err(FanError::NotSimplicial(c));
            }
            if let Some(&bad) = cone.iter().find(|&&i| i >= self.rays.len()) {
                return Err(FanError::ConeIndexOutOfRange(bad));
            }
            let distinct: BTreeSet<_> = cone.iter().collect();
            if distinct.len() != cone.len() || self.cone_det(c) == 0 {
                return Err(FanError::NotSimplicial(c));
            }
        }
        match self.rank {
            2 => self.validate_planar(),
            _ => self.validate_spatial(),
        }
    }

    fn validate_planar(&self) -> Result<(), FanError> {
        let n = self.rays.len();
        if n < 3 {
            return Err(FanError::NotComplete("fewer than three rays".into()));
        }
        let expected: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let given: BTreeSet<(usize, usize)> = self.cones.iter().map(|c| (c[0], c[1])).collect();
        if given != expected || self.cones.len() != n {
            return Err(FanError::NotComplete(
                "cones must be the consecutive ray pairs (i, i+1)".into(),
            ));
        }
        for i in 0..n {
            if det2(&self.rays[i], &self.rays[(i + 1) % n]) <= 0 {
                return Err(FanError::NotComplete(format!(
                    "rays {} and {} are not in counterclockwise order",
                    i,
                    (i + 1) % n
                )));
            }
        }
        // Positive consecutive turns plus strictly increasing angle from ray 0
        // means the rays wind around the origin exactly once.
        let mut order: Vec<usize> = (0..n).collect();
        let base = self.rays[0].clone();
        order.sort_by(|&a, &b| angle_from(&base, &self.rays[a], &self.rays[b]));
        if order != (0..n).collect::<Vec<_>>() {
            return Err(FanError::NotComplete("rays wind around more than once".into()));
        }
        Ok(())
    }

    fn validate_spatial(&self) -> Result<(), FanError> {
        let v = self.rays.len();
        let used: BTreeSet<usize> = self.cones.iter().flatten().copied().collect();
        if used.len() != v {
            return Err(FanError::NotComplete("some ray lies in no maximal cone".into()));
        }
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (c, cone) in self.cones.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (cone[k], cone[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push(c);
            }
        }
        if let Some(((a, b), _)) = edges.iter().find(|(_, cs)| cs.len() != 2) {
            return Err(FanError::NotComplete(format!(
                "edge ({a},{b}) is not shared by exactly two cones"
            )));
        }
        let euler = v as i64 - edges.len() as i64 + self.cones.len() as i64;
        if euler != 2 {
            return Err(FanError::NotComplete(format!(
                "boundary complex has Euler characteristic {euler}, not 2"
            )));
        }
        // Adjacent cones must lie on opposite sides of their common wall.
        for ((a, b), cs) in &edges {
            let third = |c: usize| *self.cones[c].iter().find(|&&r| r != *a && r != *b).unwrap();
            let s1 = det3(&self.rays[*a], &self.rays[*b], &self.rays[third(cs[0])]).signum();
            let s2 = det3(&self.rays[*a], &self.rays[*b], &self.rays[third(cs[1])]).signum();
            if s1 == s2 {
                return Err(FanError::NotComplete(format!(
                    "cones {} and {} fold over their common wall",
                    cs[0], cs[1]
                )));
            }
        }
        // The cones now form a covering of the sphere; one generic point
        // covered exactly once pins its degree to 1.
        for probe in PROBES {
            let mut hits = 0;
            let mut boundary = false;
            for c in 0..self.cones.len() {
                match self.cone_contains(c, &probe) {
                    Some(true) => hits += 1,
                    Some(false) => {}
                    None => boundary = true,
                }
            }
            if boundary {
                continue;
            }
            if hits != 1 {
                return Err(FanError::NotComplete(format!(
                    "a generic direction lies in {hits} maximal cones"
                )));
            }
            return Ok(());
        }
        Err(FanError::NotComplete("no generic probe direction found".into()))
    }

    /// `Some(true)` for interior points, `Some(false)` outside, `None` on the
    /// boundary.
    fn cone_contains(&self, c: usize, p: &[i64]) -> Option<bool> {
        let m = self.cone_matrix(c).transpose();
        let coeffs = m.solve(&QVector::from_i64(p)).ok()?;
        if coeffs.iter().any(Rat::is_negative) {
            Some(false)
        } else if coeffs.iter().any(Rat::is_zero) {
            None
        } else {
            Some(true)
        }
    }

    /// Matrix whose rows are the rays of cone `c`.
    pub fn cone_matrix(&self, c: usize) -> QMatrix {
        let rows: Vec<Vec<i64>> = self.cones[c].iter().map(|&r| self.rays[r].clone()).collect();
        QMatrix::from_i64_rows(&rows)
    }

    /// Signed determinant of the rays of cone `c`.
    pub fn cone_det(&self, c: usize) -> i64 {
        let r: Vec<&[i64]> = self.cones[c].iter().map(|&i| self.rays[i].as_slice()).collect();
        match self.rank {
            2 => det2(r[0], r[1]),
            3 => det3(r[0], r[1], r[2]),
            _ => 0,
        }
    }

    /// Lattice multiplicity `|det|` of cone `c`.
    pub fn multiplicity(&self, c: usize) -> i64 {
        self.cone_det(c).abs()
    }

    pub fn is_smooth(&self) -> bool {
        (0..self.cones.len()).all(|c| self.multiplicity(c) == 1)
    }

    pub fn check_divisor(&self, d: &TorusDivisor) -> Result<(), FanError> {
        if d.len() != self.rays.len() {
            return Err(FanError::DivisorLength {
                expected: self.rays.len(),
                found: d.len(),
            });
        }
        Ok(())
    }

    /// The linear form `u_σ` on cone `c` with `⟨u_σ, v_ρ⟩ = −d_ρ` on its rays.
    pub fn cone_character(&self, c: usize, d: &TorusDivisor) -> QVector {
        let rhs: QVector = self.cones[c].iter().map(|&r| Rat::from(-d.0[r])).collect();
        self.cone_matrix(c)
            .solve(&rhs)
            .expect("validated maximal cones are full-dimensional")
    }

    /// Local characters of `D` on every maximal cone.
    pub fn support_function(&self, d: &TorusDivisor) -> Result<Vec<QVector>, FanError> {
        self.check_divisor(d)?;
        Ok((0..self.cones.len()).map(|c| self.cone_character(c, d)).collect())
    }

    /// A divisor is Cartier iff its support function is integral-linear on
    /// every maximal cone.
    pub fn is_cartier(&self, d: &TorusDivisor) -> Result<bool, FanError> {
        Ok(self.support_function(d)?.iter().all(QVector::is_integral))
    }

    /// Smallest `m > 0` with `mD` Cartier.
    pub fn cartier_index(&self, d: &TorusDivisor) -> Result<BigInt, FanError> {
        let chars = self.support_function(d)?;
        Ok(lcm_of_denominators(chars.iter().flat_map(|u| u.iter())))
    }

    /// Principal divisor of the character `u`: coefficient `⟨u, v_ρ⟩`.
    pub fn principal_divisor(&self, u: &[i64]) -> TorusDivisor {
        TorusDivisor(self.rays.iter().map(|v| dot(u, v)).collect())
    }

    /// Same fan with rays relabeled: new ray `i` is old ray `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Fan, FanError> {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let rays = perm.iter().map(|&o| self.rays[o].clone()).collect();
        let cones = self
            .cones
            .iter()
            .map(|c| c.iter().map(|&o| inv[o]).collect())
            .collect();
        Fan::new(self.rank, rays, cones)
    }
}

const PROBES: [[i64; 3]; 4] = [[7, 11, 13], [-5, 17, 3], [19, -2, -23], [3, 29, -31]];

pub(crate) fn dot(u: &[i64], v: &[i64]) -> i64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn det2(a: &[i64], b: &[i64]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn det3(a: &[i64], b: &[i64], c: &[i64]) -> i64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Orders `a` and `b` by counterclockwise angle measured from `base`.
fn angle_from(base: &[i64], a: &[i64], b: &[i64]) -> Ordering {
    // half-plane index: 0 for angles in [0, π), 1 for [π, 2π)
    let half = |v: &[i64]| {
        let c = det2(base, v);
        let d = dot(base, v);
        if c > 0 || (c == 0 && d > 0) {
            0
        } else {
            1
        }
    };
    half(a)
        .cmp(&half(b))
        .then_with(|| 0.cmp(&det2(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_examples() {
        assert!(Fan::planar(vec![[1, 0], [0, 1], [-1, -1]]).is_ok());
        assert!(Fan::planar(vec![[1, 0], [0, 1], [-1, -2]]).is_ok());
        assert_eq!(
            Fan::planar(vec![[2, 0], [0, 1], [-1, -1]]),
            Err(FanError::NotPrimitive(0))
        );
        assert_eq!(FanError::NotPrimitive(0).to_string(), "NotPrimitive ray 0");
        assert_eq!(
            Fan::planar(vec![[1, 0], [0, 1], [1, 0]]),
            Err(FanError::DuplicateRay(2))
        );
    }

    #[test]
    fn planar_incomplete() {
        // clockwise order
        assert!(matches!(
            Fan::planar(vec![[1, 0], [-1, -1], [0, 1]]),
            Err(FanError::NotComplete(_))
        ));
        // wrong cone list
        let f = Fan::new(
            2,
            vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            vec![vec![0, 1], vec![1, 2]],
        );
        assert!(matches!(f, Err(FanError::NotComplete(_))));
        // two full turns
        let twice = vec![[1, 0], [0, 1], [-1, 0], [0, -1], [1, 1], [-1, 1], [-1, -1], [1, -1]];
        assert!(matches!(Fan::planar(twice), Err(FanError::NotComplete(_))));
    }

    #[test]
    fn spatial_examples() {
        let p3 = Fan::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        );
        assert!(p3.is_ok());
        let missing = Fan::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3]],
        );
        assert!(matches!(missing, Err(FanError::NotComplete(_))));
        let flat = Fan::new(
            3,
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 0], vec![-1, -1, -1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        );
        assert_eq!(flat, Err(FanError::NotSimplicial(0)));
    }

    #[test]
    fn spatial_folded_fan_rejected() {
        // four rays all in the upper half-space cannot form a complete fan
        let folded = Fan::new(
            3,
            vec![vec![1, 0, 1], vec![0, 1, 1], vec![-1, -1, 1], vec![0, 0, 1]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]],
        );
        assert!(matches!(folded, Err(FanError::NotComplete(_))));
    }

    #[test]
    fn cartier_checks() {
        let f = Fan::planar(vec![[1, 0], [0, 1], [-1, -2]]).unwrap();
        assert!(!f.is_cartier(&TorusDivisor(vec![0, 0, 1])).unwrap());
        assert!(f.is_cartier(&TorusDivisor(vec![0, 1, 0])).unwrap());
        assert_eq!(f.cartier_index(&TorusDivisor(vec![0, 0, 1])).unwrap(), BigInt::from(2));
        assert!(f.is_cartier(&f.principal_divisor(&[3, -1])).unwrap());
    }
}
