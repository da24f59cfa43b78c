//! Normal proper surfaces presented by the intersection lattice of a
//! resolution, with Mumford's ℚ-valued pullback and intersection pairing.

use std::collections::BTreeSet;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::exact::{ExactError, QMatrix, QVector, Rat, Signature};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SurfaceError {
    #[error("gram matrix is not symmetric")]
    NotSymmetric,
    #[error("gram matrix is not integral")]
    NotIntegral,
    #[error("NotNegativeDefinite: exceptional group {group}, leading minor {minor}")]
    NotNegativeDefinite { group: usize, minor: usize },
    #[error("exceptional groups overlap at basis index {0}")]
    OverlappingGroups(usize),
    #[error("exceptional group {0} is empty")]
    EmptyGroup(usize),
    #[error("basis index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("UnsupportedModel: rounding pullback requires a toric-derived model")]
    UnsupportedModel,
    #[error("class list is empty")]
    EmptyClassList,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Strict-transform class of a Weil divisor, integral coefficients in the
/// model basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeilClass(pub Vec<i64>);

impl WeilClass {
    pub fn zero(len: usize) -> Self {
        WeilClass(vec![0; len])
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

    pub fn scale(&self, k: i64) -> Self {
        WeilClass(self.0.iter().map(|x| x * k).collect())
    }

    pub fn to_qvector(&self) -> QVector {
        QVector::from_i64(&self.0)
    }
}

impl Add for &WeilClass {
    type Output = WeilClass;
    fn add(self, rhs: &WeilClass) -> WeilClass {
        assert_eq!(self.len(), rhs.len());
        WeilClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &WeilClass {
    type Output = WeilClass;
    fn sub(self, rhs: &WeilClass) -> WeilClass {
        assert_eq!(self.len(), rhs.len());
        WeilClass(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &WeilClass {
    type Output = WeilClass;
    fn neg(self) -> WeilClass {
        WeilClass(self.0.iter().map(|a| -a).collect())
    }
}

/// A ℚ-divisor class on the resolution, in the model basis.
pub type QClass = QVector;

/// On-disk form of a model. Rationals are `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFile {
    pub basis: Vec<String>,
    pub gram: Vec<Vec<Rat>>,
    pub exceptional_groups: Vec<Vec<usize>>,
    pub canonical: Vec<Rat>,
    #[serde(default)]
    pub toric_derived: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_o: Option<Rat>,
}

/// Smooth-model intersection lattice with exceptional blocks, one block per
/// singular point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalSurfaceModel {
    basis: Vec<String>,
    gram: QMatrix,
    exceptional_groups: Vec<Vec<usize>>,
    canonical: QVector,
    toric_derived: bool,
    chi_o: Option<Rat>,
    /// Gram block of each exceptional group, checked negative definite.
    group_blocks: Vec<QMatrix>,
    /// Inverses of `group_blocks`, cached because every pullback needs them.
    group_inverses: Vec<QMatrix>,
    /// `f*K_X`, fixed by the data above.
    canonical_pullback: QClass,
}

impl NormalSurfaceModel {
    pub fn new(
        basis: Vec<String>,
        gram: QMatrix,
        exceptional_groups: Vec<Vec<usize>>,
        canonical: QVector,
    ) -> Result<Self, SurfaceError> {
        let n = basis.len();
        if gram.rows() != n || gram.cols() != n {
            return Err(SurfaceError::DimensionMismatch {
                expected: n,
                found: gram.rows(),
            });
        }
        if canonical.len() != n {
            return Err(SurfaceError::DimensionMismatch {
                expected: n,
                found: canonical.len(),
            });
        }
        if !gram.is_symmetric() {
            return Err(SurfaceError::NotSymmetric);
        }
        if !gram.is_integral() {
            return Err(SurfaceError::NotIntegral);
        }
        let mut seen = BTreeSet::new();
        let mut group_blocks = Vec::with_capacity(exceptional_groups.len());
        for (g, group) in exceptional_groups.iter().enumerate() {
            if group.is_empty() {
                return Err(SurfaceError::EmptyGroup(g));
            }
            for &i in group {
                if i >= n {
                    return Err(SurfaceError::IndexOutOfRange(i));
                }
                if !seen.insert(i) {
                    return Err(SurfaceError::OverlappingGroups(i));
                }
            }
            let block = gram.principal_submatrix(group);
            if let Some(minor) = block.negative_definite_failure()? {
                return Err(SurfaceError::NotNegativeDefinite { group: g, minor });
            }
            group_blocks.push(block);
        }
        let group_inverses = group_blocks.iter().map(inverse).collect::<Result<_, _>>()?;
        let mut model = NormalSurfaceModel {
            basis,
            gram,
            exceptional_groups,
            canonical,
            toric_derived: false,
            chi_o: None,
            group_blocks,
            group_inverses,
            canonical_pullback: QVector::zeros(0),
        };
        model.canonical_pullback = model.compute_canonical_pullback()?;
        Ok(model)
    }

    pub fn with_toric_derived(mut self, flag: bool) -> Self {
        self.toric_derived = flag;
        self
    }

    pub fn with_chi_o(mut self, chi_o: Option<Rat>) -> Self {
        self.chi_o = chi_o;
        self
    }

    pub fn from_file(file: ModelFile) -> Result<Self, SurfaceError> {
        let gram = QMatrix::from_rows(file.gram)?;
        Ok(Self::new(
            file.basis,
            gram,
            file.exceptional_groups,
            QVector::new(file.canonical),
        )?
        .with_toric_derived(file.toric_derived)
        .with_chi_o(file.chi_o))
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            basis: self.basis.clone(),
            gram: self.gram.to_rows(),
            exceptional_groups: self.exceptional_groups.clone(),
            canonical: self.canonical.as_slice().to_vec(),
            toric_derived: self.toric_derived,
            chi_o: self.chi_o.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn gram(&self) -> &QMatrix {
        &self.gram
    }

    pub fn exceptional_groups(&self) -> &[Vec<usize>] {
        &self.exceptional_groups
    }

    pub fn canonical(&self) -> &QVector {
        &self.canonical
    }

    pub fn is_toric_derived(&self) -> bool {
        self.toric_derived
    }

    pub fn chi_o(&self) -> Option<&Rat> {
        self.chi_o.as_ref()
    }

    pub fn is_exceptional(&self, i: usize) -> bool {
        self.exceptional_groups.iter().any(|g| g.contains(&i))
    }

    pub fn group_gram(&self, g: usize) -> &QMatrix {
        &self.group_blocks[g]
    }

    fn check_len(&self, len: usize) -> Result<(), SurfaceError> {
        if len != self.dim() {
            return Err(SurfaceError::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// Intersection form on raw ℚ-vectors.
    pub fn intersect(&self, x: &QVector, y: &QVector) -> Result<Rat, SurfaceError> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.gram.bilinear(x, y)?)
    }

    /// Adds to `v` the exceptional cycle making it orthogonal to every
    /// exceptional basis vector.
    pub fn pullback_q(&self, v: &QVector) -> Result<QClass, SurfaceError> {
        self.check_len(v.len())?;
        let gv = self.gram.mul_vec(v)?;
        let mut out = v.clone();
        for (group, inv) in self.exceptional_groups.iter().zip(&self.group_inverses) {
            let rhs: QVector = group.iter().map(|&j| -&gv[j]).collect();
            let lambda = inv.mul_vec(&rhs)?;
            for (&j, l) in group.iter().zip(lambda.iter()) {
                out[j] += l;
            }
        }
        Ok(out)
    }

    /// Mumford pullback `f*D`: strict transform plus the unique exceptional
    /// ℚ-cycle with `f*D · E_j = 0` for all exceptional `E_j`.
    pub fn mumford_pullback(&self, d: &WeilClass) -> Result<QClass, SurfaceError> {
        self.pullback_q(&d.to_qvector())
    }

    /// Mumford's intersection number `D₁·D₂`.
    pub fn pair(&self, d1: &WeilClass, d2: &WeilClass) -> Result<Rat, SurfaceError> {
        let p1 = self.mumford_pullback(d1)?;
        let p2 = self.mumford_pullback(d2)?;
        self.intersect(&p1, &p2)
    }

    /// Rounding pullback: Mumford pullback with exceptional coefficients
    /// rounded up. Only offered on toric-derived models.
    pub fn sharp_pullback(&self, d: &WeilClass) -> Result<QClass, SurfaceError> {
        if !self.toric_derived {
            return Err(SurfaceError::UnsupportedModel);
        }
        let mut p = self.mumford_pullback(d)?;
        for group in &self.exceptional_groups {
            for &j in group {
                p[j] = p[j].ceil();
            }
        }
        Ok(p)
    }

    /// Cartier index: lcm of the denominators of the pullback coefficients.
    pub fn cartier_index(&self, d: &WeilClass) -> Result<BigInt, SurfaceError> {
        Ok(self.mumford_pullback(d)?.lcm_denominator())
    }

    /// Discrepancy cycle of each singular point: `a` with
    /// `a·E_j = K_X̃·E_j`, so that `K_X̃ = f*K_X + Σ a_i E_i`.
    pub fn discrepancies(&self) -> Result<Vec<QVector>, SurfaceError> {
        let kg = self.gram.mul_vec(&self.canonical)?;
        self.exceptional_groups
            .iter()
            .zip(&self.group_blocks)
            .map(|(group, block)| {
                let rhs: QVector = group.iter().map(|&j| kg[j].clone()).collect();
                Ok(block.solve(&rhs)?)
            })
            .collect()
    }

    /// `f*K_X`, computed as the canonical class minus the discrepancy cycles.
    pub fn canonical_pullback(&self) -> Result<QClass, SurfaceError> {
        Ok(self.canonical_pullback.clone())
    }

    fn compute_canonical_pullback(&self) -> Result<QClass, SurfaceError> {
        let mut k = self.canonical.clone();
        for (group, a) in self.exceptional_groups.iter().zip(self.discrepancies()?) {
            for (&j, aj) in group.iter().zip(a.iter()) {
                k[j] -= aj;
            }
        }
        Ok(k)
    }

    /// `D·K_X` in Mumford's sense.
    pub fn pair_with_canonical(&self, d: &WeilClass) -> Result<Rat, SurfaceError> {
        let p = self.mumford_pullback(d)?;
        self.intersect(&p, &self.canonical_pullback)
    }

    /// Product of `|det|` of the exceptional Gram blocks; every pairing times
    /// this number is an integer.
    pub fn pairing_denominator_bound(&self) -> Result<BigInt, SurfaceError> {
        let mut n = BigInt::one();
        for block in &self.group_blocks {
            let d = block.determinant()?;
            n *= d.numer().abs();
        }
        Ok(n)
    }

    /// Gram matrix of the Mumford pairing on `classes`, with its inertia and
    /// the radical of the form.
    pub fn numerical_lattice(&self, classes: &[WeilClass]) -> Result<NumericalLattice, SurfaceError> {
        if classes.is_empty() {
            return Err(SurfaceError::EmptyClassList);
        }
        let pulled: Vec<QClass> = classes
            .iter()
            .map(|c| self.mumford_pullback(c))
            .collect::<Result<_, _>>()?;
        let k = pulled.len();
        let mut rows = vec![vec![Rat::zero(); k]; k];
        for i in 0..k {
            for j in i..k {
                let v = self.intersect(&pulled[i], &pulled[j])?;
                rows[i][j] = v.clone();
                rows[j][i] = v;
            }
        }
        let gram = QMatrix::from_rows(rows)?;
        let signature = gram.signature()?;
        let radical = gram.kernel();
        let quotient_signature = quotient_signature(&gram, &radical)?;
        Ok(NumericalLattice {
            gram,
            signature,
            radical,
            quotient_signature,
        })
    }
}

fn inverse(m: &QMatrix) -> Result<QMatrix, ExactError> {
    let n = m.rows();
    let cols: Vec<QVector> = (0..n).map(|i| m.solve(&QVector::unit(n, i))).collect::<Result<_, _>>()?;
    let rows = (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    QMatrix::from_rows(rows)
}

/// Gram matrix of a finite set of classes under the Mumford pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumericalLattice {
    pub gram: QMatrix,
    pub signature: Signature,
    /// Basis of the radical (numerically trivial combinations).
    pub radical: Vec<QVector>,
    /// Inertia of the form induced on the quotient by the radical.
    pub quotient_signature: Signature,
}

/// Restricts the form to a complement of the radical: the pivot columns of
/// the radical's echelon form are dropped and the rest kept.
fn quotient_signature(gram: &QMatrix, radical: &[QVector]) -> Result<Signature, SurfaceError> {
    let n = gram.rows();
    if radical.is_empty() {
        return Ok(gram.signature()?);
    }
    let rad_rows: Vec<Vec<Rat>> = radical.iter().map(|v| v.as_slice().to_vec()).collect();
    let (_, pivots) = QMatrix::from_rows(rad_rows)?.rref();
    let keep: Vec<usize> = (0..n).filter(|i| !pivots.contains(i)).collect();
    Ok(gram.principal_submatrix(&keep).signature()?)
}
