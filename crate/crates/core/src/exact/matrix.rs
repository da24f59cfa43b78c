use std::fmt;
use std::ops::{Add, Index, IndexMut, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rat::{lcm_of_denominators, Rat};
use super::ExactError;

/// Fixed-length vector of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QVector(Vec<Rat>);

impl QVector {
    pub fn new(entries: Vec<Rat>) -> Self {
        QVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        QVector(vec![Rat::zero(); len])
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        QVector(entries.iter().map(|&x| Rat::from(x)).collect())
    }

    /// Standard basis vector.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[i] = Rat::one();
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Rat::is_zero)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rat> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Rat] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Rat> {
        self.0
    }

    pub fn scale(&self, c: &Rat) -> Self {
        QVector(self.0.iter().map(|x| x * c).collect())
    }

    pub fn dot(&self, other: &QVector) -> Rat {
        assert_eq!(self.len(), other.len(), "dot of vectors of different length");
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| !a.is_zero() && !b.is_zero())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// True when every entry is an integer.
    pub fn is_integral(&self) -> bool {
        self.0.iter().all(Rat::is_integer)
    }

    pub fn lcm_denominator(&self) -> BigInt {
        lcm_of_denominators(self.0.iter())
    }
}

impl Index<usize> for QVector {
    type Output = Rat;
    fn index(&self, i: usize) -> &Rat {
        &self.0[i]
    }
}

impl IndexMut<usize> for QVector {
    fn index_mut(&mut self, i: usize) -> &mut Rat {
        &mut self.0[i]
    }
}

impl Add<&QVector> for &QVector {
    type Output = QVector;
    fn add(self, rhs: &QVector) -> QVector {
        assert_eq!(self.len(), rhs.len(), "adding vectors of different length");
        QVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&QVector> for &QVector {
    type Output = QVector;
    fn sub(self, rhs: &QVector) -> QVector {
        assert_eq!(self.len(), rhs.len(), "subtracting vectors of different length");
        QVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &QVector {
    type Output = QVector;
    fn neg(self) -> QVector {
        QVector(self.0.iter().map(|a| -a).collect())
    }
}

impl FromIterator<Rat> for QVector {
    fn from_iter<I: IntoIterator<Item = Rat>>(iter: I) -> Self {
        QVector(iter.into_iter().collect())
    }
}

impl fmt::Debug for QVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Counts of positive, negative and zero entries of a diagonalized quadratic form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Signature {
    pub fn new(positive: usize, negative: usize, zero: usize) -> Self {
        Signature {
            positive,
            negative,
            zero,
        }
    }

    pub fn dim(&self) -> usize {
        self.positive + self.negative + self.zero
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.positive, self.negative, self.zero)
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rat>,
}

impl QMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rat>) -> Result<Self, ExactError> {
        if rows * cols != entries.len() {
            return Err(ExactError::DimensionMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(QMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            entries: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, ExactError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(ExactError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(QMatrix {
            rows: r,
            cols: c,
            entries,
        })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| Rat::from(x)).collect())
            .collect();
        Self::from_rows(rows).expect("ragged integer matrix literal")
    }

    pub fn diagonal(values: &[Rat]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rat>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(Rat::is_integer)
    }

    pub fn mul_vec(&self, v: &QVector) -> Result<QVector, ExactError> {
        if v.len() != self.cols {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        // Gram matrices here are sparse; skipping zeros saves most of the
        // rational arithmetic.
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn mul(&self, other: &QMatrix) -> Result<QMatrix, ExactError> {
        if self.cols != other.rows {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        Ok(out)
    }

    /// Bilinear form `xᵀ M y`.
    pub fn bilinear(&self, x: &QVector, y: &QVector) -> Result<Rat, ExactError> {
        Ok(x.dot(&self.mul_vec(y)?))
    }

    /// Submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> QMatrix {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                entries.push(self[(i, j)].clone());
            }
        }
        QMatrix {
            rows: rows.len(),
            cols: cols.len(),
            entries,
        }
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> QMatrix {
        self.submatrix(indices, indices)
    }

    /// Rows rescaled by positive integers so every entry is integral.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| integer_row(self.row(i)))
            .collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<Rat, ExactError> {
        if !self.is_square() {
            return Err(ExactError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Rat::one());
        }
        // det(M) = det(S·M) / det(S) for the diagonal row scaling S.
        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let row = self.row(i);
            let l = lcm_of_denominators(row.iter());
            scale *= &l;
            a.push(row.iter().map(|x| scaled_numerator(x, &l)).collect());
        }
        let det = bareiss_det(a);
        Ok(Rat::new(det, scale))
    }

    /// Signs of the leading principal minors, computed by Bareiss elimination
    /// without pivoting. Stops after the first zero minor.
    pub fn leading_minor_signs(&self) -> Result<Vec<i32>, ExactError> {
        if !self.is_square() {
            return Err(ExactError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Uniform positive scaling keeps minor signs.
        let l = lcm_of_denominators(self.entries.iter());
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| self.row(i).iter().map(|x| scaled_numerator(x, &l)).collect())
            .collect();
        let mut signs = Vec::with_capacity(n);
        let mut prev = BigInt::one();
        for k in 0..n {
            let pivot = a[k][k].clone();
            signs.push(sign_of(&pivot));
            if pivot.is_zero() {
                break;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&a[i][j] * &pivot - &a[i][k] * &a[k][j]) / &prev;
                    a[i][j] = v;
                }
            }
            prev = pivot;
        }
        Ok(signs)
    }

    /// Index (0-based) of the first leading principal minor violating the
    /// negative-definite sign pattern `(-1)^k`, if any.
    pub fn negative_definite_failure(&self) -> Result<Option<usize>, ExactError> {
        if !self.is_symmetric() {
            return Err(ExactError::NotSymmetric);
        }
        let signs = self.leading_minor_signs()?;
        for (k, s) in signs.iter().enumerate() {
            let want = if k % 2 == 0 { -1 } else { 1 };
            if *s != want {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    pub fn is_negative_definite(&self) -> Result<bool, ExactError> {
        Ok(self.negative_definite_failure()?.is_none())
    }

    /// Rank over ℚ via fraction-free elimination.
    pub fn rank(&self) -> usize {
        let mut a = self.integer_rows();
        let (rank, _) = bareiss_echelon(&mut a, self.cols);
        rank
    }

    /// Solves `M x = b` exactly for square nonsingular `M`.
    pub fn solve(&self, b: &QVector) -> Result<QVector, ExactError> {
        if !self.is_square() {
            return Err(ExactError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.len() != self.rows {
            return Err(ExactError::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let n = self.rows;
        let mut aug: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                let mut row: Vec<Rat> = self.row(i).to_vec();
                row.push(b[i].clone());
                integer_row(&row)
            })
            .collect();
        let (rank, pivots) = bareiss_echelon(&mut aug, n);
        if rank < n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
            return Err(ExactError::SingularMatrix);
        }
        let mut x = vec![Rat::zero(); n];
        for i in (0..n).rev() {
            let mut acc = Rat::from(aug[i][n].clone());
            for j in i + 1..n {
                acc -= Rat::from(aug[i][j].clone()) * &x[j];
            }
            x[i] = acc / Rat::from(aug[i][i].clone());
        }
        Ok(QVector::new(x))
    }

    /// Basis of the right kernel `{x : M x = 0}`.
    pub fn kernel(&self) -> Vec<QVector> {
        let (rref, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = QVector::zeros(self.cols);
                v[f] = Rat::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -&rref[(r, f)];
                }
                v
            })
            .collect()
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m[(r, c)].recip();
            for j in 0..m.cols {
                let v = &m[(r, j)] * &inv;
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let f = m[(i, c)].clone();
                    for j in 0..m.cols {
                        let v = &m[(r, j)] * &f;
                        m[(i, j)] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Exact inertia of a symmetric form by congruence diagonalization.
    ///
    /// Nonzero diagonal pivots are eliminated one at a time. When every
    /// remaining diagonal entry vanishes but some off-diagonal entry does not,
    /// the 2×2 block `[[0,c],[c,0]]` is hyperbolic and is split off as one
    /// positive plus one negative direction.
    pub fn signature(&self) -> Result<Signature, ExactError> {
        if !self.is_symmetric() {
            return Err(ExactError::NotSymmetric);
        }
        let mut sig = Signature::new(0, 0, 0);
        let mut m = self.to_rows();
        while !m.is_empty() {
            let n = m.len();
            if let Some(p) = (0..n).find(|&i| !m[i][i].is_zero()) {
                let pivot = m[p][p].clone();
                if pivot.is_positive() {
                    sig.positive += 1;
                } else {
                    sig.negative += 1;
                }
                let rest: Vec<usize> = (0..n).filter(|&i| i != p).collect();
                m = rest
                    .iter()
                    .map(|&i| {
                        rest.iter()
                            .map(|&j| &m[i][j] - &(&m[i][p] * &m[p][j]) / &pivot)
                            .collect()
                    })
                    .collect();
                continue;
            }
            let off = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !m[i][j].is_zero());
            let Some((a, b)) = off else {
                sig.zero += n;
                break;
            };
            sig.positive += 1;
            sig.negative += 1;
            // Schur complement of the block B = [[0,c],[c,0]], B⁻¹ = [[0,1/c],[1/c,0]].
            let c_inv = m[a][b].recip();
            let rest: Vec<usize> = (0..n).filter(|&i| i != a && i != b).collect();
            m = rest
                .iter()
                .map(|&i| {
                    rest.iter()
                        .map(|&j| {
                            let corr = (&m[i][a] * &m[b][j] + &m[i][b] * &m[a][j]) * &c_inv;
                            &m[i][j] - &corr
                        })
                        .collect()
                })
                .collect();
        }
        Ok(sig)
    }
}

impl Index<(usize, usize)> for QMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.rows).map(|i| self.row(i))).finish()
    }
}

impl Serialize for QMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Rat>>::deserialize(d)?;
        QMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

fn sign_of(x: &BigInt) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

fn scaled_numerator(x: &Rat, l: &BigInt) -> BigInt {
    x.numer() * (l / x.denom())
}

fn integer_row(row: &[Rat]) -> Vec<BigInt> {
    let l = lcm_of_denominators(row.iter());
    row.iter().map(|x| scaled_numerator(x, &l)).collect()
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(p) => {
                    a.swap(k, p);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Fraction-free forward elimination restricted to the first `ncols`
/// columns; returns rank and pivot columns. Every intermediate entry is a
/// minor of the input (Sylvester's identity), so the divisions are exact even
/// when zero columns are skipped.
fn bareiss_echelon(a: &mut [Vec<BigInt>], ncols: usize) -> (usize, Vec<usize>) {
    let nrows = a.len();
    let width = a.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut r = 0;
    let mut pivots = Vec::new();
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..nrows {
            for j in c + 1..width {
                let v = (&a[i][j] * &a[r][c] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    (r, pivots)
}
