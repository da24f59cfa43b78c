//! Formal divisorial classes in the Grothendieck group of a toric variety,
//! the `c₁(L)·` operator, and exact extraction of limit-defined intersection
//! numbers from Euler characteristics.
//!
//! Limits are never extrapolated numerically. `χ(c₁(L₁)…c₁(L_{n−2})·𝒪(mD))`
//! is a quasi-polynomial of degree at most 2 in `m` whose period divides the
//! Cartier index of `D`. We interpolate one quadratic per residue class and
//! check it on held-out samples before reading off the leading coefficient.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{QMatrix, QVector, Rat};
use crate::toric::{chi, Fan, FanError, TorusDivisor};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KTheoryError {
    #[error("NotCartier: twist {0} is not Cartier")]
    NotCartier(String),
    #[error("QuasiPolynomialMismatch at m={m}: fit predicts {predicted}, oracle gives {actual}")]
    QuasiPolynomialMismatch { m: u64, predicted: Rat, actual: i64 },
    #[error("ResidueLeadMismatch: leading coefficients differ across residues ({0} vs {1})")]
    ResidueLeadMismatch(Rat, Rat),
    #[error("NonStabilizing: Frobenius samples never matched the fit twice in a row (p={p})")]
    NonStabilizing { p: u64 },
    #[error("NotPrime: {0}")]
    NotPrime(u64),
    #[error("WrongTwistCount: expected {expected} Cartier twists, found {found}")]
    WrongTwistCount { expected: usize, found: usize },
    #[error("InvalidPeriod: {0}")]
    InvalidPeriod(String),
    #[error(transparent)]
    Fan(#[from] FanError),
}

/// A finite ℤ-combination of classes `[𝒪_X(D)]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalClass {
    terms: BTreeMap<TorusDivisor, i64>,
}

impl FormalClass {
    pub fn zero() -> Self {
        FormalClass::default()
    }

    /// `[𝒪_X]` on a fan with `n` rays.
    pub fn structure_sheaf(n: usize) -> Self {
        Self::line_bundle(TorusDivisor::zero(n))
    }

    /// `[𝒪_X(D)]`.
    pub fn line_bundle(d: TorusDivisor) -> Self {
        let mut c = FormalClass::zero();
        c.add_term(d, 1);
        c
    }

    /// `[𝒪_D] = [𝒪_X] − [𝒪_X(−D)]`.
    pub fn divisor_class(d: &TorusDivisor) -> Self {
        let mut c = Self::structure_sheaf(d.len());
        c.add_term(d.neg(), -1);
        c
    }

    pub fn add_term(&mut self, d: TorusDivisor, multiplicity: i64) {
        if multiplicity == 0 {
            return;
        }
        let entry = self.terms.entry(d).or_insert(0);
        *entry += multiplicity;
        if *entry == 0 {
            self.terms.retain(|_, m| *m != 0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TorusDivisor, i64)> {
        self.terms.iter().map(|(d, &m)| (d, m))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FormalClass) -> Self {
        let mut out = self.clone();
        for (d, m) in other.terms() {
            out.add_term(d.clone(), m);
        }
        out
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut out = FormalClass::zero();
        for (d, m) in self.terms() {
            out.add_term(d.clone(), k * m);
        }
        out
    }

    /// Tensor with the line bundle `𝒪(L)`: every divisor shifts by `L`.
    pub fn shift(&self, l: &TorusDivisor) -> Self {
        let mut out = FormalClass::zero();
        for (d, m) in self.terms() {
            out.add_term(d.add(l), m);
        }
        out
    }
}

fn require_cartier(fan: &Fan, l: &TorusDivisor) -> Result<(), KTheoryError> {
    if !fan.is_cartier(l)? {
        return Err(KTheoryError::NotCartier(format!("{:?}", l.0)));
    }
    Ok(())
}

/// `c₁(L)·α = α − L⁻¹⊗α` for a Cartier `L`.
pub fn c1_apply(fan: &Fan, alpha: &FormalClass, l: &TorusDivisor) -> Result<FormalClass, KTheoryError> {
    require_cartier(fan, l)?;
    for (d, _) in alpha.terms() {
        fan.check_divisor(d)?;
    }
    Ok(alpha.add(&alpha.shift(&l.neg()).scale(-1)))
}

/// Applies `c₁(L)` for every `L` in order.
pub fn c1_apply_all(fan: &Fan, alpha: &FormalClass, ls: &[TorusDivisor]) -> Result<FormalClass, KTheoryError> {
    ls.iter().try_fold(alpha.clone(), |acc, l| c1_apply(fan, &acc, l))
}

/// Linear extension of the toric `χ` to formal classes.
pub fn chi_formal(fan: &Fan, alpha: &FormalClass) -> Result<i64, KTheoryError> {
    let terms: Vec<_> = alpha.terms().collect();
    let parts: Vec<i64> = terms
        .par_iter()
        .map(|(d, m)| chi(fan, d).map(|r| r.chi * m))
        .collect::<Result<_, _>>()?;
    Ok(parts.into_iter().sum())
}

/// Exact limit together with the data it was read from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitResult {
    pub value: Rat,
    pub period_used: u64,
    /// `(m, χ(c₁(L₁)…·𝒪(mD)))`.
    pub samples: Vec<(u64, i64)>,
    pub residue_leading_coefficients: Vec<Rat>,
}

/// One quadratic `c₀ + c₁m + c₂m²` per residue of `m` modulo the period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiPolynomial {
    pub period: u64,
    /// Indexed by `m mod period`.
    pub coefficients: Vec<[Rat; 3]>,
}

impl QuasiPolynomial {
    pub fn eval(&self, m: u64) -> Rat {
        let [c0, c1, c2] = &self.coefficients[(m % self.period) as usize];
        let x = Rat::from(m as i64);
        c0 + c1 * &x + c2 * &x * &x
    }

    pub fn leading(&self, residue: u64) -> &Rat {
        &self.coefficients[(residue % self.period) as usize][2]
    }
}

/// Upper bound on the fitting period; larger periods would make the oracle
/// samples far too expensive anyway.
const MAX_PERIOD: u64 = 1 << 12;

fn check_twists(fan: &Fan, ls: &[TorusDivisor]) -> Result<(), KTheoryError> {
    let expected = fan.rank() - 2;
    if ls.len() != expected {
        return Err(KTheoryError::WrongTwistCount {
            expected,
            found: ls.len(),
        });
    }
    for l in ls {
        fan.check_divisor(l)?;
        require_cartier(fan, l)?;
    }
    Ok(())
}

/// `χ(c₁(L₁)…c₁(L_k)·𝒪(D))`.
pub fn twisted_chi(fan: &Fan, d: &TorusDivisor, ls: &[TorusDivisor]) -> Result<i64, KTheoryError> {
    fan.check_divisor(d)?;
    let alpha = c1_apply_all(fan, &FormalClass::line_bundle(d.clone()), ls)?;
    chi_formal(fan, &alpha)
}

/// Period used when none is forced: the Cartier index of `D`.
pub fn default_period(fan: &Fan, d: &TorusDivisor) -> Result<u64, KTheoryError> {
    let idx = fan.cartier_index(d)?;
    idx.to_u64()
        .filter(|&p| p <= MAX_PERIOD)
        .ok_or_else(|| KTheoryError::InvalidPeriod(format!("Cartier index {idx} too large")))
}

/// Quadratic through three points, as `[c₀, c₁, c₂]`.
fn interpolate(points: &[(u64, i64)]) -> [Rat; 3] {
    let rows: Vec<Vec<i64>> = points
        .iter()
        .map(|&(m, _)| {
            let m = m as i64;
            vec![1, m, m * m]
        })
        .collect();
    let rhs = QVector::from_i64(&points.iter().map(|&(_, y)| y).collect::<Vec<_>>());
    let c = QMatrix::from_i64_rows(&rows)
        .solve(&rhs)
        .expect("Vandermonde matrix on distinct nodes is invertible");
    [c[0].clone(), c[1].clone(), c[2].clone()]
}

/// Fits the quasi-polynomial on `m = 1..=3P` and validates it on
/// `m = 3P+1..=4P+2`, so every residue class is checked at least once and
/// two of them twice.
pub fn fit_quasi_polynomial(
    fan: &Fan,
    d: &TorusDivisor,
    ls: &[TorusDivisor],
    period: u64,
) -> Result<(QuasiPolynomial, Vec<(u64, i64)>), KTheoryError> {
    if period == 0 || period > MAX_PERIOD {
        return Err(KTheoryError::InvalidPeriod(period.to_string()));
    }
    let fit_end = 3 * period;
    let last = 4 * period + 2;
    let samples: Vec<(u64, i64)> = (1..=last)
        .into_par_iter()
        .map(|m| twisted_chi(fan, &d.scale(m as i64), ls).map(|c| (m, c)))
        .collect::<Result<_, _>>()?;

    let coefficients = (0..period)
        .map(|r| {
            let pts: Vec<(u64, i64)> = samples[..fit_end as usize]
                .iter()
                .filter(|(m, _)| m % period == r)
                .copied()
                .collect();
            interpolate(&pts)
        })
        .collect();
    let qp = QuasiPolynomial {
        period,
        coefficients,
    };
    for &(m, actual) in &samples[fit_end as usize..] {
        let predicted = qp.eval(m);
        if predicted != Rat::from(actual) {
            return Err(KTheoryError::QuasiPolynomialMismatch { m, predicted, actual });
        }
    }
    Ok((qp, samples))
}

fn common_leading(qp: &QuasiPolynomial, residues: impl IntoIterator<Item = u64>) -> Result<Rat, KTheoryError> {
    let mut lead: Option<&Rat> = None;
    for r in residues {
        let c = qp.leading(r);
        match lead {
            Some(l) if l != c => return Err(KTheoryError::ResidueLeadMismatch(l.clone(), c.clone())),
            _ => lead = Some(c),
        }
    }
    Ok(lead.cloned().unwrap_or_else(Rat::zero))
}

/// `D²·L₁…L_{n−2} = 2·lim χ(c₁(L₁)…·𝒪(mD))/m²`.
pub fn self_pair_limit(fan: &Fan, d: &TorusDivisor, ls: &[TorusDivisor]) -> Result<LimitResult, KTheoryError> {
    self_pair_limit_with_period(fan, d, ls, None)
}

/// As [`self_pair_limit`] with an optional forced period.
pub fn self_pair_limit_with_period(
    fan: &Fan,
    d: &TorusDivisor,
    ls: &[TorusDivisor],
    period: Option<u64>,
) -> Result<LimitResult, KTheoryError> {
    fan.check_divisor(d)?;
    check_twists(fan, ls)?;
    let period = match period {
        Some(p) => p,
        None => default_period(fan, d)?,
    };
    let (qp, samples) = fit_quasi_polynomial(fan, d, ls, period)?;
    let lead = common_leading(&qp, 0..period)?;
    Ok(LimitResult {
        value: Rat::from(2) * lead,
        period_used: period,
        samples,
        residue_leading_coefficients: qp.coefficients.iter().map(|c| c[2].clone()).collect(),
    })
}

/// Polarization of [`self_pair_limit`].
pub fn pair_limit(
    fan: &Fan,
    d1: &TorusDivisor,
    d2: &TorusDivisor,
    ls: &[TorusDivisor],
) -> Result<Rat, KTheoryError> {
    fan.check_divisor(d1)?;
    fan.check_divisor(d2)?;
    let s = self_pair_limit(fan, &d1.add(d2), ls)?.value;
    let s1 = self_pair_limit(fan, d1, ls)?.value;
    let s2 = self_pair_limit(fan, d2, ls)?.value;
    Ok((s - s1 - s2) * Rat::new(1, 2))
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|k| k * k <= p).all(|k| !p.is_multiple_of(k))
}

/// Largest Frobenius exponent tried before giving up.
const MAX_FROBENIUS_STEPS: u32 = 6;
/// Skip Frobenius samples whose character box would exceed this many points.
const MAX_FROBENIUS_BOX: f64 = 2.0e8;

/// `∫ch₂(𝒪(D))·L₁…L_{n−2} = lim χ(c₁(L₁)…·𝒪(p^m D))/p^{2m}`.
///
/// The quasi-polynomial is fitted on ordinary multiples of `D`; the actual
/// Frobenius samples `k = p^m` are then checked against it until two
/// consecutive exponents agree, and the limit is the leading coefficient
/// on the residues `p^m mod P` visited from then on.
pub fn frobenius_ch2_limit(
    fan: &Fan,
    d: &TorusDivisor,
    p: u64,
    ls: &[TorusDivisor],
) -> Result<Rat, KTheoryError> {
    if !is_prime(p) {
        return Err(KTheoryError::NotPrime(p));
    }
    fan.check_divisor(d)?;
    check_twists(fan, ls)?;
    let period = default_period(fan, d)?;
    let (qp, _) = fit_quasi_polynomial(fan, d, ls, period)?;

    let reach = d.0.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
    let mut agreeing = 0;
    let mut m = 1u32;
    while agreeing < 2 {
        if m > MAX_FROBENIUS_STEPS {
            return Err(KTheoryError::NonStabilizing { p });
        }
        let k = p.checked_pow(m).ok_or(KTheoryError::NonStabilizing { p })?;
        if (2.0 * reach * k as f64).powi(fan.rank() as i32) > MAX_FROBENIUS_BOX {
            return Err(KTheoryError::NonStabilizing { p });
        }
        let actual = twisted_chi(fan, &d.scale(k as i64), ls)?;
        if qp.eval(k) == Rat::from(actual) {
            agreeing += 1;
        } else {
            agreeing = 0;
        }
        m += 1;
    }
    // p^m mod P is periodic once m exceeds every prime exponent of P, which
    // is below 64 for any admissible period.
    let mut residues = Vec::new();
    let mut r = (0..64).fold(1u64, |acc, _| (acc * p.mod_floor(&period)) % period);
    while !residues.contains(&r) {
        residues.push(r);
        r = (r * p) % period;
    }
    common_leading(&qp, residues)
}

/// Classical intersection number of `rank` Cartier divisors, computed as
/// `χ(c₁(D₁)…c₁(D_n)·𝒪_X)`.
pub fn cartier_product(fan: &Fan, divisors: &[TorusDivisor]) -> Result<i64, KTheoryError> {
    if divisors.len() != fan.rank() {
        return Err(KTheoryError::WrongTwistCount {
            expected: fan.rank(),
            found: divisors.len(),
        });
    }
    for d in divisors {
        fan.check_divisor(d)?;
    }
    let alpha = c1_apply_all(fan, &FormalClass::structure_sheaf(fan.num_rays()), divisors)?;
    chi_formal(fan, &alpha)
}

/// `χ(c₁(L)·c₁(L₁)…·[𝒪_D])` for Cartier `L`: the intersection number
/// `L·D·L₁…` without any limit.
pub fn cartier_pair_with_divisor(
    fan: &Fan,
    l: &TorusDivisor,
    d: &TorusDivisor,
    ls: &[TorusDivisor],
) -> Result<i64, KTheoryError> {
    fan.check_divisor(d)?;
    check_twists(fan, ls)?;
    let mut twists = vec![l.clone()];
    twists.extend_from_slice(ls);
    let alpha = c1_apply_all(fan, &FormalClass::divisor_class(d), &twists)?;
    chi_formal(fan, &alpha)
}
