//! Dual graphs of resolutions of a single normal surface singularity.
//!
//! Sign convention: for an exceptional curve `E` with arithmetic genus `p_a`,
//! adjunction gives `K·E = 2·p_a − 2 − E²`. All discrepancies and relative
//! Chern classes in this module follow from that one rule.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::exact::{ExactError, QMatrix, QVector, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("NotNegativeDefinite: leading minor {minor} has the wrong sign")]
    NotNegativeDefinite { minor: usize },
    #[error("AsymmetricAdjacency at ({0},{1})")]
    AsymmetricAdjacency(usize, usize),
    #[error("NegativeAdjacency at ({0},{1})")]
    NegativeAdjacency(usize, usize),
    #[error("InvalidPair n={n} q={q}")]
    InvalidPair { n: i64, q: i64 },
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("adjacency index {0} out of range")]
    IndexOutOfRange(usize),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionalCurve {
    pub label: String,
    #[serde(rename = "self_int")]
    pub self_intersection: i64,
    #[serde(rename = "genus")]
    pub arithmetic_genus: u32,
}

impl ExceptionalCurve {
    pub fn rational(label: impl Into<String>, self_intersection: i64) -> Self {
        ExceptionalCurve {
            label: label.into(),
            self_intersection,
            arithmetic_genus: 0,
        }
    }

    /// `K·E` by adjunction.
    pub fn canonical_degree(&self) -> i64 {
        2 * self.arithmetic_genus as i64 - 2 - self.self_intersection
    }
}

/// Exceptional curves together with their full intersection matrix
/// (diagonal = self-intersections).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionGraph {
    curves: Vec<ExceptionalCurve>,
    adjacency: Vec<Vec<i64>>,
}

/// A ℚ-cycle supported on the exceptional curves of a graph.
pub type ExceptionalQCycle = QVector;

impl ResolutionGraph {
    /// Builds the graph from curves and the off-diagonal intersections
    /// `(i, j, E_i·E_j)`. Each unordered pair may be listed once or twice;
    /// conflicting duplicates are reported as asymmetric.
    pub fn new(
        curves: Vec<ExceptionalCurve>,
        edges: &[(usize, usize, i64)],
    ) -> Result<Self, GraphError> {
        let n = curves.len();
        let mut adj: Vec<Vec<Option<i64>>> = vec![vec![None; n]; n];
        for (i, c) in curves.iter().enumerate() {
            adj[i][i] = Some(c.self_intersection);
        }
        for &(i, j, v) in edges {
            if i >= n {
                return Err(GraphError::IndexOutOfRange(i));
            }
            if j >= n {
                return Err(GraphError::IndexOutOfRange(j));
            }
            if i == j {
                if v != curves[i].self_intersection {
                    return Err(GraphError::AsymmetricAdjacency(i, j));
                }
                continue;
            }
            for (a, b) in [(i, j), (j, i)] {
                match adj[a][b] {
                    Some(old) if old != v => return Err(GraphError::AsymmetricAdjacency(a, b)),
                    _ => adj[a][b] = Some(v),
                }
            }
        }
        let adjacency = adj
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.unwrap_or(0)).collect())
            .collect();
        Ok(ResolutionGraph { curves, adjacency })
    }

    /// Raw constructor from a full matrix; symmetry is checked by [`validate`].
    pub fn from_matrix(curves: Vec<ExceptionalCurve>, adjacency: Vec<Vec<i64>>) -> Self {
        ResolutionGraph { curves, adjacency }
    }

    pub fn empty() -> Self {
        ResolutionGraph {
            curves: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    /// Chain of rational curves with the given self-intersections.
    pub fn chain(self_intersections: &[i64]) -> Self {
        let curves: Vec<_> = self_intersections
            .iter()
            .enumerate()
            .map(|(i, &s)| ExceptionalCurve::rational(format!("E{}", i + 1), s))
            .collect();
        let edges: Vec<_> = (1..curves.len()).map(|i| (i - 1, i, 1)).collect();
        Self::new(curves, &edges).expect("chain edges are consistent")
    }

    pub fn curves(&self) -> &[ExceptionalCurve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn adjacency(&self) -> &[Vec<i64>] {
        &self.adjacency
    }

    /// Sparse upper-triangular list of nonzero off-diagonal intersections.
    pub fn edges(&self) -> Vec<(usize, usize, i64)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[i][j] != 0)
            .map(|(i, j)| (i, j, self.adjacency[i][j]))
            .collect()
    }

    pub fn gram(&self) -> QMatrix {
        QMatrix::from_i64_rows(&self.adjacency)
    }

    /// Checks symmetry, non-negative off-diagonal entries and negative
    /// definiteness of the intersection matrix.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.len();
        if self.adjacency.len() != n || self.adjacency.iter().any(|r| r.len() != n) {
            return Err(GraphError::DimensionMismatch {
                expected: n,
                found: self.adjacency.len(),
            });
        }
        for i in 0..n {
            if self.adjacency[i][i] != self.curves[i].self_intersection {
                return Err(GraphError::AsymmetricAdjacency(i, i));
            }
            for j in 0..i {
                if self.adjacency[i][j] != self.adjacency[j][i] {
                    return Err(GraphError::AsymmetricAdjacency(i, j));
                }
                if self.adjacency[i][j] < 0 {
                    return Err(GraphError::NegativeAdjacency(i, j));
                }
            }
        }
        if let Some(minor) = self.gram().negative_definite_failure()? {
            return Err(GraphError::NotNegativeDefinite { minor });
        }
        Ok(())
    }

    /// The unique exceptional ℚ-cycle `c` with `c·E_j = degrees[j]`.
    pub fn relative_c1(&self, degrees: &[i64]) -> Result<ExceptionalQCycle, GraphError> {
        self.validate()?;
        if degrees.len() != self.len() {
            return Err(GraphError::DimensionMismatch {
                expected: self.len(),
                found: degrees.len(),
            });
        }
        if self.is_empty() {
            return Ok(QVector::zeros(0));
        }
        Ok(self.gram().solve(&QVector::from_i64(degrees))?)
    }

    /// Discrepancy cycle `a` with `K_X̃ = f*K_X + Σ a_i E_i`, i.e. `a·E_j = K·E_j`.
    pub fn discrepancies(&self) -> Result<ExceptionalQCycle, GraphError> {
        let k: Vec<i64> = self.curves.iter().map(ExceptionalCurve::canonical_degree).collect();
        self.relative_c1(&k)
    }

    /// Pairing of an exceptional cycle with the curve `E_j`.
    pub fn pair_with_curve(&self, cycle: &ExceptionalQCycle, j: usize) -> Rat {
        self.adjacency[j]
            .iter()
            .zip(cycle.iter())
            .map(|(&e, c)| Rat::from(e) * c)
            .sum()
    }
}

/// Hirzebruch–Jung continued fraction `n/q = b₁ − 1/(b₂ − … − 1/b_k)`.
pub fn hj_expand(n: i64, q: i64) -> Result<Vec<i64>, GraphError> {
    if !(0 < q && q < n) || n.gcd(&q) != 1 {
        return Err(GraphError::InvalidPair { n, q });
    }
    let (mut a, mut b) = (n, q);
    let mut out = Vec::new();
    while b > 0 {
        let c = Integer::div_ceil(&a, &b);
        out.push(c);
        (a, b) = (b, c * b - a);
    }
    Ok(out)
}

/// Resolution chain of the cyclic quotient singularity `1/n(1,q)`.
pub fn graph_from_hj(n: i64, q: i64) -> Result<ResolutionGraph, GraphError> {
    let bs = hj_expand(n, q)?;
    let selfs: Vec<i64> = bs.iter().map(|b| -b).collect();
    Ok(ResolutionGraph::chain(&selfs))
}
