//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use nsi_core::toric::{Fan, TorusDivisor};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

pub fn p2() -> Fan {
    Fan::planar(vec![[1, 0], [0, 1], [-1, -1]]).unwrap()
}

/// ℙ¹ × ℙ¹.
pub fn quadric() -> Fan {
    Fan::planar(vec![[1, 0], [0, 1], [-1, 0], [0, -1]]).unwrap()
}

/// ℙ(1,1,2), the quadric cone; its vertex is an A₁ point.
pub fn p112() -> Fan {
    Fan::planar(vec![[1, 0], [0, 1], [-1, -2]]).unwrap()
}

/// ℙ(1,1,3): one 1/3(1,1) point.
pub fn p113() -> Fan {
    Fan::planar(vec![[1, 0], [0, 1], [-1, -3]]).unwrap()
}

/// A 1/4(1,1) point and an A₁ point.
pub fn two_singular() -> Fan {
    Fan::planar(vec![[1, 0], [0, 1], [-1, -2], [1, -2]]).unwrap()
}

pub fn curated() -> Vec<(&'static str, Fan)> {
    vec![
        ("P2", p2()),
        ("P1xP1", quadric()),
        ("P(1,1,2)", p112()),
        ("P(1,1,3)", p113()),
        ("two-singular", two_singular()),
    ]
}

fn all_triples(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push(vec![a, b, c]);
            }
        }
    }
    out
}

pub fn p3() -> Fan {
    let rays = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -1]];
    Fan::new(3, rays, all_triples(4)).unwrap()
}

/// ℙ(1,1,1,2); the cone missing `e₃` carries a 1/2(1,1,1) point.
pub fn p1112() -> Fan {
    let rays = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![-1, -1, -2]];
    Fan::new(3, rays, all_triples(4)).unwrap()
}

/// ℙ(1,1,2) × ℙ¹; rays 0..3 come from the surface, 3 and 4 are `±e₃`.
pub fn p112_times_p1() -> Fan {
    let rays = vec![vec![1, 0, 0], vec![0, 1, 0], vec![-1, -2, 0], vec![0, 0, 1], vec![0, 0, -1]];
    let mut cones = Vec::new();
    for i in 0..3 {
        for pole in [3, 4] {
            cones.push(vec![i, (i + 1) % 3, pole]);
        }
    }
    Fan::new(3, rays, cones).unwrap()
}

pub fn td(v: &[i64]) -> TorusDivisor {
    TorusDivisor(v.to_vec())
}

/// Every divisor with `|d_ρ| ≤ bound` on `n` rays.
pub fn divisor_box(n: usize, bound: i64) -> Vec<TorusDivisor> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
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

/// Reproducible draws from a strategy.
pub fn draw<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    (0..n)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy yields values").current())
        .collect()
}

pub fn random_divisor(n: usize, bound: i64) -> impl Strategy<Value = TorusDivisor> {
    proptest::collection::vec(-bound..=bound, n).prop_map(TorusDivisor)
}
