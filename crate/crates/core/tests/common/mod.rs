#![allow(dead_code)]

use std::f64::consts::PI;

use ks_core::{GridField, PeriodicSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_values(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn field(u: Vec<f64>) -> GridField {
    GridField::new(PeriodicSequence::new(u).unwrap(), 2.0 * PI)
}

fn at(u: &[f64], j: isize) -> f64 {
    let n = u.len() as isize;
    u[j.rem_euclid(n) as usize]
}

/// The basic five-point holistic scheme written out point by point, with
/// no use of the operator tables.
pub fn five_point_scheme(u: &[f64], h: f64, alpha: f64) -> Vec<f64> {
    (0..u.len() as isize)
        .map(|j| {
            let (m2, m1, c, p1, p2) = (at(u, j - 2), at(u, j - 1), at(u, j), at(u, j + 1), at(u, j + 2));
            let hyper = (4.0 * p2 - 16.0 * p1 + 24.0 * c - 16.0 * m1 + 4.0 * m2) / h.powi(4);
            let growth = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
            -hyper - alpha * growth - alpha * mixed_advection(u, j, h)
        })
        .collect()
}

/// `u u_x` at `j` as the 1/2 : 1 : -1/2 blend of three two-point forms.
pub fn mixed_advection(u: &[f64], j: isize, h: f64) -> f64 {
    let (m2, m1, c, p1, p2) = (at(u, j - 2), at(u, j - 1), at(u, j), at(u, j + 1), at(u, j + 2));
    let a = c * (p1 - m1) / (2.0 * h);
    let b = (p1 * p1 - m1 * m1) / (4.0 * h);
    let d = (p2 * p1 - m2 * m1) / (6.0 * h);
    0.5 * a + b - 0.5 * d
}

/// Same blend as printed in the scheme itself.
pub fn printed_advection(u: &[f64], j: isize, h: f64) -> f64 {
    let (m2, m1, c, p1, p2) = (at(u, j - 2), at(u, j - 1), at(u, j), at(u, j + 1), at(u, j + 2));
    c * (p1 - m1) / (4.0 * h) + (p1 * p1 - m1 * m1) / (4.0 * h) - (p2 * p1 - m2 * m1) / (12.0 * h)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

pub fn grid_models() -> Vec<ks_core::ModelKind> {
    ["hol:3", "hol:4", "hol:5", "cd:2", "cd:4", "cd:6"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}
