//! Oracles and corpus generators shared by the integration tests.

#![allow(dead_code)]

use std::io::Write;

use num_rational::Rational64;
use qpot::field::Polynomial;
use qpot::grid::{Grid4, GridFunction};
use qpot::hyperhermitian::HyperHermitianMatrix;
use qpot::quat::Quaternion;
use rand::Rng;

/// One result line on stderr, bypassing the test harness capture.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance {id:>2}] {verdict} {name}: {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

pub fn r2(x: &[f64; 4]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Moore's determinant by its permutation expansion. Each permutation is
/// written as a product of cycles, every cycle starting at its smallest
/// index and the cycles ordered by decreasing leading index; the entries
/// are multiplied in that order and the sign is `(-1)^(n - #cycles)`.
pub fn moore_det_oracle(a: &HyperHermitianMatrix) -> f64 {
    let n = a.size();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    loop {
        total += moore_term(a, &perm);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total
}

fn moore_term(a: &HyperHermitianMatrix, perm: &[usize]) -> f64 {
    let n = perm.len();
    let mut seen = vec![false; n];
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut k = perm[start];
        while k != start {
            seen[k] = true;
            cycle.push(k);
            k = perm[k];
        }
        cycles.push(cycle);
    }
    // Smallest index first already holds since `start` is the minimum of
    // its cycle; order by decreasing leading index.
    cycles.sort_by(|x, y| y[0].cmp(&x[0]));
    let mut prod = Quaternion::ONE;
    for cycle in &cycles {
        for w in 0..cycle.len() {
            let (i, j) = (cycle[w], cycle[(w + 1) % cycle.len()]);
            prod = prod * a.get(i, j);
        }
    }
    let sign = if (n - cycles.len()) % 2 == 0 { 1.0 } else { -1.0 };
    sign * prod.w
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

pub fn random_quaternion<R: Rng>(rng: &mut R) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

pub fn random_hyperhermitian<R: Rng>(rng: &mut R, n: usize) -> HyperHermitianMatrix {
    let mut e = vec![Quaternion::ZERO; n * n];
    for a in 0..n {
        e[a * n + a] = Quaternion::real(rng.gen_range(-2.0..2.0));
        for b in a + 1..n {
            let q = random_quaternion(rng);
            e[a * n + b] = q;
            e[b * n + a] = q.conj();
        }
    }
    HyperHermitianMatrix::new(n, e).unwrap()
}

/// Random polynomial in `4n` variables with small rational coefficients and
/// total degree at most `max_degree`.
pub fn random_polynomial<R: Rng>(rng: &mut R, n: usize, terms: usize, max_degree: u32) -> Polynomial {
    let vars = 4 * n;
    let list = (0..terms).map(|_| {
        let mut e = vec![0u32; vars];
        let degree = rng.gen_range(0..=max_degree);
        for _ in 0..degree {
            e[rng.gen_range(0..vars)] += 1;
        }
        let c = Rational64::new(rng.gen_range(-12..=12), rng.gen_range(1..=4));
        (c, e)
    });
    Polynomial::from_terms(n, list).unwrap()
}

/// `min(0, |x - c|^2 - rho^2)`.
pub fn pit(grid: &Grid4, c: [f64; 4], rho: f64) -> GridFunction {
    grid.sample(|x| {
        let d: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
        (d - rho * rho).min(0.0)
    })
}
