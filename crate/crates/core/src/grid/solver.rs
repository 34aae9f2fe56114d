//! Relaxation kernels: SOR for linear problems and projected SOR for
//! obstacle problems, both sweeping the interior in lexicographic order.

use super::{Grid4, REGULAR};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub sweeps: usize,
    /// Largest update in the last sweep.
    pub change: f64,
    /// Max-norm residual `|L v - rhs|` over the free nodes.
    pub residual: f64,
}

/// A discrete problem `L v = rhs` on the free interior nodes, optionally
/// subject to `v <= obstacle`. Arrays are indexed by interior position.
pub(crate) struct Relaxation<'a> {
    pub grid: &'a Grid4,
    pub free: Option<&'a [bool]>,
    pub rhs: Option<&'a [f64]>,
    pub obstacle: Option<&'a [f64]>,
}

pub(crate) const MAX_SWEEPS: usize = 200_000;

impl Relaxation<'_> {
    #[inline]
    fn is_free(&self, k: usize) -> bool {
        self.free.is_none_or(|f| f[k])
    }

    /// One lexicographic sweep; returns the largest change.
    pub fn sweep(&self, v: &mut [f64], omega: f64) -> f64 {
        let g = self.grid;
        let s = g.strides;
        let inv_h2 = 1.0 / (g.h * g.h);
        let mut change: f64 = 0.0;
        for (k, &node) in g.interior.iter().enumerate() {
            if !self.is_free(k) {
                continue;
            }
            let rhs = self.rhs.map_or(0.0, |r| r[k]);
            let target = match g.slot[k] {
                REGULAR => {
                    let sum = v[node + s[0]]
                        + v[node - s[0]]
                        + v[node + s[1]]
                        + v[node - s[1]]
                        + v[node + s[2]]
                        + v[node - s[2]]
                        + v[node + 1]
                        + v[node - 1];
                    (sum - rhs / inv_h2) / 8.0
                }
                j => {
                    let st = &g.stencils[j as usize];
                    let mut acc = 0.0;
                    for a in 0..8 {
                        acc += st.w[a] * v[st.nb[a]];
                    }
                    (rhs - acc) / st.wc
                }
            };
            let old = v[node];
            let mut new = old + omega * (target - old);
            if let Some(psi) = self.obstacle {
                new = new.min(psi[k]);
            }
            v[node] = new;
            change = change.max((new - old).abs());
        }
        change
    }

    pub fn residual(&self, v: &[f64]) -> f64 {
        let g = self.grid;
        let mut r: f64 = 0.0;
        for k in 0..g.interior.len() {
            if self.is_free(k) {
                let rhs = self.rhs.map_or(0.0, |r| r[k]);
                r = r.max((g.laplacian_at(v, k) - rhs).abs());
            }
        }
        r
    }

    /// SOR with the optimal factor for the model problem, iterated until the
    /// residual drops below `tol`.
    pub fn solve_linear(&self, v: &mut [f64], tol: f64) -> Result<SolveStats> {
        debug_assert!(self.obstacle.is_none());
        let omega = optimal_omega(self.grid.n);
        let mut change = f64::INFINITY;
        let mut sweeps = 0;
        loop {
            let residual = self.residual(v);
            if residual <= tol {
                return Ok(SolveStats {
                    sweeps,
                    change: if sweeps == 0 { 0.0 } else { change },
                    residual,
                });
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::NoConvergence {
                    solver: "sor",
                    iterations: sweeps,
                    change,
                });
            }
            for _ in 0..8 {
                change = self.sweep(v, omega);
                sweeps += 1;
            }
        }
    }

    /// Projected relaxation until the per-sweep change is at most `tol` and,
    /// if `lap_tol` is given, `L v - rhs >= -lap_tol` at every free node.
    pub fn solve_obstacle(&self, v: &mut [f64], omega: f64, tol: f64, lap_tol: Option<f64>) -> Result<SolveStats> {
        let mut sweeps = 0;
        loop {
            let change = self.sweep(v, omega);
            sweeps += 1;
            if change <= tol && lap_tol.is_none_or(|t| self.min_defect(v) >= -t) {
                return Ok(SolveStats {
                    sweeps,
                    change,
                    residual: self.complementarity(v),
                });
            }
            if sweeps >= MAX_SWEEPS || !change.is_finite() {
                return Err(Error::NoConvergence {
                    solver: "projected sor",
                    iterations: sweeps,
                    change,
                });
            }
        }
    }

    /// `min (L v - rhs)` over free nodes.
    pub fn min_defect(&self, v: &[f64]) -> f64 {
        let g = self.grid;
        let mut m = f64::INFINITY;
        for k in 0..g.interior.len() {
            if self.is_free(k) {
                let rhs = self.rhs.map_or(0.0, |r| r[k]);
                m = m.min(g.laplacian_at(v, k) - rhs);
            }
        }
        m
    }

    /// `max |min(psi - v, L v / |w_c|)|` over free nodes, in value units.
    pub fn complementarity(&self, v: &[f64]) -> f64 {
        let g = self.grid;
        let Some(psi) = self.obstacle else {
            return self.residual(v);
        };
        let mut r: f64 = 0.0;
        for (k, &node) in g.interior.iter().enumerate() {
            if self.is_free(k) {
                let rhs = self.rhs.map_or(0.0, |r| r[k]);
                let lap = (g.laplacian_at(v, k) - rhs) / g.center_weight(k);
                r = r.max((psi[k] - v[node]).min(lap).abs());
            }
        }
        r
    }
}

pub(crate) fn optimal_omega(n: usize) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid4;

    #[test]
    fn harmonic_quadratic_is_recovered() {
        let g = Grid4::ball(9, 1.0).unwrap();
        let exact = g.sample(|x| x[0] * x[1] + x[2] * x[2] - x[3] * x[3] + 0.2);
        let mut v = exact.clone();
        for &i in g.interior() {
            v.values_mut()[i] = 0.0;
        }
        let relax = Relaxation {
            grid: &g,
            free: None,
            rhs: None,
            obstacle: None,
        };
        let stats = relax.solve_linear(v.values_mut(), 1e-11).unwrap();
        assert!(stats.residual <= 1e-11);
        assert!(g.max_interior_diff(&v, &exact) < 1e-10);
    }

    #[test]
    fn obstacle_solution_stays_below() {
        let g = Grid4::unit_box(9).unwrap();
        let psi_fn = g.sample(|x| -0.5 + 0.1 * x[0]);
        let psi: Vec<f64> = g.interior().iter().map(|&i| psi_fn.get(i)).collect();
        let mut v = g.zeros();
        for &i in g.interior() {
            v.values_mut()[i] = psi_fn.get(i);
        }
        let relax = Relaxation {
            grid: &g,
            free: None,
            rhs: None,
            obstacle: Some(&psi),
        };
        let stats = relax.solve_obstacle(v.values_mut(), 1.5, 1e-12, None).unwrap();
        assert!(stats.residual < 1e-9);
        for (k, &i) in g.interior().iter().enumerate() {
            assert!(v.get(i) <= psi[k]);
            assert!(g.laplacian_at(v.values(), k) > -1e-8);
        }
    }
}
