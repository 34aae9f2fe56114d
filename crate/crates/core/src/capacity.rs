//! Relative capacity of node sets and balls, and the sublevel capacity
//! sandwich.
//!
//! `Cap(E)` is the total Monge-Ampere mass of the relative extremal function
//! `u*_E`, the largest subharmonic `v <= 0` with `v <= -1` on `E`. For a node
//! mask this is an obstacle problem on the grid. For a ball or a sublevel set
//! the boundary of `E` is resolved inside the cells: `E` is cut out of the
//! grid, `u*_E` is harmonic in the rest with data `-1` on `dE` and `0` on the
//! outer boundary, and the capacity is the mass of `u*_E` back on the full
//! grid (which by summation by parts is the flux through the outer boundary).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::grid::solver::Relaxation;
use crate::grid::{CutTag, Exclusion, Grid4, GridFunction, NodeKind, SolveStats};
use crate::potential::{ma_density_signed, ma_measure, OBSTACLE_OMEGA, OBSTACLE_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// An explicit set of interior nodes.
    Mask(Vec<bool>),
    /// Closed ball.
    Ball { center: [f64; 4], radius: f64 },
    /// `{u < level}` for the node values of `u`.
    Sublevel { values: Vec<f64>, level: f64 },
}

impl Region {
    /// Nodes lying in the region.
    pub fn mask(&self, grid: &Grid4) -> Vec<bool> {
        match self {
            Region::Mask(m) => m.clone(),
            Region::Ball { center, radius } => grid.node_mask(|x| {
                x.iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    <= radius * radius
            }),
            Region::Sublevel { values, level } => values.iter().map(|&v| v < *level).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityOptions {
    /// Number of sampled test functions for the lower-bound check.
    pub validators: usize,
    pub seed: u64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            validators: 20,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapacityReport {
    /// Nodes of `E`.
    pub mask: Vec<bool>,
    /// `u*_E` on the full grid.
    pub extremal: GridFunction,
    pub capacity: f64,
    /// Largest `int_E MA(w)` over the sampled test functions `w`.
    pub lower_bound: f64,
    pub validated: bool,
    pub solve: SolveStats,
}

pub fn capacity(grid: &Grid4, region: &Region) -> Result<CapacityReport> {
    capacity_with(grid, region, &CapacityOptions::default())
}

pub fn capacity_with(grid: &Grid4, region: &Region, opts: &CapacityOptions) -> Result<CapacityReport> {
    let mask = region.mask(grid);
    if mask.len() != grid.nnodes() {
        return Err(Error::Dimension {
            expected: grid.nnodes(),
            got: mask.len(),
        });
    }
    let (extremal, capacity, solve) = match region {
        Region::Mask(_) => extremal_on_nodes(grid, &mask)?,
        Region::Ball { center, radius } => extremal_cut(
            grid,
            &Exclusion::Sphere {
                center: *center,
                radius: *radius,
            },
        )?,
        Region::Sublevel { values, level } => extremal_cut(
            grid,
            &Exclusion::Sublevel {
                phi: values.iter().map(|v| v - level).collect(),
            },
        )?,
    };
    let lower_bound = sampled_lower_bound(grid, &mask, opts);
    let validated = capacity >= lower_bound - 1e-9 * (1.0 + lower_bound);
    Ok(CapacityReport {
        mask,
        extremal,
        capacity,
        lower_bound,
        validated,
        solve,
    })
}

const NO_SOLVE: SolveStats = SolveStats {
    sweeps: 0,
    change: 0.0,
    residual: 0.0,
};

fn extremal_on_nodes(grid: &Grid4, mask: &[bool]) -> Result<(GridFunction, f64, SolveStats)> {
    if let Some(node) = (0..grid.nnodes()).find(|&i| mask[i] && !grid.is_interior(i)) {
        return Err(Error::MaskTouchesBoundary { node });
    }
    let mut v = grid.zeros();
    if !mask.iter().any(|&m| m) {
        return Ok((v, 0.0, NO_SOLVE));
    }
    let mut free = Vec::with_capacity(grid.interior().len());
    let mut psi = Vec::with_capacity(grid.interior().len());
    for &i in grid.interior() {
        free.push(!mask[i]);
        psi.push(if mask[i] { -1.0 } else { 0.0 });
        if mask[i] {
            v.values_mut()[i] = -1.0;
        }
    }
    // The linear problem already has the obstacle solution; the projected
    // sweeps confirm it.
    let linear = Relaxation {
        grid,
        free: Some(&free),
        rhs: None,
        obstacle: None,
    };
    let tol = 1e-10 / (grid.h() * grid.h());
    let first = linear.solve_linear(v.values_mut(), tol)?;
    let polish = Relaxation {
        grid,
        free: None,
        rhs: None,
        obstacle: Some(&psi),
    }
    .solve_obstacle(v.values_mut(), OBSTACLE_OMEGA, OBSTACLE_TOL, None)?;
    let cap = ma_measure(grid, &v)?.total_mass();
    let stats = SolveStats {
        sweeps: first.sweeps + polish.sweeps,
        ..polish
    };
    Ok((v, cap, stats))
}

fn extremal_cut(grid: &Grid4, excl: &Exclusion) -> Result<(GridFunction, f64, SolveStats)> {
    let holed = grid.with_exclusion(excl)?;
    let removed: Vec<bool> = (0..grid.nnodes())
        .map(|i| holed.kind(i) != NodeKind::Interior && grid.is_interior(i))
        .collect();
    let any_cut = holed.cuts().iter().any(|c| c.tag == CutTag::Excluded);
    if !any_cut && !removed.iter().any(|&r| r) {
        return Ok((grid.zeros(), 0.0, NO_SOLVE));
    }
    // E must stay away from the outer boundary.
    for i in 0..grid.nnodes() {
        if grid.kind(i) != NodeKind::Interior && excluded_node(excl, grid, i) {
            return Err(Error::MaskTouchesBoundary { node: i });
        }
    }
    let nodes: Vec<f64> = removed.iter().map(|&r| if r { -1.0 } else { 0.0 }).collect();
    let mut v = holed.transfer(&nodes, |c| match c.tag {
        CutTag::Outer => 0.0,
        CutTag::Excluded => -1.0,
    })?;
    let relax = Relaxation {
        grid: &holed,
        free: None,
        rhs: None,
        obstacle: None,
    };
    let tol = 1e-10 / (grid.h() * grid.h());
    let stats = relax.solve_linear(v.values_mut(), tol)?;
    let extremal = grid.transfer(&v.values()[..grid.nnodes()], |_| 0.0)?;
    // Signed total: next to E the full-grid stencil sees `-1` one cell away
    // instead of at the cut, and only the sum is meaningful.
    let density = ma_density_signed(grid, &extremal);
    let cap = grid.integrate(&density);
    Ok((extremal, cap, stats))
}

fn excluded_node(excl: &Exclusion, grid: &Grid4, i: usize) -> bool {
    match excl {
        Exclusion::Sphere { center, radius } => {
            let x = grid.coords(i);
            let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= radius * radius
        }
        Exclusion::Sublevel { phi } => phi[i] < 0.0,
    }
}

/// `max_w int_E MA(w)` over sampled `w = max(-1, a(|x-c|^2 - rho^2))`, which
/// are subharmonic with `-1 <= w <= 0` on the domain.
fn sampled_lower_bound(grid: &Grid4, mask: &[bool], opts: &CapacityOptions) -> f64 {
    if !mask.iter().any(|&m| m) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let reach = grid.half_width() * 2.0;
    let mut best: f64 = 0.0;
    for _ in 0..opts.validators {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.5..0.5) * grid.half_width());
        let cn = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rho = reach + cn;
        let a = rng.gen_range(0.5..4.0) / (rho * rho);
        let w = grid.sample(|x| {
            let d2: f64 = x.iter().zip(&c).map(|(p, q)| (p - q) * (p - q)).sum();
            (a * (d2 - rho * rho)).clamp(-1.0, 0.0)
        });
        let density = ma_density_signed(grid, &w);
        let on_e: f64 = (0..grid.nnodes())
            .filter(|&i| mask[i])
            .map(|i| density[i])
            .sum();
        best = best.max(on_e * grid.cell_volume());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub s: f64,
    pub t: f64,
    /// `t * Cap({u < -s-t})`.
    pub left: f64,
    /// `int_{u < -s} MA(u)`.
    pub middle: f64,
    /// `s * Cap({u < -s})`.
    pub right: f64,
    pub tol: f64,
    pub vacuous: bool,
    pub pass: bool,
}

/// `t Cap({u<-s-t}) <= int_{u<-s} MA(u) <= s Cap({u<-s})` with additive
/// slack `c * h * total mass` (`c = 1` unless given).
pub fn capacity_sandwich_check(
    grid: &Grid4,
    u: &GridFunction,
    s: f64,
    t: f64,
    c: Option<f64>,
) -> Result<SandwichReport> {
    grid.check(u)?;
    if !(s > 0.0 && t > 0.0) {
        return Err(Error::InvalidArgument(format!("need s, t > 0, got {s}, {t}")));
    }
    if let Some(slot) = grid.boundary_slots().find(|&b| u.get(b).abs() > 1e-12) {
        return Err(Error::Boundary {
            at: slot,
            what: format!("u = {} on the boundary", u.get(slot)),
        });
    }
    let m = ma_measure(grid, u)?;
    let nodes = &u.values()[..grid.nnodes()];
    let inner = Region::Sublevel {
        values: nodes.to_vec(),
        level: -s - t,
    };
    let outer = Region::Sublevel {
        values: nodes.to_vec(),
        level: -s,
    };
    let opts = CapacityOptions {
        validators: 0,
        ..Default::default()
    };
    let vacuous = !nodes.iter().any(|&v| v < -s - t);
    let left = if vacuous {
        0.0
    } else {
        t * capacity_with(grid, &inner, &opts)?.capacity
    };
    let middle = m.mass_on(&outer.mask(grid));
    let right = if nodes.iter().any(|&v| v < -s) {
        s * capacity_with(grid, &outer, &opts)?.capacity
    } else {
        0.0
    };
    let tol = c.unwrap_or(1.0) * grid.h() * m.total_mass();
    Ok(SandwichReport {
        s,
        t,
        left,
        middle,
        right,
        tol,
        vacuous,
        pass: left <= middle + tol && middle <= right + tol,
    })
}
