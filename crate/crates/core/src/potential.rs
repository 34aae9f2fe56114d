//! Potential theory on the `n = 1` grid, where the Monge-Ampere measure of
//! `u` is `Delta u / 4`.

use serde::Serialize;

use crate::grid::solver::Relaxation;
use crate::grid::{Grid4, GridFunction, MeasureGrid, SolveStats};
use crate::{Error, Result};

/// Over-relaxation factor of the projected sweeps.
pub const OBSTACLE_OMEGA: f64 = 1.5;
/// Per-sweep change at which obstacle iterations stop.
pub const OBSTACLE_TOL: f64 = 1e-10;
/// Floor on `Delta_h` of envelopes and projections.
pub const OBSTACLE_LAP_TOL: f64 = 1e-10;
/// Relative residual target of the linear solves.
pub const LINEAR_TOL: f64 = 1e-11;

/// `Delta_h u / 4` at every node (zero off the interior), without clipping.
pub fn ma_density_signed(grid: &Grid4, u: &GridFunction) -> Vec<f64> {
    let mut d = grid.laplacian(u);
    d.iter_mut().for_each(|v| *v *= 0.25);
    d
}

/// Densities above `-tol` are accepted as roundoff for subharmonic input.
pub fn subharmonic_tolerance(grid: &Grid4, u: &GridFunction) -> f64 {
    1e-6 * u.max_abs() / (grid.h() * grid.h())
}

/// Monge-Ampere measure of a subharmonic grid function.
pub fn ma_measure(grid: &Grid4, u: &GridFunction) -> Result<MeasureGrid> {
    grid.check(u)?;
    let tol = subharmonic_tolerance(grid, u);
    let mut d = ma_density_signed(grid, u);
    for (node, v) in d.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -tol {
                return Err(Error::NotSubharmonic {
                    node,
                    density: *v,
                    tol,
                });
            }
            *v = 0.0;
        }
    }
    MeasureGrid::new(grid, d)
}

fn interior_values(grid: &Grid4, values: &[f64]) -> Vec<f64> {
    grid.interior().iter().map(|&i| values[i]).collect()
}

/// Solve `Delta_h u = 4 f` with the boundary data of `g`.
pub fn solve_dirichlet(grid: &Grid4, f: &MeasureGrid, g: &GridFunction) -> Result<GridFunction> {
    solve_dirichlet_from(grid, f, g, g).map(|(u, _)| u)
}

/// As [`solve_dirichlet`], starting the iteration from the interior values
/// of `initial`.
pub fn solve_dirichlet_from(
    grid: &Grid4,
    f: &MeasureGrid,
    g: &GridFunction,
    initial: &GridFunction,
) -> Result<(GridFunction, SolveStats)> {
    grid.check(g)?;
    grid.check(initial)?;
    if f.density().len() != grid.nnodes() {
        return Err(Error::Dimension {
            expected: grid.nnodes(),
            got: f.density().len(),
        });
    }
    let mut u = g.clone();
    for &i in grid.interior() {
        u.values_mut()[i] = initial.get(i);
    }
    let rhs: Vec<f64> = grid
        .interior()
        .iter()
        .map(|&i| 4.0 * f.density()[i])
        .collect();
    let tol = LINEAR_TOL * (1.0 + f.max_density());
    let relax = Relaxation {
        grid,
        free: None,
        rhs: Some(&rhs),
        obstacle: None,
    };
    let stats = relax.solve_linear(u.values_mut(), tol)?;
    Ok((u, stats))
}

/// Largest `v <= u` with `Delta_h v >= 0` and the boundary data of `u`.
pub fn project_subharmonic(grid: &Grid4, u: &GridFunction) -> Result<GridFunction> {
    grid.check(u)?;
    let psi = interior_values(grid, u.values());
    let mut v = u.clone();
    let relax = Relaxation {
        grid,
        free: None,
        rhs: None,
        obstacle: Some(&psi),
    };
    relax.solve_obstacle(v.values_mut(), OBSTACLE_OMEGA, OBSTACLE_TOL, Some(OBSTACLE_LAP_TOL))?;
    Ok(v)
}

/// Interior positions of a node mask, rejecting masks that reach the
/// boundary or whose stencils do.
pub(crate) fn interior_mask(grid: &Grid4, mask: &[bool]) -> Result<Vec<bool>> {
    if mask.len() != grid.nnodes() {
        return Err(Error::Dimension {
            expected: grid.nnodes(),
            got: mask.len(),
        });
    }
    if let Some(node) = (0..grid.nnodes()).find(|&i| mask[i] && !grid.is_interior(i)) {
        return Err(Error::MaskTouchesBoundary { node });
    }
    let free: Vec<bool> = grid.interior().iter().map(|&i| mask[i]).collect();
    if let Some(k) = (0..free.len()).find(|&k| free[k] && grid.touches_boundary(k)) {
        return Err(Error::MaskTouchesBoundary {
            node: grid.interior()[k],
        });
    }
    Ok(free)
}

/// `u^j`: `u` outside `mask`, the harmonic extension of `u` from the edge of
/// the mask inside it (clipped from below by `u`).
pub fn maximal_extension(grid: &Grid4, u: &GridFunction, mask: &[bool]) -> Result<GridFunction> {
    grid.check(u)?;
    let free = interior_mask(grid, mask)?;
    let mut w = u.clone();
    let relax = Relaxation {
        grid,
        free: Some(&free),
        rhs: None,
        obstacle: None,
    };
    let tol = 1e-10 * (1.0 + u.max_abs()) / (grid.h() * grid.h());
    relax.solve_linear(w.values_mut(), tol)?;
    Ok(w.max(u))
}

/// `1_{u > -j} MA(max(u, -j))`, where `{u > -j}` is read as the nodes whose
/// whole stencil lies in the set. Nodes straddling the level set would
/// otherwise pick up the kink of `max(u, -j)`.
pub fn truncate_measure(grid: &Grid4, u: &GridFunction, j: f64) -> Result<MeasureGrid> {
    grid.check(u)?;
    let uj = u.map(|v| v.max(-j));
    let m = ma_measure(grid, &uj)?;
    let mut keep = vec![false; grid.nnodes()];
    for (k, &node) in grid.interior().iter().enumerate() {
        keep[node] = stencil_pure(grid, k, |s| u.get(s) > -j);
    }
    Ok(m.restricted(&keep))
}

/// Outcome of a comparison-principle check over the node set `{u < v}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Mass of `MA(v)` on `{u < v}`.
    pub lhs: f64,
    /// Mass of `MA(u)` on `{u < v}`.
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub nodes: usize,
    pub pass: bool,
}

/// Check `int_{u<v} MA(v) <= int_{u<v} MA(u)` for subharmonic `u`, `v` with
/// `u >= v` on the boundary. The tolerance is `c * h`, with
/// `c = 10 * max(total masses)` unless given.
pub fn verify_comparison(
    grid: &Grid4,
    u: &GridFunction,
    v: &GridFunction,
    c: Option<f64>,
) -> Result<ComparisonReport> {
    grid.check(u)?;
    grid.check(v)?;
    for slot in grid.boundary_slots() {
        if u.get(slot) < v.get(slot) - 1e-12 {
            return Err(Error::Boundary {
                at: slot,
                what: format!("u = {} < v = {}", u.get(slot), v.get(slot)),
            });
        }
    }
    let mu = ma_measure(grid, u)?;
    let mv = ma_measure(grid, v)?;
    let set: Vec<bool> = (0..grid.nnodes())
        .map(|i| grid.is_interior(i) && u.get(i) < v.get(i))
        .collect();
    let lhs = mv.mass_on(&set);
    let rhs = mu.mass_on(&set);
    let c = c.unwrap_or_else(|| 10.0 * mu.total_mass().max(mv.total_mass()));
    let tol = c * grid.h();
    Ok(ComparisonReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        tol,
        nodes: set.iter().filter(|&&s| s).count(),
        pass: lhs <= rhs + tol,
    })
}

/// True if `pred` holds at the center and at every stencil entry of the
/// interior position `k`.
pub fn stencil_pure(grid: &Grid4, k: usize, pred: impl Fn(usize) -> bool) -> bool {
    pred(grid.interior()[k]) && grid.stencil_slots(k).iter().all(|&s| pred(s))
}

/// `u <= 0` on the interior (up to `tol`) and `|u| <= tol` on the boundary.
pub fn is_e0(grid: &Grid4, u: &GridFunction, tol: f64) -> bool {
    grid.interior().iter().all(|&i| u.get(i) <= tol)
        && grid.boundary_slots().all(|s| u.get(s).abs() <= tol)
}
