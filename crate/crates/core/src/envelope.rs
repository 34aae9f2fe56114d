//! Subharmonic envelopes `P(f)` on the `n = 1` grid.

use serde::Serialize;

use crate::grid::solver::Relaxation;
use crate::grid::{Grid4, GridFunction};
use crate::potential::{ma_density_signed, OBSTACLE_LAP_TOL, OBSTACLE_OMEGA, OBSTACLE_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub envelope: GridFunction,
    /// Nodes with `P(f) >= f - eps_c`.
    pub contact_mask: Vec<bool>,
    pub contact_eps: f64,
    /// Mass of `MA(P(f))` off the contact set.
    pub off_contact_mass: f64,
    pub total_mass: f64,
    pub iterations: usize,
    /// Complementarity residual `max |min(f - P, Delta_h P / |w_c|)|`.
    pub residual: f64,
}

fn check_inputs(grid: &Grid4, f: &GridFunction, boundary: &GridFunction) -> Result<()> {
    grid.check(f)?;
    grid.check(boundary)?;
    if let Some(&i) = grid.interior().iter().find(|&&i| f.get(i) > 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "obstacle must be <= 0, got {} at node {i}",
            f.get(i)
        )));
    }
    for s in grid.boundary_slots() {
        if boundary.get(s) > f.get(s) + 1e-12 {
            return Err(Error::Boundary {
                at: s,
                what: format!("boundary {} above obstacle {}", boundary.get(s), f.get(s)),
            });
        }
    }
    Ok(())
}

/// Boundary data of `boundary`, interior values of `interior`.
fn splice(grid: &Grid4, boundary: &GridFunction, interior: &GridFunction) -> GridFunction {
    let mut v = boundary.clone();
    for &i in grid.interior() {
        v.values_mut()[i] = interior.get(i);
    }
    v
}

/// Largest subharmonic grid function below `f` with the boundary data of
/// `boundary`, by projected relaxation.
pub fn envelope(grid: &Grid4, f: &GridFunction, boundary: &GridFunction) -> Result<EnvelopeResult> {
    envelope_from(grid, f, boundary, f)
}

/// As [`envelope`], starting from `initial` (clipped to `f`). Starting above
/// the solution gives a monotone iteration.
pub fn envelope_from(
    grid: &Grid4,
    f: &GridFunction,
    boundary: &GridFunction,
    initial: &GridFunction,
) -> Result<EnvelopeResult> {
    check_inputs(grid, f, boundary)?;
    grid.check(initial)?;
    let psi: Vec<f64> = grid.interior().iter().map(|&i| f.get(i)).collect();
    let mut v = splice(grid, boundary, &initial.min(f));
    let relax = Relaxation {
        grid,
        free: None,
        rhs: None,
        obstacle: Some(&psi),
    };
    let stats = relax.solve_obstacle(v.values_mut(), OBSTACLE_OMEGA, OBSTACLE_TOL, Some(OBSTACLE_LAP_TOL))?;
    Ok(summarize(grid, f, v, stats.sweeps, stats.residual))
}

fn summarize(
    grid: &Grid4,
    f: &GridFunction,
    envelope: GridFunction,
    iterations: usize,
    residual: f64,
) -> EnvelopeResult {
    let eps = 10.0 * grid.h() * grid.h() * f.max_abs();
    let density = ma_density_signed(grid, &envelope);
    let mut contact_mask = vec![false; grid.nnodes()];
    let mut off = 0.0;
    let mut total = 0.0;
    for &i in grid.interior() {
        let d = density[i].max(0.0);
        total += d;
        if envelope.get(i) >= f.get(i) - eps {
            contact_mask[i] = true;
        } else {
            off += density[i];
        }
    }
    let vol = grid.cell_volume();
    EnvelopeResult {
        envelope,
        contact_mask,
        contact_eps: eps,
        off_contact_mass: off * vol,
        total_mass: total * vol,
        iterations,
        residual,
    }
}

/// The envelope by a primal-dual active-set iteration: alternately solve the
/// harmonic problem off a guessed contact set and update the guess from the
/// sign of `Delta_h v` and of `f - v`. Independent of [`envelope`].
pub fn envelope_active_set(
    grid: &Grid4,
    f: &GridFunction,
    boundary: &GridFunction,
) -> Result<EnvelopeResult> {
    check_inputs(grid, f, boundary)?;
    let nint = grid.interior().len();
    let psi: Vec<f64> = grid.interior().iter().map(|&i| f.get(i)).collect();
    let mut v = splice(grid, boundary, f);
    // Start with everything in contact.
    let mut active = vec![true; nint];
    let tol = 1e-11 * (1.0 + f.max_abs()) / (grid.h() * grid.h());
    for iteration in 1..=200 {
        for (k, &i) in grid.interior().iter().enumerate() {
            if active[k] {
                v.values_mut()[i] = psi[k];
            }
        }
        let free: Vec<bool> = active.iter().map(|a| !a).collect();
        Relaxation {
            grid,
            free: Some(&free),
            rhs: None,
            obstacle: None,
        }
        .solve_linear(v.values_mut(), tol)?;
        let mut changed = false;
        for (k, &i) in grid.interior().iter().enumerate() {
            let lambda = grid.laplacian_at(v.values(), k) / grid.center_weight(k);
            let now = if active[k] {
                lambda > 0.0
            } else {
                v.get(i) > psi[k]
            };
            changed |= now != active[k];
            active[k] = now;
        }
        if !changed {
            let residual = Relaxation {
                grid,
                free: None,
                rhs: None,
                obstacle: Some(&psi),
            }
            .complementarity(v.values());
            return Ok(summarize(grid, f, v, iteration, residual));
        }
    }
    Err(Error::NoConvergence {
        solver: "active set",
        iterations: 200,
        change: f64::NAN,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassConcentrationReport {
    pub total_mass: f64,
    pub off_contact_mass: f64,
    pub ratio: f64,
    pub tol: f64,
    pub iterations: usize,
    pub residual: f64,
    pub pass: bool,
}

/// `off_contact_mass / total_mass <= 10 h`.
pub fn mass_concentration_check(grid: &Grid4, result: &EnvelopeResult) -> MassConcentrationReport {
    let ratio = if result.total_mass > 0.0 {
        result.off_contact_mass / result.total_mass
    } else {
        0.0
    };
    let tol = 10.0 * grid.h();
    MassConcentrationReport {
        total_mass: result.total_mass,
        off_contact_mass: result.off_contact_mass,
        ratio,
        tol,
        iterations: result.iterations,
        residual: result.residual,
        pass: ratio.abs() <= tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneLimitReport {
    pub steps: usize,
    /// Largest nodewise increase `P(f_{j+1}) - P(f_j)`.
    pub max_increase: f64,
    /// `|P(f_last) - P(f)|_inf`.
    pub final_gap: f64,
    /// Gap after each step.
    pub gaps: Vec<f64>,
    pub pass: bool,
}

/// Envelopes of a decreasing sequence `f_j` and of its limit `f`.
pub fn envelope_monotone_limit(
    grid: &Grid4,
    f_seq: &[GridFunction],
    f_limit: &GridFunction,
    boundary: &GridFunction,
) -> Result<MonotoneLimitReport> {
    if f_seq.is_empty() {
        return Err(Error::InvalidArgument("empty sequence".into()));
    }
    for (step, pair) in f_seq.windows(2).enumerate() {
        grid.check(&pair[1])?;
        if let Some(node) = (0..pair[0].len()).find(|&s| pair[1].get(s) > pair[0].get(s) + 1e-12) {
            return Err(Error::NotMonotone { step, node });
        }
    }
    if let Some(node) = (0..f_limit.len()).find(|&s| f_limit.get(s) > f_seq[f_seq.len() - 1].get(s) + 1e-12) {
        return Err(Error::NotMonotone {
            step: f_seq.len(),
            node,
        });
    }
    let limit = envelope(grid, f_limit, boundary)?.envelope;
    let mut max_increase: f64 = 0.0;
    let mut gaps = Vec::with_capacity(f_seq.len());
    let mut prev: Option<GridFunction> = None;
    for f in f_seq {
        let p = match &prev {
            None => envelope(grid, f, boundary)?,
            Some(q) => envelope_from(grid, f, boundary, q)?,
        }
        .envelope;
        if let Some(q) = &prev {
            for &i in grid.interior() {
                max_increase = max_increase.max(p.get(i) - q.get(i));
            }
        }
        gaps.push(grid.max_interior_diff(&p, &limit));
        prev = Some(p);
    }
    let final_gap = *gaps.last().unwrap();
    Ok(MonotoneLimitReport {
        steps: f_seq.len(),
        max_increase,
        final_gap,
        pass: max_increase <= 1e-9 && final_gap <= 1e-8,
        gaps,
    })
}
