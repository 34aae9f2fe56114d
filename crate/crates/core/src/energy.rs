//! Weighted energies, sublevel capacity profiles, the sampled estimator of
//! the constant `A` in `int -chi(psi) dmu <= A max(1, E_chi(psi))`, and the
//! truncation solver for `MA(phi) = mu`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capacity::{capacity_with, CapacityOptions, Region};
use crate::grid::{Grid4, GridFunction, MeasureGrid};
use crate::potential::{ma_measure, solve_dirichlet, solve_dirichlet_from};
use crate::weight::{Profile, Weight};
use crate::{Error, Result};

/// Number of points of the geometric `t`-grid.
pub const PROFILE_POINTS: usize = 32;

/// `sum -chi(u) * density(u) * h^4` over interior nodes.
pub fn energy_chi(grid: &Grid4, u: &GridFunction, chi: &Weight) -> Result<f64> {
    let m = ma_measure(grid, u)?;
    weighted_mass(grid, u, &m, chi)
}

/// `int -chi(u) dmu`.
pub fn weighted_mass(grid: &Grid4, u: &GridFunction, mu: &MeasureGrid, chi: &Weight) -> Result<f64> {
    let mut acc = 0.0;
    for &i in grid.interior() {
        let d = mu.density()[i];
        if d != 0.0 {
            acc += -chi.eval(u.get(i).min(0.0))? * d;
        }
    }
    let e = acc * grid.cell_volume();
    if !e.is_finite() {
        return Err(Error::WeightOverflow { t: u.max_abs() });
    }
    Ok(e)
}

/// `(t, Cap({u < -t}))` for `t` geometric from `1e-3 |u|` to `|u|`.
pub fn capacity_profile(grid: &Grid4, u: &GridFunction, points: usize) -> Result<Vec<(f64, f64)>> {
    let top = u.max_abs();
    if top == 0.0 || points < 2 {
        return Ok(Vec::new());
    }
    let nodes = u.values()[..grid.nnodes()].to_vec();
    let opts = CapacityOptions {
        validators: 0,
        ..Default::default()
    };
    let ratio = (1e3f64).powf(1.0 / (points - 1) as f64);
    let mut out = Vec::with_capacity(points);
    let mut t = 1e-3 * top;
    for k in 0..points {
        if k == points - 1 {
            t = top;
        }
        let cap = if nodes.iter().any(|&v| v < -t) {
            capacity_with(
                grid,
                &Region::Sublevel {
                    values: nodes.clone(),
                    level: -t,
                },
                &opts,
            )?
            .capacity
        } else {
            0.0
        };
        out.push((t, cap));
        t *= ratio;
    }
    Ok(out)
}

/// Trapezoid rule for `int t chi'(-t) Cap({u<-t}) dt` over the profile.
pub fn hat_energy(profile: &[(f64, f64)], chi: &Weight) -> Result<f64> {
    let integrand: Vec<f64> = profile
        .iter()
        .map(|&(t, cap)| Ok(t * chi.deriv(-t)? * cap))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    for k in 1..profile.len() {
        acc += 0.5 * (integrand[k] + integrand[k - 1]) * (profile[k].0 - profile[k - 1].0);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub e_chi: f64,
    pub hat_e_chi: Option<f64>,
    pub profile: Vec<(f64, f64)>,
    pub e_finite: bool,
    pub hat_finite: Option<bool>,
}

pub fn energy_report(grid: &Grid4, u: &GridFunction, chi: &Weight, with_profile: bool) -> Result<EnergyReport> {
    let e_chi = energy_chi(grid, u, chi)?;
    let (profile, hat) = if with_profile {
        let p = capacity_profile(grid, u, PROFILE_POINTS)?;
        let hat = hat_energy(&p, chi)?;
        (p, Some(hat))
    } else {
        (Vec::new(), None)
    };
    Ok(EnergyReport {
        e_chi,
        hat_e_chi: hat,
        profile,
        e_finite: e_chi.is_finite(),
        hat_finite: hat.map(f64::is_finite),
    })
}

/// A random `E_0` function: the zero-boundary solution of `MA(psi) = g` for
/// `g` a sum of one to five Gaussian bumps.
pub fn random_e0<R: Rng>(grid: &Grid4, rng: &mut R) -> Result<GridFunction> {
    let a = grid.half_width();
    let bumps: Vec<([f64; 4], f64, f64)> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3) * a);
            let sigma = rng.gen_range(0.1..0.3) * a;
            let height = rng.gen_range(0.5..4.0);
            (c, sigma, height)
        })
        .collect();
    let g = MeasureGrid::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, sigma, height)| {
                let d2: f64 = x.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum();
                height * (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    })?;
    solve_dirichlet(grid, &g, &grid.zeros())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition4Estimate {
    pub a_est: f64,
    /// Best ratio for each non-degenerate sample.
    pub ratios: Vec<f64>,
    pub skipped: usize,
}

/// Best `int -chi(s psi) dmu / max(1, E_chi(s psi))` over scales `s > 0`.
fn best_ratio(grid: &Grid4, psi: &GridFunction, dens: &MeasureGrid, mu: &MeasureGrid, chi: &Weight) -> Result<Option<f64>> {
    let top = psi.max_abs();
    if top == 0.0 {
        return Ok(None);
    }
    let eval = |log_s: f64| -> Result<(f64, f64)> {
        let s = log_s.exp() / top;
        let scaled = psi.scaled(s);
        let num = weighted_mass(grid, &scaled, mu, chi)?;
        let e = s * weighted_mass(grid, &scaled, dens, chi)?;
        Ok((num, e))
    };
    let ratio = |log_s: f64| -> Result<f64> {
        let (num, e) = eval(log_s)?;
        Ok(num / e.max(1.0))
    };
    let (num, e) = eval(0.0)?;
    if num == 0.0 && e == 0.0 {
        return Ok(None);
    }
    // Power weights scale as num ~ s^p, E ~ s^(p+1): the sup sits at E = 1.
    if let Profile::Power { p } = chi.profile {
        if e == 0.0 {
            return Ok(Some(f64::INFINITY));
        }
        return Ok(Some(num * e.powf(-p / (p + 1.0))));
    }
    scanned_max(ratio).map(Some)
}

/// Maximum of `f` over `log s`: a coarse scan on `[-12, 12]`, then
/// golden-section refinement on the best bracket.
fn scanned_max(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let grid_pts: Vec<f64> = (-24..=24).map(|k| 0.5 * k as f64).collect();
    let vals: Vec<f64> = grid_pts.iter().map(|&l| f(l)).collect::<Result<_>>()?;
    let best = (0..vals.len())
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    let (mut lo, mut hi) = (
        grid_pts[best.saturating_sub(1)],
        grid_pts[(best + 1).min(grid_pts.len() - 1)],
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(vals[best].max(f1).max(f2))
}

/// Lower bound for the best constant `A`: the largest ratio over `samples`
/// random `E_0` functions, each optimized over its scale.
pub fn estimate_condition4<R: Rng>(
    grid: &Grid4,
    mu: &MeasureGrid,
    chi: &Weight,
    samples: usize,
    rng: &mut R,
) -> Result<Condition4Estimate> {
    let mut ratios = Vec::with_capacity(samples);
    let mut skipped = 0;
    for _ in 0..samples {
        let psi = random_e0(grid, rng)?;
        let dens = ma_measure(grid, &psi)?;
        match best_ratio(grid, &psi, &dens, mu, chi)? {
            Some(r) => ratios.push(r),
            None => skipped += 1,
        }
    }
    let a_est = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(Condition4Estimate {
        a_est,
        ratios,
        skipped,
    })
}

/// Seeded convenience wrapper around [`estimate_condition4`].
pub fn estimate_condition4_seeded(
    grid: &Grid4,
    mu: &MeasureGrid,
    chi: &Weight,
    samples: usize,
    seed: u64,
) -> Result<Condition4Estimate> {
    estimate_condition4(grid, mu, chi, samples, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaSolution {
    pub phi: GridFunction,
    pub energy: f64,
    /// Truncation levels used, in order.
    pub levels: Vec<f64>,
    pub residual: f64,
    pub sweeps: usize,
}

/// Solve `MA(phi) = mu` with zero boundary data through the truncations
/// `min(mu, j)`, `j = 1, 2, 4, ...`, checking that the solutions decrease.
pub fn solve_ma_energy(
    grid: &Grid4,
    mu: &MeasureGrid,
    chi: &Weight,
    initial: Option<&GridFunction>,
) -> Result<MaSolution> {
    let limit = 1.0 / grid.cell_volume();
    let top = mu.max_density();
    if let Some(node) = mu.density().iter().position(|&d| d > limit) {
        return Err(Error::OutOfModel {
            node,
            density: mu.density()[node],
            limit,
        });
    }
    let zero = grid.zeros();
    let mut phi = match initial {
        Some(u) => {
            grid.check(u)?;
            u.clone()
        }
        None => zero.clone(),
    };
    let mut levels = Vec::new();
    let mut prev: Option<GridFunction> = None;
    let mut sweeps = 0;
    let mut residual;
    let mut j = 1.0f64;
    loop {
        let level = j.min(top.max(1.0));
        let mu_j = if level >= top { mu.clone() } else { mu.capped(level) };
        let (next, stats) = solve_dirichlet_from(grid, &mu_j, &zero, &phi)?;
        sweeps += stats.sweeps;
        residual = stats.residual;
        if let Some(p) = &prev {
            let tol = 1e-7 * (1.0 + p.max_abs());
            if let Some(&node) = grid.interior().iter().find(|&&i| next.get(i) > p.get(i) + tol) {
                return Err(Error::NotMonotone {
                    step: levels.len(),
                    node,
                });
            }
        }
        levels.push(level);
        phi = next;
        if level >= top {
            break;
        }
        prev = Some(phi.clone());
        j *= 2.0;
    }
    let energy = energy_chi(grid, &phi, chi)?;
    Ok(MaSolution {
        phi,
        energy,
        levels,
        residual,
        sweeps,
    })
}
