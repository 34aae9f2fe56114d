//! Command dispatch. Each command reads its own config section, writes
//! scalar results and named verdicts into the report.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use qpot::capacity::{capacity_sandwich_check, capacity_with, CapacityOptions, Region};
use qpot::energy::{energy_report, estimate_condition4, random_e0, solve_ma_energy};
use qpot::envelope::{envelope, envelope_active_set, mass_concentration_check};
use qpot::field::{CoordinatePoint, Polynomial, ScalarField};
use qpot::grid::{write_csv, write_grid_function, Domain, Grid4, GridFunction, MeasureGrid};
use qpot::hypercomplex::{default_step, ma_density, ma_density_exact, quaternionic_hessian, quaternionic_hessian_exact};
use qpot::hyperhermitian::{complexify, is_psd, moore_det, HyperHermitianMatrix, PSD_TOL};
use qpot::potential::{
    is_e0, ma_density_signed, ma_measure, solve_dirichlet_from, verify_comparison, LINEAR_TOL, OBSTACLE_LAP_TOL,
};
use qpot::quat::Quaternion;
use qpot::weight::{check_subhomogeneity, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Config, DEFAULT_GRID_N};
use crate::expr::parse_field;
use crate::report::{RunReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    MooreDet,
    MaEval,
    QpshCheck,
    SolveDirichlet,
    Envelope,
    Capacity,
    Sandwich,
    Energy,
    Condition4,
    SolveMa,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
}

/// Run `command` on the config text. Command-line overrides are folded into
/// the config first, so the digest covers the values actually used.
pub fn run(command: Command, config_text: &str, opts: &Options) -> Result<RunReport> {
    let start = Instant::now();
    let mut cfg = Config::parse(config_text)?;
    if let Some(seed) = opts.seed {
        cfg.set("run", "seed", seed.to_string());
    }
    if let Some(n) = opts.grid_n {
        cfg.set("grid", "n", n.to_string());
    }
    let seed = cfg.seed()?;
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut cx = Ctx {
        cfg: cfg.clone(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        results: Map::new(),
        verdicts: Vec::new(),
        out: opts.out.clone(),
        artifacts: Vec::new(),
    };
    dispatch(command, &mut cx)?;
    if !cx.artifacts.is_empty() {
        let names = std::mem::take(&mut cx.artifacts);
        cx.result("artifacts", names);
    }
    let report = RunReport {
        command: command.name(),
        config_digest: cfg.digest(),
        results: cx.results,
        verdicts: cx.verdicts,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &opts.out {
        let path = dir.join("report.json");
        fs::write(&path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

fn dispatch(command: Command, cx: &mut Ctx) -> Result<()> {
    match command {
        Command::MooreDet => moore_det_cmd(cx),
        Command::MaEval => ma_eval(cx),
        Command::QpshCheck => qpsh_check(cx),
        Command::SolveDirichlet => solve_dirichlet_cmd(cx),
        Command::Envelope => envelope_cmd(cx),
        Command::Capacity => capacity_cmd(cx),
        Command::Sandwich => sandwich(cx),
        Command::Energy => energy(cx),
        Command::Condition4 => condition4(cx),
        Command::SolveMa => solve_ma(cx),
        Command::VerifyAll => verify_all(cx),
    }
}

struct Ctx {
    cfg: Config,
    rng: ChaCha8Rng,
    results: Map<String, Value>,
    verdicts: Vec<Verdict>,
    out: Option<PathBuf>,
    artifacts: Vec<String>,
}

impl Ctx {
    fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("results serialize");
        self.results.insert(key.to_string(), v);
    }

    fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    fn grid(&self) -> Result<Grid4> {
        let n = self.cfg.parsed_or("grid", "n", DEFAULT_GRID_N)?;
        let domain = match self.cfg.get("grid", "domain").unwrap_or("ball") {
            "ball" => Domain::Ball {
                radius: self.cfg.positive_or("grid", "radius", 1.0)?,
            },
            "box" => Domain::Box,
            other => bail!("[grid] domain must be ball or box, got {other:?}"),
        };
        Ok(Grid4::new(n, domain)?)
    }

    /// A polynomial on H^1 sampled on the grid.
    fn grid_field(&self, grid: &Grid4, section: &str, key: &str) -> Result<GridFunction> {
        let p = self.poly(section, key, 1)?;
        Ok(grid.sample(|x| p.eval(x)))
    }

    fn poly(&self, section: &str, key: &str, n: usize) -> Result<Polynomial> {
        let text = self.cfg.require(section, key)?;
        parse_field(text, n).map_err(|e| anyhow!("[{section}] {key}: {e}"))
    }

    fn weight(&self) -> Result<Weight> {
        let chi = match self.cfg.get("weight", "kind").unwrap_or("power") {
            "power" => Weight::power(self.cfg.positive_or("weight", "p", 1.0)?)?,
            "log" => {
                let w = Weight::log_modified();
                if let Some(m) = self.cfg.parsed::<f64>("weight", "M")? {
                    if Some(m) != w.m {
                        bail!("[weight] the log-modified weight has M = {:?}, not {m}", w.m);
                    }
                }
                w
            }
            "name" => Weight::by_name(self.cfg.require("weight", "name")?)?,
            other => bail!("[weight] kind must be power, log or name, got {other:?}"),
        };
        Ok(match self.cfg.parsed::<f64>("weight", "scale")? {
            Some(c) if c > 0.0 => chi.rescaled(c),
            Some(c) => bail!("[weight] scale must be positive, got {c}"),
            None => chi,
        })
    }

    fn artifact(&mut self, name: &str, grid: &Grid4, u: &GridFunction) -> Result<()> {
        let Some(dir) = self.out.clone() else {
            return Ok(());
        };
        let bin = format!("{name}.qgrid");
        let mut w = BufWriter::new(create(&dir.join(&bin))?);
        write_grid_function(&mut w, grid, u)?;
        let csv = format!("{name}.csv");
        let mut w = BufWriter::new(create(&dir.join(&csv))?);
        write_csv(&mut w, grid, u)?;
        self.artifacts.push(bin);
        self.artifacts.push(csv);
        Ok(())
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

// ==== pointwise algebra ====

fn parse_quaternion(text: &str) -> Result<Quaternion> {
    let c: Vec<f64> = text
        .split_whitespace()
        .map(|s| s.parse::<f64>().map_err(|e| anyhow!("bad component {s:?}: {e}")))
        .collect::<Result<_>>()?;
    match c[..] {
        [w, x, y, z] => Ok(Quaternion::new(w, x, y, z)),
        _ => bail!("a quaternion needs 4 components, got {text:?}"),
    }
}

/// `n*n` quaternions, row-major, separated by `|`.
fn parse_matrix(text: &str, n: usize) -> Result<HyperHermitianMatrix> {
    let entries = text.split('|').map(parse_quaternion).collect::<Result<Vec<_>>>()?;
    if entries.len() != n * n {
        bail!("[matrix] entries: expected {} quaternions, got {}", n * n, entries.len());
    }
    Ok(HyperHermitianMatrix::new(n, entries)?)
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> HyperHermitianMatrix {
    let mut e = vec![Quaternion::ZERO; n * n];
    for a in 0..n {
        e[a * n + a] = Quaternion::real(rng.gen_range(-2.0..2.0));
        for b in a + 1..n {
            let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let q = Quaternion::new(q[0], q[1], q[2], q[3]);
            e[a * n + b] = q;
            e[b * n + a] = q.conj();
        }
    }
    HyperHermitianMatrix::new(n, e).expect("hyperhermitian by construction")
}

fn moore_det_cmd(cx: &mut Ctx) -> Result<()> {
    let n: usize = cx.cfg.parsed_or("matrix", "n", 2)?;
    if n == 0 {
        bail!("[matrix] n must be positive");
    }
    let matrices = match cx.cfg.get("matrix", "entries") {
        Some(text) => vec![parse_matrix(text, n)?],
        None => {
            let count: usize = cx.cfg.parsed_or("matrix", "samples", 20)?;
            (0..count).map(|_| random_matrix(&mut cx.rng, n)).collect()
        }
    };
    let (mut worst, mut worst_im) = (0.0f64, 0.0f64);
    let mut hermitian = true;
    let mut dets = Vec::new();
    for m in &matrices {
        let md = moore_det(m)?;
        let c = complexify(m);
        let det = c.determinant();
        let scale = (md * md).abs().max(1.0);
        worst = worst.max((det.re - md * md).abs() / scale);
        worst_im = worst_im.max(det.im.abs() / scale);
        hermitian &= c.is_hermitian(1e-12);
        dets.push(md);
    }
    if let [m] = &matrices[..] {
        let c = complexify(m).determinant();
        cx.result("moore_det", dets[0]);
        cx.result("complex_det", [c.re, c.im]);
        cx.result("eigenvalues", m.eigenvalues()?);
        cx.result("psd", is_psd(m));
    } else {
        cx.result("samples", matrices.len());
        cx.result("moore_dets", &dets);
    }
    cx.verdict(Verdict::at_most("moore_det^2 equals det of the complexification", worst, 0.0, 1e-8));
    cx.verdict(Verdict::at_most("det of the complexification is real", worst_im, 0.0, 1e-8));
    cx.verdict(Verdict::holds("complexification is hermitian", hermitian));
    Ok(())
}

fn point(cfg: &Config, n: usize) -> Result<CoordinatePoint> {
    match cfg.get("field", "point") {
        None | Some("origin") => Ok(CoordinatePoint::origin(n)),
        Some(_) => {
            let x = cfg.reals("field", "point")?.unwrap_or_default();
            Ok(CoordinatePoint::new(n, x)?)
        }
    }
}

fn ma_eval(cx: &mut Ctx) -> Result<()> {
    let n: usize = cx.cfg.parsed_or("field", "n", 1)?;
    let u = cx.poly("field", "expr", n)?;
    let p = point(&cx.cfg, n)?;
    let exact = ma_density_exact(&u, &p)?;
    let h = cx.cfg.parsed_or("field", "step", default_step(&p))?;
    let fd = ma_density(&u, &p, h)?;
    let hess = quaternionic_hessian_exact(&u, &p)?;
    cx.result("value", exact);
    cx.result("value_fd", fd);
    cx.result("step", h);
    cx.result("hessian_eigenvalues", hess.eigenvalues()?);
    cx.result("qpsh", is_psd(&hess));
    let fd_tol = cx.cfg.positive_or("tolerances", "fd", 1e-5)?;
    cx.verdict(Verdict::close(
        "finite-difference density matches the exact one",
        fd,
        exact,
        fd_tol * exact.abs().max(1.0),
    ));
    if n == 1 {
        let quarter_lap = u.exact_laplacian(p.real()).unwrap_or(f64::NAN) / 4.0;
        cx.verdict(Verdict::close(
            "density equals a quarter of the laplacian",
            exact,
            quarter_lap,
            1e-12 * quarter_lap.abs().max(1.0),
        ));
    }
    if let Some(expected) = cx.cfg.parsed::<f64>("field", "expected")? {
        cx.verdict(Verdict::close("value matches expected", exact, expected, 1e-9 * expected.abs().max(1.0)));
    }
    Ok(())
}

fn qpsh_check(cx: &mut Ctx) -> Result<()> {
    let n: usize = cx.cfg.parsed_or("field", "n", 1)?;
    let u = cx.poly("field", "expr", n)?;
    let count: usize = cx.cfg.parsed_or("sample", "points", 64)?;
    let r = cx.cfg.positive_or("sample", "radius", 1.0)?;
    let mut min_scaled = f64::INFINITY;
    let mut worst_point = Vec::new();
    let mut psd_count = 0;
    let mut fd_gap = 0.0f64;
    for k in 0..count {
        let x: Vec<f64> = if k == 0 {
            vec![0.0; 4 * n]
        } else {
            (0..4 * n).map(|_| cx.rng.gen_range(-r..r)).collect()
        };
        let p = CoordinatePoint::new(n, x)?;
        let exact = quaternionic_hessian_exact(&u, &p)?;
        let fd = quaternionic_hessian(&u, &p, default_step(&p))?;
        let scale = exact.norm().max(1.0);
        for (a, b) in exact.entries().iter().zip(fd.entries()) {
            fd_gap = fd_gap.max((*a - *b).norm() / scale);
        }
        let low = exact.eigenvalues()?[0] / scale;
        if is_psd(&exact) {
            psd_count += 1;
        }
        if low < min_scaled {
            min_scaled = low;
            worst_point = p.real().to_vec();
        }
    }
    cx.result("samples", count);
    cx.result("psd_count", psd_count);
    cx.result("min_scaled_eigenvalue", min_scaled);
    cx.result("worst_point", worst_point);
    cx.verdict(Verdict::at_least(
        "quaternionic hessian is positive semidefinite at every sample",
        min_scaled,
        0.0,
        PSD_TOL,
    ));
    cx.verdict(Verdict::at_most("finite-difference hessian matches the exact one", fd_gap, 0.0, 1e-5));
    Ok(())
}

// ==== grid potential theory ====

fn interior_min(grid: &Grid4, v: impl Fn(usize) -> f64) -> f64 {
    grid.interior().iter().map(|&i| v(i)).fold(f64::INFINITY, f64::min)
}

fn interior_max(grid: &Grid4, v: impl Fn(usize) -> f64) -> f64 {
    grid.interior().iter().map(|&i| v(i)).fold(f64::NEG_INFINITY, f64::max)
}

fn solve_dirichlet_cmd(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let f = match cx.cfg.get("dirichlet", "f") {
        Some(_) => {
            let p = cx.poly("dirichlet", "f", 1)?;
            MeasureGrid::from_fn(&grid, |x| p.eval(x))?
        }
        None => MeasureGrid::zero(&grid),
    };
    let g = match cx.cfg.get("dirichlet", "g") {
        Some(_) => cx.grid_field(&grid, "dirichlet", "g")?,
        None => grid.zeros(),
    };
    let (u, stats) = solve_dirichlet_from(&grid, &f, &g, &g)?;
    cx.result("h", grid.h());
    cx.result("sweeps", stats.sweeps);
    cx.result("residual", stats.residual);
    cx.result("min", interior_min(&grid, |i| u.get(i)));
    cx.result("max", interior_max(&grid, |i| u.get(i)));
    cx.verdict(Verdict::at_most(
        "linear residual",
        stats.residual,
        0.0,
        LINEAR_TOL * (1.0 + f.max_density()),
    ));
    if cx.cfg.get("dirichlet", "exact").is_some() {
        let exact = cx.grid_field(&grid, "dirichlet", "exact")?;
        let err = grid.max_interior_diff(&u, &exact);
        let tol = cx.cfg.positive_or("dirichlet", "tol", 5.0 * grid.h() * grid.h())?;
        cx.result("max_error", err);
        cx.verdict(Verdict::at_most("matches the exact solution", err, 0.0, tol));
    }
    cx.artifact("u", &grid, &u)
}

fn envelope_cmd(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let raw = cx.grid_field(&grid, "envelope", "obstacle")?;
    let f = if cx.cfg.flag("envelope", "clip", true)? {
        raw.map(|v| v.min(0.0))
    } else {
        raw
    };
    let b = match cx.cfg.get("envelope", "boundary") {
        Some(_) => cx.grid_field(&grid, "envelope", "boundary")?,
        None => f.clone(),
    };
    let res = envelope(&grid, &f, &b)?;
    let mc = mass_concentration_check(&grid, &res);
    let above = interior_max(&grid, |i| res.envelope.get(i) - f.get(i));
    let d = ma_density_signed(&grid, &res.envelope);
    let lap = interior_min(&grid, |i| 4.0 * d[i]);
    cx.result("total_mass", mc.total_mass);
    cx.result("off_contact_mass", mc.off_contact_mass);
    cx.result("ratio", mc.ratio);
    cx.result("iterations", mc.iterations);
    cx.result("residual", mc.residual);
    cx.result("contact_nodes", res.contact_mask.iter().filter(|&&c| c).count());
    cx.verdict(Verdict::at_most("mass off the contact set", mc.ratio, 0.0, mc.tol));
    cx.verdict(Verdict::at_most("envelope lies below the obstacle", above, 0.0, 1e-12));
    cx.verdict(Verdict::at_least("envelope is subharmonic", lap, 0.0, OBSTACLE_LAP_TOL));
    if cx.cfg.flag("envelope", "compare", true)? {
        let other = envelope_active_set(&grid, &f, &b)?;
        let gap = grid.max_interior_diff(&res.envelope, &other.envelope);
        cx.result("active_set_gap", gap);
        cx.verdict(Verdict::at_most("active-set solver agrees", gap, 0.0, 1e-8));
    }
    cx.artifact("envelope", &grid, &res.envelope)
}

fn region(cx: &Ctx, grid: &Grid4) -> Result<Region> {
    let center: [f64; 4] = match cx.cfg.reals("capacity", "center")? {
        None => [0.0; 4],
        Some(c) => c
            .try_into()
            .map_err(|c: Vec<f64>| anyhow!("[capacity] center needs 4 coordinates, got {}", c.len()))?,
    };
    Ok(match cx.cfg.get("capacity", "region").unwrap_or("ball") {
        "ball" => Region::Ball {
            center,
            radius: cx.cfg.positive_or("capacity", "radius", 0.5)?,
        },
        "cube" => {
            let hw = cx.cfg.positive_or("capacity", "half_width", 0.25)?;
            Region::Mask(grid.node_mask(|x| x.iter().zip(&center).all(|(a, b)| (a - b).abs() <= hw + 1e-12)))
        }
        "sublevel" => {
            let u = cx.grid_field(grid, "capacity", "u")?;
            Region::Sublevel {
                values: u.values()[..grid.nnodes()].to_vec(),
                level: cx.cfg.parsed::<f64>("capacity", "level")?.ok_or_else(|| anyhow!("missing [capacity] level"))?,
            }
        }
        other => bail!("[capacity] region must be ball, cube or sublevel, got {other:?}"),
    })
}

/// Condenser capacity of a ball concentric with the ball domain.
fn condenser(grid: &Grid4, region: &Region) -> Option<f64> {
    match (grid.domain(), region) {
        (Domain::Ball { radius: big }, Region::Ball { center, radius: r })
            if center.iter().all(|&c| c == 0.0) && *r < big =>
        {
            Some(PI * PI * r * r * big * big / (big * big - r * r))
        }
        _ => None,
    }
}

fn capacity_cmd(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let region = region(cx, &grid)?;
    let opts = CapacityOptions {
        validators: cx.cfg.parsed_or("capacity", "validators", CapacityOptions::default().validators)?,
        seed: cx.rng.gen(),
    };
    let rep = capacity_with(&grid, &region, &opts)?;
    cx.result("capacity", rep.capacity);
    cx.result("lower_bound", rep.lower_bound);
    cx.result("nodes", rep.mask.iter().filter(|&&m| m).count());
    cx.result("sweeps", rep.solve.sweeps);
    cx.verdict(Verdict {
        name: "extremal value dominates sampled test functions".into(),
        pass: rep.validated,
        lhs: rep.capacity,
        rhs: rep.lower_bound,
        tol: 0.0,
    });
    let rel_tol = cx.cfg.positive_or("capacity", "rel_tol", 0.05)?;
    if let Some(exact) = condenser(&grid, &region) {
        cx.result("closed_form", exact);
        cx.verdict(Verdict::close("condenser closed form", rep.capacity / exact, 1.0, rel_tol));
    }
    if let Some(expected) = cx.cfg.parsed::<f64>("capacity", "expected")? {
        cx.verdict(Verdict::close("capacity matches expected", rep.capacity / expected, 1.0, rel_tol));
    }
    cx.artifact("extremal", &grid, &rep.extremal)
}

fn sandwich(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let u = cx.grid_field(&grid, "sandwich", "u")?;
    let s_list = cx.cfg.reals("sandwich", "s")?.unwrap_or_else(|| vec![0.2]);
    let t_list = cx.cfg.reals("sandwich", "t")?.unwrap_or_else(|| vec![0.3]);
    let c = cx.cfg.parsed::<f64>("tolerances", "sandwich_c")?;
    cx.verdict(Verdict::holds("u is nonpositive and vanishes on the boundary", is_e0(&grid, &u, 1e-12)));
    let mut reps = Vec::new();
    for &s in &s_list {
        for &t in &t_list {
            let rep = capacity_sandwich_check(&grid, &u, s, t, c)?;
            cx.verdict(Verdict::at_most(format!("lower bound s={s} t={t}"), rep.left, rep.middle, rep.tol));
            cx.verdict(Verdict::at_most(format!("upper bound s={s} t={t}"), rep.middle, rep.right, rep.tol));
            reps.push(rep);
        }
    }
    cx.result("pairs", reps);
    Ok(())
}

// ==== energy classes ====

fn energy(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let u = cx.grid_field(&grid, "energy", "u")?;
    let chi = cx.weight()?;
    let with_profile = cx.cfg.flag("energy", "profile", true)?;
    let rep = energy_report(&grid, &u, &chi, with_profile)?;
    cx.result("weight", &chi.name);
    cx.result("E_chi", rep.e_chi);
    cx.result("hatE_chi", rep.hat_e_chi);
    cx.result("profile", &rep.profile);
    cx.verdict(Verdict::holds("E_chi is finite", rep.e_finite));
    if let Some(finite) = rep.hat_finite {
        cx.verdict(Verdict::holds("hatE_chi is finite", finite));
    }
    if let Some(expected) = cx.cfg.parsed::<f64>("energy", "expected")? {
        let rel_tol = cx.cfg.positive_or("energy", "rel_tol", 0.02)?;
        cx.verdict(Verdict::close("E_chi matches expected", rep.e_chi / expected, 1.0, rel_tol));
    }
    if chi.m.is_some() {
        let samples = cx.cfg.parsed_or("energy", "subhomogeneity_samples", 10_000usize)?;
        let sub = check_subhomogeneity(&chi, samples, cx.rng.gen())?;
        cx.result("subhomogeneity_violations", sub.violations);
        cx.verdict(Verdict {
            name: "weight is sub-homogeneous at every sample".into(),
            pass: sub.pass,
            lhs: sub.violations as f64,
            rhs: 0.0,
            tol: 0.0,
        });
    }
    Ok(())
}

/// `MA(phi)` for a configured or random `phi`, with `phi` when it is known.
fn measure(cx: &mut Ctx, grid: &Grid4, section: &str) -> Result<(MeasureGrid, Option<GridFunction>)> {
    if cx.cfg.get(section, "density").is_some() {
        let p = cx.poly(section, "density", 1)?;
        return Ok((MeasureGrid::from_fn(grid, |x| p.eval(x))?, None));
    }
    let phi = match cx.cfg.require(section, "phi")? {
        "random" => random_e0(grid, &mut cx.rng)?,
        _ => cx.grid_field(grid, section, "phi")?,
    };
    Ok((ma_measure(grid, &phi)?, Some(phi)))
}

fn condition4(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let chi = cx.weight()?;
    let (mu, _) = measure(cx, &grid, "condition4")?;
    let samples: usize = cx.cfg.parsed_or("condition4", "samples", 32)?;
    let a = estimate_condition4(&grid, &mu, &chi, samples, &mut cx.rng)?;
    let b = estimate_condition4(&grid, &mu, &chi, samples, &mut cx.rng)?;
    let spread = (a.a_est - b.a_est).abs() / a.a_est.max(b.a_est).max(f64::MIN_POSITIVE);
    cx.result("A_est", a.a_est.max(b.a_est));
    cx.result("batches", [a.a_est, b.a_est]);
    cx.result("skipped", a.skipped + b.skipped);
    cx.result("mass", mu.total_mass());
    cx.verdict(Verdict::holds("estimate is finite", a.a_est.is_finite() && b.a_est.is_finite()));
    let tol = cx.cfg.positive_or("condition4", "spread", 0.1)?;
    cx.verdict(Verdict::at_most("independent batches agree", spread, 0.0, tol));
    Ok(())
}

fn solve_ma(cx: &mut Ctx) -> Result<()> {
    let grid = cx.grid()?;
    let chi = cx.weight()?;
    let (mu, phi) = measure(cx, &grid, "solve-ma")?;
    let sol = solve_ma_energy(&grid, &mu, &chi, None)?;
    cx.result("energy", sol.energy);
    cx.result("levels", &sol.levels);
    cx.result("residual", sol.residual);
    cx.result("sweeps", sol.sweeps);
    cx.verdict(Verdict::at_most(
        "linear residual",
        sol.residual,
        0.0,
        LINEAR_TOL * (1.0 + mu.max_density()),
    ));
    cx.verdict(Verdict::holds("truncation levels increase", sol.levels.windows(2).all(|w| w[0] < w[1])));
    if let Some(phi) = phi {
        let err = grid.max_interior_diff(&sol.phi, &phi);
        let tol = cx.cfg.positive_or("solve-ma", "tol", 5.0 * grid.h() * grid.h())?;
        cx.result("max_error", err);
        cx.verdict(Verdict::at_most("recovers phi", err, 0.0, tol));
    }
    cx.artifact("phi", &grid, &sol.phi)
}

// ==== suite ====

const PARABOLOID: &str = "x0^2+x1^2+x2^2+x3^2-1";

fn suite() -> Vec<(Command, String)> {
    let third_pi2 = PI * PI / 3.0;
    vec![
        (Command::MooreDet, "[matrix]\nn = 3\nsamples = 50\n".into()),
        (Command::MaEval, "[field]\nexpr = x0^2+x1^2+x2^2+x3^2\nexpected = 2\n".into()),
        (
            Command::QpshCheck,
            "[field]\nn = 2\nexpr = x0^2+x1^2+x2^2+x3^2+x4^4+(x5+x6)^2\n[sample]\npoints = 32\n".into(),
        ),
        (
            Command::SolveDirichlet,
            format!("[dirichlet]\nf = 2\nexact = {PARABOLOID}\ntol = 1e-9\n"),
        ),
        (Command::Capacity, "[capacity]\nregion = ball\nradius = 0.5\nvalidators = 8\n".into()),
        (Command::Sandwich, format!("[sandwich]\nu = {PARABOLOID}\ns = 0.2, 0.4\nt = 0.3\n")),
        (Command::Envelope, "[envelope]\nobstacle = 2*(x0^2+x1^2+x2^2+x3^2) - 1/2\n".into()),
        (
            Command::Energy,
            format!("[energy]\nu = {PARABOLOID}\nexpected = {third_pi2}\n[weight]\nkind = power\np = 1\n"),
        ),
        (
            Command::Energy,
            format!("[energy]\nu = {PARABOLOID}\nprofile = false\n[weight]\nkind = log\n"),
        ),
        (
            Command::Condition4,
            format!("[condition4]\nphi = {PARABOLOID}\nsamples = 32\nspread = 0.1\n[weight]\np = 1\n"),
        ),
        (Command::SolveMa, format!("[solve-ma]\nphi = {PARABOLOID}\n[weight]\np = 2\n")),
    ]
}

/// The invariant suite on the configured grid; results are keyed by step.
fn verify_all(cx: &mut Ctx) -> Result<()> {
    let grid_n = cx.cfg.parsed_or("grid", "n", DEFAULT_GRID_N)?;
    for (k, (command, text)) in suite().into_iter().enumerate() {
        let mut cfg = Config::parse(&text).expect("suite configs parse");
        cfg.set("grid", "n", grid_n.to_string());
        let label = format!("{:02}-{}", k + 1, command.name());
        let mut sub = Ctx {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cx.rng.gen()),
            results: Map::new(),
            verdicts: Vec::new(),
            out: None,
            artifacts: Vec::new(),
        };
        dispatch(command, &mut sub).with_context(|| format!("suite step {label}"))?;
        for mut v in sub.verdicts {
            v.name = format!("{label}: {}", v.name);
            cx.verdicts.push(v);
        }
        cx.result(&label, Value::Object(sub.results));
    }
    comparison_step(cx, grid_n)
}

/// Comparison on `{u < v}` for two random members of E_0.
fn comparison_step(cx: &mut Ctx, grid_n: usize) -> Result<()> {
    let grid = Grid4::ball(grid_n, 1.0)?;
    let u = random_e0(&grid, &mut cx.rng)?;
    let v = random_e0(&grid, &mut cx.rng)?;
    let rep = verify_comparison(&grid, &u, &v, None)?;
    let label = "12-comparison";
    cx.result(label, json!({ "nodes": rep.nodes, "slack": rep.slack }));
    cx.verdict(Verdict::at_most(
        format!("{label}: MA(v) mass on {{u < v}} is at most MA(u) mass"),
        rep.lhs,
        rep.rhs,
        rep.tol,
    ));
    Ok(())
}
