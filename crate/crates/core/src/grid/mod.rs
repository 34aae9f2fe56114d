//! Uniform grids on `R^4 = H^1`.
//!
//! Nodes sit on the lattice `-a + h i` with `h = 2a/(N-1)`, where `a = 1` for
//! the box `[-1,1]^4` and `a = R` for the ball of radius `R`. The discrete
//! Laplacian is the 9-point stencil (center plus the eight axis neighbours).
//! Next to a curved boundary an arm of the stencil is shortened to the point
//! where it crosses the boundary (Shortley-Weller), which keeps the operator
//! exact on quadratics and monotone.
//!
//! A [`GridFunction`] stores one value per lattice node followed by one value
//! per boundary crossing ("cut"). Cut values and the values at non-interior
//! nodes are the boundary data.

mod io;
pub(crate) mod solver;

pub use io::{read_grid_function, write_csv, write_grid_function};
pub use solver::SolveStats;

use crate::{Error, Result};

/// Arms shorter than this fraction of `h` are not used: a node that close to
/// the boundary is treated as lying on it.
pub const MIN_ARM_FRACTION: f64 = 1e-2;

const REGULAR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[-1,1]^4`.
    Box,
    /// Open ball of the given radius about the origin.
    Ball { radius: f64 },
}

/// A region removed from the domain. Its boundary becomes part of the grid
/// boundary, with its own cut points.
#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    /// Closed ball.
    Sphere { center: [f64; 4], radius: f64 },
    /// `{x : phi(x) < 0}` for node values of `phi`; crossings are found by
    /// linear interpolation along each arm.
    Sublevel { phi: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Unknown of the discrete problems.
    Interior,
    /// Boundary node read by some stencil (box faces, or nodes within
    /// `MIN_ARM_FRACTION * h` of a curved boundary).
    Fixed,
    /// Outside the domain; never read by a stencil.
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutTag {
    /// On the outer boundary of the domain.
    Outer,
    /// On the boundary of the excluded region.
    Excluded,
}

/// A point where a stencil arm crosses the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub position: [f64; 4],
    /// Interior node whose stencil uses this cut.
    pub owner: usize,
    pub tag: CutTag,
}

#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    /// Indices into the value vector (node or `nnodes + cut`).
    pub nb: [usize; 8],
    pub w: [f64; 8],
    /// Center weight (negative).
    pub wc: f64,
}

#[derive(Debug, Clone)]
pub struct Grid4 {
    n: usize,
    h: f64,
    half_width: f64,
    domain: Domain,
    excluded: bool,
    strides: [usize; 4],
    kind: Vec<NodeKind>,
    interior: Vec<usize>,
    /// Per interior position: `REGULAR` or an index into `stencils`.
    slot: Vec<u32>,
    stencils: Vec<Stencil>,
    cuts: Vec<Cut>,
}

/// Classification of a node against one boundary surface.
#[derive(Clone, Copy, PartialEq)]
enum Side {
    Free,
    Margin,
    Core,
}

impl Grid4 {
    pub fn new(n: usize, domain: Domain) -> Result<Self> {
        Self::build(n, domain, None)
    }

    pub fn unit_box(n: usize) -> Result<Self> {
        Self::new(n, Domain::Box)
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        Self::new(n, Domain::Ball { radius })
    }

    /// The same lattice with `excl` removed from the domain.
    pub fn with_exclusion(&self, excl: &Exclusion) -> Result<Self> {
        if let Exclusion::Sublevel { phi } = excl {
            if phi.len() != self.nnodes() {
                return Err(Error::Dimension {
                    expected: self.nnodes(),
                    got: phi.len(),
                });
            }
        }
        Self::build(self.n, self.domain, Some(excl))
    }

    fn build(n: usize, domain: Domain, excl: Option<&Exclusion>) -> Result<Self> {
        if n < 5 || n % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "N must be odd and at least 5, got {n}"
            )));
        }
        if n > 257 {
            return Err(Error::InvalidGrid(format!("N = {n} is too large")));
        }
        let half_width = match domain {
            Domain::Box => 1.0,
            Domain::Ball { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidGrid(format!("bad ball radius {radius}")));
                }
                radius
            }
        };
        let h = 2.0 * half_width / (n - 1) as f64;
        let strides = [n * n * n, n * n, n, 1];
        let nnodes = n.pow(4);
        let delta = MIN_ARM_FRACTION * h;

        let mut grid = Grid4 {
            n,
            h,
            half_width,
            domain,
            excluded: excl.is_some(),
            strides,
            kind: Vec::new(),
            interior: Vec::new(),
            slot: Vec::new(),
            stencils: Vec::new(),
            cuts: Vec::new(),
        };

        let outer_side = |x: &[f64; 4], on_face: bool| -> Side {
            match domain {
                Domain::Box => {
                    if on_face {
                        Side::Margin
                    } else {
                        Side::Free
                    }
                }
                Domain::Ball { radius } => {
                    let r = norm(x);
                    if r > radius {
                        Side::Core
                    } else if r >= radius - delta || on_face {
                        Side::Margin
                    } else {
                        Side::Free
                    }
                }
            }
        };

        // Classify every node against both surfaces.
        let mut outer = Vec::with_capacity(nnodes);
        let mut inner = vec![Side::Free; nnodes];
        for idx in 0..nnodes {
            let x = grid.coords(idx);
            outer.push(outer_side(&x, grid.on_face(idx)));
        }
        match excl {
            None => {}
            Some(Exclusion::Sphere { center, radius }) => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidGrid(format!("bad exclusion radius {radius}")));
                }
                for (idx, side) in inner.iter_mut().enumerate() {
                    let r = dist(&grid.coords(idx), center);
                    *side = if r < *radius {
                        Side::Core
                    } else if r <= radius + delta {
                        Side::Margin
                    } else {
                        Side::Free
                    };
                }
            }
            Some(Exclusion::Sublevel { phi }) => {
                for idx in 0..nnodes {
                    if phi[idx] < 0.0 {
                        inner[idx] = Side::Core;
                        continue;
                    }
                    for dir in 0..8 {
                        if let Some(nb) = grid.neighbor(idx, dir) {
                            if phi[nb] < 0.0 {
                                let theta = phi[idx] / (phi[idx] - phi[nb]);
                                if theta < MIN_ARM_FRACTION {
                                    inner[idx] = Side::Margin;
                                }
                            }
                        }
                    }
                }
            }
        }

        grid.kind = (0..nnodes)
            .map(|i| match (outer[i], inner[i]) {
                (Side::Free, Side::Free) => NodeKind::Interior,
                (Side::Core, _) | (_, Side::Core) => NodeKind::Outside,
                _ => NodeKind::Fixed,
            })
            .collect();

        // Stencils.
        let inv_h2 = 1.0 / (h * h);
        for idx in 0..nnodes {
            if grid.kind[idx] != NodeKind::Interior {
                continue;
            }
            let x = grid.coords(idx);
            let mut arm_index = [0usize; 8];
            let mut theta = [1.0f64; 8];
            let mut regular = true;
            for dir in 0..8 {
                let nb = grid
                    .neighbor(idx, dir)
                    .expect("interior nodes are never on a box face");
                if grid.kind[nb] != NodeKind::Outside {
                    arm_index[dir] = nb;
                    continue;
                }
                regular = false;
                let mut best: Option<(f64, CutTag)> = None;
                if outer[nb] == Side::Core {
                    if let Domain::Ball { radius } = domain {
                        let s = exit_distance(&x, &[0.0; 4], radius, dir);
                        best = Some((s, CutTag::Outer));
                    }
                }
                if inner[nb] == Side::Core {
                    let s = match excl {
                        Some(Exclusion::Sphere { center, radius }) => {
                            entry_distance(&x, center, *radius, dir).unwrap_or(h)
                        }
                        Some(Exclusion::Sublevel { phi }) => {
                            h * phi[idx] / (phi[idx] - phi[nb])
                        }
                        None => unreachable!(),
                    };
                    if best.is_none_or(|(b, _)| s < b) {
                        best = Some((s, CutTag::Excluded));
                    }
                }
                let (s, tag) = best.expect("outside neighbour must lie beyond some surface");
                let s = s.clamp(delta, h);
                theta[dir] = s / h;
                let (axis, sign) = (dir / 2, if dir % 2 == 0 { 1.0 } else { -1.0 });
                let mut position = x;
                position[axis] += sign * s;
                arm_index[dir] = nnodes + grid.cuts.len();
                grid.cuts.push(Cut {
                    position,
                    owner: idx,
                    tag,
                });
            }
            if regular {
                grid.slot.push(REGULAR);
            } else {
                let mut w = [0.0; 8];
                let mut wc = 0.0;
                for axis in 0..4 {
                    let (tp, tm) = (theta[2 * axis], theta[2 * axis + 1]);
                    w[2 * axis] = 2.0 * inv_h2 / (tp * (tp + tm));
                    w[2 * axis + 1] = 2.0 * inv_h2 / (tm * (tp + tm));
                    wc -= 2.0 * inv_h2 / (tp * tm);
                }
                grid.slot.push(grid.stencils.len() as u32);
                grid.stencils.push(Stencil {
                    nb: arm_index,
                    w,
                    wc,
                });
            }
            grid.interior.push(idx);
        }
        if grid.interior.is_empty() && !grid.excluded {
            return Err(Error::InvalidGrid("grid has no interior nodes".into()));
        }
        Ok(grid)
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(4)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn has_exclusion(&self) -> bool {
        self.excluded
    }

    pub fn nnodes(&self) -> usize {
        self.kind.len()
    }

    pub fn ncuts(&self) -> usize {
        self.cuts.len()
    }

    /// Length of the value vector of a grid function.
    pub fn len(&self) -> usize {
        self.nnodes() + self.ncuts()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kind[node]
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.kind[node] == NodeKind::Interior
    }

    /// Interior nodes in lexicographic order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn index(&self, i: [usize; 4]) -> usize {
        i[0] * self.strides[0] + i[1] * self.strides[1] + i[2] * self.strides[2] + i[3]
    }

    pub fn multi_index(&self, node: usize) -> [usize; 4] {
        let n = self.n;
        [node / self.strides[0], (node / self.strides[1]) % n, (node / n) % n, node % n]
    }

    pub fn coords(&self, node: usize) -> [f64; 4] {
        self.multi_index(node)
            .map(|i| -self.half_width + i as f64 * self.h)
    }

    /// Position of a value-vector entry (node or cut).
    pub fn position(&self, slot: usize) -> [f64; 4] {
        if slot < self.nnodes() {
            self.coords(slot)
        } else {
            self.cuts[slot - self.nnodes()].position
        }
    }

    /// Nearest node to `x`.
    pub fn nearest_node(&self, x: &[f64; 4]) -> usize {
        let i = x.map(|c| {
            let k = ((c + self.half_width) / self.h).round();
            k.clamp(0.0, (self.n - 1) as f64) as usize
        });
        self.index(i)
    }

    fn on_face(&self, node: usize) -> bool {
        self.multi_index(node)
            .iter()
            .any(|&i| i == 0 || i == self.n - 1)
    }

    /// Lattice neighbour in direction `dir` (`2*axis` is `+`, `2*axis+1` is `-`).
    pub fn neighbor(&self, node: usize, dir: usize) -> Option<usize> {
        let axis = dir / 2;
        let i = self.multi_index(node)[axis];
        if dir % 2 == 0 {
            (i + 1 < self.n).then(|| node + self.strides[axis])
        } else {
            (i > 0).then(|| node - self.strides[axis])
        }
    }

    /// Value-vector indices read by the stencil at interior position `k`
    /// (excluding the center).
    pub fn stencil_slots(&self, k: usize) -> [usize; 8] {
        let node = self.interior[k];
        match self.slot[k] {
            REGULAR => {
                let s = self.strides;
                [
                    node + s[0],
                    node - s[0],
                    node + s[1],
                    node - s[1],
                    node + s[2],
                    node - s[2],
                    node + s[3],
                    node - s[3],
                ]
            }
            j => self.stencils[j as usize].nb,
        }
    }

    /// True if the stencil at interior position `k` reaches a boundary value.
    pub fn touches_boundary(&self, k: usize) -> bool {
        self.stencil_slots(k)
            .iter()
            .any(|&s| s >= self.nnodes() || self.kind[s] != NodeKind::Interior)
    }

    /// Magnitude of the center weight at interior position `k`.
    pub fn center_weight(&self, k: usize) -> f64 {
        match self.slot[k] {
            REGULAR => 8.0 / (self.h * self.h),
            j => -self.stencils[j as usize].wc,
        }
    }

    /// Discrete Laplacian at interior position `k`.
    #[inline]
    pub fn laplacian_at(&self, v: &[f64], k: usize) -> f64 {
        let node = self.interior[k];
        match self.slot[k] {
            REGULAR => {
                let s = &self.strides;
                let sum = v[node + s[0]]
                    + v[node - s[0]]
                    + v[node + s[1]]
                    + v[node - s[1]]
                    + v[node + s[2]]
                    + v[node - s[2]]
                    + v[node + 1]
                    + v[node - 1];
                (sum - 8.0 * v[node]) / (self.h * self.h)
            }
            j => {
                let st = &self.stencils[j as usize];
                let mut acc = st.wc * v[node];
                for a in 0..8 {
                    acc += st.w[a] * v[st.nb[a]];
                }
                acc
            }
        }
    }

    /// Discrete Laplacian at every node (zero off the interior).
    pub fn laplacian(&self, u: &GridFunction) -> Vec<f64> {
        self.check(u).expect("grid function does not belong to this grid");
        let mut out = vec![0.0; self.nnodes()];
        for (k, &node) in self.interior.iter().enumerate() {
            out[node] = self.laplacian_at(&u.values, k);
        }
        out
    }

    pub fn check(&self, u: &GridFunction) -> Result<()> {
        if u.values.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: u.values.len(),
            });
        }
        Ok(())
    }

    pub fn zeros(&self) -> GridFunction {
        self.constant(0.0)
    }

    pub fn constant(&self, c: f64) -> GridFunction {
        GridFunction {
            values: vec![c; self.len()],
        }
    }

    /// Sample `f` at every node and every cut point.
    pub fn sample(&self, f: impl Fn(&[f64; 4]) -> f64) -> GridFunction {
        let values = (0..self.len()).map(|s| f(&self.position(s))).collect();
        GridFunction { values }
    }

    /// Wrap a value vector, checking its length and finiteness.
    pub fn function(&self, values: Vec<f64>) -> Result<GridFunction> {
        let u = GridFunction { values };
        self.check(&u)?;
        if let Some(i) = u.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                at: self.position(i).to_vec(),
            });
        }
        Ok(u)
    }

    /// Build a function on this grid from node values of a function on
    /// another grid over the same lattice; cut values come from `fill`.
    pub fn transfer(
        &self,
        nodes: &[f64],
        fill: impl Fn(&Cut) -> f64,
    ) -> Result<GridFunction> {
        if nodes.len() != self.nnodes() {
            return Err(Error::Dimension {
                expected: self.nnodes(),
                got: nodes.len(),
            });
        }
        let mut values = nodes.to_vec();
        values.extend(self.cuts.iter().map(fill));
        Ok(GridFunction { values })
    }

    /// Nodes of the lattice satisfying `pred`.
    pub fn node_mask(&self, pred: impl Fn(&[f64; 4]) -> bool) -> Vec<bool> {
        (0..self.nnodes()).map(|i| pred(&self.coords(i))).collect()
    }

    /// Value-vector entries that are boundary data (non-interior nodes read
    /// by some stencil, and all cuts).
    pub fn boundary_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nnodes())
            .filter(|&i| self.kind[i] == NodeKind::Fixed)
            .chain(self.nnodes()..self.len())
    }

    /// Largest interior-node deviation between two functions.
    pub fn max_interior_diff(&self, u: &GridFunction, v: &GridFunction) -> f64 {
        self.interior
            .iter()
            .map(|&i| (u.values[i] - v.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of `density * h^4` over interior nodes for a node-indexed density.
    pub fn integrate(&self, density: &[f64]) -> f64 {
        let s: f64 = self.interior.iter().map(|&i| density[i]).sum();
        s * self.cell_volume()
    }
}

/// Values of a function on a [`Grid4`]: lattice nodes first, then cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.values[slot]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.len(), other.len(), "grid functions on different grids");
        GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max(&self, other: &GridFunction) -> GridFunction {
        self.zip(other, f64::max)
    }

    pub fn min(&self, other: &GridFunction) -> GridFunction {
        self.zip(other, f64::min)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// Max-norm distance over all entries.
    pub fn dist(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Nonnegative density per lattice node; only interior nodes carry mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureGrid {
    density: Vec<f64>,
    cell_volume: f64,
}

impl MeasureGrid {
    pub fn zero(grid: &Grid4) -> Self {
        Self {
            density: vec![0.0; grid.nnodes()],
            cell_volume: grid.cell_volume(),
        }
    }

    /// Density from node values; entries off the interior are dropped.
    pub fn new(grid: &Grid4, mut density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.nnodes() {
            return Err(Error::Dimension {
                expected: grid.nnodes(),
                got: density.len(),
            });
        }
        for (i, d) in density.iter_mut().enumerate() {
            if !grid.is_interior(i) {
                *d = 0.0;
            } else if !d.is_finite() || *d < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "density {d} at node {i} is not a nonnegative number"
                )));
            }
        }
        Ok(Self {
            density,
            cell_volume: grid.cell_volume(),
        })
    }

    pub fn from_fn(grid: &Grid4, f: impl Fn(&[f64; 4]) -> f64) -> Result<Self> {
        let density = (0..grid.nnodes()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, density)
    }

    /// Mass `m` placed in the single cell of the node nearest to `x`.
    pub fn point_mass(grid: &Grid4, x: &[f64; 4], m: f64) -> Result<Self> {
        let node = grid.nearest_node(x);
        if !grid.is_interior(node) {
            return Err(Error::InvalidArgument(format!(
                "point mass at {x:?} is not at an interior node"
            )));
        }
        let mut density = vec![0.0; grid.nnodes()];
        density[node] = m / grid.cell_volume();
        Self::new(grid, density)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_volume
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().fold(0.0, |m: f64, &d| m.max(d))
    }

    /// Mass over the nodes selected by `mask`.
    pub fn mass_on(&self, mask: &[bool]) -> f64 {
        self.density
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(d, _)| d)
            .sum::<f64>()
            * self.cell_volume
    }

    pub fn restricted(&self, mask: &[bool]) -> MeasureGrid {
        MeasureGrid {
            density: self
                .density
                .iter()
                .zip(mask)
                .map(|(&d, &m)| if m { d } else { 0.0 })
                .collect(),
            cell_volume: self.cell_volume,
        }
    }

    /// Nodewise `min(density, cap)`.
    pub fn capped(&self, cap: f64) -> MeasureGrid {
        MeasureGrid {
            density: self.density.iter().map(|&d| d.min(cap)).collect(),
            cell_volume: self.cell_volume,
        }
    }
}

fn norm(x: &[f64; 4]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dist(x: &[f64; 4], c: &[f64; 4]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Distance along `dir` from `x` (inside the sphere) to the sphere.
fn exit_distance(x: &[f64; 4], c: &[f64; 4], r: f64, dir: usize) -> f64 {
    let axis = dir / 2;
    let sign = if dir % 2 == 0 { 1.0 } else { -1.0 };
    let p: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let pd = sign * p[axis];
    -pd + (pd * pd + r * r - pp).max(0.0).sqrt()
}

/// Distance along `dir` from `x` (outside the sphere) to the sphere, if hit.
fn entry_distance(x: &[f64; 4], c: &[f64; 4], r: f64, dir: usize) -> Option<f64> {
    let axis = dir / 2;
    let sign = if dir % 2 == 0 { 1.0 } else { -1.0 };
    let p: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let pd = sign * p[axis];
    let disc = pd * pd - (pp - r * r);
    if pd >= 0.0 || disc < 0.0 {
        return None;
    }
    Some(-pd - disc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64; 4]) -> f64 {
        // Laplacian 2 + 4 + 0 + 6 = 12, plus harmonic cross terms.
        x[0] * x[0] + 2.0 * x[1] * x[1] + 3.0 * x[3] * x[3] + x[0] * x[2] - 0.5 * x[1] + 0.3
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid4::unit_box(4).is_err());
        assert!(Grid4::unit_box(3).is_err());
        assert!(Grid4::unit_box(8).is_err());
        assert!(Grid4::ball(9, -1.0).is_err());
    }

    #[test]
    fn box_layout() {
        let g = Grid4::unit_box(5).unwrap();
        assert_eq!(g.nnodes(), 625);
        assert_eq!(g.ncuts(), 0);
        assert_eq!(g.interior().len(), 81);
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.coords(0), [-1.0; 4]);
        assert_eq!(g.coords(624), [1.0; 4]);
        let i = g.index([1, 2, 3, 4]);
        assert_eq!(g.multi_index(i), [1, 2, 3, 4]);
        assert_eq!(g.coords(i), [-0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.nearest_node(&[0.1, -0.1, 0.0, 0.0]), g.index([2, 2, 2, 2]));
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        for grid in [
            Grid4::unit_box(9).unwrap(),
            Grid4::ball(9, 1.0).unwrap(),
            Grid4::ball(11, 0.7)
                .unwrap()
                .with_exclusion(&Exclusion::Sphere {
                    center: [0.1, 0.0, -0.05, 0.0],
                    radius: 0.31,
                })
                .unwrap(),
        ] {
            let u = grid.sample(quad);
            let lap = grid.laplacian(&u);
            for &i in grid.interior() {
                assert!((lap[i] - 12.0).abs() < 1e-9, "lap {} at {i}", lap[i]);
            }
        }
    }

    #[test]
    fn ball_cuts_lie_on_the_sphere() {
        let g = Grid4::ball(9, 1.0).unwrap();
        assert!(g.ncuts() > 0);
        for c in g.cuts() {
            assert_eq!(c.tag, CutTag::Outer);
            assert!((norm(&c.position) - 1.0).abs() < 1e-12);
            assert!(g.is_interior(c.owner));
        }
        for &i in g.interior() {
            assert!(norm(&g.coords(i)) < 1.0);
        }
    }

    #[test]
    fn sublevel_exclusion_interpolates_crossings() {
        let g = Grid4::unit_box(9).unwrap();
        let phi: Vec<f64> = (0..g.nnodes())
            .map(|i| norm(&g.coords(i)) - 0.4)
            .collect();
        let hole = g.with_exclusion(&Exclusion::Sublevel { phi }).unwrap();
        assert!(hole.ncuts() > 0);
        for c in hole.cuts() {
            assert_eq!(c.tag, CutTag::Excluded);
            // Linear interpolation of a distance function along an axis.
            assert!((norm(&c.position) - 0.4).abs() < 0.5 * hole.h());
        }
        let u = hole.sample(quad);
        for &i in hole.interior() {
            assert!(norm(&hole.coords(i)) > 0.4);
        }
        let lap = hole.laplacian(&u);
        // Linear interpolation moves the cut but the stencil stays exact for
        // data sampled at the cut itself.
        for &i in hole.interior() {
            assert!((lap[i] - 12.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stencil_weights_are_monotone() {
        let g = Grid4::ball(13, 1.0).unwrap();
        for st in &g.stencils {
            assert!(st.wc < 0.0);
            assert!(st.w.iter().all(|&w| w > 0.0));
            let s: f64 = st.w.iter().sum();
            assert!((s + st.wc).abs() < 1e-9 * st.wc.abs());
        }
    }

    #[test]
    fn measure_mass_and_restriction() {
        let g = Grid4::unit_box(5).unwrap();
        let m = MeasureGrid::from_fn(&g, |_| 2.0).unwrap();
        assert!((m.total_mass() - 2.0 * 81.0 * 0.0625).abs() < 1e-12);
        let p = MeasureGrid::point_mass(&g, &[0.0; 4], 3.0).unwrap();
        assert!((p.total_mass() - 3.0).abs() < 1e-12);
        assert!(MeasureGrid::from_fn(&g, |_| -1.0).is_err());
        let mask = g.node_mask(|x| x[0] > 0.0);
        assert!(m.mass_on(&mask) < m.total_mass());
        assert_eq!(m.restricted(&mask).total_mass(), m.mass_on(&mask));
    }

    #[test]
    fn transfer_keeps_nodes() {
        let g = Grid4::ball(9, 1.0).unwrap();
        let hole = g
            .with_exclusion(&Exclusion::Sphere {
                center: [0.0; 4],
                radius: 0.3,
            })
            .unwrap();
        let u = hole.sample(|x| x[0]);
        let back = g.transfer(&u.values()[..g.nnodes()], |c| c.position[0]).unwrap();
        assert_eq!(back, g.sample(|x| x[0]));
    }
}
