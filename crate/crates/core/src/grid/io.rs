//! Binary and CSV export of grid functions.
//!
//! Binary layout (little-endian): `b"QPOTGRID"`, `u32` N, `f64` h, `u8` domain
//! kind (0 box, 1 ball), `f64` R (1 for the box), `u64` node count, the node
//! values in row-major order (x0 slowest), `u64` cut count, the cut values.

use std::io::{Read, Write};

use super::{Domain, Grid4, GridFunction};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"QPOTGRID";

pub fn write_grid_function<W: Write>(
    out: &mut W,
    grid: &Grid4,
    u: &GridFunction,
) -> Result<()> {
    grid.check(u)?;
    if grid.has_exclusion() {
        return Err(Error::Format(
            "functions on grids with an excluded region cannot be serialized".into(),
        ));
    }
    let (kind, r) = match grid.domain() {
        Domain::Box => (0u8, 1.0),
        Domain::Ball { radius } => (1u8, radius),
    };
    out.write_all(MAGIC)?;
    out.write_all(&(grid.n() as u32).to_le_bytes())?;
    out.write_all(&grid.h().to_le_bytes())?;
    out.write_all(&[kind])?;
    out.write_all(&f64::to_le_bytes(r))?;
    let (nodes, cuts) = u.values().split_at(grid.nnodes());
    for part in [nodes, cuts] {
        out.write_all(&(part.len() as u64).to_le_bytes())?;
        for v in part {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_array<const K: usize, R: Read>(input: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(buf)
}

pub fn read_grid_function<R: Read>(input: &mut R) -> Result<(Grid4, GridFunction)> {
    if &read_array::<8, _>(input)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = u32::from_le_bytes(read_array(input)?) as usize;
    let h = f64::from_le_bytes(read_array(input)?);
    let kind = read_array::<1, _>(input)?[0];
    let r = f64::from_le_bytes(read_array(input)?);
    let domain = match kind {
        0 => Domain::Box,
        1 => Domain::Ball { radius: r },
        k => return Err(Error::Format(format!("unknown domain kind {k}"))),
    };
    let grid = Grid4::new(n, domain).map_err(|e| Error::Format(e.to_string()))?;
    if (grid.h() - h).abs() > 1e-12 * h.abs().max(1.0) {
        return Err(Error::Format(format!(
            "spacing {h} does not match N = {n} (expected {})",
            grid.h()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for expected in [grid.nnodes(), grid.ncuts()] {
        let count = u64::from_le_bytes(read_array(input)?) as usize;
        if count != expected {
            return Err(Error::Format(format!(
                "expected {expected} values, header says {count}"
            )));
        }
        for _ in 0..count {
            values.push(f64::from_le_bytes(read_array(input)?));
        }
    }
    let u = grid.function(values)?;
    Ok((grid, u))
}

/// One row per node and per cut: `index,x0,x1,x2,x3,value`.
pub fn write_csv<W: Write>(out: &mut W, grid: &Grid4, u: &GridFunction) -> Result<()> {
    grid.check(u)?;
    writeln!(out, "index,x0,x1,x2,x3,value")?;
    for (slot, v) in u.values().iter().enumerate() {
        let x = grid.position(slot);
        writeln!(out, "{slot},{},{},{},{},{v}", x[0], x[1], x[2], x[3])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        for grid in [Grid4::unit_box(5).unwrap(), Grid4::ball(7, 0.8).unwrap()] {
            let u = grid.sample(|x| x[0] - 2.0 * x[3] * x[1]);
            let mut buf = Vec::new();
            write_grid_function(&mut buf, &grid, &u).unwrap();
            let (g2, u2) = read_grid_function(&mut buf.as_slice()).unwrap();
            assert_eq!(g2.n(), grid.n());
            assert_eq!(g2.domain(), grid.domain());
            assert_eq!(u2, u);
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let grid = Grid4::unit_box(5).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &grid, &grid.zeros()).unwrap();
        assert!(matches!(
            read_grid_function(&mut &buf[..buf.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_grid_function(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_value() {
        let grid = Grid4::ball(5, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &grid, &grid.zeros()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), grid.len() + 1);
        assert!(text.starts_with("index,x0,x1,x2,x3,value\n0,-1,-1,-1,-1,0"));
    }
}
