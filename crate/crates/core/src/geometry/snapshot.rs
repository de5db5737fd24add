//! Plain-text field snapshots.
//!
//! ```text
//! football <alpha> <n_r> <n_theta>
//! <value>
//! ...
//! ```
//! or `planar <lx> <ly> <n_x> <n_y>`, followed by one value per node in the
//! grid's node order.

use std::io::{BufRead, Write};

use super::{AnyGrid, Field, FootballGrid, Grid, PlanarGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: AnyGrid,
    pub field: Field,
}

pub fn write_snapshot<W: Write>(mut out: W, grid: &AnyGrid, field: &Field) -> Result<()> {
    super::check(grid, field)?;
    match grid {
        AnyGrid::Football(g) => writeln!(out, "football {:?} {} {}", g.alpha(), g.n_r(), g.n_theta())?,
        AnyGrid::Planar(g) => writeln!(out, "planar {:?} {:?} {} {}", g.lx(), g.ly(), g.n_x(), g.n_y())?,
    }
    for v in field.values() {
        writeln!(out, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Snapshot> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty snapshot".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number `{s}` in snapshot header")))
    };
    let int = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad count `{s}` in snapshot header")))
    };
    let grid = match parts.as_slice() {
        ["football", a, nr, nt] => AnyGrid::Football(FootballGrid::new(num(a)?, int(nr)?, int(nt)?)?),
        ["planar", lx, ly, nx, ny] => {
            AnyGrid::Planar(PlanarGrid::new(num(lx)?, num(ly)?, int(nx)?, int(ny)?)?)
        }
        _ => return Err(Error::Parse(format!("unrecognized snapshot header `{header}`"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: bad value `{t}`", lineno + 2)))?,
        );
    }
    let field = Field::from_values(&grid, values)?;
    Ok(Snapshot { grid, field })
}
