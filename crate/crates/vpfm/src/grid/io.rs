//! Plain-text grid dumps and legacy VTK output.
//!
//! Dump format (one token group per line, `#` starts the magic line):
//!
//! ```text
//! # vpfm-grid 1
//! dim 3
//! cells 64 64 64
//! dx 0.015625
//! origin 0 0 0
//! name omega
//! layout vorticity
//! components 3
//! component 0 stagger center node node shape 64 65 65
//! <one value per line, x index fastest>
//! component 1 ...
//! ```

use super::{GridDesc, GridError, Layout, StaggeredArray, StaggeredField};
use crate::Real;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct DumpHeader {
    pub dim: usize,
    pub cells: Vec<usize>,
    pub dx: f64,
    pub origin: Vec<f64>,
    pub name: String,
    pub layout: Layout,
}

pub fn write_dump<T: Real, const D: usize>(
    path: &Path,
    desc: &GridDesc<T, D>,
    name: &str,
    field: &StaggeredField<T, D>,
) -> Result<(), GridError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# vpfm-grid 1")?;
    writeln!(w, "dim {D}")?;
    writeln!(w, "cells {}", join(desc.cells.iter()))?;
    writeln!(w, "dx {:e}", desc.dx.as_f64())?;
    writeln!(w, "origin {}", join(desc.origin.iter().map(|v| format!("{:e}", v.as_f64()))))?;
    writeln!(w, "name {name}")?;
    writeln!(w, "layout {}", field.layout.tag())?;
    writeln!(w, "components {}", field.comps.len())?;
    for (c, arr) in field.comps.iter().enumerate() {
        let tags = arr.stagger.iter().map(|&s| if s { "center" } else { "node" });
        writeln!(w, "component {c} stagger {} shape {}", join(tags), join(arr.shape.iter()))?;
        for v in &arr.data {
            writeln!(w, "{:e}", v.as_f64())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn join<I: Iterator>(it: I) -> String
where
    I::Item: std::fmt::Display,
{
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn bad(msg: impl Into<String>) -> GridError {
    GridError::Format(msg.into())
}

/// Reads a dump written by [`write_dump`].
pub fn read_dump<T: Real, const D: usize>(
    path: &Path,
) -> Result<(DumpHeader, GridDesc<T, D>, StaggeredField<T, D>), GridError> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut lines = r.lines();
    let mut next = || -> Result<String, GridError> {
        lines.next().ok_or_else(|| bad("unexpected end of file"))?.map_err(GridError::from)
    };
    if next()?.trim() != "# vpfm-grid 1" {
        return Err(bad("missing magic line"));
    }
    let field = |key: &str, line: String| -> Result<Vec<String>, GridError> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(format!("expected `{key}`")));
        }
        Ok(it.map(str::to_owned).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer `{s}`")));
    let dim = int(&field("dim", next()?)?[0])?;
    if dim != D {
        return Err(bad(format!("dump is {dim}D, caller expects {D}D")));
    }
    let cells = field("cells", next()?)?.iter().map(|s| int(s)).collect::<Result<Vec<_>, _>>()?;
    let dx = num(&field("dx", next()?)?[0])?;
    let origin = field("origin", next()?)?.iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
    let name = field("name", next()?)?.join(" ");
    let layout = Layout::from_tag(&field("layout", next()?)?[0]).ok_or_else(|| bad("unknown layout"))?;
    let ncomp = int(&field("components", next()?)?[0])?;
    if cells.len() != D || origin.len() != D {
        return Err(bad("header arity"));
    }
    let desc = GridDesc::new(
        std::array::from_fn(|a| cells[a]),
        T::lit(dx),
        std::array::from_fn(|a| T::lit(origin[a])),
    )
    .map_err(|e| bad(e.to_string()))?;
    let mut out = StaggeredField::zeros(&desc, layout);
    if ncomp != out.comps.len() {
        return Err(bad("component count does not match layout"));
    }
    for c in 0..ncomp {
        let _ = field("component", next()?)?;
        let arr: &mut StaggeredArray<T, D> = &mut out.comps[c];
        for v in arr.data.iter_mut() {
            *v = T::lit(num(next()?.trim())?);
        }
    }
    let header = DumpHeader {
        dim,
        cells,
        dx,
        origin,
        name,
        layout,
    };
    Ok((header, desc, out))
}

/// Writes a legacy-VTK structured-points file on the cell-center lattice.
/// Each component is averaged from its storage locations to the centers;
/// multi-component fields are written as 3-vectors (z = 0 in 2D).
pub fn write_vtk<T: Real, const D: usize>(
    path: &Path,
    desc: &GridDesc<T, D>,
    name: &str,
    field: &StaggeredField<T, D>,
) -> Result<(), GridError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let n3 = [desc.cells[0], desc.cells[1], if D == 3 { desc.cells[2] } else { 1 }];
    let h = desc.dx.as_f64();
    let o: Vec<f64> = (0..3)
        .map(|a| if a < D { desc.origin[a].as_f64() + 0.5 * h } else { 0.0 })
        .collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", n3[0], n3[1], n3[2])?;
    writeln!(w, "ORIGIN {} {} {}", o[0], o[1], o[2])?;
    writeln!(w, "SPACING {h} {h} {h}")?;
    writeln!(w, "POINT_DATA {}", n3[0] * n3[1] * n3[2])?;
    let centers: Vec<Vec<f64>> = field.comps.iter().map(|a| to_centers(desc, a)).collect();
    let ncell = desc.num_cells();
    if centers.len() == 1 {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &centers[0] {
            writeln!(w, "{v:e}")?;
        }
    } else {
        writeln!(w, "VECTORS {name} double")?;
        for k in 0..ncell {
            let c = |i: usize| centers.get(i).map_or(0.0, |v| v[k]);
            writeln!(w, "{:e} {:e} {:e}", c(0), c(1), c(2))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Averages a staggered array onto cell centers.
fn to_centers<T: Real, const D: usize>(desc: &GridDesc<T, D>, arr: &StaggeredArray<T, D>) -> Vec<f64> {
    let mut out = vec![0.0; desc.num_cells()];
    let node_axes: Vec<usize> = (0..D).filter(|&a| !arr.stagger[a]).collect();
    let corners = 1usize << node_axes.len();
    let scale = 1.0 / corners as f64;
    super::for_each_index(desc.cells, |k, i| {
        let mut s = 0.0;
        for m in 0..corners {
            let mut j = i;
            for (bit, &a) in node_axes.iter().enumerate() {
                j[a] += (m >> bit) & 1;
            }
            s += arr.get(j).as_f64();
        }
        out[k] = s * scale;
    });
    out
}
