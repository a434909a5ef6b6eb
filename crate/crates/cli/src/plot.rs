//! Plot-ready CSV extracted from `front`/`field` outputs. No rendering.

use std::path::Path;

use mfront::io::{fmt_f, read_csv, Csv};
use mfront::{Error, Field2, Grid2, Result, V2};

use crate::PlotKind;

fn column(header: &[String], name: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Argument(format!("input has no `{name}` column")))
}

fn segments_cross(a: V2, b: V2, c: V2, d: V2) -> bool {
    let o = |p: V2, q: V2, r: V2| mfront::det2(&(q - p), &(r - p));
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Proper crossings between non-adjacent edges of a closed polyline.
pub fn self_intersections(p: &[V2]) -> usize {
    let n = p.len();
    let mut count = 0;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]) {
                count += 1;
            }
        }
    }
    count
}

/// Rebuild the regular grid behind a row-major (x fastest) field CSV.
fn field_from_csv(header: &[String], rows: &[Vec<f64>]) -> Result<Field2> {
    let (ix, iy, ie) = (column(header, "x1")?, column(header, "x2")?, column(header, "eta")?);
    if rows.len() < 4 {
        return Err(Error::Argument("field input needs at least 2x2 samples".into()));
    }
    let x0 = rows[0][ix];
    let nx = rows.iter().position(|r| r[iy] != rows[0][iy]).unwrap_or(rows.len());
    if nx < 2 || rows.len() % nx != 0 {
        return Err(Error::Argument("field input is not a row-major regular grid".into()));
    }
    let ny = rows.len() / nx;
    let (y0, dx) = (rows[0][iy], rows[1][ix] - x0);
    let dy = rows[nx][iy] - y0;
    let grid = Grid2::new(nx, ny, x0, y0, dx, dy)?;
    let tol = 1e-9 * (dx.abs() + dy.abs());
    for (k, r) in rows.iter().enumerate() {
        let p = grid.point(k % nx, k / nx);
        if (r[ix] - p.x).abs() > tol || (r[iy] - p.y).abs() > tol {
            return Err(Error::Argument(format!("grid mismatch at data row {}", k + 1)));
        }
    }
    Ok(Field2 { grid, values: rows.iter().map(|r| r[ie]).collect() })
}

pub fn emit(kind: PlotKind, input: &Path, output: &Path, t: Option<f64>, psi: f64) -> Result<String> {
    let (header, rows) = read_csv(&std::fs::read_to_string(input)?)?;
    match kind {
        PlotKind::FrontPolyline => {
            let (it, ix, iy, ia) = (column(&header, "t")?, column(&header, "x1")?, column(&header, "x2")?, column(&header, "alive")?);
            let want = match t {
                Some(t) => t,
                None => rows.iter().map(|r| r[it]).fold(f64::NEG_INFINITY, f64::max),
            };
            let tol = 1e-12 * want.abs().max(1.0);
            let pts: Vec<V2> = rows.iter().filter(|r| (r[it] - want).abs() <= tol && r[ia] == 1.0).map(|r| V2::new(r[ix], r[iy])).collect();
            if pts.len() < 3 {
                return Err(Error::Argument(format!("no front at t = {want} in {}", input.display())));
            }
            let mut csv = Csv::new(&["x1", "x2"]);
            for p in pts.iter().chain(std::iter::once(&pts[0])) {
                csv.row([fmt_f(p.x), fmt_f(p.y)]);
            }
            csv.write(output)?;
            Ok(format!("self_intersections = {}", self_intersections(&pts)))
        }
        PlotKind::ProfileCut => {
            let f = field_from_csv(&header, &rows)?;
            let g = f.grid;
            let dir = V2::new(psi.cos(), psi.sin());
            let (xa, xb) = (g.x0, g.x(g.nx - 1));
            let (ya, yb) = (g.y0, g.y(g.ny - 1));
            if !(xa <= 0.0 && 0.0 <= xb && ya <= 0.0 && 0.0 <= yb) {
                return Err(Error::Argument("profile cut starts at the origin, which lies outside the grid".into()));
            }
            // distance to the grid edge along dir
            let reach = |lo: f64, hi: f64, d: f64| if d > 0.0 { hi / d } else if d < 0.0 { lo / d } else { f64::INFINITY };
            let smax = reach(xa, xb, dir.x).min(reach(ya, yb, dir.y));
            let n = 2 * g.nx.max(g.ny);
            let mut csv = Csv::new(&["s", "x1", "x2", "eta"]);
            for k in 0..n {
                let s = smax * k as f64 / (n - 1) as f64 * (1.0 - 1e-12);
                let p = dir * s;
                let v = f.sample(&p).ok_or_else(|| Error::Argument(format!("cut left the grid at s = {s}")))?;
                csv.row([fmt_f(s), fmt_f(p.x), fmt_f(p.y), fmt_f(v)]);
            }
            csv.write(output)?;
            Ok(format!("samples = {n}"))
        }
        PlotKind::FieldHeatmap => {
            let f = field_from_csv(&header, &rows)?;
            let mut csv = Csv::new(&["x1", "x2", "eta"]);
            for (k, v) in f.values.iter().enumerate() {
                let p = f.grid.point(k % f.grid.nx, k / f.grid.nx);
                csv.row([fmt_f(p.x), fmt_f(p.y), fmt_f(*v)]);
            }
            csv.write(output)?;
            Ok(format!("rows = {} ({} x {})", f.values.len(), f.grid.nx, f.grid.ny))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_eight_crosses_once() {
        let p: Vec<V2> = (0..200)
            .map(|k| {
                let s = std::f64::consts::TAU * (k as f64 + 0.5) / 200.0;
                V2::new(s.sin(), (2.0 * s).sin() / 2.0)
            })
            .collect();
        assert_eq!(self_intersections(&p), 1);
        let circle: Vec<V2> = (0..64).map(|k| mfront::unit(std::f64::consts::TAU * k as f64 / 64.0)).collect();
        assert_eq!(self_intersections(&circle), 0);
    }
}
