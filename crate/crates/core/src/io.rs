//! Text formats: gridded samples, CSV helpers and the scene cache.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::geometry::FocalPointInfo;
use crate::raytrace::{Ray, RayBundle, RayState, TraceOptions};
use crate::V2;

/// Uniform grid of samples, row-major with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSamples {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub values: Vec<f64>,
}

impl GridSamples {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Argument(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::Argument(format!("grid spacing must be positive, got ({dx}, {dy})")));
        }
        if values.len() != nx * ny {
            return Err(Error::Argument(format!("expected {} samples, got {}", nx * ny, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite grid sample".into()));
        }
        Ok(GridSamples { nx, ny, x0, y0, dx, dy, values })
    }

    /// Tabulate `f` on the grid.
    pub fn from_fn(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(x0 + i as f64 * dx, y0 + j as f64 * dy));
            }
        }
        Self::new(nx, ny, x0, y0, dx, dy, values)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }
    pub fn y_max(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.dy
    }

    /// Parse the `nx ny x0 y0 dx dy` header followed by nx*ny values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut toks = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for t in line.split(|c: char| c.is_whitespace() || c == ',') {
                if !t.is_empty() {
                    toks.push((ln + 1, t));
                }
            }
        }
        if toks.len() < 6 {
            return Err(Error::Parse { line: toks.last().map_or(1, |t| t.0), msg: "grid header needs `nx ny x0 y0 dx dy`".into() });
        }
        let int = |k: usize| -> Result<usize> {
            toks[k].1.parse::<usize>().map_err(|_| Error::Parse { line: toks[k].0, msg: format!("expected integer, got `{}`", toks[k].1) })
        };
        let real = |k: usize| -> Result<f64> {
            toks[k].1.parse::<f64>().map_err(|_| Error::Parse { line: toks[k].0, msg: format!("expected number, got `{}`", toks[k].1) })
        };
        let (nx, ny) = (int(0)?, int(1)?);
        let (x0, y0, dx, dy) = (real(2)?, real(3)?, real(4)?, real(5)?);
        let mut values = Vec::with_capacity(nx * ny);
        for k in 6..toks.len() {
            values.push(real(k)?);
        }
        if values.len() != nx * ny {
            return Err(Error::Parse {
                line: toks.last().map_or(1, |t| t.0),
                msg: format!("expected {} samples after header, found {}", nx * ny, values.len()),
            });
        }
        Self::new(nx, ny, x0, y0, dx, dy, values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {:e} {:e} {:e} {:e}\n", self.nx, self.ny, self.x0, self.y0, self.dx, self.dy);
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| fmt_f(*v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Fixed float format used by every artifact (17 significant digits).
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal CSV writer: header plus rows of preformatted cells.
#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Csv { buf: String::new() };
        c.buf.push_str(&header.join(","));
        c.buf.push('\n');
        c
    }
    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }
    pub fn as_str(&self) -> &str {
        &self.buf
    }
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.buf)?;
        Ok(())
    }
}

/// Parse a numeric CSV with a header row. Non-numeric cells become NaN.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty CSV".into() })?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, l) in lines.enumerate() {
        let r: Vec<f64> = l.split(',').map(|s| s.trim().parse().unwrap_or(f64::NAN)).collect();
        if r.len() != header.len() {
            return Err(Error::Parse { line: k + 2, msg: format!("expected {} columns, got {}", header.len(), r.len()) });
        }
        rows.push(r);
    }
    Ok((header, rows))
}

pub const CACHE_MAGIC: &str = "MFRONT1";

fn join_f(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(fmt_f).collect::<Vec<_>>().join(" ")
}

fn state_cells(s: &RayState) -> String {
    let v = [s.psi, s.t, s.p.x, s.p.y, s.x.x, s.x.y, s.p_psi.x, s.p_psi.y, s.x_psi.x, s.x_psi.y, s.pdot.x, s.pdot.y, s.xdot.x, s.xdot.y, s.c];
    format!("{} {} {}", join_f(v), s.morse, s.alive as u8)
}

/// Text serialization of a traced bundle and its focal table. The bathymetry
/// is not stored; it is supplied again on reading.
pub fn write_scene_cache(bundle: &RayBundle, focal: &[FocalPointInfo]) -> String {
    let o = &bundle.opts;
    let mut s = String::new();
    let _ = writeln!(s, "{CACHE_MAGIC}");
    let _ = writeln!(s, "options {} {} {} {} {}", o.n_psi, fmt_f(o.t_end), fmt_f(o.dt), o.store_every.unwrap_or(0), fmt_f(o.psi_offset));
    let _ = writeln!(s, "c0 {}", fmt_f(bundle.c0));
    for w in &bundle.warnings {
        let _ = writeln!(s, "warning {}", w.replace('\n', " "));
    }
    for r in &bundle.rays {
        let _ = writeln!(s, "ray {} {} {} {} {}", fmt_f(r.psi), r.alive as u8, fmt_f(r.alive_until), r.times.len(), r.events.len());
        let _ = writeln!(s, "events {}", join_f(r.events.iter().copied()));
        for k in 0..r.times.len() {
            let _ = writeln!(s, "{} {} {}", fmt_f(r.times[k]), join_f(r.states[k]), join_f(r.rates[k]));
        }
    }
    for f in focal {
        let _ = writeln!(
            s,
            "focal {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
            state_cells(&f.state),
            fmt_f(f.c0),
            fmt_f(f.j_tilde),
            f.n.map_or(0, |n| n),
            fmt_f(f.jn),
            f.sigma,
            f.mbold.map_or("-".to_string(), |m| m.to_string()),
            fmt_f(f.a),
            fmt_f(f.b),
            fmt_f(f.q),
            join_f(f.jk),
            fmt_f(f.fit_residual),
            f.degenerate as u8,
            fmt_f(f.c_f),
        );
    }
    s
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let (k, l) = self.lines.next().ok_or(Error::Parse { line: self.line + 1, msg: "unexpected end of cache".into() })?;
        self.line = k + 1;
        Ok(l)
    }
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }
    fn nums<T: std::str::FromStr>(&self, toks: &[&str]) -> Result<Vec<T>> {
        toks.iter().map(|t| t.parse::<T>().map_err(|_| self.err(format!("bad value `{t}`")))).collect()
    }
}

fn parse_state(c: &Cursor, t: &[&str]) -> Result<RayState> {
    if t.len() != 17 {
        return Err(c.err("ray state needs 17 fields"));
    }
    let v: Vec<f64> = c.nums(&t[..15])?;
    let w = |k: usize| V2::new(v[k], v[k + 1]);
    let morse: u32 = c.nums(&t[15..16])?[0];
    Ok(RayState { psi: v[0], t: v[1], p: w(2), x: w(4), p_psi: w(6), x_psi: w(8), pdot: w(10), xdot: w(12), c: v[14], morse, alive: t[16] == "1" })
}

/// Inverse of [`write_scene_cache`].
pub fn read_scene_cache(text: &str, bathy: Arc<Bathymetry>) -> Result<(RayBundle, Vec<FocalPointInfo>)> {
    let mut c = Cursor { lines: text.lines().enumerate().peekable(), line: 0 };
    if c.next()?.trim() != CACHE_MAGIC {
        return Err(c.err(format!("missing `{CACHE_MAGIC}` header")));
    }
    let head: Vec<&str> = c.next()?.split_whitespace().collect();
    if head.len() != 6 || head[0] != "options" {
        return Err(c.err("expected `options n_psi t_end dt store_every psi_offset`"));
    }
    let n_psi: usize = c.nums(&head[1..2])?[0];
    let tf: Vec<f64> = c.nums(&[head[2], head[3], head[5]])?;
    let every: usize = c.nums(&head[4..5])?[0];
    let opts = TraceOptions { n_psi, t_end: tf[0], dt: tf[1], store_every: (every > 0).then_some(every), psi_offset: tf[2] };
    let c0_line: Vec<&str> = c.next()?.split_whitespace().collect();
    if c0_line.len() != 2 || c0_line[0] != "c0" {
        return Err(c.err("expected `c0 <value>`"));
    }
    let c0: f64 = c.nums(&c0_line[1..])?[0];
    let (mut rays, mut focal, mut warnings) = (vec![], vec![], vec![]);
    while c.lines.peek().is_some() {
        let line = c.next()?;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first().copied() {
            None => {}
            Some("warning") => warnings.push(line.trim_start()["warning".len()..].trim().to_string()),
            Some("ray") if t.len() == 6 => {
                let psi: f64 = c.nums(&t[1..2])?[0];
                let alive_until: f64 = c.nums(&t[3..4])?[0];
                let n: Vec<usize> = c.nums(&t[4..6])?;
                let ev_line = c.next()?;
                let ev: Vec<&str> = ev_line.split_whitespace().collect();
                if ev.first() != Some(&"events") || ev.len() != n[1] + 1 {
                    return Err(c.err(format!("expected `events` with {} values", n[1])));
                }
                let events: Vec<f64> = c.nums(&ev[1..])?;
                let mut ray = Ray { psi, times: vec![], states: vec![], rates: vec![], events, alive_until, alive: t[2] == "1" };
                for _ in 0..n[0] {
                    let row = c.next()?;
                    let v: Vec<f64> = c.nums(&row.split_whitespace().collect::<Vec<_>>())?;
                    if v.len() != 17 {
                        return Err(c.err("ray sample needs 17 values"));
                    }
                    ray.times.push(v[0]);
                    ray.states.push(v[1..9].try_into().unwrap());
                    ray.rates.push(v[9..17].try_into().unwrap());
                }
                rays.push(ray);
            }
            Some("focal") if t.len() == 33 => {
                let state = parse_state(&c, &t[1..18])?;
                let v = |k: usize| -> Result<f64> { Ok(c.nums::<f64>(&t[k..k + 1])?[0]) };
                let n: u32 = c.nums(&t[20..21])?[0];
                let mbold = if t[23] == "-" { None } else { Some(c.nums::<i32>(&t[23..24])?[0]) };
                focal.push(FocalPointInfo {
                    psi: state.psi,
                    t: state.t,
                    state,
                    c_f: v(32)?,
                    c0: v(18)?,
                    j_tilde: v(19)?,
                    n: (n > 0).then_some(n),
                    jn: v(21)?,
                    sigma: c.nums::<i32>(&t[22..23])?[0],
                    mbold,
                    a: v(24)?,
                    b: v(25)?,
                    q: v(26)?,
                    jk: [v(27)?, v(28)?, v(29)?],
                    fit_residual: v(30)?,
                    degenerate: t[31] == "1",
                });
            }
            Some(k) => return Err(c.err(format!("unexpected record `{k}`"))),
        }
    }
    if rays.len() != n_psi {
        return Err(c.err(format!("expected {n_psi} rays, found {}", rays.len())));
    }
    let psis = rays.iter().map(|r| r.psi).collect();
    Ok((RayBundle { bathy, opts, psis, rays, c0, warnings }, focal))
}
