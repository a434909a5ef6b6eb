//! Reference solutions: Fourier synthesis for constant depth and a
//! finite-difference solver for variable depth, plus front-band error metrics.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::source::SourceModel;
use crate::V2;

type C64 = Complex64;

/// Regular node grid: x_i = x0 + i dx, y_j = y0 + j dy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx < 4 || ny < 4 || !(dx > 0.0 && dy > 0.0) {
            return Err(Error::Argument(format!("bad grid {nx}x{ny} with spacing {dx}, {dy}")));
        }
        Ok(Grid2 { nx, ny, x0, y0, dx, dy })
    }

    /// n x n grid covering [x0, x1] x [y0, y1] with nodes on the corners.
    pub fn covering(nx: usize, ny: usize, [x0, y0, x1, y1]: [f64; 4]) -> Result<Self> {
        Grid2::new(nx, ny, x0, y0, (x1 - x0) / (nx - 1) as f64, (y1 - y0) / (ny - 1) as f64)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.dy
    }
    pub fn point(&self, i: usize, j: usize) -> V2 {
        V2::new(self.x(i), self.y(j))
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn points(&self) -> Vec<V2> {
        (0..self.ny).flat_map(|j| (0..self.nx).map(move |i| self.point(i, j))).collect()
    }
}

/// Row-major samples on a `Grid2`.
#[derive(Clone, Debug)]
pub struct Field2 {
    pub grid: Grid2,
    pub values: Vec<f64>,
}

impl Field2 {
    pub fn zeros(grid: Grid2) -> Self {
        Field2 { grid, values: vec![0.0; grid.len()] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation; None outside the grid.
    pub fn sample(&self, p: &V2) -> Option<f64> {
        let g = &self.grid;
        let u = (p.x - g.x0) / g.dx;
        let v = (p.y - g.y0) / g.dy;
        if !(u >= 0.0 && v >= 0.0 && u <= (g.nx - 1) as f64 && v <= (g.ny - 1) as f64) {
            return None;
        }
        let i = (u.floor() as usize).min(g.nx - 2);
        let j = (v.floor() as usize).min(g.ny - 2);
        let (fu, fv) = (u - i as f64, v - j as f64);
        Some(
            (1.0 - fu) * (1.0 - fv) * self.at(i, j)
                + fu * (1.0 - fv) * self.at(i + 1, j)
                + (1.0 - fu) * fv * self.at(i, j + 1)
                + fu * fv * self.at(i + 1, j + 1),
        )
    }
}

/// Angular frequency for wavenumber k.
fn omega(k: f64, h: f64, g: f64, dispersive: bool) -> f64 {
    if dispersive {
        (g * k * (k * h).tanh()).sqrt()
    } else {
        k * (g * h).sqrt()
    }
}

fn fft_wavenumber(m: usize, n: usize, d: f64) -> f64 {
    let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    TAU * s / (n as f64 * d)
}

/// Constant-depth solution from initial elevation V(x/l) (cosh-filtered in
/// the dispersive case) and zero initial velocity, by Fourier synthesis of
/// the analytic spectrum on the grid's periodic box.
pub fn spectral_eta(src: &SourceModel, h: f64, g: f64, t: f64, l: f64, grid: &Grid2, dispersive: bool) -> Result<Field2> {
    if !(h > 0.0 && g > 0.0 && l > 0.0) {
        return Err(Error::Argument(format!("need positive depth, gravity and source scale, got {h}, {g}, {l}")));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    if grid.dx.max(grid.dy) > l / 8.0 {
        return Err(Error::Resolution(format!("grid spacing {} exceeds l/8 = {}", grid.dx.max(grid.dy), l / 8.0)));
    }
    let spec = |k1: f64, k2: f64| -> C64 {
        let k = k1.hypot(k2);
        let filt = if dispersive { 1.0 / (k * h).cosh() } else { 1.0 };
        // FT of V(x/l) is l^2 * 2 pi * V~(l k)
        src.spectrum_cartesian(l * k1, l * k2) * (TAU * l * l * filt)
    };
    let energy_beyond = nyquist_leak(&spec, grid);
    if energy_beyond > 1e-6 {
        return Err(Error::Resolution(format!("spectral energy above the grid Nyquist wavenumber: {energy_beyond:.3e}")));
    }
    let (lx, ly) = (nx as f64 * grid.dx, ny as f64 * grid.dy);
    let norm = 1.0 / (lx * ly);
    let mut a: Vec<C64> = vec![C64::new(0.0, 0.0); nx * ny];
    a.par_chunks_mut(nx).enumerate().for_each(|(mj, row)| {
        let k2 = fft_wavenumber(mj, ny, grid.dy);
        for (mi, v) in row.iter_mut().enumerate() {
            let k1 = fft_wavenumber(mi, nx, grid.dx);
            let w = omega(k1.hypot(k2), h, g, dispersive);
            *v = spec(k1, k2) * ((w * t).cos() * norm) * C64::from_polar(1.0, k1 * grid.x0 + k2 * grid.y0);
        }
    });
    ifft2(&mut a, nx, ny);
    Ok(Field2 { grid: *grid, values: a.iter().map(|c| c.re).collect() })
}

/// Fraction of spectral energy outside the grid's Nyquist box, estimated on a
/// lattice twice as wide.
fn nyquist_leak(spec: &(impl Fn(f64, f64) -> C64 + Sync), grid: &Grid2) -> f64 {
    let kx = PI / grid.dx;
    let ky = PI / grid.dy;
    let n = 256usize;
    let (hx, hy) = (4.0 * kx / n as f64, 4.0 * ky / n as f64);
    let (inside, outside) = (0..n)
        .into_par_iter()
        .map(|j| {
            let k2 = -2.0 * ky + (j as f64 + 0.5) * hy;
            let mut acc = (0.0, 0.0);
            for i in 0..n {
                let k1 = -2.0 * kx + (i as f64 + 0.5) * hx;
                let e = spec(k1, k2).norm_sqr();
                if k1.abs() <= kx && k2.abs() <= ky {
                    acc.0 += e;
                } else {
                    acc.1 += e;
                }
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    if inside + outside == 0.0 {
        0.0
    } else {
        outside / (inside + outside)
    }
}

fn ifft2(a: &mut [C64], nx: usize, ny: usize) {
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_inverse(nx);
    let fy = planner.plan_fft_inverse(ny);
    a.par_chunks_mut(nx).for_each(|row| fx.process(row));
    let mut col = vec![C64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = a[j * nx + i];
        }
        fy.process(&mut col);
        for j in 0..ny {
            a[j * nx + i] = col[j];
        }
    }
}

/// Output of the finite-difference oracle.
#[derive(Clone, Debug)]
pub struct FdResult {
    pub field: Field2,
    pub dt: f64,
    pub steps: usize,
    /// max |E - E0| / E0 of the conserved leapfrog energy.
    pub energy_drift: f64,
}

/// Cells of the border strip checked for boundary contamination.
pub const FD_GUARD_CELLS: usize = 10;

/// Leapfrog solution of eta_tt = g div(H grad eta) with eta(0) = V(x/mu),
/// eta_t(0) = 0 and zero Dirichlet data on the grid boundary.
pub fn fd_eta(bathy: &Bathymetry, src: &SourceModel, mu: f64, t: f64, grid: &Grid2, dt: Option<f64>) -> Result<FdResult> {
    let (nx, ny) = (grid.nx, grid.ny);
    let g = bathy.g;
    let hx = |i: usize, j: usize| bathy.depth(&V2::new(grid.x(i) + 0.5 * grid.dx, grid.y(j)));
    let hy = |i: usize, j: usize| bathy.depth(&V2::new(grid.x(i), grid.y(j) + 0.5 * grid.dy));
    // face depths: ex[j][i] between (i, j) and (i+1, j)
    let ex: Vec<f64> = (0..ny).flat_map(|j| (0..nx - 1).map(move |i| (i, j))).map(|(i, j)| hx(i, j)).collect::<Result<_>>()?;
    let ey: Vec<f64> = (0..ny - 1).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| hy(i, j)).collect::<Result<_>>()?;
    let hmax = ex.iter().chain(&ey).fold(0.0f64, |m, &v| m.max(v));
    let cmax = (g * hmax).sqrt();
    let dmin = grid.dx.min(grid.dy);
    let limit = 0.7 * dmin / cmax;
    let dt0 = match dt {
        Some(d) if d > limit * (1.0 + 1e-12) => {
            return Err(Error::Argument(format!("dt = {d} violates the CFL bound {limit}")));
        }
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::Argument(format!("dt must be positive, got {d}"))),
        None => limit,
    };
    let steps = (t / dt0).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let (ax, ay) = (g / (grid.dx * grid.dx), g / (grid.dy * grid.dy));
    // g div(H grad u) at interior nodes; boundary rows stay zero
    let apply = |u: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            if j == 0 || j == ny - 1 {
                row.fill(0.0);
                return;
            }
            row[0] = 0.0;
            row[nx - 1] = 0.0;
            let c = j * nx;
            for i in 1..nx - 1 {
                let u0 = u[c + i];
                let fx = ex[j * (nx - 1) + i] * (u[c + i + 1] - u0) - ex[j * (nx - 1) + i - 1] * (u0 - u[c + i - 1]);
                let fy = ey[j * nx + i] * (u[c + nx + i] - u0) - ey[(j - 1) * nx + i] * (u0 - u[c - nx + i]);
                row[i] = ax * fx + ay * fy;
            }
        });
    };
    // potential energy g sum H grad(u).grad(v) over faces
    let potential = |u: &[f64], v: &[f64]| -> f64 {
        let mut e = 0.0;
        for j in 0..ny {
            for i in 0..nx - 1 {
                let (a, b) = (j * nx + i, j * nx + i + 1);
                e += ex[j * (nx - 1) + i] * (u[b] - u[a]) * (v[b] - v[a]) * ax;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let (a, b) = (j * nx + i, (j + 1) * nx + i);
                e += ey[j * nx + i] * (u[b] - u[a]) * (v[b] - v[a]) * ay;
            }
        }
        e
    };
    let mut prev: Vec<f64> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| {
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                0.0
            } else {
                src.value([grid.x(i) / mu, grid.y(j) / mu])
            }
        })
        .collect();
    let mut lap = vec![0.0; nx * ny];
    apply(&prev, &mut lap);
    let mut cur: Vec<f64> = prev.iter().zip(&lap).map(|(u, l)| u + 0.5 * dt * dt * l).collect();
    let energy = |a: &[f64], b: &[f64]| -> f64 {
        let kin: f64 = a.iter().zip(b).map(|(x, y)| ((y - x) / dt).powi(2)).sum();
        kin + potential(a, b)
    };
    let e0 = energy(&prev, &cur);
    let mut drift = 0.0f64;
    let audit_every = (steps / 16).max(1);
    for n in 1..steps {
        apply(&cur, &mut lap);
        let dt2 = dt * dt;
        prev.par_iter_mut().zip(cur.par_iter()).zip(lap.par_iter()).for_each(|((p, &c), &l)| {
            *p = 2.0 * c - *p + dt2 * l;
        });
        std::mem::swap(&mut prev, &mut cur);
        if n % audit_every == 0 || n == steps - 1 {
            let e = energy(&prev, &cur);
            drift = drift.max(((e - e0) / e0).abs());
        }
    }
    let field = Field2 { grid: *grid, values: cur };
    check_border(&field, FD_GUARD_CELLS)?;
    Ok(FdResult { field, dt, steps, energy_drift: drift })
}

/// Richardson combination (4 fine - coarse) / 3 of two leapfrog runs, the
/// fine one on the half-spacing grid with half the time step; returned on
/// the coarse grid.
pub fn fd_eta_extrapolated(bathy: &Bathymetry, src: &SourceModel, mu: f64, t: f64, grid: &Grid2) -> Result<FdResult> {
    let cmax = max_speed(bathy, grid)?;
    let limit = 0.7 * grid.dx.min(grid.dy) / cmax;
    let steps = (t / limit).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let coarse = fd_eta(bathy, src, mu, t, grid, Some(dt))?;
    let fine_grid = Grid2::new(2 * grid.nx - 1, 2 * grid.ny - 1, grid.x0, grid.y0, grid.dx / 2.0, grid.dy / 2.0)?;
    let fine = fd_eta(bathy, src, mu, t, &fine_grid, Some(dt / 2.0))?;
    let values = (0..grid.ny)
        .flat_map(|j| (0..grid.nx).map(move |i| (i, j)))
        .map(|(i, j)| (4.0 * fine.field.at(2 * i, 2 * j) - coarse.field.at(i, j)) / 3.0)
        .collect();
    Ok(FdResult {
        field: Field2 { grid: *grid, values },
        dt: fine.dt,
        steps: fine.steps,
        energy_drift: coarse.energy_drift.max(fine.energy_drift),
    })
}

fn max_speed(bathy: &Bathymetry, grid: &Grid2) -> Result<f64> {
    let mut hmax = 0.0f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            hmax = hmax.max(bathy.depth(&grid.point(i, j))?);
        }
    }
    Ok((bathy.g * hmax).sqrt())
}

/// Validity error if the border strip carries more than 1e-3 of the peak.
pub fn check_border(f: &Field2, cells: usize) -> Result<()> {
    let g = &f.grid;
    let peak = f.max_abs();
    let mut edge = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if i < cells || j < cells || i + cells >= g.nx || j + cells >= g.ny {
                edge = edge.max(f.at(i, j).abs());
            }
        }
    }
    if edge > 1e-3 * peak {
        return Err(Error::Validity(format!(
            "wave reached the grid border: {edge:.3e} within {cells} cells against peak {peak:.3e}; enlarge the domain"
        )));
    }
    Ok(())
}

/// Error of `a` against the reference `b` restricted to a band around a front.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandError {
    pub linf_rel: f64,
    pub l2_rel: f64,
    pub peak_ratio: f64,
    pub peak_shift: f64,
    pub cells: usize,
}

/// Cells within distance `w` of the polyline through `front`.
pub fn band_mask(grid: &Grid2, front: &[V2], w: f64, closed: bool) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    let nseg = if closed { front.len() } else { front.len().saturating_sub(1) };
    for s in 0..nseg {
        let a = front[s];
        let b = front[(s + 1) % front.len()];
        let lo = V2::new(a.x.min(b.x) - w, a.y.min(b.y) - w);
        let hi = V2::new(a.x.max(b.x) + w, a.y.max(b.y) + w);
        let i0 = ((lo.x - grid.x0) / grid.dx).floor().max(0.0) as usize;
        let j0 = ((lo.y - grid.y0) / grid.dy).floor().max(0.0) as usize;
        let i1 = (((hi.x - grid.x0) / grid.dx).ceil().max(-1.0) as isize).min(grid.nx as isize - 1);
        let j1 = (((hi.y - grid.y0) / grid.dy).ceil().max(-1.0) as isize).min(grid.ny as isize - 1);
        if i1 < 0 || j1 < 0 {
            continue;
        }
        let ab = b - a;
        let l2 = ab.norm_squared();
        for j in j0..=j1 as usize {
            for i in i0..=i1 as usize {
                let p = grid.point(i, j);
                let u = if l2 > 0.0 { ((p - a).dot(&ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
                if (p - (a + ab * u)).norm() < w {
                    mask[j * grid.nx + i] = true;
                }
            }
        }
    }
    mask
}

/// Norms of a - b relative to max |b| over the masked cells.
pub fn masked_error(a: &Field2, b: &Field2, mask: &[bool]) -> Result<BandError> {
    if a.grid != b.grid || mask.len() != a.values.len() {
        return Err(Error::Argument("fields and mask must share one grid".into()));
    }
    let mut n = 0usize;
    let (mut dmax, mut bmax, mut amax) = (0.0f64, 0.0f64, 0.0f64);
    let (mut d2, mut b2) = (0.0, 0.0);
    let (mut ia, mut ib) = (0usize, 0usize);
    for (k, &m) in mask.iter().enumerate() {
        if !m {
            continue;
        }
        n += 1;
        let (x, y) = (a.values[k], b.values[k]);
        dmax = dmax.max((x - y).abs());
        d2 += (x - y) * (x - y);
        b2 += y * y;
        if x.abs() > amax {
            amax = x.abs();
            ia = k;
        }
        if y.abs() > bmax {
            bmax = y.abs();
            ib = k;
        }
    }
    if n == 0 {
        return Err(Error::Argument("front band mask is empty".into()));
    }
    let g = &a.grid;
    let pos = |k: usize| g.point(k % g.nx, k / g.nx);
    Ok(BandError {
        linf_rel: dmax / bmax,
        l2_rel: (d2 / b2).sqrt(),
        peak_ratio: amax / bmax,
        peak_shift: (pos(ia) - pos(ib)).norm(),
        cells: n,
    })
}

pub fn front_band_error(a: &Field2, b: &Field2, front: &[V2], w: f64) -> Result<BandError> {
    let mask = band_mask(&a.grid, front, w, true);
    masked_error(a, b, &mask)
}

/// Distance beyond which dispersion matters: l^3 / H^2 (any consistent unit).
pub fn dispersion_threshold(h: f64, l: f64) -> f64 {
    l * l * l / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathymetry::BathyKind;
    use crate::source::GaussCosine;

    fn gauss() -> SourceModel {
        SourceModel::gauss(GaussCosine::radial(1.0)).unwrap()
    }

    fn square(n: usize, half: f64) -> Grid2 {
        let d = 2.0 * half / n as f64;
        Grid2::new(n, n, -half, -half, d, d).unwrap()
    }

    #[test]
    fn threshold_values() {
        assert_eq!(dispersion_threshold(4.0, 40.0), 4000.0);
        assert_eq!(dispersion_threshold(4.0, 80.0), 32000.0);
        assert_eq!(dispersion_threshold(8.0, 40.0), 1000.0);
    }

    #[test]
    fn spectral_initial_data() {
        let src = gauss();
        let g = square(256, 1.0);
        let f = spectral_eta(&src, 1.0, 1.0, 0.0, 0.1, &g, false).unwrap();
        let mut worst = 0.0f64;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = src.value([g.x(i) / 0.1, g.y(j) / 0.1]);
                worst = worst.max((f.at(i, j) - v).abs());
            }
        }
        assert!(worst < 1e-12, "{worst:e}");
        // shallow-water filter is close to identity when H/l is small
        let d = spectral_eta(&src, 0.001, 1.0, 0.0, 0.1, &g, true).unwrap();
        let diff = d.values.iter().zip(&f.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-3, "{diff:e}");
    }

    #[test]
    fn spectral_even_in_time() {
        let src = gauss();
        let g = square(128, 1.5);
        let a = spectral_eta(&src, 1.0, 1.0, 0.7, 0.25, &g, true).unwrap();
        let b = spectral_eta(&src, 1.0, 1.0, -0.7, 0.25, &g, true).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn spectral_rejects_coarse_grid() {
        let src = gauss();
        let g = square(32, 2.0);
        assert!(matches!(spectral_eta(&src, 1.0, 1.0, 0.0, 0.1, &g, false), Err(Error::Resolution(_))));
    }

    #[test]
    fn fd_matches_spectral_at_constant_depth() {
        let src = gauss();
        let bathy = Bathymetry::constant(1.0, 1.0).unwrap();
        let mu = 0.1;
        let t = 0.8;
        let mut errs = vec![];
        for n in [320usize, 640] {
            let g = square(n, 1.6);
            let fd = fd_eta(&bathy, &src, mu, t, &g, None).unwrap();
            assert!(fd.energy_drift < 5e-3, "{}", fd.energy_drift);
            let sp = spectral_eta(&src, 1.0, 1.0, t, mu, &g, false).unwrap();
            let d2: f64 = fd.field.values.iter().zip(&sp.values).map(|(a, b)| (a - b).powi(2)).sum();
            let b2: f64 = sp.values.iter().map(|b| b * b).sum();
            errs.push((d2 / b2).sqrt());
        }
        assert!(errs[1] < 0.01, "{errs:?}");
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.3 && ratio < 4.7, "{errs:?}");
    }

    #[test]
    fn fd_symmetric_on_bank_axis() {
        let src = gauss();
        let bathy = Bathymetry::new(BathyKind::RadialBank { h0: 1.0, amp: 0.5, width: 0.5, center: [0.0, 0.8] }, 1.0).unwrap();
        let g = Grid2::new(129, 129, -1.6, -1.6, 0.025, 0.025).unwrap();
        let fd = fd_eta(&bathy, &src, 0.1, 0.6, &g, None).unwrap();
        let mut worst = 0.0f64;
        for j in 0..g.ny {
            for i in 0..g.nx {
                worst = worst.max((fd.field.at(i, j) - fd.field.at(g.nx - 1 - i, j)).abs());
            }
        }
        assert!(worst < 1e-10 * fd.field.max_abs(), "{worst:e}");
    }

    #[test]
    fn fd_guards() {
        let src = gauss();
        let bathy = Bathymetry::constant(1.0, 1.0).unwrap();
        let g = square(64, 1.0);
        assert!(matches!(fd_eta(&bathy, &src, 0.1, 0.2, &g, Some(0.1)), Err(Error::Argument(_))));
        assert!(matches!(fd_eta(&bathy, &src, 0.1, 1.5, &g, None), Err(Error::Validity(_))));
    }

    #[test]
    fn band_error_trivial_cases() {
        let g = square(64, 1.0);
        let mut a = Field2::zeros(g);
        for (k, v) in a.values.iter_mut().enumerate() {
            let p = g.point(k % 64, k / 64);
            *v = (-(p.norm() - 0.5).powi(2) / 0.01).exp();
        }
        let front: Vec<V2> = (0..64).map(|k| crate::unit(TAU * k as f64 / 64.0) * 0.5).collect();
        let e = front_band_error(&a, &a, &front, 0.2).unwrap();
        assert_eq!((e.linf_rel, e.l2_rel, e.peak_ratio, e.peak_shift), (0.0, 0.0, 1.0, 0.0));
        let b = Field2 { grid: g, values: a.values.iter().map(|v| 2.0 * v).collect() };
        let e = front_band_error(&a, &b, &front, 0.2).unwrap();
        assert!((e.linf_rel - 0.5).abs() < 1e-15 && (e.peak_ratio - 0.5).abs() < 1e-15 && e.peak_shift == 0.0);
        let far = vec![V2::new(10.0, 10.0), V2::new(11.0, 10.0)];
        assert!(front_band_error(&a, &b, &far, 0.2).is_err());
    }
}
