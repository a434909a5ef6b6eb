//! Pipeline stages behind the subcommands.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use mfront::geometry::{critical_time, prepare_focal};
use mfront::io::{fmt_f, write_scene_cache, Csv};
use mfront::oracles::{band_mask, dispersion_threshold, fd_eta, fd_eta_extrapolated, masked_error, spectral_eta};
use mfront::raytrace::trace_bundle;
use mfront::source::maslov_profile;
use mfront::{Bathymetry, Error, Field2, Grid2, RayBundle, Result, Scene, SceneOptions, SourceModel, TraceOptions, V2};

use crate::config::{OracleKind, ScenarioConfig};
use crate::meta::RunMeta;

pub struct Ctx<'a> {
    pub cfg: &'a ScenarioConfig,
    pub out: &'a Path,
    pub dimensional: bool,
    pub meta: &'a mut RunMeta,
}

pub fn threshold_value(h: f64, l: f64) -> Result<f64> {
    if !(h > 0.0 && l > 0.0) {
        return Err(Error::Argument(format!("depth and length must be positive, got {h}, {l}")));
    }
    Ok(dispersion_threshold(h, l))
}

struct Setup {
    bathy: Arc<Bathymetry>,
    src: Arc<SourceModel>,
    bundle: Arc<RayBundle>,
}

impl Ctx<'_> {
    fn len_scale(&self) -> f64 {
        if self.dimensional {
            self.cfg.scale_length
        } else {
            1.0
        }
    }

    fn time_scale(&self, bathy: &Bathymetry) -> Result<f64> {
        Ok(if self.dimensional { self.cfg.scale_length / bathy.speed(&V2::zeros())? } else { 1.0 })
    }

    /// Output coordinates: undo the source-centring translation, then scale.
    fn xo(&self, x: &V2) -> [String; 2] {
        let l = self.len_scale();
        [fmt_f((x.x + self.cfg.center[0]) * l), fmt_f((x.y + self.cfg.center[1]) * l)]
    }

    fn grid(&self) -> Result<Grid2> {
        let g = &self.cfg.grid;
        let [cx, cy] = self.cfg.center;
        Grid2::covering(g.nx, g.ny, [g.x0 - cx, g.y0 - cy, g.x1 - cx, g.y1 - cy])
    }

    fn scene_options(&self) -> SceneOptions {
        SceneOptions { band_factor: self.cfg.band_factor, method: self.cfg.method, ..SceneOptions::default() }
    }

    fn setup(&mut self) -> Result<Setup> {
        let t0 = Instant::now();
        let bathy = self.cfg.build_bathymetry()?;
        let src = self.cfg.build_source()?;
        self.meta.time("setup", t0.elapsed().as_secs_f64());
        let t0 = Instant::now();
        let bundle = Arc::new(trace_bundle(bathy.clone(), &TraceOptions::new(self.cfg.n_psi, self.cfg.t_end, self.cfg.dt))?);
        self.meta.time("trace", t0.elapsed().as_secs_f64());
        self.meta.conservation(&bundle.conservation_report());
        self.meta.warnings(&bundle.warnings);
        Ok(Setup { bathy, src, bundle })
    }

    fn write(&mut self, name: &str, csv: &Csv) -> Result<()> {
        csv.write(&self.out.join(name))?;
        self.meta.set("output", name);
        Ok(())
    }

    fn times(&mut self) -> Vec<f64> {
        for (k, t) in self.cfg.times.iter().enumerate() {
            self.meta.set(format!("times.{k}"), fmt_f(*t));
        }
        self.cfg.times.clone()
    }

    pub fn trace(&mut self) -> Result<()> {
        let s = self.setup()?;
        let ts = self.time_scale(&s.bathy)?;
        let mut csv = Csv::new(&["psi", "t", "x1", "x2", "p1", "p2", "j", "j_tilde", "morse"]);
        let t_end = self.cfg.t_end;
        for ray in &s.bundle.rays {
            for k in 1..=64 {
                let t = t_end * k as f64 / 64.0;
                let Ok(st) = ray.state(&s.bathy, t) else { break };
                let [x1, x2] = self.xo(&st.x);
                let pl = 1.0 / self.len_scale();
                csv.row([fmt_f(ray.psi), fmt_f(t * ts), x1, x2, fmt_f(st.p.x * pl), fmt_f(st.p.y * pl), fmt_f(st.j()), fmt_f(st.j_tilde()), st.morse.to_string()]);
            }
        }
        self.write("rays.csv", &csv)
    }

    pub fn front(&mut self) -> Result<()> {
        let s = self.setup()?;
        let ts = self.time_scale(&s.bathy)?;
        let mut csv = Csv::new(&["t", "psi", "x1", "x2", "j", "j_tilde", "morse", "alive"]);
        for t in self.times() {
            let f = s.bundle.front_at(t)?;
            for st in &f.states {
                let [x1, x2] = self.xo(&st.x);
                csv.row([fmt_f(t * ts), fmt_f(st.psi), x1, x2, fmt_f(st.j()), fmt_f(st.j_tilde()), st.morse.to_string(), (st.alive as u8).to_string()]);
            }
        }
        self.write("front.csv", &csv)
    }

    pub fn focal(&mut self) -> Result<()> {
        let s = self.setup()?;
        let ts = self.time_scale(&s.bathy)?;
        let t_cr = critical_time(&s.bundle)?;
        self.meta.set("t_cr", if t_cr.is_finite() { fmt_f(t_cr * ts) } else { "inf".into() });
        let mut csv = Csv::new(&["t", "psi", "x1", "x2", "n", "sigma", "mbold", "j_tilde", "jn", "c_f", "fit_residual", "degenerate"]);
        let times = self.times();
        let mut last = vec![];
        for &t in &times {
            let t0 = Instant::now();
            let focal = prepare_focal(&s.bundle, t)?;
            self.meta.time(&format!("focal.{t}"), t0.elapsed().as_secs_f64());
            for f in &focal {
                let [x1, x2] = self.xo(&f.x());
                csv.row([
                    fmt_f(t * ts),
                    fmt_f(f.psi),
                    x1,
                    x2,
                    f.n.map_or("0".into(), |n| n.to_string()),
                    f.sigma.to_string(),
                    f.mbold.map_or("nan".into(), |m| m.to_string()),
                    fmt_f(f.j_tilde),
                    fmt_f(f.jn),
                    fmt_f(f.c_f),
                    fmt_f(f.fit_residual),
                    (f.degenerate as u8).to_string(),
                ]);
            }
            last = focal;
        }
        self.write("focal.csv", &csv)?;
        std::fs::write(self.out.join("scene.mfront"), write_scene_cache(&s.bundle, &last))?;
        self.meta.set("output", "scene.mfront");
        Ok(())
    }

    fn field_rows(&self, csv: &mut Csv, grid: &Grid2, vals: &[mfront::FieldValue]) {
        for (k, v) in vals.iter().enumerate() {
            let [x1, x2] = self.xo(&grid.point(k % grid.nx, k / grid.nx));
            csv.row([x1, x2, fmt_f(v.eta), v.n_branches.to_string(), v.n_focal.to_string(), (v.inside_band as u8).to_string()]);
        }
    }

    pub fn field(&mut self) -> Result<()> {
        let s = self.setup()?;
        let grid = self.grid()?;
        let pts = grid.points();
        for (k, t) in self.times().into_iter().enumerate() {
            let t0 = Instant::now();
            let sc = Scene::prepare(s.bundle.clone(), s.src.clone(), self.cfg.mu, t, self.scene_options())?;
            self.meta.warnings(&sc.warnings);
            self.meta.set(format!("band.{k}"), fmt_f(sc.band * self.len_scale()));
            self.meta.set(format!("focal_points.{k}"), sc.focal.len());
            let vals = sc.eta_many(&pts)?;
            self.meta.time(&format!("field.{k}"), t0.elapsed().as_secs_f64());
            let mut csv = Csv::new(&["x1", "x2", "eta", "n_branches", "n_focal_contribs", "inside_band"]);
            self.field_rows(&mut csv, &grid, &vals);
            self.write(&format!("field_{k}.csv"), &csv)?;
        }
        Ok(())
    }

    fn oracle_kind(&self) -> OracleKind {
        match self.cfg.oracle {
            OracleKind::Auto if self.cfg.is_constant_depth() => OracleKind::Spectral,
            OracleKind::Auto => OracleKind::Fd,
            k => k,
        }
    }

    fn oracle_tag(&self, kind: OracleKind) -> &'static str {
        match kind {
            OracleKind::Spectral if self.cfg.dispersive => "spectral_disp",
            OracleKind::Spectral => "spectral_nondisp",
            _ => "fd",
        }
    }

    fn run_oracle(&mut self, s: &Setup, kind: OracleKind, t: f64, grid: &Grid2) -> Result<Field2> {
        let t0 = Instant::now();
        let f = match kind {
            OracleKind::Spectral => {
                let h = match self.cfg.bathy {
                    crate::config::BathySpec::Constant { h0 } => h0,
                    _ => return Err(Error::Validity("the spectral oracle needs bathy.kind = constant".into())),
                };
                spectral_eta(&s.src, h, self.cfg.g, t, self.cfg.mu, grid, self.cfg.dispersive)?
            }
            _ => {
                let r = if self.cfg.richardson {
                    fd_eta_extrapolated(&s.bathy, &s.src, self.cfg.mu, t, grid)?
                } else {
                    fd_eta(&s.bathy, &s.src, self.cfg.mu, t, grid, self.cfg.oracle_dt)?
                };
                self.meta.set(format!("fd.{t}.steps"), r.steps);
                self.meta.set(format!("fd.{t}.energy_drift"), fmt_f(r.energy_drift));
                r.field
            }
        };
        self.meta.time(&format!("oracle.{t}"), t0.elapsed().as_secs_f64());
        Ok(f)
    }

    fn oracle(&mut self, kind: OracleKind) -> Result<()> {
        let s = self.setup()?;
        let grid = self.grid()?;
        let tag = self.oracle_tag(kind);
        for (k, t) in self.times().into_iter().enumerate() {
            let f = self.run_oracle(&s, kind, t, &grid)?;
            let mut csv = Csv::new(&["x1", "x2", "eta", "source"]);
            for (i, v) in f.values.iter().enumerate() {
                let [x1, x2] = self.xo(&grid.point(i % grid.nx, i / grid.nx));
                csv.row([x1, x2, fmt_f(*v), tag.to_string()]);
            }
            self.write(&format!("oracle_{k}.csv"), &csv)?;
        }
        Ok(())
    }

    pub fn oracle_fd(&mut self) -> Result<()> {
        self.oracle(OracleKind::Fd)
    }

    pub fn oracle_spectral(&mut self) -> Result<()> {
        if !self.cfg.is_constant_depth() {
            return Err(Error::Validity("the spectral oracle needs bathy.kind = constant".into()));
        }
        self.oracle(OracleKind::Spectral)
    }

    pub fn compare(&mut self) -> Result<()> {
        let s = self.setup()?;
        let grid = self.grid()?;
        let kind = self.oracle_kind();
        let tag = self.oracle_tag(kind);
        let mut csv = Csv::new(&["t", "oracle", "mask_width", "linf_rel", "l2_rel", "peak_ratio", "peak_shift", "cells"]);
        let ts = self.time_scale(&s.bathy)?;
        for t in self.times() {
            let sc = Scene::prepare(s.bundle.clone(), s.src.clone(), self.cfg.mu, t, self.scene_options())?;
            let front: Vec<V2> = sc.front.states.iter().filter(|st| st.alive).map(|st| st.x).collect();
            let w = self.cfg.mask_factor * sc.band;
            let mut mask = band_mask(&grid, &front, w, true);
            let pts = grid.points();
            // the asymptotics are singular at the source centre
            for (m, p) in mask.iter_mut().zip(&pts) {
                *m &= p.norm() > 3.0 * self.cfg.mu;
            }
            let idx: Vec<usize> = (0..pts.len()).filter(|&k| mask[k]).collect();
            let sel: Vec<V2> = idx.iter().map(|&k| pts[k]).collect();
            let mut asy = Field2::zeros(grid);
            for (&k, v) in idx.iter().zip(sc.eta_many(&sel)?) {
                asy.values[k] = v.eta;
            }
            let reference = self.run_oracle(&s, kind, t, &grid)?;
            let e = masked_error(&asy, &reference, &mask)?;
            csv.row([
                fmt_f(t * ts),
                tag.to_string(),
                fmt_f(w * self.len_scale()),
                fmt_f(e.linf_rel),
                fmt_f(e.l2_rel),
                fmt_f(e.peak_ratio),
                fmt_f(e.peak_shift * self.len_scale()),
                e.cells.to_string(),
            ]);
        }
        self.write("metrics.csv", &csv)
    }

    pub fn profile(&mut self) -> Result<()> {
        let src = self.cfg.build_source()?;
        let (a, b, n) = self.cfg.profile_z;
        let mut csv = Csv::new(&["z", "F_re", "F_im", "eta_profile"]);
        for k in 0..n {
            let z = a + (b - a) * k as f64 / (n - 1) as f64;
            let f = src.profile_f(z, self.cfg.profile_psi, self.cfg.method)?;
            csv.row([fmt_f(z), fmt_f(f.re), fmt_f(f.im), fmt_f(maslov_profile(f, self.cfg.profile_m))]);
        }
        self.write("profile.csv", &csv)
    }

    pub fn threshold(&mut self) -> Result<()> {
        let (h, l) = self.cfg.threshold;
        let v = threshold_value(h, l)?;
        println!("l^3/H^2 = {v}");
        self.meta.set("threshold", fmt_f(v));
        Ok(())
    }
}
