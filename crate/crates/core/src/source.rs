//! Source models V(y), their spectra, the front profile F and the focal model
//! functions g_n.
//!
//! Transform convention: V~(p) = (1/2pi) * integral V(y) exp(-i<p,y>) dy.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::GridSamples;
use crate::quad::{integrate_breaks, uniform_breaks, Tol};
use crate::special::{airy_ai, gamma, hyp1f1};

type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// How to evaluate F and G.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileMethod {
    Quadrature,
    ClosedForm,
    /// Closed form where available and well conditioned, quadrature otherwise.
    Auto,
}

#[derive(Clone, Debug)]
pub struct GaussCosine {
    pub vbar: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub theta: f64,
    pub chi: f64,
}

/// Spectrum of a tabulated source on a polar (rho, psi) lattice.
#[derive(Clone, Debug)]
pub struct SpectrumTable {
    pub samples: GridSamples,
    pub rho_max: f64,
    pub n_rho: usize,
    pub n_psi: usize,
    data: Vec<C64>,
}

#[derive(Clone, Debug)]
pub enum SourceModel {
    GaussCosine(GaussCosine),
    CustomGrid(Box<SpectrumTable>),
}

/// Coefficients of V~ = vbar/(2 sqrt(b1 b2)) exp(-alpha - beta rho^2) cosh(gamma rho + i chi).
#[derive(Clone, Copy, Debug)]
pub struct GaussCoeffs {
    pub pref: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub chi: f64,
}

impl GaussCosine {
    pub fn radial(vbar: f64) -> Self {
        GaussCosine { vbar, a1: 0.0, a2: 0.0, b1: 0.5, b2: 0.5, theta: 0.0, chi: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b1 > 0.0 && self.b2 > 0.0) {
            return Err(Error::Argument(format!("source widths must be positive, got b1={} b2={}", self.b1, self.b2)));
        }
        for v in [self.vbar, self.a1, self.a2, self.theta, self.chi] {
            if !v.is_finite() {
                return Err(Error::Argument("non-finite source parameter".into()));
            }
        }
        Ok(())
    }

    pub fn coeffs(&self, psi: f64) -> GaussCoeffs {
        let (s, c) = (psi - self.theta).sin_cos();
        let (a1, a2, b1, b2) = (self.a1, self.a2, self.b1, self.b2);
        GaussCoeffs {
            pref: self.vbar / (2.0 * (b1 * b2).sqrt()),
            alpha: (b2 * a1 * a1 + b1 * a2 * a2) / (4.0 * b1 * b2),
            beta: (b2 * c * c + b1 * s * s) / (4.0 * b1 * b2),
            gamma: (a1 * b2 * c + a2 * b1 * s) / (2.0 * b1 * b2),
            chi: self.chi,
        }
    }

    fn value(&self, y: [f64; 2]) -> f64 {
        let (s, c) = self.theta.sin_cos();
        // Y = Theta(theta) y
        let y1 = c * y[0] + s * y[1];
        let y2 = -s * y[0] + c * y[1];
        self.vbar * (self.a1 * y1 + self.a2 * y2 + self.chi).cos() * (-self.b1 * y1 * y1 - self.b2 * y2 * y2).exp()
    }
}

impl GaussCoeffs {
    fn spectrum(&self, rho: f64) -> C64 {
        self.pref * (-self.alpha - self.beta * rho * rho).exp() * C64::new(self.gamma * rho, self.chi).cosh()
    }

    /// rho beyond which |V~| < 1e-17 of its scale.
    fn cutoff(&self) -> f64 {
        let g = self.gamma.abs();
        (g + (g * g + 4.0 * self.beta * 40.0).sqrt()) / (2.0 * self.beta)
    }
}

impl SpectrumTable {
    /// Direct Fourier sums of the samples on `n_rho x n_psi` polar nodes up to
    /// the grid Nyquist wavenumber.
    pub fn build(samples: GridSamples, n_rho: usize, n_psi: usize) -> Result<Self> {
        if n_rho < 8 || n_psi < 8 || n_psi % 2 != 0 {
            return Err(Error::Argument(format!("spectrum table {n_rho}x{n_psi} too small or odd in psi")));
        }
        let rho_max = PI / samples.dx.max(samples.dy);
        let cell = samples.dx * samples.dy / (2.0 * PI);
        let pts: Vec<(f64, f64, f64)> = (0..samples.ny)
            .flat_map(|j| (0..samples.nx).map(move |i| (i, j)))
            .map(|(i, j)| (samples.x0 + i as f64 * samples.dx, samples.y0 + j as f64 * samples.dy, samples.at(i, j)))
            .filter(|p| p.2 != 0.0)
            .collect();
        let data: Vec<C64> = (0..n_rho * n_psi)
            .into_par_iter()
            .map(|k| {
                let (ir, ip) = (k / n_psi, k % n_psi);
                let rho = rho_max * ir as f64 / (n_rho - 1) as f64;
                let psi = 2.0 * PI * ip as f64 / n_psi as f64;
                let (p1, p2) = (rho * psi.cos(), rho * psi.sin());
                let mut acc = C64::new(0.0, 0.0);
                for &(x, y, v) in &pts {
                    acc += v * C64::from_polar(1.0, -(p1 * x + p2 * y));
                }
                acc * cell
            })
            .collect();
        Ok(SpectrumTable { samples, rho_max, n_rho, n_psi, data })
    }

    fn node(&self, ir: isize, ip: isize) -> C64 {
        let ip = ip.rem_euclid(self.n_psi as isize) as usize;
        if ir < 0 {
            // reflect through the origin: V~(-p) = conj V~(p)
            let ip2 = (ip + self.n_psi / 2) % self.n_psi;
            return self.data[(-ir) as usize * self.n_psi + ip2].conj();
        }
        let ir = (ir as usize).min(self.n_rho - 1);
        self.data[ir * self.n_psi + ip]
    }

    fn interp(&self, rho: f64, psi: f64) -> C64 {
        if rho >= self.rho_max {
            return C64::new(0.0, 0.0);
        }
        let hr = self.rho_max / (self.n_rho - 1) as f64;
        let hp = 2.0 * PI / self.n_psi as f64;
        let ur = rho / hr;
        let up = psi.rem_euclid(2.0 * PI) / hp;
        let (ir, fr) = (ur.floor() as isize, ur - ur.floor());
        let (ip, fp) = (up.floor() as isize, up - up.floor());
        let wr = catmull_rom(fr);
        let wp = catmull_rom(fp);
        let mut acc = C64::new(0.0, 0.0);
        for (a, wa) in wr.iter().enumerate() {
            for (b, wb) in wp.iter().enumerate() {
                acc += self.node(ir + a as isize - 1, ip + b as isize - 1) * (wa * wb);
            }
        }
        acc
    }

    fn value(&self, y: [f64; 2]) -> f64 {
        let s = &self.samples;
        let u = (y[0] - s.x0) / s.dx;
        let v = (y[1] - s.y0) / s.dy;
        if u < 0.0 || v < 0.0 || u > (s.nx - 1) as f64 || v > (s.ny - 1) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).min(s.nx - 2);
        let j = (v.floor() as usize).min(s.ny - 2);
        let (fu, fv) = (u - i as f64, v - j as f64);
        (1.0 - fu) * (1.0 - fv) * s.at(i, j) + fu * (1.0 - fv) * s.at(i + 1, j) + (1.0 - fu) * fv * s.at(i, j + 1) + fu * fv * s.at(i + 1, j + 1)
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Half-line Gaussian moment J_nu(w) = int_0^inf r^(nu-1) exp(-beta r^2 + w r) dr.
/// Also returns the size of the largest term, for a cancellation estimate.
fn gauss_moment(nu: f64, beta: f64, w: C64) -> Result<(C64, f64)> {
    let x = w * w / (4.0 * beta);
    let sb = beta.sqrt();
    let h = nu / 2.0;
    let t1 = gamma(C64::new(h, 0.0)) * hyp1f1(C64::new(h, 0.0), C64::new(0.5, 0.0), x)?;
    let t2 = (w / sb) * gamma(C64::new(h + 0.5, 0.0)) * hyp1f1(C64::new(h + 0.5, 0.0), C64::new(1.5, 0.0), x)?;
    let scale = 0.5 * beta.powf(-h);
    Ok(((t1 + t2) * scale, t1.norm().max(t2.norm()) * scale))
}

impl SourceModel {
    pub fn gauss(g: GaussCosine) -> Result<Self> {
        g.validate()?;
        Ok(SourceModel::GaussCosine(g))
    }

    pub fn custom(samples: GridSamples, n_rho: usize, n_psi: usize) -> Result<Self> {
        Ok(SourceModel::CustomGrid(Box::new(SpectrumTable::build(samples, n_rho, n_psi)?)))
    }

    /// V(y).
    pub fn value(&self, y: [f64; 2]) -> f64 {
        match self {
            SourceModel::GaussCosine(g) => g.value(y),
            SourceModel::CustomGrid(t) => t.value(y),
        }
    }

    /// V~(rho n(psi)).
    pub fn spectrum(&self, rho: f64, psi: f64) -> Result<C64> {
        if !(rho >= 0.0) {
            return Err(Error::Argument(format!("spectrum needs rho >= 0, got {rho}")));
        }
        Ok(self.spectrum_unchecked(rho, psi))
    }

    #[inline]
    pub(crate) fn spectrum_unchecked(&self, rho: f64, psi: f64) -> C64 {
        match self {
            SourceModel::GaussCosine(g) => g.coeffs(psi).spectrum(rho),
            SourceModel::CustomGrid(t) => t.interp(rho, psi),
        }
    }

    /// V~ at p in Cartesian components.
    pub fn spectrum_cartesian(&self, p1: f64, p2: f64) -> C64 {
        let rho = p1.hypot(p2);
        self.spectrum_unchecked(rho, p2.atan2(p1))
    }

    /// Radius beyond which the spectrum is negligible along direction psi.
    pub fn spectral_cutoff(&self, psi: f64) -> f64 {
        match self {
            SourceModel::GaussCosine(g) => g.coeffs(psi).cutoff(),
            SourceModel::CustomGrid(t) => t.rho_max,
        }
    }

    /// Largest cutoff over all directions.
    pub fn max_cutoff(&self) -> f64 {
        (0..64).map(|k| self.spectral_cutoff(2.0 * PI * k as f64 / 64.0)).fold(0.0, f64::max)
    }

    /// Profile F(z, psi) = (1/sqrt(2pi)) int_0^inf exp(i z rho) sqrt(rho) V~(rho n(psi)) drho.
    pub fn profile_f(&self, z: f64, psi: f64, method: ProfileMethod) -> Result<C64> {
        match (method, self) {
            (ProfileMethod::Quadrature, _) | (ProfileMethod::Auto, SourceModel::CustomGrid(_)) => self.profile_f_quad(z, psi),
            (ProfileMethod::ClosedForm, SourceModel::CustomGrid(_)) => {
                Err(Error::Argument("closed-form profile needs a gauss_cosine source".into()))
            }
            (ProfileMethod::ClosedForm, SourceModel::GaussCosine(g)) => closed_moment(g, 1.5, z, psi).map(|v| v / (2.0 * PI).sqrt()),
            (ProfileMethod::Auto, SourceModel::GaussCosine(g)) => match closed_moment(g, 1.5, z, psi) {
                Ok(v) => Ok(v / (2.0 * PI).sqrt()),
                Err(Error::Numeric { .. }) => self.profile_f_quad(z, psi),
                Err(e) => Err(e),
            },
        }
    }

    fn profile_f_quad(&self, z: f64, psi: f64) -> Result<C64> {
        // rho = y^2 / 2 removes the square-root endpoint
        let r = self.spectral_cutoff(psi);
        let ymax = (2.0 * r).sqrt();
        let panels = ((z.abs() * r / PI).ceil() as usize).clamp(8, 20_000);
        let scale = self.spectrum_unchecked(0.0, psi).norm().max(self.spectrum_unchecked(0.5 * r / 4.0, psi).norm()).max(1e-300);
        let tol = Tol { abs: 1e-14 * scale * r.max(1.0), rel: 1e-13, max_intervals: 200_000 };
        let (v, _) = integrate_breaks(
            |y: f64| {
                let rho = 0.5 * y * y;
                y * y * self.spectrum_unchecked(rho, psi) * C64::from_polar(1.0, z * rho)
            },
            &uniform_breaks(0.0, ymax, panels),
            tol,
        )?;
        Ok(v / (2.0 * PI.sqrt()))
    }

    /// G(Z, psi) = int_0^inf rho V~(rho n(psi)) exp(i Z rho) drho.
    pub fn profile_g(&self, zz: f64, psi: f64, method: ProfileMethod) -> Result<C64> {
        match (method, self) {
            (ProfileMethod::Quadrature, _) | (ProfileMethod::Auto, SourceModel::CustomGrid(_)) => self.profile_g_quad(zz, psi),
            (ProfileMethod::ClosedForm, SourceModel::CustomGrid(_)) => {
                Err(Error::Argument("closed-form profile needs a gauss_cosine source".into()))
            }
            (ProfileMethod::ClosedForm, SourceModel::GaussCosine(g)) => closed_moment(g, 2.0, zz, psi),
            (ProfileMethod::Auto, SourceModel::GaussCosine(g)) => match closed_moment(g, 2.0, zz, psi) {
                Err(Error::Numeric { .. }) => self.profile_g_quad(zz, psi),
                r => r,
            },
        }
    }

    fn profile_g_quad(&self, zz: f64, psi: f64) -> Result<C64> {
        let r = self.spectral_cutoff(psi);
        let panels = ((zz.abs() * r / PI).ceil() as usize).clamp(8, 20_000);
        let scale = self.spectrum_unchecked(0.0, psi).norm().max(1e-300);
        let tol = Tol { abs: 1e-14 * scale * r.max(1.0), rel: 1e-13, max_intervals: 200_000 };
        let (v, _) = integrate_breaks(
            |rho: f64| rho * self.spectrum_unchecked(rho, psi) * C64::from_polar(1.0, zz * rho),
            &uniform_breaks(0.0, r, panels),
            tol,
        )?;
        Ok(v)
    }

    /// Radial derivative of V~ at rho = 0 along psi.
    fn spectrum_slope0(&self, psi: f64) -> C64 {
        let h = 1e-4 * self.spectral_cutoff(psi);
        let f = |r: f64| self.spectrum_unchecked(r, psi);
        (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h)
    }

    /// Focal model function
    /// g_n^sigma(z1, z2, psi) = int dxi int rho drho V~(rho n) exp(i rho (z2 - xi z1 - sigma xi^(n+1)/(n+1)!)).
    ///
    /// n = 2 reduces the xi integral to Ai; other orders integrate G over xi.
    pub fn g_model(&self, n: u32, sigma: i32, z1: f64, z2: f64, psi: f64) -> Result<C64> {
        if !(2..=4).contains(&n) {
            return Err(Error::Argument(format!("model function order must be 2..4, got {n}")));
        }
        if sigma != 1 && sigma != -1 {
            return Err(Error::Argument(format!("sigma must be +-1, got {sigma}")));
        }
        if n == 2 {
            self.g2_airy(sigma as f64, z1, z2, psi)
        } else {
            self.g_xi_integral(n, sigma as f64, z1, z2, psi, ProfileMethod::Auto)
        }
    }

    fn g2_airy(&self, sigma: f64, z1: f64, z2: f64, psi: f64) -> Result<C64> {
        let r = self.spectral_cutoff(psi);
        let smax = r.cbrt();
        let c = 2f64.cbrt();
        // rho = s^3
        let osc = (z2.abs() * r + c * r.powf(2.0 / 3.0) * z1.abs() * r.cbrt()) / PI;
        let panels = (osc.ceil() as usize).clamp(16, 20_000);
        let scale = self.spectrum_unchecked(0.0, psi).norm().max(1e-300);
        let tol = Tol { abs: 1e-14 * scale, rel: 1e-12, max_intervals: 200_000 };
        let (v, _) = integrate_breaks(
            |s: f64| {
                let rho = s * s * s;
                let ai = airy_ai(sigma * c * s * s * z1);
                3.0 * s.powi(4) * self.spectrum_unchecked(rho, psi) * C64::from_polar(ai, z2 * rho)
            },
            &uniform_breaks(0.0, smax, panels),
            tol,
        )?;
        Ok(v * (2.0 * PI * c))
    }

    /// int dxi G(z2 - xi z1 - sigma xi^(n+1)/(n+1)!) with an asymptotic tail
    /// beyond |Z| = 400.
    pub fn g_xi_integral(&self, n: u32, sigma: f64, z1: f64, z2: f64, psi: f64, method: ProfileMethod) -> Result<C64> {
        let fact: f64 = (1..=n + 1).map(|k| k as f64).product();
        let zfun = |xi: f64| z2 - xi * z1 - sigma * xi.powi(n as i32 + 1) / fact;
        // Xi where the leading power dominates and |Z| >= 400
        let zmin = 400.0;
        let mut xi_cut = (zmin * fact).powf(1.0 / (n as f64 + 1.0));
        while zfun(xi_cut).abs() < zmin || zfun(-xi_cut).abs() < zmin {
            xi_cut *= 1.2;
        }
        let mut err: Option<Error> = None;
        let mut eval = |xi: f64| -> C64 {
            match self.profile_g(zfun(xi), psi, method) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    C64::new(0.0, 0.0)
                }
            }
        };
        let scale = self.spectrum_unchecked(0.0, psi).norm().max(1e-300);
        let tol = Tol { abs: 1e-10 * scale, rel: 1e-9, max_intervals: 20_000 };
        let (core, _) = integrate_breaks(&mut eval, &uniform_breaks(-xi_cut, xi_cut, 32), tol)?;
        if let Some(e) = err {
            return Err(e);
        }
        // tail: G(Z) ~ -V0/Z^2 - 2i V0'/Z^3, integrated with xi = Xi/u
        let v0 = self.spectrum_unchecked(0.0, psi);
        let v1 = self.spectrum_slope0(psi);
        let tail_f = |u: f64| -> C64 {
            if u <= 0.0 {
                return C64::new(0.0, 0.0);
            }
            let mut acc = C64::new(0.0, 0.0);
            for sgn in [-1.0, 1.0] {
                let xi = sgn * xi_cut / u;
                let zz = zfun(xi);
                acc += -v0 / (zz * zz) - 2.0 * I * v1 / (zz * zz * zz);
            }
            acc * (xi_cut / (u * u))
        };
        let (tail, _) = integrate_breaks(tail_f, &[0.0, 0.5, 1.0], Tol::new(1e-14 * scale, 1e-10))?;
        Ok(core + tail)
    }
}

fn closed_moment(g: &GaussCosine, nu: f64, z: f64, psi: f64) -> Result<C64> {
    let k = g.coeffs(psi);
    let ep = C64::from_polar(1.0, k.chi);
    let (jp, sp) = gauss_moment(nu, k.beta, C64::new(k.gamma, z))?;
    let (jm, sm) = gauss_moment(nu, k.beta, C64::new(-k.gamma, z))?;
    let v = (ep * jp + ep.conj() * jm) * (0.5 * k.pref * (-k.alpha).exp());
    // cancellation estimate between the two Kummer terms
    let loss = (sp / jp.norm().max(1e-300)).max(sm / jm.norm().max(1e-300));
    if loss > 1e5 {
        return Err(Error::numeric("closed-form profile is ill-conditioned here", loss * f64::EPSILON));
    }
    Ok(v)
}

/// The front profile with Maslov phase: Re[exp(-i pi/4 - i pi m/2) F].
pub fn maslov_profile(f: C64, m: i32) -> f64 {
    (maslov_phase(m) * f).re
}

/// exp(-i pi/4 - i pi m/2) with m reduced mod 4.
pub fn maslov_phase(m: i32) -> C64 {
    let base = C64::new(SQRT_2 / 2.0, -SQRT_2 / 2.0);
    let q = match m.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    };
    base * q
}

/// exp(-i pi m/2) with m reduced mod 4.
pub fn index_phase(m: i32) -> C64 {
    match m.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}
