//! Hamiltonian rays for H = C(x)|p| together with the variational columns
//! (P_psi, X_psi), integrated by fixed-step RK4.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bathymetry::{Bathymetry, SpeedJet};
use crate::error::{Error, Result};
use crate::{det2, unit, unit_perp, V2};

/// State layout: [P, X, P_psi, X_psi].
pub(crate) type State = [f64; 8];

#[derive(Clone, Copy, Debug)]
pub struct RayState {
    pub psi: f64,
    pub t: f64,
    pub p: V2,
    pub x: V2,
    pub p_psi: V2,
    pub x_psi: V2,
    /// Evaluated from the vector field, never integrated.
    pub pdot: V2,
    pub xdot: V2,
    /// Local speed C(X).
    pub c: f64,
    pub morse: u32,
    pub alive: bool,
}

impl RayState {
    /// J = det(Xdot, X_psi).
    pub fn j(&self) -> f64 {
        det2(&self.xdot, &self.x_psi)
    }
    /// J~ = det(Xdot, P_psi).
    pub fn j_tilde(&self) -> f64 {
        det2(&self.xdot, &self.p_psi)
    }

    fn dead(psi: f64, t: f64) -> Self {
        let z = V2::zeros();
        RayState { psi, t, p: z, x: z, p_psi: z, x_psi: z, pdot: z, xdot: z, c: f64::NAN, morse: 0, alive: false }
    }
}

#[derive(Clone, Debug)]
pub struct TraceOptions {
    pub n_psi: usize,
    pub t_end: f64,
    pub dt: f64,
    /// Keep every k-th RK step; `None` picks k so at most ~1024 samples are stored.
    pub store_every: Option<usize>,
    /// Rotation of the launch-angle grid.
    pub psi_offset: f64,
}

impl TraceOptions {
    pub fn new(n_psi: usize, t_end: f64, dt: f64) -> Self {
        TraceOptions { n_psi, t_end, dt, store_every: None, psi_offset: 0.0 }
    }
    /// Default step T/4096.
    pub fn with_default_dt(n_psi: usize, t_end: f64) -> Self {
        Self::new(n_psi, t_end, t_end / 4096.0)
    }
    fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// One traced ray: stored samples with their time derivatives plus the
/// times where J changed sign.
#[derive(Clone, Debug)]
pub struct Ray {
    pub psi: f64,
    pub times: Vec<f64>,
    pub(crate) states: Vec<State>,
    pub(crate) rates: Vec<State>,
    pub events: Vec<f64>,
    /// Time of the last valid sample.
    pub alive_until: f64,
    pub alive: bool,
}

#[derive(Clone, Debug)]
pub struct RayBundle {
    pub bathy: Arc<Bathymetry>,
    pub opts: TraceOptions,
    pub psis: Vec<f64>,
    pub rays: Vec<Ray>,
    pub c0: f64,
    pub warnings: Vec<String>,
}

/// Fixed-time slice of a bundle.
#[derive(Clone, Debug)]
pub struct Front {
    pub t: f64,
    pub states: Vec<RayState>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservationReport {
    /// max ||P| C(X) / C0 - 1|
    pub hamiltonian: f64,
    /// max |<P, X_psi>| / (|P| C0 t)
    pub orthogonality: f64,
    /// max |<Pdot, X_psi> - <P_psi, Xdot>| / (|Pdot||X_psi| + |P_psi||Xdot|)
    pub lagrangian: f64,
    /// max drift of (X - c) x P over (|c| + C0 T); `None` for non-radial depth
    pub angular_momentum: Option<f64>,
}

impl ConservationReport {
    pub fn worst(&self) -> f64 {
        self.hamiltonian.max(self.orthogonality).max(self.lagrangian).max(self.angular_momentum.unwrap_or(0.0))
    }
}

#[inline]
fn rhs_jet(j: &SpeedJet, p: V2) -> Result<(V2, V2)> {
    let np = p.norm();
    if np < 1e-12 {
        return Err(Error::Singularity(format!("|p| = {np:e} in the ray equations")));
    }
    Ok((p * (j.c / np), -j.grad * np))
}

#[inline]
fn var_jet(j: &SpeedJet, p: V2, dp: V2, dx: V2) -> (V2, V2) {
    let np = p.norm();
    let ph = p / np;
    let dxd = (dp - ph * ph.dot(&dp)) * (j.c / np) + ph * j.grad.dot(&dx);
    let dpd = -(j.grad * ph.dot(&dp) + j.hess * dx * np);
    (dxd, dpd)
}

/// (xdot, pdot) = ((p/|p|) C(x), -|p| grad C(x)).
pub fn hamilton_rhs(bathy: &Bathymetry, p: V2, x: V2) -> Result<(V2, V2)> {
    let j = bathy.jet(&x)?;
    rhs_jet(&j, p)
}

/// Linearised flow applied to (dp, dx); returns (dxdot, dpdot).
pub fn variational_rhs(bathy: &Bathymetry, p: V2, x: V2, dp: V2, dx: V2) -> Result<(V2, V2)> {
    let np = p.norm();
    if np < 1e-12 {
        return Err(Error::Singularity(format!("|p| = {np:e} in the variational equations")));
    }
    let j = bathy.jet(&x)?;
    Ok(var_jet(&j, p, dp, dx))
}

#[inline]
fn v(s: &State, k: usize) -> V2 {
    V2::new(s[2 * k], s[2 * k + 1])
}

pub(crate) fn field(bathy: &Bathymetry, s: &State) -> Result<State> {
    let (p, x, dp, dx) = (v(s, 0), v(s, 1), v(s, 2), v(s, 3));
    let j = bathy.jet(&x)?;
    let (xd, pd) = rhs_jet(&j, p)?;
    let (dxd, dpd) = var_jet(&j, p, dp, dx);
    Ok([pd.x, pd.y, xd.x, xd.y, dpd.x, dpd.y, dxd.x, dxd.y])
}

fn axpy(a: &State, h: f64, k: &State) -> State {
    let mut r = *a;
    for i in 0..8 {
        r[i] += h * k[i];
    }
    r
}

fn rk4(bathy: &Bathymetry, s: &State, k1: &State, h: f64) -> Result<State> {
    let k2 = field(bathy, &axpy(s, 0.5 * h, k1))?;
    let k3 = field(bathy, &axpy(s, 0.5 * h, &k2))?;
    let k4 = field(bathy, &axpy(s, h, &k3))?;
    let mut r = *s;
    for i in 0..8 {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(r)
}

pub(crate) fn initial_state(psi: f64) -> State {
    let n = unit(psi);
    let np = unit_perp(psi);
    [n.x, n.y, 0.0, 0.0, np.x, np.y, 0.0, 0.0]
}

/// Cubic Hermite interpolation of the state on [ta, tb].
pub(crate) fn hermite(ya: &State, fa: &State, yb: &State, fb: &State, ta: f64, tb: f64, t: f64) -> State {
    let h = tb - ta;
    let s = (t - ta) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut r = [0.0; 8];
    for i in 0..8 {
        r[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
    }
    r
}

/// J computed from a raw state (Xdot re-evaluated from the field).
pub(crate) fn j_of(bathy: &Bathymetry, s: &State) -> Result<f64> {
    let f = field(bathy, s)?;
    Ok(f[2] * s[7] - f[3] * s[6])
}

pub(crate) fn to_ray_state(bathy: &Bathymetry, psi: f64, t: f64, s: &State, morse: u32) -> Result<RayState> {
    let j = bathy.jet(&v(s, 1))?;
    let (xd, pd) = rhs_jet(&j, v(s, 0))?;
    Ok(RayState { psi, t, p: v(s, 0), x: v(s, 1), p_psi: v(s, 2), x_psi: v(s, 3), pdot: pd, xdot: xd, c: j.c, morse, alive: true })
}

/// Locate a sign change of J inside one RK step by bisection on the Hermite
/// interpolant.
fn locate_event(bathy: &Bathymetry, ya: &State, fa: &State, yb: &State, fb: &State, ta: f64, tb: f64, ja: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (ta, tb);
    let sa = ja.signum();
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        let jm = j_of(bathy, &hermite(ya, fa, yb, fb, ta, tb, m)).unwrap_or(0.0);
        if jm == 0.0 {
            return m;
        }
        if jm.signum() == sa {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Integrate one ray from t = 0 to exactly `t_end` with `steps` equal steps,
/// storing every `stride`-th state (and always the last).
pub fn trace_ray_steps(bathy: &Bathymetry, psi: f64, t_end: f64, steps: usize, stride: usize) -> Ray {
    let h = t_end / steps as f64;
    let stride = stride.max(1);
    let mut y = initial_state(psi);
    let mut ray = Ray { psi, times: vec![0.0], states: vec![y], rates: vec![], events: vec![], alive_until: 0.0, alive: true };
    let mut f = match field(bathy, &y) {
        Ok(f) => f,
        Err(_) => {
            ray.alive = false;
            ray.states.clear();
            ray.times.clear();
            return ray;
        }
    };
    ray.rates.push(f);
    let mut j_prev = 0.0f64;
    let ev_tol = 1e-10 * t_end;
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * h;
        let t1 = if k == steps { t_end } else { k as f64 * h };
        let step = rk4(bathy, &y, &f, t1 - t0).and_then(|yn| field(bathy, &yn).map(|fn_| (yn, fn_)));
        let (yn, fnew) = match step {
            Ok(r) => r,
            Err(_) => {
                ray.alive = false;
                break;
            }
        };
        let jn = fnew[2] * yn[7] - fnew[3] * yn[6];
        if k > 1 && j_prev != 0.0 && jn != 0.0 && j_prev.signum() != jn.signum() {
            ray.events.push(locate_event(bathy, &y, &f, &yn, &fnew, t0, t1, j_prev, ev_tol));
        }
        j_prev = jn;
        y = yn;
        f = fnew;
        ray.alive_until = t1;
        if k % stride == 0 || k == steps {
            ray.times.push(t1);
            ray.states.push(y);
            ray.rates.push(f);
        }
    }
    if !ray.alive {
        // keep the last good state even if off-stride
        if ray.times.last().copied() != Some(ray.alive_until) && ray.alive_until > 0.0 {
            ray.times.push(ray.alive_until);
            ray.states.push(y);
            ray.rates.push(f);
        }
    }
    ray
}

/// Trace a single ray to exactly `t_end` with steps no longer than `dt`.
pub fn trace_ray(bathy: &Bathymetry, psi: f64, t_end: f64, dt: f64) -> Ray {
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    trace_ray_steps(bathy, psi, t_end, steps, 1)
}

/// State of ray `psi` at time `t`, integrated from scratch.
pub fn state_at(bathy: &Bathymetry, psi: f64, t: f64, dt: f64) -> Result<RayState> {
    let steps = (t / dt - 1e-9).ceil().max(1.0) as usize;
    let ray = trace_ray_steps(bathy, psi, t, steps, steps);
    ray.state(bathy, t)
}

impl Ray {
    fn sample_index(&self, t: f64) -> Option<usize> {
        let n = self.times.len();
        if n < 2 || t < 0.0 || t > self.alive_until + 1e-12 * self.alive_until.max(1.0) {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        Some(k.clamp(1, n - 1) - 1)
    }

    pub(crate) fn raw_state(&self, t: f64) -> Option<State> {
        let k = self.sample_index(t)?;
        let t = t.min(self.times[k + 1]);
        Some(hermite(&self.states[k], &self.rates[k], &self.states[k + 1], &self.rates[k + 1], self.times[k], self.times[k + 1], t))
    }

    pub fn morse_at(&self, t: f64) -> u32 {
        self.events.iter().filter(|&&e| e < t).count() as u32
    }

    pub fn state(&self, bathy: &Bathymetry, t: f64) -> Result<RayState> {
        match self.raw_state(t) {
            Some(s) => to_ray_state(bathy, self.psi, t, &s, self.morse_at(t)),
            None => Err(Error::Domain(format!("ray psi={:.6} not alive at t={t}", self.psi))),
        }
    }

    /// The stored samples as full states.
    pub fn samples(&self, bathy: &Bathymetry) -> Vec<RayState> {
        self.times
            .iter()
            .zip(&self.states)
            .filter_map(|(&t, s)| to_ray_state(bathy, self.psi, t, s, self.morse_at(t)).ok())
            .collect()
    }
}

/// Trace the launch-angle fan psi_k = offset + 2 pi k / N.
pub fn trace_bundle(bathy: Arc<Bathymetry>, opts: &TraceOptions) -> Result<RayBundle> {
    if opts.n_psi < 16 {
        return Err(Error::Argument(format!("need at least 16 rays, got {}", opts.n_psi)));
    }
    if !(opts.t_end > 0.0 && opts.dt > 0.0) || opts.dt > opts.t_end {
        return Err(Error::Argument(format!("need 0 < dt <= T, got dt={} T={}", opts.dt, opts.t_end)));
    }
    let c0 = bathy.speed(&V2::zeros())?;
    let steps = opts.steps();
    let stride = opts.store_every.unwrap_or_else(|| steps.div_ceil(1024)).max(1);
    let psis: Vec<f64> = (0..opts.n_psi).map(|k| opts.psi_offset + TAU * k as f64 / opts.n_psi as f64).collect();
    let rays: Vec<Ray> = psis.par_iter().map(|&psi| trace_ray_steps(&bathy, psi, opts.t_end, steps, stride)).collect();
    let mut b = RayBundle { bathy, opts: opts.clone(), psis, rays, c0, warnings: vec![] };
    let rep = b.conservation_report();
    if rep.worst() > 1e-5 {
        b.warnings.push(format!("conservation defect {:.3e} exceeds 1e-5; reduce dt", rep.worst()));
    }
    let dead = b.rays.iter().filter(|r| !r.alive).count();
    if dead > 0 {
        b.warnings.push(format!("{dead} rays left the bathymetry domain"));
    }
    Ok(b)
}

impl RayBundle {
    pub fn n_psi(&self) -> usize {
        self.psis.len()
    }
    pub fn t_end(&self) -> f64 {
        self.opts.t_end
    }
    pub fn dpsi(&self) -> f64 {
        TAU / self.n_psi() as f64
    }

    /// All rays interpolated to time t.
    pub fn front_at(&self, t: f64) -> Result<Front> {
        if !(t > 0.0 && t <= self.t_end() * (1.0 + 1e-12)) {
            return Err(Error::Argument(format!("front time {t} outside (0, {}]", self.t_end())));
        }
        let states = self
            .rays
            .iter()
            .map(|r| r.state(&self.bathy, t).unwrap_or_else(|_| RayState::dead(r.psi, t)))
            .collect();
        Ok(Front { t, states })
    }

    /// Fresh single-ray trace with the bundle's step size.
    pub fn retrace(&self, psi: f64, t: f64) -> Result<RayState> {
        state_at(&self.bathy, psi, t, self.opts.dt)
    }

    pub fn retrace_ray(&self, psi: f64, t_end: f64) -> Ray {
        trace_ray(&self.bathy, psi, t_end, self.opts.dt)
    }

    pub fn conservation_report(&self) -> ConservationReport {
        let center = self.bathy.is_radial();
        let scale_l = center.map_or(0.0, |c| c.norm()) + self.c0 * self.t_end();
        let per_ray: Vec<ConservationReport> = self
            .rays
            .par_iter()
            .map(|ray| {
                let mut r = ConservationReport::default();
                let mut l0 = None;
                let mut drift: f64 = 0.0;
                for s in ray.samples(&self.bathy) {
                    r.hamiltonian = r.hamiltonian.max((s.p.norm() * s.c / self.c0 - 1.0).abs());
                    if s.t > 0.0 {
                        r.orthogonality = r.orthogonality.max(s.p.dot(&s.x_psi).abs() / (s.p.norm() * self.c0 * s.t));
                    }
                    let den = s.pdot.norm() * s.x_psi.norm() + s.p_psi.norm() * s.xdot.norm();
                    if den > 0.0 {
                        r.lagrangian = r.lagrangian.max((s.pdot.dot(&s.x_psi) - s.p_psi.dot(&s.xdot)).abs() / den);
                    }
                    if let Some(c) = center {
                        let l = det2(&(s.x - c), &s.p);
                        let l0 = *l0.get_or_insert(l);
                        drift = drift.max((l - l0).abs() / scale_l);
                    }
                }
                r.angular_momentum = center.map(|_| drift);
                r
            })
            .collect();
        per_ray.into_iter().fold(ConservationReport { angular_momentum: center.map(|_| 0.0), ..Default::default() }, |a, b| {
            ConservationReport {
                hamiltonian: a.hamiltonian.max(b.hamiltonian),
                orthogonality: a.orthogonality.max(b.orthogonality),
                lagrangian: a.lagrangian.max(b.lagrangian),
                angular_momentum: match (a.angular_momentum, b.angular_momentum) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                },
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bathymetry::BathyKind;
    use crate::M2;

    fn bank_off_axis() -> Bathymetry {
        Bathymetry::new(BathyKind::RadialBank { h0: 1.0, amp: 0.5, width: 0.5, center: [0.0, 0.8] }, 1.0).unwrap()
    }

    #[test]
    fn flat_bottom_closed_form() {
        let b = Arc::new(Bathymetry::constant(1.0, 1.0).unwrap());
        let bundle = trace_bundle(b, &TraceOptions::new(32, 2.0, 2.0 / 512.0)).unwrap();
        let f = bundle.front_at(2.0).unwrap();
        let s = f.states[0];
        assert!((s.x - V2::new(2.0, 0.0)).norm() < 1e-12);
        assert!((s.p - V2::new(1.0, 0.0)).norm() < 1e-12);
        assert!((s.x_psi - V2::new(0.0, 2.0)).norm() < 1e-12);
        assert!((s.j() - 2.0).abs() < 1e-12 && (s.j_tilde() - 1.0).abs() < 1e-12);
        let f = bundle.front_at(0.77).unwrap();
        for s in &f.states {
            assert!((s.x.norm() - 0.77).abs() < 1e-9);
        }
        let r = bundle.conservation_report();
        assert!(r.worst() < 1e-12, "{r:?}");
        assert!(bundle.front_at(0.0).is_err() && bundle.front_at(2.5).is_err());
    }

    #[test]
    fn rhs_examples() {
        let c = Bathymetry::constant(4.0, 1.0).unwrap();
        let (xd, pd) = hamilton_rhs(&c, V2::new(3.0, 4.0), V2::new(1.0, 1.0)).unwrap();
        assert!((xd - V2::new(0.6, 0.8) * 2.0).norm() < 1e-15 && pd == V2::zeros());
        let b = Bathymetry::new(BathyKind::RadialBank { h0: 1.0, amp: 0.5, width: 1.0, center: [0.0, 0.0] }, 1.0).unwrap();
        let (_, pd) = hamilton_rhs(&b, V2::new(0.0, 1.0), V2::new(0.0, -0.7)).unwrap();
        assert!(pd.x.abs() < 1e-16 && pd.y != 0.0);
        assert!(hamilton_rhs(&b, V2::zeros(), V2::zeros()).is_err());
    }

    #[test]
    fn hpp_annihilates_p() {
        let b = bank_off_axis();
        let p = V2::new(0.3, -1.1);
        let x = V2::new(0.2, 0.5);
        // dx = 0, dp = p: H_pp p = 0, only the grad C coupling survives
        let (dxd, _) = variational_rhs(&b, p, x, p, V2::zeros()).unwrap();
        assert!(dxd.norm() < 1e-15);
        let c = Bathymetry::constant(1.0, 1.0).unwrap();
        let (dxd, dpd) = variational_rhs(&c, V2::new(2.0, 0.0), x, V2::new(1.0, 1.0), V2::new(5.0, 5.0)).unwrap();
        assert!((dxd - V2::new(0.0, 0.5)).norm() < 1e-15 && dpd == V2::zeros());
    }

    #[test]
    fn variational_matches_fd_jacobian() {
        let b = bank_off_axis();
        let p = V2::new(0.6, 0.9);
        let x = V2::new(-0.3, 0.4);
        let (dp, dx) = (V2::new(0.2, -0.5), V2::new(0.7, 0.1));
        let (dxd, dpd) = variational_rhs(&b, p, x, dp, dx).unwrap();
        let h = 1e-6;
        let (xa, pa) = hamilton_rhs(&b, p + dp * h, x + dx * h).unwrap();
        let (xb, pb) = hamilton_rhs(&b, p - dp * h, x - dx * h).unwrap();
        let fx = (xa - xb) / (2.0 * h);
        let fp = (pa - pb) / (2.0 * h);
        assert!((fx - dxd).norm() < 1e-5 * dxd.norm());
        assert!((fp - dpd).norm() < 1e-5 * dpd.norm());
        // H_xp is the transpose of H_px: the linearised flow is Hamiltonian
        let j = b.jet(&x).unwrap();
        let hpx = (p / p.norm()) * j.grad.transpose();
        let _: M2 = hpx.transpose();
    }

    #[test]
    fn symmetric_axis_ray_stays_on_axis() {
        let b = Arc::new(bank_off_axis());
        let ray = trace_ray(&b, std::f64::consts::FRAC_PI_2, 2.0, 2.0 / 4096.0);
        for s in ray.samples(&b) {
            assert!(s.x.x.abs() < 1e-9);
        }
    }

    #[test]
    fn j_positive_early_and_morse_monotone() {
        let b = Arc::new(bank_off_axis());
        let opts = TraceOptions::new(64, 2.5, 2.5 / 4096.0);
        let bundle = trace_bundle(b, &opts).unwrap();
        let f = bundle.front_at(10.0 * opts.dt).unwrap();
        assert!(f.states.iter().all(|s| s.j() > 0.0));
        for r in &bundle.rays {
            let mut last = 0;
            for k in 0..50 {
                let m = r.morse_at(2.5 * k as f64 / 49.0);
                assert!(m >= last);
                last = m;
            }
        }
        assert!(bundle.rays.iter().any(|r| !r.events.is_empty()), "bank should focus rays by t=2.5");
    }

    #[test]
    fn rk4_order() {
        let b = Bathymetry::new(BathyKind::LinearSlope { h0: 1.0, slope: [0.3, 0.1] }, 1.0).unwrap();
        let err = |steps: usize| {
            let r = trace_ray_steps(&b, 0.4, 1.5, steps, 1);
            let s = r.state(&b, 1.5).unwrap();
            (s.p.norm() * s.c - 1.0).abs()
        };
        let (e1, e2) = (err(64), err(128));
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "{e1:e} {e2:e} {ratio}");
    }
}
