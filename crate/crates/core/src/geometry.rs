//! Focal points, their classification and Maslov/Morse index bookkeeping.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raytrace::{Front, Ray, RayBundle, RayState};
use crate::solve::{brent, golden_min, lstsq};
use crate::{det2, V2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jacobians {
    /// det(Xdot, X_psi)
    pub j: f64,
    /// det(Xdot, P_psi)
    pub j_tilde: f64,
    /// det((Xdot_1, X_1psi), (Pdot_2, P_2psi))
    pub j10: f64,
    /// det((Pdot_1, P_1psi), (Xdot_2, X_2psi))
    pub j02: f64,
}

pub fn jacobians(s: &RayState) -> Jacobians {
    Jacobians {
        j: det2(&s.xdot, &s.x_psi),
        j_tilde: det2(&s.xdot, &s.p_psi),
        j10: s.xdot.x * s.p_psi.y - s.x_psi.x * s.pdot.y,
        j02: s.pdot.x * s.x_psi.y - s.p_psi.x * s.xdot.y,
    }
}

/// Orthonormal frame attached to a focal point: e2 along Xdot_F, e1 = e2
/// turned clockwise, so (e1, e2) is right-handed.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub e1: V2,
    pub e2: V2,
}

impl Frame {
    pub fn along(xdot: V2) -> Frame {
        let e2 = xdot.normalize();
        Frame { e1: V2::new(e2.y, -e2.x), e2 }
    }
    /// Components in the rotated frame.
    #[inline]
    pub fn rot(&self, v: &V2) -> V2 {
        V2::new(v.dot(&self.e1), v.dot(&self.e2))
    }
    #[inline]
    pub fn unrot(&self, v: &V2) -> V2 {
        self.e1 * v.x + self.e2 * v.y
    }
}

/// J'^(0,2) = Pdot'_1 X'_2psi - Xdot'_2 P'_1psi in the frame.
pub fn rotated_j02(f: &Frame, s: &RayState) -> f64 {
    let pd = f.rot(&s.pdot);
    let xp = f.rot(&s.x_psi);
    let xd = f.rot(&s.xdot);
    let pp = f.rot(&s.p_psi);
    pd.x * xp.y - xd.y * pp.x
}

/// J'^(1,0) = Xdot'_1 P'_2psi - X'_1psi Pdot'_2 in the frame.
pub fn rotated_j10(f: &Frame, s: &RayState) -> f64 {
    let pd = f.rot(&s.pdot);
    let xp = f.rot(&s.x_psi);
    let xd = f.rot(&s.xdot);
    let pp = f.rot(&s.p_psi);
    xd.x * pp.y - xp.x * pd.y
}

#[derive(Clone, Debug)]
pub struct FocalPointInfo {
    pub psi: f64,
    pub t: f64,
    pub state: RayState,
    pub c_f: f64,
    pub c0: f64,
    pub j_tilde: f64,
    /// Degeneracy order; `None` until classified.
    pub n: Option<u32>,
    pub jn: f64,
    pub sigma: i32,
    pub mbold: Option<i32>,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    /// det(Xdot_F, X^(k)) for k = 2, 3, 4.
    pub jk: [f64; 3],
    /// Relative mismatch between fitted and predicted normal-form coefficients.
    pub fit_residual: f64,
    pub degenerate: bool,
}

impl FocalPointInfo {
    pub fn from_state(s: RayState, c0: f64) -> Self {
        let jt = s.j_tilde();
        FocalPointInfo {
            psi: s.psi,
            t: s.t,
            state: s,
            c_f: s.c,
            c0,
            j_tilde: jt,
            n: None,
            jn: f64::NAN,
            sigma: 0,
            mbold: None,
            a: f64::NAN,
            b: f64::NAN,
            q: f64::NAN,
            jk: [f64::NAN; 3],
            fit_residual: f64::NAN,
            degenerate: jt.abs() < 1e-10,
        }
    }

    pub fn x(&self) -> V2 {
        self.state.x
    }
    pub fn p(&self) -> V2 {
        self.state.p
    }
    pub fn frame(&self) -> Frame {
        Frame::along(self.state.xdot)
    }

    /// Angular half-width of the focal neighbourhood for parameter mu.
    pub fn r_psi(&self, mu: f64) -> f64 {
        let n = self.n.unwrap_or(2) as f64;
        3.0 * (mu * self.c_f * self.c_f / (self.j_tilde * self.jn).abs()).powf(1.0 / (n + 1.0))
    }
}

/// Contiguous arc of the front between focal angles (or dead rays).
#[derive(Clone, Debug)]
pub struct FrontBranch {
    /// Indices into the bundle's rays, in increasing psi (may wrap).
    pub rays: Vec<usize>,
    pub psi_start: f64,
    pub psi_end: f64,
    pub morse: u32,
    pub j_sign: i32,
    /// Focal point (index into the focal list) bounding each end.
    pub left_focal: Option<usize>,
    pub right_focal: Option<usize>,
    /// True when the branch is the whole closed front.
    pub closed: bool,
}

fn state_or_err(bundle: &RayBundle, psi: f64, t: f64) -> Result<RayState> {
    bundle.retrace(psi, t)
}

/// Focal events of every traced ray: (psi_k, t) with J(psi_k, t) = 0, each
/// polished by Newton steps on t using dJ/dt = (C^2/C0) J~.
pub fn find_focal_points(bundle: &RayBundle) -> Result<Vec<FocalPointInfo>> {
    let c0 = bundle.c0;
    let cands: Vec<(f64, f64)> = bundle.rays.iter().flat_map(|r| r.events.iter().map(move |&t| (r.psi, t))).collect();
    let mut out: Vec<FocalPointInfo> = cands
        .par_iter()
        .filter_map(|&(psi, t0)| {
            let mut t = t0;
            let mut s = state_or_err(bundle, psi, t).ok()?;
            for _ in 0..3 {
                let djdt = s.c * s.c / c0 * s.j_tilde();
                if djdt == 0.0 {
                    break;
                }
                let tn = t - s.j() / djdt;
                if (tn - t).abs() > 1e-3 * bundle.t_end() {
                    break;
                }
                t = tn;
                s = state_or_err(bundle, psi, t).ok()?;
            }
            Some(FocalPointInfo::from_state(s, c0))
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.psi.total_cmp(&b.psi)));
    out.dedup_by(|a, b| (a.t - b.t).abs() < 1e-9 * bundle.t_end() && (a.psi - b.psi).abs() < 1e-12);
    Ok(out)
}

/// Focal points on the front at time t: sign changes of J along psi refined
/// with Brent on re-traced rays.
pub fn focal_points_at(bundle: &RayBundle, t: f64) -> Result<Vec<FocalPointInfo>> {
    let front = bundle.front_at(t)?;
    focal_points_on(bundle, &front)
}

pub fn focal_points_on(bundle: &RayBundle, front: &Front) -> Result<Vec<FocalPointInfo>> {
    let n = front.states.len();
    let t = front.t;
    let mut brackets = Vec::new();
    for i in 0..n {
        let k = (i + 1) % n;
        let (a, b) = (&front.states[i], &front.states[k]);
        if !(a.alive && b.alive) {
            continue;
        }
        let (ja, jb) = (a.j(), b.j());
        if ja.signum() != jb.signum() || ja == 0.0 {
            let pb = if k == 0 { b.psi + TAU } else { b.psi };
            brackets.push((a.psi, pb));
        }
    }
    let c0 = bundle.c0;
    let found: Vec<Result<FocalPointInfo>> = brackets
        .par_iter()
        .map(|&(pa, pb)| {
            let psi = brent(|p| Ok(state_or_err(bundle, p, t)?.j()), pa, pb, 1e-13, 200)?;
            let s = state_or_err(bundle, psi, t)?;
            Ok(FocalPointInfo::from_state(s, c0))
        })
        .collect();
    found.into_iter().collect()
}

const D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
const D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
const D3: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Degeneracy order, orientation and normal-form coefficients of a focal point.
pub fn classify_focal(bundle: &RayBundle, fp: &FocalPointInfo) -> Result<FocalPointInfo> {
    let mut out = fp.clone();
    if fp.degenerate {
        return Err(Error::Degenerate(format!("focal point at psi={:.6} has J~ = {:e}", fp.psi, fp.j_tilde)));
    }
    let h = bundle.dpsi() / 16.0;
    let t = fp.t;
    let xpsi: Vec<V2> = (-3i32..=3)
        .into_par_iter()
        .map(|j| state_or_err(bundle, fp.psi + j as f64 * h, t).map(|s| s.x_psi))
        .collect::<Result<Vec<_>>>()?;
    let comb = |w: &[f64], off: usize, p: i32| -> V2 {
        w.iter().enumerate().fold(V2::zeros(), |acc, (i, c)| acc + xpsi[off + i] * *c) / h.powi(p)
    };
    let x2 = comb(&D1, 1, 1);
    let x3 = comb(&D2, 1, 2);
    let x4 = comb(&D3, 0, 3);
    let xd = fp.state.xdot;
    let jk = [det2(&xd, &x2), det2(&xd, &x3), det2(&xd, &x4)];
    out.jk = jk;
    // noise floors grow with the order of the difference quotient
    let l = fp.c0 * t;
    let scale = fp.c_f * l;
    // a derivative counts if it dominates the next one over a few ray spacings
    let dp = bundle.dpsi();
    let mut order = None;
    for (k, v) in jk.iter().enumerate() {
        let floor = 1e-9 * scale / h.powi(k as i32 + 1);
        let next = jk.get(k + 1).map_or(0.0, |w| 1e-3 * w.abs() * dp);
        if v.abs() > next.max(floor).max(1e-6 * scale) {
            order = Some(k as u32 + 2);
            break;
        }
    }
    let n = order.ok_or_else(|| Error::Degenerate(format!("no derivative order <= 4 significant at psi={:.6}", fp.psi)))?;
    let jn = jk[(n - 2) as usize];
    let (cf, c0, jt) = (fp.c_f, fp.c0, fp.j_tilde);
    out.n = Some(n);
    out.jn = jn;
    out.sigma = if jt * jn > 0.0 { 1 } else { -1 };
    out.a = -jn / (factorial(n) * cf);
    out.b = -(n as f64) * jt * jn / (factorial(n + 1) * cf * c0);
    out.q = -c0 * factorial(n - 1) / jn;
    out.fit_residual = normal_form_residual(bundle, &out, h)?;
    Ok(out)
}

/// Fit x'_1 ~ a y^n + c y^(n+1), x'_2 ~ b y^(n+1) + d y^(n+2) on nearby front
/// samples; returns the larger relative coefficient mismatch.
fn normal_form_residual(bundle: &RayBundle, fp: &FocalPointInfo, h: f64) -> Result<f64> {
    let n = fp.n.unwrap_or(2) as i32;
    let frame = fp.frame();
    let ys: Vec<f64> = [2.0, 4.0, 8.0, 16.0].iter().flat_map(|&k| [-k * h, k * h]).collect();
    let xs: Vec<V2> = ys
        .par_iter()
        .map(|&y| state_or_err(bundle, fp.psi + y, fp.t).map(|s| frame.rot(&(s.x - fp.x()))))
        .collect::<Result<Vec<_>>>()?;
    let r1: Vec<Vec<f64>> = ys.iter().map(|&y| vec![y.powi(n), y.powi(n + 1)]).collect();
    let r2: Vec<Vec<f64>> = ys.iter().map(|&y| vec![y.powi(n + 1), y.powi(n + 2)]).collect();
    let c1 = lstsq(&r1, &xs.iter().map(|v| v.x).collect::<Vec<_>>()).ok_or_else(|| Error::numeric("normal-form fit failed", f64::NAN))?;
    let c2 = lstsq(&r2, &xs.iter().map(|v| v.y).collect::<Vec<_>>()).ok_or_else(|| Error::numeric("normal-form fit failed", f64::NAN))?;
    Ok(((c1[0] - fp.a) / fp.a).abs().max(((c2[0] - fp.b) / fp.b).abs()))
}

/// Index change when crossing a focal point of order n in the
/// direction of increasing psi.
pub fn index_jump(n: u32, sigma: i32) -> i32 {
    if n % 2 == 1 {
        0
    } else {
        sigma.signum()
    }
}

/// Index change from `left` to `right` across `fp`, cross-checked against the
/// sign rule: +1 when J on the destination arc has the sign of J~.
pub fn front_index_jump(left: &FrontBranch, fp: &FocalPointInfo, right: &FrontBranch) -> Result<i32> {
    let n = fp.n.ok_or_else(|| Error::Argument("focal point is not classified".into()))?;
    let dm = index_jump(n, fp.sigma);
    let sign_rule = if n % 2 == 1 {
        0
    } else if right.j_sign == (fp.j_tilde.signum() as i32) {
        1
    } else {
        -1
    };
    if n % 2 == 0 && left.j_sign == right.j_sign {
        return Err(Error::Consistency(format!("J keeps its sign across an even-order focal point at psi={:.6}", fp.psi)));
    }
    if dm != sign_rule {
        return Err(Error::Consistency(format!("index jump rules disagree at psi={:.6}: {dm} vs {sign_rule}", fp.psi)));
    }
    Ok(dm)
}

/// Chart index: Morse index of the regular neighbour (psi_F, t_F +- delta) whose
/// J has the sign of the rotated chart Jacobian J'^(0,2).
pub fn focal_chart_index(bundle: &RayBundle, fp: &FocalPointInfo) -> Result<i32> {
    let chart = rotated_j02(&fp.frame(), &fp.state);
    if chart.abs() < 1e-12 {
        let j10 = rotated_j10(&fp.frame(), &fp.state);
        return Err(Error::Consistency(format!("both rotated chart Jacobians vanish ({chart:e}, {j10:e})")));
    }
    let delta = 1e-3 * bundle.t_end();
    for d in [delta, -delta, 4.0 * delta, -4.0 * delta] {
        let te = fp.t + d;
        if te <= 0.0 {
            continue;
        }
        let ray = bundle.retrace_ray(fp.psi, te);
        let s = ray.state(&bundle.bathy, te)?;
        if s.j().signum() == chart.signum() && s.j() != 0.0 {
            return Ok(ray.morse_at(te) as i32);
        }
    }
    Err(Error::Consistency(format!("no regular neighbour with matching Jacobian sign near psi={:.6}", fp.psi)))
}

/// Cross-check of the chart index through the argument of
/// J cos(eta) + J~ sin(eta) - i eps (J~ cos(eta) - J sin(eta)) for eta in [0, pi/2],
/// started at the regular point (psi_F, t_F - delta).
pub fn chart_index_by_argument(bundle: &RayBundle, fp: &FocalPointInfo, eps: f64) -> Result<i32> {
    let te = fp.t - 1e-3 * bundle.t_end();
    let ray = bundle.retrace_ray(fp.psi, te);
    let s = ray.state(&bundle.bathy, te)?;
    let m = ray.morse_at(te) as i32;
    let (mut j, mut jt) = (s.j(), s.j_tilde());
    let nrm = j.hypot(jt);
    j /= nrm;
    jt /= nrm;
    let steps = 2000;
    let arg = |eta: f64| {
        let (sn, cs) = eta.sin_cos();
        let re = j * cs + jt * sn;
        let im = -eps * (jt * cs - j * sn);
        im.atan2(re)
    };
    let mut prev = arg(0.0);
    let mut total = 0.0;
    for k in 1..=steps {
        let a = arg(0.5 * PI * k as f64 / steps as f64);
        total += crate::wrap_pi(a - prev);
        prev = a;
    }
    Ok(m + (total / PI).round() as i32)
}

/// Chart indices of the four charts covering the initial circle, evaluated
/// at psi = 0, pi/2, pi, 3pi/2 with their nonsingular Jacobians.
pub fn initial_chart_indices(bundle: &RayBundle) -> Result<[i32; 4]> {
    let t_small = 10.0 * bundle.opts.dt;
    let mut out = [0; 4];
    for (k, o) in out.iter_mut().enumerate() {
        let psi = bundle.opts.psi_offset + 0.5 * PI * k as f64;
        let s0 = crate::raytrace::state_at(&bundle.bathy, psi, 1e-12, 1e-12)?;
        let jac = jacobians(&s0);
        let chart = if k % 2 == 0 { jac.j10 } else { jac.j02 };
        let ray = bundle.retrace_ray(psi, t_small);
        let s = ray.state(&bundle.bathy, t_small)?;
        if s.j().signum() != chart.signum() {
            return Err(Error::Consistency(format!("no regular point matches chart sign at psi={psi:.4}")));
        }
        *o = ray.morse_at(t_small) as i32;
    }
    Ok(out)
}

/// Morse index of (psi, t): the number of J zeros on (0, t).
pub fn morse_index(bundle: &RayBundle, psi: f64, t: f64) -> Result<u32> {
    let ray = bundle.retrace_ray(psi, t);
    let s = ray.state(&bundle.bathy, t)?;
    if s.j().abs() < 1e-9 * bundle.c0 * bundle.c0 * t {
        return Err(Error::Argument(format!("(psi={psi:.6}, t={t}) is focal; use focal_chart_index")));
    }
    let m = ray.morse_at(t);
    let recount = recount_sign_changes(&ray, &bundle.bathy, t);
    if recount != m {
        return Err(Error::Consistency(format!("Morse recount {recount} differs from running count {m}")));
    }
    Ok(m)
}

/// Sign changes of J over the stored samples of a ray up to t.
pub fn recount_sign_changes(ray: &Ray, bathy: &crate::Bathymetry, t: f64) -> u32 {
    let mut count = 0;
    let mut prev: Option<f64> = None;
    for s in ray.samples(bathy).iter().filter(|s| s.t > 0.0 && s.t <= t) {
        let j = s.j();
        if let Some(p) = prev {
            if p.signum() != j.signum() && j != 0.0 {
                count += 1;
            }
        }
        if j != 0.0 {
            prev = Some(j);
        }
    }
    if let (Some(p), Ok(s)) = (prev, ray.state(bathy, t)) {
        if s.j().signum() != p.signum() && s.j() != 0.0 {
            count += 1;
        }
    }
    count
}

/// First instant at which any ray has a focal point; `f64::INFINITY` if none.
pub fn critical_time(bundle: &RayBundle) -> Result<f64> {
    let first = |r: &Ray| r.events.first().copied();
    let best = bundle
        .rays
        .iter()
        .enumerate()
        .filter_map(|(k, r)| first(r).map(|t| (k, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let Some((k, _)) = best else {
        return Ok(f64::INFINITY);
    };
    let psi = bundle.psis[k];
    let h = bundle.dpsi();
    let t_end = bundle.t_end();
    let f = |p: f64| -> Result<f64> {
        let ray = bundle.retrace_ray(p, t_end);
        Ok(ray.events.first().copied().unwrap_or(2.0 * t_end))
    };
    let (_, t) = golden_min(f, psi - h, psi + h, 1e-7 * h)?;
    Ok(t)
}

/// Split the front at focal angles and dead rays; every adjacent pair of
/// branches must differ by the jump of the separating focal point.
pub fn segment_front(front: &Front, focal: &[FocalPointInfo]) -> Result<Vec<FrontBranch>> {
    let n = front.states.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let psi0 = front.states[0].psi;
    let rel = |p: f64| (p - psi0).rem_euclid(TAU);
    // focal angles mapped to the gap (i, i+1) containing them
    let mut cut_after: Vec<Option<usize>> = vec![None; n];
    for (fi, fp) in focal.iter().enumerate() {
        let r = rel(fp.psi);
        let step = TAU / n as f64;
        let i = ((r / step).floor() as usize).min(n - 1);
        cut_after[i] = Some(fi);
    }
    let alive: Vec<bool> = front.states.iter().map(|s| s.alive).collect();
    let is_cut = |i: usize| cut_after[i].is_some() || !alive[i] || !alive[(i + 1) % n];
    let all_alive = alive.iter().all(|&a| a);
    if all_alive && focal.is_empty() {
        let s = &front.states[0];
        let morse = s.morse;
        if front.states.iter().any(|x| x.morse != morse) {
            return Err(Error::Consistency("Morse index varies along a front without focal points".into()));
        }
        return Ok(vec![FrontBranch {
            rays: (0..n).collect(),
            psi_start: psi0,
            psi_end: psi0 + TAU,
            morse,
            j_sign: s.j().signum() as i32,
            left_focal: None,
            right_focal: None,
            closed: true,
        }]);
    }
    // start right after a cut
    let start = (0..n).find(|&i| is_cut(i)).map(|i| (i + 1) % n).unwrap_or(0);
    let mut branches = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut left: Option<usize> = cut_after[(start + n - 1) % n];
    for k in 0..n {
        let i = (start + k) % n;
        if alive[i] {
            cur.push(i);
        }
        if is_cut(i) {
            if !cur.is_empty() {
                branches.push(make_branch(front, &cur, left, cut_after[i])?);
            }
            cur.clear();
            left = cut_after[i];
        }
    }
    if !cur.is_empty() {
        branches.push(make_branch(front, &cur, left, None)?);
    }
    // jump audit between neighbours sharing a focal point
    let nb = branches.len();
    for k in 0..nb {
        let (a, b) = (&branches[k], &branches[(k + 1) % nb]);
        if let (Some(fi), Some(fj)) = (a.right_focal, b.left_focal) {
            if fi == fj && focal[fi].n.is_some() {
                let dm = front_index_jump(a, &focal[fi], b)?;
                if b.morse as i32 - a.morse as i32 != dm {
                    return Err(Error::Consistency(format!(
                        "Morse index {} -> {} across focal point psi={:.6}, expected jump {dm}",
                        a.morse, b.morse, focal[fi].psi
                    )));
                }
            }
        }
    }
    Ok(branches)
}

fn make_branch(front: &Front, idx: &[usize], left: Option<usize>, right: Option<usize>) -> Result<FrontBranch> {
    let s0 = &front.states[idx[0]];
    let morse = s0.morse;
    if idx.iter().any(|&i| front.states[i].morse != morse) {
        return Err(Error::Consistency(format!("Morse index not constant on the branch starting at psi={:.6}", s0.psi)));
    }
    let mut psi_end = front.states[*idx.last().unwrap()].psi;
    if psi_end < s0.psi {
        psi_end += TAU;
    }
    let js: i32 = idx.iter().map(|&i| front.states[i].j().signum() as i32).sum();
    Ok(FrontBranch {
        rays: idx.to_vec(),
        psi_start: s0.psi,
        psi_end,
        morse,
        j_sign: js.signum(),
        left_focal: left,
        right_focal: right,
        closed: false,
    })
}

/// Sum of index jumps around the closed front.
pub fn net_index_jump(branches: &[FrontBranch], focal: &[FocalPointInfo]) -> Result<i32> {
    let nb = branches.len();
    let mut total = 0;
    for k in 0..nb {
        let (a, b) = (&branches[k], &branches[(k + 1) % nb]);
        if let Some(fi) = a.right_focal {
            total += front_index_jump(a, &focal[fi], b)?;
        }
    }
    Ok(total)
}

/// Classified focal points on the front at time t, with chart indices.
pub fn prepare_focal(bundle: &RayBundle, t: f64) -> Result<Vec<FocalPointInfo>> {
    let raw = focal_points_at(bundle, t)?;
    raw.iter()
        .map(|fp| {
            let mut c = classify_focal(bundle, fp)?;
            c.mbold = Some(focal_chart_index(bundle, &c)?);
            Ok(c)
        })
        .collect()
}
