//! Depth models and the long-wave speed C = sqrt(g H) with its derivatives.

use crate::error::{Error, Result};
use crate::io::GridSamples;
use crate::{M2, V2};

#[derive(Clone, Debug)]
pub enum BathyKind {
    Constant { h0: f64 },
    /// H = h0 (1 + <slope, x>)
    LinearSlope { h0: f64, slope: [f64; 2] },
    /// H = h0 (1 - amp exp(-|x - center|^2 / width^2))
    RadialBank { h0: f64, amp: f64, width: f64, center: [f64; 2] },
    Gridded(GridSamples),
}

#[derive(Clone, Debug)]
pub struct Bathymetry {
    pub kind: BathyKind,
    pub g: f64,
    /// Optional box (x_min, y_min, x_max, y_max) for analytic kinds.
    pub domain: Option<[f64; 4]>,
}

/// C, grad C and Hess C at one point.
#[derive(Clone, Copy, Debug)]
pub struct SpeedJet {
    pub c: f64,
    pub grad: V2,
    pub hess: M2,
}

/// H with its gradient and Hessian.
#[derive(Clone, Copy, Debug)]
struct DepthJet {
    h: f64,
    grad: V2,
    hess: M2,
}

impl Bathymetry {
    pub fn new(kind: BathyKind, g: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::Argument(format!("g must be positive, got {g}")));
        }
        match &kind {
            BathyKind::Constant { h0 } | BathyKind::LinearSlope { h0, .. } | BathyKind::RadialBank { h0, .. } if !(*h0 > 0.0) => {
                return Err(Error::Argument(format!("reference depth must be positive, got {h0}")));
            }
            BathyKind::RadialBank { amp, width, .. } if !(*amp < 1.0 && *width > 0.0) => {
                return Err(Error::Argument(format!("radial bank needs amp < 1 and width > 0, got {amp}, {width}")));
            }
            BathyKind::Gridded(s) if s.values.iter().any(|v| *v <= 0.0) => {
                return Err(Error::Validity("gridded depth has nonpositive samples".into()));
            }
            _ => {}
        }
        Ok(Bathymetry { kind, g, domain: None })
    }

    pub fn constant(h0: f64, g: f64) -> Result<Self> {
        Self::new(BathyKind::Constant { h0 }, g)
    }

    pub fn with_domain(mut self, d: [f64; 4]) -> Self {
        self.domain = Some(d);
        self
    }

    fn check_domain(&self, x: &V2) -> Result<()> {
        if !(x.x.is_finite() && x.y.is_finite()) {
            return Err(Error::Domain(format!("non-finite query point ({}, {})", x.x, x.y)));
        }
        let b = match (&self.kind, self.domain) {
            (_, Some(d)) => d,
            (BathyKind::Gridded(s), None) => [s.x0, s.y0, s.x_max(), s.y_max()],
            _ => return Ok(()),
        };
        if x.x < b[0] || x.x > b[2] || x.y < b[1] || x.y > b[3] {
            return Err(Error::Domain(format!("point ({:.6}, {:.6}) outside bathymetry domain", x.x, x.y)));
        }
        Ok(())
    }

    /// H(x); gridded data are interpolated bilinearly.
    pub fn depth(&self, x: &V2) -> Result<f64> {
        self.check_domain(x)?;
        let h = match &self.kind {
            BathyKind::Gridded(s) => bilinear(s, x),
            _ => self.analytic_jet(x).h,
        };
        if !(h > 0.0) {
            return Err(Error::Validity(format!("nonpositive depth {h} at ({:.6}, {:.6})", x.x, x.y)));
        }
        Ok(h)
    }

    /// C(x) = sqrt(g H(x)).
    pub fn speed(&self, x: &V2) -> Result<f64> {
        Ok((self.g * self.depth(x)?).sqrt())
    }

    /// (grad C, Hess C).
    pub fn speed_derivs(&self, x: &V2) -> Result<(V2, M2)> {
        let j = self.jet(x)?;
        Ok((j.grad, j.hess))
    }

    /// C and its first two derivatives. For gridded data all three come from
    /// one bicubic Hermite patch, so they are mutually consistent.
    pub fn jet(&self, x: &V2) -> Result<SpeedJet> {
        self.check_domain(x)?;
        let d = match &self.kind {
            BathyKind::Gridded(s) => bicubic(s, x)?,
            _ => self.analytic_jet(x),
        };
        if !(d.h > 0.0) {
            return Err(Error::Validity(format!("nonpositive depth {} at ({:.6}, {:.6})", d.h, x.x, x.y)));
        }
        let g = self.g;
        let c = (g * d.h).sqrt();
        let grad = d.grad * (g / (2.0 * c));
        let hess = d.hess * (g / (2.0 * c)) - d.grad * d.grad.transpose() * (g * g / (4.0 * c * c * c));
        Ok(SpeedJet { c, grad, hess })
    }

    fn analytic_jet(&self, x: &V2) -> DepthJet {
        match &self.kind {
            BathyKind::Constant { h0 } => DepthJet { h: *h0, grad: V2::zeros(), hess: M2::zeros() },
            BathyKind::LinearSlope { h0, slope } => {
                let s = V2::new(slope[0], slope[1]);
                DepthJet { h: h0 * (1.0 + s.dot(x)), grad: s * *h0, hess: M2::zeros() }
            }
            BathyKind::RadialBank { h0, amp, width, center } => {
                let r = x - V2::new(center[0], center[1]);
                let w2 = width * width;
                let e = (-r.norm_squared() / w2).exp();
                // H = h0 - h0 amp e
                let k = h0 * amp * e;
                let grad = r * (2.0 * k / w2);
                let hess = (M2::identity() * (2.0 / w2) - r * r.transpose() * (4.0 / (w2 * w2))) * k;
                DepthJet { h: h0 - k, grad, hess }
            }
            BathyKind::Gridded(_) => unreachable!(),
        }
    }

    /// Depth at the source point (origin).
    pub fn h_source(&self) -> Result<f64> {
        self.depth(&V2::zeros())
    }

    pub fn is_radial(&self) -> Option<V2> {
        match &self.kind {
            BathyKind::Constant { .. } => Some(V2::zeros()),
            BathyKind::RadialBank { center, .. } => Some(V2::new(center[0], center[1])),
            _ => None,
        }
    }
}

fn cell_coords(s: &GridSamples, x: &V2) -> (usize, usize, f64, f64) {
    let u = (x.x - s.x0) / s.dx;
    let v = (x.y - s.y0) / s.dy;
    let i = (u.floor().max(0.0) as usize).min(s.nx - 2);
    let j = (v.floor().max(0.0) as usize).min(s.ny - 2);
    (i, j, u - i as f64, v - j as f64)
}

fn bilinear(s: &GridSamples, x: &V2) -> f64 {
    let (i, j, fu, fv) = cell_coords(s, x);
    (1.0 - fu) * (1.0 - fv) * s.at(i, j) + fu * (1.0 - fv) * s.at(i + 1, j) + (1.0 - fu) * fv * s.at(i, j + 1) + fu * fv * s.at(i + 1, j + 1)
}

/// Cubic Hermite basis [h00, h01, h10, h11] and its first two derivatives.
fn hermite(t: f64) -> [[f64; 4]; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [2.0 * t3 - 3.0 * t2 + 1.0, -2.0 * t3 + 3.0 * t2, t3 - 2.0 * t2 + t, t3 - t2],
        [6.0 * t2 - 6.0 * t, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, 3.0 * t2 - 2.0 * t],
        [12.0 * t - 6.0, -12.0 * t + 6.0, 6.0 * t - 4.0, 6.0 * t - 2.0],
    ]
}

fn bicubic(s: &GridSamples, x: &V2) -> Result<DepthJet> {
    let (i, j, fu, fv) = cell_coords(s, x);
    if i < 1 || j < 1 || i + 2 >= s.nx || j + 2 >= s.ny {
        return Err(Error::Domain(format!(
            "point ({:.6}, {:.6}) too close to the grid edge for derivative stencils",
            x.x, x.y
        )));
    }
    // node values and central-difference derivatives in index units
    let node = |a: usize, b: usize| -> [f64; 4] {
        let f = s.at(a, b);
        let fx = 0.5 * (s.at(a + 1, b) - s.at(a - 1, b));
        let fy = 0.5 * (s.at(a, b + 1) - s.at(a, b - 1));
        let fxy = 0.25 * (s.at(a + 1, b + 1) - s.at(a - 1, b + 1) - s.at(a + 1, b - 1) + s.at(a - 1, b - 1));
        [f, fx, fy, fxy]
    };
    let n = [[node(i, j), node(i, j + 1)], [node(i + 1, j), node(i + 1, j + 1)]];
    let hu = hermite(fu);
    let hv = hermite(fv);
    // value / du / dv / du2 / dudv / dv2
    let mut acc = [0.0f64; 6];
    let orders = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    for a in 0..2 {
        for b in 0..2 {
            let [f, fx, fy, fxy] = n[a][b];
            for (k, &(du, dv)) in orders.iter().enumerate() {
                let bu = &hu[du];
                let bv = &hv[dv];
                acc[k] += f * bu[a] * bv[b] + fx * bu[2 + a] * bv[b] + fy * bu[a] * bv[2 + b] + fxy * bu[2 + a] * bv[2 + b];
            }
        }
    }
    let (dx, dy) = (s.dx, s.dy);
    Ok(DepthJet {
        h: acc[0],
        grad: V2::new(acc[1] / dx, acc[2] / dy),
        hess: M2::new(acc[3] / (dx * dx), acc[4] / (dx * dy), acc[4] / (dx * dy), acc[5] / (dy * dy)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bank() -> Bathymetry {
        Bathymetry::new(BathyKind::RadialBank { h0: 1.0, amp: 0.5, width: 1.0, center: [0.0, 0.0] }, 1.0).unwrap()
    }

    fn fd_jet(b: &Bathymetry, x: &V2) -> (V2, M2) {
        let h = 1e-4;
        let c = |p: V2| b.speed(&p).unwrap();
        let e1 = V2::new(h, 0.0);
        let e2 = V2::new(0.0, h);
        let g = V2::new((c(x + e1) - c(x - e1)) / (2.0 * h), (c(x + e2) - c(x - e2)) / (2.0 * h));
        let gx = |p: V2| V2::new((c(p + e1) - c(p - e1)) / (2.0 * h), (c(p + e2) - c(p - e2)) / (2.0 * h));
        let hx = (gx(x + e1) - gx(x - e1)) / (2.0 * h);
        let hy = (gx(x + e2) - gx(x - e2)) / (2.0 * h);
        (g, M2::new(hx.x, hy.x, hx.y, hy.y))
    }

    #[test]
    fn depth_examples() {
        let c = Bathymetry::constant(4000.0, 9.81).unwrap();
        assert_eq!(c.depth(&V2::new(3.0, -7.0)).unwrap(), 4000.0);
        assert!((c.speed(&V2::zeros()).unwrap() - (9.81f64 * 4000.0).sqrt()).abs() < 1e-12);
        let (g, h) = c.speed_derivs(&V2::new(1.0, 2.0)).unwrap();
        assert_eq!(g, V2::zeros());
        assert_eq!(h, M2::zeros());
        assert!((bank().depth(&V2::zeros()).unwrap() - 0.5).abs() < 1e-15);
        let s = GridSamples::new(2, 2, 0.0, 0.0, 1.0, 1.0, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let gb = Bathymetry::new(BathyKind::Gridded(s), 1.0).unwrap();
        assert!((gb.depth(&V2::new(0.5, 0.5)).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(gb.depth(&V2::new(1.5, 0.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn slope_gradient_matches_fd() {
        let b = Bathymetry::new(BathyKind::LinearSlope { h0: 1.0, slope: [0.1, 0.0] }, 9.81).unwrap();
        let (g, _) = b.speed_derivs(&V2::zeros()).unwrap();
        let c0 = 9.81f64.sqrt();
        assert!((g.x - 9.81 * 0.1 / (2.0 * c0)).abs() < 1e-14 && g.y == 0.0);
        let (gf, _) = fd_jet(&b, &V2::zeros());
        assert!((g - gf).norm() / g.norm() < 1e-8);
    }

    #[test]
    fn bank_gradient_is_radial() {
        let b = bank();
        let x = V2::new(0.0, -0.8);
        let (g, _) = b.speed_derivs(&x).unwrap();
        assert!(g.x.abs() < 1e-15 && g.y < 0.0);
    }

    #[test]
    fn gridded_matches_analytic_smooth_field() {
        let b = bank();
        let grid = |h: f64| {
            let n = (6.0 / h).round() as usize + 1;
            let s = GridSamples::from_fn(n, n, -3.0, -3.0, h, h, |x, y| b.depth(&V2::new(x, y)).unwrap()).unwrap();
            Bathymetry::new(BathyKind::Gridded(s), 1.0).unwrap()
        };
        let pts = [(0.3, -0.2), (1.01, 0.77), (-1.5, 0.33), (0.12, 0.61)];
        let errs = |gb: &Bathymetry| {
            let mut e = [0.0f64; 3];
            for &(x, y) in &pts {
                let p = V2::new(x, y);
                let a = b.jet(&p).unwrap();
                let n = gb.jet(&p).unwrap();
                e[0] = e[0].max((a.c - n.c).abs());
                e[1] = e[1].max((a.grad - n.grad).norm());
                e[2] = e[2].max((a.hess - n.hess).norm());
            }
            e
        };
        let coarse = errs(&grid(0.05));
        let fine = errs(&grid(0.025));
        assert!(coarse[0] < 1e-5 && coarse[1] < 1e-3 && coarse[2] < 0.1, "{coarse:?}");
        assert!(fine[2] < coarse[2] / 1.7 && fine[1] < coarse[1] / 3.0, "{coarse:?} {fine:?}");
        let gb = grid(0.05);
        // nodes reproduce exactly
        let p = V2::new(0.5, 1.0);
        assert!((gb.speed(&p).unwrap() - b.speed(&p).unwrap()).abs() < 1e-14);
        assert!(gb.jet(&V2::new(-2.99, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn speed_squared_is_g_depth(x in -3.0..3.0f64, y in -3.0..3.0f64, amp in -0.8..0.8f64) {
            let b = Bathymetry::new(BathyKind::RadialBank { h0: 2.0, amp, width: 0.7, center: [0.2, -0.1] }, 9.81).unwrap();
            let p = V2::new(x, y);
            let d = b.depth(&p).unwrap();
            let c = b.speed(&p).unwrap();
            prop_assert!((c * c - 9.81 * d).abs() < 1e-12 * 9.81 * d);
        }

        #[test]
        fn analytic_derivs_match_fd(x in -2.0..2.0f64, y in -2.0..2.0f64) {
            for b in [bank(), Bathymetry::new(BathyKind::LinearSlope { h0: 1.0, slope: [0.05, -0.08] }, 1.0).unwrap()] {
                let p = V2::new(x, y);
                let j = b.jet(&p).unwrap();
                let (g, h) = fd_jet(&b, &p);
                prop_assert!((j.grad - g).norm() <= 1e-6 * j.grad.norm().max(1e-3));
                prop_assert!((j.hess - h).norm() <= 1e-5 * j.hess.norm().max(1e-2));
                prop_assert!((j.hess[(0, 1)] - j.hess[(1, 0)]).abs() < 1e-15);
            }
        }

        #[test]
        fn bank_is_rotation_invariant(r in 0.0..3.0f64, k in 0usize..8) {
            let b = bank();
            let a0 = 0.37;
            let a1 = a0 + k as f64 * std::f64::consts::PI / 4.0;
            let d0 = b.depth(&V2::new(r * a0.cos(), r * a0.sin())).unwrap();
            let d1 = b.depth(&V2::new(r * a1.cos(), r * a1.sin())).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-14);
        }
    }
}
