//! Adaptive Gauss–Kronrod (10/21) quadrature for complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077574475919766,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy, Debug)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { abs: 1e-14, rel: 1e-11, max_intervals: 20_000 }
    }
}

impl Tol {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tol { abs, rel, ..Default::default() }
    }
}

/// One 21-point Kronrod panel; returns (estimate, error estimate). The raw
/// |K21 - G10| difference is rescaled as in QUADPACK's qk21.
pub fn gk21<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [Complex64::new(0.0, 0.0); 21];
    fv[10] = f(c);
    for j in 0..10 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[20 - j] = f(c + dx);
    }
    let mut rk = fv[10] * WGK[10];
    let mut rg = Complex64::new(0.0, 0.0);
    let mut resabs = fv[10].norm() * WGK[10];
    for j in 0..10 {
        let s = fv[j] + fv[20 - j];
        rk += s * WGK[j];
        resabs += WGK[j] * (fv[j].norm() + fv[20 - j].norm());
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    let mean = rk * 0.5;
    let mut resasc = WGK[10] * (fv[10] - mean).norm();
    for j in 0..10 {
        resasc += WGK[j] * ((fv[j] - mean).norm() + (fv[20 - j] - mean).norm());
    }
    let ah = h.abs();
    let mut err = ((rk - rg) * h).norm();
    let resasc = resasc * ah;
    let resabs = resabs * ah;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(2.0 * f64::EPSILON * resabs);
    }
    (rk * h, err)
}

struct Panel {
    a: f64,
    b: f64,
    val: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive integration over consecutive panels given by `breaks`
/// (at least two increasing points). Returns the value and the error estimate.
pub fn integrate_breaks<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breaks: &[f64],
    tol: Tol,
) -> Result<(Complex64, f64)> {
    if breaks.len() < 2 {
        return Err(Error::Argument("quadrature needs at least two break points".into()));
    }
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 2);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk21(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Panel { a: w[0], b: w[1], val: v, err: e });
    }
    let span = (breaks[breaks.len() - 1] - breaks[0]).abs();
    while err > tol.abs.max(tol.rel * total.norm()) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::numeric("adaptive quadrature hit the panel limit", err));
        }
        let p = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if p.b - p.a < 1e-15 * span.max(1e-300) {
            // Cannot split further; keep it and give up on this panel.
            heap.push(p);
            return Err(Error::numeric("adaptive quadrature reached roundoff limit", err));
        }
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk21(&mut f, p.a, m);
        let (v2, e2) = gk21(&mut f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, val: v2, err: e2 });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut t = Complex64::new(0.0, 0.0);
    let mut e = 0.0;
    for p in heap.iter() {
        t += p.val;
        e += p.err;
    }
    Ok((t, e))
}

pub fn integrate<F: FnMut(f64) -> Complex64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Complex64> {
    integrate_breaks(f, &[a, b], tol).map(|r| r.0)
}

pub fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tol) -> Result<f64> {
    integrate_breaks(|x| Complex64::new(f(x), 0.0), &[a, b], tol).map(|r| r.0.re)
}

/// `n` equal panels on [a, b] as break points.
pub fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_low_degree_polynomials() {
        for deg in 0..=31 {
            let (v, _) = gk21(&mut |x: f64| Complex64::new(x.powi(deg), 0.0), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((v.re - exact).abs() < 1e-14, "deg {deg}: {} vs {exact}", v.re);
        }
    }

    #[test]
    fn gauss_part_exact_to_degree_19() {
        // the embedded error estimate vanishes for polynomials the G10 rule integrates
        let (_, e) = gk21(&mut |x: f64| Complex64::new(x.powi(19) - 3.0 * x.powi(7), 0.0), -1.0, 2.0);
        assert!(e < 1e-10, "{e}");
    }

    #[test]
    fn adaptive_oscillatory() {
        // int_0^50 cos(x^2) dx against Fresnel value
        let v = integrate_real(|x| (x * x).cos(), 0.0, 50.0, Tol::new(1e-13, 1e-12)).unwrap();
        // sqrt(pi/8) - sin(2500)/100 + ... ; freeze via a refined second run
        let w = integrate_breaks(
            |x: f64| Complex64::new((x * x).cos(), 0.0),
            &uniform_breaks(0.0, 50.0, 400),
            Tol::new(1e-14, 1e-13),
        )
        .unwrap()
        .0
        .re;
        assert!((v - w).abs() < 1e-10, "{v} {w}");
        let approx = (std::f64::consts::PI / 8.0).sqrt() + (2500f64).sin() / 100.0;
        assert!((v - approx).abs() < 1e-5);
    }
}
