//! Tracy–Widom `F_1`: the Airy function, the Hastings–McLeod solution of
//! Painlevé II (`q'' = x q + 2 q^3`, `q ~ Ai` at `+inf`) and the CDF integral
//!
//! ```text
//! F_1(s) = exp(-1/2 int_s^inf [q(x) + (x - s) q(x)^2] dx).
//! ```

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

const AI0: f64 = 0.355_028_053_887_817_2;
const AIP0: f64 = -0.258_819_403_792_806_8;

/// Maclaurin series are used on this interval, asymptotic expansions outside.
const SERIES_LO: f64 = -7.0;
const SERIES_HI: f64 = 5.5;
/// Admissible argument range of the Airy routines.
pub const AIRY_MAX_ABS: f64 = 20.0;

fn check_airy_arg(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= AIRY_MAX_ABS {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "x",
            value: x,
            range: format!("[-{AIRY_MAX_ABS}, {AIRY_MAX_ABS}]"),
        })
    }
}

/// `(Ai(x), Ai'(x))` from the Maclaurin series.
fn airy_series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = sum a_k x^{3k}, g = sum c_k x^{3k+1}, plus termwise derivatives
    let (mut f, mut g, mut fp, mut gp) = (1.0, x, 0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    let (mut tfp, mut tgp) = (x * x / 2.0, 1.0);
    fp += tfp;
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        if k >= 2 {
            tfp *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf - 3.0));
            fp += tfp;
        }
        tgp *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        f += tf;
        g += tg;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-17 * scale {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

/// Coefficients `u_k`, `v_k` of the asymptotic expansions, up to index 40.
fn asymptotic_coeffs() -> &'static ([f64; 41], [f64; 41]) {
    static COEFFS: OnceLock<([f64; 41], [f64; 41])> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut u = [0.0; 41];
        let mut v = [0.0; 41];
        u[0] = 1.0;
        v[0] = 1.0;
        for k in 1..=40 {
            let kf = k as f64;
            u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
            v[k] = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u[k];
        }
        (u, v)
    })
}

/// Sums `sum_k sign(k) c_k zeta^{-k}` over the selected `k` until the terms
/// stop shrinking.
fn truncated_sum(c: &[f64], zeta: f64, ks: impl Iterator<Item = usize>, sign: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in ks {
        let term = c[k] * zeta.powi(-(k as i32));
        if term.abs() >= prev {
            break;
        }
        sum += sign(k) * term;
        prev = term.abs();
        if prev < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn airy_asymptotic(x: f64) -> (f64, f64) {
    let (u, v) = asymptotic_coeffs();
    if x > 0.0 {
        let zeta = 2.0 / 3.0 * x.powf(1.5);
        let alt = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
        let su = truncated_sum(u, zeta, 0..41, alt);
        let sv = truncated_sum(v, zeta, 0..41, alt);
        let e = (-zeta).exp() / (2.0 * PI.sqrt());
        (e * x.powf(-0.25) * su, -e * x.powf(0.25) * sv)
    } else {
        let z = -x;
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let even = |k: usize| if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let p_u = truncated_sum(u, zeta, (0..41).step_by(2), even);
        let q_u = truncated_sum(u, zeta, (1..41).step_by(2), even);
        let p_v = truncated_sum(v, zeta, (0..41).step_by(2), even);
        let q_v = truncated_sum(v, zeta, (1..41).step_by(2), even);
        let (s, c) = (zeta + FRAC_PI_4).sin_cos();
        let k = 1.0 / PI.sqrt();
        (
            k * z.powf(-0.25) * (s * p_u - c * q_u),
            -k * z.powf(0.25) * (c * p_v + s * q_v),
        )
    }
}

fn airy_pair(x: f64) -> (f64, f64) {
    if (SERIES_LO..=SERIES_HI).contains(&x) {
        airy_series(x)
    } else {
        airy_asymptotic(x)
    }
}

/// Airy function `Ai(x)` for `|x| <= 20`.
pub fn airy_ai(x: f64) -> Result<f64> {
    check_airy_arg(x)?;
    Ok(airy_pair(x).0)
}

/// Derivative `Ai'(x)` for `|x| <= 20`.
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check_airy_arg(x)?;
    Ok(airy_pair(x).1)
}

pub const DEFAULT_X0: f64 = 8.0;
pub const DEFAULT_X_MIN: f64 = -8.0;
pub const DEFAULT_STEP: f64 = 2.5e-4;
/// `|q|` above which the integration is declared to have left the
/// Hastings–McLeod solution.
pub const BLOWUP: f64 = 1e3;

/// Hastings–McLeod solution tabulated on a uniform descending grid, with
/// cumulative integrals from each node up to `x0`.
#[derive(Debug, Clone, Serialize)]
pub struct PainleveGrid {
    pub x0: f64,
    pub x_min: f64,
    pub h: f64,
    /// `x_i = x0 - i h`.
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    /// `int_{x_i}^{x0} q`.
    i1: Vec<f64>,
    /// `int_{x_i}^{x0} q^2`.
    i2: Vec<f64>,
    /// `int_{x_i}^{x0} x q^2`.
    i3: Vec<f64>,
    /// The same integrals over `[x0, inf)` with `q = Ai`.
    tail: [f64; 3],
}

#[inline]
fn rhs(x: f64, q: f64, dq: f64) -> (f64, f64) {
    (dq, x * q + 2.0 * q * q * q)
}

/// One classical RK4 step of size `h` (negative to move left).
fn rk4(x: f64, q: f64, dq: f64, h: f64) -> (f64, f64) {
    let (k1q, k1p) = rhs(x, q, dq);
    let (k2q, k2p) = rhs(x + h / 2.0, q + h / 2.0 * k1q, dq + h / 2.0 * k1p);
    let (k3q, k3p) = rhs(x + h / 2.0, q + h / 2.0 * k2q, dq + h / 2.0 * k2p);
    let (k4q, k4p) = rhs(x + h, q + h * k3q, dq + h * k3p);
    (
        q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        dq + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Integrands `q`, `q^2`, `x q^2` and their derivatives at one point.
#[inline]
fn integrands(x: f64, q: f64, dq: f64) -> ([f64; 3], [f64; 3]) {
    let q2 = q * q;
    let dq2 = 2.0 * q * dq;
    ([q, q2, x * q2], [dq, dq2, q2 + x * dq2])
}

/// `int_a^b f` for a cubic Hermite interpolant with values and slopes at the
/// endpoints; `len = b - a`.
#[inline]
fn hermite_integral(len: f64, fa: f64, fb: f64, da: f64, db: f64) -> f64 {
    len / 2.0 * (fa + fb) + len * len / 12.0 * (da - db)
}

/// Integrates Painlevé II leftward from `(Ai(x0), Ai'(x0))`.
pub fn solve_painleve(x0: f64, x_min: f64, h: f64) -> Result<PainleveGrid> {
    solve_from(x0, airy_pair(x0), x_min, h)
}

fn solve_from(x0: f64, start: (f64, f64), x_min: f64, h: f64) -> Result<PainleveGrid> {
    if !(x0 >= 6.0) || !(x0 <= AIRY_MAX_ABS) {
        return Err(Error::OutOfRange {
            what: "x0",
            value: x0,
            range: format!("[6, {AIRY_MAX_ABS}]"),
        });
    }
    if !(x_min < x0) || !(h > 0.0) {
        return Err(Error::invalid("need x_min < x0 and h > 0"));
    }
    let steps = ((x0 - x_min) / h).round() as usize;
    if ((x0 - x_min) / h - steps as f64).abs() > 1e-6 {
        return Err(Error::invalid("x0 - x_min must be a multiple of h"));
    }
    let mut q = Vec::with_capacity(steps + 1);
    let mut dq = Vec::with_capacity(steps + 1);
    let (a, ap) = start;
    q.push(a);
    dq.push(ap);
    let mut i1 = vec![0.0; steps + 1];
    let mut i2 = vec![0.0; steps + 1];
    let mut i3 = vec![0.0; steps + 1];
    for i in 0..steps {
        let x = x0 - i as f64 * h;
        let (nq, ndq) = rk4(x, q[i], dq[i], -h);
        if !(nq.abs() <= BLOWUP) {
            return Err(Error::BlowUp { x: x - h });
        }
        q.push(nq);
        dq.push(ndq);
        let (fa, da) = integrands(x - h, nq, ndq);
        let (fb, db) = integrands(x, q[i], dq[i]);
        i1[i + 1] = i1[i] + hermite_integral(h, fa[0], fb[0], da[0], db[0]);
        i2[i + 1] = i2[i] + hermite_integral(h, fa[1], fb[1], da[1], db[1]);
        i3[i + 1] = i3[i] + hermite_integral(h, fa[2], fb[2], da[2], db[2]);
    }
    let upper = x0 + 12.0;
    let ai = |x: f64| airy_pair(x).0;
    let tail = [
        quad::integrate(ai, x0, upper, 1e-16),
        quad::integrate(|x| ai(x).powi(2), x0, upper, 1e-20),
        quad::integrate(|x| x * ai(x).powi(2), x0, upper, 1e-20),
    ];
    Ok(PainleveGrid {
        x0,
        x_min: x0 - steps as f64 * h,
        h,
        q,
        dq,
        i1,
        i2,
        i3,
        tail,
    })
}

impl PainleveGrid {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 - i as f64 * self.h
    }

    /// `(q(x), q'(x))` at any `x` in the grid range, by one RK4 step from the
    /// node to the right of `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let (i, dx) = self.locate(x)?;
        Ok(if dx == 0.0 {
            (self.q[i], self.dq[i])
        } else {
            rk4(self.x(i), self.q[i], self.dq[i], -dx)
        })
    }

    /// Node index `i` with `x(i) >= x > x(i + 1)` and offset `x(i) - x`.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= self.x_min - 1e-12 && x <= self.x0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "s",
                value: x,
                range: format!("[{}, {}]", self.x_min, self.x0),
            });
        }
        let pos = ((self.x0 - x) / self.h).max(0.0);
        let mut i = pos.floor() as usize;
        if i >= self.len() - 1 {
            i = self.len() - 1;
        }
        Ok((i, (self.x(i) - x).max(0.0)))
    }

    /// `int_s^inf [q + (x - s) q^2] dx`.
    pub fn exponent(&self, s: f64) -> Result<f64> {
        let (i, dx) = self.locate(s)?;
        let mut acc = [self.i1[i], self.i2[i], self.i3[i]];
        if dx > 0.0 {
            let (qs, dqs) = rk4(self.x(i), self.q[i], self.dq[i], -dx);
            let (fa, da) = integrands(s, qs, dqs);
            let (fb, db) = integrands(self.x(i), self.q[i], self.dq[i]);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += hermite_integral(dx, fa[k], fb[k], da[k], db[k]);
            }
        }
        for (a, t) in acc.iter_mut().zip(self.tail) {
            *a += t;
        }
        Ok(acc[0] + acc[2] - s * acc[1])
    }

    /// `F_1(s)` for `s` in the grid range.
    pub fn cdf(&self, s: f64) -> Result<f64> {
        Ok((-0.5 * self.exponent(s)?).exp().clamp(0.0, 1.0))
    }

    /// `F_1` on the whole line: 0 below the grid, 1 above it.
    pub fn cdf_extended(&self, s: f64) -> f64 {
        if s.is_nan() {
            f64::NAN
        } else if s < self.x_min {
            0.0
        } else if s > self.x0 {
            1.0
        } else {
            self.cdf(s).unwrap_or(f64::NAN)
        }
    }
}

/// Grid for the default `(x0, x_min, h)`, solved once.
pub fn default_grid() -> Result<&'static PainleveGrid> {
    static GRID: OnceLock<std::result::Result<PainleveGrid, String>> = OnceLock::new();
    GRID.get_or_init(|| solve_painleve(DEFAULT_X0, DEFAULT_X_MIN, DEFAULT_STEP).map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::invalid(format!("Painlevé solve failed: {e}")))
}

/// `F_1(s)` on the default grid.
pub fn tw1_cdf(s: f64) -> Result<f64> {
    default_grid()?.cdf(s)
}

/// Centred and scaled largest eigenvalue of a `p x n` covariance matrix,
/// `n^{2/3} g^{1/6} (1 + sqrt g)^{-4/3} (lambda / n - (1 + sqrt(p/n))^2)` with
/// `g = p / n`.
pub fn tw_scale(lambda: f64, p: usize, n: usize) -> f64 {
    let g = p as f64 / n as f64;
    let nf = n as f64;
    nf.powf(2.0 / 3.0) * g.powf(1.0 / 6.0) / (1.0 + g.sqrt()).powf(4.0 / 3.0) * (lambda / nf - (1.0 + g.sqrt()).powi(2))
}
