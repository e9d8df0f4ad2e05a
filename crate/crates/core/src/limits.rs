//! Limit laws of the largest eigenvalues and their Monte Carlo samplers.
//!
//! The limit point process of normalized eigenvalues is built from
//! `Gamma_i = E_1 + ... + E_i` with iid standard exponentials `E_i`: its points
//! are `Gamma_i^{-2/alpha} v_j`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rand_heavy::{a_of, tail_prob, TailModel};
use crate::rng::{open01, stream_rng};

/// Partial sums of iid standard exponentials.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaPoints {
    pub points: Vec<f64>,
}

impl GammaPoints {
    pub fn sample<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut acc = 0.0;
        let points = (0..k)
            .map(|_| {
                acc += -open01(rng).ln();
                acc
            })
            .collect();
        GammaPoints { points }
    }

    /// `Gamma_i^{-2/alpha}` for all stored points.
    pub fn frechet_points(&self, alpha: f64) -> Vec<f64> {
        self.points.iter().map(|g| g.powf(-2.0 / alpha)).collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 4.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 4)".into(),
        })
    }
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value: x,
            range: "(0, inf)".into(),
        })
    }
}

/// `exp(-x^{-alpha_half})`.
pub fn frechet_cdf(alpha_half: f64, x: f64) -> Result<f64> {
    check_positive("alpha_half", alpha_half)?;
    check_positive("x", x)?;
    Ok((-x.powf(-alpha_half)).exp())
}

/// Limit law of the `k`-th largest normalized eigenvalue in the iid case:
/// `P(Poisson(mu) < k)` with `mu = x^{-alpha/2}`.
pub fn kth_max_cdf(k: usize, alpha: f64, x: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    check_alpha(alpha)?;
    check_positive("x", x)?;
    let mu = x.powf(-alpha / 2.0);
    let mut term = (-mu).exp();
    let mut sum = term;
    for s in 1..k {
        term *= mu / s as f64;
        sum += term;
    }
    Ok(sum.min(1.0))
}

/// One draw of `Gamma_k^{-2/alpha}`.
pub fn kth_max_sample<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> f64 {
    GammaPoints::sample(k, rng).points[k - 1].powf(-2.0 / alpha)
}

fn check_unit_open(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "x",
            value: x,
            range: "(0, 1)".into(),
        })
    }
}

/// `P((Gamma_i / Gamma_{i+1})^{2/alpha} <= x) = x^{i alpha / 2}`.
pub fn ratio_law_cdf(i: usize, alpha: f64, x: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::invalid("i must be at least 1"));
    }
    check_positive("alpha", alpha)?;
    check_unit_open(x)?;
    Ok(x.powf(i as f64 * alpha / 2.0))
}

/// Inverse of [`ratio_law_cdf`].
pub fn ratio_law_quantile(i: usize, alpha: f64, q: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::invalid("i must be at least 1"));
    }
    check_positive("alpha", alpha)?;
    check_unit_open(q)?;
    Ok(q.powf(2.0 / (i as f64 * alpha)))
}

/// Quantiles `qs` of the ratio law for `i = 1..=m`; row `i-1` holds index `i`.
pub fn ratio_law_bands(m: usize, alpha: f64, qs: &[f64]) -> Result<Vec<Vec<f64>>> {
    (1..=m)
        .map(|i| qs.iter().map(|&q| ratio_law_quantile(i, alpha, q)).collect())
        .collect()
}

/// Limit law of the self-normalized gap `(lambda_1 - lambda_2) / lambda_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapLimit {
    pub alpha: f64,
    /// `1 - v2/v1`.
    pub atom_location: f64,
    /// `(v2/v1)^{alpha/2}`.
    pub atom_mass: f64,
}

pub fn gap_limit(alpha: f64, v1: f64, v2: f64) -> Result<GapLimit> {
    check_alpha(alpha)?;
    check_positive("v1", v1)?;
    if !(v2 >= 0.0) || v2 > v1 {
        return Err(Error::OutOfRange {
            what: "v2",
            value: v2,
            range: format!("[0, {v1}]"),
        });
    }
    let r = v2 / v1;
    Ok(GapLimit {
        alpha,
        atom_location: 1.0 - r,
        atom_mass: r.powf(alpha / 2.0),
    })
}

impl GapLimit {
    /// Continuous part `1 - (1 - x)^{alpha/2}` below the atom, 1 from the
    /// atom on.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x >= self.atom_location {
            1.0
        } else {
            1.0 - (1.0 - x).powf(self.alpha / 2.0)
        }
    }

    /// Law of `lambda_2 / lambda_1 = 1 - gap`: `y^{alpha/2}` on `[v2/v1, 1)`.
    pub fn ratio21_cdf(&self, y: f64) -> f64 {
        let lo = 1.0 - self.atom_location;
        if y < lo {
            0.0
        } else if y >= 1.0 {
            1.0
        } else {
            y.powf(self.alpha / 2.0)
        }
    }
}

/// One draw from the limit of `lambda_2 / lambda_1`.
pub fn ratio21_limit_sample<R: Rng + ?Sized>(alpha: f64, v1: f64, v2: f64, rng: &mut R) -> Result<f64> {
    let law = gap_limit(alpha, v1, v2)?;
    let u: f64 = rng.random();
    Ok(if u < law.atom_mass {
        v2 / v1
    } else {
        u.powf(2.0 / alpha)
    })
}

/// Limit of `P(lambda_2 / lambda_1 <= v2/v1 | lambda_1 > a_np^2 x)`, that is
/// `P(Gamma_1/Gamma_2 <= t | Gamma_1 < c)` with `t = (v2/v1)^{alpha/2}` and
/// `c = (x/v1)^{-alpha/2}`. Closed form `t (1 - e^{-c/t}) / (1 - e^{-c})`.
pub fn atom_given_large(alpha: f64, v1: f64, v2: f64, x: f64) -> Result<f64> {
    let t = gap_limit(alpha, v1, v2)?.atom_mass;
    check_positive("x", x)?;
    let c = (x / v1).powf(-alpha / 2.0);
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t * (-(c / t)).exp_m1() / (-c).exp_m1())
}

/// Default truncation of `sum_i Gamma_i^{-2/alpha}`.
pub const DEFAULT_TRACE_TRUNCATION: usize = 10_000;

/// Upper bound `K^{1-2/alpha} / (2/alpha - 1)` on the neglected tail of the
/// truncated series.
pub fn trace_truncation_bound(alpha: f64, k: usize) -> f64 {
    let e = 2.0 / alpha;
    (k as f64).powf(1.0 - e) / (e - 1.0)
}

/// One draw of `(v_1 / sum v_j) Gamma_1^{-2/alpha} / sum_{i<=K} Gamma_i^{-2/alpha}`,
/// the limit of `lambda_(1) / trace`. Truncation biases the draw upward.
pub fn trace_ratio_limit_sample<R: Rng + ?Sized>(alpha: f64, v: &[f64], k: usize, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 2)".into(),
        });
    }
    if k < 100 {
        return Err(Error::invalid(format!("truncation K must be at least 100, got {k}")));
    }
    let factor = v_factor(v)?;
    let e = -2.0 / alpha;
    let mut g = 0.0;
    let mut first = 0.0;
    let mut total = 0.0;
    for i in 0..k {
        g += -open01(rng).ln();
        let term = g.powf(e);
        if i == 0 {
            first = term;
        }
        total += term;
    }
    Ok(factor * first / total)
}

/// `v_1 / sum_j v_j` after validation.
pub fn v_factor(v: &[f64]) -> Result<f64> {
    if v.is_empty() || v.iter().any(|x| !(*x >= 0.0)) || !(v[0] > 0.0) {
        return Err(Error::invalid("v must be nonnegative with v_1 > 0"));
    }
    if v.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("v must be descending"));
    }
    Ok(v[0] / v.iter().sum::<f64>())
}

/// Marčenko–Pastur density with ratio `gamma`; the point mass at the origin
/// for `gamma > 1` is reported by [`mp_point_mass`].
pub fn mp_density(gamma: f64, x: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    let a = (1.0 - gamma.sqrt()).powi(2);
    let b = (1.0 + gamma.sqrt()).powi(2);
    if x <= a || x >= b || x <= 0.0 {
        return Ok(0.0);
    }
    Ok(((b - x) * (x - a)).sqrt() / (2.0 * std::f64::consts::PI * x * gamma))
}

/// `max(0, 1 - 1/gamma)`.
pub fn mp_point_mass(gamma: f64) -> Result<f64> {
    check_positive("gamma", gamma)?;
    Ok((1.0 - 1.0 / gamma).max(0.0))
}

/// Default admissibility factor `x >= factor * a_n` for Nagaev ratios.
pub const NAGAEV_MIN_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NagaevPoint {
    pub x: f64,
    pub exceedances: usize,
    /// `P(S_n > x) / (n P(|Z| > x))`.
    pub ratio: f64,
}

/// Empirical `P(S_n > x) / (n P(|Z| > x))` over `replicates` sums of `n`
/// draws; replicate `r` uses stream `r` of `seed`.
pub fn nagaev_ratio(
    model: &TailModel,
    n: usize,
    x_grid: &[f64],
    replicates: usize,
    seed: u64,
    min_factor: f64,
) -> Result<Vec<NagaevPoint>> {
    model.validate()?;
    let alpha = model
        .tail_index()
        .ok_or(Error::UnsupportedVariant { model: model.name() })?;
    if !(alpha < 2.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            range: "(0, 2)".into(),
        });
    }
    if n < 2 || replicates == 0 {
        return Err(Error::invalid("need n >= 2 and at least one replicate"));
    }
    let a_n = a_of(model, n as u64)?;
    for &x in x_grid {
        if !(x >= min_factor * a_n) {
            return Err(Error::OutOfRange {
                what: "x",
                value: x,
                range: format!("[{}, inf) (= {min_factor} a_n)", min_factor * a_n),
            });
        }
    }
    let sums: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            (0..n).map(|_| model.draw(&mut rng)).sum()
        })
        .collect();
    x_grid
        .iter()
        .map(|&x| {
            let exceedances = sums.iter().filter(|&&s| s > x).count();
            let denom = n as f64 * tail_prob(model, x)?;
            Ok(NagaevPoint {
                x,
                exceedances,
                ratio: exceedances as f64 / replicates as f64 / denom,
            })
        })
        .collect()
}

/// `#{i : values_i > x}` for each `x`.
pub fn pp_count_check(normalized: &[f64], x_grid: &[f64]) -> Vec<usize> {
    x_grid
        .iter()
        .map(|&x| normalized.iter().filter(|&&v| v > x).count())
        .collect()
}

/// Mean `sum_j (x / v_j)^{-alpha/2}` of the limit count above `x`.
pub fn poisson_mean(alpha: f64, v: &[f64], x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_positive("x", x)?;
    Ok(v.iter().filter(|&&vj| vj > 0.0).map(|vj| (x / vj).powf(-alpha / 2.0)).sum())
}

/// Points `Gamma_i^{-2/alpha} (v_j(0), ..., v_j(S))` of the joint limit over
/// lags, for the `k` smallest `Gamma_i` and every `j`. `v_by_lag[s][j]` is
/// `v_j(s)`; shorter lags are padded with zeros.
pub fn joint_lag_points<R: Rng + ?Sized>(
    alpha: f64,
    v_by_lag: &[Vec<f64>],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_alpha(alpha)?;
    let width = v_by_lag.iter().map(Vec::len).max().unwrap_or(0);
    let gammas = GammaPoints::sample(k, rng).frechet_points(alpha);
    let mut out = Vec::with_capacity(k * width);
    for g in &gammas {
        for j in 0..width {
            out.push(v_by_lag.iter().map(|v| g * v.get(j).copied().unwrap_or(0.0)).collect());
        }
    }
    Ok(out)
}

/// A named law evaluated by the CLI and the C interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Frechet { alpha_half: f64 },
    KthMax { k: usize, alpha: f64 },
    Ratio { i: usize, alpha: f64 },
    Gap { alpha: f64, v1: f64, v2: f64 },
    Ratio21 { alpha: f64, v1: f64, v2: f64 },
    /// Conditional atom probability as a function of the threshold `x`.
    AtomGivenLarge { alpha: f64, v1: f64, v2: f64 },
    MarchenkoPastur { gamma: f64 },
    TracyWidom,
}

impl Law {
    /// CDF, or the density for Marčenko–Pastur.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match *self {
            Law::Frechet { alpha_half } => frechet_cdf(alpha_half, x),
            Law::KthMax { k, alpha } => kth_max_cdf(k, alpha, x),
            Law::Ratio { i, alpha } => ratio_law_cdf(i, alpha, x),
            Law::Gap { alpha, v1, v2 } => Ok(gap_limit(alpha, v1, v2)?.cdf(x)),
            Law::Ratio21 { alpha, v1, v2 } => Ok(gap_limit(alpha, v1, v2)?.ratio21_cdf(x)),
            Law::AtomGivenLarge { alpha, v1, v2 } => atom_given_large(alpha, v1, v2, x),
            Law::MarchenkoPastur { gamma } => mp_density(gamma, x),
            Law::TracyWidom => crate::tracyw::tw1_cdf(x),
        }
    }

    /// CDF on the whole real line (0 or 1 outside the support), for KS
    /// comparisons. Marčenko–Pastur is a density and is rejected.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::invalid("x is NaN"));
        }
        match *self {
            Law::Frechet { .. } | Law::KthMax { .. } if x <= 0.0 => Ok(0.0),
            Law::Ratio { .. } if x <= 0.0 => Ok(0.0),
            Law::Ratio { .. } if x >= 1.0 => Ok(1.0),
            Law::MarchenkoPastur { .. } => Err(Error::invalid("Marčenko–Pastur is evaluated as a density")),
            Law::AtomGivenLarge { .. } => Err(Error::invalid("the conditional atom curve is not a distribution function")),
            Law::TracyWidom => Ok(crate::tracyw::default_grid()?.cdf_extended(x)),
            _ => self.eval(x),
        }
    }

    pub fn column_name(&self) -> &'static str {
        match self {
            Law::MarchenkoPastur { .. } => "density",
            Law::AtomGivenLarge { .. } => "probability",
            _ => "cdf",
        }
    }
}

/// Writes `(x, value)` rows with a header `x,<column>`.
pub fn write_curve<W: std::io::Write>(w: W, column: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", column])?;
    for (x, y) in points {
        out.write_record([format!("{x:e}"), format!("{y:e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::rng::seeded;
    use crate::stats::ks_distance;

    #[test]
    fn frechet_examples() {
        assert!((frechet_cdf(0.8, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(frechet_cdf(0.8, 1e12).unwrap() > 1.0 - 1e-9);
        assert!(frechet_cdf(0.8, 0.0).is_err());
        assert!(frechet_cdf(0.8, -1.0).is_err());
    }

    #[test]
    fn frechet_matches_first_gamma_point() {
        let alpha = 1.6;
        let mut rng = seeded(1);
        let s: Vec<f64> = (0..100_000).map(|_| kth_max_sample(1, alpha, &mut rng)).collect();
        let d = ks_distance(&s, |x| if x > 0.0 { frechet_cdf(alpha / 2.0, x).unwrap() } else { 0.0 }).unwrap();
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn kth_max_examples() {
        for x in [0.3, 1.0, 5.0] {
            assert!((kth_max_cdf(1, 1.6, x).unwrap() - frechet_cdf(0.8, x).unwrap()).abs() < 1e-15);
        }
        assert!((kth_max_cdf(2, 2.0, 1.0).unwrap() - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!(kth_max_cdf(0, 2.0, 1.0).is_err());
        let mut rng = seeded(2);
        let s: Vec<f64> = (0..100_000).map(|_| kth_max_sample(3, 1.2, &mut rng)).collect();
        let d = ks_distance(&s, |x| if x > 0.0 { kth_max_cdf(3, 1.2, x).unwrap() } else { 0.0 }).unwrap();
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn kth_max_is_monotone_in_k() {
        for &x in &[0.05, 0.4, 1.0, 3.0, 40.0] {
            for k in 1..10 {
                assert!(kth_max_cdf(k, 1.3, x).unwrap() <= kth_max_cdf(k + 1, 1.3, x).unwrap());
            }
        }
    }

    #[test]
    fn ratio_law_examples() {
        assert!((ratio_law_cdf(1, 2.0, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(ratio_law_cdf(3, 1.0, 1.0 - 1e-12).unwrap() > 1.0 - 1e-10);
        assert!(ratio_law_cdf(1, 1.0, 1.0).is_err());
        for i in 1..6 {
            for q in [0.01, 0.5, 0.99] {
                let x = ratio_law_quantile(i, 1.3, q).unwrap();
                assert!((ratio_law_cdf(i, 1.3, x).unwrap() - q).abs() < 1e-12);
            }
        }
        let bands = ratio_law_bands(2, 2.0, &[0.01, 0.5, 0.99]).unwrap();
        assert!((bands[0][1] - 0.5).abs() < 1e-15);
        assert!((bands[1][1] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ratio_law_matches_gamma_ratios() {
        let mut rng = seeded(4);
        for i in [1usize, 3] {
            let s: Vec<f64> = (0..100_000)
                .map(|_| {
                    let g = GammaPoints::sample(i + 1, &mut rng).points;
                    (g[i - 1] / g[i]).powf(2.0 / 1.5)
                })
                .collect();
            let d = ks_distance(&s, |x| x.clamp(0.0, 1.0).powf(i as f64 * 0.75)).unwrap();
            assert!(d < 0.01, "i={i} d={d}");
        }
    }

    #[test]
    fn gap_examples() {
        let g = gap_limit(1.5, 8.0, 2.0).unwrap();
        assert_eq!(g.atom_location, 0.75);
        assert!((g.atom_mass - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!((g.atom_mass - 0.35355).abs() < 1e-5);
        let g0 = gap_limit(1.5, 8.0, 0.0).unwrap();
        assert_eq!(g0.atom_mass, 0.0);
        assert!((g0.cdf(0.5) - (1.0 - 0.5f64.powf(0.75))).abs() < 1e-15);
        assert!(gap_limit(1.5, 2.0, 8.0).is_err());
    }

    #[test]
    fn gap_cdf_accounts_for_all_mass() {
        for (alpha, v2) in [(0.6, 2.0), (1.5, 2.0), (3.0, 5.0), (1.0, 0.0)] {
            let g = gap_limit(alpha, 8.0, v2).unwrap();
            let below = g.cdf(g.atom_location.next_down());
            if g.atom_mass > 0.0 {
                assert!((below + g.atom_mass - 1.0).abs() < 1e-12);
            }
            assert_eq!(g.cdf(g.atom_location), 1.0);
            assert_eq!(g.cdf(-0.1), 0.0);
        }
    }

    #[test]
    fn ratio21_sampler_examples() {
        let (alpha, v1, v2) = (1.5, 8.0, 2.0);
        let mut rng = seeded(5);
        let s: Vec<f64> = (0..100_000)
            .map(|_| ratio21_limit_sample(alpha, v1, v2, &mut rng).unwrap())
            .collect();
        assert!(s.iter().all(|&y| (0.25..1.0).contains(&y)));
        let atom = s.iter().filter(|&&y| y == 0.25).count() as f64 / s.len() as f64;
        assert!((atom - 2f64.powf(-1.5)).abs() < 0.005, "{atom}");
        let law = gap_limit(alpha, v1, v2).unwrap();
        assert!(ks_distance(&s, |y| law.ratio21_cdf(y)).unwrap() < 0.01);
        let s0: Vec<f64> = (0..100_000)
            .map(|_| ratio21_limit_sample(alpha, v1, 0.0, &mut rng).unwrap())
            .collect();
        assert!(ks_distance(&s0, |y| y.clamp(0.0, 1.0).powf(alpha / 2.0)).unwrap() < 0.01);
    }

    #[test]
    fn atom_given_large_matches_gamma_simulation() {
        let (alpha, v1, v2) = (1.5f64, 8.0f64, 2.0f64);
        let mut rng = seeded(11);
        let t = 2f64.powf(-alpha);
        for x in [0.5, 4.0, 40.0] {
            let c = (x / v1).powf(-alpha / 2.0);
            let (mut hit, mut total) = (0usize, 0usize);
            while total < 20_000 {
                let g = GammaPoints::sample(2, &mut rng).points;
                if g[0] < c {
                    total += 1;
                    hit += usize::from(g[0] / g[1] <= t);
                }
            }
            let want = atom_given_large(alpha, v1, v2, x).unwrap();
            let got = hit as f64 / total as f64;
            assert!((got - want).abs() < 4.0 * (want * (1.0 - want) / total as f64).sqrt() + 1e-3, "x={x}: {got} vs {want}");
        }
        assert!(atom_given_large(alpha, v1, v2, 1e6).unwrap() > 0.999);
        assert!((atom_given_large(alpha, v1, v2, 1e-8).unwrap() - t).abs() < 1e-3);
        let g: Vec<f64> = (1..50).map(|i| atom_given_large(alpha, v1, v2, i as f64).unwrap()).collect();
        assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trace_ratio_examples() {
        let mut rng = seeded(6);
        let alpha = 1.2;
        let a = trace_ratio_limit_sample(alpha, &[1.0], 200, &mut rng).unwrap();
        assert!(a > 0.0 && a <= 1.0);
        for _ in 0..200 {
            let b = trace_ratio_limit_sample(alpha, &[8.0, 2.0], 200, &mut rng).unwrap();
            assert!(b > 0.0 && b <= 0.8);
        }
        assert!((v_factor(&[8.0, 2.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(trace_ratio_limit_sample(2.0, &[1.0], 200, &mut rng).is_err());
        assert!(trace_ratio_limit_sample(1.0, &[1.0], 50, &mut rng).is_err());
        // same Gamma sequence: MA draws are exactly 4/5 of the iid draws
        let x = trace_ratio_limit_sample(alpha, &[1.0], 500, &mut seeded(9)).unwrap();
        let y = trace_ratio_limit_sample(alpha, &[8.0, 2.0], 500, &mut seeded(9)).unwrap();
        assert!((y - 0.8 * x).abs() < 1e-15);
        assert!((trace_truncation_bound(1.0, 10_000) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn mp_examples() {
        assert!((mp_density(1.0, 2.0).unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert_eq!(mp_density(0.25, 0.1).unwrap(), 0.0);
        assert_eq!(mp_density(0.25, 2.5).unwrap(), 0.0);
        for gamma in [0.2, 0.5, 1.0, 2.0, 4.0] {
            let a = (1.0 - f64::sqrt(gamma)).powi(2);
            let b = (1.0 + f64::sqrt(gamma)).powi(2);
            // substitute x = a + (b - a) sin^2(u) to remove the edge singularities
            let mass = integrate(
                |u| {
                    let x = a + (b - a) * u.sin().powi(2);
                    mp_density(gamma, x).unwrap() * (b - a) * (2.0 * u).sin()
                },
                0.0,
                std::f64::consts::FRAC_PI_2,
                1e-12,
            );
            assert!((mass - (1.0f64).min(1.0 / gamma)).abs() < 1e-6, "gamma={gamma} mass={mass}");
            assert!((mass + mp_point_mass(gamma).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn nagaev_ratio_near_one_half() {
        let m = TailModel::pareto(1.6);
        let a_n = a_of(&m, 1000).unwrap();
        let pts = nagaev_ratio(&m, 1000, &[10.0 * a_n], 20_000, 3, NAGAEV_MIN_FACTOR).unwrap();
        assert!((0.35..0.65).contains(&pts[0].ratio), "{pts:?}");
        assert!(nagaev_ratio(&m, 1000, &[a_n], 10, 3, NAGAEV_MIN_FACTOR).is_err());
        assert!(nagaev_ratio(&TailModel::pareto(2.5), 1000, &[1e9], 10, 3, NAGAEV_MIN_FACTOR).is_err());
    }

    #[test]
    fn counts_and_poisson_mean() {
        assert_eq!(pp_count_check(&[5.0, 2.0, 1.0, 0.5], &[0.7, 3.0, 10.0]), vec![3, 1, 0]);
        assert!((poisson_mean(1.6, &[1.0], 2.0).unwrap() - 2f64.powf(-0.8)).abs() < 1e-15);
        let want = 0.5f64.powf(-0.3) + 2f64.powf(-0.3);
        assert!((poisson_mean(0.6, &[8.0, 2.0], 4.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn iid_limit_counts_have_poisson_mean() {
        let alpha = 1.6;
        let mut rng = seeded(12);
        let reps = 20_000;
        let x = 0.5;
        let mut total = 0usize;
        for _ in 0..reps {
            let pts = GammaPoints::sample(60, &mut rng).frechet_points(alpha);
            total += pp_count_check(&pts, &[x])[0];
        }
        let mean = total as f64 / reps as f64;
        let want = poisson_mean(alpha, &[1.0], x).unwrap();
        assert!((mean - want).abs() < 4.0 * (want / reps as f64).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn joint_points_share_gamma() {
        let pts = joint_lag_points(1.0, &[vec![8.0, 2.0], vec![5.0]], 3, &mut seeded(1)).unwrap();
        assert_eq!(pts.len(), 6);
        assert!((pts[0][1] / pts[0][0] - 5.0 / 8.0).abs() < 1e-15);
        assert_eq!(pts[1][1], 0.0);
    }

    #[test]
    fn law_enum_dispatch_and_curves() {
        let law: Law = serde_json::from_str(r#"{"law":"kth_max","k":2,"alpha":2.0}"#).unwrap();
        assert!((law.eval(1.0).unwrap() - 2.0 * (-1f64).exp()).abs() < 1e-15);
        let mut buf = Vec::new();
        write_curve(&mut buf, law.column_name(), &[(1.0, 0.5)]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,cdf"));
    }
}
