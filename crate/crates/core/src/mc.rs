//! Monte Carlo ensembles: replicate execution, per-replicate statistics and
//! their empirical summaries.
//!
//! Replicate `r` always draws from ChaCha stream `r` under the key
//! `base_seed`, so results do not depend on scheduling or thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{approx_set, sup_error, ApproxKind, OrderStats};
use crate::error::{Error, Result};
use crate::limits::Law;
use crate::linfield::{m_matrix, simulate_with_rng, sum_squares_m, CoeffMatrix, FieldRealization};
use crate::rand_heavy::{NormalizingSeq, TailModel};
use crate::rng::{stream_rng, SimRng};
use crate::spectra::{autocov_spectrum, covariance_eigs, diag_gap, sum_squares_eigs};
use crate::stats::quantile_sorted;
pub use crate::stats::ks_distance;
use crate::tracyw::tw_scale;

/// Largest tolerated share of failed replicates.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// A replicate that returned an error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

/// Outcome of [`run_replicates`]: values of the successful replicates in
/// replicate order.
#[derive(Debug, Clone)]
pub struct ReplicateResults<T> {
    pub values: Vec<(usize, T)>,
    pub failures: Vec<ReplicateFailure>,
}

/// Runs `f(rng, r)` for `r = 0..replicates` in parallel. Fails when more
/// than 1% of the replicates fail.
pub fn run_replicates<T, F>(replicates: usize, base_seed: u64, f: F) -> Result<ReplicateResults<T>>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> Result<T> + Sync,
{
    if replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    let raw: Vec<Result<T>> = (0..replicates)
        .into_par_iter()
        .map(|r| f(&mut stream_rng(base_seed, r as u64), r))
        .collect();
    let mut values = Vec::with_capacity(replicates);
    let mut failures = Vec::new();
    for (r, res) in raw.into_iter().enumerate() {
        match res {
            Ok(v) => values.push((r, v)),
            Err(e) => failures.push(ReplicateFailure {
                replicate: r,
                error: e.to_string(),
            }),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_RATE * replicates as f64 {
        return Err(Error::EnsembleFailed {
            failed: failures.len(),
            total: replicates,
            first: failures[0].error.clone(),
        });
    }
    Ok(ReplicateResults { values, failures })
}

/// Per-replicate scalar computed from one field realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stat", rename_all = "snake_case", deny_unknown_fields)]
pub enum Statistic {
    /// `lambda_(k) / a_np^2` of `X(0) X(0)'`.
    TopEigen { k: usize },
    /// `k`-th singular value of `X(0) X(lag)'` over `a_np^2`.
    Singular { lag: usize, k: usize },
    /// `(lambda_(1) - lambda_(2)) / lambda_(1)`.
    Gap,
    /// `(lambda_(2) / lambda_(1))^power`.
    Ratio21 {
        #[serde(default = "one")]
        power: f64,
    },
    /// `lambda_(i+1) / lambda_(i)`.
    Ratio { i: usize },
    /// `lambda_(1) / trace`.
    TraceRatio,
    /// Normalized sup error of an approximation over the top `m` values
    /// (`a_np^4` normalization for omega, where `lag` is the upper lag `s1`).
    SupError { kind: ApproxKind, lag: usize, m: usize },
    /// Signed normalized error of the largest value, `(lambda_(1) - approx_(1)) / a_np^2`.
    TopError { kind: ApproxKind, lag: usize },
    /// Number of normalized eigenvalues above `x`.
    PpCount { x: f64 },
    /// Centred and scaled `lambda_(1)` for comparison with Tracy–Widom.
    TracyWidom,
    /// `a_np^{-2} ||X X' - diag(X X')||_2`.
    DiagGap,
    /// Largest eigenvalue of `sum_{s=s0}^{s1} A(s) A(s)'` over `a_np^4`.
    SumSquaresTop { s0: usize, s1: usize },
    /// Always `value`.
    Constant { value: f64 },
}

fn one() -> f64 {
    1.0
}

impl Statistic {
    /// Largest lag the statistic reads.
    pub fn s_max(&self) -> usize {
        match *self {
            Statistic::Singular { lag, .. } | Statistic::SupError { lag, .. } | Statistic::TopError { lag, .. } => lag,
            Statistic::SumSquaresTop { s1, .. } => s1,
            _ => 0,
        }
    }

    fn needs_normalization(&self) -> bool {
        !matches!(
            self,
            Statistic::Gap
                | Statistic::Ratio21 { .. }
                | Statistic::Ratio { .. }
                | Statistic::TraceRatio
                | Statistic::TracyWidom
                | Statistic::Constant { .. }
        )
    }
}

/// The data-generating part of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSource {
    #[serde(default = "CoeffMatrix::identity")]
    pub coeffs: CoeffMatrix,
    pub noise: TailModel,
    pub p: usize,
    pub n: usize,
}

/// Where to look for an atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomProbe {
    pub location: f64,
    #[serde(default = "default_atom_eps")]
    pub epsilon: f64,
}

/// Atom tolerance for eigenvalue statistics.
pub const EIGEN_ATOM_EPS: f64 = 0.01;
/// Atom tolerance for exact limit samplers.
pub const EXACT_ATOM_EPS: f64 = 1e-6;

fn default_atom_eps() -> f64 {
    EIGEN_ATOM_EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub source: FieldSource,
    pub statistic: Statistic,
    /// Law for the KS comparison.
    #[serde(default)]
    pub law: Option<Law>,
    #[serde(default)]
    pub atom: Option<AtomProbe>,
    /// Histogram bin count override (Freedman–Diaconis otherwise).
    #[serde(default)]
    pub bins: Option<usize>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.source.p == 0 || self.source.n == 0 {
            return Err(Error::invalid("p and n must be at least 1"));
        }
        self.source.noise.validate()?;
        if self.statistic.needs_normalization() && self.source.noise.tail_index().is_none() {
            return Err(Error::UnsupportedVariant {
                model: self.source.noise.name(),
            });
        }
        if let Some(a) = self.atom {
            if !(a.epsilon > 0.0) {
                return Err(Error::invalid("atom epsilon must be positive"));
            }
        }
        Ok(())
    }
}

fn kth(values: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > values.len() {
        return Err(Error::invalid(format!("index {k} outside 1..={}", values.len())));
    }
    Ok(values[k - 1])
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::DegenerateSpectrum("largest eigenvalue is zero".into()))
    }
}

/// Evaluates a statistic on one realization; `a2` is `a_np^2` when needed.
pub fn evaluate_statistic(
    stat: &Statistic,
    real: &FieldRealization,
    coeffs: &CoeffMatrix,
    a2: Option<f64>,
) -> Result<f64> {
    let x0 = &real.panels[0].matrix;
    let (p, n) = x0.shape();
    let norm = || a2.ok_or_else(|| Error::invalid("statistic needs a heavy-tailed noise model"));
    let eig = || covariance_eigs(x0).map(|s| s.values);
    match *stat {
        Statistic::TopEigen { k } => Ok(kth(&eig()?, k)? / norm()?),
        Statistic::Singular { lag, k } => {
            let sv = autocov_spectrum(x0, &real.panels[lag].matrix, lag)?.values;
            Ok(kth(&sv, k)? / norm()?)
        }
        Statistic::Gap => {
            let l = eig()?;
            ratio(l[0] - l.get(1).copied().unwrap_or(0.0), l[0])
        }
        Statistic::Ratio21 { power } => {
            let l = eig()?;
            Ok(ratio(l.get(1).copied().unwrap_or(0.0), l[0])?.powf(power))
        }
        Statistic::Ratio { i } => {
            let l = eig()?;
            ratio(kth(&l, i + 1)?, kth(&l, i)?)
        }
        Statistic::TraceRatio => {
            let l = eig()?;
            ratio(l[0], l.iter().sum())
        }
        Statistic::SupError { kind, lag, m } => {
            let (spec, approx, power) = spectrum_and_approx(real, coeffs, kind, lag, m)?;
            Ok(sup_error(&spec, &approx, norm()?.powi(power), 1)?.sup)
        }
        Statistic::TopError { kind, lag } => {
            let (spec, approx, power) = spectrum_and_approx(real, coeffs, kind, lag, 1)?;
            Ok((spec[0] - approx[0]) / norm()?.powi(power))
        }
        Statistic::PpCount { x } => {
            let a2 = norm()?;
            Ok(eig()?.iter().filter(|&&l| l / a2 > x).count() as f64)
        }
        Statistic::TracyWidom => Ok(tw_scale(eig()?[0], p, n)),
        Statistic::DiagGap => Ok(diag_gap(x0, norm()?)?.gap),
        Statistic::SumSquaresTop { s0, s1 } => {
            let w = sum_squares_eigs(&real.panels, s0, s1)?;
            Ok(w[0] / norm()?.powi(2))
        }
        Statistic::Constant { value } => Ok(value),
    }
}

/// Leading `m` spectral values and the matching approximation, plus the
/// power of `a_np^2` that normalizes them.
///
/// For the kinds other than omega the spectrum is the singular values of
/// `X(0) X(lag)'`. For omega it is the eigenvalues of
/// `sum_{s=0}^{lag} A(s) A(s)'`, compared with `Z_(i)^4 v_j(0, lag)`.
pub fn spectrum_and_approx(
    real: &FieldRealization,
    coeffs: &CoeffMatrix,
    kind: ApproxKind,
    lag: usize,
    m: usize,
) -> Result<(Vec<f64>, Vec<f64>, i32)> {
    let x0 = &real.panels[0].matrix;
    let p = x0.rows();
    let m = m.min(p).max(1);
    let positive = |v: Vec<f64>| -> Vec<f64> {
        let r = v.iter().take_while(|&&x| x > 0.0).count().max(1);
        v[..r].to_vec()
    };
    let (spec, v, power) = if kind == ApproxKind::Omega {
        let spec = sum_squares_eigs(&real.panels[..=lag], 0, lag)?;
        (spec, positive(sum_squares_m(coeffs, 0, lag)?), 2)
    } else {
        let spec = autocov_spectrum(x0, &real.panels[lag].matrix, lag)?.values;
        (spec, positive(m_matrix(coeffs, lag)?.singular_values), 1)
    };
    let stats = match kind {
        ApproxKind::Delta | ApproxKind::Omega => OrderStats::truncated(&real.noise.matrix, m),
        _ => OrderStats::new(&real.noise.matrix),
    };
    let approx = approx_set(&stats, &v, kind, lag, m)?.values;
    Ok((spec[..m].to_vec(), approx, power))
}

/// Draws the coefficient array of one replicate.
pub type CoeffHook<'a> = dyn Fn(&mut SimRng) -> Result<CoeffMatrix> + Sync + 'a;

/// Runs an ensemble and summarizes it.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleSummary> {
    run_ensemble_inner(spec, None)
}

/// As [`run_ensemble`], with coefficients drawn per replicate from `hook`
/// (statistics are then conditional on the drawn array).
pub fn run_ensemble_with_hook(spec: &EnsembleSpec, hook: &CoeffHook<'_>) -> Result<EnsembleSummary> {
    run_ensemble_inner(spec, Some(hook))
}

fn run_ensemble_inner(spec: &EnsembleSpec, hook: Option<&CoeffHook<'_>>) -> Result<EnsembleSummary> {
    spec.validate()?;
    let src = &spec.source;
    let a2 = match src.noise.tail_index() {
        Some(_) => Some(NormalizingSeq::new(src.noise)?.a_np_squared(src.n, src.p)?),
        None => None,
    };
    let s_max = spec.statistic.s_max();
    let results = run_replicates(spec.replicates, spec.base_seed, |rng, _| {
        let drawn;
        let coeffs = match hook {
            Some(h) => {
                drawn = h(rng)?;
                &drawn
            }
            None => &src.coeffs,
        };
        let real = simulate_with_rng(coeffs, &src.noise, src.p, src.n, s_max, rng)?;
        evaluate_statistic(&spec.statistic, &real, coeffs, a2)
    })?;
    let values: Vec<f64> = results.values.iter().map(|&(_, v)| v).collect();
    let ids: Vec<usize> = results.values.iter().map(|&(r, _)| r).collect();
    EnsembleSummary::build(Some(spec.clone()), ids, values, results.failures, spec.law.as_ref(), spec.atom, spec.bins)
}

/// Empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ecdf { sorted }
    }

    /// Share of values `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `(x, F(x))` at each distinct value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = (i + 1) as f64 / n,
                _ => out.push((x, (i + 1) as f64 / n)),
            }
        }
        out
    }
}

/// Equal-width histogram; `mass` sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

/// Upper limit on automatically chosen bin counts.
pub const MAX_AUTO_BINS: usize = 1000;

impl Histogram {
    /// Freedman–Diaconis width `2 IQR n^{-1/3}` unless `bins` is given.
    pub fn new(values: &[f64], bins: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let (lo, hi) = (s[0], s[s.len() - 1]);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("histogram of non-finite values"));
        }
        let range = hi - lo;
        let count = match bins {
            Some(0) => return Err(Error::invalid("bin count must be positive")),
            Some(b) => b,
            None => {
                let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
                let width = 2.0 * iqr * (s.len() as f64).powf(-1.0 / 3.0);
                if range == 0.0 || !(width > 0.0) {
                    1
                } else {
                    ((range / width).ceil() as usize).clamp(1, MAX_AUTO_BINS)
                }
            }
        };
        let width = if range > 0.0 { range / count as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=count)
            .map(|i| if i == count { lo + range.max(if range > 0.0 { 0.0 } else { 1.0 }) } else { lo + i as f64 * width })
            .collect();
        let mut counts = vec![0usize; count];
        for &v in &s {
            let b = (((v - lo) / width) as usize).min(count - 1);
            counts[b] += 1;
        }
        let total = s.len() as f64;
        Ok(Histogram {
            edges,
            mass: counts.iter().map(|&c| c as f64 / total).collect(),
        })
    }
}

/// Share of samples within `epsilon` of `location`.
pub fn atom_mass(samples: &[f64], location: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    Ok(samples.iter().filter(|&&x| (x - location).abs() <= epsilon).count() as f64 / samples.len() as f64)
}

/// Silverman's rule-of-thumb bandwidth `0.9 min(sd, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let sd = crate::stats::variance(&s).sqrt();
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (s.len() as f64).powf(-0.2)
}

/// Gaussian kernel density estimate on `grid`.
pub fn kde(samples: &[f64], grid: &[f64], bandwidth: f64) -> Result<Vec<f64>> {
    if samples.is_empty() || !(bandwidth > 0.0) {
        return Err(Error::invalid("KDE needs samples and a positive bandwidth"));
    }
    let c = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            c * samples
                .iter()
                .map(|&s| (-0.5 * ((x - s) / bandwidth).powi(2)).exp())
                .sum::<f64>()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomEstimate {
    pub location: f64,
    pub epsilon: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub q01: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

/// Summary of one ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<EnsembleSpec>,
    pub replicates_ok: usize,
    pub failures: Vec<ReplicateFailure>,
    pub mean: f64,
    pub quantiles: Quantiles,
    pub ks: Option<f64>,
    pub atom: Option<AtomEstimate>,
    pub histogram: Histogram,
    /// Replicate ids of `values`.
    #[serde(skip)]
    pub ids: Vec<usize>,
    /// Statistic per successful replicate, in replicate order.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl EnsembleSummary {
    pub fn build(
        spec: Option<EnsembleSpec>,
        ids: Vec<usize>,
        values: Vec<f64>,
        failures: Vec<ReplicateFailure>,
        law: Option<&Law>,
        atom: Option<AtomProbe>,
        bins: Option<usize>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("no successful replicates".into()));
        }
        let ecdf = Ecdf::new(&values);
        let s = ecdf.sorted();
        let ks = match law {
            Some(l) => {
                l.cdf(s[0])?;
                Some(ks_distance(&values, |x| l.cdf(x).unwrap_or(f64::NAN))?)
            }
            None => None,
        };
        let atom = match atom {
            Some(a) => Some(AtomEstimate {
                location: a.location,
                epsilon: a.epsilon,
                mass: atom_mass(&values, a.location, a.epsilon)?,
            }),
            None => None,
        };
        Ok(EnsembleSummary {
            spec,
            replicates_ok: values.len(),
            failures,
            mean: crate::stats::mean(&values),
            quantiles: Quantiles {
                q01: quantile_sorted(s, 0.01),
                q10: quantile_sorted(s, 0.1),
                q50: quantile_sorted(s, 0.5),
                q90: quantile_sorted(s, 0.9),
                q99: quantile_sorted(s, 0.99),
            },
            ks,
            atom,
            histogram: Histogram::new(&values, bins)?,
            ids,
            values,
        })
    }

    pub fn ecdf(&self) -> Ecdf {
        Ecdf::new(&self.values)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("JSON encoding failed: {e}")))
    }

    /// `replicate,value` rows.
    pub fn write_values_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["replicate", "value"])?;
        for (r, v) in self.ids.iter().zip(&self.values) {
            out.write_record([r.to_string(), format!("{v:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}
