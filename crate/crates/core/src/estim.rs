//! Analysis of observed panels: Hill tail indices, the Fréchet rank
//! transform, eigenvalue-ratio diagnostics and the sum-of-squares report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::ratio_law_quantile;
use crate::matrix::{Matrix, Panel, PanelRole};
use crate::spectra::{covariance_eigs, sum_squares_eigs};

/// Minimum number of observations per series.
pub const MIN_OBSERVATIONS: usize = 10;
/// Band exponent default for raw returns.
pub const RAW_BAND_ALPHA: f64 = 2.3;
/// Band exponent default for rank-transformed data (standard Fréchet rows).
pub const RANK_BAND_ALPHA: f64 = 1.0;

/// How series are laid out in a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Header row of labels, one column per series, one line per time point.
    #[default]
    Columns,
    /// One line per series: label followed by the observations; the first
    /// line is a header and is skipped.
    Rows,
}

/// `p` series of `n` observations each.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    pub labels: Vec<String>,
    pub data: Matrix,
    /// Labels of series dropped for missing or unparsable values.
    pub rejected: Vec<String>,
}

fn parse_cell(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl ReturnsPanel {
    pub fn new(labels: Vec<String>, data: Matrix) -> Result<Self> {
        if labels.len() != data.rows() {
            return Err(Error::LengthMismatch {
                expected: data.rows(),
                got: labels.len(),
            });
        }
        if data.rows() == 0 || data.cols() < MIN_OBSERVATIONS {
            return Err(Error::InsufficientData(format!(
                "need at least one series with {MIN_OBSERVATIONS} observations, got {} x {}",
                data.rows(),
                data.cols()
            )));
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("panel has non-finite values"));
        }
        Ok(ReturnsPanel {
            labels,
            data,
            rejected: Vec::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.data.rows()
    }

    pub fn n(&self) -> usize {
        self.data.cols()
    }

    /// Reads a CSV file; series with a missing or non-numeric cell are
    /// dropped and listed in `rejected`.
    pub fn read_csv<R: std::io::Read>(r: R, layout: Layout) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(layout == Layout::Rows)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut series: Vec<(String, Vec<Option<f64>>)> = Vec::new();
        match layout {
            Layout::Columns => {
                let labels: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
                series = labels.into_iter().map(|l| (l, Vec::new())).collect();
                for rec in rdr.records() {
                    let rec = rec?;
                    for (s, cell) in series.iter_mut().zip(rec.iter()) {
                        s.1.push(parse_cell(cell));
                    }
                }
            }
            Layout::Rows => {
                for rec in rdr.records() {
                    let rec = rec?;
                    let mut it = rec.iter();
                    let label = it.next().unwrap_or_default().to_owned();
                    series.push((label, it.map(parse_cell).collect()));
                }
                let width = series.iter().map(|s| s.1.len()).max().unwrap_or(0);
                for s in series.iter_mut() {
                    s.1.resize(width, None);
                }
            }
        }
        let mut labels = Vec::new();
        let mut rejected = Vec::new();
        let mut data = Vec::new();
        let n = series.first().map_or(0, |s| s.1.len());
        for (label, values) in series {
            if values.iter().all(Option::is_some) {
                labels.push(label);
                data.extend(values.into_iter().flatten());
            } else {
                rejected.push(label);
            }
        }
        let p = labels.len();
        let mut panel = ReturnsPanel::new(labels, Matrix::from_vec(p, n, data)?)?;
        panel.rejected = rejected;
        Ok(panel)
    }

    /// The data tagged as a returns panel.
    pub fn panel(&self) -> Panel {
        Panel::new(PanelRole::Returns, self.data.clone())
    }
}

/// Hill estimate from the `k` largest of the positive entries of `sample`.
pub fn hill(sample: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid("Hill estimator needs k >= 2"));
    }
    let mut pos: Vec<f64> = sample.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    if pos.len() < k + 1 {
        return Err(Error::InsufficientData(format!(
            "need {} positive observations, got {}",
            k + 1,
            pos.len()
        )));
    }
    pos.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let threshold = pos[k];
    // fixed summation order, so the estimate does not depend on input order
    pos[..k].sort_by(|a, b| b.total_cmp(a));
    let mean_log: f64 = pos[..k].iter().map(|y| (y / threshold).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::InsufficientData("top order statistics are all tied".into()));
    }
    Ok(1.0 / mean_log)
}

/// Default Hill `k`, `floor(0.05 n)`.
pub fn default_hill_k(n: usize) -> usize {
    n / 20
}

/// Lower- and upper-tail indices of one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailIndexPair {
    pub label: String,
    pub k: usize,
    /// From the absolute values of the negative observations.
    pub alpha_lower: Option<f64>,
    /// From the positive observations.
    pub alpha_upper: Option<f64>,
    /// Why an estimate is missing.
    pub note: Option<String>,
}

/// Hill estimates of both tails for every series; rows with too few
/// observations of one sign get `None` and a note.
pub fn tail_pairs(panel: &ReturnsPanel, k: usize) -> Result<Vec<TailIndexPair>> {
    if k < 2 || 2 * k >= panel.n() {
        return Err(Error::invalid(format!("need 2 <= k < n/2, got k = {k}, n = {}", panel.n())));
    }
    Ok((0..panel.p())
        .into_par_iter()
        .map(|i| {
            let row = panel.data.row(i);
            let losses: Vec<f64> = row.iter().map(|x| -x).collect();
            let upper = hill(row, k);
            let lower = hill(&losses, k);
            let mut notes = Vec::new();
            if let Err(e) = &lower {
                notes.push(format!("lower: {e}"));
            }
            if let Err(e) = &upper {
                notes.push(format!("upper: {e}"));
            }
            TailIndexPair {
                label: panel.labels[i].clone(),
                k,
                alpha_lower: lower.ok(),
                alpha_upper: upper.ok(),
                note: (!notes.is_empty()).then(|| notes.join("; ")),
            }
        })
        .collect())
}

/// `X_it = -1 / log(rank_it / (n + 1))` per row, with ties ranked by order
/// of occurrence.
pub fn rank_transform(data: &Matrix) -> Result<Panel> {
    let (p, n) = data.shape();
    if n < 2 {
        return Err(Error::InsufficientData("rank transform needs n >= 2".into()));
    }
    let mut out = Matrix::zeros(p, n);
    let denom = (n + 1) as f64;
    for i in 0..p {
        let row = data.row(i);
        if row.iter().all(|&v| v == row[0]) {
            return Err(Error::DegenerateSpectrum(format!("row {i} is constant; its ranks are all tied")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let dst = out.row_mut(i);
        for (r, &t) in order.iter().enumerate() {
            dst[t] = -1.0 / ((r + 1) as f64 / denom).ln();
        }
    }
    Ok(Panel::new(PanelRole::RankTransformed, out))
}

/// One row of the eigenvalue-ratio table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRatioRow {
    pub i: usize,
    /// `log(lambda_(i+1) / lambda_(i))`.
    pub log_ratio: f64,
    pub q01: f64,
    pub q50: f64,
    pub q99: f64,
}

impl EigenRatioRow {
    pub fn inside_band(&self) -> bool {
        self.q01 <= self.log_ratio && self.log_ratio <= self.q99
    }
}

/// Consecutive eigenvalue ratios of `X X'` for `i = 1..=m` with the 1%, 50%
/// and 99% quantiles of `log((Gamma_i / Gamma_{i+1})^{2/alpha})`.
pub fn eigen_ratio_report(x: &Matrix, m: usize, alpha_for_bands: f64) -> Result<Vec<EigenRatioRow>> {
    let p = x.rows();
    if m == 0 || m >= p {
        return Err(Error::invalid(format!("need 1 <= m < p = {p}, got m = {m}")));
    }
    let lam = covariance_eigs(x)?.values;
    if let Some(i) = lam[..=m].iter().position(|&l| !(l > 0.0)) {
        return Err(Error::DegenerateSpectrum(format!("eigenvalue {} is zero", i + 1)));
    }
    (1..=m)
        .map(|i| {
            let band = |q: f64| ratio_law_quantile(i, alpha_for_bands, q).map(f64::ln);
            Ok(EigenRatioRow {
                i,
                log_ratio: (lam[i] / lam[i - 1]).ln(),
                q01: band(0.01)?,
                q50: band(0.5)?,
                q99: band(0.99)?,
            })
        })
        .collect()
}

/// `X(s)` for `s = 0..=s_max` from one data panel: columns `s .. s + n'`
/// with `n' = n - s_max`.
pub fn lagged_panels(data: &Matrix, s_max: usize) -> Result<Vec<Panel>> {
    let (p, n) = data.shape();
    if s_max >= n {
        return Err(Error::invalid(format!("s_max = {s_max} must be below n = {n}")));
    }
    let width = n - s_max;
    Ok((0..=s_max)
        .map(|s| {
            let mut m = Matrix::zeros(p, width);
            for i in 0..p {
                m.row_mut(i).copy_from_slice(&data.row(i)[s..s + width]);
            }
            Panel::field(s, m)
        })
        .collect())
}

/// One row of the sum-of-squares report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LamYaoRow {
    pub s1: usize,
    /// `lambda_(1)(sum_{s<=s1} A(s) A(s)')`.
    pub largest_of_sum: f64,
    /// `sum_{s<=s1} lambda_(1)(A(s) A(s)')`.
    pub sum_of_largest: f64,
    pub ratio: f64,
}

/// Compares the largest eigenvalue of the summed squared autocovariances with
/// the sum of the individual largest eigenvalues, for `s1 = 0..=s1_max`
/// where `panels[s]` is `X(s)`.
pub fn lamyao_report<M: AsRef<Matrix> + Sync>(panels: &[M]) -> Result<Vec<LamYaoRow>> {
    if panels.is_empty() {
        return Err(Error::invalid("need at least the lag-0 panel"));
    }
    let singles: Vec<f64> = (0..panels.len())
        .into_par_iter()
        .map(|s| Ok(sum_squares_eigs(panels, s, s)?[0]))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(panels.len());
    let mut running = 0.0;
    for s1 in 0..panels.len() {
        running += singles[s1];
        let largest_of_sum = if s1 == 0 {
            singles[0]
        } else {
            sum_squares_eigs(panels, 0, s1)?[0]
        };
        out.push(LamYaoRow {
            s1,
            largest_of_sum,
            sum_of_largest: running,
            ratio: if running > 0.0 { (largest_of_sum / running).min(1.0) } else { 1.0 },
        });
    }
    Ok(out)
}

/// Writes serializable rows as CSV with a header.
pub fn write_rows<W: std::io::Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
