//! Order-statistic approximations to the largest eigen- and singular values.
//!
//! Every approximation is the top of a product set `{b_i v_j}` where `b` is a
//! sorted source built from the noise core (squares, row sums or column sums)
//! and `v` are the singular values of `M(s)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spectra::sort_desc;

/// Sorted statistics of a noise core `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStats {
    /// Largest squares `Z_it^2`, descending. All `p n` of them unless built
    /// with [`OrderStats::truncated`].
    pub squares: Vec<f64>,
    /// Row sums of squares in row order.
    pub row_sums: Vec<f64>,
    /// Column sums of squares in column order.
    pub col_sums: Vec<f64>,
    pub row_sums_sorted: Vec<f64>,
    pub col_sums_sorted: Vec<f64>,
    pub total: f64,
}

impl OrderStats {
    pub fn new(z: &Matrix) -> Self {
        OrderStats::build(z, usize::MAX)
    }

    /// Keeps only the `keep` largest squares; sums are exact.
    pub fn truncated(z: &Matrix, keep: usize) -> Self {
        OrderStats::build(z, keep)
    }

    fn build(z: &Matrix, keep: usize) -> Self {
        let (p, n) = z.shape();
        let mut squares: Vec<f64> = z.as_slice().iter().map(|x| x * x).collect();
        let mut row_sums = vec![0.0; p];
        let mut col_sums = vec![0.0; n];
        for i in 0..p {
            let row = &squares[i * n..(i + 1) * n];
            row_sums[i] = row.iter().sum();
            for (c, v) in col_sums.iter_mut().zip(row) {
                *c += v;
            }
        }
        let total = row_sums.iter().sum();
        if keep < squares.len() {
            if keep == 0 {
                squares.clear();
            } else {
                squares.select_nth_unstable_by(keep - 1, |a, b| b.total_cmp(a));
                squares.truncate(keep);
            }
        }
        sort_desc(&mut squares);
        let mut row_sums_sorted = row_sums.clone();
        sort_desc(&mut row_sums_sorted);
        let mut col_sums_sorted = col_sums.clone();
        sort_desc(&mut col_sums_sorted);
        OrderStats {
            squares,
            row_sums,
            col_sums,
            row_sums_sorted,
            col_sums_sorted,
            total,
        }
    }

    /// Sorted source for an approximation kind.
    pub fn source(&self, kind: ApproxKind) -> Vec<f64> {
        match kind {
            ApproxKind::Delta => self.squares.clone(),
            ApproxKind::GammaRight => self.row_sums_sorted.clone(),
            ApproxKind::GammaDown => self.col_sums_sorted.clone(),
            ApproxKind::Omega => self.squares.iter().map(|x| x * x).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxKind {
    /// Squared entries `Z_(i)^2`.
    Delta,
    /// Row sums `D_i^→`.
    GammaRight,
    /// Column sums `D_t^↓`.
    GammaDown,
    /// Fourth powers `Z_(i)^4`, paired with the summed-square eigenvalues.
    Omega,
}

impl ApproxKind {
    pub fn name(self) -> &'static str {
        match self {
            ApproxKind::Delta => "delta",
            ApproxKind::GammaRight => "gamma_right",
            ApproxKind::GammaDown => "gamma_down",
            ApproxKind::Omega => "omega",
        }
    }
}

/// Top of a product set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxSet {
    pub kind: ApproxKind,
    pub lag: usize,
    /// Descending.
    pub values: Vec<f64>,
    /// The multipliers `v_j` used.
    pub v: Vec<f64>,
}

#[derive(PartialEq)]
struct Cell {
    value: f64,
    i: usize,
    j: usize,
}

impl Eq for Cell {}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.j.cmp(&self.j))
            .then_with(|| other.i.cmp(&self.i))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_sorted(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
    }
    if v.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid(format!("{name} must be in descending order")));
    }
    Ok(())
}

/// The `m` largest products `a_i b_j` of two descending nonnegative lists.
/// Ties go to the smaller `j`.
pub fn top_products(a: &[f64], b: &[f64], m: usize) -> Result<Vec<f64>> {
    if b.is_empty() {
        return Err(Error::invalid("multiplier sequence v is empty"));
    }
    check_sorted("source", a)?;
    check_sorted("v", b)?;
    let available = a.len().saturating_mul(b.len());
    if m > available {
        return Err(Error::invalid(format!("requested {m} products, only {available} available")));
    }
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return Ok(out);
    }
    let mut heap = BinaryHeap::with_capacity(2 * m.min(b.len()) + 2);
    heap.push(Cell {
        value: a[0] * b[0],
        i: 0,
        j: 0,
    });
    while out.len() < m {
        let Cell { value, i, j } = heap.pop().expect("grid not exhausted");
        out.push(value);
        if i + 1 < a.len() {
            heap.push(Cell {
                value: a[i + 1] * b[j],
                i: i + 1,
                j,
            });
        }
        if i == 0 && j + 1 < b.len() {
            heap.push(Cell {
                value: a[0] * b[j + 1],
                i: 0,
                j: j + 1,
            });
        }
    }
    Ok(out)
}

/// The `m` largest elements of `{source_i v_j}` for the chosen kind.
pub fn approx_set(stats: &OrderStats, v: &[f64], kind: ApproxKind, lag: usize, m: usize) -> Result<ApproxSet> {
    let values = top_products(&stats.source(kind), v, m)?;
    Ok(ApproxSet {
        kind,
        lag,
        values,
        v: v.to_vec(),
    })
}

/// `omega_(i)(s0, s1)`: top `m` of `{Z_(i)^4 v_j(s0, s1)}`.
pub fn omega_set(stats: &OrderStats, v_sum: &[f64], m: usize) -> Result<ApproxSet> {
    approx_set(stats, v_sum, ApproxKind::Omega, 0, m)
}

/// Normalized approximation error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupError {
    /// `a2^{-power} max_i |lambda_i^power - approx_i^power|`.
    pub sup: f64,
    /// Signed `a2^{-power} (lambda_i^power - approx_i^power)`.
    pub errors: Vec<f64>,
}

/// Compares the leading `approx.len()` spectral values with an approximation.
pub fn sup_error(spectrum: &[f64], approx: &[f64], a2: f64, power: u32) -> Result<SupError> {
    if power != 1 && power != 2 {
        return Err(Error::invalid(format!("power must be 1 or 2, got {power}")));
    }
    if !(a2 > 0.0) {
        return Err(Error::invalid("normalization must be positive"));
    }
    if approx.len() > spectrum.len() {
        return Err(Error::LengthMismatch {
            expected: spectrum.len(),
            got: approx.len(),
        });
    }
    let scale = a2.powi(power as i32);
    let errors: Vec<f64> = spectrum
        .iter()
        .zip(approx)
        .map(|(l, a)| (l.powi(power as i32) - a.powi(power as i32)) / scale)
        .collect();
    let sup = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(SupError { sup, errors })
}

/// Writes error vectors as `replicate_id,i,err_delta,err_gamma` CSV rows.
pub fn write_error_csv<W: std::io::Write>(w: W, rows: &[(usize, &[f64], &[f64])]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["replicate_id", "i", "err_delta", "err_gamma"])?;
    for &(rep, delta, gamma) in rows {
        if delta.len() != gamma.len() {
            return Err(Error::LengthMismatch {
                expected: delta.len(),
                got: gamma.len(),
            });
        }
        for (i, (d, g)) in delta.iter().zip(gamma).enumerate() {
            out.write_record([rep.to_string(), (i + 1).to_string(), format!("{d:e}"), format!("{g:e}")])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linfield::{separable_coeffs, separable_sum_constant, sum_squares_m};
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
        let mut all: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        sort_desc(&mut all);
        all.truncate(m);
        all
    }

    #[test]
    fn order_stats_example() {
        let z = Matrix::from_rows(&[[1.0, 2.0], [3.0, 0.0]]).unwrap();
        let s = OrderStats::new(&z);
        assert_eq!(s.squares, vec![9.0, 4.0, 1.0, 0.0]);
        assert_eq!(s.row_sums, vec![5.0, 9.0]);
        assert_eq!(s.col_sums, vec![10.0, 4.0]);
        assert_eq!(s.total, 14.0);
        let zero = OrderStats::new(&Matrix::zeros(2, 3));
        assert!(zero.squares.iter().chain(&zero.row_sums).chain(&zero.col_sums).all(|&x| x == 0.0));
        assert_eq!(OrderStats::truncated(&z, 2).squares, vec![9.0, 4.0]);
    }

    #[test]
    fn product_examples() {
        assert_eq!(top_products(&[9.0, 4.0, 1.0], &[1.0], 3).unwrap(), vec![9.0, 4.0, 1.0]);
        assert_eq!(top_products(&[9.0, 4.0], &[8.0, 2.0], 3).unwrap(), vec![72.0, 32.0, 18.0]);
        assert!(top_products(&[9.0], &[], 1).is_err());
        assert!(top_products(&[9.0], &[1.0], 2).is_err());
        assert!(top_products(&[1.0, 9.0], &[1.0], 1).is_err());
    }

    #[test]
    fn heap_matches_brute_force_on_random_grids() {
        let mut rng = seeded(11);
        for _ in 0..50 {
            let mut a: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 10.0).collect();
            let mut b: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 3.0).collect();
            sort_desc(&mut a);
            sort_desc(&mut b);
            for m in [1, 7, 20, 100] {
                assert_eq!(top_products(&a, &b, m).unwrap(), brute(&a, &b, m));
            }
        }
    }

    #[test]
    fn self_approximation_has_zero_error() {
        let lam = [5.0, 3.0, 1.0];
        let e = sup_error(&lam, &lam, 2.0, 2).unwrap();
        assert_eq!(e.sup, 0.0);
        assert!(sup_error(&lam, &[1.0; 4], 1.0, 1).is_err());
        let e = sup_error(&[5.0, 3.0], &[4.0, 3.5], 2.0, 1).unwrap();
        assert_eq!(e.errors, vec![0.5, -0.25]);
        assert_eq!(e.sup, 0.5);
    }

    #[test]
    fn omega_examples() {
        let z = Matrix::from_rows(&[[3.0, 2.0]]).unwrap();
        let s = OrderStats::new(&z);
        assert_eq!(omega_set(&s, &[1.0], 2).unwrap().values, vec![81.0, 16.0]);
    }

    #[test]
    fn omega_in_separable_case_is_scaled_fourth_powers() {
        let theta = [1.0, -0.5];
        let c = [1.0, 0.4, 0.2];
        let coeffs = separable_coeffs(&theta, &c).unwrap();
        let mut rng = seeded(3);
        let z = Matrix::from_vec(4, 6, (0..24).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
        let stats = OrderStats::new(&z);
        let v = sum_squares_m(&coeffs, 0, 2).unwrap();
        let omega = omega_set(&stats, &v, 10).unwrap();
        let cst = separable_sum_constant(&theta, &c, 0, 2);
        for (o, z2) in omega.values.iter().zip(&stats.squares) {
            assert!((o - z2 * z2 * cst).abs() <= 1e-12 * o);
        }
        // additivity over lags
        let per_lag: Vec<Vec<f64>> = (0..=2)
            .map(|s| omega_set(&stats, &[separable_sum_constant(&theta, &c, s, s)], 10).unwrap().values)
            .collect();
        let closed: Vec<f64> = stats.squares[..10]
            .iter()
            .map(|z2| z2 * z2 * cst)
            .collect();
        for i in 0..10 {
            let summed: f64 = per_lag.iter().map(|w| w[i]).sum();
            assert!((summed - closed[i]).abs() <= 1e-12 * closed[i]);
        }
    }

    #[test]
    fn error_csv_has_one_row_per_index() {
        let mut buf = Vec::new();
        write_error_csv(&mut buf, &[(0, &[0.1, 0.2], &[0.0, -0.1])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("replicate_id,i,err_delta,err_gamma"));
    }

    proptest! {
        #[test]
        fn sums_agree(entries in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let z = Matrix::from_vec(3, 4, entries).unwrap();
            let s = OrderStats::new(&z);
            let r: f64 = s.row_sums.iter().sum();
            let c: f64 = s.col_sums.iter().sum();
            prop_assert!((r - c).abs() <= 1e-8 * s.total.max(1e-300));
            prop_assert!(s.squares.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn permutation_invariance(entries in proptest::collection::vec(-5.0f64..5.0, 12), seed in 0u64..1000) {
            let z = Matrix::from_vec(3, 4, entries.clone()).unwrap();
            let mut shuffled = entries;
            let mut rng = seeded(seed);
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let zs = Matrix::from_vec(3, 4, shuffled).unwrap();
            let a = approx_set(&OrderStats::new(&z), &[2.0, 1.0], ApproxKind::Delta, 0, 5).unwrap();
            let b = approx_set(&OrderStats::new(&zs), &[2.0, 1.0], ApproxKind::Delta, 0, 5).unwrap();
            prop_assert_eq!(a.values, b.values);
        }

        #[test]
        fn unit_multiplier_gives_squares(entries in proptest::collection::vec(-5.0f64..5.0, 12)) {
            let z = Matrix::from_vec(3, 4, entries).unwrap();
            let s = OrderStats::new(&z);
            let d = approx_set(&s, &[1.0], ApproxKind::Delta, 0, 3).unwrap();
            prop_assert_eq!(&d.values[..], &s.squares[..3]);
        }
    }
}
