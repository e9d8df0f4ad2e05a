//! Linear random fields `X_it = sum_{k,l} h_kl Z_{i-k, t-l}` with finite
//! coefficient support, their shifted data matrices and the coefficient
//! matrices `M(s)`.
//!
//! # Noise layout
//!
//! For support rows `kmin..=kmax` and columns `lmin..=lmax` (the box is
//! widened to contain the origin), a single padded
//! panel `Zpad` with `p + kmax - kmin` rows and `n + s_max + lmax - lmin`
//! columns is drawn per realization, filled column by column. Then
//!
//! ```text
//! X(s)[i][t] = sum h_kl * Zpad[i + kmax - k][t + s + lmax - l]    (0-based i, t)
//! ```
//!
//! and the noise core `Z` is the `p x n` block at offset `(kmax, lmax)`.
//! Because columns are filled in order, `X(0)` does not depend on `s_max`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Panel, PanelRole};
use crate::rand_heavy::TailModel;
use crate::rng::seeded;
use crate::spectra::{sym_eigen, SymMatrix};

/// One coefficient `h_kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffTerm {
    pub k: i64,
    pub l: i64,
    pub h: f64,
}

/// Finite-support coefficient array `(h_kl)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CoeffTerm>", into = "Vec<CoeffTerm>")]
pub struct CoeffMatrix {
    /// Sorted by `(k, l)`, unique, zeros dropped.
    terms: Vec<CoeffTerm>,
    k_range: (i64, i64),
    l_range: (i64, i64),
}

impl CoeffMatrix {
    pub fn new(terms: impl IntoIterator<Item = CoeffTerm>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in terms {
            if !t.h.is_finite() {
                return Err(Error::invalid(format!("coefficient h[{},{}] is not finite", t.k, t.l)));
            }
            if map.insert((t.k, t.l), t.h).is_some() {
                return Err(Error::invalid(format!("duplicate coefficient h[{},{}]", t.k, t.l)));
            }
        }
        let terms: Vec<CoeffTerm> = map
            .into_iter()
            .filter(|&(_, h)| h != 0.0)
            .map(|((k, l), h)| CoeffTerm { k, l, h })
            .collect();
        if terms.is_empty() {
            return Err(Error::EmptySupport);
        }
        let k_range = (terms[0].k, terms[terms.len() - 1].k);
        let l_range = terms
            .iter()
            .fold((i64::MAX, i64::MIN), |(lo, hi), t| (lo.min(t.l), hi.max(t.l)));
        Ok(CoeffMatrix {
            terms,
            k_range,
            l_range,
        })
    }

    /// From `(k, l, h)` triples.
    pub fn from_triples(triples: &[(i64, i64, f64)]) -> Result<Self> {
        CoeffMatrix::new(triples.iter().map(|&(k, l, h)| CoeffTerm { k, l, h }))
    }

    /// `h_00 = 1`: the iid case.
    pub fn identity() -> Self {
        CoeffMatrix::from_triples(&[(0, 0, 1.0)]).expect("nonempty support")
    }

    pub fn get(&self, k: i64, l: i64) -> f64 {
        self.terms
            .binary_search_by(|t| (t.k, t.l).cmp(&(k, l)))
            .map_or(0.0, |i| self.terms[i].h)
    }

    /// Nonzero coefficients sorted by `(k, l)`.
    pub fn terms(&self) -> &[CoeffTerm] {
        &self.terms
    }

    /// `(kmin, kmax)` over the support.
    pub fn k_range(&self) -> (i64, i64) {
        self.k_range
    }

    /// `(lmin, lmax)` over the support.
    pub fn l_range(&self) -> (i64, i64) {
        self.l_range
    }

    fn k_extent(&self) -> usize {
        (self.k_range.1 - self.k_range.0) as usize
    }

    fn l_extent(&self) -> usize {
        (self.l_range.1 - self.l_range.0) as usize
    }

    /// `H(s)` over the support box: rows `kmin..=kmax`, columns
    /// `lmin..=lmax`, entries `h_{k, l+s}`.
    pub fn shifted(&self, s: usize) -> Matrix {
        let rows = self.k_extent() + 1;
        let cols = self.l_extent() + 1;
        let mut h = Matrix::zeros(rows, cols);
        for t in &self.terms {
            let l = t.l - s as i64;
            if l >= self.l_range.0 {
                h[((t.k - self.k_range.0) as usize, (l - self.l_range.0) as usize)] = t.h;
            }
        }
        h
    }

    /// Reads `k,l,h` triples; a leading `k,l,h` header line is optional.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(r);
        let mut terms = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if line == 0 && rec.get(0) == Some("k") {
                continue;
            }
            if rec.len() != 3 {
                return Err(Error::Parse(format!("coefficient line {} needs k,l,h", line + 1)));
            }
            let parse_i = |f: &str| f.parse::<i64>().map_err(|e| Error::Parse(format!("index {f:?}: {e}")));
            terms.push(CoeffTerm {
                k: parse_i(&rec[0])?,
                l: parse_i(&rec[1])?,
                h: rec[2].parse().map_err(|e| Error::Parse(format!("value {:?}: {e}", &rec[2])))?,
            });
        }
        CoeffMatrix::new(terms)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "l", "h"])?;
        for t in &self.terms {
            out.write_record([t.k.to_string(), t.l.to_string(), format!("{:e}", t.h)])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl TryFrom<Vec<CoeffTerm>> for CoeffMatrix {
    type Error = Error;
    fn try_from(v: Vec<CoeffTerm>) -> Result<Self> {
        CoeffMatrix::new(v)
    }
}

impl From<CoeffMatrix> for Vec<CoeffTerm> {
    fn from(c: CoeffMatrix) -> Self {
        c.terms
    }
}

/// `h_kl = theta_k c_l` for `k, l >= 0`.
pub fn separable_coeffs(theta: &[f64], c: &[f64]) -> Result<CoeffMatrix> {
    for (name, seq) in [("theta", theta), ("c", c)] {
        if !seq.iter().any(|&v| v != 0.0) {
            return Err(Error::ZeroSequence);
        }
        if seq.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} has non-finite entries")));
        }
    }
    let mut terms = Vec::with_capacity(theta.len() * c.len());
    for (k, &tk) in theta.iter().enumerate() {
        for (l, &cl) in c.iter().enumerate() {
            terms.push(CoeffTerm {
                k: k as i64,
                l: l as i64,
                h: tk * cl,
            });
        }
    }
    CoeffMatrix::new(terms)
}

/// `gamma(s) = sum_l c_l c_{l+s}`.
pub fn autocorrelation_sum(c: &[f64], s: usize) -> f64 {
    c.iter().zip(c.iter().skip(s)).map(|(a, b)| a * b).sum()
}

/// Largest eigenvalue `sum_{s=s0}^{s1} gamma_c(s)^2 gamma_theta(0)^2` of the
/// summed squares in the separable case.
pub fn separable_sum_constant(theta: &[f64], c: &[f64], s0: usize, s1: usize) -> f64 {
    let g0 = autocorrelation_sum(theta, 0);
    (s0..=s1).map(|s| autocorrelation_sum(c, s).powi(2)).sum::<f64>() * g0 * g0
}

/// Relative threshold below which a singular value counts as zero.
pub const RANK_REL_TOL: f64 = 1e-7;

/// `M(s) = H(0) H(s)'` with its singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrix {
    pub lag: usize,
    /// Row and column `i` correspond to `k = kmin + i`.
    pub matrix: Matrix,
    pub k_offset: i64,
    /// Descending; values below the rank threshold are exactly zero.
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

pub fn m_matrix(coeffs: &CoeffMatrix, s: usize) -> Result<MMatrix> {
    let h0 = coeffs.shifted(0);
    let hs = coeffs.shifted(s);
    let matrix = h0.mul_transpose(&hs)?;
    let mm = SymMatrix::new(matrix.mul_transpose(&matrix)?)?;
    let mut sv: Vec<f64> = sym_eigen(&mm)?.values.into_iter().map(|v| v.max(0.0).sqrt()).collect();
    let cut = RANK_REL_TOL * sv[0];
    for v in sv.iter_mut() {
        if *v <= cut {
            *v = 0.0;
        }
    }
    let rank = sv.iter().take_while(|&&v| v > 0.0).count();
    Ok(MMatrix {
        lag: s,
        matrix,
        k_offset: coeffs.k_range.0,
        singular_values: sv,
        rank,
    })
}

/// Descending eigenvalues `v_j(s0, s1)` of `sum_{s=s0}^{s1} M(s) M(s)'`.
pub fn sum_squares_m(coeffs: &CoeffMatrix, s0: usize, s1: usize) -> Result<Vec<f64>> {
    if s0 > s1 {
        return Err(Error::invalid(format!("need s0 <= s1, got {s0} > {s1}")));
    }
    let dim = coeffs.k_extent() + 1;
    let mut total = Matrix::zeros(dim, dim);
    for s in s0..=s1 {
        let m = m_matrix(coeffs, s)?.matrix;
        total.add_assign(&m.mul_transpose(&m)?)?;
    }
    let vals = sym_eigen(&SymMatrix::new(total)?)?.values;
    let cut = 1e-14 * vals[0].abs();
    Ok(vals.into_iter().map(|v| if v <= cut { 0.0 } else { v }).collect())
}

/// Default cap on `p * (n + s_max)`.
pub const DEFAULT_CELL_CAP: usize = 1 << 27;

/// Everything needed to draw one realization of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub coeffs: CoeffMatrix,
    pub noise: TailModel,
    pub p: usize,
    pub n: usize,
    #[serde(default)]
    pub s_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cell_cap")]
    pub cell_cap: usize,
}

fn default_cell_cap() -> usize {
    DEFAULT_CELL_CAP
}

impl FieldSpec {
    pub fn new(coeffs: CoeffMatrix, noise: TailModel, p: usize, n: usize, s_max: usize, seed: u64) -> Self {
        FieldSpec {
            coeffs,
            noise,
            p,
            n,
            s_max,
            seed,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(Error::invalid("p and n must be at least 1"));
        }
        self.noise.validate()?;
        let cells = self.p.saturating_mul(self.n.saturating_add(self.s_max));
        if cells > self.cell_cap {
            return Err(Error::MemoryBudget {
                cells,
                cap: self.cell_cap,
            });
        }
        Ok(())
    }
}

/// One realization: the noise core and the field panels `X(0..=s_max)`.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    pub noise: Panel,
    pub panels: Vec<Panel>,
}

/// Draws one realization with the generator seeded from `spec.seed`.
pub fn simulate_field(spec: &FieldSpec) -> Result<FieldRealization> {
    spec.validate()?;
    simulate_with_rng(&spec.coeffs, &spec.noise, spec.p, spec.n, spec.s_max, &mut seeded(spec.seed))
}

/// Draws one realization from `rng`. Arguments are assumed validated except
/// for the dimensions.
pub fn simulate_with_rng<R: Rng + ?Sized>(
    coeffs: &CoeffMatrix,
    noise: &TailModel,
    p: usize,
    n: usize,
    s_max: usize,
    rng: &mut R,
) -> Result<FieldRealization> {
    if p == 0 || n == 0 {
        return Err(Error::invalid("p and n must be at least 1"));
    }
    // the box always contains the origin so the noise core is part of it
    let (kmin, kmax) = (coeffs.k_range.0.min(0), coeffs.k_range.1.max(0));
    let (lmin, lmax) = (coeffs.l_range.0.min(0), coeffs.l_range.1.max(0));
    let rows = p + (kmax - kmin) as usize;
    let cols = n + s_max + (lmax - lmin) as usize;
    let mut zpad = Matrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            zpad[(r, c)] = noise.draw(rng);
        }
    }
    let (zr, zc) = (kmax as usize, lmax as usize);
    let mut core = Matrix::zeros(p, n);
    for i in 0..p {
        core.row_mut(i).copy_from_slice(&zpad.row(i + zr)[zc..zc + n]);
    }
    let mut panels = Vec::with_capacity(s_max + 1);
    for s in 0..=s_max {
        let mut x = Matrix::zeros(p, n);
        for (idx, t) in coeffs.terms.iter().enumerate() {
            let dr = (kmax - t.k) as usize;
            let dc = s + (lmax - t.l) as usize;
            for i in 0..p {
                let src = &zpad.row(i + dr)[dc..dc + n];
                let dst = x.row_mut(i);
                if idx == 0 {
                    for (d, z) in dst.iter_mut().zip(src) {
                        *d = t.h * z;
                    }
                } else {
                    for (d, z) in dst.iter_mut().zip(src) {
                        *d += t.h * z;
                    }
                }
            }
        }
        panels.push(Panel::field(s, x));
    }
    Ok(FieldRealization {
        noise: Panel::new(PanelRole::Noise, core),
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ma() -> CoeffMatrix {
        CoeffMatrix::from_triples(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, -2.0), (1, 1, 2.0)]).unwrap()
    }

    #[test]
    fn ma_model_lag_zero() {
        let m = m_matrix(&ma(), 0).unwrap();
        assert_eq!(m.matrix, Matrix::diag(&[2.0, 8.0]));
        assert!((m.singular_values[0] - 8.0).abs() < 1e-12);
        assert!((m.singular_values[1] - 2.0).abs() < 1e-12);
        assert_eq!(m.rank, 2);
    }

    #[test]
    fn ma_model_lag_one() {
        let m = m_matrix(&ma(), 1).unwrap();
        assert_eq!(m.matrix, Matrix::from_rows(&[[1.0, 2.0], [-2.0, -4.0]]).unwrap());
        assert!((m.singular_values[0] - 5.0).abs() < 1e-12);
        assert_eq!(m.singular_values[1], 0.0);
        assert_eq!(m.rank, 1);
    }

    #[test]
    fn identity_is_rank_one() {
        let m = m_matrix(&CoeffMatrix::identity(), 0).unwrap();
        assert_eq!((m.rank, m.singular_values.clone()), (1, vec![1.0]));
    }

    #[test]
    fn empty_support_is_rejected() {
        assert!(matches!(CoeffMatrix::new(vec![]), Err(Error::EmptySupport)));
        assert!(matches!(
            CoeffMatrix::from_triples(&[(0, 0, 0.0)]),
            Err(Error::EmptySupport)
        ));
        assert!(CoeffMatrix::from_triples(&[(0, 0, 1.0), (0, 0, 2.0)]).is_err());
    }

    #[test]
    fn separable_examples() {
        let c = separable_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let m = m_matrix(&c, 0).unwrap();
        assert!((m.singular_values[0] - 2.0).abs() < 1e-12);
        assert_eq!(m.rank, 1);
        let c = separable_coeffs(&[1.0, -2.0], &[1.0, 1.0]).unwrap();
        let m = m_matrix(&c, 0).unwrap();
        assert!((m.singular_values[0] - 10.0).abs() < 1e-12);
        assert_eq!(m.singular_values[1], 0.0);
        assert!(matches!(separable_coeffs(&[0.0], &[1.0]), Err(Error::ZeroSequence)));
        assert!(matches!(separable_coeffs(&[1.0], &[]), Err(Error::ZeroSequence)));
    }

    #[test]
    fn sum_squares_examples() {
        let v = sum_squares_m(&ma(), 0, 0).unwrap();
        assert!((v[0] - 64.0).abs() < 1e-10 && (v[1] - 4.0).abs() < 1e-10);
        let theta = [1.0, 0.5, -0.25];
        let c = [1.0, -0.7, 0.3, 0.2];
        let coeffs = separable_coeffs(&theta, &c).unwrap();
        let v = sum_squares_m(&coeffs, 0, 2).unwrap();
        let expect = separable_sum_constant(&theta, &c, 0, 2);
        assert!((v[0] - expect).abs() < 1e-12 * expect);
        assert!(v[1..].iter().all(|&x| x == 0.0));
        assert!(sum_squares_m(&coeffs, 2, 1).is_err());
    }

    #[test]
    fn separable_m_is_scaled_rank_one() {
        let theta = [0.5, -1.0, 2.0];
        let c = [1.0, 0.25, -0.5];
        let coeffs = separable_coeffs(&theta, &c).unwrap();
        for s in 0..4 {
            let m = m_matrix(&coeffs, s).unwrap().matrix;
            let g = autocorrelation_sum(&c, s);
            for i in 0..3 {
                for j in 0..3 {
                    let want = g * theta[i] * theta[j];
                    let got = m[(i, j)];
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{s} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn identity_field_is_noise_core() {
        let spec = FieldSpec::new(CoeffMatrix::identity(), TailModel::pareto(1.5), 4, 6, 2, 9);
        let real = simulate_field(&spec).unwrap();
        assert_eq!(real.panels[0].matrix, real.noise.matrix);
        assert_eq!(real.panels.len(), 3);
        assert_eq!(real.panels[2].role, PanelRole::Field { lag: 2 });
    }

    #[test]
    fn ma_field_matches_brute_force() {
        let coeffs = ma();
        let (p, n, s_max) = (2, 3, 1);
        let mut rng = seeded(77);
        let real = simulate_with_rng(&coeffs, &TailModel::pareto(1.2), p, n, s_max, &mut rng).unwrap();
        // rebuild Zpad from the same stream: kmax = lmax = 1, box 3 x 5
        let mut rng = seeded(77);
        let (rows, cols) = (p + 1, n + s_max + 1);
        let mut zpad = vec![vec![0.0; cols]; rows];
        for c in 0..cols {
            for row in zpad.iter_mut() {
                row[c] = TailModel::pareto(1.2).draw(&mut rng);
            }
        }
        // Z_{a,b} with 1-based field indices sits at zpad[a - 1 + kmax][b - 1 + lmax]
        let z = |a: i64, b: i64| zpad[(a - 1 + 1) as usize][(b - 1 + 1) as usize];
        for s in 0..=s_max {
            for i in 1..=p as i64 {
                for t in 1..=n as i64 {
                    let mut want = 0.0;
                    for k in 0..=1 {
                        for l in 0..=1 {
                            want += coeffs.get(k, l) * z(i - k, t + s as i64 - l);
                        }
                    }
                    let got = real.panels[s][((i - 1) as usize, (t - 1) as usize)];
                    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
                }
            }
        }
        for i in 1..=p as i64 {
            for t in 1..=n as i64 {
                assert_eq!(real.noise[((i - 1) as usize, (t - 1) as usize)], z(i, t));
            }
        }
    }

    #[test]
    fn shifted_panels_are_consistent() {
        let spec = FieldSpec::new(ma(), TailModel::pareto(1.0), 3, 5, 1, 4);
        let real = simulate_field(&spec).unwrap();
        for i in 0..3 {
            for t in 0..4 {
                assert_eq!(real.panels[1][(i, t)], real.panels[0][(i, t + 1)]);
            }
        }
    }

    #[test]
    fn lag_zero_panel_ignores_s_max() {
        let a = simulate_field(&FieldSpec::new(ma(), TailModel::pareto(1.3), 3, 7, 0, 5)).unwrap();
        let b = simulate_field(&FieldSpec::new(ma(), TailModel::pareto(1.3), 3, 7, 4, 5)).unwrap();
        assert_eq!(a.panels[0], b.panels[0]);
        assert_eq!(a.noise, b.noise);
        let c = simulate_field(&FieldSpec::new(ma(), TailModel::pareto(1.3), 3, 7, 0, 5)).unwrap();
        assert_eq!(a.panels[0], c.panels[0]);
    }

    #[test]
    fn negative_indices_and_memory_cap() {
        let coeffs = CoeffMatrix::from_triples(&[(-1, -2, 1.0), (2, 1, 0.5)]).unwrap();
        let spec = FieldSpec::new(coeffs.clone(), TailModel::pareto(2.0), 3, 4, 1, 1);
        let real = simulate_field(&spec).unwrap();
        assert_eq!(real.panels[0].shape(), (3, 4));
        let mut big = spec;
        big.cell_cap = 10;
        assert!(matches!(simulate_field(&big), Err(Error::MemoryBudget { .. })));
    }

    #[test]
    fn coefficient_csv_and_json_round_trip() {
        let c = ma();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(CoeffMatrix::read_csv(buf.as_slice()).unwrap(), c);
        assert_eq!(CoeffMatrix::read_csv("0,0,1\n1,0,-2\n".as_bytes()).unwrap().get(1, 0), -2.0);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<CoeffMatrix>(&json).unwrap(), c);
        assert!(serde_json::from_str::<CoeffMatrix>("[]").is_err());
    }

    proptest! {
        #[test]
        fn frobenius_identity(entries in proptest::collection::vec((-2i64..3, -2i64..3, -3.0f64..3.0), 1..12), s in 0usize..4) {
            let mut seen = std::collections::BTreeSet::new();
            let terms: Vec<_> = entries.into_iter().filter(|e| seen.insert((e.0, e.1))).collect();
            prop_assume!(terms.iter().any(|t| t.2 != 0.0));
            let coeffs = CoeffMatrix::from_triples(&terms).unwrap();
            let m = m_matrix(&coeffs, s).unwrap();
            let fro2 = m.matrix.frobenius_norm().powi(2);
            let sv2: f64 = m.singular_values.iter().map(|v| v * v).sum();
            prop_assert!((fro2 - sv2).abs() < 1e-10 * fro2.max(1.0));
            prop_assert!(m.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
