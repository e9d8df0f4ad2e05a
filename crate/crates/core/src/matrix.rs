//! Dense row-major matrices and role-tagged data panels.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Dense real matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        self.mul_transpose(&other.transpose())
    }

    /// `self * other'`, computed as row-by-row dot products.
    pub fn mul_transpose(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                expected: (other.rows, self.cols),
                got: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        Ok(out)
    }

    /// `self * self'`; only one triangle is computed, the result is exactly symmetric.
    pub fn gram(&self) -> Matrix {
        let p = self.rows;
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            let a = self.row(i);
            for j in 0..=i {
                let v = dot(a, self.row(j));
                out.data[i * p + j] = v;
                out.data[j * p + i] = v;
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// What a panel holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelRole {
    /// Core `p x n` block of the iid noise field.
    Noise,
    /// Shifted field matrix `X_n(s)`.
    Field { lag: usize },
    /// Observed returns, one series per row.
    Returns,
    /// Output of the rank transform.
    RankTransformed,
}

/// A `p x n` data matrix tagged with its role.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub role: PanelRole,
    pub matrix: Matrix,
}

impl Panel {
    pub fn new(role: PanelRole, matrix: Matrix) -> Self {
        Panel { role, matrix }
    }

    pub fn field(lag: usize, matrix: Matrix) -> Self {
        Panel::new(PanelRole::Field { lag }, matrix)
    }
}

impl Panel {
    /// Lag recorded in the role tag (zero for non-field panels).
    pub fn lag(&self) -> usize {
        match self.role {
            PanelRole::Field { lag } => lag,
            _ => 0,
        }
    }

    /// Writes the panel as CSV: a first line `p,n,s` with the dimensions and
    /// lag, then one line per row.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record([
            self.rows().to_string(),
            self.cols().to_string(),
            self.lag().to_string(),
        ])?;
        for i in 0..self.rows() {
            out.write_record(self.row(i).iter().map(|v| format!("{v:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a panel written by [`Panel::write_csv`], tagged as a field panel
    /// at the recorded lag.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Panel> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut records = rdr.records();
        let head = records
            .next()
            .ok_or_else(|| Error::Parse("empty panel file".into()))??;
        let dims: Vec<usize> = head
            .iter()
            .map(|f| f.parse::<usize>().map_err(|e| Error::Parse(format!("header field {f:?}: {e}"))))
            .collect::<Result<_>>()?;
        let [p, n, s] = dims[..] else {
            return Err(Error::Parse(format!("header must be p,n,s, got {} fields", dims.len())));
        };
        let mut data = Vec::with_capacity(p * n);
        let mut rows = 0;
        for rec in records {
            let rec = rec?;
            if rec.len() != n {
                return Err(Error::Parse(format!("row {} has {} fields, expected {n}", rows + 1, rec.len())));
            }
            for f in rec.iter() {
                data.push(f.parse::<f64>().map_err(|e| Error::Parse(format!("value {f:?}: {e}")))?);
            }
            rows += 1;
        }
        if rows != p {
            return Err(Error::Parse(format!("expected {p} rows, found {rows}")));
        }
        Ok(Panel::field(s, Matrix::from_vec(p, n, data)?))
    }
}

impl Deref for Panel {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.matrix
    }
}

impl DerefMut for Panel {
    fn deref_mut(&mut self) -> &mut Matrix {
        &mut self.matrix
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive_on_odd_lengths() {
        for len in [0usize, 1, 7, 8, 9, 31] {
            let a: Vec<f64> = (0..len).map(|i| i as f64 - 3.0).collect();
            let b: Vec<f64> = (0..len).map(|i| (i * i) as f64).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert_eq!(dot(&a, &b), naive);
        }
    }

    #[test]
    fn gram_is_symmetric_product() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0], [0.0, -1.0, 4.0]]).unwrap();
        let g = x.gram();
        assert_eq!(g, x.mul_transpose(&x).unwrap());
        assert_eq!(g[(0, 1)], 10.0);
        assert_eq!(g[(1, 1)], 17.0);
    }

    #[test]
    fn panel_csv_round_trip() {
        let m = Matrix::from_rows(&[[1.5, -2.0, 1e-300], [0.1, 7.0, -3.25]]).unwrap();
        let panel = Panel::field(3, m);
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2,3,3\n"));
        assert_eq!(Panel::read_csv(buf.as_slice()).unwrap(), panel);
        assert!(Panel::read_csv("2,2,0\n1,2\n".as_bytes()).is_err());
        assert!(Panel::read_csv("2,2\n".as_bytes()).is_err());
    }

    #[test]
    fn matmul_checks_shapes() {
        let a = Matrix::zeros(2, 3);
        assert!(a.matmul(&Matrix::zeros(2, 2)).is_err());
        assert_eq!(a.matmul(&Matrix::zeros(3, 4)).unwrap().shape(), (2, 4));
    }
}
