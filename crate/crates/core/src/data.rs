//! Dataset and the column-major feature matrix behind it.

use serde::{Deserialize, Serialize};

use crate::error::{contract, ErpxError, Result};
use crate::scalar::Real;

/// Dense column-major matrix. Columns are the natural unit here: models are
/// fit on feature subsets and dissimilarities compare feature columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn from_columns(columns: Vec<Vec<T>>) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = columns.first().map_or(0, Vec::len);
        contract!(
            columns.iter().all(|c| c.len() == n_rows),
            "columns of unequal length"
        );
        Ok(Matrix {
            n_rows,
            n_cols,
            data: columns.into_iter().flatten().collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        contract!(rows.iter().all(|r| r.len() == n_cols), "rows of unequal length");
        let mut m = Matrix::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                m.data[j * n_rows + i] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.n_rows + i] = v;
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.n_cols).map(|j| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        (0..self.n_cols).map(move |j| self.col(j))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix<T> {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for j in 0..self.n_cols {
            let c = self.col(j);
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Matrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix<T> {
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            data,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Binary,
    Continuous,
}

impl FeatureKind {
    /// Binary iff every value is exactly 0 or 1.
    pub fn infer<T: Real>(column: &[T]) -> FeatureKind {
        if column.iter().all(|&v| v == T::zero() || v == T::one()) {
            FeatureKind::Binary
        } else {
            FeatureKind::Continuous
        }
    }
}

/// Response vector plus named, typed feature columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    y: Vec<T>,
    x: Matrix<T>,
    feature_names: Vec<String>,
    feature_kinds: Vec<FeatureKind>,
}

impl<T: Real> Dataset<T> {
    pub fn new(
        y: Vec<T>,
        x: Matrix<T>,
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        contract!(!y.is_empty(), "dataset needs at least one row");
        contract!(x.n_cols() >= 1, "dataset needs at least one feature");
        contract!(
            x.n_rows() == y.len(),
            "feature matrix has {} rows but response has {}",
            x.n_rows(),
            y.len()
        );
        contract!(
            feature_names.len() == x.n_cols() && feature_kinds.len() == x.n_cols(),
            "feature names/kinds must match the {} columns",
            x.n_cols()
        );
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(ErpxError::Data(format!("non-finite response at row {i}")));
        }
        for (j, col) in x.columns().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(ErpxError::Data(format!(
                    "non-finite value at row {i}, column '{}'",
                    feature_names[j]
                )));
            }
            if feature_kinds[j] == FeatureKind::Binary
                && FeatureKind::infer(col) != FeatureKind::Binary
            {
                return Err(ErpxError::Data(format!(
                    "column '{}' is marked binary but holds values other than 0/1",
                    feature_names[j]
                )));
            }
        }
        Ok(Dataset {
            y,
            x,
            feature_names,
            feature_kinds,
        })
    }

    /// Builds a dataset with generated names (`x1`, `x2`, ...) and inferred kinds.
    pub fn from_parts(y: Vec<T>, x: Matrix<T>) -> Result<Self> {
        let names = (1..=x.n_cols()).map(|j| format!("x{j}")).collect();
        let kinds = x.columns().map(FeatureKind::infer).collect();
        Dataset::new(y, x, names, kinds)
    }

    #[inline]
    pub fn y(&self) -> &[T] {
        &self.y
    }

    #[inline]
    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    /// Same features, different response.
    pub fn with_response(&self, y: Vec<T>) -> Result<Self> {
        contract!(y.len() == self.n(), "replacement response has wrong length");
        Dataset::new(
            y,
            self.x.clone(),
            self.feature_names.clone(),
            self.feature_kinds.clone(),
        )
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        contract!(
            rows.iter().all(|&i| i < self.n()),
            "row index out of range"
        );
        Dataset::new(
            rows.iter().map(|&i| self.y[i]).collect(),
            self.x.select_rows(rows),
            self.feature_names.clone(),
            self.feature_kinds.clone(),
        )
    }

    pub fn select_features(&self, cols: &[usize]) -> Result<Self> {
        contract!(
            cols.iter().all(|&j| j < self.n_features()),
            "feature index out of range"
        );
        Dataset::new(
            self.y.clone(),
            self.x.select_cols(cols),
            cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            cols.iter().map(|&j| self.feature_kinds[j]).collect(),
        )
    }

    /// Errors unless the dataset has enough rows to fit a model.
    pub fn require_fittable(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(ErpxError::Data(format!(
                "at least 2 rows are needed to fit a model, got {}",
                self.n()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns_agree() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.col(1), &[2.0, 4.0, 6.0]);
        assert_eq!(m.row(2), vec![5.0, 6.0]);
        assert_eq!(m.select_rows(&[2, 0]).col(0), &[5.0, 1.0]);
        assert_eq!(m.select_cols(&[1]).col(0), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn binary_kind_is_checked() {
        let x = Matrix::from_columns(vec![vec![0.0, 0.5]]).unwrap();
        let err = Dataset::new(vec![1.0, 2.0], x, vec!["a".into()], vec![FeatureKind::Binary]);
        assert!(matches!(err, Err(ErpxError::Data(_))));
    }

    #[test]
    fn kinds_are_inferred() {
        assert_eq!(FeatureKind::infer(&[0.0, 1.0, 1.0]), FeatureKind::Binary);
        assert_eq!(FeatureKind::infer(&[0.0, 0.5]), FeatureKind::Continuous);
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_columns(vec![vec![f64::NAN, 1.0]]).unwrap();
        assert!(Dataset::from_parts(vec![1.0, 2.0], x).is_err());
    }
}
