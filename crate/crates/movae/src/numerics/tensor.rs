use crate::{Error, Result};

/// Dense tensor of `f32` values in row-major order.
///
/// The pipeline only ever needs rank-2 tensors (a batch of flattened
/// vectors), but the shape is kept general.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Dimension {
                context: "tensor construction",
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Build a `(rows, width)` batch from equally sized row slices.
    pub fn from_rows<S: AsRef<[f32]>>(rows: &[S]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Argument("cannot build a tensor from zero rows".into()));
        }
        let width = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::Dimension {
                    context: "tensor row width",
                    expected: width,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Tensor {
            shape: vec![rows.len(), width],
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of rows of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Row width of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let w = self.cols();
        &self.data[i * w..(i + 1) * w]
    }

    /// Error if any stored value is not finite.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if let Some(idx) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite value at flat index {idx} in {context}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        let err = Tensor::from_vec(&[2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 6, got: 5, .. }));
    }

    #[test]
    fn from_rows_builds_row_major_batch() {
        let t = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
        assert_eq!(t.row(1), &[3.0, 4.0]);
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn check_finite_reports_index() {
        let mut t = Tensor::zeros(&[2, 2]);
        t.data_mut()[3] = f32::NAN;
        let err = t.check_finite("test").unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("index 3")));
    }
}
