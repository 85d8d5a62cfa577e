//! Input point sets.

use ndarray::{Array2, ArrayView2};

use crate::error::{invalid, Error, Result};

/// Row-major grayscale rasters, one per point, all of the same size.
#[derive(Debug, Clone, PartialEq)]
pub struct Thumbnails {
    pub width: usize,
    pub height: usize,
    /// `n * width * height` pixel values, image after image.
    pub pixels: Vec<f64>,
}

impl Thumbnails {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        let size = width * height;
        if size == 0 {
            return Err(invalid("thumbnail width and height must be positive"));
        }
        if pixels.len() % size != 0 {
            return Err(invalid(format!(
                "thumbnail buffer of {} values is not a multiple of {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn len(&self) -> usize {
        self.pixels.len() / (self.width * self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let size = self.width * self.height;
        &self.pixels[i * size..(i + 1) * size]
    }
}

/// An `N x M` point set with optional labels and thumbnails.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    points: Array2<f64>,
    labels: Option<Vec<i64>>,
    thumbnails: Option<Thumbnails>,
}

impl DataMatrix {
    /// Validates `N >= 3`, `M >= 1` and finiteness of every entry.
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, m) = points.dim();
        if n < 3 {
            return Err(invalid(format!("need at least 3 points, got {n}")));
        }
        if m < 1 {
            return Err(invalid("need at least one feature column"));
        }
        for ((row, col), v) in points.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput { row, col });
            }
        }
        Ok(Self { points, labels: None, thumbnails: None })
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_thumbnails(mut self, thumbnails: Thumbnails) -> Result<Self> {
        if thumbnails.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} thumbnails for {} points",
                thumbnails.len(),
                self.n()
            )));
        }
        self.thumbnails = Some(thumbnails);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.points.nrows()
    }

    pub fn m(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn thumbnails(&self) -> Option<&Thumbnails> {
        self.thumbnails.as_ref()
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_small_and_non_finite() {
        assert!(DataMatrix::new(array![[0.0], [1.0]]).is_err());
        let err = DataMatrix::new(array![[0.0], [f64::NAN], [1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { row: 1, col: 0 }));
    }

    #[test]
    fn label_length_checked() {
        let d = DataMatrix::new(array![[0.0], [1.0], [2.0]]).unwrap();
        assert!(d.clone().with_labels(vec![1, 2]).is_err());
        assert_eq!(d.with_labels(vec![1, 2, 3]).unwrap().labels(), Some(&[1, 2, 3][..]));
    }
}
