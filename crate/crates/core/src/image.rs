use serde::{Deserialize, Serialize};

use crate::error::{invalid, ChemError, Result};

/// A 2D real raster stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(ChemError::Dimension(format!(
                "image sides must be >= 1, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(ChemError::Dimension(format!(
                "data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            height,
            width,
            data,
            name: None,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "image sides must be >= 1");
        Self {
            height,
            width,
            data: vec![0.0; height * width],
            name: None,
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        let mut img = Self::zeros(height, width);
        img.data.fill(value);
        img
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut img = Self::zeros(height, width);
        for r in 0..height {
            for c in 0..width {
                img.data[r * width + c] = f(r, c);
            }
        }
        img
    }

    /// Builds an image from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(ChemError::Dimension("ragged rows".into()));
        }
        Self::new(height, width, rows.concat())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
            name: self.name.clone(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest sample as (row, col); first occurrence wins.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn mse(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(s / self.data.len() as f64)
    }

    pub fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(ChemError::Dimension(format!(
                "grid mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// `self + scale * other`, elementwise.
    pub fn add_scaled(&self, other: &Image, scale: f64) -> Result<Image> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Image {
            height: self.height,
            width: self.width,
            data,
            name: self.name.clone(),
        })
    }

    /// Circular shift: output(r, c) = input(r - dr, c - dc).
    pub fn roll(&self, dr: isize, dc: isize) -> Image {
        let (h, w) = (self.height as isize, self.width as isize);
        Image::from_fn(self.height, self.width, |r, c| {
            let sr = (r as isize - dr).rem_euclid(h) as usize;
            let sc = (c as isize - dc).rem_euclid(w) as usize;
            self.get(sr, sc)
        })
    }
}
