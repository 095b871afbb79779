use serde::{Deserialize, Serialize};

use crate::error::{contract, LabError, Result};

/// Admissible range slack for solution states.
pub const TOL_BOX: f64 = 1e-8;

/// Samples of a function on the periodic box `[-half_width, half_width)^d`.
///
/// Node `j` along an axis sits at `-half_width + j * spacing`. In two
/// dimensions values are row-major with the first coordinate as the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    dimension: usize,
    half_width: f64,
    points_per_axis: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(dimension: usize, half_width: f64, points_per_axis: usize, values: Vec<f64>) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(contract(format!("dimension must be 1 or 2, got {dimension}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(contract(format!("half_width must be positive, got {half_width}")));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(contract(format!(
                "points_per_axis must be a power of two >= 16, got {points_per_axis}"
            )));
        }
        if values.len() != points_per_axis.pow(dimension as u32) {
            return Err(LabError::Data(format!(
                "expected {} values, got {}",
                points_per_axis.pow(dimension as u32),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Data(format!("non-finite value at node {i}")));
        }
        Ok(Self { dimension, half_width, points_per_axis, values })
    }

    /// Samples `g` at every node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        dimension: usize,
        half_width: f64,
        points_per_axis: usize,
        g: F,
    ) -> Result<Self> {
        let n = points_per_axis;
        let h = 2.0 * half_width / n as f64;
        let values = match dimension {
            1 => (0..n).map(|i| g(&[-half_width + i as f64 * h])).collect(),
            2 => (0..n * n)
                .map(|k| g(&[-half_width + (k / n) as f64 * h, -half_width + (k % n) as f64 * h]))
                .collect(),
            _ => Vec::new(),
        };
        Self::new(dimension, half_width, points_per_axis, values)
    }

    pub fn constant(dimension: usize, half_width: f64, points_per_axis: usize, c: f64) -> Result<Self> {
        Self::new(dimension, half_width, points_per_axis, vec![c; points_per_axis.pow(dimension as u32)])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Node coordinates of the flat index `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dimension {
            1 => [self.coordinate(k), 0.0],
            _ => [self.coordinate(k / n), self.coordinate(k % n)],
        }
    }

    /// Same geometry, new values (validated).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.dimension, self.half_width, self.points_per_axis, values)
    }

    pub(crate) fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            dimension: self.dimension,
            half_width: self.half_width,
            points_per_axis: self.points_per_axis,
            values,
        }
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.half_width == other.half_width
            && self.points_per_axis == other.points_per_axis
    }

    /// Checks the solution-state range `[-TOL_BOX, 1 + TOL_BOX]`.
    pub fn check_state_range(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(-TOL_BOX..=1.0 + TOL_BOX).contains(&v)) {
            None => Ok(()),
            Some(i) => Err(LabError::Data(format!(
                "state value {} at node {i} outside [0, 1] beyond {TOL_BOX:e}",
                self.values[i]
            ))),
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    /// Integral over the box (Riemann sum, exact for trigonometric data).
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing().powi(self.dimension as i32)
    }
}
