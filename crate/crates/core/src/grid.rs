//! Per-subject measurement times and the pooled distance extremes shared by
//! every subject's correlation matrix.

use crate::error::{LearError, Result};

/// Measurement times (or locations) for each subject together with the
/// pooled extremes `d_min` and `d_max` of all within-subject separations.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrid {
    subjects: Vec<Vec<f64>>,
    d_min: f64,
    d_max: f64,
    observed: (f64, f64),
}

impl MeasurementGrid {
    /// Builds a grid from strictly increasing per-subject time vectors.
    ///
    /// Subjects with a single measurement are allowed, but at least one
    /// subject must contribute a pair.
    pub fn new(subjects: Vec<Vec<f64>>) -> Result<Self> {
        let (d_min, d_max) = pooled_extremes(&subjects)?;
        Ok(Self {
            subjects,
            d_min,
            d_max,
            observed: (d_min, d_max),
        })
    }

    /// Replaces the data-derived extremes with fixed design constants.
    ///
    /// The override must bracket every observed separation so that the
    /// normalized position `(d - d_min) / (d_max - d_min)` stays in `[0, 1]`.
    pub fn with_extremes(mut self, d_min: f64, d_max: f64) -> Result<Self> {
        let (obs_min, obs_max) = self.observed;
        if !(d_min.is_finite() && d_max.is_finite()) || d_min <= 0.0 || d_max < d_min {
            return Err(LearError::InvalidGrid(format!(
                "override extremes must satisfy 0 < d_min <= d_max, got ({d_min}, {d_max})"
            )));
        }
        if d_min > obs_min || d_max < obs_max {
            return Err(LearError::InvalidGrid(format!(
                "override ({d_min}, {d_max}) does not bracket observed separations ({obs_min}, {obs_max})"
            )));
        }
        self.d_min = d_min;
        self.d_max = d_max;
        Ok(self)
    }

    pub fn subjects(&self) -> &[Vec<f64>] {
        &self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn times(&self, subject: usize) -> Result<&[f64]> {
        self.subjects
            .get(subject)
            .map(Vec::as_slice)
            .ok_or(LearError::SubjectOutOfRange {
                index: subject,
                count: self.subjects.len(),
            })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// `d_max - d_min`.
    pub fn range(&self) -> f64 {
        self.d_max - self.d_min
    }

    /// Extremes computed from the data, ignoring any override.
    pub fn observed_extremes(&self) -> (f64, f64) {
        self.observed
    }

    pub fn has_override(&self) -> bool {
        self.observed != (self.d_min, self.d_max)
    }

    /// Position of a separation inside the pooled range, in `[0, 1]`.
    ///
    /// A zero range (every separation equals `d_min`) maps to 0.
    pub fn relative_position(&self, d: f64) -> f64 {
        let range = self.range();
        if range > 0.0 {
            (d - self.d_min) / range
        } else {
            0.0
        }
    }

    /// Every within-subject separation `t_k - t_j`, `j < k`, across subjects.
    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.subjects.iter().flat_map(|t| pair_distances(t))
    }

    /// Divides every time by `factor`, keeping any override in the same units.
    pub(crate) fn rescaled(&self, subjects: Vec<Vec<f64>>, factor: f64) -> Result<Self> {
        let grid = MeasurementGrid::new(subjects)?;
        if self.has_override() {
            grid.with_extremes(self.d_min / factor, self.d_max / factor)
        } else {
            Ok(grid)
        }
    }
}

fn pair_distances(t: &[f64]) -> impl Iterator<Item = f64> + '_ {
    (0..t.len()).flat_map(move |j| ((j + 1)..t.len()).map(move |k| t[k] - t[j]))
}

fn pooled_extremes(subjects: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut d_min = f64::INFINITY;
    let mut d_max = f64::NEG_INFINITY;
    for (i, t) in subjects.iter().enumerate() {
        if t.is_empty() {
            return Err(LearError::InvalidGrid(format!("subject {i} has no measurements")));
        }
        if let Some(bad) = t.iter().find(|x| !x.is_finite()) {
            return Err(LearError::InvalidGrid(format!("subject {i} has non-finite time {bad}")));
        }
        for w in t.windows(2) {
            if w[1] <= w[0] {
                return Err(LearError::InvalidGrid(format!(
                    "subject {i} times are not strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
            d_min = d_min.min(w[1] - w[0]);
        }
        if t.len() >= 2 {
            d_max = d_max.max(t[t.len() - 1] - t[0]);
        }
    }
    if d_max == f64::NEG_INFINITY {
        return Err(LearError::DegenerateGrid);
    }
    Ok((d_min, d_max))
}
