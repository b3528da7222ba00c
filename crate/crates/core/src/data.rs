use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LearError, Result};
use crate::grid::MeasurementGrid;

/// One independent sampling unit: responses, fixed-effect design and times.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub id: String,
    pub times: Vec<f64>,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

impl Subject {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// How the per-subject fixed-effect design `X_i` is built from times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignRule {
    /// A single column of ones.
    Intercept,
    /// Ones and the raw measurement time.
    InterceptTime,
    /// Rows supplied per subject (`[subject][row][column]`).
    User(Vec<Vec<Vec<f64>>>),
}

impl DesignRule {
    /// Design for subject `index` measured at `times`.
    pub fn design(&self, index: usize, times: &[f64]) -> Result<DMatrix<f64>> {
        let p = times.len();
        match self {
            DesignRule::Intercept => Ok(DMatrix::from_element(p, 1, 1.0)),
            DesignRule::InterceptTime => Ok(DMatrix::from_fn(p, 2, |r, c| if c == 0 { 1.0 } else { times[r] })),
            DesignRule::User(rows) => {
                let rows = rows.get(index).ok_or_else(|| {
                    LearError::InvalidData(format!("no user design rows for subject {index}"))
                })?;
                if rows.len() != p {
                    return Err(LearError::InvalidData(format!(
                        "subject {index}: {} design rows for {p} measurements",
                        rows.len()
                    )));
                }
                let q = rows.first().map_or(0, Vec::len);
                if q == 0 || rows.iter().any(|r| r.len() != q) {
                    return Err(LearError::InvalidData(format!(
                        "subject {index}: design rows must share a nonzero column count"
                    )));
                }
                Ok(DMatrix::from_fn(p, q, |r, c| rows[r][c]))
            }
        }
    }
}

/// Responses and designs for `N` subjects.
///
/// Subjects keep their own `p_i`; the pooled grid is built when at least one
/// subject has two measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedMeasuresData {
    subjects: Vec<Subject>,
    q: usize,
    grid: Option<MeasurementGrid>,
}

impl RepeatedMeasuresData {
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| LearError::InvalidData("no subjects".into()))?;
        let q = first.x.ncols();
        if q == 0 {
            return Err(LearError::InvalidData("design has no columns".into()));
        }
        for s in &subjects {
            let p = s.times.len();
            if p == 0 {
                return Err(LearError::InvalidData(format!("subject {:?} has no measurements", s.id)));
            }
            if s.y.len() != p || s.x.nrows() != p {
                return Err(LearError::InvalidData(format!(
                    "subject {:?}: {} times, {} responses, {} design rows",
                    s.id,
                    p,
                    s.y.len(),
                    s.x.nrows()
                )));
            }
            if s.x.ncols() != q {
                return Err(LearError::InvalidData(format!(
                    "subject {:?} has {} design columns, expected {q}",
                    s.id,
                    s.x.ncols()
                )));
            }
            if s.y.iter().chain(s.x.iter()).any(|v| !v.is_finite()) {
                return Err(LearError::InvalidData(format!("subject {:?} has non-finite values", s.id)));
            }
        }
        let times: Vec<Vec<f64>> = subjects.iter().map(|s| s.times.clone()).collect();
        let grid = match MeasurementGrid::new(times) {
            Ok(g) => Some(g),
            Err(LearError::DegenerateGrid) => None,
            Err(e) => return Err(e),
        };
        let data = Self { subjects, q, grid };
        if data.design_rank() < q {
            return Err(LearError::RankDeficient);
        }
        Ok(data)
    }

    /// Builds subjects from times and responses with a design rule.
    pub fn from_rule(
        ids: Vec<String>,
        times: Vec<Vec<f64>>,
        responses: Vec<Vec<f64>>,
        rule: &DesignRule,
    ) -> Result<Self> {
        if ids.len() != times.len() || times.len() != responses.len() {
            return Err(LearError::InvalidData("ids, times and responses differ in length".into()));
        }
        let subjects = ids
            .into_iter()
            .zip(times)
            .zip(responses)
            .enumerate()
            .map(|(i, ((id, t), y))| {
                let x = rule.design(i, &t)?;
                Ok(Subject { id, y: DVector::from_vec(y), x, times: t })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(subjects)
    }

    /// Replaces the pooled distance extremes with fixed design constants.
    pub fn with_extremes(mut self, d_min: f64, d_max: f64) -> Result<Self> {
        let grid = self.grid.take().ok_or(LearError::DegenerateGrid)?;
        self.grid = Some(grid.with_extremes(d_min, d_max)?);
        Ok(self)
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    /// Number of fixed-effect coefficients.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Total number of observations `sum p_i`.
    pub fn n_obs(&self) -> usize {
        self.subjects.iter().map(Subject::len).sum()
    }

    pub fn grid(&self) -> Option<&MeasurementGrid> {
        self.grid.as_ref()
    }

    pub fn require_grid(&self) -> Result<&MeasurementGrid> {
        self.grid.as_ref().ok_or(LearError::DegenerateGrid)
    }

    fn design_rank(&self) -> usize {
        let n = self.n_obs();
        let mut stacked = DMatrix::zeros(n, self.q);
        let mut row = 0;
        for s in &self.subjects {
            stacked.rows_mut(row, s.len()).copy_from(&s.x);
            row += s.len();
        }
        if n < self.q {
            return n;
        }
        let svd = stacked.svd(false, false);
        let smax = svd.singular_values.max();
        if smax == 0.0 {
            return 0;
        }
        let tol = smax * n.max(self.q) as f64 * f64::EPSILON;
        svd.singular_values.iter().filter(|&&s| s > tol).count()
    }
}
