//! Fundamental data types: the regression dataset with per-column scales,
//! quantile indices and grids, coefficient vectors, the check loss, and the
//! penalized objective shared by every other module.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regression sample: responses `y`, an n×p design matrix `X`, and the
/// column scales `col_scales[j] = sqrt(mean(X[:,j]²))` that weight the
/// penalty. `X` is stored unscaled; the scales enter only through the
/// penalty weights.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Array1<f64>,
    x: Array2<f64>,
    col_scales: Vec<f64>,
    intercept_col: Option<usize>,
    exempt_intercept: bool,
}

impl Dataset {
    /// Validates dimensions and finiteness, computes column scales, and
    /// rejects any identically-zero column. `intercept_col` flags an
    /// all-ones column; the flag is verified.
    pub fn new(x: Array2<f64>, y: Array1<f64>, intercept_col: Option<usize>) -> Result<Dataset> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch {
                context: "dataset must have n >= 1 rows and p >= 1 columns",
                expected: 1,
                got: 0,
            });
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                context: "response length vs design rows",
                expected: n,
                got: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "response",
                index: i,
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "design matrix",
                index: i,
            });
        }
        let col_scales: Vec<f64> = (0..p)
            .map(|j| {
                let ms = x.column(j).iter().map(|v| v * v).sum::<f64>() / n as f64;
                ms.sqrt()
            })
            .collect();
        if let Some(j) = col_scales.iter().position(|&s| s <= 0.0) {
            return Err(Error::ZeroScaleColumn { col: j });
        }
        if let Some(j) = intercept_col {
            if j >= p {
                return Err(Error::ColumnOutOfRange { col: j, p });
            }
            if x.column(j).iter().any(|&v| (v - 1.0).abs() > 1e-12) {
                return Err(Error::NotInterceptColumn { col: j });
            }
        }
        Ok(Dataset {
            y,
            x,
            col_scales,
            intercept_col,
            exempt_intercept: false,
        })
    }

    /// Removes the flagged intercept column from the penalty. Off by
    /// default: the penalty sums over all columns.
    pub fn with_exempt_intercept(mut self, exempt: bool) -> Dataset {
        self.exempt_intercept = exempt;
        self
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of columns.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Responses.
    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    /// Design matrix.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Column scales σ̂_j = sqrt(mean(X[:,j]²)).
    pub fn col_scales(&self) -> &[f64] {
        &self.col_scales
    }

    /// Index of the all-ones column, when flagged.
    pub fn intercept_col(&self) -> Option<usize> {
        self.intercept_col
    }

    /// Whether the intercept column is exempt from the penalty.
    pub fn exempt_intercept(&self) -> bool {
        self.exempt_intercept
    }

    /// Penalty weight of column `j`: its scale, or zero for an exempted
    /// intercept column.
    pub fn penalty_weight(&self, j: usize) -> f64 {
        if self.exempt_intercept && self.intercept_col == Some(j) {
            0.0
        } else {
            self.col_scales[j]
        }
    }

    /// Residual vector y − Xb.
    pub fn residuals(&self, b: &Coefficients) -> Array1<f64> {
        &self.y - &self.x.dot(b.as_array())
    }
}

/// A quantile index u strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantileIndex(f64);

impl QuantileIndex {
    /// Validates 0 < u < 1.
    pub fn new(u: f64) -> Result<QuantileIndex> {
        if u.is_finite() && u > 0.0 && u < 1.0 {
            Ok(QuantileIndex(u))
        } else {
            Err(Error::InvalidQuantile { u })
        }
    }

    /// The underlying value.
    pub fn value(self) -> f64 {
        self.0
    }

    /// √(u(1−u)), the per-quantile penalty multiplier.
    pub fn penalty_multiplier(self) -> f64 {
        (self.0 * (1.0 - self.0)).sqrt()
    }
}

/// A finite set of quantile indices inside a compact interval
/// [lo, hi] ⊂ (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    points: Vec<QuantileIndex>,
    lo: f64,
    hi: f64,
}

impl QuantileGrid {
    /// Builds a grid from strictly increasing points; the interval
    /// defaults to [min point, max point].
    pub fn new(points: Vec<f64>) -> Result<QuantileGrid> {
        if points.is_empty() {
            return Err(Error::InvalidGrid);
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid);
        }
        let points: Vec<QuantileIndex> = points
            .into_iter()
            .map(QuantileIndex::new)
            .collect::<Result<_>>()?;
        let lo = points[0].value();
        let hi = points[points.len() - 1].value();
        Ok(QuantileGrid { points, lo, hi })
    }

    /// Builds a single-point grid.
    pub fn single(u: f64) -> Result<QuantileGrid> {
        QuantileGrid::new(vec![u])
    }

    /// Builds an equispaced grid lo, lo+step, …, ≤ hi.
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<QuantileGrid> {
        if !(step > 0.0) || lo > hi {
            return Err(Error::InvalidGrid);
        }
        let mut points = Vec::new();
        let mut k = 0usize;
        loop {
            let u = lo + step * k as f64;
            if u > hi + 1e-12 {
                break;
            }
            points.push(u.min(hi));
            k += 1;
        }
        QuantileGrid::new(points)
    }

    /// Widens the interval [lo, hi] without adding points.
    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<QuantileGrid> {
        if !(0.0 < lo && lo <= self.points[0].value())
            || !(self.points[self.points.len() - 1].value() <= hi && hi < 1.0)
        {
            return Err(Error::InvalidGrid);
        }
        self.lo = lo;
        self.hi = hi;
        Ok(self)
    }

    /// Grid points, strictly increasing.
    pub fn points(&self) -> &[QuantileIndex] {
        &self.points
    }

    /// Lower end of the interval.
    pub fn lo(&self) -> f64 {
        self.lo
    }

    /// Upper end of the interval.
    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// A dense coefficient vector with tolerance-based support extraction.
/// Serializes as a plain sequence of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Array1<f64>);

impl Serialize for Coefficients {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for Coefficients {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Coefficients, D::Error> {
        let v = Vec::<f64>::deserialize(deserializer)?;
        Ok(Coefficients(Array1::from(v)))
    }
}

impl Coefficients {
    /// Wraps a dense vector.
    pub fn new(beta: Array1<f64>) -> Coefficients {
        Coefficients(beta)
    }

    /// The zero vector of length p.
    pub fn zeros(p: usize) -> Coefficients {
        Coefficients(Array1::zeros(p))
    }

    /// Length p.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when p = 0.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The underlying dense vector.
    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    /// The underlying values as a slice.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("coefficients are contiguous")
    }

    /// Indices j with |β_j| > tol, ascending.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tol)
            .map(|(j, _)| j)
            .collect()
    }

    /// Number of entries with |β_j| > tol.
    pub fn l0(&self, tol: f64) -> usize {
        self.0.iter().filter(|v| v.abs() > tol).count()
    }

    /// Sum of |β_j|.
    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    /// max |β_j| (0 for an empty vector).
    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for Coefficients {
    fn from(v: Vec<f64>) -> Coefficients {
        Coefficients(Array1::from_vec(v))
    }
}

/// The check loss ρ_u(t) = (u − 1{t ≤ 0})·t: slope u to the right of the
/// origin, slope u−1 to the left. Nonnegative, zero only at t = 0.
pub fn check_loss(u: QuantileIndex, t: f64) -> f64 {
    let u = u.value();
    if t > 0.0 {
        u * t
    } else {
        (u - 1.0) * t
    }
}

/// Mean check loss of the residuals: (1/n) Σ_i ρ_u(y_i − x_i'b).
pub fn quantile_loss(d: &Dataset, u: QuantileIndex, b: &Coefficients) -> Result<f64> {
    if b.len() != d.p() {
        return Err(Error::DimensionMismatch {
            context: "coefficient length vs design columns",
            expected: d.p(),
            got: b.len(),
        });
    }
    let r = d.residuals(b);
    Ok(r.iter().map(|&t| check_loss(u, t)).sum::<f64>() / d.n() as f64)
}

/// The penalized objective
/// (1/n) Σ_i ρ_u(y_i − x_i'b) + (λ√(u(1−u))/n) Σ_j σ̂_j |b_j|,
/// with an exempted intercept dropping its penalty term when the dataset
/// says so. λ = 0 reduces to the ordinary quantile regression objective.
pub fn penalized_objective(
    d: &Dataset,
    u: QuantileIndex,
    lambda: f64,
    b: &Coefficients,
) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::NegativePenalty { lambda });
    }
    let fit = quantile_loss(d, u, b)?;
    let penalty: f64 = b
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, bj)| d.penalty_weight(j) * bj.abs())
        .sum();
    Ok(fit + lambda * u.penalty_multiplier() / d.n() as f64 * penalty)
}
