//! Grids on [0, 1], curves sampled on a shared reference grid, and the
//! quadrature-based norms every other module builds on.
//!
//! A "full" trajectory is represented by its values on a dense reference
//! grid; all integrals use the composite trapezoid rule on that grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default number of intervals of the dense reference grid.
pub const DEFAULT_REFERENCE_INTERVALS: usize = 4096;

const UNIFORM_TOL: f64 = 1e-12;
const ENDPOINT_TOL: f64 = 1e-12;

/// Ordered sample points covering [0, 1], with cached trapezoid weights.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<f64>,
    spacing: f64,
    uniform: bool,
    weights: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Grid {
    /// Builds a grid from explicit points.
    ///
    /// Points must be strictly increasing, start at 0 and end at 1. Endpoints
    /// within 1e-12 of 0 and 1 are snapped onto them.
    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a grid needs at least the two endpoints 0 and 1"));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("grid points must be finite"));
        }
        let last = points.len() - 1;
        if points[0].abs() > ENDPOINT_TOL || (points[last] - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::invalid(format!(
                "grid must start at 0 and end at 1, got [{}, {}]",
                points[0], points[last]
            )));
        }
        points[0] = 0.0;
        points[last] = 1.0;
        if let Some(j) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "grid points must be strictly increasing (index {})",
                j + 1
            )));
        }
        let spacing = 1.0 / last as f64;
        let uniform = points
            .windows(2)
            .all(|w| (w[1] - w[0] - spacing).abs() <= UNIFORM_TOL);
        let weights = trapezoid_weights(&points);
        Ok(Self {
            points,
            spacing,
            uniform,
            weights,
        })
    }

    /// The equally spaced grid t_j = (j-1)/p, j = 1..p+1.
    pub fn uniform(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("grid resolution p must be at least 1"));
        }
        let points = (0..=p).map(|j| j as f64 / p as f64).collect();
        Self::from_points(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// 1/p for the equally spaced case; the mean spacing otherwise.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Trapezoid quadrature weights; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the grid node closest to `t`; exact ties go to the upper node.
    pub fn nearest_index(&self, t: f64) -> usize {
        let last = self.intervals();
        if self.uniform {
            return ((t * last as f64).round().max(0.0) as usize).min(last);
        }
        let upper = self.points.partition_point(|&s| s < t);
        if upper == 0 {
            return 0;
        }
        if upper > last {
            return last;
        }
        if t - self.points[upper - 1] < self.points[upper] - t {
            upper - 1
        } else {
            upper
        }
    }
}

/// `p + 1` equally spaced points on [0, 1].
pub fn make_uniform_grid(p: usize) -> Result<Grid> {
    Grid::uniform(p)
}

fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    let mut w = vec![0.0; n];
    for j in 0..n - 1 {
        let half = 0.5 * (points[j + 1] - points[j]);
        w[j] += half;
        w[j + 1] += half;
    }
    w
}

/// A curve given by its values on a reference grid.
#[derive(Debug, Clone)]
pub struct ReferenceCurve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ReferenceCurve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "curve has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite curve value at index {j}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let values = vec![c; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// ∫₀¹ x(t) dt by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        dot(self.grid.weights(), &self.values)
    }

    pub(crate) fn same_grid(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid)
    }
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same_grid(a: &ReferenceCurve, b: &ReferenceCurve) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "curves live on different grids ({} vs {} points)",
            a.grid.len(),
            b.grid.len()
        )))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// sqrt(Σ w_j (a_j - b_j)²)
pub(crate) fn weighted_distance(weights: &[f64], a: &[f64], b: &[f64]) -> f64 {
    weights
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| {
            let d = x - y;
            w * d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Trapezoid inner product ⟨a, b⟩ on the shared grid.
pub fn inner_product(a: &ReferenceCurve, b: &ReferenceCurve) -> Result<f64> {
    ensure_same_grid(a, b)?;
    Ok(a
        .grid
        .weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

/// Trapezoid approximation of the L² distance (∫₀¹ (a - b)² dt)^{1/2}.
pub fn l2_distance(a: &ReferenceCurve, b: &ReferenceCurve) -> Result<f64> {
    ensure_same_grid(a, b)?;
    Ok(weighted_distance(a.grid.weights(), &a.values, &b.values))
}

pub fn l2_norm(a: &ReferenceCurve) -> f64 {
    let w = a.grid.weights();
    w.iter()
        .zip(&a.values)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Forward difference quotients; the last node reuses the last interval.
pub fn difference_quotient(a: &ReferenceCurve) -> Result<Vec<f64>> {
    let t = a.grid.points();
    if t.len() < 2 {
        return Err(Error::invalid("derivative needs at least two grid points"));
    }
    let v = &a.values;
    let mut d: Vec<f64> = t
        .windows(2)
        .zip(v.windows(2))
        .map(|(tw, vw)| (vw[1] - vw[0]) / (tw[1] - tw[0]))
        .collect();
    d.push(*d.last().expect("at least one interval"));
    Ok(d)
}

/// Sobolev norm ‖a‖_{L²} + ‖Da‖_{L²} with Da from difference quotients.
pub fn h1_norm(a: &ReferenceCurve) -> Result<f64> {
    let d = difference_quotient(a)?;
    let w = a.grid.weights();
    let deriv = w
        .iter()
        .zip(&d)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt();
    Ok(l2_norm(a) + deriv)
}

/// Free-form provenance attached to a dataset.
pub type Meta = BTreeMap<String, String>;

/// n (curve, response) pairs on one shared grid.
#[derive(Debug, Clone)]
pub struct Dataset {
    grid: Arc<Grid>,
    curves: Vec<ReferenceCurve>,
    responses: Vec<f64>,
    meta: Meta,
}

impl Dataset {
    pub fn new(curves: Vec<ReferenceCurve>, responses: Vec<f64>) -> Result<Self> {
        Self::with_meta(curves, responses, Meta::new())
    }

    pub fn with_meta(
        mut curves: Vec<ReferenceCurve>,
        responses: Vec<f64>,
        meta: Meta,
    ) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::invalid("a dataset needs at least one curve"));
        }
        if curves.len() != responses.len() {
            return Err(Error::invalid(format!(
                "{} curves but {} responses",
                curves.len(),
                responses.len()
            )));
        }
        if let Some(i) = responses.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!("non-finite response at row {i}")));
        }
        let grid = Arc::clone(&curves[0].grid);
        for (i, c) in curves.iter_mut().enumerate() {
            if !same_grid(&grid, &c.grid) {
                return Err(Error::GridMismatch(format!(
                    "curve {i} does not share the dataset grid"
                )));
            }
            c.grid = Arc::clone(&grid);
        }
        Ok(Self {
            grid,
            curves,
            responses,
            meta,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn curves(&self) -> &[ReferenceCurve] {
        &self.curves
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut Meta {
        &mut self.meta
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Pointwise sample mean of the curves.
    pub fn mean_curve(&self) -> ReferenceCurve {
        let n = self.curves.len() as f64;
        let mut mean = vec![0.0; self.grid.len()];
        for c in &self.curves {
            for (m, v) in mean.iter_mut().zip(&c.values) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        ReferenceCurve {
            grid: Arc::clone(&self.grid),
            values: mean,
        }
    }

    /// Keeps the rows whose indices are listed, in that order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let curves = rows
            .iter()
            .map(|&i| {
                self.curves
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("row {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        let responses = rows.iter().map(|&i| self.responses[i]).collect();
        Self::with_meta(curves, responses, self.meta.clone())
    }
}
