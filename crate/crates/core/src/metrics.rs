//! Reconstruction maps and the pseudometrics they induce.
//!
//! Every variant is realized as an embedding of a curve into a finite vector
//! together with quadrature weights, so that
//! d(a, b) = sqrt(Σ w_i (ea_i - eb_i)²) for all of them:
//!
//! | variant    | coordinates                               | weights   |
//! |------------|-------------------------------------------|-----------|
//! | full       | values on the reference grid              | trapezoid |
//! | discretize | values at t_1..t_p                        | 1/p       |
//! | smooth     | kernel smoother of t_1..t_p, on the grid  | trapezoid |
//! | eigen      | first p Karhunen–Loève scores             | 1         |
//!
//! Coarse points t_j = (j-1)/p are snapped to the nearest reference node.

use std::fmt;
use std::sync::Arc;

use crate::curve::{ensure_same_grid, l2_distance, same_grid, weighted_distance, Grid, ReferenceCurve};
use crate::error::{Error, Result};
use crate::kernels::RegularKernel;
use crate::kl_basis::{self, EigenBasis};

/// Distance values within this of the kernel support edge count as inside.
const SUPPORT_SLACK: f64 = 1e-12;

/// One of the three finite-information pseudometrics d_p.
#[derive(Clone)]
pub enum PseudometricSpec {
    /// Root-mean-square over the values at t_1..t_p.
    Discretize { p: usize },
    /// L² distance between normalized-kernel smoothers of t_1..t_p.
    Smooth {
        p: usize,
        h: f64,
        kernel: RegularKernel,
        /// Declared m with h ≤ m/p.
        locality: usize,
    },
    /// Euclidean distance between the first p scores.
    Eigen { p: usize, basis: Arc<EigenBasis> },
}

impl fmt::Debug for PseudometricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Discretize { p } => write!(f, "Discretize {{ p: {p} }}"),
            Self::Smooth {
                p,
                h,
                kernel,
                locality,
            } => write!(
                f,
                "Smooth {{ p: {p}, h: {h}, kernel: {}, locality: {locality} }}",
                kernel.name()
            ),
            Self::Eigen { p, basis } => {
                write!(f, "Eigen {{ p: {p}, basis_size: {} }}", basis.len())
            }
        }
    }
}

impl PseudometricSpec {
    pub fn discretize(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        Ok(Self::Discretize { p })
    }

    /// Kernel smoother with bandwidth `h` (default 1/p, so m = 1).
    pub fn smooth(p: usize, h: Option<f64>, kernel: RegularKernel) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        let h = h.unwrap_or(1.0 / p as f64);
        let locality = ((h * p as f64) - SUPPORT_SLACK).ceil().max(1.0) as usize;
        Self::smooth_with_locality(p, h, kernel, locality)
    }

    /// Kernel smoother with an explicitly declared locality constant m.
    pub fn smooth_with_locality(
        p: usize,
        h: f64,
        kernel: RegularKernel,
        locality: usize,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("smoothing bandwidth must be positive, got {h}")));
        }
        if h > locality as f64 / p as f64 + SUPPORT_SLACK {
            return Err(Error::invalid(format!(
                "bandwidth h = {h} exceeds m/p = {locality}/{p}"
            )));
        }
        Ok(Self::Smooth {
            p,
            h,
            kernel,
            locality,
        })
    }

    pub fn eigen(p: usize, basis: Arc<EigenBasis>) -> Result<Self> {
        if p == 0 || p > basis.len() {
            return Err(Error::invalid(format!(
                "eigen truncation p = {p} must lie in 1..={}",
                basis.len()
            )));
        }
        Ok(Self::Eigen { p, basis })
    }

    pub fn p(&self) -> usize {
        match self {
            Self::Discretize { p } | Self::Smooth { p, .. } | Self::Eigen { p, .. } => *p,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Discretize { .. } => "discretize",
            Self::Smooth { .. } => "smooth",
            Self::Eigen { .. } => "eigen",
        }
    }
}

/// The full L² metric or one of the pseudometrics.
#[derive(Debug, Clone)]
pub enum Metric {
    Full,
    Pseudo(PseudometricSpec),
}

impl From<PseudometricSpec> for Metric {
    fn from(spec: PseudometricSpec) -> Self {
        Metric::Pseudo(spec)
    }
}

#[derive(Clone)]
enum Coords {
    Full,
    Coarse(Vec<usize>),
    /// Per reference node: (coarse position, φ_j(t)) pairs.
    Smooth {
        coarse: Vec<usize>,
        rows: Vec<Vec<(usize, f64)>>,
    },
    Eigen {
        basis: Arc<EigenBasis>,
        p: usize,
    },
}

/// A metric bound to a reference grid: maps curves to weighted coordinates.
#[derive(Clone)]
pub struct Embedding {
    grid: Arc<Grid>,
    coords: Coords,
    weights: Vec<f64>,
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedding")
            .field("grid_points", &self.grid.len())
            .field("dim", &self.weights.len())
            .finish()
    }
}

/// Reference-grid indices of t_1..t_p (t_{p+1} = 1 excluded).
pub fn coarse_indices(grid: &Grid, p: usize) -> Vec<usize> {
    (0..p)
        .map(|j| grid.nearest_index(j as f64 / p as f64))
        .collect()
}

fn kernel_at(kernel: &RegularKernel, dist: f64, h: f64) -> f64 {
    let mut u = dist / h;
    if u > 1.0 && u <= 1.0 + SUPPORT_SLACK {
        u = 1.0;
    }
    kernel.evaluate(u)
}

/// φ_j(t) for the normalized-kernel family at one location, as
/// (j, weight) pairs over the coarse locations `tj`. When no coarse point
/// lies within h the nearest one gets all the weight.
fn smoother_row(t: f64, tj: &[f64], h: f64, kernel: &RegularKernel) -> Vec<(usize, f64)> {
    let lo = tj.partition_point(|&s| s < t - h - SUPPORT_SLACK);
    let hi = tj.partition_point(|&s| s <= t + h + SUPPORT_SLACK);
    let mut row: Vec<(usize, f64)> = (lo..hi)
        .map(|j| (j, kernel_at(kernel, (t - tj[j]).abs(), h)))
        .filter(|&(_, k)| k > 0.0)
        .collect();
    let total: f64 = row.iter().map(|(_, k)| k).sum();
    if total > 0.0 {
        for (_, k) in &mut row {
            *k /= total;
        }
        row
    } else {
        let nearest = (0..tj.len())
            .min_by(|&a, &b| (t - tj[a]).abs().total_cmp(&(t - tj[b]).abs()))
            .expect("at least one coarse point");
        vec![(nearest, 1.0)]
    }
}

impl Embedding {
    pub fn new(metric: &Metric, grid: Arc<Grid>) -> Result<Self> {
        let (coords, weights) = match metric {
            Metric::Full => (Coords::Full, grid.weights().to_vec()),
            Metric::Pseudo(PseudometricSpec::Discretize { p }) => {
                let idx = coarse_indices(&grid, *p);
                (Coords::Coarse(idx), vec![1.0 / *p as f64; *p])
            }
            Metric::Pseudo(PseudometricSpec::Smooth { p, h, kernel, .. }) => {
                let coarse = coarse_indices(&grid, *p);
                let tj: Vec<f64> = coarse.iter().map(|&i| grid.points()[i]).collect();
                let rows = grid
                    .points()
                    .iter()
                    .map(|&t| smoother_row(t, &tj, *h, kernel))
                    .collect();
                (Coords::Smooth { coarse, rows }, grid.weights().to_vec())
            }
            Metric::Pseudo(PseudometricSpec::Eigen { p, basis }) => {
                if *p > basis.len() {
                    return Err(Error::invalid(format!(
                        "eigen truncation p = {p} exceeds basis size {}",
                        basis.len()
                    )));
                }
                if !same_grid(basis.grid(), &grid) {
                    return Err(Error::GridMismatch(
                        "eigen basis lives on a different grid".into(),
                    ));
                }
                (
                    Coords::Eigen {
                        basis: Arc::clone(basis),
                        p: *p,
                    },
                    vec![1.0; *p],
                )
            }
        };
        Ok(Self {
            grid,
            coords,
            weights,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn embed(&self, x: &ReferenceCurve) -> Result<Vec<f64>> {
        if !same_grid(x.grid(), &self.grid) {
            return Err(Error::GridMismatch(format!(
                "curve has {} grid points, metric expects {}",
                x.grid().len(),
                self.grid.len()
            )));
        }
        let v = x.values();
        Ok(match &self.coords {
            Coords::Full => v.to_vec(),
            Coords::Coarse(idx) => idx.iter().map(|&i| v[i]).collect(),
            Coords::Smooth { coarse, rows } => rows
                .iter()
                .map(|row| row.iter().map(|&(j, w)| w * v[coarse[j]]).sum())
                .collect(),
            Coords::Eigen { basis, p } => kl_basis::scores(x, basis, *p)?.0,
        })
    }

    /// Distance between two embedded curves.
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        weighted_distance(&self.weights, a, b)
    }

    /// Xᵖ evaluated on the reference grid.
    pub fn reconstruct(&self, x: &ReferenceCurve) -> Result<ReferenceCurve> {
        let values = match &self.coords {
            Coords::Full => return Ok(x.clone()),
            Coords::Coarse(idx) => {
                let e = self.embed(x)?;
                step_interpolate(&self.grid, idx, &e)
            }
            Coords::Smooth { .. } => self.embed(x)?,
            Coords::Eigen { basis, p } => {
                return kl_basis::project(x, basis, *p);
            }
        };
        ReferenceCurve::new(Arc::clone(&self.grid), values)
    }
}

/// Piecewise-constant interpolant: value at t_j on [t_j, t_{j+1}), with the
/// last interval [t_p, 1] closed.
fn step_interpolate(grid: &Grid, idx: &[usize], vals: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut j = 0;
    for r in 0..grid.len() {
        while j + 1 < idx.len() && idx[j + 1] <= r {
            j += 1;
        }
        out.push(vals[j]);
    }
    out
}

/// Xᵖ = F(X) on the reference grid.
pub fn reconstruct(x: &ReferenceCurve, spec: &PseudometricSpec) -> Result<ReferenceCurve> {
    Embedding::new(&Metric::Pseudo(spec.clone()), Arc::clone(x.grid()))?.reconstruct(x)
}

/// d_p(a, b).
pub fn pseudo_distance(a: &ReferenceCurve, b: &ReferenceCurve, spec: &PseudometricSpec) -> Result<f64> {
    ensure_same_grid(a, b)?;
    metric_distance(a, b, &Metric::Pseudo(spec.clone()))
}

/// Distance under either the full metric or a pseudometric.
pub fn metric_distance(a: &ReferenceCurve, b: &ReferenceCurve, metric: &Metric) -> Result<f64> {
    ensure_same_grid(a, b)?;
    if let Metric::Full = metric {
        return l2_distance(a, b);
    }
    let emb = Embedding::new(metric, Arc::clone(a.grid()))?;
    Ok(emb.distance(&emb.embed(a)?, &emb.embed(b)?))
}

type BasisFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Functions φ_1..φ_p defining Xᵖ(t) = Σ φ_j(t) X(t_j), with a declared
/// locality constant m.
#[derive(Clone)]
pub struct BasisFamily {
    functions: Vec<BasisFn>,
    locality: usize,
}

impl fmt::Debug for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisFamily")
            .field("p", &self.functions.len())
            .field("locality", &self.locality)
            .finish()
    }
}

impl BasisFamily {
    pub fn custom(functions: Vec<BasisFn>, locality: usize) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::invalid("a basis family needs at least one function"));
        }
        Ok(Self {
            functions,
            locality,
        })
    }

    /// φ_j = 1 on [t_j, t_{j+1}), the last one closed at 1.
    pub fn indicator(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        let functions = (0..p)
            .map(|j| {
                let lo = j as f64 / p as f64;
                let hi = (j + 1) as f64 / p as f64;
                let last = j + 1 == p;
                Arc::new(move |t: f64| {
                    if t >= lo && (t < hi || (last && t <= hi)) {
                        1.0
                    } else {
                        0.0
                    }
                }) as BasisFn
            })
            .collect();
        Self::custom(functions, 1)
    }

    /// φ_j(t) = K(|t - t_j|/h) / Σ_i K(|t - t_i|/h) on the nominal points.
    pub fn kernel_smoother(p: usize, h: f64, kernel: RegularKernel) -> Result<Self> {
        if p == 0 || !(h > 0.0) {
            return Err(Error::invalid("need p ≥ 1 and h > 0"));
        }
        let tj: Arc<Vec<f64>> = Arc::new((0..p).map(|j| j as f64 / p as f64).collect());
        let kernel = Arc::new(kernel);
        let functions = (0..p)
            .map(|j| {
                let tj = Arc::clone(&tj);
                let kernel = Arc::clone(&kernel);
                Arc::new(move |t: f64| {
                    smoother_row(t, &tj, h, &kernel)
                        .into_iter()
                        .find(|&(i, _)| i == j)
                        .map_or(0.0, |(_, w)| w)
                }) as BasisFn
            })
            .collect();
        let locality = ((h * p as f64) - SUPPORT_SLACK).ceil().max(1.0) as usize;
        Self::custom(functions, locality)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn locality(&self) -> usize {
        self.locality
    }

    pub fn eval(&self, j: usize, t: f64) -> f64 {
        (self.functions[j])(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisConditionReport {
    /// (a): Σ_j φ_j(t) = 1 within 1e-9 at every probe.
    pub partition_of_unity: bool,
    pub max_partition_error: f64,
    /// Probe where the partition error is largest.
    pub partition_witness: f64,
    /// (b): the smallest C₃ consistent with the probes.
    pub c3: f64,
    /// (c): smallest m with every probed support point of φ_j inside
    /// [t_{j-m}, t_{j+m}].
    pub observed_locality: usize,
    /// Whether the family's declared m witnesses (c).
    pub locality_holds: bool,
}

/// Probes conditions (a)–(c) on `probes` equispaced points of [0, 1].
/// `grid` holds the coarse points t_1..t_{p+1}.
pub fn check_basis_conditions(fam: &BasisFamily, grid: &Grid, probes: usize) -> BasisConditionReport {
    let probes = probes.max(2);
    let p = fam.len();
    let t = grid.points();
    let mut max_err = 0.0f64;
    let mut witness = 0.0;
    let mut c3 = 0.0f64;
    let mut m_obs = 0usize;
    for i in 0..probes {
        let s = i as f64 / (probes - 1) as f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for j in 0..p {
            let phi = fam.eval(j, s);
            sum += phi;
            sq += phi * phi;
            if phi != 0.0 {
                m_obs = m_obs.max(required_locality(t, j, s));
            }
        }
        let err = (sum - 1.0).abs();
        if err > max_err || !err.is_finite() {
            max_err = err;
            witness = s;
        }
        c3 = c3.max(sq);
    }
    BasisConditionReport {
        partition_of_unity: max_err <= 1e-9,
        max_partition_error: max_err,
        partition_witness: witness,
        c3,
        observed_locality: m_obs,
        locality_holds: m_obs <= fam.locality,
    }
}

/// Smallest m with s ∈ [t_{j-m}, t_{j+m}] (0-based j, indices clamped).
fn required_locality(t: &[f64], j: usize, s: f64) -> usize {
    let last = t.len() - 1;
    let mut m = 0;
    loop {
        let lo = t[j.saturating_sub(m)];
        let hi = t[(j + m).min(last)];
        if (s >= lo - SUPPORT_SLACK && s <= hi + SUPPORT_SLACK) || m > last {
            return m;
        }
        m += 1;
    }
}

/// Reconstruction variants for which the 1/p rate is studied.
#[derive(Debug, Clone)]
pub enum RateVariant {
    Discretize,
    /// Smoother with h = factor/p.
    Smooth { kernel: RegularKernel, h_factor: f64 },
}

/// (p, ‖x - reconstruct(x, p)‖) for each p.
pub fn reconstruction_error_rate(
    x: &ReferenceCurve,
    variant: &RateVariant,
    p_values: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if p_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("p values must be strictly increasing"));
    }
    let max_p = x.grid().intervals();
    p_values
        .iter()
        .map(|&p| {
            if p == 0 || p > max_p {
                return Err(Error::invalid(format!(
                    "p = {p} must lie in 1..={max_p}"
                )));
            }
            let spec = match variant {
                RateVariant::Discretize => PseudometricSpec::discretize(p)?,
                RateVariant::Smooth { kernel, h_factor } => {
                    PseudometricSpec::smooth(p, Some(h_factor / p as f64), kernel.clone())?
                }
            };
            let xp = reconstruct(x, &spec)?;
            Ok((p, l2_distance(x, &xp)?))
        })
        .collect()
}
