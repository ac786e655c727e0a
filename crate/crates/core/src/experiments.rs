//! Synthetic data, consistency sweeps over (n, p), and Monte Carlo
//! diagnostics for the deviation condition and the Besicovitch condition.
//!
//! All randomness is derived from one master seed. Jobs are independent and
//! run on the rayon pool; results are folded in job order, so outputs are
//! bit-identical regardless of thread count.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{build_plan, cnp_schedule_scaled, h_star_from_distances, VariantKind};
use crate::curve::{Dataset, Grid, Meta, ReferenceCurve};
use crate::error::{Error, Result};
use crate::estimators::EmbeddedSample;
use crate::kernels::KernelName;
use crate::kl_basis::{empirical_basis, EigenBasis};
use crate::metrics::{Embedding, Metric, PseudometricSpec};

/// Query curves per (n, replication) job in a sweep.
pub const DEFAULT_QUERIES: usize = 100;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `master` along a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &i| mix(acc ^ mix(i)))
}

type Sampler = Arc<dyn Fn(&mut dyn RngCore, &Grid) -> Vec<f64> + Send + Sync>;

/// A user-supplied path sampler. Must return one value per grid point.
#[derive(Clone)]
pub struct CustomProcess {
    pub name: String,
    sampler: Sampler,
}

impl CustomProcess {
    pub fn new(
        name: impl Into<String>,
        sampler: impl Fn(&mut dyn RngCore, &Grid) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            sampler: Arc::new(sampler),
        }
    }
}

impl fmt::Debug for CustomProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomProcess({:?})", self.name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessKind {
    /// Standard Brownian motion started at 0. Paths are not H¹.
    BrownianMotion,
    /// X(t) = Σ_{k≤modes} ξ_k (2k-1)^{-(1+decay)} √2 sin((k-½)πt), ξ_k iid
    /// N(0,1). decay > 0.5 keeps the derivative square-summable.
    SmoothFourier { modes: usize, decay: f64 },
    #[serde(skip)]
    Custom(CustomProcess),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn brownian(seed: u64) -> Self {
        Self {
            kind: ProcessKind::BrownianMotion,
            seed,
        }
    }

    pub fn smooth_fourier(modes: usize, decay: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind: ProcessKind::SmoothFourier { modes, decay },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(process: CustomProcess, seed: u64) -> Self {
        Self {
            kind: ProcessKind::Custom(process),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            kind: self.kind.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ProcessKind::SmoothFourier { modes, decay } = self.kind {
            if modes == 0 {
                return Err(Error::invalid("SmoothFourier needs at least one mode"));
            }
            if !(decay > 0.5 && decay.is_finite()) {
                return Err(Error::invalid(format!(
                    "SmoothFourier decay must exceed 0.5, got {decay}"
                )));
            }
        }
        Ok(())
    }

    /// Whether sample paths lie in H¹.
    pub fn is_h1_regular(&self) -> bool {
        matches!(self.kind, ProcessKind::SmoothFourier { .. })
    }
}

/// Draws paths on one grid; precomputes the Fourier design once.
struct PathSampler<'a> {
    kind: &'a ProcessKind,
    grid: &'a Grid,
    design: Vec<Vec<f64>>,
}

impl<'a> PathSampler<'a> {
    fn new(kind: &'a ProcessKind, grid: &'a Grid) -> Self {
        let design = match *kind {
            ProcessKind::SmoothFourier { modes, decay } => (1..=modes)
                .map(|k| {
                    let freq = (k as f64 - 0.5) * PI;
                    let amp = SQRT_2 * ((2 * k - 1) as f64).powf(-(1.0 + decay));
                    grid.points().iter().map(|&t| amp * (freq * t).sin()).collect()
                })
                .collect(),
            _ => Vec::new(),
        };
        Self { kind, grid, design }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let t = self.grid.points();
        match self.kind {
            ProcessKind::BrownianMotion => {
                let mut out = Vec::with_capacity(t.len());
                let mut x = 0.0;
                out.push(x);
                for w in t.windows(2) {
                    let z: f64 = StandardNormal.sample(rng);
                    x += z * (w[1] - w[0]).sqrt();
                    out.push(x);
                }
                Ok(out)
            }
            ProcessKind::SmoothFourier { .. } => {
                let mut out = vec![0.0; t.len()];
                for row in &self.design {
                    let z: f64 = StandardNormal.sample(rng);
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += z * v;
                    }
                }
                Ok(out)
            }
            ProcessKind::Custom(c) => {
                let v = (c.sampler)(rng, self.grid);
                if v.len() != t.len() {
                    return Err(Error::Data(format!(
                        "custom process {:?} returned {} values for {} grid points",
                        c.name,
                        v.len(),
                        t.len()
                    )));
                }
                Ok(v)
            }
        }
    }
}

/// Regression functionals η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Eta {
    /// ∫ X
    IntegralMean,
    /// ∫ X²
    SquaredNorm,
    /// sin(∫ X)
    SineOfIntegral,
    Constant { value: f64 },
}

impl Eta {
    pub fn name(&self) -> &'static str {
        match self {
            Eta::IntegralMean => "integral_mean",
            Eta::SquaredNorm => "squared_norm",
            Eta::SineOfIntegral => "sine_of_integral",
            Eta::Constant { .. } => "constant",
        }
    }

    pub fn evaluate(&self, x: &ReferenceCurve) -> f64 {
        match *self {
            Eta::IntegralMean => x.integral(),
            Eta::SquaredNorm => {
                let w = x.grid().weights();
                x.values().iter().zip(w).map(|(v, w)| w * v * v).sum()
            }
            Eta::SineOfIntegral => x.integral().sin(),
            Eta::Constant { value } => value,
        }
    }

    /// Bounded over every curve, not only over a particular process.
    pub fn is_globally_bounded(&self) -> bool {
        matches!(self, Eta::SineOfIntegral | Eta::Constant { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub eta: Eta,
    pub noise_sd: f64,
}

impl RegressionSpec {
    pub fn new(eta: Eta, noise_sd: f64) -> Result<Self> {
        let spec = Self { eta, noise_sd };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_sd must be finite and ≥ 0, got {}",
                self.noise_sd
            )));
        }
        if let Eta::Constant { value } = self.eta {
            if !value.is_finite() {
                return Err(Error::invalid("constant eta must be finite"));
            }
        }
        Ok(())
    }
}

fn draw_curves(spec: &ProcessSpec, n: usize, grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Result<Vec<ReferenceCurve>> {
    let sampler = PathSampler::new(&spec.kind, grid);
    (0..n)
        .map(|_| ReferenceCurve::new(Arc::clone(grid), sampler.draw(rng)?))
        .collect()
}

/// n iid curves from `spec` on `grid` with Y = η(X) + σ·N(0,1). Curves are
/// drawn first, then the noise, all from one ChaCha8 stream seeded by
/// `spec.seed`.
///
/// The dataset meta records the process, η, σ, the seed, and a `warning`
/// entry when η is not bounded on the process's support.
pub fn generate(spec: &ProcessSpec, reg: &RegressionSpec, n: usize, grid: Arc<Grid>) -> Result<Dataset> {
    spec.validate()?;
    reg.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let curves = draw_curves(spec, n, &grid, &mut rng)?;
    let responses: Vec<f64> = curves
        .iter()
        .map(|c| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            reg.eta.evaluate(c) + reg.noise_sd * noise
        })
        .collect();
    let mut meta = Meta::new();
    let process = match &spec.kind {
        ProcessKind::BrownianMotion => "brownian_motion".to_string(),
        ProcessKind::SmoothFourier { modes, decay } => {
            format!("smooth_fourier(modes={modes},decay={decay})")
        }
        ProcessKind::Custom(c) => format!("custom({})", c.name),
    };
    meta.insert("process".into(), process);
    meta.insert("eta".into(), reg.eta.name().into());
    meta.insert("noise_sd".into(), reg.noise_sd.to_string());
    meta.insert("seed".into(), spec.seed.to_string());
    let max_abs = curves
        .iter()
        .map(|c| reg.eta.evaluate(c).abs())
        .fold(0.0, f64::max);
    meta.insert("eta_max_abs".into(), max_abs.to_string());
    if !reg.eta.is_globally_bounded() {
        meta.insert(
            "warning".into(),
            format!(
                "eta {} is unbounded on the support of a Gaussian process (sample max |eta| = {max_abs})",
                reg.eta.name()
            ),
        );
    }
    Dataset::with_meta(curves, responses, meta)
}

/// Pseudometric chosen by variant, instantiated at each p of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudometricFamily {
    pub variant: VariantKind,
    /// Smoother kernel; ignored by the other variants.
    #[serde(default)]
    pub smooth_kernel: KernelName,
    /// Smoothing bandwidth as a multiple of 1/p.
    #[serde(default = "one")]
    pub smooth_h_factor: f64,
}

fn one() -> f64 {
    1.0
}

impl PseudometricFamily {
    pub fn new(variant: VariantKind) -> Self {
        Self {
            variant,
            smooth_kernel: KernelName::Uniform,
            smooth_h_factor: 1.0,
        }
    }

    /// The member at truncation `p`. Eigen truncations are capped at the
    /// basis size; the effective p is returned alongside.
    pub fn at(&self, p: usize, basis: Option<&Arc<EigenBasis>>) -> Result<(PseudometricSpec, usize)> {
        match self.variant {
            VariantKind::Discretize => Ok((PseudometricSpec::discretize(p)?, p)),
            VariantKind::Smooth => {
                let h = self.smooth_h_factor / p as f64;
                let spec = PseudometricSpec::smooth(p, Some(h), self.smooth_kernel.kernel())?;
                Ok((spec, p))
            }
            VariantKind::Eigen => {
                let basis = basis.ok_or_else(|| Error::invalid("eigen variant needs a basis"))?;
                let p_eff = p.min(basis.len());
                Ok((PseudometricSpec::eigen(p_eff, Arc::clone(basis))?, p_eff))
            }
        }
    }
}

/// Discretized estimator settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEstimator {
    pub family: PseudometricFamily,
    #[serde(default)]
    pub kernel: KernelName,
    /// Multiplier of the shipped c_np schedule.
    #[serde(default = "one")]
    pub cnp_scale: f64,
    /// The constant C in h_np = hₙ + C·c_np.
    #[serde(default = "one", rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone)]
pub struct SweepDesign {
    pub n_values: Vec<usize>,
    pub p_values: Vec<usize>,
    pub replications: usize,
    pub queries: usize,
    pub grid: Arc<Grid>,
}

fn check_increasing(name: &str, v: &[usize]) -> Result<()> {
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "{name} must be nonempty, positive and strictly increasing"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n: usize,
    pub p: usize,
    pub variant: VariantKind,
    pub mse: f64,
    pub mse_full: f64,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Row-major over (n, p).
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, n: usize, p: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.n == n && c.p == p)
    }
}

/// Sums of squared errors over the queries of one (n, replication) job.
struct JobErrors {
    full: f64,
    per_p: Vec<f64>,
}

fn run_job(
    process: &ProcessSpec,
    reg: &RegressionSpec,
    est: &SweepEstimator,
    design: &SweepDesign,
    n: usize,
    rep: usize,
) -> Result<JobErrors> {
    let master = process.seed;
    let train_seed = derive_seed(master, &[0, n as u64, rep as u64]);
    let query_seed = derive_seed(master, &[1, n as u64, rep as u64]);
    let train = generate(&process.with_seed(train_seed), reg, n, Arc::clone(&design.grid))?;
    let mut rng = ChaCha8Rng::seed_from_u64(query_seed);
    let queries = draw_curves(process, design.queries, &design.grid, &mut rng)?;
    let truth: Vec<f64> = queries.iter().map(|q| reg.eta.evaluate(q)).collect();
    let kernel = est.kernel.kernel();

    let full = EmbeddedSample::new(&train, &Metric::Full)?;
    let mut full_sq = 0.0;
    for (q, eta) in queries.iter().zip(&truth) {
        let d = full.distances(q)?;
        let plan = build_plan(h_star_from_distances(&d)?, 0.0, 1.0)?;
        let e = full.fit_distances(&d, plan, &kernel).prediction - eta;
        full_sq += e * e;
    }

    let basis = if est.family.variant == VariantKind::Eigen {
        let max_p = *design.p_values.iter().max().expect("nonempty");
        let rank = n.min(design.grid.len()).min(max_p);
        Some(Arc::new(empirical_basis(&train, rank)?))
    } else {
        None
    };
    let schedule = cnp_schedule_scaled(est.family.variant, basis.clone(), est.cnp_scale)?;
    let mut per_p = Vec::with_capacity(design.p_values.len());
    for &p in &design.p_values {
        let (spec, p_eff) = est.family.at(p, basis.as_ref())?;
        let c_np = schedule.value(n, p_eff)?;
        let sample = EmbeddedSample::new(&train, &Metric::Pseudo(spec))?;
        let mut sq = 0.0;
        for (q, eta) in queries.iter().zip(&truth) {
            let d = sample.distances(q)?;
            let plan = build_plan(h_star_from_distances(&d)?, c_np, est.c)?;
            let e = sample.fit_distances(&d, plan, &kernel).prediction - eta;
            sq += e * e;
        }
        per_p.push(sq);
    }
    Ok(JobErrors { full: full_sq, per_p })
}

/// Mean squared error of the discretized and full-model estimators over
/// fresh query curves, for every (n, p). Each (n, replication) draws one
/// training set and one query set shared by every p, so `mse_full` does not
/// depend on p. The discretized estimator uses hₙ* computed under d_p and
/// the plan built from the scaled c_np schedule; the full one uses hₙ*
/// under the full metric.
pub fn consistency_sweep(
    process: &ProcessSpec,
    reg: &RegressionSpec,
    est: &SweepEstimator,
    design: &SweepDesign,
) -> Result<SweepResult> {
    process.validate()?;
    reg.validate()?;
    check_increasing("n_values", &design.n_values)?;
    check_increasing("p_values", &design.p_values)?;
    if design.replications == 0 || design.queries == 0 {
        return Err(Error::invalid("replications and queries must be positive"));
    }
    if design.n_values[0] < 2 {
        return Err(Error::invalid("sweeps need n ≥ 2"));
    }
    let jobs: Vec<(usize, usize)> = design
        .n_values
        .iter()
        .flat_map(|&n| (0..design.replications).map(move |r| (n, r)))
        .collect();
    let results: Vec<JobErrors> = jobs
        .par_iter()
        .map(|&(n, r)| run_job(process, reg, est, design, n, r))
        .collect::<Result<_>>()?;

    let denom = (design.replications * design.queries) as f64;
    let mut cells = Vec::new();
    for (ni, &n) in design.n_values.iter().enumerate() {
        let block = &results[ni * design.replications..(ni + 1) * design.replications];
        let full: f64 = block.iter().map(|j| j.full).sum::<f64>() / denom;
        for (pi, &p) in design.p_values.iter().enumerate() {
            let mse = block.iter().map(|j| j.per_p[pi]).sum::<f64>() / denom;
            cells.push(SweepCell {
                n,
                p,
                variant: est.family.variant,
                mse,
                mse_full: full,
                replications: design.replications,
                seed: process.seed,
            });
        }
    }
    Ok(SweepResult { cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Cell {
    pub n: usize,
    pub p: usize,
    pub c_np: f64,
    pub estimate: f64,
}

/// Monte Carlo estimate of n²·E_X[P²(|d(X,X₁) − d_p(X,X₁)| ≥ c_np | X)].
///
/// `mc` outer draws of X and `mc` inner draws of X₁ are shared by every
/// cell. c_np comes from the shipped schedule times `cnp_scale`; the Eigen
/// variant's schedule and basis come from the inner draws.
pub fn h2_probe(
    process: &ProcessSpec,
    family: &PseudometricFamily,
    cnp_scale: f64,
    n_values: &[usize],
    p_values: &[usize],
    mc: usize,
    grid: Arc<Grid>,
) -> Result<Vec<H2Cell>> {
    process.validate()?;
    check_increasing("n_values", n_values)?;
    check_increasing("p_values", p_values)?;
    if mc < 100 {
        return Err(Error::invalid(format!("h2_probe needs mc ≥ 100, got {mc}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(process.seed, &[2]));
    let outer = draw_curves(process, mc, &grid, &mut rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(process.seed, &[3]));
    let inner = draw_curves(process, mc, &grid, &mut rng)?;

    let full = pairwise(&Embedding::new(&Metric::Full, Arc::clone(&grid))?, &outer, &inner)?;
    let basis = if family.variant == VariantKind::Eigen {
        let inner_data = Dataset::new(inner.clone(), vec![0.0; mc])?;
        let max_p = *p_values.iter().max().expect("nonempty");
        Some(Arc::new(empirical_basis(&inner_data, mc.min(grid.len()).min(max_p))?))
    } else {
        None
    };
    let schedule = cnp_schedule_scaled(family.variant, basis.clone(), cnp_scale)?;

    let mut cells = Vec::new();
    for &p in p_values {
        let (spec, p_eff) = family.at(p, basis.as_ref())?;
        let emb = Embedding::new(&Metric::Pseudo(spec), Arc::clone(&grid))?;
        let pseudo = pairwise(&emb, &outer, &inner)?;
        let dev: Vec<f64> = full.iter().zip(&pseudo).map(|(a, b)| (a - b).abs()).collect();
        for &n in n_values {
            let c_np = schedule.value(n, p_eff)?;
            let mean_sq = dev
                .chunks(mc)
                .map(|row| {
                    let prob = row.iter().filter(|&&v| v >= c_np).count() as f64 / mc as f64;
                    prob * prob
                })
                .sum::<f64>()
                / mc as f64;
            cells.push(H2Cell {
                n,
                p,
                c_np,
                estimate: (n as f64).powi(2) * mean_sq,
            });
        }
    }
    cells.sort_by_key(|c| (c.n, c.p));
    Ok(cells)
}

/// Row-major |outer| × |inner| distance matrix.
fn pairwise(emb: &Embedding, outer: &[ReferenceCurve], inner: &[ReferenceCurve]) -> Result<Vec<f64>> {
    let eo: Vec<Vec<f64>> = outer.iter().map(|c| emb.embed(c)).collect::<Result<_>>()?;
    let ei: Vec<Vec<f64>> = inner.iter().map(|c| emb.embed(c)).collect::<Result<_>>()?;
    Ok(eo
        .par_iter()
        .flat_map_iter(|a| ei.iter().map(move |b| emb.distance(a, b)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesicovitchRow {
    pub delta: f64,
    pub value: f64,
}

/// For each δ, the average over sample points x_i of the mean of
/// |η(x_j) − η(x_i)| over the punctured closed ball {j ≠ i : d(x_i, x_j) ≤ δ},
/// under the full metric. Points with an empty ball contribute 0.
pub fn besicovitch_probe(data: &Dataset, eta_values: &[f64], deltas: &[f64]) -> Result<Vec<BesicovitchRow>> {
    let n = data.len();
    if n < 10 {
        return Err(Error::invalid(format!("besicovitch_probe needs n ≥ 10, got {n}")));
    }
    if eta_values.len() != n {
        return Err(Error::invalid(format!(
            "{} eta values for {n} curves",
            eta_values.len()
        )));
    }
    if deltas.is_empty()
        || deltas.iter().any(|&d| !(d > 0.0 && d.is_finite()))
        || deltas.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(Error::invalid("deltas must be positive and strictly decreasing"));
    }
    let dist = pairwise(&Embedding::new(&Metric::Full, Arc::clone(data.grid()))?, data.curves(), data.curves())?;
    let per_point: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = &dist[i * n..(i + 1) * n];
            deltas
                .iter()
                .map(|&delta| {
                    let mut count = 0usize;
                    let mut total = 0.0;
                    for (j, &d) in row.iter().enumerate() {
                        if j != i && d <= delta {
                            count += 1;
                            total += (eta_values[j] - eta_values[i]).abs();
                        }
                    }
                    if count == 0 {
                        0.0
                    } else {
                        total / count as f64
                    }
                })
                .collect()
        })
        .collect();
    Ok(deltas
        .iter()
        .enumerate()
        .map(|(k, &delta)| BesicovitchRow {
            delta,
            value: per_point.iter().map(|v| v[k]).sum::<f64>() / n as f64,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTransferCell {
    pub n: usize,
    pub p: usize,
    pub gamma: f64,
    pub scaled_mse: f64,
    pub scaled_mse_full: f64,
    /// scaled_mse / scaled_mse_full.
    pub ratio: f64,
}

/// γₙ·mse and γₙ·mse_full for every cell of a sweep.
pub fn rate_transfer_check(sweep: &SweepResult, gamma: impl Fn(usize) -> f64) -> Result<Vec<RateTransferCell>> {
    let mut ns: Vec<usize> = sweep.cells.iter().map(|c| c.n).collect();
    ns.dedup();
    let gammas: Vec<f64> = ns.iter().map(|&n| gamma(n)).collect();
    if gammas.iter().any(|&g| !(g > 0.0 && g.is_finite())) || gammas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("gamma must be positive and nondecreasing in n"));
    }
    Ok(sweep
        .cells
        .iter()
        .map(|c| {
            let g = gamma(c.n);
            RateTransferCell {
                n: c.n,
                p: c.p,
                gamma: g,
                scaled_mse: g * c.mse,
                scaled_mse_full: g * c.mse_full,
                ratio: (g * c.mse) / (g * c.mse_full),
            }
        })
        .collect())
}

/// The harness default γₙ = n^0.4.
pub fn default_gamma(n: usize) -> f64 {
    (n as f64).powf(0.4)
}
