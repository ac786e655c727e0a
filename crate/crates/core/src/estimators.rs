//! Kernel-weighted regression estimators: the full-model kernel estimator,
//! the k-NN-with-kernel estimator, and the estimator built on a
//! pseudometric d_p.
//!
//! Balls are closed: a sample curve at distance exactly h gets weight
//! K(1) > 0. When every kernel value vanishes the weights are all zero and
//! the prediction is 0 (the 0/0 := 0 convention); `effective_neighbors`
//! is then 0 so callers can detect the vacuous fit.

use std::sync::Arc;

use crate::bandwidth::{build_plan, kth_smallest, BandwidthPlan};
use crate::curve::{Dataset, ReferenceCurve};
use crate::error::{Error, Result};
use crate::kernels::RegularKernel;
use crate::metrics::{Embedding, Metric, PseudometricSpec};

/// Nonnegative weights summing to exactly 1, or all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Left-to-right sum.
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_vacuous(&self) -> bool {
        self.0.iter().all(|&w| w == 0.0)
    }

    /// Indices with positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub prediction: f64,
    pub weights: WeightVector,
    pub effective_neighbors: usize,
    pub plan: BandwidthPlan,
}

/// Normalizes raw kernel values. The last positive weight absorbs the
/// rounding residue so that the left-to-right sum is exactly 1.
fn normalize(raw: Vec<f64>) -> WeightVector {
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return WeightVector(vec![0.0; raw.len()]);
    }
    let mut w: Vec<f64> = raw.iter().map(|k| k / total).collect();
    if w.iter().sum::<f64>() != 1.0 {
        let last = w.iter().rposition(|&v| v > 0.0).expect("positive total");
        let before: f64 = w[..last].iter().sum();
        let fixed = 1.0 - before;
        // The residue is a few ulps; never let it flip a sign.
        if fixed > 0.0 {
            w[last] = fixed;
            let mut s: f64 = w.iter().sum();
            let mut steps = 0;
            while s != 1.0 && steps < 64 {
                w[last] = if s > 1.0 { w[last].next_down() } else { w[last].next_up() };
                s = w.iter().sum();
                steps += 1;
            }
        }
    }
    WeightVector(w)
}

/// Kernel weights from distances. `h == 0` selects the points at distance
/// exactly 0 (the closed ball of radius 0).
pub(crate) fn weights_from_distances(distances: &[f64], h: f64, kernel: &RegularKernel) -> WeightVector {
    let raw = distances
        .iter()
        .map(|&d| {
            if h > 0.0 {
                kernel.evaluate(d / h)
            } else if d == 0.0 {
                kernel.evaluate(0.0)
            } else {
                0.0
            }
        })
        .collect();
    normalize(raw)
}

/// Σ w_i Y_i, kept inside the hull of the supporting responses.
fn fit(weights: WeightVector, responses: &[f64], plan: BandwidthPlan) -> FitResult {
    let mut prediction = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut count = 0;
    for (&w, &y) in weights.0.iter().zip(responses) {
        if w > 0.0 {
            prediction += w * y;
            lo = lo.min(y);
            hi = hi.max(y);
            count += 1;
        }
    }
    if count > 0 {
        prediction = prediction.clamp(lo, hi);
    }
    FitResult {
        prediction,
        weights,
        effective_neighbors: count,
        plan,
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidth must be positive and finite, got {h}")))
    }
}

/// A training sample embedded once under a metric, for repeated queries.
#[derive(Debug, Clone)]
pub struct EmbeddedSample {
    embedding: Embedding,
    coords: Vec<Vec<f64>>,
    responses: Vec<f64>,
}

impl EmbeddedSample {
    pub fn new(data: &Dataset, metric: &Metric) -> Result<Self> {
        let embedding = Embedding::new(metric, Arc::clone(data.grid()))?;
        let coords = data
            .curves()
            .iter()
            .map(|c| embedding.embed(c))
            .collect::<Result<_>>()?;
        Ok(Self {
            embedding,
            coords,
            responses: data.responses().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    /// Distances from `x` to every training curve.
    pub fn distances(&self, x: &ReferenceCurve) -> Result<Vec<f64>> {
        let ex = self.embedding.embed(x)?;
        Ok(self
            .coords
            .iter()
            .map(|c| self.embedding.distance(&ex, c))
            .collect())
    }

    /// Kernel fit with bandwidth `plan.h_np` on precomputed distances.
    pub fn fit_distances(&self, distances: &[f64], plan: BandwidthPlan, kernel: &RegularKernel) -> FitResult {
        let w = weights_from_distances(distances, plan.h_np, kernel);
        fit(w, &self.responses, plan)
    }

    pub fn predict_kernel(&self, x: &ReferenceCurve, h: f64, kernel: &RegularKernel) -> Result<FitResult> {
        check_bandwidth(h)?;
        let d = self.distances(x)?;
        Ok(self.fit_distances(&d, build_plan(h, 0.0, 1.0)?, kernel))
    }

    pub fn predict_knn(&self, x: &ReferenceCurve, k: usize, kernel: &RegularKernel) -> Result<FitResult> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!("k = {k} must lie in 1..={}", self.len())));
        }
        let d = self.distances(x)?;
        let radius = kth_smallest(&d, k)?;
        Ok(self.fit_distances(&d, build_plan(radius, 0.0, 1.0)?, kernel))
    }

    pub fn predict_with_plan(&self, x: &ReferenceCurve, plan: BandwidthPlan, kernel: &RegularKernel) -> Result<FitResult> {
        check_bandwidth(plan.h_np)?;
        let d = self.distances(x)?;
        Ok(self.fit_distances(&d, plan, kernel))
    }
}

/// w_i = K(d(x, X_i)/h) / Σ_j K(d(x, X_j)/h), or all zero.
pub fn kernel_weights(
    x: &ReferenceCurve,
    data: &Dataset,
    h: f64,
    kernel: &RegularKernel,
    metric: &Metric,
) -> Result<WeightVector> {
    check_bandwidth(h)?;
    let sample = EmbeddedSample::new(data, metric)?;
    Ok(weights_from_distances(&sample.distances(x)?, h, kernel))
}

/// Kernel estimator with the full L² metric and a fixed bandwidth.
pub fn predict_full(x: &ReferenceCurve, data: &Dataset, h: f64, kernel: &RegularKernel) -> Result<FitResult> {
    EmbeddedSample::new(data, &Metric::Full)?.predict_kernel(x, h, kernel)
}

/// Kernel estimator with bandwidth Hₙ(x), the inclusive k-NN radius.
pub fn predict_knn(x: &ReferenceCurve, data: &Dataset, k: usize, kernel: &RegularKernel) -> Result<FitResult> {
    EmbeddedSample::new(data, &Metric::Full)?.predict_knn(x, k, kernel)
}

/// Kernel estimator with the pseudometric d_p and bandwidth `plan.h_np`.
pub fn predict_discretized(
    x: &ReferenceCurve,
    data: &Dataset,
    spec: &PseudometricSpec,
    plan: BandwidthPlan,
    kernel: &RegularKernel,
) -> Result<FitResult> {
    EmbeddedSample::new(data, &Metric::Pseudo(spec.clone()))?.predict_with_plan(x, plan, kernel)
}
