//! Bandwidths and deviation thresholds: the k-NN radius Hₙ(x), the
//! data-driven hₙ*(x), the c_{n,p} schedules, and the coupled plan
//! hₙ = max(hₙ*, √c_{n,p}), h_{n,p} = hₙ + C·c_{n,p}.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{Dataset, ReferenceCurve};
use crate::error::{Error, Result};
use crate::kl_basis::{tail_sum, EigenBasis};
use crate::metrics::{Embedding, Metric};

/// Bandwidths for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPlan {
    pub h_star: f64,
    pub c_np: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub h_n: f64,
    pub h_np: f64,
}

/// Builds hₙ = max(h*, √c_np) and h_np = hₙ + C·c_np, so that
/// c_np ≤ h_np − hₙ ≤ C·c_np and (c_np/hₙ)² ≤ c_np.
pub fn build_plan(h_star: f64, c_np: f64, c: f64) -> Result<BandwidthPlan> {
    if !(h_star >= 0.0 && h_star.is_finite()) {
        return Err(Error::invalid(format!("h_star must be finite and ≥ 0, got {h_star}")));
    }
    if !(c_np >= 0.0 && c_np.is_finite()) {
        return Err(Error::invalid(format!("c_np must be finite and ≥ 0, got {c_np}")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be ≥ 1, got {c}")));
    }
    let h_n = h_star.max(c_np.sqrt());
    Ok(BandwidthPlan {
        h_star,
        c_np,
        c,
        h_n,
        h_np: h_n + c * c_np,
    })
}

/// k-th smallest entry (1-based) of `distances`, counting ties.
pub fn kth_smallest(distances: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > distances.len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={}",
            distances.len()
        )));
    }
    let mut d = distances.to_vec();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Neighbor count ⌈(log n)^{1.5}⌉ used for hₙ*, clamped to 1..=n.
pub fn h_star_neighbors(n: usize) -> usize {
    let k = (n as f64).ln().powf(1.5).ceil() as usize;
    k.clamp(1, n.max(1))
}

/// Default kₙ = ⌈√n⌉.
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

/// Distances from `x` to every sample curve under `metric`.
pub fn distances_to_sample(x: &ReferenceCurve, data: &Dataset, metric: &Metric) -> Result<Vec<f64>> {
    let emb = Embedding::new(metric, Arc::clone(data.grid()))?;
    let ex = emb.embed(x)?;
    data.curves()
        .iter()
        .map(|c| Ok(emb.distance(&ex, &emb.embed(c)?)))
        .collect()
}

/// Hₙ(x): distance from `x` to its k-th nearest sample curve.
pub fn knn_distance(x: &ReferenceCurve, data: &Dataset, k: usize, metric: &Metric) -> Result<f64> {
    if k == 0 || k > data.len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={}",
            data.len()
        )));
    }
    kth_smallest(&distances_to_sample(x, data, metric)?, k)
}

/// hₙ*(x) from a precomputed distance list.
pub fn h_star_from_distances(distances: &[f64]) -> Result<f64> {
    if distances.len() < 2 {
        return Err(Error::invalid("h_star needs a sample of at least two curves"));
    }
    kth_smallest(distances, h_star_neighbors(distances.len()))
}

/// hₙ*(x): radius of the ⌈(log n)^{1.5}⌉-nearest-neighbor ball, so the
/// empirical ball count over log n grows like (log n)^{0.5}.
pub fn empirical_h_star(x: &ReferenceCurve, data: &Dataset, metric: &Metric) -> Result<f64> {
    if data.len() < 2 {
        return Err(Error::invalid("h_star needs a sample of at least two curves"));
    }
    h_star_from_distances(&distances_to_sample(x, data, metric)?)
}

/// Which pseudometric a c_{n,p} schedule is designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Discretize,
    Smooth,
    Eigen,
}

impl VariantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Discretize => "discretize",
            VariantKind::Smooth => "smooth",
            VariantKind::Eigen => "eigen",
        }
    }
}

/// c_{n,p} as a function of (n, p).
///
/// Discretize/Smooth: scale·n·log(n+1)/p, so n/(p·c_{n,p}) = 1/(scale·log(n+1)).
/// Eigen: scale·n·log(n+1)·sqrt(Σ_{k>p} λ_k), so
/// n²·Σ_{k>p} λ_k / c²_{n,p} = 1/(scale·log(n+1))².
#[derive(Debug, Clone)]
pub struct CnpSchedule {
    case: VariantKind,
    scale: f64,
    basis: Option<Arc<EigenBasis>>,
}

impl CnpSchedule {
    pub fn case(&self) -> VariantKind {
        self.case
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn value(&self, n: usize, p: usize) -> Result<f64> {
        if n == 0 || p == 0 {
            return Err(Error::invalid("c_np needs n ≥ 1 and p ≥ 1"));
        }
        let growth = n as f64 * ((n + 1) as f64).ln();
        match self.case {
            VariantKind::Discretize | VariantKind::Smooth => {
                Ok(self.scale * growth / p as f64)
            }
            VariantKind::Eigen => {
                let basis = self.basis.as_ref().expect("eigen schedule holds a basis");
                Ok(self.scale * growth * tail_sum(basis, p)?.sqrt())
            }
        }
    }
}

/// The shipped schedule for `case` with unit scale.
pub fn cnp_schedule(case: VariantKind, basis: Option<Arc<EigenBasis>>) -> Result<CnpSchedule> {
    cnp_schedule_scaled(case, basis, 1.0)
}

/// The shipped schedule multiplied by a positive constant. The limits the
/// schedule is built for are unaffected by the constant.
pub fn cnp_schedule_scaled(
    case: VariantKind,
    basis: Option<Arc<EigenBasis>>,
    scale: f64,
) -> Result<CnpSchedule> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("schedule scale must be positive, got {scale}")));
    }
    if case == VariantKind::Eigen && basis.is_none() {
        return Err(Error::invalid("the eigen c_np schedule needs an eigen basis"));
    }
    Ok(CnpSchedule {
        case,
        scale,
        basis: if case == VariantKind::Eigen { basis } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{make_uniform_grid, Grid};
    use crate::metrics::PseudometricSpec;
    use approx::assert_abs_diff_eq;

    fn line_data(offsets: &[f64]) -> (Arc<Grid>, Dataset) {
        let g = Arc::new(make_uniform_grid(16).unwrap());
        let curves = offsets
            .iter()
            .map(|&c| ReferenceCurve::constant(g.clone(), c).unwrap())
            .collect();
        (g, Dataset::new(curves, vec![0.0; offsets.len()]).unwrap())
    }

    #[test]
    fn knn_order_statistics() {
        let (g, data) = line_data(&[0.2, 0.9, 0.5]);
        let x = ReferenceCurve::constant(g.clone(), 0.0).unwrap();
        let d = knn_distance(&x, &data, 2, &Metric::Full).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-14);
        let d = knn_distance(&x, &data, 3, &Metric::Full).unwrap();
        assert_abs_diff_eq!(d, 0.9, epsilon = 1e-14);
        let on = ReferenceCurve::constant(g, 0.9).unwrap();
        assert_eq!(knn_distance(&on, &data, 1, &Metric::Full).unwrap(), 0.0);
        assert!(knn_distance(&x, &data, 4, &Metric::Full).is_err());
        assert!(knn_distance(&x, &data, 0, &Metric::Full).is_err());
    }

    #[test]
    fn knn_counts_ties() {
        assert_eq!(kth_smallest(&[0.3, 0.1, 0.1, 0.7], 2).unwrap(), 0.1);
        assert_eq!(kth_smallest(&[0.3, 0.1, 0.1, 0.7], 3).unwrap(), 0.3);
    }

    #[test]
    fn knn_under_pseudometric() {
        let (g, data) = line_data(&[0.2, 0.9, 0.5]);
        let x = ReferenceCurve::constant(g, 0.0).unwrap();
        let m = Metric::Pseudo(PseudometricSpec::discretize(4).unwrap());
        assert_abs_diff_eq!(knn_distance(&x, &data, 1, &m).unwrap(), 0.2, epsilon = 1e-14);
    }

    #[test]
    fn h_star_neighbor_counts() {
        assert_eq!(h_star_neighbors(3), 2);
        assert_eq!(h_star_neighbors(100), 10);
        assert_eq!(h_star_neighbors(2), 1);
        for n in 2..5000 {
            let k = h_star_neighbors(n);
            assert!(k >= 1 && k <= n);
        }
    }

    #[test]
    fn h_star_examples() {
        let (g, data) = line_data(&[0.4, 0.1, 0.3]);
        let x = ReferenceCurve::constant(g.clone(), 0.0).unwrap();
        assert_abs_diff_eq!(
            empirical_h_star(&x, &data, &Metric::Full).unwrap(),
            0.3,
            epsilon = 1e-14
        );
        let (g2, same) = line_data(&[1.0; 7]);
        let x = ReferenceCurve::constant(g2, 1.0).unwrap();
        assert_eq!(empirical_h_star(&x, &same, &Metric::Full).unwrap(), 0.0);
        let (_, one) = line_data(&[1.0]);
        assert!(empirical_h_star(&ReferenceCurve::constant(g, 0.0).unwrap(), &one, &Metric::Full).is_err());
    }

    #[test]
    fn discretize_schedule() {
        let s = cnp_schedule(VariantKind::Discretize, None).unwrap();
        assert_abs_diff_eq!(s.value(100, 10_000).unwrap(), 0.046151, epsilon = 1e-6);
        for (n, p) in [(10, 3), (100, 64), (1000, 7)] {
            let ratio = s.value(n, 2 * p).unwrap() / s.value(n, p).unwrap();
            assert_eq!(ratio, 0.5);
        }
        let half = cnp_schedule_scaled(VariantKind::Smooth, None, 0.5).unwrap();
        assert_abs_diff_eq!(half.value(100, 10_000).unwrap(), 0.0230755, epsilon = 1e-6);
    }

    #[test]
    fn eigen_schedule_needs_basis() {
        assert!(cnp_schedule(VariantKind::Eigen, None).is_err());
        assert!(cnp_schedule_scaled(VariantKind::Discretize, None, 0.0).is_err());
    }

    #[test]
    fn plan_examples() {
        let p = build_plan(0.2, 0.01, 1.0).unwrap();
        assert_abs_diff_eq!(p.h_n, 0.2);
        assert_abs_diff_eq!(p.h_np, 0.21, epsilon = 1e-15);
        let p = build_plan(0.05, 0.04, 2.0).unwrap();
        assert_abs_diff_eq!(p.h_n, 0.2);
        assert_abs_diff_eq!(p.h_np, 0.28, epsilon = 1e-15);
        let p = build_plan(0.3, 0.0, 1.0).unwrap();
        assert_eq!((p.h_n, p.h_np), (0.3, 0.3));
        assert!(build_plan(0.1, 0.1, 0.5).is_err());
        assert!(build_plan(-0.1, 0.1, 1.0).is_err());
        assert!(build_plan(0.1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn plan_serializes_with_capital_c() {
        let p = build_plan(0.2, 0.01, 1.0).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(
            json,
            r#"{"h_star":0.2,"c_np":0.01,"C":1.0,"h_n":0.2,"h_np":0.21000000000000002}"#
        );
    }
}
