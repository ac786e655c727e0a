//! Regular, Lipschitz kernels supported on [0, 1].
//!
//! A kernel K is regular when c₁·1{u∈[0,1]} ≤ K(u) ≤ c₂·1{u∈[0,1]}. Two are
//! shipped; user kernels can be wrapped with [`RegularKernel::custom`] and
//! checked with [`validate_regular`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    Uniform,
    ShiftedLinear,
    Custom(KernelFn),
}

/// Names accepted for the shipped kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    #[default]
    Uniform,
    ShiftedLinear,
}

impl KernelName {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelName::Uniform => "uniform",
            KernelName::ShiftedLinear => "shifted_linear",
        }
    }

    pub fn kernel(self) -> RegularKernel {
        match self {
            KernelName::Uniform => uniform_kernel(),
            KernelName::ShiftedLinear => shifted_linear_kernel(),
        }
    }
}

impl FromStr for KernelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelName::Uniform),
            "shifted_linear" => Ok(KernelName::ShiftedLinear),
            other => Err(Error::invalid(format!(
                "unknown kernel {other:?} (expected \"uniform\" or \"shifted_linear\")"
            ))),
        }
    }
}

/// A kernel together with its declared envelope and Lipschitz constants.
#[derive(Clone)]
pub struct RegularKernel {
    name: String,
    profile: Profile,
    c1: f64,
    c2: f64,
    lipschitz: f64,
}

impl fmt::Debug for RegularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegularKernel")
            .field("name", &self.name)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl RegularKernel {
    /// Wraps a user-supplied kernel. The declared constants are not checked
    /// here; run [`validate_regular`] on the result.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c1: f64,
        c2: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && lipschitz > 0.0) {
            return Err(Error::invalid("kernel constants c1, c2, lipschitz must be positive"));
        }
        Ok(Self {
            name: name.into(),
            profile: Profile::Custom(Arc::new(f)),
            c1,
            c2,
            lipschitz,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    #[inline]
    pub fn evaluate(&self, u: f64) -> f64 {
        match &self.profile {
            Profile::Uniform => {
                if (0.0..=1.0).contains(&u) {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::ShiftedLinear => {
                if (0.0..=1.0).contains(&u) {
                    2.0 - u
                } else {
                    0.0
                }
            }
            Profile::Custom(f) => f(u),
        }
    }
}

/// K(u) = 1 on [0, 1], 0 elsewhere.
pub fn uniform_kernel() -> RegularKernel {
    RegularKernel {
        name: "uniform".into(),
        profile: Profile::Uniform,
        c1: 1.0,
        c2: 1.0,
        lipschitz: 1.0,
    }
}

/// K(u) = (2 - u) on [0, 1], 0 elsewhere.
pub fn shifted_linear_kernel() -> RegularKernel {
    RegularKernel {
        name: "shifted_linear".into(),
        profile: Profile::ShiftedLinear,
        c1: 1.0,
        c2: 2.0,
        lipschitz: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConstraint {
    LowerEnvelope,
    UpperEnvelope,
    OutsideSupport,
    Lipschitz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelViolation {
    pub constraint: KernelConstraint,
    /// Probe witnessing the violation.
    pub u: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct KernelReport {
    pub probes: usize,
    pub violations: Vec<KernelViolation>,
}

impl KernelReport {
    pub fn is_regular(&self) -> bool {
        self.violations.is_empty()
    }
}

const PROBE_TOL: f64 = 1e-12;

/// Probes the envelope and Lipschitz constraints on `probes` equispaced
/// points of [0, 2].
pub fn validate_regular(k: &RegularKernel, probes: usize) -> KernelReport {
    let probes = probes.max(2);
    let step = 2.0 / (probes - 1) as f64;
    let us: Vec<f64> = (0..probes).map(|i| (i as f64 * step).min(2.0)).collect();
    let values: Vec<f64> = us.iter().map(|&u| k.evaluate(u)).collect();
    let mut violations = Vec::new();
    for (&u, &v) in us.iter().zip(&values) {
        if u <= 1.0 {
            if !(v >= k.c1 - PROBE_TOL) {
                violations.push(KernelViolation {
                    constraint: KernelConstraint::LowerEnvelope,
                    u,
                    value: v,
                });
            }
            if !(v <= k.c2 + PROBE_TOL) {
                violations.push(KernelViolation {
                    constraint: KernelConstraint::UpperEnvelope,
                    u,
                    value: v,
                });
            }
        } else if v != 0.0 {
            violations.push(KernelViolation {
                constraint: KernelConstraint::OutsideSupport,
                u,
                value: v,
            });
        }
    }
    for i in 1..us.len() {
        if us[i] > 1.0 {
            break;
        }
        let slope = (values[i] - values[i - 1]).abs();
        if !(slope <= k.lipschitz * (us[i] - us[i - 1]) + PROBE_TOL) {
            violations.push(KernelViolation {
                constraint: KernelConstraint::Lipschitz,
                u: us[i],
                value: values[i],
            });
        }
    }
    KernelReport { probes, violations }
}
