//! Accept/reject outcomes and the hypotheses returned on acceptance.

use serde::{Deserialize, Serialize};

use crate::tds_kernel::KernelHypothesis;
use crate::tds_moment::PolynomialHypothesis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    RadiusViolation,
    SpectralShift,
    MomentShift,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Hypothesis {
    Kernel(KernelHypothesis),
    Polynomial(PolynomialHypothesis),
}

impl Hypothesis {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Hypothesis::Kernel(h) => h.eval(x),
            Hypothesis::Polynomial(h) => h.eval(x),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TdsOutcome {
    Reject { reason: RejectReason, detail: String },
    Accept { hypothesis: Hypothesis },
}

impl TdsOutcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, TdsOutcome::Accept { .. })
    }

    pub fn reject_reason(&self) -> Option<RejectReason> {
        match self {
            TdsOutcome::Reject { reason, .. } => Some(*reason),
            TdsOutcome::Accept { .. } => None,
        }
    }

    pub fn hypothesis(&self) -> Option<&Hypothesis> {
        match self {
            TdsOutcome::Accept { hypothesis } => Some(hypothesis),
            TdsOutcome::Reject { .. } => None,
        }
    }
}
