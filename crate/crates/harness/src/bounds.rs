//! Kernel parameters for sigmoid-network targets.

use serde::{Deserialize, Serialize};

use tds_core::kernels::KernelSpec;
use tds_core::nets::NeuralNet;
use tds_core::polyapprox::{compose_sigmoid_net_approx, ApproxCertificate};

use crate::HarnessError;

/// Degree vector, `A` and `B` obtained from an explicit approximant of the net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedBounds {
    pub kernel: KernelSpec,
    /// `max(1, (2R)^(2^t prod ell_i))`.
    #[serde(rename = "A")]
    pub sup_bound: f64,
    /// Sum of squared monomial coefficients of the approximant, an upper
    /// bound on its squared norm in the multinomial-kernel space. Absent
    /// when the approximant is too large to expand.
    #[serde(rename = "B")]
    pub norm_bound: Option<f64>,
    pub certificate: ApproxCertificate,
}

/// Builds the composed Chebyshev approximant of `net` to accuracy `eps` on
/// the radius-`radius` ball and reads the kernel parameters off it.
pub fn derive_net_bounds(net: &NeuralNet, eps: f64, radius: f64) -> Result<DerivedBounds, HarnessError> {
    let (_, degrees, certificate) = compose_sigmoid_net_approx(net, eps, radius)?;
    let kernel = KernelSpec::new(degrees).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(DerivedBounds {
        sup_bound: kernel.sup_bound(radius),
        norm_bound: certificate.coeff_l2_sq.map(|b| b.max(1.0)),
        kernel,
        certificate,
    })
}
