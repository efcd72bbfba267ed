//! Optical geometry of Lorentzian metrics: null congruences, their
//! intrinsic torsion (geodesy obstruction, expansion, twist, shear,
//! parallelism obstruction), classification, and the associated
//! transformation laws and adapted connections.

pub mod adapted;
pub mod catalog;
pub mod conformal;
pub mod curvature;
pub mod error;
pub mod fd;
pub mod frame;
pub mod jet;
pub mod metric;
pub mod optical;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use jet::{implicit_root, Jet2, JetOp, Scalar};
pub use metric::{eval_metric, CongruenceSpec, MetricJet, MetricModel};
