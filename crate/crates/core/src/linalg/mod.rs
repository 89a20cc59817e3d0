//! Dense and CSR kernels. All reductions run in a fixed sequential order, so
//! results are bit-reproducible regardless of the host.

pub mod dense;
pub mod sparse;

pub use dense::Matrix;
pub use sparse::{Csr, CsrBuilder};
