//! Bicomplex (para-complex) geometry toolkit.
//!
//! The crate covers bicomplex linear algebra and the model space `CH2_tau`,
//! complex metrics on the torus and their Gauss equation, the flat
//! `SL(3)`-valued connection built from a solution, the hyperbolic affine
//! sphere pair recovered from real data, and representation-theoretic checks
//! (loxodromy, Anosov scans, the Goldman pairing).
//!
//! Bicomplex arithmetic is generic over [`num_traits::Float`]; the PDE layers
//! work in `f64`.

pub mod affine;
pub mod bicomplex;
pub mod chtau;
pub mod connection;
pub mod criteria;
pub mod expm;
pub mod gauss;
pub mod grid;
pub mod krylov;
pub mod mat3;
pub mod oracle;
pub mod metric;
pub mod replib;

pub use num_complex::Complex64;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `f64` bicomplex number.
pub type Bicomplex64 = bicomplex::Bicomplex<f64>;
/// `f64` bicomplex 3-vector.
pub type BcVec3f = bicomplex::BcVec3<f64>;
/// `f64` bicomplex 3x3 matrix.
pub type BcMat3f = bicomplex::BcMat3<f64>;
/// `f64` complex 3x3 matrix.
pub type CMat3f = mat3::CMat3<f64>;
/// `f64` complex 3-vector.
pub type CVec3f = mat3::CVec3<f64>;
