//! Quadrature, root finding, linear operators and the power method.

pub mod adaptive;
pub mod lanczos;
pub mod operator;
pub mod power;
pub mod quadrature;
pub mod roots;
pub mod scalar;

pub use adaptive::{integrate, integrate_vec, AdaptiveOptions};
pub use lanczos::{lanczos_top, LanczosResult};
pub use operator::{adjoint_mismatch, DenseMatrix, LinearOperator, Shifted, WeightedGram};
pub use power::{power_method, power_method_from, PowerOptions, PowerResult};
pub use quadrature::{expect_g, gauss_hermite, gauss_legendre, QuadratureRule, DEFAULT_ORDER, MAX_HERMITE_ORDER};
pub use roots::{find_root_monotone, minimize_convex};
pub use scalar::{dot, dot_plain, norm2, Complex64, Scalar};
