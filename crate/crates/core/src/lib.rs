//! Regime classification and numerical probes for the semilinear elliptic
//! system
//!
//! ```text
//!     Δu = p(x) v^α,    Δv = q(x) u^β,    x ∈ R^N, N ≥ 3,
//! ```
//!
//! with nonnegative coefficients whose reduced radial envelopes behave like
//! `L r^(-λ) (ln r)^(-ν)` and `L r^(-μ) (ln r)^(-ξ)`.
//!
//! The crate is organized around five numerical building blocks and a
//! scanner that combines them:
//!
//! - [`classifier`]: closed-form nonexistence / existence conditions on the
//!   exponents, evaluated with exact sign tests.
//! - [`reduction`]: negative-order spherical power means that reduce a
//!   general coefficient to a radial profile.
//! - [`lair`]: nested triple integrals that certify existence of positive
//!   entire solutions, with convergence/divergence detection.
//! - [`iteration`]: the lower-bound recurrences `u_k`, `v_k`, the window
//!   functionals and the oscillation quantities built from them.
//! - [`shooting`]: radial initial-value integration with blow-up detection.
//! - [`scan`]: parameter-plane region maps (CSV + SVG).

pub mod classifier;
pub mod error;
pub mod field;
pub mod iteration;
pub mod lair;
pub mod quadrature;
pub mod reduction;
pub mod scan;
pub mod selftest;
pub mod shooting;

pub use classifier::{classify, DecayProfile, SystemConfig, Verdict, VerdictKind};
pub use error::{Error, Result};
pub use field::{CoefficientField, PowerLog, Radial, RadialTable};

/// Runs `f` on a rayon pool sized by `ELLIPTICA_THREADS` (0 or unset = auto).
/// Nested calls run on the pool they are already in.
#[cfg(feature = "parallel")]
pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    use std::sync::OnceLock;
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();

    if rayon::current_thread_index().is_some() {
        return f();
    }
    let pool = POOL.get_or_init(|| {
        let threads = std::env::var("ELLIPTICA_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .unwrap_or(0);
        if threads == 0 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()
    });
    match pool {
        Some(pool) => pool.install(f),
        None => f(),
    }
}
