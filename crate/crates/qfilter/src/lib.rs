//! Simulation core for continuously monitored finite-dimensional quantum systems
//! under measurement feedback.
//!
//! The library propagates the conditional density matrix ρ of an N-level system
//! driven by the Itô stochastic master equation
//!
//! ```text
//! dρ = −i[F + Σᵢ uᵢGᵢ, ρ] dt + 𝒟[c]ρ dt + √η (cρ + ρc† − Tr[(c+c†)ρ] ρ) dW
//! ```
//!
//! with `𝒟[c]ρ = cρc† − ½(c†cρ + ρc†c)`, along with its linear (unnormalized)
//! form driven by the raw observation record. On top of the integrator sit the
//! switching feedback laws that stabilize spin eigenstates and two-qubit
//! entangled states, Lyapunov diagnostics with closed-form generators, and a
//! spectral reachability check for the drive Hamiltonian.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only selects faster intrinsic math. All heavy I/O lives in the
//! companion CLI crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod analysis;
pub mod control;
pub mod dynamics;
mod linalg;
pub mod operators;
pub mod qstate;

pub use num_complex::Complex64;

/// Scalar math shim: uses hardware intrinsics under `std`, libm otherwise.
pub(crate) mod fm {
    #[cfg(feature = "std")]
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[cfg(not(feature = "std"))]
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[cfg(feature = "std")]
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[cfg(not(feature = "std"))]
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }

    /// |z| without pulling trait machinery into call sites.
    #[inline(always)]
    pub fn cabs(z: num_complex::Complex64) -> f64 {
        sqrt(z.norm_sqr())
    }
}
