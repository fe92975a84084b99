//! Self-adjoint realizations of the momentum operator `(1/2πi) d/dx` on a
//! finite union of intervals, and the spectral-set experiments they enable.
//!
//! The library is organized around a small set of objects:
//!
//! - [`geometry::IntervalUnion`]: the set Ω with exact rational endpoints,
//!   and exact translation-tiling checks against periodic translation sets.
//! - [`boundary::BoundaryMatrix`]: the unitary (or partial-isometry) matrix
//!   B coupling boundary traces, which classifies the extensions.
//! - [`spectral`]: the spectrum of an extension through eigenphase flow of
//!   the unitary transfer matrix `M(λ) = E(λβ̄)⁻¹BE(λᾱ)`, eigenfunctions,
//!   counting, and the resolvent.
//! - [`funcspace`]: concrete L²(Ω) elements, quadrature, inner products,
//!   and Parseval diagnostics.
//! - [`evolution`]: the unitary group `U(t) = exp(2πitA)` by two
//!   independent routes, a spectral propagator and an exact ray tracer.
//! - [`spectraset`]: orthogonality tests for candidate spectra,
//!   construction of B from a spectrum, and the spectral-vs-tiling harness.
//!
//! A command-line front end lives in the `momint` binary; see the book
//! under `book/` for a guided tour.

pub mod boundary;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod exact;
pub mod fmt;
pub mod funcspace;
pub mod geometry;
pub mod legendre;
pub mod spectral;
pub mod spectraset;

pub use error::{Error, ErrorKind, Result};

// Run every code snippet in the book as a doc-test. mdbook cannot link
// against the crate on its own, so the chapters are attached here instead
// and `cargo test --doc` covers them.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(unused)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(geometry, "../../../book/src/geometry.md");
    chapter!(boundary, "../../../book/src/boundary.md");
    chapter!(functions, "../../../book/src/functions.md");
    chapter!(spectrum, "../../../book/src/spectrum.md");
    chapter!(evolution, "../../../book/src/evolution.md");
    chapter!(spectral_sets, "../../../book/src/spectral-sets.md");
}
