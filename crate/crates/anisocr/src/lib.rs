//! Nonconforming finite elements on anisotropic simplicial meshes.
//!
//! This crate provides the building blocks for working with Crouzeix-Raviart
//! (CR) and lowest-order Raviart-Thomas (RT0) elements on simplicial meshes
//! whose elements may have arbitrarily large aspect ratios, together with
//! verification harnesses that certify the identities and inequalities the
//! construction rests on:
//!
//! * conforming simplicial meshes with face topology and orientation
//!   ([`mesh`]), plus generators for anisotropic mesh families ([`meshgen`]);
//! * the per-element two-step affine decomposition `Phi = A_T * At * Ah + b`
//!   isolating scaling, shear and rotation, and the semi-regularity measure
//!   `H_T / h_T` ([`geometry`]);
//! * exact-degree quadrature on reference simplices and faces ([`quadrature`]);
//! * CR / discontinuous-CR / RT0 / P0 / P1 spaces, dof maps and two-step
//!   Piola transforms ([`fe`]);
//! * mean-value projections and their anisotropic error ratios
//!   ([`projection`]);
//! * RT interpolation with the commuting-diagram check and stability/error
//!   ratio harnesses ([`rt`]);
//! * height-weighted face weights and penalties, broken norms, the jump
//!   product identity, the anisotropic trace ratio and the discrete
//!   integration-by-parts residual ([`norms`]);
//! * the discrete Sobolev constant `sup ||phi||_Lq / |phi|_{p,Vh}` computed
//!   by a generalized eigensolver (q = p = 2) or gradient ascent ([`sobolev`]);
//! * the penalized CR discretization of the Poisson problem and its
//!   stability record ([`poisson`]).
//!
//! The crate is `no_std` (with `alloc`); file formats, CSV reports and the
//! command-line driver live in the companion `anisocr-cli` crate.

#![no_std]
// the test harness links std, whose inherent f64 methods shadow FloatExt and
// make those imports look unused
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fe;
pub mod geometry;
pub mod la;
pub mod mesh;
pub mod meshgen;
pub mod norms;
pub mod poisson;
pub mod projection;
pub mod quadrature;
pub mod rng;
pub mod rt;
pub mod sobolev;

mod float;
#[cfg(test)]
pub(crate) mod testutil;
mod vecd;

pub use float::FloatExt;
pub use vecd::Point;

/// Errors shared by the ratio and sweep harnesses.
#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// A ratio whose denominator vanished (and whose numerator did not).
    UndefinedRatio,
    /// `(q, p)` outside the local embedding `1 - d/p >= -d/q`.
    InadmissiblePair {
        q: f64,
        p: f64,
        dim: usize,
    },
    /// `q > p` is rejected: the duality argument behind the inequality needs
    /// `q <= p`.
    QExceedsP {
        q: f64,
        p: f64,
    },
    /// Exponent outside `(1, inf)`.
    ExponentRange {
        value: f64,
    },
    /// Gram matrix of the named space is numerically singular.
    SingularGram {
        space: &'static str,
        detail: alloc::string::String,
    },
    Quadrature(quadrature::QuadError),
    La(la::LaError),
    Geometry(geometry::GeometryError),
    MeshGen(meshgen::MeshGenError),
}

impl core::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            HarnessError::UndefinedRatio => write!(f, "undefined ratio: denominator is zero"),
            HarnessError::InadmissiblePair { q, p, dim } => write!(
                f,
                "pair (q={q}, p={p}) violates the embedding 1 - {dim}/p >= -{dim}/q"
            ),
            HarnessError::QExceedsP { q, p } => {
                write!(f, "q={q} > p={p} is outside the inequality's range")
            }
            HarnessError::ExponentRange { value } => {
                write!(f, "exponent {value} outside (1, inf)")
            }
            HarnessError::SingularGram { space, detail } => {
                write!(f, "gram matrix of space `{space}` is singular: {detail}")
            }
            HarnessError::Quadrature(e) => write!(f, "{e}"),
            HarnessError::La(e) => write!(f, "{e}"),
            HarnessError::Geometry(e) => write!(f, "{e}"),
            HarnessError::MeshGen(e) => write!(f, "{e}"),
        }
    }
}

impl From<meshgen::MeshGenError> for HarnessError {
    fn from(e: meshgen::MeshGenError) -> Self {
        HarnessError::MeshGen(e)
    }
}

impl From<quadrature::QuadError> for HarnessError {
    fn from(e: quadrature::QuadError) -> Self {
        HarnessError::Quadrature(e)
    }
}

impl From<la::LaError> for HarnessError {
    fn from(e: la::LaError) -> Self {
        HarnessError::La(e)
    }
}

impl From<geometry::GeometryError> for HarnessError {
    fn from(e: geometry::GeometryError) -> Self {
        HarnessError::Geometry(e)
    }
}
