//! Steady periodic capillary-gravity water waves over a flat bed with
//! prescribed vorticity.
//!
//! The free-boundary problem is posed on a fixed reference strip through a
//! conformal change of variables; the surface elevation and a bulk stream
//! correction become the unknowns of a fixed-point equation whose linearised
//! structure at flat-surface (laminar) flows is governed by an explicit
//! dispersion relation. The crate locates bifurcation points on the laminar
//! family, switches onto nontrivial solution branches, and traces them by
//! pseudo-arclength continuation while monitoring the geometric and physical
//! quantities whose degeneration terminates a branch.

// The spectral kernels are written as plain indexed loops.
#![allow(clippy::needless_range_loop)]

pub mod continuation;
pub mod dispersion;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linearization;
pub mod ode;
pub mod operator;
pub mod spectral;

use error::{Error, Result};

/// Gravity and surface-tension coefficients entering the Bernoulli condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub gravity: f64,
    pub surface_tension: f64,
}

impl Physics {
    pub fn new(gravity: f64, surface_tension: f64) -> Result<Self> {
        if gravity <= 0.0 || !gravity.is_finite() {
            return Err(Error::InvalidInput(format!("gravity must be positive, got {gravity}")));
        }
        if surface_tension <= 0.0 || !surface_tension.is_finite() {
            return Err(Error::InvalidInput(format!(
                "surface tension must be positive, got {surface_tension}"
            )));
        }
        Ok(Self { gravity, surface_tension })
    }
}
