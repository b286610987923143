//! Simulation and verification toolkit for the stochastic heat equation with a
//! skew (local-time) drift on `[0,1]` with Dirichlet boundary conditions.
//!
//! The equilibrium objects are explicit: the reference measure is the law `mu`
//! of a standard Brownian bridge on `L^2(0,1)`, and the invariant measures of
//! interest are Gibbs reweightings `exp(-int f(x_r) dr) dmu / Z` for a bounded
//! BV drift datum `f` (smooth part plus finitely many jumps). That explicitness
//! is what this crate exploits: everything downstream is checked against exact
//! samplers and closed-form quantities rather than against itself.
//!
//! Module map:
//!
//! * [`path`] — dyadic grids, piecewise-constant/linear paths, the averaging
//!   projector, and the `L^2`, `H^{-1}`, `W^{eta,p}`, `C^theta` norms.
//! * [`drift`] — the drift datum `f = f_0 + sum_j alpha_j 1_{y <= y_j}`, its
//!   mollifications and the skew coefficients of the projected dynamics.
//! * [`measures`] — exact bridge samplers (Cholesky and bisection), Gibbs
//!   rejection sampling, normalization constants, and the cell-average
//!   covariance/drift matrices of the projected system.
//! * [`localtime`] — exact occupation densities of piecewise-linear paths and
//!   the continuum/discrete integration-by-parts residuals.
//! * [`spectral`] — multi-index eigenvalue combinatorics: partition counts,
//!   the Hilbert-Schmidt trace identity and the divergence diagnostic.
//! * [`skew`] — 1D skew random walks and the interacting skew system.
//! * [`spde`] — semi-implicit finite-difference solver for the regularized
//!   equation driven by discretized space-time white noise, plus the weak
//!   (martingale) residual.
//! * [`harness`] — KS tests, bootstrap, the functional panel, convergence
//!   studies across approximation levels and Hölder scaling fits.
//! * [`io`] — CSV and binary frame formats for paths, CSV export of
//!   local-time fields, JSON reports.
//! * [`config`] / [`runner`] — experiment configuration and CLI dispatch.
//!
//! All randomness flows from a single master seed through [`rng::SeedTree`];
//! Monte-Carlo loops derive one child stream per sample index, so results are
//! reproducible bit-for-bit regardless of the worker count.

pub mod config;
pub mod drift;
pub mod error;
pub mod harness;
pub mod io;
pub mod localtime;
pub mod measures;
pub mod path;
pub mod rng;
pub mod runner;
pub mod skew;
pub mod spde;
pub mod spectral;

pub use error::{Error, Result};
