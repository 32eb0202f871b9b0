//! Coherence checking and dominance repair for probability forecasts.
//!
//! A forecast assigns a probability to each event of a finite event system.
//! It is coherent when some probability measure over the worlds reproduces
//! it; equivalently it lies in the convex hull of the distinct event
//! incidence patterns. Under a strictly proper scoring rule an incoherent
//! forecast is strictly dominated by a coherent one, and this crate builds
//! that dominating forecast together with a checkable certificate.

pub mod bregman;
pub mod cli;
pub mod coherence;
pub mod domination;
pub mod event_algebra;
pub mod ext;
pub mod forecast;
pub mod oracle;
pub mod repair;
pub mod scoring;
