//! Coherence of a forecast: membership of `f` in `conv(V)`.
//!
//! Membership is decided by projecting `f` onto the hull in the Euclidean
//! geometry. A small residual yields a witness measure over atoms; a large
//! one yields the hyperplane `h = f - pi(f)` separating `f` from every vertex.

use serde::Serialize;
use thiserror::Error;

use crate::bregman::{Divergence, FrankWolfe, ProjectError};
use crate::event_algebra::{EventSystem, Vertex, VertexSet};
use crate::forecast::{Forecast, ForecastError};
use crate::scoring::{brier, RuleFamily};

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Projection(#[from] ProjectError),
    #[error("verdict is incoherent; there is no witness measure")]
    NoWitness,
    #[error("verdict refers to world {0}, which the event system does not have")]
    UnknownWorld(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Coherent,
    Incoherent,
}

/// Probability mass placed on one atom.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomMass {
    pub vertex: Vertex,
    pub worlds: Vec<usize>,
    pub mass: f64,
}

/// A hyperplane with `normal . f >= normal . v + margin` for every vertex `v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Separator {
    pub normal: Vec<f64>,
    pub margin: f64,
}

impl Separator {
    /// Recomputes `normal . f - max_v normal . v` from the stored numbers.
    pub fn separation(&self, f: &[f64], vertices: &VertexSet) -> f64 {
        let dot = |x: &[f64]| x.iter().zip(&self.normal).map(|(a, b)| a * b).sum::<f64>();
        let best = vertices
            .vertices()
            .iter()
            .map(|v| dot(&v.to_f64()))
            .fold(f64::NEG_INFINITY, f64::max);
        dot(f) - best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherenceVerdict {
    pub status: Status,
    /// Present iff coherent. The measure is generally not unique.
    pub witness: Option<Vec<AtomMass>>,
    /// Present iff incoherent.
    pub separator: Option<Separator>,
    /// Euclidean distance from `f` to the computed hull point.
    pub hull_distance: f64,
    pub iterations: usize,
}

impl CoherenceVerdict {
    pub fn is_coherent(&self) -> bool {
        self.status == Status::Coherent
    }

    /// `sum_j witness_j v_j`, when coherent.
    pub fn witness_point(&self) -> Option<Vec<f64>> {
        let witness = self.witness.as_ref()?;
        let n = witness.first()?.vertex.dim();
        let mut point = vec![0.0; n];
        for atom in witness {
            for (i, p) in point.iter_mut().enumerate() {
                *p += atom.mass * atom.vertex.coord(i);
            }
        }
        Some(point)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Threshold on the squared distance to the hull.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tol: crate::bregman::DEFAULT_TOLERANCE,
            max_iters: crate::bregman::DEFAULT_MAX_ITERS,
        }
    }
}

/// Frank-Wolfe gaps below this are dominated by rounding.
const GAP_RESOLUTION: f64 = 1e-15;

/// Decides whether `f` lies in `conv(V)`.
///
/// `f` is coherent when its Euclidean distance to the hull is at most
/// `tol`, so the witness always reproduces `f` to within `tol` per
/// coordinate. The projection runs until one of:
/// * the squared distance falls below `(tol/10)^2`: coherent;
/// * the squared distance minus the Frank-Wolfe gap (a lower bound on the
///   true squared distance) exceeds `tol^2`, and the gap is below `1e-9`
///   of the squared distance (or has reached floating-point resolution):
///   certainly incoherent, with an accurate `hull_distance`;
/// * the gap falls below `tol^2/1000`: the squared distance is then known
///   to that accuracy and is compared against `tol^2` directly.
pub fn check(f: &Forecast, vertices: &VertexSet, opts: CheckOptions) -> Result<CoherenceVerdict, CoherenceError> {
    f.expect_dim(vertices.dim())?;
    let div = Divergence::new(RuleFamily::uniform(brier(), vertices.dim()));
    let solver = FrankWolfe::new(&div, f, vertices)?;
    let target = (0.1 * opts.tol).powi(2);
    let limit = opts.tol * opts.tol;
    let squared = |y: &[f64]| -> f64 { y.iter().zip(f.iter()).map(|(a, b)| (a - b) * (a - b)).sum() };
    let proj = solver.run(opts.max_iters, |state| {
        let dist = squared(state.point);
        dist <= target || (dist - state.gap > limit && state.gap <= (1e-9 * dist).max(GAP_RESOLUTION)) || state.gap <= 1e-3 * limit
    })?;
    let dist2 = squared(&proj.point);
    let hull_distance = dist2.sqrt();
    if dist2 <= limit {
        let witness = proj
            .weights
            .iter()
            .enumerate()
            .map(|(j, &mass)| AtomMass {
                vertex: vertices.vertex(j).clone(),
                worlds: vertices.world_class(j).to_vec(),
                mass,
            })
            .collect();
        Ok(CoherenceVerdict {
            status: Status::Coherent,
            witness: Some(witness),
            separator: None,
            hull_distance,
            iterations: proj.iterations,
        })
    } else {
        let normal: Vec<f64> = f.iter().zip(proj.point.iter()).map(|(a, b)| a - b).collect();
        let mut separator = Separator { normal, margin: 0.0 };
        separator.margin = separator.separation(f, vertices);
        Ok(CoherenceVerdict {
            status: Status::Incoherent,
            witness: None,
            separator: Some(separator),
            hull_distance,
            iterations: proj.iterations,
        })
    }
}

/// Spreads each atom's mass uniformly over its worlds.
pub fn witness_measure(verdict: &CoherenceVerdict, system: &EventSystem) -> Result<Vec<f64>, CoherenceError> {
    let witness = verdict.witness.as_ref().ok_or(CoherenceError::NoWitness)?;
    let mut measure = vec![0.0; system.num_worlds()];
    for atom in witness {
        let share = atom.mass / atom.worlds.len() as f64;
        for &w in &atom.worlds {
            *measure.get_mut(w).ok_or(CoherenceError::UnknownWorld(w))? += share;
        }
    }
    Ok(measure)
}

/// `mu(E_i)` for a measure over worlds.
pub fn event_probabilities(measure: &[f64], system: &EventSystem) -> Vec<f64> {
    (0..system.num_events())
        .map(|i| {
            (0..system.num_worlds())
                .filter(|&w| system.holds(w, i))
                .map(|w| measure[w])
                .sum()
        })
        .collect()
}
