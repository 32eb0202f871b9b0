//! Repair of incoherent forecasts.
//!
//! Given an incoherent `f`, build a coherent `g` whose penalty is strictly
//! lower than that of `f` in every world:
//!
//! * if the generator gradient is finite at `f`, `g` is the Bregman
//!   projection of `f` onto `conv(V)`;
//! * otherwise `f` sits on a face of the cube where some `phi_i'` diverges.
//!   Those coordinates are pinned together, the problem is solved on the
//!   face (vertices agreeing with `f` there), and the face solution is mixed
//!   with the average of the off-face vertices, halving the mixing weight
//!   until every vertex shows a strict margin;
//! * a single-vertex hull is its own repair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bregman::{project, Divergence, ProjectError, ProjectOptions};
use crate::coherence::{check, CheckOptions, CoherenceError, CoherenceVerdict};
use crate::domination::penalty;
use crate::event_algebra::{Vertex, VertexSet};
use crate::ext::ExtReal;
use crate::forecast::{Forecast, ForecastError};
use crate::scoring::RuleFamily;

pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-10;
/// The mixing weight search gives up below this.
pub const MIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error("rule family has {found} rules for {expected} events")]
    RuleCount { found: usize, expected: usize },
    #[error("forecast is coherent; no forecast dominates it")]
    Coherent,
    #[error(transparent)]
    Projection(#[from] ProjectError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("no mixing weight down to {smallest:e} gives margins of at least the floor (worst {worst})")]
    EpsilonExhausted { smallest: f64, worst: ExtReal },
    #[error("repaired forecast does not strictly dominate: minimum margin {min_margin}")]
    NotDominating { min_margin: ExtReal },
}

#[derive(Clone, Copy, Debug)]
pub struct RepairOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub margin_floor: f64,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            tol: crate::bregman::DEFAULT_TOLERANCE,
            max_iters: crate::bregman::DEFAULT_MAX_ITERS,
            margin_floor: DEFAULT_MARGIN_FLOOR,
        }
    }
}

impl RepairOptions {
    fn check_options(&self) -> CheckOptions {
        CheckOptions {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepairPath {
    Projection { iterations: usize, fw_gap: f64 },
    FaceRecursion { depth: usize, epsilon: f64 },
    SingleVertex,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepairResult {
    pub repaired: Forecast,
    /// Convex weights over the vertex set producing `repaired`.
    pub weights: Vec<f64>,
    /// `d(repaired, input)`; infinite on the face-recursion path.
    pub divergence: ExtReal,
    /// `P(v, input) - P(v, repaired)` per vertex.
    pub margins: Vec<ExtReal>,
    pub min_margin: ExtReal,
    pub path: RepairPath,
}

struct Solution {
    point: Vec<f64>,
    weights: Vec<f64>,
    path: RepairPath,
}

/// Builds a coherent forecast strictly dominating the incoherent `f`.
pub fn repair(
    rules: &RuleFamily,
    f: &Forecast,
    vertices: &VertexSet,
    opts: RepairOptions,
) -> Result<RepairResult, RepairError> {
    f.expect_dim(vertices.dim())?;
    if rules.len() != vertices.dim() {
        return Err(RepairError::RuleCount {
            found: rules.len(),
            expected: vertices.dim(),
        });
    }
    if check(f, vertices, opts.check_options())?.is_coherent() {
        return Err(RepairError::Coherent);
    }
    let solution = solve(rules, f, vertices, &opts)?;
    let margins = margins(rules, f, &solution.point, vertices);
    let min_margin = margins.iter().copied().min().expect("nonempty vertex set");
    if min_margin.value() <= 0.0 || min_margin.value() < opts.margin_floor {
        return Err(RepairError::NotDominating { min_margin });
    }
    let divergence = Divergence::new(rules.clone()).divergence(&solution.point, f);
    Ok(RepairResult {
        repaired: Forecast::clamped(solution.point),
        weights: solution.weights,
        divergence,
        margins,
        min_margin,
        path: solution.path,
    })
}

fn margins(rules: &RuleFamily, f: &[f64], g: &[f64], vertices: &VertexSet) -> Vec<ExtReal> {
    vertices
        .vertices()
        .iter()
        .map(|v| penalty(rules, f, v).margin(penalty(rules, g, v)))
        .collect()
}

fn min_margin(rules: &RuleFamily, f: &[f64], g: &[f64], vertices: &VertexSet) -> ExtReal {
    margins(rules, f, g, vertices).into_iter().min().expect("nonempty vertex set")
}

fn solve(rules: &RuleFamily, f: &[f64], vertices: &VertexSet, opts: &RepairOptions) -> Result<Solution, RepairError> {
    if vertices.len() == 1 {
        return Ok(Solution {
            point: vertices.vertex(0).to_f64(),
            weights: vec![1.0],
            path: RepairPath::SingleVertex,
        });
    }
    let pinned = rules.divergent_coords(f);
    if pinned.is_empty() {
        return solve_by_projection(rules, f, vertices, opts);
    }
    let pins: Vec<(usize, bool)> = pinned.iter().map(|&i| (i, f[i] >= 1.0)).collect();
    let (face, free, origin) = vertices.restrict(&pins);
    let k = vertices.len();
    let Some(face) = face else {
        // every vertex carries an infinite penalty; any point with finite
        // penalties everywhere wins, e.g. the barycenter
        let all: Vec<usize> = (0..k).collect();
        return Ok(Solution {
            point: vertices.mean_of(&all),
            weights: vec![1.0 / k as f64; k],
            path: RepairPath::FaceRecursion { depth: 1, epsilon: 1.0 },
        });
    };
    if free.is_empty() {
        // f is itself the only face vertex, hence coherent
        return Err(RepairError::Coherent);
    }
    let face_rules = rules.select(&free);
    let face_f: Vec<f64> = free.iter().map(|&i| f[i]).collect();
    let inner = solve(&face_rules, &face_f, &face, opts)?;
    let inner_depth = match inner.path {
        RepairPath::FaceRecursion { depth, .. } => depth,
        _ => 0,
    };
    let mut lifted = f.to_vec();
    for (slot, &i) in free.iter().enumerate() {
        lifted[i] = inner.point[slot];
    }
    let mut lifted_weights = vec![0.0; k];
    for (slot, &j) in origin.iter().enumerate() {
        lifted_weights[j] = inner.weights[slot];
    }
    let off_face: Vec<usize> = (0..k).filter(|j| !origin.contains(j)).collect();
    if off_face.is_empty() {
        return Ok(Solution {
            point: lifted,
            weights: lifted_weights,
            path: RepairPath::FaceRecursion {
                depth: inner_depth + 1,
                epsilon: 0.0,
            },
        });
    }
    let mix = vertices.mean_of(&off_face);
    let mut epsilon = 0.5;
    let mut worst = ExtReal::NEG_INFINITY;
    while epsilon >= MIN_EPSILON {
        let candidate: Vec<f64> = lifted
            .iter()
            .zip(&mix)
            .map(|(g, m)| (1.0 - epsilon) * g + epsilon * m)
            .collect();
        worst = min_margin(rules, f, &candidate, vertices);
        if worst.value() >= opts.margin_floor && worst.value() > 0.0 {
            let share = epsilon / off_face.len() as f64;
            let mut weights: Vec<f64> = lifted_weights.iter().map(|w| (1.0 - epsilon) * w).collect();
            for &j in &off_face {
                weights[j] += share;
            }
            return Ok(Solution {
                point: candidate,
                weights,
                path: RepairPath::FaceRecursion {
                    depth: inner_depth + 1,
                    epsilon,
                },
            });
        }
        epsilon *= 0.5;
    }
    Err(RepairError::EpsilonExhausted {
        smallest: epsilon * 2.0,
        worst,
    })
}

fn solve_by_projection(
    rules: &RuleFamily,
    f: &[f64],
    vertices: &VertexSet,
    opts: &RepairOptions,
) -> Result<Solution, RepairError> {
    let div = Divergence::new(rules.clone());
    // domination margins are at least d(g, f) minus the gap, so tighten the
    // gap until the margins clear the floor
    let mut tol = opts.tol * 1e-3;
    let mut best = None;
    for attempt in 0..4 {
        let proj = match project(&div, f, vertices, ProjectOptions { tol, max_iters: opts.max_iters }) {
            Ok(proj) => proj,
            // a tightened retry that stalls keeps the last converged answer
            Err(ProjectError::NotConverged { .. }) if attempt > 0 => break,
            Err(e) => return Err(e.into()),
        };
        let worst = min_margin(rules, f, &proj.point, vertices);
        let done = worst.value() >= opts.margin_floor && worst.value() > 0.0;
        best = Some(proj);
        if done {
            break;
        }
        tol *= 1e-3;
    }
    let proj = best.expect("at least one projection");
    Ok(Solution {
        point: proj.point.to_vec(),
        weights: proj.weights,
        path: RepairPath::Projection {
            iterations: proj.iterations,
            fw_gap: proj.fw_gap,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexMargin {
    pub vertex: Vertex,
    pub input_penalty: ExtReal,
    pub repaired_penalty: ExtReal,
    pub margin: ExtReal,
}

/// Standalone evidence that a candidate is a coherent strict dominator,
/// computed from penalties and a fresh coherence check only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub repaired: Vec<f64>,
    pub coherence: CoherenceVerdict,
    pub margins: Vec<VertexMargin>,
    pub min_margin: ExtReal,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("certification failed: {}", .0.failures.join("; "))]
    Failed(Box<Certificate>),
}

/// Rechecks a repair result independently of how it was produced.
pub fn certify(
    result: &RepairResult,
    rules: &RuleFamily,
    f: &Forecast,
    vertices: &VertexSet,
    opts: CheckOptions,
) -> Result<Certificate, CertifyError> {
    certify_point(&result.repaired, rules, f, vertices, opts)
}

/// Rechecks that `g` is coherent and strictly beats `f` at every vertex.
pub fn certify_point(
    g: &Forecast,
    rules: &RuleFamily,
    f: &Forecast,
    vertices: &VertexSet,
    opts: CheckOptions,
) -> Result<Certificate, CertifyError> {
    f.expect_dim(vertices.dim())?;
    g.expect_dim(vertices.dim())?;
    let coherence = check(g, vertices, opts)?;
    let mut failures = Vec::new();
    if !coherence.is_coherent() {
        failures.push(format!(
            "repaired forecast is not coherent (hull distance {:e})",
            coherence.hull_distance
        ));
    }
    let margins: Vec<VertexMargin> = vertices
        .vertices()
        .iter()
        .map(|v| {
            let input_penalty = penalty(rules, f, v);
            let repaired_penalty = penalty(rules, g, v);
            VertexMargin {
                vertex: v.clone(),
                input_penalty,
                repaired_penalty,
                margin: input_penalty.margin(repaired_penalty),
            }
        })
        .collect();
    for m in &margins {
        if !(m.repaired_penalty < m.input_penalty) {
            failures.push(format!(
                "no strict improvement at vertex {}: {} vs {}",
                m.vertex, m.repaired_penalty, m.input_penalty
            ));
        }
    }
    let min_margin = margins.iter().map(|m| m.margin).min().expect("nonempty vertex set");
    let certificate = Certificate {
        repaired: g.to_vec(),
        coherence,
        margins,
        min_margin,
        passed: failures.is_empty(),
        failures,
    };
    if certificate.passed {
        Ok(certificate)
    } else {
        Err(CertifyError::Failed(Box::new(certificate)))
    }
}
