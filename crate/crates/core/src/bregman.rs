//! Separable Bregman divergences and projection onto the hull of a vertex set.
//!
//! With `Phi(x) = sum_i phi_i(x_i)` the divergence is
//! `d(y, x) = Phi(y) - Phi(x) - grad Phi(x) . (y - x)`. Projecting `x` onto
//! `conv(V)` means minimising `Phi(y) - grad Phi(x) . y` over the hull, which
//! we do with away-step Frank-Wolfe: the linear subproblem is an argmin over
//! the vertices, iterates are explicit convex combinations (so the weights
//! are a free by-product), and the Frank-Wolfe gap bounds the suboptimality.

use serde::Serialize;
use thiserror::Error;

use crate::event_algebra::VertexSet;
use crate::ext::ExtReal;
use crate::forecast::Forecast;
use crate::scoring::RuleFamily;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 100_000;
const BISECTION_STEPS: usize = 60;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("point has {found} coordinates, expected {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("generator gradient is infinite at coordinates {coords:?}; use face recursion")]
    DivergentGradient { coords: Vec<usize> },
    #[error("Frank-Wolfe did not converge in {} iterations (gap {})", .best.iterations, .best.fw_gap)]
    NotConverged { best: Box<Projection> },
    #[error("gradient became infinite at an iterate; the rule family is numerically unsuitable here")]
    NonFiniteGradient,
}

/// `d_Phi` for a separable generator given by one rule per coordinate.
#[derive(Clone, Debug)]
pub struct Divergence {
    rules: RuleFamily,
}

impl Divergence {
    pub fn new(rules: RuleFamily) -> Self {
        Divergence { rules }
    }

    pub fn rules(&self) -> &RuleFamily {
        &self.rules
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    /// `d(y, x)`. A coordinate contributes `+inf` exactly when `x_i` sits on
    /// an endpoint where `phi_i'` diverges and `y_i` differs from it; equal
    /// coordinates contribute 0 even there.
    pub fn divergence(&self, y: &[f64], x: &[f64]) -> ExtReal {
        assert_eq!(y.len(), self.dim(), "dimension of y");
        assert_eq!(x.len(), self.dim(), "dimension of x");
        let mut total = 0.0;
        for (i, (&yi, &xi)) in y.iter().zip(x).enumerate() {
            if yi == xi {
                continue;
            }
            let rule = self.rules.rule(i);
            let slope = rule.phi_prime(xi);
            if slope.is_infinite() {
                return ExtReal::INFINITY;
            }
            let term = rule.phi(yi) - rule.phi(xi) - slope * (yi - xi);
            total += term.max(0.0);
        }
        ExtReal::new(total)
    }

    /// `grad Phi(x)`; may contain infinities.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| self.rules.rule(i).phi_prime(xi))
            .collect()
    }
}

/// Result of projecting a point onto `conv(V)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Projection {
    pub point: Forecast,
    /// Convex weights over the vertices, in the vertex set's order.
    pub weights: Vec<f64>,
    pub fw_gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct ProjectOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        ProjectOptions {
            tol: DEFAULT_TOLERANCE,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// Bregman projection of `x` onto `conv(V)`.
///
/// Requires `grad Phi(x)` to be finite; points on divergent faces are the
/// repair module's business. Stops once the Frank-Wolfe gap is at most
/// `opts.tol`.
pub fn project(
    div: &Divergence,
    x: &[f64],
    vertices: &VertexSet,
    opts: ProjectOptions,
) -> Result<Projection, ProjectError> {
    let solver = FrankWolfe::new(div, x, vertices)?;
    solver.run(opts.max_iters, |state| state.gap <= opts.tol)
}

/// `d(y,x) - d(pi,x) - d(y,pi)`; nonnegative up to the projection's gap for
/// `y` in the hull. `None` if any of the three divergences is infinite.
pub fn pythagorean_slack(div: &Divergence, y: &[f64], x: &[f64], proj: &Projection) -> Option<f64> {
    let pi = proj.point.as_slice();
    let yx = div.divergence(y, x).finite()?;
    let px = div.divergence(pi, x).finite()?;
    let yp = div.divergence(y, pi).finite()?;
    Some(yx - px - yp)
}

/// Snapshot handed to a stopping rule.
pub(crate) struct FwState<'a> {
    pub point: &'a [f64],
    pub gap: f64,
}

/// Away-step Frank-Wolfe for `min Phi(y) - grad Phi(x) . y` over `conv(V)`.
pub(crate) struct FrankWolfe<'a> {
    div: &'a Divergence,
    vertices: &'a VertexSet,
    anchor: Vec<f64>,
    // coordinates on which the vertices disagree; the rest are fixed
    free: Vec<usize>,
    // Some(c) when every free coordinate has constant curvature c_i
    curvature: Option<Vec<f64>>,
}

impl<'a> FrankWolfe<'a> {
    pub fn new(div: &'a Divergence, x: &[f64], vertices: &'a VertexSet) -> Result<Self, ProjectError> {
        if x.len() != div.dim() || vertices.dim() != div.dim() {
            return Err(ProjectError::DimensionMismatch {
                found: x.len(),
                expected: vertices.dim(),
            });
        }
        let coords = div.rules().divergent_coords(x);
        if !coords.is_empty() {
            return Err(ProjectError::DivergentGradient { coords });
        }
        let anchor = div.gradient(x);
        let free: Vec<usize> = vertices
            .constant_coords()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_none())
            .map(|(i, _)| i)
            .collect();
        let curvature = free
            .iter()
            .map(|&i| div.rules().rule(i).constant_curvature())
            .collect::<Option<Vec<f64>>>();
        Ok(FrankWolfe {
            div,
            vertices,
            anchor,
            free,
            curvature,
        })
    }

    fn directional_derivative(&self, y: &[f64], d: &[f64], step: f64) -> f64 {
        let mut total = 0.0;
        for &i in &self.free {
            if d[i] == 0.0 {
                continue;
            }
            let yi = (y[i] + step * d[i]).clamp(0.0, 1.0);
            let slope = self.div.rules().rule(i).phi_prime(yi) - self.anchor[i];
            total += slope * d[i];
        }
        total
    }

    fn line_search(&self, y: &[f64], d: &[f64], max_step: f64, initial: f64) -> f64 {
        if let Some(curv) = &self.curvature {
            let quad: f64 = self
                .free
                .iter()
                .zip(curv)
                .map(|(&i, &c)| c * d[i] * d[i])
                .sum();
            if quad <= 0.0 {
                return max_step;
            }
            return (-initial / quad).clamp(0.0, max_step);
        }
        if self.directional_derivative(y, d, max_step) <= 0.0 {
            return max_step;
        }
        // the objective is convex along d, so its derivative is monotone
        let (mut lo, mut hi) = (0.0, max_step);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.directional_derivative(y, d, mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Runs from the vertex barycenter until `stop` accepts a state or the
    /// gap reaches zero.
    pub fn run(
        &self,
        max_iters: usize,
        mut stop: impl FnMut(&FwState) -> bool,
    ) -> Result<Projection, ProjectError> {
        let k = self.vertices.len();
        let n = self.div.dim();
        let mut weights = vec![1.0 / k as f64; k];
        let mut y = self.vertices.combine(&weights);
        let mut grad = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut gap = f64::INFINITY;
        for iteration in 0..=max_iters {
            for &i in &self.free {
                grad[i] = self.div.rules().rule(i).phi_prime(y[i]) - self.anchor[i];
                if !grad[i].is_finite() {
                    return Err(ProjectError::NonFiniteGradient);
                }
            }
            let along_y: f64 = self.free.iter().map(|&i| grad[i] * y[i]).sum();
            let scores: Vec<f64> = self
                .vertices
                .vertices()
                .iter()
                .map(|v| self.free.iter().filter(|&&i| v.get(i)).map(|&i| grad[i]).sum())
                .collect();
            let mut toward = 0;
            for j in 1..k {
                if scores[j] < scores[toward] {
                    toward = j;
                }
            }
            gap = (along_y - scores[toward]).max(0.0);
            let state = FwState { point: &y, gap };
            let done = stop(&state) || gap == 0.0;
            if done || iteration == max_iters {
                let projection = Projection {
                    point: Forecast::clamped(y.clone()),
                    weights: weights.clone(),
                    fw_gap: gap,
                    iterations: iteration,
                };
                return if done {
                    Ok(projection)
                } else {
                    Err(ProjectError::NotConverged {
                        best: Box::new(projection),
                    })
                };
            }
            let mut away = None;
            for j in 0..k {
                if weights[j] > 0.0 && away.is_none_or(|a: usize| scores[j] > scores[a]) {
                    away = Some(j);
                }
            }
            let away = away.expect("weights are a probability vector");
            let away_gap = scores[away] - along_y;
            let use_away = away_gap > gap && weights[away] < 1.0;
            let (max_step, initial) = if use_away {
                let target = self.vertices.vertex(away);
                for i in 0..n {
                    dir[i] = y[i] - target.coord(i);
                }
                (weights[away] / (1.0 - weights[away]), -away_gap)
            } else {
                let target = self.vertices.vertex(toward);
                for i in 0..n {
                    dir[i] = target.coord(i) - y[i];
                }
                (1.0, -gap)
            };
            let step = self.line_search(&y, &dir, max_step, initial);
            if use_away {
                for w in weights.iter_mut() {
                    *w *= 1.0 + step;
                }
                weights[away] -= step;
                if step >= max_step {
                    weights[away] = 0.0;
                }
            } else if step >= 1.0 {
                weights.iter_mut().for_each(|w| *w = 0.0);
                weights[toward] = 1.0;
            } else {
                for w in weights.iter_mut() {
                    *w *= 1.0 - step;
                }
                weights[toward] += step;
            }
            for w in weights.iter_mut() {
                if *w < 0.0 {
                    *w = 0.0;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            y = self.vertices.combine(&weights);
        }
        unreachable!("loop returns on its last iteration (gap {gap})")
    }
}
