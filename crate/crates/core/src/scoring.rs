//! Strictly proper scoring rules for binary events.
//!
//! A rule assigns `s(1, x)` when the event occurs and `s(0, x)` when it does
//! not, for an announced probability `x`. Every continuous strictly proper
//! rule comes from a bounded strictly convex generator `phi` through
//!
//! ```text
//! s(i, x) = -phi(x) - phi'(x) (i - x)
//! ```
//!
//! and conversely `phi(x) = -x s(1,x) - (1-x) s(0,x)`,
//! `phi'(x) = s(0,x) - s(1,x)`. [`ScoringRule`] always carries both views.
//! Raw score pairs that may not be proper are modelled by [`ScoreFunctions`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ext::ExtReal;

/// Minimum expected-score gain a strictly proper rule must show at grid
/// spacing 0.01 before a pair counts as strictly ordered.
pub const STRICTNESS_MARGIN: f64 = 1e-10;

/// Grid used by [`from_generator`] for the convexity and monotonicity tests.
pub const GENERATOR_CHECK_POINTS: usize = 101;

/// Smallest accepted grid for grid-supplied generators.
pub const MIN_GENERATOR_GRID: usize = 101;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ScoreFn = Arc<dyn Fn(f64) -> ExtReal + Send + Sync>;

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("generator is not strictly convex near x = {x}")]
    NotStrictlyConvex { x: f64 },
    #[error("generator derivative decreases between x = {from} and x = {to}")]
    DerivativeNotMonotone { from: f64, to: f64 },
    #[error("generator derivative at x = {x} is {supplied}, finite differences give {numeric}")]
    DerivativeMismatch { x: f64, supplied: f64, numeric: f64 },
    #[error("generator value at x = {x} is not finite")]
    NonFiniteGenerator { x: f64 },
    #[error("generator derivative at x = {x} is not a number or diverges in the interior")]
    BadDerivative { x: f64 },
    #[error("generator is {value} > 0 at x = {x}, which would make scores negative")]
    PositiveEndpoint { x: f64, value: f64 },
    #[error("grid has {found} points, at least {min} required")]
    GridTooSmall { found: usize, min: usize },
    #[error("phi grid has {phi} points but phi' grid has {phi_prime}")]
    GridLengthMismatch { phi: usize, phi_prime: usize },
    #[error("grid values are inconsistent with a convex generator on [{from}, {to}]")]
    InconsistentGrid { from: f64, to: f64 },
    #[error("rule is not strictly proper on the grid: {0}")]
    NotProper(Violation),
}

/// Anything that scores a binary outcome against an announced probability.
pub trait BinaryScore {
    fn name(&self) -> &str;

    /// `s(outcome, x)` for `x` in `[0, 1]`.
    fn score(&self, outcome: bool, x: f64) -> ExtReal;
}

/// Expected score `p s(1,x) + (1-p) s(0,x)` with `0 * inf = 0`.
pub fn expected_score<R: BinaryScore + ?Sized>(rule: &R, p: f64, x: f64) -> ExtReal {
    rule.score(true, x).weighted(p) + rule.score(false, x).weighted(1.0 - p)
}

#[derive(Clone)]
enum Kind {
    Brier,
    Log,
    Generator { phi: RealFn, phi_prime: RealFn },
}

/// A strictly proper scoring rule together with its convex generator.
#[derive(Clone)]
pub struct ScoringRule {
    name: String,
    kind: Kind,
    left_unbounded: bool,
    right_unbounded: bool,
}

impl fmt::Debug for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoringRule")
            .field("name", &self.name)
            .field("left_unbounded", &self.left_unbounded)
            .field("right_unbounded", &self.right_unbounded)
            .finish()
    }
}

/// The quadratic rule: `s(1,x) = (1-x)^2`, `s(0,x) = x^2`.
pub fn brier() -> ScoringRule {
    ScoringRule {
        name: "brier".into(),
        kind: Kind::Brier,
        left_unbounded: false,
        right_unbounded: false,
    }
}

/// The logarithmic rule: `s(1,x) = -ln x`, `s(0,x) = -ln(1-x)`.
pub fn log_rule() -> ScoringRule {
    ScoringRule {
        name: "log".into(),
        kind: Kind::Log,
        left_unbounded: true,
        right_unbounded: true,
    }
}

/// Binary entropy term `x ln x + (1-x) ln(1-x)` with `0 ln 0 = 0`.
fn neg_entropy(x: f64) -> f64 {
    let xlx = |t: f64| if t <= 0.0 { 0.0 } else { t * t.ln() };
    xlx(x) + xlx(1.0 - x)
}

/// Builds a rule from a generator `phi` and its derivative `phi_prime`.
///
/// `phi` must be finite on `[0,1]`. `phi_prime` is evaluated at the
/// endpoints too; returning `-inf` at 0 or `+inf` at 1 marks the rule as
/// unbounded on that side. Both functions are checked on a 101-point grid for
/// strict convexity, monotone derivative, derivative consistency and
/// non-positive endpoint values (so that every score is nonnegative).
pub fn from_generator<P, D>(name: impl Into<String>, phi: P, phi_prime: D) -> Result<ScoringRule, RuleError>
where
    P: Fn(f64) -> f64 + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let phi: RealFn = Arc::new(phi);
    let phi_prime: RealFn = Arc::new(phi_prime);
    validate_generator(phi.as_ref(), phi_prime.as_ref())?;
    let left = phi_prime(0.0);
    let right = phi_prime(1.0);
    Ok(ScoringRule {
        name: name.into(),
        kind: Kind::Generator { phi, phi_prime },
        left_unbounded: left == f64::NEG_INFINITY,
        right_unbounded: right == f64::INFINITY,
    })
}

fn validate_generator(phi: &dyn Fn(f64) -> f64, phi_prime: &dyn Fn(f64) -> f64) -> Result<(), RuleError> {
    let n = GENERATOR_CHECK_POINTS;
    let xs: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(RuleError::NonFiniteGenerator { x: xs[j] });
    }
    for (x, value) in [(0.0, values[0]), (1.0, values[n - 1])] {
        if value > 1e-12 {
            return Err(RuleError::PositiveEndpoint { x, value });
        }
    }
    for j in 1..n - 1 {
        let (a, b, c) = (values[j - 1], values[j], values[j + 1]);
        let second = a - 2.0 * b + c;
        let noise = 8.0 * f64::EPSILON * (a.abs() + 2.0 * b.abs() + c.abs());
        if second <= noise {
            return Err(RuleError::NotStrictlyConvex { x: xs[j] });
        }
    }
    let slopes: Vec<f64> = xs.iter().map(|&x| phi_prime(x)).collect();
    for (j, &d) in slopes.iter().enumerate() {
        let interior_ok = d.is_finite();
        let ok = match j {
            0 => !d.is_nan() && d != f64::INFINITY,
            _ if j == n - 1 => !d.is_nan() && d != f64::NEG_INFINITY,
            _ => interior_ok,
        };
        if !ok {
            return Err(RuleError::BadDerivative { x: xs[j] });
        }
    }
    for j in 0..n - 1 {
        let (lo, hi) = (slopes[j], slopes[j + 1]);
        if hi < lo - 1e-12 * lo.abs().max(1.0) {
            return Err(RuleError::DerivativeNotMonotone { from: xs[j], to: xs[j + 1] });
        }
    }
    let step = 1e-6;
    for j in 1..n - 1 {
        let x = xs[j];
        let numeric = (phi(x + step) - phi(x - step)) / (2.0 * step);
        let supplied = slopes[j];
        if (numeric - supplied).abs() > 1e-4 * supplied.abs().max(1.0) {
            return Err(RuleError::DerivativeMismatch { x, supplied, numeric });
        }
    }
    Ok(())
}

impl ScoringRule {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// `phi'` diverges to `-inf` at 0.
    pub fn left_unbounded(&self) -> bool {
        self.left_unbounded
    }

    /// `phi'` diverges to `+inf` at 1.
    pub fn right_unbounded(&self) -> bool {
        self.right_unbounded
    }

    pub fn is_bounded(&self) -> bool {
        !self.left_unbounded && !self.right_unbounded
    }

    pub fn phi(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Brier => x * x - x,
            Kind::Log => neg_entropy(x),
            Kind::Generator { phi, .. } => phi(x),
        }
    }

    /// `phi'(x)`; at a divergent endpoint this is an infinity.
    pub fn phi_prime(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Brier => 2.0 * x - 1.0,
            Kind::Log => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else if x >= 1.0 {
                    f64::INFINITY
                } else {
                    x.ln() - (1.0 - x).ln()
                }
            }
            Kind::Generator { phi_prime, .. } => phi_prime(x),
        }
    }

    /// `phi''` when it is the same everywhere (quadratic generators).
    pub fn constant_curvature(&self) -> Option<f64> {
        match self.kind {
            Kind::Brier => Some(2.0),
            _ => None,
        }
    }

    /// Whether `phi'` is infinite at `x`, i.e. `x` sits on a divergent endpoint.
    pub fn diverges_at(&self, x: f64) -> bool {
        (x <= 0.0 && self.left_unbounded) || (x >= 1.0 && self.right_unbounded)
    }

    /// `s(0, x)`.
    pub fn score0(&self, x: f64) -> ExtReal {
        match &self.kind {
            Kind::Brier => ExtReal::new(x * x),
            Kind::Log => {
                if x >= 1.0 {
                    ExtReal::INFINITY
                } else {
                    ExtReal::new(-(1.0 - x).ln())
                }
            }
            Kind::Generator { phi, phi_prime } => {
                if x <= 0.0 {
                    ExtReal::new(-phi(0.0))
                } else if x >= 1.0 {
                    // -phi(1) + phi'(1), infinite when phi' diverges
                    ExtReal::new(-phi(1.0) + phi_prime(1.0))
                } else {
                    ExtReal::new(-phi(x) + phi_prime(x) * x)
                }
            }
        }
    }

    /// `s(1, x)`.
    pub fn score1(&self, x: f64) -> ExtReal {
        match &self.kind {
            Kind::Brier => ExtReal::new((1.0 - x) * (1.0 - x)),
            Kind::Log => {
                if x <= 0.0 {
                    ExtReal::INFINITY
                } else {
                    ExtReal::new(-x.ln())
                }
            }
            Kind::Generator { phi, phi_prime } => {
                if x <= 0.0 {
                    ExtReal::new(-phi(0.0) - phi_prime(0.0))
                } else if x >= 1.0 {
                    ExtReal::new(-phi(1.0))
                } else {
                    ExtReal::new(-phi(x) - phi_prime(x) * (1.0 - x))
                }
            }
        }
    }

    /// A rule whose generator is interpolated from grid samples on the
    /// uniform grid `j / (len - 1)`.
    ///
    /// Interior pieces are cubic Hermite interpolants of `(phi, phi')`, so
    /// the interpolated `phi'` is the exact derivative of the interpolated
    /// `phi` and both match the samples at every node. An infinite endpoint
    /// slope (`-inf` first or `+inf` last) switches that end piece to a
    /// logarithmic tail `phi'(x) = a + b ln(x)` that diverges at the endpoint
    /// while keeping `x phi'(x) -> 0`.
    pub fn from_grid(
        name: impl Into<String>,
        phi_grid: Vec<f64>,
        phi_prime_grid: Vec<f64>,
    ) -> Result<ScoringRule, RuleError> {
        let interp = Arc::new(HermiteGenerator::new(phi_grid, phi_prime_grid)?);
        let d = Arc::clone(&interp);
        from_generator(name, move |x| interp.phi(x), move |x| d.phi_prime(x))
    }
}

impl BinaryScore for ScoringRule {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, outcome: bool, x: f64) -> ExtReal {
        if outcome {
            self.score1(x)
        } else {
            self.score0(x)
        }
    }
}

/// Piecewise generator interpolating grid samples.
struct HermiteGenerator {
    h: f64,
    phi: Vec<f64>,
    slope: Vec<f64>,
    // tail coefficient for an infinite endpoint slope, 0 otherwise
    left_tail: f64,
    right_tail: f64,
}

impl HermiteGenerator {
    fn new(phi: Vec<f64>, slope: Vec<f64>) -> Result<Self, RuleError> {
        if phi.len() != slope.len() {
            return Err(RuleError::GridLengthMismatch {
                phi: phi.len(),
                phi_prime: slope.len(),
            });
        }
        let n = phi.len();
        if n < MIN_GENERATOR_GRID {
            return Err(RuleError::GridTooSmall {
                found: n,
                min: MIN_GENERATOR_GRID,
            });
        }
        let h = 1.0 / (n - 1) as f64;
        let node = |j: usize| j as f64 * h;
        if let Some(j) = phi.iter().position(|v| !v.is_finite()) {
            return Err(RuleError::NonFiniteGenerator { x: node(j) });
        }
        for (j, &d) in slope.iter().enumerate() {
            let ok = if j == 0 {
                d.is_finite() || d == f64::NEG_INFINITY
            } else if j == n - 1 {
                d.is_finite() || d == f64::INFINITY
            } else {
                d.is_finite()
            };
            if !ok {
                return Err(RuleError::BadDerivative { x: node(j) });
            }
        }
        // a convex generator has each secant slope between its end tangents
        for j in 0..n - 1 {
            let secant = (phi[j + 1] - phi[j]) / h;
            let slack = 1e-9 * secant.abs().max(1.0);
            if secant < slope[j] - slack || secant > slope[j + 1] + slack {
                return Err(RuleError::InconsistentGrid {
                    from: node(j),
                    to: node(j + 1),
                });
            }
        }
        let left_tail = if slope[0].is_infinite() {
            let a = slope[1] - (phi[1] - phi[0]) / h;
            if a <= 0.0 {
                return Err(RuleError::InconsistentGrid { from: 0.0, to: h });
            }
            a
        } else {
            0.0
        };
        let right_tail = if slope[n - 1].is_infinite() {
            let a = (phi[n - 1] - phi[n - 2]) / h - slope[n - 2];
            if a <= 0.0 {
                return Err(RuleError::InconsistentGrid { from: 1.0 - h, to: 1.0 });
            }
            a
        } else {
            0.0
        };
        Ok(HermiteGenerator {
            h,
            phi,
            slope,
            left_tail,
            right_tail,
        })
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.phi.len() - 2;
        let j = ((x / self.h).floor() as usize).min(last);
        let t = ((x - j as f64 * self.h) / self.h).clamp(0.0, 1.0);
        (j, t)
    }

    fn phi(&self, x: f64) -> f64 {
        let n = self.phi.len();
        let x = x.clamp(0.0, 1.0);
        let (j, t) = self.locate(x);
        let h = self.h;
        if j == 0 && self.left_tail > 0.0 {
            let a = self.left_tail;
            let tail = if x > 0.0 { x * (x / h).ln() - x } else { 0.0 };
            return self.phi[0] + x * self.slope[1] + a * tail;
        }
        if j == n - 2 && self.right_tail > 0.0 {
            let a = self.right_tail;
            let u = 1.0 - x;
            let s = x - (n - 2) as f64 * h;
            let ulog = if u > 0.0 { u * (u / h).ln() } else { 0.0 };
            return self.phi[n - 2] + s * self.slope[n - 2] + a * (h + ulog - u);
        }
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.phi[j]
            + (t3 - 2.0 * t2 + t) * h * self.slope[j]
            + (-2.0 * t3 + 3.0 * t2) * self.phi[j + 1]
            + (t3 - t2) * h * self.slope[j + 1]
    }

    fn phi_prime(&self, x: f64) -> f64 {
        let n = self.phi.len();
        let x = x.clamp(0.0, 1.0);
        let (j, t) = self.locate(x);
        let h = self.h;
        if j == 0 && self.left_tail > 0.0 {
            return if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                self.slope[1] + self.left_tail * (x / h).ln()
            };
        }
        if j == n - 2 && self.right_tail > 0.0 {
            let u = 1.0 - x;
            return if u <= 0.0 {
                f64::INFINITY
            } else {
                self.slope[n - 2] - self.right_tail * (u / h).ln()
            };
        }
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * self.phi[j]
            + (3.0 * t2 - 4.0 * t + 1.0) * h * self.slope[j]
            + (-6.0 * t2 + 6.0 * t) * self.phi[j + 1]
            + (3.0 * t2 - 2.0 * t) * h * self.slope[j + 1])
            / h
    }
}

/// A raw pair of score functions with no properness guarantee.
#[derive(Clone)]
pub struct ScoreFunctions {
    name: String,
    score0: ScoreFn,
    score1: ScoreFn,
}

impl ScoreFunctions {
    pub fn new<F0, F1>(name: impl Into<String>, score0: F0, score1: F1) -> Self
    where
        F0: Fn(f64) -> ExtReal + Send + Sync + 'static,
        F1: Fn(f64) -> ExtReal + Send + Sync + 'static,
    {
        ScoreFunctions {
            name: name.into(),
            score0: Arc::new(score0),
            score1: Arc::new(score1),
        }
    }

    /// `s(1,x) = 1 - x`, `s(0,x) = x`: the standard example of an improper rule.
    pub fn absolute_deviation() -> Self {
        ScoreFunctions::new(
            "absolute-deviation",
            ExtReal::new,
            |x| ExtReal::new(1.0 - x),
        )
    }

    /// The score functions of a rule, detached from its generator.
    pub fn of_rule(rule: &ScoringRule) -> Self {
        let (r0, r1) = (rule.clone(), rule.clone());
        ScoreFunctions::new(rule.name(), move |x| r0.score0(x), move |x| r1.score1(x))
    }
}

impl fmt::Debug for ScoreFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoreFunctions").field("name", &self.name).finish()
    }
}

impl BinaryScore for ScoreFunctions {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, outcome: bool, x: f64) -> ExtReal {
        if outcome {
            (self.score1)(x)
        } else {
            (self.score0)(x)
        }
    }
}

/// A pair `(p, x)` where announcing `x` under belief `p` is not strictly
/// worse than announcing `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub p: f64,
    pub x: f64,
    /// Expected score of the sincere announcement `x = p`.
    pub sincere: ExtReal,
    /// Expected score of announcing `x`.
    pub announced: ExtReal,
    /// `announced - sincere`; at least the strictness margin for a proper rule.
    pub gain: ExtReal,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "belief {} scores {} sincerely but {} when announcing {}",
            self.p, self.sincere, self.announced, self.x
        )
    }
}

/// Checks a single (belief, announcement) pair against strict properness.
pub fn check_pair<R: BinaryScore + ?Sized>(rule: &R, p: f64, x: f64) -> Option<Violation> {
    let sincere = expected_score(rule, p, p);
    let announced = expected_score(rule, p, x);
    let gain = announced.margin(sincere);
    (gain.value() < STRICTNESS_MARGIN).then_some(Violation {
        p,
        x,
        sincere,
        announced,
        gain,
    })
}

/// A grid interval over which a score function appears to jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuityDefect {
    pub outcome: u8,
    pub from: f64,
    pub to: f64,
    pub jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropernessReport {
    pub rule: String,
    pub grid_size: usize,
    pub passed: bool,
    /// Number of `(p, x)` grid pairs with insufficient gain.
    pub violations: usize,
    /// The pair with the smallest gain, if any pair violates.
    pub worst: Option<Violation>,
    pub continuity_defects: Vec<ContinuityDefect>,
}

/// Grid-level strict properness and continuity check.
///
/// For every pair of distinct grid points `(p, x)` the expected score of
/// announcing `x` must exceed that of announcing `p` by
/// [`STRICTNESS_MARGIN`]. Continuity is probed by subdividing every grid
/// interval 16 times: a continuous function spreads its change across the
/// sub-steps, a jump concentrates it in one. Only grid-level behaviour is
/// certified; nothing is claimed between grid points.
pub fn verify_properness<R: BinaryScore + ?Sized>(
    rule: &R,
    grid_size: usize,
) -> Result<PropernessReport, RuleError> {
    if grid_size < 11 {
        return Err(RuleError::GridTooSmall {
            found: grid_size,
            min: 11,
        });
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|j| j as f64 / (grid_size - 1) as f64)
        .collect();
    let mut violations = 0;
    let mut worst: Option<Violation> = None;
    for &p in &grid {
        for &x in &grid {
            if x == p {
                continue;
            }
            if let Some(v) = check_pair(rule, p, x) {
                violations += 1;
                if worst.is_none_or(|w| v.gain < w.gain) {
                    worst = Some(v);
                }
            }
        }
    }
    let continuity_defects = continuity_defects(rule, &grid);
    Ok(PropernessReport {
        rule: rule.name().to_string(),
        grid_size,
        passed: violations == 0 && continuity_defects.is_empty(),
        violations,
        worst,
        continuity_defects,
    })
}

fn continuity_defects<R: BinaryScore + ?Sized>(rule: &R, grid: &[f64]) -> Vec<ContinuityDefect> {
    const SUBSTEPS: usize = 16;
    let mut defects = Vec::new();
    for outcome in [false, true] {
        for pair in grid.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let samples: Vec<ExtReal> = (0..=SUBSTEPS)
                .map(|k| rule.score(outcome, a + (b - a) * k as f64 / SUBSTEPS as f64))
                .collect();
            // the one-sided infinite values at categorical mistakes are allowed
            if samples.iter().any(|s| s.is_infinite()) {
                continue;
            }
            let steps: Vec<f64> = samples
                .windows(2)
                .map(|w| (w[1].value() - w[0].value()).abs())
                .collect();
            let total: f64 = steps.iter().sum();
            let largest = steps.iter().cloned().fold(0.0, f64::max);
            if total > 1e-9 && largest > 0.5 * total {
                defects.push(ContinuityDefect {
                    outcome: u8::from(outcome),
                    from: a,
                    to: b,
                    jump: largest,
                });
            }
        }
    }
    defects
}

/// Generator samples recovered from score functions on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorSamples {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// May hold `-inf` first and `+inf` last for unbounded rules.
    pub phi_prime: Vec<f64>,
}

/// Recovers `phi(p) = -p s(1,p) - (1-p) s(0,p)` and
/// `phi'(p) = s(0,p) - s(1,p)` on a `grid_size` grid, after verifying
/// properness there.
pub fn phi_from_rule<R: BinaryScore + ?Sized>(
    rule: &R,
    grid_size: usize,
) -> Result<GeneratorSamples, RuleError> {
    let report = verify_properness(rule, grid_size)?;
    if let Some(worst) = report.worst {
        return Err(RuleError::NotProper(worst));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|j| j as f64 / (grid_size - 1) as f64)
        .collect();
    let mut phi = Vec::with_capacity(grid_size);
    let mut phi_prime = Vec::with_capacity(grid_size);
    for &p in &grid {
        let (s0, s1) = (rule.score(false, p), rule.score(true, p));
        phi.push(-expected_score(rule, p, p).value());
        phi_prime.push(s0.value() - s1.value());
    }
    Ok(GeneratorSamples {
        grid,
        phi,
        phi_prime,
    })
}

/// One scoring rule per event.
#[derive(Clone, Debug)]
pub struct RuleFamily {
    rules: Vec<ScoringRule>,
}

impl RuleFamily {
    pub fn new(rules: Vec<ScoringRule>) -> Self {
        assert!(!rules.is_empty(), "a rule family needs at least one rule");
        RuleFamily { rules }
    }

    /// The same rule for all `n` events.
    pub fn uniform(rule: ScoringRule, n: usize) -> Self {
        RuleFamily::new(vec![rule; n])
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rule(&self, i: usize) -> &ScoringRule {
        &self.rules[i]
    }

    pub fn rules(&self) -> &[ScoringRule] {
        &self.rules
    }

    /// The rules of the listed events, in order.
    pub fn select(&self, coords: &[usize]) -> RuleFamily {
        RuleFamily {
            rules: coords.iter().map(|&i| self.rules[i].clone()).collect(),
        }
    }

    /// Coordinates of `x` where the gradient of the separable generator is infinite.
    pub fn divergent_coords(&self, x: &[f64]) -> Vec<usize> {
        assert_eq!(x.len(), self.len());
        (0..x.len()).filter(|&i| self.rules[i].diverges_at(x[i])).collect()
    }
}
