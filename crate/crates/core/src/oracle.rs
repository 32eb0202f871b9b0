//! Brute-force reference implementations for validating the engines.
//!
//! Everything here favours obviousness over speed: hull membership is an
//! exact rational linear program, the Euclidean projection enumerates
//! active faces in rational arithmetic, the Bregman projection is a grid
//! search over hull weights, and domination is probed by a randomised
//! pattern search.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bregman::Divergence;
use crate::domination::penalty;
use crate::event_algebra::VertexSet;
use crate::ext::ExtReal;
use crate::forecast::Forecast;
use crate::scoring::RuleFamily;

/// Exact value of a float.
pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// `num / den` as a rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactMembership {
    pub feasible: bool,
    /// Convex weights over the vertices reproducing `f`, when feasible.
    pub weights: Option<Vec<BigRational>>,
}

/// Decides `f in conv(V)` exactly: phase-one simplex with Bland's rule on
/// `{a >= 0, sum a = 1, sum_j a_j v_j = f}`.
///
/// With `L` the common denominator of `f`, the substitution `b = L a` gives
/// an all-integer system, solved with integer-preserving pivots: every
/// tableau entry is a minor of the initial integer matrix, so each pivot
/// divides exactly. Runs in `i128` and falls back to big integers on
/// overflow.
pub fn hull_membership_exact(f: &[BigRational], vertices: &VertexSet) -> ExactMembership {
    assert_eq!(f.len(), vertices.dim(), "forecast dimension");
    let scale = f.iter().fold(BigInt::one(), |acc, x| lcm(&acc, x.denom()));
    let rhs: Vec<BigInt> = f
        .iter()
        .map(|x| x.numer() * (&scale / x.denom()))
        .chain(std::iter::once(scale.clone()))
        .collect();
    let solved = fraction_free_phase_one::<i128>(&rhs, vertices)
        .unwrap_or_else(|| fraction_free_phase_one::<BigInt>(&rhs, vertices).expect("big integers do not overflow"));
    match solved {
        None => ExactMembership {
            feasible: false,
            weights: None,
        },
        Some((numerators, denom)) => ExactMembership {
            feasible: true,
            weights: Some(
                numerators
                    .into_iter()
                    .map(|n| BigRational::new(n, &denom * &scale))
                    .collect(),
            ),
        },
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// Integer arithmetic with overflow reporting.
trait ExactInt: Clone + Ord + Sized {
    fn from_big(x: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn int_zero() -> Self;
    fn int_one() -> Self;
    fn mul(&self, other: &Self) -> Option<Self>;
    fn sub(&self, other: &Self) -> Option<Self>;
    fn neg(&self) -> Option<Self>;
    /// Exact division; the caller guarantees divisibility.
    fn div_exact(&self, other: &Self) -> Self;
}

impl ExactInt for i128 {
    fn from_big(x: &BigInt) -> Option<Self> {
        x.to_i128()
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn int_zero() -> Self {
        0
    }
    fn int_one() -> Self {
        1
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }
    fn sub(&self, other: &Self) -> Option<Self> {
        self.checked_sub(*other)
    }
    fn neg(&self) -> Option<Self> {
        self.checked_neg()
    }
    fn div_exact(&self, other: &Self) -> Self {
        debug_assert_eq!(self % other, 0);
        self / other
    }
}

impl ExactInt for BigInt {
    fn from_big(x: &BigInt) -> Option<Self> {
        Some(x.clone())
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn int_zero() -> Self {
        Zero::zero()
    }
    fn int_one() -> Self {
        One::one()
    }
    fn mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn sub(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
    fn neg(&self) -> Option<Self> {
        Some(-self)
    }
    fn div_exact(&self, other: &Self) -> Self {
        self / other
    }
}

/// Phase-one simplex on `{b >= 0, [V^T; 1^T] b = rhs}`. Returns `None` on
/// overflow, `Some(None)` when infeasible and `Some(Some((num, d)))` with
/// `b_j = num_j / d` when feasible.
#[allow(clippy::type_complexity)]
fn fraction_free_phase_one<T: ExactInt>(rhs: &[BigInt], vertices: &VertexSet) -> Option<Option<(Vec<BigInt>, BigInt)>> {
    let k = vertices.len();
    let rows = rhs.len();
    let cols = k + rows;
    let zero = T::int_zero();
    // constraint rows [A | I | b], then the objective row; the objective
    // row holds d times the reduced costs and minus the artificial total
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(rows + 1);
    for (r, b) in rhs.iter().enumerate() {
        let mut row = vec![T::int_zero(); cols + 1];
        let negate = b < &BigInt::zero();
        for (j, cell) in row.iter_mut().enumerate().take(k) {
            if r == rows - 1 || vertices.vertex(j).get(r) {
                *cell = if negate { T::int_one().neg()? } else { T::int_one() };
            }
        }
        row[k + r] = T::int_one();
        row[cols] = T::from_big(&if negate { -b } else { b.clone() })?;
        tab.push(row);
    }
    let mut objective = vec![T::int_zero(); cols + 1];
    for c in (0..k).chain(std::iter::once(cols)) {
        let mut total = T::int_zero();
        for row in &tab {
            total = total.sub(&row[c])?;
        }
        objective[c] = total;
    }
    tab.push(objective);
    let mut basis: Vec<usize> = (k..cols).collect();
    let mut d = T::int_one();
    while let Some(enter) = (0..cols).find(|&c| tab[rows][c] < zero) {
        // Bland: minimum ratio rhs/entry, ties to the smallest basic index
        let mut leave: Option<usize> = None;
        for r in 0..rows {
            if tab[r][enter] <= zero {
                continue;
            }
            leave = match leave {
                None => Some(r),
                Some(best) => {
                    let lhs = tab[r][cols].mul(&tab[best][enter])?;
                    let rhs = tab[best][cols].mul(&tab[r][enter])?;
                    if lhs < rhs || (lhs == rhs && basis[r] < basis[best]) {
                        Some(r)
                    } else {
                        Some(best)
                    }
                }
            };
        }
        let pivot_row = leave.expect("bounded phase-one problem");
        let pivot = tab[pivot_row][enter].clone();
        let pivot_values = tab[pivot_row].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r == pivot_row {
                continue;
            }
            let factor = row[enter].clone();
            for (cell, p) in row.iter_mut().zip(&pivot_values) {
                *cell = pivot.mul(cell)?.sub(&factor.mul(p)?)?.div_exact(&d);
            }
        }
        d = pivot;
        basis[pivot_row] = enter;
    }
    if tab[rows][cols] != zero {
        return Some(None);
    }
    let mut numerators = vec![BigInt::zero(); k];
    for (r, &b) in basis.iter().enumerate() {
        if b < k {
            numerators[b] = tab[r][cols].to_big();
        }
    }
    Some(Some((numerators, d.to_big())))
}

/// Solves a square rational system; `None` when singular.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &a[col][col];
            let (pivot, target) = if r < col {
                let (head, tail) = a.split_at_mut(col);
                (&tail[0], &mut head[r])
            } else {
                let (head, tail) = a.split_at_mut(r);
                (&head[col], &mut tail[0])
            };
            for (t, p) in target[col..n].iter_mut().zip(&pivot[col..n]) {
                *t -= &factor * p;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Exact Euclidean projection onto `conv(V)`.
///
/// Tries supports of increasing size; on each, solves the equality
/// constrained least-squares problem and accepts the first nonnegative
/// solution satisfying the variational inequality
/// `(p - f) . (v - p) >= 0` for every vertex. Exponential in `|V|`, so only
/// for small vertex sets.
pub fn project_euclidean_exact(f: &[BigRational], vertices: &VertexSet) -> (Vec<BigRational>, Vec<BigRational>) {
    let n = vertices.dim();
    let k = vertices.len();
    assert!(k <= 16, "exact projection enumerates supports; vertex set too large");
    let coords: Vec<Vec<BigRational>> = vertices
        .vertices()
        .iter()
        .map(|v| {
            (0..n)
                .map(|i| if v.get(i) { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    let dot = |x: &[BigRational], y: &[BigRational]| -> BigRational { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let max_support = k.min(n + 1);
    let mut subsets: Vec<Vec<usize>> = (1u32..(1u32 << k))
        .filter(|mask| mask.count_ones() as usize <= max_support)
        .map(|mask| (0..k).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    subsets.sort_by_key(|s| s.len());
    for support in subsets {
        let s = support.len();
        // [G 1; 1^T 0] [a; lambda] = [V_S^T f; 1]
        let mut a = vec![vec![BigRational::zero(); s + 1]; s + 1];
        let mut b = vec![BigRational::zero(); s + 1];
        for (r, &jr) in support.iter().enumerate() {
            for (c, &jc) in support.iter().enumerate() {
                a[r][c] = dot(&coords[jr], &coords[jc]);
            }
            a[r][s] = BigRational::one();
            a[s][r] = BigRational::one();
            b[r] = dot(&coords[jr], f);
        }
        b[s] = BigRational::one();
        let Some(sol) = solve_exact(a, b) else {
            continue;
        };
        if sol[..s].iter().any(|w| w.is_negative()) {
            continue;
        }
        let mut point = vec![BigRational::zero(); n];
        for (w, &j) in sol[..s].iter().zip(&support) {
            for (p, c) in point.iter_mut().zip(&coords[j]) {
                *p += w * c;
            }
        }
        let residual: Vec<BigRational> = point.iter().zip(f).map(|(p, x)| p - x).collect();
        let at_point = dot(&residual, &point);
        if coords.iter().all(|v| dot(&residual, v) >= at_point) {
            let mut weights = vec![BigRational::zero(); k];
            for (w, &j) in sol[..s].iter().zip(&support) {
                weights[j] = w.clone();
            }
            return (point, weights);
        }
    }
    unreachable!("some support always satisfies the optimality conditions")
}

/// Calls `visit` with every weight vector in `{a >= 0, sum a = 1}` whose
/// entries are multiples of `1/steps`.
pub fn for_each_grid_weight(k: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    fn recurse(slot: usize, left: usize, steps: usize, counts: &mut [usize], out: &mut [f64], visit: &mut dyn FnMut(&[f64])) {
        let k = counts.len();
        if slot == k - 1 {
            counts[slot] = left;
            for (o, &c) in out.iter_mut().zip(counts.iter()) {
                *o = c as f64 / steps as f64;
            }
            visit(out);
            return;
        }
        for c in 0..=left {
            counts[slot] = c;
            recurse(slot + 1, left - c, steps, counts, out, visit);
        }
    }
    assert!(k > 0 && steps > 0);
    let mut counts = vec![0; k];
    let mut out = vec![0.0; k];
    recurse(0, steps, steps, &mut counts, &mut out, &mut visit);
}

fn grid_size(k: usize, steps: usize) -> f64 {
    // C(steps + k - 1, k - 1)
    (1..k).fold(1.0, |acc, i| acc * (steps + i) as f64 / i as f64)
}

/// Approximate Bregman projection by searching hull weights.
///
/// An exhaustive pass over the finest weight grid with at most about 2e5
/// points is followed by local refinement passes, each shrinking the step
/// by four, until the step is below `resolution / 10`. The objective is
/// convex in the weights, so the refinement tracks the true minimiser.
pub fn projection_grid(rules: &RuleFamily, f: &[f64], vertices: &VertexSet, resolution: f64) -> Forecast {
    let k = vertices.len();
    assert!(k <= 5, "grid search supports at most five vertices");
    assert!(resolution >= 1e-3, "resolution below 1e-3");
    let div = Divergence::new(rules.clone());
    let objective = |w: &[f64]| div.divergence(&vertices.combine(w), f);
    let mut steps = 1;
    while grid_size(k, steps + 1) <= 2e5 && steps < 1000 {
        steps += 1;
    }
    let mut best_w = vec![1.0 / k as f64; k];
    let mut best = objective(&best_w);
    for_each_grid_weight(k, steps, |w| {
        let value = objective(w);
        if value < best {
            best = value;
            best_w = w.to_vec();
        }
    });
    let mut h = 1.0 / steps as f64;
    let radius: i64 = 4;
    while h > resolution / 10.0 {
        h /= 4.0;
        let centre = best_w.clone();
        // offsets z in [-R, R]^(k-1), the last one balancing the sum
        let span = (2 * radius + 1) as usize;
        let total = span.pow((k - 1) as u32);
        for code in 0..total {
            let mut rest = code;
            let mut w = centre.clone();
            let mut sum_z = 0i64;
            for slot in w.iter_mut().take(k - 1) {
                let z = (rest % span) as i64 - radius;
                rest /= span;
                sum_z += z;
                *slot += z as f64 * h;
            }
            w[k - 1] -= sum_z as f64 * h;
            if w.iter().any(|&x| x < -1e-15) {
                continue;
            }
            w.iter_mut().for_each(|x| *x = x.max(0.0));
            let value = objective(&w);
            if value < best {
                best = value;
                best_w = w;
            }
        }
    }
    Forecast::clamped(vertices.combine(&best_w))
}

pub const INITIAL_SEARCH_STEP: f64 = 0.25;
/// The pattern search stops once its step falls below this...
pub const MIN_SEARCH_STEP: f64 = 1e-8;
/// ...or after this many candidate evaluations in one restart.
pub const MAX_SEARCH_EVALUATIONS: usize = 100_000;

/// Outcome of a randomised domination search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: Vec<f64>,
    /// `max_v [P(v,g) - P(v,f)]` at `best`; negative means `best` strictly
    /// dominates `f`.
    pub max_margin: ExtReal,
}

/// `max_v [P(v,g) - P(v,f)]` with both-infinite terms counted as ties.
pub fn max_margin(rules: &RuleFamily, f: &[f64], g: &[f64], vertices: &VertexSet) -> ExtReal {
    vertices
        .vertices()
        .iter()
        .map(|v| penalty(rules, g, v).margin(penalty(rules, f, v)))
        .max()
        .expect("nonempty vertex set")
}

/// Searches `[0,1]^n` for a forecast beating `f` at every vertex.
///
/// Each restart starts from a uniform random point and runs a pattern
/// search over the directions `+-e_i` and `+-(e_i +- e_j)`, clamped to the
/// unit box. The step starts at 0.25, doubles (up to 0.25) after a sweep
/// that improved and halves after one that did not.
pub fn domination_search(
    rules: &RuleFamily,
    f: &[f64],
    vertices: &VertexSet,
    restarts: usize,
    seed: u64,
) -> SearchResult {
    let n = vertices.dim();
    let mut directions: Vec<Vec<(usize, f64)>> = Vec::new();
    for i in 0..n {
        directions.push(vec![(i, 1.0)]);
        directions.push(vec![(i, -1.0)]);
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                directions.push(vec![(i, si), (j, sj)]);
            }
        }
    }
    let incumbent: Vec<ExtReal> = vertices.vertices().iter().map(|v| penalty(rules, f, v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut overall: Option<SearchResult> = None;
    for _ in 0..restarts.max(1) {
        let start: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut state = SearchState::new(rules, vertices, &incumbent, start);
        let mut step = INITIAL_SEARCH_STEP;
        let mut budget = MAX_SEARCH_EVALUATIONS;
        while step > MIN_SEARCH_STEP && budget > 0 {
            let mut improved = false;
            for d in &directions {
                improved |= state.try_move(d, step);
            }
            budget = budget.saturating_sub(directions.len());
            // expanding after success lets the search travel along ridges
            // of the max instead of crawling at a tiny step
            step = if improved {
                (2.0 * step).min(INITIAL_SEARCH_STEP)
            } else {
                0.5 * step
            };
        }
        // recompute from scratch rather than trusting the running sums
        let value = max_margin(rules, f, &state.point, vertices);
        if overall.as_ref().is_none_or(|best| value < best.max_margin) {
            overall = Some(SearchResult {
                best: state.point,
                max_margin: value,
            });
        }
    }
    overall.expect("at least one restart")
}

/// A penalty kept as (number of infinite terms, sum of finite terms), so
/// single-coordinate updates never subtract infinities.
#[derive(Clone, Copy)]
struct RunningPenalty {
    infinite: u32,
    finite: f64,
}

impl RunningPenalty {
    fn value(self) -> ExtReal {
        if self.infinite > 0 {
            ExtReal::INFINITY
        } else {
            ExtReal::new(self.finite)
        }
    }

    fn swap(&mut self, old: ExtReal, new: ExtReal) {
        match old.finite() {
            Some(x) => self.finite -= x,
            None => self.infinite -= 1,
        }
        match new.finite() {
            Some(x) => self.finite += x,
            None => self.infinite += 1,
        }
    }
}

struct SearchState<'a> {
    rules: &'a RuleFamily,
    vertices: &'a VertexSet,
    incumbent: &'a [ExtReal],
    point: Vec<f64>,
    /// `[s_i(0, x_i), s_i(1, x_i)]` per coordinate.
    terms: Vec<[ExtReal; 2]>,
    penalties: Vec<RunningPenalty>,
    value: ExtReal,
}

impl<'a> SearchState<'a> {
    fn new(rules: &'a RuleFamily, vertices: &'a VertexSet, incumbent: &'a [ExtReal], point: Vec<f64>) -> Self {
        let terms: Vec<[ExtReal; 2]> = point
            .iter()
            .enumerate()
            .map(|(i, &x)| [rules.rule(i).score0(x), rules.rule(i).score1(x)])
            .collect();
        let penalties: Vec<RunningPenalty> = vertices
            .vertices()
            .iter()
            .map(|v| {
                let mut p = RunningPenalty {
                    infinite: 0,
                    finite: 0.0,
                };
                for (i, t) in terms.iter().enumerate() {
                    p.swap(ExtReal::ZERO, t[usize::from(v.get(i))]);
                }
                p
            })
            .collect();
        let value = penalties
            .iter()
            .zip(incumbent)
            .map(|(p, &pf)| p.value().margin(pf))
            .max()
            .expect("nonempty vertex set");
        SearchState {
            rules,
            vertices,
            incumbent,
            point,
            terms,
            penalties,
            value,
        }
    }

    /// Moves by `step * d` if that lowers the max-margin.
    fn try_move(&mut self, d: &[(usize, f64)], step: f64) -> bool {
        let moved: Vec<(usize, f64, [ExtReal; 2])> = d
            .iter()
            .map(|&(i, s)| {
                let x = (self.point[i] + step * s).clamp(0.0, 1.0);
                let rule = self.rules.rule(i);
                (i, x, [rule.score0(x), rule.score1(x)])
            })
            .collect();
        if moved.iter().all(|&(i, x, _)| x == self.point[i]) {
            return false;
        }
        let mut candidate = Vec::with_capacity(self.penalties.len());
        let mut value = ExtReal::NEG_INFINITY;
        for ((v, p), &pf) in self.vertices.vertices().iter().zip(&self.penalties).zip(self.incumbent) {
            let mut q = *p;
            for &(i, _, new) in &moved {
                let bit = usize::from(v.get(i));
                q.swap(self.terms[i][bit], new[bit]);
            }
            let margin = q.value().margin(pf);
            if margin >= self.value {
                return false;
            }
            value = value.max(margin);
            candidate.push(q);
        }
        for (i, x, new) in moved {
            self.point[i] = x;
            self.terms[i] = new;
        }
        self.penalties = candidate;
        self.value = value;
        true
    }
}

/// Lossy conversion for reporting.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_algebra::Vertex;
    use crate::scoring::{brier, log_rule};

    fn nested() -> VertexSet {
        VertexSet::from_vertices(2, [[0, 0], [0, 1], [1, 1]].iter().map(|b| Vertex::from_bits(b)))
    }

    #[test]
    fn exact_membership_examples() {
        let vs = nested();
        let m = hull_membership_exact(&[ratio(3, 5), ratio(9, 10)], &vs);
        assert!(m.feasible);
        assert_eq!(m.weights.unwrap(), vec![ratio(1, 10), ratio(3, 10), ratio(3, 5)]);
        let m = hull_membership_exact(&[ratio(19, 20), ratio(11, 20)], &vs);
        assert!(!m.feasible && m.weights.is_none());
        for (j, v) in vs.vertices().iter().enumerate() {
            let f: Vec<BigRational> = v.to_f64().iter().map(|&x| to_rational(x)).collect();
            let w = hull_membership_exact(&f, &vs).weights.unwrap();
            assert_eq!(w[j], BigRational::one());
        }
    }

    #[test]
    fn exact_euclidean_projection() {
        let (p, w) = project_euclidean_exact(&[ratio(19, 20), ratio(11, 20)], &nested());
        assert_eq!(p, vec![ratio(3, 4), ratio(3, 4)]);
        assert_eq!(w, vec![ratio(1, 4), BigRational::zero(), ratio(3, 4)]);
        let (p, _) = project_euclidean_exact(&[ratio(3, 10), ratio(4, 5)], &nested());
        assert_eq!(p, vec![ratio(3, 10), ratio(4, 5)]);
    }

    #[test]
    fn grid_projection_examples() {
        let rules = RuleFamily::uniform(brier(), 2);
        let p = projection_grid(&rules, &[0.95, 0.55], &nested(), 1e-3);
        assert!((p[0] - 0.75).abs() < 1e-3 && (p[1] - 0.75).abs() < 1e-3, "{p:?}");
        let p = projection_grid(&rules, &[0.3, 0.8], &nested(), 1e-3);
        assert!((p[0] - 0.3).abs() < 1e-3 && (p[1] - 0.8).abs() < 1e-3);
        let rules = RuleFamily::uniform(log_rule(), 2);
        let p = projection_grid(&rules, &[0.5, 0.2], &nested(), 1e-3);
        assert!(p[0] <= p[1] + 1e-12);
    }

    #[test]
    fn search_examples() {
        let rules = RuleFamily::uniform(brier(), 2);
        let vs = nested();
        assert!(domination_search(&rules, &[0.6, 0.9], &vs, 20, 7).max_margin.value() >= -1e-6);
        let found = domination_search(&rules, &[0.95, 0.55], &vs, 20, 7);
        assert!(found.max_margin.value() <= -0.079, "{found:?}");
        assert!(domination_search(&rules, &[1.0, 1.0], &vs, 20, 7).max_margin.value() >= -1e-6);
        let log = RuleFamily::uniform(log_rule(), 2);
        assert!(domination_search(&log, &[0.0, 1.0], &vs, 20, 7).max_margin.value() >= -1e-6);
    }

    #[test]
    fn weight_grid_counts() {
        let mut count = 0;
        for_each_grid_weight(3, 4, |w| {
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            count += 1;
        });
        assert_eq!(count, 15);
        assert_eq!(grid_size(3, 4), 15.0);
    }
}
