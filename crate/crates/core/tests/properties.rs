//! Randomised invariants of every module.

mod common;

use coherence_core::bregman::{project, Divergence, ProjectOptions};
use coherence_core::coherence::{check, CheckOptions};
use coherence_core::domination::{compare, penalty, Relation};
use coherence_core::event_algebra::{atoms, build_vertex_set, EventSystem, VertexSet};
use coherence_core::ext::ExtReal;
use coherence_core::forecast::Forecast;
use coherence_core::oracle::{
    domination_search, hull_membership_exact, project_euclidean_exact, projection_grid, rational_to_f64, to_rational,
};
use coherence_core::repair::{certify, repair, RepairError, RepairOptions, RepairPath};
use coherence_core::scoring::{brier, log_rule, RuleFamily, ScoringRule};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn system_strategy(max_events: usize, max_worlds: usize) -> impl Strategy<Value = EventSystem> {
    (1..=max_events, 1..=max_worlds).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), n), m)
            .prop_map(move |rows| EventSystem::new(common::world_names(m), rows).unwrap())
    })
}

/// Probabilities with extra weight on the endpoints.
fn coordinate() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 1 => Just(1.0), 6 => 0.0..=1.0f64]
}

fn interior() -> impl Strategy<Value = f64> {
    0.001..0.999f64
}

#[derive(Clone, Copy, Debug)]
enum RuleKind {
    Brier,
    Log,
    Mixed(u32),
}

fn rule_kind() -> impl Strategy<Value = RuleKind> {
    prop_oneof![Just(RuleKind::Brier), Just(RuleKind::Log), any::<u32>().prop_map(RuleKind::Mixed)]
}

fn family(kind: RuleKind, n: usize) -> RuleFamily {
    match kind {
        RuleKind::Brier => RuleFamily::uniform(brier(), n),
        RuleKind::Log => RuleFamily::uniform(log_rule(), n),
        RuleKind::Mixed(bits) => RuleFamily::new(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { log_rule() } else { brier() })
                .collect(),
        ),
    }
}

/// A system plus a forecast of matching dimension.
fn with_forecast(
    max_events: usize,
    max_worlds: usize,
    coord: fn() -> BoxedStrategy<f64>,
) -> impl Strategy<Value = (EventSystem, Vec<f64>)> {
    system_strategy(max_events, max_worlds).prop_flat_map(move |s| {
        let n = s.num_events();
        (Just(s), prop::collection::vec(coord(), n))
    })
}

fn any_coord() -> BoxedStrategy<f64> {
    coordinate().boxed()
}

fn interior_coord() -> BoxedStrategy<f64> {
    interior().boxed()
}

fn hull_point(vertices: &VertexSet, raw: &[f64]) -> Forecast {
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    Forecast::new(vertices.combine(&w).into_iter().map(|x| x.clamp(0.0, 1.0)).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // ------------------------------------------------------------------
    // event algebra

    #[test]
    fn world_rows_match_their_class_vertex(system in system_strategy(5, 16)) {
        let vs = build_vertex_set(&system);
        let mut seen = vec![false; system.num_worlds()];
        for (j, class) in vs.world_classes().iter().enumerate() {
            prop_assert!(!class.is_empty());
            for &w in class {
                prop_assert_eq!(system.row(w), vs.vertex(j));
                prop_assert!(!seen[w]);
                seen[w] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        prop_assert!(vs.vertices().windows(2).all(|w| w[0] < w[1]));
        let mut distinct: Vec<_> = (0..system.num_worlds()).map(|w| system.row(w).clone()).collect();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(vs.len(), distinct.len());
        prop_assert_eq!(atoms(&system), vs.world_classes().to_vec());
    }

    #[test]
    fn subset_events_order_every_vertex(system in system_strategy(5, 16)) {
        let vs = build_vertex_set(&system);
        let n = system.num_events();
        for i in 0..n {
            for j in 0..n {
                if system.is_subset(i, j) {
                    prop_assert!(vs.vertices().iter().all(|v| !v.get(i) || v.get(j)));
                }
            }
        }
    }

    // ------------------------------------------------------------------
    // extended reals

    #[test]
    fn ext_real_serde_round_trip(x in prop_oneof![Just(f64::INFINITY), Just(f64::NEG_INFINITY), -1e6..1e6f64]) {
        let e = ExtReal::new(x);
        let text = serde_json::to_string(&e).unwrap();
        let back: ExtReal = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, e);
        prop_assert_eq!(ExtReal::INFINITY.weighted(0.0), ExtReal::ZERO);
        prop_assert_eq!(e.margin(e), ExtReal::ZERO);
    }

    // ------------------------------------------------------------------
    // bregman divergence

    #[test]
    fn divergence_is_nonnegative_and_separates(
        kind in rule_kind(),
        pair in (1..=5usize).prop_flat_map(|n| (prop::collection::vec(interior(), n), prop::collection::vec(interior(), n))),
        nudge in prop::collection::vec(-1e-8..1e-8f64, 5),
    ) {
        let (x, y) = pair;
        let div = Divergence::new(family(kind, x.len()));
        let d = div.divergence(&y, &x).value();
        prop_assert!(d >= 0.0);
        let gap = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap >= 1e-5 {
            prop_assert!(d > 1e-12, "d = {d} at gap {gap}");
        }
        let near: Vec<f64> = x.iter().zip(&nudge).map(|(a, e)| a + e).collect();
        prop_assert!(div.divergence(&near, &x).value() < 1e-12);
    }

    #[test]
    fn brier_divergence_is_squared_distance(
        pair in (1..=5usize).prop_flat_map(|n| (prop::collection::vec(coordinate(), n), prop::collection::vec(coordinate(), n))),
    ) {
        let (x, y) = pair;
        let d = Divergence::new(RuleFamily::uniform(brier(), x.len())).divergence(&y, &x).value();
        let sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!((d - sq).abs() < 1e-12);
    }

    #[test]
    fn log_divergence_is_binary_kl(
        pair in (1..=5usize).prop_flat_map(|n| (prop::collection::vec(interior(), n), prop::collection::vec(interior(), n))),
    ) {
        let (x, y) = pair;
        let d = Divergence::new(RuleFamily::uniform(log_rule(), x.len())).divergence(&y, &x).value();
        let kl: f64 = x
            .iter()
            .zip(&y)
            .map(|(&p, &q)| q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln())
            .sum();
        prop_assert!((d - kl).abs() < 1e-10, "{d} vs {kl}");
    }

    #[test]
    fn projection_satisfies_first_order_conditions(kind in rule_kind(), (system, x) in with_forecast(5, 16, interior_coord)) {
        let vs = build_vertex_set(&system);
        let div = Divergence::new(family(kind, x.len()));
        let proj = project(&div, &x, &vs, ProjectOptions::default()).unwrap();
        let grad_pi = div.gradient(&proj.point);
        let grad_x = div.gradient(&x);
        let constant = vs.constant_coords();
        for v in vs.vertices() {
            // coordinates fixed by the hull contribute nothing
            let inner: f64 = (0..x.len())
                .filter(|&i| constant[i].is_none())
                .map(|i| (grad_pi[i] - grad_x[i]) * (v.coord(i) - proj.point[i]))
                .sum();
            prop_assert!(inner >= -TOL, "{inner} at {v}");
        }
        let total: f64 = proj.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(proj.weights.iter().all(|&w| w >= 0.0));
        let rebuilt = vs.combine(&proj.weights);
        prop_assert!(rebuilt.iter().zip(proj.point.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    // ------------------------------------------------------------------
    // coherence

    #[test]
    fn coherent_verdicts_carry_a_reproducing_witness((system, f) in with_forecast(5, 16, any_coord)) {
        let vs = build_vertex_set(&system);
        let f = Forecast::new(f).unwrap();
        let verdict = check(&f, &vs, CheckOptions::default()).unwrap();
        if verdict.is_coherent() {
            let point = verdict.witness_point().unwrap();
            for (a, b) in point.iter().zip(f.iter()) {
                prop_assert!((a - b).abs() <= 10.0 * TOL, "{point:?} vs {f:?}");
            }
            let mass: f64 = verdict.witness.as_ref().unwrap().iter().map(|a| a.mass).sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        } else {
            let sep = verdict.separator.as_ref().unwrap();
            prop_assert!(sep.margin > 0.0);
            let hf = dot(&sep.normal, &f);
            for v in vs.vertices() {
                prop_assert!(hf - dot(&sep.normal, &v.to_f64()) >= sep.margin);
            }
        }
    }

    #[test]
    fn hull_points_are_coherent_and_respect_inclusions(
        (system, raw) in system_strategy(5, 16).prop_flat_map(|s| {
            let k = build_vertex_set(&s).len();
            (Just(s), prop::collection::vec(0.01..1.0f64, k))
        }),
    ) {
        let vs = build_vertex_set(&system);
        let f = hull_point(&vs, &raw);
        prop_assert!(check(&f, &vs, CheckOptions::default()).unwrap().is_coherent());
        let n = system.num_events();
        for i in 0..n {
            for j in 0..n {
                if system.is_subset(i, j) {
                    prop_assert!(f[i] <= f[j] + 10.0 * TOL);
                }
            }
        }
    }

    #[test]
    fn exact_and_float_membership_agree_on_random_points((system, f) in with_forecast(4, 8, any_coord)) {
        let vs = build_vertex_set(&system);
        let exact: Vec<BigRational> = f.iter().map(|&x| to_rational(x)).collect();
        let truth = hull_membership_exact(&exact, &vs);
        let f = Forecast::new(f).unwrap();
        let verdict = check(&f, &vs, CheckOptions::default()).unwrap();
        if truth.feasible {
            prop_assert!(verdict.is_coherent());
            let w = truth.weights.unwrap();
            prop_assert!(w.iter().all(|x| *x >= BigRational::zero()));
            prop_assert_eq!(w.iter().cloned().sum::<BigRational>(), BigRational::one());
        } else if verdict.is_coherent() {
            // only points within the tolerance of the hull may disagree
            prop_assert!(verdict.hull_distance.powi(2) <= TOL);
        }
    }

    // ------------------------------------------------------------------
    // domination

    #[test]
    fn strict_domination_is_antisymmetric(
        kind in rule_kind(),
        (system, f, g) in system_strategy(4, 8).prop_flat_map(|s| {
            let n = s.num_events();
            (Just(s), prop::collection::vec(coordinate(), n), prop::collection::vec(coordinate(), n))
        }),
    ) {
        let vs = build_vertex_set(&system);
        let rules = family(kind, f.len());
        let ab = compare(&rules, &f, &g, &vs).relation;
        let ba = compare(&rules, &g, &f, &vs).relation;
        prop_assert!(!(ab == Relation::StrictlyDominates && ba == Relation::StrictlyDominates));
        prop_assert_eq!(compare(&rules, &f, &f, &vs).relation, Relation::WeaklyDominates);
    }

    // ------------------------------------------------------------------
    // repair

    #[test]
    fn repair_is_certified_coherent_and_not_reapplicable(kind in rule_kind(), (system, f) in with_forecast(5, 16, any_coord)) {
        let vs = build_vertex_set(&system);
        let rules = family(kind, f.len());
        let f = Forecast::new(f).unwrap();
        match repair(&rules, &f, &vs, RepairOptions::default()) {
            Err(RepairError::Coherent) => {
                prop_assert!(check(&f, &vs, CheckOptions::default()).unwrap().is_coherent());
            }
            Err(e) => prop_assert!(false, "repair failed: {e}"),
            Ok(result) => {
                prop_assert!(result.min_margin.value() > 0.0);
                prop_assert!(result.divergence.value() > 0.0);
                prop_assert!(certify(&result, &rules, &f, &vs, CheckOptions::default()).is_ok());
                let rebuilt = vs.combine(&result.weights);
                prop_assert!(rebuilt.iter().zip(result.repaired.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
                prop_assert!(result.weights.iter().all(|&w| w >= 0.0));
                if let RepairPath::FaceRecursion { depth, epsilon } = result.path {
                    prop_assert!(depth >= 1 && depth <= f.len());
                    prop_assert!((0.0..=1.0).contains(&epsilon));
                }
                prop_assert!(matches!(
                    repair(&rules, &result.repaired, &vs, RepairOptions::default()),
                    Err(RepairError::Coherent)
                ));
            }
        }
    }

    #[test]
    fn brier_repair_matches_exact_projection((system, f) in with_forecast(3, 8, any_coord)) {
        let vs = build_vertex_set(&system);
        let rules = RuleFamily::uniform(brier(), f.len());
        let forecast = Forecast::new(f.clone()).unwrap();
        if let Ok(result) = repair(&rules, &forecast, &vs, RepairOptions::default()) {
            let exact: Vec<BigRational> = f.iter().map(|&x| to_rational(x)).collect();
            let (point, _) = project_euclidean_exact(&exact, &vs);
            for (a, b) in result.repaired.iter().zip(&point) {
                prop_assert!((a - rational_to_f64(b)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hull_distance_matches_exact_projection((system, f) in with_forecast(3, 8, any_coord)) {
        let vs = build_vertex_set(&system);
        let exact: Vec<BigRational> = f.iter().map(|&x| to_rational(x)).collect();
        let (point, _) = project_euclidean_exact(&exact, &vs);
        let truth = f
            .iter()
            .zip(&point)
            .map(|(a, b)| (a - rational_to_f64(b)).powi(2))
            .sum::<f64>()
            .sqrt();
        let verdict = check(&Forecast::new(f).unwrap(), &vs, CheckOptions::default()).unwrap();
        prop_assert!((verdict.hull_distance - truth).abs() <= 1e-9 + 1e-6 * truth, "{} vs {truth}", verdict.hull_distance);
    }

    // ------------------------------------------------------------------
    // oracle agreement

    #[test]
    fn grid_and_engine_projections_agree(
        log in any::<bool>(),
        (system, x) in system_strategy(4, 5).prop_flat_map(|s| {
            let n = s.num_events();
            (Just(s), prop::collection::vec(interior(), n))
        }),
    ) {
        let vs = build_vertex_set(&system);
        prop_assume!(vs.len() <= 5);
        let rules = if log { RuleFamily::uniform(log_rule(), x.len()) } else { RuleFamily::uniform(brier(), x.len()) };
        let resolution = 1e-3;
        let engine = project(&Divergence::new(rules.clone()), &x, &vs, ProjectOptions::default()).unwrap();
        let grid = projection_grid(&rules, &x, &vs, resolution);
        for (a, b) in engine.point.iter().zip(grid.iter()) {
            prop_assert!((a - b).abs() <= 2.0 * resolution, "{:?} vs {:?}", engine.point, grid);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Whenever the adversary exhibits a dominating forecast, repair
    /// produces a coherent strict dominator as well.
    #[test]
    fn found_domination_implies_repairable(kind in rule_kind(), (system, f) in with_forecast(4, 8, any_coord), seed in any::<u64>()) {
        let vs = build_vertex_set(&system);
        let rules = family(kind, f.len());
        let found = domination_search(&rules, &f, &vs, 4, seed);
        if found.max_margin.value() < -1e-9 {
            let f = Forecast::new(f).unwrap();
            let result = repair(&rules, &f, &vs, RepairOptions::default()).unwrap();
            prop_assert_eq!(compare(&rules, &f, &result.repaired, &vs).relation, Relation::StrictlyDominates);
        }
    }
}

// ----------------------------------------------------------------------
// deterministic checks over fixed grids

fn grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| j as f64 / (points - 1) as f64).collect()
}

#[test]
fn built_in_rules_are_minimised_by_the_belief() {
    for rule in [brier(), log_rule()] {
        for &p in &grid(101) {
            let score = |x: f64| p * rule.score1(x).weighted(1.0).value() + (1.0 - p) * rule.score0(x).value();
            let expected = |x: f64| coherence_core::scoring::expected_score(&rule, p, x);
            let best = grid(101)
                .into_iter()
                .min_by(|a, b| expected(*a).cmp(&expected(*b)))
                .unwrap();
            assert_eq!(best, p, "{} at belief {p}", rule.name());
            let _ = score;
        }
    }
}

#[test]
fn recovered_generators_are_midpoint_convex() {
    for rule in [brier(), log_rule()] {
        let samples = coherence_core::scoring::phi_from_rule(&rule, 101).unwrap();
        let phi = &samples.phi;
        for a in 0..phi.len() {
            for b in (a + 2..phi.len()).step_by(2) {
                let mid = phi[(a + b) / 2];
                let chord = 0.5 * (phi[a] + phi[b]);
                assert!(chord - mid > 1e-12, "{} between {a} and {b}", rule.name());
            }
        }
    }
}

#[test]
fn endpoint_identities_hold_exactly() {
    for rule in [brier(), log_rule()] {
        assert_eq!(rule.score0(0.0).value(), -rule.phi(0.0));
        assert_eq!(rule.score1(1.0).value(), -rule.phi(1.0));
    }
}

#[test]
fn log_generator_tails_vanish() {
    let rule = log_rule();
    let mut previous = (f64::INFINITY, f64::INFINITY);
    for x in [1e-4, 1e-6, 1e-8] {
        let left = (x * rule.phi_prime(x)).abs();
        let right = (x * rule.phi_prime(1.0 - x)).abs();
        assert!(left < previous.0 && right < previous.1);
        previous = (left, right);
    }
    assert!(previous.0 < 1e-6 && previous.1 < 1e-6);
}

#[test]
fn derivatives_match_finite_differences() {
    let custom = coherence_core::scoring::from_generator(
        "power",
        |x: f64| x.powf(3.0) + (1.0 - x).powf(3.0) - 1.0,
        |x: f64| 3.0 * x * x - 3.0 * (1.0 - x) * (1.0 - x),
    )
    .unwrap();
    let rules: [ScoringRule; 3] = [brier(), log_rule(), custom];
    let h = 1e-6;
    for rule in &rules {
        for &x in &grid(101)[1..100] {
            let fd = (rule.phi(x + h) - rule.phi(x - h)) / (2.0 * h);
            let exact = rule.phi_prime(x);
            let rel = (fd - exact).abs() / exact.abs().max(1.0);
            assert!(rel < 1e-5, "{} at {x}: {fd} vs {exact}", rule.name());
        }
    }
}

#[test]
fn epsilon_mixing_approaches_the_face_solution() {
    // log rule, E inside F, f = (0.5, 0): the face solution is (0,0) and the
    // off-face mean is (0.5, 1)
    let vs = common::nested();
    let rules = RuleFamily::uniform(log_rule(), 2);
    let on_face = vs.vertex(0);
    let face_solution = [0.0, 0.0];
    let limit = penalty(&rules, &face_solution, on_face).value();
    let mut previous = f64::INFINITY;
    for eps in [1e-3, 5e-4, 2.5e-4, 1e-4, 1e-5, 1e-6, 1e-7] {
        let g = [0.5 * eps, eps];
        let p = penalty(&rules, &g, on_face).value();
        assert!(p < previous, "not monotone at {eps}");
        assert!(p >= limit);
        previous = p;
    }
    assert!(previous - limit < 1e-6);
}

#[test]
fn incoherent_random_forecasts_are_repaired_for_mixed_families() {
    let mut rng = common::rng(5);
    for _ in 0..200 {
        let inst = common::random_incoherent(&mut rng, 5, 16, true);
        let rules = common::mixed_family(&mut rng, inst.system.num_events());
        let result = repair(&rules, &inst.forecast, &inst.vertices, RepairOptions::default()).unwrap();
        assert!(certify(&result, &rules, &inst.forecast, &inst.vertices, CheckOptions::default()).is_ok());
    }
}
