//! Seeded generators of random event systems and forecasts.
#![allow(dead_code)]

use coherence_core::coherence::{check, CheckOptions};
use coherence_core::event_algebra::{build_vertex_set, EventSystem, VertexSet};
use coherence_core::forecast::Forecast;
use coherence_core::scoring::{brier, log_rule, RuleFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn world_names(m: usize) -> Vec<String> {
    (0..m).map(|w| format!("w{w}")).collect()
}

/// The two-event system with `E` inside `F`: worlds TT, FT, FF.
pub fn nested_system() -> EventSystem {
    EventSystem::from_members(
        vec!["TT".into(), "FT".into(), "FF".into()],
        &[("E", vec!["TT"]), ("F", vec!["TT", "FT"])],
    )
    .unwrap()
}

pub fn nested() -> VertexSet {
    build_vertex_set(&nested_system())
}

/// Random incidence with `1..=max_events` events over `1..=max_worlds` worlds.
pub fn random_system(rng: &mut ChaCha8Rng, max_events: usize, max_worlds: usize) -> EventSystem {
    let n = rng.random_range(1..=max_events);
    let m = rng.random_range(1..=max_worlds);
    let density = rng.random_range(0.2..0.8);
    let incidence = (0..m)
        .map(|_| (0..n).map(|_| rng.random_bool(density)).collect())
        .collect();
    EventSystem::new(world_names(m), incidence).unwrap()
}

/// Uniform-ish random hull weights, sometimes sparse so that points land
/// on faces of the hull.
pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let sparse = rng.random_bool(0.3);
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            if sparse && rng.random_bool(0.5) {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..k)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn random_coherent(rng: &mut ChaCha8Rng, vertices: &VertexSet) -> Forecast {
    let w = random_weights(rng, vertices.len());
    let point = vertices.combine(&w).into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
    Forecast::new(point).unwrap()
}

/// A random point of the cube; with `snap`, some coordinates are pushed to
/// 0 or 1 to exercise the divergent faces of unbounded rules.
pub fn random_point(rng: &mut ChaCha8Rng, n: usize, snap: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if snap && rng.random_bool(0.25) {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    0.0
                }
            } else {
                rng.random::<f64>()
            }
        })
        .collect()
}

/// An event system together with a forecast the engine judges incoherent.
pub struct Incoherent {
    pub system: EventSystem,
    pub vertices: VertexSet,
    pub forecast: Forecast,
}

pub fn random_incoherent(rng: &mut ChaCha8Rng, max_events: usize, max_worlds: usize, snap: bool) -> Incoherent {
    loop {
        let system = random_system(rng, max_events, max_worlds);
        let vertices = build_vertex_set(&system);
        for _ in 0..50 {
            let point = random_point(rng, system.num_events(), snap);
            let forecast = Forecast::new(point).unwrap();
            if !check(&forecast, &vertices, CheckOptions::default()).unwrap().is_coherent() {
                return Incoherent {
                    system,
                    vertices,
                    forecast,
                };
            }
        }
    }
}

pub fn brier_family(n: usize) -> RuleFamily {
    RuleFamily::uniform(brier(), n)
}

pub fn log_family(n: usize) -> RuleFamily {
    RuleFamily::uniform(log_rule(), n)
}

/// A family mixing both built-in rules coordinate by coordinate.
pub fn mixed_family(rng: &mut ChaCha8Rng, n: usize) -> RuleFamily {
    RuleFamily::new(
        (0..n)
            .map(|_| if rng.random_bool(0.5) { brier() } else { log_rule() })
            .collect(),
    )
}
