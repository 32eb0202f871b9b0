//! Penalties and domination between forecasts.
//!
//! The penalty of `f` in world `w` is `sum_i s_i(C_{E_i}(w), f_i)`. It depends
//! on `w` only through the world's vertex, so quantifying over the vertex set
//! is the same as quantifying over all worlds.

use serde::Serialize;

use crate::bregman::Divergence;
use crate::event_algebra::{Vertex, VertexSet};
use crate::ext::ExtReal;
use crate::scoring::RuleFamily;

/// Tolerance on the penalty = divergence + baseline identity.
pub const REPR_TOLERANCE: f64 = 1e-9;

/// `sum_i s_i(v_i, f_i)`.
pub fn penalty(rules: &RuleFamily, f: &[f64], v: &Vertex) -> ExtReal {
    assert_eq!(f.len(), rules.len(), "forecast dimension");
    assert_eq!(v.dim(), rules.len(), "vertex dimension");
    f.iter()
        .enumerate()
        .map(|(i, &fi)| {
            let rule = rules.rule(i);
            if v.get(i) {
                rule.score1(fi)
            } else {
                rule.score0(fi)
            }
        })
        .sum()
}

/// Penalty of a perfect forecast at `v`: `sum_i s_i(v_i, v_i) = -sum_i phi_i(v_i)`.
pub fn baseline(rules: &RuleFamily, v: &Vertex) -> ExtReal {
    penalty(rules, &v.to_f64(), v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyEntry {
    pub vertex: Vertex,
    pub penalty: ExtReal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyProfile {
    pub entries: Vec<PenaltyEntry>,
    /// Largest `|P(v,f) - d(v,f) - baseline(v)|` over finite entries.
    pub repr_residual: f64,
}

impl PenaltyProfile {
    pub fn penalties(&self) -> Vec<ExtReal> {
        self.entries.iter().map(|e| e.penalty).collect()
    }

    pub fn get(&self, v: &Vertex) -> Option<ExtReal> {
        self.entries.iter().find(|e| &e.vertex == v).map(|e| e.penalty)
    }
}

/// Penalties at every vertex, cross-checked against the divergence form
/// `P(v,f) = d(v,f) + sum_i s_i(v_i, v_i)`.
pub fn penalty_profile(rules: &RuleFamily, f: &[f64], vertices: &VertexSet) -> PenaltyProfile {
    let div = Divergence::new(rules.clone());
    let mut repr_residual: f64 = 0.0;
    let entries = vertices
        .vertices()
        .iter()
        .map(|v| {
            let p = penalty(rules, f, v);
            let via_divergence = div.divergence(&v.to_f64(), f) + baseline(rules, v);
            debug_assert_eq!(p.is_finite(), via_divergence.is_finite());
            if let (Some(a), Some(b)) = (p.finite(), via_divergence.finite()) {
                repr_residual = repr_residual.max((a - b).abs());
            }
            PenaltyEntry {
                vertex: v.clone(),
                penalty: p,
            }
        })
        .collect();
    PenaltyProfile {
        entries,
        repr_residual,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Strictly lower penalty at every vertex.
    StrictlyDominates,
    /// Lower or equal everywhere, equal somewhere.
    WeaklyDominates,
    NoDomination,
}

/// How the challenger `g` compares with the incumbent `f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationVerdict {
    pub relation: Relation,
    /// `P(v,f) - P(v,g)` per vertex; positive where `g` does better. A
    /// margin of 0 also covers the case where both penalties are infinite.
    pub margins: Vec<ExtReal>,
}

impl DominationVerdict {
    pub fn min_margin(&self) -> ExtReal {
        self.margins.iter().copied().min().expect("at least one vertex")
    }
}

/// Does `g` dominate `f`?
pub fn compare(rules: &RuleFamily, f: &[f64], g: &[f64], vertices: &VertexSet) -> DominationVerdict {
    let mut all_strict = true;
    let mut all_weak = true;
    let margins = vertices
        .vertices()
        .iter()
        .map(|v| {
            let pf = penalty(rules, f, v);
            let pg = penalty(rules, g, v);
            all_strict &= pg < pf;
            all_weak &= pg <= pf;
            pf.margin(pg)
        })
        .collect();
    let relation = if all_strict {
        Relation::StrictlyDominates
    } else if all_weak {
        Relation::WeaklyDominates
    } else {
        Relation::NoDomination
    };
    DominationVerdict { relation, margins }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{brier, log_rule};

    fn nested() -> VertexSet {
        VertexSet::from_vertices(2, [[0, 0], [0, 1], [1, 1]].iter().map(|b| Vertex::from_bits(b)))
    }

    fn approx(a: ExtReal, b: f64) -> bool {
        (a.value() - b).abs() < 1e-12
    }

    #[test]
    fn table_penalties() {
        let rules = RuleFamily::uniform(brier(), 2);
        assert!(approx(penalty(&rules, &[0.6, 0.9], &Vertex::from_bits(&[1, 1])), 0.17));
        assert!(approx(penalty(&rules, &[0.95, 0.55], &Vertex::from_bits(&[0, 1])), 1.105));
        let original = penalty_profile(&rules, &[0.6, 0.9], &nested());
        for (got, want) in original.penalties().iter().zip([1.17, 0.37, 0.17]) {
            assert!(approx(*got, want), "{got} vs {want}");
        }
        let rival = penalty_profile(&rules, &[0.95, 0.55], &nested());
        for (got, want) in rival.penalties().iter().zip([1.205, 1.105, 0.205]) {
            assert!(approx(*got, want));
        }
        assert!(original.repr_residual < 1e-12);
    }

    #[test]
    fn categorical_mistake_is_infinite() {
        let rules = RuleFamily::uniform(log_rule(), 2);
        assert_eq!(penalty(&rules, &[0.0, 0.5], &Vertex::from_bits(&[1, 0])), ExtReal::INFINITY);
        assert!(penalty(&rules, &[0.0, 0.5], &Vertex::from_bits(&[0, 0])).is_finite());
    }

    #[test]
    fn perfect_forecast_scores_zero_under_brier() {
        let rules = RuleFamily::uniform(brier(), 2);
        let v = Vertex::from_bits(&[0, 1]);
        assert_eq!(penalty(&rules, &v.to_f64(), &v), ExtReal::ZERO);
    }

    #[test]
    fn original_dominates_rival() {
        let rules = RuleFamily::uniform(brier(), 2);
        let verdict = compare(&rules, &[0.95, 0.55], &[0.6, 0.9], &nested());
        assert_eq!(verdict.relation, Relation::StrictlyDominates);
        for (got, want) in verdict.margins.iter().zip([0.035, 0.735, 0.035]) {
            assert!(approx(*got, want));
        }
        let reverse = compare(&rules, &[0.6, 0.9], &[0.95, 0.55], &nested());
        assert_eq!(reverse.relation, Relation::NoDomination);
    }

    #[test]
    fn self_comparison_is_weak() {
        let rules = RuleFamily::uniform(log_rule(), 2);
        let verdict = compare(&rules, &[0.0, 0.3], &[0.0, 0.3], &nested());
        assert_eq!(verdict.relation, Relation::WeaklyDominates);
        assert!(verdict.margins.iter().all(|m| *m == ExtReal::ZERO));
    }

    #[test]
    fn distinct_coherent_forecasts_do_not_dominate() {
        let rules = RuleFamily::uniform(brier(), 2);
        let (f, g) = ([0.6, 0.9], [0.3, 0.5]);
        assert_eq!(compare(&rules, &f, &g, &nested()).relation, Relation::NoDomination);
        assert_eq!(compare(&rules, &g, &f, &nested()).relation, Relation::NoDomination);
    }
}
