//! Sample spaces, events and the vertex set of world-indicator vectors.
//!
//! An [`EventSystem`] lists the worlds of a finite sample space and, for each
//! world, which of the `n` events hold there. The distinct rows of that
//! incidence matrix form the [`VertexSet`]; its convex hull is exactly the
//! set of coherent forecasts. Worlds producing the same row form one atom.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("the sample space needs at least one world")]
    NoWorlds,
    #[error("at least one event is required")]
    NoEvents,
    #[error("duplicate world label `{0}`")]
    DuplicateWorld(String),
    #[error("duplicate event name `{0}`")]
    DuplicateEvent(String),
    #[error("event `{event}` refers to unknown world `{world}`")]
    UnknownWorld { event: String, world: String },
    #[error("incidence row {row} has {found} entries, expected {expected}")]
    RaggedIncidence {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("incidence has {found} rows for {expected} worlds")]
    RowCount { found: usize, expected: usize },
}

/// A point of `{0,1}^n`: the truth values of the `n` events in some world.
///
/// Ordering is lexicographic with `false < true`, which is the canonical
/// vertex order used throughout the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex(Box<[bool]>);

impl Vertex {
    pub fn new(bits: impl Into<Box<[bool]>>) -> Self {
        Vertex(bits.into())
    }

    /// Builds a vertex from 0/1 integers. Panics on other values.
    pub fn from_bits(bits: &[u8]) -> Self {
        Vertex(
            bits.iter()
                .map(|&b| match b {
                    0 => false,
                    1 => true,
                    other => panic!("vertex entries must be 0 or 1, got {other}"),
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Coordinate `i` as 0.0 or 1.0.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        if self.0[i] {
            1.0
        } else {
            0.0
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }

    /// Keeps only the listed coordinates, in the listed order.
    pub fn select(&self, coords: &[usize]) -> Vertex {
        Vertex(coords.iter().map(|&i| self.0[i]).collect())
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

impl Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let bits: Vec<u8> = self.0.iter().map(|&b| u8::from(b)).collect();
        bits.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let bits = Vec::<u8>::deserialize(deserializer)?;
        if bits.iter().any(|&b| b > 1) {
            return Err(serde::de::Error::custom("vertex entries must be 0 or 1"));
        }
        Ok(Vertex(bits.into_iter().map(|b| b == 1).collect()))
    }
}

/// A finite sample space together with `n` events given extensionally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventSystem {
    worlds: Vec<String>,
    event_names: Vec<String>,
    // rows indexed by world, columns by event
    incidence: Vec<Vertex>,
}

impl EventSystem {
    /// Builds a system from a world × event truth table. Events are named
    /// `E1, E2, ...`.
    pub fn new(worlds: Vec<String>, incidence: Vec<Vec<bool>>) -> Result<Self, EventError> {
        let n = incidence.first().map_or(0, Vec::len);
        let names = (1..=n).map(|i| format!("E{i}")).collect();
        Self::with_names(worlds, names, incidence)
    }

    pub fn with_names(
        worlds: Vec<String>,
        event_names: Vec<String>,
        incidence: Vec<Vec<bool>>,
    ) -> Result<Self, EventError> {
        if worlds.is_empty() {
            return Err(EventError::NoWorlds);
        }
        if event_names.is_empty() {
            return Err(EventError::NoEvents);
        }
        check_distinct(&worlds).map_err(EventError::DuplicateWorld)?;
        check_distinct(&event_names).map_err(EventError::DuplicateEvent)?;
        if incidence.len() != worlds.len() {
            return Err(EventError::RowCount {
                found: incidence.len(),
                expected: worlds.len(),
            });
        }
        let n = event_names.len();
        let mut rows = Vec::with_capacity(incidence.len());
        for (row, bits) in incidence.into_iter().enumerate() {
            if bits.len() != n {
                return Err(EventError::RaggedIncidence {
                    row,
                    found: bits.len(),
                    expected: n,
                });
            }
            rows.push(Vertex::new(bits));
        }
        Ok(EventSystem {
            worlds,
            event_names,
            incidence: rows,
        })
    }

    /// Builds a system from named events listing their member worlds.
    pub fn from_members<S: AsRef<str>>(
        worlds: Vec<String>,
        events: &[(S, Vec<S>)],
    ) -> Result<Self, EventError> {
        if events.is_empty() {
            return Err(EventError::NoEvents);
        }
        let index: BTreeMap<&str, usize> = worlds
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i))
            .collect();
        let mut incidence = vec![vec![false; events.len()]; worlds.len()];
        for (j, (name, members)) in events.iter().enumerate() {
            for member in members {
                let &w = index
                    .get(member.as_ref())
                    .ok_or_else(|| EventError::UnknownWorld {
                        event: name.as_ref().to_string(),
                        world: member.as_ref().to_string(),
                    })?;
                incidence[w][j] = true;
            }
        }
        let names = events.iter().map(|(n, _)| n.as_ref().to_string()).collect();
        Self::with_names(worlds, names, incidence)
    }

    pub fn num_worlds(&self) -> usize {
        self.worlds.len()
    }

    pub fn num_events(&self) -> usize {
        self.event_names.len()
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn event_names(&self) -> &[String] {
        &self.event_names
    }

    /// The indicator vector of world `w`.
    pub fn row(&self, w: usize) -> &Vertex {
        &self.incidence[w]
    }

    /// Whether event `i` holds in world `w`.
    pub fn holds(&self, w: usize, i: usize) -> bool {
        self.incidence[w].get(i)
    }

    /// True when event `i` is a subset of event `j`.
    pub fn is_subset(&self, i: usize, j: usize) -> bool {
        self.incidence.iter().all(|row| !row.get(i) || row.get(j))
    }
}

fn check_distinct(labels: &[String]) -> Result<(), String> {
    let mut seen = HashSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(label.clone());
        }
    }
    Ok(())
}

/// The distinct world-indicator vectors, sorted lexicographically, with the
/// worlds (indices into the originating [`EventSystem`]) that produce each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    dim: usize,
    vertices: Vec<Vertex>,
    world_classes: Vec<Vec<usize>>,
}

impl VertexSet {
    /// A vertex set without an underlying sample space: every distinct
    /// vertex is its own world. Input order and duplicates do not matter.
    ///
    /// Panics if `vertices` is empty or dimensions disagree.
    pub fn from_vertices(dim: usize, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let mut vertices: Vec<Vertex> = vertices.into_iter().collect();
        assert!(!vertices.is_empty(), "a vertex set needs at least one vertex");
        assert!(
            vertices.iter().all(|v| v.dim() == dim),
            "all vertices must have dimension {dim}"
        );
        vertices.sort();
        vertices.dedup();
        let world_classes = (0..vertices.len()).map(|j| vec![j]).collect();
        VertexSet {
            dim,
            vertices,
            world_classes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, j: usize) -> &Vertex {
        &self.vertices[j]
    }

    /// Worlds producing vertex `j`.
    pub fn world_class(&self, j: usize) -> &[usize] {
        &self.world_classes[j]
    }

    pub fn world_classes(&self) -> &[Vec<usize>] {
        &self.world_classes
    }

    pub fn position(&self, v: &Vertex) -> Option<usize> {
        self.vertices.binary_search(v).ok()
    }

    /// Coordinates on which every vertex agrees, with the shared value.
    pub fn constant_coords(&self) -> Vec<Option<bool>> {
        (0..self.dim)
            .map(|i| {
                let first = self.vertices[0].get(i);
                self.vertices
                    .iter()
                    .all(|v| v.get(i) == first)
                    .then_some(first)
            })
            .collect()
    }

    /// Splits off the vertices that agree with `pinned` (coordinate, value)
    /// pairs and projects them onto the remaining coordinates.
    ///
    /// Returns the restricted set (`None` when no vertex agrees), the kept
    /// coordinates in increasing order, and for each restricted vertex its
    /// index in `self`.
    pub fn restrict(&self, pinned: &[(usize, bool)]) -> (Option<VertexSet>, Vec<usize>, Vec<usize>) {
        let free: Vec<usize> = (0..self.dim)
            .filter(|i| !pinned.iter().any(|&(p, _)| p == *i))
            .collect();
        let mut on_face: Vec<(Vertex, usize)> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| pinned.iter().all(|&(i, b)| v.get(i) == b))
            .map(|(j, v)| (v.select(&free), j))
            .collect();
        if on_face.is_empty() {
            return (None, free, Vec::new());
        }
        // projections of distinct face vertices stay distinct; sorting keeps
        // the canonical order
        on_face.sort();
        let origin: Vec<usize> = on_face.iter().map(|&(_, j)| j).collect();
        let world_classes = origin.iter().map(|&j| self.world_classes[j].clone()).collect();
        let sub = VertexSet {
            dim: free.len(),
            vertices: on_face.into_iter().map(|(v, _)| v).collect(),
            world_classes,
        };
        (Some(sub), free, origin)
    }

    /// Convex combination `sum_j weights[j] * v_j`.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.len());
        let mut point = vec![0.0; self.dim];
        for (v, &w) in self.vertices.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (i, p) in point.iter_mut().enumerate() {
                if v.get(i) {
                    *p += w;
                }
            }
        }
        point
    }

    /// Uniform average of the listed vertices.
    pub fn mean_of(&self, indices: &[usize]) -> Vec<f64> {
        let mut weights = vec![0.0; self.len()];
        let share = 1.0 / indices.len() as f64;
        for &j in indices {
            weights[j] += share;
        }
        self.combine(&weights)
    }
}

/// Groups worlds by their indicator vector.
pub fn build_vertex_set(system: &EventSystem) -> VertexSet {
    let mut classes: BTreeMap<&Vertex, Vec<usize>> = BTreeMap::new();
    for w in 0..system.num_worlds() {
        classes.entry(system.row(w)).or_default().push(w);
    }
    let (vertices, world_classes) = classes
        .into_iter()
        .map(|(v, worlds)| (v.clone(), worlds))
        .unzip();
    VertexSet {
        dim: system.num_events(),
        vertices,
        world_classes,
    }
}

/// The atom partition: nonempty Venn regions, in canonical vertex order.
pub fn atoms(system: &EventSystem) -> Vec<Vec<usize>> {
    build_vertex_set(system).world_classes
}
