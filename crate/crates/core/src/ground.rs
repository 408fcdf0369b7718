//! Phoneme-probability observations: the contract between a video-side
//! phonologizer and the symbolic inference layers.
//!
//! An observation carries, for one video window, a probability distribution
//! over phoneme values for each phonological feature type. Observations are
//! loaded from files (the pose network that would produce them lives outside
//! this crate) or synthesized from a sign's ground-truth annotations.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::kg::{EntityId, KnowledgeGraph, Namespace, RelType};

/// Tolerance for distribution normalization checks.
pub const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GroundError {
    #[error("graph has no phonological relations")]
    NoPhonology,
    #[error("unknown feature type {0:?}")]
    UnknownFeatureType(String),
    #[error("phoneme {0:?} is not a value of feature type {1:?}")]
    UnknownPhoneme(String, String),
    #[error("feature type {0:?}: probabilities sum to {1}, expected 1 within 1e-6")]
    NotNormalized(String, f64),
    #[error("feature type {0:?}: probability {1} outside [0, 1]")]
    BadProbability(String, f64),
    #[error("observation is missing a distribution for feature type {0:?}")]
    MissingFeatureType(String),
    #[error("sign {0} has no phonological facts")]
    NoAnnotations(EntityId),
    #[error("sign {0} uses phoneme {1} absent from the schema")]
    ValueOutsideSchema(EntityId, EntityId),
    #[error("duplicate window id {0:?}")]
    DuplicateWindow(String),
    #[error("observation schema does not match")]
    SchemaMismatch,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The graph's phonological structure: feature types (one per phonological
/// relation, sorted by name) and each type's sorted phoneme value vocabulary.
#[derive(Debug, PartialEq)]
pub struct PhonologySchema {
    feature_types: Vec<String>,
    values: Vec<Vec<EntityId>>,
    value_idx: Vec<HashMap<EntityId, usize>>,
    phonemes: Vec<EntityId>,
    phoneme_idx: HashMap<EntityId, usize>,
}

impl PhonologySchema {
    pub fn from_graph(graph: &KnowledgeGraph) -> Result<Arc<Self>, GroundError> {
        let mut types: Vec<String> = graph
            .relations()
            .filter(|r| r.rel_type == RelType::Phonological)
            .map(|r| r.name.clone())
            .collect();
        types.sort();
        if types.is_empty() {
            return Err(GroundError::NoPhonology);
        }
        let mut values: Vec<Vec<EntityId>> = vec![Vec::new(); types.len()];
        for f in graph.facts_of_type(RelType::Phonological) {
            let ti = types.binary_search(&f.relation.name).unwrap();
            if !values[ti].contains(&f.tail) {
                values[ti].push(f.tail.clone());
            }
        }
        for v in &mut values {
            v.sort();
        }
        let value_idx = values
            .iter()
            .map(|vs| vs.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect())
            .collect();
        let mut phonemes: Vec<EntityId> = values.iter().flatten().cloned().collect();
        phonemes.sort();
        phonemes.dedup();
        let phoneme_idx = phonemes
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        Ok(Arc::new(PhonologySchema {
            feature_types: types,
            values,
            value_idx,
            phonemes,
            phoneme_idx,
        }))
    }

    pub fn feature_types(&self) -> &[String] {
        &self.feature_types
    }

    pub fn n_types(&self) -> usize {
        self.feature_types.len()
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.feature_types.binary_search_by(|t| t.as_str().cmp(name)).ok()
    }

    /// Sorted value vocabulary of one feature type.
    pub fn values(&self, type_idx: usize) -> &[EntityId] {
        &self.values[type_idx]
    }

    pub fn value_index(&self, type_idx: usize, phoneme: &EntityId) -> Option<usize> {
        self.value_idx[type_idx].get(phoneme).copied()
    }

    /// Union census of phoneme entities across all feature types.
    pub fn phonemes(&self) -> &[EntityId] {
        &self.phonemes
    }

    pub fn phoneme_index(&self, phoneme: &EntityId) -> Option<usize> {
        self.phoneme_idx.get(phoneme).copied()
    }

    /// The sign's annotated value indices per feature type, sorted; empty
    /// where the sign is unannotated.
    pub fn gold_values(
        &self,
        graph: &KnowledgeGraph,
        sign: &EntityId,
    ) -> Result<Vec<Vec<usize>>, GroundError> {
        let mut gold: Vec<Vec<usize>> = vec![Vec::new(); self.n_types()];
        let mut any = false;
        for f in graph.facts_from(sign, Some(RelType::Phonological)) {
            let Some(ti) = self.type_index(&f.relation.name) else {
                continue;
            };
            let vi = self
                .value_index(ti, &f.tail)
                .ok_or_else(|| GroundError::ValueOutsideSchema(sign.clone(), f.tail.clone()))?;
            if !gold[ti].contains(&vi) {
                gold[ti].push(vi);
                any = true;
            }
        }
        if !any {
            return Err(GroundError::NoAnnotations(sign.clone()));
        }
        for g in &mut gold {
            g.sort_unstable();
        }
        Ok(gold)
    }
}

/// Per-feature-type phoneme probability distributions for one video window.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeObservation {
    schema: Arc<PhonologySchema>,
    pub window_id: String,
    /// `dists[type][value]`, aligned to the schema's sorted vocabularies.
    dists: Vec<Vec<f64>>,
}

impl PhonemeObservation {
    /// Builds an observation from dense per-type distributions, validating
    /// ranges and normalization.
    pub fn new(
        schema: Arc<PhonologySchema>,
        window_id: impl Into<String>,
        dists: Vec<Vec<f64>>,
    ) -> Result<Self, GroundError> {
        if dists.len() != schema.n_types() {
            return Err(GroundError::MissingFeatureType(
                schema
                    .feature_types
                    .get(dists.len())
                    .cloned()
                    .unwrap_or_default(),
            ));
        }
        for (ti, d) in dists.iter().enumerate() {
            let name = &schema.feature_types[ti];
            if d.len() != schema.values[ti].len() {
                return Err(GroundError::MissingFeatureType(name.clone()));
            }
            let mut sum = 0.0;
            for &p in d {
                if !(0.0..=1.0).contains(&p) {
                    return Err(GroundError::BadProbability(name.clone(), p));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(GroundError::NotNormalized(name.clone(), sum));
            }
        }
        Ok(PhonemeObservation {
            schema,
            window_id: window_id.into(),
            dists,
        })
    }

    pub fn schema(&self) -> &Arc<PhonologySchema> {
        &self.schema
    }

    /// Checks this observation was built against (an equal copy of) `schema`.
    pub fn check_schema(&self, schema: &PhonologySchema) -> Result<(), GroundError> {
        if std::ptr::eq(self.schema.as_ref(), schema) || self.schema.as_ref() == schema {
            Ok(())
        } else {
            Err(GroundError::SchemaMismatch)
        }
    }

    pub fn prob(&self, type_idx: usize, value_idx: usize) -> f64 {
        self.dists[type_idx][value_idx]
    }

    pub fn dist(&self, type_idx: usize) -> &[f64] {
        &self.dists[type_idx]
    }

    /// Index of the most probable value for a feature type (first maximum).
    pub fn argmax(&self, type_idx: usize) -> usize {
        let d = &self.dists[type_idx];
        let mut best = 0;
        for (i, &p) in d.iter().enumerate() {
            if p > d[best] {
                best = i;
            }
        }
        best
    }
}

/// The ground-truth observation for a sign: probability one on each annotated
/// value (split evenly when a type carries several annotations) and uniform
/// over the vocabulary for unannotated types.
pub fn one_hot_from_gold(
    graph: &KnowledgeGraph,
    schema: &Arc<PhonologySchema>,
    sign: &EntityId,
) -> Result<PhonemeObservation, GroundError> {
    let gold = schema.gold_values(graph, sign)?;
    let mut dists = Vec::with_capacity(schema.n_types());
    for (ti, annotated) in gold.iter().enumerate() {
        let n = schema.values[ti].len();
        let mut d = vec![0.0; n];
        if annotated.is_empty() {
            d.iter_mut().for_each(|p| *p = 1.0 / n as f64);
        } else {
            let share = 1.0 / annotated.len() as f64;
            for &vi in annotated {
                d[vi] = share;
            }
        }
        dists.push(d);
    }
    PhonemeObservation::new(schema.clone(), format!("gold:{}", sign.label), dists)
}

/// An ordered collection of observations with unique window ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub observations: Vec<PhonemeObservation>,
    pub provenance: String,
}

impl ObservationSet {
    pub fn new(
        observations: Vec<PhonemeObservation>,
        provenance: impl Into<String>,
    ) -> Result<Self, GroundError> {
        let mut seen = std::collections::HashSet::new();
        for o in &observations {
            if !seen.insert(o.window_id.clone()) {
                return Err(GroundError::DuplicateWindow(o.window_id.clone()));
            }
        }
        Ok(ObservationSet {
            observations,
            provenance: provenance.into(),
        })
    }

    pub fn get(&self, window_id: &str) -> Option<&PhonemeObservation> {
        self.observations.iter().find(|o| o.window_id == window_id)
    }
}

/// Formats with at most 9 significant digits, trimming trailing zeros.
pub(crate) fn format_prob(p: f64) -> String {
    let mut s = format!("{p:.9}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Writes the line-oriented observation format:
///
/// ```text
/// window w0
/// dist handshape V:0.9 B:0.1
/// dist location head:1
/// ```
pub fn write_observations<W: Write>(w: &mut W, set: &ObservationSet) -> Result<(), GroundError> {
    for obs in &set.observations {
        writeln!(w, "window {}", obs.window_id)?;
        let schema = obs.schema();
        for (ti, name) in schema.feature_types().iter().enumerate() {
            write!(w, "dist {name}")?;
            for (vi, value) in schema.values(ti).iter().enumerate() {
                let p = obs.prob(ti, vi);
                if p > 0.0 {
                    write!(w, " {}:{}", value.label, format_prob(p))?;
                }
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn save_observations(path: &Path, set: &ObservationSet) -> Result<(), GroundError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_observations(&mut w, set)
}

/// Parses and validates an observation file against the graph's schema.
/// Unknown phonemes and non-normalized distributions are reported with their
/// line number.
pub fn read_observations<R: Read>(
    r: R,
    schema: &Arc<PhonologySchema>,
    provenance: impl Into<String>,
) -> Result<ObservationSet, GroundError> {
    let mut observations = Vec::new();
    let mut current: Option<(String, Vec<Option<Vec<f64>>>, usize)> = None;
    let mut finish = |cur: Option<(String, Vec<Option<Vec<f64>>>, usize)>,
                      observations: &mut Vec<PhonemeObservation>|
     -> Result<(), GroundError> {
        if let Some((id, dists, line)) = cur {
            let mut dense = Vec::with_capacity(dists.len());
            for (ti, d) in dists.into_iter().enumerate() {
                let d = d.ok_or_else(|| GroundError::Parse {
                    line,
                    message: format!(
                        "window is missing feature type {:?}",
                        schema.feature_types()[ti]
                    ),
                })?;
                dense.push(d);
            }
            observations.push(PhonemeObservation::new(schema.clone(), id, dense)?);
        }
        Ok(())
    };

    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(id) = line.strip_prefix("window ") {
            finish(current.take(), &mut observations)?;
            current = Some((id.trim().to_string(), vec![None; schema.n_types()], lineno));
            continue;
        }
        let Some(rest) = line.strip_prefix("dist ") else {
            return Err(GroundError::Parse {
                line: lineno,
                message: format!("expected `window` or `dist`, got {line:?}"),
            });
        };
        let Some((_, dists, _)) = current.as_mut() else {
            return Err(GroundError::Parse {
                line: lineno,
                message: "dist before any window".into(),
            });
        };
        let mut parts = rest.split_whitespace();
        let type_name = parts.next().ok_or_else(|| GroundError::Parse {
            line: lineno,
            message: "dist needs a feature type".into(),
        })?;
        let ti = schema.type_index(type_name).ok_or_else(|| GroundError::Parse {
            line: lineno,
            message: GroundError::UnknownFeatureType(type_name.to_string()).to_string(),
        })?;
        let mut d = vec![0.0; schema.values(ti).len()];
        for pair in parts {
            let (label, p) = pair.rsplit_once(':').ok_or_else(|| GroundError::Parse {
                line: lineno,
                message: format!("expected `phoneme:p`, got {pair:?}"),
            })?;
            let phoneme = EntityId::new(Namespace::Phoneme, label).map_err(|e| GroundError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let vi = schema.value_index(ti, &phoneme).ok_or_else(|| GroundError::Parse {
                line: lineno,
                message: GroundError::UnknownPhoneme(label.to_string(), type_name.to_string())
                    .to_string(),
            })?;
            let p: f64 = p.parse().map_err(|_| GroundError::Parse {
                line: lineno,
                message: format!("bad probability {p:?}"),
            })?;
            d[vi] = p;
        }
        let sum: f64 = d.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(GroundError::Parse {
                line: lineno,
                message: GroundError::NotNormalized(type_name.to_string(), sum).to_string(),
            });
        }
        dists[ti] = Some(d);
    }
    finish(current.take(), &mut observations)?;
    ObservationSet::new(observations, provenance)
}

pub fn load_observations(
    path: &Path,
    schema: &Arc<PhonologySchema>,
) -> Result<ObservationSet, GroundError> {
    read_observations(File::open(path)?, schema, path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Fact, GraphBuilder, RelationId};

    pub(crate) fn toy_graph() -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        let signs = [
            ("read", &[("handshape", "V"), ("location", "head"), ("movement", "arc")][..]),
            ("book", &[("handshape", "B"), ("location", "chest"), ("movement", "open")][..]),
            ("nervous", &[("handshape", "claw"), ("location", "chest")][..]),
        ];
        for (sign, ann) in signs {
            for (t, v) in ann {
                b.add_fact(Fact::new(
                    EntityId::asl(sign).unwrap(),
                    RelationId::new(t, RelType::Phonological).unwrap(),
                    EntityId::phoneme(*v).unwrap(),
                    "test",
                ))
                .unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn schema_sorted_and_complete() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        assert_eq!(s.feature_types(), &["handshape", "location", "movement"]);
        assert_eq!(s.values(0).len(), 3); // B, V, claw
        assert_eq!(s.values(1).len(), 2); // chest, head
        assert_eq!(s.phonemes().len(), 7);
    }

    #[test]
    fn schema_requires_phonology() {
        let g = KnowledgeGraph::default();
        assert!(matches!(
            PhonologySchema::from_graph(&g),
            Err(GroundError::NoPhonology)
        ));
    }

    #[test]
    fn one_hot_matches_annotation() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let obs = one_hot_from_gold(&g, &s, &EntityId::asl("read").unwrap()).unwrap();
        let hs = s.type_index("handshape").unwrap();
        let v = s.value_index(hs, &EntityId::phoneme("V").unwrap()).unwrap();
        assert_eq!(obs.prob(hs, v), 1.0);
        assert_eq!(obs.argmax(hs), v);
    }

    #[test]
    fn one_hot_uniform_for_missing_type() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        // `nervous` has no movement annotation; movement has 2 values.
        let obs = one_hot_from_gold(&g, &s, &EntityId::asl("nervous").unwrap()).unwrap();
        let mv = s.type_index("movement").unwrap();
        assert_eq!(obs.dist(mv), &[0.5, 0.5]);
    }

    #[test]
    fn one_hot_deterministic() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let sign = EntityId::asl("book").unwrap();
        assert_eq!(
            one_hot_from_gold(&g, &s, &sign).unwrap(),
            one_hot_from_gold(&g, &s, &sign).unwrap()
        );
    }

    #[test]
    fn unannotated_sign_errors() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let sign = EntityId::asl("ghost").unwrap();
        assert!(matches!(
            one_hot_from_gold(&g, &s, &sign),
            Err(GroundError::NoAnnotations(_))
        ));
    }

    #[test]
    fn non_normalized_rejected() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let text = "window w0\ndist handshape V:0.9\ndist location head:1\ndist movement arc:1\n";
        let err = read_observations(text.as_bytes(), &s, "test").unwrap_err();
        match err {
            GroundError::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("0.9"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_phoneme_rejected_with_line() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let text = "window w0\ndist handshape XX:1\n";
        match read_observations(text.as_bytes(), &s, "test").unwrap_err() {
            GroundError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn file_order_preserved_and_round_trip() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let text = "\
window w2
dist handshape V:0.5 B:0.5
dist location head:1
dist movement arc:0.25 open:0.75
window w0
dist handshape claw:1
dist location chest:1
dist movement open:1
window w1
dist handshape B:1
dist location head:0.125 chest:0.875
dist movement arc:1
";
        let set = read_observations(text.as_bytes(), &s, "test").unwrap();
        let ids: Vec<&str> = set.observations.iter().map(|o| o.window_id.as_str()).collect();
        assert_eq!(ids, ["w2", "w0", "w1"]);

        let mut buf = Vec::new();
        write_observations(&mut buf, &set).unwrap();
        let set2 = read_observations(&buf[..], &s, "test").unwrap();
        assert_eq!(set.observations, set2.observations);
        let mut buf2 = Vec::new();
        write_observations(&mut buf2, &set2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn duplicate_window_rejected() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        let one = "window w0\ndist handshape V:1\ndist location head:1\ndist movement arc:1\n";
        let text = format!("{one}{one}");
        assert!(matches!(
            read_observations(text.as_bytes(), &s, "test"),
            Err(GroundError::DuplicateWindow(_))
        ));
    }

    #[test]
    fn gold_observation_satisfies_invariants() {
        let g = toy_graph();
        let s = PhonologySchema::from_graph(&g).unwrap();
        for sign in ["read", "book", "nervous"] {
            let obs = one_hot_from_gold(&g, &s, &EntityId::asl(sign).unwrap()).unwrap();
            for ti in 0..s.n_types() {
                let sum: f64 = obs.dist(ti).iter().sum();
                assert!((sum - 1.0).abs() <= SUM_TOLERANCE);
            }
        }
    }
}
