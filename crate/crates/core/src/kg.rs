//! Typed triple store for a sign lexicon.
//!
//! Entities live in namespaces (signs, English words, phonemes, semantic
//! features, video examples, numeric literals) and facts are
//! `(head, relation, tail)` triples labeled with a source dataset. Relations
//! are partitioned by the kind of knowledge they convey, which induces a
//! partition of the fact set. Construction goes through [`GraphBuilder`];
//! a built [`KnowledgeGraph`] is immutable and safe to share across readers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub mod io;

/// Number of sign folds (cross-validation over signs, for unseen-sign tasks).
pub const SIGN_FOLD_COUNT: u8 = 10;
/// Number of instance folds (cross-validation over video examples).
pub const INSTANCE_FOLD_COUNT: u8 = 5;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("entity label must be non-empty (namespace {0})")]
    EmptyLabel(Namespace),
    #[error("literal entity {0:?} does not parse as a plain decimal number")]
    BadLiteral(String),
    #[error("relation name must be non-empty")]
    EmptyRelationName,
    #[error("relation {name:?} already registered with type {existing}, got {new}")]
    RelationTypeConflict {
        name: String,
        existing: RelType,
        new: RelType,
    },
    #[error("fact head may not be a literal: {0}")]
    LiteralHead(EntityId),
    #[error("{rel_type} relation {name:?} does not admit tail {tail}")]
    TailNamespace {
        rel_type: RelType,
        name: String,
        tail: EntityId,
    },
    #[error("namespace {0} has no entities")]
    EmptyNamespace(Namespace),
    #[error("degree statistics are defined for the asl and en namespaces, not {0}")]
    NotALanguage(Namespace),
    #[error("video entity {0} is not linked to any sign")]
    OrphanVideo(EntityId),
    #[error("video entity {0} is linked to more than one sign")]
    AmbiguousVideo(EntityId),
    #[error("unknown namespace prefix {0:?}")]
    UnknownNamespace(String),
    #[error("entity {0:?} is missing a namespace prefix")]
    MissingNamespace(String),
    #[error("unknown relation type {0:?}")]
    UnknownRelType(String),
    #[error("fold index {got} out of range for {kind} folds ({max} folds)")]
    FoldOutOfRange { kind: String, got: u8, max: u8 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Namespaces an entity can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Asl,
    En,
    Phoneme,
    SemFeat,
    Video,
    Literal,
}

impl Namespace {
    pub const ALL: [Namespace; 6] = [
        Namespace::Asl,
        Namespace::En,
        Namespace::Phoneme,
        Namespace::SemFeat,
        Namespace::Video,
        Namespace::Literal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Asl => "asl",
            Namespace::En => "en",
            Namespace::Phoneme => "phoneme",
            Namespace::SemFeat => "semfeat",
            Namespace::Video => "video",
            Namespace::Literal => "lit",
        }
    }

    pub fn parse(s: &str) -> Result<Self, KgError> {
        match s {
            "asl" => Ok(Namespace::Asl),
            "en" => Ok(Namespace::En),
            "phoneme" => Ok(Namespace::Phoneme),
            "semfeat" => Ok(Namespace::SemFeat),
            "video" => Ok(Namespace::Video),
            "lit" => Ok(Namespace::Literal),
            other => Err(KgError::UnknownNamespace(other.to_string())),
        }
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The kind of knowledge a relation conveys about its subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelType {
    Phonetic,
    Phonological,
    Morphological,
    Syntactic,
    Semantic,
    Translation,
    Systematicity,
    Statistical,
    Cognitive,
    Meta,
}

impl RelType {
    pub const ALL: [RelType; 10] = [
        RelType::Phonetic,
        RelType::Phonological,
        RelType::Morphological,
        RelType::Syntactic,
        RelType::Semantic,
        RelType::Translation,
        RelType::Systematicity,
        RelType::Statistical,
        RelType::Cognitive,
        RelType::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelType::Phonetic => "phonetic",
            RelType::Phonological => "phonological",
            RelType::Morphological => "morphological",
            RelType::Syntactic => "syntactic",
            RelType::Semantic => "semantic",
            RelType::Translation => "translation",
            RelType::Systematicity => "systematicity",
            RelType::Statistical => "statistical",
            RelType::Cognitive => "cognitive",
            RelType::Meta => "meta",
        }
    }

    pub fn parse(s: &str) -> Result<Self, KgError> {
        RelType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| KgError::UnknownRelType(s.to_string()))
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A namespaced entity identifier. `(namespace, label)` pairs are globally
/// unique; literal-namespace entities carry a numeric value parsed from the
/// label (see [`KnowledgeGraph::numeric_value`]).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    pub namespace: Namespace,
    pub label: String,
}

impl EntityId {
    pub fn new(namespace: Namespace, label: impl Into<String>) -> Result<Self, KgError> {
        let label = label.into();
        if label.is_empty() {
            return Err(KgError::EmptyLabel(namespace));
        }
        if namespace == Namespace::Literal && parse_numeric(&label).is_none() {
            return Err(KgError::BadLiteral(label));
        }
        Ok(EntityId { namespace, label })
    }

    pub fn asl(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::Asl, label)
    }

    pub fn en(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::En, label)
    }

    pub fn phoneme(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::Phoneme, label)
    }

    pub fn semfeat(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::SemFeat, label)
    }

    pub fn video(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::Video, label)
    }

    /// A literal entity with the canonical decimal label for `value`.
    pub fn literal(value: f64) -> Self {
        EntityId {
            namespace: Namespace::Literal,
            label: format_numeric(value),
        }
    }

    /// A literal entity that keeps the source text as its label.
    pub fn literal_text(label: impl Into<String>) -> Result<Self, KgError> {
        EntityId::new(Namespace::Literal, label)
    }

    /// Parses `namespace:label`, e.g. `asl:read` or `lit:4.053`.
    pub fn parse(s: &str) -> Result<Self, KgError> {
        let (ns, label) = s
            .split_once(':')
            .ok_or_else(|| KgError::MissingNamespace(s.to_string()))?;
        EntityId::new(Namespace::parse(ns)?, label)
    }

    pub fn is_literal(&self) -> bool {
        self.namespace == Namespace::Literal
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.namespace, self.label)
    }
}

/// A relation identifier. Names are normalized to lowercase with underscores;
/// every relation has exactly one [`RelType`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId {
    pub name: String,
    pub rel_type: RelType,
}

impl RelationId {
    pub fn new(name: &str, rel_type: RelType) -> Result<Self, KgError> {
        let name = normalize_relation_name(name);
        if name.is_empty() {
            return Err(KgError::EmptyRelationName);
        }
        Ok(RelationId { name, rel_type })
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lowercases and replaces spaces, dashes, and dots with underscores.
pub fn normalize_relation_name(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| match c {
            ' ' | '-' | '.' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

/// One `(head, relation, tail)` triple with its source dataset label.
/// Fact identity is the triple; sources of duplicate insertions are merged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
    pub source: String,
}

impl Fact {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId, source: impl Into<String>) -> Self {
        Fact {
            head,
            relation,
            tail,
            source: source.into(),
        }
    }

    pub fn rel_type(&self) -> RelType {
        self.relation.rel_type
    }
}

/// Accepts plain integers and decimals (optional sign), plus `NaN`/`nan`.
/// Scientific notation is rejected.
pub fn parse_numeric(s: &str) -> Option<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    let body = t.strip_prefix('-').unwrap_or(t);
    if body.is_empty() {
        return None;
    }
    let mut parts = body.splitn(2, '.');
    let int_part = parts.next().unwrap_or("");
    let frac_part = parts.next();
    let digits_ok = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    let ok = match frac_part {
        Some(frac) => {
            (digits_ok(int_part) || int_part.is_empty()) && digits_ok(frac) && !(int_part.is_empty())
                || (digits_ok(int_part) && digits_ok(frac))
        }
        None => digits_ok(int_part),
    };
    if !ok {
        return None;
    }
    t.parse::<f64>().ok()
}

/// Canonical decimal form: no trailing zeros, no exponent (`1.500` -> `1.5`,
/// `4.0` -> `4`).
pub fn format_numeric(value: f64) -> String {
    if value.is_nan() {
        "NaN".to_string()
    } else {
        format!("{value}")
    }
}

/// In/out-degree statistics over one lexical namespace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub avg_in: f64,
    pub sd_in: f64,
    pub avg_out: f64,
    pub sd_out: f64,
}

/// Fold assignments produced by [`KnowledgeGraph::assign_folds`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FoldMaps {
    /// asl sign -> fold index in `[0, SIGN_FOLD_COUNT)`.
    pub sign_folds: BTreeMap<EntityId, u8>,
    /// video example -> fold index in `[0, INSTANCE_FOLD_COUNT)`.
    pub instance_folds: BTreeMap<EntityId, u8>,
}

#[derive(Debug, Clone, PartialEq)]
struct EntityRecord {
    id: EntityId,
    numeric: Option<f64>,
}

/// An immutable-after-build knowledge graph.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    entities: Vec<EntityRecord>,
    entity_idx: HashMap<EntityId, usize>,
    relations: Vec<RelationId>,
    relation_idx: HashMap<String, usize>,
    facts: Vec<Fact>,
    fact_idx: HashMap<(usize, usize, usize), usize>,
    sign_folds: BTreeMap<EntityId, u8>,
    instance_folds: BTreeMap<EntityId, u8>,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.relations == other.relations
            && self.facts == other.facts
            && self.sign_folds == other.sign_folds
            && self.instance_folds == other.instance_folds
    }
}

/// Single-writer construction handle; [`GraphBuilder::build`] freezes the graph.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    graph: KnowledgeGraph,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a fact, auto-registering its entities and relation.
    ///
    /// Returns `Ok(true)` on a fresh insert. Re-inserting an existing triple
    /// is a silent no-op (`Ok(false)`); if the duplicate names a new source,
    /// the stored fact's source becomes the comma-joined sorted source list.
    pub fn add_fact(&mut self, fact: Fact) -> Result<bool, KgError> {
        let g = &mut self.graph;
        if fact.head.is_literal() {
            return Err(KgError::LiteralHead(fact.head));
        }
        check_tail_domain(&fact)?;

        let rel = match g.relation_idx.get(&fact.relation.name) {
            Some(&i) => {
                let existing = g.relations[i].rel_type;
                if existing != fact.relation.rel_type {
                    return Err(KgError::RelationTypeConflict {
                        name: fact.relation.name.clone(),
                        existing,
                        new: fact.relation.rel_type,
                    });
                }
                i
            }
            None => {
                g.relations.push(fact.relation.clone());
                g.relation_idx
                    .insert(fact.relation.name.clone(), g.relations.len() - 1);
                g.relations.len() - 1
            }
        };
        let head = register_entity(g, &fact.head)?;
        let tail = register_entity(g, &fact.tail)?;

        match g.fact_idx.get(&(head, rel, tail)) {
            Some(&pos) => {
                let existing = &mut g.facts[pos];
                if existing.source != fact.source {
                    existing.source = merge_sources(&existing.source, &fact.source);
                }
                Ok(false)
            }
            None => {
                g.fact_idx.insert((head, rel, tail), g.facts.len());
                g.facts.push(fact);
                Ok(true)
            }
        }
    }

    pub fn add_all<I: IntoIterator<Item = Fact>>(&mut self, facts: I) -> Result<(), KgError> {
        for f in facts {
            self.add_fact(f)?;
        }
        Ok(())
    }

    pub fn build(self) -> KnowledgeGraph {
        self.graph
    }
}

fn register_entity(g: &mut KnowledgeGraph, id: &EntityId) -> Result<usize, KgError> {
    if id.label.is_empty() {
        return Err(KgError::EmptyLabel(id.namespace));
    }
    if let Some(&i) = g.entity_idx.get(id) {
        return Ok(i);
    }
    let numeric = if id.is_literal() {
        Some(parse_numeric(&id.label).ok_or_else(|| KgError::BadLiteral(id.label.clone()))?)
    } else {
        None
    };
    g.entities.push(EntityRecord {
        id: id.clone(),
        numeric,
    });
    g.entity_idx.insert(id.clone(), g.entities.len() - 1);
    Ok(g.entities.len() - 1)
}

/// Domain rule: phonological tails are phonemes, translation tails are
/// English words; every other relation type admits any tail (literal tails
/// in particular carry numeric knowledge for statistical, phonetic,
/// cognitive, and norm-style semantic relations).
fn check_tail_domain(fact: &Fact) -> Result<(), KgError> {
    let ok = match fact.relation.rel_type {
        RelType::Phonological => fact.tail.namespace == Namespace::Phoneme,
        RelType::Translation => fact.tail.namespace == Namespace::En,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(KgError::TailNamespace {
            rel_type: fact.relation.rel_type,
            name: fact.relation.name.clone(),
            tail: fact.tail.clone(),
        })
    }
}

fn merge_sources(a: &str, b: &str) -> String {
    let set: BTreeSet<&str> = a.split(',').chain(b.split(',')).filter(|s| !s.is_empty()).collect();
    set.into_iter().collect::<Vec<_>>().join(",")
}

impl KnowledgeGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityId> {
        self.entities.iter().map(|e| &e.id)
    }

    /// Entities of one namespace, in insertion order.
    pub fn entities_in(&self, ns: Namespace) -> impl Iterator<Item = &EntityId> {
        self.entities
            .iter()
            .filter(move |e| e.id.namespace == ns)
            .map(|e| &e.id)
    }

    /// Entities of one namespace, sorted by label.
    pub fn sorted_entities_in(&self, ns: Namespace) -> Vec<EntityId> {
        let mut v: Vec<EntityId> = self.entities_in(ns).cloned().collect();
        v.sort();
        v
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationId> {
        self.relations.iter()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn contains_entity(&self, id: &EntityId) -> bool {
        self.entity_idx.contains_key(id)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationId> {
        self.relation_idx.get(name).map(|&i| &self.relations[i])
    }

    pub fn contains_fact(&self, head: &EntityId, relation: &str, tail: &EntityId) -> bool {
        let (Some(&h), Some(&r), Some(&t)) = (
            self.entity_idx.get(head),
            self.relation_idx.get(relation),
            self.entity_idx.get(tail),
        ) else {
            return false;
        };
        self.fact_idx.contains_key(&(h, r, t))
    }

    /// The parsed value of a literal entity, `None` for all other namespaces.
    pub fn numeric_value(&self, id: &EntityId) -> Option<f64> {
        self.entity_idx
            .get(id)
            .and_then(|&i| self.entities[i].numeric)
    }

    /// The typed fact partition `F_t`.
    pub fn facts_of_type(&self, t: RelType) -> Vec<&Fact> {
        self.facts.iter().filter(|f| f.rel_type() == t).collect()
    }

    /// Facts about one head entity, optionally filtered by relation type.
    pub fn facts_from(&self, head: &EntityId, t: Option<RelType>) -> Vec<&Fact> {
        self.facts
            .iter()
            .filter(|f| &f.head == head && t.map_or(true, |t| f.rel_type() == t))
            .collect()
    }

    /// In/out-degree statistics for a lexical namespace (`asl` or `en`).
    /// Facts touching video example entities are not counted.
    pub fn degree_stats(&self, ns: Namespace) -> Result<DegreeStats, KgError> {
        if ns != Namespace::Asl && ns != Namespace::En {
            return Err(KgError::NotALanguage(ns));
        }
        let members: Vec<usize> = (0..self.entities.len())
            .filter(|&i| self.entities[i].id.namespace == ns)
            .collect();
        if members.is_empty() {
            return Err(KgError::EmptyNamespace(ns));
        }
        let mut in_deg: HashMap<usize, f64> = HashMap::new();
        let mut out_deg: HashMap<usize, f64> = HashMap::new();
        for f in &self.facts {
            if f.head.namespace == Namespace::Video || f.tail.namespace == Namespace::Video {
                continue;
            }
            if f.head.namespace == ns {
                *out_deg.entry(self.entity_idx[&f.head]).or_default() += 1.0;
            }
            if f.tail.namespace == ns {
                *in_deg.entry(self.entity_idx[&f.tail]).or_default() += 1.0;
            }
        }
        let collect = |deg: &HashMap<usize, f64>| -> (f64, f64) {
            let n = members.len() as f64;
            let mean = members.iter().map(|i| deg.get(i).copied().unwrap_or(0.0)).sum::<f64>() / n;
            let var = members
                .iter()
                .map(|i| {
                    let d = deg.get(i).copied().unwrap_or(0.0) - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            (mean, var.sqrt())
        };
        let (avg_in, sd_in) = collect(&in_deg);
        let (avg_out, sd_out) = collect(&out_deg);
        Ok(DegreeStats {
            avg_in,
            sd_in,
            avg_out,
            sd_out,
        })
    }

    /// The unique sign linked to each video example entity.
    ///
    /// A link is any fact with the video on one side and an asl entity on the
    /// other. Videos with no link or with links to several distinct signs are
    /// errors.
    pub fn video_sign_links(&self) -> Result<BTreeMap<EntityId, EntityId>, KgError> {
        let mut links: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for v in self.entities_in(Namespace::Video) {
            links.insert(v.clone(), BTreeSet::new());
        }
        for f in &self.facts {
            if f.head.namespace == Namespace::Video && f.tail.namespace == Namespace::Asl {
                links.get_mut(&f.head).unwrap().insert(f.tail.clone());
            }
            if f.tail.namespace == Namespace::Video && f.head.namespace == Namespace::Asl {
                links.get_mut(&f.tail).unwrap().insert(f.head.clone());
            }
        }
        let mut out = BTreeMap::new();
        for (video, signs) in links {
            match signs.len() {
                0 => return Err(KgError::OrphanVideo(video)),
                1 => {
                    out.insert(video, signs.into_iter().next().unwrap());
                }
                _ => return Err(KgError::AmbiguousVideo(video)),
            }
        }
        Ok(out)
    }

    /// Deterministic fold assignment.
    ///
    /// Signs are shuffled with a seeded generator and dealt round-robin into
    /// `SIGN_FOLD_COUNT` folds (sizes balanced within one). Each sign's videos
    /// are then shuffled and dealt round-robin into `INSTANCE_FOLD_COUNT`
    /// folds starting at fold 0, so every sign is as evenly represented in
    /// each instance fold as its example count allows.
    pub fn assign_folds(&self, seed: u64) -> Result<FoldMaps, KgError> {
        let by_video = self.video_sign_links()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut signs = self.sorted_entities_in(Namespace::Asl);
        signs.shuffle(&mut rng);
        let mut maps = FoldMaps::default();
        for (i, s) in signs.iter().enumerate() {
            maps.sign_folds.insert(s.clone(), (i % SIGN_FOLD_COUNT as usize) as u8);
        }

        let mut by_sign: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
        for (video, sign) in &by_video {
            by_sign.entry(sign).or_default().push(video);
        }
        for (_, videos) in by_sign.iter_mut() {
            videos.shuffle(&mut rng);
            for (j, v) in videos.iter().enumerate() {
                maps.instance_folds
                    .insert((*v).clone(), (j % INSTANCE_FOLD_COUNT as usize) as u8);
            }
        }
        Ok(maps)
    }

    /// Returns a copy of the graph carrying the given fold maps.
    pub fn with_folds(mut self, folds: FoldMaps) -> Result<Self, KgError> {
        for (&ref _e, &f) in &folds.sign_folds {
            if f >= SIGN_FOLD_COUNT {
                return Err(KgError::FoldOutOfRange {
                    kind: "sign".into(),
                    got: f,
                    max: SIGN_FOLD_COUNT,
                });
            }
        }
        for (&ref _e, &f) in &folds.instance_folds {
            if f >= INSTANCE_FOLD_COUNT {
                return Err(KgError::FoldOutOfRange {
                    kind: "instance".into(),
                    got: f,
                    max: INSTANCE_FOLD_COUNT,
                });
            }
        }
        self.sign_folds = folds.sign_folds;
        self.instance_folds = folds.instance_folds;
        Ok(self)
    }

    pub fn sign_folds(&self) -> &BTreeMap<EntityId, u8> {
        &self.sign_folds
    }

    pub fn instance_folds(&self) -> &BTreeMap<EntityId, u8> {
        &self.instance_folds
    }

    /// Facts usable for embedding training: tail is a lexical item, phoneme,
    /// or semantic feature. Literal- and video-tailed facts are excluded.
    pub fn subgraph_for_embedding(&self) -> Vec<&Fact> {
        self.facts
            .iter()
            .filter(|f| {
                matches!(
                    f.tail.namespace,
                    Namespace::Asl | Namespace::En | Namespace::Phoneme | Namespace::SemFeat
                )
            })
            .collect()
    }

    /// A copy of the graph with the given signs and every fact touching them
    /// removed. Fold maps are filtered to the surviving entities.
    pub fn without_signs(&self, remove: &BTreeSet<EntityId>) -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for f in &self.facts {
            if remove.contains(&f.head) || remove.contains(&f.tail) {
                continue;
            }
            b.add_fact(f.clone()).expect("facts were valid in the source graph");
        }
        let mut g = b.build();
        g.sign_folds = self
            .sign_folds
            .iter()
            .filter(|(e, _)| g.contains_entity(e))
            .map(|(e, &f)| (e.clone(), f))
            .collect();
        g.instance_folds = self
            .instance_folds
            .iter()
            .filter(|(e, _)| g.contains_entity(e))
            .map(|(e, &f)| (e.clone(), f))
            .collect();
        g
    }
}
