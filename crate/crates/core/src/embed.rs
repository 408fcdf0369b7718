//! Fact-verification embeddings.
//!
//! Entities and relations get learnable vectors; a scoring function rates
//! triples so that true facts score above corrupted negatives. Training
//! minimizes the margin ranking loss with plain SGD over the lexical
//! subgraph. Two scorers are provided: translation (head + relation close to
//! tail, scored by negative L2 distance) and bilinear-diagonal (three-way
//! elementwise product).

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kg::{EntityId, Fact, KnowledgeGraph, Namespace};

/// Rejection-sampling cap for one negative draw.
const CORRUPTION_CAP: usize = 1000;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no vector for entity {0}")]
    MissingEntity(EntityId),
    #[error("no vector for relation {0:?}")]
    MissingRelation(String),
    #[error("embedding subgraph is empty")]
    EmptySubgraph,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("graph too dense to corrupt: {CORRUPTION_CAP} consecutive rejections")]
    CorruptionExhausted,
    #[error("non-finite loss at epoch {epoch} (loss {loss}); lower the learning rate")]
    Diverged { epoch: usize, loss: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Triple scoring function. Higher scores mean more plausible facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    /// `-||h + r - t||_2`
    TransE,
    /// `sum_i h_i * r_i * t_i`
    DistMult,
}

impl Scorer {
    pub fn as_str(self) -> &'static str {
        match self {
            Scorer::TransE => "transe",
            Scorer::DistMult => "distmult",
        }
    }

    pub fn parse(s: &str) -> Result<Self, EmbedError> {
        match s {
            "transe" => Ok(Scorer::TransE),
            "distmult" => Ok(Scorer::DistMult),
            other => Err(EmbedError::BadConfig(format!("unknown scorer {other:?}"))),
        }
    }

    pub fn score(self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self {
            Scorer::TransE => {
                let mut sq = 0.0;
                for i in 0..h.len() {
                    let d = h[i] + r[i] - t[i];
                    sq += d * d;
                }
                -sq.sqrt()
            }
            Scorer::DistMult => (0..h.len()).map(|i| h[i] * r[i] * t[i]).sum(),
        }
    }

    /// Analytic gradients of the score with respect to `h`, `r`, and `t`.
    pub fn grad(self, h: &[f64], r: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = h.len();
        match self {
            Scorer::TransE => {
                let mut d = vec![0.0; n];
                let mut sq = 0.0;
                for i in 0..n {
                    d[i] = h[i] + r[i] - t[i];
                    sq += d[i] * d[i];
                }
                let norm = sq.sqrt().max(1e-12);
                let gh: Vec<f64> = d.iter().map(|&x| -x / norm).collect();
                let gt: Vec<f64> = d.iter().map(|&x| x / norm).collect();
                (gh.clone(), gh, gt)
            }
            Scorer::DistMult => {
                let gh = (0..n).map(|i| r[i] * t[i]).collect();
                let gr = (0..n).map(|i| h[i] * t[i]).collect();
                let gt = (0..n).map(|i| h[i] * r[i]).collect();
                (gh, gr, gt)
            }
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Training hyperparameters. The schedule is margin ranking loss under SGD
/// for `epochs` passes over the shuffled positives.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub scorer: Scorer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            dim: 32,
            margin: 1.0,
            learning_rate: 0.01,
            negatives_per_positive: 1,
            seed: 0,
            scorer: Scorer::TransE,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), EmbedError> {
        if self.epochs == 0 {
            return Err(EmbedError::BadConfig("epochs must be >= 1".into()));
        }
        if self.margin <= 0.0 {
            return Err(EmbedError::BadConfig("margin must be > 0".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(EmbedError::BadConfig("learning rate must be > 0".into()));
        }
        if self.dim == 0 {
            return Err(EmbedError::BadConfig("dim must be >= 1".into()));
        }
        if self.negatives_per_positive == 0 {
            return Err(EmbedError::BadConfig("negatives_per_positive must be >= 1".into()));
        }
        Ok(())
    }
}

/// Learned vectors for entities and relations plus the scorer they were
/// trained under. Frozen after training; safe for concurrent readers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub dim: usize,
    pub scorer: Scorer,
    entities: Vec<EntityId>,
    entity_idx: HashMap<EntityId, usize>,
    entity_vecs: Vec<Vec<f64>>,
    relations: Vec<String>,
    relation_idx: HashMap<String, usize>,
    relation_vecs: Vec<Vec<f64>>,
}

impl EmbeddingSpace {
    fn new(
        dim: usize,
        scorer: Scorer,
        entities: Vec<EntityId>,
        entity_vecs: Vec<Vec<f64>>,
        relations: Vec<String>,
        relation_vecs: Vec<Vec<f64>>,
    ) -> Self {
        let entity_idx = entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let relation_idx = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i))
            .collect();
        EmbeddingSpace {
            dim,
            scorer,
            entities,
            entity_idx,
            entity_vecs,
            relations,
            relation_idx,
            relation_vecs,
        }
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn contains_entity(&self, e: &EntityId) -> bool {
        self.entity_idx.contains_key(e)
    }

    /// The learned vector for an entity.
    pub fn node_embedding(&self, e: &EntityId) -> Result<&[f64], EmbedError> {
        self.entity_idx
            .get(e)
            .map(|&i| self.entity_vecs[i].as_slice())
            .ok_or_else(|| EmbedError::MissingEntity(e.clone()))
    }

    pub fn relation_embedding(&self, name: &str) -> Result<&[f64], EmbedError> {
        self.relation_idx
            .get(name)
            .map(|&i| self.relation_vecs[i].as_slice())
            .ok_or_else(|| EmbedError::MissingRelation(name.to_string()))
    }

    /// Plausibility score of a fact; higher is more plausible.
    pub fn score(&self, fact: &Fact) -> Result<f64, EmbedError> {
        let h = self.node_embedding(&fact.head)?;
        let r = self.relation_embedding(&fact.relation.name)?;
        let t = self.node_embedding(&fact.tail)?;
        Ok(self.scorer.score(h, r, t))
    }

    /// Logistic squashing of the score into a probability in (0, 1).
    pub fn verify(&self, fact: &Fact) -> Result<f64, EmbedError> {
        Ok(sigmoid(self.score(fact)?))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Replaces the head or tail (coin flip) with a random entity of the same
/// namespace, resampling until the corrupted triple is absent from the graph.
pub fn sample_negative(
    graph: &KnowledgeGraph,
    fact: &Fact,
    rng: &mut ChaCha8Rng,
) -> Result<Fact, EmbedError> {
    let mut pools: HashMap<Namespace, Vec<EntityId>> = HashMap::new();
    for ns in [fact.head.namespace, fact.tail.namespace] {
        pools
            .entry(ns)
            .or_insert_with(|| graph.sorted_entities_in(ns));
    }
    corrupt(fact, &pools, |h, r, t| graph.contains_fact(h, r, t), rng)
}

fn corrupt<F>(
    fact: &Fact,
    pools: &HashMap<Namespace, Vec<EntityId>>,
    is_fact: F,
    rng: &mut ChaCha8Rng,
) -> Result<Fact, EmbedError>
where
    F: Fn(&EntityId, &str, &EntityId) -> bool,
{
    for _ in 0..CORRUPTION_CAP {
        let corrupt_head = rng.gen_bool(0.5);
        let ns = if corrupt_head {
            fact.head.namespace
        } else {
            fact.tail.namespace
        };
        let pool = &pools[&ns];
        let candidate = &pool[rng.gen_range(0..pool.len())];
        let (h, t) = if corrupt_head {
            (candidate, &fact.tail)
        } else {
            (&fact.head, candidate)
        };
        if !is_fact(h, &fact.relation.name, t) {
            let mut neg = fact.clone();
            if corrupt_head {
                neg.head = candidate.clone();
            } else {
                neg.tail = candidate.clone();
            }
            return Ok(neg);
        }
    }
    Err(EmbedError::CorruptionExhausted)
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Loss history of a training run, one entry per epoch.
#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub epoch_loss: Vec<f64>,
}

/// Trains an embedding space over [`KnowledgeGraph::subgraph_for_embedding`].
///
/// Deterministic for a fixed config: the per-component initialization is
/// uniform in `[-6/sqrt(dim), 6/sqrt(dim)]` and, under the translation
/// scorer, entity vectors are renormalized to unit length after every update
/// step they participate in.
pub fn train(graph: &KnowledgeGraph, config: &TrainConfig) -> Result<EmbeddingSpace, EmbedError> {
    Ok(train_traced(graph, config)?.0)
}

pub fn train_traced(
    graph: &KnowledgeGraph,
    config: &TrainConfig,
) -> Result<(EmbeddingSpace, TrainTrace), EmbedError> {
    config.validate()?;
    let positives: Vec<&Fact> = graph.subgraph_for_embedding();
    if positives.is_empty() {
        return Err(EmbedError::EmptySubgraph);
    }

    let mut entities: Vec<EntityId> = positives
        .iter()
        .flat_map(|f| [f.head.clone(), f.tail.clone()])
        .collect();
    entities.sort();
    entities.dedup();
    let mut relations: Vec<String> = positives.iter().map(|f| f.relation.name.clone()).collect();
    relations.sort();
    relations.dedup();
    let entity_idx: HashMap<&EntityId, usize> =
        entities.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let relation_idx: HashMap<&str, usize> = relations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();

    let mut pools: HashMap<Namespace, Vec<EntityId>> = HashMap::new();
    for e in &entities {
        pools.entry(e.namespace).or_default().push(e.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 6.0 / (config.dim as f64).sqrt();
    let mut init = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..config.dim).map(|_| rng.gen_range(-bound..bound)).collect()
    };
    let mut entity_vecs: Vec<Vec<f64>> = (0..entities.len()).map(|_| init(&mut rng)).collect();
    let mut relation_vecs: Vec<Vec<f64>> = (0..relations.len()).map(|_| init(&mut rng)).collect();
    if config.scorer == Scorer::TransE {
        entity_vecs.iter_mut().for_each(|v| l2_normalize(v));
    }

    let mut order: Vec<usize> = (0..positives.len()).collect();
    let mut trace = TrainTrace::default();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &pi in &order {
            let pos = positives[pi];
            for _ in 0..config.negatives_per_positive {
                let neg = corrupt(pos, &pools, |h, r, t| graph.contains_fact(h, r, t), &mut rng)?;
                let hp = entity_idx[&pos.head];
                let tp = entity_idx[&pos.tail];
                let hn = entity_idx[&neg.head];
                let tn = entity_idx[&neg.tail];
                let ri = relation_idx[pos.relation.name.as_str()];

                let s_pos = config.scorer.score(&entity_vecs[hp], &relation_vecs[ri], &entity_vecs[tp]);
                let s_neg = config.scorer.score(&entity_vecs[hn], &relation_vecs[ri], &entity_vecs[tn]);
                let loss = (config.margin + s_neg - s_pos).max(0.0);
                epoch_loss += loss;
                if loss <= 0.0 {
                    continue;
                }

                // d(loss)/d(pos params) = -d(s_pos), d(loss)/d(neg params) = +d(s_neg)
                let (gh_p, gr_p, gt_p) =
                    config.scorer.grad(&entity_vecs[hp], &relation_vecs[ri], &entity_vecs[tp]);
                let (gh_n, gr_n, gt_n) =
                    config.scorer.grad(&entity_vecs[hn], &relation_vecs[ri], &entity_vecs[tn]);
                let lr = config.learning_rate;
                for i in 0..config.dim {
                    entity_vecs[hp][i] += lr * gh_p[i];
                    entity_vecs[tp][i] += lr * gt_p[i];
                    entity_vecs[hn][i] -= lr * gh_n[i];
                    entity_vecs[tn][i] -= lr * gt_n[i];
                    relation_vecs[ri][i] += lr * (gr_p[i] - gr_n[i]);
                }
                if config.scorer == Scorer::TransE {
                    for idx in [hp, tp, hn, tn] {
                        l2_normalize(&mut entity_vecs[idx]);
                    }
                }
            }
        }
        if !epoch_loss.is_finite() {
            return Err(EmbedError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        trace.epoch_loss.push(epoch_loss);
    }

    Ok((
        EmbeddingSpace::new(
            config.dim,
            config.scorer,
            entities,
            entity_vecs,
            relations,
            relation_vecs,
        ),
        trace,
    ))
}

/// Writes the embedding file: header `dim=<n> scorer=<name>`, then one line
/// per element `kind<TAB>id<TAB>v1 v2 ... vn` with 9-significant-digit
/// decimals.
pub fn write_space<W: Write>(w: &mut W, space: &EmbeddingSpace) -> Result<(), EmbedError> {
    writeln!(w, "dim={} scorer={}", space.dim, space.scorer)?;
    let fmt_vec = |v: &[f64]| {
        v.iter()
            .map(|&x| format_sig(x))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (e, v) in space.entities.iter().zip(&space.entity_vecs) {
        writeln!(w, "entity\t{e}\t{}", fmt_vec(v))?;
    }
    for (r, v) in space.relations.iter().zip(&space.relation_vecs) {
        writeln!(w, "relation\t{r}\t{}", fmt_vec(v))?;
    }
    Ok(())
}

/// 9 significant digits, plain decimal or scientific as needed to stay exact
/// on reload of values already at that precision.
fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{x:.8e}");
    // Re-parse so tiny values keep a canonical short form.
    let v: f64 = formatted.parse().unwrap();
    if v.abs() >= 1e-4 && v.abs() < 1e9 {
        let s = format_prob_like(v);
        return s;
    }
    formatted
}

fn format_prob_like(v: f64) -> String {
    // Enough fractional digits to keep 9 significant ones.
    let digits = 9usize.saturating_sub(v.abs().log10().floor().max(0.0) as usize + 1);
    let mut s = format!("{v:.*}", digits.max(1));
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

pub fn save_space(path: &Path, space: &EmbeddingSpace) -> Result<(), EmbedError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_space(&mut w, space)
}

pub fn read_space<R: Read>(r: R) -> Result<EmbeddingSpace, EmbedError> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| EmbedError::Parse {
            line: 1,
            message: "empty embedding file".into(),
        })??;
    let mut dim = None;
    let mut scorer = None;
    for part in header.split_whitespace() {
        if let Some(d) = part.strip_prefix("dim=") {
            dim = d.parse::<usize>().ok();
        } else if let Some(s) = part.strip_prefix("scorer=") {
            scorer = Some(Scorer::parse(s).map_err(|e| EmbedError::Parse {
                line: 1,
                message: e.to_string(),
            })?);
        }
    }
    let (Some(dim), Some(scorer)) = (dim, scorer) else {
        return Err(EmbedError::Parse {
            line: 1,
            message: format!("bad header {header:?}"),
        });
    };
    let mut entities = Vec::new();
    let mut entity_vecs = Vec::new();
    let mut relations = Vec::new();
    let mut relation_vecs = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let lineno = lineno + 2;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, '\t').collect();
        if fields.len() != 3 {
            return Err(EmbedError::Parse {
                line: lineno,
                message: "expected `kind<TAB>id<TAB>values`".into(),
            });
        }
        let values: Result<Vec<f64>, _> = fields[2]
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect();
        let values = values.map_err(|_| EmbedError::Parse {
            line: lineno,
            message: "bad vector component".into(),
        })?;
        if values.len() != dim {
            return Err(EmbedError::Parse {
                line: lineno,
                message: format!("expected {dim} components, got {}", values.len()),
            });
        }
        match fields[0] {
            "entity" => {
                entities.push(EntityId::parse(fields[1]).map_err(|e| EmbedError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?);
                entity_vecs.push(values);
            }
            "relation" => {
                relations.push(fields[1].to_string());
                relation_vecs.push(values);
            }
            other => {
                return Err(EmbedError::Parse {
                    line: lineno,
                    message: format!("unknown kind {other:?}"),
                })
            }
        }
    }
    Ok(EmbeddingSpace::new(
        dim,
        scorer,
        entities,
        entity_vecs,
        relations,
        relation_vecs,
    ))
}

pub fn load_space(path: &Path) -> Result<EmbeddingSpace, EmbedError> {
    read_space(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{GraphBuilder, RelType, RelationId};

    fn fact(h: &str, r: &str, t: &str) -> Fact {
        Fact::new(
            EntityId::parse(h).unwrap(),
            RelationId::new(r, RelType::Phonological).unwrap(),
            EntityId::parse(t).unwrap(),
            "test",
        )
    }

    fn toy_graph() -> KnowledgeGraph {
        // Two sign groups with disjoint phoneme inventories.
        let mut b = GraphBuilder::new();
        for (s, p) in [
            ("a1", "p1"),
            ("a2", "p1"),
            ("a1", "p2"),
            ("a2", "p2"),
            ("b1", "q1"),
            ("b2", "q1"),
            ("b1", "q2"),
            ("b2", "q2"),
        ] {
            b.add_fact(fact(
                &format!("asl:{s}"),
                "handshape",
                &format!("phoneme:{p}"),
            ))
            .unwrap();
        }
        b.build()
    }

    #[test]
    fn transe_score_examples() {
        // dim=2, h=(1,0), r=(0,1), t=(1,1) -> 0; t=(0,0) -> -sqrt(2)
        let h = [1.0, 0.0];
        let r = [0.0, 1.0];
        assert_eq!(Scorer::TransE.score(&h, &r, &[1.0, 1.0]), 0.0);
        let s = Scorer::TransE.score(&h, &r, &[0.0, 0.0]);
        assert!((s + 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn distmult_orthogonal_zero() {
        let h = [1.0, 0.0];
        let t = [0.0, 1.0];
        let r = [1.0, 1.0];
        assert_eq!(Scorer::DistMult.score(&h, &r, &t), 0.0);
    }

    #[test]
    fn transe_translation_invariance() {
        let h = [0.3, -0.2, 0.9];
        let r = [0.1, 0.4, -0.5];
        let t = [-0.6, 0.2, 0.8];
        let c = [10.0, -3.0, 0.25];
        let shift = |v: &[f64]| -> Vec<f64> { v.iter().zip(&c).map(|(a, b)| a + b).collect() };
        let s1 = Scorer::TransE.score(&h, &r, &t);
        let s2 = Scorer::TransE.score(&shift(&h), &r, &shift(&t));
        assert!((s1 - s2).abs() < 1e-12);
    }

    #[test]
    fn distmult_symmetric_in_head_tail() {
        let h = [0.3, -0.2, 0.9];
        let r = [0.1, 0.4, -0.5];
        let t = [-0.6, 0.2, 0.8];
        assert_eq!(
            Scorer::DistMult.score(&h, &r, &t),
            Scorer::DistMult.score(&t, &r, &h)
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for scorer in [Scorer::TransE, Scorer::DistMult] {
            for _ in 0..25 {
                let dim = 4;
                let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
                };
                let (h, r, t) = (sample(&mut rng), sample(&mut rng), sample(&mut rng));
                let (gh, gr, gt) = scorer.grad(&h, &r, &t);
                let eps = 1e-5;
                let check = |slot: usize, analytic: &[f64]| {
                    for i in 0..dim {
                        let mut hp = h.clone();
                        let mut rp = r.clone();
                        let mut tp = t.clone();
                        let mut hm = h.clone();
                        let mut rm = r.clone();
                        let mut tm = t.clone();
                        match slot {
                            0 => {
                                hp[i] += eps;
                                hm[i] -= eps;
                            }
                            1 => {
                                rp[i] += eps;
                                rm[i] -= eps;
                            }
                            _ => {
                                tp[i] += eps;
                                tm[i] -= eps;
                            }
                        }
                        let num =
                            (scorer.score(&hp, &rp, &tp) - scorer.score(&hm, &rm, &tm)) / (2.0 * eps);
                        let denom = analytic[i].abs().max(num.abs()).max(1e-8);
                        assert!(
                            (analytic[i] - num).abs() / denom <= 1e-4,
                            "{scorer} slot {slot} dim {i}: {} vs {num}",
                            analytic[i]
                        );
                    }
                };
                check(0, &gh);
                check(1, &gr);
                check(2, &gt);
            }
        }
    }

    #[test]
    fn negative_differs_in_one_slot() {
        let g = toy_graph();
        let f = g.facts().next().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let neg = sample_negative(&g, &f, &mut rng).unwrap();
        let head_changed = neg.head != f.head;
        let tail_changed = neg.tail != f.tail;
        assert!(head_changed ^ tail_changed);
        assert!(!g.contains_fact(&neg.head, &neg.relation.name, &neg.tail));
    }

    #[test]
    fn negative_sampling_deterministic() {
        let g = toy_graph();
        let f = g.facts().next().unwrap().clone();
        let draw = |seed: u64| -> Vec<Fact> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|_| sample_negative(&g, &f, &mut rng).unwrap())
                .collect()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn saturated_graph_errors() {
        // One namespace with two entities and every head->tail pair present.
        let mut b = GraphBuilder::new();
        for h in ["a", "b"] {
            for t in ["a", "b"] {
                b.add_fact(fact(&format!("asl:{h}"), "rel", &format!("asl:{t}")))
                    .unwrap();
            }
        }
        let g = b.build();
        let f = g.facts().next().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_negative(&g, &f, &mut rng).unwrap_err();
        assert!(matches!(err, EmbedError::CorruptionExhausted));
    }

    #[test]
    fn training_separates_true_from_corrupt() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 200,
            dim: 8,
            seed: 1,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pos_scores = Vec::new();
        let mut neg_scores = Vec::new();
        for f in g.facts() {
            pos_scores.push(space.score(f).unwrap());
            let neg = sample_negative(&g, f, &mut rng).unwrap();
            neg_scores.push(space.score(&neg).unwrap());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&pos_scores) > mean(&neg_scores));
    }

    #[test]
    fn training_is_deterministic() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 20,
            dim: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let a = train(&g, &cfg).unwrap();
        let b = train(&g, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epochs_rejected() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&g, &cfg), Err(EmbedError::BadConfig(_))));
    }

    #[test]
    fn loss_mostly_non_increasing() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 60,
            dim: 8,
            seed: 2,
            ..TrainConfig::default()
        };
        let (_, trace) = train_traced(&g, &cfg).unwrap();
        let drops = trace
            .epoch_loss
            .windows(2)
            .filter(|w| w[1] <= w[0] + 1e-9)
            .count();
        let frac = drops as f64 / (trace.epoch_loss.len() - 1) as f64;
        assert!(frac >= 0.8, "loss non-increasing only {frac:.2} of epochs");
    }

    #[test]
    fn transe_entities_stay_normalized() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 10,
            dim: 6,
            seed: 0,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        for e in space.entities() {
            let v = space.node_embedding(e).unwrap();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn verify_is_logistic_and_monotone() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 30,
            dim: 4,
            seed: 3,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(40.0) > 1.0 - 1e-12);
        let facts: Vec<&Fact> = g.facts().collect();
        let s0 = space.score(facts[0]).unwrap();
        let s1 = space.score(facts[1]).unwrap();
        let v0 = space.verify(facts[0]).unwrap();
        let v1 = space.verify(facts[1]).unwrap();
        assert_eq!(s0 > s1, v0 > v1);
    }

    #[test]
    fn missing_entity_score_errors() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 1,
            dim: 4,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        let f = fact("asl:ghost", "handshape", "phoneme:p1");
        match space.score(&f) {
            Err(EmbedError::MissingEntity(e)) => assert_eq!(e.label, "ghost"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vector_shapes_and_finiteness() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 5,
            dim: 7,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        let v = space
            .node_embedding(&EntityId::phoneme("p1").unwrap())
            .unwrap();
        assert_eq!(v.len(), 7);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn cooccurring_phonemes_embed_closer() {
        // p1,p2 always appear with the a-signs and q1,q2 with the b-signs, so
        // within-group cosine should beat the cross-group average.
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 300,
            dim: 8,
            seed: 0,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        let vec = |l: &str| space.node_embedding(&EntityId::phoneme(l).unwrap()).unwrap().to_vec();
        let cos = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        let within = cos(&vec("p1"), &vec("p2"));
        let cross = (cos(&vec("p1"), &vec("q1"))
            + cos(&vec("p1"), &vec("q2"))
            + cos(&vec("p2"), &vec("q1"))
            + cos(&vec("p2"), &vec("q2")))
            / 4.0;
        assert!(
            within > cross,
            "within-group cosine {within:.3} <= cross-group {cross:.3}"
        );
    }

    #[test]
    fn space_file_round_trip() {
        let g = toy_graph();
        let cfg = TrainConfig {
            epochs: 5,
            dim: 3,
            scorer: Scorer::DistMult,
            ..TrainConfig::default()
        };
        let space = train(&g, &cfg).unwrap();
        let mut buf = Vec::new();
        write_space(&mut buf, &space).unwrap();
        let loaded = read_space(&buf[..]).unwrap();
        assert_eq!(loaded.dim, 3);
        assert_eq!(loaded.scorer, Scorer::DistMult);
        assert_eq!(loaded.entities(), space.entities());
        let mut buf2 = Vec::new();
        write_space(&mut buf2, &loaded).unwrap();
        assert_eq!(buf, buf2, "file is not a fixed point of save(load(...))");
    }
}
