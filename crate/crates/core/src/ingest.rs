//! Tabular knowledge sources to facts, plus ontology refinement.
//!
//! Each source is a CSV table whose subject column names a lexical item and
//! whose remaining mapped columns become relations. Refinement merges
//! translation-style relations, unifies handshape vocabularies, deduplicates
//! sign entities with a handshape + edit-distance heuristic, prunes English
//! words with no near-match translation, and cleans numeric literals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::kg::{
    self, EntityId, Fact, GraphBuilder, KgError, KnowledgeGraph, Namespace, RelType, RelationId,
};

/// Canonical name that all translation-style relations are merged into.
pub const TRANSLATION_RELATION: &str = "has_translation";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error("csv error in {table}: {source}")]
    Csv { table: String, source: csv::Error },
    #[error("table {table}: subject column {column:?} not found in header")]
    MissingSubjectColumn { table: String, column: String },
    #[error("table {table}: mapped column {column:?} not found in header")]
    MissingColumn { table: String, column: String },
    #[error("entity {0} is not an asl sign")]
    NotASign(EntityId),
    #[error("rename chain starting at {0:?} forms a cycle")]
    RenameCycle(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a mapped column's cells become fact tails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TailKind {
    /// Cells must parse as plain decimals (or NaN) and become literal tails.
    Numeric,
    /// Cells become entities in the given namespace.
    Entity(Namespace),
}

#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub name: String,
    pub rel_type: RelType,
    pub tail: TailKind,
}

/// One tabular knowledge source, already projected to its mapped columns.
#[derive(Debug, Clone)]
pub struct SourceTable {
    pub name: String,
    pub subject_namespace: Namespace,
    /// Index of the subject column within `columns` / each row.
    pub subject_column: usize,
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<Vec<String>>,
}

/// Outcome of converting a table: facts plus per-row skip diagnostics.
#[derive(Debug, Default)]
pub struct RowsOutcome {
    pub facts: Vec<Fact>,
    pub skipped: Vec<String>,
}

/// One fact per non-empty value cell: head is the subject entity, the
/// relation is the column name, and the tail is the cell value (a literal
/// for numeric columns). Rows with an unparseable cell under a numeric
/// column are skipped whole, with a diagnostic.
pub fn rows_to_facts(table: &SourceTable) -> Result<RowsOutcome, IngestError> {
    let mut out = RowsOutcome::default();
    'rows: for (rowno, row) in table.rows.iter().enumerate() {
        debug_assert_eq!(row.len(), table.columns.len());
        let subject = row[table.subject_column].trim();
        if subject.is_empty() {
            out.skipped.push(format!("row {}: empty subject cell", rowno + 1));
            continue;
        }
        let head = EntityId::new(table.subject_namespace, subject)?;
        let mut facts = Vec::new();
        for (ci, spec) in table.columns.iter().enumerate() {
            if ci == table.subject_column {
                continue;
            }
            let cell = row[ci].trim();
            if cell.is_empty() {
                continue;
            }
            let tail = match &spec.tail {
                TailKind::Numeric => match kg::parse_numeric(cell) {
                    Some(_) => EntityId::literal_text(cell)?,
                    None => {
                        out.skipped.push(format!(
                            "row {}: cell {cell:?} under numeric column {:?} does not parse",
                            rowno + 1,
                            spec.name
                        ));
                        continue 'rows;
                    }
                },
                TailKind::Entity(ns) => EntityId::new(*ns, cell)?,
            };
            facts.push(Fact::new(
                head.clone(),
                RelationId::new(&spec.name, spec.rel_type)?,
                tail,
                table.name.clone(),
            ));
        }
        out.facts.append(&mut facts);
    }
    Ok(out)
}

/// Levenshtein edit distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Gloss comparison key: lowercased, with a trailing `_<digits>` variant
/// suffix stripped (`right_1` and `right_2` both key to `right`).
pub fn gloss_key(label: &str) -> String {
    let lower = label.to_ascii_lowercase();
    if let Some(pos) = lower.rfind('_') {
        let (stem, suffix) = lower.split_at(pos);
        if !stem.is_empty() && suffix.len() > 1 && suffix[1..].bytes().all(|b| b.is_ascii_digit()) {
            return stem.to_string();
        }
    }
    lower
}

/// Outcome of the pairwise sign-equality heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityMatch {
    Match,
    NoMatch,
    /// At least one side has no handshape fact, so merging lacks support.
    NoEvidence,
}

impl EntityMatch {
    pub fn is_match(self) -> bool {
        self == EntityMatch::Match
    }
}

fn handshape_of(graph: &KnowledgeGraph, sign: &EntityId) -> Option<EntityId> {
    graph
        .facts()
        .find(|f| {
            &f.head == sign
                && f.rel_type() == RelType::Phonological
                && f.relation.name == "handshape"
        })
        .map(|f| f.tail.clone())
}

/// Two signs are equal iff they share a handshape and their glosses are
/// within Levenshtein distance 1.
pub fn entity_equal(
    graph: &KnowledgeGraph,
    a: &EntityId,
    b: &EntityId,
) -> Result<EntityMatch, IngestError> {
    if a.namespace != Namespace::Asl {
        return Err(IngestError::NotASign(a.clone()));
    }
    if b.namespace != Namespace::Asl {
        return Err(IngestError::NotASign(b.clone()));
    }
    let (Some(ha), Some(hb)) = (handshape_of(graph, a), handshape_of(graph, b)) else {
        return Ok(EntityMatch::NoEvidence);
    };
    if ha != hb {
        return Ok(EntityMatch::NoMatch);
    }
    if levenshtein(&gloss_key(&a.label), &gloss_key(&b.label)) <= 1 {
        Ok(EntityMatch::Match)
    } else {
        Ok(EntityMatch::NoMatch)
    }
}

/// Renames planned (and applied) by a refinement pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergePlan {
    /// Relation renames, old name -> new name.
    pub relation_renames: BTreeMap<String, String>,
    /// Entity merges as (merged-away, canonical) pairs. Sign pairs satisfy
    /// [`entity_equal`]; phoneme pairs come from a supplied rename table.
    pub entity_merges: BTreeSet<(EntityId, EntityId)>,
}

/// Resolves each key through the rename table to its terminal value,
/// rejecting cycles.
fn resolve_renames(
    renames: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, String>, IngestError> {
    let mut resolved = BTreeMap::new();
    for start in renames.keys() {
        let mut seen = BTreeSet::new();
        let mut cur = start.clone();
        while let Some(next) = renames.get(&cur) {
            if !seen.insert(cur.clone()) {
                return Err(IngestError::RenameCycle(start.clone()));
            }
            cur = next.clone();
        }
        if &cur != start {
            resolved.insert(start.clone(), cur);
        }
    }
    Ok(resolved)
}

fn rebuild<F>(graph: &KnowledgeGraph, mut map: F) -> Result<KnowledgeGraph, IngestError>
where
    F: FnMut(&Fact) -> Result<Option<Fact>, IngestError>,
{
    let mut b = GraphBuilder::new();
    for f in graph.facts() {
        if let Some(f) = map(f)? {
            b.add_fact(f)?;
        }
    }
    Ok(b.build())
}

/// Renames all translation-type relations to [`TRANSLATION_RELATION`] and
/// unifies handshape phoneme values through the supplied rename table
/// (source-vocabulary name -> canonical name).
pub fn merge_relations(
    graph: &KnowledgeGraph,
    handshape_renames: &BTreeMap<String, String>,
) -> Result<(KnowledgeGraph, MergePlan), IngestError> {
    let value_map = resolve_renames(handshape_renames)?;
    let mut plan = MergePlan::default();
    for r in graph.relations() {
        if r.rel_type == RelType::Translation && r.name != TRANSLATION_RELATION {
            plan.relation_renames
                .insert(r.name.clone(), TRANSLATION_RELATION.to_string());
        }
    }
    for (old, new) in &value_map {
        let old_id = EntityId::phoneme(old.clone())?;
        if graph.contains_entity(&old_id) {
            plan.entity_merges
                .insert((old_id, EntityId::phoneme(new.clone())?));
        }
    }
    let merged = rebuild(graph, |f| {
        let mut f = f.clone();
        if let Some(new) = plan.relation_renames.get(&f.relation.name) {
            f.relation = RelationId::new(new, f.relation.rel_type)?;
        }
        if f.tail.namespace == Namespace::Phoneme {
            if let Some(new) = value_map.get(&f.tail.label) {
                f.tail = EntityId::phoneme(new.clone())?;
            }
        }
        Ok(Some(f))
    })?;
    Ok((merged, plan))
}

/// Plans sign merges: connected components under the pairwise
/// [`entity_equal`] predicate, each merged into its lexicographically
/// smallest label.
pub fn build_sign_merge_plan(graph: &KnowledgeGraph) -> Result<MergePlan, IngestError> {
    let signs = graph.sorted_entities_in(Namespace::Asl);
    let mut parent: Vec<usize> = (0..signs.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..signs.len() {
        for j in (i + 1)..signs.len() {
            // Cheap length screen before the full predicate.
            if signs[i].label.len().abs_diff(signs[j].label.len()) > 4 {
                continue;
            }
            if entity_equal(graph, &signs[i], &signs[j])?.is_match() {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..signs.len() {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(i);
    }
    let mut plan = MergePlan::default();
    for members in components.values() {
        if members.len() < 2 {
            continue;
        }
        // Members are index-sorted and signs are label-sorted, so the first
        // member carries the smallest label.
        let canonical = &signs[members[0]];
        for &m in &members[1..] {
            plan.entity_merges
                .insert((signs[m].clone(), canonical.clone()));
        }
    }
    Ok(plan)
}

/// Applies a merge plan's renames and entity merges to the graph.
pub fn apply_merge_plan(
    graph: &KnowledgeGraph,
    plan: &MergePlan,
) -> Result<KnowledgeGraph, IngestError> {
    let entity_map: BTreeMap<&EntityId, &EntityId> =
        plan.entity_merges.iter().map(|(a, b)| (a, b)).collect();
    rebuild(graph, |f| {
        let mut f = f.clone();
        if let Some(new) = plan.relation_renames.get(&f.relation.name) {
            f.relation = RelationId::new(new, f.relation.rel_type)?;
        }
        if let Some(&new) = entity_map.get(&f.head) {
            f.head = new.clone();
        }
        if let Some(&new) = entity_map.get(&f.tail) {
            f.tail = new.clone();
        }
        Ok(Some(f))
    })
}

/// Convenience: plan and apply sign merges in one step.
pub fn merge_signs(graph: &KnowledgeGraph) -> Result<(KnowledgeGraph, MergePlan), IngestError> {
    let plan = build_sign_merge_plan(graph)?;
    let merged = apply_merge_plan(graph, &plan)?;
    Ok((merged, plan))
}

/// Removes English word entities (and their facts) that are not within
/// Levenshtein distance 1 of any sign translation.
pub fn merge_english(graph: &KnowledgeGraph) -> Result<KnowledgeGraph, IngestError> {
    let translations: BTreeSet<String> = graph
        .facts_of_type(RelType::Translation)
        .iter()
        .filter(|f| f.tail.namespace == Namespace::En)
        .map(|f| f.tail.label.to_ascii_lowercase())
        .collect();
    let mut removable: BTreeSet<EntityId> = BTreeSet::new();
    for w in graph.entities_in(Namespace::En) {
        let lw = w.label.to_ascii_lowercase();
        if !translations.iter().any(|t| levenshtein(&lw, t) <= 1) {
            removable.insert(w.clone());
        }
    }
    rebuild(graph, |f| {
        if removable.contains(&f.head) || removable.contains(&f.tail) {
            Ok(None)
        } else {
            Ok(Some(f.clone()))
        }
    })
}

/// Drops NaN literal tails, canonicalizes numeric literals (no trailing
/// zeros), and collapses the duplicates that canonicalization exposes.
/// Idempotent.
pub fn clean(graph: &KnowledgeGraph) -> Result<KnowledgeGraph, IngestError> {
    rebuild(graph, |f| {
        if !f.tail.is_literal() {
            return Ok(Some(f.clone()));
        }
        let value = kg::parse_numeric(&f.tail.label)
            .expect("literal entities always carry a parseable value");
        if value.is_nan() {
            return Ok(None);
        }
        let mut f = f.clone();
        f.tail = EntityId::literal(value);
        Ok(Some(f))
    })
}

/// Declarative description of the source tables, loaded from TOML:
///
/// ```toml
/// [[table]]
/// name = "asllex"
/// path = "asllex.csv"
/// subject_column = "EntryID"
/// subject_namespace = "asl"
///
/// [table.columns.Handshape]
/// rel_type = "phonological"
/// tail = "phoneme"
///
/// [table.columns."SignFrequency(M)"]
/// rel_type = "statistical"
/// tail = "numeric"
/// ```
#[derive(Debug, Deserialize)]
pub struct Manifest {
    #[serde(rename = "table")]
    pub tables: Vec<ManifestTable>,
}

#[derive(Debug, Deserialize)]
pub struct ManifestTable {
    pub name: String,
    pub path: PathBuf,
    pub subject_column: String,
    pub subject_namespace: String,
    pub columns: BTreeMap<String, ManifestColumn>,
}

#[derive(Debug, Deserialize)]
pub struct ManifestColumn {
    pub rel_type: String,
    pub tail: String,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        Self::parse(&text)
    }
}

fn parse_tail_kind(s: &str) -> Result<TailKind, IngestError> {
    if s == "numeric" {
        return Ok(TailKind::Numeric);
    }
    Namespace::parse(s)
        .map(TailKind::Entity)
        .map_err(|_| IngestError::Manifest(format!("unknown tail kind {s:?}")))
}

/// Reads one manifest table's CSV (header row required) into a
/// [`SourceTable`] projected onto the subject and mapped columns.
pub fn load_table<R: Read>(entry: &ManifestTable, reader: R) -> Result<SourceTable, IngestError> {
    let subject_namespace = Namespace::parse(&entry.subject_namespace).map_err(|_| {
        IngestError::Manifest(format!("bad namespace {:?}", entry.subject_namespace))
    })?;
    let mut csv_reader = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| IngestError::Csv {
            table: entry.name.clone(),
            source: e,
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let subject_src =
        find(&entry.subject_column).ok_or_else(|| IngestError::MissingSubjectColumn {
            table: entry.name.clone(),
            column: entry.subject_column.clone(),
        })?;
    let mut columns = vec![ColumnSpec {
        name: entry.subject_column.clone(),
        rel_type: RelType::Meta,
        tail: TailKind::Entity(subject_namespace),
    }];
    let mut src_indices = vec![subject_src];
    for (col, spec) in &entry.columns {
        let idx = find(col).ok_or_else(|| IngestError::MissingColumn {
            table: entry.name.clone(),
            column: col.clone(),
        })?;
        columns.push(ColumnSpec {
            name: col.clone(),
            rel_type: RelType::parse(&spec.rel_type)?,
            tail: parse_tail_kind(&spec.tail)?,
        });
        src_indices.push(idx);
    }
    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| IngestError::Csv {
            table: entry.name.clone(),
            source: e,
        })?;
        rows.push(
            src_indices
                .iter()
                .map(|&i| record.get(i).unwrap_or("").to_string())
                .collect(),
        );
    }
    Ok(SourceTable {
        name: entry.name.clone(),
        subject_namespace,
        subject_column: 0,
        columns,
        rows,
    })
}

/// Result of a full ingestion run.
pub struct IngestReport {
    pub graph: KnowledgeGraph,
    pub plan: MergePlan,
    pub skipped_rows: Vec<String>,
    pub removed_english: usize,
    pub facts_before_refine: usize,
    /// (head, relation) pairs holding more than one literal value; kept, not
    /// resolved, since precedence between sources is undefined.
    pub literal_conflicts: Vec<String>,
}

impl IngestReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "facts before refinement\t{}", self.facts_before_refine);
        let _ = writeln!(s, "facts after refinement\t{}", self.graph.fact_count());
        let _ = writeln!(s, "entities\t{}", self.graph.entity_count());
        let _ = writeln!(s, "relations renamed\t{}", self.plan.relation_renames.len());
        let _ = writeln!(s, "entities merged\t{}", self.plan.entity_merges.len());
        let _ = writeln!(s, "english words removed\t{}", self.removed_english);
        let _ = writeln!(s, "rows skipped\t{}", self.skipped_rows.len());
        for d in &self.skipped_rows {
            let _ = writeln!(s, "skip\t{d}");
        }
        for (old, new) in &self.plan.relation_renames {
            let _ = writeln!(s, "rename\t{old}\t{new}");
        }
        for (a, b) in &self.plan.entity_merges {
            let _ = writeln!(s, "merge\t{a}\t{b}");
        }
        for c in &self.literal_conflicts {
            let _ = writeln!(s, "conflict\t{c}");
        }
        s
    }
}

/// Full ingestion: load every manifest table, convert rows, refine, clean.
/// `base_dir` resolves relative table paths.
pub fn ingest(
    manifest: &Manifest,
    base_dir: &Path,
    handshape_renames: &BTreeMap<String, String>,
) -> Result<IngestReport, IngestError> {
    let mut b = GraphBuilder::new();
    let mut skipped = Vec::new();
    for entry in &manifest.tables {
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base_dir.join(&entry.path)
        };
        let table = load_table(entry, File::open(&path)?)?;
        let mut outcome = rows_to_facts(&table)?;
        for d in &mut outcome.skipped {
            *d = format!("{}: {d}", entry.name);
        }
        skipped.append(&mut outcome.skipped);
        b.add_all(outcome.facts)?;
    }
    let raw = b.build();
    let facts_before_refine = raw.fact_count();

    let (g, mut plan) = merge_relations(&raw, handshape_renames)?;
    let (g, sign_plan) = merge_signs(&g)?;
    plan.relation_renames.extend(sign_plan.relation_renames);
    plan.entity_merges.extend(sign_plan.entity_merges);
    let before_en = g.entities_in(Namespace::En).count();
    let g = merge_english(&g)?;
    let removed_english = before_en - g.entities_in(Namespace::En).count();
    let g = clean(&g)?;

    let mut by_pair: BTreeMap<(EntityId, String), BTreeSet<String>> = BTreeMap::new();
    for f in g.facts() {
        if f.tail.is_literal() {
            by_pair
                .entry((f.head.clone(), f.relation.name.clone()))
                .or_default()
                .insert(f.tail.label.clone());
        }
    }
    let literal_conflicts = by_pair
        .into_iter()
        .filter(|(_, vals)| vals.len() > 1)
        .map(|((h, r), vals)| {
            format!("{h}\t{r}\t{}", vals.into_iter().collect::<Vec<_>>().join(","))
        })
        .collect();

    Ok(IngestReport {
        graph: g,
        plan,
        skipped_rows: skipped,
        removed_english,
        facts_before_refine,
        literal_conflicts,
    })
}
