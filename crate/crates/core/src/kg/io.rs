//! Fact-file and fold-map serialization.
//!
//! Fact files are UTF-8 tab-separated with five columns
//! `head<TAB>relation<TAB>tail<TAB>rel_type<TAB>source`, one fact per line.
//! Lines starting with `#` are comments. Entities are written with their
//! namespace prefix (`asl:read`, `lit:4.053`). Fold maps are two-column TSV
//! `entity<TAB>fold`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EntityId, Fact, FoldMaps, GraphBuilder, KgError, KnowledgeGraph, RelType, RelationId};

pub fn write_facts<W: Write>(w: &mut W, graph: &KnowledgeGraph) -> Result<(), KgError> {
    for f in graph.facts() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            f.head,
            f.relation.name,
            f.tail,
            f.relation.rel_type,
            f.source
        )?;
    }
    Ok(())
}

pub fn write_facts_file(path: &Path, graph: &KnowledgeGraph) -> Result<(), KgError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_facts(&mut w, graph)
}

pub fn read_facts<R: Read>(r: R) -> Result<KnowledgeGraph, KgError> {
    let mut b = GraphBuilder::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(KgError::Parse {
                line: lineno + 1,
                message: format!("expected 5 tab-separated fields, got {}", fields.len()),
            });
        }
        let at = |e: KgError| KgError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        };
        let head = EntityId::parse(fields[0]).map_err(at)?;
        let rel_type = RelType::parse(fields[3]).map_err(at)?;
        let relation = RelationId::new(fields[1], rel_type).map_err(at)?;
        let tail = EntityId::parse(fields[2]).map_err(at)?;
        b.add_fact(Fact::new(head, relation, tail, fields[4]))
            .map_err(|e| KgError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
    }
    Ok(b.build())
}

pub fn read_facts_file(path: &Path) -> Result<KnowledgeGraph, KgError> {
    read_facts(File::open(path)?)
}

pub fn write_fold_map<W: Write>(w: &mut W, map: &BTreeMap<EntityId, u8>) -> Result<(), KgError> {
    for (e, f) in map {
        writeln!(w, "{e}\t{f}")?;
    }
    Ok(())
}

pub fn read_fold_map<R: Read>(r: R) -> Result<BTreeMap<EntityId, u8>, KgError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (entity, fold) = line.split_once('\t').ok_or_else(|| KgError::Parse {
            line: lineno + 1,
            message: "expected `entity<TAB>fold`".into(),
        })?;
        let entity = EntityId::parse(entity).map_err(|e| KgError::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let fold: u8 = fold.parse().map_err(|_| KgError::Parse {
            line: lineno + 1,
            message: format!("bad fold index {fold:?}"),
        })?;
        map.insert(entity, fold);
    }
    Ok(map)
}

/// Writes `sign_folds.tsv` and `instance_folds.tsv` under `dir`.
pub fn write_folds_dir(dir: &Path, folds: &FoldMaps) -> Result<(), KgError> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("sign_folds.tsv"))?);
    write_fold_map(&mut w, &folds.sign_folds)?;
    let mut w = BufWriter::new(File::create(dir.join("instance_folds.tsv"))?);
    write_fold_map(&mut w, &folds.instance_folds)?;
    Ok(())
}

pub fn read_folds_dir(dir: &Path) -> Result<FoldMaps, KgError> {
    Ok(FoldMaps {
        sign_folds: read_fold_map(File::open(dir.join("sign_folds.tsv"))?)?,
        instance_folds: read_fold_map(File::open(dir.join("instance_folds.tsv"))?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Namespace;

    fn toy() -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        b.add_fact(Fact::new(
            EntityId::asl("read").unwrap(),
            RelationId::new("handshape", RelType::Phonological).unwrap(),
            EntityId::phoneme("V").unwrap(),
            "asllex",
        ))
        .unwrap();
        b.add_fact(Fact::new(
            EntityId::asl("nervous").unwrap(),
            RelationId::new("interoceptive_mean", RelType::Semantic).unwrap(),
            EntityId::literal_text("4.053").unwrap(),
            "lancaster",
        ))
        .unwrap();
        b.build()
    }

    #[test]
    fn fact_file_round_trip() {
        let g = toy();
        let mut buf = Vec::new();
        write_facts(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("asl:read\thandshape\tphoneme:V\tphonological\tasllex"));
        assert!(text.contains("lit:4.053"));
        let g2 = read_facts(&buf[..]).unwrap();
        assert_eq!(g, g2);
        let mut buf2 = Vec::new();
        write_facts(&mut buf2, &g2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = "# fact dump\n\nasl:read\thandshape\tphoneme:V\tphonological\tasllex\n";
        let g = read_facts(text.as_bytes()).unwrap();
        assert_eq!(g.fact_count(), 1);
    }

    #[test]
    fn bad_line_reports_number() {
        let text = "asl:read\thandshape\tphoneme:V\n";
        match read_facts(text.as_bytes()) {
            Err(KgError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fold_map_round_trip() {
        let mut map = BTreeMap::new();
        map.insert(EntityId::new(Namespace::Asl, "read").unwrap(), 3u8);
        map.insert(EntityId::new(Namespace::Asl, "book").unwrap(), 7u8);
        let mut buf = Vec::new();
        write_fold_map(&mut buf, &map).unwrap();
        let map2 = read_fold_map(&buf[..]).unwrap();
        assert_eq!(map, map2);
    }
}
