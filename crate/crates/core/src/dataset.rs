//! Dataset file format: loading, validation, and serialization.
//!
//! ```json
//! {
//!   "facets": ["category", "author"],
//!   "taxonomy": {"label": "", "children": [
//!       {"label": "Hardware", "children": [{"label": "Smith", "docs": ["d1"]}]}
//!   ]},
//!   "documents": [
//!       {"id": "d1", "title": "Cache Design", "uri": "https://example.org/d1",
//!        "facets": {"category": ["Hardware"], "author": ["Smith"]},
//!        "terms": ["memory", "cache"]}
//!   ]
//! }
//! ```
//!
//! Terms may be given un-normalized; each term string is tokenized and every
//! token is added to the document's term bag.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Dataset, Document, NodeId, TaxonomyNode};
use crate::text::{label_key, tokenize};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },
    #[error("dataset has no documents")]
    EmptyDataset,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        DatasetError::Validation {
            location: location.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    #[serde(default)]
    facets: Vec<String>,
    taxonomy: RawNode,
    documents: Vec<RawDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<RawNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    docs: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    id: String,
    title: String,
    uri: String,
    #[serde(default)]
    facets: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    terms: Vec<String>,
}

/// Reads and validates a dataset from any byte source.
pub fn load_dataset<R: Read>(mut source: R) -> Result<Dataset, DatasetError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let raw: RawDataset = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    build(raw)
}

pub fn load_dataset_file(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    load_dataset(std::io::BufReader::new(file))
}

fn build(raw: RawDataset) -> Result<Dataset, DatasetError> {
    let mut seen_facets = HashSet::new();
    for (i, name) in raw.facets.iter().enumerate() {
        if name.is_empty() {
            return Err(DatasetError::invalid(format!("facets[{i}]"), "empty facet name"));
        }
        if !seen_facets.insert(name.as_str()) {
            return Err(DatasetError::invalid(
                format!("facets[{i}]"),
                format!("duplicate facet {name}"),
            ));
        }
    }

    if raw.documents.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }

    let mut documents = Vec::with_capacity(raw.documents.len());
    let mut by_id = HashMap::new();
    for (i, doc) in raw.documents.into_iter().enumerate() {
        let location = format!("documents[{i}]");
        if doc.id.is_empty() {
            return Err(DatasetError::invalid(location, "empty document id"));
        }
        if by_id.insert(doc.id.clone(), i).is_some() {
            return Err(DatasetError::invalid(
                location,
                format!("duplicate document id {}", doc.id),
            ));
        }
        for (name, values) in &doc.facets {
            if !seen_facets.contains(name.as_str()) {
                return Err(DatasetError::invalid(
                    &location,
                    format!("facet {name} of document {} is not in the facet schema", doc.id),
                ));
            }
            if values.is_empty() {
                return Err(DatasetError::invalid(
                    &location,
                    format!("facet {name} of document {} has no values", doc.id),
                ));
            }
            if let Some(bad) = values.iter().find(|v| tokenize(v).is_empty()) {
                return Err(DatasetError::invalid(
                    &location,
                    format!("facet {name} of document {} has value {bad:?} with no tokens", doc.id),
                ));
            }
        }
        if let Some(missing) = raw.facets.iter().find(|f| !doc.facets.contains_key(*f)) {
            return Err(DatasetError::invalid(
                location,
                format!("document {} is missing facet {missing}", doc.id),
            ));
        }
        let terms = doc.terms.iter().flat_map(|t| tokenize(t)).collect();
        documents.push(Document {
            id: doc.id,
            title: doc.title,
            uri: doc.uri,
            facet_values: doc.facets,
            terms,
        });
    }

    if !raw.taxonomy.label.is_empty() {
        return Err(DatasetError::invalid("taxonomy", "root label must be empty"));
    }
    let mut builder = TreeBuilder {
        next_id: 0,
        by_id: &by_id,
        placed: HashSet::new(),
    };
    let root = builder.node(raw.taxonomy, "taxonomy", true)?;
    if let Some(orphan) = documents.iter().find(|d| !builder.placed.contains(&d.id)) {
        return Err(DatasetError::invalid(
            "taxonomy",
            format!("document {} is not placed under any leaf", orphan.id),
        ));
    }

    let mut term_index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for doc in &documents {
        for term in &doc.terms {
            term_index.entry(term.clone()).or_default().insert(doc.id.clone());
        }
    }
    let mut label_index: BTreeMap<String, BTreeSet<NodeId>> = BTreeMap::new();
    for node in root.walk() {
        for token in &node.label_tokens {
            label_index.entry(token.clone()).or_default().insert(node.id);
        }
    }

    Ok(Dataset {
        root,
        documents,
        facet_schema: raw.facets,
        term_index,
        label_index,
        by_id,
    })
}

struct TreeBuilder<'a> {
    next_id: u32,
    by_id: &'a HashMap<String, usize>,
    placed: HashSet<String>,
}

impl TreeBuilder<'_> {
    fn node(&mut self, raw: RawNode, location: &str, is_root: bool) -> Result<TaxonomyNode, DatasetError> {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        let label_tokens: BTreeSet<String> = tokenize(&raw.label).into_iter().collect();
        if !is_root && label_tokens.is_empty() {
            return Err(DatasetError::invalid(
                location,
                format!("label {:?} has no tokens", raw.label),
            ));
        }
        match (raw.children, raw.docs) {
            (Some(_), Some(_)) => Err(DatasetError::invalid(location, "node has both children and documents")),
            (None, None) => Err(DatasetError::invalid(
                location,
                "node has neither children nor documents",
            )),
            (Some(children), None) if children.is_empty() => Err(DatasetError::invalid(
                location,
                "node has neither children nor documents",
            )),
            (None, Some(docs)) if docs.is_empty() => Err(DatasetError::invalid(
                location,
                "node has neither children nor documents",
            )),
            (Some(children), None) => {
                let mut keys = HashSet::new();
                let mut built = Vec::with_capacity(children.len());
                for child in children {
                    let child_location = format!("{location}/{}", child.label);
                    if !keys.insert(label_key(&child.label)) {
                        return Err(DatasetError::invalid(
                            location,
                            format!("duplicate sibling label {:?}", child.label),
                        ));
                    }
                    built.push(self.node(child, &child_location, false)?);
                }
                Ok(TaxonomyNode {
                    id,
                    label: raw.label,
                    label_tokens,
                    children: built,
                    documents: Vec::new(),
                })
            }
            (None, Some(docs)) => {
                for doc in &docs {
                    if !self.by_id.contains_key(doc) {
                        return Err(DatasetError::invalid(location, format!("unknown document id {doc}")));
                    }
                    if !self.placed.insert(doc.clone()) {
                        return Err(DatasetError::invalid(
                            location,
                            format!("document {doc} is placed more than once"),
                        ));
                    }
                }
                Ok(TaxonomyNode {
                    id,
                    label: raw.label,
                    label_tokens,
                    children: Vec::new(),
                    documents: docs,
                })
            }
        }
    }
}

/// Serializes a dataset back to the file format (pretty-printed JSON).
pub fn write_dataset(ds: &Dataset) -> String {
    fn node(n: &TaxonomyNode) -> RawNode {
        if n.is_leaf() {
            RawNode {
                label: n.label.clone(),
                children: None,
                docs: Some(n.documents.clone()),
            }
        } else {
            RawNode {
                label: n.label.clone(),
                children: Some(n.children.iter().map(node).collect()),
                docs: None,
            }
        }
    }
    let raw = RawDataset {
        facets: ds.facet_schema.clone(),
        taxonomy: node(&ds.root),
        documents: ds
            .documents
            .iter()
            .map(|d| RawDocument {
                id: d.id.clone(),
                title: d.title.clone(),
                uri: d.uri.clone(),
                facets: d.facet_values.clone(),
                terms: d.terms.iter().cloned().collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("dataset serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIXTURE_A: &str = include_str!("../fixtures/fixture_a.json");

    fn validation_message(text: &str) -> String {
        match load_dataset(text.as_bytes()) {
            Err(DatasetError::Validation { message, .. }) => message,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn loads_fixture_a() {
        let ds = load_dataset(FIXTURE_A.as_bytes()).unwrap();
        assert_eq!(ds.documents().len(), 4);
        assert_eq!(ds.root().children.len(), 3);
        assert_eq!(ds.facet_schema(), ["category", "author"]);
        assert_eq!(ds.depth(), 2);
        let labels: Vec<_> = ds.root().children.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["Hardware", "Information Systems", "Theory"]);
    }

    #[test]
    fn rejects_duplicate_ids() {
        let text = FIXTURE_A.replacen("\"id\": \"d3\"", "\"id\": \"d2\"", 1);
        assert_eq!(validation_message(&text), "duplicate document id d2");
    }

    #[test]
    fn rejects_documents_beside_children() {
        let text = r#"{"facets": [], "taxonomy": {"label": "", "children": [
            {"label": "A", "docs": ["d1"]}], "docs": ["d2"]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}, {"id": "d2", "title": "y", "uri": "v"}]}"#;
        assert_eq!(validation_message(text), "node has both children and documents");
    }

    #[test]
    fn rejects_unknown_facet_and_missing_facet() {
        let text = FIXTURE_A.replacen("\"author\": [\"Smith\"]", "\"journal\": [\"JACM\"]", 1);
        assert!(validation_message(&text).contains("not in the facet schema"));
        let text = r#"{"facets": ["author"], "taxonomy": {"label": "", "docs": ["d1"]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}]}"#;
        assert_eq!(validation_message(text), "document d1 is missing facet author");
    }

    #[test]
    fn rejects_duplicate_sibling_labels() {
        let text = r#"{"taxonomy": {"label": "", "children": [
            {"label": "Theory", "docs": ["d1"]}, {"label": "theory!", "docs": ["d2"]}]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}, {"id": "d2", "title": "y", "uri": "v"}]}"#;
        assert!(validation_message(text).starts_with("duplicate sibling label"));
    }

    #[test]
    fn rejects_unplaced_and_twice_placed_documents() {
        let text = r#"{"taxonomy": {"label": "", "children": [{"label": "A", "docs": ["d1"]}]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}, {"id": "d2", "title": "y", "uri": "v"}]}"#;
        assert!(validation_message(text).contains("d2 is not placed"));
        let text = r#"{"taxonomy": {"label": "", "children": [
            {"label": "A", "docs": ["d1"]}, {"label": "B", "docs": ["d1"]}]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}]}"#;
        assert!(validation_message(text).contains("placed more than once"));
    }

    #[test]
    fn rejects_empty_and_malformed_input() {
        let text = r#"{"taxonomy": {"label": "", "children": []}, "documents": []}"#;
        assert!(matches!(load_dataset(text.as_bytes()), Err(DatasetError::EmptyDataset)));
        match load_dataset("{\n  \"taxonomy\": [".as_bytes()) {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = r#"{"taxonomy": {"label": "root", "docs": ["d1"]},
            "documents": [{"id": "d1", "title": "x", "uri": "u"}]}"#;
        assert_eq!(validation_message(text), "root label must be empty");
    }

    #[test]
    fn terms_are_normalized_on_load() {
        let text = r#"{"taxonomy": {"label": "", "docs": ["d1"]},
            "documents": [{"id": "d1", "title": "x", "uri": "u", "terms": ["Out-of-Turn", "IR,"]}]}"#;
        let ds = load_dataset(text.as_bytes()).unwrap();
        let terms: Vec<_> = ds.documents()[0].terms.iter().map(String::as_str).collect();
        assert_eq!(terms, ["ir", "of", "out", "turn"]);
    }

    #[test]
    fn lookup_examples() {
        let ds = load_dataset(FIXTURE_A.as_bytes()).unwrap();
        let (nodes, docs) = ds.lookup_term("belkin");
        assert_eq!(nodes.len(), 1);
        assert_eq!(ds.node(*nodes.first().unwrap()).unwrap().label, "Belkin");
        assert!(docs.is_empty());

        let (nodes, docs) = ds.lookup_term("retrieval");
        assert!(nodes.is_empty());
        assert_eq!(docs.into_iter().collect::<Vec<_>>(), ["d2"]);

        let (nodes, docs) = ds.lookup_term("xyzzy");
        assert!(nodes.is_empty() && docs.is_empty());
    }

    #[test]
    fn write_then_load_is_identity() {
        let ds = load_dataset(FIXTURE_A.as_bytes()).unwrap();
        let again = load_dataset(write_dataset(&ds).as_bytes()).unwrap();
        assert_eq!(ds, again);
    }
}
