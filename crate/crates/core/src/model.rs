//! Immutable collection model: documents, the classification tree, and the
//! two inverted indices (leaf terms and label tokens).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a tree node. Unique within one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A leaf item of the collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub uri: String,
    /// Facet name to its (non-empty) list of values.
    pub facet_values: BTreeMap<String, Vec<String>>,
    /// Normalized free terms.
    pub terms: BTreeSet<String>,
}

impl Document {
    pub fn facet(&self, name: &str) -> &[String] {
        self.facet_values.get(name).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A node of the base classification tree.
///
/// Internal nodes have children and no documents; leaves have documents and
/// no children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub id: NodeId,
    pub label: String,
    pub label_tokens: BTreeSet<String>,
    pub children: Vec<TaxonomyNode>,
    /// Document ids, in file order. Leaves only.
    pub documents: Vec<String>,
}

impl TaxonomyNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order traversal of this subtree.
    pub fn walk(&self) -> Vec<&TaxonomyNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }
}

/// A validated collection. Construct it with [`crate::load_dataset`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub(crate) root: TaxonomyNode,
    pub(crate) documents: Vec<Document>,
    pub(crate) facet_schema: Vec<String>,
    pub(crate) term_index: BTreeMap<String, BTreeSet<String>>,
    pub(crate) label_index: BTreeMap<String, BTreeSet<NodeId>>,
    pub(crate) by_id: HashMap<String, usize>,
}

impl Dataset {
    pub fn root(&self) -> &TaxonomyNode {
        &self.root
    }

    /// Documents in file order.
    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn facet_schema(&self) -> &[String] {
        &self.facet_schema
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.documents[i])
    }

    pub fn term_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.term_index
    }

    pub fn label_index(&self) -> &BTreeMap<String, BTreeSet<NodeId>> {
        &self.label_index
    }

    /// Nodes whose label contains `token` and documents whose term bag
    /// contains it. `token` must already be normalized.
    pub fn lookup_term(&self, token: &str) -> (BTreeSet<NodeId>, BTreeSet<String>) {
        (
            self.label_index.get(token).cloned().unwrap_or_default(),
            self.term_index.get(token).cloned().unwrap_or_default(),
        )
    }

    pub fn node(&self, id: NodeId) -> Option<&TaxonomyNode> {
        self.root.walk().into_iter().find(|n| n.id == id)
    }

    /// Whether any document carries at least one free term.
    pub fn has_terms(&self) -> bool {
        self.documents.iter().any(|d| !d.terms.is_empty())
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Structural equality: same tree, documents, schema. Indices are derived.
impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.documents == other.documents && self.facet_schema == other.facet_schema
    }
}

impl Eq for Dataset {}
