//! Pure transformations over derived trees.
//!
//! A [`DerivedTree`] is a view of the classification tree after some dialog
//! steps: paths may have been sliced away, consumed category levels spliced
//! out, or the whole hierarchy rebuilt from facets. Every node carries its
//! purview, the number of distinct documents beneath it.
//!
//! None of the functions here mutate their inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Dataset, Document, NodeId, TaxonomyNode};
use crate::text::{label_key, tokenize};

/// Display label of the leaf that gathers documents left directly under a
/// node that still has category children after a splice.
pub const SYNTHETIC_LABEL: &str = "(documents)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("no remaining path matches")]
    EmptyResult,
    #[error("unknown facet {0}")]
    UnknownFacet(String),
    #[error("facet {0} listed more than once")]
    DuplicateFacet(String),
    #[error("facet order is empty")]
    EmptyFacetOrder,
    #[error("no documents to restructure")]
    EmptyDocumentSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivedNode {
    pub id: NodeId,
    pub label: String,
    pub label_tokens: BTreeSet<String>,
    /// True for the gathering leaf introduced by a splice. Synthetic nodes
    /// have no label tokens and never match input.
    pub synthetic: bool,
    pub children: Vec<DerivedNode>,
    /// Document ids, leaves only.
    pub documents: Vec<String>,
    pub purview: usize,
    /// Build-order ranks of the occurrences each document stands for,
    /// parallel to `documents`. Siblings and leaf documents are kept in
    /// rank order.
    #[serde(skip)]
    ranks: Vec<BTreeSet<u32>>,
    /// Original display labels folded into this node, each with the ranks
    /// beneath it that came from a node so labelled.
    #[serde(skip)]
    variants: BTreeMap<String, BTreeSet<u32>>,
}

impl DerivedNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn from_taxonomy(node: &TaxonomyNode) -> Self {
        DerivedNode {
            id: node.id,
            label: node.label.clone(),
            label_tokens: node.label_tokens.clone(),
            synthetic: false,
            children: node.children.iter().map(DerivedNode::from_taxonomy).collect(),
            documents: node.documents.clone(),
            purview: 0,
            ranks: Vec::new(),
            variants: BTreeMap::new(),
        }
    }

    fn named(id: NodeId, label: String) -> Self {
        DerivedNode {
            id,
            label_tokens: tokenize(&label).into_iter().collect(),
            label,
            synthetic: false,
            children: Vec::new(),
            documents: Vec::new(),
            purview: 0,
            ranks: Vec::new(),
            variants: BTreeMap::new(),
        }
    }

    /// Copy of the node without children or documents.
    fn skeleton(&self) -> Self {
        DerivedNode {
            id: self.id,
            label: self.label.clone(),
            label_tokens: self.label_tokens.clone(),
            synthetic: self.synthetic,
            children: Vec::new(),
            documents: Vec::new(),
            purview: 0,
            ranks: Vec::new(),
            variants: self.variants.clone(),
        }
    }

    /// Smallest rank in this subtree.
    fn first_rank(&self) -> u32 {
        self.ranks
            .iter()
            .flat_map(|r| r.iter().copied())
            .chain(self.children.iter().map(DerivedNode::first_rank))
            .min()
            .unwrap_or(u32::MAX)
    }

    fn all_ranks(&self) -> BTreeSet<u32> {
        self.walk()
            .into_iter()
            .flat_map(|n| n.ranks.iter().flatten().copied())
            .collect()
    }

    /// Numbers document occurrences in depth-first order, recording the
    /// label tokens along each occurrence's path.
    fn assign_ranks(&mut self, above: &BTreeSet<String>, origins: &mut Vec<BTreeSet<String>>) {
        let mut path = above.clone();
        path.extend(self.label_tokens.iter().cloned());
        self.ranks = self
            .documents
            .iter()
            .map(|_| {
                origins.push(path.clone());
                BTreeSet::from([origins.len() as u32 - 1])
            })
            .collect();
        for child in &mut self.children {
            child.assign_ranks(&path, origins);
        }
        self.variants = BTreeMap::from([(self.label.clone(), self.all_ranks())]);
    }

    fn sort_documents(&mut self) {
        let mut docs: Vec<_> = std::mem::take(&mut self.ranks)
            .into_iter()
            .zip(std::mem::take(&mut self.documents))
            .collect();
        docs.sort_by(|a, b| (a.0.first(), &a.1).cmp(&(b.0.first(), &b.1)));
        (self.ranks, self.documents) = docs.into_iter().unzip();
    }

    /// Drops label variants with no surviving occurrence and shows the
    /// smallest remaining one.
    fn settle_label(&mut self) {
        if self.variants.is_empty() {
            return;
        }
        let live = self.all_ranks();
        self.variants.retain(|_, ranks| {
            ranks.retain(|r| live.contains(r));
            !ranks.is_empty()
        });
        if let Some(label) = self.variants.keys().next() {
            self.label = label.clone();
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&DerivedNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Distinct document ids in this subtree, ascending.
    pub fn document_ids(&self) -> BTreeSet<String> {
        self.walk()
            .into_iter()
            .flat_map(|n| n.documents.iter().cloned())
            .collect()
    }

    /// Child whose label matches `label`: exact display label first, then
    /// normalized label.
    pub fn child(&self, label: &str) -> Option<&DerivedNode> {
        self.children.iter().find(|c| c.label == label).or_else(|| {
            let key = label_key(label);
            if key.is_empty() {
                return None;
            }
            self.children
                .iter()
                .find(|c| !c.synthetic && label_key(&c.label) == key)
        })
    }

    pub fn shape(&self) -> Shape {
        Shape {
            label: self.label.clone(),
            synthetic: self.synthetic,
            purview: self.purview,
            documents: self.documents.clone(),
            children: self.children.iter().map(DerivedNode::shape).collect(),
        }
    }
}

/// Identity-free structure of a tree, for structural comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub label: String,
    pub synthetic: bool,
    pub purview: usize,
    pub documents: Vec<String>,
    pub children: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivedTree {
    root: DerivedNode,
    /// Path tokens of each ranked occurrence at build time.
    #[serde(skip)]
    origins: Arc<Vec<BTreeSet<String>>>,
}

impl DerivedTree {
    /// The full base tree of `ds`, with purviews.
    pub fn from_dataset(ds: &Dataset) -> Self {
        DerivedTree::ranked(DerivedNode::from_taxonomy(ds.root()))
    }

    fn ranked(mut root: DerivedNode) -> Self {
        let mut origins = Vec::new();
        root.assign_ranks(&BTreeSet::new(), &mut origins);
        recount(&DerivedTree {
            root,
            origins: Arc::new(origins),
        })
    }

    pub fn root(&self) -> &DerivedNode {
        &self.root
    }

    pub fn find(&self, id: NodeId) -> Option<&DerivedNode> {
        self.root.walk().into_iter().find(|n| n.id == id)
    }

    pub fn purview(&self, id: NodeId) -> Option<usize> {
        self.find(id).map(|n| n.purview)
    }

    /// Purview of every node, keyed by identity.
    pub fn purviews(&self) -> BTreeMap<NodeId, usize> {
        self.root.walk().into_iter().map(|n| (n.id, n.purview)).collect()
    }

    /// Distinct documents remaining in the tree.
    pub fn document_ids(&self) -> BTreeSet<String> {
        self.root.document_ids()
    }

    pub fn remaining(&self) -> usize {
        self.root.purview
    }

    pub fn shape(&self) -> Shape {
        self.root.shape()
    }

    /// Root-to-leaf paths as (labels below the root, document id), one entry
    /// per leaf document occurrence, in tree order.
    pub fn paths(&self) -> Vec<(Vec<String>, String)> {
        fn go(node: &DerivedNode, prefix: &mut Vec<String>, out: &mut Vec<(Vec<String>, String)>) {
            for doc in &node.documents {
                out.push((prefix.clone(), doc.clone()));
            }
            for child in &node.children {
                prefix.push(child.label.clone());
                go(child, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut Vec::new(), &mut out);
        out
    }

    fn max_id(&self) -> u32 {
        self.root.walk().iter().map(|n| n.id.0).max().unwrap_or(0)
    }
}

fn retain_node(
    node: &DerivedNode,
    token: &str,
    origins: &[BTreeSet<String>],
    terms: Option<&Dataset>,
    inherited: bool,
    matched: &mut BTreeSet<NodeId>,
) -> Option<DerivedNode> {
    let hit = node.label_tokens.contains(token);
    let on_path = inherited || hit;
    let mut kept = node.skeleton();
    if node.is_leaf() {
        let term_hit = |id: &String| terms.is_some_and(|ds| ds.document(id).is_some_and(|d| d.terms.contains(token)));
        for (id, ranks) in node.documents.iter().zip(&node.ranks) {
            if term_hit(id) {
                kept.documents.push(id.clone());
                kept.ranks.push(ranks.clone());
            } else if on_path {
                // A merged leaf keeps only the occurrences the token reaches.
                let own: BTreeSet<u32> = ranks
                    .iter()
                    .filter(|&&r| origins[r as usize].contains(token))
                    .copied()
                    .collect();
                kept.documents.push(id.clone());
                kept.ranks.push(if own.is_empty() { ranks.clone() } else { own });
            }
        }
        kept.sort_documents();
        if kept.documents.is_empty() {
            return None;
        }
    } else {
        kept.children = node
            .children
            .iter()
            .filter_map(|c| retain_node(c, token, origins, terms, on_path, matched))
            .collect();
        if kept.children.is_empty() {
            return None;
        }
        // Pruning inside a merged node can move its first occurrence.
        kept.children.sort_by_key(|c| (c.first_rank(), c.id));
        // A gathering leaf with no siblings left folds back into its parent.
        if kept.children.len() == 1 && kept.children[0].synthetic {
            if let Some(only) = kept.children.pop() {
                kept.documents = only.documents;
                kept.ranks = only.ranks;
            }
        }
    }
    if hit {
        matched.insert(node.id);
    }
    kept.settle_label();
    Some(kept)
}

fn retain(
    tree: &DerivedTree,
    token: &str,
    terms: Option<&Dataset>,
) -> Result<(DerivedTree, BTreeSet<NodeId>), SliceError> {
    let mut matched = BTreeSet::new();
    let root =
        retain_node(&tree.root, token, &tree.origins, terms, false, &mut matched).ok_or(SliceError::EmptyResult)?;
    let origins = Arc::clone(&tree.origins);
    Ok((recount(&DerivedTree { root, origins }), matched))
}

/// Keeps exactly the root-to-leaf paths passing through a node whose label
/// contains `token`. Returns the pruned tree and the matching nodes.
pub fn retain_by_label(tree: &DerivedTree, token: &str) -> Result<(DerivedTree, BTreeSet<NodeId>), SliceError> {
    retain(tree, token, None)
}

/// Like [`retain_by_label`], but a path also survives when its leaf document
/// carries `token` among its terms. Also returns the label matches.
pub fn retain_by_label_or_term(
    tree: &DerivedTree,
    token: &str,
    ds: &Dataset,
) -> Result<(DerivedTree, BTreeSet<NodeId>), SliceError> {
    retain(tree, token, Some(ds))
}

/// Keeps the paths matching `token` by label or by leaf term.
pub fn retain_by_leaf_term(tree: &DerivedTree, token: &str, ds: &Dataset) -> Result<DerivedTree, SliceError> {
    retain(tree, token, Some(ds)).map(|(tree, _)| tree)
}

enum Item {
    Node(DerivedNode),
    Docs(Vec<(BTreeSet<u32>, String)>),
}

fn ranked(node: DerivedNode) -> Vec<(BTreeSet<u32>, String)> {
    node.ranks.into_iter().zip(node.documents).collect()
}

struct Splicer<'a> {
    matched: &'a BTreeSet<NodeId>,
    next_id: u32,
}

impl Splicer<'_> {
    fn splice(&mut self, node: &DerivedNode, is_root: bool) -> Vec<Item> {
        let consumed = !is_root && self.matched.contains(&node.id);
        if node.is_leaf() {
            return if consumed {
                vec![Item::Docs(ranked(node.clone()))]
            } else {
                vec![Item::Node(node.clone())]
            };
        }
        let items: Vec<Item> = node.children.iter().flat_map(|c| self.splice(c, false)).collect();
        if consumed {
            items
        } else {
            vec![Item::Node(self.resolve(node.skeleton(), items))]
        }
    }

    /// Attaches `items` to `parent`, merging siblings with equal labels and
    /// gathering loose documents. Children come out in rank order.
    fn resolve(&mut self, mut parent: DerivedNode, items: Vec<Item>) -> DerivedNode {
        let mut loose: Vec<(BTreeSet<u32>, String)> = Vec::new();
        let mut loose_id: Option<NodeId> = None;
        let mut named: HashMap<String, Vec<DerivedNode>> = HashMap::new();

        for item in items {
            match item {
                Item::Docs(docs) => loose.extend(docs),
                Item::Node(node) if node.synthetic => {
                    loose_id = Some(loose_id.map_or(node.id, |id| id.min(node.id)));
                    loose.extend(ranked(node));
                }
                Item::Node(node) => named.entry(label_key(&node.label)).or_default().push(node),
            }
        }

        let loose = dedup(loose);
        if named.is_empty() {
            (parent.ranks, parent.documents) = loose.into_iter().unzip();
            return parent;
        }

        let mut children: Vec<DerivedNode> = Vec::new();
        if !loose.is_empty() {
            let id = loose_id.unwrap_or_else(|| {
                self.next_id += 1;
                NodeId(self.next_id)
            });
            let (ranks, documents) = loose.into_iter().unzip();
            children.push(DerivedNode {
                id,
                label: SYNTHETIC_LABEL.to_string(),
                label_tokens: BTreeSet::new(),
                synthetic: true,
                children: Vec::new(),
                documents,
                purview: 0,
                ranks,
                variants: BTreeMap::new(),
            });
        }
        for (_, mut group) in named {
            if group.len() == 1 {
                children.extend(group.pop());
                continue;
            }
            group.sort_by_key(|n| n.id);
            let mut merged = group[0].skeleton();
            for other in &group[1..] {
                for (label, ranks) in &other.variants {
                    merged.variants.entry(label.clone()).or_default().extend(ranks);
                }
            }
            if let Some(label) = merged.variants.keys().next() {
                merged.label = label.clone();
            }
            let content = group
                .into_iter()
                .flat_map(|mut n| {
                    let kids = std::mem::take(&mut n.children);
                    let mut parts = vec![Item::Docs(ranked(n))];
                    parts.extend(kids.into_iter().map(Item::Node));
                    parts
                })
                .collect();
            children.push(self.resolve(merged, content));
        }
        children.sort_by_key(|c| (c.first_rank(), c.id));
        parent.children = children;
        parent
    }
}

/// One entry per document with the union of its ranks, in rank order.
fn dedup(docs: Vec<(BTreeSet<u32>, String)>) -> Vec<(BTreeSet<u32>, String)> {
    let mut by_doc: HashMap<String, BTreeSet<u32>> = HashMap::new();
    for (ranks, id) in docs {
        by_doc.entry(id).or_default().extend(ranks);
    }
    let mut out: Vec<_> = by_doc.into_iter().map(|(id, ranks)| (ranks, id)).collect();
    out.sort_by(|a, b| (a.0.first(), &a.1).cmp(&(b.0.first(), &b.1)));
    out
}

/// Removes each matched node, promoting its children (or documents) to its
/// parent in place. Siblings that end up with equal normalized labels are
/// merged. Documents left directly under a node that still has category
/// children are gathered into one synthetic leaf.
pub fn splice_consumed(tree: &DerivedTree, matched: &BTreeSet<NodeId>) -> DerivedTree {
    if matched.is_empty() {
        return tree.clone();
    }
    let mut splicer = Splicer {
        matched,
        next_id: tree.max_id(),
    };
    let mut items = splicer.splice(&tree.root, true);
    let root = match items.pop() {
        Some(Item::Node(root)) => root,
        _ => unreachable!("the root is never consumed"),
    };
    let origins = Arc::clone(&tree.origins);
    recount(&DerivedTree { root, origins })
}

/// Recomputes every purview bottom-up.
pub fn recount(tree: &DerivedTree) -> DerivedTree {
    fn go(node: &mut DerivedNode) -> BTreeSet<String> {
        let mut ids: BTreeSet<String> = node.documents.iter().cloned().collect();
        for child in &mut node.children {
            ids.extend(go(child));
        }
        node.purview = ids.len();
        ids
    }
    let mut root = tree.root.clone();
    go(&mut root);
    DerivedTree {
        root,
        origins: Arc::clone(&tree.origins),
    }
}

/// All distinct documents in the tree, sorted by id.
pub fn flatten(tree: &DerivedTree, ds: &Dataset) -> Vec<Document> {
    flatten_node(tree.root(), ds)
}

/// All distinct documents under `node`, sorted by id.
pub fn flatten_node(node: &DerivedNode, ds: &Dataset) -> Vec<Document> {
    node.document_ids()
        .iter()
        .filter_map(|id| ds.document(id).cloned())
        .collect()
}

/// Builds a hierarchy over `docs` with one level per facet in `facet_order`.
///
/// Level nodes are the distinct values (by normalized label) of that facet
/// among the documents on the path, sorted by label. A multi-valued document
/// appears under each of its values.
pub fn pivot(docs: &[&Document], facet_order: &[String], ds: &Dataset) -> Result<DerivedTree, SliceError> {
    if facet_order.is_empty() {
        return Err(SliceError::EmptyFacetOrder);
    }
    let mut seen = HashSet::new();
    for facet in facet_order {
        if !ds.facet_schema().contains(facet) {
            return Err(SliceError::UnknownFacet(facet.clone()));
        }
        if !seen.insert(facet) {
            return Err(SliceError::DuplicateFacet(facet.clone()));
        }
    }
    if docs.is_empty() {
        return Err(SliceError::EmptyDocumentSet);
    }

    fn level(docs: Vec<&Document>, facets: &[String], node: &mut DerivedNode, next_id: &mut u32) {
        let Some((facet, rest)) = facets.split_first() else {
            let mut ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
            ids.sort();
            ids.dedup();
            node.documents = ids;
            return;
        };
        let mut groups: BTreeMap<String, (String, Vec<&Document>)> = BTreeMap::new();
        for doc in docs {
            let mut keys_seen = HashSet::new();
            for value in doc.facet(facet) {
                let key = label_key(value);
                let entry = groups.entry(key.clone()).or_insert_with(|| (value.clone(), Vec::new()));
                if value < &entry.0 {
                    entry.0 = value.clone();
                }
                if keys_seen.insert(key) {
                    entry.1.push(doc);
                }
            }
        }
        let mut groups: Vec<(String, Vec<&Document>)> = groups.into_values().collect();
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        for (label, members) in groups {
            *next_id += 1;
            let mut child = DerivedNode::named(NodeId(*next_id), label);
            level(members, rest, &mut child, next_id);
            node.children.push(child);
        }
    }

    let mut next_id = 0;
    let mut root = DerivedNode::named(NodeId(0), String::new());
    level(docs.to_vec(), facet_order, &mut root, &mut next_id);
    Ok(DerivedTree::ranked(root))
}
