//! The dialog session state machine.
//!
//! A [`DialogState`] is an immutable value; every operation returns a new
//! state. The system holds the initiative by presenting the children of the
//! focus node. The user either follows one of them ([`DialogState::navigate`])
//! or takes the initiative with an out-of-turn utterance, which slices the
//! whole remaining tree and hands the initiative back at the root.
//!
//! Consumption of category levels: a node is spliced out once every token of
//! its label has been supplied since the tree was last (re)built. So "Belkin"
//! vanishes after `belkin`, while "Information Systems" stays visible after
//! `information` alone and vanishes once `systems` is supplied too.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Dataset, Document, NodeId};
use crate::slicer::{
    self, flatten_node, retain_by_label, retain_by_label_or_term, splice_consumed, DerivedNode, DerivedTree, SliceError,
};
use crate::text::{label_key, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Out-of-turn input may only name classification labels.
    Basic,
    /// Out-of-turn input may also name terms of the leaf documents.
    Generalized,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Mode::Basic),
            "generalized" => Ok(Mode::Generalized),
            other => Err(format!("unknown mode {other:?} (expected basic or generalized)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Basic => "basic",
            Mode::Generalized => "generalized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Terminated,
}

/// One user turn. Serialized as `{"action": "...", "arg": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "arg", rename_all = "snake_case")]
pub enum Action {
    Navigate(String),
    OutOfTurn(String),
    Vocabulary,
    Collect,
    Restructure(Vec<String>),
    Reset,
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::Navigate(_) => "navigate",
            Action::OutOfTurn(_) => "out_of_turn",
            Action::Vocabulary => "vocabulary",
            Action::Collect => "collect",
            Action::Restructure(_) => "restructure",
            Action::Reset => "reset",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogError {
    #[error("no child labelled {0:?} at the current position")]
    NoSuchChild(String),
    #[error("the dialog has terminated; only reset is possible")]
    DialogTerminated,
    #[error("the utterance contains no words")]
    EmptyUtterance,
    #[error("nothing remaining matches {0:?}")]
    NoMatch(String),
    #[error("the collection has no categorical facets")]
    NotFaceted,
    #[error("unknown facet {0:?}")]
    UnknownFacet(String),
    #[error("facet {0:?} listed more than once")]
    DuplicateFacet(String),
    #[error("facet order is empty")]
    EmptyFacetOrder,
}

impl DialogError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            DialogError::NoSuchChild(_) => "NoSuchChild",
            DialogError::DialogTerminated => "DialogTerminated",
            DialogError::EmptyUtterance => "EmptyUtterance",
            DialogError::NoMatch(_) => "NoMatch",
            DialogError::NotFaceted => "NotFaceted",
            DialogError::UnknownFacet(_) => "UnknownFacet",
            DialogError::DuplicateFacet(_) => "DuplicateFacet",
            DialogError::EmptyFacetOrder => "EmptyFacetOrder",
        }
    }
}

impl From<SliceError> for DialogError {
    fn from(e: SliceError) -> Self {
        match e {
            SliceError::UnknownFacet(f) => DialogError::UnknownFacet(f),
            SliceError::DuplicateFacet(f) => DialogError::DuplicateFacet(f),
            SliceError::EmptyFacetOrder => DialogError::EmptyFacetOrder,
            // The tree always holds at least one document.
            SliceError::EmptyResult | SliceError::EmptyDocumentSet => {
                unreachable!("derived trees are never empty")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Label,
    LeafTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsumedToken {
    pub token: String,
    pub kind: MatchKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(flatten)]
    pub action: Action,
    /// `"ok"` or the error code.
    pub outcome: String,
    /// Documents remaining after the action.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentView {
    pub id: String,
    pub title: String,
    pub uri: String,
}

impl From<&Document> for DocumentView {
    fn from(d: &Document) -> Self {
        DocumentView {
            id: d.id.clone(),
            title: d.title.clone(),
            uri: d.uri.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildView {
    pub label: String,
    pub purview: usize,
}

/// Read-only projection of a dialog state for front ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct View {
    pub mode: Mode,
    pub status: Status,
    /// Labels from the root down to the focus node.
    pub focus: Vec<String>,
    /// Purview of the focus node.
    pub purview: usize,
    /// Purview of the root.
    pub remaining: usize,
    pub children: Vec<ChildView>,
    /// Documents attached directly to the focus node (leaves only).
    pub documents: Vec<DocumentView>,
    pub consumed: Vec<String>,
    /// Collected results, once the dialog has terminated.
    pub results: Option<Vec<DocumentView>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: usize,
}

/// Answer to "what may I say?".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub labels: Vec<LabelCount>,
    pub terms: Vec<TermCount>,
}

impl Vocabulary {
    /// Every single token that the listing covers.
    pub fn sayable_tokens(&self) -> BTreeSet<String> {
        self.labels
            .iter()
            .flat_map(|l| tokenize(&l.label))
            .chain(self.terms.iter().map(|t| t.term.clone()))
            .collect()
    }
}

/// Successful result of [`DialogState::apply`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    View { view: View },
    Vocabulary { vocabulary: Vocabulary },
    Collected { results: Vec<DocumentView>, view: View },
}

#[derive(Debug, Clone)]
pub struct DialogState {
    dataset: Arc<Dataset>,
    tree: DerivedTree,
    /// Node ids from the root (exclusive) down to the focus node.
    focus: Vec<NodeId>,
    consumed: Vec<ConsumedToken>,
    /// Tokens supplied since the tree was last built; decides which labels
    /// are spent.
    covered: BTreeSet<String>,
    mode: Mode,
    status: Status,
    transcript: Vec<TranscriptEntry>,
    results: Option<Vec<String>>,
}

impl DialogState {
    pub fn new(dataset: Arc<Dataset>, mode: Mode) -> Self {
        DialogState {
            tree: DerivedTree::from_dataset(&dataset),
            dataset,
            focus: Vec::new(),
            consumed: Vec::new(),
            covered: BTreeSet::new(),
            mode,
            status: Status::Active,
            transcript: Vec::new(),
            results: None,
        }
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn tree(&self) -> &DerivedTree {
        &self.tree
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn consumed(&self) -> &[ConsumedToken] {
        &self.consumed
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// Actions of the transcript, in order; replaying them against the same
    /// dataset and mode reproduces this state.
    pub fn script(&self) -> Vec<Action> {
        self.transcript.iter().map(|e| e.action.clone()).collect()
    }

    pub fn focus_node(&self) -> &DerivedNode {
        let mut node = self.tree.root();
        for id in &self.focus {
            node = node
                .children
                .iter()
                .find(|c| c.id == *id)
                .expect("focus addresses an existing node");
        }
        node
    }

    /// Labels from the root down to the focus node.
    pub fn focus_path(&self) -> Vec<String> {
        let mut node = self.tree.root();
        let mut labels = Vec::new();
        for id in &self.focus {
            node = node.children.iter().find(|c| c.id == *id).expect("valid focus");
            labels.push(node.label.clone());
        }
        labels
    }

    fn ensure_active(&self) -> Result<(), DialogError> {
        match self.status {
            Status::Active => Ok(()),
            Status::Terminated => Err(DialogError::DialogTerminated),
        }
    }

    fn record(mut self, action: Action, outcome: &str) -> Self {
        self.transcript.push(TranscriptEntry {
            action,
            outcome: outcome.to_string(),
            remaining: self.tree.remaining(),
        });
        self
    }

    /// Follows the child of the focus node labelled `child_label`.
    pub fn navigate(&self, child_label: &str) -> Result<DialogState, DialogError> {
        self.ensure_active()?;
        let child = self
            .focus_node()
            .child(child_label)
            .ok_or_else(|| DialogError::NoSuchChild(child_label.to_string()))?;
        let mut next = self.clone();
        next.focus.push(child.id);
        Ok(next.record(Action::Navigate(child_label.to_string()), "ok"))
    }

    fn still_sayable(&self, token: &str) -> bool {
        let by_label = self
            .tree
            .root()
            .walk()
            .into_iter()
            .any(|n| n.label_tokens.contains(token));
        by_label
            || (self.mode == Mode::Generalized
                && self
                    .tree
                    .document_ids()
                    .iter()
                    .any(|id| self.dataset.document(id).is_some_and(|d| d.terms.contains(token))))
    }

    /// Applies unsolicited input to the whole remaining tree.
    ///
    /// Every token must match (conjunction); if any token matches nothing,
    /// the utterance is rejected and the state is left as it was. A token
    /// that was already consumed is accepted without effect as long as it can
    /// still be said.
    pub fn out_of_turn(&self, utterance: &str) -> Result<DialogState, DialogError> {
        self.ensure_active()?;
        let mut tokens = tokenize(utterance);
        if tokens.is_empty() {
            return Err(DialogError::EmptyUtterance);
        }
        let mut seen = BTreeSet::new();
        tokens.retain(|t| seen.insert(t.clone()));

        let already: BTreeSet<&str> = self.consumed.iter().map(|c| c.token.as_str()).collect();
        let (repeated, fresh): (Vec<String>, Vec<String>) =
            tokens.into_iter().partition(|t| already.contains(t.as_str()));
        if let Some(t) = repeated.iter().find(|t| !self.still_sayable(t)) {
            return Err(DialogError::NoMatch(t.clone()));
        }

        let mut next = self.clone();
        for token in fresh {
            let (tree, matched) = match self.mode {
                Mode::Basic => retain_by_label(&next.tree, &token),
                Mode::Generalized => retain_by_label_or_term(&next.tree, &token, &self.dataset),
            }
            .map_err(|_| DialogError::NoMatch(token.clone()))?;
            next.covered.insert(token.clone());
            let spent: BTreeSet<NodeId> = matched
                .iter()
                .copied()
                .filter(|id| tree.find(*id).is_some_and(|n| n.label_tokens.is_subset(&next.covered)))
                .collect();
            next.tree = splice_consumed(&tree, &spent);
            next.consumed.push(ConsumedToken {
                kind: if matched.is_empty() {
                    MatchKind::LeafTerm
                } else {
                    MatchKind::Label
                },
                token,
            });
        }
        next.focus.clear();
        Ok(next.record(Action::OutOfTurn(utterance.to_string()), "ok"))
    }

    /// What may still be said: labels in the current tree and, in
    /// generalized mode, terms of the remaining documents, with counts.
    pub fn vocabulary(&self) -> Result<Vocabulary, DialogError> {
        self.ensure_active()?;
        let mut labels: BTreeMap<String, (String, BTreeSet<String>)> = BTreeMap::new();
        for node in self.tree.root().walk().into_iter().skip(1) {
            if node.synthetic || node.label_tokens.is_empty() {
                continue;
            }
            let entry = labels
                .entry(label_key(&node.label))
                .or_insert_with(|| (node.label.clone(), BTreeSet::new()));
            entry.1.extend(node.document_ids());
        }
        let mut labels: Vec<LabelCount> = labels
            .into_values()
            .map(|(label, docs)| LabelCount {
                label,
                count: docs.len(),
            })
            .collect();
        labels.sort_by(|a, b| a.label.cmp(&b.label));

        let mut terms: BTreeMap<String, usize> = BTreeMap::new();
        if self.mode == Mode::Generalized {
            for id in self.tree.document_ids() {
                if let Some(doc) = self.dataset.document(&id) {
                    for term in &doc.terms {
                        *terms.entry(term.clone()).or_default() += 1;
                    }
                }
            }
        }
        Ok(Vocabulary {
            labels,
            terms: terms
                .into_iter()
                .map(|(term, count)| TermCount { term, count })
                .collect(),
        })
    }

    /// Terminates the dialog, returning the documents under the focus node
    /// sorted by id.
    pub fn collect(&self) -> Result<(DialogState, Vec<Document>), DialogError> {
        self.ensure_active()?;
        let docs = flatten_node(self.focus_node(), &self.dataset);
        let mut next = self.clone();
        next.status = Status::Terminated;
        next.results = Some(docs.iter().map(|d| d.id.clone()).collect());
        Ok((next.record(Action::Collect, "ok"), docs))
    }

    /// Rebuilds the hierarchy over the remaining documents, one level per
    /// facet in `facet_order`.
    pub fn restructure(&self, facet_order: &[String]) -> Result<DialogState, DialogError> {
        self.ensure_active()?;
        if self.dataset.facet_schema().is_empty() {
            return Err(DialogError::NotFaceted);
        }
        let ids = self.tree.document_ids();
        let docs: Vec<&Document> = ids.iter().filter_map(|id| self.dataset.document(id)).collect();
        let tree = slicer::pivot(&docs, facet_order, &self.dataset)?;
        let mut next = self.clone();
        next.tree = tree;
        next.focus.clear();
        next.covered.clear();
        Ok(next.record(Action::Restructure(facet_order.to_vec()), "ok"))
    }

    /// Starts over on the full tree, keeping the transcript.
    pub fn reset(&self) -> DialogState {
        let mut next = DialogState::new(Arc::clone(&self.dataset), self.mode);
        next.transcript = self.transcript.clone();
        next.record(Action::Reset, "ok")
    }

    pub fn view(&self) -> View {
        let focus = self.focus_node();
        View {
            mode: self.mode,
            status: self.status,
            focus: self.focus_path(),
            purview: focus.purview,
            remaining: self.tree.remaining(),
            children: focus
                .children
                .iter()
                .map(|c| ChildView {
                    label: c.label.clone(),
                    purview: c.purview,
                })
                .collect(),
            documents: focus
                .documents
                .iter()
                .filter_map(|id| self.dataset.document(id))
                .map(DocumentView::from)
                .collect(),
            consumed: self.consumed.iter().map(|c| c.token.clone()).collect(),
            results: self.results.as_ref().map(|ids| {
                ids.iter()
                    .filter_map(|id| self.dataset.document(id))
                    .map(DocumentView::from)
                    .collect()
            }),
        }
    }

    /// Runs one action. Failed actions leave the dialog unchanged but are
    /// still recorded in the transcript with their error code.
    pub fn apply(&self, action: &Action) -> (DialogState, Result<Response, DialogError>) {
        let outcome = match action {
            Action::Navigate(label) => self.navigate(label).map(|s| {
                let view = s.view();
                (s, Response::View { view })
            }),
            Action::OutOfTurn(utterance) => self.out_of_turn(utterance).map(|s| {
                let view = s.view();
                (s, Response::View { view })
            }),
            Action::Vocabulary => self.vocabulary().map(|vocabulary| {
                (
                    self.clone().record(Action::Vocabulary, "ok"),
                    Response::Vocabulary { vocabulary },
                )
            }),
            Action::Collect => self.collect().map(|(s, docs)| {
                let view = s.view();
                let results = docs.iter().map(DocumentView::from).collect();
                (s, Response::Collected { results, view })
            }),
            Action::Restructure(order) => self.restructure(order).map(|s| {
                let view = s.view();
                (s, Response::View { view })
            }),
            Action::Reset => {
                let s = self.reset();
                let view = s.view();
                Ok((s, Response::View { view }))
            }
        };
        match outcome {
            Ok((state, response)) => (state, Ok(response)),
            Err(e) => (self.clone().record(action.clone(), e.code()), Err(e)),
        }
    }
}

/// Structural equality of the dialog itself, ignoring the transcript.
impl PartialEq for DialogState {
    fn eq(&self, other: &Self) -> bool {
        self.tree.shape() == other.tree.shape()
            && self.focus_path() == other.focus_path()
            && self.consumed == other.consumed
            && self.covered == other.covered
            && self.mode == other.mode
            && self.status == other.status
            && self.results == other.results
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_dataset;

    fn fixture() -> Arc<Dataset> {
        Arc::new(load_dataset(include_str!("../fixtures/fixture_a.json").as_bytes()).unwrap())
    }

    fn children(state: &DialogState) -> Vec<(String, usize)> {
        state
            .view()
            .children
            .into_iter()
            .map(|c| (c.label, c.purview))
            .collect()
    }

    fn pairs(items: &[(&str, usize)]) -> Vec<(String, usize)> {
        items.iter().map(|(l, n)| (l.to_string(), *n)).collect()
    }

    #[test]
    fn new_dialog_shows_full_tree() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        assert_eq!(s.tree().remaining(), 4);
        assert_eq!(
            children(&s),
            pairs(&[("Hardware", 1), ("Information Systems", 2), ("Theory", 1)])
        );
        let b = DialogState::new(fixture(), Mode::Basic);
        assert_eq!(b.tree(), s.tree());
        assert_eq!(b.mode(), Mode::Basic);
    }

    #[test]
    fn navigate_examples() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let hw = s.navigate("Hardware").unwrap();
        assert_eq!(hw.focus_path(), ["Hardware"]);
        assert_eq!(hw.focus_node().purview, 1);
        assert_eq!(children(&hw), pairs(&[("Smith", 1)]));
        assert_eq!(
            s.navigate("Networks").unwrap_err(),
            DialogError::NoSuchChild("Networks".into())
        );
        assert_eq!(
            s.navigate("information  SYSTEMS").unwrap().focus_path(),
            ["Information Systems"]
        );
        assert_eq!(hw.tree(), s.tree());
    }

    #[test]
    fn out_of_turn_belkin_prunes_other_categories() {
        let s = DialogState::new(fixture(), Mode::Generalized)
            .navigate("Theory")
            .unwrap();
        let s = s.out_of_turn("Belkin").unwrap();
        assert!(s.focus_path().is_empty());
        assert_eq!(children(&s), pairs(&[("Information Systems", 2)]));
        let is = s.navigate("Information Systems").unwrap();
        let view = is.view();
        assert!(view.children.is_empty());
        assert_eq!(
            view.documents.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(),
            ["d2", "d3"]
        );
    }

    #[test]
    fn basic_mode_rejects_leaf_terms() {
        let s = DialogState::new(fixture(), Mode::Basic);
        assert_eq!(
            s.out_of_turn("retrieval").unwrap_err(),
            DialogError::NoMatch("retrieval".into())
        );
        let g = DialogState::new(fixture(), Mode::Generalized)
            .out_of_turn("retrieval")
            .unwrap();
        assert_eq!(g.tree().document_ids().into_iter().collect::<Vec<_>>(), ["d2"]);
        assert_eq!(g.consumed()[0].kind, MatchKind::LeafTerm);
    }

    #[test]
    fn utterances_are_conjunctive_and_atomic() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let t = s.out_of_turn("smith complexity").unwrap();
        assert_eq!(t.tree().document_ids().into_iter().collect::<Vec<_>>(), ["d4"]);
        assert_eq!(children(&t), pairs(&[("Theory", 1)]));

        let err = s.out_of_turn("smith xyzzy").unwrap_err();
        assert_eq!(err, DialogError::NoMatch("xyzzy".into()));
        assert_eq!(s.out_of_turn("  ,, ").unwrap_err(), DialogError::EmptyUtterance);
    }

    #[test]
    fn partially_said_labels_stay_visible() {
        let s = DialogState::new(fixture(), Mode::Basic);
        let s = s.out_of_turn("information").unwrap();
        assert_eq!(children(&s), pairs(&[("Information Systems", 2)]));
        // Repeating a consumed token that is still visible is a no-op.
        let again = s.out_of_turn("information").unwrap();
        assert_eq!(again, s);
        let s = s.out_of_turn("systems").unwrap();
        assert_eq!(children(&s), pairs(&[("Belkin", 2)]));
        assert_eq!(
            s.out_of_turn("systems").unwrap_err(),
            DialogError::NoMatch("systems".into())
        );
    }

    #[test]
    fn vocabulary_examples() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let v = s.vocabulary().unwrap();
        let labels: Vec<(String, usize)> = v.labels.iter().map(|l| (l.label.clone(), l.count)).collect();
        assert_eq!(
            labels,
            pairs(&[
                ("Belkin", 2),
                ("Hardware", 1),
                ("Information Systems", 2),
                ("Smith", 2),
                ("Theory", 1)
            ])
        );
        assert!(v.terms.contains(&TermCount {
            term: "retrieval".into(),
            count: 1
        }));
        assert!(v.terms.contains(&TermCount {
            term: "complexity".into(),
            count: 1
        }));

        let v = s.out_of_turn("belkin").unwrap().vocabulary().unwrap();
        assert_eq!(
            v.labels,
            [LabelCount {
                label: "Information Systems".into(),
                count: 2
            }]
        );
        let terms: Vec<(String, usize)> = v.terms.iter().map(|t| (t.term.clone(), t.count)).collect();
        assert_eq!(
            terms,
            pairs(&[("browsing", 1), ("hypertext", 1), ("models", 1), ("retrieval", 1)])
        );

        let basic = DialogState::new(fixture(), Mode::Basic);
        assert!(basic.vocabulary().unwrap().terms.is_empty());
    }

    #[test]
    fn collect_terminates() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let (done, docs) = s
            .out_of_turn("belkin")
            .unwrap()
            .navigate("Information Systems")
            .unwrap()
            .collect()
            .unwrap();
        assert_eq!(docs.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["d2", "d3"]);
        assert_eq!(done.status(), Status::Terminated);
        assert_eq!(done.collect().unwrap_err(), DialogError::DialogTerminated);
        assert_eq!(done.out_of_turn("smith").unwrap_err(), DialogError::DialogTerminated);
        assert_eq!(done.vocabulary().unwrap_err(), DialogError::DialogTerminated);
        let view = done.view();
        assert_eq!(view.status, Status::Terminated);
        assert_eq!(view.results.unwrap().len(), 2);

        let (_, all) = s.collect().unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn restructure_examples() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let order = vec!["author".to_string(), "category".to_string()];
        let r = s.restructure(&order).unwrap();
        assert_eq!(children(&r), pairs(&[("Belkin", 2), ("Smith", 2)]));
        let b = r.navigate("Belkin").unwrap();
        assert_eq!(children(&b), pairs(&[("Information Systems", 2)]));

        let smith = s.out_of_turn("smith").unwrap().restructure(&order).unwrap();
        assert_eq!(children(&smith), pairs(&[("Smith", 2)]));
        let inner = smith.navigate("Smith").unwrap();
        assert_eq!(children(&inner), pairs(&[("Hardware", 1), ("Theory", 1)]));
        assert_eq!(smith.consumed().len(), 1);

        assert_eq!(
            s.restructure(&["journal".to_string()]).unwrap_err(),
            DialogError::UnknownFacet("journal".into())
        );
        let flat = Arc::new(load_dataset(include_str!("../fixtures/unfaceted.json").as_bytes()).unwrap());
        let f = DialogState::new(flat, Mode::Generalized);
        assert_eq!(f.restructure(&order).unwrap_err(), DialogError::NotFaceted);
    }

    #[test]
    fn reset_restores_full_tree() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let done = s
            .out_of_turn("smith")
            .unwrap()
            .out_of_turn("theory")
            .unwrap()
            .collect()
            .unwrap()
            .0;
        let r = done.reset();
        assert_eq!(r.status(), Status::Active);
        assert_eq!(r.tree().remaining(), 4);
        assert_eq!(r, s);
        assert_eq!(r.transcript().len(), 4);
        assert_eq!(s.reset().transcript().len(), 1);
    }

    #[test]
    fn apply_records_errors_without_changing_the_dialog() {
        let s = DialogState::new(fixture(), Mode::Generalized);
        let (after, result) = s.apply(&Action::OutOfTurn("xyzzy".into()));
        assert_eq!(result.unwrap_err(), DialogError::NoMatch("xyzzy".into()));
        assert_eq!(after, s);
        assert_eq!(after.transcript()[0].outcome, "NoMatch");
        assert_eq!(after.transcript()[0].remaining, 4);
    }

    #[test]
    fn actions_use_the_wire_format() {
        let a: Action = serde_json::from_str(r#"{"action": "out_of_turn", "arg": "belkin"}"#).unwrap();
        assert_eq!(a, Action::OutOfTurn("belkin".into()));
        let a: Action = serde_json::from_str(r#"{"action": "collect"}"#).unwrap();
        assert_eq!(a, Action::Collect);
        let a: Action = serde_json::from_str(r#"{"action": "restructure", "arg": ["author"]}"#).unwrap();
        assert_eq!(a, Action::Restructure(vec!["author".into()]));
        assert_eq!(
            serde_json::to_string(&Action::Navigate("Theory".into())).unwrap(),
            r#"{"action":"navigate","arg":"Theory"}"#
        );
    }
}
