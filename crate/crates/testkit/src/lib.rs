//! Test support: random collections and brute-force reference models.
//!
//! The reference models never touch derived trees. They work on the flat
//! list of root-to-leaf paths, each a document plus the label token sets on
//! its path, and filter that list directly.

use std::collections::BTreeSet;

use dlgen_core::dialog::{Action, DialogState, Mode};
use dlgen_core::otml::{compile_manifest, parse_otml};
use dlgen_core::text::{label_key, tokenize};
use dlgen_core::{load_dataset, Dataset, TaxonomyNode};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

pub const FIXTURE_A: &str = include_str!("../../core/fixtures/fixture_a.json");
pub const UNFACETED: &str = include_str!("../../core/fixtures/unfaceted.json");

pub fn fixture_a() -> Dataset {
    load_dataset(FIXTURE_A.as_bytes()).expect("fixture loads")
}

/// Descriptor enabling every technique available in generalized mode.
pub const FULL_OTML: &str = include_str!("../../core/fixtures/full.otml");

/// Serialized manifest for `techniques` over the first fixture.
pub fn fixture_a_manifest(techniques: &[&str]) -> String {
    let mut otml = String::from("<otml title=\"Fixture\">\n  <dataset path=\"fixture_a.json\"/>\n");
    for t in techniques {
        otml.push_str(&format!("  <technique name=\"{t}\"/>\n"));
    }
    otml.push_str("</otml>\n");
    let descriptor = parse_otml(&otml).expect("descriptor parses");
    compile_manifest(&descriptor, &fixture_a())
        .expect("descriptor compiles")
        .to_json()
}

const WORDS: [&str; 16] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda", "mu", "nu", "xi",
    "omicron", "pi",
];

/// Tokens that no generated collection contains.
pub const ABSENT: [&str; 2] = ["xyzzy", "plugh"];

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub max_docs: usize,
    pub max_depth: usize,
    pub max_facets: usize,
    pub max_terms: usize,
    /// Number of distinct words labels, values, and terms are drawn from.
    pub vocabulary: usize,
}

impl GenConfig {
    /// The largest collections the acceptance suite exercises.
    pub const FULL: GenConfig = GenConfig {
        max_docs: 200,
        max_depth: 5,
        max_facets: 6,
        max_terms: 8,
        vocabulary: 16,
    };

    pub const SMALL: GenConfig = GenConfig {
        max_docs: 12,
        max_depth: 3,
        max_facets: 3,
        max_terms: 4,
        vocabulary: 8,
    };
}

fn word<R: Rng>(rng: &mut R, cfg: &GenConfig) -> &'static str {
    WORDS[rng.gen_range(0..cfg.vocabulary.clamp(1, WORDS.len()))]
}

fn display<R: Rng>(rng: &mut R, tokens: &[&str]) -> String {
    let words: Vec<String> = tokens
        .iter()
        .map(|w| {
            if rng.gen_bool(0.5) {
                let mut c = w.chars();
                c.next()
                    .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
                    .unwrap_or_default()
            } else {
                w.to_string()
            }
        })
        .collect();
    let sep = if rng.gen_bool(0.8) { " " } else { "-" };
    words.join(sep)
}

fn label<R: Rng>(rng: &mut R, cfg: &GenConfig) -> String {
    let n = if rng.gen_bool(0.25) { 2 } else { 1 };
    let tokens: Vec<&str> = (0..n).map(|_| word(rng, cfg)).collect();
    display(rng, &tokens)
}

fn gen_node<R: Rng>(rng: &mut R, cfg: &GenConfig, docs: Vec<String>, depth: usize, max_depth: usize) -> Value {
    let stop = depth >= max_depth || (depth > 0 && (docs.len() == 1 || rng.gen_bool(0.2)));
    if stop {
        return json!({ "docs": docs });
    }
    let k = rng.gen_range(1..=docs.len().min(4));
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, doc) in docs.into_iter().enumerate() {
        let g = if i < k { i } else { rng.gen_range(0..k) };
        groups[g].push(doc);
    }
    let mut keys = BTreeSet::new();
    let mut children = Vec::new();
    for (i, group) in groups.into_iter().enumerate() {
        let mut text = label(rng, cfg);
        let mut tries = 0;
        while !keys.insert(label_key(&text)) {
            tries += 1;
            text = if tries < 8 {
                label(rng, cfg)
            } else {
                format!("{} n{depth}x{i}", label(rng, cfg))
            };
        }
        let mut child = gen_node(rng, cfg, group, depth + 1, max_depth);
        child["label"] = json!(text);
        children.push(child);
    }
    json!({ "children": children })
}

/// A random collection in the dataset file format.
pub fn random_dataset_json<R: Rng>(rng: &mut R, cfg: &GenConfig) -> String {
    let n_docs = rng.gen_range(1..=cfg.max_docs);
    let n_facets = rng.gen_range(0..=cfg.max_facets);
    let facets: Vec<String> = (0..n_facets).map(|i| format!("f{i}")).collect();
    let ids: Vec<String> = (0..n_docs).map(|i| format!("doc{i:03}")).collect();
    let documents: Vec<Value> = ids
        .iter()
        .map(|id| {
            let facet_values: serde_json::Map<String, Value> = facets
                .iter()
                .map(|f| {
                    let n = if rng.gen_bool(0.3) { 2 } else { 1 };
                    let values: Vec<String> = (0..n).map(|_| label(rng, cfg)).collect();
                    (f.clone(), json!(values))
                })
                .collect();
            let n_terms = rng.gen_range(0..=cfg.max_terms);
            let terms: Vec<&str> = (0..n_terms).map(|_| word(rng, cfg)).collect();
            json!({
                "id": id,
                "title": format!("Title of {id}"),
                "uri": format!("https://example.org/{id}"),
                "facets": facet_values,
                "terms": terms,
            })
        })
        .collect();
    let mut shuffled = ids.clone();
    shuffled.shuffle(rng);
    let max_depth = rng.gen_range(1..=cfg.max_depth);
    let mut taxonomy = gen_node(rng, cfg, shuffled, 0, max_depth);
    taxonomy["label"] = json!("");
    json!({ "facets": facets, "taxonomy": taxonomy, "documents": documents }).to_string()
}

pub fn random_dataset<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Dataset {
    let text = random_dataset_json(rng, cfg);
    load_dataset(text.as_bytes()).unwrap_or_else(|e| panic!("generated dataset invalid: {e}\n{text}"))
}

/// Every token the collection knows (labels, facet values, terms), plus a
/// few it does not.
pub fn token_universe(ds: &Dataset) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = ABSENT.iter().map(|s| s.to_string()).collect();
    let mut stack = vec![ds.root()];
    while let Some(node) = stack.pop() {
        out.extend(node.label_tokens.iter().cloned());
        stack.extend(node.children.iter());
    }
    for doc in ds.documents() {
        out.extend(doc.terms.iter().cloned());
        for values in doc.facet_values.values() {
            out.extend(values.iter().flat_map(|v| tokenize(v)));
        }
    }
    out
}

#[derive(Debug, Clone)]
struct OraclePath {
    doc: String,
    labels: Vec<BTreeSet<String>>,
}

/// Reference model of a dialog over the flat path list.
///
/// A fresh token keeps the paths that carry it in some label (or, in
/// generalized mode, whose document carries it as a term). A token already
/// supplied changes nothing; it is accepted while some label not yet spent
/// or some remaining term still carries it. A label is spent once all of its
/// tokens have been supplied since the hierarchy was last built.
#[derive(Debug, Clone)]
pub struct PathOracle<'a> {
    ds: &'a Dataset,
    mode: Mode,
    paths: Vec<OraclePath>,
    consumed: BTreeSet<String>,
    covered: BTreeSet<String>,
    terminated: bool,
}

fn base_paths(ds: &Dataset) -> Vec<OraclePath> {
    fn go(node: &TaxonomyNode, prefix: &mut Vec<BTreeSet<String>>, out: &mut Vec<OraclePath>) {
        for doc in &node.documents {
            out.push(OraclePath {
                doc: doc.clone(),
                labels: prefix.clone(),
            });
        }
        for child in &node.children {
            prefix.push(child.label_tokens.clone());
            go(child, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(ds.root(), &mut Vec::new(), &mut out);
    out
}

impl<'a> PathOracle<'a> {
    pub fn new(ds: &'a Dataset, mode: Mode) -> Self {
        PathOracle {
            ds,
            mode,
            paths: base_paths(ds),
            consumed: BTreeSet::new(),
            covered: BTreeSet::new(),
            terminated: false,
        }
    }

    pub fn documents(&self) -> BTreeSet<String> {
        self.paths.iter().map(|p| p.doc.clone()).collect()
    }

    fn has_term(&self, doc: &str, token: &str) -> bool {
        self.mode == Mode::Generalized && self.ds.document(doc).is_some_and(|d| d.terms.contains(token))
    }

    fn sayable(&self, token: &str) -> bool {
        self.paths.iter().any(|p| {
            p.labels
                .iter()
                .any(|l| l.contains(token) && !l.is_subset(&self.covered))
                || self.has_term(&p.doc, token)
        })
    }

    pub fn out_of_turn(&mut self, utterance: &str) -> bool {
        if self.terminated {
            return false;
        }
        let tokens: BTreeSet<String> = tokenize(utterance).into_iter().collect();
        if tokens.is_empty() {
            return false;
        }
        if tokens.iter().any(|t| self.consumed.contains(t) && !self.sayable(t)) {
            return false;
        }
        let mut paths = self.paths.clone();
        for t in tokens.iter().filter(|t| !self.consumed.contains(*t)) {
            paths.retain(|p| p.labels.iter().any(|l| l.contains(t)) || self.has_term(&p.doc, t));
            if paths.is_empty() {
                return false;
            }
        }
        for t in tokens {
            if self.consumed.insert(t.clone()) {
                self.covered.insert(t);
            }
        }
        self.paths = paths;
        true
    }

    pub fn restructure(&mut self, order: &[String]) -> bool {
        if self.terminated || self.ds.facet_schema().is_empty() || order.is_empty() {
            return false;
        }
        let distinct: BTreeSet<&String> = order.iter().collect();
        if distinct.len() != order.len() || order.iter().any(|f| !self.ds.facet_schema().contains(f)) {
            return false;
        }
        let mut paths = Vec::new();
        for id in self.documents() {
            let doc = self.ds.document(&id).expect("known document");
            let mut prefixes: Vec<Vec<BTreeSet<String>>> = vec![Vec::new()];
            for facet in order {
                let values: BTreeSet<Vec<String>> = doc.facet(facet).iter().map(|v| tokenize(v)).collect();
                prefixes = prefixes
                    .into_iter()
                    .flat_map(|p| {
                        values.iter().map(move |v| {
                            let mut next = p.clone();
                            next.push(v.iter().cloned().collect());
                            next
                        })
                    })
                    .collect();
            }
            paths.extend(prefixes.into_iter().map(|labels| OraclePath {
                doc: id.clone(),
                labels,
            }));
        }
        self.paths = paths;
        self.covered.clear();
        true
    }

    /// Applies `action`; returns whether it is expected to succeed, or
    /// `None` for navigation, which depends on the tree's shape.
    pub fn apply(&mut self, action: &Action) -> Option<bool> {
        match action {
            Action::Navigate(_) => {
                if self.terminated {
                    Some(false)
                } else {
                    None
                }
            }
            Action::OutOfTurn(u) => Some(self.out_of_turn(u)),
            Action::Vocabulary => Some(!self.terminated),
            Action::Collect => {
                let ok = !self.terminated;
                self.terminated = true;
                Some(ok)
            }
            Action::Restructure(order) => Some(self.restructure(order)),
            Action::Reset => {
                *self = PathOracle::new(self.ds, self.mode);
                Some(true)
            }
        }
    }
}

/// Documents matching every token, where a token matches a document when it
/// labels a node on the document's home path or (generalized mode) is one of
/// its terms.
pub fn document_filter(ds: &Dataset, mode: Mode, tokens: &[String]) -> BTreeSet<String> {
    base_paths(ds)
        .into_iter()
        .filter(|p| {
            let doc = ds.document(&p.doc).expect("known document");
            tokens
                .iter()
                .all(|t| p.labels.iter().any(|l| l.contains(t)) || (mode == Mode::Generalized && doc.terms.contains(t)))
        })
        .map(|p| p.doc)
        .collect()
}

/// A dialog step, resolved against the live state when it is run.
#[derive(Debug, Clone)]
pub enum Step {
    Say(String),
    /// Follow the n-th child (modulo the number of children).
    NavigatePick(usize),
    NavigateLabel(String),
    Vocabulary,
    Collect,
    Restructure(Vec<String>),
    Reset,
}

impl Step {
    pub fn resolve(&self, state: &DialogState) -> Action {
        match self {
            Step::Say(u) => Action::OutOfTurn(u.clone()),
            Step::NavigatePick(n) => {
                let children = &state.focus_node().children;
                if children.is_empty() {
                    Action::Navigate("nowhere".into())
                } else {
                    Action::Navigate(children[n % children.len()].label.clone())
                }
            }
            Step::NavigateLabel(l) => Action::Navigate(l.clone()),
            Step::Vocabulary => Action::Vocabulary,
            Step::Collect => Action::Collect,
            Step::Restructure(order) => Action::Restructure(order.clone()),
            Step::Reset => Action::Reset,
        }
    }
}

/// Random utterance of one or two tokens drawn from `universe`, sometimes
/// with noise punctuation.
pub fn random_utterance<R: Rng>(rng: &mut R, universe: &[String]) -> String {
    let n = if rng.gen_bool(0.7) { 1 } else { 2 };
    let words: Vec<&str> = (0..n)
        .map(|_| universe[rng.gen_range(0..universe.len())].as_str())
        .collect();
    let text = words.join(" ");
    if rng.gen_bool(0.2) {
        format!("{}!", text.to_uppercase())
    } else {
        text
    }
}

pub fn random_steps<R: Rng>(rng: &mut R, ds: &Dataset, max_len: usize) -> Vec<Step> {
    let universe: Vec<String> = token_universe(ds).into_iter().collect();
    let schema = ds.facet_schema();
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| match rng.gen_range(0..100) {
            0..=49 => Step::Say(random_utterance(rng, &universe)),
            50..=64 => Step::NavigatePick(rng.gen_range(0..8)),
            65..=67 => Step::NavigateLabel("nowhere".into()),
            68..=73 => Step::Vocabulary,
            74..=79 => Step::Collect,
            80..=93 => {
                let mut order: Vec<String> = schema.to_vec();
                order.shuffle(rng);
                order.truncate(rng.gen_range(1..=order.len().max(1)));
                if rng.gen_bool(0.1) {
                    order.push("nosuchfacet".into());
                }
                Step::Restructure(order)
            }
            _ => Step::Reset,
        })
        .collect()
}
