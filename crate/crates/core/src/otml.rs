//! OTML, the out-of-turn interface descriptor, and its manifest compiler.
//!
//! A designer picks the interaction techniques an interface should offer and
//! may customize the text of each widget:
//!
//! ```xml
//! <otml title="Desk Library">
//!   <dataset path="fixture_a.json"/>
//!   <technique name="generalized_oot"/>
//!   <technique name="what_may_i_say"/>
//!   <technique name="collect"/>
//!   <widget id="oot_input" tooltip="Say a topic, author, or year"/>
//! </otml>
//! ```
//!
//! The descriptor is checked against the collection it targets and compiled
//! to a [`UiManifest`], a JSON document with a stable key order that any
//! front end can consume.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialog::{Action, Mode};
use crate::model::Dataset;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    BasicOot,
    GeneralizedOot,
    WhatMayISay,
    Collect,
    Restructure,
}

impl Technique {
    pub const ALL: [Technique; 5] = [
        Technique::BasicOot,
        Technique::GeneralizedOot,
        Technique::WhatMayISay,
        Technique::Collect,
        Technique::Restructure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::BasicOot => "basic_oot",
            Technique::GeneralizedOot => "generalized_oot",
            Technique::WhatMayISay => "what_may_i_say",
            Technique::Collect => "collect",
            Technique::Restructure => "restructure",
        }
    }

    /// The widget presenting this technique.
    pub fn widget(self) -> WidgetId {
        match self {
            Technique::BasicOot | Technique::GeneralizedOot => WidgetId::OotInput,
            Technique::WhatMayISay => WidgetId::VocabButton,
            Technique::Collect => WidgetId::CollectButton,
            Technique::Restructure => WidgetId::RestructurePicker,
        }
    }
}

impl FromStr for Technique {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technique::ALL.into_iter().find(|t| t.name() == s).ok_or(())
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetId {
    OotInput,
    VocabButton,
    CollectButton,
    RestructurePicker,
}

impl WidgetId {
    pub const ALL: [WidgetId; 4] = [
        WidgetId::OotInput,
        WidgetId::VocabButton,
        WidgetId::CollectButton,
        WidgetId::RestructurePicker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WidgetId::OotInput => "oot_input",
            WidgetId::VocabButton => "vocab_button",
            WidgetId::CollectButton => "collect_button",
            WidgetId::RestructurePicker => "restructure_picker",
        }
    }
}

impl FromStr for WidgetId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WidgetId::ALL.into_iter().find(|w| w.name() == s).ok_or(())
    }
}

impl fmt::Display for WidgetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Designer overrides for one widget. Unset fields take the defaults at
/// compile time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WidgetCustomization {
    pub label: Option<String>,
    pub tooltip: Option<String>,
    pub placeholder: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtmlDescriptor {
    pub title: String,
    pub dataset_path: String,
    pub techniques: BTreeSet<Technique>,
    pub widgets: BTreeMap<WidgetId, WidgetCustomization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetText {
    pub label: &'static str,
    pub tooltip: &'static str,
    pub placeholder: &'static str,
}

/// Default widget text, applied when a descriptor leaves a field unset.
pub const WIDGET_DEFAULTS: [(WidgetId, WidgetText); 4] = [
    (
        WidgetId::OotInput,
        WidgetText {
            label: "Say",
            tooltip: "Type a topic, author, or term at any time to narrow the collection",
            placeholder: "e.g. Belkin",
        },
    ),
    (
        WidgetId::VocabButton,
        WidgetText {
            label: "What may I say?",
            tooltip: "List the words that can still narrow the collection",
            placeholder: "",
        },
    ),
    (
        WidgetId::CollectButton,
        WidgetText {
            label: "Collect results",
            tooltip: "End the dialog and list the remaining documents",
            placeholder: "",
        },
    ),
    (
        WidgetId::RestructurePicker,
        WidgetText {
            label: "Restructure",
            tooltip: "Choose a facet order to rebuild the hierarchy",
            placeholder: "facet order",
        },
    ),
];

pub fn widget_defaults(id: WidgetId) -> WidgetText {
    WIDGET_DEFAULTS
        .iter()
        .find(|(w, _)| *w == id)
        .map(|(_, text)| *text)
        .expect("every widget has defaults")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OtmlError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u32, column: u32, message: String },
    #[error("unknown element <{name}> at line {line}, column {column}")]
    UnknownElement { name: String, line: u32, column: u32 },
    #[error("unknown attribute {name:?} on <{element}> at line {line}, column {column}")]
    UnknownAttribute {
        element: String,
        name: String,
        line: u32,
        column: u32,
    },
    #[error("missing attribute {name:?} on <{element}> at line {line}, column {column}")]
    MissingAttribute {
        element: String,
        name: String,
        line: u32,
        column: u32,
    },
    #[error("unknown technique {name:?} at line {line}, column {column}")]
    UnknownTechnique { name: String, line: u32, column: u32 },
    #[error("unknown widget {name:?} at line {line}, column {column}")]
    UnknownWidget { name: String, line: u32, column: u32 },
    #[error("invalid descriptor: {0}")]
    Invalid(String),
}

fn position(doc: &roxmltree::Document, node: roxmltree::Node) -> (u32, u32) {
    let pos = doc.text_pos_at(node.range().start);
    (pos.row, pos.col)
}

fn check_attributes(doc: &roxmltree::Document, node: roxmltree::Node, allowed: &[&str]) -> Result<(), OtmlError> {
    for attr in node.attributes() {
        if !allowed.contains(&attr.name()) {
            let (line, column) = position(doc, node);
            return Err(OtmlError::UnknownAttribute {
                element: node.tag_name().name().to_string(),
                name: attr.name().to_string(),
                line,
                column,
            });
        }
    }
    Ok(())
}

fn required<'a>(doc: &roxmltree::Document, node: roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str, OtmlError> {
    node.attribute(name).ok_or_else(|| {
        let (line, column) = position(doc, node);
        OtmlError::MissingAttribute {
            element: node.tag_name().name().to_string(),
            name: name.to_string(),
            line,
            column,
        }
    })
}

/// Parses an OTML document. Defaults are not applied here.
pub fn parse_otml(source: &str) -> Result<OtmlDescriptor, OtmlError> {
    let doc = roxmltree::Document::parse(source).map_err(|e| {
        let pos = e.pos();
        OtmlError::Parse {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "otml" {
        let (line, column) = position(&doc, root);
        return Err(OtmlError::UnknownElement {
            name: root.tag_name().name().to_string(),
            line,
            column,
        });
    }
    check_attributes(&doc, root, &["title"])?;
    let title = required(&doc, root, "title")?.to_string();

    let mut dataset_path = None;
    let mut techniques = BTreeSet::new();
    let mut widgets = BTreeMap::new();
    for node in root.children() {
        if node.is_text() {
            if node.text().is_some_and(|t| !t.trim().is_empty()) {
                let (line, column) = position(&doc, node);
                return Err(OtmlError::Parse {
                    line,
                    column,
                    message: "unexpected text content".into(),
                });
            }
            continue;
        }
        if !node.is_element() {
            continue;
        }
        let (line, column) = position(&doc, node);
        if node.children().any(|c| c.is_element()) {
            return Err(OtmlError::Parse {
                line,
                column,
                message: format!("<{}> must be empty", node.tag_name().name()),
            });
        }
        match node.tag_name().name() {
            "dataset" => {
                check_attributes(&doc, node, &["path"])?;
                let path = required(&doc, node, "path")?;
                if dataset_path.replace(path.to_string()).is_some() {
                    return Err(OtmlError::Invalid("more than one <dataset> element".into()));
                }
            }
            "technique" => {
                check_attributes(&doc, node, &["name"])?;
                let name = required(&doc, node, "name")?;
                let technique = name.parse::<Technique>().map_err(|_| OtmlError::UnknownTechnique {
                    name: name.to_string(),
                    line,
                    column,
                })?;
                if !techniques.insert(technique) {
                    return Err(OtmlError::Invalid(format!("technique {name} listed more than once")));
                }
            }
            "widget" => {
                check_attributes(&doc, node, &["id", "label", "tooltip", "placeholder"])?;
                let id = required(&doc, node, "id")?;
                let widget = id.parse::<WidgetId>().map_err(|_| OtmlError::UnknownWidget {
                    name: id.to_string(),
                    line,
                    column,
                })?;
                let custom = WidgetCustomization {
                    label: node.attribute("label").map(str::to_string),
                    tooltip: node.attribute("tooltip").map(str::to_string),
                    placeholder: node.attribute("placeholder").map(str::to_string),
                };
                if widgets.insert(widget, custom).is_some() {
                    return Err(OtmlError::Invalid(format!("widget {id} customized more than once")));
                }
            }
            other => {
                return Err(OtmlError::UnknownElement {
                    name: other.to_string(),
                    line,
                    column,
                })
            }
        }
    }

    let dataset_path = dataset_path.ok_or_else(|| OtmlError::Invalid("missing <dataset> element".into()))?;
    if techniques.is_empty() {
        return Err(OtmlError::Invalid("no <technique> selected".into()));
    }
    if techniques.contains(&Technique::BasicOot) && techniques.contains(&Technique::GeneralizedOot) {
        return Err(OtmlError::Invalid(
            "basic_oot and generalized_oot are mutually exclusive".into(),
        ));
    }
    Ok(OtmlDescriptor {
        title,
        dataset_path,
        techniques,
        widgets,
    })
}

fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Writes a descriptor back as OTML.
pub fn serialize_otml(d: &OtmlDescriptor) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<otml title=\"{}\">", escape_attr(&d.title));
    let _ = writeln!(out, "  <dataset path=\"{}\"/>", escape_attr(&d.dataset_path));
    for t in &d.techniques {
        let _ = writeln!(out, "  <technique name=\"{t}\"/>");
    }
    for (id, custom) in &d.widgets {
        let _ = write!(out, "  <widget id=\"{id}\"");
        for (name, value) in [
            ("label", &custom.label),
            ("tooltip", &custom.tooltip),
            ("placeholder", &custom.placeholder),
        ] {
            if let Some(value) = value {
                let _ = write!(out, " {name}=\"{}\"", escape_attr(value));
            }
        }
        out.push_str("/>\n");
    }
    out.push_str("</otml>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}: {}", self.message)
    }
}

/// Checks that the collection supports every selected technique.
pub fn validate_descriptor(d: &OtmlDescriptor, ds: &Dataset) -> Vec<Finding> {
    let mut findings = Vec::new();
    let error = |message: String| Finding {
        severity: Severity::Error,
        message,
    };
    let warning = |message: String| Finding {
        severity: Severity::Warning,
        message,
    };
    if d.techniques.contains(&Technique::Restructure) && ds.facet_schema().is_empty() {
        findings.push(error("restructure requires categorical facets".into()));
    }
    if d.techniques.contains(&Technique::GeneralizedOot) && !ds.has_terms() {
        findings.push(warning(
            "generalized_oot is enabled but no document carries terms".into(),
        ));
    }
    if !d.techniques.contains(&Technique::Collect) {
        findings.push(warning(
            "collect is not enabled, so the dialog has no termination".into(),
        ));
    }
    for id in d.widgets.keys() {
        if !d.techniques.iter().any(|t| t.widget() == *id) {
            findings.push(warning(format!(
                "widget {id} is customized but no technique using it is enabled"
            )));
        }
    }
    findings
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedWidget {
    pub label: String,
    pub tooltip: String,
    pub placeholder: String,
}

/// Compiled, servable form of a descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UiManifest {
    pub format_version: String,
    pub title: String,
    pub mode: Mode,
    pub enabled_actions: Vec<Technique>,
    pub widgets: BTreeMap<WidgetId, ResolvedWidget>,
    pub facet_schema: Vec<String>,
}

impl UiManifest {
    pub fn enables(&self, technique: Technique) -> bool {
        self.enabled_actions.contains(&technique)
    }

    /// Whether a session under this manifest may run `action`. Navigation
    /// and reset are always available.
    pub fn allows(&self, action: &Action) -> bool {
        match action {
            Action::Navigate(_) | Action::Reset => true,
            Action::OutOfTurn(_) => self.enables(match self.mode {
                Mode::Basic => Technique::BasicOot,
                Mode::Generalized => Technique::GeneralizedOot,
            }),
            Action::Vocabulary => self.enables(Technique::WhatMayISay),
            Action::Collect => self.enables(Technique::Collect),
            Action::Restructure(_) => self.enables(Technique::Restructure),
        }
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("descriptor is not supported by the collection: {}", .0.iter().map(|f| f.message.as_str()).collect::<Vec<_>>().join("; "))]
    Capability(Vec<Finding>),
}

/// Compiles a descriptor for `ds`, resolving widget defaults.
pub fn compile_manifest(d: &OtmlDescriptor, ds: &Dataset) -> Result<UiManifest, CompileError> {
    let findings = validate_descriptor(d, ds);
    if findings.iter().any(|f| f.severity == Severity::Error) {
        return Err(CompileError::Capability(findings));
    }
    let mode = if d.techniques.contains(&Technique::BasicOot) {
        Mode::Basic
    } else {
        Mode::Generalized
    };
    let enabled_actions: Vec<Technique> = d.techniques.iter().copied().collect();
    let widgets = enabled_actions
        .iter()
        .map(|t| t.widget())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|id| {
            let defaults = widget_defaults(id);
            let custom = d.widgets.get(&id).cloned().unwrap_or_default();
            (
                id,
                ResolvedWidget {
                    label: custom.label.unwrap_or_else(|| defaults.label.to_string()),
                    tooltip: custom.tooltip.unwrap_or_else(|| defaults.tooltip.to_string()),
                    placeholder: custom.placeholder.unwrap_or_else(|| defaults.placeholder.to_string()),
                },
            )
        })
        .collect();
    Ok(UiManifest {
        format_version: FORMAT_VERSION.to_string(),
        title: d.title.clone(),
        mode,
        enabled_actions,
        widgets,
        facet_schema: ds.facet_schema().to_vec(),
    })
}
