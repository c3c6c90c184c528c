//! Faceted dialog engine for classification-tree collections.
//!
//! A collection is a classification tree whose leaves hold documents. Users
//! browse the tree one level at a time, but may at any point supply
//! unsolicited partial input ("out-of-turn" input) which slices the remaining
//! dialog down to the paths consistent with it. On top of that the engine can
//! report what remains sayable, flatten the remaining documents into a result
//! list, and rebuild the hierarchy from document facets in a chosen order.
//!
//! The crate is organised bottom-up:
//!
//! * [`text`]: token normalization shared by every vocabulary.
//! * [`model`] and [`dataset`]: the immutable collection model and its file format.
//! * [`slicer`]: pure tree transformations (retain, splice, recount, flatten, pivot).
//! * [`dialog`]: the session state machine over derived trees.
//! * [`otml`]: the interface descriptor language and its manifest compiler.
//! * [`replay`]: line-delimited action scripts.

pub mod dataset;
pub mod dialog;
pub mod model;
pub mod otml;
pub mod replay;
pub mod slicer;
pub mod text;

pub use dataset::{load_dataset, load_dataset_file, write_dataset, DatasetError};
pub use dialog::{Action, DialogError, DialogState, Mode, Status, View, Vocabulary};
pub use model::{Dataset, Document, NodeId, TaxonomyNode};
pub use slicer::{DerivedNode, DerivedTree, SliceError};
