//! Line-delimited action scripts.
//!
//! One JSON record per line, `{"action": "...", "arg": ...}`. Blank lines and
//! lines starting with `#` are ignored.

use thiserror::Error;

use crate::dialog::{Action, DialogError, DialogState};

#[derive(Debug, Error)]
#[error("script line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse_script(text: &str) -> Result<Vec<Action>, ScriptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ScriptError {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_script(actions: &[Action]) -> String {
    actions
        .iter()
        .map(|a| serde_json::to_string(a).expect("actions serialize") + "\n")
        .collect()
}

/// An action that failed during replay, with its position in the script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayError {
    pub index: usize,
    pub action: Action,
    pub error: DialogError,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub state: DialogState,
    pub errors: Vec<ReplayError>,
}

/// Runs `actions` in order from `start`.
///
/// In strict mode the first failing action aborts the replay and is returned
/// as the error; otherwise failures are collected and the replay continues.
pub fn replay(start: DialogState, actions: &[Action], strict: bool) -> Result<ReplayReport, ReplayError> {
    let mut state = start;
    let mut errors = Vec::new();
    for (index, action) in actions.iter().enumerate() {
        let (next, outcome) = state.apply(action);
        state = next;
        if let Err(error) = outcome {
            let failure = ReplayError {
                index,
                action: action.clone(),
                error,
            };
            if strict {
                return Err(failure);
            }
            errors.push(failure);
        }
    }
    Ok(ReplayReport { state, errors })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::load_dataset;
    use crate::dialog::Mode;

    fn start() -> DialogState {
        let ds = load_dataset(include_str!("../fixtures/fixture_a.json").as_bytes()).unwrap();
        DialogState::new(Arc::new(ds), Mode::Generalized)
    }

    const BELKIN: &str = r#"
# out-of-turn, then follow the remaining category, then collect
{"action": "out_of_turn", "arg": "belkin"}
{"action": "navigate", "arg": "Information Systems"}
{"action": "collect"}
"#;

    #[test]
    fn parses_and_writes_scripts() {
        let actions = parse_script(BELKIN).unwrap();
        assert_eq!(actions.len(), 3);
        assert_eq!(parse_script(&write_script(&actions)).unwrap(), actions);
        let err = parse_script("{\"action\": \"collect\"}\n{\"action\": \"fly\"}").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn replays_the_belkin_dialog() {
        let report = replay(start(), &parse_script(BELKIN).unwrap(), true).unwrap();
        let results = report.state.view().results.unwrap();
        assert_eq!(results.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["d2", "d3"]);
    }

    #[test]
    fn lenient_replay_continues_past_errors() {
        let actions = vec![Action::OutOfTurn("xyzzy".into()), Action::OutOfTurn("smith".into())];
        let report = replay(start(), &actions, false).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].error, DialogError::NoMatch("xyzzy".into()));
        assert_eq!(report.state.tree().remaining(), 2);

        let err = replay(start(), &actions, true).unwrap_err();
        assert_eq!(err.index, 0);
    }

    #[test]
    fn empty_script_leaves_initial_view() {
        let report = replay(start(), &[], true).unwrap();
        assert_eq!(report.state.view(), start().view());
    }
}
