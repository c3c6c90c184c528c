//! Line-oriented text dialog.

use std::io::{self, BufRead, Write};

use dlgen_core::dialog::{Action, DialogState, Response, Status, View, Vocabulary};

const USAGE: &str = "\
commands:
  say <words>            narrow by anything you can name
  go <label>             follow a category at the current position
  ?                      what may I say?
  collect                list the remaining documents and finish
  restructure <facets>   rebuild the hierarchy, e.g. restructure author category
  reset                  start over
  view                   show the current position
  help                   this text
  quit";

pub fn run<R: BufRead, W: Write>(mut state: DialogState, input: R, mut out: W, prompt: bool) -> io::Result<()> {
    write_view(&mut out, &state.view())?;
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next().transpose()? else {
            return Ok(());
        };
        let line = line.trim();
        let (command, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let action = match command {
            "" => continue,
            "quit" | "exit" => return Ok(()),
            "help" => {
                writeln!(out, "{USAGE}")?;
                continue;
            }
            "view" => {
                write_view(&mut out, &state.view())?;
                continue;
            }
            "?" => Action::Vocabulary,
            "say" => Action::OutOfTurn(rest.to_string()),
            "go" => Action::Navigate(rest.to_string()),
            "collect" => Action::Collect,
            "reset" => Action::Reset,
            "restructure" => Action::Restructure(facet_list(rest)),
            other => {
                writeln!(out, "unknown command {other:?}; type help for the list")?;
                continue;
            }
        };
        let (next, outcome) = state.apply(&action);
        state = next;
        match outcome {
            Ok(Response::View { view }) => write_view(&mut out, &view)?,
            Ok(Response::Vocabulary { vocabulary }) => write_vocabulary(&mut out, &vocabulary)?,
            Ok(Response::Collected { view, .. }) => write_view(&mut out, &view)?,
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}

fn facet_list(text: &str) -> Vec<String> {
    let parts: Vec<&str> = if text.contains(',') {
        text.split(',').collect()
    } else {
        text.split_whitespace().collect()
    };
    parts
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(String::from)
        .collect()
}

fn write_view<W: Write>(out: &mut W, view: &View) -> io::Result<()> {
    if let (Status::Terminated, Some(results)) = (view.status, &view.results) {
        writeln!(out, "dialog finished, {} documents:", results.len())?;
        for d in results {
            writeln!(out, "  {}  {}  {}", d.id, d.title, d.uri)?;
        }
        return Ok(());
    }
    let at = if view.focus.is_empty() {
        "top".to_string()
    } else {
        view.focus.join(" > ")
    };
    writeln!(out, "at {at}, {} of {} documents", view.purview, view.remaining)?;
    for c in &view.children {
        writeln!(out, "  {} ({})", c.label, c.purview)?;
    }
    for d in &view.documents {
        writeln!(out, "  - {}  {}", d.id, d.title)?;
    }
    Ok(())
}

fn write_vocabulary<W: Write>(out: &mut W, vocab: &Vocabulary) -> io::Result<()> {
    writeln!(out, "labels:")?;
    for l in &vocab.labels {
        writeln!(out, "  {} ({})", l.label, l.count)?;
    }
    if !vocab.terms.is_empty() {
        writeln!(out, "terms:")?;
        for t in &vocab.terms {
            writeln!(out, "  {} ({})", t.term, t.count)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use dlgen_core::Mode;

    use super::*;

    fn session(script: &str, mode: Mode) -> String {
        let state = DialogState::new(Arc::new(dlgen_testkit::fixture_a()), mode);
        let mut out = Vec::new();
        run(state, script.as_bytes(), &mut out, false).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn starts_with_the_categories() {
        assert_eq!(
            session("", Mode::Generalized),
            "at top, 4 of 4 documents\n  Hardware (1)\n  Information Systems (2)\n  Theory (1)\n"
        );
    }

    #[test]
    fn vocabulary_after_belkin() {
        let out = session("say belkin\n?\n", Mode::Generalized);
        let vocab = out.split("labels:\n").nth(1).unwrap();
        assert_eq!(
            vocab,
            "  Information Systems (2)\nterms:\n  browsing (1)\n  hypertext (1)\n  models (1)\n  retrieval (1)\n"
        );
    }

    #[test]
    fn basic_mode_lists_no_terms() {
        let out = session("?\n", Mode::Basic);
        assert!(!out.contains("terms:"));
        assert!(out.contains("  Smith (2)\n"));
    }

    #[test]
    fn collect_finishes_the_dialog() {
        let out = session(
            "say belkin\ngo Information Systems\ncollect\nsay smith\n",
            Mode::Generalized,
        );
        assert!(out.contains(
            "dialog finished, 2 documents:\n  d2  IR Models  https://example.org/d2\n  d3  Hypertext Browsing  https://example.org/d3\n"
        ));
        assert!(out.ends_with("error: the dialog has terminated; only reset is possible\n"));
    }

    #[test]
    fn errors_and_unknown_commands_keep_going() {
        let out = session("say xyzzy\nfly away\nview\nquit\nsay smith\n", Mode::Generalized);
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines.contains(&"error: nothing remaining matches \"xyzzy\""));
        assert!(lines.contains(&"unknown command \"fly\"; type help for the list"));
        assert_eq!(lines.iter().filter(|l| l.starts_with("at top, 4 of 4")).count(), 2);
        assert!(!out.contains("Smith ("), "input after quit is ignored");
    }

    #[test]
    fn restructure_and_navigate() {
        let out = session(
            "restructure author, category\ngo Smith\ngo theory\nreset\n",
            Mode::Generalized,
        );
        assert!(out.contains("at top, 4 of 4 documents\n  Belkin (2)\n  Smith (2)\n"));
        assert!(out.contains("at Smith, 2 of 4 documents\n  Hardware (1)\n  Theory (1)\n"));
        assert!(out.contains("at Smith > Theory, 1 of 4 documents\n  - d4  Complexity Bounds\n"));
        assert!(out.ends_with("at top, 4 of 4 documents\n  Hardware (1)\n  Information Systems (2)\n  Theory (1)\n"));
    }

    #[test]
    fn facet_lists_split_on_commas_or_spaces() {
        assert_eq!(facet_list("author category"), ["author", "category"]);
        assert_eq!(facet_list("journal name, author"), ["journal name", "author"]);
        assert!(facet_list("").is_empty());
    }
}
