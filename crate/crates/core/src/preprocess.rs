//! Two-pass task decomposition: atomic actions, then the object vocabulary.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{BackendError, ControllerBackend};

pub const DECOMPOSE_TEMPLATE: &str = include_str!("../templates/decompose.txt");
pub const EXTRACT_TEMPLATE: &str = include_str!("../templates/extract.txt");
pub const PROMPT_PLACEHOLDER: &str = "{user_prompt}";
pub const DONE: &str = "done";

/// First line of each template; backends use it to tell the passes apart.
pub fn decompose_marker() -> &'static str {
    DECOMPOSE_TEMPLATE.lines().next().unwrap_or_default()
}

pub fn extract_marker() -> &'static str {
    EXTRACT_TEMPLATE.lines().next().unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicAction {
    pub index: usize,
    pub verb_phrase: String,
    pub referenced_objects: Vec<String>,
}

impl AtomicAction {
    pub fn new(index: usize, verb_phrase: &str) -> Self {
        Self {
            index,
            verb_phrase: verb_phrase.to_string(),
            referenced_objects: referenced_objects(verb_phrase),
        }
    }

    pub fn is_done(&self) -> bool {
        self.verb_phrase.eq_ignore_ascii_case(DONE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub user_prompt: String,
    /// Ends with the terminal "done" action.
    pub actions: Vec<AtomicAction>,
    /// Empty means "perceive everything".
    pub objects: BTreeSet<String>,
}

impl TaskPlan {
    /// Actions to execute, without the terminal marker.
    pub fn executable(&self) -> &[AtomicAction] {
        match self.actions.last() {
            Some(a) if a.is_done() => &self.actions[..self.actions.len() - 1],
            _ => &self.actions,
        }
    }

    /// Perception filter; `None` when the vocabulary is empty.
    pub fn object_filter(&self) -> Option<&BTreeSet<String>> {
        (!self.objects.is_empty()).then_some(&self.objects)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("backend failure: {0}")]
    BackendFailure(#[from] BackendError),
    #[error("no numbered action list in {0:?}")]
    UnparseableDecomposition(String),
    #[error("no objects in {0:?}")]
    EmptyObjectSet(String),
    #[error("action {index} references {object:?}, which is not in the object list")]
    PlanInvariantViolation { index: usize, object: String },
}

pub fn render_template(template: &str, prompt: &str) -> String {
    template.replace(PROMPT_PLACEHOLDER, prompt.trim())
}

/// Pass 1: numbered atomic actions, order preserved, ending in "done".
pub fn decompose(prompt: &str, backend: &mut dyn ControllerBackend) -> Result<Vec<AtomicAction>, PlanError> {
    if prompt.trim().is_empty() {
        return Err(PlanError::EmptyPrompt);
    }
    let reply = backend.query(&render_template(DECOMPOSE_TEMPLATE, prompt))?;
    parse_decomposition(&reply)
}

/// Pass 2: deduplicated, lowercased object labels.
pub fn extract_objects(prompt: &str, backend: &mut dyn ControllerBackend) -> Result<BTreeSet<String>, PlanError> {
    if prompt.trim().is_empty() {
        return Err(PlanError::EmptyPrompt);
    }
    let reply = backend.query(&render_template(EXTRACT_TEMPLATE, prompt))?;
    let objects = parse_object_list(&reply);
    if objects.is_empty() {
        return Err(PlanError::EmptyObjectSet(reply));
    }
    Ok(objects)
}

/// Both passes. An empty object list is not fatal: the plan then carries an
/// empty vocabulary (all-object perception) and skips the containment check.
pub fn build_plan(prompt: &str, backend: &mut dyn ControllerBackend) -> Result<TaskPlan, PlanError> {
    let actions = decompose(prompt, backend)?;
    let objects = match extract_objects(prompt, backend) {
        Ok(o) => o,
        Err(PlanError::EmptyObjectSet(_)) => BTreeSet::new(),
        Err(e) => return Err(e),
    };
    let plan = TaskPlan { user_prompt: prompt.trim().to_string(), actions, objects };
    if !plan.objects.is_empty() {
        for a in &plan.actions {
            if let Some(missing) = a.referenced_objects.iter().find(|o| !covers(&plan.objects, o)) {
                return Err(PlanError::PlanInvariantViolation { index: a.index, object: missing.clone() });
            }
        }
    }
    Ok(plan)
}

/// A head noun is covered by an exact entry or by a multi-word entry
/// ending in it ("rack" by "dish rack").
fn covers(objects: &BTreeSet<String>, head: &str) -> bool {
    objects.contains(head) || objects.iter().any(|o| o.rsplit(' ').next() == Some(head))
}

fn last_reply(text: &str) -> &str {
    match text.rfind("Robot:") {
        Some(i) => &text[i + "Robot:".len()..],
        None => text,
    }
}

/// Finds `1.`, `2.`, ... in sequence (each at the start or after whitespace
/// or a comma, and not followed by a digit) and takes the text between consecutive markers. Stops at
/// "done"; a list without it gets one appended.
pub fn parse_decomposition(text: &str) -> Result<Vec<AtomicAction>, PlanError> {
    let text = last_reply(text);
    let mut marks: Vec<(usize, usize)> = Vec::new();
    let mut from = 0;
    for k in 1.. {
        let needle = format!("{k}.");
        let found = text[from..].match_indices(&needle).map(|(i, _)| from + i).find(|&i| {
            let prev_ok = i == 0 || {
                let prev = text[..i].chars().next_back().unwrap_or(' ');
                prev.is_whitespace() || prev == ','
            };
            let next_digit = text[i + needle.len()..].starts_with(|c: char| c.is_ascii_digit());
            prev_ok && !next_digit
        });
        match found {
            Some(i) => {
                marks.push((i, i + needle.len()));
                from = i + needle.len();
            }
            None => break,
        }
    }
    if marks.is_empty() {
        return Err(PlanError::UnparseableDecomposition(text.to_string()));
    }
    let mut actions = Vec::new();
    for (n, &(_, start)) in marks.iter().enumerate() {
        let end = marks.get(n + 1).map_or(text.len(), |m| m.0);
        let mut phrase = text[start..end].trim();
        if n + 1 == marks.len() {
            phrase = phrase.lines().next().unwrap_or("").trim();
        }
        let phrase = phrase.trim_end_matches([',', '.', ';']).trim();
        if phrase.is_empty() {
            return Err(PlanError::UnparseableDecomposition(text.to_string()));
        }
        let action = AtomicAction::new(n + 1, phrase);
        let done = action.is_done();
        actions.push(action);
        if done {
            return Ok(actions);
        }
    }
    let next = actions.len() + 1;
    actions.push(AtomicAction::new(next, DONE));
    Ok(actions)
}

pub fn parse_object_list(text: &str) -> BTreeSet<String> {
    let line = last_reply(text).trim().lines().next().unwrap_or("");
    line.split([',', ';'])
        .map(|s| s.trim().trim_end_matches('.').trim().to_lowercase())
        .map(|s| s.trim_start_matches("and ").to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

const DETERMINERS: [&str; 4] = ["the", "a", "an", "all"];
const STOP_WORDS: [&str; 14] = [
    "in", "on", "into", "onto", "next", "to", "inside", "near", "from", "with", "and", "at", "of", "then",
];
/// Place words that name table regions rather than objects.
const LOCATION_WORDS: [&str; 13] = [
    "corner", "side", "zone", "area", "table", "left", "right", "top", "bottom", "center", "middle",
    "edge", "position",
];

/// Head nouns of the noun phrases in an action ("put the red block in the
/// blue bowl" gives block and bowl). Placeholder objects such as
/// `<object1>` count as nouns; colors, ordinals and region words do not.
pub fn referenced_objects(phrase: &str) -> Vec<String> {
    let lower = phrase.to_lowercase();
    let words: Vec<&str> = lower
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .collect();
    let mut out: Vec<String> = Vec::new();
    let mut push = |w: &str| {
        let w = w.trim_matches(|c: char| c == '.' || c == ';' || c == '\'' || c == '"').to_string();
        if !w.is_empty() && !out.contains(&w) {
            out.push(w);
        }
    };
    let mut i = 0;
    while i < words.len() {
        let w = words[i];
        if w.starts_with('<') && w.contains('>') {
            push(&w[..=w.find('>').expect("checked")]);
            i += 1;
            continue;
        }
        if DETERMINERS.contains(&w) {
            let mut j = i + 1;
            let mut head: Option<&str> = None;
            while j < words.len() && !STOP_WORDS.contains(&words[j]) && !DETERMINERS.contains(&words[j]) {
                head = Some(words[j]);
                j += 1;
            }
            if let Some(h) = head {
                let h = h.trim_matches(|c: char| !c.is_alphanumeric() && c != '-');
                let is_location = LOCATION_WORDS.contains(&h) || words[i + 1..j].iter().any(|w| LOCATION_WORDS.contains(w));
                if !h.is_empty() && !is_location && crate::scene::Color::from_name(h).is_none() {
                    push(h);
                }
            }
            i = j;
            continue;
        }
        i += 1;
    }
    out
}
