use serde::{Deserialize, Serialize};

const CATALOG: &str = include_str!("../../templates/catalog.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleCategory {
    BasicMovement,
    PickMove,
    Interaction,
}

impl ExampleCategory {
    pub fn name(self) -> &'static str {
        match self {
            ExampleCategory::BasicMovement => "basic_movement",
            ExampleCategory::PickMove => "pick_move",
            ExampleCategory::Interaction => "interaction",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [Self::BasicMovement, Self::PickMove, Self::Interaction].into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextExample {
    pub category: ExampleCategory,
    pub text: String,
}

/// Which example groups to leave out of the context (ablations A, B, C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContextAblation {
    #[serde(default)]
    pub drop_basic_movement: bool,
    #[serde(default)]
    pub drop_pick_move: bool,
    #[serde(default)]
    pub drop_interaction: bool,
}

impl ContextAblation {
    pub fn keeps(&self, c: ExampleCategory) -> bool {
        match c {
            ExampleCategory::BasicMovement => !self.drop_basic_movement,
            ExampleCategory::PickMove => !self.drop_pick_move,
            ExampleCategory::Interaction => !self.drop_interaction,
        }
    }
}

/// The shipped in-context examples, in file order.
pub fn catalog() -> Vec<ContextExample> {
    let mut out = Vec::new();
    let mut current: Option<(ExampleCategory, Vec<&str>)> = None;
    for line in CATALOG.lines() {
        if let Some(name) = line.strip_prefix("## ") {
            if let Some((category, lines)) = current.take() {
                out.push(ContextExample { category, text: lines.join("\n").trim().to_string() });
            }
            let category = ExampleCategory::from_name(name.trim()).expect("catalog categories are known");
            current = Some((category, Vec::new()));
        } else if let Some((_, lines)) = current.as_mut() {
            lines.push(line);
        }
    }
    if let Some((category, lines)) = current {
        out.push(ContextExample { category, text: lines.join("\n").trim().to_string() });
    }
    out
}

pub fn catalog_with(ablation: ContextAblation) -> Vec<ContextExample> {
    catalog().into_iter().filter(|e| ablation.keeps(e.category)).collect()
}
