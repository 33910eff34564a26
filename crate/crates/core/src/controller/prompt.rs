//! Few-shot prompt templates and the generation-so-far view that scripted
//! and rule-based reasoners read back out of a prompt.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{parse_step, StepKind, DESCRIBE_QUERY};

const DOMINO_5SHOT: &str = include_str!("../../assets/prompts/domino_5shot.txt");
const DEPLOT_1SHOT: &str = include_str!("../../assets/prompts/deplot_1shot.txt");
const DEPLOT_5SHOT: &str = include_str!("../../assets/prompts/deplot_5shot.txt");

const DESCRIPTION_START: &str = "The figure shows the data of:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[serde(rename = "domino_5shot", alias = "domino5")]
    Domino5Shot,
    #[serde(rename = "deplot_1shot", alias = "deplot1")]
    Deplot1Shot,
    #[serde(rename = "deplot_5shot", alias = "deplot5")]
    Deplot5Shot,
}

impl PromptStyle {
    /// Table-in-prompt styles need a linearized chart.
    pub fn needs_context(self) -> bool {
        !matches!(self, PromptStyle::Domino5Shot)
    }
}

impl std::str::FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "domino5" | "domino_5shot" => Ok(PromptStyle::Domino5Shot),
            "deplot1" | "deplot_1shot" => Ok(PromptStyle::Deplot1Shot),
            "deplot5" | "deplot_5shot" => Ok(PromptStyle::Deplot5Shot),
            other => Err(format!("unknown prompt style {other:?} (domino5, deplot1, deplot5)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt template has no exemplars")]
    NoExemplars,
    #[error("{0:?} prompts need a linearized table")]
    MissingContext(PromptStyle),
    #[error("{0:?} prompts take no table")]
    UnexpectedContext(PromptStyle),
}

/// One worked question: optional table lines, the question, and the answer
/// lines (the first follows "A: ").
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exemplar {
    pub context: Option<String>,
    pub question: String,
    pub answer_lines: Vec<String>,
}

impl Exemplar {
    fn render(&self) -> String {
        let mut out = String::new();
        if let Some(c) = &self.context {
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("Q: ");
        out.push_str(&self.question);
        for (i, line) in self.answer_lines.iter().enumerate() {
            out.push_str(if i == 0 { "\nA: " } else { "\n" });
            out.push_str(line);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Block {
    Text(String),
    Exemplar(Exemplar),
}

/// A few-shot prompt as blank-line separated blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    blocks: Vec<Block>,
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Self {
        let blocks = text
            .trim()
            .split("\n\n")
            .map(|para| {
                let lines: Vec<&str> = para.lines().collect();
                match lines.iter().position(|l| l.starts_with("Q: ")) {
                    Some(q) if lines.get(q + 1).is_some_and(|l| l.starts_with("A: ")) => {
                        let context = (q > 0).then(|| lines[..q].join("\n"));
                        let mut answer_lines = vec![lines[q + 1]["A: ".len()..].to_string()];
                        answer_lines.extend(lines[q + 2..].iter().map(|l| l.to_string()));
                        Block::Exemplar(Exemplar {
                            context,
                            question: lines[q]["Q: ".len()..].to_string(),
                            answer_lines,
                        })
                    }
                    _ => Block::Text(para.to_string()),
                }
            })
            .collect();
        PromptTemplate { blocks }
    }

    pub fn exemplars(&self) -> impl Iterator<Item = &Exemplar> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Exemplar(e) => Some(e),
            Block::Text(_) => None,
        })
    }

    pub fn render(&self) -> String {
        self.blocks
            .iter()
            .map(|b| match b {
                Block::Text(t) => t.clone(),
                Block::Exemplar(e) => e.render(),
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// The same exemplars with the Describe query and its answer removed.
    pub fn without_describe(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                Block::Exemplar(e) => Block::Exemplar(Exemplar {
                    answer_lines: e
                        .answer_lines
                        .iter()
                        .filter(|l| l.as_str() != DESCRIBE_QUERY && !l.starts_with(DESCRIPTION_START))
                        .cloned()
                        .collect(),
                    ..e.clone()
                }),
                other => other.clone(),
            })
            .collect();
        PromptTemplate { blocks }
    }
}

pub fn shipped_template(style: PromptStyle) -> PromptTemplate {
    PromptTemplate::parse(match style {
        PromptStyle::Domino5Shot => DOMINO_5SHOT,
        PromptStyle::Deplot1Shot => DEPLOT_1SHOT,
        PromptStyle::Deplot5Shot => DEPLOT_5SHOT,
    })
}

pub fn build_prompt(
    style: PromptStyle,
    template: &PromptTemplate,
    question: &str,
    context: Option<&str>,
) -> Result<String, PromptError> {
    if template.exemplars().next().is_none() {
        return Err(PromptError::NoExemplars);
    }
    let head = template.render();
    let question = question.trim();
    match (style, context) {
        (PromptStyle::Domino5Shot, None) => Ok(format!("{head}\n\nQ: {question}\nA: ")),
        (PromptStyle::Domino5Shot, Some(_)) => Err(PromptError::UnexpectedContext(style)),
        (_, None) => Err(PromptError::MissingContext(style)),
        (PromptStyle::Deplot1Shot, Some(table)) => {
            Ok(format!("{head}\n\n{}\n\nQ: {question}\nA: ", table.trim()))
        }
        (PromptStyle::Deplot5Shot, Some(table)) => {
            Ok(format!("{head}\n\n{}\nQ: {question}\nA: ", table.trim()))
        }
    }
}

/// One reasoner line of the current answer and, for queries, the reader's
/// reply spliced after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Turn<'a> {
    pub line: &'a str,
    pub reader_answer: Option<&'a str>,
}

/// The last question of a prompt and what has been generated after its "A: ".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generation<'a> {
    pub question: Option<&'a str>,
    pub turns: Vec<Turn<'a>>,
}

pub fn split_generation(prompt: &str) -> Generation<'_> {
    let start = if prompt.starts_with("A: ") {
        Some(0)
    } else {
        prompt.rfind("\nA: ").map(|i| i + 1)
    };
    let Some(start) = start else {
        return Generation {
            question: None,
            turns: Vec::new(),
        };
    };
    let question = prompt[..start]
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("Q: "))
        .map(str::trim);
    let body = &prompt[start + "A: ".len()..];
    let mut lines: Vec<&str> = body.split('\n').collect();
    // The text after the final newline is still being written.
    lines.pop();
    let mut turns = Vec::new();
    let mut it = lines.into_iter();
    while let Some(line) = it.next() {
        let reader_answer = match parse_step(line) {
            StepKind::Query(_) => it.next(),
            _ => None,
        };
        turns.push(Turn { line, reader_answer });
    }
    Generation { question, turns }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_prompts_render_verbatim() {
        for (style, raw) in [
            (PromptStyle::Domino5Shot, DOMINO_5SHOT),
            (PromptStyle::Deplot1Shot, DEPLOT_1SHOT),
            (PromptStyle::Deplot5Shot, DEPLOT_5SHOT),
        ] {
            let t = shipped_template(style);
            assert_eq!(t.render(), raw.trim(), "{style:?}");
        }
        assert_eq!(shipped_template(PromptStyle::Domino5Shot).exemplars().count(), 5);
        assert_eq!(shipped_template(PromptStyle::Deplot1Shot).exemplars().count(), 5);
        assert_eq!(shipped_template(PromptStyle::Deplot5Shot).exemplars().count(), 5);
    }

    #[test]
    fn builds_each_style() {
        let d = shipped_template(PromptStyle::Domino5Shot);
        let p = build_prompt(PromptStyle::Domino5Shot, &d, "What?", None).unwrap();
        assert!(p.starts_with("Answer the following questions step by step.\n\nQ: "));
        assert!(p.ends_with("So the answer is no.\n\nQ: What?\nA: "));
        assert_eq!(
            build_prompt(PromptStyle::Domino5Shot, &d, "What?", Some("Header: x")),
            Err(PromptError::UnexpectedContext(PromptStyle::Domino5Shot))
        );
        let one = shipped_template(PromptStyle::Deplot1Shot);
        let p = build_prompt(PromptStyle::Deplot1Shot, &one, "What?", Some("Header: a | b\nRow 1: x | 1")).unwrap();
        assert!(p.ends_with(
            "Read the table below to answer the following questions.\n\nHeader: a | b\nRow 1: x | 1\n\nQ: What?\nA: "
        ));
        assert_eq!(
            build_prompt(PromptStyle::Deplot1Shot, &one, "What?", None),
            Err(PromptError::MissingContext(PromptStyle::Deplot1Shot))
        );
        let empty = PromptTemplate::parse("Just a header.");
        assert_eq!(
            build_prompt(PromptStyle::Domino5Shot, &empty, "q", None),
            Err(PromptError::NoExemplars)
        );
    }

    #[test]
    fn describe_free_variant() {
        let t = shipped_template(PromptStyle::Domino5Shot).without_describe();
        let text = t.render();
        assert!(!text.contains(DESCRIBE_QUERY));
        assert!(!text.contains(DESCRIPTION_START));
        assert!(text.contains("A: Let's extract the data of Oman.\n"));
    }

    #[test]
    fn splits_generation() {
        let prompt = "Header.\n\nQ: old\nA: x\n\nQ: What now?\nA: Let's describe the figure.\nThe figure shows the data of: A. The x-axis shows: 1.\nThinking.\npartial";
        let g = split_generation(prompt);
        assert_eq!(g.question, Some("What now?"));
        assert_eq!(g.turns.len(), 2);
        assert_eq!(g.turns[0].line, "Let's describe the figure.");
        assert!(g.turns[0].reader_answer.unwrap().starts_with("The figure shows"));
        assert_eq!(g.turns[1], Turn { line: "Thinking.", reader_answer: None });
        let g = split_generation("Q: fresh\nA: ");
        assert_eq!(g.question, Some("fresh"));
        assert!(g.turns.is_empty());
    }
}
