mod common;

use chartloop::controller::split_generation;
use chartloop::protocol::*;
use proptest::prelude::*;

use common::*;

#[test]
fn shipped_prompt_lines_round_trip() {
    let lines = prompt_lines();
    assert!(lines.len() > 20);
    for (role, line) in &lines {
        round_trip(*role, line).unwrap();
    }
}

#[test]
fn annotated_lines_round_trip() {
    for example in annotated_lines() {
        assert_eq!(example.len(), 5);
        for (role, line) in &example {
            round_trip(*role, line).unwrap();
        }
    }
}

#[test]
fn query_shapes() {
    assert_eq!(parse_step("Let's describe the figure."), StepKind::Query(AtomicQuery::Describe));
    assert_eq!(
        parse_step("Let's extract the data of Consoles BY 2020."),
        StepKind::Query(AtomicQuery::point("Consoles", "2020"))
    );
    assert_eq!(
        parse_step("Let's extract all the values."),
        StepKind::Query(AtomicQuery::ExtractGroup { entity: None })
    );
    assert!(matches!(parse_step("Let me think."), StepKind::Other(_)));
    assert_eq!(conclusion_answer("So the answer is 2784.00."), Some("2784.00"));
}

#[test]
fn split_generation_reads_the_last_episode() {
    let prompt = format!(
        "{}\n\nQ: new question\nA: Let's describe the figure.\nThe figure shows the data of: A (red). The x-axis shows: x.\nLet's",
        read_asset("prompts/domino_5shot.txt").trim_end()
    );
    let g = split_generation(&prompt);
    assert_eq!(g.question, Some("new question"));
    assert_eq!(g.turns.len(), 1);
    assert_eq!(g.turns[0].line, "Let's describe the figure.");
}

proptest! {
    #[test]
    fn point_queries_round_trip(a in "[A-Z][a-z]{0,8}( [a-z]{1,6}){0,2}", b in "(19|20)[0-9]{2}") {
        let q = AtomicQuery::point(a.clone(), b.clone());
        let line = format_query(&q);
        prop_assert_eq!(parse_step(&line), StepKind::Query(q));
    }

    #[test]
    fn group_answers_round_trip(vals in prop::collection::vec((0u32..10_000, "[A-Z][a-z]{1,8}"), 1..6)) {
        let line = format!(
            "The data is {}.",
            vals.iter().map(|(v, k)| format!("{v} in {k}")).collect::<Vec<_>>().join(", ")
        );
        let parsed = parse_reader_answer(&line);
        prop_assert!(matches!(parsed, ReaderAnswer::Group(_)));
        prop_assert_eq!(format_reader_answer(&parsed).unwrap(), line);
    }
}
