//! The template grammar: rendering questions from slots, parsing them back,
//! and mapping each form to its plan.

use std::collections::HashSet;

use once_cell::sync::Lazy;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::{Captures, Regex};

use super::{compute_gold, QuestionPlan, Reduce, SymbolicError};
use crate::model::{normalize_name, ChartTable, QAInstance, Series, TemplateType, Value};
use crate::oracle::MATCH_THRESHOLD;
use crate::protocol::AtomicQuery;

/// Which tables a form applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Multi,
    Single,
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormKind {
    PointLookup,
    ValueLookup,
    CountLegend,
    CountLabels,
    Difference,
    Surpass,
    Total,
    Average,
    AveragePair,
    Ratio,
    Greater,
    SumTwoSmallest,
    CountAboveAverage,
    CountGreater,
    CountLess,
    Extreme,
    ArgExtreme,
    SecondHighest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Form {
    pub kind: FormKind,
    pub shape: Shape,
}

impl FormKind {
    pub fn template_type(self) -> TemplateType {
        use FormKind::*;
        match self {
            PointLookup | ValueLookup => TemplateType::DataRetrieval,
            CountLegend | CountLabels => TemplateType::Structural,
            Difference | Surpass | Total | Average | AveragePair => TemplateType::Arithmetic,
            Ratio | Greater | SumTwoSmallest => TemplateType::Comparison,
            CountAboveAverage | CountGreater | CountLess => TemplateType::Compound,
            Extreme | ArgExtreme | SecondHighest => TemplateType::MinMax,
        }
    }
}

/// The variable parts of a question.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Slots {
    metric: String,
    noun: String,
    series: Vec<String>,
    labels: Vec<String>,
    number: Option<String>,
    high: bool,
}

struct Rule {
    form: Form,
    pattern: Regex,
    text: &'static str,
}

fn rule(kind: FormKind, shape: Shape, pattern: &str, text: &'static str) -> Rule {
    Rule {
        form: Form { kind, shape },
        pattern: Regex::new(pattern).expect("grammar pattern"),
        text,
    }
}

// Placeholders: {m} metric, {x}/{xs} x-axis noun, {s}/{s2} series,
// {l}/{l2} labels, {v} number, {ext} extreme word, {a} article.
// Named groups ending in "a" must repeat the group without it.
// Order matters: the first matching pattern wins.
static GRAMMAR: Lazy<Vec<Rule>> = Lazy::new(|| {
    use FormKind::*;
    use Shape::*;
    vec![
        rule(SumTwoSmallest, Single,
            r"^Is the sum of two smallest segments greater than the largest segment ?\?$",
            "Is the sum of two smallest segments greater than the largest segment?"),
        rule(CountLegend, Any,
            r"^How many legend labels are there ?\?$",
            "How many legend labels are there?"),
        rule(CountLabels, Any,
            r"^How many (?P<xs>.+) are shown on the x-axis ?\?$",
            "How many {xs} are shown on the x-axis?"),
        rule(SumTwoSmallest, Multi,
            r"^Is the sum of the two smallest values of (?P<s>.+) greater than its largest value ?\?$",
            "Is the sum of the two smallest values of {s} greater than its largest value?"),
        rule(Surpass, Multi,
            r"^By how many points does (?P<s>.+?) surpass (?P<s2>.+?) in (?:the year of )?(?P<l>.+?)(?: in the year of .+?)? ?\?$",
            "By how many points does {s} surpass {s2} in {l}?"),
        rule(Difference, Multi,
            r"^What is the difference between the (?P<m>.+?) of (?P<s>.+?) in (?P<l>.+?) and the (?P<ma>.+?) of (?P<s2>.+?) in (?P<l2>.+?) ?\?$",
            "What is the difference between the {m} of {s} in {l} and the {m} of {s2} in {l2}?"),
        rule(Difference, Single,
            r"^What is the difference between the (?P<m>.+?) in (?P<l>.+?) and the (?P<ma>.+?) in (?P<l2>.+?) ?\?$",
            "What is the difference between the {m} in {l} and the {m} in {l2}?"),
        rule(Total, Multi,
            r"^What is the total (?P<m>.+?) of (?P<s>.+) across all (?P<xs>.+?) ?\?$",
            "What is the total {m} of {s} across all {xs}?"),
        rule(Total, Single,
            r"^What is the total (?P<m>.+) across all (?P<xs>.+?) ?\?$",
            "What is the total {m} across all {xs}?"),
        rule(Average, Multi,
            r"^What is the average (?P<m>.+?) of (?P<s>.+) across all (?P<xs>.+?) ?\?$",
            "What is the average {m} of {s} across all {xs}?"),
        rule(Average, Single,
            r"^What is the average (?P<m>.+) across all (?P<xs>.+?) ?\?$",
            "What is the average {m} across all {xs}?"),
        rule(AveragePair, Multi,
            r"^What is the average (?P<m>.+?) of (?P<s>.+) in (?P<l>.+?) and (?P<l2>.+?) ?\?$",
            "What is the average {m} of {s} in {l} and {l2}?"),
        rule(AveragePair, Single,
            r"^What is the average (?P<m>.+) in (?P<l>.+?) and (?P<l2>.+?) ?\?$",
            "What is the average {m} in {l} and {l2}?"),
        rule(Ratio, Multi,
            r"^What is the ratio of the (?P<m>.+?) of (?P<s>.+) in (?P<l>.+?) to that in (?P<l2>.+?) ?\?$",
            "What is the ratio of the {m} of {s} in {l} to that in {l2}?"),
        rule(Ratio, Single,
            r"^What is the ratio of the (?P<m>.+) in (?P<l>.+?) to that in (?P<l2>.+?) ?\?$",
            "What is the ratio of the {m} in {l} to that in {l2}?"),
        rule(SecondHighest, Multi,
            r"^What is the second highest (?P<m>.+?) of (?P<s>.+?) ?\?$",
            "What is the second highest {m} of {s}?"),
        rule(SecondHighest, Single,
            r"^What is the second highest (?P<m>.+?) ?\?$",
            "What is the second highest {m}?"),
        rule(Greater, Multi,
            r"^Is the (?P<m>.+?) of (?P<s>.+) in (?P<l>.+?) greater than that in (?P<l2>.+?) ?\?$",
            "Is the {m} of {s} in {l} greater than that in {l2}?"),
        rule(Greater, Single,
            r"^Is the (?P<m>.+) in (?P<l>.+?) greater than that in (?P<l2>.+?) ?\?$",
            "Is the {m} in {l} greater than that in {l2}?"),
        rule(CountAboveAverage, Multi,
            r"^In how many (?P<xs>.+?), is the (?P<m>.+) in (?P<s>.+?) greater than the average (?P<ma>.+) in (?P<sa>.+?) taken over all (?P<xsa>.+?) ?\?$",
            "In how many {xs}, is the {m} in {s} greater than the average {m} in {s} taken over all {xs}?"),
        rule(CountAboveAverage, Single,
            r"^In how many (?P<xs>.+?), is the (?P<m>.+) greater than the average (?P<ma>.+) taken over all (?P<xsa>.+?) ?\?$",
            "In how many {xs}, is the {m} greater than the average {m} taken over all {xs}?"),
        rule(CountGreater, Multi,
            r"^In how many (?P<xs>.+?), is the (?P<m>.+) in (?P<s>.+?) greater than (?P<v>\S+?) ?\?$",
            "In how many {xs}, is the {m} in {s} greater than {v}?"),
        rule(CountGreater, Single,
            r"^In how many (?P<xs>.+?), is the (?P<m>.+) greater than (?P<v>\S+?) ?\?$",
            "In how many {xs}, is the {m} greater than {v}?"),
        rule(CountLess, Multi,
            r"^How many (?P<xs>.+?) of (?P<s>.+) have an? (?P<m>.+?) below (?P<v>[^\s%]+)%?(?: in .+?)? ?\?$",
            "How many {xs} of {s} have {a} {m} below {v}?"),
        rule(CountLess, Single,
            r"^How many (?P<xs>.+?) have an? (?P<m>.+?) below (?P<v>[^\s%]+)%?(?: in .+?)? ?\?$",
            "How many {xs} have {a} {m} below {v}?"),
        rule(Extreme, Multi,
            r"^Across all (?P<xs>.+?), what is the (?P<ext>minimum|maximum) (?P<m>.+) in (?P<s>.+?) ?\?$",
            "Across all {xs}, what is the {ext} {m} in {s}?"),
        rule(Extreme, Single,
            r"^Across all (?P<xs>.+?), what is the (?P<ext>minimum|maximum) (?P<m>.+?) ?\?$",
            "Across all {xs}, what is the {ext} {m}?"),
        rule(ArgExtreme, Multi,
            r"^In which (?P<x>.+?) was the (?P<m>.+?) of (?P<s>.+) the (?P<ext>lowest|highest) ?\?$",
            "In which {x} was the {m} of {s} the {ext}?"),
        rule(ArgExtreme, Single,
            r"^In which (?P<x>.+?) was the (?P<m>.+) the (?P<ext>lowest|highest) ?\?$",
            "In which {x} was the {m} the {ext}?"),
        rule(ValueLookup, Single,
            r"^In which (?P<x>.+?) is the (?P<m>.+) equal to (?P<v>\S+?) ?\?$",
            "In which {x} is the {m} equal to {v}?"),
        rule(ValueLookup, Multi,
            r"^In which (?P<x>.+?) the (?P<m>.+) in (?P<s>.+?) is (?P<v>\S+?) ?\?$",
            "In which {x} the {m} in {s} is {v}?"),
        rule(PointLookup, Multi,
            r"^What is the (?P<m>.+?) of (?P<s>.+) in (?P<l>.+?) ?\?$",
            "What is the {m} of {s} in {l}?"),
        rule(PointLookup, Single,
            r"^What is the (?P<m>.+) in (?P<l>.+?) ?\?$",
            "What is the {m} in {l}?"),
    ]
});

static PLACEHOLDER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\{(\w+)\}").unwrap());

fn plural(noun: &str) -> String {
    let lower = noun.to_ascii_lowercase();
    if lower.ends_with('s') || lower.ends_with('x') || lower.ends_with("ch") || lower.ends_with("sh") {
        format!("{noun}es")
    } else if lower.ends_with('y')
        && !matches!(lower.chars().rev().nth(1), Some('a' | 'e' | 'i' | 'o' | 'u'))
    {
        format!("{}ies", &noun[..noun.len() - 1])
    } else {
        format!("{noun}s")
    }
}

fn extreme_word(kind: FormKind, high: bool) -> &'static str {
    match (kind, high) {
        (FormKind::Extreme, false) => "minimum",
        (FormKind::Extreme, true) => "maximum",
        (_, false) => "lowest",
        (_, true) => "highest",
    }
}

fn render(rule: &Rule, slots: &Slots) -> String {
    let get = |i: usize, v: &[String]| v.get(i).cloned().unwrap_or_default();
    PLACEHOLDER
        .replace_all(rule.text, |c: &Captures| match &c[1] {
            "m" => slots.metric.clone(),
            "x" => slots.noun.clone(),
            "xs" => plural(&slots.noun),
            "s" => get(0, &slots.series),
            "s2" => get(1, &slots.series),
            "l" => get(0, &slots.labels),
            "l2" => get(1, &slots.labels),
            "v" => slots.number.clone().unwrap_or_default(),
            "ext" => extreme_word(rule.form.kind, slots.high).to_string(),
            "a" => {
                let vowel = slots
                    .metric
                    .chars()
                    .next()
                    .is_some_and(|c| "aeiouAEIOU".contains(c));
                if vowel { "an" } else { "a" }.to_string()
            }
            other => unreachable!("unknown placeholder {other}"),
        })
        .into_owned()
}

fn slots_from(caps: &Captures) -> Option<Slots> {
    let get = |name: &str| caps.name(name).map(|m| m.as_str().to_string());
    // Repeated slots must agree.
    for (a, b) in [("ma", "m"), ("sa", "s"), ("xsa", "xs")] {
        if let (Some(x), Some(y)) = (get(a), get(b)) {
            if x != y {
                return None;
            }
        }
    }
    let mut slots = Slots {
        metric: get("m").unwrap_or_default(),
        noun: get("x").or_else(|| get("xs")).unwrap_or_default(),
        number: get("v"),
        high: matches!(get("ext").as_deref(), Some("maximum" | "highest")),
        ..Slots::default()
    };
    slots.series.extend(get("s"));
    slots.series.extend(get("s2"));
    slots.labels.extend(get("l"));
    slots.labels.extend(get("l2"));
    Some(slots)
}

/// Plan for a form, without the leading Describe.
fn plan_for(form: Form, slots: &Slots) -> QuestionPlan {
    use FormKind::*;
    let single = form.shape == Shape::Single;
    let s = |i: usize| slots.series[i].clone();
    let l = |i: usize| slots.labels[i].clone();
    let group = || {
        if single {
            AtomicQuery::ExtractGroup { entity: None }
        } else {
            AtomicQuery::group(s(0))
        }
    };
    let pair = || {
        if single {
            vec![
                AtomicQuery::ExtractPoint { entity: l(0), by: None },
                AtomicQuery::ExtractPoint { entity: l(1), by: None },
            ]
        } else {
            vec![AtomicQuery::point(s(0), l(0)), AtomicQuery::point(s(0), l(1))]
        }
    };
    let number = || Value::parse(slots.number.as_deref().unwrap_or_default());
    let (queries, reduce, args) = match form.kind {
        PointLookup if single => (
            vec![AtomicQuery::ExtractPoint { entity: l(0), by: None }],
            Reduce::Identity,
            vec![],
        ),
        PointLookup => (vec![AtomicQuery::point(s(0), l(0))], Reduce::Identity, vec![]),
        ValueLookup => (
            vec![group()],
            Reduce::ArgMatch,
            vec![number(), Value::Text(slots.noun.clone())],
        ),
        CountLegend => (vec![], Reduce::CountSeries, vec![]),
        CountLabels => (vec![], Reduce::CountXLabels, vec![]),
        Difference if single => (pair(), Reduce::Difference, vec![]),
        Difference => (
            vec![AtomicQuery::point(s(0), l(0)), AtomicQuery::point(s(1), l(1))],
            Reduce::Difference,
            vec![],
        ),
        Surpass => (
            vec![AtomicQuery::point(s(0), l(0)), AtomicQuery::point(s(1), l(0))],
            Reduce::Difference,
            vec![],
        ),
        Total => (vec![group()], Reduce::Sum, vec![]),
        Average => (vec![group()], Reduce::Average, vec![]),
        AveragePair => (pair(), Reduce::Average, vec![]),
        Ratio => (pair(), Reduce::Ratio, vec![]),
        Greater => (pair(), Reduce::CompareYesNo, vec![]),
        SumTwoSmallest => (vec![group()], Reduce::SumTwoSmallestVsLargest, vec![]),
        CountAboveAverage => (vec![group()], Reduce::CountAboveAverage, vec![]),
        CountGreater => (vec![group()], Reduce::CountGreater, vec![number()]),
        CountLess => (vec![group()], Reduce::CountLess, vec![number()]),
        Extreme => (
            vec![group()],
            if slots.high { Reduce::Max } else { Reduce::Min },
            vec![],
        ),
        ArgExtreme => (
            vec![group()],
            if slots.high { Reduce::ArgMax } else { Reduce::ArgMin },
            vec![],
        ),
        SecondHighest => (vec![group()], Reduce::SecondHighest, vec![]),
    };
    QuestionPlan {
        template_type: form.kind.template_type(),
        queries,
        reduce,
        reduce_args: args,
    }
}

/// Options for [`decompose`].
#[derive(Clone, Debug, Default)]
pub struct DecomposeOptions<'a> {
    /// Omit the leading Describe query.
    pub no_describe: bool,
    /// Parsed chart description, used to snap entity names onto the
    /// chart's own spelling.
    pub description: Option<(&'a [Series], &'a [String])>,
}

fn squash(s: &str) -> String {
    normalize_name(s).chars().filter(|c| !c.is_whitespace()).collect()
}

/// Chart spelling of `name`: exact, then whitespace-insensitive, then the
/// most similar candidate at or above the fuzzy threshold.
fn snap<'a>(name: &str, candidates: impl Iterator<Item = &'a str> + Clone) -> String {
    let key = normalize_name(name);
    if let Some(c) = candidates.clone().find(|c| normalize_name(c) == key) {
        return c.to_string();
    }
    let squashed = squash(name);
    if let Some(c) = candidates.clone().find(|c| squash(c) == squashed) {
        return c.to_string();
    }
    let mut best: Option<(f64, &str)> = None;
    for c in candidates {
        let score = strsim::normalized_levenshtein(&key, &normalize_name(c));
        if best.map_or(true, |(b, _)| score > b) {
            best = Some((score, c));
        }
    }
    match best {
        Some((score, c)) if score >= MATCH_THRESHOLD => c.to_string(),
        _ => name.to_string(),
    }
}

fn snap_query(q: &AtomicQuery, series: &[Series], labels: &[String]) -> AtomicQuery {
    let on_series = |n: &str| snap(n, series.iter().map(|s| s.name.as_str()));
    let on_labels = |n: &str| snap(n, labels.iter().map(String::as_str));
    match q {
        AtomicQuery::Describe => AtomicQuery::Describe,
        AtomicQuery::ExtractPoint { entity, by: Some(by) } => AtomicQuery::point(on_series(entity), on_labels(by)),
        AtomicQuery::ExtractPoint { entity, by: None } => AtomicQuery::ExtractPoint {
            entity: on_labels(entity),
            by: None,
        },
        AtomicQuery::ExtractGroup { entity: Some(e) } => AtomicQuery::group(on_series(e)),
        // Name the lone series once the description has revealed it.
        AtomicQuery::ExtractGroup { entity: None } => match series {
            [only] => AtomicQuery::group(only.name.clone()),
            _ => AtomicQuery::ExtractGroup { entity: None },
        },
    }
}

fn finish_plan(mut plan: QuestionPlan, question: &str, opts: &DecomposeOptions) -> Result<QuestionPlan, SymbolicError> {
    plan.queries.retain(|q| *q != AtomicQuery::Describe);
    if let Some((series, labels)) = opts.description {
        plan.queries = plan
            .queries
            .iter()
            .map(|q| snap_query(q, series, labels))
            .collect();
    }
    if opts.no_describe {
        if plan.reduce.needs_description() {
            return Err(SymbolicError::NeedsDescription(question.to_string()));
        }
    } else {
        plan.queries.insert(0, AtomicQuery::Describe);
    }
    plan.validate()?;
    Ok(plan)
}

/// Ways to read "{m} of {s}" when the captured series itself contains
/// " of ": each later boundary moves text into the metric. Longest metric
/// first, the literal capture last. A second series must carry the same
/// moved prefix.
fn metric_splits(slots: Slots) -> Vec<Slots> {
    let first = slots.series[0].clone();
    let mut out: Vec<Slots> = first
        .rmatch_indices(" of ")
        .filter_map(|(pos, sep)| {
            let prefix = &first[..pos + sep.len()];
            let mut alt = slots.clone();
            alt.metric = format!("{} of {}", slots.metric, &first[..pos]);
            for s in alt.series.iter_mut() {
                *s = s.strip_prefix(prefix)?.to_string();
            }
            Some(alt)
        })
        .collect();
    out.push(slots);
    out
}

/// Picks among [`metric_splits`]: the first whose series all name a
/// described series exactly, then the first that snaps onto one, then the
/// longest metric.
fn choose_split(mut candidates: Vec<Slots>, described: Option<&[Series]>) -> Slots {
    if let Some(series) = described {
        let names = || series.iter().map(|s| s.name.as_str());
        let exact = |n: &String| names().any(|c| normalize_name(c) == normalize_name(n));
        let snaps = |n: &String| {
            let hit = snap(n, names());
            names().any(|c| c == hit)
        };
        let pick = candidates
            .iter()
            .position(|c| c.series.iter().all(exact))
            .or_else(|| candidates.iter().position(|c| c.series.iter().all(snaps)));
        if let Some(i) = pick {
            return candidates.swap_remove(i);
        }
    }
    candidates.swap_remove(0)
}

fn match_form(question: &str, described: Option<&[Series]>) -> Option<(Form, Slots)> {
    let question = question.trim();
    GRAMMAR.iter().find_map(|rule| {
        let caps = rule.pattern.captures(question)?;
        let slots = slots_from(&caps)?;
        let slots = if rule.text.contains("{m} of {s}") {
            choose_split(metric_splits(slots), described)
        } else {
            slots
        };
        Some((rule.form, slots))
    })
}

/// Maps a template question to its plan. A `hint` plan, when given, is
/// used as-is apart from Describe handling and entity snapping.
pub fn decompose(
    question: &str,
    hint: Option<&QuestionPlan>,
    opts: &DecomposeOptions,
) -> Result<QuestionPlan, SymbolicError> {
    let plan = match hint {
        Some(plan) => plan.clone(),
        None => {
            let (form, slots) = match_form(question, opts.description.map(|(s, _)| s))
                .ok_or_else(|| SymbolicError::NotTemplated(question.to_string()))?;
            plan_for(form, &slots)
        }
    };
    finish_plan(plan, question, opts)
}

/// The grammar form a question parses as, if any.
pub fn classify(question: &str) -> Option<Form> {
    match_form(question, None).map(|(f, _)| f)
}

fn numeric_row(table: &ChartTable, series: usize) -> bool {
    table.cells()[series].iter().all(Value::is_numeric)
}

fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let b = (a + rng.gen_range(1..n)) % n;
    (a, b)
}

/// Picks slots for `form` on `table`, or `None` when the table cannot
/// support the form.
fn pick_slots(form: Form, table: &ChartTable, rng: &mut ChaCha8Rng) -> Option<Slots> {
    use FormKind::*;
    let n_series = table.series().len();
    let n_labels = table.x_labels().len();
    let series_name = |i: usize| table.series()[i].name.clone();
    let label = |i: usize| table.x_labels()[i].clone();
    let mut slots = Slots {
        metric: table.y_title().unwrap_or("value").to_string(),
        noun: table.x_title().unwrap_or("label").to_string(),
        high: rng.gen_bool(0.5),
        ..Slots::default()
    };
    let s = rng.gen_range(0..n_series);
    let row = &table.cells()[s];
    let numeric = numeric_row(table, s);
    match form.kind {
        CountLegend | CountLabels => {}
        PointLookup => {
            let l = rng.gen_range(0..n_labels);
            slots.series.push(series_name(s));
            slots.labels.push(label(l));
        }
        ValueLookup => {
            if !numeric {
                return None;
            }
            let unique: Vec<usize> = (0..n_labels)
                .filter(|&i| {
                    let v = row[i].as_decimal();
                    row.iter().filter(|c| c.as_decimal() == v).count() == 1
                })
                .collect();
            let &l = unique.choose(rng)?;
            slots.series.push(series_name(s));
            slots.number = Some(row[l].render());
        }
        Difference if form.shape == Shape::Multi => {
            let cells = n_series * n_labels;
            if cells < 2 {
                return None;
            }
            let (a, b) = distinct_pair(rng, cells);
            let (s1, l1) = (a / n_labels, a % n_labels);
            let (s2, l2) = (b / n_labels, b % n_labels);
            if !table.cell(s1, l1).is_numeric() || !table.cell(s2, l2).is_numeric() {
                return None;
            }
            slots.series = vec![series_name(s1), series_name(s2)];
            slots.labels = vec![label(l1), label(l2)];
        }
        Surpass => {
            if n_series < 2 {
                return None;
            }
            let (s1, s2) = distinct_pair(rng, n_series);
            let l = rng.gen_range(0..n_labels);
            if !table.cell(s1, l).is_numeric() || !table.cell(s2, l).is_numeric() {
                return None;
            }
            slots.series = vec![series_name(s1), series_name(s2)];
            slots.labels.push(label(l));
        }
        Difference | AveragePair | Ratio | Greater => {
            if n_labels < 2 || !numeric {
                return None;
            }
            let (l1, l2) = distinct_pair(rng, n_labels);
            slots.series.push(series_name(s));
            slots.labels = vec![label(l1), label(l2)];
        }
        Total | Average | SecondHighest => {
            if n_labels < 2 || !numeric {
                return None;
            }
            slots.series.push(series_name(s));
        }
        SumTwoSmallest => {
            if n_labels < 3 || !numeric {
                return None;
            }
            slots.series.push(series_name(s));
        }
        CountAboveAverage | Extreme | ArgExtreme => {
            if !numeric {
                return None;
            }
            slots.series.push(series_name(s));
        }
        CountGreater | CountLess => {
            if !numeric {
                return None;
            }
            slots.series.push(series_name(s));
            slots.number = Some(row[rng.gen_range(0..n_labels)].render());
        }
    }
    if form.shape == Shape::Single {
        slots.series.clear();
    }
    Some(slots)
}

/// Template questions of one type over `table`, each with its plan and a
/// brute-force gold answer. Forms whose rendered question would parse back
/// to a different plan are dropped.
pub fn gen_questions(
    table: &ChartTable,
    template_type: TemplateType,
    seed: u64,
) -> Result<Vec<(QAInstance, QuestionPlan)>, SymbolicError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = if table.is_single_series() {
        Shape::Single
    } else {
        Shape::Multi
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rule in GRAMMAR.iter() {
        let form = rule.form;
        if form.kind.template_type() != template_type || (form.shape != shape && form.shape != Shape::Any) {
            continue;
        }
        let Some(slots) = pick_slots(form, table, &mut rng) else {
            continue;
        };
        let question = render(rule, &slots);
        let plan = finish_plan(plan_for(form, &slots), &question, &DecomposeOptions::default())?;
        match decompose(&question, None, &DecomposeOptions::default()) {
            Ok(parsed) if parsed == plan => {}
            _ => continue,
        }
        let Ok(gold) = compute_gold(table, &plan) else {
            continue;
        };
        if !seen.insert(question.clone()) {
            continue;
        }
        out.push((
            QAInstance {
                question,
                gold: gold.answer,
                template_type: Some(template_type),
                chart_id: table.id().to_string(),
            },
            plan,
        ));
    }
    if out.is_empty() {
        return Err(SymbolicError::SkippedTemplate {
            chart: table.id().to_string(),
            template: template_type,
        });
    }
    Ok(out)
}
