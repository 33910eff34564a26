//! Turns reader answers into a concluding sentence.

use rust_decimal::Decimal;

use super::{QuestionPlan, Reduce, SymbolicError};
use crate::model::Value;
use crate::protocol::{AtomicQuery, ReaderAnswer};

pub const UNKNOWN_CONCLUSION: &str = "So the answer is unknown.";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deduction {
    /// One line ending "So the answer is X."
    pub conclusion: String,
    pub answer: Value,
}

impl Deduction {
    fn unknown() -> Self {
        Deduction {
            conclusion: UNKNOWN_CONCLUSION.to_string(),
            answer: Value::Text("unknown".into()),
        }
    }

    fn new(reasoning: String, answer: String) -> Self {
        let conclusion = if reasoning.is_empty() {
            format!("So the answer is {answer}.")
        } else {
            format!("{reasoning} So the answer is {answer}.")
        };
        Deduction {
            conclusion,
            answer: Value::parse(&answer),
        }
    }
}

struct Item {
    key: Option<String>,
    value: Value,
    num: Decimal,
}

fn join(items: &[&Item]) -> String {
    items
        .iter()
        .map(|i| i.value.render())
        .collect::<Vec<_>>()
        .join(", ")
}

fn signed(d: &Item) -> String {
    if d.num.is_sign_negative() {
        format!("({})", d.value)
    } else {
        d.value.render()
    }
}

fn average_text(avg: Decimal) -> String {
    let two = avg.round_dp(2);
    if two.is_zero() && !avg.is_zero() {
        avg.round_sf(4).unwrap_or(avg).normalize().to_string()
    } else {
        format!("{two:.2}")
    }
}

/// Renders a threshold at the precision of the data it is compared with.
fn threshold_text(t: &Value, items: &[Item]) -> String {
    let Some(d) = t.as_decimal() else {
        return t.render();
    };
    let scale = items.iter().map(|i| i.num.scale()).max().unwrap_or(0);
    if d.scale() < scale {
        let mut r = d;
        r.rescale(scale);
        r.to_string()
    } else {
        t.render()
    }
}

fn in_key(item: &Item) -> String {
    match &item.key {
        Some(k) => format!(" in {k}"),
        None => String::new(),
    }
}

/// Applies the plan's reduction to the reader's answers, which must line up
/// one-to-one with `plan.queries`. Unusable answers yield the unknown
/// conclusion rather than an error.
pub fn deduce(plan: &QuestionPlan, answers: &[ReaderAnswer]) -> Result<Deduction, SymbolicError> {
    if answers.len() != plan.queries.len() {
        return Err(SymbolicError::Misaligned {
            expected: plan.queries.len(),
            found: answers.len(),
        });
    }
    let mut description = None;
    let mut raw: Vec<(Option<String>, Value)> = Vec::new();
    for (q, a) in plan.queries.iter().zip(answers) {
        match (q, a) {
            (_, ReaderAnswer::Unavailable(_)) => return Ok(Deduction::unknown()),
            (AtomicQuery::Describe, ReaderAnswer::Description { series, x_labels }) => {
                description = Some((series, x_labels));
            }
            (AtomicQuery::Describe, _) => return Ok(Deduction::unknown()),
            (_, ReaderAnswer::Scalar(v)) => raw.push((None, v.clone())),
            (AtomicQuery::ExtractGroup { .. }, ReaderAnswer::Group(pairs)) => {
                raw.extend(pairs.iter().map(|(k, v)| (Some(k.clone()), v.clone())));
            }
            _ => return Ok(Deduction::unknown()),
        }
    }

    match plan.reduce {
        Reduce::CountSeries | Reduce::CountXLabels => {
            let Some((series, labels)) = description else {
                return Ok(Deduction::unknown());
            };
            let (names, what): (Vec<&str>, &str) = if plan.reduce == Reduce::CountSeries {
                (series.iter().map(|s| s.name.as_str()).collect(), "legend labels")
            } else {
                (labels.iter().map(String::as_str).collect(), "labels on the x-axis")
            };
            let n = names.len();
            return Ok(Deduction::new(
                format!("There are {n} {what}, [{}].", names.join(", ")),
                n.to_string(),
            ));
        }
        Reduce::Identity => {
            return Ok(match raw.first() {
                Some((_, v)) if raw.len() == 1 => Deduction::new(format!("The value is {v}."), v.render()),
                _ => Deduction::unknown(),
            });
        }
        _ => {}
    }

    let mut items = Vec::with_capacity(raw.len());
    for (key, value) in raw {
        let Some(num) = value.as_decimal() else {
            return Ok(Deduction::unknown());
        };
        items.push(Item { key, value, num });
    }
    if items.len() < plan.reduce.min_arity()
        || plan.reduce.exact_arity().is_some_and(|n| n != items.len())
    {
        return Ok(Deduction::unknown());
    }
    let all: Vec<&Item> = items.iter().collect();
    let first_extreme = |high: bool| {
        let mut best = &items[0];
        for it in &items[1..] {
            if (high && it.num > best.num) || (!high && it.num < best.num) {
                best = it;
            }
        }
        best
    };

    let d = match plan.reduce {
        Reduce::Sum => {
            let total: Decimal = items.iter().map(|i| i.num).sum();
            let terms = items.iter().map(signed).collect::<Vec<_>>().join("+");
            Deduction::new(format!("The total is {terms}={total}."), total.to_string())
        }
        Reduce::Difference => {
            let (a, b) = (&items[0], &items[1]);
            let diff = a.num - b.num;
            let expr = format!("{}-{}={diff}", a.value, signed(b));
            let text = if diff.is_sign_negative() && !diff.is_zero() {
                format!("The difference is {expr}.")
            } else {
                format!("{} surpasses {} by {expr}.", a.value, b.value)
            };
            Deduction::new(text, diff.to_string())
        }
        Reduce::Ratio => {
            let (a, b) = (&items[0], &items[1]);
            if b.num.is_zero() {
                return Ok(Deduction::unknown());
            }
            let r = (a.num / b.num).round_sf(4).unwrap_or_default().normalize();
            Deduction::new(format!("The ratio is {}/{}={r}.", a.value, b.value), r.to_string())
        }
        Reduce::Average => {
            let total: Decimal = items.iter().map(|i| i.num).sum();
            let avg = average_text(total / Decimal::from(items.len()));
            let terms = items.iter().map(signed).collect::<Vec<_>>().join("+");
            Deduction::new(
                format!("The average is ({terms})/{}={avg}.", items.len()),
                avg,
            )
        }
        Reduce::Min | Reduce::Max | Reduce::ArgMin | Reduce::ArgMax => {
            let high = matches!(plan.reduce, Reduce::Max | Reduce::ArgMax);
            let best = first_extreme(high);
            let word = if high { "maximum" } else { "minimum" };
            let text = format!("The {word} value is {}{}.", best.value, in_key(best));
            let answer = match (plan.reduce, &best.key) {
                (Reduce::ArgMin | Reduce::ArgMax, Some(k)) => k.clone(),
                (Reduce::ArgMin | Reduce::ArgMax, None) => return Ok(Deduction::unknown()),
                _ => best.value.render(),
            };
            Deduction::new(text, answer)
        }
        Reduce::CountGreater | Reduce::CountLess => {
            let Some(t) = plan.reduce_args.first() else {
                return Ok(Deduction::unknown());
            };
            let Some(tn) = t.as_decimal() else {
                return Ok(Deduction::unknown());
            };
            let greater = plan.reduce == Reduce::CountGreater;
            let hits: Vec<&Item> = items
                .iter()
                .filter(|i| if greater { i.num > tn } else { i.num < tn })
                .collect();
            let word = if greater { "greater than" } else { "below" };
            Deduction::new(
                format!(
                    "The values that are {word} {} are [{}].",
                    threshold_text(t, &items),
                    join(&hits)
                ),
                hits.len().to_string(),
            )
        }
        Reduce::CountAboveAverage => {
            let total: Decimal = items.iter().map(|i| i.num).sum();
            let mean = total / Decimal::from(items.len());
            let shown = average_text(mean);
            let terms = items.iter().map(signed).collect::<Vec<_>>().join("+");
            let hits: Vec<&Item> = items.iter().filter(|i| i.num > mean).collect();
            Deduction::new(
                format!(
                    "The average is ({terms})/{}={shown}. The values that are greater than {shown} are [{}].",
                    items.len(),
                    join(&hits)
                ),
                hits.len().to_string(),
            )
        }
        Reduce::SecondHighest => {
            let mut desc: Vec<&Item> = items.iter().collect();
            desc.sort_by(|a, b| b.num.cmp(&a.num));
            let second = desc[1];
            Deduction::new(
                format!(
                    "In descending order the values are [{}]. The second highest value is {}.",
                    join(&desc),
                    second.value
                ),
                second.value.render(),
            )
        }
        Reduce::CompareYesNo => {
            let (a, b) = (&items[0], &items[1]);
            let yes = a.num > b.num;
            let rel = if yes { "is greater than" } else { "is not greater than" };
            Deduction::new(format!("{} {rel} {}.", a.value, b.value), yes_no(yes))
        }
        Reduce::SumTwoSmallestVsLargest => {
            let mut order: Vec<usize> = (0..items.len()).collect();
            order.sort_by(|&a, &b| items[a].num.cmp(&items[b].num));
            let mut two = [order[0], order[1]];
            two.sort_unstable();
            let (x, y) = (&items[two[0]], &items[two[1]]);
            let largest = first_extreme(true);
            let sum = x.num + y.num;
            let rel = match sum.cmp(&largest.num) {
                std::cmp::Ordering::Greater => "greater than",
                std::cmp::Ordering::Equal => "equal to",
                std::cmp::Ordering::Less => "smaller than",
            };
            Deduction::new(
                format!(
                    "Among [{}], the two smallest values are {} and {} while the largest value is {}. {}+{}={sum}, which is {rel} {}.",
                    join(&all),
                    x.value,
                    y.value,
                    largest.value,
                    x.value,
                    signed(y),
                    largest.value
                ),
                yes_no(sum > largest.num),
            )
        }
        Reduce::ArgMatch => {
            let Some(target) = plan.reduce_args.first().and_then(Value::as_decimal) else {
                return Ok(Deduction::unknown());
            };
            let Some(hit) = items.iter().find(|i| i.num == target) else {
                return Ok(Deduction::unknown());
            };
            let Some(key) = &hit.key else {
                return Ok(Deduction::unknown());
            };
            let noun = match plan.reduce_args.get(1) {
                Some(Value::Text(n)) if !n.is_empty() => format!("{n} "),
                _ => String::new(),
            };
            Deduction::new(format!("The value {} is in {noun}{key}.", plan.reduce_args[0]), key.clone())
        }
        Reduce::Identity | Reduce::CountSeries | Reduce::CountXLabels => unreachable!("handled above"),
    };
    Ok(d)
}

fn yes_no(b: bool) -> String {
    Value::YesNo(b).render()
}
