//! Random chart tables for closed-loop runs and data generation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use crate::model::{ChartTable, Series, Value};

const SERIES_NAMES: &[&str] = &[
    "Argentina", "Belgium", "Chile", "Denmark", "Ecuador", "Finland", "Ghana", "Hungary", "Iceland",
    "Jamaica", "Kenya", "Latvia", "Morocco", "Nepal", "Oman", "Peru", "Qatar", "Romania", "Samoa",
    "Tunisia", "Uganda", "Vietnam", "Yemen", "Zambia",
];

const CATEGORIES: &[&str] = &[
    "Agriculture", "Construction", "Education", "Energy", "Finance", "Healthcare", "Manufacturing",
    "Mining", "Retail", "Tourism", "Transport", "Utilities",
];

const COLORS: &[&str] = &[
    "blue", "orange", "green", "red", "purple", "brown", "pink", "gray", "olive", "cyan",
];

const Y_TITLES: &[&str] = &[
    "Revenue (million USD)", "Number of employees", "Export volume", "Output index",
];

/// Shape limits for generated tables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthOptions {
    pub max_series: usize,
    pub min_labels: usize,
    pub max_labels: usize,
    /// Chance of a one-series chart.
    pub single_series_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            max_series: 5,
            min_labels: 2,
            max_labels: 8,
            single_series_rate: 0.3,
        }
    }
}

/// A table whose series names and x-labels come from disjoint vocabularies,
/// so every entity resolves to exactly one axis.
pub fn synth_table(id: &str, rng: &mut impl Rng, opts: &SynthOptions) -> ChartTable {
    let n_series = if rng.gen_bool(opts.single_series_rate) {
        1
    } else {
        rng.gen_range(2..=opts.max_series.max(2))
    };
    let n_labels = rng.gen_range(opts.min_labels..=opts.max_labels);
    let years = rng.gen_bool(0.5);
    let labels: Vec<String> = if years {
        let start = rng.gen_range(1960..=2010);
        (0..n_labels).map(|i| (start + i as i32).to_string()).collect()
    } else {
        let mut c: Vec<&str> = CATEGORIES.choose_multiple(rng, n_labels.min(CATEGORIES.len())).copied().collect();
        c.sort_unstable();
        c.into_iter().map(str::to_string).collect()
    };
    let colors: Vec<&str> = COLORS.choose_multiple(rng, n_series).copied().collect();
    let series: Vec<Series> = SERIES_NAMES
        .choose_multiple(rng, n_series)
        .zip(&colors)
        .map(|(n, c)| Series::new(*n, Some(c)))
        .collect();
    let cells = (0..n_series)
        .map(|_| {
            labels
                .iter()
                .map(|_| Value::number(Decimal::new(rng.gen_range(100..100_000), 2)))
                .collect()
        })
        .collect();
    let x_title = if years { "year" } else { "category" };
    let y_title = Y_TITLES.choose(rng).map(|s| s.to_string());
    ChartTable::new(id, series, labels, cells)
        .expect("generated table is well formed")
        .with_titles(Some(x_title.to_string()), y_title)
}

/// `n` tables with ids `synth_0000`, `synth_0001`, ...
pub fn synth_tables(n: usize, seed: u64, opts: &SynthOptions) -> Vec<ChartTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| synth_table(&format!("synth_{i:04}"), &mut rng, opts))
        .collect()
}
