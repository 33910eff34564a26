//! Corpus loading, synthetic charts and fine-tuning data export.

mod closed_loop;
mod load;
mod sample;
mod synth;
mod system1;
mod system2;

pub use closed_loop::{generate_questions, run_questions, score_records, GeneratedQuestions};
pub use load::{load_corpus, write_internal_jsonl, Corpus, CorpusEntry, CorpusFormat, LoadError};
pub use sample::{sample_eval_set, SampleError};
pub use synth::{synth_table, synth_tables, SynthOptions};
pub use system1::{chart_queries, export_system1_sft, generate_system1_corpus, CorpusManifest, System1Pair};
pub use system2::{
    examples_from_records, export_system2_sft, parse_annotated, parse_annotated_file, ExampleError,
    ExportSummary, Segment, System2Example, EXAMPLE_SEPARATOR,
};
