//! Ingestion and orchestration: item banks, raw response records, scoring,
//! pattern assembly and the estimation pipeline.

mod assembly;
mod bank;
mod pipeline;
mod records;
mod scoring;

pub use assembly::{assemble_patterns, Assembly, VariantPattern};
pub use bank::{BankItem, CalibrationSummary, ItemBank, ItemFormat, DEFAULT_OPTIONS};
pub use pipeline::{
    run_patterns, run_pipeline, ExcludedVariant, PipelineOptions, PipelineOutput, TakerResult, VariantEstimate,
    VariantEstimateSet,
};
pub use records::{adapter_ingest, write_records, IngestOutcome, RawResponseRecord, Reject, RECORD_HEADER};
pub use scoring::{extract_key, normalize_answer, score_multiple_choice, Diagnostic, McScore};
