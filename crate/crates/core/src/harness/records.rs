//! Raw response records: one line per (taker, prompt variant, item).
//!
//! CSV with header `taker_id,variant_id,item_id,extracted_answer,human_score`,
//! UTF-8; an empty `human_score` means absent. Malformed lines are collected as
//! rejects with their line number instead of aborting the whole stream.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_HEADER: [&str; 5] = ["taker_id", "variant_id", "item_id", "extracted_answer", "human_score"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponseRecord {
    pub taker_id: String,
    pub variant_id: String,
    pub item_id: String,
    pub extracted_answer: String,
    pub human_score: Option<usize>,
    /// 1-based line in the source stream; 0 for records built in memory.
    #[serde(skip)]
    pub line: usize,
}

impl RawResponseRecord {
    pub fn new(
        taker_id: impl Into<String>,
        variant_id: impl Into<String>,
        item_id: impl Into<String>,
        extracted_answer: impl Into<String>,
        human_score: Option<usize>,
    ) -> Self {
        Self {
            taker_id: taker_id.into(),
            variant_id: variant_id.into(),
            item_id: item_id.into(),
            extracted_answer: extracted_answer.into(),
            human_score,
            line: 0,
        }
    }
}

/// A record or line that could not be used, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOutcome {
    pub records: Vec<RawResponseRecord>,
    pub rejects: Vec<Reject>,
}

/// Parses a record stream. Only syntax is checked here; item references are
/// resolved during pattern assembly.
pub fn adapter_ingest<R: Read>(reader: R) -> Result<IngestOutcome> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = IngestOutcome::default();
    let mut header_seen = false;
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.rejects.push(Reject {
                    line,
                    reason: format!("unreadable line: {e}"),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            header_seen = true;
            let fields: Vec<&str> = rec.iter().map(str::trim).collect();
            if fields != RECORD_HEADER {
                return Err(Error::validation(
                    "line 1",
                    format!("expected header {}", RECORD_HEADER.join(",")),
                ));
            }
            continue;
        }
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != RECORD_HEADER.len() {
            out.rejects.push(Reject {
                line,
                reason: format!("expected {} fields, found {}", RECORD_HEADER.len(), rec.len()),
            });
            continue;
        }
        let (taker, variant, item) = (rec[0].trim(), rec[1].trim(), rec[2].trim());
        if taker.is_empty() || variant.is_empty() || item.is_empty() {
            out.rejects.push(Reject {
                line,
                reason: "taker_id, variant_id and item_id must be non-empty".into(),
            });
            continue;
        }
        let score = rec[4].trim();
        let human_score = if score.is_empty() {
            None
        } else {
            match score.parse::<usize>() {
                Ok(v) => Some(v),
                Err(_) => {
                    out.rejects.push(Reject {
                        line,
                        reason: format!("human_score {score:?} is not a non-negative integer"),
                    });
                    continue;
                }
            }
        };
        out.records.push(RawResponseRecord {
            taker_id: taker.to_owned(),
            variant_id: variant.to_owned(),
            item_id: item.to_owned(),
            extracted_answer: rec[3].to_owned(),
            human_score,
            line,
        });
    }
    if out.records.is_empty() && out.rejects.is_empty() {
        log::warn!("response stream contained no records");
    }
    Ok(out)
}

pub fn write_records<W: Write>(records: &[RawResponseRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        let score = r.human_score.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([
            r.taker_id.as_str(),
            r.variant_id.as_str(),
            r.item_id.as_str(),
            r.extracted_answer.as_str(),
            score.as_str(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
