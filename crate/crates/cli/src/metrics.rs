//! Per-tick metrics export.

use anyhow::Result;
use csv::{Terminator, WriterBuilder};
use sase_core::runtime::TickRecord;

pub const HEADER: [&str; 11] = [
    "tick",
    "utility",
    "expected_utility",
    "classification",
    "triggered",
    "provenance",
    "case_id",
    "threshold_met",
    "eval_count",
    "elapsed_us",
    "kb_size",
];

/// One row per record; response columns are left empty on ticks without a trigger.
pub fn row(record: &TickRecord) -> [String; 11] {
    let (provenance, case_id, threshold_met, eval_count, elapsed_us) = match &record.response {
        Some(r) => (
            r.provenance.label().to_owned(),
            r.provenance.case_id().to_string(),
            r.threshold_met.to_string(),
            r.eval_count.to_string(),
            r.elapsed_us.to_string(),
        ),
        None => Default::default(),
    };
    [
        record.tick.to_string(),
        record.utility.to_string(),
        record.expected_utility.to_string(),
        record.classification.as_str().to_owned(),
        record.triggered.to_string(),
        provenance,
        case_id,
        threshold_met,
        eval_count,
        elapsed_us,
        record.kb_size.to_string(),
    ]
}

pub fn to_csv(records: &[TickRecord]) -> Result<String> {
    let mut writer = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(HEADER)?;
    for record in records {
        writer.write_record(row(record))?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes)?)
}
