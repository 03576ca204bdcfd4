//! Report rendering: fixed-width text tables for reading, CSV siblings for
//! downstream tooling. All numeric formatting is locale-free and width-fixed
//! so reruns of the same inputs produce identical bytes.

use std::fs;
use std::path::Path;

use masentropy::analysis::{
    quadrant_classify, CausalRecord, CausalSummary, QuadrantCounts, ReliabilityBin,
};
use masentropy::Scalar;

use crate::commands::CliError;

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file =
        fs::File::create(path).map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_fail(path: &Path, e: csv::Error) -> CliError {
    CliError::Fatal(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

pub fn render_calibration(ece: Scalar, bins: &[ReliabilityBin]) -> String {
    let mut out = String::new();
    out.push_str("calibration report\n");
    out.push_str("==================\n");
    out.push_str(&format!("ece   {ece:.6}\n"));
    out.push_str(&format!("bins  {}\n\n", bins.len()));
    out.push_str("bin  range         count  mean_conf  accuracy\n");
    for bin in bins {
        // Every bin is right-open except the last, which closes at 1.
        let closer = if bin.index + 1 == bins.len() {
            ']'
        } else {
            ')'
        };
        out.push_str(&format!(
            "{:>3}  [{:.2}, {:.2}{closer}  {:>5}  {:>9.6}  {:>8.6}\n",
            bin.index, bin.lo, bin.hi, bin.count, bin.mean_confidence, bin.accuracy
        ));
    }
    out
}

pub fn calibration_csv(path: &Path, bins: &[ReliabilityBin]) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["bin", "lo", "hi", "count", "mean_confidence", "accuracy"])
        .map_err(|e| csv_fail(path, e))?;
    for bin in bins {
        writer
            .write_record([
                bin.index.to_string(),
                bin.lo.to_string(),
                bin.hi.to_string(),
                bin.count.to_string(),
                bin.mean_confidence.to_string(),
                bin.accuracy.to_string(),
            ])
            .map_err(|e| csv_fail(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Causal decomposition
// ---------------------------------------------------------------------------

fn causal_header(summary: &CausalSummary) -> String {
    format!(
        "samples                    {}\n\
         mean role effect           {:+.6}\n\
         mean interaction effect    {:+.6}\n\
         mean total effect          {:+.6}\n\
         frac interaction negative  {:.6}\n",
        summary.records.len(),
        summary.mean_role_effect,
        summary.mean_interaction_effect,
        summary.mean_total_effect,
        summary.frac_interaction_negative
    )
}

pub fn render_causal(summary: &CausalSummary) -> String {
    let mut out = String::new();
    out.push_str("causal decomposition\n");
    out.push_str("====================\n");
    out.push_str(&causal_header(summary));
    out
}

pub fn render_quadrants(summary: &CausalSummary, counts: &QuadrantCounts) -> String {
    let mut out = String::new();
    out.push_str("entropy/accuracy quadrants\n");
    out.push_str("==========================\n");
    out.push_str(&causal_header(summary));
    out.push('\n');
    out.push_str("quadrant                count\n");
    for (name, count) in [
        ("genuine_improvement", counts.genuine_improvement),
        ("possible_anchoring", counts.possible_anchoring),
        ("productive_exploration", counts.productive_exploration),
        ("deterioration", counts.deterioration),
    ] {
        out.push_str(&format!("{name:<22}  {count:>5}\n"));
    }
    out
}

fn causal_record_fields(record: &CausalRecord) -> Vec<String> {
    vec![
        record.sample_key.clone(),
        record.h_sas.to_string(),
        record.h_r1.to_string(),
        record.h_r2.to_string(),
        record.role_effect.to_string(),
        record.interaction_effect.to_string(),
        record.total_effect.to_string(),
        record.delta_acc.to_string(),
    ]
}

const CAUSAL_COLUMNS: [&str; 8] = [
    "sample_key",
    "h_sas",
    "h_r1",
    "h_r2",
    "role_effect",
    "interaction_effect",
    "total_effect",
    "delta_acc",
];

pub fn causal_csv(path: &Path, records: &[CausalRecord]) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(CAUSAL_COLUMNS)
        .map_err(|e| csv_fail(path, e))?;
    for record in records {
        writer
            .write_record(causal_record_fields(record))
            .map_err(|e| csv_fail(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))
}

pub fn quadrants_csv(path: &Path, records: &[CausalRecord]) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    let mut header: Vec<&str> = CAUSAL_COLUMNS.to_vec();
    header.push("quadrant");
    writer
        .write_record(&header)
        .map_err(|e| csv_fail(path, e))?;
    for record in records {
        let mut fields = causal_record_fields(record);
        fields.push(
            quadrant_classify(record.total_effect, record.delta_acc)
                .name()
                .to_string(),
        );
        writer
            .write_record(&fields)
            .map_err(|e| csv_fail(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Fatal(format!("{}: {e}", path.display())))
}
