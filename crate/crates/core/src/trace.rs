//! Trace files: JSONL with a header line, one record line per iteration
//! (fields exactly those of the iteration record), and a final summary line.
//! The header's `method` decides whether record lines are adaptive or
//! fixed-radius rows.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::ProblemConstants;
use crate::error::{Error, Result};
use crate::fixed::{FixedConfig, FixedIterationRecord, FixedSolveResult};
use crate::solver::{IterationRecord, SolveResult, SolverConfig, Status};

/// Schema tag written into every header.
pub const TRACE_SCHEMA: &str = "trlab-trace/1";

/// Method name used for fixed-radius traces (adaptive traces use the radius
/// strategy name).
pub const FIXED_METHOD: &str = "fixed";

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub problem: String,
    pub dim: usize,
    /// "update1", "update2", or "fixed".
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_config: Option<FixedConfig>,
    pub constants: ProblemConstants,
    pub x0: Vec<f64>,
}

/// Last line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub status: Status,
    pub iterations: usize,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_lambda_min: f64,
    pub x_final: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrace {
    pub header: TraceHeader,
    pub records: Vec<IterationRecord>,
    pub summary: TraceSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedTrace {
    pub header: TraceHeader,
    pub records: Vec<FixedIterationRecord>,
    pub summary: TraceSummary,
}

/// A parsed trace of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceData {
    Adaptive(AdaptiveTrace),
    Fixed(FixedTrace),
}

impl TraceData {
    pub fn header(&self) -> &TraceHeader {
        match self {
            TraceData::Adaptive(t) => &t.header,
            TraceData::Fixed(t) => &t.header,
        }
    }

    pub fn summary(&self) -> &TraceSummary {
        match self {
            TraceData::Adaptive(t) => &t.summary,
            TraceData::Fixed(t) => &t.summary,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            TraceData::Adaptive(t) => t.records.len(),
            TraceData::Fixed(t) => t.records.len(),
        }
    }
}

pub fn summary_of(result: &SolveResult) -> TraceSummary {
    TraceSummary {
        status: result.status,
        iterations: result.trace.len(),
        final_f: result.final_f,
        final_grad_norm: result.final_grad_norm,
        final_lambda_min: result.final_lambda_min,
        x_final: result.x_final.clone(),
    }
}

pub fn summary_of_fixed(result: &FixedSolveResult) -> TraceSummary {
    TraceSummary {
        status: result.status,
        iterations: result.trace.len(),
        final_f: result.final_f,
        final_grad_norm: result.final_grad_norm,
        final_lambda_min: result.final_lambda_min,
        x_final: result.x_final.clone(),
    }
}

pub fn write_adaptive(
    w: &mut impl Write,
    header: &TraceHeader,
    result: &SolveResult,
) -> Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    w.write_all(b"\n")?;
    for rec in &result.trace {
        serde_json::to_writer(&mut *w, rec)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *w, &summary_of(result))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_fixed(
    w: &mut impl Write,
    header: &TraceHeader,
    result: &FixedSolveResult,
) -> Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    w.write_all(b"\n")?;
    for rec in &result.trace {
        serde_json::to_writer(&mut *w, rec)?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *w, &summary_of_fixed(result))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read(r: impl BufRead) -> Result<TraceData> {
    let mut lines = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    if lines.len() < 2 {
        return Err(Error::MalformedTrace(
            "expected at least a header and a summary line".into(),
        ));
    }
    let header: TraceHeader = serde_json::from_str(&lines[0])
        .map_err(|e| Error::MalformedTrace(format!("bad header: {e}")))?;
    if header.schema != TRACE_SCHEMA {
        return Err(Error::MalformedTrace(format!(
            "unsupported schema '{}', expected '{TRACE_SCHEMA}'",
            header.schema
        )));
    }
    let summary: TraceSummary = serde_json::from_str(lines.last().unwrap())
        .map_err(|e| Error::MalformedTrace(format!("bad summary: {e}")))?;
    let body = &lines[1..lines.len() - 1];

    if header.method == FIXED_METHOD {
        let mut records = Vec::with_capacity(body.len());
        for (i, line) in body.iter().enumerate() {
            records.push(serde_json::from_str(line).map_err(|e| {
                Error::MalformedTrace(format!("bad fixed record on line {}: {e}", i + 2))
            })?);
        }
        Ok(TraceData::Fixed(FixedTrace {
            header,
            records,
            summary,
        }))
    } else {
        let mut records = Vec::with_capacity(body.len());
        for (i, line) in body.iter().enumerate() {
            records.push(serde_json::from_str(line).map_err(|e| {
                Error::MalformedTrace(format!("bad record on line {}: {e}", i + 2))
            })?);
        }
        Ok(TraceData::Adaptive(AdaptiveTrace {
            header,
            records,
            summary,
        }))
    }
}

pub fn read_path(path: &Path) -> Result<TraceData> {
    let file = std::fs::File::open(path)?;
    read(std::io::BufReader::new(file))
}
