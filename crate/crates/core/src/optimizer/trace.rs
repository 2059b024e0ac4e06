//! Per-iteration run records and their CSV form.
//!
//! Columns, in order:
//!
//! ```text
//! n, point, a0..a{d-1}, z0..z{c-1}, output, width, score, y0..y{q},
//! safe, maximizers, expanders, best, best_a0..best_a{d-1}, best_lower, status
//! ```
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Ok,
    /// The evaluator failed; observations are NaN and the model was not updated.
    Failed,
}

impl EntryStatus {
    fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Ok => "ok",
            EntryStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub n: usize,
    /// Domain index of `a_n`.
    pub point: usize,
    pub params: Vec<f64>,
    pub context: Vec<f64>,
    /// Output whose interval was widest.
    pub output: usize,
    pub width: f64,
    pub score: f64,
    /// Noisy measurements of all outputs at `a_n`.
    pub observations: Vec<f64>,
    pub safe_size: usize,
    pub maximizers: usize,
    pub expanders: usize,
    /// Domain index of the best estimate at this iteration.
    pub best: usize,
    pub best_params: Vec<f64>,
    /// Lower performance bound at `best`.
    pub best_lower: f64,
    pub status: EntryStatus,
}

/// Append-only sequence of [`TraceEntry`] rows with fixed column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub param_dim: usize,
    pub context_dim: usize,
    pub num_outputs: usize,
    entries: Vec<TraceEntry>,
}

impl RunTrace {
    pub fn new(param_dim: usize, context_dim: usize, num_outputs: usize) -> Self {
        Self {
            param_dim,
            context_dim,
            num_outputs,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: TraceEntry) -> Result<()> {
        if entry.params.len() != self.param_dim
            || entry.best_params.len() != self.param_dim
            || entry.context.len() != self.context_dim
            || entry.observations.len() != self.num_outputs
        {
            return Err(Error::Trace(format!(
                "entry {} does not match the trace layout",
                entry.n
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&TraceEntry> {
        self.entries.last()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["n".to_string(), "point".to_string()];
        h.extend((0..self.param_dim).map(|k| format!("a{k}")));
        h.extend((0..self.context_dim).map(|k| format!("z{k}")));
        h.extend(["output", "width", "score"].map(String::from));
        h.extend((0..self.num_outputs).map(|k| format!("y{k}")));
        h.extend(["safe", "maximizers", "expanders", "best"].map(String::from));
        h.extend((0..self.param_dim).map(|k| format!("best_a{k}")));
        h.extend(["best_lower", "status"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for e in &self.entries {
            let mut row = vec![e.n.to_string(), e.point.to_string()];
            row.extend(e.params.iter().map(f64::to_string));
            row.extend(e.context.iter().map(f64::to_string));
            row.extend([e.output.to_string(), e.width.to_string(), e.score.to_string()]);
            row.extend(e.observations.iter().map(f64::to_string));
            row.extend([
                e.safe_size.to_string(),
                e.maximizers.to_string(),
                e.expanders.to_string(),
                e.best.to_string(),
            ]);
            row.extend(e.best_params.iter().map(f64::to_string));
            row.extend([e.best_lower.to_string(), e.status.as_str().to_string()]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Trace(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let count = |prefix: &str| {
            header
                .iter()
                .filter(|h| h.strip_prefix(prefix).is_some_and(|k| k.parse::<usize>().is_ok()))
                .count()
        };
        let mut trace = RunTrace::new(count("a"), count("z"), count("y"));
        if header != trace.header() {
            return Err(Error::Trace(format!("unexpected header {header:?}")));
        }
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let mut fields = record.iter();
            let mut next = || {
                fields
                    .next()
                    .ok_or_else(|| Error::Trace(format!("row {} is too short", line + 1)))
            };
            let n = parse(next()?, line)?;
            let point = parse(next()?, line)?;
            let params = (0..trace.param_dim).map(|_| parse(next()?, line)).collect::<Result<_>>()?;
            let context = (0..trace.context_dim).map(|_| parse(next()?, line)).collect::<Result<_>>()?;
            let output = parse(next()?, line)?;
            let width = parse(next()?, line)?;
            let score = parse(next()?, line)?;
            let observations = (0..trace.num_outputs).map(|_| parse(next()?, line)).collect::<Result<_>>()?;
            let safe_size = parse(next()?, line)?;
            let maximizers = parse(next()?, line)?;
            let expanders = parse(next()?, line)?;
            let best = parse(next()?, line)?;
            let best_params = (0..trace.param_dim).map(|_| parse(next()?, line)).collect::<Result<_>>()?;
            let best_lower = parse(next()?, line)?;
            let status = match next()? {
                "ok" => EntryStatus::Ok,
                "failed" => EntryStatus::Failed,
                other => return Err(Error::Trace(format!("row {}: unknown status {other:?}", line + 1))),
            };
            trace.push(TraceEntry {
                n,
                point,
                params,
                context,
                output,
                width,
                score,
                observations,
                safe_size,
                maximizers,
                expanders,
                best,
                best_params,
                best_lower,
                status,
            })?;
        }
        Ok(trace)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn parse<T: FromStr>(field: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Trace(format!("row {}: cannot parse {field:?}", line + 1)))
}
