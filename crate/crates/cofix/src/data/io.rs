//! Line-delimited dataset file format.
//!
//! Each line is a JSON record discriminated by `kind`: either a `problem`
//! or an `instance`. Serialization is canonical (fixed field order,
//! problems sorted by id before instances in load order), so
//! serialize -> load -> serialize is byte-stable.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{Dataset, EditInstance, Problem};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Problem(Problem),
    Instance(EditInstance),
}

/// Parse a dataset from a line-delimited record stream.
///
/// Records may arrive in any order; referential integrity is checked once
/// the whole stream is read so problems may follow the instances that
/// reference them. Errors carry the 1-based line number.
pub fn load_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    let mut pending: Vec<(usize, EditInstance)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Problem(p) => dataset.insert_problem(p).map_err(|e| at_line(e, line_no))?,
            Record::Instance(inst) => pending.push((line_no, inst)),
        }
    }
    for (line_no, inst) in pending {
        dataset.push_instance(inst, Some(line_no)).map_err(|e| at_line(e, line_no))?;
    }
    Ok(dataset)
}

fn at_line(err: Error, line: usize) -> Error {
    match err {
        Error::Invariant(msg) => Error::MalformedRecord { line, message: msg },
        other => other,
    }
}

/// Canonical serialization: all problems (sorted by id), then all
/// instances in their stored order, one JSON record per line.
pub fn serialize_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    for p in dataset.problems() {
        out.push_str(&serde_json::to_string(&Record::Problem(p.clone())).expect("serialize"));
        out.push('\n');
    }
    for inst in dataset.instances() {
        out.push_str(&serde_json::to_string(&Record::Instance(inst.clone())).expect("serialize"));
        out.push('\n');
    }
    out
}
