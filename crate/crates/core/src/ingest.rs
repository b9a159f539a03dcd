//! Count-data ingestion.
//!
//! Two input layouts: a CSV with header `category,count`, or raw
//! observations with one label per line. Labels are arbitrary strings and
//! receive integer codes `1, 2, …` in order of first appearance.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Read};

use crate::dist::SampleCounts;
use crate::error::{GseError, Result};

/// Counts together with the label behind each integer code.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledCounts {
    /// `labels[code - 1]`.
    pub labels: Vec<String>,
    pub counts: SampleCounts,
}

impl LabeledCounts {
    pub fn label(&self, code: u64) -> Option<&str> {
        self.labels
            .get(code.checked_sub(1)? as usize)
            .map(String::as_str)
    }
}

#[derive(Default)]
struct Coder {
    codes: HashMap<String, u64>,
    labels: Vec<String>,
    tally: BTreeMap<u64, u64>,
}

impl Coder {
    fn add(&mut self, label: &str, count: u64) -> Result<()> {
        let code = match self.codes.get(label) {
            Some(c) => *c,
            None => {
                self.labels.push(label.to_string());
                let c = self.labels.len() as u64;
                self.codes.insert(label.to_string(), c);
                c
            }
        };
        let slot = self.tally.entry(code).or_insert(0);
        *slot = slot
            .checked_add(count)
            .ok_or_else(|| GseError::Input(format!("count for `{label}` overflows")))?;
        Ok(())
    }

    fn finish(self) -> Result<LabeledCounts> {
        let counts = SampleCounts::from_map(self.tally)
            .map_err(|_| GseError::Input("no observations (all counts are zero)".into()))?;
        Ok(LabeledCounts {
            labels: self.labels,
            counts,
        })
    }
}

/// Reads `category,count` rows. Repeated categories are summed and zero
/// counts are accepted but carry no observations.
pub fn read_counts_csv<R: Read>(input: R) -> Result<LabeledCounts> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| GseError::Input(format!("reading header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "category" || &headers[1] != "count" {
        return Err(GseError::Input(format!(
            "expected header `category,count`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut coder = Coder::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GseError::Input(format!("row {}: {e}", line + 2)))?;
        let count: u64 = rec[1].parse().map_err(|_| {
            GseError::Input(format!(
                "row {}: count `{}` is not a non-negative integer",
                line + 2,
                &rec[1]
            ))
        })?;
        coder.add(&rec[0], count)?;
    }
    coder.finish()
}

/// Reads one observation per line; blank lines are skipped.
pub fn read_raw_labels<R: BufRead>(input: R) -> Result<LabeledCounts> {
    let mut coder = Coder::default();
    for line in input.lines() {
        let line = line.map_err(|e| GseError::Input(format!("reading observations: {e}")))?;
        let label = line.trim();
        if !label.is_empty() {
            coder.add(label, 1)?;
        }
    }
    coder.finish()
}

/// Writes `category,count` rows in code order.
pub fn write_counts_csv<W: io::Write>(data: &LabeledCounts, out: W) -> Result<()> {
    let err = |e: csv::Error| GseError::Input(format!("writing counts: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["category", "count"]).map_err(err)?;
    for (code, count) in data.counts.iter() {
        let label = data
            .label(code)
            .map_or_else(|| code.to_string(), str::to_string);
        w.write_record([label, count.to_string()]).map_err(err)?;
    }
    w.flush()
        .map_err(|e| GseError::Input(format!("writing counts: {e}")))?;
    Ok(())
}
