//! Long-format CSV (one row per measurement) and JSON report output.
//!
//! Every number written by this module uses 17 significant digits so that
//! doubles survive a round trip through text.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::data::{DesignRule, RepeatedMeasuresData, Subject};
use crate::error::{LearError, Result};

/// Version stamped into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

/// Formats a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON formatter that writes floats with 17 significant digits.
#[derive(Debug, Default, Clone, Copy)]
pub struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` to JSON with 17-digit floats and no trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value
        .serialize(&mut ser)
        .map_err(|e| LearError::InvalidData(format!("JSON serialization failed: {e}")))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Wraps a report with the schema version tag.
#[derive(Debug, Serialize)]
pub struct Versioned<'a, T: Serialize> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn report_json<T: Serialize>(body: &T) -> Result<String> {
    to_json(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })
}

/// Column names and design construction for long-format input.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub subject: String,
    pub time: String,
    pub response: String,
    pub design: CsvDesign,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            subject: "subject".into(),
            time: "time".into(),
            response: "y".into(),
            design: CsvDesign::Intercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvDesign {
    Intercept,
    InterceptTime,
    /// Named covariate columns, optionally preceded by an intercept column.
    Covariates { columns: Vec<String>, intercept: bool },
}

struct Row {
    line: u64,
    time: f64,
    y: f64,
    covariates: Vec<f64>,
}

fn parse_num(field: &str, column: &str, line: u64) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| LearError::Parse {
        line,
        message: format!("column {column:?}: cannot parse {field:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(LearError::Parse {
            line,
            message: format!("column {column:?}: non-finite value {field:?}"),
        });
    }
    Ok(v)
}

/// Reads long-format CSV: groups rows by subject (in order of first
/// appearance), sorts each subject by time and builds the design.
pub fn read_long_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<RepeatedMeasuresData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| LearError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| LearError::Parse {
            line: 1,
            message: format!("header has no column {name:?}"),
        })
    };
    let (c_subject, c_time, c_y) = (col(&schema.subject)?, col(&schema.time)?, col(&schema.response)?);
    let covariate_cols = match &schema.design {
        CsvDesign::Covariates { columns, .. } => columns.iter().map(|c| col(c)).collect::<Result<Vec<_>>>()?,
        _ => Vec::new(),
    };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Row>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| LearError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let subject = field(c_subject).trim().to_string();
        if subject.is_empty() {
            return Err(LearError::Parse { line, message: "empty subject id".into() });
        }
        let time = parse_num(field(c_time), &schema.time, line)?;
        let y = parse_num(field(c_y), &schema.response, line)?;
        let covariates = covariate_cols
            .iter()
            .map(|&c| parse_num(field(c), &headers[c], line))
            .collect::<Result<Vec<_>>>()?;
        let rows = groups.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            Vec::new()
        });
        if rows.iter().any(|r| r.time == time) {
            return Err(LearError::DuplicateMeasurement { line, subject, time });
        }
        rows.push(Row { line, time, y, covariates });
    }
    if order.is_empty() {
        return Err(LearError::InvalidData("no data rows".into()));
    }

    let mut subjects = Vec::with_capacity(order.len());
    for id in order {
        let mut rows = groups.remove(&id).expect("grouped above");
        rows.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.line.cmp(&b.line)));
        let times: Vec<f64> = rows.iter().map(|r| r.time).collect();
        let x = match &schema.design {
            CsvDesign::Intercept => DesignRule::Intercept.design(0, &times)?,
            CsvDesign::InterceptTime => DesignRule::InterceptTime.design(0, &times)?,
            CsvDesign::Covariates { intercept, .. } => {
                let offset = usize::from(*intercept);
                let q = offset + covariate_cols.len();
                nalgebra::DMatrix::from_fn(rows.len(), q, |r, c| {
                    if c < offset {
                        1.0
                    } else {
                        rows[r].covariates[c - offset]
                    }
                })
            }
        };
        subjects.push(Subject {
            id,
            y: nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|r| r.y)),
            times,
            x,
        });
    }
    let data = RepeatedMeasuresData::new(subjects)?;
    data.require_grid()?;
    Ok(data)
}

pub fn read_long_csv_path(path: &std::path::Path, schema: &CsvSchema) -> Result<RepeatedMeasuresData> {
    let file = std::fs::File::open(path)?;
    read_long_csv(std::io::BufReader::new(file), schema)
}

/// Writes `subject,time,y` rows; with `covariates`, every design column is
/// appended as `x1..xq`.
pub fn write_long_csv<W: Write>(writer: W, data: &RepeatedMeasuresData, covariates: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| LearError::Io(std::io::Error::other(e));
    let mut header = vec!["subject".to_string(), "time".to_string(), "y".to_string()];
    if covariates {
        header.extend((1..=data.q()).map(|j| format!("x{j}")));
    }
    w.write_record(&header).map_err(to_io)?;
    for s in data.subjects() {
        for r in 0..s.len() {
            let mut rec = vec![s.id.clone(), fmt17(s.times[r]), fmt17(s.y[r])];
            if covariates {
                rec.extend(s.x.row(r).iter().map(|&v| fmt17(v)));
            }
            w.write_record(&rec).map_err(to_io)?;
        }
    }
    w.flush()?;
    Ok(())
}
