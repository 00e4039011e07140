//! Cohort CSV files.
//!
//! Header: `id,group,time,event,index_time`, then one column per covariate.
//! `group` and `event` are 0/1; `index_time` is left empty for controls.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use idi_core::{Dataset, Group, SubjectRecord};

use crate::error::{CliError, CliResult};

pub const FIXED_COLUMNS: [&str; 5] = ["id", "group", "time", "event", "index_time"];

pub fn read_cohort(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_cohort(file).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_flag(field: &str, name: &str, row: usize) -> CliResult<bool> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::input(format!(
            "row {row}: {name} must be 0 or 1, got '{other}'"
        ))),
    }
}

fn parse_real(field: &str, name: &str, row: usize) -> CliResult<f64> {
    if field.is_empty() {
        return Err(CliError::input(format!("row {row}: missing value for {name}")));
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::input(format!(
            "row {row}: {name} must be a finite number, got '{field}'"
        ))),
    }
}

/// Parses a cohort; rows are numbered from 1, not counting the header.
pub fn parse_cohort<R: Read>(reader: R) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::input(format!("cannot read header: {e}")))?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..5] != FIXED_COLUMNS {
        return Err(CliError::input(format!(
            "header must start with {}, got {}",
            FIXED_COLUMNS.join(","),
            names.join(",")
        )));
    }
    let covariate_names: Vec<String> = names[5..].iter().map(|s| s.to_string()).collect();
    let mut seen = HashSet::new();
    for name in &covariate_names {
        if name.is_empty() || !seen.insert(name.as_str()) || FIXED_COLUMNS.contains(&name.as_str()) {
            return Err(CliError::input(format!("invalid or duplicate covariate column '{name}'")));
        }
    }

    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => CliError::input(format!(
                "row {row}: expected {expected_len} fields, found {len}"
            )),
            _ => CliError::input(format!("row {row}: {e}")),
        })?;
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(CliError::input(format!("row {row}: empty id")));
        }
        if !ids.insert(id.clone()) {
            return Err(CliError::input(format!("row {row}: duplicate id '{id}'")));
        }
        let group = if parse_flag(&rec[1], "group", row)? {
            Group::SingleArm
        } else {
            Group::Control
        };
        let y = parse_real(&rec[2], "time", row)?;
        if y < 0.0 {
            return Err(CliError::input(format!("row {row}: time must be >= 0, got {y}")));
        }
        let event = parse_flag(&rec[3], "event", row)?;
        let index_time = match (group, rec[4].is_empty()) {
            (Group::SingleArm, true) => {
                return Err(CliError::input(format!(
                    "row {row}: group 1 subject '{id}' has no index_time"
                )))
            }
            (Group::SingleArm, false) => {
                let r = parse_real(&rec[4], "index_time", row)?;
                if r < 0.0 {
                    return Err(CliError::input(format!("row {row}: index_time must be >= 0")));
                }
                if y <= r {
                    return Err(CliError::input(format!(
                        "row {row}: time {y} does not exceed index_time {r}"
                    )));
                }
                Some(r)
            }
            (Group::Control, true) => None,
            (Group::Control, false) => {
                return Err(CliError::input(format!(
                    "row {row}: index_time must be empty for group 0"
                )))
            }
        };
        let covariates = covariate_names
            .iter()
            .enumerate()
            .map(|(c, name)| parse_real(&rec[5 + c], name, row))
            .collect::<CliResult<Vec<f64>>>()?;
        records.push(SubjectRecord {
            id,
            group,
            y,
            event,
            covariates,
            index_time,
            weight: 1.0,
        });
    }
    if records.is_empty() {
        return Err(CliError::input("cohort has no rows"));
    }
    Dataset::new(covariate_names, records).map_err(|e| CliError::input(e.to_string()))
}

/// Writes a cohort; floats use the shortest representation that parses back
/// to the same value.
pub fn write_cohort<W: Write>(dataset: &Dataset, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    header.extend(dataset.covariate_names.iter().map(String::as_str));
    w.write_record(&header)?;
    for rec in &dataset.records {
        let mut fields = vec![
            rec.id.clone(),
            rec.group.flag().to_string(),
            rec.y.to_string(),
            u8::from(rec.event).to_string(),
            rec.index_time.map(|r| r.to_string()).unwrap_or_default(),
        ];
        fields.extend(rec.covariates.iter().map(f64::to_string));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_cohort(dataset: &Dataset, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_cohort(dataset, file).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
