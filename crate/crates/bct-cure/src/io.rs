//! Dataset and parameter file formats.
//!
//! Datasets are CSV with header `y,delta,x1[,x2,...]`: `y` nonnegative,
//! `delta` strictly `0`/`1`, covariates free-form numeric. Floats are
//! written with Rust's shortest round-trip representation, so
//! write-then-read is lossless.
//!
//! Parameter files are `name = value` lines using the flat layout names
//! (`beta0..`, `gamma1`, `gamma2`, `alpha`).

use crate::error::{Error, Result};
use crate::lifetime::WeibullParams;
use crate::model::{parameter_names, Dataset, Observation, ParameterVector};
use std::fmt::Write as _;
use std::path::Path;

/// Render a dataset in the CSV wire format.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::from("y,delta");
    for name in data.covariate_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for rec in data.records() {
        let _ = write!(out, "{},{}", rec.y, if rec.event { 1 } else { 0 });
        for v in &rec.x {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    std::fs::write(path, dataset_to_csv(data)).map_err(|e| Error::io(path, e))
}

/// Parse the CSV wire format, reporting the 1-based line number of any
/// offending row.
pub fn dataset_from_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data("empty dataset file".into()))?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    if columns.len() < 3 || columns[0] != "y" || columns[1] != "delta" {
        return Err(Error::Data(format!(
            "line 1: header must be 'y,delta,x1[,...]', got '{header}'"
        )));
    }
    let covariate_names: Vec<String> = columns[2..].iter().map(|s| s.to_string()).collect();

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Data(format!(
                "line {line_no}: expected {} fields, got {}",
                columns.len(),
                fields.len()
            )));
        }
        let y: f64 = fields[0]
            .parse()
            .map_err(|_| Error::Data(format!("line {line_no}: invalid y '{}'", fields[0])))?;
        let event = match fields[1] {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::Data(format!(
                    "line {line_no}: delta must be 0 or 1, got '{other}'"
                )))
            }
        };
        let mut x = Vec::with_capacity(fields.len() - 2);
        for field in &fields[2..] {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Data(format!("line {line_no}: invalid covariate '{field}'")))?;
            x.push(v);
        }
        records.push(Observation { y, event, x });
    }
    Dataset::new(records, covariate_names)
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_csv(&text)
}

/// Render a parameter vector as `name = value` lines.
pub fn theta_to_text(theta: &ParameterVector) -> String {
    let mut out = String::new();
    for (name, value) in parameter_names(theta.beta.len())
        .iter()
        .zip(theta.to_flat())
    {
        let _ = writeln!(out, "{name} = {value}");
    }
    out
}

pub fn write_theta(path: &Path, theta: &ParameterVector) -> Result<()> {
    std::fs::write(path, theta_to_text(theta)).map_err(|e| Error::io(path, e))
}

/// Parse `name = value` parameter lines; `beta0`, `gamma1`, `gamma2` and
/// `alpha` are required, `betaK` must be contiguous from 0. Unknown names
/// are rejected.
pub fn theta_from_text(text: &str) -> Result<ParameterVector> {
    let mut betas: Vec<(usize, f64)> = Vec::new();
    let mut gamma1 = None;
    let mut gamma2 = None;
    let mut alpha = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| {
            Error::Data(format!(
                "line {line_no}: expected 'name = value', got '{raw}'"
            ))
        })?;
        let name = name.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("line {line_no}: invalid number '{value}'")))?;
        if let Some(index) = name.strip_prefix("beta") {
            let index: usize = index.parse().map_err(|_| {
                Error::Data(format!("line {line_no}: invalid parameter name '{name}'"))
            })?;
            betas.push((index, value));
        } else {
            match name {
                "gamma1" => gamma1 = Some(value),
                "gamma2" => gamma2 = Some(value),
                "alpha" => alpha = Some(value),
                other => {
                    return Err(Error::Data(format!(
                        "line {line_no}: unknown parameter '{other}'"
                    )))
                }
            }
        }
    }
    betas.sort_by_key(|(i, _)| *i);
    for (expect, (index, _)) in betas.iter().enumerate() {
        if *index != expect {
            return Err(Error::Data(format!(
                "beta indices must be contiguous from 0; missing beta{expect}"
            )));
        }
    }
    if betas.is_empty() {
        return Err(Error::Data("missing beta0".into()));
    }
    let beta: Vec<f64> = betas.into_iter().map(|(_, v)| v).collect();
    let gamma = WeibullParams::new(
        gamma1.ok_or_else(|| Error::Data("missing gamma1".into()))?,
        gamma2.ok_or_else(|| Error::Data("missing gamma2".into()))?,
    )?;
    ParameterVector::new(
        beta,
        gamma,
        alpha.ok_or_else(|| Error::Data("missing alpha".into()))?,
    )
}

pub fn read_theta(path: &Path) -> Result<ParameterVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    theta_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let data = Dataset::new(
            vec![
                Observation {
                    y: 0.123456789012345678,
                    event: true,
                    x: vec![1.0],
                },
                Observation {
                    y: 7.5e-12,
                    event: false,
                    x: vec![0.0],
                },
            ],
            vec!["x1".into()],
        )
        .unwrap();
        let text = dataset_to_csv(&data);
        assert!(text.starts_with("y,delta,x1\n"));
        let back = dataset_from_csv(&text).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let bad_header = "time,delta,x1\n1,1,0\n";
        assert!(matches!(
            dataset_from_csv(bad_header),
            Err(Error::Data(msg)) if msg.contains("line 1")
        ));
        let bad_delta = "y,delta,x1\n1.0,2,0\n";
        assert!(matches!(
            dataset_from_csv(bad_delta),
            Err(Error::Data(msg)) if msg.contains("line 2") && msg.contains("delta")
        ));
        let bad_float = "y,delta,x1\n1.0,1,0\nxyz,0,1\n";
        assert!(matches!(
            dataset_from_csv(bad_float),
            Err(Error::Data(msg)) if msg.contains("line 3")
        ));
        let short_row = "y,delta,x1\n1.0,1\n";
        assert!(matches!(
            dataset_from_csv(short_row),
            Err(Error::Data(msg)) if msg.contains("line 2")
        ));
    }

    #[test]
    fn theta_round_trip() {
        let theta = ParameterVector::new(
            vec![-1.228, 0.386],
            WeibullParams::new(0.561, 0.376).unwrap(),
            0.051,
        )
        .unwrap();
        let text = theta_to_text(&theta);
        assert_eq!(theta_from_text(&text).unwrap(), theta);
    }

    #[test]
    fn theta_parse_rejects_bad_input() {
        assert!(theta_from_text("beta0 = 1\ngamma1 = 1\ngamma2 = 1\n").is_err()); // no alpha
        assert!(theta_from_text("beta1 = 1\ngamma1 = 1\ngamma2 = 1\nalpha = 0\n").is_err()); // no beta0
        assert!(theta_from_text("beta0 = 1\ngamma1 = 1\ngamma2 = 1\nalpha = 0\nrho = 2\n").is_err());
        assert!(theta_from_text("beta0 = one\ngamma1 = 1\ngamma2 = 1\nalpha = 0\n").is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_arbitrary_records(
            raw in proptest::collection::vec((0.0f64..1e6, any::<bool>(), -50.0f64..50.0), 1..40)
        ) {
            let records: Vec<Observation> = raw
                .into_iter()
                .map(|(y, event, x)| Observation { y, event, x: vec![x] })
                .collect();
            let data = Dataset::new(records, vec!["x1".into()]).unwrap();
            let back = dataset_from_csv(&dataset_to_csv(&data)).unwrap();
            prop_assert_eq!(back, data);
        }
    }
}
