//! Dataset and covariate ingestion.

use std::fs;
use std::io::{self, Read};

use clap::ValueEnum;
use dextremes::{Censor, GroupedCounts};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Format {
    /// One non-negative integer per line, no header.
    Raw,
    /// `value,count` header, then one row per value.
    Freq,
    /// As `freq`, with a final `>=c,count` row for values of at least c.
    FreqCensored,
}

/// A parsed dataset. Raw input keeps the observations in file order so that
/// a covariate can be paired with them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub counts: GroupedCounts,
    pub raw: Option<Vec<u64>>,
}

pub fn read_source(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Input(format!("<stdin>: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))
    }
}

fn line_error(source: &str, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{source}:{line}: {msg}"))
}

fn parse_count(field: &str, source: &str, line: usize) -> Result<u64, CliError> {
    field.trim().parse::<u64>().map_err(|_| {
        line_error(
            source,
            line,
            format!("expected a non-negative integer, got {field:?}"),
        )
    })
}

pub fn parse_dataset(text: &str, format: Format, source: &str) -> Result<Dataset, CliError> {
    match format {
        Format::Raw => parse_raw(text, source),
        Format::Freq => parse_freq(text, source, false),
        Format::FreqCensored => parse_freq(text, source, true),
    }
}

fn parse_raw(text: &str, source: &str) -> Result<Dataset, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        values.push(parse_count(line, source, i + 1)?);
    }
    if values.is_empty() {
        return Err(CliError::Input(format!("{source}: no observations")));
    }
    Ok(Dataset {
        counts: GroupedCounts::from_values(&values),
        raw: Some(values),
    })
}

fn parse_freq(text: &str, source: &str, censored: bool) -> Result<Dataset, CliError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, h)) if h.replace(' ', "") == "value,count" => {}
        Some((n, h)) => {
            return Err(line_error(
                source,
                n,
                format!("expected header \"value,count\", got {h:?}"),
            ))
        }
        None => return Err(CliError::Input(format!("{source}: empty file"))),
    }
    let mut cells = Vec::new();
    let mut censor: Option<(usize, Censor)> = None;
    let mut last_line = 1;
    for (n, line) in lines {
        last_line = n;
        if let Some((at, _)) = censor {
            return Err(line_error(
                source,
                n,
                format!("rows after the censored row on line {at}"),
            ));
        }
        let mut fields = line.split(',');
        let (value, count) = match (fields.next(), fields.next(), fields.next()) {
            (Some(v), Some(c), None) => (v.trim(), c.trim()),
            _ => return Err(line_error(source, n, "expected two comma-separated fields")),
        };
        if let Some(c) = value.strip_prefix(">=") {
            if !censored {
                return Err(line_error(
                    source,
                    n,
                    "censored row in freq format; use freq_censored",
                ));
            }
            censor = Some((
                n,
                Censor {
                    threshold: parse_count(c, source, n)?,
                    count: parse_count(count, source, n)?,
                },
            ));
            continue;
        }
        let v = parse_count(value, source, n)?;
        let c = parse_count(count, source, n)?;
        if c == 0 {
            return Err(line_error(source, n, "counts must be positive"));
        }
        cells.push((v, c));
    }
    if censored && censor.is_none() {
        return Err(line_error(
            source,
            last_line,
            "missing final \">=c,count\" row",
        ));
    }
    if cells.is_empty() && censor.is_none_or(|(_, c)| c.count == 0) {
        return Err(CliError::Input(format!("{source}: no observations")));
    }
    let counts = GroupedCounts::new(cells, censor.map(|(_, c)| c)).map_err(|e| match censor {
        Some((n, _)) => line_error(source, n, e),
        None => CliError::Input(format!("{source}: {e}")),
    })?;
    Ok(Dataset { counts, raw: None })
}

/// One finite real per line.
pub fn parse_covariate(text: &str, source: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                return Err(line_error(
                    source,
                    i + 1,
                    format!("expected a finite number, got {t:?}"),
                ))
            }
        }
    }
    Ok(out)
}
