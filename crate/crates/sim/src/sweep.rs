//! Sweep value lists: `0.01,0.05`, `0.01:0.09:0.02`, or a mix of both.

use std::str::FromStr;

use crate::error::{SimError, SimResult};

/// Decimal places kept when expanding floating-point ranges, so that
/// `0.01:0.09:0.02` yields `0.05` rather than `0.049999...`.
const RANGE_DIGITS: i32 = 9;

fn sweep_error(list: &str, detail: impl Into<String>) -> SimError {
    SimError::Sweep {
        list: list.to_string(),
        detail: detail.into(),
    }
}

fn parse_one<T: FromStr>(list: &str, text: &str) -> SimResult<T> {
    text.trim()
        .parse()
        .map_err(|_| sweep_error(list, format!("cannot parse '{}'", text.trim())))
}

fn inclusive_count(list: &str, start: f64, end: f64, step: f64) -> SimResult<usize> {
    if !step.is_finite() || step <= 0.0 {
        return Err(sweep_error(list, "step must be positive"));
    }
    if end < start {
        return Err(sweep_error(list, "range end lies below its start"));
    }
    Ok(((end - start) / step + 1e-9).floor() as usize + 1)
}

/// Parses a list of floating-point values with optional inclusive ranges.
pub fn parse_f64_list(list: &str) -> SimResult<Vec<f64>> {
    let scale = 10f64.powi(RANGE_DIGITS);
    let mut values = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [single] => values.push(parse_one(list, single)?),
            [start, end, step] => {
                let (start, end, step): (f64, f64, f64) =
                    (parse_one(list, start)?, parse_one(list, end)?, parse_one(list, step)?);
                for i in 0..inclusive_count(list, start, end, step)? {
                    values.push(((start + i as f64 * step) * scale).round() / scale);
                }
            }
            _ => return Err(sweep_error(list, "ranges are written start:end:step")),
        }
    }
    if values.is_empty() {
        return Err(sweep_error(list, "no values"));
    }
    Ok(values)
}

/// Parses a list of non-negative integers with optional inclusive ranges.
pub fn parse_usize_list(list: &str) -> SimResult<Vec<usize>> {
    let mut values = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [single] => values.push(parse_one(list, single)?),
            [start, end, step] => {
                let (start, end, step): (usize, usize, usize) =
                    (parse_one(list, start)?, parse_one(list, end)?, parse_one(list, step)?);
                if step == 0 || end < start {
                    return Err(sweep_error(list, "needs a positive step and end >= start"));
                }
                values.extend((start..=end).step_by(step));
            }
            _ => return Err(sweep_error(list, "ranges are written start:end:step")),
        }
    }
    if values.is_empty() {
        return Err(sweep_error(list, "no values"));
    }
    Ok(values)
}

/// Parses a comma-separated list of named values.
pub fn parse_named_list<T>(list: &str) -> SimResult<Vec<T>>
where
    T: FromStr<Err = jscc_core::Error>,
{
    let values = list
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(SimError::from))
        .collect::<SimResult<Vec<T>>>()?;
    if values.is_empty() {
        return Err(sweep_error(list, "no values"));
    }
    Ok(values)
}
