use crate::error::{Error, Result};

/// Apply first differencing `d` times; output length is `len - d`.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if series.len() <= d {
        return Err(Error::invalid(format!(
            "cannot difference {} values {d} times",
            series.len()
        )));
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Integrate a forecast made on the `d`-times differenced scale back to the
/// original scale. `last_values` are the final `d` observations of the
/// undifferenced series, oldest first.
pub fn undifference(last_values: &[f64], forecast: f64, d: usize) -> Result<f64> {
    if last_values.len() != d {
        return Err(Error::invalid(format!(
            "undifferencing degree {d} needs {d} trailing values, got {}",
            last_values.len()
        )));
    }
    // last element of each differencing level 0..d
    let mut level = last_values.to_vec();
    let mut tails = Vec::with_capacity(d);
    for _ in 0..d {
        tails.push(*level.last().expect("non-empty"));
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(tails.iter().rev().fold(forecast, |acc, t| acc + t))
}
