//! Grid and scalar syntax: `0.5`, `pi/2`, `0:1:0.05`, `0,0.25,1`.

use std::f64::consts::PI;

use crate::config::ConfigError;

/// Endpoint snapping tolerance for `start:stop:step` grids.
const ENDPOINT_TOLERANCE: f64 = 1e-12;

/// A real number, optionally a multiple or fraction of `pi`:
/// `pi`, `2pi`, `0.5*pi`, `pi/4`, `3pi/4`, `-pi`.
pub fn parse_scalar(text: &str) -> Result<f64, ConfigError> {
    let t = text.trim();
    let bad = || ConfigError::new(format!("not a number: '{text}'"));
    let Some(at) = t.find("pi") else {
        return t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    };
    let coeff = match t[..at].trim_end_matches('*').trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = t[at + 2..].trim();
    let divisor = match rest.strip_prefix('/') {
        Some(d) => d.trim().parse::<f64>().map_err(|_| bad())?,
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
    };
    let v = coeff * PI / divisor;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Parses a grid. A `start:stop:step` range includes `stop` when it lies
/// within 1e-12 of a grid point; `start:stop` uses `default_step`.
pub fn parse_grid(text: &str, default_step: Option<f64>) -> Result<Vec<f64>, ConfigError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ConfigError::new("empty grid"));
    }
    if t.contains(':') {
        let parts: Vec<&str> = t.split(':').collect();
        let (start, stop, step) = match parts.as_slice() {
            [a, b] => (
                parse_scalar(a)?,
                parse_scalar(b)?,
                default_step.ok_or_else(|| ConfigError::new(format!("grid '{t}' needs a step")))?,
            ),
            [a, b, s] => (parse_scalar(a)?, parse_scalar(b)?, parse_scalar(s)?),
            _ => return Err(ConfigError::new(format!("bad grid '{t}'"))),
        };
        if step <= 0.0 {
            return Err(ConfigError::new(format!("grid step must be positive in '{t}'")));
        }
        if stop < start {
            return Err(ConfigError::new(format!("grid '{t}' has stop < start")));
        }
        let span = (stop - start) / step;
        if span > 1e7 {
            return Err(ConfigError::new(format!("grid '{t}' has too many points")));
        }
        let count = (span + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
        let last = out.last_mut().expect("grid has a point");
        if (*last - stop).abs() <= ENDPOINT_TOLERANCE * stop.abs().max(1.0) {
            *last = stop;
        }
        return Ok(out);
    }
    t.split(',').map(parse_scalar).collect()
}

/// Integer grid for register sizes: `4`, `2:8`, `2:8:2`, `2,4,6`.
pub fn parse_int_grid(text: &str) -> Result<Vec<usize>, ConfigError> {
    let values = parse_grid(text, Some(1.0))?;
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ConfigError::new(format!("'{text}' is not a list of non-negative integers")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars() {
        assert_eq!(parse_scalar("0.25").unwrap(), 0.25);
        assert_eq!(parse_scalar("pi").unwrap(), PI);
        assert_eq!(parse_scalar("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_scalar("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_scalar("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_scalar("-pi/2").unwrap(), -PI / 2.0);
        assert!(parse_scalar("abc").is_err());
        assert!(parse_scalar("pix").is_err());
        assert!(parse_scalar("inf").is_err());
    }

    #[test]
    fn ranges_include_endpoints() {
        let g = parse_grid("0:1:0.05", None).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[20], 1.0);
        assert_eq!(g[3], 3.0 * 0.05);
        let g = parse_grid("0:pi:0.01", None).unwrap();
        assert_eq!(g.len(), 315);
        assert_eq!(g[0], 0.0);
        let g = parse_grid("0:1:0.3", None).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(parse_grid("0.5", None).unwrap(), vec![0.5]);
        assert_eq!(parse_grid("0, 0.5,1", None).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("1:0:0.1", None).is_err());
        assert!(parse_grid("0:1:0", None).is_err());
        assert!(parse_grid("0:1", None).is_err());
        assert!(parse_grid("", None).is_err());
    }

    #[test]
    fn integer_grids() {
        assert_eq!(parse_int_grid("2:8").unwrap(), vec![2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(parse_int_grid("2:8:3").unwrap(), vec![2, 5, 8]);
        assert_eq!(parse_int_grid("4").unwrap(), vec![4]);
        assert!(parse_int_grid("2.5").is_err());
    }
}
