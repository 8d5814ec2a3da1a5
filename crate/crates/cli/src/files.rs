//! Input file formats: sampled base functions and observation batches.

use std::path::Path;

use fourier_debias::{GridFunction1D, SampleBatch};

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_real(path: &Path, line: usize, s: &str) -> CliResult<f64> {
    let v: f64 = s
        .parse()
        .map_err(|e| parse_err(path, line, format!("`{s}`: {e}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Header `domain a b`, then one sample per line at `a + m (b - a) / M`.
/// Blank lines and `#` comments are skipped.
pub fn parse_grid(text: &str, path: &Path) -> CliResult<GridFunction1D> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty grid file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "domain" {
        return Err(parse_err(path, hline, "expected header `domain a b`"));
    }
    let a = parse_real(path, hline, fields[1])?;
    let b = parse_real(path, hline, fields[2])?;
    let samples = lines
        .map(|(i, l)| parse_real(path, i, l))
        .collect::<CliResult<Vec<f64>>>()?;
    Ok(GridFunction1D::new(a, b, samples)?)
}

pub fn load_grid(path: &Path) -> CliResult<GridFunction1D> {
    parse_grid(&read(path)?, path)
}

/// One observation per line, coordinates separated by commas or whitespace.
pub fn parse_batch(text: &str, path: &Path) -> CliResult<SampleBatch> {
    let mut dim = None;
    let mut data = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| parse_real(path, i + 1, s))
            .collect::<CliResult<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("expected {d} coordinates, found {}", row.len()),
                ))
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| parse_err(path, 1, "batch file has no observations"))?;
    Ok(SampleBatch::from_flat(dim, data)?)
}

pub fn load_batch(path: &Path) -> CliResult<SampleBatch> {
    parse_batch(&read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn grid_round_trip() {
        let g = parse_grid("# h\ndomain 0 2\n1\n2\n\n3\n4\n", p()).unwrap();
        assert_eq!(g.domain(), (0.0, 2.0));
        assert_eq!(g.samples(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn grid_errors_carry_line_numbers() {
        let e = parse_grid("domain 0 1\n1\nfoo\n", p()).unwrap_err();
        assert!(e.to_string().contains("test:3"), "{e}");
        assert!(parse_grid("range 0 1\n1\n2\n", p()).is_err());
        assert!(parse_grid("", p()).is_err());
        assert!(parse_grid("domain 1 0\n1\n2\n", p()).is_err());
    }

    #[test]
    fn batch_rows() {
        let b = parse_batch("1, 2\n3 4\n\n5,6\n", p()).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(b.len(), 3);
        assert_eq!(b.mean(), &[3.0, 4.0]);
        let e = parse_batch("1,2\n3\n", p()).unwrap_err();
        assert!(e.to_string().contains("test:2"), "{e}");
    }
}
