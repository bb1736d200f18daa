use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub const HEADER: &str = "# lattice-depth-sim v1";

/// CSV sink writing the version line, a column header, then rows.
pub struct CsvOut {
    out: Box<dyn Write>,
    cutoff: Option<f64>,
}

impl CsvOut {
    /// Writes to `path`, or stdout when it is absent or `-`.
    pub fn create(path: Option<&Path>, cutoff: Option<f64>) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) if p != Path::new("-") => Box::new(BufWriter::new(File::create(p)?)),
            _ => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { out, cutoff })
    }

    pub fn header(&mut self, columns: &[String]) -> io::Result<()> {
        writeln!(self.out, "{HEADER}")?;
        writeln!(self.out, "{}", columns.join(","))
    }

    /// Leading integer fields, then populations (subject to the cutoff).
    pub fn row(&mut self, keys: &[Field], values: &[f64]) -> io::Result<()> {
        let mut fields: Vec<String> = keys.iter().map(Field::render).collect();
        fields.extend(values.iter().map(|&p| num(self.apply_cutoff(p))));
        writeln!(self.out, "{}", fields.join(","))
    }

    fn apply_cutoff(&self, p: f64) -> f64 {
        match self.cutoff {
            Some(c) if p.abs() < c => 0.0,
            _ => p,
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// A non-population column value, never subject to the cutoff.
pub enum Field {
    Int(i64),
    Real(f64),
}

impl Field {
    fn render(&self) -> String {
        match *self {
            Field::Int(i) => i.to_string(),
            Field::Real(x) => num(x),
        }
    }
}

/// Full precision: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
