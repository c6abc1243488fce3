//! Deterministic CSV emission: RFC-4180-style, LF line endings, floats at
//! 17 significant digits, NaN spelled `nan`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[String]) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(header.join(",").as_bytes())?;
        out.write_all(b"\n")?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        self.out.write_all(fields.join(",").as_bytes())?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(f64::NAN), "nan");
        let x = 1.0 / 3.0;
        let s = fmt_float(x);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut state = 0x853c49e6748fea9bu64;
        for _ in 0..1000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = f64::from_bits((state >> 12) | 0x3ff0000000000000) - 1.0;
            let y = x * 10f64.powi((state % 60) as i32 - 30);
            assert_eq!(fmt_float(y).parse::<f64>().unwrap().to_bits(), y.to_bits());
        }
    }
}
