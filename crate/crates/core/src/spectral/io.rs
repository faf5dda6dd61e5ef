//! CSV serialization for fields and spectra (17 significant digits).

use std::io::{self, BufRead, Write};

use super::{Field, PeriodicGrid, Spectrum};

/// Format with 17 significant digits, the round-trip precision of f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv<W: Write>(mut w: W, f: &Field) -> io::Result<()> {
    writeln!(w, "x,value")?;
    for (j, v) in f.values().iter().enumerate() {
        writeln!(w, "{},{}", fmt17(f.grid().node(j)), fmt17(*v))?;
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(mut w: W, s: &Spectrum) -> io::Result<()> {
    writeln!(w, "k,re,im")?;
    for (slot, c) in s.coeffs().iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            fmt17(s.grid().wavenumber(slot)),
            fmt17(c.re),
            fmt17(c.im)
        )?;
    }
    Ok(())
}

/// Read a field written by [`write_field_csv`]. The period is supplied by the
/// caller because the nodes only pin `L` up to the last interval.
pub fn read_field_csv<R: BufRead>(r: R, length: f64) -> io::Result<Field> {
    let bad = |line: usize, msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "x,value" {
                return Err(bad(1, "expected header `x,value`"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let _x = parts.next();
        let v: f64 = parts
            .next()
            .ok_or_else(|| bad(i + 1, "missing value column"))?
            .trim()
            .parse()
            .map_err(|_| bad(i + 1, "value is not a number"))?;
        values.push(v);
    }
    let grid = PeriodicGrid::new(values.len(), length).map_err(|e| bad(0, &e.to_string()))?;
    Field::new(grid, values).map_err(|e| bad(0, &e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let grid = PeriodicGrid::new(16, 2.5).unwrap();
        let f = grid.sample(|x| (x * 1.3).sin() / 3.0);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,value\n"));
        let back = read_field_csv(io::Cursor::new(buf), 2.5).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn spectrum_header() {
        let grid = PeriodicGrid::standard(8).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &grid.sample(f64::cos).to_spectrum()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("k,re,im\n"));
    }
}
