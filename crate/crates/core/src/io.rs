//! File formats: one-value-per-line CSV signals, CSV matrices (row `j` is
//! `x₂ = j·h`, columns run along `x₁`) and binary/ASCII PGM images whose
//! gray levels map linearly from `[0, maxval]` to `[0, 1]`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{Field2D, Signal1D};

pub const DEFAULT_MAXVAL: u16 = 65535;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), message: message.into() }
}

/// Scientific notation with 17 significant digits, which reads back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|t| {
                t.parse::<f64>().map_err(|_| format_err(path, format!("record {}: '{t}' is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => format_err(path, format!("{other:?}")),
    })?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_f64(*v))).map_err(|e| format_err(path, e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a signal stored as one value per line (a single column).
pub fn read_signal_csv(path: &Path) -> Result<Signal1D> {
    let rows = read_rows(path)?;
    if rows.iter().any(|r| r.len() != 1) {
        return Err(format_err(path, "expected one value per line"));
    }
    Signal1D::new(rows.into_iter().map(|r| r[0]).collect()).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_signal_csv(path: &Path, w: &Signal1D) -> Result<()> {
    write_rows(path, w.as_slice().chunks(1))
}

pub fn read_matrix_csv(path: &Path) -> Result<Field2D> {
    let rows = read_rows(path)?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format_err(path, "rows have different lengths"));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let nrows = flat.len().checked_div(cols).unwrap_or(0);
    let arr = Array2::from_shape_vec((nrows, cols), flat).map_err(|e| format_err(path, e.to_string()))?;
    Field2D::new(arr).map_err(|e| format_err(path, e.to_string()))
}

pub fn write_matrix_csv(path: &Path, u: &Field2D) -> Result<()> {
    let v = u.values().as_standard_layout().into_owned();
    let rows: Vec<&[f64]> = v.rows().into_iter().map(|r| r.to_slice().expect("standard layout")).collect();
    write_rows(path, rows.into_iter())
}

/// Whitespace/comment-aware tokenizer for the PGM header.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self) -> Option<&[u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, path: &Path, what: &str) -> Result<usize> {
        self.token()
            .and_then(|t| std::str::from_utf8(t).ok()?.parse().ok())
            .ok_or_else(|| format_err(path, format!("missing or bad {what}")))
    }
}

/// Reads a P2 (ASCII) or P5 (binary, 8- or 16-bit big-endian) PGM image.
/// Image row `j` becomes grid row `j`.
pub fn read_pgm(path: &Path) -> Result<Field2D> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut h = Header { bytes: &bytes, pos: 0 };
    let magic = h.token().map(<[u8]>::to_vec);
    let binary = match magic.as_deref() {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(format_err(path, "not a P2/P5 PGM file")),
    };
    let width = h.number(path, "width")?;
    let height = h.number(path, "height")?;
    let maxval = h.number(path, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width * height;
    let levels: Vec<u16> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = h.pos + 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let raster = bytes.get(start..start + need).ok_or_else(|| format_err(path, "raster is truncated"))?;
        if wide {
            raster.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect()
        } else {
            raster.iter().map(|&b| b as u16).collect()
        }
    } else {
        (0..count).map(|_| h.number(path, "pixel").map(|v| v as u16)).collect::<Result<Vec<u16>>>()?
    };
    if levels.iter().any(|&v| v as usize > maxval) {
        return Err(format_err(path, "pixel exceeds maxval"));
    }
    let scale = maxval as f64;
    let arr = Array2::from_shape_vec((height, width), levels.into_iter().map(|v| v as f64 / scale).collect())
        .map_err(|e| format_err(path, e.to_string()))?;
    Field2D::new(arr).map_err(|e| format_err(path, e.to_string()))
}

/// Writes a binary PGM, clamping values to `[0, 1]` and rounding to the nearest level.
pub fn write_pgm(path: &Path, u: &Field2D, maxval: u16) -> Result<()> {
    if maxval == 0 {
        return Err(Error::invalid("maxval must be positive"));
    }
    let (height, width) = u.values().dim();
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    let m = maxval as f64;
    for v in u.values().iter() {
        let level = (v.clamp(0.0, 1.0) * m).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&level.to_be_bytes());
        } else {
            out.push(level as u8);
        }
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&out).map_err(io_err(path))
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Reads a 2-D field from `.pgm` or `.csv` by extension.
pub fn read_field(path: &Path) -> Result<Field2D> {
    match extension(path).as_str() {
        "pgm" => read_pgm(path),
        "csv" => read_matrix_csv(path),
        other => Err(format_err(path, format!("unsupported extension '.{other}'"))),
    }
}

pub fn write_field(path: &Path, u: &Field2D) -> Result<()> {
    match extension(path).as_str() {
        "pgm" => write_pgm(path, u, DEFAULT_MAXVAL),
        "csv" => write_matrix_csv(path, u),
        other => Err(format_err(path, format!("unsupported extension '.{other}'"))),
    }
}

/// Paths in `dir` sorted by file name.
pub(crate) fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        out.push(entry.map_err(io_err(dir))?.path());
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn signal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let w = Signal1D::from_fn(37, |x| (7.0 * x).sin() / 3.0 + 1e-300).unwrap();
        write_signal_csv(&p, &w).unwrap();
        assert_eq!(read_signal_csv(&p).unwrap(), w);
    }

    #[test]
    fn matrix_round_trip_and_orientation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        let u = Field2D::from_fn(4, 3, |x, y| x + 10.0 * y).unwrap();
        write_matrix_csv(&p, &u).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 5);
        assert_eq!(read_matrix_csv(&p).unwrap(), u);
    }

    #[test]
    fn ascii_pgm_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        fs::write(&p, "P2\n# comment\n3 3\n4\n0 1 2\n3 4 0\n# x\n2 2 2\n").unwrap();
        let u = read_pgm(&p).unwrap();
        assert_eq!(u.at(1, 0), 0.25);
        assert_eq!(u.at(1, 1), 1.0);
        fs::write(&p, "P2\n3 3\n4\n0 1 9\n3 4 0\n2 2 2\n").unwrap();
        assert!(read_pgm(&p).is_err());
        fs::write(&p, "P6\n3 3\n4\n").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn bad_inputs_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "1\n2\nabc\n").unwrap();
        let e = read_signal_csv(&p).unwrap_err().to_string();
        assert!(e.contains("bad.csv") && e.contains("abc"), "{e}");
        assert!(matches!(read_signal_csv(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&p).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pgm_round_trip_within_half_level(
            vals in prop::collection::vec(0.0f64..=1.0, 9..=9),
            maxval in prop_oneof![Just(255u16), Just(65535u16), 1u16..1000],
        ) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("u.pgm");
            let u = Field2D::new(Array2::from_shape_vec((3, 3), vals).unwrap()).unwrap();
            write_pgm(&p, &u, maxval).unwrap();
            let back = read_pgm(&p).unwrap();
            for (a, b) in u.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() <= 0.5 / maxval as f64 + 1e-15);
            }
        }
    }
}
