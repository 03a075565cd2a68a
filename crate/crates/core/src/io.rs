//! Interchange formats for grid data.
//!
//! Three formats are read and written, chosen to be trivially parseable
//! from any language:
//!
//! - 1-D text: one value per line, the literal `NaN` marking a missing
//!   sample;
//! - m-D text: a header line `#shape n1 n2 … nm`, then the values in
//!   row-major order, whitespace separated, `NaN` for missing;
//! - 2-D grayscale PGM (`P2` ASCII or `P5` binary, maxval 255 or 65535),
//!   rescaled to [0, 1] on read and back on write.
//!
//! Output is always written in the format the input arrived in. Floats are
//! printed with the shortest representation that round-trips, so rewriting
//! a canonical file is byte-identical.

use crate::error::{Error, Result};
use crate::tensor::{ingest_with_nan, GridTensor, Mask};
use std::fs;
use std::io::Write;
use std::path::Path;

/// On-disk representation of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    /// Plain text; `with_header` records whether a `#shape` line was (and
    /// will be) present.
    Text { with_header: bool },
    /// Grayscale PGM.
    Pgm { binary: bool, maxval: u32 },
}

/// A parsed grid file: data with NaN split out into the mask, plus the
/// format to reproduce on output.
#[derive(Debug, Clone)]
pub struct GridFile {
    pub tensor: GridTensor,
    pub mask: Mask,
    pub format: GridFormat,
}

/// Reads a grid, auto-detecting PGM by magic number, with an optional
/// shape override for headerless text files.
pub fn read_grid(path: &Path, shape_override: Option<&[usize]>) -> Result<GridFile> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return read_pgm(&bytes);
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Parse(format!("{}: not valid UTF-8 text", path.display())))?;
    read_text(&text, shape_override)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_text(text: &str, shape_override: Option<&[usize]>) -> Result<GridFile> {
    let mut header_shape: Option<Vec<usize>> = None;
    let mut values: Vec<f64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#shape") {
            if lineno != 0 || header_shape.is_some() {
                return Err(Error::Parse("#shape header must be the first line".into()));
            }
            let shape: Vec<usize> = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad shape extent {t:?}")))
                })
                .collect::<Result<_>>()?;
            if shape.is_empty() || shape.iter().any(|&n| n == 0) {
                return Err(Error::Parse(format!("invalid shape {shape:?}")));
            }
            header_shape = Some(shape);
            continue;
        }
        if line.starts_with('#') {
            continue; // comment
        }
        for tok in line.split([',', ' ', '\t']).filter(|t| !t.is_empty()) {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number {tok:?}", lineno + 1)))?;
            if v.is_infinite() {
                return Err(Error::Parse(format!("line {}: infinite value", lineno + 1)));
            }
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::Parse("no data values".into()));
    }

    let (shape, with_header) = match (&header_shape, shape_override) {
        (Some(h), Some(o)) if h.as_slice() != o => {
            return Err(Error::Parse(format!(
                "shape override {o:?} conflicts with #shape header {h:?}"
            )))
        }
        (Some(h), _) => (h.clone(), true),
        (None, Some(o)) => (o.to_vec(), o.len() > 1),
        (None, None) => (vec![values.len()], false),
    };
    let expected: usize = shape.iter().product();
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "{} values but shape {shape:?} needs {expected}",
            values.len()
        )));
    }
    let (tensor, mask) = ingest_with_nan(shape, values)?;
    Ok(GridFile {
        tensor,
        mask,
        format: GridFormat::Text { with_header },
    })
}

struct PgmHeader {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_pgm_header(bytes: &[u8]) -> Result<PgmHeader> {
    let binary = match &bytes[..2] {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(Error::Parse("not a PGM file".into())),
    };
    // Header tokens are separated by whitespace; '#' starts a comment that
    // runs to end of line.
    let mut pos = 2usize;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad PGM header field {tok:?}")))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Parse("PGM with zero dimension".into()));
    }
    if maxval != 255 && maxval != 65535 {
        return Err(Error::Parse(format!(
            "unsupported PGM maxval {maxval}; expected 255 or 65535"
        )));
    }
    // exactly one whitespace byte separates the header from binary data
    if binary {
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(Error::Parse("missing separator before PGM raster".into()));
        }
        pos += 1;
    }
    Ok(PgmHeader {
        binary,
        width: width as usize,
        height: height as usize,
        maxval,
        data_offset: pos,
    })
}

fn read_pgm(bytes: &[u8]) -> Result<GridFile> {
    let h = parse_pgm_header(bytes)?;
    let n = h.width * h.height;
    let mut raw: Vec<u32> = Vec::with_capacity(n);
    if h.binary {
        let data = &bytes[h.data_offset..];
        if h.maxval > 255 {
            if data.len() < 2 * n {
                return Err(Error::Parse("truncated PGM raster".into()));
            }
            for i in 0..n {
                raw.push(u32::from(u16::from_be_bytes([data[2 * i], data[2 * i + 1]])));
            }
        } else {
            if data.len() < n {
                return Err(Error::Parse("truncated PGM raster".into()));
            }
            raw.extend(data[..n].iter().map(|&b| u32::from(b)));
        }
    } else {
        let text = std::str::from_utf8(&bytes[h.data_offset..])
            .map_err(|_| Error::Parse("non-ASCII P2 raster".into()))?;
        for tok in text.split_whitespace() {
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad P2 sample {tok:?}")))?;
            raw.push(v);
        }
        if raw.len() != n {
            return Err(Error::Parse(format!(
                "P2 raster has {} samples, expected {n}",
                raw.len()
            )));
        }
    }
    if raw.iter().any(|&v| v > h.maxval) {
        return Err(Error::Parse("PGM sample exceeds maxval".into()));
    }
    let scale = f64::from(h.maxval);
    let data: Vec<f64> = raw.iter().map(|&v| f64::from(v) / scale).collect();
    let shape = vec![h.height, h.width];
    let tensor = GridTensor::new(shape.clone(), data)?;
    let mask = Mask::full(shape)?;
    Ok(GridFile {
        tensor,
        mask,
        format: GridFormat::Pgm {
            binary: h.binary,
            maxval: h.maxval,
        },
    })
}

/// Writes a grid in the given format. With a mask, missing samples are
/// written as `NaN` (text formats only).
pub fn write_grid(
    path: &Path,
    tensor: &GridTensor,
    mask: Option<&Mask>,
    format: GridFormat,
) -> Result<()> {
    if let Some(m) = mask {
        m.check_matches(tensor)?;
    }
    let bytes = match format {
        GridFormat::Text { with_header } => render_text(tensor, mask, with_header)?,
        GridFormat::Pgm { binary, maxval } => {
            if mask.is_some_and(|m| !m.is_full()) {
                return Err(Error::InvalidParam(
                    "PGM cannot represent missing samples".into(),
                ));
            }
            render_pgm(tensor, binary, maxval)?
        }
    };
    fs::write(path, bytes)?;
    Ok(())
}

fn render_text(tensor: &GridTensor, mask: Option<&Mask>, with_header: bool) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    if with_header {
        let dims: Vec<String> = tensor.shape().iter().map(|n| n.to_string()).collect();
        writeln!(out, "#shape {}", dims.join(" "))?;
    } else if tensor.ndim() > 1 {
        return Err(Error::InvalidParam(
            "multi-dimensional text output needs the #shape header".into(),
        ));
    }
    for (i, &v) in tensor.data().iter().enumerate() {
        let missing = mask.is_some_and(|m| !m.flags()[i]);
        if missing {
            writeln!(out, "NaN")?;
        } else {
            writeln!(out, "{v}")?;
        }
    }
    Ok(out)
}

fn render_pgm(tensor: &GridTensor, binary: bool, maxval: u32) -> Result<Vec<u8>> {
    if tensor.ndim() != 2 {
        return Err(Error::InvalidParam(format!(
            "PGM output needs a 2-D grid, got {}-D",
            tensor.ndim()
        )));
    }
    let (height, width) = (tensor.shape()[0], tensor.shape()[1]);
    let scale = f64::from(maxval);
    let quantize = |v: f64| -> u32 { ((v * scale).round().clamp(0.0, scale)) as u32 };

    let mut out = Vec::new();
    let magic = if binary { "P5" } else { "P2" };
    writeln!(out, "{magic}")?;
    writeln!(out, "{width} {height}")?;
    writeln!(out, "{maxval}")?;
    if binary {
        if maxval > 255 {
            for &v in tensor.data() {
                out.extend_from_slice(&(quantize(v) as u16).to_be_bytes());
            }
        } else {
            out.extend(tensor.data().iter().map(|&v| quantize(v) as u8));
        }
    } else {
        for row in 0..height {
            let line: Vec<String> = (0..width)
                .map(|c| quantize(tensor.data()[row * width + c]).to_string())
                .collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(out)
}

/// Reads a 0/1 mask file (any grid format); values above one half count as
/// observed.
pub fn read_mask(path: &Path, expected_shape: &[usize]) -> Result<Mask> {
    let file = read_grid(path, Some(expected_shape))?;
    if file.tensor.shape() != expected_shape {
        return Err(Error::ShapeMismatch {
            expected: expected_shape.to_vec(),
            got: file.tensor.shape().to_vec(),
        });
    }
    let flags: Vec<bool> = file
        .tensor
        .data()
        .iter()
        .zip(file.mask.flags())
        .map(|(&v, &finite)| finite && v > 0.5)
        .collect();
    Mask::new(expected_shape.to_vec(), flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn csv_roundtrip_with_nan() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("data.csv");
        fs::write(&path, "1.5\nNaN\n-0.25\n3\n").unwrap();
        let file = read_grid(&path, None).unwrap();
        assert_eq!(file.tensor.shape(), &[4]);
        assert_eq!(file.tensor.data(), &[1.5, 0.0, -0.25, 3.0]);
        assert_eq!(file.mask.flags(), &[true, false, true, true]);

        // canonical rewrite is byte-identical
        let out = dir.path().join("out.csv");
        write_grid(&out, &file.tensor, Some(&file.mask), file.format).unwrap();
        let canonical = fs::read(&out).unwrap();
        let reread = read_grid(&out, None).unwrap();
        let out2 = dir.path().join("out2.csv");
        write_grid(&out2, &reread.tensor, Some(&reread.mask), reread.format).unwrap();
        assert_eq!(canonical, fs::read(&out2).unwrap());
    }

    #[test]
    fn shape_header_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("grid.txt");
        fs::write(&path, "#shape 2 3\n1 2 3\n4 5 NaN\n").unwrap();
        let file = read_grid(&path, None).unwrap();
        assert_eq!(file.tensor.shape(), &[2, 3]);
        assert_eq!(file.tensor.data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 0.0]);
        assert_eq!(file.format, GridFormat::Text { with_header: true });

        let out = dir.path().join("grid_out.txt");
        write_grid(&out, &file.tensor, Some(&file.mask), file.format).unwrap();
        let reread = read_grid(&out, None).unwrap();
        assert_eq!(reread.tensor.shape(), file.tensor.shape());
        assert_eq!(reread.tensor.data(), file.tensor.data());
        assert_eq!(reread.mask.flags(), file.mask.flags());
    }

    #[test]
    fn shape_override_applies_and_conflicts_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("flat.txt");
        fs::write(&path, "1 2 3 4 5 6\n").unwrap();
        let file = read_grid(&path, Some(&[2, 3])).unwrap();
        assert_eq!(file.tensor.shape(), &[2, 3]);

        let path2 = dir.path().join("hdr.txt");
        fs::write(&path2, "#shape 3 2\n1 2 3 4 5 6\n").unwrap();
        assert!(read_grid(&path2, Some(&[2, 3])).is_err());
    }

    #[test]
    fn wrong_value_count_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "#shape 2 2\n1 2 3\n").unwrap();
        assert!(read_grid(&path, None).is_err());
    }

    #[test]
    fn malformed_number_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad2.txt");
        fs::write(&path, "1.0\ntwo\n").unwrap();
        assert!(matches!(read_grid(&path, None), Err(Error::Parse(_))));
    }

    #[test]
    fn pgm_p2_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        fs::write(&path, "P2\n# demo\n3 2\n255\n0 128 255\n64 32 16\n").unwrap();
        let file = read_grid(&path, None).unwrap();
        assert_eq!(file.tensor.shape(), &[2, 3]);
        assert!((file.tensor.data()[1] - 128.0 / 255.0).abs() < 1e-12);
        assert_eq!(file.format, GridFormat::Pgm { binary: false, maxval: 255 });

        let out = dir.path().join("img_out.pgm");
        write_grid(&out, &file.tensor, None, file.format).unwrap();
        let reread = read_grid(&out, None).unwrap();
        assert_eq!(reread.tensor.data(), file.tensor.data());
        // canonical rewrite stability
        let out2 = dir.path().join("img_out2.pgm");
        write_grid(&out2, &reread.tensor, None, reread.format).unwrap();
        assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
    }

    #[test]
    fn pgm_p5_binary_16bit_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img16.pgm");
        let mut bytes = b"P5\n2 2\n65535\n".to_vec();
        for v in [0u16, 1000, 40000, 65535] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        fs::write(&path, &bytes).unwrap();
        let file = read_grid(&path, None).unwrap();
        assert_eq!(file.format, GridFormat::Pgm { binary: true, maxval: 65535 });
        assert!((file.tensor.data()[3] - 1.0).abs() < 1e-12);

        let out = dir.path().join("img16_out.pgm");
        write_grid(&out, &file.tensor, None, file.format).unwrap();
        assert_eq!(fs::read(&out).unwrap(), bytes);
    }

    #[test]
    fn pgm_rejects_bad_maxval_and_truncation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, "P2\n2 2\n100\n1 2 3 4\n").unwrap();
        assert!(read_grid(&path, None).is_err());
        let path2 = dir.path().join("short.pgm");
        fs::write(&path2, b"P5\n2 2\n255\n\x01\x02".to_vec()).unwrap();
        assert!(read_grid(&path2, None).is_err());
    }

    #[test]
    fn mask_file_reads_zeros_and_ones() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mask.txt");
        fs::write(&path, "1\n0\n1\n1\n").unwrap();
        let m = read_mask(&path, &[4]).unwrap();
        assert_eq!(m.flags(), &[true, false, true, true]);
        assert!(read_mask(&path, &[5]).is_err());
    }
}
