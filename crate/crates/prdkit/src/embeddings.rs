//! Embedding matrices on disk: CSV, NPY (v1/v2, float32/float64) and packed
//! float32 with a JSON sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use prdkit_core::SampleSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Npy(Dtype),
    /// Packed little-endian float32, shape in `<file>.json`.
    Raw,
}

impl Format {
    /// Guesses the format from the file extension (`.csv`, `.npy`, `.raw`/`.bin`/`.f32`).
    pub fn from_path(path: &Path) -> Result<Format> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Ok(Format::Csv),
            "npy" => Ok(Format::Npy(Dtype::F64)),
            "raw" | "bin" | "f32" => Ok(Format::Raw),
            _ => Err(Error::usage(format!(
                "cannot infer the embedding format of {} (use a .csv, .npy or .raw extension)",
                path.display()
            ))),
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "npy" | "npy-f64" => Ok(Format::Npy(Dtype::F64)),
            "npy-f32" => Ok(Format::Npy(Dtype::F32)),
            "raw" => Ok(Format::Raw),
            other => Err(Error::usage(format!("unknown format '{other}' (csv, npy, npy-f32, raw)"))),
        }
    }
}

/// Shape sidecar of a RAW file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawShape {
    pub n: usize,
    pub d: usize,
}

/// Path of the JSON sidecar for a RAW file: `x.raw` -> `x.raw.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "embeddings".into())
}

/// Reads an embedding matrix, inferring the format from the extension when
/// `format` is `None`.
pub fn read_embeddings(path: &Path, format: Option<Format>) -> Result<SampleSet> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    let (data, d) = match format {
        Format::Csv => read_csv(path)?,
        Format::Npy(_) => read_npy(path)?,
        Format::Raw => read_raw(path)?,
    };
    SampleSet::new(data, d, label_of(path)).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_embeddings(s: &SampleSet, path: &Path, format: Format) -> Result<()> {
    if s.is_empty() {
        return Err(Error::usage("refusing to write an empty sample set"));
    }
    match format {
        Format::Csv => write_csv(s, path),
        Format::Npy(dtype) => write_npy(s, path, dtype),
        Format::Raw => write_raw(s, path),
    }
}

fn read_csv(path: &Path) -> Result<(Vec<f64>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    let mut data = Vec::new();
    let mut d = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, format!("row {}: {e}", i + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> =
            record.iter().enumerate().map(|(j, f)| f.parse::<f64>().map_err(|_| j)).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first row is a header
            Err(_) if i == 0 => continue,
            Err(j) => {
                return Err(Error::parse(
                    path,
                    format!("row {}, column {}: '{}' is not a number", i + 1, j + 1, &record[j]),
                ))
            }
        };
        if d == 0 {
            d = values.len();
        } else if values.len() != d {
            return Err(Error::parse(path, format!("row {} has {} columns, expected {d}", i + 1, values.len())));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::parse(path, format!("row {}, column {}: non-finite value", i + 1, j + 1)));
        }
        data.extend(values);
    }
    if d == 0 {
        return Err(Error::parse(path, "no numeric rows"));
    }
    Ok((data, d))
}

fn write_csv(s: &SampleSet, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in s.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct NpyHeader {
    dtype: Dtype,
    n: usize,
    d: usize,
    data_offset: usize,
}

fn parse_npy_header(path: &Path, bytes: &[u8]) -> Result<NpyHeader> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(Error::parse(path, "offset 0: missing NPY magic string"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (len, start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 => {
            if bytes.len() < 12 {
                return Err(Error::parse(path, "offset 8: truncated header length"));
            }
            (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
        }
        _ => return Err(Error::parse(path, format!("offset 6: unsupported NPY version {major}.{minor}"))),
    };
    let end = start + len;
    let header = bytes
        .get(start..end)
        .ok_or_else(|| Error::parse(path, format!("offset {start}: header runs past end of file")))?;
    let header =
        std::str::from_utf8(header).map_err(|_| Error::parse(path, format!("offset {start}: header is not text")))?;
    let field = |key: &str| -> Result<&str> {
        let at = header
            .find(&format!("'{key}'"))
            .ok_or_else(|| Error::parse(path, format!("offset {start}: header lacks '{key}'")))?;
        let rest = &header[at + key.len() + 2..];
        let colon = rest.find(':').ok_or_else(|| Error::parse(path, format!("offset {start}: malformed '{key}'")))?;
        Ok(rest[colon + 1..].trim_start())
    };
    let descr = field("descr")?;
    let dtype = if descr.starts_with("'<f4'") {
        Dtype::F32
    } else if descr.starts_with("'<f8'") {
        Dtype::F64
    } else {
        let shown: String = descr.chars().take_while(|c| *c != ',').collect();
        return Err(Error::parse(path, format!("offset {start}: unsupported dtype {shown} (need <f4 or <f8)")));
    };
    if !field("fortran_order")?.starts_with("False") {
        return Err(Error::parse(path, format!("offset {start}: Fortran-ordered arrays are not supported")));
    }
    let shape = field("shape")?;
    let close = shape.find(')').ok_or_else(|| Error::parse(path, format!("offset {start}: malformed shape")))?;
    let dims: Vec<usize> = shape[1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, format!("offset {start}: malformed shape {}", &shape[..=close])))?;
    if dims.len() != 2 {
        return Err(Error::parse(path, format!("offset {start}: expected a 2-D array, got shape {:?}", dims)));
    }
    Ok(NpyHeader { dtype, n: dims[0], d: dims[1], data_offset: end })
}

fn decode(path: &Path, payload: &[u8], dtype: Dtype, d: usize, base: usize) -> Result<Vec<f64>> {
    let w = dtype.width();
    let mut out = Vec::with_capacity(payload.len() / w);
    for (i, chunk) in payload.chunks_exact(w).enumerate() {
        let v = match dtype {
            Dtype::F32 => f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as f64,
            Dtype::F64 => f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")),
        };
        if !v.is_finite() {
            return Err(Error::parse(
                path,
                format!("offset {}: non-finite value at row {}, column {}", base + i * w, i / d + 1, i % d + 1),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

fn read_npy(path: &Path) -> Result<(Vec<f64>, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let h = parse_npy_header(path, &bytes)?;
    let expected = h.n * h.d * h.dtype.width();
    let found = bytes.len() - h.data_offset;
    if found != expected {
        return Err(Error::parse(
            path,
            format!(
                "offset {}: shape ({}, {}) of {} needs {expected} data bytes, found {found}",
                h.data_offset,
                h.n,
                h.d,
                h.dtype.descr()
            ),
        ));
    }
    if h.n == 0 || h.d == 0 {
        return Err(Error::parse(path, format!("empty array of shape ({}, {})", h.n, h.d)));
    }
    Ok((decode(path, &bytes[h.data_offset..], h.dtype, h.d, h.data_offset)?, h.d))
}

fn write_npy(s: &SampleSet, path: &Path, dtype: Dtype) -> Result<()> {
    let dict =
        format!("{{'descr': '{}', 'fortran_order': False, 'shape': ({}, {}), }}", dtype.descr(), s.len(), s.dim());
    // magic + version + u16 length + dict + newline, padded to 64 bytes
    let unpadded = 10 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    let mut header = dict.into_bytes();
    header.resize(header.len() + pad, b' ');
    header.push(b'\n');
    let mut out = Vec::with_capacity(10 + header.len() + s.as_slice().len() * dtype.width());
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(&header);
    encode(s, dtype, &mut out);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn encode(s: &SampleSet, dtype: Dtype, out: &mut Vec<u8>) {
    for v in s.as_slice() {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(*v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
}

fn read_raw(path: &Path) -> Result<(Vec<f64>, usize)> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let shape: RawShape = serde_json::from_str(&text).map_err(|e| Error::parse(&side, e.to_string()))?;
    if shape.n == 0 || shape.d == 0 {
        return Err(Error::parse(&side, format!("empty shape n={}, d={}", shape.n, shape.d)));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = shape.n * shape.d * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            path,
            format!(
                "sidecar declares n={}, d={} (float32), which needs {expected} bytes, found {}",
                shape.n,
                shape.d,
                bytes.len()
            ),
        ));
    }
    Ok((decode(path, &bytes, Dtype::F32, shape.d, 0)?, shape.d))
}

/// RAW output is float32; values not representable in float32 are rounded.
fn write_raw(s: &SampleSet, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(s.as_slice().len() * 4);
    encode(s, Dtype::F32, &mut out);
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string(&RawShape { n: s.len(), d: s.dim() }).expect("shape serializes");
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn csv_with_and_without_header() {
        let dir = tmp();
        let p = dir.path().join("a.csv");
        fs::write(&p, "1.0,2.0\n3.0,4.0").unwrap();
        let s = read_embeddings(&p, None).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 2));
        assert_eq!(s.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        fs::write(&p, "x,y\n1,2\n").unwrap();
        assert_eq!(read_embeddings(&p, None).unwrap().as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let dir = tmp();
        let p = dir.path().join("a.csv");
        fs::write(&p, "1,2\n3,oops\n").unwrap();
        let e = read_embeddings(&p, None).unwrap_err().to_string();
        assert!(e.contains("row 2, column 2"), "{e}");
        fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_embeddings(&p, None).unwrap_err().to_string().contains("row 2 has 1 columns"));
        fs::write(&p, "1,2\nNaN,3\n").unwrap();
        let e = read_embeddings(&p, None).unwrap_err();
        assert!(e.to_string().contains("non-finite") && e.exit_code() == 3);
    }

    #[test]
    fn npy_round_trips_bitwise() {
        let dir = tmp();
        let s = SampleSet::new(vec![0.5, -1.25, 3.0, 1e-3, 7.0, 0.1], 2, "s").unwrap();
        let p = dir.path().join("a.npy");
        write_embeddings(&s, &p, Format::Npy(Dtype::F64)).unwrap();
        assert_eq!(read_embeddings(&p, None).unwrap().as_slice(), s.as_slice());
        let s32 = SampleSet::new(s.as_slice().iter().map(|v| *v as f32 as f64).collect(), 2, "s").unwrap();
        write_embeddings(&s32, &p, Format::Npy(Dtype::F32)).unwrap();
        let back = read_embeddings(&p, None).unwrap();
        assert_eq!((back.len(), back.dim()), (3, 2));
        assert_eq!(back.as_slice(), s32.as_slice());
        assert_eq!((fs::read(&p).unwrap().len() - 6 * 4) % 64, 0);
    }

    #[test]
    fn npy_v2_and_bad_dtype() {
        let dir = tmp();
        let p = dir.path().join("b.npy");
        let dict = b"{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2), }\n";
        let mut bytes = NPY_MAGIC.to_vec();
        bytes.extend([2, 0]);
        bytes.extend((dict.len() as u32).to_le_bytes());
        bytes.extend(dict);
        bytes.extend(1.5f64.to_le_bytes());
        bytes.extend(2.5f64.to_le_bytes());
        fs::write(&p, &bytes).unwrap();
        assert_eq!(read_embeddings(&p, None).unwrap().as_slice(), &[1.5, 2.5]);
        let mut i8s = bytes.clone();
        let at = i8s.windows(3).position(|w| w == b"<f8").unwrap();
        i8s[at..at + 3].copy_from_slice(b"<i8");
        fs::write(&p, &i8s).unwrap();
        let e = read_embeddings(&p, None).unwrap_err().to_string();
        assert!(e.contains("unsupported dtype") && e.contains("offset 12"), "{e}");
        bytes.truncate(bytes.len() - 3);
        fs::write(&p, &bytes).unwrap();
        assert!(read_embeddings(&p, None).unwrap_err().to_string().contains("needs 16 data bytes, found 13"));
    }

    #[test]
    fn raw_shape_mismatch() {
        let dir = tmp();
        let p = dir.path().join("c.raw");
        fs::write(&p, [0u8; 20]).unwrap();
        fs::write(sidecar_path(&p), r#"{"n":2,"d":3}"#).unwrap();
        let e = read_embeddings(&p, None).unwrap_err().to_string();
        assert!(e.contains("24 bytes, found 20"), "{e}");
    }

    #[test]
    fn identity_survives_all_formats() {
        let dir = tmp();
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let s = SampleSet::from_rows(&rows, "eye").unwrap();
        for (name, f) in [("e.csv", Format::Csv), ("e.npy", Format::Npy(Dtype::F64)), ("e.raw", Format::Raw)] {
            let p = dir.path().join(name);
            write_embeddings(&s, &p, f).unwrap();
            assert_eq!(read_embeddings(&p, Some(f)).unwrap().as_slice(), s.as_slice(), "{name}");
        }
    }

    #[test]
    fn csv_round_trip_precision() {
        let dir = tmp();
        let s = SampleSet::new(vec![0.1, 1.0 / 3.0, -2.718281828459045, 1e-300], 2, "s").unwrap();
        let p = dir.path().join("r.csv");
        write_embeddings(&s, &p, Format::Csv).unwrap();
        let back = read_embeddings(&p, None).unwrap();
        for (a, b) in s.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
