use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::linalg::{dense_svd, DenseMatrix, SkinnySvd};

/// First eight bytes of a binary matrix file.
pub const MAGIC: &[u8; 8] = b"LADMAPM1";
/// First eight bytes of a factor file: `U`, `σ` (as an `r×1` matrix) and
/// `V` in the binary matrix format.
pub const SVD_MAGIC: &[u8; 8] = b"LADMAPS1";

/// CSV with a `rows,cols` header line followed by one line per row.
pub fn write_matrix_csv<W: Write>(m: &DenseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "{},{}", m.nrows(), m.ncols())?;
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:e}", m[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_dims(header: &str) -> Result<(usize, usize)> {
    let mut it = header.trim().split(',');
    let mut next = |what: &str| -> Result<usize> {
        it.next()
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("bad {what} in header {header:?}")))
    };
    let rows = next("row count")?;
    let cols = next("column count")?;
    Ok((rows, cols))
}

pub fn read_matrix_csv<R: BufRead>(input: R) -> Result<DenseMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty matrix file".into()))??;
    let (rows, cols) = parse_dims(&header)?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: cannot parse {tok:?}", i + 2)))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(Error::Format(format!(
                "line {}: expected {cols} values, found {}",
                i + 2,
                data.len() - before
            )));
        }
    }
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "expected {rows} rows, found {}",
            data.len() / cols.max(1)
        )));
    }
    Ok(DenseMatrix::from_row_slice(rows, cols, &data))
}

/// Binary layout: [`MAGIC`], `u32` rows, `u32` cols, then row-major `f64`,
/// all little-endian.
pub fn write_matrix_bin<W: Write>(m: &DenseMatrix, mut out: W) -> Result<()> {
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")));
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(dim(m.nrows())?)?;
    out.write_u32::<LittleEndian>(dim(m.ncols())?)?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.write_f64::<LittleEndian>(m[(i, j)])?;
        }
    }
    Ok(())
}

pub fn read_matrix_bin<R: Read>(mut input: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a binary matrix file (bad magic)".into()));
    }
    let rows = input.read_u32::<LittleEndian>()? as usize;
    let cols = input.read_u32::<LittleEndian>()? as usize;
    let mut data = vec![0.0; rows * cols];
    input.read_f64_into::<LittleEndian>(&mut data)?;
    Ok(DenseMatrix::from_row_slice(rows, cols, &data))
}

/// Writes CSV when the extension is `.csv`, binary otherwise.
pub fn save_matrix(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_matrix_csv(m, &mut out)?;
    } else {
        write_matrix_bin(m, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads either format, recognizing binary files by their magic bytes.
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut reader = BufReader::new(File::open(path)?);
    let head = reader.fill_buf()?;
    if head.starts_with(MAGIC) {
        read_matrix_bin(reader)
    } else {
        read_matrix_csv(reader)
    }
}

pub fn save_skinny(z: &SkinnySvd, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(SVD_MAGIC)?;
    write_matrix_bin(&z.u, &mut out)?;
    write_matrix_bin(&DenseMatrix::from_column_slice(z.rank(), 1, &z.sigma), &mut out)?;
    write_matrix_bin(&z.v, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads a factor file, or a dense matrix (either format) that is then
/// factored, dropping singular values below `1e-12·σ₁`.
pub fn load_skinny(path: &Path) -> Result<SkinnySvd> {
    let mut reader = BufReader::new(File::open(path)?);
    if reader.fill_buf()?.starts_with(SVD_MAGIC) {
        reader.consume(SVD_MAGIC.len());
        let u = read_matrix_bin(&mut reader)?;
        let sigma = read_matrix_bin(&mut reader)?;
        let v = read_matrix_bin(&mut reader)?;
        return Ok(SkinnySvd::new(u, sigma.as_slice().to_vec(), v)?);
    }
    let dense = load_matrix(path)?;
    let (u, sv, v) = dense_svd(&dense);
    let cut = sv.first().map_or(0.0, |s| 1e-12 * s);
    let r = sv.iter().take_while(|s| **s > cut).count();
    Ok(SkinnySvd::new(
        u.columns(0, r).into_owned(),
        sv[..r].to_vec(),
        v.columns(0, r).into_owned(),
    )?)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// One label per line.
pub fn write_labels<W: Write>(labels: &[usize], mut out: W) -> Result<()> {
    for l in labels {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(
            t.parse()
                .map_err(|_| Error::Format(format!("line {}: bad label {t:?}", i + 1)))?,
        );
    }
    Ok(labels)
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_labels(labels, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_row_slice(2, 3, &[1.0, -2.5, 1e-300, 0.1, f64::MAX, -0.0])
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_matrix_csv(&sample(), &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2,3\n"));
        assert_eq!(read_matrix_csv(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn binary_round_trip_and_header() {
        let mut buf = Vec::new();
        write_matrix_bin(&sample(), &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(read_matrix_bin(&buf[..]).unwrap(), sample());
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_matrix_csv("2,2\n1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix_csv("2,2\n1,2\n".as_bytes()).is_err());
        assert!(read_matrix_csv("x,2\n".as_bytes()).is_err());
        assert!(read_matrix_bin(&b"NOTMAGIC\0\0\0\0\0\0\0\0"[..]).is_err());
        assert!(read_labels("1\nfoo\n".as_bytes()).is_err());
    }

    #[test]
    fn files_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["m.csv", "m.bin"] {
            let p = dir.path().join(name);
            save_matrix(&sample(), &p).unwrap();
            assert_eq!(load_matrix(&p).unwrap(), sample());
        }
        let z = SkinnySvd::new(
            DenseMatrix::from_column_slice(2, 1, &[0.6, 0.8]),
            vec![2.0],
            DenseMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
        )
        .unwrap();
        let zp = dir.path().join("z.svd");
        save_skinny(&z, &zp).unwrap();
        assert_eq!(load_skinny(&zp).unwrap(), z);
        let dp = dir.path().join("z.csv");
        save_matrix(&z.to_dense(), &dp).unwrap();
        let back = load_skinny(&dp).unwrap();
        assert_eq!(back.rank(), 1);
        assert!((back.to_dense() - z.to_dense()).amax() < 1e-14);
        let lp = dir.path().join("l.csv");
        save_labels(&[0, 3, 1], &lp).unwrap();
        assert_eq!(load_labels(&lp).unwrap(), vec![0, 3, 1]);
    }
}
