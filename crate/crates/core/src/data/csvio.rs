use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) fn reader(path: &Path, expected_header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| Error::parse(path, e))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected_header {
        return Err(Error::parse(
            path,
            format!(
                "expected header {:?}, found {:?}",
                expected_header.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(rdr)
}

pub(crate) fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

pub(crate) fn finish(path: &Path, wtr: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = wtr
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::parse(path, e),
    }
}

pub(crate) fn field<'r>(path: &Path, rec: &'r csv::StringRecord, idx: usize) -> Result<&'r str> {
    rec.get(idx).map(str::trim).ok_or_else(|| {
        let line = rec.position().map_or(0, |p| p.line());
        Error::parse(path, format!("line {line}: missing column {idx}"))
    })
}

pub(crate) fn parse_field<T: FromStr>(path: &Path, rec: &csv::StringRecord, idx: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = field(path, rec, idx)?;
    raw.parse::<T>().map_err(|e| {
        let line = rec.position().map_or(0, |p| p.line());
        Error::parse(path, format!("line {line}: cannot parse {raw:?}: {e}"))
    })
}

/// Shortest decimal representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
