//! Reading datasets from delimited text and writing them back.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use seqcem_core::dataset::{Dataset, DatasetBuilder};

use crate::schema::SchemaFile;
use crate::{Error, Result};

/// What to do with a row holding a missing-value marker in a schema column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    DropRow,
    Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// Loads `path` with `schema`. Values are trimmed; unit ids are the data-row
/// index in the file (0-based, counting dropped rows).
pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaFile, na_policy: NaPolicy) -> Result<Dataset> {
    load_csv_with_report(path, schema, na_policy).map(|(ds, _)| ds)
}

pub fn load_csv_with_report(
    path: impl AsRef<Path>,
    schema: &SchemaFile,
    na_policy: NaPolicy,
) -> Result<(Dataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, na_policy, path)
}

pub fn read_csv<R: Read>(
    reader: R,
    schema: &SchemaFile,
    na_policy: NaPolicy,
    path: &Path,
) -> Result<(Dataset, LoadReport)> {
    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut builder = DatasetBuilder::new(schema.attributes.clone(), &header_refs)?;
    let watched: Vec<(String, usize)> = builder.positions().map(|(a, p)| (a.name.clone(), p)).collect();
    let mut report = LoadReport::default();
    let mut record = csv::StringRecord::new();
    let mut row = 0u64;
    while rdr.read_record(&mut record).map_err(csv_err)? {
        report.rows_read += 1;
        let missing = watched
            .iter()
            .find(|(_, p)| record.get(*p).map_or(true, |v| schema.na_values.iter().any(|na| na == v)));
        if let Some((column, _)) = missing {
            match na_policy {
                NaPolicy::DropRow => {
                    report.rows_dropped += 1;
                    row += 1;
                    continue;
                }
                NaPolicy::Error => {
                    let source = seqcem_core::Error::Missing { row: row as usize, column: column.clone() };
                    return Err(Error::Record { path: path.into(), row, source });
                }
            }
        }
        let fields: Vec<&str> = record.iter().collect();
        builder.push(row, &fields).map_err(|source| Error::Record { path: path.into(), row, source })?;
        row += 1;
    }
    let ds = builder.finish().map_err(|source| match source {
        seqcem_core::Error::Empty => Error::Usage(format!("{}: no usable rows", path.display())),
        other => Error::Core(other),
    })?;
    Ok((ds, report))
}

/// Writes `ds` with a header row, columns in the dataset's column order.
pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset, delimiter: char) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(std::io::BufWriter::new(file), ds, delimiter).map_err(|source| Error::Csv { path: path.into(), source })
}

pub fn write_dataset_to<W: Write>(writer: W, ds: &Dataset, delimiter: char) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter as u8).from_writer(writer);
    w.write_record(ds.column_order().iter().map(|(name, _)| name.as_str()))?;
    let n_cols = ds.column_order().len();
    let mut row_buf: Vec<String> = Vec::with_capacity(n_cols);
    for row in 0..ds.n() {
        row_buf.clear();
        row_buf.extend((0..n_cols).map(|c| ds.render(row, c)));
        w.write_record(&row_buf)?;
    }
    w.flush()?;
    Ok(())
}
