use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_at, FormatError};
use revembed_core::corpus::{Dataset, Document, Polarity, Split, DEFAULT_FOLDS};

/// Column mapping for a delimited review file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSchema {
    pub text_column: String,
    pub polarity_column: String,
    /// Used when the header has it; documents are unassigned otherwise.
    pub fold_column: Option<String>,
    pub split_column: Option<String>,
    /// Row numbers become ids when absent.
    pub id_column: Option<String>,
    pub delimiter: char,
    pub folds: usize,
    /// Drop rows with a bad label, fold or split, or blank text, instead
    /// of failing.
    pub skip_invalid_rows: bool,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        DatasetSchema {
            text_column: "review_text".into(),
            polarity_column: "polarity".into(),
            fold_column: Some("kfold".into()),
            split_column: Some("split".into()),
            id_column: None,
            delimiter: ',',
            folds: DEFAULT_FOLDS,
            skip_invalid_rows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    pub row: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub skipped: Vec<SkippedRow>,
}

pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<LoadedDataset, FormatError> {
    let file = File::open(path).map_err(io_at(path))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset(file, &name, schema)
}

struct Columns {
    text: usize,
    polarity: usize,
    fold: Option<usize>,
    split: Option<usize>,
    id: Option<usize>,
}

fn locate(headers: &csv::StringRecord, schema: &DatasetSchema) -> Result<Columns, FormatError> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| find(name).ok_or_else(|| FormatError::MissingColumn(name.to_owned()));
    let id = match &schema.id_column {
        Some(name) => Some(required(name)?),
        None => None,
    };
    Ok(Columns {
        text: required(&schema.text_column)?,
        polarity: required(&schema.polarity_column)?,
        fold: schema.fold_column.as_deref().and_then(find),
        split: schema.split_column.as_deref().and_then(find),
        id,
    })
}

fn parse_row(record: &csv::StringRecord, cols: &Columns, row: u64) -> Result<Document, String> {
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let polarity = match field(cols.polarity) {
        "0" => Polarity::Negative,
        "1" => Polarity::Positive,
        other => return Err(format!("polarity {other:?} is not 0 or 1")),
    };
    let fold = match cols.fold.map(field) {
        None | Some("") => None,
        Some(f) => Some(
            f.parse::<usize>()
                .map_err(|_| format!("fold {f:?} is not a non-negative integer"))?,
        ),
    };
    let split = match cols.split.map(field) {
        None | Some("") => None,
        Some(s) => Some(Split::parse(s).ok_or_else(|| format!("unknown split {s:?}"))?),
    };
    let text = record.get(cols.text).unwrap_or("");
    if text.trim().is_empty() {
        return Err("review text is empty".into());
    }
    let id = match cols.id {
        Some(i) => field(i).to_owned(),
        None => format!("row{row}"),
    };
    Ok(Document {
        id,
        text: text.to_owned(),
        polarity,
        fold,
        split,
    })
}

/// Reads a delimited file with a header row. Row numbers in errors and
/// skip reports are 1-based data rows (the header is not counted).
pub fn read_dataset<R: Read>(input: R, name: &str, schema: &DatasetSchema) -> Result<LoadedDataset, FormatError> {
    if !schema.delimiter.is_ascii() {
        return Err(FormatError::Row {
            row: 0,
            message: format!("delimiter {:?} is not ASCII", schema.delimiter),
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .flexible(true)
        .from_reader(input);
    let cols = locate(reader.headers()?, schema)?;
    let mut documents = Vec::new();
    let mut skipped = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let record = record?;
        match parse_row(&record, &cols, row) {
            Ok(doc) => documents.push(doc),
            Err(reason) if schema.skip_invalid_rows => {
                log::warn!("{name}: skipping row {row}: {reason}");
                skipped.push(SkippedRow { row, reason });
            }
            Err(message) => return Err(FormatError::Row { row, message }),
        }
    }
    if documents.is_empty() {
        return Err(FormatError::EmptyDataset);
    }
    let dataset = Dataset::new(name, schema.folds, documents)?;
    Ok(LoadedDataset { dataset, skipped })
}

/// Writes `id,review_text,polarity,kfold,split` with the default column
/// names, so the output reloads with the default schema plus `id_column`.
pub fn write_dataset<W: Write>(output: W, dataset: &Dataset) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["id", "review_text", "polarity", "kfold", "split"])?;
    for d in dataset.documents() {
        let polarity = (d.polarity as u8).to_string();
        let fold = d.fold.map(|f| f.to_string()).unwrap_or_default();
        let split = d.split.map(|s| s.as_str()).unwrap_or_default();
        w.write_record([d.id.as_str(), d.text.as_str(), &polarity, &fold, split])?;
    }
    w.flush()?;
    Ok(())
}
