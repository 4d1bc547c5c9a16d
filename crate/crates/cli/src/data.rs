//! Sequence files: JSONL (one integer array per line) or single-column CSV
//! with blank lines between sequences.

use std::path::Path;

use nml_ddim::family::Sequence;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    /// `.csv` files are CSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Jsonl,
        }
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Vec<usize>>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str::<Vec<usize>>(line)
                .map_err(|e| format!("line {}: expected an array of symbols ({e})", i + 1))
        })
        .collect()
}

pub fn parse_csv(text: &str) -> Result<Vec<Vec<usize>>, String> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        let symbol = cell
            .parse()
            .map_err(|_| format!("line {}: {cell:?} is not a symbol", i + 1))?;
        current.push(symbol);
    }
    if !current.is_empty() {
        out.push(current);
    }
    Ok(out)
}

/// Reads every sequence in `path` and checks it against the alphabet. An
/// empty file, or an empty sequence, is an `EmptySequence` error.
pub fn read_sequences(
    path: &Path,
    format: Option<DataFormat>,
    alphabet_size: usize,
) -> Result<Vec<Sequence>, CliError> {
    let data_error = |message: String| CliError::Data {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| data_error(e.to_string()))?;
    let raw = match format.unwrap_or_else(|| DataFormat::from_path(path)) {
        DataFormat::Jsonl => parse_jsonl(&text),
        DataFormat::Csv => parse_csv(&text),
    }
    .map_err(data_error)?;
    if raw.is_empty() || raw.iter().any(Vec::is_empty) {
        return Err(nml_ddim::Error::EmptySequence.into());
    }
    raw.into_iter()
        .map(|symbols| Sequence::new(symbols, alphabet_size).map_err(CliError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_lines() {
        assert_eq!(
            parse_jsonl("[0,1,1]\n\n[2]\n").unwrap(),
            vec![vec![0, 1, 1], vec![2]]
        );
        assert!(parse_jsonl("[0,-1]").unwrap_err().starts_with("line 1"));
        assert!(parse_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn csv_blocks() {
        assert_eq!(
            parse_csv("0\n1\n\n\n1\n 0 \n").unwrap(),
            vec![vec![0, 1], vec![1, 0]]
        );
        assert!(parse_csv("0\nx\n").unwrap_err().contains("line 2"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(DataFormat::from_path(Path::new("a.CSV")), DataFormat::Csv);
        assert_eq!(
            DataFormat::from_path(Path::new("a.jsonl")),
            DataFormat::Jsonl
        );
        assert_eq!(DataFormat::from_path(Path::new("a")), DataFormat::Jsonl);
    }

    #[test]
    fn symbols_are_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        std::fs::write(&path, "[0,1,2]\n").unwrap();
        let err = read_sequences(&path, None, 2).unwrap_err();
        assert_eq!(err.code(), "OutOfRangeSymbol");
        std::fs::write(&path, "").unwrap();
        assert_eq!(
            read_sequences(&path, None, 2).unwrap_err().code(),
            "EmptySequence"
        );
        std::fs::write(&path, "[]\n").unwrap();
        assert_eq!(
            read_sequences(&path, None, 2).unwrap_err().code(),
            "EmptySequence"
        );
    }
}
