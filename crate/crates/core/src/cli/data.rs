use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;

use super::CliError;

/// A CSV table with a header row. Cells are kept as text; a column is
/// numeric when every cell parses as a real number.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    names: Vec<String>,
    cells: Vec<Vec<String>>,
    numeric: Vec<bool>,
}

impl Table {
    pub fn nrows(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_numeric(&self, name: &str) -> Result<bool, CliError> {
        Ok(self.numeric[self.index(name)?])
    }

    fn index(&self, name: &str) -> Result<usize, CliError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::usage(format!("unknown covariate `{name}`: no such column in the data")))
    }

    pub fn text(&self, name: &str) -> Result<&[String], CliError> {
        Ok(&self.cells[self.index(name)?])
    }

    /// Column as reals; the first non-numeric cell is reported with its location.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let col = self.index(name)?;
        self.cells[col]
            .iter()
            .enumerate()
            .map(|(row, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    CliError::usage(format!(
                        "row {}, column `{name}`: `{cell}` is not a finite number",
                        row + 1
                    ))
                })
            })
            .collect()
    }

    /// Dummy coding with the first label in sorted order as reference.
    /// Returns the design, the column labels and the reference level.
    pub fn dummy(&self, name: &str) -> Result<(DMatrix<f64>, Vec<String>, String), CliError> {
        let values = self.text(name)?;
        let levels: Vec<&String> = values.iter().collect::<BTreeSet<_>>().into_iter().collect();
        if levels.len() < 2 {
            return Err(CliError::usage(format!("categorical column `{name}` has fewer than two levels")));
        }
        let reference = levels[0].clone();
        let kept = &levels[1..];
        let design = DMatrix::from_fn(values.len(), kept.len(), |i, j| (values[i] == *kept[j]) as u8 as f64);
        let labels = kept.iter().map(|l| format!("{name}[{l}]")).collect();
        Ok((design, labels, reference))
    }
}

pub fn parse_table(text: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::usage(format!("malformed CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::usage("CSV has no header row"));
    }
    if let Some(blank) = names.iter().position(String::is_empty) {
        return Err(CliError::usage(format!("column {} has an empty name", blank + 1)));
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::usage(format!("malformed CSV at row {}: {e}", row + 1)))?;
        for (col, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(CliError::usage(format!(
                    "row {}, column `{}`: missing value",
                    row + 1,
                    names[col]
                )));
            }
            cells[col].push(cell.to_string());
        }
    }
    let numeric = cells
        .iter()
        .map(|c| !c.is_empty() && c.iter().all(|v| v.parse::<f64>().is_ok()))
        .collect();
    Ok(Table { names, cells, numeric })
}

/// Read a UTF-8 CSV file with a header row.
pub fn parse_data(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read data {}: {e}", path.display())))?;
    parse_table(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_two_columns() {
        let t = parse_table("y,z\n1,0.5\n2,0.25\n3,1e-3\n").unwrap();
        assert_eq!((t.nrows(), t.ncols()), (3, 2));
        assert_eq!(t.numeric("z").unwrap(), vec![0.5, 0.25, 1e-3]);
    }

    #[test]
    fn missing_cell_names_location() {
        let err = parse_table("y,z\n1,2\n3,\n").unwrap_err();
        assert!(err.message.contains("row 2"), "{}", err.message);
        assert!(err.message.contains("`z`"));
    }

    #[test]
    fn non_numeric_in_numeric_use() {
        let t = parse_table("y,g\n1,a\n2,b\n").unwrap();
        assert!(!t.is_numeric("g").unwrap());
        let err = t.numeric("g").unwrap_err();
        assert!(err.message.contains("row 1"));
    }

    #[test]
    fn dummy_coding_uses_sorted_reference() {
        let t = parse_table("y,g\n1,b\n2,a\n3,b\n").unwrap();
        let (d, labels, reference) = t.dummy("g").unwrap();
        assert_eq!(reference, "a");
        assert_eq!(labels, vec!["g[b]".to_string()]);
        assert_eq!(d.column(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_table("y,z\n1,2,3\n").is_err());
        assert!(parse_table("y,z\n1\n").is_err());
    }

    #[test]
    fn unknown_column_is_usage_error() {
        let t = parse_table("y\n1\n").unwrap();
        assert_eq!(t.numeric("nope").unwrap_err().code, 2);
    }
}
