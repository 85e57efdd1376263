//! Delimited-file ingestion of city-level values and province summaries.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::SKPoint;

/// Number of provinces in the shipped province summary.
pub const PROVINCE_COUNT: usize = 110;

/// Groups below this size are accepted but flagged; kurtosis of so few values is vacuous.
pub const SMALL_GROUP: usize = 4;

/// Province summary fixture: ATI in absolute EUR, population, number of cities (2011).
pub const PROVINCE_FIXTURE_CSV: &str = include_str!("../data/provinces.csv");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityRecord {
    pub province_code: String,
    pub city_name: String,
    pub value: f64,
}

/// Values keyed by group, in file order within each group.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupedDataset {
    pub groups: BTreeMap<String, Vec<f64>>,
    pub value_label: String,
}

impl GroupedDataset {
    pub fn from_records(records: &[CityRecord], value_label: impl Into<String>) -> Self {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in records {
            groups
                .entry(r.province_code.clone())
                .or_default()
                .push(r.value);
        }
        GroupedDataset {
            groups,
            value_label: value_label.into(),
        }
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn row_count(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    /// Keys of groups with fewer than [`SMALL_GROUP`] values.
    pub fn small_groups(&self) -> Vec<&str> {
        self.groups
            .iter()
            .filter(|(_, v)| v.len() < SMALL_GROUP)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// All values in group-key order.
    pub fn pooled_values(&self) -> Vec<f64> {
        self.groups.values().flatten().copied().collect()
    }

    /// Writes `province,city,value` rows; city names are synthesized as `<group>-<index>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["province", "city", "value"])?;
        for (key, values) in &self.groups {
            for (i, v) in values.iter().enumerate() {
                w.write_record([key.clone(), format!("{key}-{i}"), format!("{v}")])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Which header names carry the group key, the value and (optionally) the city name.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub group: String,
    pub value: String,
    pub city: Option<String>,
}

impl ColumnMap {
    pub fn new(group: impl Into<String>, value: impl Into<String>) -> Self {
        ColumnMap {
            group: group.into(),
            value: value.into(),
            city: None,
        }
    }

    pub fn with_city(mut self, city: impl Into<String>) -> Self {
        self.city = Some(city.into());
        self
    }
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap::new("province", "value")
    }
}

fn detect_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
        })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error_to_parse(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("input is not valid UTF-8: {e}"),
    })
}

fn parse_value(field: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric value {field:?} in column `{column}`"),
    })?;
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("value {field:?} in column `{column}` must be finite and nonnegative"),
        });
    }
    Ok(v)
}

/// Parses city rows from CSV (or TSV) text.
pub fn read_city_records(text: &str, columns: &ColumnMap) -> Result<Vec<CityRecord>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv_reader(text);
    let headers = reader.headers().map_err(csv_error_to_parse)?.clone();
    let group_idx = column_index(&headers, &columns.group)?;
    let value_idx = column_index(&headers, &columns.value)?;
    let city_idx = columns
        .city
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error_to_parse)?;
        let line = record_line(&row);
        let group = row.get(group_idx).unwrap_or("");
        if group.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("empty group key in column `{}`", columns.group),
            });
        }
        let value = parse_value(row.get(value_idx).unwrap_or(""), line, &columns.value)?;
        let city_name = city_idx
            .and_then(|i| row.get(i))
            .unwrap_or_default()
            .to_string();
        records.push(CityRecord {
            province_code: group.to_string(),
            city_name,
            value,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(records)
}

pub fn parse_city_text(text: &str, columns: &ColumnMap) -> Result<GroupedDataset> {
    let records = read_city_records(text, columns)?;
    Ok(GroupedDataset::from_records(
        &records,
        columns.value.clone(),
    ))
}

/// Reads a headered delimited file and groups its values by the group column.
pub fn parse_city_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<GroupedDataset> {
    parse_city_text(&read_text(path.as_ref())?, columns)
}

fn parse_real(field: &str, line: u64, column: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            message: format!("non-numeric value {field:?} in column `{column}`"),
        }),
    }
}

/// Every value of one numeric column (signs allowed), in file order.
pub fn read_numeric_column(text: &str, column: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv_reader(strip_comments(text));
    let headers = reader.headers().map_err(csv_error_to_parse)?.clone();
    let idx = column_index(&headers, column)?;
    let mut values = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error_to_parse)?;
        values.push(parse_real(
            row.get(idx).unwrap_or(""),
            record_line(&row),
            column,
        )?);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(values)
}

/// Skips leading `#` comment lines.
fn strip_comments(text: &str) -> &str {
    let mut rest = text.strip_prefix('\u{feff}').unwrap_or(text);
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, tail)| tail);
    }
    rest
}

/// Reads `group,s,k,n` rows as written by the stats command.
pub fn parse_sk_points(text: &str) -> Result<Vec<SKPoint>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv_reader(strip_comments(text));
    let headers = reader.headers().map_err(csv_error_to_parse)?.clone();
    let idx = [
        column_index(&headers, "group")?,
        column_index(&headers, "s")?,
        column_index(&headers, "k")?,
        column_index(&headers, "n")?,
    ];
    let mut points = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error_to_parse)?;
        let line = record_line(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        let n = field(3).parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("non-integer value {:?} in column `n`", field(3)),
        })?;
        points.push(SKPoint {
            group_key: field(0).to_string(),
            s: parse_real(field(1), line, "s")?,
            k: parse_real(field(2), line, "k")?,
            n,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(points)
}

pub fn read_text_file(path: impl AsRef<Path>) -> Result<String> {
    read_text(path.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProvinceSummaryRow {
    pub province_code: String,
    pub ati_total: f64,
    pub n_inhab: u64,
    pub n_cities: u64,
}

fn parse_count(field: &str, line: u64, column: &str) -> Result<u64> {
    let n: u64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-integer value {field:?} in column `{column}`"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line,
            message: format!("column `{column}` must be at least 1"),
        });
    }
    Ok(n)
}

/// Parses `province,ati_eur,population,n_cities` rows. With `strict`, the row count
/// must equal [`PROVINCE_COUNT`].
pub fn parse_province_summary(text: &str, strict: bool) -> Result<Vec<ProvinceSummaryRow>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut reader = csv_reader(text);
    let headers = reader.headers().map_err(csv_error_to_parse)?.clone();
    let idx = [
        column_index(&headers, "province")?,
        column_index(&headers, "ati_eur")?,
        column_index(&headers, "population")?,
        column_index(&headers, "n_cities")?,
    ];
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error_to_parse)?;
        let line = record_line(&row);
        let field = |i: usize| row.get(idx[i]).unwrap_or("");
        if field(0).is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty province code".into(),
            });
        }
        rows.push(ProvinceSummaryRow {
            province_code: field(0).to_string(),
            ati_total: parse_value(field(1), line, "ati_eur")?,
            n_inhab: parse_count(field(2), line, "population")?,
            n_cities: parse_count(field(3), line, "n_cities")?,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if strict && rows.len() != PROVINCE_COUNT {
        return Err(Error::Integrity(format!(
            "expected {PROVINCE_COUNT} province rows, found {}",
            rows.len()
        )));
    }
    Ok(rows)
}

pub fn load_province_summary(
    path: impl AsRef<Path>,
    strict: bool,
) -> Result<Vec<ProvinceSummaryRow>> {
    parse_province_summary(&read_text(path.as_ref())?, strict)
}

/// The shipped 110-row province fixture.
pub fn province_fixture() -> Vec<ProvinceSummaryRow> {
    parse_province_summary(PROVINCE_FIXTURE_CSV, true).expect("shipped fixture is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_rows_by_key_in_file_order() {
        let text = "province,city,value\nAA,c1,1\nAA,c2,2\nBB,c3,5\n";
        let ds = parse_city_text(text, &ColumnMap::default().with_city("city")).unwrap();
        assert_eq!(ds.groups.len(), 2);
        assert_eq!(ds.groups["AA"], vec![1.0, 2.0]);
        assert_eq!(ds.groups["BB"], vec![5.0]);
        assert_eq!(ds.row_count(), 3);
        assert_eq!(ds.small_groups(), vec!["AA", "BB"]);
    }

    #[test]
    fn tab_delimited_and_crlf() {
        let text = "province\tcity\tvalue\r\nAA\tc1\t1.5\r\nAA\tc2\t2\r\n";
        let ds = parse_city_text(text, &ColumnMap::default()).unwrap();
        assert_eq!(ds.groups["AA"], vec![1.5, 2.0]);
    }

    #[test]
    fn missing_column_is_named() {
        let text = "prov,city,value\nAA,c1,1\n";
        match parse_city_text(text, &ColumnMap::default()) {
            Err(Error::MissingColumn { column }) => assert_eq!(column, "province"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_value_reports_line() {
        let text = "province,city,value\nAA,c1,1\nAA,c2,abc\n";
        match parse_city_text(text, &ColumnMap::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_value_rejected() {
        let text = "province,city,value\nAA,c1,-1\n";
        assert!(matches!(
            parse_city_text(text, &ColumnMap::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            parse_city_text("", &ColumnMap::default()),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            parse_city_text("province,city,value\n", &ColumnMap::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn fixture_integrity() {
        let rows = province_fixture();
        assert_eq!(rows.len(), PROVINCE_COUNT);
        assert_eq!(rows.iter().map(|r| r.n_cities).sum::<u64>(), 8092);
        let rm = rows.iter().find(|r| r.province_code == "RM").unwrap();
        assert_eq!(rm.ati_total, 59.68562e9);
        assert_eq!(rm.n_inhab, 4_042_676);
        assert_eq!(rm.n_cities, 121);
        let ts = rows.iter().find(|r| r.province_code == "TS").unwrap();
        assert_eq!(ts.n_cities, 6);
        assert_eq!(rows.iter().map(|r| r.n_cities).min(), Some(6));
        let vs = rows.iter().find(|r| r.province_code == "VS").unwrap();
        assert_eq!(vs.ati_total, 0.342572e9);
    }

    #[test]
    fn fixture_population_total() {
        let total: u64 = province_fixture().iter().map(|r| r.n_inhab).sum();
        assert_eq!(total, 59_570_581);
    }

    #[test]
    fn fixture_grouped_by_province_gives_singletons() {
        let ds =
            parse_city_text(PROVINCE_FIXTURE_CSV, &ColumnMap::new("province", "ati_eur")).unwrap();
        assert_eq!(ds.group_count(), 110);
        assert!(ds.groups.values().all(|v| v.len() == 1));
    }

    #[test]
    fn strict_row_count() {
        let text = "province,ati_eur,population,n_cities\nAA,1,2,3\n";
        assert!(matches!(
            parse_province_summary(text, true),
            Err(Error::Integrity(_))
        ));
        assert_eq!(parse_province_summary(text, false).unwrap().len(), 1);
    }

    #[test]
    fn zero_city_count_rejected() {
        let text = "province,ati_eur,population,n_cities\nAA,1,2,0\n";
        assert!(matches!(
            parse_province_summary(text, false),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn write_then_parse_is_stable() {
        let text = "province,city,value\nAA,c1,1.25\nBB,c3,5e9\nAA,c2,0.1\n";
        let first = parse_city_text(text, &ColumnMap::default()).unwrap();
        let mut buf = Vec::new();
        first.write_csv(&mut buf).unwrap();
        let second =
            parse_city_text(std::str::from_utf8(&buf).unwrap(), &ColumnMap::default()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn sk_points_roundtrip_text() {
        let text = "group,s,k,n\nAA,-0.5,2.25,7\nBB,1.0,4.0,12\n";
        let pts = parse_sk_points(text).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].s, -0.5);
        assert_eq!(pts[1].n, 12);
        assert!(matches!(
            parse_sk_points("group,s,n\nA,1,2\n"),
            Err(Error::MissingColumn { .. })
        ));
    }

    #[test]
    fn numeric_column_allows_signs_and_comments() {
        let text = "# a=1\nx,y\n1,-2.5\n2,3\n";
        assert_eq!(read_numeric_column(text, "y").unwrap(), vec![-2.5, 3.0]);
        assert!(matches!(
            read_numeric_column("x\nfoo\n", "x"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
