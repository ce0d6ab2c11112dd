//! CSV ingestion of reference datasets.
//!
//! Expected schema (UTF-8, comma-separated, header required):
//! `height_cm, weight_kg, age_years, athlete, sex, resistance_ohm,
//! reactance_ohm, ref_ffm_kg`, plus any number of optional subgroup columns
//! prefixed `group_` (e.g. `group_ethnicity`). `age_years` and `sex` cells
//! may be empty; `sex` takes `m`, `f` or `x`; `athlete` is `0` or `1`.
//! Any other column is rejected.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::{GenderEntry, ImpedanceReading, SubjectProfile};

use super::{DatasetRow, FitDataset};

/// Columns every dataset must provide, in no particular order.
pub const REQUIRED_COLUMNS: [&str; 8] = [
    "height_cm",
    "weight_kg",
    "age_years",
    "athlete",
    "sex",
    "resistance_ohm",
    "reactance_ohm",
    "ref_ffm_kg",
];

/// Prefix of optional subgroup-label columns.
pub const GROUP_COLUMN_PREFIX: &str = "group_";

fn row_err(row: usize, message: impl Into<String>) -> Error {
    Error::Row {
        row,
        message: message.into(),
    }
}

fn parse_f64(text: &str, column: &str, row: usize) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| {
        row_err(
            row,
            format!("column `{column}`: invalid number `{}`", text.trim()),
        )
    })
}

/// Parses a dataset CSV stream. The first bad row aborts ingestion with an
/// error naming that row (rows are numbered from 1, excluding the header).
pub fn ingest_dataset<R: Read>(reader: R) -> Result<FitDataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header row: {e}")))?
        .clone();

    let mut columns: BTreeMap<String, usize> = BTreeMap::new();
    let mut group_columns: Vec<(String, usize)> = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        let name = name.trim();
        if columns.insert(name.to_string(), idx).is_some() {
            return Err(Error::Schema(format!("duplicate column `{name}`")));
        }
        if let Some(group) = name.strip_prefix(GROUP_COLUMN_PREFIX) {
            if group.is_empty() {
                return Err(Error::Schema("empty subgroup column name `group_`".into()));
            }
            group_columns.push((group.to_string(), idx));
        } else if !REQUIRED_COLUMNS.contains(&name) {
            return Err(Error::Schema(format!(
                "unexpected column `{name}` (subgroup columns must be prefixed `{GROUP_COLUMN_PREFIX}`)"
            )));
        }
    }
    for required in REQUIRED_COLUMNS {
        if !columns.contains_key(required) {
            return Err(Error::Schema(format!(
                "missing required column `{required}`"
            )));
        }
    }
    let col = |name: &str| columns[name];

    let mut rows = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| row_err(row, e.to_string()))?;
        let field = |idx: usize| record.get(idx).unwrap_or("");

        let height_cm = parse_f64(field(col("height_cm")), "height_cm", row)?;
        let weight_kg = parse_f64(field(col("weight_kg")), "weight_kg", row)?;
        let age_text = field(col("age_years")).trim();
        let age_years = if age_text.is_empty() {
            None
        } else {
            Some(parse_f64(age_text, "age_years", row)?)
        };
        let athlete = match field(col("athlete")).trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(row_err(
                    row,
                    format!("column `athlete`: expected 0 or 1, got `{other}`"),
                ))
            }
        };
        let gender_entry = GenderEntry::parse(field(col("sex")))
            .map_err(|e| row_err(row, format!("column `sex`: {e}")))?;
        let resistance_ohm = parse_f64(field(col("resistance_ohm")), "resistance_ohm", row)?;
        let reactance_ohm = parse_f64(field(col("reactance_ohm")), "reactance_ohm", row)?;
        let ref_ffm_kg = parse_f64(field(col("ref_ffm_kg")), "ref_ffm_kg", row)?;

        let profile =
            SubjectProfile::new(height_cm, weight_kg, age_years, athlete, gender_entry, None)
                .map_err(|e| row_err(row, e.to_string()))?;
        let reading = ImpedanceReading::new(resistance_ohm, reactance_ohm, None)
            .map_err(|e| row_err(row, e.to_string()))?;
        if !(ref_ffm_kg > 0.0 && ref_ffm_kg <= weight_kg) {
            return Err(row_err(
                row,
                format!("ref_ffm_kg = {ref_ffm_kg} must lie in (0, weight] = (0, {weight_kg}]"),
            ));
        }

        let mut groups = BTreeMap::new();
        for (group, idx) in &group_columns {
            groups.insert(group.clone(), field(*idx).trim().to_string());
        }
        rows.push(DatasetRow {
            profile,
            reading,
            ref_ffm_kg,
            groups,
        });
    }
    if rows.is_empty() {
        return Err(Error::Input("dataset contains no data rows".into()));
    }
    Ok(FitDataset {
        rows,
        description: None,
        sex_provenance: None,
    })
}

/// Reads and parses a dataset CSV file.
pub fn ingest_dataset_path(path: &Path) -> Result<FitDataset> {
    let file = std::fs::File::open(path)?;
    ingest_dataset(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "height_cm,weight_kg,age_years,athlete,sex,resistance_ohm,reactance_ohm,ref_ffm_kg";

    #[test]
    fn two_row_happy_path() {
        let csv = format!("{HEADER}\n170,70,35,0,m,500,50,52.7\n160.5,61,,1,f,620,45,44.1\n");
        let dataset = ingest_dataset(csv.as_bytes()).unwrap();
        assert_eq!(dataset.rows.len(), 2);
        assert_eq!(dataset.rows[0].profile.age_years, Some(35.0));
        assert_eq!(dataset.rows[1].profile.age_years, None);
        assert!(dataset.rows[1].profile.athlete);
        assert_eq!(dataset.rows[1].profile.gender_entry, GenderEntry::Female);
    }

    #[test]
    fn missing_required_column_is_schema_error() {
        let csv = "height_cm,weight_kg,age_years,athlete,sex,resistance_ohm,reactance_ohm\n\
                   170,70,35,0,m,500,50\n";
        match ingest_dataset(csv.as_bytes()) {
            Err(Error::Schema(message)) => assert!(message.contains("ref_ffm_kg")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_names_the_row() {
        let csv = format!("{HEADER}\n170,70,35,0,m,500,50,52.7\n170,70,35,0,m,abc,50,52.7\n");
        match ingest_dataset(csv.as_bytes()) {
            Err(Error::Row { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("resistance_ohm"));
                assert!(message.contains("abc"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn unexpected_column_is_rejected() {
        let csv = format!("{HEADER},favorite_color\n170,70,35,0,m,500,50,52.7,teal\n");
        assert!(matches!(
            ingest_dataset(csv.as_bytes()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn group_columns_are_collected() {
        let csv = format!(
            "{HEADER},group_ethnicity\n170,70,35,0,m,500,50,52.7,A\n165,65,30,0,f,550,48,44.0,\n"
        );
        let dataset = ingest_dataset(csv.as_bytes()).unwrap();
        assert_eq!(dataset.rows[0].groups["ethnicity"], "A");
        assert_eq!(dataset.rows[1].groups["ethnicity"], "");
    }

    #[test]
    fn empty_sex_maps_to_unspecified() {
        let csv = format!("{HEADER}\n170,70,,0,,500,50,52.7\n");
        let dataset = ingest_dataset(csv.as_bytes()).unwrap();
        assert_eq!(
            dataset.rows[0].profile.gender_entry,
            GenderEntry::NonbinaryOrUnspecified
        );
    }

    #[test]
    fn ref_ffm_must_not_exceed_weight() {
        let csv = format!("{HEADER}\n170,70,35,0,m,500,50,71.0\n");
        match ingest_dataset(csv.as_bytes()) {
            Err(Error::Row { row: 1, message }) => assert!(message.contains("ref_ffm_kg")),
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn header_only_file_is_an_input_error() {
        let csv = format!("{HEADER}\n");
        assert!(matches!(
            ingest_dataset(csv.as_bytes()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn bad_athlete_flag_is_a_row_error() {
        let csv = format!("{HEADER}\n170,70,35,yes,m,500,50,52.7\n");
        assert!(matches!(
            ingest_dataset(csv.as_bytes()),
            Err(Error::Row { row: 1, .. })
        ));
    }
}
