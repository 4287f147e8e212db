//! The imbalanced benchmark set: binary tasks with only continuous columns,
//! at least 1000 rows and an imbalance ratio of at least 1.5.

use serde::{Deserialize, Serialize};

use super::dataset::ImbalanceSummary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: String,
    pub expected_ir: f64,
    pub expected_rows: usize,
    pub expected_cols: usize,
    pub source_tags: Vec<String>,
    pub openml_id: Option<u32>,
}

/// Allowed absolute deviation of the imbalance ratio in the cross-check.
pub const IR_TOLERANCE: f64 = 0.05;
pub const MIN_ROWS: usize = 1000;
pub const MIN_IR: f64 = 1.5;

const OPENML_100: &str = "OpenML-100";
const OPENML_CC18: &str = "OpenML-CC18";
const IMBLEARN: &str = "imblearn";

// (name, IR, rows, columns, sources, OpenML id)
const TABLE: [(&str, f64, usize, usize, &[&str], Option<u32>); 21] = [
    ("spambase", 1.54, 4601, 55, &[OPENML_100, OPENML_CC18], Some(44)),
    ("MagicTelescope", 1.84, 19020, 10, &[OPENML_100], Some(1120)),
    ("steel-plates-fault", 1.88, 1941, 13, &[OPENML_100, OPENML_CC18], Some(1504)),
    ("qsar-biodeg", 1.96, 1055, 17, &[OPENML_100, OPENML_CC18], Some(1494)),
    ("phoneme", 2.41, 5404, 5, &[OPENML_100], Some(1489)),
    ("jm1", 4.17, 10880, 17, &[OPENML_100, OPENML_CC18], Some(1053)),
    ("SpeedDating", 4.63, 1048, 18, &[OPENML_100], Some(40536)),
    ("kc1", 5.47, 2109, 17, &[OPENML_100, OPENML_CC18], Some(1067)),
    ("churn", 6.07, 5000, 8, &[OPENML_CC18], Some(40701)),
    ("pc4", 7.19, 1458, 12, &[OPENML_100, OPENML_CC18], Some(1049)),
    ("pc3", 8.77, 1563, 14, &[OPENML_100, OPENML_CC18], Some(1050)),
    ("abalone", 9.68, 4177, 7, &[IMBLEARN], None),
    ("us_crime", 12.29, 1994, 100, &[IMBLEARN], None),
    ("yeast_ml8", 12.58, 2417, 103, &[IMBLEARN], None),
    ("pc1", 13.40, 1109, 17, &[OPENML_100, OPENML_CC18], Some(1068)),
    ("ozone-level-8hr", 14.84, 2534, 72, &[IMBLEARN, OPENML_100, OPENML_CC18], Some(1487)),
    ("wilt", 17.54, 4839, 5, &[OPENML_100, OPENML_CC18], Some(40983)),
    ("wine_quality", 25.77, 4898, 11, &[IMBLEARN], None),
    ("yeast_me2", 28.10, 1484, 8, &[IMBLEARN], None),
    ("mammography", 42.01, 11183, 6, &[IMBLEARN], None),
    ("abalone_19", 129.53, 4177, 7, &[IMBLEARN], None),
];

pub fn registry() -> Vec<RegistryEntry> {
    TABLE
        .iter()
        .map(|&(name, ir, rows, cols, tags, id)| RegistryEntry {
            name: name.to_string(),
            expected_ir: ir,
            expected_rows: rows,
            expected_cols: cols,
            source_tags: tags.iter().map(|t| t.to_string()).collect(),
            openml_id: id,
        })
        .collect()
}

pub fn lookup(name: &str) -> Result<RegistryEntry> {
    registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("'{name}' is not in the benchmark registry")))
}

impl RegistryEntry {
    /// Compare an observed summary against the table values.
    pub fn cross_check(&self, summary: &ImbalanceSummary) -> Result<()> {
        let mut problems = Vec::new();
        if summary.n_rows != self.expected_rows {
            problems.push(format!("rows {} != {}", summary.n_rows, self.expected_rows));
        }
        if summary.n_cols != self.expected_cols {
            problems.push(format!("columns {} != {}", summary.n_cols, self.expected_cols));
        }
        if (summary.imbalance_ratio - self.expected_ir).abs() > IR_TOLERANCE {
            problems.push(format!(
                "IR {:.3} differs from {:.2} by more than {IR_TOLERANCE}",
                summary.imbalance_ratio, self.expected_ir
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::RegistryDrift {
                name: self.name.clone(),
                detail: problems.join("; "),
            })
        }
    }
}

/// Benchmark curation rule: enough rows and a minimum imbalance ratio.
pub fn satisfies_curation(summary: &ImbalanceSummary) -> bool {
    summary.n_rows >= MIN_ROWS && summary.imbalance_ratio >= MIN_IR
}

/// Table export: the four table columns plus source tags.
pub fn registry_csv() -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Dataset name", "IR", "Rows", "Columns", "Source"])?;
    for e in registry() {
        w.write_record([
            e.name.clone(),
            format!("{:.2}", e.expected_ir),
            e.expected_rows.to_string(),
            e.expected_cols.to_string(),
            e.source_tags.join(", "),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidData(e.to_string()))
}
