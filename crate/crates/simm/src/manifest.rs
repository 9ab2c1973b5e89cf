//! Machine-readable run outputs: the JSON manifest, CSV records, and the
//! square-tree dump.
//!
//! Floating-point values serialize with shortest round-trip digits, so a
//! manifest parses back to bit-identical doubles and identical runs produce
//! byte-identical files. Wall time is reported on stderr by the CLI, not
//! here, for the same reason.

use crate::scalar::Scalar;
use crate::search::{EigenvalueRecord, MarkedSquare, SearchConfig, SearchOutcome, SearchStats};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct InputEcho {
    pub a: String,
    pub b: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordOut<S: Scalar> {
    pub re: S,
    pub im: S,
    pub box_size: S,
    pub shift_re: S,
    pub shift_im: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl<S: Scalar> RecordOut<S> {
    fn from_record(r: &EigenvalueRecord<S>) -> Self {
        Self {
            re: r.value.re,
            im: r.value.im,
            box_size: r.box_size,
            shift_re: r.shift.re,
            shift_im: r.shift.im,
            multiplicity: r.multiplicity,
            warning: r.warning.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<S: Scalar> {
    pub input: InputEcho,
    pub config: SearchConfig<S>,
    pub version: String,
    pub records: Vec<RecordOut<S>>,
    pub stats: SearchStats,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl<S: Scalar> RunManifest<S> {
    pub fn new(input: InputEcho, config: &SearchConfig<S>, outcome: &SearchOutcome<S>) -> Self {
        Self {
            input,
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            records: outcome.records.iter().map(RecordOut::from_record).collect(),
            stats: outcome.stats.clone(),
            warnings: outcome.warnings.clone(),
            aborted: outcome.aborted.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialization");
        s.push('\n');
        s
    }
}

/// CSV rows `re,im,box_size,multiplicity`, one line per record.
pub fn records_to_csv<S: Scalar>(records: &[EigenvalueRecord<S>]) -> String {
    let mut out = String::from("re,im,box_size,multiplicity\n");
    for r in records {
        let mult = r.multiplicity.map(|m| m.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.value.re, r.value.im, r.box_size, mult
        ));
    }
    out
}

/// Newline-delimited `level,center_re,center_im,side,status` for every
/// visited square.
pub fn tree_to_text<S: Scalar>(tree: &[MarkedSquare<S>]) -> String {
    let mut out = String::from("level,center_re,center_im,side,status\n");
    for m in tree {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.level,
            m.square.center.re,
            m.square.center.im,
            m.square.side,
            m.status.as_str()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use crate::search::{Region, SquareStatus};

    #[test]
    fn csv_contains_all_records_and_header() {
        let records = vec![
            EigenvalueRecord {
                value: cx::<f64>(0.25, -0.5),
                box_size: 1e-6,
                shift: cx(0.5, 0.0),
                multiplicity: Some(2),
                warning: None,
            },
            EigenvalueRecord {
                value: cx(0.75, 0.5),
                box_size: 2e-6,
                shift: cx(0.5, 0.0),
                multiplicity: None,
                warning: None,
            },
        ];
        let csv = records_to_csv(&records);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "re,im,box_size,multiplicity");
        assert_eq!(lines[1], "0.25,-0.5,0.000001,2");
        assert_eq!(lines[2], "0.75,0.5,0.000002,");
    }

    #[test]
    fn manifest_roundtrips_through_json() {
        let config = SearchConfig::new(Region::new(0.0f64, 1.0, -0.5, 0.5));
        let outcome = SearchOutcome {
            records: vec![EigenvalueRecord {
                value: cx(0.123456789012345678, 1e-300),
                box_size: 9.5367431640625e-7,
                shift: cx(0.5, 0.0),
                multiplicity: None,
                warning: None,
            }],
            stats: SearchStats::default(),
            warnings: vec![],
            tree: vec![],
            aborted: None,
        };
        let manifest = RunManifest::new(
            InputEcho {
                a: "a.mtx".into(),
                b: None,
            },
            &config,
            &outcome,
        );
        let json = manifest.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        // lossless double round-trip
        assert_eq!(
            parsed["records"][0]["re"].as_f64().unwrap(),
            0.123456789012345678f64
        );
        assert_eq!(parsed["records"][0]["im"].as_f64().unwrap(), 1e-300);
        assert_eq!(
            parsed["records"][0]["box_size"].as_f64().unwrap(),
            9.5367431640625e-7
        );
        assert_eq!(parsed["config"]["m"].as_u64().unwrap(), 50);
        // records sorted lexicographically is the caller's contract; the
        // manifest itself must preserve order
        assert_eq!(parsed["records"].as_array().unwrap().len(), 1);
        assert!(parsed.get("stats").is_some());
        // wall time never serializes
        assert!(parsed["stats"].get("wall_time_secs").is_none());
    }

    #[test]
    fn tree_dump_format() {
        let tree = vec![MarkedSquare {
            square: crate::contour::Square::new(cx::<f64>(0.125, -0.375), 0.25),
            level: 0,
            status: SquareStatus::Discarded,
            shift: None,
            warned: false,
        }];
        let text = tree_to_text(&tree);
        assert_eq!(
            text,
            "level,center_re,center_im,side,status\n0,0.125,-0.375,0.25,discarded\n"
        );
    }
}
