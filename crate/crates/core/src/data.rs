//! Observed trial data: one record per randomized subject, CSV ingestion and
//! the pre-estimation diagnostics.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One subject's observed tuple `(A, X₁, X₂, T, status, R, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub a: u8,
    pub x1: f64,
    pub x2: u8,
    /// Follow-up time in years.
    pub time: f64,
    /// 0 = censored, k ≥ 1 = terminal event of cause k.
    pub status: u32,
    pub r: u8,
    pub y: Option<f64>,
}

impl SubjectRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.a > 1 {
            return Err(format!("treatment arm must be 0 or 1, got {}", self.a));
        }
        if self.x2 > 1 {
            return Err(format!("x2 must be 0 or 1, got {}", self.x2));
        }
        if self.r > 1 {
            return Err(format!("r must be 0 or 1, got {}", self.r));
        }
        if !self.x1.is_finite() {
            return Err("x1 must be finite".into());
        }
        if !(self.time.is_finite() && self.time >= 0.0) {
            return Err(format!("time must be finite and non-negative, got {}", self.time));
        }
        match self.y {
            Some(y) if !y.is_finite() => Err("score must be finite when present".into()),
            None if self.r == 1 => Err("r = 1 but the score is missing".into()),
            _ => Ok(()),
        }
    }

    pub fn is_event(&self) -> bool {
        self.status > 0
    }

    /// Score counted as observed at landmark `tau`: requires `r = 1` and
    /// follow-up beyond the landmark.
    pub fn observed_at(&self, tau: f64) -> bool {
        self.r == 1 && self.time > tau && self.y.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<SubjectRecord>,
}

impl Dataset {
    pub fn new(records: Vec<SubjectRecord>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: records.len() });
        }
        for (i, rec) in records.iter().enumerate() {
            rec.validate().map_err(|reason| Error::Validation { row: i + 1, reason })?;
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn arm_counts(&self) -> [usize; 2] {
        let n1 = self.records.iter().filter(|r| r.a == 1).count();
        [self.records.len() - n1, n1]
    }

    /// Same subjects with the arm labels swapped.
    pub fn relabel_arms(&self) -> Dataset {
        let records = self
            .records
            .iter()
            .map(|r| SubjectRecord { a: 1 - r.a, ..r.clone() })
            .collect();
        Dataset { records }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSpec {
    tau: f64,
}

impl LandmarkSpec {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("landmark time must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Column names used to resolve each field in a CSV header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub a: String,
    pub x1: String,
    pub x2: String,
    pub y: String,
    pub time: String,
    pub r: String,
    pub status: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            a: "a".into(),
            x1: "x1".into(),
            x2: "x2".into(),
            y: "y".into(),
            time: "time".into(),
            r: "r".into(),
            status: "status".into(),
        }
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na")
}

pub fn read_csv(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv_from(file, schema)
}

pub fn read_csv_from<R: Read>(reader: R, schema: &ColumnSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let idx = [
        find(&schema.a)?,
        find(&schema.x1)?,
        find(&schema.x2)?,
        find(&schema.y)?,
        find(&schema.time)?,
        find(&schema.r)?,
        find(&schema.status)?,
    ];
    let names = [&schema.a, &schema.x1, &schema.x2, &schema.y, &schema.time, &schema.r, &schema.status];

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let data_row = i + 1;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |k: usize| row.get(idx[k]).unwrap_or("");
        let parse_err = |k: usize| Error::Parse {
            row: data_row,
            line,
            column: names[k].clone(),
            value: cell(k).to_string(),
        };
        let real = |k: usize| cell(k).parse::<f64>().map_err(|_| parse_err(k));
        let int = |k: usize| cell(k).parse::<u32>().map_err(|_| parse_err(k));
        let flag = |k: usize| match int(k)? {
            v @ (0 | 1) => Ok(v as u8),
            _ => Err(parse_err(k)),
        };

        let y = if is_missing(cell(3)) { None } else { Some(real(3)?) };
        let rec = SubjectRecord {
            a: flag(0)?,
            x1: real(1)?,
            x2: flag(2)?,
            y,
            time: real(4)?,
            r: flag(5)?,
            status: int(6)?,
        };
        rec.validate().map_err(|reason| Error::Validation { row: data_row, reason })?;
        records.push(rec);
    }
    Dataset::new(records)
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    write_csv_to(d, std::io::BufWriter::new(file))
}

/// Writes the default column layout `a,x1,x2,y,time,r,status`; missing
/// scores are written as `NA`.
pub fn write_csv_to<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["a", "x1", "x2", "y", "time", "r", "status"])?;
    for rec in d.records() {
        let y = rec.y.map_or_else(|| "NA".to_string(), |v| v.to_string());
        w.write_record([
            rec.a.to_string(),
            rec.x1.to_string(),
            rec.x2.to_string(),
            y,
            rec.time.to_string(),
            rec.r.to_string(),
            rec.status.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv writer>".into(), source })?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmDiagnostics {
    pub n: usize,
    pub observed_scores: usize,
    pub beyond_landmark: usize,
    pub censored_before_landmark: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiagnosticFlag {
    EmptyArm { arm: u8 },
    /// No usable score in the arm: outcome positivity cannot hold empirically.
    NoObservedScores { arm: u8 },
    /// Nobody in the arm is followed past the landmark.
    NoneBeyondLandmark { arm: u8 },
    /// Record marked observed although follow-up ends at or before the landmark.
    ObservedBeforeLandmark { row: usize, time: f64 },
}

impl DiagnosticFlag {
    pub fn is_hard(&self) -> bool {
        !matches!(self, DiagnosticFlag::ObservedBeforeLandmark { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tau: f64,
    pub arms: [ArmDiagnostics; 2],
    pub flags: Vec<DiagnosticFlag>,
}

impl Diagnostics {
    pub fn has_hard_errors(&self) -> bool {
        self.flags.iter().any(DiagnosticFlag::is_hard)
    }
}

pub fn validate_for_estimation(d: &Dataset, lm: &LandmarkSpec) -> Diagnostics {
    let tau = lm.tau();
    let mut arms = [ArmDiagnostics::default(); 2];
    let mut flags = Vec::new();
    for (i, rec) in d.records().iter().enumerate() {
        let arm = &mut arms[rec.a as usize];
        arm.n += 1;
        if rec.observed_at(tau) {
            arm.observed_scores += 1;
        }
        if rec.time > tau {
            arm.beyond_landmark += 1;
        } else if rec.status == 0 {
            arm.censored_before_landmark += 1;
        }
        if rec.r == 1 && rec.time <= tau {
            flags.push(DiagnosticFlag::ObservedBeforeLandmark { row: i + 1, time: rec.time });
        }
    }
    let mut arm_flags = Vec::new();
    for (a, arm) in arms.iter().enumerate() {
        let a = a as u8;
        if arm.n == 0 {
            arm_flags.push(DiagnosticFlag::EmptyArm { arm: a });
            continue;
        }
        if arm.observed_scores == 0 {
            arm_flags.push(DiagnosticFlag::NoObservedScores { arm: a });
        }
        if arm.beyond_landmark == 0 {
            arm_flags.push(DiagnosticFlag::NoneBeyondLandmark { arm: a });
        }
    }
    arm_flags.extend(flags);
    Diagnostics { tau, arms, flags: arm_flags }
}
