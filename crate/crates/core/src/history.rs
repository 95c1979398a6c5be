//! Convergence-history CSV files: one row per outer iteration.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dn::ConvergenceHistory;
use crate::error::{Error, Result};

pub const HEADER: &str =
    "method,theta,h,subdomains,iteration,error_inf,residual_inf,inner_newton_total";

/// One CSV row.
///
/// Errors and residuals are stored rounded to 16 significant digits, the
/// precision of the file format, so writing and parsing back is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub method: String,
    pub theta: Option<f64>,
    pub h: f64,
    pub subdomains: usize,
    pub iteration: usize,
    pub error_inf: f64,
    pub residual_inf: f64,
    pub inner_newton_total: usize,
}

impl HistoryRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        method: &str,
        theta: Option<f64>,
        h: f64,
        subdomains: usize,
        iteration: usize,
        error_inf: f64,
        residual_inf: f64,
        inner_newton_total: usize,
    ) -> Self {
        HistoryRecord {
            method: method.to_string(),
            theta,
            h,
            subdomains,
            iteration,
            error_inf: round_sig16(error_inf),
            residual_inf: round_sig16(residual_inf),
            inner_newton_total,
        }
    }

    /// Rows for every record of a solver history.
    pub fn from_history(
        method: &str,
        theta: Option<f64>,
        h: f64,
        subdomains: usize,
        history: &ConvergenceHistory,
    ) -> Vec<Self> {
        history
            .records
            .iter()
            .map(|r| {
                HistoryRecord::new(
                    method,
                    theta,
                    h,
                    subdomains,
                    r.iteration,
                    r.error_inf,
                    r.residual_inf,
                    r.inner_newton_total,
                )
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.method.is_empty() || self.method.contains([',', '"', '\n', '\r']) {
            return Err(Error::InvalidInput(format!("bad method name {:?}", self.method)));
        }
        let finite = self.h.is_finite() && self.theta.is_none_or(f64::is_finite);
        if !finite {
            return Err(Error::InvalidInput("non-finite theta or h in history record".into()));
        }
        Ok(())
    }

    fn to_line(&self) -> String {
        let theta = self.theta.map(|t| t.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.method,
            theta,
            self.h,
            self.subdomains,
            self.iteration,
            sig16(self.error_inf),
            sig16(self.residual_inf),
            self.inner_newton_total
        )
    }
}

fn sig16(x: f64) -> String {
    format!("{x:.15e}")
}

fn round_sig16(x: f64) -> f64 {
    if x.is_finite() {
        sig16(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

/// The file contents for `records`: header plus one LF-terminated line each.
pub fn render_history_csv(records: &[HistoryRecord]) -> Result<String> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        r.validate()?;
        out.push_str(&r.to_line());
    }
    Ok(out)
}

pub fn write_history_csv(records: &[HistoryRecord], path: &Path) -> Result<()> {
    write_atomic(path, render_history_csv(records)?.as_bytes())
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn parse_history_csv(text: &str) -> Result<Vec<HistoryRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != HEADER {
        return Err(Error::Parse(format!("unexpected header `{header}`")));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse(format!("line {}: {e}", i + 2))))
        .collect()
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_history_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(e: f64) -> HistoryRecord {
        HistoryRecord::new("dn", Some(0.5), 1e-3, 2, 3, e, e / 3.0, 17)
    }

    #[test]
    fn empty_list_is_header_only() {
        assert_eq!(render_history_csv(&[]).unwrap(), format!("{HEADER}\n"));
    }

    #[test]
    fn one_record_is_two_lines() {
        let s = render_history_csv(&[rec(0.1)]).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert_eq!(
            s.lines().nth(1).unwrap(),
            "dn,0.5,0.001,2,3,1.000000000000000e-1,3.333333333333333e-2,17"
        );
    }

    #[test]
    fn missing_theta_is_empty_field() {
        let r = HistoryRecord::new("newton", None, 0.25, 1, 0, 1.0, 2.0, 0);
        let s = render_history_csv(std::slice::from_ref(&r)).unwrap();
        assert!(s.ends_with("newton,,0.25,1,0,1.000000000000000e0,2.000000000000000e0,0\n"));
        assert_eq!(parse_history_csv(&s).unwrap(), vec![r]);
    }

    #[test]
    fn wrong_header_and_bad_row_are_parse_errors() {
        assert!(matches!(parse_history_csv("a,b\n1,2\n"), Err(Error::Parse(_))));
        let bad = format!("{HEADER}\ndn,0.5,0.001,2,x,1,1,1\n");
        match parse_history_csv(&bad) {
            Err(Error::Parse(m)) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_method_name_is_rejected() {
        let mut r = rec(1.0);
        r.method = "a,b".into();
        assert!(render_history_csv(&[r]).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_history_csv(&[rec(2.0)], &p).unwrap();
        assert_eq!(read_history_csv(&p).unwrap(), vec![rec(2.0)]);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
