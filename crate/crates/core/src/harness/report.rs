//! RMSE report and its CSV form.
//!
//! Columns: `snr_db, trials, rmse_r_m, rmse_theta_deg, rmse_phi_deg,
//! rmse_vr_mps, rmse_omega_theta_degps, rmse_omega_phi_degps, failures,
//! seed`. An RMSE with no successful trial is an empty field.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: [&str; 10] = [
    "snr_db",
    "trials",
    "rmse_r_m",
    "rmse_theta_deg",
    "rmse_phi_deg",
    "rmse_vr_mps",
    "rmse_omega_theta_degps",
    "rmse_omega_phi_degps",
    "failures",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub snr_db: f64,
    pub trials: usize,
    /// r (m), theta (deg), phi (deg), v_r (m/s), omega_theta (deg/s), omega_phi (deg/s).
    pub rmse: [Option<f64>; 6],
    pub failures: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RmseReport {
    pub rows: Vec<ReportRow>,
}

pub fn write_report_to<W: Write>(report: &RmseReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for r in &report.rows {
        let mut rec = vec![r.snr_db.to_string(), r.trials.to_string()];
        rec.extend(r.rmse.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        rec.push(r.failures.to_string());
        rec.push(r.seed.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report(report: &RmseReport, path: &Path) -> Result<()> {
    write_report_to(report, std::fs::File::create(path)?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec[i]
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad value {:?} in column {}", &rec[i], HEADER[i])))
}

pub fn read_report_from<R: Read>(r: R) -> Result<RmseReport> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::InvalidParameter(format!("unexpected report header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let mut rmse = [None; 6];
        for (k, slot) in rmse.iter_mut().enumerate() {
            if !rec[2 + k].is_empty() {
                *slot = Some(field(&rec, 2 + k)?);
            }
        }
        rows.push(ReportRow {
            snr_db: field(&rec, 0)?,
            trials: field(&rec, 1)?,
            rmse,
            failures: field(&rec, 8)?,
            seed: field(&rec, 9)?,
        });
    }
    Ok(RmseReport { rows })
}

pub fn read_report(path: &Path) -> Result<RmseReport> {
    read_report_from(std::fs::File::open(path)?)
}
