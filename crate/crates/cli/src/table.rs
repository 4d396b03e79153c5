//! CSV tables written and read by the commands.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use anyhow::{bail, Context, Result};
use sdw_core::optimizer::{EnergyReport, HInfluence, ScanRow};

pub const SCAN_HEADER: &str =
    "r_s,h,eps_star,eps0,eps_ratio,delta_e_fg,delta_e_sdw,delta_e_total,scaled_energy,iterations,residual,error";
pub const INFLUENCE_HEADER: &str = "r_s,energy_ratio,eps_ratio,delta_e_half,delta_e_zero,error";
pub const FG_HEADER: &str =
    "r_s,eps,h,delta_e_fg_leading,delta_e_fg_quadrature,quadrature_error,status";

/// Twelve significant digits, scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

/// Errors go in the last column; commas would break the row.
pub fn clean(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

pub fn report_row(r: &EnergyReport, error: &str) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        num(r.r_s),
        num(r.h),
        num(r.eps_star),
        num(r.eps0),
        num(r.eps_ratio),
        num(r.delta_e_fg),
        num(r.delta_e_sdw),
        num(r.delta_e_total),
        num(r.scaled_energy),
        r.iterations,
        num(r.residual),
        clean(error)
    )
}

pub fn scan_row(row: &ScanRow) -> String {
    match &row.result {
        Ok(r) => report_row(r, ""),
        Err(e) => format!(
            "{},{},,{},,,,,,,,{}",
            num(row.r_s),
            num(row.h),
            num(row.eps0),
            clean(&e.to_string())
        ),
    }
}

pub fn influence_row(r_s: f64, result: &sdw_core::Result<HInfluence>) -> String {
    match result {
        Ok(r) => format!(
            "{},{},{},{},{},",
            num(r_s),
            num(r.energy_ratio),
            num(r.eps_ratio),
            num(r.half.delta_e_total),
            num(r.zero.delta_e_total)
        ),
        Err(e) => format!("{},,,,,{}", num(r_s), clean(&e.to_string())),
    }
}

/// Loosely typed table read back for plotting.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let columns = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record?.iter().map(str::to_string).collect());
        }
        Ok(Self { columns, rows })
    }

    pub fn require(&self, names: &[&str]) -> Result<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        names
            .iter()
            .map(|n| {
                index
                    .get(n)
                    .copied()
                    .with_context(|| format!("input is missing column '{n}'"))
            })
            .collect()
    }

    /// Numeric cell; empty or unparsable cells are `None`.
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row]
            .get(col)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| v.is_finite())
    }
}

/// Reference overlay rows `(label, r_s, value)`; a header line is optional.
pub fn read_reference<R: Read>(input: R) -> Result<Vec<(String, f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            bail!("reference line {}: expected label,r_s,value", n + 1);
        }
        let (r, v) = (record[1].parse::<f64>(), record[2].parse::<f64>());
        match (r, v) {
            (Ok(r), Ok(v)) if r > 0.0 && r.is_finite() && v.is_finite() => {
                out.push((record[0].to_string(), r, v))
            }
            (Err(_), _) if n == 0 => continue,
            _ => bail!("reference line {}: need r_s > 0 and a finite value", n + 1),
        }
    }
    Ok(out)
}

pub fn write_lines<W: Write>(mut out: W, header: &str, rows: &[String]) -> io::Result<()> {
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()
}
