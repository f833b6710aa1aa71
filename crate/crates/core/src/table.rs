//! Time series of expectation values, the common output of every solver.

use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{QError, Result};
use crate::qobj::Qobj;

/// Expectation values on a time grid, or full states when no observables
/// were requested.
#[derive(Clone, Debug, Default)]
pub struct ExpectationTable {
    pub tlist: Vec<f64>,
    pub names: Vec<String>,
    /// `columns[k][i]` is observable `k` at `tlist[i]`.
    pub columns: Vec<Vec<C64>>,
    pub states: Option<Vec<Qobj>>,
    /// State at the last output time.
    pub final_state: Option<Qobj>,
}

impl ExpectationTable {
    pub fn new(tlist: Vec<f64>, names: Vec<String>, columns: Vec<Vec<C64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(QError::Argument(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != tlist.len()) {
            return Err(QError::Argument(format!(
                "column of length {} on a grid of {} times",
                c.len(),
                tlist.len()
            )));
        }
        Ok(ExpectationTable {
            tlist,
            names,
            columns,
            states: None,
            final_state: None,
        })
    }

    /// Default labels `e0, e1, ...`.
    pub fn default_names(count: usize) -> Vec<String> {
        (0..count).map(|k| format!("e{k}")).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[C64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.columns[k].as_slice())
    }

    /// Real parts of column `k`.
    pub fn real(&self, k: usize) -> Vec<f64> {
        self.columns[k].iter().map(|v| v.re).collect()
    }

    fn is_real(col: &[C64]) -> bool {
        col.iter().all(|v| v.im == 0.0)
    }

    /// Header labels as written to CSV. Columns with any nonzero imaginary
    /// part become `name_re,name_im`.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for (name, col) in self.names.iter().zip(&self.columns) {
            if Self::is_real(col) {
                h.push(name.clone());
            } else {
                h.push(format!("{name}_re"));
                h.push(format!("{name}_im"));
            }
        }
        h
    }

    /// CSV with 17 significant digits per float.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.csv_header().join(","))?;
        let real: Vec<bool> = self.columns.iter().map(|c| Self::is_real(c)).collect();
        for (i, t) in self.tlist.iter().enumerate() {
            write!(out, "{t:.16e}")?;
            for (col, &r) in self.columns.iter().zip(&real) {
                let v = col[i];
                if r {
                    write!(out, ",{:.16e}", v.re)?;
                } else {
                    write!(out, ",{:.16e},{:.16e}", v.re, v.im)?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
