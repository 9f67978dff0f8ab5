// SPDX-License-Identifier: MIT
use std::collections::BTreeMap;

use serde::Serialize;

use super::ScmError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub values: Vec<f64>,
    /// Integer-coded categories rather than real values.
    pub categorical: bool,
}

/// Column-oriented samples keyed by node name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub columns: BTreeMap<String, Column>,
    pub n: usize,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(columns: BTreeMap<String, Column>, seed: Option<u64>) -> Result<Self, ScmError> {
        let n = columns.values().next().map_or(0, |c| c.values.len());
        if let Some((name, _)) = columns.iter().find(|(_, c)| c.values.len() != n) {
            return Err(ScmError::Data(format!(
                "column `{name}` has a different length"
            )));
        }
        Ok(Dataset { columns, n, seed })
    }

    pub fn column(&self, name: &str) -> Result<&Column, ScmError> {
        self.columns
            .get(name)
            .ok_or_else(|| ScmError::UnknownColumn(name.to_string()))
    }

    pub fn values(&self, name: &str) -> Result<&[f64], ScmError> {
        Ok(&self.column(name)?.values)
    }

    /// Row `i` as a name -> value map.
    pub fn row(&self, i: usize) -> BTreeMap<String, f64> {
        self.columns
            .iter()
            .map(|(k, c)| (k.clone(), c.values[i]))
            .collect()
    }

    /// Keeps only the named columns.
    pub fn select<'a, I: IntoIterator<Item = &'a String>>(
        &self,
        names: I,
    ) -> Result<Dataset, ScmError> {
        let mut columns = BTreeMap::new();
        for n in names {
            columns.insert(n.clone(), self.column(n)?.clone());
        }
        Dataset::new(columns, self.seed)
    }

    /// CSV with a header row of column names. Categorical values are written
    /// as integers; real values use the shortest text that reads back exactly.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), ScmError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| ScmError::Data(e.to_string());
        w.write_record(self.columns.keys()).map_err(err)?;
        for i in 0..self.n {
            let row = self.columns.values().map(|c| {
                if c.categorical {
                    format!("{}", c.values[i] as i64)
                } else {
                    format!("{}", c.values[i])
                }
            });
            w.write_record(row).map_err(err)?;
        }
        w.flush().map_err(|e| ScmError::Data(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Reads a CSV with a header row. A column whose every field is an integer
    /// literal is categorical; every other field must parse as a finite number.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Dataset, ScmError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header: Vec<String> = r
            .headers()
            .map_err(|e| ScmError::Data(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        let mut integral = vec![true; header.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| ScmError::Data(e.to_string()))?;
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    ScmError::Data(format!(
                        "line {}: `{field}` in column `{}` is not a number",
                        line + 2,
                        header[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(ScmError::Data(format!(
                        "line {}: non-finite value in column `{}`",
                        line + 2,
                        header[j]
                    )));
                }
                integral[j] &= field.parse::<i64>().is_ok();
                values[j].push(v);
            }
        }
        let mut columns = BTreeMap::new();
        for ((name, vals), cat) in header.into_iter().zip(values).zip(integral) {
            if columns.contains_key(&name) {
                return Err(ScmError::Data(format!("duplicate column `{name}`")));
            }
            columns.insert(
                name,
                Column {
                    categorical: cat && !vals.is_empty(),
                    values: vals,
                },
            );
        }
        Dataset::new(columns, None)
    }
}
