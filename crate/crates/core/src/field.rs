//! Observed or sampled influence density over a (distance, time) grid.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    /// Fraction of the distance group that has adopted.
    Ratio,
    /// Raw number of adopters in the distance group.
    Count,
}

impl fmt::Display for DensityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityMode::Ratio => f.write_str("ratio"),
            DensityMode::Count => f.write_str("count"),
        }
    }
}

impl FromStr for DensityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(DensityMode::Ratio),
            "count" => Ok(DensityMode::Count),
            other => Err(Error::validation(format!("unknown density mode `{other}`"))),
        }
    }
}

/// Density `I(x, t)` with one row per integer distance and one column per time.
///
/// `group_sizes` holds `|U_x|` for ingested data. Synthetic fields leave it
/// empty, in which case count-mode values carry no upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    distances: Vec<u32>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    mode: DensityMode,
    group_sizes: BTreeMap<u32, usize>,
}

impl DensityField {
    pub fn new(
        distances: Vec<u32>,
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        mode: DensityMode,
        group_sizes: BTreeMap<u32, usize>,
    ) -> Result<Self> {
        if !distances.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("distances must be strictly increasing"));
        }
        if times.iter().any(|t| !t.is_finite()) || !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::validation("times must be finite and strictly increasing"));
        }
        if values.len() != distances.len() {
            return Err(Error::validation(format!(
                "{} rows for {} distances",
                values.len(),
                distances.len()
            )));
        }
        for (&x, row) in distances.iter().zip(&values) {
            if row.len() != times.len() {
                return Err(Error::validation(format!(
                    "row for distance {x} has {} values, expected {}",
                    row.len(),
                    times.len()
                )));
            }
            let cap = group_sizes.get(&x).copied();
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::validation(format!(
                        "distance {x}: density {v} is not a finite non-negative number"
                    )));
                }
                match mode {
                    DensityMode::Ratio if v > 1.0 => {
                        return Err(Error::validation(format!(
                            "distance {x}: ratio density {v} exceeds 1"
                        )));
                    }
                    DensityMode::Count => {
                        if let Some(cap) = cap {
                            if v > cap as f64 {
                                return Err(Error::validation(format!(
                                    "distance {x}: count {v} exceeds group size {cap}"
                                )));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            distances,
            times,
            values,
            mode,
            group_sizes,
        })
    }

    /// Model output on the observation layout. Only shape and finiteness are
    /// checked: predictions may leave `[0, 1]` or dip slightly below zero.
    pub fn predicted(
        distances: Vec<u32>,
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        mode: DensityMode,
        group_sizes: BTreeMap<u32, usize>,
    ) -> Result<Self> {
        if values.len() != distances.len() || values.iter().any(|r| r.len() != times.len()) {
            return Err(Error::validation("prediction shape does not match its axes"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("prediction contains non-finite values"));
        }
        Ok(Self {
            distances,
            times,
            values,
            mode,
            group_sizes,
        })
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn mode(&self) -> DensityMode {
        self.mode
    }

    pub fn group_sizes(&self) -> &BTreeMap<u32, usize> {
        &self.group_sizes
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row][col]
    }

    /// Values at time `t` across all distances, if `t` is one of the stored times.
    pub fn column_at(&self, t: f64) -> Option<Vec<f64>> {
        let col = self.times.iter().position(|&s| (s - t).abs() <= 1e-9)?;
        Some(self.values.iter().map(|row| row[col]).collect())
    }

    /// True when every row is non-decreasing in time.
    pub fn is_cumulative(&self) -> bool {
        self.values
            .iter()
            .all(|row| row.windows(2).all(|w| w[1] >= w[0]))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["distance".to_string()];
        header.extend(self.times.iter().map(|t| t.to_string()));
        header.push("group_size".to_string());
        wtr.write_record(&header).map_err(csv_err)?;
        for (&x, row) in self.distances.iter().zip(&self.values) {
            let mut rec = vec![x.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(
                self.group_sizes
                    .get(&x)
                    .map(|n| n.to_string())
                    .unwrap_or_default(),
            );
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush().map_err(|e| Error::io("<density csv>", e))?;
        Ok(())
    }

    /// Parse the layout written by [`DensityField::write_csv`]. The trailing
    /// `group_size` column is optional and may be blank.
    pub fn read_csv<R: Read>(input: R, mode: DensityMode, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(|e| parse_err(source_name, 1, e.to_string()))?,
            None => return Err(parse_err(source_name, 1, "empty file".into())),
        };
        if header.get(0).map(str::trim) != Some("distance") {
            return Err(parse_err(
                source_name,
                1,
                "first header column must be `distance`".into(),
            ));
        }
        let has_group = header.iter().next_back().map(str::trim) == Some("group_size");
        let n_time = header.len() - 1 - usize::from(has_group);
        let mut times = Vec::with_capacity(n_time);
        for cell in header.iter().skip(1).take(n_time) {
            times.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(source_name, 1, format!("bad time `{cell}`")))?,
            );
        }
        let mut distances = Vec::new();
        let mut values = Vec::new();
        let mut group_sizes = BTreeMap::new();
        for (i, rec) in records.enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| parse_err(source_name, line, e.to_string()))?;
            if rec.len() != header.len() {
                return Err(parse_err(
                    source_name,
                    line,
                    format!("expected {} columns, found {}", header.len(), rec.len()),
                ));
            }
            let x: u32 = rec[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(source_name, line, format!("bad distance `{}`", &rec[0])))?;
            let mut row = Vec::with_capacity(n_time);
            for cell in rec.iter().skip(1).take(n_time) {
                row.push(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(source_name, line, format!("bad value `{cell}`")))?,
                );
            }
            if has_group {
                let g = rec[rec.len() - 1].trim();
                if !g.is_empty() {
                    let n: usize = g.parse().map_err(|_| {
                        parse_err(source_name, line, format!("bad group size `{g}`"))
                    })?;
                    group_sizes.insert(x, n);
                }
            }
            distances.push(x);
            values.push(row);
        }
        Self::new(distances, times, values, mode, group_sizes)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv write failed: {e}"))
}

fn parse_err(source_name: &str, line: usize, msg: String) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: DensityMode) -> DensityField {
        let mut g = BTreeMap::new();
        g.insert(1, 4);
        g.insert(2, 10);
        DensityField::new(
            vec![1, 2],
            vec![1.0, 2.5],
            vec![vec![0.25, 0.5], vec![0.0, 0.1]],
            mode,
            g,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let f = small(DensityMode::Ratio);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "distance,1,2.5,group_size\n1,0.25,0.5,4\n2,0,0.1,10\n"
        );
        let back = DensityField::read_csv(&buf[..], DensityMode::Ratio, "mem").unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_ratio_above_one() {
        let err = DensityField::new(
            vec![1],
            vec![1.0],
            vec![vec![1.5]],
            DensityMode::Ratio,
            BTreeMap::new(),
        );
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn count_capped_by_group_size() {
        let mut g = BTreeMap::new();
        g.insert(1, 3);
        let err = DensityField::new(vec![1], vec![1.0], vec![vec![4.0]], DensityMode::Count, g);
        assert!(err.is_err());
    }

    #[test]
    fn parse_error_carries_line() {
        let text = "distance,1,2\n1,0.1,0.2\n2,0.1,oops\n";
        match DensityField::read_csv(text.as_bytes(), DensityMode::Ratio, "f.csv") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
