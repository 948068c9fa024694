use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Non-negative integers or decimals; decimals are scaled by the smallest
    /// power of ten that makes every value of the column integral.
    Numeric,
    /// Dictionary encoded by order of first appearance.
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn numeric(name: &str) -> Self {
        Self { name: name.to_string(), kind: ColumnKind::Numeric }
    }

    pub fn text(name: &str) -> Self {
        Self { name: name.to_string(), kind: ColumnKind::Text }
    }
}

pub fn ingest_csv(path: &Path, schema: &[ColumnSpec]) -> Result<Dataset> {
    ingest_reader(std::fs::File::open(path)?, schema)
}

/// Reads a headered, comma-separated table and encodes every column to
/// integer codes.
pub fn ingest_reader<R: Read>(reader: R, schema: &[ColumnSpec]) -> Result<Dataset> {
    if schema.is_empty() {
        return Err(Error::InvalidArgument("empty schema".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Malformed { row: 0, msg: e.to_string() })?
        .clone();
    if headers.len() != schema.len() {
        return Err(Error::Malformed {
            row: 0,
            msg: format!("header has {} fields, schema has {}", headers.len(), schema.len()),
        });
    }

    let d = schema.len();
    // Numeric columns are kept as (integer digits, fraction digits) until the
    // column scale is known.
    let mut raw: Vec<Vec<(u128, String)>> = vec![Vec::new(); d];
    let mut text_codes: Vec<Vec<u64>> = vec![Vec::new(); d];
    let mut dicts: Vec<HashMap<String, u64>> = vec![HashMap::new(); d];
    let mut dict_values: Vec<Vec<String>> = vec![Vec::new(); d];
    let mut n = 0;

    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        n = row;
        let rec = rec.map_err(|e| Error::Malformed { row, msg: e.to_string() })?;
        if rec.len() != d {
            return Err(Error::Malformed { row, msg: format!("expected {d} fields, got {}", rec.len()) });
        }
        for (c, field) in rec.iter().enumerate() {
            match schema[c].kind {
                ColumnKind::Text => {
                    let next = dict_values[c].len() as u64;
                    let code = *dicts[c].entry(field.to_string()).or_insert_with(|| {
                        dict_values[c].push(field.to_string());
                        next
                    });
                    text_codes[c].push(code);
                }
                ColumnKind::Numeric => raw[c].push(parse_decimal(field.trim(), row)?),
            }
        }
    }

    if n == 0 {
        return Err(Error::Malformed { row: 0, msg: "no data rows".into() });
    }

    let mut columns = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    let mut out_dicts = Vec::with_capacity(d);
    for c in 0..d {
        match schema[c].kind {
            ColumnKind::Text => {
                columns.push(std::mem::take(&mut text_codes[c]));
                scales.push(0);
                out_dicts.push(Some(std::mem::take(&mut dict_values[c])));
            }
            ColumnKind::Numeric => {
                let scale = raw[c].iter().map(|(_, f)| f.len()).max().unwrap_or(0);
                if scale > 18 {
                    return Err(Error::Domain(format!("column {} needs scale 10^{scale}", schema[c].name)));
                }
                let mul = 10u128.pow(scale as u32);
                let mut col = Vec::with_capacity(n);
                for (row, (int, frac)) in raw[c].iter().enumerate() {
                    let padded = if frac.is_empty() {
                        0
                    } else {
                        format!("{frac:0<scale$}").parse::<u128>().unwrap_or(0)
                    };
                    let v = int
                        .checked_mul(mul)
                        .and_then(|x| x.checked_add(padded))
                        .filter(|&x| x < u64::MAX as u128)
                        .ok_or_else(|| {
                            Error::Domain(format!("row {}: value overflows 64 bits in {}", row + 1, schema[c].name))
                        })?;
                    col.push(v as u64);
                }
                columns.push(col);
                scales.push(scale as i32);
                out_dicts.push(None);
            }
        }
    }

    Ok(Dataset::from_columns(columns)?.with_scales(scales).with_dicts(out_dicts))
}

fn parse_decimal(s: &str, row: usize) -> Result<(u128, String)> {
    if s.starts_with('-') {
        return Err(Error::Domain(format!("row {row}: negative value {s:?} not supported")));
    }
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    let bad = || Error::Malformed { row, msg: format!("not a number: {s:?}") };
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let int = if int.is_empty() {
        0
    } else {
        int.parse::<u128>().map_err(|_| Error::Domain(format!("row {row}: {s:?} too large")))?
    };
    // Trailing zeros do not change the value and must not force a larger scale.
    Ok((int, frac.trim_end_matches('0').to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(s: &str, schema: &[ColumnSpec]) -> Result<Dataset> {
        ingest_reader(s.as_bytes(), schema)
    }

    #[test]
    fn decimals_scale_by_smallest_power_of_ten() {
        let ds = ingest("price\n1.25\n3.10\n", &[ColumnSpec::numeric("price")]).unwrap();
        assert_eq!(ds.column(0), &[125, 310]);
        assert_eq!(ds.scale(0), 2);
    }

    #[test]
    fn strings_encode_by_first_appearance() {
        let ds = ingest("s\na\nb\na\n", &[ColumnSpec::text("s")]).unwrap();
        assert_eq!(ds.column(0), &[0, 1, 0]);
        assert_eq!(ds.decode(0, 1), "b");
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(ingest("", &[ColumnSpec::numeric("x")]).is_err());
        assert!(ingest("x\n", &[ColumnSpec::numeric("x")]).is_err());
    }

    #[test]
    fn malformed_row_reports_row_number() {
        let err = ingest("x,y\n1,2\n3,zz\n", &[ColumnSpec::numeric("x"), ColumnSpec::numeric("y")])
            .unwrap_err();
        match err {
            Error::Malformed { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overflow_is_domain_error() {
        let err = ingest("x\n18446744073709551615.5\n", &[ColumnSpec::numeric("x")]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn decode_round_trips_every_value() {
        let csv = "a,b,c\n1.5,x,7\n0.25,y,0\n12,x,3\n";
        let schema = [ColumnSpec::numeric("a"), ColumnSpec::text("b"), ColumnSpec::numeric("c")];
        let ds = ingest(csv, &schema).unwrap();
        let expect = [["1.5", "x", "7"], ["0.25", "y", "0"], ["12", "x", "3"]];
        for (r, row) in expect.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let got = ds.decode(c, ds.value(r, c));
                if schema[c].kind == ColumnKind::Text {
                    assert_eq!(&got, v);
                } else {
                    assert_eq!(got.parse::<f64>().unwrap(), v.parse::<f64>().unwrap());
                }
            }
        }
    }
}
