use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SGDS";
const VERSION: u32 = 1;

/// Integer-coded columnar table.
///
/// Every column holds `n` codes in `[0, domain)`. Numeric columns that were
/// ingested from decimals carry the power-of-ten `scale` that was applied;
/// string columns carry the dictionary mapping codes back to values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<u64>>,
    domains: Vec<u64>,
    scales: Vec<i32>,
    dicts: Vec<Option<Vec<String>>>,
}

impl Dataset {
    /// Builds a dataset from raw columns, deriving each domain as `max + 1`.
    pub fn from_columns(columns: Vec<Vec<u64>>) -> Result<Self> {
        let domains = columns
            .iter()
            .map(|c| c.iter().copied().max().map_or(1, |m| m.saturating_add(1)))
            .collect();
        Self::with_domains(columns, domains)
    }

    pub fn with_domains(columns: Vec<Vec<u64>>, domains: Vec<u64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("dataset needs at least one column".into()));
        }
        if domains.len() != columns.len() {
            return Err(Error::InvalidArgument("one domain per column required".into()));
        }
        let n = columns[0].len();
        for (i, (col, &dom)) in columns.iter().zip(&domains).enumerate() {
            if col.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "column {i} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(&bad) = col.iter().find(|&&v| v >= dom) {
                return Err(Error::Domain(format!("code {bad} outside [0, {dom}) in column {i}")));
            }
        }
        let d = columns.len();
        Ok(Self { columns, domains, scales: vec![0; d], dicts: vec![None; d] })
    }

    pub fn with_scales(mut self, scales: Vec<i32>) -> Self {
        assert_eq!(scales.len(), self.d());
        self.scales = scales;
        self
    }

    pub fn with_dicts(mut self, dicts: Vec<Option<Vec<String>>>) -> Self {
        assert_eq!(dicts.len(), self.d());
        self.dicts = dicts;
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn column(&self, dim: usize) -> &[u64] {
        &self.columns[dim]
    }

    pub fn columns(&self) -> &[Vec<u64>] {
        &self.columns
    }

    #[inline]
    pub fn value(&self, row: usize, dim: usize) -> u64 {
        self.columns[dim][row]
    }

    pub fn row(&self, row: usize) -> Vec<u64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn domain(&self, dim: usize) -> u64 {
        self.domains[dim]
    }

    pub fn domains(&self) -> &[u64] {
        &self.domains
    }

    pub fn scale(&self, dim: usize) -> i32 {
        self.scales[dim]
    }

    pub fn dict(&self, dim: usize) -> Option<&[String]> {
        self.dicts[dim].as_deref()
    }

    /// Full data space as inclusive per-dimension code ranges.
    pub fn full_bounds(&self) -> Vec<(u64, u64)> {
        self.domains.iter().map(|&d| (0, d.saturating_sub(1))).collect()
    }

    /// Decodes a code back to its textual value.
    pub fn decode(&self, dim: usize, code: u64) -> String {
        if let Some(dict) = &self.dicts[dim] {
            return dict.get(code as usize).cloned().unwrap_or_default();
        }
        let scale = self.scales[dim];
        if scale <= 0 {
            return code.to_string();
        }
        let digits = format!("{:0>width$}", code, width = scale as usize + 1);
        let (int, frac) = digits.split_at(digits.len() - scale as usize);
        format!("{int}.{frac}")
    }

    /// Serializes to the little-endian binary format:
    /// `"SGDS" | version u32 | n u64 | d u32 | (domain u64, scale i32) * d | column-major u64 payload`.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.d() as u32).to_le_bytes())?;
        for (dom, scale) in self.domains.iter().zip(&self.scales) {
            w.write_all(&dom.to_le_bytes())?;
            w.write_all(&scale.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(8 * 8192);
        for col in &self.columns {
            for chunk in col.chunks(8192) {
                buf.clear();
                for v in chunk {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Malformed { row: 0, msg: "bad magic".into() });
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Malformed { row: 0, msg: format!("unsupported version {version}") });
        }
        let n = read_u64(r)? as usize;
        let d = read_u32(r)? as usize;
        if d == 0 {
            return Err(Error::Malformed { row: 0, msg: "zero columns".into() });
        }
        let mut domains = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for _ in 0..d {
            domains.push(read_u64(r)?);
            scales.push(read_u32(r)? as i32);
        }
        let mut columns = Vec::with_capacity(d);
        let mut buf = vec![0u8; 8 * 8192];
        for _ in 0..d {
            let mut col = Vec::with_capacity(n);
            let mut left = n;
            while left > 0 {
                let take = left.min(8192);
                r.read_exact(&mut buf[..take * 8])?;
                col.extend(
                    buf[..take * 8]
                        .chunks_exact(8)
                        .map(|b| u64::from_le_bytes(b.try_into().unwrap())),
                );
                left -= take;
            }
            columns.push(col);
        }
        let ds = Self::with_domains(columns, domains)?;
        Ok(ds.with_scales(scales))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_binary(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(&mut BufReader::new(File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let ds = Dataset::from_columns(vec![vec![3, 1, 4, 1, 5], vec![9, 2, 6, 5, 3]])
            .unwrap()
            .with_scales(vec![0, 2]);
        let mut bytes = Vec::new();
        ds.write_binary(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"SGDS");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 4 + 2 * 12 + 2 * 5 * 8);
        let back = Dataset::read_binary(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.columns(), ds.columns());
        assert_eq!(back.domains(), ds.domains());
        assert_eq!(back.scale(1), 2);
        let mut again = Vec::new();
        back.write_binary(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_ragged_columns_and_out_of_domain_codes() {
        assert!(Dataset::from_columns(vec![vec![1, 2], vec![1]]).is_err());
        assert!(Dataset::with_domains(vec![vec![5]], vec![5]).is_err());
    }

    #[test]
    fn decode_applies_scale() {
        let ds = Dataset::from_columns(vec![vec![125, 310, 5]]).unwrap().with_scales(vec![2]);
        assert_eq!(ds.decode(0, 125), "1.25");
        assert_eq!(ds.decode(0, 310), "3.10");
        assert_eq!(ds.decode(0, 5), "0.05");
    }

    #[test]
    fn bad_magic_is_malformed() {
        let bytes = b"XXXX\x01\x00\x00\x00".to_vec();
        assert!(matches!(
            Dataset::read_binary(&mut bytes.as_slice()),
            Err(Error::Malformed { .. })
        ));
    }
}
