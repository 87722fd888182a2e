//! Multi-source binary label storage.
//!
//! `LabelMatrix` holds `t` noisy-label columns over `n` rows, with an
//! optional presence mask. Absent entries (used when a partially-observed
//! source, e.g. a small clean set, is appended) read as 0 on input paths and
//! are excluded from the loss by the mask.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    n: usize,
    t: usize,
    values: Vec<u8>,
    /// 1 = present; `None` means fully present.
    present: Option<Vec<u8>>,
}

impl LabelMatrix {
    pub fn new(n: usize, t: usize, values: Vec<u8>) -> Self {
        assert_eq!(values.len(), n * t, "label matrix size");
        LabelMatrix {
            n,
            t,
            values,
            present: None,
        }
    }

    pub fn empty(n: usize) -> Self {
        LabelMatrix {
            n,
            t: 0,
            values: Vec::new(),
            present: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn sources(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn value(&self, row: usize, source: usize) -> u8 {
        self.values[row * self.t + source]
    }

    #[inline]
    pub fn is_present(&self, row: usize, source: usize) -> bool {
        match &self.present {
            None => true,
            Some(p) => p[row * self.t + source] == 1,
        }
    }

    pub fn has_mask(&self) -> bool {
        self.present.is_some()
    }

    pub fn any_absent(&self) -> bool {
        match &self.present {
            None => false,
            Some(p) => p.iter().any(|&x| x == 0),
        }
    }

    /// All values must be 0/1; absent entries are exempt.
    pub fn validate_binary(&self) -> Result<()> {
        for row in 0..self.n {
            for source in 0..self.t {
                let v = self.value(row, source);
                if v > 1 && self.is_present(row, source) {
                    return Err(Error::NonBinaryLabel {
                        row,
                        source_index: source,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    /// One source's values as a dense column (absent entries read 0).
    pub fn column(&self, source: usize) -> Vec<u8> {
        (0..self.n)
            .map(|r| {
                if self.is_present(r, source) {
                    self.value(r, source)
                } else {
                    0
                }
            })
            .collect()
    }

    /// Append a source that is only observed on `present_rows`.
    pub fn push_masked_source(&mut self, column: &[u8], present_rows: &[bool]) {
        assert_eq!(column.len(), self.n);
        assert_eq!(present_rows.len(), self.n);
        let old_t = self.t;
        let new_t = old_t + 1;
        let mut values = Vec::with_capacity(self.n * new_t);
        let mut present = Vec::with_capacity(self.n * new_t);
        for r in 0..self.n {
            for s in 0..old_t {
                values.push(self.value(r, s));
                present.push(self.is_present(r, s) as u8);
            }
            values.push(if present_rows[r] { column[r] } else { 0 });
            present.push(present_rows[r] as u8);
        }
        self.values = values;
        self.present = Some(present);
        self.t = new_t;
    }

    /// Restrict to a subset of rows (same sources).
    pub fn gather_rows(&self, idx: &[usize]) -> LabelMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.t);
        let mut present = self.present.as_ref().map(|_| Vec::with_capacity(idx.len() * self.t));
        for &r in idx {
            for s in 0..self.t {
                values.push(self.value(r, s));
                if let Some(p) = present.as_mut() {
                    p.push(self.is_present(r, s) as u8);
                }
            }
        }
        LabelMatrix {
            n: idx.len(),
            t: self.t,
            values,
            present,
        }
    }

    /// View with a single source column (fully present entries only keep
    /// their own mask state).
    pub fn select_source(&self, source: usize) -> LabelMatrix {
        let mut values = Vec::with_capacity(self.n);
        let mut present = self.present.as_ref().map(|_| Vec::with_capacity(self.n));
        for r in 0..self.n {
            values.push(self.value(r, source));
            if let Some(p) = present.as_mut() {
                p.push(self.is_present(r, source) as u8);
            }
        }
        LabelMatrix {
            n: self.n,
            t: 1,
            values,
            present,
        }
    }

    pub fn from_columns(columns: &[Vec<u8>]) -> Self {
        let t = columns.len();
        let n = if t == 0 { 0 } else { columns[0].len() };
        let mut values = Vec::with_capacity(n * t);
        for r in 0..n {
            for col in columns {
                assert_eq!(col.len(), n, "ragged label columns");
                values.push(col[r]);
            }
        }
        LabelMatrix {
            n,
            t,
            values,
            present: None,
        }
    }
}
