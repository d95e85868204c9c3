//! Rectangular respondents × items table of scored categories.
//!
//! CSV layout: a header `taker_id,<item_id>,<item_id>,...`, then one row per
//! respondent with integer categories; an empty cell is a missing response.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemSet, ModelKind, ResponsePattern, ScoredResponse};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemDescriptor {
    pub item_id: String,
    pub kind: ModelKind,
    pub num_categories: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    respondents: Vec<String>,
    items: Vec<ItemDescriptor>,
    /// Row-major, `respondents.len() × items.len()`.
    cells: Vec<Option<u8>>,
}

impl ResponseMatrix {
    /// Builds and validates a matrix.
    pub fn new(
        respondents: Vec<String>,
        items: Vec<ItemDescriptor>,
        cells: Vec<Option<u8>>,
    ) -> Result<Self> {
        let m = Self::from_parts(respondents, items, cells)?;
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix checking only its shape; see [`ResponseMatrix::validate`].
    pub fn from_parts(
        respondents: Vec<String>,
        items: Vec<ItemDescriptor>,
        cells: Vec<Option<u8>>,
    ) -> Result<Self> {
        if cells.len() != respondents.len() * items.len() {
            return Err(Error::contract(format!(
                "matrix has {} cells for {} respondents × {} items",
                cells.len(),
                respondents.len(),
                items.len()
            )));
        }
        Ok(Self {
            respondents,
            items,
            cells,
        })
    }

    /// Checks that categories are in range and no row or column is entirely missing.
    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() || self.respondents.is_empty() {
            return Err(Error::contract("response matrix needs at least one respondent and one item"));
        }
        for (j, item) in self.items.iter().enumerate() {
            if item.kind.is_dichotomous() && item.num_categories != 2 {
                return Err(Error::validation(
                    format!("items[{j}].num_categories"),
                    format!("dichotomous item {} must have 2 categories", item.item_id),
                ));
            }
            if item.num_categories < 2 {
                return Err(Error::validation(
                    format!("items[{j}].num_categories"),
                    format!("item {} needs at least 2 categories", item.item_id),
                ));
            }
        }
        let n_items = self.items.len();
        let mut column_seen = vec![false; n_items];
        for (r, row) in self.cells.chunks(n_items).enumerate() {
            let mut any = false;
            for (j, cell) in row.iter().enumerate() {
                if let Some(c) = *cell {
                    if usize::from(c) >= self.items[j].num_categories {
                        return Err(Error::validation(
                            format!("row {} ({}), item {}", r, self.respondents[r], self.items[j].item_id),
                            format!("category {c} out of range"),
                        ));
                    }
                    any = true;
                    column_seen[j] = true;
                }
            }
            if !any {
                return Err(Error::validation(
                    format!("row {} ({})", r, self.respondents[r]),
                    "respondent has no observed responses",
                ));
            }
        }
        if let Some(j) = column_seen.iter().position(|s| !s) {
            return Err(Error::validation(
                format!("item {}", self.items[j].item_id),
                "item has no observed responses",
            ));
        }
        Ok(())
    }

    pub fn respondents(&self) -> &[String] {
        &self.respondents
    }

    pub fn items(&self) -> &[ItemDescriptor] {
        &self.items
    }

    pub fn n_respondents(&self) -> usize {
        self.respondents.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn row(&self, r: usize) -> &[Option<u8>] {
        let n = self.items.len();
        &self.cells[r * n..(r + 1) * n]
    }

    pub fn cell(&self, r: usize, j: usize) -> Option<u8> {
        self.cells[r * self.items.len() + j]
    }

    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    /// One pattern per respondent, missing cells included as missing responses.
    pub fn patterns(&self) -> Vec<ResponsePattern> {
        (0..self.n_respondents())
            .map(|r| ResponsePattern {
                taker_id: self.respondents[r].clone(),
                responses: self
                    .row(r)
                    .iter()
                    .zip(&self.items)
                    .map(|(cell, item)| ScoredResponse {
                        item_id: item.item_id.clone(),
                        category: cell.map(usize::from),
                    })
                    .collect(),
            })
            .collect()
    }

    /// Copy with rows and columns reordered: `rows[k]` and `cols[k]` name the
    /// source row/column placed at position `k`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> Self {
        let respondents = rows.iter().map(|&r| self.respondents[r].clone()).collect();
        let items = cols.iter().map(|&j| self.items[j].clone()).collect();
        let mut cells = Vec::with_capacity(self.cells.len());
        for &r in rows {
            for &j in cols {
                cells.push(self.cell(r, j));
            }
        }
        Self {
            respondents,
            items,
            cells,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.items.len() + 1);
        header.push("taker_id".to_string());
        header.extend(self.items.iter().map(|i| i.item_id.clone()));
        w.write_record(&header)?;
        for r in 0..self.n_respondents() {
            let mut rec = Vec::with_capacity(self.items.len() + 1);
            rec.push(self.respondents[r].clone());
            rec.extend(self.row(r).iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads the CSV layout; item model kinds come from `items`. The result is validated.
    pub fn read_csv<R: Read>(reader: R, items: &ItemSet) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("taker_id") {
            return Err(Error::validation("header[0]", "first column must be taker_id"));
        }
        let mut descriptors = Vec::with_capacity(header.len().saturating_sub(1));
        for (j, id) in header.iter().enumerate().skip(1) {
            let item = items.get(id).ok_or_else(|| {
                Error::validation(format!("header[{j}]"), format!("unknown item id {id}"))
            })?;
            descriptors.push(ItemDescriptor {
                item_id: id.to_string(),
                kind: item.kind(),
                num_categories: item.num_categories(),
            });
        }
        let mut respondents = Vec::new();
        let mut cells = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::validation(
                    format!("line {}", line + 2),
                    format!("expected {} fields, found {}", header.len(), rec.len()),
                ));
            }
            respondents.push(rec[0].to_string());
            for (j, field) in rec.iter().enumerate().skip(1) {
                let field = field.trim();
                if field.is_empty() {
                    cells.push(None);
                } else {
                    let v: u8 = field.parse().map_err(|_| {
                        Error::validation(
                            format!("line {}, column {}", line + 2, &header[j]),
                            format!("invalid category {field:?}"),
                        )
                    })?;
                    cells.push(Some(v));
                }
            }
        }
        Self::new(respondents, descriptors, cells)
    }
}
