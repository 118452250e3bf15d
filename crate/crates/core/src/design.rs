//! Sparse paired-comparison design: `[intercept | double_team | rushers | blockers]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{Id, Interaction, InteractionTable};
use crate::scalar::Real;

pub const INTERCEPT_COL: usize = 0;
pub const DOUBLE_TEAM_COL: usize = 1;
const PLAYER_OFFSET: usize = 2;

/// Role-specific column ordinals, dense and sorted by id within each role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerIndex {
    rushers: BTreeMap<Id, usize>,
    blockers: BTreeMap<Id, usize>,
}

impl PlayerIndex {
    pub fn from_ids<'a>(
        rushers: impl IntoIterator<Item = &'a Id>,
        blockers: impl IntoIterator<Item = &'a Id>,
    ) -> Self {
        let dense = |ids: Vec<&Id>| -> BTreeMap<Id, usize> {
            let mut ids = ids;
            ids.sort();
            ids.dedup();
            ids.into_iter().enumerate().map(|(i, id)| (id.clone(), i)).collect()
        };
        PlayerIndex {
            rushers: dense(rushers.into_iter().collect()),
            blockers: dense(blockers.into_iter().collect()),
        }
    }

    pub fn n_rushers(&self) -> usize {
        self.rushers.len()
    }

    pub fn n_blockers(&self) -> usize {
        self.blockers.len()
    }

    pub fn n_columns(&self) -> usize {
        PLAYER_OFFSET + self.rushers.len() + self.blockers.len()
    }

    pub fn rusher_column(&self, id: &Id) -> Option<usize> {
        self.rushers.get(id).map(|o| PLAYER_OFFSET + o)
    }

    pub fn blocker_column(&self, id: &Id) -> Option<usize> {
        self.blockers.get(id).map(|o| PLAYER_OFFSET + self.rushers.len() + o)
    }

    /// Rusher ids with their design columns, in column order.
    pub fn rusher_columns(&self) -> impl Iterator<Item = (&Id, usize)> {
        self.rushers.iter().map(|(id, o)| (id, PLAYER_OFFSET + o))
    }

    pub fn blocker_columns(&self) -> impl Iterator<Item = (&Id, usize)> {
        let off = PLAYER_OFFSET + self.rushers.len();
        self.blockers.iter().map(move |(id, o)| (id, off + o))
    }
}

pub fn build_index(table: &InteractionTable) -> Result<PlayerIndex> {
    if table.is_empty() {
        return Err(Error::Empty("training table"));
    }
    Ok(PlayerIndex::from_ids(table.iter().map(|r| &r.rusher_id), table.iter().map(|r| &r.blocker_id)))
}

/// Nonzero entries of one design row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Real> SparseRow<T> {
    pub fn dot(&self, theta: &[T]) -> T {
        self.entries.iter().map(|&(c, v)| v * theta[c]).sum()
    }
}

/// Intercept always, double-team column when set, `+1` on the rusher and `-1`
/// on the blocker when indexed. Unseen players contribute nothing.
pub fn encode_row<T: Real>(x: &Interaction, idx: &PlayerIndex) -> SparseRow<T> {
    let mut entries = Vec::with_capacity(4);
    entries.push((INTERCEPT_COL, T::one()));
    if x.double_team {
        entries.push((DOUBLE_TEAM_COL, T::one()));
    }
    if let Some(c) = idx.rusher_column(&x.rusher_id) {
        entries.push((c, T::one()));
    }
    if let Some(c) = idx.blocker_column(&x.blocker_id) {
        entries.push((c, -T::one()));
    }
    SparseRow { entries }
}

/// Row-compressed design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    n_cols: usize,
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Real> DesignMatrix<T> {
    pub fn from_rows(rows: &[SparseRow<T>], n_cols: usize) -> Result<Self> {
        let mut m = DesignMatrix { n_cols, indptr: vec![0], cols: Vec::new(), vals: Vec::new() };
        for r in rows {
            for &(c, v) in &r.entries {
                if c >= n_cols {
                    return Err(Error::InvalidArgument(format!("column {c} out of range {n_cols}")));
                }
                m.cols.push(c as u32);
                m.vals.push(v);
            }
            m.indptr.push(m.cols.len());
        }
        Ok(m)
    }

    pub fn encode(table: &InteractionTable, idx: &PlayerIndex) -> Self {
        let rows: Vec<SparseRow<T>> = table.iter().map(|x| encode_row(x, idx)).collect();
        Self::from_rows(&rows, idx.n_columns()).expect("encoded columns are in range")
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    #[inline]
    pub fn dot(&self, i: usize, theta: &[T]) -> T {
        let (c, v) = self.row(i);
        let mut s = T::zero();
        for k in 0..c.len() {
            s += v[k] * theta[c[k] as usize];
        }
        s
    }

    /// `out += scale * x_i`
    #[inline]
    pub fn axpy(&self, i: usize, scale: T, out: &mut [T]) {
        let (c, v) = self.row(i);
        for k in 0..c.len() {
            out[c[k] as usize] += scale * v[k];
        }
    }

    /// Copy containing only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut m = DesignMatrix { n_cols: self.n_cols, indptr: vec![0], cols: Vec::new(), vals: Vec::new() };
        for &i in rows {
            let (c, v) = self.row(i);
            m.cols.extend_from_slice(c);
            m.vals.extend_from_slice(v);
            m.indptr.push(m.cols.len());
        }
        m
    }
}
