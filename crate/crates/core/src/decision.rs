//! Decision-variable bookkeeping.
//!
//! Every unknown scalar of a feasibility problem is a [`VarId`]. Variables are
//! allocated either as the upper triangle of a symmetric positive-semidefinite
//! block or as a group of unconstrained scalars. Allocation order is the
//! canonical ordering later used by the SDP layer.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::polymat::{LinExpr, PolyMatrix, VarSet};
use crate::scalar::Scalar;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A symmetric matrix of decision variables constrained to be PSD.
///
/// Entry `(i, j)` and `(j, i)` share one variable; storage is the upper
/// triangle in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub name: String,
    pub side: usize,
    pub first: VarId,
}

impl PsdBlock {
    pub fn len(&self) -> usize {
        self.side * (self.side + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Offset of `(i, j)` inside the upper-triangle storage.
    pub fn offset(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        r * self.side - r * (r + 1) / 2 + c
    }

    pub fn var(&self, i: usize, j: usize) -> VarId {
        debug_assert!(i < self.side && j < self.side);
        VarId(self.first.0 + self.offset(i, j) as u32)
    }

    /// `(row, col)` with `row <= col` for a storage offset.
    pub fn position(&self, offset: usize) -> (usize, usize) {
        let mut r = 0;
        let mut start = 0;
        loop {
            let row_len = self.side - r;
            if offset < start + row_len {
                return (r, r + offset - start);
            }
            start += row_len;
            r += 1;
        }
    }

    pub fn vars(&self) -> Range<u32> {
        self.first.0..self.first.0 + self.len() as u32
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.vars().contains(&v.0)
    }

    /// The sub-block `rows x cols` as a constant polynomial matrix over `vars`.
    pub fn submatrix<S: Scalar>(&self, rows: Range<usize>, cols: Range<usize>, vars: VarSet) -> PolyMatrix<S> {
        let nr = rows.len();
        let nc = cols.len();
        PolyMatrix::from_fn(nr, nc, vars, |i, j| LinExpr::var(self.var(rows.start + i, cols.start + j)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeGroup {
    pub name: String,
    pub first: VarId,
    pub len: usize,
}

impl FreeGroup {
    pub fn vars(&self) -> Range<u32> {
        self.first.0..self.first.0 + self.len as u32
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    Psd { block: usize, row: usize, col: usize },
    Free { group: usize, index: usize },
}

/// Allocator for decision variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionSpace {
    next: u32,
    blocks: Vec<PsdBlock>,
    free: Vec<FreeGroup>,
}

impl DecisionSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn psd_block(&mut self, name: impl Into<String>, side: usize) -> PsdBlock {
        let block = PsdBlock { name: name.into(), side, first: VarId(self.next) };
        self.next += block.len() as u32;
        self.blocks.push(block.clone());
        block
    }

    pub fn free_group(&mut self, name: impl Into<String>, len: usize) -> FreeGroup {
        let group = FreeGroup { name: name.into(), first: VarId(self.next), len };
        self.next += len as u32;
        self.free.push(group.clone());
        group
    }

    pub fn n_vars(&self) -> usize {
        self.next as usize
    }

    pub fn blocks(&self) -> &[PsdBlock] {
        &self.blocks
    }

    pub fn free_groups(&self) -> &[FreeGroup] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.iter().map(|g| g.len).sum()
    }

    pub fn kind(&self, v: VarId) -> Option<VarKind> {
        for (bi, b) in self.blocks.iter().enumerate() {
            if b.contains(v) {
                let (row, col) = b.position((v.0 - b.first.0) as usize);
                return Some(VarKind::Psd { block: bi, row, col });
            }
        }
        for (gi, g) in self.free.iter().enumerate() {
            if g.vars().contains(&v.0) {
                return Some(VarKind::Free { group: gi, index: (v.0 - g.first.0) as usize });
            }
        }
        None
    }
}
