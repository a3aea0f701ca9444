//! Problem datum and block-structured vectors.
//!
//! An instance has `n` positions; position `i` offers `l_i` rotamers. A
//! relaxed point is a real vector of length `m = Σ l_i` laid out block by
//! block, and a discrete solution picks exactly one rotamer per position.
//!
//! Indices are 0-based throughout the library. The text formats in
//! [`crate::io`] and the CLI use 1-based indices.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut, Range};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default threshold below which an entry is treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Block sizes and their offsets into the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if let Some(i) = sizes.iter().position(|&l| l == 0) {
            return Err(Error::Structural(format!("block {i} is empty")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &l in &sizes {
            acc += l;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// Layout with a single block; handy for problems without block structure.
    pub fn single(len: usize) -> Self {
        Self {
            sizes: vec![len],
            offsets: vec![0, len],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn size(&self, block: usize) -> usize {
        self.sizes[block]
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }
}

/// Dense row-major interaction block `B_ij` between positions `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBlock {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PairBlock {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Structural(format!(
                "pair block of shape {rows}x{cols} given {} values",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Structural("ragged pair block rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.data[r * self.cols + s]
    }

    pub fn set(&mut self, r: usize, s: usize, value: f64) {
        self.data[r * self.cols + s] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for s in 0..self.cols {
                out.set(s, r, self.get(r, s));
            }
        }
        out
    }
}

/// The full problem datum: block sizes, unary energies `a` and the upper
/// triangle of pairwise blocks of `B`.
///
/// Immutable once built. Pairs absent from the map interact with zero energy.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    name: String,
    layout: Arc<BlockLayout>,
    unary: Vec<f64>,
    pairwise: BTreeMap<(usize, usize), PairBlock>,
}

impl InstanceSpec {
    pub fn new(
        name: impl Into<String>,
        block_sizes: Vec<usize>,
        unary: Vec<f64>,
        pairwise: BTreeMap<(usize, usize), PairBlock>,
    ) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::Structural("instance has no positions".into()));
        }
        let layout = BlockLayout::new(block_sizes)?;
        if unary.len() != layout.dim() {
            return Err(Error::Structural(format!(
                "unary vector has {} entries, block sizes sum to {}",
                unary.len(),
                layout.dim()
            )));
        }
        if let Some(k) = unary.iter().position(|v| !v.is_finite()) {
            return Err(Error::Structural(format!("unary energy {k} is not finite")));
        }
        let n = layout.num_blocks();
        for (&(i, j), block) in &pairwise {
            if i >= j {
                return Err(Error::Structural(format!(
                    "pair ({i}, {j}) must satisfy i < j"
                )));
            }
            if j >= n {
                return Err(Error::Structural(format!(
                    "pair ({i}, {j}) references a position beyond n = {n}"
                )));
            }
            if block.rows() != layout.size(i) || block.cols() != layout.size(j) {
                return Err(Error::Structural(format!(
                    "pair ({i}, {j}) has shape {}x{}, expected {}x{}",
                    block.rows(),
                    block.cols(),
                    layout.size(i),
                    layout.size(j)
                )));
            }
            if block.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::Structural(format!(
                    "pair ({i}, {j}) holds a non-finite energy"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            layout: Arc::new(layout),
            unary,
            pairwise,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.layout.num_blocks()
    }

    pub fn m(&self) -> usize {
        self.layout.dim()
    }

    pub fn block_sizes(&self) -> &[usize] {
        self.layout.sizes()
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn unary(&self) -> &[f64] {
        &self.unary
    }

    pub fn unary_block(&self, block: usize) -> &[f64] {
        &self.unary[self.layout.range(block)]
    }

    pub fn pairwise(&self) -> &BTreeMap<(usize, usize), PairBlock> {
        &self.pairwise
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairBlock> {
        self.pairwise.get(&(i, j))
    }

    /// `b^{ij}_{rs}` for any ordered pair of distinct positions.
    pub fn pair_energy(&self, i: usize, r: usize, j: usize, s: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.pair(i, j).map_or(0.0, |b| b.get(r, s)),
            std::cmp::Ordering::Greater => self.pair(j, i).map_or(0.0, |b| b.get(s, r)),
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Number of discrete assignments, as a float so it cannot overflow.
    pub fn search_space_size(&self) -> f64 {
        self.block_sizes().iter().map(|&l| l as f64).product()
    }

    pub fn stats(&self) -> InstanceStats {
        let sizes = self.block_sizes();
        InstanceStats {
            n: self.n(),
            min_block: sizes.iter().copied().min().unwrap_or(0),
            max_block: sizes.iter().copied().max().unwrap_or(0),
            m: self.m(),
        }
    }

    pub fn zeros(&self) -> BlockVector {
        BlockVector::zeros(Arc::clone(&self.layout))
    }

    pub fn check_conformal(&self, x: &BlockVector) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &x.layout) || *self.layout == *x.layout {
            Ok(())
        } else {
            Err(Error::Conformance(format!(
                "vector of length {} with {} blocks does not match instance '{}' (m = {}, n = {})",
                x.len(),
                x.layout.num_blocks(),
                self.name,
                self.m(),
                self.n()
            )))
        }
    }
}

/// Summary statistics in the shape of the benchmark information table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceStats {
    pub n: usize,
    pub min_block: usize,
    pub max_block: usize,
    pub m: usize,
}

impl fmt::Display for InstanceStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} l_i in ({}, {}) m={}",
            self.n, self.min_block, self.max_block, self.m
        )
    }
}

/// A real vector partitioned into the blocks of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    values: Vec<f64>,
    layout: Arc<BlockLayout>,
}

impl BlockVector {
    pub fn zeros(layout: Arc<BlockLayout>) -> Self {
        Self {
            values: vec![0.0; layout.dim()],
            layout,
        }
    }

    pub fn from_values(layout: Arc<BlockLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::Conformance(format!(
                "{} values for a layout of dimension {}",
                values.len(),
                layout.dim()
            )));
        }
        Ok(Self { values, layout })
    }

    /// A single-block vector, for problems without block structure.
    pub fn flat(values: Vec<f64>) -> Self {
        let layout = Arc::new(BlockLayout::single(values.len()));
        Self { values, layout }
    }

    /// The barycenter of every block simplex: entry `1 / l_i` in block `i`.
    pub fn uniform_center(layout: Arc<BlockLayout>) -> Self {
        let mut x = Self::zeros(layout);
        for i in 0..x.num_blocks() {
            let w = 1.0 / x.layout.size(i) as f64;
            x.block_mut(i).fill(w);
        }
        x
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.layout.num_blocks()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.values[self.layout.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let range = self.layout.range(i);
        &mut self.values[range]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.num_blocks()).map(move |i| self.block(i))
    }

    pub fn same_layout(&self, other: &BlockVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn dot(&self, other: &BlockVector) -> f64 {
        dot(&self.values, &other.values)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self - other`, keeping the layout of `self`.
    pub fn sub(&self, other: &BlockVector) -> BlockVector {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        BlockVector {
            values,
            layout: Arc::clone(&self.layout),
        }
    }

    /// `self + alpha * d`.
    pub fn add_scaled(&self, alpha: f64, d: &BlockVector) -> BlockVector {
        let values = self
            .values
            .iter()
            .zip(&d.values)
            .map(|(x, di)| x + alpha * di)
            .collect();
        BlockVector {
            values,
            layout: Arc::clone(&self.layout),
        }
    }

    pub fn block_sums(&self) -> Vec<f64> {
        self.blocks().map(|b| b.iter().sum()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for BlockVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

impl IndexMut<usize> for BlockVector {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.values[k]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One rotamer per position, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteAssignment {
    choice: Vec<usize>,
}

impl DiscreteAssignment {
    pub fn new(choice: Vec<usize>) -> Self {
        Self { choice }
    }

    /// Builds from the 1-based indices used in files and on the command line.
    pub fn from_one_based(choice: &[usize]) -> Result<Self> {
        choice
            .iter()
            .enumerate()
            .map(|(block, &c)| {
                c.checked_sub(1).ok_or(Error::InvalidAssignment {
                    block,
                    size: 0,
                    choice: c,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn choices(&self) -> &[usize] {
        &self.choice
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.choice.iter().map(|c| c + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    pub fn validate(&self, spec: &InstanceSpec) -> Result<()> {
        if self.choice.len() != spec.n() {
            return Err(Error::Conformance(format!(
                "assignment has {} positions, instance has {}",
                self.choice.len(),
                spec.n()
            )));
        }
        for (block, (&c, &size)) in self.choice.iter().zip(spec.block_sizes()).enumerate() {
            if c >= size {
                return Err(Error::InvalidAssignment {
                    block,
                    size,
                    choice: c + 1,
                });
            }
        }
        Ok(())
    }

    /// The 0/1 indicator vector with a single one per block.
    pub fn expand(&self, spec: &InstanceSpec) -> Result<BlockVector> {
        self.validate(spec)?;
        let mut x = spec.zeros();
        for (i, &c) in self.choice.iter().enumerate() {
            x.block_mut(i)[c] = 1.0;
        }
        Ok(x)
    }
}

impl fmt::Display for DiscreteAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.choice {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{}", c + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// Indices `s` with `x^{(j)}_s > tol`, ascending, for every block `j`.
pub fn support_profile(x: &BlockVector, tol: f64) -> Vec<Vec<usize>> {
    x.blocks()
        .map(|b| {
            b.iter()
                .enumerate()
                .filter(|(_, &v)| v > tol)
                .map(|(s, _)| s)
                .collect()
        })
        .collect()
}
