use alloc::format;
use alloc::vec::Vec;

use crate::model::{ModelFamily, ModelSpec, SuffStat};
use crate::{Domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NeighborhoodOrder {
    /// Horizontal and vertical neighbours.
    First,
    /// First order plus the four diagonal neighbours.
    Second,
}

impl NeighborhoodOrder {
    pub fn of(spec: &ModelSpec) -> Result<Self> {
        match spec.family() {
            ModelFamily::IsingFirstOrder => Ok(Self::First),
            ModelFamily::IsingSecondOrder => Ok(Self::Second),
            _ => Err(Error::InvalidModel("not an Ising model")),
        }
    }

    pub fn statistic_count(self) -> usize {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

pub(crate) fn lattice_dims(spec: &ModelSpec) -> Result<(usize, usize)> {
    match spec.domain() {
        Domain::Lattice { rows, cols } => Ok((rows, cols)),
        Domain::Graph { .. } => Err(Error::InvalidModel("not a lattice model")),
    }
}

/// Number of unordered horizontal/vertical pairs, `2 m m' - m - m'`.
pub fn first_order_pairs(rows: usize, cols: usize) -> usize {
    2 * rows * cols - rows - cols
}

/// Number of unordered diagonal pairs, `2 (m - 1)(m' - 1)`.
pub fn diagonal_pairs(rows: usize, cols: usize) -> usize {
    2 * (rows - 1) * (cols - 1)
}

/// A spin configuration in `{-1, +1}^(rows * cols)`, stored column-major:
/// top to bottom within a column, columns left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeConfig {
    rows: usize,
    cols: usize,
    spins: Vec<i8>,
}

impl LatticeConfig {
    pub fn new(rows: usize, cols: usize, spins: Vec<i8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidLattice(format!(
                "empty lattice {rows}x{cols}"
            )));
        }
        if spins.len() != rows * cols {
            return Err(Error::InvalidLattice(format!(
                "expected {} spins, got {}",
                rows * cols,
                spins.len()
            )));
        }
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidLattice(format!(
                "spin value {bad} not in {{-1, 1}}"
            )));
        }
        Ok(Self { rows, cols, spins })
    }

    pub fn uniform(rows: usize, cols: usize, spin: i8) -> Result<Self> {
        Self::new(rows, cols, alloc::vec![spin; rows * cols])
    }

    /// Builds from row-major rows (the order the lattice file lists them in).
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let m = rows.len();
        let mp = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != mp) {
            return Err(Error::InvalidLattice("ragged rows".into()));
        }
        let mut spins = alloc::vec![0i8; m * mp];
        for (r, row) in rows.iter().enumerate() {
            for (c, &s) in row.iter().enumerate() {
                spins[c * m + r] = s;
            }
        }
        Self::new(m, mp, spins)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn sites(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.spins[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, spin: i8) {
        assert!(spin == 1 || spin == -1);
        self.spins[col * self.rows + row] = spin;
    }

    pub fn flipped(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| i64::from(s)).sum()
    }

    /// `(s1, s2)`: sums of `y_i y_j` over unordered first-order and diagonal pairs.
    pub fn pair_sums(&self) -> (i64, i64) {
        let (m, mp) = (self.rows, self.cols);
        let mut s1 = 0i64;
        let mut s2 = 0i64;
        for c in 0..mp {
            for r in 0..m {
                let y = i64::from(self.get(r, c));
                if r + 1 < m {
                    s1 += y * i64::from(self.get(r + 1, c));
                }
                if c + 1 < mp {
                    s1 += y * i64::from(self.get(r, c + 1));
                    if r + 1 < m {
                        s2 += y * i64::from(self.get(r + 1, c + 1));
                    }
                    if r > 0 {
                        s2 += y * i64::from(self.get(r - 1, c + 1));
                    }
                }
            }
        }
        (s1, s2)
    }
}

/// Sufficient statistics of a lattice; each unordered pair is counted once.
pub fn suff_stats(y: &LatticeConfig, order: NeighborhoodOrder) -> SuffStat {
    let (s1, s2) = y.pair_sums();
    match order {
        NeighborhoodOrder::First => SuffStat(alloc::vec![s1 as f64]),
        NeighborhoodOrder::Second => SuffStat(alloc::vec![s1 as f64, s2 as f64]),
    }
}
