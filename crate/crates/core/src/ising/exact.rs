//! Exact partition functions for small and moderate lattices.
//!
//! Three independent routes: enumeration of all `2^N` configurations,
//! a column-to-column transfer recursion over `2^m` column states, and a
//! density-of-states table `N(s1, s2)` built by the same column sweep but
//! carrying statistic histograms instead of weights. The last one is
//! data- and parameter-free, so a single table serves every grid node.

use alloc::vec::Vec;

use super::lattice::{diagonal_pairs, first_order_pairs, lattice_dims, NeighborhoodOrder};
use crate::math::{self, LogSumExp};
use crate::model::{check_dim, LogPartition, ModelSpec};
use crate::{Error, Result};

pub const MAX_ENUMERATION_SITES: usize = 20;
pub const MAX_TRANSFER_HEIGHT: usize = 14;

type Pairs = Vec<(usize, usize)>;

fn pair_lists(rows: usize, cols: usize) -> (Pairs, Pairs) {
    let idx = |r: usize, c: usize| c * rows + r;
    let mut first = Vec::new();
    let mut diag = Vec::new();
    for c in 0..cols {
        for r in 0..rows {
            if r + 1 < rows {
                first.push((idx(r, c), idx(r + 1, c)));
            }
            if c + 1 < cols {
                first.push((idx(r, c), idx(r, c + 1)));
                if r + 1 < rows {
                    diag.push((idx(r, c), idx(r + 1, c + 1)));
                }
                if r > 0 {
                    diag.push((idx(r, c), idx(r - 1, c + 1)));
                }
            }
        }
    }
    (first, diag)
}

/// `log z(theta)` by enumerating every configuration, accumulated with log-sum-exp.
pub fn z_brute(theta: &[f64], spec: &ModelSpec) -> Result<f64> {
    let order = NeighborhoodOrder::of(spec)?;
    check_dim(order.statistic_count(), theta.len())?;
    let (rows, cols) = lattice_dims(spec)?;
    let n = rows * cols;
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::EnumerationTooLarge {
            size: n,
            max: MAX_ENUMERATION_SITES,
        });
    }
    let (first, diag) = pair_lists(rows, cols);
    let pair_sum = |mask: u32, pairs: &[(usize, usize)]| -> i64 {
        pairs
            .iter()
            .map(|&(k, l)| {
                if (mask >> k ^ mask >> l) & 1 == 0 {
                    1
                } else {
                    -1
                }
            })
            .sum()
    };
    let mut acc = LogSumExp::default();
    for mask in 0..(1u32 << n) {
        let mut e = theta[0] * pair_sum(mask, &first) as f64;
        if order == NeighborhoodOrder::Second {
            e += theta[1] * pair_sum(mask, &diag) as f64;
        }
        acc.add(e);
    }
    Ok(acc.value())
}

/// Enumeration oracle as a [`LogPartition`].
#[derive(Clone, Copy, Debug)]
pub struct BruteForce {
    spec: ModelSpec,
}

impl BruteForce {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        NeighborhoodOrder::of(spec)?;
        if spec.variables() > MAX_ENUMERATION_SITES {
            return Err(Error::EnumerationTooLarge {
                size: spec.variables(),
                max: MAX_ENUMERATION_SITES,
            });
        }
        Ok(Self { spec: *spec })
    }
}

impl LogPartition for BruteForce {
    fn dim(&self) -> usize {
        self.spec.statistic_count()
    }

    fn log_z(&self, theta: &[f64]) -> f64 {
        z_brute(theta, &self.spec).expect("validated at construction")
    }
}

/// Column geometry shared by the transfer recursion and the state-count table.
/// The lattice is transposed when needed so columns are the short side; both
/// neighbourhoods are invariant under transposition.
#[derive(Clone, Copy, Debug)]
struct Columns {
    height: usize,
    width: usize,
    order: NeighborhoodOrder,
}

impl Columns {
    fn new(spec: &ModelSpec) -> Result<Self> {
        let order = NeighborhoodOrder::of(spec)?;
        let (rows, cols) = lattice_dims(spec)?;
        let (height, width) = if rows <= cols {
            (rows, cols)
        } else {
            (cols, rows)
        };
        if height > MAX_TRANSFER_HEIGHT {
            return Err(Error::TransferTooLarge {
                height,
                max: MAX_TRANSFER_HEIGHT,
            });
        }
        Ok(Self {
            height,
            width,
            order,
        })
    }

    fn states(&self) -> usize {
        1 << self.height
    }

    fn inner_mask(&self) -> u32 {
        (1u32 << (self.height - 1)) - 1
    }

    /// Vertical pair sum within one column.
    #[inline]
    fn intra(&self, b: u32) -> i32 {
        (self.height as i32 - 1) - 2 * ((b ^ (b >> 1)) & self.inner_mask()).count_ones() as i32
    }

    /// Horizontal pair sum between adjacent columns.
    #[inline]
    fn inter(&self, a: u32, b: u32) -> i32 {
        self.height as i32 - 2 * (a ^ b).count_ones() as i32
    }

    /// Diagonal pair sum between adjacent columns.
    #[inline]
    fn diag(&self, a: u32, b: u32) -> i32 {
        let mask = self.inner_mask();
        let disagree = ((a ^ (b >> 1)) & mask).count_ones() + (((a >> 1) ^ b) & mask).count_ones();
        2 * (self.height as i32 - 1) - 2 * disagree as i32
    }
}

/// Transfer-recursion oracle, exact up to floating point.
#[derive(Clone, Copy, Debug)]
pub struct TransferOracle {
    cols: Columns,
}

impl TransferOracle {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            cols: Columns::new(spec)?,
        })
    }

    pub fn log_z_checked(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.cols.order.statistic_count(), theta.len())?;
        Ok(self.transfer(theta))
    }

    fn transfer(&self, theta: &[f64]) -> f64 {
        let g = &self.cols;
        let m = g.height as i32;
        let t1 = theta[0];
        let t2 = if g.order == NeighborhoodOrder::Second {
            theta[1]
        } else {
            0.0
        };
        let inter_w: Vec<f64> = (-m..=m).map(|k| math::exp(t1 * f64::from(k))).collect();
        let dmax = 2 * (m - 1);
        let diag_w: Vec<f64> = (-dmax..=dmax)
            .map(|k| math::exp(t2 * f64::from(k)))
            .collect();
        let ns = g.states();
        let intra_w: Vec<f64> = (0..ns as u32)
            .map(|b| math::exp(t1 * f64::from(g.intra(b))))
            .collect();

        let mut v = intra_w.clone();
        let mut log_scale = rescale(&mut v);
        let mut next = alloc::vec![0.0; ns];
        for _ in 1..g.width {
            for (b, slot) in next.iter_mut().enumerate() {
                let b = b as u32;
                let mut acc = 0.0;
                if g.order == NeighborhoodOrder::Second {
                    for (a, &va) in v.iter().enumerate() {
                        let a = a as u32;
                        acc += va
                            * inter_w[(g.inter(a, b) + m) as usize]
                            * diag_w[(g.diag(a, b) + dmax) as usize];
                    }
                } else {
                    for (a, &va) in v.iter().enumerate() {
                        acc += va * inter_w[(g.inter(a as u32, b) + m) as usize];
                    }
                }
                *slot = acc * intra_w[b as usize];
            }
            core::mem::swap(&mut v, &mut next);
            log_scale += rescale(&mut v);
        }
        log_scale + math::ln(v.iter().sum())
    }
}

fn rescale(v: &mut [f64]) -> f64 {
    let max = v.iter().copied().fold(0.0, f64::max);
    for x in v.iter_mut() {
        *x /= max;
    }
    math::ln(max)
}

impl LogPartition for TransferOracle {
    fn dim(&self) -> usize {
        self.cols.order.statistic_count()
    }

    fn log_z(&self, theta: &[f64]) -> f64 {
        self.transfer(theta)
    }
}

/// `log z(theta)` by the column transfer recursion.
pub fn z_transfer(theta: &[f64], spec: &ModelSpec) -> Result<f64> {
    TransferOracle::new(spec)?.log_z_checked(theta)
}

/// Exact number of configurations at each statistic value, `N(s1, s2)`.
///
/// Counts are held as `f64`; they are exact while the total `2^N` stays
/// below `2^53`.
#[derive(Clone, Debug)]
pub struct StateCounts {
    order: NeighborhoodOrder,
    s1_max: i32,
    s2_max: i32,
    /// Dense table indexed `[(s1 + s1_max) * n2 + (s2 + s2_max)]`.
    counts: Vec<f64>,
    s1_support: Vec<(i32, usize)>,
    s2_support: Vec<(i32, usize)>,
}

impl StateCounts {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let g = Columns::new(spec)?;
        let (rows, cols) = lattice_dims(spec)?;
        let s1_max = first_order_pairs(rows, cols) as i32;
        let s2_max = match g.order {
            NeighborhoodOrder::First => 0,
            NeighborhoodOrder::Second => diagonal_pairs(rows, cols) as i32,
        };
        let n2 = (2 * s2_max + 1) as usize;
        let size = (2 * s1_max + 1) as usize * n2;
        let ns = g.states();
        let second = g.order == NeighborhoodOrder::Second;

        let mut layer: Vec<Vec<f64>> = (0..ns).map(|_| alloc::vec![0.0; size]).collect();
        let mut bounds: Vec<(usize, usize)> = alloc::vec![(usize::MAX, 0); ns];
        for (a, h) in layer.iter_mut().enumerate() {
            let idx = ((g.intra(a as u32) + s1_max) as usize) * n2 + s2_max as usize;
            h[idx] = 1.0;
            bounds[a] = (idx, idx);
        }
        for _ in 1..g.width {
            let mut next: Vec<Vec<f64>> = (0..ns).map(|_| alloc::vec![0.0; size]).collect();
            let mut next_bounds = alloc::vec![(usize::MAX, 0usize); ns];
            for (b, hb) in next.iter_mut().enumerate() {
                let b = b as u32;
                let intra_b = g.intra(b);
                for (a, ha) in layer.iter().enumerate() {
                    let (lo, hi) = bounds[a];
                    if lo > hi {
                        continue;
                    }
                    let a = a as u32;
                    let d1 = g.inter(a, b) + intra_b;
                    let d2 = if second { g.diag(a, b) } else { 0 };
                    let shift = d1 as isize * n2 as isize + d2 as isize;
                    let dst_lo = (lo as isize + shift) as usize;
                    let dst_hi = (hi as isize + shift) as usize;
                    for (dst, src) in hb[dst_lo..=dst_hi].iter_mut().zip(&ha[lo..=hi]) {
                        *dst += src;
                    }
                    let nb = &mut next_bounds[b as usize];
                    nb.0 = nb.0.min(dst_lo);
                    nb.1 = nb.1.max(dst_hi);
                }
            }
            layer = next;
            bounds = next_bounds;
        }
        let mut counts = alloc::vec![0.0; size];
        for h in &layer {
            for (c, x) in counts.iter_mut().zip(h) {
                *c += x;
            }
        }
        let mut s1_support = Vec::new();
        let mut s2_support = Vec::new();
        for i in 0..(2 * s1_max + 1) as usize {
            if counts[i * n2..(i + 1) * n2].iter().any(|&c| c > 0.0) {
                s1_support.push((i as i32 - s1_max, i));
            }
        }
        for j in 0..n2 {
            if (0..(2 * s1_max + 1) as usize).any(|i| counts[i * n2 + j] > 0.0) {
                s2_support.push((j as i32 - s2_max, j));
            }
        }
        Ok(Self {
            order: g.order,
            s1_max,
            s2_max,
            counts,
            s1_support,
            s2_support,
        })
    }

    /// Number of configurations with the given statistics.
    pub fn count(&self, s1: i32, s2: i32) -> f64 {
        if s1.abs() > self.s1_max || s2.abs() > self.s2_max {
            return 0.0;
        }
        let n2 = (2 * self.s2_max + 1) as usize;
        self.counts[(s1 + self.s1_max) as usize * n2 + (s2 + self.s2_max) as usize]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn log_z_slow(&self, t1: f64, t2: f64) -> f64 {
        let n2 = (2 * self.s2_max + 1) as usize;
        let mut acc = LogSumExp::default();
        for &(s1, i) in &self.s1_support {
            for &(s2, j) in &self.s2_support {
                let c = self.counts[i * n2 + j];
                if c > 0.0 {
                    acc.add(math::ln(c) + t1 * f64::from(s1) + t2 * f64::from(s2));
                }
            }
        }
        acc.value()
    }
}

impl LogPartition for StateCounts {
    fn dim(&self) -> usize {
        self.order.statistic_count()
    }

    fn log_z(&self, theta: &[f64]) -> f64 {
        let t1 = theta[0];
        let t2 = if self.order == NeighborhoodOrder::Second {
            theta[1]
        } else {
            0.0
        };
        let c1 = self
            .s1_support
            .iter()
            .map(|&(s, _)| t1 * f64::from(s))
            .fold(f64::NEG_INFINITY, f64::max);
        let c2 = self
            .s2_support
            .iter()
            .map(|&(s, _)| t2 * f64::from(s))
            .fold(f64::NEG_INFINITY, f64::max);
        let e2: Vec<(usize, f64)> = self
            .s2_support
            .iter()
            .map(|&(s, j)| (j, math::exp(t2 * f64::from(s) - c2)))
            .collect();
        let n2 = (2 * self.s2_max + 1) as usize;
        let mut total = 0.0;
        for &(s1, i) in &self.s1_support {
            let e1 = math::exp(t1 * f64::from(s1) - c1);
            let row = &self.counts[i * n2..(i + 1) * n2];
            let inner: f64 = e2.iter().map(|&(j, w)| row[j] * w).sum();
            total += e1 * inner;
        }
        // The separate shifts can underflow when the joint maximum sits far below c1 + c2.
        if total > 1e-250 && total.is_finite() {
            c1 + c2 + math::ln(total)
        } else {
            self.log_z_slow(t1, t2)
        }
    }
}
