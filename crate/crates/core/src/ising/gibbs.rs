use alloc::vec::Vec;

use rand::RngCore;

use super::lattice::{lattice_dims, LatticeConfig, NeighborhoodOrder};
use crate::model::{check_dim, ModelSpec, ParamVector};
use crate::{math, RandomStream, Result};

const TABLE: usize = 81;
const ONE: u64 = 1 << 32;

/// Single-site heat-bath sampler over a zero-padded copy of the lattice.
///
/// The padding ring holds zeros, so free-boundary sites need no branches.
/// Full conditionals depend on the lattice only through the integer
/// neighbour sums, so the acceptance thresholds for a fixed `theta` are
/// tabulated once per draw.
#[derive(Clone, Debug)]
pub struct IsingSampler {
    rows: usize,
    cols: usize,
    order: NeighborhoodOrder,
    stride: usize,
    buf: Vec<i8>,
    thresholds: [u64; TABLE],
    zero_field: bool,
}

impl IsingSampler {
    pub fn new(rows: usize, cols: usize, order: NeighborhoodOrder) -> Self {
        let stride = rows + 2;
        Self {
            rows,
            cols,
            order,
            stride,
            buf: alloc::vec![0; stride * (cols + 2)],
            thresholds: [ONE / 2; TABLE],
            zero_field: true,
        }
    }

    pub fn for_spec(spec: &ModelSpec) -> Result<Self> {
        let (rows, cols) = lattice_dims(spec)?;
        Ok(Self::new(rows, cols, NeighborhoodOrder::of(spec)?))
    }

    pub fn order(&self) -> NeighborhoodOrder {
        self.order
    }

    #[inline]
    fn pad(&self, r: usize, c: usize) -> usize {
        (c + 1) * self.stride + r + 1
    }

    /// Tabulates `P(y_i = +1 | rest) = 1 / (1 + exp(-2 h))` for every neighbour-sum pair.
    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        check_dim(self.order.statistic_count(), theta.len())?;
        let t1 = theta[0];
        let t2 = theta.get(1).copied().unwrap_or(0.0);
        self.zero_field = t1 == 0.0 && t2 == 0.0;
        for n1 in -4i32..=4 {
            for n2 in -4i32..=4 {
                let h = t1 * f64::from(n1) + t2 * f64::from(n2);
                let p = 1.0 / (1.0 + math::exp(-2.0 * h));
                let thr = libm::round(p * ONE as f64) as u64;
                self.thresholds[((n1 + 4) * 9 + n2 + 4) as usize] = thr.min(ONE);
            }
        }
        Ok(())
    }

    pub fn randomize(&mut self, rng: &mut RandomStream) {
        let mut bits = 0u64;
        let mut left = 0;
        for c in 0..self.cols {
            for r in 0..self.rows {
                if left == 0 {
                    bits = rng.next_u64();
                    left = 64;
                }
                let p = self.pad(r, c);
                self.buf[p] = if bits & 1 == 1 { 1 } else { -1 };
                bits >>= 1;
                left -= 1;
            }
        }
    }

    pub fn load(&mut self, y: &LatticeConfig) {
        assert_eq!((y.rows(), y.cols()), (self.rows, self.cols));
        for c in 0..self.cols {
            for r in 0..self.rows {
                let p = self.pad(r, c);
                self.buf[p] = y.get(r, c);
            }
        }
    }

    pub fn config(&self) -> LatticeConfig {
        let mut spins = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                spins.push(self.buf[self.pad(r, c)]);
            }
        }
        LatticeConfig::new(self.rows, self.cols, spins).expect("sampler holds a valid lattice")
    }

    /// One column-major raster pass of heat-bath updates.
    pub fn sweep(&mut self, rng: &mut RandomStream) {
        let s = self.stride;
        let buf = &mut self.buf;
        let thr = &self.thresholds;
        match self.order {
            NeighborhoodOrder::First => {
                for c in 0..self.cols {
                    let base = (c + 1) * s + 1;
                    for p in base..base + self.rows {
                        let n1 = i32::from(buf[p - 1] + buf[p + 1] + buf[p - s] + buf[p + s]);
                        let t = thr[((n1 + 4) * 9 + 4) as usize];
                        buf[p] = if u64::from(rng.next_u32()) < t { 1 } else { -1 };
                    }
                }
            }
            NeighborhoodOrder::Second => {
                for c in 0..self.cols {
                    let base = (c + 1) * s + 1;
                    for p in base..base + self.rows {
                        let n1 = i32::from(buf[p - 1] + buf[p + 1] + buf[p - s] + buf[p + s]);
                        let n2 = i32::from(
                            buf[p - s - 1] + buf[p - s + 1] + buf[p + s - 1] + buf[p + s + 1],
                        );
                        let t = thr[((n1 + 4) * 9 + n2 + 4) as usize];
                        buf[p] = if u64::from(rng.next_u32()) < t { 1 } else { -1 };
                    }
                }
            }
        }
    }

    /// `(s1, s2)` of the current state.
    pub fn pair_sums(&self) -> (i64, i64) {
        let s = self.stride;
        let mut s1 = 0i32;
        let mut s2 = 0i32;
        for c in 0..self.cols {
            let base = (c + 1) * s + 1;
            for p in base..base + self.rows {
                let y = i32::from(self.buf[p]);
                s1 += y * i32::from(self.buf[p + 1] + self.buf[p + s]);
                s2 += y * i32::from(self.buf[p + s + 1] + self.buf[p + s - 1]);
            }
        }
        (i64::from(s1), i64::from(s2))
    }

    fn push_stats(&self, out: &mut Vec<f64>) {
        let (s1, s2) = self.pair_sums();
        out.push(s1 as f64);
        if self.order == NeighborhoodOrder::Second {
            out.push(s2 as f64);
        }
    }

    /// Appends the statistics of `draws` approximate realizations from `f(. | theta)`.
    ///
    /// The chain starts from uniformly random spins; the first draw is taken
    /// after `sweeps` sweeps and each further draw after `thin` more. At
    /// `theta = 0` every conditional is a fair coin, so each draw is an exact
    /// uniform configuration and no sweeps are run.
    pub fn draw_stats(
        &mut self,
        theta: &[f64],
        sweeps: usize,
        draws: usize,
        thin: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.set_theta(theta)?;
        if self.zero_field {
            for _ in 0..draws {
                self.randomize(rng);
                self.push_stats(out);
            }
            return Ok(());
        }
        self.randomize(rng);
        for k in 0..draws {
            let n = if k == 0 { sweeps } else { thin };
            for _ in 0..n {
                self.sweep(rng);
            }
            self.push_stats(out);
        }
        Ok(())
    }

    /// Appends `draws` further statistics from the current chain, `thin` sweeps apart,
    /// at the parameter of the last `draw_stats` call.
    pub fn extend_stats(
        &mut self,
        draws: usize,
        thin: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) {
        for _ in 0..draws {
            if self.zero_field {
                self.randomize(rng);
            } else {
                for _ in 0..thin {
                    self.sweep(rng);
                }
            }
            self.push_stats(out);
        }
    }
}

/// One full sweep of single-site Gibbs updates.
pub fn gibbs_sweep(
    y: &LatticeConfig,
    theta: &ParamVector,
    order: NeighborhoodOrder,
    rng: &mut RandomStream,
) -> Result<LatticeConfig> {
    let mut sampler = IsingSampler::new(y.rows(), y.cols(), order);
    sampler.set_theta(theta)?;
    sampler.load(y);
    sampler.sweep(rng);
    Ok(sampler.config())
}

/// Lattice after `n_sweeps` sweeps from a uniformly random start.
pub fn sample_approx(
    theta: &ParamVector,
    spec: &ModelSpec,
    n_sweeps: usize,
    rng: &mut RandomStream,
) -> Result<LatticeConfig> {
    if n_sweeps == 0 {
        return Err(crate::Error::InvalidConfig(
            "n_sweeps must be at least 1".into(),
        ));
    }
    let mut sampler = IsingSampler::for_spec(spec)?;
    sampler.set_theta(theta)?;
    sampler.randomize(rng);
    for _ in 0..n_sweeps {
        sampler.sweep(rng);
    }
    Ok(sampler.config())
}
