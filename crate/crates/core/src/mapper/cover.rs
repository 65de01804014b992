use serde::{Deserialize, Serialize};

use crate::error::{Result, ThdError};
use crate::geometry::FilterValues;

/// Resolution `N` (bins per filter axis) and gain `g`. Each bin spans `g`
/// base intervals, so adjacent bins overlap by a fraction `1 - 1/g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverParams {
    pub resolution: usize,
    pub gain: f64,
}

impl CoverParams {
    pub fn new(resolution: usize, gain: f64) -> Result<Self> {
        let p = CoverParams { resolution, gain };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 1 {
            return Err(ThdError::InvalidParameter("resolution must be >= 1".into()));
        }
        if !(self.gain >= 1.0) || !self.gain.is_finite() {
            return Err(ThdError::InvalidParameter(format!("gain must be >= 1, got {}", self.gain)));
        }
        Ok(())
    }

    pub fn overlap_fraction(&self) -> f64 {
        1.0 - 1.0 / self.gain
    }
}

/// Generalized interval `prod_j [center_j - half_width_j, center_j + half_width_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Flat position in the lattice, axis 0 most significant.
    pub index: usize,
    pub lattice: Vec<usize>,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl Bin {
    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width[axis]
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_width[axis]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Axis {
    lo: f64,
    hi: f64,
    count: usize,
    base: f64,
    centers: Vec<f64>,
    half_width: f64,
}

impl Axis {
    /// Bins of this axis containing `x`: half-open membership, closed at the
    /// global maximum, and always including the base interval holding `x`.
    fn members(&self, x: f64) -> Vec<usize> {
        if self.count == 1 {
            return vec![0];
        }
        let home = (((x - self.lo) / self.base).floor().max(0.0) as usize).min(self.count - 1);
        (0..self.count)
            .filter(|&i| {
                let c = self.centers[i];
                let inside = x >= c - self.half_width && x < c + self.half_width;
                inside || i == home || (x == self.hi && i == self.count - 1)
            })
            .collect()
    }
}

/// Lattice of `N^d` bins over the bounding box of a set of filter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub params: CoverParams,
    pub bins: Vec<Bin>,
    axes: Vec<Axis>,
}

impl Cover {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Bin indices (ascending) whose region holds `point`.
    pub fn bins_of(&self, point: &[f64]) -> Vec<usize> {
        let mut acc = vec![0usize];
        for (axis, &x) in self.axes.iter().zip(point) {
            let here = axis.members(x);
            acc = acc
                .iter()
                .flat_map(|&prefix| here.iter().map(move |&i| prefix * axis.count + i))
                .collect();
        }
        acc
    }
}

pub fn build_cover(filter: &FilterValues, params: CoverParams) -> Result<Cover> {
    params.validate()?;
    if filter.n == 0 {
        return Err(ThdError::EmptyGroup);
    }
    let axes: Vec<Axis> = (0..filter.dim)
        .map(|a| {
            let (lo, hi) = (0..filter.n).map(|i| filter.get(i, a)).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
                (l.min(v), h.max(v))
            });
            let range = hi - lo;
            if range > 0.0 {
                let count = params.resolution;
                let base = range / count as f64;
                Axis {
                    lo,
                    hi,
                    count,
                    base,
                    centers: (0..count).map(|i| lo + base * (i as f64 + 0.5)).collect(),
                    half_width: base * params.gain / 2.0,
                }
            } else {
                // Degenerate axis collapses to one bin.
                Axis {
                    lo,
                    hi,
                    count: 1,
                    base: 0.0,
                    centers: vec![lo],
                    half_width: 0.0,
                }
            }
        })
        .collect();

    let total: usize = axes.iter().map(|a| a.count).product();
    let bins = (0..total)
        .map(|index| {
            let mut lattice = vec![0; axes.len()];
            let mut rest = index;
            for (a, axis) in axes.iter().enumerate().rev() {
                lattice[a] = rest % axis.count;
                rest /= axis.count;
            }
            Bin {
                index,
                center: lattice.iter().zip(&axes).map(|(&i, ax)| ax.centers[i]).collect(),
                half_width: axes.iter().map(|ax| ax.half_width).collect(),
                lattice,
            }
        })
        .collect();
    Ok(Cover { params, bins, axes })
}

/// Rows (as indices into `filter`) falling in each bin, ascending.
pub fn assign_bins(filter: &FilterValues, cover: &Cover) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cover.bins.len()];
    for i in 0..filter.n {
        for b in cover.bins_of(filter.point(i)) {
            out[b].push(i);
        }
    }
    out
}
