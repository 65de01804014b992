//! Seeded synthetic datasets with known group membership.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, Schema};
use crate::error::Result;
use crate::geometry::Lens;
use crate::thd::ThdParams;

/// Two isotropic Gaussian blobs with unit standard deviation, separated by
/// `separation` along the first coordinate. The `blob` column labels rows
/// `A` (the first `sizes.0` rows) or `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBlobs {
    pub sizes: (usize, usize),
    pub dims: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for TwoBlobs {
    fn default() -> Self {
        TwoBlobs {
            sizes: (200, 300),
            dims: 3,
            separation: 10.0,
            seed: 0,
        }
    }
}

impl TwoBlobs {
    pub const LABEL: &'static str = "blob";

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (0..self.dims).map(|j| format!("x{j}")).collect();
        h.push(Self::LABEL.to_string());
        h
    }

    pub fn rows(&self) -> Vec<(Vec<f64>, &'static str)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut out = Vec::with_capacity(self.sizes.0 + self.sizes.1);
        for (count, offset, label) in [(self.sizes.0, 0.0, "A"), (self.sizes.1, self.separation, "B")] {
            for _ in 0..count {
                let mut x: Vec<f64> = (0..self.dims).map(|_| normal.sample(&mut rng)).collect();
                x[0] += offset;
                out.push((x, label));
            }
        }
        out
    }

    pub fn schema() -> Schema {
        Schema {
            label: Some(Self::LABEL.to_string()),
            ..Schema::default()
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let records = self
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, (x, label))| {
                let mut rec: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
                rec.push(label.to_string());
                (i as u64 + 2, rec)
            })
            .collect();
        Dataset::from_records(self.header(), records, &Self::schema())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header().join(",");
        s.push('\n');
        for (x, label) in self.rows() {
            let cells: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push(',');
            s.push_str(label);
            s.push('\n');
        }
        s
    }

    /// Decomposition settings under which the default draw splits once into
    /// its two blobs and stops: the classical MDS lens, resolution capped at
    /// 30, everything else at the defaults.
    pub fn params() -> ThdParams {
        ThdParams {
            lens: Lens::Mds { dims: 2 },
            max_resolution: 30,
            ..ThdParams::default()
        }
    }

    /// Whether row `r` was drawn from blob A.
    pub fn in_a(&self, r: usize) -> bool {
        r < self.sizes.0
    }
}
