use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{Chart, CoordKind};
use crate::error::{Error, Result};
use crate::par::Exec;

/// Sample set for pointwise scans: a tensor lattice plus seeded random points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub samples_per_coord: usize,
    pub random_samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            samples_per_coord: 32,
            random_samples: 2048,
            seed: 0x5eed,
            exec: Exec::default(),
        }
    }
}

impl GridSpec {
    pub fn new(samples_per_coord: usize, random_samples: usize, seed: u64) -> Self {
        GridSpec {
            samples_per_coord,
            random_samples,
            seed,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_coord < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 samples per coordinate".into()));
        }
        Ok(())
    }

    /// Lattice points (row-major, last coordinate fastest) followed by the
    /// random points.
    pub fn points(&self, chart: &Chart) -> Result<Vec<Vec<f64>>> {
        let mut pts = self.lattice(chart)?;
        pts.extend(self.random(chart));
        Ok(pts)
    }

    pub fn lattice(&self, chart: &Chart) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let n = self.samples_per_coord;
        let axes: Vec<Vec<f64>> = chart
            .kinds()
            .iter()
            .map(|k| match *k {
                CoordKind::Periodic { period } => {
                    (0..n).map(|i| period * i as f64 / n as f64).collect()
                }
                CoordKind::Bounded { lo, hi } => (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect(),
            })
            .collect();
        let mut out = vec![Vec::with_capacity(axes.len())];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |x| {
                        let mut q = p.clone();
                        q.push(*x);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn random(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.random_samples)
            .map(|_| {
                (0..chart.dim())
                    .map(|i| {
                        let (lo, hi) = chart.sample_range(i);
                        rng.gen_range(lo..hi)
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::new([
            ("a", CoordKind::unit_periodic()),
            ("b", CoordKind::Bounded { lo: 1.0, hi: 2.0 }),
        ])
        .unwrap()
    }

    #[test]
    fn lattice_shape_and_order() {
        let g = GridSpec::new(4, 3, 1);
        let pts = g.points(&chart()).unwrap();
        assert_eq!(pts.len(), 16 + 3);
        assert_eq!(pts[0], vec![0.0, 1.0]);
        assert_eq!(pts[1], vec![0.0, 1.0 + 1.0 / 3.0]);
        assert_eq!(pts[4], vec![0.25, 1.0]);
        assert_eq!(pts[15], vec![0.75, 2.0]);
        for p in &pts[16..] {
            assert!((0.0..1.0).contains(&p[0]) && (1.0..2.0).contains(&p[1]));
        }
    }

    #[test]
    fn seeded_points_repeat() {
        let g = GridSpec::new(2, 10, 99);
        assert_eq!(g.random(&chart()), g.random(&chart()));
        assert_ne!(g.random(&chart()), GridSpec::new(2, 10, 100).random(&chart()));
    }

    #[test]
    fn rejects_single_sample() {
        assert!(GridSpec::new(1, 0, 0).lattice(&chart()).is_err());
    }
}
