//! Synthetic development datasets.
//!
//! Shapes follow the usual descriptions (blob mixtures, a rectangle outline,
//! concentric circles, interleaved moons). The numeric constants below are
//! this crate's own choices:
//!
//! | kind                    | dim | classes | construction                                   |
//! |-------------------------|-----|---------|------------------------------------------------|
//! | `density_gradient`      | 2   | 1       | isotropic Gaussian, stdev 1                    |
//! | `rectangle`             | 2   | 4       | evenly spaced along a 2 x 1 outline, one class per side |
//! | `ejected_mass`          | 2   | 2       | uniform unit square plus far outliers (class 1) at radius 3 to 5 |
//! | `small_line`            | 1   | 1       | points at 0, 1, 2, ...                         |
//! | `fixed_density_blobs`   | 6   | 5       | stdev 0.5 blobs centered at `10 * e_k`         |
//! | `varying_density_blobs` | 8   | 3       | stdevs 0.25 / 0.6 / 1.2 centered at `10 * e_k` |
//! | `circles`               | 2   | 2       | radii 1 and 0.5                                |
//! | `moons`                 | 2   | 2       | two interleaved half circles                   |
//! | `gradient_50d`          | 50  | 1       | 50-D analog of `density_gradient`              |
//!
//! `noise` is a uniform perpendicular offset bound for `rectangle` and
//! `small_line`, and an additive isotropic Gaussian stdev for every other
//! kind. Each blob draws from its own ChaCha stream, so adding points to one
//! blob never perturbs another.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    DensityGradient,
    Rectangle,
    EjectedMass,
    SmallLine,
    FixedDensityBlobs,
    VaryingDensityBlobs,
    Circles,
    Moons,
    #[serde(rename = "gradient_50d")]
    Gradient50d,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 9] = [
        SyntheticKind::DensityGradient,
        SyntheticKind::Rectangle,
        SyntheticKind::EjectedMass,
        SyntheticKind::SmallLine,
        SyntheticKind::FixedDensityBlobs,
        SyntheticKind::VaryingDensityBlobs,
        SyntheticKind::Circles,
        SyntheticKind::Moons,
        SyntheticKind::Gradient50d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntheticKind::DensityGradient => "density_gradient",
            SyntheticKind::Rectangle => "rectangle",
            SyntheticKind::EjectedMass => "ejected_mass",
            SyntheticKind::SmallLine => "small_line",
            SyntheticKind::FixedDensityBlobs => "fixed_density_blobs",
            SyntheticKind::VaryingDensityBlobs => "varying_density_blobs",
            SyntheticKind::Circles => "circles",
            SyntheticKind::Moons => "moons",
            SyntheticKind::Gradient50d => "gradient_50d",
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            SyntheticKind::SmallLine => 2,
            SyntheticKind::Circles | SyntheticKind::Moons => 4,
            SyntheticKind::Rectangle => 8,
            SyntheticKind::VaryingDensityBlobs => 6,
            SyntheticKind::DensityGradient
            | SyntheticKind::EjectedMass
            | SyntheticKind::FixedDensityBlobs
            | SyntheticKind::Gradient50d => 10,
        }
    }

    /// Default point count, matching the sizes of the development suite.
    pub fn default_points(self) -> usize {
        match self {
            SyntheticKind::SmallLine => 10,
            SyntheticKind::DensityGradient | SyntheticKind::EjectedMass => 300,
            SyntheticKind::Rectangle => 400,
            SyntheticKind::Circles => 900,
            SyntheticKind::Moons => 1000,
            SyntheticKind::FixedDensityBlobs | SyntheticKind::VaryingDensityBlobs => 1000,
            SyntheticKind::Gradient50d => 500,
        }
    }

    pub fn default_noise(self) -> f64 {
        match self {
            SyntheticKind::Rectangle => 0.01,
            SyntheticKind::Circles | SyntheticKind::Moons => 0.05,
            _ => 0.0,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            SyntheticKind::SmallLine => 1,
            SyntheticKind::FixedDensityBlobs => 6,
            SyntheticKind::VaryingDensityBlobs => 8,
            SyntheticKind::Gradient50d => 50,
            _ => 2,
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown dataset kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n_points: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec with the kind's default noise.
    pub fn new(kind: SyntheticKind, n_points: usize, seed: u64) -> Self {
        Self {
            kind,
            n_points,
            noise: kind.default_noise(),
            seed,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

/// Generates a labeled dataset for `spec`.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset, DataError> {
    let kind = spec.kind;
    if spec.n_points < kind.min_points() {
        return Err(DataError::TooFewPoints {
            kind,
            min: kind.min_points(),
            got: spec.n_points,
        });
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(DataError::InvalidNoise(spec.noise));
    }
    let n = spec.n_points;
    let (values, labels) = match kind {
        SyntheticKind::DensityGradient => single_blob(n, 2, spec.seed),
        SyntheticKind::Gradient50d => single_blob(n, 50, spec.seed),
        SyntheticKind::Rectangle => rectangle(n, spec.noise, spec.seed),
        SyntheticKind::EjectedMass => ejected_mass(n, spec.seed),
        SyntheticKind::SmallLine => small_line(n, spec.noise, spec.seed),
        SyntheticKind::FixedDensityBlobs => axis_blobs(n, 6, &[0.5; 5], spec.seed),
        SyntheticKind::VaryingDensityBlobs => axis_blobs(n, 8, &[0.25, 0.6, 1.2], spec.seed),
        SyntheticKind::Circles => circles(n),
        SyntheticKind::Moons => moons(n),
    };
    let mut values = values;
    let gaussian_noise = !matches!(kind, SyntheticKind::Rectangle | SyntheticKind::SmallLine);
    if gaussian_noise && spec.noise > 0.0 {
        let mut rng = stream(spec.seed, u64::MAX);
        for v in &mut values {
            *v += spec.noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Dataset::new(kind.as_str(), values, kind.dim(), Some(labels))
}

/// Isotropic Gaussian blobs with explicit centers and per-blob stdevs.
/// Points are split as evenly as possible, earlier blobs taking the
/// remainder.
pub fn gaussian_blobs(
    name: &str,
    n: usize,
    centers: &[Vec<f64>],
    stdevs: &[f64],
    seed: u64,
) -> Result<Dataset, DataError> {
    assert_eq!(centers.len(), stdevs.len(), "one stdev per center");
    let dim = centers.first().map_or(0, Vec::len);
    let k = centers.len();
    let mut values = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (b, (center, &sd)) in centers.iter().zip(stdevs).enumerate() {
        let count = n / k + usize::from(b < n % k);
        let mut rng = stream(seed, b as u64);
        for _ in 0..count {
            for &c in center {
                values.push(c + sd * rng.sample::<f64, _>(StandardNormal));
            }
            labels.push(b as i64);
        }
    }
    Dataset::new(name, values, dim, Some(labels))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn single_blob(n: usize, dim: usize, seed: u64) -> (Vec<f64>, Vec<i64>) {
    let mut rng = stream(seed, 0);
    let values = (0..n * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    (values, vec![0; n])
}

fn axis_blobs(n: usize, dim: usize, stdevs: &[f64], seed: u64) -> (Vec<f64>, Vec<i64>) {
    let centers: Vec<Vec<f64>> = (0..stdevs.len())
        .map(|k| {
            let mut c = vec![0.0; dim];
            c[k] = 10.0;
            c
        })
        .collect();
    let ds = gaussian_blobs("", n, &centers, stdevs, seed).expect("valid blob layout");
    let labels = ds.labels().expect("blobs are labeled").to_vec();
    (ds.values().to_vec(), labels)
}

fn rectangle(n: usize, noise: f64, seed: u64) -> (Vec<f64>, Vec<i64>) {
    const W: f64 = 2.0;
    const H: f64 = 1.0;
    let perimeter = 2.0 * (W + H);
    let mut rng = stream(seed, 0);
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 + 0.5) * perimeter / n as f64;
        let jitter = if noise > 0.0 {
            rng.random_range(-noise..=noise)
        } else {
            0.0
        };
        // walk counter-clockwise from the origin: bottom, right, top, left
        let (x, y, side) = if t < W {
            (t, jitter, 0)
        } else if t < W + H {
            (W + jitter, t - W, 1)
        } else if t < 2.0 * W + H {
            (W - (t - W - H), H + jitter, 2)
        } else {
            (jitter, H - (t - 2.0 * W - H), 3)
        };
        values.extend([x, y]);
        labels.push(side);
    }
    (values, labels)
}

fn ejected_mass(n: usize, seed: u64) -> (Vec<f64>, Vec<i64>) {
    let outliers = (n / 60).clamp(1, 5);
    let mass = n - outliers;
    let mut rng = stream(seed, 0);
    let mut values = Vec::with_capacity(2 * n);
    for _ in 0..mass {
        values.push(rng.random::<f64>());
        values.push(rng.random::<f64>());
    }
    let mut rng = stream(seed, 1);
    for k in 0..outliers {
        let angle = 2.0 * PI * (k as f64 + rng.random::<f64>() * 0.5) / outliers as f64;
        let radius = rng.random_range(3.0..5.0);
        values.push(0.5 + radius * angle.cos());
        values.push(0.5 + radius * angle.sin());
    }
    let mut labels = vec![0; mass];
    labels.extend(std::iter::repeat_n(1, outliers));
    (values, labels)
}

fn small_line(n: usize, noise: f64, seed: u64) -> (Vec<f64>, Vec<i64>) {
    let mut rng = stream(seed, 0);
    let values = (0..n)
        .map(|i| {
            let jitter = if noise > 0.0 {
                rng.random_range(-noise..=noise)
            } else {
                0.0
            };
            i as f64 + jitter
        })
        .collect();
    (values, vec![0; n])
}

fn circles(n: usize) -> (Vec<f64>, Vec<i64>) {
    const INNER: f64 = 0.5;
    let n_out = n / 2;
    let n_in = n - n_out;
    let mut values = Vec::with_capacity(2 * n);
    for i in 0..n_out {
        let t = 2.0 * PI * i as f64 / n_out as f64;
        values.extend([t.cos(), t.sin()]);
    }
    for i in 0..n_in {
        let t = 2.0 * PI * i as f64 / n_in as f64;
        values.extend([INNER * t.cos(), INNER * t.sin()]);
    }
    let mut labels = vec![0; n_out];
    labels.extend(std::iter::repeat_n(1, n_in));
    (values, labels)
}

fn moons(n: usize) -> (Vec<f64>, Vec<i64>) {
    let n_out = n / 2;
    let n_in = n - n_out;
    let step = |count: usize, i: usize| {
        if count > 1 {
            PI * i as f64 / (count - 1) as f64
        } else {
            0.0
        }
    };
    let mut values = Vec::with_capacity(2 * n);
    for i in 0..n_out {
        let t = step(n_out, i);
        values.extend([t.cos(), t.sin()]);
    }
    for i in 0..n_in {
        let t = step(n_in, i);
        values.extend([1.0 - t.cos(), 1.0 - t.sin() - 0.5]);
    }
    let mut labels = vec![0; n_out];
    labels.extend(std::iter::repeat_n(1, n_in));
    (values, labels)
}
