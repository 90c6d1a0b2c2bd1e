//! Modulators applied inside the expansion filters and the small-cluster
//! reassignment step.
//!
//! | hook | inputs                               | role                                   |
//! |------|--------------------------------------|----------------------------------------|
//! | h1   | standardized deviation `z`, blur `b` | left side of the level-1 test          |
//! | h2   | expansion `e`, root density `D`      | level-1 threshold                      |
//! | h3   | per-dimension pattern gap `g`        | compared against `tau` in level 2      |
//! | h4   | dataset scale `s`, dimension `d`     | reach cap for reassigning small clusters |
//!
//! The default forms:
//!
//! * `h1(z, b) = z * (1 - b)`; at `b = 1` every candidate passes level 1.
//! * `h2(e, D) = e / (1 - e + 1e-6)`; `e = 0` gives a zero threshold and
//!   `e -> 1` an unbounded one. `D` is accepted but unused.
//! * `h3(g) = g`.
//! * `h4(s, d) = 0.1 * sqrt(s) / sqrt(d)`.
//!
//! [`HeuristicsMode::Identity`] turns every hook into a pass-through (`h4`
//! becomes `+inf`), which reduces level 1 to the bare test
//! `(delta - mu) / Delta > e`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

const H2_EPS: f64 = 1e-6;
const H4_FRACTION: f64 = 0.1;

/// The four modulator hooks used by the clustering engine.
pub trait Modulators {
    fn h1(&self, z: f64, blur: f64) -> f64;
    fn h2(&self, expansion: f64, density: f64) -> f64;
    fn h3(&self, gap: f64) -> f64;
    fn h4(&self, scale: f64, dim: usize) -> f64;
}

impl<M: Modulators + ?Sized> Modulators for &M {
    fn h1(&self, z: f64, blur: f64) -> f64 {
        (**self).h1(z, blur)
    }
    fn h2(&self, expansion: f64, density: f64) -> f64 {
        (**self).h2(expansion, density)
    }
    fn h3(&self, gap: f64) -> f64 {
        (**self).h3(gap)
    }
    fn h4(&self, scale: f64, dim: usize) -> f64 {
        (**self).h4(scale, dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicsMode {
    #[default]
    Default,
    Identity,
}

impl HeuristicsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicsMode::Default => "default",
            HeuristicsMode::Identity => "identity",
        }
    }
}

impl fmt::Display for HeuristicsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeuristicsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "default" => Ok(HeuristicsMode::Default),
            "identity" => Ok(HeuristicsMode::Identity),
            other => Err(format!("unknown heuristics mode {other:?}")),
        }
    }
}

/// Built-in modulators selected by [`HeuristicsMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HeuristicSet {
    pub mode: HeuristicsMode,
}

impl HeuristicSet {
    pub fn new(mode: HeuristicsMode) -> Self {
        Self { mode }
    }

    /// Evaluates one hook after checking its argument domain.
    pub fn apply(&self, call: HeuristicCall) -> Result<f64, HeuristicError> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(HeuristicError::OutOfDomain { arg: name, value: v })
            }
        };
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(HeuristicError::OutOfDomain { arg: name, value: v })
            }
        };
        match call {
            HeuristicCall::H1 { z, blur } => {
                finite("z", z)?;
                unit("blur", blur)?;
                Ok(self.h1(z, blur))
            }
            HeuristicCall::H2 { expansion, density } => {
                unit("expansion", expansion)?;
                if !(density > 0.0) {
                    return Err(HeuristicError::OutOfDomain {
                        arg: "density",
                        value: density,
                    });
                }
                Ok(self.h2(expansion, density))
            }
            HeuristicCall::H3 { gap } => {
                if !(gap >= 0.0 && gap.is_finite()) {
                    return Err(HeuristicError::OutOfDomain { arg: "gap", value: gap });
                }
                Ok(self.h3(gap))
            }
            HeuristicCall::H4 { scale, dim } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(HeuristicError::OutOfDomain {
                        arg: "scale",
                        value: scale,
                    });
                }
                if dim == 0 {
                    return Err(HeuristicError::OutOfDomain { arg: "dim", value: 0.0 });
                }
                Ok(self.h4(scale, dim))
            }
        }
    }
}

impl From<HeuristicsMode> for HeuristicSet {
    fn from(mode: HeuristicsMode) -> Self {
        Self { mode }
    }
}

impl Modulators for HeuristicSet {
    fn h1(&self, z: f64, blur: f64) -> f64 {
        match self.mode {
            HeuristicsMode::Default => z * (1.0 - blur),
            HeuristicsMode::Identity => z,
        }
    }

    fn h2(&self, expansion: f64, _density: f64) -> f64 {
        match self.mode {
            HeuristicsMode::Default => expansion / (1.0 - expansion + H2_EPS),
            HeuristicsMode::Identity => expansion,
        }
    }

    fn h3(&self, gap: f64) -> f64 {
        gap
    }

    fn h4(&self, scale: f64, dim: usize) -> f64 {
        match self.mode {
            HeuristicsMode::Default => H4_FRACTION * scale.sqrt() / (dim as f64).sqrt(),
            HeuristicsMode::Identity => f64::INFINITY,
        }
    }
}

/// A single hook invocation for [`HeuristicSet::apply`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeuristicCall {
    H1 { z: f64, blur: f64 },
    H2 { expansion: f64, density: f64 },
    H3 { gap: f64 },
    H4 { scale: f64, dim: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeuristicError {
    #[error("argument {arg} = {value} outside its domain")]
    OutOfDomain { arg: &'static str, value: f64 },
}
