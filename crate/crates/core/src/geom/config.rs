//! Chart definitions from TOML.
//!
//! ```toml
//! kind = "ball_conformally_flat"
//! n = 4
//! resolution = 21
//! w = "round_sphere"
//! ```
//!
//! Profiles are `"round_sphere"`, `"flat"`, `{ even_poly = [c0, c1, ...] }` (in `r^2`),
//! `{ poly = [...] }` (in `r`), or `{ sum = [...] }`.

use super::chart::Chart;
use super::field::{EvenPoly, Poly1d, Radial, RadialProfile, RoundSphere, SumProfile};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    RoundSphere,
    Flat,
    EvenPoly(Vec<f64>),
    Poly(Vec<f64>),
    Sum(Vec<ProfileSpec>),
}

impl ProfileSpec {
    pub fn build(&self) -> Arc<dyn RadialProfile> {
        match self {
            Self::RoundSphere => Arc::new(RoundSphere),
            Self::Flat => Arc::new(EvenPoly(vec![])),
            Self::EvenPoly(c) => Arc::new(EvenPoly(c.clone())),
            Self::Poly(c) => Arc::new(Poly1d(c.clone())),
            Self::Sum(parts) => Arc::new(SumProfile(parts.iter().map(Self::build).collect())),
        }
    }

    /// Odd powers of `r` are not smooth at the origin of a ball.
    fn check_even(&self) -> Result<()> {
        match self {
            Self::Poly(c) if c.iter().skip(1).step_by(2).any(|v| *v != 0.0) => {
                Err(Error::Config("ball profiles must be even in r; use even_poly".into()))
            }
            Self::Sum(parts) => parts.iter().try_for_each(Self::check_even),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    HalfBallFlat {
        n: usize,
        resolution: usize,
    },
    BallConformallyFlat {
        n: usize,
        resolution: usize,
        w: ProfileSpec,
    },
    /// `dt^2 + e^{-2p(t)} |dx'|^2` on `[-half, half]^{n-1} x [0, depth]`.
    RadialProfile {
        n: usize,
        resolution: usize,
        half: f64,
        depth: f64,
        p: ProfileSpec,
    },
}

impl ChartSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n(&self) -> usize {
        match self {
            Self::HalfBallFlat { n, .. } | Self::BallConformallyFlat { n, .. } | Self::RadialProfile { n, .. } => *n,
        }
    }

    /// Radial conformal exponent of a ball chart (`0` for the flat half ball).
    pub fn radial_w(&self) -> Result<Arc<dyn RadialProfile>> {
        match self {
            Self::HalfBallFlat { .. } => Ok(ProfileSpec::Flat.build()),
            Self::BallConformallyFlat { w, .. } => {
                w.check_even()?;
                Ok(w.build())
            }
            Self::RadialProfile { .. } => Err(Error::Config("radial_profile charts have no ball exponent".into())),
        }
    }

    pub fn build(&self) -> Result<Chart> {
        if self.n() < 3 {
            return Err(Error::Config(format!("dimension {} below 3", self.n())));
        }
        match self {
            Self::HalfBallFlat { n, resolution } => Chart::half_ball_flat(*n, *resolution),
            Self::BallConformallyFlat { n, resolution, .. } => {
                Chart::ball_conformally_flat(*n, *resolution, Arc::new(Radial(self.radial_w()?)))
            }
            Self::RadialProfile { n, resolution, half, depth, p } => {
                if !(*half > 0.0 && *depth > 0.0) {
                    return Err(Error::Config("radial_profile bounds must be positive".into()));
                }
                Chart::radial_profile(*n, *resolution, *half, *depth, p.build())
            }
        }
        .map_err(|e| match e {
            Error::Domain(m) => Error::Config(m),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::chart::ChartKind;

    #[test]
    fn hemisphere_from_toml() {
        let spec =
            ChartSpec::from_toml("kind = \"ball_conformally_flat\"\nn = 4\nresolution = 9\nw = \"round_sphere\"\n")
                .unwrap();
        let chart = spec.build().unwrap();
        assert_eq!(chart.kind, ChartKind::BallConformallyFlat);
        let g = chart.metric(&[0.0; 4]);
        assert!((g[(0, 0)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn perturbed_profile_and_round_trip() {
        let text = "kind = \"ball_conformally_flat\"\nn = 5\nresolution = 11\n\n[w]\nsum = [\"round_sphere\", { even_poly = [0.0, 0.1] }]\n";
        let spec = ChartSpec::from_toml(text).unwrap();
        let w = spec.radial_w().unwrap();
        assert!((w.value(1.0) - 0.1).abs() < 1e-14);
        let back = ChartSpec::from_toml(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn profile_chart_and_half_ball() {
        let spec = ChartSpec::from_toml(
            "kind = \"radial_profile\"\nn = 4\nresolution = 7\nhalf = 0.5\ndepth = 0.4\np = { poly = [0.0, 0.3] }\n",
        )
        .unwrap();
        assert_eq!(spec.build().unwrap().kind, ChartKind::RadialProfile);
        let flat = ChartSpec::from_toml("kind = \"half_ball_flat\"\nn = 3\nresolution = 5\n").unwrap();
        assert_eq!(flat.build().unwrap().kind, ChartKind::HalfBallFlat);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            "kind = \"general_grid\"\nn = 3\nresolution = 9\n",
            "kind = \"half_ball_flat\"\nn = 3\nresolution = 3\n",
            "kind = \"half_ball_flat\"\nn = 3\nresolution = 9\nextra = 1\n",
            "kind = \"ball_conformally_flat\"\nn = 4\nresolution = 9\nw = { poly = [0.0, 1.0] }\n",
            "kind = \"radial_profile\"\nn = 4\nresolution = 7\nhalf = -1.0\ndepth = 0.4\np = \"flat\"\n",
        ] {
            let r = ChartSpec::from_toml(text).and_then(|s| s.build());
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        }
    }
}
