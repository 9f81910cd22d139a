//! Experiment configuration: one TOML file with a section per command.

use serde::{Deserialize, Serialize};
use sigmak_core::geom::config::{ChartSpec, ProfileSpec};
use sigmak_core::solver::PathKind;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub chart: ChartSpec,
    pub identities: IdentitiesConfig,
    pub curvature: CurvatureConfig,
    pub gaussbonnet: GaussBonnetConfig,
    pub variation: VariationConfig,
    pub solve: SolveConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            chart: ChartSpec::BallConformallyFlat { n: 4, resolution: 11, w: ProfileSpec::RoundSphere },
            identities: IdentitiesConfig::default(),
            curvature: CurvatureConfig::default(),
            gaussbonnet: GaussBonnetConfig::default(),
            variation: VariationConfig::default(),
            solve: SolveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub instances: usize,
    pub max_dim: usize,
    /// `(n, k)` pairs for the structure conditions of the normalized operator.
    pub structure: Vec<(usize, usize)>,
    /// `(n, k)` pairs for the boundary-term checks.
    pub boundary_terms: Vec<(usize, usize)>,
    /// Identity whose right-hand side is perturbed, to exercise the failure path.
    pub sabotage: Option<String>,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        Self {
            instances: 1000,
            max_dim: 6,
            structure: vec![(3, 1), (4, 2), (6, 2), (6, 3)],
            boundary_terms: vec![(6, 3), (8, 3), (8, 4)],
            sabotage: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Bound on the exact (non-refinement) residuals.
    pub tol: f64,
    /// Boundary sample points for the boundary identities.
    pub boundary_points: usize,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        Self { tol: 1e-6, boundary_points: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussBonnetConfig {
    /// Simpson intervals of the radial rule.
    pub radial: usize,
    pub polar: usize,
    pub azimuth: usize,
    /// Relative tolerance of `F_{n/2}` against its closed-form value.
    pub tol: f64,
    /// Random radial conformal factors for the drift check.
    pub samples: usize,
    pub amplitude: f64,
    pub drift_factor: f64,
}

impl Default for GaussBonnetConfig {
    fn default() -> Self {
        Self { radial: 16, polar: 16, azimuth: 24, tol: 1e-3, samples: 5, amplitude: 0.2, drift_factor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationConfig {
    pub k: Vec<usize>,
    /// Radial variation directions.
    pub directions: Vec<ProfileSpec>,
    pub volume_preserving: bool,
    /// Gauss nodes of the radial rule.
    pub radial: usize,
    /// Relative residual bound, or absolute derivative bound when `n = 2k`.
    pub tol: f64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            k: vec![2],
            directions: vec![ProfileSpec::EvenPoly(vec![0.3, -0.5, 0.2]), ProfileSpec::EvenPoly(vec![0.0, 0.4])],
            volume_preserving: false,
            radial: 32,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Constant,
    ExpMinus,
    ExpPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    /// Damped Newton on the target equation from `start`.
    Sigma,
    Pos,
    Defm,
    Lcf,
}

impl SolvePath {
    pub fn name(self) -> &'static str {
        match self {
            SolvePath::Sigma => "sigma",
            SolvePath::Pos => "pos",
            SolvePath::Defm => "defm",
            SolvePath::Lcf => "lcf",
        }
    }

    pub fn kind(self) -> PathKind {
        match self {
            SolvePath::Sigma => PathKind::Sigma,
            SolvePath::Pos => PathKind::Pos,
            SolvePath::Defm => PathKind::Defm,
            SolvePath::Lcf => PathKind::Lcf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub k: usize,
    pub nodes: usize,
    pub target: TargetKind,
    /// Coefficient of the target.
    pub c: f64,
    pub mu_hat: f64,
    /// Newton start for the `sigma` path.
    pub start: ProfileSpec,
    pub paths: Vec<SolvePath>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            k: 2,
            nodes: 201,
            target: TargetKind::ExpMinus,
            c: 2.0,
            mu_hat: 0.0,
            start: ProfileSpec::EvenPoly(vec![0.3]),
            paths: vec![SolvePath::Sigma, SolvePath::Pos, SolvePath::Defm],
            tol: 1e-11,
            max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }

    /// Apply command-line overrides; `grid` and `tol` go to the settings of `command`.
    pub fn apply(&mut self, command: &str, o: Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(g) = o.grid {
            match command {
                "curvature" => set_resolution(&mut self.chart, g),
                "gaussbonnet" => self.gaussbonnet.radial = g,
                "variation" => self.variation.radial = g,
                "solve" => self.solve.nodes = g,
                _ => {}
            }
        }
        if let Some(t) = o.tol {
            match command {
                "curvature" => self.curvature.tol = t,
                "gaussbonnet" => self.gaussbonnet.tol = t,
                "variation" => self.variation.tol = t,
                "solve" => self.solve.tol = t,
                _ => {}
            }
        }
    }
}

fn set_resolution(chart: &mut ChartSpec, g: usize) {
    match chart {
        ChartSpec::HalfBallFlat { resolution, .. }
        | ChartSpec::BallConformallyFlat { resolution, .. }
        | ChartSpec::RadialProfile { resolution, .. } => *resolution = g,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let c = ExperimentConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c: ExperimentConfig = toml::from_str("seed = 3\n[solve]\nnodes = 51\npaths = [\"pos\"]\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.solve.nodes, 51);
        assert_eq!(c.solve.k, 2);
        assert_eq!(c.identities, IdentitiesConfig::default());
    }

    #[test]
    fn overrides_target_the_command() {
        let mut c = ExperimentConfig::default();
        c.apply("solve", Overrides { seed: Some(9), grid: Some(61), tol: Some(1e-9) });
        assert_eq!((c.seed, c.solve.nodes, c.solve.tol), (9, 61, 1e-9));
        assert_eq!(c.variation.radial, 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("sed = 3\n").is_err());
    }
}
