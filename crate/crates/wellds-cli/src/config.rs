//! Scenario configuration: a TOML-serializable description of domain, mesh,
//! permeability, well, kernel, fluid, boundary conditions, and solver
//! settings, with presets for the reference studies.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wellds::{FluidProperties, Mat3, PermeabilityTensor, Vec3, WellDescription};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid permeability tensor: {0}")]
    Permeability(String),
    #[error("invalid well description: {0}")]
    Well(String),
    #[error("invalid fluid properties")]
    Fluid,
    #[error("boundary type 'analytic' requires a [shell] section")]
    ShellMissing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeCfg {
    Tpfa,
    Mpfa,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainCfg {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Base-level cell counts; refinement level `k` multiplies them by `2^k`.
    pub cells: [usize; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermeabilityCfg {
    /// Anisotropy ratio of the axis-aligned tensor `diag(1, 1, α)·scale`.
    pub alpha: f64,
    /// Rotation about the first axis [degrees].
    pub gamma1_deg: f64,
    /// Rotation about the second axis [degrees].
    pub gamma2_deg: f64,
    /// Base permeability [m²].
    pub scale: f64,
    /// Explicit tensor override; takes precedence over (α, γ₁, γ₂).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[[f64; 3]; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentCfg {
    pub start: [f64; 3],
    pub end: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellCfg {
    /// A point on the well axis.
    pub point: [f64; 3],
    /// Well-direction rotation about the first axis [degrees].
    pub beta1_deg: f64,
    /// Well-direction rotation about the second axis [degrees].
    pub beta2_deg: f64,
    pub radius: f64,
    pub pressure: f64,
    pub rate: f64,
    /// Finite well segment; overrides `point` and the direction angles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<SegmentCfg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCfg {
    /// Inner annulus radius in w-coordinates; `None` selects the focal
    /// distance (the smallest admissible value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    /// Outer annulus radius as a multiple of the bore-circle radius.
    pub outer_ratio: f64,
    /// Absolute outer radius override [m in w-coordinates].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    /// Replace the conformal-map factor Φ_J by its far-field value 4.
    pub simplified_jacobian: bool,
    /// Shrink the outer radius proportionally to the grid width under
    /// refinement (the base level keeps `outer_ratio`).
    pub adaptive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidCfg {
    pub density: f64,
    pub viscosity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverCfg {
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaceCfg {
    Neumann { flux: f64 },
    Dirichlet { pressure: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BoundaryCfg {
    /// Constrain every cell outside the domain box (within the shell mesh) to
    /// the analytic regularized solution.
    Analytic,
    /// Per-face conditions in the order x-min, x-max, y-min, y-max, z-min,
    /// z-max.
    Faces { faces: [FaceCfg; 6] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub scheme: SchemeCfg,
    pub domain: DomainCfg,
    /// Embedding mesh for analytic-Dirichlet experiments; the computational
    /// mesh covers the shell and the cells outside `domain` are constrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell: Option<DomainCfg>,
    pub permeability: PermeabilityCfg,
    pub well: WellCfg,
    pub kernel: KernelCfg,
    pub fluid: FluidCfg,
    pub solver: SolverCfg,
    pub boundary: BoundaryCfg,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::reference_study(10.0)
    }
}

pub fn deg(angle: f64) -> f64 {
    angle * std::f64::consts::PI / 180.0
}

impl Scenario {
    /// Infinite-well analytic-Dirichlet setup: Ω = [−100,100]² × [0,100],
    /// β₁ = β₂ = 20°, γ₁ = γ₂ = −20°, 20×20×10 interior cells at the base
    /// level inside a constrained shell.
    pub fn reference_study(alpha: f64) -> Self {
        Self {
            scheme: SchemeCfg::Mpfa,
            domain: DomainCfg {
                lo: [-100.0, -100.0, 0.0],
                hi: [100.0, 100.0, 100.0],
                cells: [20, 20, 10],
            },
            shell: Some(DomainCfg {
                lo: [-110.0, -110.0, -50.0],
                hi: [110.0, 110.0, 150.0],
                cells: [22, 22, 20],
            }),
            permeability: PermeabilityCfg {
                alpha,
                gamma1_deg: -20.0,
                gamma2_deg: -20.0,
                scale: 1e-12,
                tensor: None,
            },
            well: WellCfg {
                point: [0.0, 0.0, 0.0],
                beta1_deg: 20.0,
                beta2_deg: 20.0,
                radius: 0.1,
                pressure: 1e6,
                rate: 1.0,
                segment: None,
            },
            kernel: KernelCfg {
                inner: None,
                outer_ratio: 100.0,
                outer: None,
                simplified_jacobian: false,
                adaptive: false,
            },
            fluid: FluidCfg {
                density: 1000.0,
                viscosity: 1e-3,
            },
            solver: SolverCfg {
                tolerance: 1e-10,
                max_iterations: 20_000,
            },
            boundary: BoundaryCfg::Analytic,
        }
    }

    /// Slanted-well comparison setup: Ω = [−50,50] × [−100,100] × [0,100]
    /// with K = diag(0.1, 1, 1)·1e-12, the finite segment
    /// (−20,−50,25)→(20,50,75), no-flow boundaries except Dirichlet planes at
    /// the y-extremes, and TPFA.
    pub fn comparison() -> Self {
        let mut sc = Self::reference_study(0.1);
        sc.scheme = SchemeCfg::Tpfa;
        sc.domain = DomainCfg {
            lo: [-50.0, -100.0, 0.0],
            hi: [50.0, 100.0, 100.0],
            cells: [10, 20, 10],
        };
        sc.shell = None;
        sc.permeability = PermeabilityCfg {
            alpha: 0.1,
            gamma1_deg: 0.0,
            gamma2_deg: 90.0,
            scale: 1e-12,
            tensor: None,
        };
        sc.well.segment = Some(SegmentCfg {
            start: [-20.0, -50.0, 25.0],
            end: [20.0, 50.0, 75.0],
        });
        sc.boundary = BoundaryCfg::Faces {
            faces: [
                FaceCfg::Neumann { flux: 0.0 },
                FaceCfg::Neumann { flux: 0.0 },
                FaceCfg::Dirichlet { pressure: 1e5 },
                FaceCfg::Dirichlet { pressure: 3e5 },
                FaceCfg::Neumann { flux: 0.0 },
                FaceCfg::Neumann { flux: 0.0 },
            ],
        };
        sc
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Permeability tensor `K(γ₁, γ₂) = R₁ R₂ diag(1,1,α)·scale R₂ᵀ R₁ᵀ`, or
    /// the explicit override.
    pub fn permeability(&self) -> Result<PermeabilityTensor, ConfigError> {
        let p = &self.permeability;
        let entries = match p.tensor {
            Some(rows) => wellds::linalg::Mat3(rows),
            None => {
                let r = Mat3::rotation_x(deg(p.gamma1_deg)) * Mat3::rotation_y(deg(p.gamma2_deg));
                let d = Mat3::diag([p.scale, p.scale, p.alpha * p.scale]);
                r * d * r.transpose()
            }
        };
        PermeabilityTensor::new(entries).map_err(|e| ConfigError::Permeability(e.to_string()))
    }

    /// Well description; for segment wells the point is the segment start and
    /// the direction points toward the end.
    pub fn well(&self) -> Result<WellDescription, ConfigError> {
        let w = &self.well;
        let (point, direction) = match w.segment {
            Some(seg) => {
                let start = Vec3::new(seg.start[0], seg.start[1], seg.start[2]);
                let end = Vec3::new(seg.end[0], seg.end[1], seg.end[2]);
                (start, end - start)
            }
            None => {
                let dir = Mat3::rotation_x(deg(w.beta1_deg)) * Mat3::rotation_y(deg(w.beta2_deg))
                    * Vec3::unit(2);
                (Vec3::new(w.point[0], w.point[1], w.point[2]), dir)
            }
        };
        WellDescription::new(point, direction, w.radius, w.pressure, w.rate)
            .map_err(|e| ConfigError::Well(e.to_string()))
    }

    /// Arc-length extent of a segment well relative to the well point.
    pub fn segment_range(&self) -> Option<(f64, f64)> {
        self.well.segment.map(|seg| {
            let d = [
                seg.end[0] - seg.start[0],
                seg.end[1] - seg.start[1],
                seg.end[2] - seg.start[2],
            ];
            (0.0, (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
        })
    }

    pub fn fluid(&self) -> Result<FluidProperties, ConfigError> {
        FluidProperties::new(self.fluid.density, self.fluid.viscosity)
            .map_err(|_| ConfigError::Fluid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_losslessly() {
        for sc in [
            Scenario::reference_study(1.0),
            Scenario::reference_study(100.0),
            Scenario::comparison(),
        ] {
            let text = sc.to_toml().unwrap();
            let back: Scenario = toml::from_str(&text).unwrap();
            assert_eq!(back, sc);
        }
    }

    #[test]
    fn default_matches_study_preset() {
        assert_eq!(Scenario::default(), Scenario::reference_study(10.0));
    }

    #[test]
    fn study_direction_matches_rotation_angles() {
        // ψ = R₁(β₁)R₂(β₂)e₃ = (sin β₂, −sin β₁ cos β₂, cos β₁ cos β₂).
        let sc = Scenario::reference_study(1.0);
        let w = sc.well().unwrap();
        let b = deg(20.0);
        let expect = Vec3::new(b.sin(), -b.sin() * b.cos(), b.cos() * b.cos()).normalized();
        assert!((w.direction - expect).norm() < 1e-12);
    }

    #[test]
    fn comparison_segment_well() {
        let sc = Scenario::comparison();
        let w = sc.well().unwrap();
        assert!((w.point - Vec3::new(-20.0, -50.0, 25.0)).norm() < 1e-12);
        let (s0, s1) = sc.segment_range().unwrap();
        assert_eq!(s0, 0.0);
        let expect = (40.0f64 * 40.0 + 100.0 * 100.0 + 50.0 * 50.0).sqrt();
        assert!((s1 - expect).abs() < 1e-12);
    }

    #[test]
    fn comparison_tensor_is_diagonal() {
        // K(0°, 90°) with α = 0.1 maps the weak axis onto x₁.
        let sc = Scenario::comparison();
        let k = sc.permeability().unwrap();
        let m = k.entries();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(m.0[i][j].abs() < 1e-25, "K[{i}][{j}] = {}", m.0[i][j]);
                }
            }
        }
        assert!((m.0[0][0] - 0.1e-12).abs() < 1e-25);
        assert!((m.0[1][1] - 1e-12).abs() < 1e-25);
        assert!((m.0[2][2] - 1e-12).abs() < 1e-25);
    }

    #[test]
    fn explicit_tensor_override() {
        let mut sc = Scenario::reference_study(1.0);
        sc.permeability.tensor = Some([[2e-12, 0.0, 0.0], [0.0, 1e-12, 0.0], [0.0, 0.0, 1e-12]]);
        let k = sc.permeability().unwrap();
        assert_eq!(k.entries().0[0][0], 2e-12);
    }
}
