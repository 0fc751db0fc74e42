//! The four reference experiments: grid convergence, outer-kernel-radius
//! influence, rotation robustness, and the comparison against the
//! Peaceman-type baseline.

use thiserror::Error;

use crate::config::{BoundaryCfg, ConfigError, FaceCfg, Scenario, SchemeCfg};
use wellds::analytic::AnalyticError;
use wellds::fvm::{self, FvmError, Scheme, WellCoupling, WellModel};
use wellds::kernels::kernel_ellipse_axes;
use wellds::mesh::{
    intersect_well, restrict_to_segment, BoundarySpec, FaceCondition, StructuredMesh,
    WellIntersection,
};
use wellds::peaceman::{slanted_well_source, PeacemanError, WellIndexInput};
use wellds::{
    AnalyticSolution, FluidProperties, KernelSpec, PermeabilityTensor, Vec3, WellDescription,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Fvm(#[from] FvmError),
    #[error(transparent)]
    Peaceman(#[from] PeacemanError),
    #[error("mesh construction failed: {0}")]
    Mesh(String),
    #[error("the well does not intersect the domain")]
    NoIntersections,
    #[error("reference refinement level {reference} must exceed every test level (max {max_test})")]
    ReferenceTooCoarse { reference: u32, max_test: u32 },
}

/// A fully instantiated scenario at one refinement level.
pub struct Case {
    pub mesh: StructuredMesh,
    pub permeability: PermeabilityTensor,
    pub fluid: FluidProperties,
    pub well: WellDescription,
    pub solution: AnalyticSolution,
    pub kernel: KernelSpec,
    pub boundary: BoundarySpec,
    pub hits: Vec<WellIntersection>,
    pub scheme: Scheme,
    pub simplified_jacobian: bool,
    pub has_analytic_reference: bool,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

fn scaled_counts(cells: [usize; 3], refine: u32) -> [usize; 3] {
    let f = 1usize << refine;
    [cells[0] * f, cells[1] * f, cells[2] * f]
}

pub fn build_case(scenario: &Scenario, refine: u32) -> Result<Case, ExperimentError> {
    let permeability = scenario.permeability()?;
    let well = scenario.well()?;
    let fluid = scenario.fluid()?;

    let mesh_box = scenario.shell.as_ref().unwrap_or(&scenario.domain);
    let mesh = StructuredMesh::new(
        Vec3::new(mesh_box.lo[0], mesh_box.lo[1], mesh_box.lo[2]),
        Vec3::new(mesh_box.hi[0], mesh_box.hi[1], mesh_box.hi[2]),
        scaled_counts(mesh_box.cells, refine),
    )
    .map_err(|e| ExperimentError::Mesh(e.to_string()))?;

    // Kernel radii from the bore-circle geometry.
    let bare = AnalyticSolution::build(&permeability, well, fluid, None)?;
    let inner = scenario.kernel.inner.unwrap_or(bare.chain.focal);
    let mut outer = scenario
        .kernel
        .outer
        .unwrap_or(scenario.kernel.outer_ratio * bare.r_circle());
    if scenario.kernel.adaptive {
        // Shrink with the grid: the base level keeps the configured radius.
        outer /= (1usize << refine) as f64;
    }
    let solution = AnalyticSolution::build(&permeability, well, fluid, Some((inner, outer)))?;
    let kernel = solution.kernel.expect("kernel radii were supplied");

    let (boundary, has_analytic_reference, clip) = match &scenario.boundary {
        BoundaryCfg::Analytic => {
            if scenario.shell.is_none() {
                return Err(ConfigError::ShellMissing.into());
            }
            let d = &scenario.domain;
            let lo = Vec3::new(d.lo[0], d.lo[1], d.lo[2]);
            let hi = Vec3::new(d.hi[0], d.hi[1], d.hi[2]);
            // The well is intersected with the full shell mesh, not just Ω:
            // shell segments still distribute kernel source into the cells of
            // Ω near the well's exit (their own carrier cells are constrained
            // to the exact pressure). Error norms skip shell intersections.
            (BoundarySpec::analytic_outside(lo, hi), true, None)
        }
        BoundaryCfg::Faces { faces } => {
            let mut spec = BoundarySpec::no_flow();
            for (i, f) in faces.iter().enumerate() {
                spec.faces[i] = match *f {
                    FaceCfg::Neumann { flux } => FaceCondition::Neumann(flux),
                    FaceCfg::Dirichlet { pressure } => FaceCondition::Dirichlet(pressure),
                };
            }
            (spec, false, None)
        }
    };

    let mut hits = intersect_well(&mesh, &well, clip);
    if let Some((s0, s1)) = scenario.segment_range() {
        hits = restrict_to_segment(&hits, &well, s0, s1, 1e-10 * mesh.h_max());
    }
    if hits.is_empty() {
        return Err(ExperimentError::NoIntersections);
    }

    Ok(Case {
        mesh,
        permeability,
        fluid,
        well,
        solution,
        kernel,
        boundary,
        hits,
        scheme: match scenario.scheme {
            SchemeCfg::Tpfa => Scheme::Tpfa,
            SchemeCfg::Mpfa => Scheme::MpfaO,
        },
        simplified_jacobian: scenario.kernel.simplified_jacobian,
        has_analytic_reference,
        solver_tol: scenario.solver.tolerance,
        solver_max_iter: scenario.solver.max_iterations,
    })
}

/// Which well coupling a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WellModelKind {
    DistributedSource,
    Peaceman,
}

/// Peaceman baseline as a cell-local well model: each intersected cell gets a
/// classical well-index conductance against its own pressure.
fn peaceman_model(case: &Case) -> Result<WellModel, ExperimentError> {
    let perm_diag = WellIndexInput::diagonal_of(&case.permeability)?;
    let mut couplings = Vec::with_capacity(case.hits.len());
    for hit in &case.hits {
        let input = WellIndexInput {
            cell_dims: case.mesh.spacing,
            perm_diag,
            direction: case.well.direction,
            segment_length: hit.length,
            well_radius: case.well.radius,
            fluid: case.fluid,
            p_well: 1.0,
            p_cell: 0.0,
        };
        // Source per unit pressure difference = the coupling conductance.
        let conductance = slanted_well_source(&input)?;
        couplings.push(WellCoupling {
            intersection: *hit,
            carrier: hit.cell,
            conductance,
            fractions: vec![(hit.cell, 1.0)],
        });
    }
    Ok(WellModel {
        couplings,
        pressure: case.well.pressure,
        zeta: case.solution.chain.zeta,
    })
}

/// One solved run.
pub struct RunResult {
    pub pressures: Vec<f64>,
    pub constrained: Vec<bool>,
    pub well_rates: Vec<f64>,
    pub q_total: f64,
    pub e_p: Option<f64>,
    pub e_q: Option<f64>,
    pub h_max: f64,
    pub counts: [usize; 3],
}

pub fn run_case(case: &Case, kind: WellModelKind) -> Result<RunResult, ExperimentError> {
    let model = match kind {
        WellModelKind::DistributedSource => WellModel::build(
            &case.mesh,
            &case.solution,
            &case.kernel,
            &case.hits,
            case.simplified_jacobian,
        )?,
        WellModelKind::Peaceman => peaceman_model(case)?,
    };
    let reference: Box<dyn Fn(Vec3) -> f64> = if case.has_analytic_reference {
        let sol = case.solution.clone();
        Box::new(move |x| sol.pressure_regularized(x).unwrap_or(f64::NAN))
    } else {
        Box::new(|_| 0.0)
    };
    let system = fvm::assemble(
        &case.mesh,
        &case.permeability,
        &case.fluid,
        case.scheme,
        &case.boundary,
        reference.as_ref(),
        Some(model),
    )?;
    let solved = system.solve(case.solver_tol, case.solver_max_iter)?;
    let model = system.well.as_ref().expect("well model was supplied");

    let (e_p, e_q) = if case.has_analytic_reference && kind == WellModelKind::DistributedSource {
        let (p, q) = fvm::error_norms(
            &case.mesh,
            &solved.pressures,
            &system.constrained,
            reference.as_ref(),
            case.well.pressure,
            model,
            &solved.well_rates,
            case.well.rate,
        );
        (Some(p), Some(q))
    } else {
        (None, None)
    };

    Ok(RunResult {
        q_total: fvm::total_source(&solved.well_rates),
        well_rates: solved.well_rates,
        constrained: system.constrained,
        pressures: solved.pressures,
        e_p,
        e_q,
        h_max: case.mesh.h_max(),
        counts: case.mesh.counts,
    })
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

pub struct ConvergenceRow {
    pub level: u32,
    pub h_max: f64,
    pub e_p: f64,
    pub e_q: f64,
}

pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// log₂ ratios of successive E_q values.
    pub rates_q: Vec<f64>,
    /// log₂ ratios of successive E_p values.
    pub rates_p: Vec<f64>,
}

pub fn run_convergence(scenario: &Scenario, levels: u32) -> Result<ConvergenceTable, ExperimentError> {
    let mut rows = Vec::new();
    for level in 0..levels {
        let case = build_case(scenario, level)?;
        let run = run_case(&case, WellModelKind::DistributedSource)?;
        rows.push(ConvergenceRow {
            level,
            h_max: run.h_max,
            e_p: run.e_p.unwrap_or(f64::NAN),
            e_q: run.e_q.unwrap_or(f64::NAN),
        });
    }
    let rates = |f: &dyn Fn(&ConvergenceRow) -> f64| -> Vec<f64> {
        rows.windows(2)
            .map(|w| (f(&w[0]) / f(&w[1])).log2())
            .collect()
    };
    Ok(ConvergenceTable {
        rates_q: rates(&|r| r.e_q),
        rates_p: rates(&|r| r.e_p),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Outer kernel radius study
// ---------------------------------------------------------------------------

pub struct KernelStudyRow {
    /// ϱ_o as a multiple of the bore-circle radius.
    pub ratio: f64,
    pub outer: f64,
    pub e_q_exact: Option<f64>,
    pub e_q_simplified: Option<f64>,
}

/// E_q on the fixed base grid for a list of outer radii, with the exact kernel
/// and the Φ_J ≈ 4 simplification. Inadmissible radii yield `None` entries.
pub fn run_kernel_study(
    scenario: &Scenario,
    ratios: &[f64],
) -> Result<Vec<KernelStudyRow>, ExperimentError> {
    let mut out = Vec::new();
    for &ratio in ratios {
        let mut row = KernelStudyRow {
            ratio,
            outer: f64::NAN,
            e_q_exact: None,
            e_q_simplified: None,
        };
        for simplified in [false, true] {
            let mut sc = scenario.clone();
            sc.kernel.outer_ratio = ratio;
            sc.kernel.simplified_jacobian = simplified;
            let case = match build_case(&sc, 0) {
                Ok(c) => c,
                Err(ExperimentError::Analytic(_)) => continue,
                Err(e) => return Err(e),
            };
            row.outer = case.kernel.outer;
            let run = run_case(&case, WellModelKind::DistributedSource)?;
            if simplified {
                row.e_q_simplified = run.e_q;
            } else {
                row.e_q_exact = run.e_q;
            }
        }
        out.push(row);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rotation sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// Vary γ₁ = γ₂ with the well direction fixed.
    Permeability,
    /// Vary β₁ = β₂ with the tensor fixed.
    Well,
}

pub struct SweepRow {
    pub angle_deg: f64,
    pub e_q: f64,
}

pub fn run_rotation_sweep(
    scenario: &Scenario,
    mode: SweepMode,
    step_deg: f64,
    limit_deg: f64,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut out = Vec::new();
    let steps = (limit_deg / step_deg).round() as i64;
    for i in -steps..=steps {
        let angle = i as f64 * step_deg;
        let mut sc = scenario.clone();
        match mode {
            SweepMode::Permeability => {
                sc.permeability.gamma1_deg = angle;
                sc.permeability.gamma2_deg = angle;
            }
            SweepMode::Well => {
                sc.well.beta1_deg = angle;
                sc.well.beta2_deg = angle;
            }
        }
        let case = build_case(&sc, 0)?;
        let run = run_case(&case, WellModelKind::DistributedSource)?;
        out.push(SweepRow {
            angle_deg: angle,
            e_q: run.e_q.unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Comparison against the Peaceman baseline
// ---------------------------------------------------------------------------

pub struct ComparisonRow {
    pub level: u32,
    pub h_max: f64,
    pub e_q_ds_fixed: f64,
    pub e_q_ds_adaptive: f64,
    pub e_q_pm: f64,
    /// Kernel ellipse axes (major, minor) of the adaptive kernel [m].
    pub adaptive_ellipse: (f64, f64),
}

pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub q_reference: f64,
    pub reference_counts: [usize; 3],
    /// Kernel ellipse axes (major, minor) of the fixed kernel [m].
    pub fixed_ellipse: (f64, f64),
    /// Reference solution for line plots.
    pub reference_run: RunResult,
}

/// Integral source error `E_Q` of the fixed-kernel DS model, the
/// grid-adaptive DS model, and the Peaceman baseline, against a fine-grid DS
/// reference.
pub fn run_comparison(
    scenario: &Scenario,
    test_levels: u32,
    reference_level: u32,
) -> Result<ComparisonTable, ExperimentError> {
    if reference_level < test_levels {
        return Err(ExperimentError::ReferenceTooCoarse {
            reference: reference_level,
            max_test: test_levels - 1,
        });
    }
    let reference_case = build_case(scenario, reference_level)?;
    let reference_run = run_case(&reference_case, WellModelKind::DistributedSource)?;
    let q_reference = reference_run.q_total;
    let fixed_ellipse = kernel_ellipse_axes(
        &reference_case.solution.chain,
        &reference_case.solution.map,
        reference_case.kernel.outer,
    );

    let mut rows = Vec::new();
    for level in 0..test_levels {
        let fixed = run_case(&build_case(scenario, level)?, WellModelKind::DistributedSource)?;

        let mut adaptive_sc = scenario.clone();
        adaptive_sc.kernel.adaptive = true;
        let adaptive_case = build_case(&adaptive_sc, level)?;
        let adaptive_ellipse = kernel_ellipse_axes(
            &adaptive_case.solution.chain,
            &adaptive_case.solution.map,
            adaptive_case.kernel.outer,
        );
        let adaptive = run_case(&adaptive_case, WellModelKind::DistributedSource)?;

        let pm = run_case(&build_case(scenario, level)?, WellModelKind::Peaceman)?;

        let e = |q: f64| (q - q_reference).abs() / q_reference.abs();
        rows.push(ComparisonRow {
            level,
            h_max: fixed.h_max,
            e_q_ds_fixed: e(fixed.q_total),
            e_q_ds_adaptive: e(adaptive.q_total),
            e_q_pm: e(pm.q_total),
            adaptive_ellipse,
        });
    }
    Ok(ComparisonTable {
        rows,
        q_reference,
        reference_counts: reference_run.counts,
        fixed_ellipse,
        reference_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_study(alpha: f64) -> Scenario {
        // Coarsened variant of the reference setup to keep tests fast; the
        // shell is widened so the constrained layer still covers the mesh
        // boundary at the coarser spacing.
        let mut sc = Scenario::reference_study(alpha);
        sc.domain.cells = [10, 10, 5];
        sc.shell = Some(crate::config::DomainCfg {
            lo: [-120.0, -120.0, -20.0],
            hi: [120.0, 120.0, 120.0],
            cells: [12, 12, 7],
        });
        sc
    }

    #[test]
    fn base_case_has_study_resolution() {
        let case = build_case(&Scenario::reference_study(10.0), 0).unwrap();
        assert_eq!(case.mesh.counts, [22, 22, 20]);
        assert!((case.mesh.h_max() - 10.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(case.has_analytic_reference);
    }

    #[test]
    fn determinism_bit_for_bit() {
        let sc = small_study(10.0);
        let a = run_case(&build_case(&sc, 0).unwrap(), WellModelKind::DistributedSource).unwrap();
        let b = run_case(&build_case(&sc, 0).unwrap(), WellModelKind::DistributedSource).unwrap();
        assert_eq!(a.pressures, b.pressures);
        assert_eq!(a.q_total, b.q_total);
    }

    #[test]
    fn sweep_zero_angle_matches_fixed_tensor_run() {
        let mut sc = small_study(10.0);
        sc.permeability.gamma1_deg = 0.0;
        sc.permeability.gamma2_deg = 0.0;
        let direct =
            run_case(&build_case(&sc, 0).unwrap(), WellModelKind::DistributedSource).unwrap();
        let sweep = run_rotation_sweep(&sc, SweepMode::Permeability, 10.0, 0.0).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].angle_deg, 0.0);
        assert_eq!(sweep[0].e_q, direct.e_q.unwrap());
    }

    #[test]
    fn convergence_two_levels_reduces_errors() {
        let sc = small_study(1.0);
        let table = run_convergence(&sc, 2).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[1].e_q < table.rows[0].e_q);
        assert!(table.rows[1].e_p < table.rows[0].e_p);
        assert_eq!(table.rates_q.len(), 1);
        assert!(table.rates_q[0] > 0.5, "rate {}", table.rates_q[0]);
    }

    #[test]
    fn comparison_reference_must_be_finer() {
        let sc = Scenario::comparison();
        assert!(matches!(
            run_comparison(&sc, 2, 1),
            Err(ExperimentError::ReferenceTooCoarse { .. })
        ));
    }

    #[test]
    fn comparison_segment_intersections_cover_segment() {
        let case = build_case(&Scenario::comparison(), 0).unwrap();
        let total: f64 = case.hits.iter().map(|h| h.length).sum();
        let expect = (40.0f64 * 40.0 + 100.0 * 100.0 + 50.0 * 50.0).sqrt();
        assert!((total - expect).abs() < 1e-9, "{total} vs {expect}");
    }

    #[test]
    fn peaceman_model_is_cell_local() {
        let case = build_case(&Scenario::comparison(), 0).unwrap();
        let model = peaceman_model(&case).unwrap();
        for c in &model.couplings {
            assert_eq!(c.fractions.len(), 1);
            assert_eq!(c.fractions[0].0, c.carrier);
            assert!(c.conductance > 0.0);
        }
    }

    #[test]
    fn adaptive_kernel_shrinks_with_refinement() {
        let mut sc = Scenario::comparison();
        sc.kernel.adaptive = true;
        let base = build_case(&sc, 0).unwrap();
        let fine = build_case(&sc, 1).unwrap();
        assert!(fine.kernel.outer < base.kernel.outer);
        assert!((fine.kernel.outer - base.kernel.outer / 2.0).abs() < 1e-12 * base.kernel.outer);
    }
}
