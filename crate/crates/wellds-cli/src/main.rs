//! Command-line interface: scenario runs and the reference experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wellds_cli::config::Scenario;
use wellds_cli::experiments::{
    self, build_case, run_case, SweepMode, WellModelKind,
};
use wellds_cli::io;

#[derive(Parser)]
#[command(
    name = "wellds",
    about = "Distributed-source well model for anisotropic Darcy flow",
    version
)]
struct Cli {
    /// Scenario configuration file (TOML); defaults to the built-in reference
    /// study (`compare` defaults to the slanted-well comparison setup).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: WELLDS_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit nonzero if the experiment violates its acceptance thresholds.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepModeArg {
    Perm,
    Well,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic regularized solution on the mesh lattice.
    Analytic {
        /// Refinement level (cell counts × 2^level).
        #[arg(long, default_value_t = 0)]
        refine: u32,
    },
    /// Solve the scenario once and export the pressure field.
    Run {
        #[arg(long, default_value_t = 0)]
        refine: u32,
    },
    /// Uniform grid refinement study of E_p and E_q.
    Convergence {
        #[arg(long, default_value_t = 3)]
        levels: u32,
        /// Anisotropy ratio override.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// E_q versus the outer kernel radius, exact and simplified kernels.
    KernelStudy {
        /// Outer radii as multiples of the bore-circle radius.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.1, 1.5, 2.0, 25.0, 50.0, 100.0, 200.0])]
        ratios: Vec<f64>,
    },
    /// E_q versus tensor or well rotation angle.
    RotationSweep {
        #[arg(long, value_enum, default_value_t = SweepModeArg::Perm)]
        mode: SweepModeArg,
        /// Angle step [degrees].
        #[arg(long, default_value_t = 10.0)]
        step: f64,
        /// Sweep limit: angles run from -limit to +limit [degrees].
        #[arg(long, default_value_t = 80.0)]
        limit: f64,
    },
    /// Integral source error of the DS model against a Peaceman baseline.
    Compare {
        #[arg(long, default_value_t = 2)]
        test_levels: u32,
        /// Reference refinement level (must be ≥ test levels).
        #[arg(long, default_value_t = 2)]
        reference_level: u32,
        /// Use the full-scale reference grid (reference level 4).
        #[arg(long)]
        full_scale: bool,
    },
}

fn init_threads(requested: Option<usize>) {
    let n = requested.or_else(|| {
        std::env::var("WELLDS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn load_scenario(config: &Option<PathBuf>, fallback: Scenario) -> Result<Scenario, String> {
    match config {
        Some(path) => Scenario::load(path).map_err(|e| e.to_string()),
        None => Ok(fallback),
    }
}

fn write(path: &Path, content: &str) -> Result<(), String> {
    io::write_text(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed: acceptance thresholds violated");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Returns Ok(false) when `--check` found a threshold violation.
fn dispatch(cli: &Cli) -> Result<bool, String> {
    let out = &cli.out;
    match &cli.command {
        Command::Analytic { refine } => {
            let sc = load_scenario(&cli.config, Scenario::default())?;
            let case = build_case(&sc, *refine).map_err(|e| e.to_string())?;
            let samples: Vec<_> = (0..case.mesh.n_cells())
                .map(|id| {
                    let x = case.mesh.cell_center(id);
                    let p = case.solution.pressure_regularized(x).unwrap_or(f64::NAN);
                    (x, p)
                })
                .collect();
            let values: Vec<f64> = samples.iter().map(|&(_, p)| p).collect();
            write(&out.join("analytic.csv"), &io::csv_points(&samples))?;
            let origin = case.mesh.cell_center(0);
            write(
                &out.join("analytic.vtk"),
                &io::vtk_structured_points(
                    "analytic pressure",
                    origin,
                    case.mesh.spacing,
                    case.mesh.counts,
                    &values,
                ),
            )?;
            println!(
                "analytic: {} samples, p0 = {:.6e} Pa",
                values.len(),
                case.solution.axis_pressure().map_err(|e| e.to_string())?
            );
            Ok(true)
        }
        Command::Run { refine } => {
            let sc = load_scenario(&cli.config, Scenario::default())?;
            let case = build_case(&sc, *refine).map_err(|e| e.to_string())?;
            let run = run_case(&case, WellModelKind::DistributedSource)
                .map_err(|e| e.to_string())?;
            let samples: Vec<_> = (0..case.mesh.n_cells())
                .map(|id| (case.mesh.cell_center(id), run.pressures[id]))
                .collect();
            write(&out.join("pressure.csv"), &io::csv_points(&samples))?;
            write(
                &out.join("pressure.vtk"),
                &io::vtk_rectilinear_cells("pressure", &case.mesh, &run.pressures),
            )?;
            let mut summary = format!(
                "cells = {}x{}x{}\nh_max = {}\nQ = {} kg/s\n",
                run.counts[0], run.counts[1], run.counts[2], run.h_max, run.q_total
            );
            if let (Some(e_p), Some(e_q)) = (run.e_p, run.e_q) {
                summary.push_str(&format!("E_p = {e_p}\nE_q = {e_q}\n"));
            }
            write(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            Ok(!cli.check || run.e_q.map_or(true, f64::is_finite))
        }
        Command::Convergence { levels, alpha } => {
            let mut sc = load_scenario(&cli.config, Scenario::default())?;
            if let Some(a) = alpha {
                sc.permeability.alpha = *a;
            }
            let table =
                experiments::run_convergence(&sc, *levels).map_err(|e| e.to_string())?;
            let rows: Vec<Vec<f64>> = table
                .rows
                .iter()
                .map(|r| vec![r.level as f64, r.h_max, r.e_p, r.e_q])
                .collect();
            write(
                &out.join("convergence.csv"),
                &io::csv_table("level,h_max,e_p,e_q", &rows),
            )?;
            let mut summary = String::new();
            for r in &table.rows {
                summary.push_str(&format!(
                    "level {} (h_max {:.4}): E_p = {:.6e}, E_q = {:.6e}\n",
                    r.level, r.h_max, r.e_p, r.e_q
                ));
            }
            summary.push_str(&format!(
                "E_q rates: {:?}\nE_p rates: {:?}\n",
                table.rates_q, table.rates_p
            ));
            write(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            let ok = !cli.check
                || (table.rates_q.iter().all(|&r| r > 0.5)
                    && table
                        .rates_p
                        .last()
                        .map_or(false, |&r| (r - 2.0).abs() <= 0.2));
            Ok(ok)
        }
        Command::KernelStudy { ratios } => {
            let sc = load_scenario(&cli.config, Scenario::default())?;
            let rows = experiments::run_kernel_study(&sc, ratios).map_err(|e| e.to_string())?;
            let data: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.ratio,
                        r.outer,
                        r.e_q_exact.unwrap_or(f64::NAN),
                        r.e_q_simplified.unwrap_or(f64::NAN),
                    ]
                })
                .collect();
            write(
                &out.join("kernel_study.csv"),
                &io::csv_table("ratio,outer,e_q_exact,e_q_simplified", &data),
            )?;
            let mut summary = String::new();
            for r in &rows {
                if r.e_q_exact.is_none() && r.e_q_simplified.is_none() {
                    summary.push_str(&format!(
                        "ratio {}x bore circle: skipped (outer radius inadmissible, flux scaling undefined)\n",
                        r.ratio
                    ));
                    continue;
                }
                summary.push_str(&format!(
                    "rho_o = {:>10.4} ({}x bore circle): E_q exact = {}, simplified = {}\n",
                    r.outer,
                    r.ratio,
                    r.e_q_exact.map_or("n/a".into(), |v| format!("{v:.6e}")),
                    r.e_q_simplified.map_or("n/a".into(), |v| format!("{v:.6e}")),
                ));
            }
            write(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            let ok = !cli.check || kernel_study_ok(&rows);
            Ok(ok)
        }
        Command::RotationSweep { mode, step, limit } => {
            let sc = load_scenario(&cli.config, Scenario::default())?;
            let mode = match mode {
                SweepModeArg::Perm => SweepMode::Permeability,
                SweepModeArg::Well => SweepMode::Well,
            };
            let rows = experiments::run_rotation_sweep(&sc, mode, *step, *limit)
                .map_err(|e| e.to_string())?;
            let data: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.angle_deg, r.e_q]).collect();
            write(
                &out.join("rotation_sweep.csv"),
                &io::csv_table("angle_deg,e_q", &data),
            )?;
            let max = rows.iter().map(|r| r.e_q).fold(f64::NEG_INFINITY, f64::max);
            let min = rows.iter().map(|r| r.e_q).fold(f64::INFINITY, f64::min);
            let summary = format!(
                "{} angles, E_q in [{:.6e}, {:.6e}], max/min = {:.3}\n",
                rows.len(),
                min,
                max,
                max / min
            );
            write(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            let ok =
                !cli.check || (rows.iter().all(|r| r.e_q.is_finite()) && max / min < 10.0);
            Ok(ok)
        }
        Command::Compare {
            test_levels,
            reference_level,
            full_scale,
        } => {
            let sc = load_scenario(&cli.config, Scenario::comparison())?;
            let reference_level = if *full_scale { 4 } else { *reference_level };
            let table = experiments::run_comparison(&sc, *test_levels, reference_level)
                .map_err(|e| e.to_string())?;
            let data: Vec<Vec<f64>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.level as f64,
                        r.h_max,
                        r.e_q_ds_fixed,
                        r.e_q_ds_adaptive,
                        r.e_q_pm,
                    ]
                })
                .collect();
            write(
                &out.join("comparison.csv"),
                &io::csv_table("level,h_max,e_q_ds,e_q_ds_adaptive,e_q_pm", &data),
            )?;
            export_axis_lines(&sc, &table, out)?;
            let mut summary = format!(
                "reference: {}x{}x{} cells, Q = {} kg/s\nfixed kernel ellipse axes: {:.4} m, {:.4} m\n",
                table.reference_counts[0],
                table.reference_counts[1],
                table.reference_counts[2],
                table.q_reference,
                table.fixed_ellipse.0,
                table.fixed_ellipse.1
            );
            for r in &table.rows {
                summary.push_str(&format!(
                    "level {} (h_max {:.4}): E_Q ds = {:.4e}, ds-adaptive = {:.4e} (ellipse {:.3}/{:.3} m), pm = {:.4e}\n",
                    r.level,
                    r.h_max,
                    r.e_q_ds_fixed,
                    r.e_q_ds_adaptive,
                    r.adaptive_ellipse.0,
                    r.adaptive_ellipse.1,
                    r.e_q_pm
                ));
            }
            write(&out.join("summary.txt"), &summary)?;
            print!("{summary}");
            let ok = !cli.check || comparison_ok(&table);
            Ok(ok)
        }
    }
}

fn kernel_study_ok(rows: &[experiments::KernelStudyRow]) -> bool {
    // Doubling the outer radius in the large-radius regime reduces E_q by a
    // factor in [3, 5].
    let large: Vec<_> = rows
        .iter()
        .filter(|r| r.ratio >= 25.0 && r.e_q_exact.is_some())
        .collect();
    let mut doubling_ok = false;
    for pair in large.windows(2) {
        if (pair[1].ratio / pair[0].ratio - 2.0).abs() < 1e-9 {
            let ratio = pair[0].e_q_exact.unwrap() / pair[1].e_q_exact.unwrap();
            if (3.0..=5.0).contains(&ratio) {
                doubling_ok = true;
            }
        }
    }
    // Simplified kernel: indistinguishable for large radii, clearly visible
    // near the bore circle. (Radii below the admissible flux-scaling range,
    // where the effect would be an order of magnitude, are rejected by
    // construction; see the kernel-radius admissibility notes.)
    let far_ok = large.last().map_or(false, |r| {
        let (e, s) = (r.e_q_exact.unwrap(), r.e_q_simplified.unwrap());
        (s - e).abs() / e < 0.05
    });
    let near_ok = rows
        .iter()
        .filter(|r| r.ratio <= 2.0)
        .filter_map(|r| Some(r.e_q_simplified? / r.e_q_exact?))
        .any(|ratio| (ratio - 1.0).abs() >= 0.10);
    doubling_ok && far_ok && near_ok
}

fn comparison_ok(table: &experiments::ComparisonTable) -> bool {
    let coarse_ok = table
        .rows
        .first()
        .map_or(false, |r| r.e_q_ds_fixed < 0.01);
    let ordering_ok = table
        .rows
        .iter()
        .all(|r| r.e_q_pm > 3.0 * r.e_q_ds_adaptive);
    let pm_non_decreasing = table
        .rows
        .windows(2)
        .all(|w| w[1].e_q_pm >= w[0].e_q_pm * 0.999);
    coarse_ok && ordering_ok && pm_non_decreasing
}

/// Pressure line plots along the x₁ and x₂ axes of the finest test-level DS
/// run (cells nearest the domain mid-plane).
fn export_axis_lines(
    sc: &Scenario,
    table: &experiments::ComparisonTable,
    out: &Path,
) -> Result<(), String> {
    let level = table.rows.last().map(|r| r.level).unwrap_or(0);
    let case = build_case(sc, level).map_err(|e| e.to_string())?;
    let ds = run_case(&case, WellModelKind::DistributedSource).map_err(|e| e.to_string())?;
    let pm = run_case(&case, WellModelKind::Peaceman).map_err(|e| e.to_string())?;
    let mid = |axis: usize| -> usize { case.mesh.counts[axis] / 2 };
    for (axis, name) in [(0usize, "x1"), (1usize, "x2")] {
        for (label, run) in [("ds", &ds), ("pm", &pm)] {
            let mut samples = Vec::new();
            for i in 0..case.mesh.counts[axis] {
                let mut ijk = [mid(0), mid(1), mid(2)];
                ijk[axis] = i;
                let id = case.mesh.cell_id(ijk);
                samples.push((case.mesh.cell_center(id), run.pressures[id]));
            }
            write(
                &out.join(format!("pressure_{name}_{label}.csv")),
                &wellds_cli::io::csv_points(&samples),
            )?;
        }
    }
    Ok(())
}
