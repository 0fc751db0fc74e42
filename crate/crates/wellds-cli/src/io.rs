//! CSV and legacy-VTK ASCII export. All writers are deterministic: identical
//! inputs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use wellds::mesh::StructuredMesh;
use wellds::Vec3;

/// Point samples as CSV with the fixed header `x,y,z,p`.
pub fn csv_points(samples: &[(Vec3, f64)]) -> String {
    let mut out = String::from("x,y,z,p\n");
    for (x, p) in samples {
        let _ = writeln!(out, "{},{},{},{}", x.x(), x.y(), x.z(), p);
    }
    out
}

/// Generic CSV table from a header line and row formatter.
pub fn csv_table(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Legacy-VTK ASCII `STRUCTURED_POINTS` with one scalar field at the lattice
/// points. `dims` are point counts per axis; `values` in x-fastest order.
pub fn vtk_structured_points(
    title: &str,
    origin: Vec3,
    spacing: [f64; 3],
    dims: [usize; 3],
    values: &[f64],
) -> String {
    assert_eq!(values.len(), dims[0] * dims[1] * dims[2]);
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(out, "ORIGIN {} {} {}", origin.x(), origin.y(), origin.z());
    let _ = writeln!(out, "SPACING {} {} {}", spacing[0], spacing[1], spacing[2]);
    let _ = writeln!(out, "POINT_DATA {}", values.len());
    out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Legacy-VTK ASCII `RECTILINEAR_GRID` with one cell-centered scalar field.
pub fn vtk_rectilinear_cells(title: &str, mesh: &StructuredMesh, values: &[f64]) -> String {
    assert_eq!(values.len(), mesh.n_cells());
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET RECTILINEAR_GRID\n");
    let _ = writeln!(
        out,
        "DIMENSIONS {} {} {}",
        mesh.counts[0] + 1,
        mesh.counts[1] + 1,
        mesh.counts[2] + 1
    );
    for axis in 0..3 {
        let names = ["X_COORDINATES", "Y_COORDINATES", "Z_COORDINATES"];
        let _ = writeln!(out, "{} {} double", names[axis], mesh.counts[axis] + 1);
        let coords: Vec<String> = (0..=mesh.counts[axis])
            .map(|i| format!("{}", mesh.lo.0[axis] + i as f64 * mesh.spacing[axis]))
            .collect();
        out.push_str(&coords.join(" "));
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_DATA {}", values.len());
    out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_text(path: &Path, content: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)
}
