//! Structured hexahedral meshes over a box domain, well–cell intersection
//! geometry, and boundary-condition description.

use thiserror::Error;

use crate::linalg::Vec3;
use crate::tensor::WellDescription;

type V = Vec3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("domain extent must be positive in every direction")]
    InvalidExtent,
    #[error("cell counts must be positive")]
    InvalidCounts,
}

/// Uniform structured grid of axis-aligned hexahedra. Cells are indexed
/// lexicographically: `id = i + n₁(j + n₂ k)`.
#[derive(Clone, Debug)]
pub struct StructuredMesh {
    pub lo: V,
    pub hi: V,
    pub counts: [usize; 3],
    pub spacing: [f64; 3],
}

impl StructuredMesh {
    pub fn new(lo: V, hi: V, counts: [usize; 3]) -> Result<Self, MeshError> {
        if counts.iter().any(|&n| n == 0) {
            return Err(MeshError::InvalidCounts);
        }
        let mut spacing = [0.0; 3];
        for d in 0..3 {
            let ext = hi.0[d] - lo.0[d];
            if !(ext > 0.0) {
                return Err(MeshError::InvalidExtent);
            }
            spacing[d] = ext / counts[d] as f64;
        }
        Ok(Self {
            lo,
            hi,
            counts,
            spacing,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    pub fn cell_id(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2])
    }

    pub fn cell_ijk(&self, id: usize) -> [usize; 3] {
        let i = id % self.counts[0];
        let j = (id / self.counts[0]) % self.counts[1];
        let k = id / (self.counts[0] * self.counts[1]);
        [i, j, k]
    }

    pub fn cell_center(&self, id: usize) -> V {
        let ijk = self.cell_ijk(id);
        let mut c = [0.0; 3];
        for d in 0..3 {
            c[d] = self.lo.0[d] + (ijk[d] as f64 + 0.5) * self.spacing[d];
        }
        Vec3(c)
    }

    pub fn cell_bounds(&self, id: usize) -> (V, V) {
        let ijk = self.cell_ijk(id);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..3 {
            lo[d] = self.lo.0[d] + ijk[d] as f64 * self.spacing[d];
            hi[d] = lo[d] + self.spacing[d];
        }
        (Vec3(lo), Vec3(hi))
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Maximum vertex-to-vertex distance of a cell (the diagonal).
    pub fn h_max(&self) -> f64 {
        (self.spacing[0] * self.spacing[0]
            + self.spacing[1] * self.spacing[1]
            + self.spacing[2] * self.spacing[2])
            .sqrt()
    }

    /// Cell containing the point; `None` outside the domain. Points on an
    /// interior grid plane belong to the higher cell; the domain's upper
    /// boundary is inclusive.
    pub fn cell_of_point(&self, x: V) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for d in 0..3 {
            let rel = (x.0[d] - self.lo.0[d]) / self.spacing[d];
            if rel < 0.0 || x.0[d] > self.hi.0[d] {
                return None;
            }
            ijk[d] = (rel.floor() as usize).min(self.counts[d] - 1);
        }
        Some(self.cell_id(ijk))
    }

    /// Uniform refinement: each cell split in 2×2×2.
    pub fn refined(&self) -> Self {
        Self::new(
            self.lo,
            self.hi,
            [
                self.counts[0] * 2,
                self.counts[1] * 2,
                self.counts[2] * 2,
            ],
        )
        .expect("refinement preserves validity")
    }
}

/// Intersection of the well center-line with one cell.
#[derive(Clone, Copy, Debug)]
pub struct WellIntersection {
    pub cell: usize,
    /// Arc-length parameter interval along ψ relative to the well point.
    pub s_range: (f64, f64),
    pub length: f64,
    pub midpoint: V,
}

/// Intersect the well center-line with the mesh, optionally clipped to a box;
/// returns ordered, non-overlapping intervals. Grazing slivers shorter than
/// `1e-12·h_max` are dropped.
pub fn intersect_well(
    mesh: &StructuredMesh,
    well: &WellDescription<f64>,
    clip: Option<(V, V)>,
) -> Vec<WellIntersection> {
    let (clip_lo, clip_hi) = clip.unwrap_or((mesh.lo, mesh.hi));
    let p = well.point;
    let d = well.direction;

    // Slab clipping of the infinite line against the box.
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for axis in 0..3 {
        if d.0[axis].abs() < 1e-300 {
            if p.0[axis] < clip_lo.0[axis] || p.0[axis] > clip_hi.0[axis] {
                return Vec::new();
            }
            continue;
        }
        let a = (clip_lo.0[axis] - p.0[axis]) / d.0[axis];
        let b = (clip_hi.0[axis] - p.0[axis]) / d.0[axis];
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    if !(t1 > t0) {
        return Vec::new();
    }

    // Collect all grid-plane crossings inside [t0, t1].
    let mut cuts = vec![t0, t1];
    for axis in 0..3 {
        if d.0[axis].abs() < 1e-300 {
            continue;
        }
        for plane in 0..=mesh.counts[axis] {
            let coord = mesh.lo.0[axis] + plane as f64 * mesh.spacing[axis];
            let t = (coord - p.0[axis]) / d.0[axis];
            if t > t0 && t < t1 {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let eps = 1e-12 * mesh.h_max();
    let mut out = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < eps {
            continue;
        }
        let mid_t = 0.5 * (a + b);
        let mid = p + d.scale(mid_t);
        if let Some(cell) = mesh.cell_of_point(mid) {
            out.push(WellIntersection {
                cell,
                s_range: (a, b),
                length: b - a,
                midpoint: mid,
            });
        }
    }
    out
}

/// Restrict intersection intervals to a finite well segment `[s0, s1]` in the
/// well's arc-length parameter, trimming partial overlaps.
pub fn restrict_to_segment(
    hits: &[WellIntersection],
    well: &WellDescription<f64>,
    s0: f64,
    s1: f64,
    min_length: f64,
) -> Vec<WellIntersection> {
    let mut out = Vec::new();
    for h in hits {
        let a = h.s_range.0.max(s0);
        let b = h.s_range.1.min(s1);
        if b - a < min_length {
            continue;
        }
        let mid = well.point + well.direction.scale(0.5 * (a + b));
        out.push(WellIntersection {
            cell: h.cell,
            s_range: (a, b),
            length: b - a,
            midpoint: mid,
        });
    }
    out
}

/// Boundary condition on one face of the domain box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceCondition {
    /// Prescribed mass flux per area; 0 = no-flow.
    Neumann(f64),
    Dirichlet(f64),
}

/// Boundary description: one condition per domain face (x-min, x-max, y-min,
/// y-max, z-min, z-max), plus an optional interior box Ω. When Ω is present,
/// cells whose centroid falls outside Ω are constrained to a reference
/// solution (the Ω_D region of the analytic-reference experiments).
#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub faces: [FaceCondition; 6],
    pub interior_box: Option<(V, V)>,
}

impl BoundarySpec {
    pub fn no_flow() -> Self {
        Self {
            faces: [FaceCondition::Neumann(0.0); 6],
            interior_box: None,
        }
    }

    pub fn analytic_outside(interior_lo: V, interior_hi: V) -> Self {
        Self {
            faces: [FaceCondition::Neumann(0.0); 6],
            interior_box: Some((interior_lo, interior_hi)),
        }
    }

    /// Is the cell with this centroid in the constrained region Ω_D?
    pub fn is_constrained(&self, centroid: V) -> bool {
        match &self.interior_box {
            None => false,
            Some((lo, hi)) => (0..3).any(|d| centroid.0[d] < lo.0[d] || centroid.0[d] > hi.0[d]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain_5_1() -> StructuredMesh {
        StructuredMesh::new(
            V::new(-100.0, -100.0, 0.0),
            V::new(100.0, 100.0, 100.0),
            [20, 20, 10],
        )
        .unwrap()
    }

    #[test]
    fn spacing_and_h_max() {
        let mesh = domain_5_1();
        assert_eq!(mesh.spacing, [10.0, 10.0, 10.0]);
        assert!((mesh.h_max() - 10.0 * 3f64.sqrt()).abs() < 1e-12);
        let fine = mesh.refined();
        assert!((fine.h_max() - 5.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(fine.n_cells(), 8 * mesh.n_cells());
    }

    #[test]
    fn single_cell_mesh() {
        let mesh = StructuredMesh::new(V::zero(), V::new(1.0, 1.0, 1.0), [1, 1, 1]).unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.cell_of_point(V::new(0.5, 0.5, 0.5)), Some(0));
        assert_eq!(mesh.cell_of_point(V::new(1.5, 0.5, 0.5)), None);
    }

    #[test]
    fn invalid_meshes_rejected() {
        assert!(StructuredMesh::new(V::zero(), V::new(0.0, 1.0, 1.0), [1, 1, 1]).is_err());
        assert!(StructuredMesh::new(V::zero(), V::new(1.0, 1.0, 1.0), [0, 1, 1]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let mesh = domain_5_1();
        for id in [0, 7, 399, 1234, mesh.n_cells() - 1] {
            assert_eq!(mesh.cell_id(mesh.cell_ijk(id)), id);
            let c = mesh.cell_center(id);
            assert_eq!(mesh.cell_of_point(c), Some(id));
            let (lo, hi) = mesh.cell_bounds(id);
            for d in 0..3 {
                assert!(lo.0[d] < c.0[d] && c.0[d] < hi.0[d]);
            }
        }
    }

    #[test]
    fn vertical_well_through_column() {
        let mesh = domain_5_1();
        let well =
            WellDescription::new(V::new(5.0, 5.0, 0.0), V::unit(2), 0.1, 1e6, 1.0).unwrap();
        let hits = intersect_well(&mesh, &well, None);
        assert_eq!(hits.len(), 10);
        for h in &hits {
            assert!((h.length - 10.0).abs() < 1e-10);
        }
        let total: f64 = hits.iter().map(|h| h.length).sum();
        assert!((total - 100.0).abs() < 1e-10);
    }

    #[test]
    fn slanted_well_lengths_sum_to_clip_length() {
        let mesh = domain_5_1();
        let deg = std::f64::consts::PI / 180.0;
        let (s1, c1) = (20.0 * deg).sin_cos();
        let (s2, c2) = (20.0 * deg).sin_cos();
        // ψ = R₁(20°) R₂(20°) e₃.
        let dir = V::new(s2, -s1 * c2, c1 * c2).normalized();
        let well = WellDescription::new(V::zero(), dir, 0.1, 1e6, 1.0).unwrap();
        let hits = intersect_well(&mesh, &well, None);
        // Oracle: clip the line against the box analytically.
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for d in 0..3 {
            let a = (mesh.lo.0[d]) / dir.0[d];
            let b = (mesh.hi.0[d]) / dir.0[d];
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        let total: f64 = hits.iter().map(|h| h.length).sum();
        assert!((total - (t1 - t0)).abs() < 1e-10 * (t1 - t0));
        // Ordered, non-overlapping, midpoints inside their cells.
        for pair in hits.windows(2) {
            assert!(pair[1].s_range.0 >= pair[0].s_range.1 - 1e-12);
        }
        for h in &hits {
            let (lo, hi) = mesh.cell_bounds(h.cell);
            for d in 0..3 {
                assert!(h.midpoint.0[d] > lo.0[d] - 1e-12 && h.midpoint.0[d] < hi.0[d] + 1e-12);
            }
        }
    }

    #[test]
    fn well_outside_domain() {
        let mesh = domain_5_1();
        let well =
            WellDescription::new(V::new(500.0, 500.0, 0.0), V::unit(2), 0.1, 1e6, 1.0).unwrap();
        assert!(intersect_well(&mesh, &well, None).is_empty());
    }

    #[test]
    fn translation_along_axis_preserves_lengths() {
        let mesh = domain_5_1();
        let dir = V::new(1.0, 2.0, 3.0).normalized();
        let w1 = WellDescription::new(V::new(1.0, 2.0, 3.0), dir, 0.1, 1e6, 1.0).unwrap();
        let w2 = WellDescription::new(w1.point + dir.scale(17.0), dir, 0.1, 1e6, 1.0).unwrap();
        let h1 = intersect_well(&mesh, &w1, None);
        let h2 = intersect_well(&mesh, &w2, None);
        assert_eq!(h1.len(), h2.len());
        for (a, b) in h1.iter().zip(&h2) {
            assert_eq!(a.cell, b.cell);
            assert!((a.length - b.length).abs() < 1e-10);
            assert!((a.s_range.0 - (b.s_range.0 + 17.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn clip_box_restricts_intersections() {
        let mesh = StructuredMesh::new(
            V::new(-110.0, -110.0, -50.0),
            V::new(110.0, 110.0, 150.0),
            [22, 22, 20],
        )
        .unwrap();
        let well = WellDescription::new(V::new(5.0, 5.0, 0.0), V::unit(2), 0.1, 1e6, 1.0).unwrap();
        let clip = (V::new(-100.0, -100.0, 0.0), V::new(100.0, 100.0, 100.0));
        let hits = intersect_well(&mesh, &well, Some(clip));
        let total: f64 = hits.iter().map(|h| h.length).sum();
        assert!((total - 100.0).abs() < 1e-10);
    }

    #[test]
    fn constrained_region_tagging() {
        let mesh = StructuredMesh::new(
            V::new(-110.0, -110.0, -50.0),
            V::new(110.0, 110.0, 150.0),
            [22, 22, 20],
        )
        .unwrap();
        let spec = BoundarySpec::analytic_outside(
            V::new(-100.0, -100.0, 0.0),
            V::new(100.0, 100.0, 100.0),
        );
        let constrained = (0..mesh.n_cells())
            .filter(|&id| spec.is_constrained(mesh.cell_center(id)))
            .count();
        // One-cell-thick shell: total minus the 20×20×10 interior block.
        assert_eq!(mesh.n_cells() - constrained, 20 * 20 * 10);
        assert!(!BoundarySpec::no_flow().is_constrained(V::zero()));
    }
}
