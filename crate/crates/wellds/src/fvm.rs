//! Cell-centered finite-volume discretization: TPFA and MPFA-O flux assembly
//! on structured grids, the non-local distributed-source well coupling, linear
//! solve, and discrete error norms.

use thiserror::Error;

use crate::analytic::{AnalyticSolution, FluidProperties, KernelSpec};
use crate::kernels::KernelField;
use crate::linalg::{Mat3, Vec3};
use crate::mesh::{BoundarySpec, FaceCondition, StructuredMesh, WellIntersection};
use crate::solver::{self, CsrMatrix, SolverError};
use crate::tensor::PermeabilityTensor;

type V = Vec3<f64>;

#[derive(Debug, Error)]
pub enum FvmError {
    #[error("TPFA requires a diagonal permeability tensor on this grid")]
    TpfaInadmissible,
    #[error("MPFA-O assembly requires every unconstrained cell to be surrounded by mesh cells; cell {0} touches the domain boundary")]
    UnconstrainedBoundaryCell(usize),
    #[error("well kernel produced no in-mesh integration points")]
    EmptyKernelSupport,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Tpfa,
    MpfaO,
}

/// One well-segment coupling: the source in the support cells depends linearly
/// on the carrier cell's pressure (the discrete p₀).
#[derive(Clone, Debug)]
pub struct WellCoupling {
    pub intersection: WellIntersection,
    /// Cell that carries the discrete p₀: the cell containing the midpoint.
    pub carrier: usize,
    /// `L̂_I·2π(ρ k_I/μ)Ξ` with `L̂_I` the transformed segment length, so that
    /// `Q_I = conductance·(p_ω - p₀)` is the mass emitted by the segment.
    pub conductance: f64,
    /// Source distribution over support cells; fractions sum to 1.
    pub fractions: Vec<(usize, f64)>,
}

/// Distributed-source well model, ready for assembly.
#[derive(Clone, Debug)]
pub struct WellModel {
    pub couplings: Vec<WellCoupling>,
    pub pressure: f64,
    /// Source scaling factor `ζ` of the transform chain (diagnostic).
    pub zeta: f64,
}

impl WellModel {
    /// Bin kernel integration points into mesh cells, per intersection, and
    /// renormalize so each intersection's source is conserved.
    pub fn build(
        mesh: &StructuredMesh,
        solution: &AnalyticSolution<f64>,
        kernel: &KernelSpec<f64>,
        intersections: &[WellIntersection],
        simplified_jacobian: bool,
    ) -> Result<Self, FvmError> {
        // The pressure difference diagnoses the specific rate per unit
        // transformed length; the mass actually emitted by a segment is that
        // rate times the transformed length |I|·(dŝ/ds), so the conductance
        // carries the axial stretch. This keeps the injected mass equal to
        // the kernel integral of the source density.
        let conduct_per_len = 2.0 * std::f64::consts::PI * solution.fluid.density
            * solution.chain.k_iso
            / solution.fluid.viscosity
            * kernel.flux_scaling
            * solution.chain.axial_scale;
        let thickness = kernel.outer - kernel.inner;
        let h_min = mesh
            .spacing
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        // Lattice pitch: fine enough to resolve the annulus radially and the
        // grid for binning, but floored at h/200 (capped by the thickness) so
        // thin annuli do not explode the angular and axial point counts.
        let spacing = (thickness / 40.0)
            .max(h_min / 200.0)
            .min(h_min / 8.0)
            .min(thickness);

        let mut couplings = Vec::with_capacity(intersections.len());
        for hit in intersections {
            let field = KernelField::new(
                solution.chain,
                solution.map,
                *kernel,
                hit.s_range,
                simplified_jacobian,
            )
            .expect("intersection intervals are ordered");
            let points = field
                .generate_points(spacing)
                .expect("kernel spacing validated above");
            // Normalize by the exact slab integral L̂, not by the in-mesh sum:
            // support clipped off by the mesh boundary is dropped, matching
            // the truncation of the embedding domain (redistributing it into
            // the mesh would systematically inflate the interior source), and
            // a density that mis-states the integral (the Φ_J ≈ 4 shortcut
            // near the bore circle) keeps its mass defect instead of having
            // it silently renormalized away.
            let total = field.l_hat();
            let mut weights: std::collections::HashMap<usize, f64> =
                std::collections::HashMap::new();
            let mut in_mesh = 0.0;
            for (x, w) in points.points.iter().zip(&points.weights) {
                if let Some(cell) = mesh.cell_of_point(*x) {
                    *weights.entry(cell).or_insert(0.0) += *w;
                    in_mesh += *w;
                }
            }
            if !(in_mesh > 0.0) {
                return Err(FvmError::EmptyKernelSupport);
            }
            let mut fractions: Vec<(usize, f64)> =
                weights.into_iter().map(|(c, w)| (c, w / total)).collect();
            fractions.sort_by_key(|&(c, _)| c);
            couplings.push(WellCoupling {
                intersection: *hit,
                carrier: hit.cell,
                conductance: hit.length * conduct_per_len,
                fractions,
            });
        }
        Ok(Self {
            couplings,
            pressure: solution.well.pressure,
            zeta: solution.chain.zeta,
        })
    }
}

/// Assembled linear system plus the metadata needed to evaluate discrete
/// source terms from the solved pressures.
pub struct DiscreteSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained: Vec<bool>,
    pub well: Option<WellModel>,
}

const STENCIL: usize = 27;

fn stencil_offset(di: i64, dj: i64, dk: i64) -> usize {
    ((di + 1) + 3 * (dj + 1) + 9 * (dk + 1)) as usize
}

fn neighbor_id(mesh: &StructuredMesh, ijk: [usize; 3], d: [i64; 3]) -> Option<usize> {
    let mut n = [0usize; 3];
    for a in 0..3 {
        let v = ijk[a] as i64 + d[a];
        if v < 0 || v >= mesh.counts[a] as i64 {
            return None;
        }
        n[a] = v as usize;
    }
    Some(mesh.cell_id(n))
}

/// Per-direction sub-face transmissibilities of the MPFA-O interaction region
/// on a uniform grid: `trans[sf][cell]` maps the 8 vertex cells' pressures to
/// the flux through sub-face `sf` (normal along `sf / 4`, oriented from the
/// negative to the positive cell).
fn mpfa_transmissibilities(
    spacing: [f64; 3],
    k: &Mat3<f64>,
    mobility: f64,
) -> Result<[[f64; 8]; 12], FvmError> {
    // Local cell positions: bit a of the cell index gives the side along axis a.
    let cell_center = |c: usize| -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..3 {
            let s = if (c >> a) & 1 == 1 { 0.5 } else { -0.5 };
            x[a] = s * spacing[a];
        }
        x
    };
    let sub_face = |d: usize, j1: usize, j2: usize| -> usize { 4 * d + j1 + 2 * j2 };
    // Continuity point of sub-face (d, j1, j2): the midpoint of the full mesh
    // face the sub-face belongs to. This choice makes the method reduce to
    // TPFA exactly on K-orthogonal grids.
    let cont_point = |d: usize, j1: usize, j2: usize| -> [f64; 3] {
        let e1 = (d + 1) % 3;
        let e2 = (d + 2) % 3;
        let mut x = [0.0; 3];
        x[e1] = (if j1 == 1 { 0.5 } else { -0.5 }) * spacing[e1];
        x[e2] = (if j2 == 1 { 0.5 } else { -0.5 }) * spacing[e2];
        x
    };
    // The 3 sub-faces bounding cell c toward the vertex, in axis order.
    let cell_faces = |c: usize| -> [usize; 3] {
        let mut f = [0usize; 3];
        for d in 0..3 {
            let e1 = (d + 1) % 3;
            let e2 = (d + 2) % 3;
            f[d] = sub_face(d, (c >> e1) & 1, (c >> e2) & 1);
        }
        f
    };

    // Per cell: flux rows. For cell c the one-sided flux through its sub-face
    // with normal d is f = -mobility·area·e_dᵀ K G⁻¹ (π_c - p_c·1) with G rows
    // the continuity-point offsets from the cell center.
    // coef[c][d] = 1×3 row over c's sub-face pressures; the p_c coefficient is
    // minus the row sum.
    let mut coef = [[[0.0; 3]; 3]; 8];
    for c in 0..8 {
        let xc = cell_center(c);
        let faces = cell_faces(c);
        let mut g = Mat3::<f64>::zero();
        for (row, &sf) in faces.iter().enumerate() {
            let d = sf / 4;
            let cp = cont_point(d, (sf % 4) & 1, (sf % 4) >> 1);
            for a in 0..3 {
                g.0[row][a] = cp[a] - xc[a];
            }
        }
        let ginv = g.inverse();
        for d in 0..3 {
            let e1 = (d + 1) % 3;
            let e2 = (d + 2) % 3;
            let area = 0.25 * spacing[e1] * spacing[e2];
            // Row vector e_dᵀ K G⁻¹.
            for j in 0..3 {
                let mut s = 0.0;
                for a in 0..3 {
                    s += k.0[d][a] * ginv.0[a][j];
                }
                coef[c][d][j] = -mobility * area * s;
            }
        }
    }

    // Continuity system A·π = B·p over the 12 sub-face pressures.
    let mut a = vec![vec![0.0; 12]; 12];
    let mut b = vec![[0.0; 8]; 12];
    for d in 0..3 {
        for j2 in 0..2 {
            for j1 in 0..2 {
                let sf = sub_face(d, j1, j2);
                let e1 = (d + 1) % 3;
                let e2 = (d + 2) % 3;
                let base = (j1 << e1) | (j2 << e2);
                let cm = base; // bit d = 0
                let cp = base | (1 << d);
                for (sign, c) in [(1.0, cm), (-1.0, cp)] {
                    let faces = cell_faces(c);
                    let mut row_sum = 0.0;
                    for (slot, &face) in faces.iter().enumerate() {
                        a[sf][face] += sign * coef[c][d][slot];
                        row_sum += coef[c][d][slot];
                    }
                    b[sf][c] += sign * row_sum;
                }
            }
        }
    }

    // Solve A·π = B for each cell column, then form flux transmissibilities
    // from the negative-side cell.
    let mut pi = vec![[0.0; 8]; 12]; // pi[sf][cell]
    for c in 0..8 {
        let rhs: Vec<f64> = (0..12).map(|sf| b[sf][c]).collect();
        let col = solver::dense_solve(a.clone(), rhs).map_err(FvmError::Solver)?;
        for sf in 0..12 {
            pi[sf][c] = col[sf];
        }
    }

    let mut trans = [[0.0; 8]; 12];
    for d in 0..3 {
        for j2 in 0..2 {
            for j1 in 0..2 {
                let sf = sub_face(d, j1, j2);
                let e1 = (d + 1) % 3;
                let e2 = (d + 2) % 3;
                let base = (j1 << e1) | (j2 << e2);
                let cm = base;
                let faces = cell_faces(cm);
                for c in 0..8 {
                    let mut t = 0.0;
                    let mut row_sum = 0.0;
                    for (slot, &face) in faces.iter().enumerate() {
                        t += coef[cm][d][slot] * pi[face][c];
                        row_sum += coef[cm][d][slot];
                    }
                    if c == cm {
                        t -= row_sum;
                    }
                    trans[sf][c] = t;
                }
            }
        }
    }
    Ok(trans)
}

/// Assemble the discrete system. `reference` provides Dirichlet values for
/// constrained cells (the Ω_D region); boundary faces use `boundary.faces`
/// (TPFA only — with MPFA-O all boundary-adjacent cells must be constrained).
pub fn assemble(
    mesh: &StructuredMesh,
    permeability: &PermeabilityTensor<f64>,
    fluid: &FluidProperties<f64>,
    scheme: Scheme,
    boundary: &BoundarySpec,
    reference: &dyn Fn(V) -> f64,
    well: Option<WellModel>,
) -> Result<DiscreteSystem, FvmError> {
    let n = mesh.n_cells();
    let mobility = fluid.density / fluid.viscosity;
    let k = *permeability.entries();

    let constrained: Vec<bool> = (0..n)
        .map(|id| boundary.is_constrained(mesh.cell_center(id)))
        .collect();

    let mut stencil = vec![[0.0f64; STENCIL]; n];
    let mut rhs = vec![0.0f64; n];

    match scheme {
        Scheme::Tpfa => {
            let diag_ok = (0..3).all(|i| {
                (0..3).all(|j| i == j || k.0[i][j].abs() <= 1e-12 * k.max_abs())
            });
            if !diag_ok {
                return Err(FvmError::TpfaInadmissible);
            }
            for id in 0..n {
                if constrained[id] {
                    continue;
                }
                let ijk = mesh.cell_ijk(id);
                for axis in 0..3 {
                    let e1 = (axis + 1) % 3;
                    let e2 = (axis + 2) % 3;
                    let area = mesh.spacing[e1] * mesh.spacing[e2];
                    let t = mobility * k.0[axis][axis] * area / mesh.spacing[axis];
                    for side in [-1i64, 1i64] {
                        let mut d = [0i64; 3];
                        d[axis] = side;
                        match neighbor_id(mesh, ijk, d) {
                            Some(nb) => {
                                stencil[id][stencil_offset(0, 0, 0)] += t;
                                stencil[id][stencil_offset(d[0], d[1], d[2])] -= t;
                                let _ = nb;
                            }
                            None => {
                                // Domain face: index 2·axis for the low side.
                                let face = 2 * axis + if side > 0 { 1 } else { 0 };
                                match boundary.faces[face] {
                                    FaceCondition::Neumann(flux) => {
                                        // Outward mass flux per area.
                                        rhs[id] -= flux * area;
                                    }
                                    FaceCondition::Dirichlet(value) => {
                                        let tb = mobility * k.0[axis][axis] * area
                                            / (0.5 * mesh.spacing[axis]);
                                        stencil[id][stencil_offset(0, 0, 0)] += tb;
                                        rhs[id] += tb * value;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Scheme::MpfaO => {
            // Guard: unconstrained cells must not touch the domain boundary.
            for id in 0..n {
                if constrained[id] {
                    continue;
                }
                let ijk = mesh.cell_ijk(id);
                if (0..3).any(|a| ijk[a] == 0 || ijk[a] + 1 == mesh.counts[a]) {
                    return Err(FvmError::UnconstrainedBoundaryCell(id));
                }
            }
            let trans = mpfa_transmissibilities(mesh.spacing, &k, mobility)?;
            // Interior vertices: (vi, vj, vk) with 1 ≤ v ≤ counts-1; the 8
            // cells are (vi-1+ix, vj-1+iy, vk-1+iz).
            for vk in 1..mesh.counts[2] {
                for vj in 1..mesh.counts[1] {
                    for vi in 1..mesh.counts[0] {
                        let base = [vi - 1, vj - 1, vk - 1];
                        let mut cells = [0usize; 8];
                        for (c, cell) in cells.iter_mut().enumerate() {
                            *cell = mesh.cell_id([
                                base[0] + (c & 1),
                                base[1] + ((c >> 1) & 1),
                                base[2] + ((c >> 2) & 1),
                            ]);
                        }
                        for d in 0..3 {
                            let e1 = (d + 1) % 3;
                            let e2 = (d + 2) % 3;
                            for j2 in 0..2usize {
                                for j1 in 0..2usize {
                                    let sf = 4 * d + j1 + 2 * j2;
                                    let bse = (j1 << e1) | (j2 << e2);
                                    let cm = cells[bse];
                                    let cp = cells[bse | (1 << d)];
                                    let cm_ijk = mesh.cell_ijk(cm);
                                    let cp_ijk = mesh.cell_ijk(cp);
                                    for c in 0..8 {
                                        let t = trans[sf][c];
                                        if t == 0.0 {
                                            continue;
                                        }
                                        let col_ijk = mesh.cell_ijk(cells[c]);
                                        if !constrained[cm] {
                                            let dd = [
                                                col_ijk[0] as i64 - cm_ijk[0] as i64,
                                                col_ijk[1] as i64 - cm_ijk[1] as i64,
                                                col_ijk[2] as i64 - cm_ijk[2] as i64,
                                            ];
                                            stencil[cm][stencil_offset(dd[0], dd[1], dd[2])] += t;
                                        }
                                        if !constrained[cp] {
                                            let dd = [
                                                col_ijk[0] as i64 - cp_ijk[0] as i64,
                                                col_ijk[1] as i64 - cp_ijk[1] as i64,
                                                col_ijk[2] as i64 - cp_ijk[2] as i64,
                                            ];
                                            stencil[cp][stencil_offset(dd[0], dd[1], dd[2])] -= t;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Well coupling: row K gains f·cond on the carrier column; RHS f·cond·p_ω.
    let mut extra: Vec<(usize, usize, f64)> = Vec::new();
    if let Some(model) = &well {
        for c in &model.couplings {
            for &(cell, fraction) in &c.fractions {
                if constrained[cell] {
                    continue;
                }
                let v = fraction * c.conductance;
                extra.push((cell, c.carrier, v));
                rhs[cell] += v * model.pressure;
            }
        }
    }

    // Constrained rows: scaled identity with the reference value. The scale
    // matches the interior diagonal magnitude so the residual norm weights
    // all equations comparably.
    let center = stencil_offset(0, 0, 0);
    let diag_scale = {
        let mut max = 0.0f64;
        for (id, s) in stencil.iter().enumerate() {
            if !constrained[id] {
                max = max.max(s[center].abs());
            }
        }
        if max > 0.0 {
            max
        } else {
            1.0
        }
    };
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for id in 0..n {
        if constrained[id] {
            triplets.push((id, id, diag_scale));
            rhs[id] = diag_scale * reference(mesh.cell_center(id));
            continue;
        }
        let ijk = mesh.cell_ijk(id);
        for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let v = stencil[id][stencil_offset(di, dj, dk)];
                    if v == 0.0 {
                        continue;
                    }
                    if let Some(nb) = neighbor_id(mesh, ijk, [di, dj, dk]) {
                        triplets.push((id, nb, v));
                    }
                }
            }
        }
    }
    triplets.extend(extra.into_iter().filter(|&(r, _, _)| !constrained[r]));

    Ok(DiscreteSystem {
        matrix: CsrMatrix::from_triplets(n, &triplets),
        rhs,
        constrained,
        well,
    })
}

/// Solved pressures and per-intersection discrete source terms.
pub struct Solution {
    pub pressures: Vec<f64>,
    /// `Q_I` per well coupling [kg/s].
    pub well_rates: Vec<f64>,
}

impl DiscreteSystem {
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<Solution, FvmError> {
        let pressures = solver::solve(&self.matrix, &self.rhs, tol, max_iter)?;
        let well_rates = match &self.well {
            Some(model) => model
                .couplings
                .iter()
                .map(|c| c.conductance * (model.pressure - pressures[c.carrier]))
                .collect(),
            None => Vec::new(),
        };
        Ok(Solution {
            pressures,
            well_rates,
        })
    }

    /// Residual of a candidate pressure field over the unconstrained rows,
    /// relative to the RHS norm.
    pub fn residual(&self, pressures: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.matrix.n];
        self.matrix.matvec(pressures, &mut ax);
        let a_scale = self.matrix.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let p_scale = pressures.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut num = 0.0;
        let mut den = 0.0;
        let mut count = 0usize;
        for i in 0..self.matrix.n {
            if self.constrained[i] {
                continue;
            }
            num += (ax[i] - self.rhs[i]) * (ax[i] - self.rhs[i]);
            den += self.rhs[i] * self.rhs[i];
            count += 1;
        }
        let floor = a_scale * p_scale * (count as f64).sqrt();
        (num.sqrt() / den.sqrt().max(floor).max(1e-300)).min(f64::INFINITY)
    }
}

/// Relative discrete L²-norms of pressure and source errors.
///
/// `E_p` runs over unconstrained cells against the reference evaluated at the
/// cell centroid; `E_q` over the well intersections with the per-length rate
/// `Q_I/|I|` against the prescribed `q`.
pub fn error_norms(
    mesh: &StructuredMesh,
    pressures: &[f64],
    constrained: &[bool],
    reference: &dyn Fn(V) -> f64,
    p_w: f64,
    model: &WellModel,
    rates: &[f64],
    q: f64,
) -> (f64, f64) {
    let vol = mesh.cell_volume();
    let mut num = 0.0;
    let mut total_vol = 0.0;
    for id in 0..mesh.n_cells() {
        if constrained[id] {
            continue;
        }
        let diff = reference(mesh.cell_center(id)) - pressures[id];
        num += vol * diff * diff;
        total_vol += vol;
    }
    let e_p = (num / total_vol).sqrt() / p_w;

    let mut num = 0.0;
    let mut total_len = 0.0;
    for (c, &rate) in model.couplings.iter().zip(rates) {
        // Intersections whose carrier cell is pressure-constrained lie outside
        // the region of interest (they only feed source into it); skip them.
        if constrained[c.carrier] {
            continue;
        }
        let len = c.intersection.length;
        let diff = q - rate / len;
        num += len * diff * diff;
        total_len += len;
    }
    let e_q = (num / total_len).sqrt() / q;
    (e_p, e_q)
}

/// Total discrete well source `Q = Σ_I Q_I` [kg/s].
pub fn total_source(rates: &[f64]) -> f64 {
    rates.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::intersect_well;
    use crate::tensor::WellDescription;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn water() -> FluidProperties<f64> {
        FluidProperties::water()
    }

    fn shell_boundary(mesh: &StructuredMesh) -> BoundarySpec {
        // Constrain the outermost cell layer.
        let lo = V::new(
            mesh.lo.x() + mesh.spacing[0],
            mesh.lo.y() + mesh.spacing[1],
            mesh.lo.z() + mesh.spacing[2],
        );
        let hi = V::new(
            mesh.hi.x() - mesh.spacing[0],
            mesh.hi.y() - mesh.spacing[1],
            mesh.hi.z() - mesh.spacing[2],
        );
        BoundarySpec::analytic_outside(lo, hi)
    }

    #[test]
    fn tpfa_rejects_full_tensor() {
        let mesh = StructuredMesh::new(V::zero(), V::new(1.0, 1.0, 1.0), [4, 4, 4]).unwrap();
        let k = PermeabilityTensor::new(Mat3([
            [1.0, 0.3, 0.0],
            [0.3, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]))
        .unwrap();
        let r = assemble(
            &mesh,
            &k,
            &water(),
            Scheme::Tpfa,
            &BoundarySpec::no_flow(),
            &|_| 0.0,
            None,
        );
        assert!(matches!(r, Err(FvmError::TpfaInadmissible)));
    }

    #[test]
    fn mpfa_matches_tpfa_for_diagonal_tensor() {
        let mesh = StructuredMesh::new(V::zero(), V::new(4.0, 3.0, 2.0), [5, 5, 5]).unwrap();
        let k = PermeabilityTensor::new(Mat3::diag([1e-12, 3e-12, 0.5e-12])).unwrap();
        let boundary = shell_boundary(&mesh);
        let reference = |x: V| 7.0 * x.x() - 2.0 * x.y();
        let sys_t = assemble(&mesh, &k, &water(), Scheme::Tpfa, &boundary, &reference, None)
            .unwrap();
        let sys_m = assemble(&mesh, &k, &water(), Scheme::MpfaO, &boundary, &reference, None)
            .unwrap();
        let dt = sys_t.matrix.to_dense();
        let dm = sys_m.matrix.to_dense();
        let scale = dt
            .iter()
            .flatten()
            .cloned()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        for r in 0..mesh.n_cells() {
            for c in 0..mesh.n_cells() {
                assert!(
                    (dt[r][c] - dm[r][c]).abs() <= 1e-12 * scale,
                    "row {r} col {c}: {} vs {}",
                    dt[r][c],
                    dm[r][c]
                );
            }
        }
    }

    #[test]
    fn mpfa_preserves_linear_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            // Random SPD tensor.
            let mut m = Mat3::zero();
            for i in 0..3 {
                for j in 0..3 {
                    m.0[i][j] = rng.gen_range(-1.0..1.0);
                }
            }
            let spd = (m * m.transpose() + Mat3::diag([0.5, 0.5, 0.5])).scale(1e-12);
            let k = PermeabilityTensor::new(spd).unwrap();
            let mesh = StructuredMesh::new(
                V::new(-1.0, -2.0, 0.0),
                V::new(3.0, 1.0, 2.5),
                [6, 5, 4],
            )
            .unwrap();
            let g = V::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let linear = move |x: V| 3.0 + g.dot(&x);
            let boundary = shell_boundary(&mesh);
            let sys = assemble(&mesh, &k, &water(), Scheme::MpfaO, &boundary, &linear, None)
                .unwrap();
            let exact: Vec<f64> = (0..mesh.n_cells())
                .map(|id| linear(mesh.cell_center(id)))
                .collect();
            let res = sys.residual(&exact);
            assert!(res < 1e-9, "linearity residual {res}");
        }
    }

    #[test]
    fn interior_rows_have_zero_row_sum() {
        let mesh = StructuredMesh::new(V::zero(), V::new(1.0, 1.0, 1.0), [6, 6, 6]).unwrap();
        let k = PermeabilityTensor::new(
            Mat3([[2.0, 0.5, 0.1], [0.5, 1.5, 0.2], [0.1, 0.2, 1.0]]).scale(1e-12),
        )
        .unwrap();
        let boundary = shell_boundary(&mesh);
        let sys = assemble(&mesh, &k, &water(), Scheme::MpfaO, &boundary, &|_| 0.0, None)
            .unwrap();
        let dense = sys.matrix.to_dense();
        let scale = dense
            .iter()
            .flatten()
            .cloned()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        for r in 0..mesh.n_cells() {
            if sys.constrained[r] {
                continue;
            }
            let sum: f64 = dense[r].iter().sum();
            assert!(sum.abs() < 1e-9 * scale, "row {r} sum {sum}");
        }
    }

    #[test]
    fn tpfa_column_with_dirichlet_ends_is_linear() {
        let mesh = StructuredMesh::new(V::zero(), V::new(1.0, 1.0, 10.0), [1, 1, 10]).unwrap();
        let k = PermeabilityTensor::isotropic(1e-12);
        let mut boundary = BoundarySpec::no_flow();
        boundary.faces[4] = FaceCondition::Dirichlet(1.0e5);
        boundary.faces[5] = FaceCondition::Dirichlet(3.0e5);
        let sys = assemble(&mesh, &k, &water(), Scheme::Tpfa, &boundary, &|_| 0.0, None)
            .unwrap();
        let sol = sys.solve(1e-12, 10_000).unwrap();
        for id in 0..10 {
            let z = mesh.cell_center(id).z();
            let expect = 1.0e5 + (3.0e5 - 1.0e5) * z / 10.0;
            assert!(
                (sol.pressures[id] - expect).abs() < 1e-6 * expect,
                "cell {id}: {} vs {expect}",
                sol.pressures[id]
            );
        }
    }

    fn study_setup(
        alpha: f64,
    ) -> (
        StructuredMesh,
        PermeabilityTensor<f64>,
        WellDescription<f64>,
        AnalyticSolution<f64>,
        KernelSpec<f64>,
        BoundarySpec,
        Vec<WellIntersection>,
    ) {
        let deg = std::f64::consts::PI / 180.0;
        let rot = |g: f64, axis: usize| -> Mat3<f64> {
            let (s, c) = g.sin_cos();
            if axis == 0 {
                Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
            } else {
                Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
            }
        };
        let r = rot(-20.0 * deg, 0) * rot(-20.0 * deg, 1);
        let perm =
            PermeabilityTensor::new(r * Mat3::diag([1e-12, 1e-12, alpha * 1e-12]) * r.transpose())
                .unwrap();
        let dir = rot(20.0 * deg, 0) * rot(20.0 * deg, 1) * V::unit(2);
        let well = WellDescription::new(V::zero(), dir, 0.1, 1e6, 1.0).unwrap();
        let sol = AnalyticSolution::build(&perm, well, water(), None).unwrap();
        let rho_o = 100.0 * sol.r_circle();
        let kernel = KernelSpec::new(sol.chain.focal, rho_o, sol.r_circle()).unwrap();
        let sol = AnalyticSolution::build(
            &perm,
            well,
            water(),
            Some((kernel.inner, kernel.outer)),
        )
        .unwrap();

        // Extended domain with a constrained shell outside Ω.
        let mesh = StructuredMesh::new(
            V::new(-120.0, -120.0, -20.0),
            V::new(120.0, 120.0, 120.0),
            [12, 12, 7],
        )
        .unwrap();
        let interior = (V::new(-100.0, -100.0, 0.0), V::new(100.0, 100.0, 100.0));
        let boundary = BoundarySpec::analytic_outside(interior.0, interior.1);
        let hits = intersect_well(&mesh, &well, Some(interior));
        (mesh, perm, well, sol, kernel, boundary, hits)
    }

    #[test]
    fn well_model_fractions_sum_to_one() {
        let (mesh, _, _, sol, kernel, _, hits) = study_setup(10.0);
        let model = WellModel::build(&mesh, &sol, &kernel, &hits, false).unwrap();
        assert_eq!(model.couplings.len(), hits.len());
        for c in &model.couplings {
            // Slabs whose support is clipped by the mesh boundary keep the
            // clipped mass out; everything else sums to one.
            let sum: f64 = c.fractions.iter().map(|&(_, f)| f).sum();
            assert!(sum <= 1.0 + 1e-10, "fractions sum {sum}");
            assert_eq!(c.carrier, c.intersection.cell);
        }
        let interior: Vec<f64> = model
            .couplings
            .iter()
            .filter(|c| {
                let m = mesh.cell_center(c.carrier);
                m.x().abs() < 60.0 && m.y().abs() < 60.0 && m.z() > 20.0 && m.z() < 80.0
            })
            .map(|c| c.fractions.iter().map(|&(_, f)| f).sum())
            .collect();
        assert!(!interior.is_empty());
        for sum in interior {
            assert!((sum - 1.0).abs() < 1e-10, "interior fractions sum {sum}");
        }
    }

    #[test]
    fn manufactured_source_round_trip() {
        // Feed the exact regularized pressures through the discrete source:
        // Q_I/|I| must recover q to discretization accuracy.
        let (mesh, _, _, sol, kernel, _, hits) = study_setup(10.0);
        let model = WellModel::build(&mesh, &sol, &kernel, &hits, false).unwrap();
        let q = sol.well.rate;
        for c in &model.couplings {
            let p0 = sol
                .pressure_regularized(mesh.cell_center(c.carrier))
                .unwrap();
            let rate = c.conductance * (model.pressure - p0);
            let per_len = rate / c.intersection.length;
            assert!(
                (per_len - q).abs() < 0.4 * q,
                "per-length rate {per_len} vs {q}"
            );
        }
    }

    #[test]
    fn solved_study_is_accurate_and_conservative() {
        let (mesh, perm, _, sol, kernel, boundary, hits) = study_setup(10.0);
        let model = WellModel::build(&mesh, &sol, &kernel, &hits, false).unwrap();
        let reference = |x: V| sol.pressure_regularized(x).unwrap();
        let sys = assemble(
            &mesh,
            &perm,
            &water(),
            Scheme::MpfaO,
            &boundary,
            &reference,
            Some(model),
        )
        .unwrap();
        let solved = sys.solve(1e-11, 20_000).unwrap();
        let model = sys.well.as_ref().unwrap();
        let (e_p, e_q) = error_norms(
            &mesh,
            &solved.pressures,
            &sys.constrained,
            &reference,
            sol.well.pressure,
            model,
            &solved.well_rates,
            sol.well.rate,
        );
        assert!(e_p < 0.05, "E_p {e_p}");
        assert!(e_q < 0.30, "E_q {e_q}");
        // Sum of distributed sources equals the sum of Q_I by construction.
        let q_total = total_source(&solved.well_rates);
        let distributed: f64 = model
            .couplings
            .iter()
            .zip(&solved.well_rates)
            .map(|(c, &rate)| -> f64 { c.fractions.iter().map(|&(_, f)| f * rate).sum() })
            .sum();
        assert!((q_total - distributed).abs() < 1e-10 * q_total.abs());
    }

    #[test]
    fn exact_pressures_give_zero_pressure_error() {
        let (mesh, _, _, sol, kernel, boundary, hits) = study_setup(10.0);
        let model = WellModel::build(&mesh, &sol, &kernel, &hits, false).unwrap();
        let reference = |x: V| sol.pressure_regularized(x).unwrap();
        let constrained: Vec<bool> = (0..mesh.n_cells())
            .map(|id| boundary.is_constrained(mesh.cell_center(id)))
            .collect();
        let exact: Vec<f64> = (0..mesh.n_cells())
            .map(|id| reference(mesh.cell_center(id)))
            .collect();
        let rates: Vec<f64> = model
            .couplings
            .iter()
            .map(|c| c.intersection.length * sol.well.rate)
            .collect();
        let (e_p, e_q) = error_norms(
            &mesh,
            &exact,
            &constrained,
            &reference,
            sol.well.pressure,
            &model,
            &rates,
            sol.well.rate,
        );
        assert_eq!(e_p, 0.0);
        assert_eq!(e_q, 0.0);
    }

    #[test]
    fn zero_pressure_difference_means_zero_source() {
        let (mesh, _, _, sol, kernel, _, hits) = study_setup(10.0);
        let model = WellModel::build(&mesh, &sol, &kernel, &hits, false).unwrap();
        for c in &model.couplings {
            let rate = c.conductance * (model.pressure - model.pressure);
            assert_eq!(rate, 0.0);
        }
    }
}
