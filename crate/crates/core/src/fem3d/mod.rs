//! Scaled-gradient linear elasticity on voxel grids with trilinear hexahedra.
//!
//! The x3 derivative is divided by a thickness scale (`gamma` for cell
//! problems, `h` for the plate) inside the element strain matrix, so one unit
//! mesh of `T^2 x I` or `omega x I` serves every scale.

pub mod clamped;
pub mod dofmap;
pub mod element;
pub mod field;
pub mod solver;
pub mod sparse;

pub use clamped::{solve_clamped, BodyForce, ClampedOptions, ClampedSolution};
pub use dofmap::{DofMap, Kernel, Mode, CONSTRAINED};
pub use element::{ElementKind, HexGeometry};
pub use field::NodalField;
pub use solver::{cg, Preconditioner, PreconditionerKind, SolveReport, SolverOptions};
pub use sparse::CsrMatrix;

use std::collections::BTreeMap;

use nalgebra::Matrix6;

use crate::algebra::PhaseLibrary;
use crate::error::{Error, Result};
use crate::microstructure::VoxelGrid;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssembleOptions {
    /// Accept phases with `alpha <= 0`.
    pub allow_non_coercive: bool,
    pub element: ElementKind,
}

/// Assembled stiffness of `int Q(x, sym grad_s u)` on the free dofs.
#[derive(Debug, Clone)]
pub struct ElasticOperator {
    pub dofmap: DofMap,
    pub matrix: CsrMatrix,
    pub geometry: HexGeometry,
    pub grid: VoxelGrid,
    /// Mandel `C` of each phase id present in the grid.
    pub tensors: BTreeMap<u32, Matrix6<f64>>,
}

pub fn assemble(
    grid: &VoxelGrid,
    phases: &PhaseLibrary,
    scale: f64,
    mode: Mode,
    opts: AssembleOptions,
) -> Result<ElasticOperator> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("thickness scale must be positive, got {scale}")));
    }
    grid.validate(phases)?;
    let mut tensors = BTreeMap::new();
    for id in grid.phase_ids() {
        let t = phases.tensor(id)?;
        let alpha = t.bounds().alpha;
        if alpha <= 0.0 && !opts.allow_non_coercive {
            return Err(Error::NonCoercivePhase { id, alpha });
        }
        tensors.insert(id, *t.matrix());
    }

    let dofmap = DofMap::new(grid.nx, grid.ny, grid.nz, mode);
    let (dx, dy, dz) = dofmap.element_size();
    let geometry = HexGeometry { dx, dy, dz, scale };
    let local: BTreeMap<u32, element::ElementMatrix> =
        tensors.iter().map(|(&id, c)| (id, element::element_stiffness(opts.element, c, &geometry))).collect();

    let element_dofs: Vec<[usize; 24]> = elements(grid).map(|(i, j, k)| dofmap.element_dofs(i, j, k)).collect();
    let mut matrix = CsrMatrix::from_element_dofs(dofmap.n_free(), element_dofs.iter().map(|d| &d[..]));
    for ((i, j, k), dofs) in elements(grid).zip(&element_dofs) {
        matrix.add_element(dofs, &local[&grid.get(i, j, k)]);
    }
    Ok(ElasticOperator { dofmap, matrix, geometry, grid: grid.clone(), tensors })
}

/// Element lattice indices in storage order.
pub fn elements(grid: &VoxelGrid) -> impl Iterator<Item = (usize, usize, usize)> {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    (0..nz).flat_map(move |k| (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j, k))))
}

impl ElasticOperator {
    /// `1/2 u^T K u`
    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * sparse::dot(u, &self.matrix.mul(u))
    }

    pub fn kernel(&self) -> Kernel {
        self.dofmap.kernel()
    }

    pub fn preconditioner(&self, kind: PreconditionerKind) -> Result<Preconditioner> {
        Preconditioner::build(&self.matrix, kind, || self.dofmap.node_blocks())
    }

    /// Bottom height of element layer `k`.
    pub fn layer_bottom(&self, k: usize) -> f64 {
        -0.5 + k as f64 * self.geometry.dz
    }
}

/// CG solve of `K x = rhs` with kernel projection.
pub fn solve(op: &ElasticOperator, rhs: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    let pre = op.preconditioner(opts.preconditioner)?;
    cg(&op.matrix, rhs, op.kernel(), &pre, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::HookeTensor3;
    use crate::edges::{Edge, EdgeSet};
    use crate::microstructure::{make_random, Domain, FractionVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_phase() -> PhaseLibrary {
        PhaseLibrary::isotropic(&[(1.0, 1.0), (10.0, 10.0)]).unwrap()
    }

    #[test]
    fn single_element_plate_matches_element_matrix() {
        let g = VoxelGrid::uniform(1, 1, 1, Domain::Plate, 0).unwrap();
        let mode = Mode::Plate { lx: 1.0, ly: 1.0, clamped: EdgeSet::default() };
        let op = assemble(&g, &two_phase(), 1.0, mode, AssembleOptions::default()).unwrap();
        let ke = element::stiffness(HookeTensor3::isotropic(1.0, 1.0).unwrap().matrix(), &op.geometry);
        let nodes = op.dofmap.element_nodes(0, 0, 0);
        for a in 0..24 {
            for b in 0..24 {
                let (ra, rb) = (op.dofmap.dof(nodes[a / 3], a % 3), op.dofmap.dof(nodes[b / 3], b % 3));
                assert!((op.matrix.get(ra, rb) - ke[(a, b)]).abs() <= 1e-13 * ke.amax());
            }
        }
    }

    #[test]
    fn translations_annihilated_in_cell_mode() {
        let g = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [4, 3, 5], 1).unwrap();
        let op = assemble(&g, &two_phase(), 0.7, Mode::Cell, AssembleOptions::default()).unwrap();
        assert!(op.matrix.asymmetry() <= 1e-14 * op.matrix.diagonal().iter().cloned().fold(0.0, f64::max));
        for c in 0..3 {
            let u: Vec<f64> = (0..op.dofmap.n_free()).map(|d| if d % 3 == c { 1.0 } else { 0.0 }).collect();
            let ku = op.matrix.mul(&u);
            assert!(ku.iter().all(|v| v.abs() <= 1e-12), "component {c}");
            // Energy invariance under translation.
            let mut rng = ChaCha8Rng::seed_from_u64(c as u64);
            let v: Vec<f64> = (0..u.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shifted: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a + 3.5 * b).collect();
            let (e0, e1) = (op.energy(&v), op.energy(&shifted));
            assert!((e0 - e1).abs() <= 1e-12 * e0);
        }
    }

    #[test]
    fn unit_scale_is_plain_elasticity() {
        // Scale 1 on a cube-voxel grid gives the ordinary (unscaled) stiffness.
        let g = VoxelGrid::uniform(2, 2, 2, Domain::Cell, 0).unwrap();
        let op = assemble(&g, &two_phase(), 1.0, Mode::Cell, AssembleOptions::default()).unwrap();
        let plain = element::stiffness(
            HookeTensor3::isotropic(1.0, 1.0).unwrap().matrix(),
            &HexGeometry { dx: 0.5, dy: 0.5, dz: 0.5, scale: 1.0 },
        );
        assert_eq!(op.geometry, HexGeometry { dx: 0.5, dy: 0.5, dz: 0.5, scale: 1.0 });
        let nodes = op.dofmap.element_nodes(0, 0, 0);
        // Diagonal of node 0 collects four elements of the lower layer.
        let d = op.dofmap.dof(nodes[0], 0);
        let expected = 4.0 * plain[(0, 0)];
        assert!((op.matrix.get(d, d) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_coercive_phase_without_flag() {
        let lib = PhaseLibrary::from_json(
            r#"{"phases":[{"id":0,"model":"isotropic","lambda":1,"mu":1},{"id":1,"model":"mandel6","c":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}]}"#,
        )
        .unwrap();
        let g = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [2, 2, 2], 4).unwrap();
        assert!(matches!(
            assemble(&g, &lib, 1.0, Mode::Cell, AssembleOptions::default()),
            Err(Error::NonCoercivePhase { id: 1, .. })
        ));
        assert!(assemble(
            &g,
            &lib,
            1.0,
            Mode::Cell,
            AssembleOptions { allow_non_coercive: true, ..Default::default() }
        )
        .is_ok());
    }

    #[test]
    fn manufactured_solution_recovered_modulo_kernel() {
        let g = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [3, 3, 3], 9).unwrap();
        let op = assemble(&g, &two_phase(), 2.0, Mode::Cell, AssembleOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u: Vec<f64> = (0..op.dofmap.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rhs = op.matrix.mul(&u);
        op.kernel().project(&mut u);
        for kind in [PreconditionerKind::Jacobi, PreconditionerKind::BlockJacobi] {
            let opts = SolverOptions { tol: 1e-12, preconditioner: kind, ..Default::default() };
            let r = solve(&op, &rhs, &opts).unwrap().into_result().unwrap();
            let err = u.iter().zip(&r.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "{kind:?}: {err}");
        }
    }

    #[test]
    fn plate_mode_has_trivial_kernel() {
        let g = VoxelGrid::uniform(3, 2, 2, Domain::Plate, 1).unwrap();
        let mode = Mode::Plate { lx: 1.0, ly: 0.5, clamped: EdgeSet::new([Edge::Left, Edge::Top]) };
        let op = assemble(&g, &two_phase(), 0.25, mode, AssembleOptions::default()).unwrap();
        assert_eq!(op.kernel(), Kernel::Trivial);
        assert_eq!(op.geometry.dy, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..op.dofmap.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(op.energy(&u) > 0.0);
    }
}
