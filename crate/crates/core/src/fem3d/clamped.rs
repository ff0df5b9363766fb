use super::dofmap::{Mode, CONSTRAINED};
use super::element::ElementKind;
use super::field::NodalField;
use super::solver::{SolveReport, SolverOptions};
use super::{assemble, elements, solve, AssembleOptions};
use crate::algebra::PhaseLibrary;
use crate::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::microstructure::VoxelGrid;

/// Constant body force `f`; it works against `(u1, u2, h u3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyForce(pub [f64; 3]);

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClampedOptions {
    pub solver: SolverOptions,
    pub element: ElementKind,
}

#[derive(Debug, Clone)]
pub struct ClampedSolution {
    pub field: NodalField,
    /// `int Q(sym grad_h u) - int f.(u1, u2, h u3)` at the computed minimizer.
    pub energy: f64,
    /// `int f.(u1, u2, h u3)`
    pub load: f64,
    pub report: SolveReport,
}

/// Minimizes the scaled 3D energy with body force on the plate grid
/// `omega x I`, all displacements zero on `clamped x I`.
#[allow(clippy::too_many_arguments)]
pub fn solve_clamped(
    grid: &VoxelGrid,
    phases: &PhaseLibrary,
    h: f64,
    force: BodyForce,
    clamped: &EdgeSet,
    lx: f64,
    ly: f64,
    opts: &ClampedOptions,
) -> Result<ClampedSolution> {
    if clamped.is_empty() {
        return Err(Error::InvalidParameter("the clamped boundary portion must be nonempty".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("thickness h must be positive, got {h}")));
    }
    let mode = Mode::Plate { lx, ly, clamped: clamped.clone() };
    let op = assemble(grid, phases, h, mode, AssembleOptions { allow_non_coercive: false, element: opts.element })?;
    let rhs = load_vector(&op.dofmap, grid, h, force);
    let report = solve(&op, &rhs, &opts.solver)?.into_result()?;
    let load = super::sparse::dot(&rhs, &report.x);
    let energy = op.energy(&report.x) - load;
    let field = NodalField::from_dofs(&op.dofmap, &report.x);
    Ok(ClampedSolution { field, energy, load, report })
}

/// Consistent load `int f_c N_a` (times `h` for the third component).
pub fn load_vector(map: &super::DofMap, grid: &VoxelGrid, h: f64, force: BodyForce) -> Vec<f64> {
    let (dx, dy, dz) = map.element_size();
    let share = dx * dy * dz / 8.0;
    let weights = [force.0[0], force.0[1], h * force.0[2]];
    let mut rhs = vec![0.0; map.n_free()];
    for (i, j, k) in elements(grid) {
        for d in map.element_dofs(i, j, k).iter().enumerate() {
            if *d.1 != CONSTRAINED {
                rhs[*d.1] += share * weights[d.0 % 3];
            }
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::Edge;
    use crate::microstructure::Domain;

    fn lib() -> PhaseLibrary {
        PhaseLibrary::isotropic(&[(1.0, 1.0)]).unwrap()
    }

    fn tight() -> ClampedOptions {
        ClampedOptions {
            solver: SolverOptions { tol: 1e-13, max_iter: Some(20_000), ..Default::default() },
            element: ElementKind::Trilinear,
        }
    }

    #[test]
    fn zero_force_gives_zero() {
        let g = VoxelGrid::uniform(4, 4, 2, Domain::Plate, 0).unwrap();
        let s = solve_clamped(&g, &lib(), 0.5, BodyForce::default(), &EdgeSet::new([Edge::Left]), 1.0, 1.0, &tight())
            .unwrap();
        assert_eq!(s.energy, 0.0);
        assert!(s.field.values.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn minimum_equals_minus_half_load() {
        let g = VoxelGrid::uniform(6, 6, 2, Domain::Plate, 0).unwrap();
        let s = solve_clamped(
            &g,
            &lib(),
            0.25,
            BodyForce([0.0, 0.0, 1.0]),
            &EdgeSet::new([Edge::Left]),
            1.0,
            1.0,
            &tight(),
        )
        .unwrap();
        assert!(s.energy < 0.0);
        assert!((s.energy + 0.5 * s.load).abs() <= 1e-10 * s.energy.abs(), "{} vs {}", s.energy, -0.5 * s.load);
    }

    #[test]
    fn fully_clamped_square_is_mirror_symmetric() {
        let g = VoxelGrid::uniform(6, 6, 2, Domain::Plate, 0).unwrap();
        let all = EdgeSet::new([Edge::Left, Edge::Right, Edge::Bottom, Edge::Top]);
        let s = solve_clamped(&g, &lib(), 0.5, BodyForce([0.3, 0.0, 1.0]), &all, 1.0, 1.0, &tight()).unwrap();
        let f = &s.field;
        let scale = f.values.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        // Reflection x2 -> 1 - x2 maps the problem onto itself with u2 -> -u2.
        for k in 0..=2 {
            for j in 0..=6 {
                for i in 0..=6 {
                    let a = f.at(i, j, k);
                    let b = f.at(i, 6 - j, k);
                    assert!((a[0] - b[0]).abs() <= 1e-9 * scale);
                    assert!((a[1] + b[1]).abs() <= 1e-9 * scale);
                    assert!((a[2] - b[2]).abs() <= 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn requires_clamping() {
        let g = VoxelGrid::uniform(2, 2, 2, Domain::Plate, 0).unwrap();
        assert!(solve_clamped(&g, &lib(), 0.5, BodyForce([0.0, 0.0, 1.0]), &EdgeSet::default(), 1.0, 1.0, &tight())
            .is_err());
    }
}
