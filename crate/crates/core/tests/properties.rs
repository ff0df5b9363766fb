use nalgebra::Matrix6;
use plate_hom::cell::{check_bounds, homogenize, HomogenizeOptions};
use plate_hom::convergence::{griso_decompose, korn_ratio, residual_moments};
use plate_hom::fem3d::NodalField;
use plate_hom::gclosure::{patchwork_construct, Generator, PatchSpec, PatchworkSpec};
use plate_hom::microstructure::make_random;
use plate_hom::plate2d::{minimize_plate, PlateOptions, PlateProblem};
use plate_hom::*;
use proptest::prelude::*;

fn spd_form() -> impl Strategy<Value = PlateForm> {
    (prop::collection::vec(-1.0f64..1.0, 36), 0.05f64..2.0).prop_map(|(v, shift)| {
        let g = Matrix6::from_column_slice(&v);
        PlateForm::new(g * g.transpose() + Matrix6::identity() * shift, GammaTag::Limit)
    })
}

fn sym2() -> impl Strategy<Value = Sym2> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, c)| Sym2::new(a, b, c))
}

fn two_phase(contrast: f64) -> PhaseLibrary {
    PhaseLibrary::isotropic(&[(1.0, 1.0), (contrast, contrast)]).unwrap()
}

fn field() -> impl Strategy<Value = NodalField> {
    prop::collection::vec(-1.0f64..1.0, 3 * 5 * 4 * 5).prop_map(|v| {
        let mut f = NodalField::zeros(3, 4, 4, 1.0, 1.3);
        for (node, chunk) in f.values.iter_mut().zip(v.chunks(3)) {
            *node = [chunk[0], chunk[1], chunk[2]];
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forms_are_quadratic(form in spd_form(), a in (sym2(), sym2()), b in (sym2(), sym2()), t in -4.0f64..4.0) {
        let qa = form.evaluate(&a.0, &a.1);
        let qb = form.evaluate(&b.0, &b.1);
        let qt = form.evaluate(&a.0.scale(t), &a.1.scale(t));
        prop_assert!((qt - t * t * qa).abs() <= 1e-12 * (1.0 + t * t * qa));
        let plus = |x: &Sym2, y: &Sym2, s: f64| Sym2::new(x.m11 + s * y.m11, x.m22 + s * y.m22, x.m12 + s * y.m12);
        let lhs = form.evaluate(&plus(&a.0, &b.0, 1.0), &plus(&a.1, &b.1, 1.0))
            + form.evaluate(&plus(&a.0, &b.0, -1.0), &plus(&a.1, &b.1, -1.0));
        prop_assert!((lhs - 2.0 * qa - 2.0 * qb).abs() <= 1e-12 * (1.0 + qa + qb));
    }

    #[test]
    fn griso_parts_reassemble(psi in field(), t in 0.1f64..10.0) {
        let parts = griso_decompose(&psi).unwrap();
        let rigid = parts.rigid_part();
        for ((p, r), b) in psi.values.iter().zip(&rigid.values).zip(&parts.residual.values) {
            for c in 0..3 {
                prop_assert!((p[c] - r[c] - b[c]).abs() <= 1e-13);
            }
        }
        let (m0, m1) = residual_moments(&parts);
        prop_assert!(m0 <= 1e-13 && m1 <= 1e-13);
        let k = korn_ratio(&psi, 0.2).unwrap();
        prop_assert!(k.is_finite() && k > 0.0);
        prop_assert!((korn_ratio(&psi.scaled(t), 0.2).unwrap() - k).abs() <= 1e-12 * k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cell_forms_respect_universal_bounds(seed in 0u64..1000, p in 0.2f64..0.8, contrast in 1.5f64..20.0, gamma in 0.1f64..10.0) {
        let lib = two_phase(contrast);
        let grid = make_random(&FractionVector::new(vec![p, 1.0 - p]).unwrap(), [4, 4, 3], seed).unwrap();
        let h = homogenize(&grid, &lib, gamma, &HomogenizeOptions::default()).unwrap();
        let (alpha, beta) = lib.hard_bounds(grid.phase_ids()).unwrap();
        let report = check_bounds(&h, alpha, beta);
        prop_assert!(report.pass, "{report:?}");
        prop_assert!(h.symmetry_defect < 1e-8);
    }

    #[test]
    fn quarter_turn_conjugates_forms(seed in 0u64..1000, gamma in 0.2f64..5.0) {
        let lib = two_phase(10.0);
        let grid = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [4, 4, 2], seed).unwrap();
        let opts = HomogenizeOptions { solver: plate_hom::fem3d::SolverOptions { tol: 1e-12, ..Default::default() }, ..Default::default() };
        let a = homogenize(&grid, &lib, gamma, &opts).unwrap().form;
        let b = homogenize(&grid.rotate_quarter_turn(), &lib, gamma, &opts).unwrap().form;
        prop_assert!((a.rotated_quarter_turn().matrix - b.matrix).amax() <= 1e-6 * a.matrix.amax());
    }

    #[test]
    fn x3_layering_is_gamma_independent(layers in prop::collection::vec(0u32..2, 4), g0 in 0.1f64..1.0, g1 in 1.0f64..10.0) {
        let lib = two_phase(10.0);
        let grid = VoxelGrid::from_fn(2, 2, 4, Domain::Cell, |_, _, k| layers[k]).unwrap();
        let opts = HomogenizeOptions::default();
        let a = homogenize(&grid, &lib, g0, &opts).unwrap().form.matrix;
        let b = homogenize(&grid, &lib, g1, &opts).unwrap().form.matrix;
        prop_assert!((a - b).amax() <= 1e-9 * a.amax());
    }

    #[test]
    fn plate_minimum_is_minus_half_the_work(form in spd_form(), f in prop::array::uniform3(-1.0f64..1.0), m in 3usize..7) {
        let problem = PlateProblem::uniform(m, m + 1, &form, f, EdgeSet::new([Edge::Bottom]));
        let sol = minimize_plate(&problem, &PlateOptions::default()).unwrap();
        prop_assert!((sol.energy + 0.5 * sol.load).abs() <= 1e-8 * (1.0 + sol.load.abs()));
    }

    #[test]
    fn patchwork_counts_are_exact(period in 2usize..5, reps in prop::array::uniform4(1usize..3), t in 0.3f64..0.7, seed in 0u64..100) {
        let [a, b, c, d] = reps;
        let patches = vec![
            PatchSpec { x0: 0, y0: 0, nx: a * period, ny: c * period, generator: Generator::Random { seed }, fractions: vec![t, 1.0 - t], gamma: 1.0 },
            PatchSpec { x0: a * period, y0: 0, nx: b * period, ny: c * period, generator: Generator::Checkerboard { period: 1 }, fractions: vec![0.5, 0.5], gamma: 1.0 },
            PatchSpec { x0: 0, y0: c * period, nx: (a + b) * period, ny: d * period, generator: Generator::Laminate { orientation: Orientation::Angle(90.0) }, fractions: vec![1.0 - t, t], gamma: 1.0 },
        ];
        let spec = PatchworkSpec { nx: (a + b) * period, ny: (c + d) * period, nz: 2, period, patches, margin: 1 };
        let global = patchwork_construct(&spec).unwrap();
        let mut expected = vec![0usize; 2];
        for (p, cell) in spec.patches.iter().zip(spec.cells().unwrap()) {
            let reps = (p.nx / period) * (p.ny / period);
            for (e, n) in expected.iter_mut().zip(cell.counts(2)) {
                *e += n * reps;
            }
        }
        prop_assert_eq!(global.counts(2), expected);
    }
}
