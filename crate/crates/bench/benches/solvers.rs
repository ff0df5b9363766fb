use criterion::{black_box, criterion_group, criterion_main, Criterion};
use plate_hom::algebra::isotropic_hooke;
use plate_hom::cell::{homogenize, HomogenizeOptions};
use plate_hom::fem3d::element::element_stiffness;
use plate_hom::fem3d::{assemble, AssembleOptions, ElementKind, HexGeometry, Mode};
use plate_hom::microstructure::make_random;
use plate_hom::plate2d::{minimize_plate, PlateOptions, PlateProblem};
use plate_hom::{Edge, EdgeSet, FractionVector, PhaseLibrary, PlateForm};

fn phases() -> PhaseLibrary {
    PhaseLibrary::isotropic(&[(1.0, 1.0), (10.0, 10.0)]).unwrap()
}

fn element(c: &mut Criterion) {
    let tensor = *isotropic_hooke(1.0, 1.0).unwrap().matrix();
    let g = HexGeometry { dx: 0.125, dy: 0.125, dz: 0.125, scale: 0.1 };
    for kind in [ElementKind::Trilinear, ElementKind::IncompatibleModes] {
        c.bench_function(&format!("element stiffness {kind:?}"), |b| {
            b.iter(|| element_stiffness(kind, black_box(&tensor), black_box(&g)))
        });
    }
}

fn assembly(c: &mut Criterion) {
    let lib = phases();
    let grid = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [16, 16, 8], 1).unwrap();
    c.bench_function("assemble cell 16x16x8", |b| {
        b.iter(|| assemble(&grid, &lib, 1.0, Mode::Cell, AssembleOptions::default()).unwrap())
    });
}

fn cell_problem(c: &mut Criterion) {
    let lib = phases();
    let grid = make_random(&FractionVector::new(vec![0.5, 0.5]).unwrap(), [8, 8, 8], 2).unwrap();
    let mut group = c.benchmark_group("homogenize");
    group.sample_size(10);
    group.bench_function("random 8^3", |b| {
        b.iter(|| homogenize(&grid, &lib, 1.0, &HomogenizeOptions::default()).unwrap())
    });
    group.finish();
}

fn plate(c: &mut Criterion) {
    let form = PlateForm::homogeneous(&isotropic_hooke(1.0, 1.0).unwrap()).unwrap();
    let problem = PlateProblem::uniform(32, 32, &form, [0.0, 0.0, 1.0], EdgeSet::new([Edge::Left]));
    let mut group = c.benchmark_group("plate");
    group.sample_size(10);
    group.bench_function("cantilever 32^2", |b| b.iter(|| minimize_plate(&problem, &PlateOptions::default()).unwrap()));
    group.finish();
}

criterion_group!(benches, element, assembly, cell_problem, plate);
criterion_main!(benches);
