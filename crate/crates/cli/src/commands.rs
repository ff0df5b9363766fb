use std::path::Path;

use plate_hom::cell::{check_bounds, gamma_sweep, homogenize, read_form, HomogenizeOptions, HIGH_LABEL, LOW_LABEL};
use plate_hom::convergence::{
    griso_decompose, korn_ratio, residual_moments, theorem1_harness, HarnessConfig, HarnessMaterial,
};
use plate_hom::fem3d::{NodalField, PreconditionerKind};
use plate_hom::gclosure::{patchwork_construct, sample_ptheta, windowed_recovery, Generator, PatchworkSpec};
use plate_hom::microstructure::{adjust_volume_fraction, make_checkerboard, make_laminate, make_random};
use plate_hom::plate2d::{linearity, minimize_plate, perturbation_stability, FormSpec, PlateOptions, PlateProblemFile};
use plate_hom::{Domain, EdgeSet, FractionVector, PhaseLibrary, VoxelGrid, BASIS_TAG};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::Run;
use crate::Failure;

fn phases(run: &mut Run, path: &Path) -> Result<PhaseLibrary, Failure> {
    Ok(PhaseLibrary::from_json(&run.read(path)?)?)
}

fn grid(run: &mut Run, path: &Path, phases: &PhaseLibrary) -> Result<VoxelGrid, Failure> {
    let g = VoxelGrid::from_json(&run.read(path)?)?;
    g.validate(phases)?;
    Ok(g)
}

fn grid_json(g: &VoxelGrid) -> Value {
    serde_json::to_value(g).expect("grid serializes")
}

fn dims3(v: &[usize], flag: &str) -> Result<[usize; 3], Failure> {
    <[usize; 3]>::try_from(v).map_err(|_| Failure::Usage(format!("--{flag} needs three values, got {}", v.len())))
}

fn form_json(form: &plate_hom::PlateForm, label: &str) -> Value {
    json!({ "label": label, "matrix": form.row_major(), "eigenvalues": form.eigenvalues().as_slice() })
}

pub fn homogenize_cmd(a: &HomogenizeArgs, run: &mut Run) -> Result<bool, Failure> {
    let lib = phases(run, &a.phases)?;
    let g = grid(run, &a.micro, &lib)?;
    let opts =
        HomogenizeOptions { solver: a.common.solver(PreconditionerKind::Jacobi), allow_non_coercive: a.allow_soft };
    let h = homogenize(&g, &lib, a.gamma, &opts)?;
    run.write("form.json", &(h.to_json() + "\n"))?;
    let (alpha, beta) = lib.hard_bounds(g.phase_ids())?;
    let report = check_bounds(&h, alpha, beta);
    run.write_json("bounds.json", json!(report))?;
    Ok(report.pass)
}

pub fn gamma_sweep_cmd(a: &GammaSweepArgs, run: &mut Run) -> Result<bool, Failure> {
    let lib = phases(run, &a.phases)?;
    let g = grid(run, &a.micro, &lib)?;
    let opts =
        HomogenizeOptions { solver: a.common.solver(PreconditionerKind::Jacobi), allow_non_coercive: a.allow_soft };
    let sweep = gamma_sweep(&g, &lib, &a.gammas.values()?, &opts)?;
    run.write("sweep.csv", &sweep.to_csv())?;
    let (alpha, beta) = lib.hard_bounds(g.phase_ids())?;
    let mut pass = true;
    let mut entries = Vec::new();
    for (i, e) in sweep.entries.iter().enumerate() {
        match &e.result {
            Ok(h) => {
                run.write(&format!("forms/form_{i:03}.json"), &(h.to_json() + "\n"))?;
                let report = check_bounds(h, alpha, beta);
                pass &= report.pass;
                entries.push(json!({ "gamma": e.gamma, "form": format!("forms/form_{i:03}.json"), "bounds": report }));
            }
            Err(msg) => {
                pass = false;
                entries.push(json!({ "gamma": e.gamma, "error": msg }));
            }
        }
    }
    let estimates: Vec<Value> = [(LOW_LABEL, &sweep.low_estimate), (HIGH_LABEL, &sweep.high_estimate)]
        .into_iter()
        .filter_map(|(label, f)| f.as_ref().map(|f| form_json(f, label)))
        .collect();
    run.write_json("sweep.json", json!({ "entries": entries, "estimates": estimates }))?;
    Ok(pass)
}

pub fn plate_solve_cmd(a: &PlateSolveArgs, run: &mut Run) -> Result<bool, Failure> {
    let file: PlateProblemFile = serde_json::from_str(&run.read(&a.problem)?).map_err(plate_hom::Error::from)?;
    let referenced = match &file.form {
        FormSpec::File { file } => {
            let path = a.problem.parent().unwrap_or(Path::new(".")).join(file);
            Some(read_form(&run.read(&path)?)?)
        }
        _ => None,
    };
    let problem =
        file.into_problem(|_| referenced.clone().ok_or_else(|| plate_hom::Error::Parse("missing form".into())))?;
    let opts = PlateOptions { solver: a.common.solver(PreconditionerKind::Jacobi) };
    let sol = minimize_plate(&problem, &opts)?;
    run.write("solution.csv", &sol.to_csv())?;
    run.write_json(
        "solution.json",
        json!({
            "minimum": sol.energy,
            "stored_energy": sol.energy + sol.load,
            "load": sol.load,
            "iterations": sol.report.iterations,
            "relative_residual": sol.report.rel_residual,
            "converged": sol.report.converged,
        }),
    )?;
    let mut pass = sol.report.converged;
    if !a.eta.is_empty() {
        let reports =
            a.eta.iter().map(|&eta| perturbation_stability(&problem, eta, &opts)).collect::<Result<Vec<_>, _>>()?;
        let mut value = json!({ "reports": reports });
        if let [r0, r1, ..] = reports.as_slice() {
            let (ratio, constant) = linearity(r0, r1);
            let expected = r0.eta / r1.eta;
            let linear = ratio >= expected / 2.0 && ratio <= expected * 2.0;
            pass &= linear;
            value["linearity"] =
                json!({ "gap_ratio": ratio, "eta_ratio": expected, "constant": constant, "within_factor_2": linear });
        }
        run.write_json("stability.json", value)?;
    }
    Ok(pass)
}

pub fn theorem1_cmd(a: &Theorem1Args, run: &mut Run) -> Result<bool, Failure> {
    let lib = phases(run, &a.phases)?;
    let material = if a.layers.is_empty() {
        HarnessMaterial::Homogeneous(lib)
    } else {
        HarnessMaterial::Layered { phases: lib, layers: a.layers.clone() }
    };
    let force: [f64; 3] =
        a.force.as_slice().try_into().map_err(|_| Failure::Usage("--force needs three values".into()))?;
    let resolution: [usize; 2] =
        a.resolution.as_slice().try_into().map_err(|_| Failure::Usage("--resolution needs two values".into()))?;
    let mut cfg = HarnessConfig::new(material, a.h.clone(), force, EdgeSet::new(a.clamped.iter().copied()));
    cfg.resolution = resolution;
    cfg.nz = a.nz;
    cfg.solver = a.common.solver(PreconditionerKind::BlockJacobi);
    cfg.element = a.element.into();
    cfg.gap_threshold = a.gap_threshold;
    if let Some(path) = &a.limit_form {
        cfg.limit_form = Some(read_form(&run.read(path)?)?);
    }
    let table = theorem1_harness(&cfg)?;
    run.write("convergence.csv", &table.to_csv())?;
    run.write("summary.json", &(table.summary_json() + "\n"))?;
    Ok(table.summary().pass)
}

pub fn griso_cmd(a: &GrisoArgs, run: &mut Run) -> Result<bool, Failure> {
    let psi = NodalField::from_vtk(&run.read(&a.field)?)?;
    let parts = griso_decompose(&psi)?;
    let ratio = korn_ratio(&psi, a.h)?;
    let (mean_moment, rotation_moment) = residual_moments(&parts);
    let rigid = parts.rigid_part();
    let scale = psi.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let reconstruction = psi
        .values
        .iter()
        .zip(rigid.values.iter().zip(&parts.residual.values))
        .flat_map(|(p, (r, b))| (0..3).map(move |c| (p[c] - r[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    run.write("rigid.vtk", &rigid.to_vtk(&format!("rigid part, basis {BASIS_TAG}"), "rigid"))?;
    run.write("residual.vtk", &parts.residual.to_vtk(&format!("residual, basis {BASIS_TAG}"), "residual"))?;
    run.write_json(
        "griso.json",
        json!({
            "h": a.h,
            "c_i": parts.c_i,
            "korn_ratio": ratio,
            "residual_mean_moment": mean_moment,
            "residual_rotation_moment": rotation_moment,
            "reconstruction_error": reconstruction,
        }),
    )?;
    Ok(ratio.is_finite() && reconstruction <= 1e-12 * scale && mean_moment.max(rotation_moment) <= 1e-10 * scale)
}

pub fn gclosure_cmd(a: &GclosureArgs, run: &mut Run) -> Result<bool, Failure> {
    let lib = phases(run, &a.phases)?;
    let theta = FractionVector::new(a.theta.clone())?;
    let generators: Vec<Generator> = serde_json::from_str(&run.read(&a.generators)?).map_err(plate_hom::Error::from)?;
    let opts = HomogenizeOptions { solver: a.common.solver(PreconditionerKind::Jacobi), allow_non_coercive: false };
    let set =
        sample_ptheta(&lib, &theta, &generators, &a.gammas.values()?, dims3(&a.resolution, "resolution")?, &opts)?;
    run.write("samples.csv", &set.to_csv())?;
    let mut pass = true;
    let samples: Vec<Value> = set
        .samples
        .iter()
        .map(|s| {
            let mut v = json!({
                "generator": s.generator,
                "descriptor": s.descriptor,
                "gamma": s.gamma,
                "flips": s.flips,
                "realized": s.realized,
            });
            match &s.result {
                Ok((_, report)) => {
                    pass &= report.pass;
                    v["bounds"] = json!(report);
                }
                Err(e) => {
                    pass = false;
                    v["error"] = json!(e);
                }
            }
            v
        })
        .collect();
    run.write_json("samples.json", json!({ "target": set.target.0, "samples": samples }))?;
    Ok(pass)
}

pub fn patchwork_cmd(a: &PatchworkArgs, run: &mut Run) -> Result<bool, Failure> {
    let spec = PatchworkSpec::from_json(&run.read(&a.spec)?)?;
    let lib = phases(run, &a.phases)?;
    let global = patchwork_construct(&spec)?;
    global.validate(&lib)?;
    run.write_json("global.json", grid_json(&global))?;
    let opts = HomogenizeOptions { solver: a.common.solver(PreconditionerKind::Jacobi), allow_non_coercive: false };
    let report = windowed_recovery(&global, &spec, &lib, &opts)?;
    let pass = report.fractions_exact && report.patches.iter().all(|p| p.gap <= a.max_gap);
    run.write_json("recovery.json", json!(report))?;
    Ok(pass)
}

pub fn gen_micro_cmd(a: &GenMicroArgs, run: &mut Run) -> Result<bool, Failure> {
    let dims = dims3(&a.dims, "dims")?;
    let fractions = || FractionVector::new(a.fractions.clone());
    let mut pass = true;
    let g = match a.kind {
        MicroKind::Laminate => make_laminate(a.orientation, &fractions()?, dims)?,
        MicroKind::Checkerboard => make_checkerboard(a.period, a.nphases, dims)?,
        MicroKind::Random => make_random(&fractions()?, dims, a.seed)?,
        MicroKind::Uniform => VoxelGrid::uniform(dims[0], dims[1], dims[2], Domain::Cell, a.phase)?,
        MicroKind::Adjust => {
            let path = a.input.as_ref().ok_or_else(|| Failure::Usage("--kind adjust needs --input".into()))?;
            let input = VoxelGrid::from_json(&run.read(path)?)?;
            let target = fractions()?;
            let adjusted = adjust_volume_fraction(&input, &target)?;
            pass = adjusted.grid.counts(target.len()) == target.integer_counts(input.len());
            run.write_json("adjust.json", json!({ "flips": adjusted.flips, "realized": adjusted.realized.0 }))?;
            adjusted.grid
        }
    };
    let g = match a.domain {
        Some(d) => VoxelGrid::new(g.nx, g.ny, g.nz, d.into(), g.data)?,
        None => g,
    };
    run.write_json("micro.json", grid_json(&g))?;
    Ok(pass)
}
