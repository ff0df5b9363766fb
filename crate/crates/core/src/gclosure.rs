//! Sampling homogenized plate densities at a fixed volume fraction, and the
//! patchwork construction with windowed local recovery.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{PhaseLibrary, BASIS_TAG};
use crate::cell::{check_bounds, homogenize, BoundsReport, HomogenizeOptions, HomogenizedForm};
use crate::error::{Error, Result};
use crate::microstructure::{
    adjust_volume_fraction, make_checkerboard, make_laminate, make_random, tile, Domain, FractionVector, Orientation,
    Patch, VoxelGrid,
};

/// A cell microstructure family member at a given resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    Laminate { orientation: Orientation },
    Checkerboard { period: usize },
    Random { seed: u64 },
    Uniform { phase: u32 },
}

impl Generator {
    pub fn describe(&self) -> String {
        match self {
            Generator::Laminate { orientation } => format!("laminate {orientation}"),
            Generator::Checkerboard { period } => format!("checkerboard p{period}"),
            Generator::Random { seed } => format!("random s{seed}"),
            Generator::Uniform { phase } => format!("uniform {phase}"),
        }
    }

    /// Raw grid before any volume-fraction adjustment.
    pub fn generate(&self, theta: &FractionVector, dims: [usize; 3]) -> Result<VoxelGrid> {
        match self {
            Generator::Laminate { orientation } => make_laminate(*orientation, theta, dims),
            Generator::Checkerboard { period } => make_checkerboard(*period, theta.len(), dims),
            Generator::Random { seed } => make_random(theta, dims, *seed),
            Generator::Uniform { phase } => VoxelGrid::uniform(dims[0], dims[1], dims[2], Domain::Cell, *phase),
        }
    }

    /// Grid with phase counts forced to the integer-rounded `theta`.
    pub fn generate_adjusted(&self, theta: &FractionVector, dims: [usize; 3]) -> Result<(VoxelGrid, usize)> {
        let raw = self.generate(theta, dims)?;
        let adjusted = adjust_volume_fraction(&raw, theta)?;
        Ok((adjusted.grid, adjusted.flips))
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub generator: usize,
    pub descriptor: String,
    pub gamma: f64,
    pub flips: usize,
    pub realized: Vec<f64>,
    pub result: std::result::Result<(HomogenizedForm, BoundsReport), String>,
}

#[derive(Debug, Clone)]
pub struct SampleSet {
    pub target: FractionVector,
    pub samples: Vec<Sample>,
}

/// One form per (generator, gamma), in input order. Every grid is adjusted to
/// the target fraction first. Failures are recorded per sample.
pub fn sample_ptheta(
    phases: &PhaseLibrary,
    theta: &FractionVector,
    generators: &[Generator],
    gammas: &[f64],
    dims: [usize; 3],
    opts: &HomogenizeOptions,
) -> Result<SampleSet> {
    if theta.len() != phases.len() {
        return Err(Error::InvalidParameter(format!(
            "fraction vector has {} entries for {} phases",
            theta.len(),
            phases.len()
        )));
    }
    let mut samples = Vec::new();
    for (gi, gen) in generators.iter().enumerate() {
        let grid = gen.generate_adjusted(theta, dims);
        for &gamma in gammas {
            let descriptor = gen.describe();
            let (result, flips, realized) = match &grid {
                Ok((g, flips)) => {
                    let realized = crate::microstructure::volume_fractions(g, theta.len()).0;
                    let r = homogenize(g, phases, gamma, opts).and_then(|h| {
                        let (alpha, beta) = phases.hard_bounds(g.phase_ids())?;
                        let report = check_bounds(&h, alpha, beta);
                        Ok((h, report))
                    });
                    (r.map_err(|e| e.to_string()), *flips, realized)
                }
                Err(e) => (Err(e.to_string()), 0, Vec::new()),
            };
            if let Err(e) = &result {
                log::warn!("sample {descriptor} at gamma = {gamma}: {e}");
            }
            samples.push(Sample { generator: gi, descriptor, gamma, flips, realized, result });
        }
    }
    Ok(SampleSet { target: theta.clone(), samples })
}

impl SampleSet {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# basis: {BASIS_TAG}; target theta = {:?}\ngenerator,descriptor,gamma", self.target.0);
        for i in 0..6 {
            for j in i..6 {
                let _ = write!(out, ",a{i}{j}");
            }
        }
        out.push_str(",min_eig,max_eig\n");
        for s in &self.samples {
            if let Ok((h, _)) = &s.result {
                let _ = write!(out, "{},{},{}", s.generator, s.descriptor, s.gamma);
                for v in h.form.upper_triangle() {
                    let _ = write!(out, ",{v:.15e}");
                }
                let (lo, hi) = h.form.min_max_eigenvalues();
                let _ = writeln!(out, ",{lo:.15e},{hi:.15e}");
            }
        }
        out
    }
}

/// Cell of one patch: a generator at `period x period x nz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub x0: usize,
    pub y0: usize,
    pub nx: usize,
    pub ny: usize,
    pub generator: Generator,
    pub fractions: Vec<f64>,
    pub gamma: f64,
}

/// Partition of the `nx x ny` plate into patches, each tiled by its own cell
/// with `period` voxels per in-plane period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchworkSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub period: usize,
    pub patches: Vec<PatchSpec>,
    /// Window margin from the patch edges, in periods.
    #[serde(default = "one")]
    pub margin: usize,
}

fn one() -> usize {
    1
}

impl PatchworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// The generating cell of every patch.
    pub fn cells(&self) -> Result<Vec<VoxelGrid>> {
        if self.period == 0 {
            return Err(Error::InvalidParameter("period must be positive".into()));
        }
        self.patches
            .iter()
            .map(|p| {
                let theta = FractionVector::new(p.fractions.clone())?;
                Ok(p.generator.generate_adjusted(&theta, [self.period, self.period, self.nz])?.0)
            })
            .collect()
    }
}

/// Global plate grid: each patch is the periodic extension of its cell.
pub fn patchwork_construct(spec: &PatchworkSpec) -> Result<VoxelGrid> {
    let cells = spec.cells()?;
    let patches: Vec<Patch> = spec
        .patches
        .iter()
        .zip(cells)
        .map(|(p, cell)| Patch { x0: p.x0, y0: p.y0, nx: p.nx, ny: p.ny, cell })
        .collect();
    tile(&patches, spec.nx, spec.ny)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchRecovery {
    pub patch: usize,
    /// Window origin in plate voxels.
    pub window: [usize; 2],
    /// `max |A_window - A_target| / max |A_target|`
    pub gap: f64,
    pub target: Vec<f64>,
    pub recovered: Vec<f64>,
    /// Phase counts of the patch region in the global grid.
    pub counts: Vec<usize>,
    /// Cell counts times the number of periods in the patch.
    pub expected_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub patches: Vec<PatchRecovery>,
    /// Every patch region has exactly the counts of its tiled cell.
    pub fractions_exact: bool,
    pub global_counts: Vec<usize>,
    pub expected_global_counts: Vec<usize>,
}

/// Homogenizes a one-period window centered in each patch as a cell problem
/// and compares with the form of the generating cell. Windows closer than
/// `spec.margin` periods to a patch edge are rejected.
pub fn windowed_recovery(
    global: &VoxelGrid,
    spec: &PatchworkSpec,
    phases: &PhaseLibrary,
    opts: &HomogenizeOptions,
) -> Result<RecoveryReport> {
    if global.dims() != [spec.nx, spec.ny, spec.nz] {
        return Err(Error::GridMismatch("global grid does not match the patchwork spec".into()));
    }
    let cells = spec.cells()?;
    let per = spec.period;
    let n = phases.len();
    let mut reports = Vec::new();
    let mut expected_global = vec![0; n];
    for (pi, (p, cell)) in spec.patches.iter().zip(&cells).enumerate() {
        let margin = spec.margin * per;
        if p.nx < per + 2 * margin || p.ny < per + 2 * margin {
            return Err(Error::WindowCollision { patch: pi });
        }
        let wx = p.x0 + (p.nx - per) / 2;
        let wy = p.y0 + (p.ny - per) / 2;
        let window = global.window(wx, wy, per, per, Domain::Cell)?;
        let target = homogenize(cell, phases, p.gamma, opts)?;
        let recovered = homogenize(&window, phases, p.gamma, opts)?;
        let scale = target.form.matrix.amax();
        let gap = (recovered.form.matrix - target.form.matrix).amax() / scale;

        let mut counts = vec![0; n];
        for k in 0..spec.nz {
            for j in p.y0..p.y0 + p.ny {
                for i in p.x0..p.x0 + p.nx {
                    counts[global.get(i, j, k) as usize] += 1;
                }
            }
        }
        let repeats = (p.nx / per) * (p.ny / per);
        let expected_counts: Vec<usize> = cell.counts(n).iter().map(|c| c * repeats).collect();
        for (g, e) in expected_global.iter_mut().zip(&expected_counts) {
            *g += e;
        }
        reports.push(PatchRecovery {
            patch: pi,
            window: [wx, wy],
            gap,
            target: target.form.row_major(),
            recovered: recovered.form.row_major(),
            counts,
            expected_counts,
        });
    }
    let global_counts = global.counts(n);
    let fractions_exact = reports.iter().all(|r| r.counts == r.expected_counts) && global_counts == expected_global;
    Ok(RecoveryReport { patches: reports, fractions_exact, global_counts, expected_global_counts: expected_global })
}
