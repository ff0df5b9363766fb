//! Voxel phase fields on the periodic cell `T^2 x I` and on the plate `omega x I`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::PhaseLibrary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Periodic in x1 and x2.
    Cell,
    /// `omega x I` with lateral clamping available.
    Plate,
}

/// Phase ids on an `nx x ny x nz` voxel lattice, x fastest, then y, then z.
/// The z direction spans `I = [-1/2, 1/2]`, layer 0 at the bottom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub domain: Domain,
    pub data: Vec<u32>,
}

impl VoxelGrid {
    pub fn new(nx: usize, ny: usize, nz: usize, domain: Domain, data: Vec<u32>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::GridMismatch(format!("grid dimensions must be positive, got {nx}x{ny}x{nz}")));
        }
        if data.len() != nx * ny * nz {
            return Err(Error::GridMismatch(format!("data length {} does not match {nx}x{ny}x{nz}", data.len())));
        }
        Ok(Self { nx, ny, nz, domain, data })
    }

    pub fn uniform(nx: usize, ny: usize, nz: usize, domain: Domain, phase: u32) -> Result<Self> {
        Self::new(nx, ny, nz, domain, vec![phase; nx * ny * nz])
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        domain: Domain,
        mut f: impl FnMut(usize, usize, usize) -> u32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::new(nx, ny, nz, domain, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u32 {
        self.data[self.index(i, j, k)]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Largest phase id plus one.
    pub fn phase_count(&self) -> usize {
        self.data.iter().copied().max().map_or(0, |m| m as usize + 1)
    }

    /// Sorted distinct phase ids present.
    pub fn phase_ids(&self) -> Vec<u32> {
        let mut ids = self.data.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate(&self, phases: &PhaseLibrary) -> Result<()> {
        for id in self.phase_ids() {
            phases.get(id)?;
        }
        Ok(())
    }

    pub fn counts(&self, nphases: usize) -> Vec<usize> {
        let mut c = vec![0; nphases.max(self.phase_count())];
        for &p in &self.data {
            c[p as usize] += 1;
        }
        c
    }

    /// Sub-grid `[x0, x0+nx) x [y0, y0+ny)` over all layers, wrapping periodically.
    pub fn window(&self, x0: usize, y0: usize, nx: usize, ny: usize, domain: Domain) -> Result<Self> {
        Self::from_fn(nx, ny, self.nz, domain, |i, j, k| self.get((x0 + i) % self.nx, (y0 + j) % self.ny, k))
    }

    /// In-plane rotation by a quarter turn: `new(i, j) = old(j, nx - 1 - i)`.
    pub fn rotate_quarter_turn(&self) -> Self {
        let (nx, ny) = (self.ny, self.nx);
        Self::from_fn(nx, ny, self.nz, self.domain, |i, j, k| self.get(j, self.ny - 1 - i, k))
            .expect("rotation preserves the voxel count")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: VoxelGrid = serde_json::from_str(text)?;
        Self::new(g.nx, g.ny, g.nz, g.domain, g.data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Volume fractions `theta_i` of phases `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FractionVector(pub Vec<f64>);

impl FractionVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::UnrepresentableFraction(format!("fractions must lie in [0, 1]: {theta:?}")));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::UnrepresentableFraction(format!("fractions sum to {sum}, not 1")));
        }
        Ok(Self(theta))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Integer voxel counts summing to `total`: rounded, with the rounding
    /// defect assigned by largest remainder (ties favour the lower id).
    pub fn integer_counts(&self, total: usize) -> Vec<usize> {
        let raw: Vec<f64> = self.0.iter().map(|t| t * total as f64).collect();
        let mut counts: Vec<usize> = raw.iter().map(|r| r.round() as usize).collect();
        let mut assigned: isize = counts.iter().sum::<usize>() as isize;
        let target = total as isize;
        while assigned != target {
            if assigned < target {
                // Most under-rounded phase gets one more voxel.
                let k = (0..counts.len())
                    .max_by(|&a, &b| {
                        (raw[a] - counts[a] as f64).total_cmp(&(raw[b] - counts[b] as f64)).then(b.cmp(&a))
                    })
                    .unwrap();
                counts[k] += 1;
                assigned += 1;
            } else {
                let k = (0..counts.len())
                    .filter(|&k| counts[k] > 0)
                    .max_by(|&a, &b| {
                        (counts[a] as f64 - raw[a]).total_cmp(&(counts[b] as f64 - raw[b])).then(a.cmp(&b))
                    })
                    .unwrap();
                counts[k] -= 1;
                assigned -= 1;
            }
        }
        counts
    }
}

/// `theta_i = #voxels(i) / total`
pub fn volume_fractions(grid: &VoxelGrid, nphases: usize) -> FractionVector {
    let total = grid.len() as f64;
    FractionVector(grid.counts(nphases).into_iter().map(|c| c as f64 / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X1,
    X2,
    X3,
}

/// Layering direction of a laminate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Layers normal to a coordinate axis.
    Axis(Axis),
    /// In-plane layer normal at this angle (degrees) from x1.
    Angle(f64),
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::Axis(Axis::X1) => write!(f, "x1"),
            Orientation::Axis(Axis::X2) => write!(f, "x2"),
            Orientation::Axis(Axis::X3) => write!(f, "x3"),
            Orientation::Angle(a) => write!(f, "{a}deg"),
        }
    }
}

/// `x1`, `x2`, `x3`, or an in-plane angle in degrees (`45` or `45deg`).
impl std::str::FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x1" => Ok(Orientation::Axis(Axis::X1)),
            "x2" => Ok(Orientation::Axis(Axis::X2)),
            "x3" => Ok(Orientation::Axis(Axis::X3)),
            other => other
                .trim_end_matches("deg")
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .map(Orientation::Angle)
                .ok_or_else(|| format!("unknown orientation '{other}' (expected x1, x2, x3 or an angle in degrees)")),
        }
    }
}

/// Layer boundaries along `n` voxels: phase `p` occupies `[b[p], b[p+1])`.
fn layer_bounds(fractions: &FractionVector, n: usize) -> Result<Vec<usize>> {
    let counts = fractions.integer_counts(n);
    for (p, (&c, &t)) in counts.iter().zip(&fractions.0).enumerate() {
        if t > 0.0 && c == 0 {
            return Err(Error::UnrepresentableFraction(format!(
                "phase {p} with fraction {t} gets no layer among {n} voxels"
            )));
        }
    }
    let mut b = vec![0];
    for c in counts {
        b.push(b.last().unwrap() + c);
    }
    Ok(b)
}

fn phase_for(bounds: &[usize], idx: usize) -> u32 {
    (0..bounds.len() - 1).find(|&p| idx < bounds[p + 1]).unwrap_or(bounds.len() - 2) as u32
}

/// Small integer direction `(p, q)` with `atan2(q, p)` equal to `deg`, if any.
fn lattice_direction(deg: f64) -> Option<(i64, i64)> {
    let target = deg.to_radians();
    for n in 1..=8i64 {
        for p in -n..=n {
            for q in -n..=n {
                if p.abs().max(q.abs()) != n {
                    continue;
                }
                let a = (q as f64).atan2(p as f64);
                let d = (a - target).rem_euclid(std::f64::consts::TAU);
                if d.min(std::f64::consts::TAU - d) < 1e-9 {
                    return Some((p, q));
                }
            }
        }
    }
    None
}

/// Layered grid. Axis laminates have exact integer layer counts; angled
/// laminates are rasterized from the signed distance along the layer normal
/// at voxel centers, wrapped periodically.
pub fn make_laminate(orientation: Orientation, fractions: &FractionVector, dims: [usize; 3]) -> Result<VoxelGrid> {
    let [nx, ny, nz] = dims;
    match orientation {
        Orientation::Axis(axis) => {
            let n = match axis {
                Axis::X1 => nx,
                Axis::X2 => ny,
                Axis::X3 => nz,
            };
            let b = layer_bounds(fractions, n)?;
            VoxelGrid::from_fn(nx, ny, nz, Domain::Cell, |i, j, k| {
                phase_for(
                    &b,
                    match axis {
                        Axis::X1 => i,
                        Axis::X2 => j,
                        Axis::X3 => k,
                    },
                )
            })
        }
        Orientation::Angle(deg) => {
            let mut cum = vec![0.0];
            for t in &fractions.0 {
                cum.push(cum.last().unwrap() + t);
            }
            let (cx, cy) = match lattice_direction(deg) {
                Some((p, q)) => (p as f64, q as f64),
                None => {
                    let r = deg.to_radians();
                    (r.cos(), r.sin())
                }
            };
            let grid = VoxelGrid::from_fn(nx, ny, nz, Domain::Cell, |i, j, _| {
                let x = (i as f64 + 0.5) / nx as f64;
                let y = (j as f64 + 0.5) / ny as f64;
                let s = (cx * x + cy * y).rem_euclid(1.0);
                (0..fractions.len()).find(|&p| s < cum[p + 1]).unwrap_or(fractions.len() - 1) as u32
            })?;
            let realized = volume_fractions(&grid, fractions.len());
            for (p, (&r, &t)) in realized.0.iter().zip(&fractions.0).enumerate() {
                if t > 0.0 && r == 0.0 {
                    return Err(Error::UnrepresentableFraction(format!(
                        "phase {p} vanishes in the {deg} degree laminate at {nx}x{ny}"
                    )));
                }
            }
            Ok(grid)
        }
    }
}

/// 3D checkerboard of `period`-voxel cubes; phase `(bi + bj + bk) mod nphases`.
pub fn make_checkerboard(period: usize, nphases: usize, dims: [usize; 3]) -> Result<VoxelGrid> {
    let [nx, ny, nz] = dims;
    if period == 0 || nphases == 0 {
        return Err(Error::InvalidParameter("period and phase count must be positive".into()));
    }
    if nx % period != 0 || ny % period != 0 || nz % period != 0 {
        return Err(Error::GridMismatch(format!("period {period} does not divide {nx}x{ny}x{nz}")));
    }
    VoxelGrid::from_fn(nx, ny, nz, Domain::Cell, |i, j, k| ((i / period + j / period + k / period) % nphases) as u32)
}

/// I.i.d. voxel phases drawn with probabilities `fractions`.
pub fn make_random(fractions: &FractionVector, dims: [usize; 3], seed: u64) -> Result<VoxelGrid> {
    let [nx, ny, nz] = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cum = vec![0.0];
    for t in &fractions.0 {
        cum.push(cum.last().unwrap() + t);
    }
    VoxelGrid::from_fn(nx, ny, nz, Domain::Cell, |_, _, _| {
        let u: f64 = rng.gen();
        (0..fractions.len()).find(|&p| u < cum[p + 1]).unwrap_or(fractions.len() - 1) as u32
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjusted {
    pub grid: VoxelGrid,
    pub flips: usize,
    pub realized: FractionVector,
}

/// Rebalances phase counts to the integer-rounded target with the minimal
/// number of voxel changes. Surplus voxels are taken in lexicographic storage
/// order and handed to the lowest-id phase still in deficit.
pub fn adjust_volume_fraction(grid: &VoxelGrid, target: &FractionVector) -> Result<Adjusted> {
    let n = target.len();
    if grid.phase_count() > n {
        return Err(Error::UnrepresentableFraction(format!(
            "grid holds phase {} but the target lists {n} phases",
            grid.phase_count() - 1
        )));
    }
    let want = target.integer_counts(grid.len());
    let have = grid.counts(n);
    let mut surplus: Vec<usize> = (0..n).map(|p| have[p].saturating_sub(want[p])).collect();
    let mut deficit: Vec<usize> = (0..n).map(|p| want[p].saturating_sub(have[p])).collect();

    let mut out = grid.clone();
    let mut flips = 0;
    let mut next_deficit = 0;
    for v in out.data.iter_mut() {
        let p = *v as usize;
        if surplus[p] == 0 {
            continue;
        }
        while deficit[next_deficit] == 0 {
            next_deficit += 1;
        }
        *v = next_deficit as u32;
        surplus[p] -= 1;
        deficit[next_deficit] -= 1;
        flips += 1;
    }
    let realized = volume_fractions(&out, n);
    Ok(Adjusted { grid: out, flips, realized })
}

/// Axis-aligned rectangle `[x0, x0+nx) x [y0, y0+ny)` in plate voxels filled
/// by periodic repetition of `cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub x0: usize,
    pub y0: usize,
    pub nx: usize,
    pub ny: usize,
    pub cell: VoxelGrid,
}

/// Plate grid whose restriction to each patch is the periodic extension of
/// that patch's cell, anchored at the patch origin.
pub fn tile(patches: &[Patch], nx: usize, ny: usize) -> Result<VoxelGrid> {
    let nz = patches.first().map(|p| p.cell.nz).ok_or_else(|| Error::GridMismatch("no patches".into()))?;
    let mut owner: Vec<Option<usize>> = vec![None; nx * ny];
    for (pi, p) in patches.iter().enumerate() {
        if p.cell.nz != nz {
            return Err(Error::GridMismatch(format!("patch {pi} has {} layers, expected {nz}", p.cell.nz)));
        }
        if p.nx == 0 || p.ny == 0 || p.x0 + p.nx > nx || p.y0 + p.ny > ny {
            return Err(Error::GridMismatch(format!("patch {pi} leaves the {nx}x{ny} plate")));
        }
        if p.nx % p.cell.nx != 0 || p.ny % p.cell.ny != 0 {
            return Err(Error::GridMismatch(format!(
                "patch {pi} of {}x{} voxels is not a whole number of {}x{} periods",
                p.nx, p.ny, p.cell.nx, p.cell.ny
            )));
        }
        for j in p.y0..p.y0 + p.ny {
            for i in p.x0..p.x0 + p.nx {
                if let Some(other) = owner[i + nx * j] {
                    return Err(Error::GridMismatch(format!("patches {other} and {pi} overlap at ({i}, {j})")));
                }
                owner[i + nx * j] = Some(pi);
            }
        }
    }
    if let Some(pos) = owner.iter().position(Option::is_none) {
        return Err(Error::GridMismatch(format!("voxel column ({}, {}) is not covered", pos % nx, pos / nx)));
    }
    VoxelGrid::from_fn(nx, ny, nz, Domain::Plate, |i, j, k| {
        let p = &patches[owner[i + nx * j].unwrap()];
        p.cell.get((i - p.x0) % p.cell.nx, (j - p.y0) % p.cell.ny, k)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> FractionVector {
        FractionVector::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn x3_laminate_layers() {
        let g = make_laminate(Orientation::Axis(Axis::X3), &half(), [2, 2, 8]).unwrap();
        for k in 0..8 {
            assert_eq!(g.get(1, 1, k), if k < 4 { 0 } else { 1 });
        }
        assert_eq!(volume_fractions(&g, 2).0, vec![0.5, 0.5]);
    }

    #[test]
    fn x1_laminate_columns() {
        let f = FractionVector::new(vec![0.25, 0.75]).unwrap();
        let g = make_laminate(Orientation::Axis(Axis::X1), &f, [8, 2, 2]).unwrap();
        let row: Vec<u32> = (0..8).map(|i| g.get(i, 0, 0)).collect();
        assert_eq!(row, vec![0, 0, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn angled_laminate_fraction_within_one_voxel_row() {
        let g = make_laminate(Orientation::Angle(30.0), &half(), [16, 16, 1]).unwrap();
        let t = volume_fractions(&g, 2).0[0];
        assert!((t - 0.5).abs() <= 1.0 / 16.0, "{t}");
    }

    #[test]
    fn quarter_turn_laminate_is_x2_laminate() {
        let a = make_laminate(Orientation::Angle(90.0), &half(), [8, 8, 2]).unwrap();
        let b = make_laminate(Orientation::Axis(Axis::X2), &half(), [8, 8, 2]).unwrap();
        assert_eq!(a, b);
        let c = make_laminate(Orientation::Angle(0.0), &half(), [8, 8, 2]).unwrap();
        assert_eq!(c, make_laminate(Orientation::Axis(Axis::X1), &half(), [8, 8, 2]).unwrap());
    }

    #[test]
    fn laminate_rejects_thin_layers() {
        let f = FractionVector::new(vec![0.05, 0.95]).unwrap();
        assert!(make_laminate(Orientation::Axis(Axis::X3), &f, [1, 1, 4]).is_err());
    }

    #[test]
    fn checkerboard_examples() {
        let g = make_checkerboard(2, 2, [4, 4, 4]).unwrap();
        assert_eq!(volume_fractions(&g, 2).0, vec![0.5, 0.5]);
        let g = make_checkerboard(4, 2, [8, 8, 8]).unwrap();
        assert_eq!(g.get(0, 0, 0), 0);
        assert_eq!(g.get(3, 3, 3), 0);
        assert_eq!(g.get(4, 0, 0), 1);
        assert_eq!(g.get(4, 4, 0), 0);
        assert!(make_checkerboard(3, 2, [8, 8, 8]).is_err());
    }

    #[test]
    fn uniform_fractions() {
        let g = VoxelGrid::uniform(3, 3, 3, Domain::Cell, 0).unwrap();
        assert_eq!(volume_fractions(&g, 2).0, vec![1.0, 0.0]);
    }

    #[test]
    fn adjust_examples() {
        let g = make_laminate(Orientation::Axis(Axis::X3), &half(), [2, 2, 4]).unwrap();
        let a = adjust_volume_fraction(&g, &half()).unwrap();
        assert_eq!(a.flips, 0);
        assert_eq!(a.grid, g);

        let g = VoxelGrid::from_fn(10, 10, 1, Domain::Cell, |i, j, _| u32::from(i + 10 * j >= 52)).unwrap();
        let a = adjust_volume_fraction(&g, &half()).unwrap();
        assert_eq!(a.flips, 2);
        assert_eq!(a.grid.counts(2), vec![50, 50]);
        // Lexicographic: the first two phase-0 voxels are the ones flipped.
        assert_eq!(a.grid.data[0], 1);
        assert_eq!(a.grid.data[1], 1);
        assert_eq!(a.grid.data[2], 0);

        let third = FractionVector::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let a = adjust_volume_fraction(&g, &third).unwrap();
        assert_eq!(a.grid.counts(2), vec![33, 67]);
        assert!((a.realized.0[0] - 0.33).abs() < 1e-15);
    }

    #[test]
    fn integer_counts_sum_to_total() {
        let f = FractionVector::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(f.integer_counts(100), vec![34, 33, 33]);
        assert_eq!(f.integer_counts(2), vec![1, 1, 0]);
    }

    #[test]
    fn tile_single_patch() {
        let cell = make_checkerboard(2, 2, [4, 4, 4]).unwrap();
        let g = tile(&[Patch { x0: 0, y0: 0, nx: 16, ny: 16, cell: cell.clone() }], 16, 16).unwrap();
        assert_eq!(g.dims(), [16, 16, 4]);
        assert_eq!(g.domain, Domain::Plate);
        for k in 0..4 {
            for j in 0..16 {
                for i in 0..12 {
                    assert_eq!(g.get(i + 4, j, k), g.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn tile_two_patches_and_errors() {
        let a = make_laminate(Orientation::Axis(Axis::X1), &half(), [4, 4, 2]).unwrap();
        let b = make_laminate(Orientation::Axis(Axis::X2), &half(), [4, 4, 2]).unwrap();
        let patches = vec![
            Patch { x0: 0, y0: 0, nx: 8, ny: 8, cell: a.clone() },
            Patch { x0: 8, y0: 0, nx: 8, ny: 8, cell: b.clone() },
        ];
        let g = tile(&patches, 16, 8).unwrap();
        assert_eq!(g.get(1, 5, 0), a.get(1, 1, 0));
        assert_eq!(g.get(9, 5, 1), b.get(1, 1, 1));

        let overlap = vec![patches[0].clone(), Patch { x0: 4, ..patches[1].clone() }];
        assert!(tile(&overlap, 16, 8).is_err());
        let misaligned = vec![Patch { nx: 6, ..patches[0].clone() }];
        assert!(tile(&misaligned, 6, 8).is_err());
        assert!(tile(&patches[..1], 16, 8).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = make_checkerboard(1, 2, [2, 3, 1]).unwrap();
        assert_eq!(VoxelGrid::from_json(&g.to_json()).unwrap(), g);
        assert!(VoxelGrid::from_json(r#"{"nx":2,"ny":2,"nz":1,"domain":"cell","data":[0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn adjust_hits_rounded_target_with_minimal_flips(
            seed in 0u64..10_000,
            p in 0.05f64..0.95,
            t in prop::sample::select(vec![0.5, 1.0 / 3.0, 0.25, 0.7]),
            dims in prop::sample::select(vec![[10, 10, 1], [5, 5, 4], [4, 5, 5], [7, 3, 5]]),
        ) {
            let g = make_random(&FractionVector::new(vec![p, 1.0 - p]).unwrap(), dims, seed).unwrap();
            let target = FractionVector::new(vec![t, 1.0 - t]).unwrap();
            let a = adjust_volume_fraction(&g, &target).unwrap();
            let want = target.integer_counts(g.len());
            prop_assert_eq!(a.grid.counts(2), want.clone());
            let have = g.counts(2);
            let minimal: usize = (0..2).map(|k| have[k].saturating_sub(want[k])).sum();
            prop_assert_eq!(a.flips, minimal);
            let changed = a.grid.data.iter().zip(&g.data).filter(|(x, y)| x != y).count();
            prop_assert_eq!(changed, a.flips);
            let l1: f64 = volume_fractions(&g, 2).0.iter().zip(&target.0).map(|(x, y)| (x - y).abs()).sum();
            prop_assert!(a.flips as f64 <= g.len() as f64 * l1 / 2.0 + 2.0);
        }
    }
}
