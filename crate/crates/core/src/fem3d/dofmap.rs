use crate::edges::EdgeSet;

/// Boundary treatment of the 3D grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    /// Periodic in x1, x2 on the unit torus; free top and bottom faces.
    Cell,
    /// `omega = (0, lx) x (0, ly)`, all three components zero on `Gamma_d x I`.
    Plate { lx: f64, ly: f64, clamped: EdgeSet },
}

/// Null space of the assembled operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Trivial,
    /// Constant translations; dof `3 n + c` is component `c` of node `n`.
    Translations,
}

impl Kernel {
    /// Removes the kernel component (Euclidean projection).
    pub fn project(&self, v: &mut [f64]) {
        if let Kernel::Translations = self {
            let n = v.len() / 3;
            if n == 0 {
                return;
            }
            for c in 0..3 {
                let mean = v.iter().skip(c).step_by(3).sum::<f64>() / n as f64;
                v.iter_mut().skip(c).step_by(3).for_each(|x| *x -= mean);
            }
        }
    }
}

pub const CONSTRAINED: usize = usize::MAX;

/// Node numbering and free degrees of freedom of a voxel grid.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub mode: Mode,
    node_count: usize,
    dof_of: Vec<usize>,
    n_free: usize,
}

impl DofMap {
    pub fn new(nx: usize, ny: usize, nz: usize, mode: Mode) -> Self {
        let node_count = match mode {
            Mode::Cell => nx * ny * (nz + 1),
            Mode::Plate { .. } => (nx + 1) * (ny + 1) * (nz + 1),
        };
        let mut dof_of = vec![CONSTRAINED; 3 * node_count];
        let mut n_free = 0;
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    let fixed = match &mode {
                        Mode::Cell => {
                            if i == nx || j == ny {
                                continue;
                            }
                            false
                        }
                        Mode::Plate { clamped, .. } => clamped.holds(i, j, nx, ny),
                    };
                    let n = Self::node_raw(&mode, nx, ny, i, j, k);
                    if !fixed {
                        for c in 0..3 {
                            dof_of[3 * n + c] = n_free;
                            n_free += 1;
                        }
                    }
                }
            }
        }
        Self { nx, ny, nz, mode, node_count, dof_of, n_free }
    }

    #[inline]
    fn node_raw(mode: &Mode, nx: usize, ny: usize, i: usize, j: usize, k: usize) -> usize {
        match mode {
            Mode::Cell => (i % nx) + nx * ((j % ny) + ny * k),
            Mode::Plate { .. } => i + (nx + 1) * (j + (ny + 1) * k),
        }
    }

    /// Node at lattice point `(i, j, k)`, `0 <= i <= nx`; wraps in cell mode.
    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        Self::node_raw(&self.mode, self.nx, self.ny, i, j, k)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_constrained(&self) -> usize {
        3 * self.node_count - self.n_free
    }

    /// Free index of component `c` of node `n`, or [`CONSTRAINED`].
    #[inline]
    pub fn dof(&self, n: usize, c: usize) -> usize {
        self.dof_of[3 * n + c]
    }

    pub fn element_nodes(&self, i: usize, j: usize, k: usize) -> [usize; 8] {
        std::array::from_fn(|a| self.node(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1)))
    }

    pub fn element_dofs(&self, i: usize, j: usize, k: usize) -> [usize; 24] {
        let nodes = self.element_nodes(i, j, k);
        std::array::from_fn(|d| self.dof(nodes[d / 3], d % 3))
    }

    pub fn kernel(&self) -> Kernel {
        match self.mode {
            Mode::Cell => Kernel::Translations,
            Mode::Plate { .. } => Kernel::Trivial,
        }
    }

    /// Free dofs grouped by node, for block preconditioning.
    pub fn node_blocks(&self) -> Vec<Vec<usize>> {
        (0..self.node_count)
            .map(|n| (0..3).map(|c| self.dof(n, c)).filter(|&d| d != CONSTRAINED).collect::<Vec<_>>())
            .filter(|b| !b.is_empty())
            .collect()
    }

    /// Scatter a free-dof vector to nodal triples (constrained entries zero).
    pub fn to_nodal(&self, u: &[f64]) -> Vec<[f64; 3]> {
        (0..self.node_count)
            .map(|n| {
                std::array::from_fn(|c| match self.dof(n, c) {
                    CONSTRAINED => 0.0,
                    d => u[d],
                })
            })
            .collect()
    }

    pub fn element_size(&self) -> (f64, f64, f64) {
        let (lx, ly) = match self.mode {
            Mode::Cell => (1.0, 1.0),
            Mode::Plate { lx, ly, .. } => (lx, ly),
        };
        (lx / self.nx as f64, ly / self.ny as f64, 1.0 / self.nz as f64)
    }
}
