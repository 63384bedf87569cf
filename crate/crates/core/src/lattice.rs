//! Open-boundary rectangular lattices.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{domain, Error, Result};

/// A lattice of `nx × ny` sites with index `x + nx·y`.
///
/// `adjacency` lists each bond once as `(i, j)` with `i < j`. Rectangular
/// lattices carry nearest-neighbour bonds only; [`Lattice::from_adjacency`]
/// accepts any simple graph on the same site set, which is how non-bipartite
/// test geometries are expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    nx: usize,
    ny: usize,
    adjacency: Vec<(usize, usize)>,
    parity: Option<Vec<u8>>,
}

impl Lattice {
    /// Rectangular open-boundary grid with nearest-neighbour bonds.
    pub fn rectangular(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return domain(format!("lattice dimensions must be positive, got {nx}x{ny}"));
        }
        let mut adjacency = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * y;
                if x + 1 < nx {
                    adjacency.push((i, i + 1));
                }
                if y + 1 < ny {
                    adjacency.push((i, i + nx));
                }
            }
        }
        adjacency.sort_unstable();
        let parity = (0..nx * ny).map(|i| ((i % nx + i / nx) % 2) as u8).collect();
        Ok(Lattice {
            nx,
            ny,
            adjacency,
            parity: Some(parity),
        })
    }

    /// A chain of `n` sites along x.
    pub fn chain(n: usize) -> Result<Self> {
        Self::rectangular(n, 1)
    }

    /// Lattice with an explicit bond list.
    ///
    /// Bonds must connect distinct in-range sites and appear once (in either
    /// orientation). The two-colouring is computed by breadth-first search and
    /// is absent when the graph has an odd cycle.
    pub fn from_adjacency(nx: usize, ny: usize, bonds: &[(usize, usize)]) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return domain(format!("lattice dimensions must be positive, got {nx}x{ny}"));
        }
        let n = nx * ny;
        let mut seen = BTreeSet::new();
        for &(a, b) in bonds {
            if a >= n || b >= n {
                return domain(format!("bond ({a},{b}) references a site outside 0..{n}"));
            }
            if a == b {
                return domain(format!("self bond on site {a}"));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return domain(format!("duplicate bond ({a},{b})"));
            }
        }
        let adjacency: Vec<_> = seen.into_iter().collect();
        let parity = two_colouring(n, &adjacency);
        Ok(Lattice {
            nx,
            ny,
            adjacency,
            parity,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nsites(&self) -> usize {
        self.nx * self.ny
    }

    /// Bonds as `(i, j)` with `i < j`, sorted.
    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    /// `(x, y)` coordinates of site `i`.
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        x + self.nx * y
    }

    pub fn manhattan(&self, i: usize, j: usize) -> usize {
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        xi.abs_diff(xj) + yi.abs_diff(yj)
    }

    /// Largest Manhattan distance between any two sites.
    pub fn max_manhattan(&self) -> usize {
        (self.nx - 1) + (self.ny - 1)
    }

    /// Sublattice bit per site, or a domain error when the bond graph is not
    /// bipartite.
    pub fn parity(&self) -> Result<&[u8]> {
        self.parity
            .as_deref()
            .ok_or_else(|| Error::Domain("bond graph is not bipartite".into()))
    }

    pub fn is_bipartite(&self) -> bool {
        self.parity.is_some()
    }

    /// Sites whose x coordinate is below `ncols`.
    pub fn left_columns(&self, ncols: usize) -> Vec<usize> {
        (0..self.nsites())
            .filter(|&i| self.coords(i).0 < ncols)
            .collect()
    }

    /// Left half used for entanglement cuts: the first `⌈nx/2⌉` columns.
    pub fn default_cut(&self) -> Vec<usize> {
        self.left_columns(self.nx.div_ceil(2))
    }

    /// Site index after mirroring `x → nx−1−x`.
    pub fn mirror_x(&self, i: usize) -> usize {
        let (x, y) = self.coords(i);
        self.site(self.nx - 1 - x, y)
    }
}

fn two_colouring(n: usize, bonds: &[(usize, usize)]) -> Option<Vec<u8>> {
    let mut nbrs = vec![Vec::new(); n];
    for &(a, b) in bonds {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut colour: Vec<Option<u8>> = vec![None; n];
    for start in 0..n {
        if colour[start].is_some() {
            continue;
        }
        colour[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let c = colour[v].unwrap();
            for &w in &nbrs[v] {
                match colour[w] {
                    None => {
                        colour[w] = Some(1 - c);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == c => return None,
                    _ => {}
                }
            }
        }
    }
    colour.into_iter().collect()
}
