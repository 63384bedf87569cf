//! Bare transmon lattice: qudits and couplers with capacitive couplings.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{domain, Result};

/// Role of a node in the bare circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Qudit,
    Coupler,
}

/// One transmon. Frequencies are angular (rad/ns).
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub omega: f64,
    pub eta: f64,
    /// Highest kept excitation number.
    pub levels: u8,
    /// Position in qudit-lattice units; couplers sit between their qudits.
    pub pos: (f64, f64),
}

impl Node {
    pub fn qudit(omega: f64, eta: f64, pos: (f64, f64)) -> Self {
        Node {
            kind: NodeKind::Qudit,
            omega,
            eta,
            levels: 4,
            pos,
        }
    }

    pub fn coupler(omega: f64, eta: f64, pos: (f64, f64)) -> Self {
        Node {
            kind: NodeKind::Coupler,
            omega,
            eta,
            levels: 3,
            pos,
        }
    }
}

/// Capacitive coupling efficiency `k` between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub k: f64,
}

/// Nodes, couplings and the total-excitation cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct BareDevice {
    pub nodes: Vec<Node>,
    pub couplings: Vec<Coupling>,
    pub max_total: u8,
}

/// Parameters shared by the generated chain and grid devices.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDeviceParams {
    /// Per-qudit frequencies in row-major order.
    pub omega_q: Vec<f64>,
    pub eta_q: f64,
    pub omega_c: f64,
    pub eta_c: f64,
    /// Qudit-coupler efficiency.
    pub k_qc: f64,
    /// Nearest-neighbour qudit-qudit efficiency.
    pub k_qq: f64,
    /// Next-nearest-neighbour qudit-qudit efficiency.
    pub k_qq2: f64,
    /// Coupler-coupler efficiency for couplers sharing a qudit.
    pub k_cc: f64,
}

impl BareDevice {
    pub fn new(nodes: Vec<Node>, couplings: Vec<Coupling>) -> Result<Self> {
        let d = BareDevice {
            nodes,
            couplings,
            max_total: 7,
        };
        d.validate()?;
        Ok(d)
    }

    /// Two qudits joined directly and through one coupler. The direct
    /// efficiency is loaded with `k₁k₂` so that the coupler-mediated and
    /// direct contributions combine as in [`coupling_g`].
    #[allow(clippy::too_many_arguments)]
    pub fn dimer(omega1: f64, omega2: f64, omega_c: f64, eta_q: f64, eta_c: f64, kd: f64, k1: f64, k2: f64) -> Result<Self> {
        BareDevice::new(
            vec![
                Node::qudit(omega1, eta_q, (0.0, 0.0)),
                Node::qudit(omega2, eta_q, (1.0, 0.0)),
                Node::coupler(omega_c, eta_c, (0.5, 0.0)),
            ],
            vec![
                Coupling { a: 0, b: 2, k: k1 },
                Coupling { a: 1, b: 2, k: k2 },
                Coupling { a: 0, b: 1, k: kd + k1 * k2 },
            ],
        )
    }

    /// `nx × ny` qudits with one coupler per nearest-neighbour bond. Nodes
    /// are numbered qudits first (row-major), then couplers in bond order.
    pub fn grid(nx: usize, ny: usize, p: &LatticeDeviceParams) -> Result<Self> {
        if nx == 0 || ny == 0 || p.omega_q.len() != nx * ny {
            return domain("grid device needs nx·ny qudit frequencies");
        }
        let q = |x: usize, y: usize| y * nx + x;
        let mut nodes: Vec<Node> = (0..nx * ny)
            .map(|i| Node::qudit(p.omega_q[i], p.eta_q, ((i % nx) as f64, (i / nx) as f64)))
            .collect();
        let mut bonds = Vec::new();
        for y in 0..ny {
            for x in 0..nx {
                if x + 1 < nx {
                    bonds.push((q(x, y), q(x + 1, y)));
                }
                if y + 1 < ny {
                    bonds.push((q(x, y), q(x, y + 1)));
                }
            }
        }
        let mut couplings = Vec::new();
        let mut coupler_of = Vec::new();
        for &(a, b) in &bonds {
            let c = nodes.len();
            let (pa, pb) = (nodes[a].pos, nodes[b].pos);
            nodes.push(Node::coupler(p.omega_c, p.eta_c, ((pa.0 + pb.0) / 2.0, (pa.1 + pb.1) / 2.0)));
            coupler_of.push((a, b, c));
            couplings.push(Coupling { a, b: c, k: p.k_qc });
            couplings.push(Coupling { a: b, b: c, k: p.k_qc });
            if p.k_qq != 0.0 {
                couplings.push(Coupling { a, b, k: p.k_qq });
            }
        }
        if p.k_qq2 != 0.0 {
            for a in 0..nx * ny {
                for b in a + 1..nx * ny {
                    if qudit_distance(&nodes[a], &nodes[b]) == 2 {
                        couplings.push(Coupling { a, b, k: p.k_qq2 });
                    }
                }
            }
        }
        if p.k_cc != 0.0 {
            for (s, &(a1, b1, c1)) in coupler_of.iter().enumerate() {
                for &(a2, b2, c2) in &coupler_of[s + 1..] {
                    if a1 == a2 || a1 == b2 || b1 == a2 || b1 == b2 {
                        couplings.push(Coupling { a: c1, b: c2, k: p.k_cc });
                    }
                }
            }
        }
        BareDevice::new(nodes, couplings)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.omega > 0.0 && node.omega.is_finite()) {
                return domain(format!("node {i} has non-positive frequency {}", node.omega));
            }
            if !node.eta.is_finite() || node.levels == 0 {
                return domain(format!("node {i} has invalid anharmonicity or truncation"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.couplings {
            if c.a >= n || c.b >= n || c.a == c.b {
                return domain(format!("invalid coupling ({}, {})", c.a, c.b));
            }
            if !seen.insert((c.a.min(c.b), c.a.max(c.b))) {
                return domain(format!("coupling ({}, {}) listed twice", c.a, c.b));
            }
            if !c.k.is_finite() {
                return domain("non-finite coupling efficiency");
            }
        }
        Ok(())
    }

    /// Qudit-coupler pairs whose detuning is under ten times their coupling.
    pub fn weak_detuning_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.couplings {
            let (a, b) = (&self.nodes[c.a], &self.nodes[c.b]);
            if a.kind != b.kind {
                let g = c.k * (a.omega * b.omega).sqrt();
                let delta = (a.omega - b.omega).abs();
                if delta < 10.0 * g.abs() {
                    out.push(format!(
                        "nodes {} and {}: detuning {delta:.4} is within 10× coupling {g:.4}",
                        c.a, c.b
                    ));
                }
            }
        }
        out
    }

    pub fn nnodes(&self) -> usize {
        self.nodes.len()
    }

    /// Node indices of the qudits, in order; position in this list is the
    /// qudit index used by effective operators.
    pub fn qudits(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind == NodeKind::Qudit)
            .collect()
    }

    /// Undirected edges of nonzero couplings.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.couplings
            .iter()
            .filter(|c| c.k != 0.0)
            .map(|c| (c.a.min(c.b), c.a.max(c.b)))
            .collect()
    }

    /// The device restricted to `keep` (node order preserved).
    pub fn subdevice(&self, keep: &[usize]) -> BareDevice {
        let map: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        BareDevice {
            nodes: keep.iter().map(|&i| self.nodes[i].clone()).collect(),
            couplings: self
                .couplings
                .iter()
                .filter_map(|c| match (map.get(&c.a), map.get(&c.b)) {
                    (Some(&a), Some(&b)) => Some(Coupling { a, b, k: c.k }),
                    _ => None,
                })
                .collect(),
            max_total: self.max_total,
        }
    }
}

/// Manhattan distance between two nodes in qudit-lattice units.
pub fn qudit_distance(a: &Node, b: &Node) -> usize {
    ((a.pos.0 - b.pos.0).abs() + (a.pos.1 - b.pos.1).abs()).round() as usize
}

/// Leading-order qudit-qudit exchange through a coupler plus direct coupling.
pub fn coupling_g(omega1: f64, omega2: f64, omega_c: f64, kd: f64, k1: f64, k2: f64) -> f64 {
    let wq = (omega1 + omega2) / 2.0;
    (kd - k1 * k2 * wq * wq / (omega_c * omega_c - wq * wq)) * (omega1 * omega2).sqrt() / 2.0
}

/// Coupler frequency at which [`coupling_g`] vanishes.
pub fn coupler_idle_frequency(omega_q: f64, kd: f64, k1: f64, k2: f64) -> Result<f64> {
    if kd <= 0.0 || k1 * k2 < 0.0 {
        return domain("idle point needs kd > 0 and k1·k2 ≥ 0");
    }
    Ok(omega_q * (1.0 + k1 * k2 / kd).sqrt())
}

/// Product states with per-node caps and a total-excitation cap.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    pub levels: Vec<u8>,
    pub max_total: u8,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl ProductBasis {
    pub fn new(levels: &[u8], max_total: u8) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u8; levels.len()];
        fn rec(k: usize, left: u8, levels: &[u8], cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if k == levels.len() {
                out.push(cur.clone());
                return;
            }
            for n in 0..=levels[k].min(left) {
                cur[k] = n;
                rec(k + 1, left - n, levels, cur, out);
            }
            cur[k] = 0;
        }
        rec(0, max_total, levels, &mut cur, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        ProductBasis {
            levels: levels.to_vec(),
            max_total,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn index(&self, s: &[u8]) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// Dense bare Hamiltonian with the full `(a + a†)(a + a†)` couplings, each
/// coupled pair counted once.
pub fn bare_hamiltonian(device: &BareDevice) -> (ProductBasis, DMatrix<f64>) {
    let levels: Vec<u8> = device.nodes.iter().map(|n| n.levels).collect();
    let basis = ProductBasis::new(&levels, device.max_total);
    let dim = basis.dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (i, s) in basis.states().iter().enumerate() {
        h[(i, i)] = device
            .nodes
            .iter()
            .zip(s)
            .map(|(node, &n)| {
                let n = n as f64;
                node.omega * n + node.eta / 2.0 * n * (n - 1.0)
            })
            .sum();
        for c in &device.couplings {
            let amp = c.k / 2.0 * (device.nodes[c.a].omega * device.nodes[c.b].omega).sqrt();
            for da in [-1i32, 1] {
                for db in [-1i32, 1] {
                    let na = s[c.a] as i32 + da;
                    let nb = s[c.b] as i32 + db;
                    if na < 0 || nb < 0 {
                        continue;
                    }
                    let mut t = s.clone();
                    t[c.a] = na as u8;
                    t[c.b] = nb as u8;
                    if t[c.a] > levels[c.a] || t[c.b] > levels[c.b] {
                        continue;
                    }
                    if let Some(j) = basis.index(&t) {
                        let fa = (s[c.a].max(t[c.a]) as f64).sqrt();
                        let fb = (s[c.b].max(t[c.b]) as f64).sqrt();
                        h[(j, i)] += amp * fa * fb;
                    }
                }
            }
        }
    }
    (basis, h)
}
