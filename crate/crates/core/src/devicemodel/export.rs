//! Classification of effective monomials into extended Bose-Hubbard terms.

use std::collections::BTreeMap;

use super::device::{qudit_distance, BareDevice, Node};
use super::sw::{EffectiveOperator, Monomial};
use crate::error::{domain, Result};
use crate::units::mhz;

/// Extended Bose-Hubbard term families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    /// `−J(a†ᵢaⱼ + h.c.)`, nearest neighbours.
    J,
    /// `−μᵢnᵢ`.
    Mu,
    /// `(U/2)nᵢ(nᵢ−1)`.
    U,
    /// `V nᵢnⱼ`, nearest neighbours.
    V,
    /// `K nᵢ(nᵢ−1)nⱼ`.
    K,
    /// `(W/6)nᵢ(nᵢ−1)(nᵢ−2)`.
    W,
    /// `−X a†ᵢ(nᵢ + nⱼ)aⱼ`.
    X,
    /// `−V′ a†ᵢnᵢnⱼaⱼ`.
    VPrime,
    /// `−W′ a†ᵢ[nᵢ(nᵢ−1) + nⱼ(nⱼ−1)]aⱼ`.
    WPrime,
    /// `−J⁽²⁾ a†ᵢaⱼ`, next-nearest neighbours.
    J2,
    /// `−X⁽²⁾ a†ᵢ(nᵢ + nⱼ)aⱼ`, next-nearest neighbours.
    X2,
    /// `−T nᵢ(a†ⱼa_k + h.c.)` with `i` between `j` and `k`.
    T,
    /// Everything else, including the constant.
    Residual,
}

impl Category {
    pub const ALL: [Category; 13] = [
        Category::J,
        Category::Mu,
        Category::U,
        Category::V,
        Category::K,
        Category::W,
        Category::X,
        Category::VPrime,
        Category::WPrime,
        Category::J2,
        Category::X2,
        Category::T,
        Category::Residual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::J => "J",
            Category::Mu => "mu",
            Category::U => "U",
            Category::V => "V",
            Category::K => "K",
            Category::W => "W",
            Category::X => "X",
            Category::VPrime => "Vprime",
            Category::WPrime => "Wprime",
            Category::J2 => "J2",
            Category::X2 => "X2",
            Category::T => "T",
            Category::Residual => "residual",
        }
    }
}

/// Relative placement of the sites a term connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Geometry {
    Onsite,
    Nearest,
    /// Next-nearest along a diagonal.
    Diagonal,
    /// Next-nearest along a row or column.
    InLine,
    Other,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Onsite => "onsite",
            Geometry::Nearest => "nearest",
            Geometry::Diagonal => "diagonal",
            Geometry::InLine => "inline",
            Geometry::Other => "other",
        }
    }
}

/// One exported coefficient in its template normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportedTerm {
    pub category: Category,
    pub geometry: Geometry,
    pub monomial: Monomial,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExportOptions {
    /// Terms with smaller magnitude go to the residual when set.
    pub floor: Option<f64>,
    /// Terms spanning a larger qudit Manhattan distance go to the residual.
    pub max_distance: usize,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            floor: Some(mhz(0.05)),
            max_distance: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTermReport {
    pub terms: Vec<ExportedTerm>,
    pub stats: BTreeMap<Category, CategoryStats>,
    /// `(k, max change from k−1)` when produced from a cluster expansion.
    pub convergence: Vec<(usize, f64)>,
    pub hermiticity_error: f64,
    pub floor: Option<f64>,
}

impl EffectiveTermReport {
    pub fn of(&self, c: Category) -> impl Iterator<Item = &ExportedTerm> {
        self.terms.iter().filter(move |t| t.category == c)
    }

    /// Categories with at least one non-residual entry.
    pub fn populated(&self) -> Vec<Category> {
        self.stats.keys().copied().filter(|&c| c != Category::Residual).collect()
    }
}

fn counts(list: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &s in list {
        *m.entry(s).or_insert(0) += 1;
    }
    m
}

/// Category, geometry and template factor `value = factor · coefficient`.
fn classify(m: &Monomial, qudits: &[&Node]) -> (Category, Geometry, f64) {
    let dist = |a: usize, b: usize| qudit_distance(qudits[a], qudits[b]);
    let c = counts(&m.create);
    let d = counts(&m.annihilate);
    let residual = (Category::Residual, Geometry::Other, 1.0);
    if m.is_diagonal() {
        let sites: Vec<(usize, usize)> = c.into_iter().collect();
        return match sites.as_slice() {
            [] => residual,
            [(_, 1)] => (Category::Mu, Geometry::Onsite, -1.0),
            [(_, 2)] => (Category::U, Geometry::Onsite, 2.0),
            [(_, 3)] => (Category::W, Geometry::Onsite, 6.0),
            [(i, 1), (j, 1)] if dist(*i, *j) == 1 => (Category::V, Geometry::Nearest, 1.0),
            [(i, a), (j, b)] if dist(*i, *j) == 1 && (*a, *b) != (1, 1) && a + b == 3 => {
                (Category::K, Geometry::Nearest, 1.0)
            }
            _ => residual,
        };
    }
    // One boson moved from `k` to `j`, everything else a spectator density.
    let sites: std::collections::BTreeSet<usize> = c.keys().chain(d.keys()).copied().collect();
    let mut dest = Vec::new();
    let mut src = Vec::new();
    let mut spect = BTreeMap::new();
    for &s in &sites {
        let (ci, di) = (*c.get(&s).unwrap_or(&0), *d.get(&s).unwrap_or(&0));
        match ci as i64 - di as i64 {
            1 => dest.push(s),
            -1 => src.push(s),
            0 => {}
            _ => return residual,
        }
        if ci.min(di) > 0 {
            spect.insert(s, ci.min(di));
        }
    }
    let ([j], [k]) = (dest.as_slice(), src.as_slice()) else {
        return residual;
    };
    let (j, k) = (*j, *k);
    let on_ends = |n: usize| spect.len() == 1 && (spect.get(&j) == Some(&n) || spect.get(&k) == Some(&n));
    match dist(j, k) {
        1 => {
            if spect.is_empty() {
                (Category::J, Geometry::Nearest, -1.0)
            } else if on_ends(1) {
                (Category::X, Geometry::Nearest, -1.0)
            } else if spect.len() == 2 && spect.get(&j) == Some(&1) && spect.get(&k) == Some(&1) {
                (Category::VPrime, Geometry::Nearest, -1.0)
            } else if on_ends(2) {
                (Category::WPrime, Geometry::Nearest, -1.0)
            } else {
                residual
            }
        }
        2 => {
            let (a, b) = (qudits[j].pos, qudits[k].pos);
            let geom = if (a.0 - b.0).abs() > 0.5 && (a.1 - b.1).abs() > 0.5 {
                Geometry::Diagonal
            } else {
                Geometry::InLine
            };
            if spect.is_empty() {
                (Category::J2, geom, -1.0)
            } else if on_ends(1) {
                (Category::X2, geom, -1.0)
            } else if spect.len() == 1 {
                let (&i, &n) = spect.iter().next().expect("one spectator");
                if n == 1 && dist(i, j) == 1 && dist(i, k) == 1 {
                    (Category::T, geom, -1.0)
                } else {
                    residual
                }
            } else {
                residual
            }
        }
        _ => residual,
    }
}

/// Sort the aggregated operator into extended Bose-Hubbard families. Each
/// Hermitian pair of off-diagonal monomials is exported once, in the
/// orientation whose creation list sorts first.
pub fn export_extended_bh(
    op: &EffectiveOperator,
    device: &BareDevice,
    convergence: Vec<(usize, f64)>,
    opts: &ExportOptions,
) -> Result<EffectiveTermReport> {
    let qnodes: Vec<&Node> = device.qudits().into_iter().map(|i| &device.nodes[i]).collect();
    let mut terms = Vec::new();
    for (m, &coef) in &op.terms {
        if m.support().iter().any(|&s| s >= qnodes.len()) {
            return domain(format!("monomial {m:?} names a qudit outside the device"));
        }
        if !m.is_diagonal() && m.adjoint() < *m {
            continue;
        }
        let support = m.support();
        let span = support
            .iter()
            .flat_map(|&a| support.iter().map(move |&b| (a, b)))
            .map(|(a, b)| qudit_distance(qnodes[a], qnodes[b]))
            .max()
            .unwrap_or(0);
        let (mut category, geometry, factor) = classify(m, &qnodes);
        let below = opts.floor.is_some_and(|f| coef.abs() < f);
        if span > opts.max_distance || (below && category != Category::Residual) {
            category = Category::Residual;
        }
        let value = if category == Category::Residual { coef } else { factor * coef };
        terms.push(ExportedTerm {
            category,
            geometry,
            monomial: m.clone(),
            value,
        });
    }
    let mut stats = BTreeMap::new();
    for cat in Category::ALL {
        let vals: Vec<f64> = terms.iter().filter(|t| t.category == cat).map(|t| t.value).collect();
        if vals.is_empty() {
            continue;
        }
        stats.insert(
            cat,
            CategoryStats {
                count: vals.len(),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
        );
    }
    Ok(EffectiveTermReport {
        terms,
        stats,
        convergence,
        hermiticity_error: op.hermiticity_error(),
        floor: opts.floor,
    })
}
