//! Families of graph operators `(D̃^ε Ã D̃^ε)^k`, classic presets, and the
//! hop-masked sparse variants.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{adjacency, degree_matrix, Graph};
use crate::linalg::{conjugate_by_permutation, is_permutation, DenseSymMatrix};

/// Sentinel hop distance for pairs further apart than the BFS horizon.
pub const UNREACHABLE: usize = usize::MAX;

/// One `(ε, k)` member tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, usize)", into = "(f64, usize)")]
pub struct FamilyEntry {
    pub eps: f64,
    pub k: usize,
}

impl FamilyEntry {
    pub fn new(eps: f64, k: usize) -> Self {
        Self { eps, k }
    }
}

impl From<(f64, usize)> for FamilyEntry {
    fn from((eps, k): (f64, usize)) -> Self {
        Self { eps, k }
    }
}

impl From<FamilyEntry> for (f64, usize) {
    fn from(e: FamilyEntry) -> Self {
        (e.eps, e.k)
    }
}

impl fmt::Display for FamilyEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.eps, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sparsity {
    #[default]
    Dense,
    /// Zero every entry whose endpoints are more than `h` hops apart.
    HopMasked(usize),
}

impl fmt::Display for Sparsity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sparsity::Dense => f.write_str("dense"),
            Sparsity::HopMasked(h) => write!(f, "hop_masked({h})"),
        }
    }
}

impl FromStr for Sparsity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "dense" {
            return Ok(Sparsity::Dense);
        }
        let h = s
            .strip_prefix("hop_masked(")
            .and_then(|rest| rest.strip_suffix(')'))
            .and_then(|h| h.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidSpec(format!("unknown sparsity {s:?}")))?;
        if h == 0 {
            return Err(Error::InvalidSpec("hop mask radius must be positive".into()));
        }
        Ok(Sparsity::HopMasked(h))
    }
}

impl Serialize for Sparsity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Sparsity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawFamilySpec {
    entries: Vec<FamilyEntry>,
    #[serde(default)]
    sparsity: Sparsity,
}

/// Ordered, validated list of `(ε, k)` tags plus a sparsity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamilySpec", into = "RawFamilySpec")]
pub struct FamilySpec {
    entries: Vec<FamilyEntry>,
    sparsity: Sparsity,
}

impl TryFrom<RawFamilySpec> for FamilySpec {
    type Error = Error;

    fn try_from(raw: RawFamilySpec) -> Result<Self> {
        Self::new(raw.entries, raw.sparsity)
    }
}

impl From<FamilySpec> for RawFamilySpec {
    fn from(s: FamilySpec) -> Self {
        RawFamilySpec {
            entries: s.entries,
            sparsity: s.sparsity,
        }
    }
}

impl FamilySpec {
    pub fn new(entries: Vec<FamilyEntry>, sparsity: Sparsity) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSpec("family needs at least one entry".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            check_eps(e.eps)?;
            if entries[..i].iter().any(|p| p.eps == e.eps && p.k == e.k) {
                return Err(Error::InvalidSpec(format!("duplicate entry {e}")));
            }
        }
        if sparsity == Sparsity::HopMasked(0) {
            return Err(Error::InvalidSpec("hop mask radius must be positive".into()));
        }
        Ok(Self { entries, sparsity })
    }

    pub fn dense(pairs: &[(f64, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&p| p.into()).collect(), Sparsity::Dense)
    }

    /// The fixed-decomposition family `{(D̃^-1/2 Ã D̃^-1/2)^k}` for the given powers.
    pub fn lap(ks: &[usize], sparsity: Sparsity) -> Result<Self> {
        Self::new(ks.iter().map(|&k| FamilyEntry::new(-0.5, k)).collect(), sparsity)
    }

    pub fn entries(&self) -> &[FamilyEntry] {
        &self.entries
    }

    pub fn sparsity(&self) -> Sparsity {
        self.sparsity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_sparsity(mut self, sparsity: Sparsity) -> Self {
        self.sparsity = sparsity;
        self
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(-0.5..=0.0).contains(&eps) {
        return Err(Error::InvalidSpec(format!("epsilon {eps} outside [-0.5, 0]")));
    }
    Ok(())
}

/// Operators stacked along the family axis, in spec order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamily {
    n: usize,
    members: Vec<(FamilyEntry, DenseSymMatrix)>,
    /// Row-major `n × n` support; `None` means every position.
    support: Option<Vec<bool>>,
}

impl MatrixFamily {
    pub fn from_members(
        members: Vec<(FamilyEntry, DenseSymMatrix)>,
        support: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = members
            .first()
            .map(|(_, m)| m.n())
            .ok_or_else(|| Error::InvalidSpec("empty family".into()))?;
        for (_, m) in &members {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    context: "family member size",
                    expected: n,
                    actual: m.n(),
                });
            }
        }
        if let Some(s) = &support {
            if s.len() != n * n {
                return Err(Error::DimensionMismatch {
                    context: "family support mask",
                    expected: n * n,
                    actual: s.len(),
                });
            }
        }
        Ok(Self {
            n,
            members,
            support,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[(FamilyEntry, DenseSymMatrix)] {
        &self.members
    }

    pub fn matrix(&self, i: usize) -> &DenseSymMatrix {
        &self.members[i].1
    }

    pub fn in_support(&self, u: usize, v: usize) -> bool {
        self.support.as_ref().is_none_or(|s| s[u * self.n + v])
    }

    /// Upper-triangle positions `(u, v)`, `u <= v`, inside the support.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in u..self.n {
                if self.in_support(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Conjugates every member (and the support) by the permutation `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n || !is_permutation(perm) {
            return Err(Error::InvalidSpec(format!("not a permutation of 0..{}", self.n)));
        }
        let members = self
            .members
            .iter()
            .map(|(t, m)| (*t, m.conjugate(perm)))
            .collect();
        let support = self.support.as_ref().map(|s| {
            let mut out = vec![false; s.len()];
            for u in 0..self.n {
                for v in 0..self.n {
                    out[perm[u] * self.n + perm[v]] = s[u * self.n + v];
                }
            }
            out
        });
        Ok(Self {
            n: self.n,
            members,
            support,
        })
    }
}

/// `D̃^ε Ã D̃^ε` with `Ã = A + I` and `D̃ = D + I`.
pub fn build_base(g: &Graph, eps: f64) -> Result<DenseSymMatrix> {
    check_eps(eps)?;
    let a = adjacency(g);
    let d_tilde = degree_matrix(&a, true);
    let scale: Vec<f64> = d_tilde.iter().map(|&d| (eps * d.ln()).exp()).collect();
    let mut m = a.into_inner();
    let n = m.nrows();
    for u in 0..n {
        m[[u, u]] += 1.0;
        for v in 0..n {
            m[[u, v]] *= scale[u] * scale[v];
        }
    }
    Ok(DenseSymMatrix::new(m).expect("scaled symmetric matrix stays symmetric"))
}

/// Unweighted BFS hop counts capped at `h_max`; further pairs get [`UNREACHABLE`].
pub fn hop_distances(g: &Graph, h_max: usize) -> Array2<usize> {
    let n = g.n();
    let adj = g.neighbors();
    let mut dist = Array2::from_elem((n, n), UNREACHABLE);
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist[[s, s]] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = dist[[s, u]];
            if du == h_max {
                continue;
            }
            for &w in &adj[u] {
                if dist[[s, w]] == UNREACHABLE {
                    dist[[s, w]] = du + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    dist
}

/// Builds every member of `spec` by repeated multiplication of its base
/// matrix, then applies the hop mask (if any) to the powered result.
pub fn build_family(g: &Graph, spec: &FamilySpec) -> Result<MatrixFamily> {
    let n = g.n();
    let mut bases: HashMap<u64, DenseSymMatrix> = HashMap::new();
    let mut powers: HashMap<(u64, usize), Array2<f64>> = HashMap::new();
    let support = match spec.sparsity() {
        Sparsity::Dense => None,
        Sparsity::HopMasked(h) => Some(hop_distances(g, h).iter().map(|&d| d <= h).collect::<Vec<_>>()),
    };

    let mut members = Vec::with_capacity(spec.len());
    for entry in spec.entries() {
        let key = entry.eps.to_bits();
        if let std::collections::hash_map::Entry::Vacant(slot) = bases.entry(key) {
            slot.insert(build_base(g, entry.eps)?);
        }
        let base = &bases[&key];
        // highest cached power not above k
        let (mut j, mut acc) = (0..=entry.k)
            .rev()
            .find_map(|j| powers.get(&(key, j)).map(|m| (j, m.clone())))
            .unwrap_or_else(|| (0, Array2::eye(n)));
        while j < entry.k {
            let next = acc.dot(base.values());
            acc = (&next + &next.t()) * 0.5;
            j += 1;
            powers.insert((key, j), acc.clone());
        }
        if let Some(mask) = &support {
            for (x, &keep) in acc.iter_mut().zip(mask) {
                if !keep {
                    *x = 0.0;
                }
            }
        }
        members.push((*entry, DenseSymMatrix::new(acc)?));
    }
    MatrixFamily::from_members(members, support)
}

/// Permuting the graph conjugates each member; exposed for equivariance tests.
pub fn conjugate_family(fam: &MatrixFamily, perm: &[usize]) -> Vec<Array2<f64>> {
    fam.members()
        .iter()
        .map(|(_, m)| conjugate_by_permutation(m.values(), perm))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `L = D - A`.
    Laplacian,
    /// `I - D̃^-1/2 Ã D̃^-1/2`.
    NormLaplacianSelfloop,
    /// `D̃^-1/2 Ã D̃^-1/2`.
    SymNormAdj,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(Preset::Laplacian),
            "norm_laplacian_selfloop" => Ok(Preset::NormLaplacianSelfloop),
            "sym_norm_adj" => Ok(Preset::SymNormAdj),
            other => Err(Error::Unknown {
                what: "operator preset",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Laplacian => "laplacian",
            Preset::NormLaplacianSelfloop => "norm_laplacian_selfloop",
            Preset::SymNormAdj => "sym_norm_adj",
        })
    }
}

pub fn preset_operator(g: &Graph, which: Preset) -> DenseSymMatrix {
    match which {
        Preset::Laplacian => {
            let a = adjacency(g);
            let d = degree_matrix(&a, false);
            let l = Array2::from_diag(&d) - a.values();
            DenseSymMatrix::new(l).expect("laplacian is symmetric")
        }
        Preset::NormLaplacianSelfloop => {
            let s = build_base(g, -0.5).expect("-0.5 is in range");
            let l = Array2::eye(g.n()) - s.values();
            DenseSymMatrix::new(l).expect("normalized laplacian is symmetric")
        }
        Preset::SymNormAdj => build_base(g, -0.5).expect("-0.5 is in range"),
    }
}
