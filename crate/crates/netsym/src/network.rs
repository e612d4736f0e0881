//! Networks as collections of input maps, their semigroup closure, the
//! left-multiplication maps and the fundamental network, the associated
//! monoid representation, and enumeration of abstract monoids.
//!
//! Cells are 0-indexed internally; the JSON file formats and all reports
//! use 1-indexed cells.

use crate::error::{NetsymError, Result};
use crate::rat::RatMat;
use serde::{Deserialize, Serialize};

/// A self-map of the cell set `{0, .., n_cells-1}`, stored as its image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellMap {
    image: Vec<usize>,
}

impl CellMap {
    pub fn new(image: Vec<usize>, n_cells: usize) -> Result<Self> {
        if image.len() != n_cells {
            return Err(NetsymError::InvalidSpec(format!(
                "map has {} entries, expected {}",
                image.len(),
                n_cells
            )));
        }
        if let Some(&bad) = image.iter().find(|&&v| v >= n_cells) {
            return Err(NetsymError::InvalidSpec(format!(
                "map entry {} out of range 1..={}",
                bad + 1,
                n_cells
            )));
        }
        Ok(CellMap { image })
    }

    /// Parse from the 1-indexed external form.
    pub fn from_one_indexed(image: &[usize], n_cells: usize) -> Result<Self> {
        if let Some(&bad) = image.iter().find(|&&v| v == 0 || v > n_cells) {
            return Err(NetsymError::InvalidSpec(format!(
                "map entry {bad} out of range 1..={n_cells}"
            )));
        }
        CellMap::new(image.iter().map(|&v| v - 1).collect(), n_cells)
    }

    pub fn identity(n_cells: usize) -> Self {
        CellMap {
            image: (0..n_cells).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &CellMap) -> CellMap {
        CellMap {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        }
    }

    /// Image list in the 1-indexed external form.
    pub fn to_one_indexed(&self) -> Vec<usize> {
        self.image.iter().map(|&v| v + 1).collect()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }
}

/// A homogeneous network: `N` cells and an ordered list of distinct input maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    num_cells: usize,
    maps: Vec<CellMap>,
}

/// JSON form of a network spec (1-indexed).
#[derive(Debug, Serialize, Deserialize)]
pub struct NetworkSpecFile {
    pub cells: usize,
    pub maps: Vec<Vec<usize>>,
}

impl NetworkSpec {
    pub fn new(num_cells: usize, maps: Vec<CellMap>) -> Result<Self> {
        if num_cells == 0 {
            return Err(NetsymError::InvalidSpec("network needs at least one cell".into()));
        }
        if maps.is_empty() {
            return Err(NetsymError::InvalidSpec("network needs at least one map".into()));
        }
        for m in &maps {
            if m.len() != num_cells {
                return Err(NetsymError::InvalidSpec(format!(
                    "map length {} does not match cell count {}",
                    m.len(),
                    num_cells
                )));
            }
        }
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                if maps[i] == maps[j] {
                    return Err(NetsymError::InvalidSpec(format!(
                        "maps {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(NetworkSpec { num_cells, maps })
    }

    pub fn from_file_repr(file: &NetworkSpecFile) -> Result<Self> {
        let maps = file
            .maps
            .iter()
            .map(|m| CellMap::from_one_indexed(m, file.cells))
            .collect::<Result<Vec<_>>>()?;
        NetworkSpec::new(file.cells, maps)
    }

    pub fn to_file_repr(&self) -> NetworkSpecFile {
        NetworkSpecFile {
            cells: self.num_cells,
            maps: self.maps.iter().map(|m| m.to_one_indexed()).collect(),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[CellMap] {
        &self.maps
    }

    pub fn map(&self, j: usize) -> &CellMap {
        &self.maps[j]
    }

    fn index_of(&self, m: &CellMap) -> Option<usize> {
        self.maps.iter().position(|x| x == m)
    }

    /// True when the map collection is closed under composition.
    pub fn is_closed(&self) -> bool {
        self.maps.iter().all(|a| {
            self.maps
                .iter()
                .all(|b| self.index_of(&a.compose(b)).is_some())
        })
    }

    /// Index of a two-sided unit in the composition table, if present.
    /// With distinct maps, a table unit is necessarily the identity map.
    pub fn unit_index(&self) -> Option<usize> {
        self.maps.iter().position(|m| m.is_identity())
    }

    /// Closed with a unit.
    pub fn is_monoid(&self) -> bool {
        self.unit_index().is_some() && self.is_closed()
    }
}

/// A closed composition table: `table[j][k]` is the index of `σ_j ∘ σ_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonoidTable {
    size: usize,
    table: Vec<Vec<usize>>,
    unit_index: Option<usize>,
}

impl MonoidTable {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 || table.iter().any(|r| r.len() != n) {
            return Err(NetsymError::InvalidSpec("table must be square and nonempty".into()));
        }
        if table.iter().flatten().any(|&v| v >= n) {
            return Err(NetsymError::InvalidSpec("table entry out of range".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(NetsymError::InvalidSpec(format!(
                            "associativity fails at ({}, {}, {})",
                            a + 1,
                            b + 1,
                            c + 1
                        )));
                    }
                }
            }
        }
        Ok(Self::new_unchecked(table))
    }

    /// For tables obtained by composing actual maps, where associativity
    /// holds by construction and the O(n³) check would dominate.
    fn new_unchecked(table: Vec<Vec<usize>>) -> MonoidTable {
        let n = table.len();
        let unit_index =
            (0..n).find(|&e| (0..n).all(|k| table[e][k] == k && table[k][e] == k));
        MonoidTable {
            size: n,
            table,
            unit_index,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn compose(&self, j: usize, k: usize) -> usize {
        self.table[j][k]
    }

    pub fn unit_index(&self) -> Option<usize> {
        self.unit_index
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.table
    }

    fn flattened(&self) -> Vec<usize> {
        self.table.iter().flatten().copied().collect()
    }

    /// Relabel elements by `perm`: new index of old element `i` is `perm[i]`.
    fn relabel(&self, perm: &[usize]) -> MonoidTable {
        let n = self.size;
        let mut inv = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let mut t = vec![vec![0; n]; n];
        for (a, row) in t.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell = perm[self.table[inv[a]][inv[b]]];
            }
        }
        MonoidTable {
            size: n,
            table: t,
            unit_index: self.unit_index.map(|u| perm[u]),
        }
    }

    /// Lexicographically minimal relabeling among all permutations that put
    /// the unit at index 0.
    pub fn canonical_form(&self) -> MonoidTable {
        let n = self.size;
        let unit = self.unit_index.unwrap_or(0);
        let mut best: Option<MonoidTable> = None;
        let others: Vec<usize> = (0..n).filter(|&i| i != unit).collect();
        for perm_rest in permutations(others.len()) {
            let mut perm = vec![0; n];
            perm[unit] = 0;
            for (slot, &p) in perm_rest.iter().enumerate() {
                perm[others[p]] = slot + 1;
            }
            let cand = self.relabel(&perm);
            if best.as_ref().map_or(true, |b| cand.flattened() < b.flattened()) {
                best = Some(cand);
            }
        }
        best.unwrap()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// The smallest semigroup containing `spec`, together with its table.
///
/// Original maps come first in their original order; newly generated maps
/// follow in BFS first-discovery order (row-major sweeps over the growing
/// list of products).
pub fn semigroup_closure(spec: &NetworkSpec) -> Result<(NetworkSpec, MonoidTable)> {
    let mut maps = spec.maps().to_vec();
    let mut seen: std::collections::HashSet<CellMap> = maps.iter().cloned().collect();
    let mut frontier_start = 0;
    loop {
        let len = maps.len();
        let mut discovered = Vec::new();
        for j in 0..len {
            for k in 0..len {
                if j < frontier_start && k < frontier_start {
                    continue; // already swept
                }
                let prod = maps[j].compose(&maps[k]);
                if seen.insert(prod.clone()) {
                    discovered.push(prod);
                }
            }
        }
        if discovered.is_empty() {
            break;
        }
        frontier_start = len;
        maps.extend(discovered);
    }
    let closed = NetworkSpec::new(spec.num_cells(), maps)?;
    let table = table_of(&closed)?;
    Ok((closed, table))
}

/// Composition table of an already-closed spec.
pub fn table_of(spec: &NetworkSpec) -> Result<MonoidTable> {
    let n = spec.num_maps();
    let index: std::collections::HashMap<&CellMap, usize> =
        spec.maps().iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut table = vec![vec![0; n]; n];
    for j in 0..n {
        for k in 0..n {
            let prod = spec.map(j).compose(spec.map(k));
            table[j][k] = index.get(&prod).copied().ok_or_else(|| {
                NetsymError::InvalidSpec(format!(
                    "spec not closed: σ_{} ∘ σ_{} missing",
                    j + 1,
                    k + 1
                ))
            })?;
        }
    }
    Ok(MonoidTable::new_unchecked(table))
}

/// Adjoin the identity map when the closure has no unit, then close.
/// A spec that is already a monoid is returned unchanged.
pub fn monoid_completion(spec: &NetworkSpec) -> Result<NetworkSpec> {
    if spec.is_monoid() {
        return Ok(spec.clone());
    }
    let (closed, _) = semigroup_closure(spec)?;
    if closed.unit_index().is_some() {
        return Ok(closed);
    }
    let mut maps = vec![CellMap::identity(spec.num_cells())];
    maps.extend(closed.maps().iter().cloned());
    let with_unit = NetworkSpec::new(spec.num_cells(), maps)?;
    let (closed, _) = semigroup_closure(&with_unit)?;
    Ok(closed)
}

/// The left-multiplication maps σ̃_j on `{0, .., n-1}`: σ̃_j(k) = table[j][k].
pub fn left_action_maps(table: &MonoidTable) -> Vec<CellMap> {
    table
        .rows()
        .iter()
        .map(|row| CellMap {
            image: row.clone(),
        })
        .collect()
}

/// A monoid spec together with its left-multiplication maps.
#[derive(Debug, Clone)]
pub struct FundamentalNetwork {
    base: NetworkSpec,
    table: MonoidTable,
    tilde_maps: Vec<CellMap>,
}

impl FundamentalNetwork {
    pub fn base(&self) -> &NetworkSpec {
        &self.base
    }

    pub fn table(&self) -> &MonoidTable {
        &self.table
    }

    pub fn tilde_maps(&self) -> &[CellMap] {
        &self.tilde_maps
    }

    /// Number of cells of the fundamental network (= monoid order).
    pub fn num_cells(&self) -> usize {
        self.tilde_maps.len()
    }

    pub fn unit_index(&self) -> usize {
        self.table.unit_index().expect("monoid has a unit")
    }

    /// The network spec on `n` cells whose maps are the tilde maps.
    pub fn as_spec(&self) -> Result<NetworkSpec> {
        NetworkSpec::new(self.num_cells(), self.tilde_maps.clone())
    }

    /// 1-indexed argument lists of the equations `Ẋ_j = f(X_{σ̃_1(j)}, …)`.
    pub fn equations(&self) -> Vec<Vec<usize>> {
        let n = self.num_cells();
        (0..n)
            .map(|j| (0..n).map(|k| self.tilde_maps[k].apply(j) + 1).collect())
            .collect()
    }
}

/// Build the fundamental network of a monoid spec.
pub fn fundamental_network(spec: &NetworkSpec) -> Result<FundamentalNetwork> {
    if !spec.is_closed() {
        return Err(NetsymError::NotAMonoid("spec is not closed under composition".into()));
    }
    let table = table_of(spec)?;
    if table.unit_index().is_none() {
        return Err(NetsymError::NotAMonoid("composition table has no unit".into()));
    }
    let tilde_maps = left_action_maps(&table);
    Ok(FundamentalNetwork {
        base: spec.clone(),
        table,
        tilde_maps,
    })
}

/// Build a fundamental network directly from an abstract monoid table.
pub fn fundamental_from_table(table: &MonoidTable) -> Result<FundamentalNetwork> {
    if table.unit_index().is_none() {
        return Err(NetsymError::NotAMonoid("table has no unit".into()));
    }
    let tilde_maps = left_action_maps(table);
    let base = NetworkSpec::new(table.size(), tilde_maps.clone())?;
    Ok(FundamentalNetwork {
        base,
        table: table.clone(),
        tilde_maps,
    })
}

/// The monoid representation on `V^n` with `dim V = d`.
#[derive(Debug, Clone)]
pub struct Representation {
    dim_v: usize,
    matrices: Vec<RatMat>,
}

impl Representation {
    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    pub fn matrices(&self) -> &[RatMat] {
        &self.matrices
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrices[0].rows()
    }
}

/// Matrices A_{σ_j} with `(A_{σ_j} X)_k = X_{σ̃_k(j)}`, inflated blockwise
/// when `d > 1`.
pub fn rep_matrices(fund: &FundamentalNetwork, d: usize) -> Representation {
    let n = fund.num_cells();
    let mut matrices = Vec::with_capacity(n);
    for j in 0..n {
        let mut a = RatMat::zeros(n * d, n * d);
        for k in 0..n {
            let src = fund.tilde_maps[k].apply(j);
            for b in 0..d {
                a.set_one(k * d + b, src * d + b);
            }
        }
        matrices.push(a);
    }
    Representation { dim_v: d, matrices }
}

/// The conjugating maps π_i : V^N → V^n, `π_i(x)_k = x_{σ_k(i)}`, for d = 1.
pub fn conjugation_maps(spec: &NetworkSpec) -> Result<Vec<RatMat>> {
    if !spec.is_closed() {
        return Err(NetsymError::NotAMonoid("spec is not closed under composition".into()));
    }
    let n = spec.num_maps();
    let cells = spec.num_cells();
    Ok((0..cells)
        .map(|i| {
            let mut p = RatMat::zeros(n, cells);
            for k in 0..n {
                p.set_one(k, spec.map(k).apply(i));
            }
            p
        })
        .collect())
}

/// Default bound for `enumerate_monoids`.
pub const DEFAULT_ENUMERATION_BOUND: usize = 5;

/// All monoids with `n` elements up to isomorphism, in canonical form,
/// sorted by flattened table.
pub fn enumerate_monoids(n: usize, bound: usize) -> Result<Vec<MonoidTable>> {
    if n == 0 || n > bound {
        return Err(NetsymError::BoundExceeded {
            requested: n,
            bound,
        });
    }
    // Unit fixed at index 0; backtracking over the remaining (n-1)^2 cells
    // with incremental associativity checks.
    let mut table = vec![vec![0usize; n]; n];
    for k in 0..n {
        table[0][k] = k;
        table[k][0] = k;
    }
    let free: Vec<(usize, usize)> = (1..n)
        .flat_map(|a| (1..n).map(move |b| (a, b)))
        .collect();
    let mut found = Vec::new();
    fill(&mut table, &free, 0, n, &mut found);
    let mut canon: Vec<MonoidTable> = Vec::new();
    for t in found {
        let c = t.canonical_form();
        if !canon.contains(&c) {
            canon.push(c);
        }
    }
    canon.sort_by_key(|t| t.flattened());
    Ok(canon)
}

fn fill(
    table: &mut Vec<Vec<usize>>,
    free: &[(usize, usize)],
    idx: usize,
    n: usize,
    found: &mut Vec<MonoidTable>,
) {
    if idx == free.len() {
        if let Ok(t) = MonoidTable::new(table.clone()) {
            found.push(t);
        }
        return;
    }
    let (a, b) = free[idx];
    for v in 0..n {
        table[a][b] = v;
        if assoc_consistent(table, free, idx, n) {
            fill(table, free, idx + 1, n, found);
        }
    }
    table[a][b] = 0;
}

// Check all associativity triples whose cells are all filled, restricted to
// triples involving the cell just set. Cells are filled in `free` order
// (row-major over the non-unit block), plus the unit row/column.
fn assoc_consistent(table: &[Vec<usize>], free: &[(usize, usize)], idx: usize, n: usize) -> bool {
    let filled = |a: usize, b: usize| -> bool {
        if a == 0 || b == 0 {
            return true;
        }
        free[..=idx].contains(&(a, b))
    };
    let (x, y) = free[idx];
    for c in 0..n {
        // (x∘y)∘c = x∘(y∘c)
        if filled(table[x][y], c) && filled(y, c) && filled(x, table[y][c]) {
            if table[table[x][y]][c] != table[x][table[y][c]] {
                return false;
            }
        }
        // (c∘x)∘y = c∘(x∘y)
        if filled(c, x) && filled(table[c][x], y) && filled(c, table[x][y]) {
            if table[table[c][x]][y] != table[c][table[x][y]] {
                return false;
            }
        }
        // (x∘c)∘y = x∘(c∘y) -- both factors may hit the fresh cell
        if filled(x, c) && filled(table[x][c], y) && filled(c, y) && filled(x, table[c][y]) {
            if table[table[x][c]][y] != table[x][table[c][y]] {
                return false;
            }
        }
    }
    true
}

/// Decide isomorphism of two monoid tables; a witness maps indices of `a`
/// to indices of `b`.
pub fn monoid_isomorphic(a: &MonoidTable, b: &MonoidTable) -> Option<Vec<usize>> {
    if a.size() != b.size() {
        return None;
    }
    let n = a.size();
    let (ua, ub) = match (a.unit_index(), b.unit_index()) {
        (Some(x), Some(y)) => (x, y),
        _ => return None,
    };
    let others_a: Vec<usize> = (0..n).filter(|&i| i != ua).collect();
    let others_b: Vec<usize> = (0..n).filter(|&i| i != ub).collect();
    for p in permutations(n - 1) {
        let mut phi = vec![0; n];
        phi[ua] = ub;
        for (i, &pi) in p.iter().enumerate() {
            phi[others_a[i]] = others_b[pi];
        }
        let ok = (0..n).all(|x| (0..n).all(|y| phi[a.compose(x, y)] == b.compose(phi[x], phi[y])));
        if ok {
            return Some(phi);
        }
    }
    None
}

/// The running example network: σ1=[123], σ2=[121], σ3=[111] on 3 cells.
pub fn running_example() -> NetworkSpec {
    NetworkSpec::from_file_repr(&NetworkSpecFile {
        cells: 3,
        maps: vec![vec![1, 2, 3], vec![1, 2, 1], vec![1, 1, 1]],
    })
    .unwrap()
}

/// The paper's catalogue tables for the seven 3-cell monoids (1-indexed names
/// Σ1..Σ7) and the two 2-cell monoids.
pub fn catalogue_table(cells: usize, which: usize) -> Option<MonoidTable> {
    let t = match (cells, which) {
        (2, 1) => vec![vec![0, 1], vec![1, 0]],
        (2, 2) => vec![vec![0, 1], vec![1, 1]],
        (3, 1) => vec![vec![0, 1, 2], vec![1, 1, 1], vec![2, 1, 1]],
        (3, 2) => vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 1]],
        (3, 3) => vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]],
        (3, 4) => vec![vec![0, 1, 2], vec![1, 1, 1], vec![2, 2, 2]],
        (3, 5) => vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 1, 2]],
        (3, 6) => vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
        (3, 7) => vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 2]],
        _ => return None,
    };
    Some(MonoidTable::new(t).expect("catalogue tables are associative"))
}
