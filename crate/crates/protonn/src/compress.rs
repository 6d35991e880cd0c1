//! Voronoi neighbor relations over prototype sets and the prototype-removal
//! compressions built on them.
//!
//! Two prototypes are neighbors when their Voronoi cells share a point whose
//! two nearest prototypes they are. The exact relation is decided per pair by
//! maximizing the clearance of a witness on the bisector hyperplane with a
//! small linear program; the approximate relation reads second-nearest
//! neighbors off training samples; the Monte-Carlo relation does the same
//! with points sampled from a region and serves as an oracle for the exact
//! one.
//!
//! Compression removes every prototype whose neighbors all share its label,
//! either simultaneously from a fixed graph (lossless almost everywhere in
//! Euclidean space) or iteratively with the graph recomputed after each
//! removal (pointwise lossless for the exact relation in any metric space).

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist_sq, two_nearest_sq, Point};
use crate::rules::PrototypeRule;
use crate::simplex;
use crate::util::sample_ball;

/// Adjacency decision threshold on the witness clearance, in units of the
/// squared configuration diameter.
const ADJ_TOL: f64 = 1e-9;
/// Cap on the clearance variable; any clearance above `ADJ_TOL` already
/// decides adjacency, the cap only keeps the LP bounded.
const CLEARANCE_CAP: f64 = 4.0;
const MAX_LP_ITERS: usize = 50_000;
const MAX_CUT_ROUNDS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Exact,
    Approximate,
    Oracle,
}

/// Per-prototype neighbor sets. Exact graphs in Euclidean space are
/// symmetric; approximate ones may not be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborGraph {
    kind: GraphKind,
    adjacency: Vec<Vec<usize>>,
}

impl NeighborGraph {
    pub fn new(kind: GraphKind, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let n = adjacency.len();
        let mut adjacency = adjacency;
        for (i, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            nbrs.dedup();
            if nbrs.iter().any(|&q| q == i || q >= n) {
                return Err(Error::invalid(format!(
                    "vertex {i} has a self-loop or out-of-range neighbor"
                )));
            }
        }
        Ok(NeighborGraph { kind, adjacency })
    }

    fn from_sets(kind: GraphKind, sets: Vec<BTreeSet<usize>>) -> Self {
        NeighborGraph {
            kind,
            adjacency: sets
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn directed_edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// True iff every neighbor set here is contained in the other graph's.
    pub fn is_subgraph_of(&self, other: &NeighborGraph) -> bool {
        self.n() == other.n()
            && self
                .adjacency
                .iter()
                .zip(&other.adjacency)
                .all(|(a, b)| a.iter().all(|q| b.binary_search(q).is_ok()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: NeighborGraph = serde_json::from_str(s)?;
        NeighborGraph::new(g.kind, g.adjacency)
    }
}

/// Uniform sampling regions for the Monte-Carlo neighbor oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegionSampler {
    AxisBox { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl RegionSampler {
    /// Axis-aligned bounding box of the points, padded by `pad` on every side.
    pub fn bounding_box(points: &[Point], pad: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let d = points[0].dim();
        let mut lo = points[0].coords().to_vec();
        let mut hi = lo.clone();
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            for (k, &c) in p.coords().iter().enumerate() {
                lo[k] = lo[k].min(c);
                hi[k] = hi[k].max(c);
            }
        }
        for k in 0..d {
            lo[k] -= pad;
            hi[k] += pad;
        }
        Ok(RegionSampler::AxisBox { lo, hi })
    }

    pub fn unit_ball(d: usize) -> Self {
        RegionSampler::Ball {
            center: vec![0.0; d],
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            RegionSampler::AxisBox { lo, .. } => lo.len(),
            RegionSampler::Ball { center, .. } => center.len(),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            RegionSampler::AxisBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&a, &b)| {
                    let u: f64 = rand::Rng::gen(rng);
                    a + u * (b - a)
                })
                .collect(),
            RegionSampler::Ball { center, radius } => sample_ball(rng, center, *radius),
        }
    }
}

/// Prototypes translated to their centroid and scaled by the inverse
/// configuration diameter. Errors on exact duplicates.
fn normalize_config(prototypes: &[Point]) -> Result<Vec<Vec<f64>>> {
    let m = prototypes.len();
    let d = prototypes[0].dim();
    let mut diam_sq = 0.0f64;
    for i in 0..m {
        if prototypes[i].dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: prototypes[i].dim(),
            });
        }
        for j in i + 1..m {
            let dsq = dist_sq(prototypes[i].coords(), prototypes[j].coords());
            if dsq == 0.0 {
                return Err(Error::DuplicatePrototypes { i, j });
            }
            diam_sq = diam_sq.max(dsq);
        }
    }
    let scale = 1.0 / diam_sq.sqrt();
    let mut centroid = vec![0.0; d];
    for p in prototypes {
        for (c, &x) in centroid.iter_mut().zip(p.coords()) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= m as f64;
    }
    Ok(prototypes
        .iter()
        .map(|p| {
            p.coords()
                .iter()
                .zip(&centroid)
                .map(|(&x, &c)| (x - c) * scale)
                .collect()
        })
        .collect())
}

/// Orthonormal basis of the hyperplane orthogonal to `a`, as `d-1` columns of
/// the Householder reflection taking `a` to an axis.
fn hyperplane_basis(a: &[f64]) -> Vec<Vec<f64>> {
    let d = a.len();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v: Vec<f64> = a.iter().map(|x| x / norm).collect();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    (1..d)
        .map(|k| {
            let scale = 2.0 * v[k] / vv;
            let mut col: Vec<f64> = v.iter().map(|&x| -scale * x).collect();
            col[k] += 1.0;
            col
        })
        .collect()
}

struct CutConstraint {
    /// Clearance of this competitor at the bisector anchor point.
    offset: f64,
    /// Gradient of the clearance along the in-hyperplane coordinates.
    grad: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Decides whether the Voronoi cells of prototypes `i` and `j` share a face:
/// maximizes the clearance of a witness point on their bisector over all
/// other prototypes, adding competitor constraints lazily.
fn pair_adjacent(pts: &[Vec<f64>], i: usize, j: usize) -> Result<bool> {
    let d = pts[0].len();
    let xi = &pts[i];
    let xj = &pts[j];
    let a: Vec<f64> = xj.iter().zip(xi).map(|(p, q)| p - q).collect();
    let anchor: Vec<f64> = xi.iter().zip(xj).map(|(p, q)| 0.5 * (p + q)).collect();
    let basis = hyperplane_basis(&a);
    let w_dim = d - 1;

    let mut cons: Vec<CutConstraint> = Vec::with_capacity(pts.len().saturating_sub(2));
    for (l, xl) in pts.iter().enumerate() {
        if l == i || l == j {
            continue;
        }
        let offset = dist_sq(xl, &anchor) - dist_sq(xi, &anchor);
        let diff: Vec<f64> = xl.iter().zip(xi).map(|(p, q)| p - q).collect();
        let grad: Vec<f64> = basis.iter().map(|col| 2.0 * dot(col, &diff)).collect();
        cons.push(CutConstraint { offset, grad });
    }
    if cons.is_empty() {
        // Two prototypes: each is the other's sole neighbor.
        return Ok(true);
    }

    // Most binding at the anchor first.
    let mut order: Vec<usize> = (0..cons.len()).collect();
    order.sort_unstable_by(|&x, &y| cons[x].offset.total_cmp(&cons[y].offset));

    let mut in_active = vec![false; cons.len()];
    let mut active: Vec<usize> = Vec::new();
    for &c in order.iter().take((2 * d + 6).min(cons.len())) {
        active.push(c);
        in_active[c] = true;
    }

    for _ in 0..MAX_CUT_ROUNDS {
        let (clearance, w) = solve_witness_lp(&cons, &active, w_dim)
            .map_err(|_| Error::LpFailure { i, j })?;
        if clearance <= ADJ_TOL {
            // More constraints only lower the optimum further.
            return Ok(false);
        }
        let mut true_clearance = clearance;
        let mut violated: Vec<(f64, usize)> = Vec::new();
        for (c, con) in cons.iter().enumerate() {
            if in_active[c] {
                continue;
            }
            let slack = con.offset - dot(&con.grad, &w);
            true_clearance = true_clearance.min(slack);
            if slack < clearance - 1e-12 {
                violated.push((slack, c));
            }
        }
        if true_clearance > ADJ_TOL {
            return Ok(true);
        }
        if violated.is_empty() {
            return Ok(false);
        }
        violated.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
        for &(_, c) in violated.iter().take(2 * d) {
            active.push(c);
            in_active[c] = true;
        }
    }
    Err(Error::LpFailure { i, j })
}

/// LP for the active constraint set: maximize the clearance `eps` subject to
/// `grad.w + eps <= offset` and `eps <= CLEARANCE_CAP`, with `w` free. The
/// clearance variable is shifted so every right-hand side is positive and the
/// slack basis is feasible.
fn solve_witness_lp(
    cons: &[CutConstraint],
    active: &[usize],
    w_dim: usize,
) -> std::result::Result<(f64, Vec<f64>), simplex::LpError> {
    if w_dim == 0 {
        let clearance = active
            .iter()
            .map(|&c| cons[c].offset)
            .fold(CLEARANCE_CAP, f64::min);
        return Ok((clearance, Vec::new()));
    }
    let min_offset = active
        .iter()
        .map(|&c| cons[c].offset)
        .fold(f64::INFINITY, f64::min);
    let shift = (-min_offset).max(0.0) + 1.0;
    let n_vars = 2 * w_dim + 1;
    let mut rows = Vec::with_capacity(active.len() + 1);
    let mut rhs = Vec::with_capacity(active.len() + 1);
    for &c in active {
        let con = &cons[c];
        let mut row = vec![0.0; n_vars];
        for k in 0..w_dim {
            row[k] = con.grad[k];
            row[w_dim + k] = -con.grad[k];
        }
        row[2 * w_dim] = 1.0;
        rows.push(row);
        rhs.push(con.offset + shift);
    }
    let mut cap_row = vec![0.0; n_vars];
    cap_row[2 * w_dim] = 1.0;
    rows.push(cap_row);
    rhs.push(CLEARANCE_CAP + shift);
    let mut objective = vec![0.0; n_vars];
    objective[2 * w_dim] = 1.0;
    let (value, z) = simplex::maximize(&objective, &rows, &rhs, MAX_LP_ITERS)?;
    let w: Vec<f64> = (0..w_dim).map(|k| z[k] - z[w_dim + k]).collect();
    Ok((value - shift, w))
}

fn check_prototype_set(prototypes: &[Point]) -> Result<()> {
    if prototypes.len() < 2 {
        return Err(Error::invalid(
            "neighbor relation needs at least 2 prototypes",
        ));
    }
    Ok(())
}

/// Exact Voronoi adjacency: `(i, j)` are neighbors iff their bisector
/// hyperplane contains a point strictly closer to them than to every other
/// prototype. Symmetric by construction.
pub fn neighbors_exact(prototypes: &[Point]) -> Result<NeighborGraph> {
    check_prototype_set(prototypes)?;
    let pts = normalize_config(prototypes)?;
    let m = pts.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let flags: Result<Vec<bool>> = pairs
        .par_iter()
        .map(|&(i, j)| pair_adjacent(&pts, i, j))
        .collect();
    let flags = flags?;
    let mut sets = vec![BTreeSet::new(); m];
    for (&(i, j), &adj) in pairs.iter().zip(&flags) {
        if adj {
            sets[i].insert(j);
            sets[j].insert(i);
        }
    }
    Ok(NeighborGraph::from_sets(GraphKind::Exact, sets))
}

/// Monte-Carlo realization of the neighbor relation: prototype `q` is
/// recorded as a neighbor of `p` whenever a sampled point has first-nearest
/// `p` and second-nearest `q`. Samples whose two nearest distances tie to the
/// bit are discarded. Always a subgraph of the exact relation.
pub fn neighbors_montecarlo(
    prototypes: &[Point],
    sampler: &RegionSampler,
    n_samples: usize,
    seed: u64,
) -> Result<NeighborGraph> {
    let m = prototypes.len();
    if m >= 1 && sampler.dim() != prototypes[0].dim() {
        return Err(Error::DimensionMismatch {
            expected: prototypes[0].dim(),
            got: sampler.dim(),
        });
    }
    let mut sets = vec![BTreeSet::new(); m];
    if m >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_samples {
            let x = sampler.sample(&mut rng);
            let ((i1, d1), (i2, d2)) = two_nearest_sq(&x, prototypes);
            if d1 == d2 {
                continue;
            }
            sets[i1].insert(i2);
        }
    }
    Ok(NeighborGraph::from_sets(GraphKind::Oracle, sets))
}

/// Sample-approximated neighbor relation: `q` is a neighbor of `p` iff some
/// training point whose nearest prototype is `p` has second-nearest `q`.
/// May be asymmetric.
pub fn neighbors_approx(prototypes: &[Point], train_points: &[Point]) -> Result<NeighborGraph> {
    let m = prototypes.len();
    let mut sets = vec![BTreeSet::new(); m];
    if m >= 2 {
        for x in train_points {
            if x.dim() != prototypes[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: prototypes[0].dim(),
                    got: x.dim(),
                });
            }
            let ((i1, _), (i2, _)) = two_nearest_sq(x.coords(), prototypes);
            sets[i1].insert(i2);
        }
    }
    Ok(NeighborGraph::from_sets(GraphKind::Approximate, sets))
}

/// Removes, in one shot, every prototype whose neighbors in `graph` all share
/// its label. When all labels agree (or only one prototype exists) the rule
/// collapses to its first prototype. If the removal would empty the set (a
/// possibility for approximate graphs with sparse adjacency) the first
/// prototype is kept, mirroring the degenerate branch.
pub fn compress_simultaneous(
    rule: &PrototypeRule,
    graph: &NeighborGraph,
) -> Result<PrototypeRule> {
    rule.validate()?;
    if graph.n() != rule.len() {
        return Err(Error::GraphSizeMismatch {
            graph: graph.n(),
            rule: rule.len(),
        });
    }
    let labels = &rule.labels;
    if rule.len() == 1 || labels.iter().all(|&l| l == labels[0]) {
        return Ok(rule.take(&[0]));
    }
    let keep: Vec<usize> = (0..rule.len())
        .filter(|&l| {
            graph
                .neighbors(l)
                .iter()
                .any(|&q| labels[q] != labels[l])
        })
        .collect();
    if keep.is_empty() {
        return Ok(rule.take(&[0]));
    }
    Ok(rule.take(&keep))
}

/// Iterative removal: walks the prototypes in index order, removing one
/// whenever all its neighbors in the graph over the *current* set share its
/// label, and recomputing the graph after each removal. Stops as soon as a
/// single prototype remains. With the exact neighbor relation the resulting
/// classifier is pointwise identical to the original.
pub fn compress_iterative<F>(rule: &PrototypeRule, mut neighbor_fn: F) -> Result<PrototypeRule>
where
    F: FnMut(&[Point]) -> Result<NeighborGraph>,
{
    rule.validate()?;
    let mut kept: Vec<usize> = (0..rule.len()).collect();
    let mut points: Vec<Point> = rule.prototypes.clone();
    if kept.len() == 1 {
        return Ok(rule.take(&kept));
    }
    let mut graph = neighbor_fn(&points)?;
    let mut pos = 0usize;
    while pos < kept.len() {
        if kept.len() == 1 {
            break;
        }
        if graph.n() != points.len() {
            return Err(Error::GraphSizeMismatch {
                graph: graph.n(),
                rule: points.len(),
            });
        }
        let label = rule.labels[kept[pos]];
        let removable = graph
            .neighbors(pos)
            .iter()
            .all(|&q| rule.labels[kept[q]] == label);
        if removable {
            kept.remove(pos);
            points.remove(pos);
            if kept.len() > 1 {
                graph = neighbor_fn(&points)?;
            }
        } else {
            pos += 1;
        }
    }
    Ok(rule.take(&kept))
}

/// Iterative removal against the exact neighbor relation, maintained
/// incrementally: deleting a prototype can only create new adjacencies among
/// its former neighbors, so only those pairs are retested against the
/// surviving set. Output-identical to `compress_iterative` with a fresh
/// `neighbors_exact` per removal (see the equivalence test).
pub fn compress_iterative_exact(rule: &PrototypeRule) -> Result<PrototypeRule> {
    rule.validate()?;
    let m = rule.len();
    if m == 1 {
        return Ok(rule.clone());
    }
    let full = neighbors_exact(&rule.prototypes)?;
    let mut adj: Vec<BTreeSet<usize>> = (0..m)
        .map(|i| full.neighbors(i).iter().copied().collect())
        .collect();
    let mut alive = vec![true; m];
    let mut alive_count = m;

    for v in 0..m {
        if alive_count == 1 {
            break;
        }
        let label = rule.labels[v];
        if !adj[v].iter().all(|&q| rule.labels[q] == label) {
            continue;
        }
        let cavity: Vec<usize> = adj[v].iter().copied().collect();
        alive[v] = false;
        alive_count -= 1;
        for &u in &cavity {
            adj[u].remove(&v);
        }
        adj[v].clear();
        if alive_count < 2 || cavity.len() < 2 {
            continue;
        }
        let survivors: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
        let local_points: Vec<Point> = survivors
            .iter()
            .map(|&i| rule.prototypes[i].clone())
            .collect();
        let pts = normalize_config(&local_points)?;
        let local_of = |orig: usize| survivors.binary_search(&orig).unwrap();
        for (a_pos, &u) in cavity.iter().enumerate() {
            for &w in &cavity[a_pos + 1..] {
                if adj[u].contains(&w) {
                    continue;
                }
                if pair_adjacent(&pts, local_of(u), local_of(w))? {
                    adj[u].insert(w);
                    adj[w].insert(u);
                }
            }
        }
    }
    let kept: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
    Ok(rule.take(&kept))
}

/// Outcome of comparing two rules on a query set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub rate: f64,
    pub agreed: usize,
    pub compared: usize,
    /// Queries within the bisector margin of either rule, skipped.
    pub excluded: usize,
}

fn near_bisector(rule: &PrototypeRule, query: &[f64], margin: f64) -> bool {
    if rule.len() < 2 {
        return false;
    }
    let ((i1, d1), (i2, d2)) = two_nearest_sq(query, &rule.prototypes);
    let sep = dist_sq(
        rule.prototypes[i1].coords(),
        rule.prototypes[i2].coords(),
    )
    .sqrt();
    // Distance from the query to the bisector of its two nearest prototypes.
    (d2 - d1) / (2.0 * sep) < margin
}

/// Fraction of queries (outside the margin-excluded set of either rule) on
/// which the two rules agree.
pub fn agreement_rate(
    rule_a: &PrototypeRule,
    rule_b: &PrototypeRule,
    queries: &[Point],
    bisector_margin: f64,
) -> Result<Agreement> {
    if rule_a.d != rule_b.d {
        return Err(Error::DimensionMismatch {
            expected: rule_a.d,
            got: rule_b.d,
        });
    }
    let mut agreed = 0usize;
    let mut compared = 0usize;
    let mut excluded = 0usize;
    for q in queries {
        if near_bisector(rule_a, q.coords(), bisector_margin)
            || near_bisector(rule_b, q.coords(), bisector_margin)
        {
            excluded += 1;
            continue;
        }
        compared += 1;
        if rule_a.classify(q)? == rule_b.classify(q)? {
            agreed += 1;
        }
    }
    let rate = if compared == 0 {
        1.0
    } else {
        agreed as f64 / compared as f64
    };
    Ok(Agreement {
        rate,
        agreed,
        compared,
        excluded,
    })
}
