//! Balanced gluing parameters, stratum codimension, and locally constant
//! delay functions for the bimultiplihedron.

use std::collections::{BTreeMap, HashMap};

use num::rational::BigRational;
use num::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::trees::{Family, Flat, Kind, Leaf, Node, Slot, Sub, Tree};

/// One balanced relation: the signed edge path between two vertices of the
/// same color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub color: u8,
    pub pair: (usize, usize),
    /// Exponent per finite edge, indexed like [`GluingCone::edges`].
    pub row: Vec<i64>,
}

/// The cone Z_Γ of balanced gluing parameters, as its relation matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingCone {
    /// Finite edges, each named by its lower vertex in preorder.
    pub edges: Vec<usize>,
    pub relations: Vec<Relation>,
}

impl GluingCone {
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.relations.iter().map(|r| r.row.clone()).collect()
    }
}

pub fn balanced_relations(t: &Tree) -> GluingCone {
    let f = t.flat();
    let edges: Vec<usize> = f.edges().collect();
    let mut relations = Vec::new();
    for color in [1u8, 2] {
        let vs: Vec<usize> = (0..f.vertex_count()).filter(|&v| f.kinds[v].colors().contains(&color)).collect();
        for (i, &u) in vs.iter().enumerate() {
            for &v in &vs[i + 1..] {
                let mut row = vec![0; edges.len()];
                for (e, s) in f.path(u, v) {
                    row[e - 1] = s;
                }
                relations.push(Relation { color, pair: (u, v), row });
            }
        }
    }
    GluingCone { edges, relations }
}

pub fn relation_rank(t: &Tree) -> usize {
    linalg::rank_int(&balanced_relations(t).matrix())
}

/// Codimension of the stratum: free gluing parameters left after the
/// balanced relations, plus one when the two seams coincide (the ratio of
/// radii sits at its boundary value 0).
pub fn stratum_codim(t: &Tree) -> usize {
    let f = t.flat();
    let edges = f.vertex_count() - 1;
    edges - spanning_rank(&f) + usize::from(t.is_fused())
}

/// Rank of the balanced relations using only the rows from one fixed vertex
/// of each color, which span the same lattice as all pairs.
fn spanning_rank(f: &Flat) -> usize {
    let n = f.vertex_count() - 1;
    let mut rows = Vec::new();
    for color in [1u8, 2] {
        let vs: Vec<usize> = (0..f.vertex_count()).filter(|&v| f.kinds[v].colors().contains(&color)).collect();
        for &v in vs.iter().skip(1) {
            let mut row = vec![0; n];
            for (e, s) in f.path(vs[0], v) {
                row[e - 1] = s;
            }
            rows.push(row);
        }
    }
    linalg::rank_int(&rows)
}

/// Dimension of the open stratum inside its polytope.
pub fn stratum_dim(t: &Tree) -> usize {
    t.family.top_dim(t.d, t.e) - stratum_codim(t)
}

// Delay functions

/// Outermost colored vertices v_1..v_k (colored vertices with no colored
/// ancestor) and the core Γ_0 spanned by them and the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Core {
    pub outer: Vec<usize>,
    /// Vertices of Γ_0 in preorder; the root comes first.
    pub vertices: Vec<usize>,
    pub shape: CoreShape,
}

/// Shape of Γ_0 with everything off the core deleted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoreShape {
    Outer,
    Inner(Vec<CoreShape>),
}

impl Core {
    pub fn of(t: &Tree) -> Core {
        let f = t.flat();
        let n = f.vertex_count();
        let mut outer = Vec::new();
        let mut in_core = vec![false; n];
        in_core[0] = true;
        for v in 0..n {
            if f.kinds[v].is_colored() && f.ancestors(v).iter().all(|&a| a == v || !f.kinds[a].is_colored()) {
                outer.push(v);
                let mut u = Some(v);
                while let Some(w) = u {
                    in_core[w] = true;
                    u = f.parent[w];
                }
            }
        }
        let vertices = (0..n).filter(|&v| in_core[v]).collect();
        let shape = shape_at(&f, 0, &in_core);
        Core { outer, vertices, shape }
    }

    pub fn edges(&self) -> &[usize] {
        &self.vertices[1..]
    }

    pub fn k(&self) -> usize {
        self.outer.len()
    }
}

fn shape_at(f: &Flat, v: usize, in_core: &[bool]) -> CoreShape {
    if f.kinds[v].is_colored() {
        return CoreShape::Outer;
    }
    let kids = core_children(f, v, in_core).into_iter().map(|c| shape_at(f, c, in_core)).collect();
    CoreShape::Inner(kids)
}

fn core_children(f: &Flat, v: usize, in_core: &[bool]) -> Vec<usize> {
    if f.kinds[v].is_colored() {
        return Vec::new();
    }
    f.slots[v]
        .iter()
        .filter_map(|s| match s {
            Slot::Vertex(c) if in_core[*c] => Some(*c),
            _ => None,
        })
        .collect()
}

/// Types carrying nontrivial delays: biquilted components present and the
/// seams not fused.
pub fn has_finite_ratio(t: &Tree) -> bool {
    t.family == Family::Bicolored && t.has_merged() && !t.is_fused()
}

/// Locally constant delays for one type, stored multiplicatively:
/// `lambda[e] = exp(τ_e)` on core edges. Absent edges carry 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayAssignment {
    pub tree: Tree,
    pub lambda: BTreeMap<usize, BigRational>,
}

impl DelayAssignment {
    pub fn trivial(tree: Tree) -> Self {
        DelayAssignment { tree, lambda: BTreeMap::new() }
    }

    pub fn get(&self, edge: usize) -> BigRational {
        self.lambda.get(&edge).cloned().unwrap_or_else(BigRational::one)
    }
}

/// Delay assignments for every bicolored type with at most `d` markings.
#[derive(Clone, Debug)]
pub struct DelayFamily {
    pub d: usize,
    pub types: Vec<DelayAssignment>,
    index: HashMap<Tree, usize>,
}

impl DelayFamily {
    pub fn new(d: usize, types: Vec<DelayAssignment>) -> Self {
        let index = types.iter().enumerate().map(|(i, a)| (a.tree.clone(), i)).collect();
        DelayFamily { d, types, index }
    }

    /// The all-ones family over every type with at most `d` markings.
    pub fn trivial(d: usize) -> Self {
        let types = (1..=d)
            .flat_map(|n| crate::trees::enumerate(Family::Bicolored, n, 0).expect("bicolored enumeration"))
            .map(DelayAssignment::trivial)
            .collect();
        DelayFamily::new(d, types)
    }

    pub fn get(&self, t: &Tree) -> Option<&DelayAssignment> {
        self.index.get(t).map(|&i| &self.types[i])
    }

    pub fn get_mut(&mut self, t: &Tree) -> Option<&mut DelayAssignment> {
        self.index.get(t).map(|&i| &mut self.types[i])
    }

    pub fn to_json(&self) -> DelayJson {
        let mut entries = Vec::new();
        for (tree_id, a) in self.types.iter().enumerate() {
            for (&edge, l) in &a.lambda {
                entries.push(DelayEntry { tree_id, edge, lambda: l.to_string() });
            }
        }
        DelayJson { d: self.d, types: self.types.iter().map(|a| a.tree.to_expression()).collect(), entries }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayEntry {
    pub tree_id: usize,
    pub edge: usize,
    pub lambda: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayJson {
    pub d: usize,
    pub types: Vec<String>,
    pub entries: Vec<DelayEntry>,
}

/// Builds delays for every type with at most `d` markings. A core vertex
/// `v` whose subtree contains the outer vertices numbered `lo..=hi` gets the
/// potential `2^(lo+hi)`, and each core edge carries the ratio of the
/// potentials at its ends.
pub fn construct_delays(d: usize) -> DelayFamily {
    let types = (1..=d)
        .flat_map(|n| crate::trees::enumerate(Family::Bicolored, n, 0).expect("bicolored enumeration"))
        .map(|t| {
            let mut a = DelayAssignment::trivial(t.clone());
            if has_finite_ratio(&t) {
                let f = t.flat();
                let core = Core::of(&t);
                let span = outer_spans(&f, &core);
                for &e in core.edges() {
                    let p = f.parent[e].expect("core edge has a parent");
                    let exp = (span[&e].0 + span[&e].1) as i64 - (span[&p].0 + span[&p].1) as i64;
                    let two = BigRational::from_integer(2.into());
                    let l = if exp >= 0 { num::pow(two, exp as usize) } else { num::pow(two, (-exp) as usize).recip() };
                    a.lambda.insert(e, l);
                }
            }
            a
        })
        .collect();
    DelayFamily::new(d, types)
}

/// For each core vertex, the first and last index (1-based, planar order)
/// of the outer vertices at or above it.
fn outer_spans(f: &Flat, core: &Core) -> BTreeMap<usize, (usize, usize)> {
    let mut span: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (i, &v) in core.outer.iter().enumerate() {
        let mut u = Some(v);
        while let Some(w) = u {
            let e = span.entry(w).or_insert((i + 1, i + 1));
            e.0 = e.0.min(i + 1);
            e.1 = e.1.max(i + 1);
            u = f.parent[w];
        }
    }
    span
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayAxiom {
    Subtree,
    Refinement,
    Core,
    ZeroOrInfiniteRatio,
    Positivity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayViolation {
    pub axiom: DelayAxiom,
    pub tree: String,
    pub edge: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayReport {
    pub types_checked: usize,
    pub violations: Vec<DelayViolation>,
}

impl DelayReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn passes_axiom(&self, axiom: DelayAxiom) -> bool {
        self.violations.iter().all(|v| v.axiom != axiom)
    }
}

fn node_at(root: &Node, id: usize) -> &Node {
    fn go<'a>(n: &'a Node, id: usize, next: &mut usize) -> Option<&'a Node> {
        if *next == id {
            return Some(n);
        }
        *next += 1;
        for c in &n.children {
            if let Sub::Node(m) = c {
                if let Some(found) = go(m, id, next) {
                    return Some(found);
                }
            }
        }
        None
    }
    go(root, id, &mut 0).expect("vertex id in range")
}

/// The subtree at `v` as a type of its own, markings renumbered from 1.
fn standalone(t: &Tree, v: usize) -> Option<Tree> {
    fn relabel(n: &Node, next: &mut usize) -> Node {
        let children = n
            .children
            .iter()
            .map(|c| match c {
                Sub::Leaf(Leaf::A(_)) => {
                    *next += 1;
                    Sub::Leaf(Leaf::A(*next))
                }
                Sub::Leaf(l) => Sub::Leaf(*l),
                Sub::Node(m) => Sub::Node(relabel(m, next)),
            })
            .collect();
        Node::new(n.kind, children)
    }
    Tree::new(t.family, relabel(node_at(&t.root, v), &mut 0)).ok()
}

/// Checks the compatibility axioms and positivity on every type of the
/// family, with exact arithmetic. Refinement is checked along single-edge
/// contractions between types that both carry delays; composite
/// refinements follow by multiplying along a chain.
pub fn check_delay_compatibility(fam: &DelayFamily) -> DelayReport {
    let mut violations = Vec::new();
    let mut by_core: HashMap<CoreShape, (usize, Vec<BigRational>)> = HashMap::new();
    let one = BigRational::one();
    for (ti, a) in fam.types.iter().enumerate() {
        let t = &a.tree;
        let f = t.flat();
        let core = Core::of(t);
        let expr = t.to_expression();
        let mut bad = |axiom, edge, detail: String| violations.push(DelayViolation { axiom, tree: expr.clone(), edge, detail });
        for (&e, l) in &a.lambda {
            if !l.is_positive() {
                bad(DelayAxiom::Positivity, e, format!("nonpositive multiplier {l}"));
            }
        }
        if !has_finite_ratio(t) {
            for (&e, l) in &a.lambda {
                if l != &one {
                    bad(DelayAxiom::ZeroOrInfiniteRatio, e, format!("multiplier {l} on a type with ratio 0 or ∞"));
                }
            }
            continue;
        }

        let in_core: Vec<bool> = (0..f.vertex_count()).map(|v| core.vertices.contains(&v)).collect();
        for &v in &core.vertices {
            let kids = core_children(&f, v, &in_core);
            for w in kids.windows(2) {
                if a.get(w[0]) >= a.get(w[1]) {
                    bad(DelayAxiom::Positivity, w[1], format!("multiplier {} does not exceed {} on the previous incoming edge", a.get(w[1]), a.get(w[0])));
                }
            }
        }

        let lambdas: Vec<BigRational> = core.edges().iter().map(|&e| a.get(e)).collect();
        match by_core.get(&core.shape) {
            Some((first, ls)) => {
                for (i, &e) in core.edges().iter().enumerate() {
                    if ls[i] != lambdas[i] {
                        bad(DelayAxiom::Core, e, format!("differs from {} on the same core", fam.types[*first].tree));
                    }
                }
            }
            None => {
                by_core.insert(core.shape.clone(), (ti, lambdas));
            }
        }

        let unquilted_core = core.vertices.iter().filter(|&&v| !f.kinds[v].is_colored()).count();
        if f.kinds[0] == Kind::Uncolored && unquilted_core >= 2 {
            for s in &f.slots[0] {
                let Slot::Vertex(c) = *s else { continue };
                let Some(sub) = standalone(t, c) else { continue };
                if !sub.has_merged() {
                    continue;
                }
                let Some(sa) = fam.get(&sub) else {
                    bad(DelayAxiom::Subtree, c, format!("no assignment for the subtree {sub}"));
                    continue;
                };
                for k in 1..sub.edge_count() + 1 {
                    if a.get(c + k) != sa.get(k) {
                        bad(DelayAxiom::Subtree, c + k, format!("restriction differs from {sub}"));
                    }
                }
            }
        }

        for fe in 1..f.vertex_count() {
            let Ok(coarse) = t.contract_edge(fe) else { continue };
            if !has_finite_ratio(&coarse) {
                continue;
            }
            let Some(ca) = fam.get(&coarse) else { continue };
            let ccore = Core::of(&coarse);
            for &e in ccore.edges() {
                let fine = if e < fe { e } else { e + 1 };
                let mut expect = a.get(fine);
                if f.parent[fine] == Some(fe) {
                    expect *= a.get(fe);
                }
                if ca.get(e) != expect {
                    bad(
                        DelayAxiom::Refinement,
                        e,
                        format!("{coarse} has {} on this edge, refinement {t} requires {expect}", ca.get(e)),
                    );
                }
            }
        }
    }
    DelayReport { types_checked: fam.types.len(), violations }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelayError {
    #[error("expected {expected} ratios, got {got}")]
    RatioCount { expected: usize, got: usize },
    #[error("ratio {0} is not positive")]
    NonPositive(String),
}

/// Component `i` is `ρ_i` times the product of the multipliers along the
/// path from `v_i` to the root.
pub fn delayed_evaluation(a: &DelayAssignment, ratios: &[BigRational]) -> Result<Vec<BigRational>, DelayError> {
    let t = &a.tree;
    let core = Core::of(t);
    if ratios.len() != core.k() {
        return Err(DelayError::RatioCount { expected: core.k(), got: ratios.len() });
    }
    if let Some(r) = ratios.iter().find(|r| !r.is_positive()) {
        return Err(DelayError::NonPositive(r.to_string()));
    }
    let f = t.flat();
    Ok(core
        .outer
        .iter()
        .zip(ratios)
        .map(|(&v, r)| {
            let mut x = r.clone();
            let mut u = v;
            while let Some(p) = f.parent[u] {
                x *= a.get(u);
                u = p;
            }
            x
        })
        .collect())
}

/// Linear surrogate for regularity: in log coordinates the delayed diagonal
/// condition is `log ρ_i + c_i = log ρ_{i+1} + c_{i+1}`. Reports the rank of
/// that system and checks the explicit one-parameter solution
/// `ρ_i = t / ∏_{γ_i} λ` against [`delayed_evaluation`] at two values of `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub tree: String,
    pub k: usize,
    pub rank: usize,
    pub solution_on_diagonal: bool,
}

impl RegularityReport {
    pub fn full_rank(&self) -> bool {
        self.rank + 1 == self.k && self.solution_on_diagonal
    }
}

pub fn regularity_surrogate(a: &DelayAssignment) -> RegularityReport {
    let core = Core::of(&a.tree);
    let k = core.k();
    let rows: Vec<Vec<i64>> = (0..k.saturating_sub(1))
        .map(|i| {
            let mut r = vec![0; k];
            r[i] = 1;
            r[i + 1] = -1;
            r
        })
        .collect();
    let rank = linalg::rank_int(&rows);
    let ones = vec![BigRational::one(); k];
    let products = delayed_evaluation(a, &ones).expect("unit ratios are valid");
    let mut on_diagonal = true;
    for t in [1i64, 2] {
        let t = BigRational::from_integer(t.into());
        let rho: Vec<BigRational> = products.iter().map(|p| &t / p).collect();
        let out = delayed_evaluation(a, &rho).expect("positive ratios");
        on_diagonal &= out.iter().all(|x| *x == t);
    }
    RegularityReport { tree: a.tree.to_expression(), k, rank, solution_on_diagonal: on_diagonal }
}

/// Per-vertex formal dimensions of the component moduli spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalModuliDims {
    pub dims: Vec<i64>,
    /// Indices into `dims` of the biquilted components.
    pub biquilted: Vec<usize>,
}

/// `1 − k + Σ dim M_v`.
pub fn formal_dimension(m: &FormalModuliDims) -> i64 {
    1 - m.biquilted.len() as i64 + m.dims.iter().sum::<i64>()
}

/// In a type with one unquilted component and `k` biquilted ones, each of
/// dimension 0 or 1, the total is 0 exactly when the unquilted component
/// and one biquilted component are rigid. Returns that component.
pub fn rigid_bubble(m: &FormalModuliDims) -> Option<usize> {
    if formal_dimension(m) != 0 || m.dims.iter().any(|&x| !(0..=1).contains(&x)) {
        return None;
    }
    let unquilted_rigid = (0..m.dims.len()).filter(|i| !m.biquilted.contains(i)).all(|i| m.dims[i] == 0);
    let rigid: Vec<usize> = m.biquilted.iter().copied().filter(|&i| m.dims[i] == 0).collect();
    (unquilted_rigid && rigid.len() == 1).then(|| rigid[0])
}
