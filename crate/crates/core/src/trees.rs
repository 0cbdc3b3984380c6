//! Combinatorial types of strata: planar rooted trees with labeled leaves and
//! colored vertices, for the four families behind K^d, K^{d,0}, K^{d,0,0} and
//! K^{d,e}.
//!
//! Trees are stored recursively with children in planar order. Because the
//! leaf labels fix the planar order, the stored form is already canonical:
//! two trees are isomorphic (respecting labels and colors) iff they compare
//! equal.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Stable,
    Colored,
    Bicolored,
    Seam,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Stable, Family::Colored, Family::Bicolored, Family::Seam];

    pub fn name(self) -> &'static str {
        match self {
            Family::Stable => "stable",
            Family::Colored => "colored",
            Family::Bicolored => "bicolored",
            Family::Seam => "seam",
        }
    }

    /// Dimension of the polytope indexed by this family at (d, e).
    pub fn top_dim(self, d: usize, e: usize) -> usize {
        match self {
            Family::Stable => d - 2,
            Family::Colored => d - 1,
            Family::Bicolored => d,
            Family::Seam => d + e - 1,
        }
    }

    pub fn min_d(self) -> usize {
        match self {
            Family::Stable => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stable" | "assoc" => Ok(Family::Stable),
            "colored" | "multiplihedron" => Ok(Family::Colored),
            "bicolored" | "bimultiplihedron" => Ok(Family::Bicolored),
            "seam" => Ok(Family::Seam),
            _ => Err(TreeError::Structure(format!("unknown family `{s}`"))),
        }
    }
}

/// A semi-infinite edge: boundary marking `a_i` or seam marking `t_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leaf {
    A(usize),
    T(usize),
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::A(i) => write!(f, "a{i}"),
            Leaf::T(j) => write!(f, "t{j}"),
        }
    }
}

/// Vertex kinds across all families.
///
/// In the seam family `Uncolored` is an unquilted disk, `Colored` a quilted
/// disk and `Sphere` a quilted sphere. In the bicolored family a vertex lying
/// in both colored sets is `Biquilted` when the two seams are distinct circles
/// and `Fused` when they coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Uncolored,
    Colored,
    Colored1,
    Colored2,
    Biquilted,
    Fused,
    Sphere,
}

impl Kind {
    pub fn colors(self) -> &'static [u8] {
        match self {
            Kind::Colored => &[1],
            Kind::Colored1 => &[1],
            Kind::Colored2 => &[2],
            Kind::Biquilted | Kind::Fused => &[1, 2],
            Kind::Uncolored | Kind::Sphere => &[],
        }
    }

    pub fn is_colored(self) -> bool {
        !self.colors().is_empty()
    }

    fn is_merged(self) -> bool {
        matches!(self, Kind::Biquilted | Kind::Fused)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sub {
    Leaf(Leaf),
    Node(Node),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub kind: Kind,
    pub children: Vec<Sub>,
}

impl Node {
    pub fn new(kind: Kind, children: Vec<Sub>) -> Self {
        Node { kind, children }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    pub family: Family,
    pub d: usize,
    pub e: usize,
    pub root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("d={d} is below the minimum {min} for the {family} family")]
    DegreeTooSmall { family: Family, d: usize, min: usize },
    #[error("markings out of order: expected {expected}, found {found}")]
    LeafOrder { expected: String, found: String },
    #[error("marking {leaf} is governed by {count} colored vertices of color {color}")]
    ColorCount { leaf: Leaf, color: u8, count: usize },
    #[error("{kind:?} vertex with {children} children, needs at least {min}")]
    Valence { kind: Kind, children: usize, min: usize },
    #[error("{0}")]
    Structure(String),
    #[error("no vertex {0}, or it is the root")]
    NoSuchEdge(usize),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

fn structure(msg: impl Into<String>) -> TreeError {
    TreeError::Structure(msg.into())
}

// Validation

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Region {
    Above,
    Middle,
    Below,
}

impl Tree {
    pub fn new(family: Family, root: Node) -> Result<Tree, TreeError> {
        let mut a = 0;
        let mut t = 0;
        count_leaves(&root, &mut a, &mut t);
        let tree = Tree { family, d: a, e: t, root };
        tree.validate()?;
        Ok(tree)
    }

    /// Checks every invariant of the tree's family.
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.d < self.family.min_d() {
            return Err(TreeError::DegreeTooSmall { family: self.family, d: self.d, min: self.family.min_d() });
        }
        if self.family != Family::Seam && self.e != 0 {
            return Err(structure("seam markings only occur in the seam family"));
        }
        let mut leaves = Vec::new();
        collect_leaves(&self.root, &mut leaves);
        let a: Vec<Leaf> = leaves.iter().copied().filter(|l| matches!(l, Leaf::A(_))).collect();
        let t: Vec<Leaf> = leaves.iter().copied().filter(|l| matches!(l, Leaf::T(_))).collect();
        let want_a: Vec<Leaf> = (1..=self.d).map(Leaf::A).collect();
        let want_t: Vec<Leaf> = (1..=self.e).map(Leaf::T).collect();
        for (got, want) in [(a, want_a), (t, want_t)] {
            if got != want {
                return Err(TreeError::LeafOrder { expected: join(&want), found: join(&got) });
            }
        }
        match self.family {
            Family::Stable => check_stable(&self.root),
            Family::Colored => check_colored(&self.root, Region::Above),
            Family::Bicolored => {
                let mut merged = None;
                let mut split = false;
                scan_bicolored_kinds(&self.root, &mut merged, &mut split)?;
                if merged.is_some() && split {
                    return Err(structure("merged and separate colored vertices in one tree"));
                }
                check_bicolored(&self.root, Region::Above)
            }
            Family::Seam => check_seam_root(&self.root),
        }
    }
}

fn join(leaves: &[Leaf]) -> String {
    leaves.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

fn count_leaves(node: &Node, a: &mut usize, t: &mut usize) {
    for c in &node.children {
        match c {
            Sub::Leaf(Leaf::A(_)) => *a += 1,
            Sub::Leaf(Leaf::T(_)) => *t += 1,
            Sub::Node(n) => count_leaves(n, a, t),
        }
    }
}

pub(crate) fn collect_leaves(node: &Node, out: &mut Vec<Leaf>) {
    for c in &node.children {
        match c {
            Sub::Leaf(l) => out.push(*l),
            Sub::Node(n) => collect_leaves(n, out),
        }
    }
}

fn min_children(node: &Node, min: usize) -> Result<(), TreeError> {
    if node.children.len() < min {
        return Err(TreeError::Valence { kind: node.kind, children: node.children.len(), min });
    }
    Ok(())
}

fn check_stable(node: &Node) -> Result<(), TreeError> {
    if node.kind != Kind::Uncolored {
        return Err(structure(format!("{:?} vertex in a stable tree", node.kind)));
    }
    min_children(node, 2)?;
    for c in &node.children {
        if let Sub::Node(n) = c {
            check_stable(n)?;
        }
    }
    Ok(())
}

fn missing_color(leaf: Leaf, color: u8) -> TreeError {
    TreeError::ColorCount { leaf, color, count: 0 }
}

fn first_leaf(node: &Node) -> Leaf {
    let mut out = Vec::new();
    collect_leaves(node, &mut out);
    out[0]
}

fn check_colored(node: &Node, region: Region) -> Result<(), TreeError> {
    let below = match (node.kind, region) {
        (Kind::Uncolored, _) => {
            min_children(node, 2)?;
            region
        }
        (Kind::Colored, Region::Above) => {
            min_children(node, 1)?;
            Region::Below
        }
        (Kind::Colored, _) => return Err(TreeError::ColorCount { leaf: first_leaf(node), color: 1, count: 2 }),
        (k, _) => return Err(structure(format!("{k:?} vertex in a colored tree"))),
    };
    for c in &node.children {
        match c {
            Sub::Leaf(l) if below == Region::Above => return Err(missing_color(*l, 1)),
            Sub::Leaf(_) => {}
            Sub::Node(n) => check_colored(n, below)?,
        }
    }
    Ok(())
}

fn scan_bicolored_kinds(node: &Node, merged: &mut Option<Kind>, split: &mut bool) -> Result<(), TreeError> {
    match node.kind {
        Kind::Biquilted | Kind::Fused => match merged {
            Some(k) if *k != node.kind => return Err(structure("biquilted and fused vertices in one tree")),
            _ => *merged = Some(node.kind),
        },
        Kind::Colored1 | Kind::Colored2 => *split = true,
        _ => {}
    }
    for c in &node.children {
        if let Sub::Node(n) = c {
            scan_bicolored_kinds(n, merged, split)?;
        }
    }
    Ok(())
}

fn check_bicolored(node: &Node, region: Region) -> Result<(), TreeError> {
    let next = match (node.kind, region) {
        (Kind::Uncolored, _) => {
            min_children(node, 2)?;
            region
        }
        (Kind::Colored1, Region::Above) => {
            min_children(node, 1)?;
            Region::Middle
        }
        (Kind::Colored2, Region::Middle) => {
            min_children(node, 1)?;
            Region::Below
        }
        (Kind::Biquilted | Kind::Fused, Region::Above) => {
            min_children(node, 1)?;
            Region::Below
        }
        (Kind::Colored2, Region::Above) => {
            return Err(structure("a color-2 vertex must lie below a color-1 vertex"));
        }
        (k, _) if k.is_colored() => {
            let color = if k == Kind::Colored2 { 2 } else { 1 };
            return Err(TreeError::ColorCount { leaf: first_leaf(node), color, count: 2 });
        }
        (k, _) => return Err(structure(format!("{k:?} vertex in a bicolored tree"))),
    };
    for c in &node.children {
        match c {
            Sub::Leaf(l) => match next {
                Region::Above => return Err(missing_color(*l, 1)),
                Region::Middle => return Err(missing_color(*l, 2)),
                Region::Below => {}
            },
            Sub::Node(n) => check_bicolored(n, next)?,
        }
    }
    Ok(())
}

fn is_boundary_item(s: &Sub) -> bool {
    match s {
        Sub::Leaf(Leaf::A(_)) => true,
        Sub::Leaf(Leaf::T(_)) => false,
        Sub::Node(n) => n.kind == Kind::Uncolored,
    }
}

fn check_seam_root(node: &Node) -> Result<(), TreeError> {
    match node.kind {
        Kind::Uncolored => {
            min_children(node, 2)?;
            for c in &node.children {
                match c {
                    Sub::Leaf(Leaf::A(i)) => return Err(missing_color(Leaf::A(*i), 1)),
                    Sub::Leaf(Leaf::T(j)) => {
                        return Err(structure(format!("seam marking t{j} outside every quilted disk")))
                    }
                    Sub::Node(n) => check_seam_root(n)?,
                }
            }
            Ok(())
        }
        Kind::Colored => check_quilted_disk(node),
        k => Err(structure(format!("{k:?} vertex above the quilted disks"))),
    }
}

fn check_quilted_disk(node: &Node) -> Result<(), TreeError> {
    min_children(node, 1)?;
    let split = node.children.iter().take_while(|c| is_boundary_item(c)).count();
    if node.children[split..].iter().any(is_boundary_item) {
        return Err(structure("quilted disk children must list boundary items before seam items"));
    }
    for c in &node.children[..split] {
        if let Sub::Node(n) = c {
            check_unquilted_below(n)?;
        }
    }
    for c in &node.children[split..] {
        if let Sub::Node(n) = c {
            check_sphere(n)?;
        }
    }
    Ok(())
}

fn check_unquilted_below(node: &Node) -> Result<(), TreeError> {
    if node.kind != Kind::Uncolored {
        return Err(TreeError::ColorCount { leaf: first_leaf(node), color: 1, count: 2 });
    }
    min_children(node, 2)?;
    for c in &node.children {
        match c {
            Sub::Leaf(Leaf::T(j)) => return Err(structure(format!("seam marking t{j} on an unquilted disk"))),
            Sub::Leaf(_) => {}
            Sub::Node(n) => check_unquilted_below(n)?,
        }
    }
    Ok(())
}

fn check_sphere(node: &Node) -> Result<(), TreeError> {
    if node.kind != Kind::Sphere {
        return Err(structure(format!("{:?} vertex among seam items", node.kind)));
    }
    min_children(node, 2)?;
    for c in &node.children {
        match c {
            Sub::Leaf(Leaf::A(i)) => return Err(structure(format!("boundary marking a{i} on a quilted sphere"))),
            Sub::Leaf(_) => {}
            Sub::Node(n) => check_sphere(n)?,
        }
    }
    Ok(())
}

// Enumeration

/// Ordered compositions of `n` into at least `min_parts` positive parts.
fn compositions(n: usize, min_parts: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for first in 1..=n {
            cur.push(first);
            go(n - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), &mut out);
    out.retain(|c| c.len() >= min_parts);
    out
}

/// Cartesian product of per-part alternatives.
fn product(parts: &[Vec<Sub>]) -> Vec<Vec<Sub>> {
    let mut acc: Vec<Vec<Sub>> = vec![Vec::new()];
    for options in parts {
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for o in options {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Gen {
    StableItem,
    SphereItem,
    ColoredBlock,
    Q2,
    Mid,
    Q1Block,
    Merged(Kind),
    SeamBlock,
    Root(&'static str),
}

/// Recursive generator by root decomposition, memoized per interval.
struct Enumerator {
    memo: HashMap<(Gen, usize, usize, usize, usize), Vec<Sub>>,
}

type Interval = (usize, usize);

impl Enumerator {
    fn new() -> Self {
        Enumerator { memo: HashMap::new() }
    }

    /// Nodes of `kind` over the label interval, whose children are a
    /// composition into at least `min` parts each drawn from `part`.
    fn region(&mut self, kind: Kind, lo: usize, hi: usize, min: usize, part: Gen, leaf: fn(usize) -> Leaf) -> Vec<Sub> {
        let mut out = Vec::new();
        for comp in compositions(hi - lo, min) {
            let mut start = lo;
            let mut options = Vec::new();
            for len in comp {
                options.push(self.items(part, (start, start + len), (0, 0), leaf));
                start += len;
            }
            for children in product(&options) {
                out.push(Sub::Node(Node::new(kind, children)));
            }
        }
        out
    }

    /// All items produced by generator `g` over half-open label intervals.
    fn items(&mut self, g: Gen, a: Interval, t: Interval, leaf: fn(usize) -> Leaf) -> Vec<Sub> {
        let key = (g, a.0, a.1, t.0, t.1);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let (lo, hi) = a;
        let single = |lo: usize, hi: usize| hi - lo == 1;
        let v = match g {
            Gen::StableItem | Gen::SphereItem => {
                let kind = if g == Gen::StableItem { Kind::Uncolored } else { Kind::Sphere };
                if single(lo, hi) {
                    vec![Sub::Leaf(leaf(lo + 1))]
                } else {
                    self.region(kind, lo, hi, 2, g, leaf)
                }
            }
            Gen::ColoredBlock => self.region(Kind::Colored, lo, hi, 1, Gen::StableItem, leaf),
            Gen::Q2 => self.region(Kind::Colored2, lo, hi, 1, Gen::StableItem, leaf),
            Gen::Merged(k) => self.region(k, lo, hi, 1, Gen::StableItem, leaf),
            Gen::Mid => {
                let mut v = self.items(Gen::Q2, a, t, leaf);
                if !single(lo, hi) {
                    v.extend(self.region(Kind::Uncolored, lo, hi, 2, Gen::Mid, leaf));
                }
                v
            }
            Gen::Q1Block => self.region(Kind::Colored1, lo, hi, 1, Gen::Mid, leaf),
            Gen::SeamBlock => self.quilted_disks(a, t),
            Gen::Root(_) => unreachable!("root regions go through root_region"),
        };
        self.memo.insert(key, v.clone());
        v
    }

    /// Quilted disk vertices over boundary interval `a` and seam interval `t`.
    fn quilted_disks(&mut self, a: Interval, t: Interval) -> Vec<Sub> {
        if a.0 == a.1 && t.0 == t.1 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let boundary = self.item_sequences(Gen::StableItem, a, Leaf::A);
        let seam = self.item_sequences(Gen::SphereItem, t, Leaf::T);
        for b in &boundary {
            for s in &seam {
                let mut children = b.clone();
                children.extend(s.iter().cloned());
                out.push(Sub::Node(Node::new(Kind::Colored, children)));
            }
        }
        out
    }

    /// All sequences of items covering the interval (empty interval gives the
    /// empty sequence).
    fn item_sequences(&mut self, g: Gen, iv: Interval, leaf: fn(usize) -> Leaf) -> Vec<Vec<Sub>> {
        let mut out = Vec::new();
        for comp in compositions(iv.1 - iv.0, 0) {
            let mut start = iv.0;
            let mut options = Vec::new();
            for len in comp {
                options.push(self.items(g, (start, start + len), (0, 0), leaf));
                start += len;
            }
            out.extend(product(&options));
        }
        out
    }

    /// Uncolored root-region vertices over `a` (and `t`), with at least two
    /// children, each a root-region vertex or a block from `block`.
    fn root_region(&mut self, tag: &'static str, a: Interval, t: Interval, block: Gen) -> Vec<Sub> {
        let key = (Gen::Root(tag), a.0, a.1, t.0, t.1);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut out = Vec::new();
        for blocks in block_sequences(a.1 - a.0, t.1 - t.0) {
            if blocks.len() < 2 {
                continue;
            }
            let mut options = Vec::new();
            let (mut sa, mut st) = (a.0, t.0);
            for (la, lt) in blocks {
                let sub_a = (sa, sa + la);
                let sub_t = (st, st + lt);
                let mut opts = if block == Gen::SeamBlock {
                    self.quilted_disks(sub_a, sub_t)
                } else {
                    self.items(block, sub_a, sub_t, Leaf::A)
                };
                if la + lt >= 2 {
                    opts.extend(self.root_region(tag, sub_a, sub_t, block));
                }
                options.push(opts);
                sa += la;
                st += lt;
            }
            for children in product(&options) {
                out.push(Sub::Node(Node::new(Kind::Uncolored, children)));
            }
        }
        self.memo.insert(key, out.clone());
        out
    }
}

/// Sequences of nonempty blocks `(boundary count, seam count)` whose totals
/// are `(a, t)`.
fn block_sequences(a: usize, t: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(a: usize, t: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if a == 0 && t == 0 {
            out.push(cur.clone());
            return;
        }
        for la in 0..=a {
            for lt in 0..=t {
                if la + lt == 0 {
                    continue;
                }
                cur.push((la, lt));
                go(a - la, t - lt, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(a, t, &mut Vec::new(), &mut out);
    out
}

fn unwrap_node(s: Sub) -> Node {
    match s {
        Sub::Node(n) => n,
        Sub::Leaf(_) => unreachable!("root is always a vertex"),
    }
}

/// Every combinatorial type of the family at `(d, e)`, each isomorphism class
/// once, in sorted order.
pub fn enumerate(family: Family, d: usize, e: usize) -> Result<Vec<Tree>, TreeError> {
    if d < family.min_d() {
        return Err(TreeError::DegreeTooSmall { family, d, min: family.min_d() });
    }
    if family != Family::Seam && e != 0 {
        return Err(structure(format!("the {family} family has no seam markings")));
    }
    let mut en = Enumerator::new();
    let all = (0, d);
    let none = (0, 0);
    let roots: Vec<Sub> = match family {
        Family::Stable => en.items(Gen::StableItem, all, none, Leaf::A),
        Family::Colored => {
            let mut v = en.items(Gen::ColoredBlock, all, none, Leaf::A);
            v.extend(en.root_region("colored", all, none, Gen::ColoredBlock));
            v
        }
        Family::Bicolored => {
            let mut v = en.items(Gen::Q1Block, all, none, Leaf::A);
            v.extend(en.root_region("q1", all, none, Gen::Q1Block));
            for k in [Kind::Biquilted, Kind::Fused] {
                v.extend(en.items(Gen::Merged(k), all, none, Leaf::A));
                let tag = if k == Kind::Biquilted { "biquilted" } else { "fused" };
                v.extend(en.root_region(tag, all, none, Gen::Merged(k)));
            }
            v
        }
        Family::Seam => {
            let t = (0, e);
            let mut v = en.quilted_disks(all, t);
            if d + e >= 2 {
                v.extend(en.root_region("seam", all, t, Gen::SeamBlock));
            }
            v
        }
    };
    let mut trees: Vec<Tree> = roots.into_iter().map(|r| Tree { family, d, e, root: unwrap_node(r) }).collect();
    trees.sort();
    trees.dedup();
    Ok(trees)
}

// Flat view: preorder vertex ids, parents and depths.

/// Preorder flattening of a tree. Vertex 0 is the root; every other vertex
/// `v` is identified with the finite edge joining it to its parent.
#[derive(Clone, Debug)]
pub struct Flat {
    pub kinds: Vec<Kind>,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    /// Leaves with the vertex they hang from.
    pub leaves: Vec<(Leaf, usize)>,
    /// Children of each vertex in planar order (leaves and vertices mixed).
    pub slots: Vec<Vec<Slot>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Leaf(Leaf),
    Vertex(usize),
}

impl Flat {
    pub fn of(tree: &Tree) -> Flat {
        let mut f = Flat { kinds: Vec::new(), parent: Vec::new(), depth: Vec::new(), leaves: Vec::new(), slots: Vec::new() };
        f.push(&tree.root, None, 0);
        f
    }

    fn push(&mut self, node: &Node, parent: Option<usize>, depth: usize) -> usize {
        let id = self.kinds.len();
        self.kinds.push(node.kind);
        self.parent.push(parent);
        self.depth.push(depth);
        self.slots.push(Vec::new());
        for c in &node.children {
            match c {
                Sub::Leaf(l) => {
                    self.leaves.push((*l, id));
                    self.slots[id].push(Slot::Leaf(*l));
                }
                Sub::Node(n) => {
                    let cid = self.push(n, Some(id), depth + 1);
                    self.slots[id].push(Slot::Vertex(cid));
                }
            }
        }
        id
    }

    pub fn vertex_count(&self) -> usize {
        self.kinds.len()
    }

    /// Finite edges, each named by its lower endpoint.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        1..self.kinds.len()
    }

    /// Edges on the shortest path between two vertices, with +1 for edges
    /// climbing from `u` toward the root and -1 for edges descending to `v`.
    pub fn path(&self, u: usize, v: usize) -> Vec<(usize, i64)> {
        let (mut x, mut y) = (u, v);
        let mut up = Vec::new();
        let mut down = Vec::new();
        while x != y {
            if self.depth[x] >= self.depth[y] {
                up.push((x, 1));
                x = self.parent[x].expect("non-root");
            } else {
                down.push((y, -1));
                y = self.parent[y].expect("non-root");
            }
        }
        up.extend(down.into_iter().rev());
        up
    }

    /// Vertices on the path from the root down to `v`, root first.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut x = v;
        while let Some(p) = self.parent[x] {
            out.push(p);
            x = p;
        }
        out.reverse();
        out
    }
}

impl Tree {
    pub fn flat(&self) -> Flat {
        Flat::of(self)
    }

    pub fn edge_count(&self) -> usize {
        fn go(n: &Node) -> usize {
            n.children.iter().map(|c| if let Sub::Node(m) = c { 1 + go(m) } else { 0 }).sum()
        }
        go(&self.root)
    }

    pub fn is_fused(&self) -> bool {
        fn go(n: &Node) -> bool {
            n.kind == Kind::Fused || n.children.iter().any(|c| matches!(c, Sub::Node(m) if go(m)))
        }
        go(&self.root)
    }

    pub fn has_merged(&self) -> bool {
        fn go(n: &Node) -> bool {
            n.kind.is_merged() || n.children.iter().any(|c| matches!(c, Sub::Node(m) if go(m)))
        }
        go(&self.root)
    }

    /// The tree with every fused vertex replaced by a biquilted one: the
    /// seams separate while the rest of the type is unchanged.
    pub fn unfuse(&self) -> Tree {
        fn go(n: &Node) -> Node {
            let kind = if n.kind == Kind::Fused { Kind::Biquilted } else { n.kind };
            let children = n
                .children
                .iter()
                .map(|c| match c {
                    Sub::Node(m) => Sub::Node(go(m)),
                    l => l.clone(),
                })
                .collect();
            Node::new(kind, children)
        }
        Tree { root: go(&self.root), ..self.clone() }
    }

    /// Contracts the finite edge above vertex `edge` (preorder id) and
    /// validates the result.
    pub fn contract_edge(&self, edge: usize) -> Result<Tree, TreeError> {
        self.contract_edges(&[edge])
    }

    /// Contracts a set of finite edges simultaneously; only the final tree is
    /// required to be valid.
    pub fn contract_edges(&self, edges: &[usize]) -> Result<Tree, TreeError> {
        let t = self.contract_unchecked(edges)?;
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn contract_unchecked(&self, edges: &[usize]) -> Result<Tree, TreeError> {
        let mut sorted: Vec<usize> = edges.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let n = self.edge_count() + 1;
        if let Some(&bad) = sorted.iter().find(|&&v| v == 0 || v >= n) {
            return Err(TreeError::NoSuchEdge(bad));
        }
        let mut next = 0;
        let root = contract_node(&self.root, &sorted, &mut next, self.family)?;
        Ok(Tree { root, ..self.clone() })
    }
}

/// Rebuilds `node` (preorder id `*next`) with the listed edges contracted.
fn contract_node(node: &Node, edges: &[usize], next: &mut usize, family: Family) -> Result<Node, TreeError> {
    *next += 1;
    let mut kind = node.kind;
    let mut children = Vec::new();
    for c in &node.children {
        match c {
            Sub::Leaf(l) => children.push(Sub::Leaf(*l)),
            Sub::Node(m) => {
                let id = *next;
                let rebuilt = contract_node(m, edges, next, family)?;
                if edges.binary_search(&id).is_ok() {
                    let k = merge_kinds(node.kind, rebuilt.kind)?;
                    if k != node.kind {
                        if kind != node.kind && kind != k {
                            return Err(structure(format!("contraction merges {kind:?} and {k:?} into one vertex")));
                        }
                        kind = k;
                    }
                    children.extend(rebuilt.children);
                } else {
                    children.push(Sub::Node(rebuilt));
                }
            }
        }
    }
    if family == Family::Seam && kind == Kind::Colored {
        let (mut b, s): (Vec<Sub>, Vec<Sub>) = children.into_iter().partition(is_boundary_item);
        b.extend(s);
        children = b;
    }
    Ok(Node::new(kind, children))
}

fn merge_kinds(parent: Kind, child: Kind) -> Result<Kind, TreeError> {
    use Kind::*;
    Ok(match (parent, child) {
        (Uncolored, k) if k != Sphere => k,
        (k, Uncolored) if k.is_colored() => k,
        (Sphere, Sphere) => Sphere,
        (Colored, Sphere) => Colored,
        (Colored1, Colored2) => Biquilted,
        (p, c) => return Err(structure(format!("cannot merge a {p:?} vertex with a {c:?} child"))),
    })
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Whether `t1` lies in the closure of the stratum `t2`: some simultaneous
/// contraction of edges of `t1` (together with separating fused seams)
/// yields `t2`.
pub fn refines(t1: &Tree, t2: &Tree) -> bool {
    if (t1.family, t1.d, t1.e) != (t2.family, t2.d, t2.e) {
        return false;
    }
    if t1 == t2 {
        return true;
    }
    let (e1, e2) = (t1.edge_count(), t2.edge_count());
    if e2 > e1 {
        return false;
    }
    let mut sources = vec![t1.clone()];
    if t1.is_fused() && !t2.is_fused() {
        sources = vec![t1.unfuse()];
    } else if !t1.is_fused() && t2.is_fused() {
        return false;
    }
    let edges: Vec<usize> = (1..=e1).collect();
    for src in sources {
        for subset in subsets_of_size(e1, e1 - e2) {
            let chosen: Vec<usize> = subset.iter().map(|&i| edges[i]).collect();
            if let Ok(t) = src.contract_unchecked(&chosen) {
                if &t == t2 {
                    return true;
                }
            }
        }
    }
    false
}

/// Every valid tree obtained from `t` by contracting a nonempty set of edges
/// or separating fused seams (or both).
pub fn contractions(t: &Tree) -> Vec<Tree> {
    let n = t.edge_count();
    let mut out = Vec::new();
    let bases: Vec<(Tree, bool)> = if t.is_fused() { vec![(t.clone(), false), (t.unfuse(), true)] } else { vec![(t.clone(), false)] };
    for (base, moved) in bases {
        for mask in 0u64..(1u64 << n) {
            if mask == 0 && !moved {
                continue;
            }
            let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            if let Ok(c) = base.contract_edges(&chosen) {
                out.push(c);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

// Expressions

impl Tree {
    /// Bracketed expression of the type, e.g. `h((a1a2)a3)`,
    /// `h1(h2(a1)h2(a2))` or `h(t1/(a1a2))`.
    pub fn to_expression(&self) -> String {
        let mut s = String::new();
        if self.root.kind == Kind::Uncolored {
            contents(&self.root, self.family, &mut s);
        } else {
            render_node(&self.root, self.family, &mut s);
        }
        s
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_expression())
    }
}

fn contents(node: &Node, family: Family, out: &mut String) {
    for c in &node.children {
        render_sub(c, family, out);
    }
}

fn render_sub(s: &Sub, family: Family, out: &mut String) {
    match s {
        Sub::Leaf(l) => out.push_str(&l.to_string()),
        Sub::Node(n) => render_node(n, family, out),
    }
}

fn render_node(node: &Node, family: Family, out: &mut String) {
    let symbol = match node.kind {
        Kind::Uncolored | Kind::Sphere => {
            out.push('(');
            contents(node, family, out);
            out.push(')');
            return;
        }
        Kind::Colored => "h",
        Kind::Colored1 => "h1",
        Kind::Colored2 => "h2",
        Kind::Biquilted => "h1h2",
        Kind::Fused => "(h1h2)",
    };
    out.push_str(symbol);
    out.push('(');
    if family == Family::Seam {
        let split = node.children.iter().take_while(|c| is_boundary_item(c)).count();
        for c in &node.children[split..] {
            render_sub(c, family, out);
        }
        out.push('/');
        for c in &node.children[..split] {
            render_sub(c, family, out);
        }
    } else if let [Sub::Node(only)] = node.children.as_slice() {
        if only.kind == Kind::Uncolored {
            contents(only, family, out);
        } else {
            render_node(only, family, out);
        }
    } else {
        for (i, c) in node.children.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            render_sub(c, family, out);
        }
    }
    out.push(')');
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok {
    A(usize),
    T(usize),
    H(Kind),
    Open,
    Close,
    Comma,
    Slash,
}

fn lex(s: &str) -> Result<Vec<(usize, Tok)>, TreeError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| TreeError::Parse { pos, msg: msg.to_string() };
    while i < b.len() {
        let c = b[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' => i += 1,
            b'(' if s[i..].starts_with("(h1h2)") || s[i..].starts_with("(h_1h_2)") => {
                i += if s[i..].starts_with("(h1h2)") { 6 } else { 8 };
                out.push((start, Tok::H(Kind::Fused)));
            }
            b'(' => {
                i += 1;
                out.push((start, Tok::Open));
            }
            b')' => {
                i += 1;
                out.push((start, Tok::Close));
            }
            b',' => {
                i += 1;
                out.push((start, Tok::Comma));
            }
            b'/' => {
                i += 1;
                out.push((start, Tok::Slash));
            }
            b'a' | b't' => {
                i += 1;
                if i < b.len() && b[i] == b'_' {
                    i += 1;
                }
                let ds = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let n: usize = s[ds..i].parse().map_err(|_| err(start, "expected a marking index"))?;
                out.push((start, if c == b'a' { Tok::A(n) } else { Tok::T(n) }));
            }
            b'h' => {
                let rest = &s[i..];
                let (len, kind) = if rest.starts_with("h1h2") {
                    (4, Kind::Biquilted)
                } else if rest.starts_with("h_1h_2") {
                    (6, Kind::Biquilted)
                } else if rest.starts_with("h1") {
                    (2, Kind::Colored1)
                } else if rest.starts_with("h_1") {
                    (3, Kind::Colored1)
                } else if rest.starts_with("h2") {
                    (2, Kind::Colored2)
                } else if rest.starts_with("h_2") {
                    (3, Kind::Colored2)
                } else {
                    (1, Kind::Colored)
                };
                i += len;
                out.push((start, Tok::H(kind)));
            }
            _ => return Err(err(start, &format!("unexpected character `{}`", c as char))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    family: Family,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn fail<T>(&self, msg: &str) -> Result<T, TreeError> {
        Err(TreeError::Parse { pos: self.here(), msg: msg.to_string() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), TreeError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("expected {what}"))
        }
    }

    fn seq(&mut self) -> Result<Vec<Sub>, TreeError> {
        let mut items = Vec::new();
        while let Some(t) = self.peek() {
            match t {
                Tok::Close | Tok::Comma | Tok::Slash => break,
                _ => items.push(self.item()?),
            }
        }
        Ok(items)
    }

    fn item(&mut self) -> Result<Sub, TreeError> {
        match self.peek() {
            Some(Tok::A(i)) => {
                self.pos += 1;
                Ok(Sub::Leaf(Leaf::A(i)))
            }
            Some(Tok::T(j)) => {
                self.pos += 1;
                Ok(Sub::Leaf(Leaf::T(j)))
            }
            Some(Tok::Open) => {
                self.pos += 1;
                let items = self.seq()?;
                self.expect(Tok::Close, "`)`")?;
                if items.is_empty() {
                    return self.fail("empty parentheses");
                }
                let all_seam = items.iter().all(|s| {
                    matches!(s, Sub::Leaf(Leaf::T(_))) || matches!(s, Sub::Node(n) if n.kind == Kind::Sphere)
                });
                let kind = if self.family == Family::Seam && all_seam { Kind::Sphere } else { Kind::Uncolored };
                Ok(Sub::Node(Node::new(kind, items)))
            }
            Some(Tok::H(kind)) => {
                self.pos += 1;
                self.expect(Tok::Open, "`(` after an h-symbol")?;
                let node = if self.family == Family::Seam {
                    if kind != Kind::Colored {
                        return self.fail("the seam family uses a single symbol h");
                    }
                    let seam = self.seq()?;
                    self.expect(Tok::Slash, "`/` separating seam and boundary items")?;
                    let mut children = self.seq()?;
                    children.extend(seam);
                    Node::new(kind, children)
                } else {
                    let mut parts = vec![self.seq()?];
                    while self.peek() == Some(Tok::Comma) {
                        self.pos += 1;
                        parts.push(self.seq()?);
                    }
                    if parts.len() > 1 {
                        let mut children = Vec::new();
                        for p in parts {
                            if p.len() != 1 {
                                return self.fail("each comma-separated argument must be a single item");
                            }
                            children.extend(p);
                        }
                        Node::new(kind, children)
                    } else {
                        let p = parts.pop().unwrap_or_default();
                        match p.as_slice() {
                            [] => return self.fail("empty argument list"),
                            [Sub::Leaf(_)] => Node::new(kind, p),
                            [Sub::Node(n)] if n.kind.is_colored() => Node::new(kind, p),
                            _ => Node::new(kind, vec![Sub::Node(Node::new(Kind::Uncolored, p))]),
                        }
                    }
                };
                self.expect(Tok::Close, "`)` closing the h-term")?;
                Ok(Sub::Node(node))
            }
            _ => self.fail("expected a marking, `(` or an h-symbol"),
        }
    }
}

/// Parses a bracketed expression in the notation of [`Tree::to_expression`].
pub fn parse_expression(s: &str, family: Family) -> Result<Tree, TreeError> {
    let toks = lex(s)?;
    let mut p = Parser { toks, pos: 0, end: s.len(), family };
    let items = p.seq()?;
    if p.pos != p.toks.len() {
        return p.fail("unbalanced bracket or stray separator");
    }
    let root = match items.as_slice() {
        [Sub::Node(n)] if n.kind.is_colored() => n.clone(),
        _ => Node::new(Kind::Uncolored, items),
    };
    Tree::new(family, root)
}

// JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: usize,
    pub kind: Kind,
    pub colored: Vec<u8>,
    /// Position among the parent's children; absent for the root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafJson {
    pub label: String,
    pub vertex: usize,
    pub slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub family: Family,
    pub d: usize,
    pub e: usize,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[usize; 2]>,
    pub leaves: Vec<LeafJson>,
}

impl Tree {
    pub fn to_json(&self) -> TreeJson {
        let f = self.flat();
        let mut vertices: Vec<VertexJson> = (0..f.vertex_count())
            .map(|id| VertexJson { id, kind: f.kinds[id], colored: f.kinds[id].colors().to_vec(), slot: None })
            .collect();
        let mut leaves = Vec::new();
        for (v, slots) in f.slots.iter().enumerate() {
            for (k, s) in slots.iter().enumerate() {
                match s {
                    Slot::Vertex(c) => vertices[*c].slot = Some(k),
                    Slot::Leaf(l) => leaves.push(LeafJson { label: l.to_string(), vertex: v, slot: k }),
                }
            }
        }
        let edges = f.edges().map(|v| [f.parent[v].expect("non-root"), v]).collect();
        TreeJson { family: self.family, d: self.d, e: self.e, vertices, edges, leaves }
    }

    pub fn from_json(j: &TreeJson) -> Result<Tree, TreeError> {
        let n = j.vertices.len();
        if n == 0 {
            return Err(structure("no vertices"));
        }
        let mut kinds = vec![Kind::Uncolored; n];
        for v in &j.vertices {
            if v.id >= n {
                return Err(structure(format!("vertex id {} out of range", v.id)));
            }
            kinds[v.id] = v.kind;
        }
        let mut slots: Vec<Vec<(usize, Slot)>> = vec![Vec::new(); n];
        let mut has_parent = vec![false; n];
        for [p, c] in &j.edges {
            if *p >= n || *c >= n || has_parent[*c] {
                return Err(structure(format!("bad edge [{p}, {c}]")));
            }
            has_parent[*c] = true;
            let slot = j.vertices.iter().find(|v| v.id == *c).and_then(|v| v.slot).unwrap_or(usize::MAX);
            slots[*p].push((slot, Slot::Vertex(*c)));
        }
        for l in &j.leaves {
            if l.vertex >= n {
                return Err(structure(format!("leaf {} on missing vertex", l.label)));
            }
            let leaf = match parse_leaf(&l.label) {
                Some(x) => x,
                None => return Err(structure(format!("bad leaf label `{}`", l.label))),
            };
            slots[l.vertex].push((l.slot, Slot::Leaf(leaf)));
        }
        let roots: Vec<usize> = (0..n).filter(|&v| !has_parent[v]).collect();
        if roots.len() != 1 {
            return Err(structure("tree must have exactly one root"));
        }
        for s in &mut slots {
            s.sort_by_key(|x| x.0);
        }
        fn build(v: usize, kinds: &[Kind], slots: &[Vec<(usize, Slot)>], seen: &mut Vec<bool>) -> Result<Node, TreeError> {
            if seen[v] {
                return Err(structure("cycle in edge list"));
            }
            seen[v] = true;
            let mut children = Vec::new();
            for (_, s) in &slots[v] {
                children.push(match s {
                    Slot::Leaf(l) => Sub::Leaf(*l),
                    Slot::Vertex(c) => Sub::Node(build(*c, kinds, slots, seen)?),
                });
            }
            Ok(Node::new(kinds[v], children))
        }
        let mut seen = vec![false; n];
        let root = build(roots[0], &kinds, &slots, &mut seen)?;
        let t = Tree::new(j.family, root)?;
        if (t.d, t.e) != (j.d, j.e) {
            return Err(structure("declared (d, e) disagrees with the leaves"));
        }
        Ok(t)
    }
}

fn parse_leaf(s: &str) -> Option<Leaf> {
    let (head, rest) = s.split_at(1);
    let n: usize = rest.trim_start_matches('_').parse().ok()?;
    match head {
        "a" => Some(Leaf::A(n)),
        "t" => Some(Leaf::T(n)),
        _ => None,
    }
}
