//! Face posets of K^d, K^{d,0}, K^{d,0,0} and K^{d,e}: f-vectors, the Euler
//! relation, facet families, forgetful maps and ratio strata.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gluing;
use crate::trees::{self, Family, Kind, Leaf, Node, Sub, Tree, TreeError, TreeJson};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FacetTag {
    TwoVertex,
    UnquiltedBubble,
    QuiltedBubbles,
    BoundaryParenthesis,
    SeamParenthesis,
    HProduct,
    OnceQuiltedBubbles,
    BiquiltedBubbles,
    SeamsTogether,
}

impl FacetTag {
    pub fn for_family(family: Family) -> &'static [FacetTag] {
        use FacetTag::*;
        match family {
            Family::Stable => &[TwoVertex],
            Family::Colored => &[UnquiltedBubble, QuiltedBubbles],
            Family::Seam => &[BoundaryParenthesis, SeamParenthesis, HProduct],
            Family::Bicolored => &[OnceQuiltedBubbles, UnquiltedBubble, BiquiltedBubbles, SeamsTogether],
        }
    }

    pub fn name(self) -> &'static str {
        use FacetTag::*;
        match self {
            TwoVertex => "two-vertex",
            UnquiltedBubble => "unquilted-bubble",
            QuiltedBubbles => "quilted-bubbles",
            BoundaryParenthesis => "boundary-parenthesis",
            SeamParenthesis => "seam-parenthesis",
            HProduct => "h-product",
            OnceQuiltedBubbles => "once-quilted-bubbles",
            BiquiltedBubbles => "biquilted-bubbles",
            SeamsTogether => "seams-together",
        }
    }
}

impl fmt::Display for FacetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("codimension-one face {0} matches no facet family")]
    UntaggedFacet(String),
    #[error("cannot forget {what} from a face with d={d}, e={e}")]
    ForgetBelowMinimum { what: String, d: usize, e: usize },
}

fn node_children(s: &Sub) -> Option<&Node> {
    match s {
        Sub::Node(n) => Some(n),
        Sub::Leaf(_) => None,
    }
}

fn only_leaves(n: &Node) -> bool {
    n.children.iter().all(|c| matches!(c, Sub::Leaf(_)))
}

/// The facet family of a codimension-one type, read off its shape.
pub fn classify_facet(t: &Tree) -> Option<FacetTag> {
    let root = &t.root;
    let kids: Vec<&Node> = root.children.iter().filter_map(node_children).collect();
    match t.family {
        Family::Stable => (kids.len() == 1 && only_leaves(kids[0])).then_some(FacetTag::TwoVertex),
        Family::Colored => match root.kind {
            Kind::Colored if kids.len() == 1 && kids[0].kind == Kind::Uncolored && only_leaves(kids[0]) => {
                Some(FacetTag::UnquiltedBubble)
            }
            Kind::Uncolored if kids.len() == root.children.len() && kids.iter().all(|k| k.kind == Kind::Colored && only_leaves(k)) => {
                Some(FacetTag::QuiltedBubbles)
            }
            _ => None,
        },
        Family::Seam => match root.kind {
            Kind::Colored if kids.len() == 1 && only_leaves(kids[0]) => match kids[0].kind {
                Kind::Uncolored => Some(FacetTag::BoundaryParenthesis),
                Kind::Sphere => Some(FacetTag::SeamParenthesis),
                _ => None,
            },
            Kind::Uncolored if kids.iter().all(|k| k.kind == Kind::Colored && only_leaves(k)) => Some(FacetTag::HProduct),
            _ => None,
        },
        Family::Bicolored => match root.kind {
            Kind::Colored1 if kids.len() == root.children.len() && kids.iter().all(|k| k.kind == Kind::Colored2 && only_leaves(k)) => {
                Some(FacetTag::OnceQuiltedBubbles)
            }
            Kind::Biquilted if kids.len() == 1 && kids[0].kind == Kind::Uncolored && only_leaves(kids[0]) => {
                Some(FacetTag::UnquiltedBubble)
            }
            Kind::Uncolored if kids.len() == root.children.len() && kids.iter().all(|k| k.kind == Kind::Biquilted && only_leaves(k)) => {
                Some(FacetTag::BiquiltedBubbles)
            }
            Kind::Fused if kids.is_empty() => Some(FacetTag::SeamsTogether),
            _ => None,
        },
    }
}

/// Product (and fiber product over the ratio) decomposition of a face:
/// one moduli factor per vertex, bubbles first and the root last.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetFactors {
    pub factors: Vec<String>,
    /// Number of equal-ratio constraints among biquilted components.
    pub shared_ratio_constraints: usize,
}

pub fn facet_factors(t: &Tree) -> FacetFactors {
    let f = t.flat();
    let mut factors = Vec::new();
    let mut biquilted = 0;
    let order: Vec<usize> = (1..f.vertex_count()).chain(std::iter::once(0)).collect();
    for v in order {
        let k = f.slots[v].len();
        let name = match f.kinds[v] {
            Kind::Uncolored | Kind::Sphere => format!("R^{{{k}}}"),
            Kind::Biquilted => {
                biquilted += 1;
                format!("R^{{{k},0,0}}")
            }
            _ if t.family == Family::Seam => {
                let seam = f.slots[v].iter().filter(|s| matches!(s, trees::Slot::Leaf(Leaf::T(_)))).count()
                    + f.slots[v].iter().filter(|s| matches!(s, trees::Slot::Vertex(c) if f.kinds[*c] == Kind::Sphere)).count();
                format!("R^{{{},{}}}", k - seam, seam)
            }
            _ => format!("R^{{{k},0}}"),
        };
        factors.push(name);
    }
    FacetFactors { factors, shared_ratio_constraints: biquilted.max(1) - 1 }
}

#[derive(Clone, Debug)]
pub struct Face {
    pub tree: Tree,
    pub dim: usize,
    pub facet_tag: Option<FacetTag>,
}

#[derive(Debug)]
pub struct FacePoset {
    pub family: Family,
    pub d: usize,
    pub e: usize,
    pub dim: usize,
    pub faces: Vec<Face>,
    index: HashMap<Tree, usize>,
    upsets: OnceLock<Vec<Vec<usize>>>,
}

pub fn build_face_poset(family: Family, d: usize, e: usize) -> Result<FacePoset, PolytopeError> {
    let trees = trees::enumerate(family, d, e)?;
    let dim = family.top_dim(d, e);
    let faces: Vec<Face> = trees
        .into_par_iter()
        .map(|tree| {
            let codim = gluing::stratum_codim(&tree);
            let facet_tag = if codim == 1 { classify_facet(&tree) } else { None };
            if codim == 1 && facet_tag.is_none() {
                return Err(PolytopeError::UntaggedFacet(tree.to_expression()));
            }
            Ok(Face { dim: dim - codim, tree, facet_tag })
        })
        .collect::<Result<_, _>>()?;
    let index = faces.iter().enumerate().map(|(i, f)| (f.tree.clone(), i)).collect();
    Ok(FacePoset { family, d, e, dim, faces, index, upsets: OnceLock::new() })
}

impl FacePoset {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn index_of(&self, t: &Tree) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn f_vector(&self) -> Vec<usize> {
        let mut fv = vec![0; self.dim + 1];
        for f in &self.faces {
            fv[f.dim] += 1;
        }
        fv
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.faces.iter().map(|f| if f.dim % 2 == 0 { 1 } else { -1 }).sum()
    }

    pub fn euler_check(&self) -> bool {
        self.euler_characteristic() == 1
    }

    pub fn facet_families(&self) -> BTreeMap<FacetTag, usize> {
        let mut out: BTreeMap<FacetTag, usize> = FacetTag::for_family(self.family).iter().map(|&t| (t, 0)).collect();
        for f in &self.faces {
            if let Some(t) = f.facet_tag {
                *out.entry(t).or_default() += 1;
            }
        }
        out
    }

    pub fn top(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.faces[i].dim == self.dim).collect()
    }

    /// For each face, the faces strictly above it in the closure order.
    /// Computed once by contracting every edge subset of every face.
    pub fn upsets(&self) -> &[Vec<usize>] {
        self.upsets.get_or_init(|| {
            self.faces
                .par_iter()
                .map(|f| {
                    let mut up: Vec<usize> = trees::contractions(&f.tree).iter().filter_map(|t| self.index_of(t)).collect();
                    up.sort_unstable();
                    up
                })
                .collect()
        })
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        i == j || self.upsets()[i].binary_search(&j).is_ok()
    }

    /// Cover relations `(lower, upper)`, in lexicographic order.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let up = self.upsets();
        let mut out = Vec::new();
        for (i, above) in up.iter().enumerate() {
            for &j in above {
                let between = above.iter().any(|&k| k != j && up[k].binary_search(&j).is_ok());
                if !between {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Unique top face, every cover raises dimension by exactly one, and
    /// every non-top face has an upper cover.
    pub fn is_graded(&self) -> bool {
        let covers = self.covers();
        if self.top().len() != 1 {
            return false;
        }
        let mut has_up = vec![false; self.len()];
        for &(i, j) in &covers {
            if self.faces[j].dim != self.faces[i].dim + 1 {
                return false;
            }
            has_up[i] = true;
        }
        (0..self.len()).all(|i| has_up[i] || self.faces[i].dim == self.dim)
    }

    pub fn to_json(&self) -> PosetJson {
        PosetJson {
            family: self.family,
            d: self.d,
            e: self.e,
            dim: self.dim,
            faces: self
                .faces
                .iter()
                .enumerate()
                .map(|(id, f)| FaceJson {
                    id,
                    expression: f.tree.to_expression(),
                    tree: f.tree.to_json(),
                    dim: f.dim,
                    facet_tag: f.facet_tag,
                })
                .collect(),
            covers: self.covers().into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }

    /// Hasse diagram in Graphviz DOT syntax.
    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph \"{}_{}_{}\" {{\n  rankdir=BT;\n", self.family, self.d, self.e);
        for (i, f) in self.faces.iter().enumerate() {
            s.push_str(&format!("  f{i} [label=\"{}\\ndim {}\"];\n", f.tree.to_expression(), f.dim));
        }
        for (a, b) in self.covers() {
            s.push_str(&format!("  f{a} -> f{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceJson {
    pub id: usize,
    pub expression: String,
    pub tree: TreeJson,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facet_tag: Option<FacetTag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosetJson {
    pub family: Family,
    pub d: usize,
    pub e: usize,
    pub dim: usize,
    pub faces: Vec<FaceJson>,
    pub covers: Vec<[usize; 2]>,
}

// Forgetful maps

fn prune(node: &Node, drop: Leaf) -> Option<Sub> {
    let mut children = Vec::new();
    for c in &node.children {
        match c {
            Sub::Leaf(l) if *l == drop => {}
            Sub::Leaf(l) => children.push(Sub::Leaf(*l)),
            Sub::Node(n) => children.extend(prune(n, drop)),
        }
    }
    match (node.kind, children.len()) {
        (_, 0) => None,
        (Kind::Uncolored | Kind::Sphere, 1) => children.pop(),
        _ => Some(Sub::Node(Node::new(node.kind, children))),
    }
}

fn relabel(node: &Node, drop: Leaf) -> Node {
    let children = node
        .children
        .iter()
        .map(|c| match (c, drop) {
            (Sub::Leaf(Leaf::A(k)), Leaf::A(i)) if *k > i => Sub::Leaf(Leaf::A(k - 1)),
            (Sub::Leaf(Leaf::T(k)), Leaf::T(j)) if *k > j => Sub::Leaf(Leaf::T(k - 1)),
            (Sub::Leaf(l), _) => Sub::Leaf(*l),
            (Sub::Node(n), _) => Sub::Node(relabel(n, drop)),
        })
        .collect();
    Node::new(node.kind, children)
}

fn forget(t: &Tree, drop: Leaf) -> Result<Tree, PolytopeError> {
    let below = PolytopeError::ForgetBelowMinimum { what: drop.to_string(), d: t.d, e: t.e };
    let (in_range, d_after) = match drop {
        Leaf::A(i) => (1 <= i && i <= t.d, t.d.saturating_sub(1)),
        Leaf::T(j) => (1 <= j && j <= t.e, t.d),
    };
    if !in_range || d_after < t.family.min_d() {
        return Err(below);
    }
    let root = match prune(&t.root, drop) {
        Some(Sub::Node(n)) => n,
        _ => return Err(below),
    };
    let root = relabel(&root, drop);
    Ok(Tree::new(t.family, root)?)
}

/// Deletes boundary marking `i` and collapses unstable components.
pub fn forget_marking(t: &Tree, i: usize) -> Result<Tree, PolytopeError> {
    forget(t, Leaf::A(i))
}

/// Deletes seam marking `j` and collapses unstable components.
pub fn forget_seam(t: &Tree, j: usize) -> Result<Tree, PolytopeError> {
    if t.family != Family::Seam {
        return Err(PolytopeError::ForgetBelowMinimum { what: format!("t{j}"), d: t.d, e: t.e });
    }
    forget(t, Leaf::T(j))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioStratum {
    Zero,
    Finite,
    Infinite,
}

/// Where the ratio of seam radii lives on a stratum of the bimultiplihedron:
/// zero when the seams coincide, infinite when they have separated into
/// different components, finite otherwise.
pub fn ratio_stratum(t: &Tree) -> Option<RatioStratum> {
    if t.family != Family::Bicolored {
        return None;
    }
    Some(if t.is_fused() {
        RatioStratum::Zero
    } else if t.has_merged() {
        RatioStratum::Finite
    } else {
        RatioStratum::Infinite
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_expression;

    #[test]
    fn pentagon() {
        let p = build_face_poset(Family::Stable, 4, 0).unwrap();
        assert_eq!(p.f_vector(), vec![5, 5, 1]);
        assert!(p.euler_check());
        assert!(p.is_graded());
    }

    #[test]
    fn bimultiplihedron_facets() {
        let p = build_face_poset(Family::Bicolored, 2, 0).unwrap();
        assert_eq!(p.f_vector(), vec![5, 5, 1]);
        let fam = p.facet_families();
        assert_eq!(fam[&FacetTag::OnceQuiltedBubbles], 2);
        assert_eq!(fam[&FacetTag::UnquiltedBubble], 1);
        assert_eq!(fam[&FacetTag::BiquiltedBubbles], 1);
        assert_eq!(fam[&FacetTag::SeamsTogether], 1);
        assert!(p.is_graded());
    }

    #[test]
    fn forget_examples() {
        let t = parse_expression("((a1a2)a3)a4", Family::Stable).unwrap();
        assert_eq!(forget_marking(&t, 4).unwrap().to_expression(), "(a1a2)a3");
        let top = parse_expression("a1a2a3a4", Family::Stable).unwrap();
        for i in 1..=4 {
            assert_eq!(forget_marking(&top, i).unwrap().to_expression(), "a1a2a3");
        }
        let two = parse_expression("a1a2", Family::Stable).unwrap();
        assert!(forget_marking(&two, 1).is_err());
        let s = parse_expression("h(t1/a1)", Family::Seam).unwrap();
        assert_eq!(forget_seam(&s, 1).unwrap().to_expression(), "h(/a1)");
    }

    #[test]
    fn ratio_examples() {
        let s = |x| ratio_stratum(&parse_expression(x, Family::Bicolored).unwrap()).unwrap();
        assert_eq!(s("(h1h2)(a1,a2)"), RatioStratum::Zero);
        assert_eq!(s("h1(h2(a1,a2))"), RatioStratum::Infinite);
        assert_eq!(s("h1h2(a1,a2)"), RatioStratum::Finite);
    }

    #[test]
    fn pentagon_factors() {
        let f = |x| facet_factors(&parse_expression(x, Family::Bicolored).unwrap());
        assert_eq!(f("h1(h2(a1),h2(a2))").factors, ["R^{1,0}", "R^{1,0}", "R^{2,0}"]);
        let b = f("h1h2(a1)h1h2(a2)");
        assert_eq!(b.factors, ["R^{1,0,0}", "R^{1,0,0}", "R^{2}"]);
        assert_eq!(b.shared_ratio_constraints, 1);
        assert_eq!(f("(h1h2)(a1,a2)").factors, ["R^{2,0}"]);
        assert_eq!(f("h1h2(a1a2)").factors, ["R^{2}", "R^{1,0,0}"]);
        assert_eq!(f("h1(h2(a1,a2))").factors, ["R^{2,0}", "R^{1,0}"]);
    }
}
