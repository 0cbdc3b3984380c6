use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::polytopes::{build_face_poset, FacetTag, PolytopeError};
use crate::signs::compositions;
use crate::trees::{Family, Leaf, Node, Sub, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    Assoc,
    Functor,
    PrenatMu1,
    Homotopy,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Identity::Assoc, Identity::Functor, Identity::PrenatMu1, Identity::Homotopy];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Assoc => "assoc",
            Identity::Functor => "functor",
            Identity::PrenatMu1 => "prenat-mu1",
            Identity::Homotopy => "homotopy",
        }
    }

    /// Polytope family and seam count matched against.
    pub fn polytope(self, e: usize) -> (Family, usize) {
        match self {
            Identity::Assoc => (Family::Stable, 0),
            Identity::Functor => (Family::Colored, 0),
            Identity::PrenatMu1 => (Family::Seam, e),
            Identity::Homotopy => (Family::Bicolored, 0),
        }
    }
}

impl FromStr for Identity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Identity::ALL.into_iter().find(|i| i.name() == s).ok_or_else(|| format!("unknown identity {s}"))
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Operation symbols appearing in the identities. In the homotopy identity
/// `F1 ∘ F2` is the composite (with `F2` applied first) and `Sharp` the
/// functor it is homotopic to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Mu,
    F,
    F1,
    F2,
    T,
    Sharp,
}

impl Op {
    fn symbol(self) -> &'static str {
        match self {
            Op::Mu => "mu",
            Op::F => "F",
            Op::F1 => "F1",
            Op::F2 => "F2",
            Op::T => "T",
            Op::Sharp => "Fsharp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermArg {
    Input,
    Apply(Op, usize),
}

/// One term of an identity up to the names of its inputs: an outer operation
/// applied to a row of inputs and inner operations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermShape {
    pub outer: Op,
    pub args: Vec<TermArg>,
}

impl TermShape {
    fn new(outer: Op, args: Vec<TermArg>) -> Self {
        TermShape { outer, args }
    }
}

impl fmt::Display for TermShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        let mut next = |f: &mut fmt::Formatter<'_>| {
            i += 1;
            write!(f, "a{i}")
        };
        write!(f, "{}^{}(", self.outer.symbol(), self.args.len())?;
        for (k, a) in self.args.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            match a {
                TermArg::Input => next(f)?,
                TermArg::Apply(op, n) => {
                    write!(f, "{}^{}(", op.symbol(), n)?;
                    for j in 0..*n {
                        if j > 0 {
                            f.write_str(", ")?;
                        }
                        next(f)?;
                    }
                    f.write_str(")")?;
                }
            }
        }
        f.write_str(")")
    }
}

fn inputs(n: usize) -> impl Iterator<Item = TermArg> {
    std::iter::repeat_n(TermArg::Input, n)
}

fn nested(outer: Op, d: usize, i: usize, inner: Op, j: usize) -> TermShape {
    TermShape::new(outer, inputs(i).chain([TermArg::Apply(inner, j)]).chain(inputs(d - i - j)).collect())
}

fn blocks(outer: Op, inner: Op, comp: &[usize]) -> TermShape {
    TermShape::new(outer, comp.iter().map(|&i| TermArg::Apply(inner, i)).collect())
}

/// A term with the reason it has no facet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedTerm {
    pub term: String,
    pub reason: String,
}

/// The terms of an identity in arity `d`, split into those that label
/// facets and those that label breakings of strips (`μ^1` factors).
fn identity_terms(id: Identity, d: usize) -> (Vec<(TermShape, FacetTag)>, Vec<ExcludedTerm>) {
    use FacetTag::*;
    let mut terms = Vec::new();
    let mut excluded = Vec::new();
    let mut exclude = |t: TermShape, why: &str| excluded.push(ExcludedTerm { term: t.to_string(), reason: why.into() });
    match id {
        Identity::Assoc => {
            for m in 1..=d {
                for n in 0..=d - m {
                    let t = nested(Op::Mu, d, n, Op::Mu, m);
                    if m == 1 {
                        exclude(t, "inner mu^1");
                    } else if m == d {
                        exclude(t, "outer mu^1");
                    } else {
                        terms.push((t, TwoVertex));
                    }
                }
            }
        }
        Identity::Functor => {
            for j in 1..=d {
                for i in 0..=d - j {
                    let t = nested(Op::F, d, i, Op::Mu, j);
                    if j == 1 {
                        exclude(t, "inner mu^1");
                    } else {
                        terms.push((t, UnquiltedBubble));
                    }
                }
            }
            for comp in compositions(d) {
                let t = blocks(Op::Mu, Op::F, &comp);
                if comp.len() == 1 {
                    exclude(t, "outer mu^1");
                } else {
                    terms.push((t, QuiltedBubbles));
                }
            }
        }
        Identity::PrenatMu1 => {
            for e in 1..=d {
                for i in 0..=d - e {
                    let t = nested(Op::T, d, i, Op::Mu, e);
                    if e == 1 {
                        exclude(t, "inner mu^1");
                    } else {
                        terms.push((t, BoundaryParenthesis));
                    }
                }
            }
            for len in 0..=d {
                for s in 0..=d - len {
                    for left in compositions(s) {
                        for right in compositions(d - s - len) {
                            let args: Vec<TermArg> = left
                                .iter()
                                .map(|&i| TermArg::Apply(Op::F1, i))
                                .chain([TermArg::Apply(Op::T, len)])
                                .chain(right.iter().map(|&i| TermArg::Apply(Op::F2, i)))
                                .collect();
                            let t = TermShape::new(Op::Mu, args);
                            if t.args.len() == 1 {
                                exclude(t, "outer mu^1");
                            } else {
                                terms.push((t, HProduct));
                            }
                        }
                    }
                }
            }
        }
        Identity::Homotopy => {
            for comp in compositions(d) {
                terms.push((blocks(Op::F1, Op::F2, &comp), OnceQuiltedBubbles));
            }
            terms.push((TermShape::new(Op::Sharp, inputs(d).collect()), SeamsTogether));
            for e in 1..=d {
                for i in 0..=d - e {
                    let t = nested(Op::T, d, i, Op::Mu, e);
                    if e == 1 {
                        exclude(t, "inner mu^1");
                    } else {
                        terms.push((t, UnquiltedBubble));
                    }
                }
            }
            for comp in compositions(d) {
                let t = blocks(Op::Mu, Op::T, &comp);
                if comp.len() == 1 {
                    exclude(t, "outer mu^1");
                } else {
                    terms.push((t, BiquiltedBubbles));
                }
            }
        }
    }
    (terms, excluded)
}

fn a_leaves(n: &Node) -> usize {
    n.children
        .iter()
        .map(|c| match c {
            Sub::Leaf(Leaf::A(_)) => 1,
            Sub::Leaf(Leaf::T(_)) => 0,
            Sub::Node(m) => a_leaves(m),
        })
        .sum()
}

fn has_seam_leaf(n: &Node) -> bool {
    n.children.iter().any(|c| matches!(c, Sub::Leaf(Leaf::T(_))))
}

/// Reads the term a facet stands for off its two-level shape.
fn facet_term(t: &Tree, tag: FacetTag) -> Option<TermShape> {
    use FacetTag::*;
    let root = &t.root;
    let arg = |inner_of: &dyn Fn(&Node) -> Op| -> Vec<TermArg> {
        root.children
            .iter()
            .filter_map(|c| match c {
                Sub::Leaf(Leaf::A(_)) => Some(TermArg::Input),
                Sub::Leaf(Leaf::T(_)) => None,
                Sub::Node(n) => Some(TermArg::Apply(inner_of(n), a_leaves(n))),
            })
            .collect()
    };
    let shape = match tag {
        TwoVertex => TermShape::new(Op::Mu, arg(&|_| Op::Mu)),
        UnquiltedBubble if t.family == Family::Colored => TermShape::new(Op::F, arg(&|_| Op::Mu)),
        UnquiltedBubble => TermShape::new(Op::T, arg(&|_| Op::Mu)),
        QuiltedBubbles => TermShape::new(Op::Mu, arg(&|_| Op::F)),
        BoundaryParenthesis => TermShape::new(Op::T, arg(&|_| Op::Mu)),
        SeamParenthesis => return None,
        HProduct => {
            let seam_at = root.children.iter().position(|c| matches!(c, Sub::Node(n) if has_seam_leaf(n)))?;
            let args = root
                .children
                .iter()
                .enumerate()
                .map(|(k, c)| match c {
                    Sub::Node(n) => {
                        let op = if k == seam_at {
                            Op::T
                        } else if k < seam_at {
                            Op::F1
                        } else {
                            Op::F2
                        };
                        Some(TermArg::Apply(op, a_leaves(n)))
                    }
                    Sub::Leaf(_) => None,
                })
                .collect::<Option<Vec<_>>>()?;
            TermShape::new(Op::Mu, args)
        }
        OnceQuiltedBubbles => TermShape::new(Op::F1, arg(&|_| Op::F2)),
        BiquiltedBubbles => TermShape::new(Op::Mu, arg(&|_| Op::T)),
        SeamsTogether => TermShape::new(Op::Sharp, arg(&|_| Op::Mu)),
    };
    Some(shape)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedTerm {
    pub term: String,
    pub facet: String,
    pub tag: FacetTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermFacetReport {
    pub identity: Identity,
    pub d: usize,
    pub e: usize,
    pub facets: usize,
    pub terms: usize,
    pub matched: Vec<MatchedTerm>,
    pub unmatched_terms: Vec<String>,
    pub unmatched_facets: Vec<String>,
    /// Terms with a `μ^1` factor, which label strip breaking rather than facets.
    pub excluded: Vec<ExcludedTerm>,
}

impl TermFacetReport {
    pub fn closes(&self) -> bool {
        self.unmatched_terms.is_empty() && self.unmatched_facets.is_empty() && self.facets == self.terms
    }

    pub fn counts_by_tag(&self) -> BTreeMap<FacetTag, usize> {
        let mut m = BTreeMap::new();
        for x in &self.matched {
            *m.entry(x.tag).or_insert(0) += 1;
        }
        m
    }
}

/// Matches the facet-labelling terms of an identity in arity `d` against the
/// tagged facets of its polytope. Terms and facets are compared by shape and
/// facet family, with multiplicity.
pub fn term_facet_correspondence(id: Identity, d: usize, e: usize) -> Result<TermFacetReport, PolytopeError> {
    let (family, e) = id.polytope(e);
    let poset = build_face_poset(family, d, e)?;
    let (terms, excluded) = identity_terms(id, d);
    let mut pool: BTreeMap<(TermShape, FacetTag), Vec<String>> = BTreeMap::new();
    let mut unmatched_facets = Vec::new();
    let mut facets = 0;
    for face in &poset.faces {
        let Some(tag) = face.facet_tag else { continue };
        facets += 1;
        match facet_term(&face.tree, tag) {
            Some(shape) => pool.entry((shape, tag)).or_default().push(face.tree.to_expression()),
            None => unmatched_facets.push(format!("{} [{}]", face.tree.to_expression(), tag)),
        }
    }
    let mut matched = Vec::new();
    let mut unmatched_terms = Vec::new();
    for (shape, tag) in &terms {
        match pool.get_mut(&(shape.clone(), *tag)).and_then(|v| v.pop()) {
            Some(facet) => matched.push(MatchedTerm { term: shape.to_string(), facet, tag: *tag }),
            None => unmatched_terms.push(format!("{shape} [{tag}]")),
        }
    }
    for ((shape, tag), rest) in pool {
        unmatched_facets.extend(rest.into_iter().map(|f| format!("{f} [{tag}] as {shape}")));
    }
    Ok(TermFacetReport { identity: id, d, e, facets, terms: terms.len(), matched, unmatched_terms, unmatched_facets, excluded })
}
