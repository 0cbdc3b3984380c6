//! Finite-set model of Lagrangian correspondences: relations between finite
//! sets with widths and opaque brane tags, their transposes, concatenation
//! and geometric composition.

use std::collections::BTreeSet;
use std::fmt;

use num::rational::BigRational;
use num::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ainfty::CoefJson;

pub type Width = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("space {0} has no elements")]
    EmptySpace(String),
    #[error("space {0} repeats an element")]
    DuplicateElement(String),
    #[error("unknown space {0}")]
    UnknownSpace(String),
    #[error("{0} is not an element of {1}")]
    UnknownElement(String, String),
    #[error("width {0} is not positive")]
    Width(String),
    #[error("correspondence {0} has no brane tag")]
    MissingBrane(String),
    #[error("endpoint mismatch: {0} vs {1}")]
    Endpoints(String, String),
    #[error("malformed relation data: {0}")]
    Malformed(String),
}

/// A finite set standing in for a symplectic background.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub label: String,
    pub elements: Vec<String>,
}

impl FiniteSpace {
    pub fn new(label: &str, elements: &[&str]) -> Result<FiniteSpace, RelationError> {
        let s = FiniteSpace { label: label.into(), elements: elements.iter().map(|e| e.to_string()).collect() };
        s.validate()?;
        Ok(s)
    }

    pub fn point() -> FiniteSpace {
        FiniteSpace { label: "pt".into(), elements: vec!["*".into()] }
    }

    /// `{0, …, n−1}` labelled `label`.
    pub fn range(label: &str, n: usize) -> FiniteSpace {
        FiniteSpace { label: label.into(), elements: (0..n).map(|i| i.to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index(&self, e: &str) -> Result<usize, RelationError> {
        self.elements.iter().position(|x| x == e).ok_or_else(|| RelationError::UnknownElement(e.into(), self.label.clone()))
    }

    fn validate(&self) -> Result<(), RelationError> {
        if self.elements.is_empty() {
            return Err(RelationError::EmptySpace(self.label.clone()));
        }
        if self.elements.iter().collect::<BTreeSet<_>>().len() != self.elements.len() {
            return Err(RelationError::DuplicateElement(self.label.clone()));
        }
        Ok(())
    }
}

/// A relation `R ⊆ [n_src] × [n_dst]` stored as one bitset row per source
/// element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    n_src: usize,
    n_dst: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n_src: usize, n_dst: usize) -> Relation {
        let words = n_dst.div_ceil(64).max(1);
        Relation { n_src, n_dst, words, bits: vec![0; n_src * words] }
    }

    pub fn diagonal(n: usize) -> Relation {
        Relation::from_pairs(n, n, (0..n).map(|i| (i, i)))
    }

    pub fn from_pairs(n_src: usize, n_dst: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        let mut r = Relation::empty(n_src, n_dst);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// Decodes bit `a·n_dst + b` of `mask` as the pair `(a, b)`.
    pub fn from_mask(n_src: usize, n_dst: usize, mask: u64) -> Relation {
        assert!(n_src * n_dst <= 64);
        Relation::from_pairs(n_src, n_dst, (0..n_src * n_dst).filter(|k| mask >> k & 1 == 1).map(|k| (k / n_dst, k % n_dst)))
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_dst(&self) -> usize {
        self.n_dst
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert!(a < self.n_src && b < self.n_dst, "pair ({a}, {b}) outside {}×{}", self.n_src, self.n_dst);
        self.bits[a * self.words + b / 64] |= 1 << (b % 64);
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a < self.n_src && b < self.n_dst && self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    fn row(&self, a: usize) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_src).flat_map(move |a| (0..self.n_dst).filter(move |&b| self.contains(a, b)).map(move |b| (a, b)))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> Relation {
        Relation::from_pairs(self.n_dst, self.n_src, self.pairs().map(|(a, b)| (b, a)))
    }

    /// `{(a, c) : ∃ b, (a, b) ∈ self, (b, c) ∈ other}`.
    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.n_dst, other.n_src, "relation sizes do not match");
        let mut out = Relation::empty(self.n_src, other.n_dst);
        for a in 0..self.n_src {
            for b in 0..self.n_dst {
                if self.contains(a, b) {
                    let (lo, row) = (a * out.words, other.row(b));
                    for (w, x) in out.bits[lo..lo + out.words].iter_mut().zip(row) {
                        *w |= x;
                    }
                }
            }
        }
        out
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n_src == other.n_src && self.n_dst == other.n_dst && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation{}x{}", self.n_src, self.n_dst)?;
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// A correspondence between two finite spaces with its strip width and an
/// opaque brane tag (grading and spin data are not modelled). The
/// admissibility tag is recorded but never checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub name: String,
    pub src: FiniteSpace,
    pub dst: FiniteSpace,
    pub relation: Relation,
    pub width: Width,
    pub brane: String,
    pub admissibility: Option<String>,
}

impl Correspondence {
    pub fn new(name: &str, src: FiniteSpace, dst: FiniteSpace, relation: Relation, width: Width, brane: &str) -> Result<Self, RelationError> {
        let c = Correspondence { name: name.into(), src, dst, relation, width, brane: brane.into(), admissibility: None };
        c.validate()?;
        Ok(c)
    }

    /// The diagonal of `m` with unit width.
    pub fn diagonal(m: &FiniteSpace) -> Correspondence {
        Correspondence {
            name: format!("Δ_{}", m.label),
            src: m.clone(),
            dst: m.clone(),
            relation: Relation::diagonal(m.len()),
            width: Width::from_integer(1.into()),
            brane: "diagonal".into(),
            admissibility: None,
        }
    }

    pub fn validate(&self) -> Result<(), RelationError> {
        self.src.validate()?;
        self.dst.validate()?;
        if self.relation.n_src() != self.src.len() || self.relation.n_dst() != self.dst.len() {
            return Err(RelationError::Malformed(format!("{}: relation size does not match its spaces", self.name)));
        }
        if !self.width.is_positive() {
            return Err(RelationError::Width(self.width.to_string()));
        }
        if self.brane.trim().is_empty() {
            return Err(RelationError::MissingBrane(self.name.clone()));
        }
        Ok(())
    }

    pub fn transpose(&self) -> Correspondence {
        Correspondence {
            name: self.name.strip_suffix('ᵀ').map_or_else(|| format!("{}ᵀ", self.name), str::to_string),
            src: self.dst.clone(),
            dst: self.src.clone(),
            relation: self.relation.transpose(),
            width: self.width.clone(),
            brane: self.brane.clone(),
            admissibility: self.admissibility.clone(),
        }
    }

    pub fn pair_names(&self) -> Vec<(String, String)> {
        self.relation.pairs().map(|(a, b)| (self.src.elements[a].clone(), self.dst.elements[b].clone())).collect()
    }
}

pub fn transpose(l: &Correspondence) -> Correspondence {
    l.transpose()
}

/// The fiber product `L_01 ×_{M_1} L_12`, its projection to `M_0 × M_2`,
/// and whether that projection is injective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeometricComposition {
    pub relation: Correspondence,
    pub embedded: bool,
    pub fiber_product_size: usize,
    pub fiber_product: Vec<(usize, usize, usize)>,
}

pub fn geometric_compose(l01: &Correspondence, l12: &Correspondence) -> Result<GeometricComposition, RelationError> {
    if l01.dst != l12.src {
        return Err(RelationError::Endpoints(l01.dst.label.clone(), l12.src.label.clone()));
    }
    let fiber: Vec<(usize, usize, usize)> = l01
        .relation
        .pairs()
        .flat_map(|(x, y)| (0..l12.dst.len()).filter(move |&z| l12.relation.contains(y, z)).map(move |z| (x, y, z)))
        .collect();
    let image: BTreeSet<(usize, usize)> = fiber.iter().map(|&(x, _, z)| (x, z)).collect();
    let relation = Relation::from_pairs(l01.src.len(), l12.dst.len(), image.iter().copied());
    debug_assert_eq!(relation, l01.relation.compose(&l12.relation));
    Ok(GeometricComposition {
        relation: Correspondence {
            name: format!("{}∘{}", l01.name, l12.name),
            src: l01.src.clone(),
            dst: l12.dst.clone(),
            relation,
            width: l01.width.clone(),
            brane: format!("{}∘{}", l01.brane, l12.brane),
            admissibility: None,
        },
        embedded: image.len() == fiber.len(),
        fiber_product_size: fiber.len(),
        fiber_product: fiber,
    })
}

/// A sequence of correspondences `N_0 → N_1 → … → N_r` with the widths
/// `δ_1, …, δ_{r−1}` of the strips between consecutive entries. The empty
/// sequence runs from a space to itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedCorrespondence {
    pub source: FiniteSpace,
    pub target: FiniteSpace,
    pub entries: Vec<Correspondence>,
    pub widths: Vec<Width>,
}

impl GeneralizedCorrespondence {
    pub fn empty(m: &FiniteSpace) -> Self {
        GeneralizedCorrespondence { source: m.clone(), target: m.clone(), entries: Vec::new(), widths: Vec::new() }
    }

    pub fn single(l: &Correspondence) -> Self {
        GeneralizedCorrespondence { source: l.src.clone(), target: l.dst.clone(), entries: vec![l.clone()], widths: Vec::new() }
    }

    pub fn new(source: FiniteSpace, entries: Vec<Correspondence>, widths: Vec<Width>) -> Result<Self, RelationError> {
        let target = entries.last().map_or_else(|| source.clone(), |l| l.dst.clone());
        let g = GeneralizedCorrespondence { source, target, entries, widths };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), RelationError> {
        let mut at = &self.source;
        for l in &self.entries {
            l.validate()?;
            if &l.src != at {
                return Err(RelationError::Endpoints(at.label.clone(), l.src.label.clone()));
            }
            at = &l.dst;
        }
        if at != &self.target {
            return Err(RelationError::Endpoints(at.label.clone(), self.target.label.clone()));
        }
        if self.widths.len() != self.entries.len().saturating_sub(1) {
            return Err(RelationError::Malformed(format!("{} entries need {} widths", self.entries.len(), self.entries.len().saturating_sub(1))));
        }
        if let Some(w) = self.widths.iter().find(|w| !w.is_positive()) {
            return Err(RelationError::Width(w.to_string()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Composite of the entries as relations; the diagonal when empty.
    pub fn total_relation(&self) -> Relation {
        self.entries.iter().fold(Relation::diagonal(self.source.len()), |acc, l| acc.compose(&l.relation))
    }

    /// Replaces entries `j, j+1` by their geometric composition when it is
    /// embedded.
    pub fn compose_adjacent(&self, j: usize) -> Result<Option<Self>, RelationError> {
        if j + 1 >= self.entries.len() {
            return Err(RelationError::Malformed(format!("no entries {j}, {}", j + 1)));
        }
        let c = geometric_compose(&self.entries[j], &self.entries[j + 1])?;
        if !c.embedded {
            return Ok(None);
        }
        let mut entries = self.entries.clone();
        entries.splice(j..j + 2, [c.relation]);
        let mut widths = self.widths.clone();
        widths.remove(j);
        Ok(Some(GeneralizedCorrespondence { entries, widths, ..self.clone() }))
    }
}

/// `L⁺ ♯_ε L⁻`: the entries of both with `ε` inserted between them. An empty
/// side contributes nothing, so no width is inserted.
pub fn concatenate(plus: &GeneralizedCorrespondence, minus: &GeneralizedCorrespondence, eps: &Width) -> Result<GeneralizedCorrespondence, RelationError> {
    if plus.target != minus.source {
        return Err(RelationError::Endpoints(plus.target.label.clone(), minus.source.label.clone()));
    }
    if !eps.is_positive() {
        return Err(RelationError::Width(eps.to_string()));
    }
    let mut entries = plus.entries.clone();
    entries.extend(minus.entries.iter().cloned());
    let mut widths = plus.widths.clone();
    if !plus.is_empty() && !minus.is_empty() {
        widths.push(eps.clone());
    }
    widths.extend(minus.widths.iter().cloned());
    Ok(GeneralizedCorrespondence { source: plus.source.clone(), target: minus.target.clone(), entries, widths })
}

/// `Φ(L_01)` on objects: appends `L_01` to a brane ending at its source,
/// separated by the width of `L_01`.
pub fn phi_on_objects(l01: &Correspondence, brane: &GeneralizedCorrespondence) -> Result<GeneralizedCorrespondence, RelationError> {
    concatenate(brane, &GeneralizedCorrespondence::single(l01), &l01.width)
}

/// `Φ(L, δ_0)` on objects for a generalized correspondence `L`.
pub fn phi_generalized(l: &GeneralizedCorrespondence, delta0: &Width, brane: &GeneralizedCorrespondence) -> Result<GeneralizedCorrespondence, RelationError> {
    concatenate(brane, l, delta0)
}

/// Outcome of [`associativity_exhaustive`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociativityReport {
    pub shapes: usize,
    pub triples: u64,
    pub failures: Vec<String>,
}

fn mask_of(r: &Relation) -> u64 {
    r.pairs().map(|(a, b)| 1u64 << (a * r.n_dst() + b)).sum()
}

/// Every composite `x ∘ y` for `x ⊆ a × b` and `y ⊆ b × c`, indexed by
/// `x · 2^{bc} + y`, as masks.
fn composite_table(a: usize, b: usize, c: usize) -> Vec<u64> {
    use rayon::prelude::*;
    let (nx, ny) = (1u64 << (a * b), 1u64 << (b * c));
    (0..nx)
        .into_par_iter()
        .flat_map_iter(|x| {
            let rx = Relation::from_mask(a, b, x);
            (0..ny).map(move |y| mask_of(&rx.compose(&Relation::from_mask(b, c, y))))
        })
        .collect()
}

/// Checks `(x∘y)∘z = x∘(y∘z)` for every triple of relations between spaces
/// of sizes `n_0, …, n_3 ≤ max_elems`, skipping shapes with more than
/// `2^max_exp` triples or a composite table above `2^20` entries.
pub fn associativity_exhaustive(max_elems: usize, max_exp: usize) -> AssociativityReport {
    use rayon::prelude::*;
    let mut rep = AssociativityReport::default();
    let sizes = 1..=max_elems;
    for n0 in sizes.clone() {
        for n1 in sizes.clone() {
            for n2 in sizes.clone() {
                for n3 in sizes.clone() {
                    let (e01, e12, e23) = (n0 * n1, n1 * n2, n2 * n3);
                    let tables = [e01 + e12, e12 + e23, n0 * n2 + e23, e01 + n1 * n3];
                    if e01 + e12 + e23 > max_exp || tables.iter().any(|&t| t > 20) {
                        continue;
                    }
                    let t012 = composite_table(n0, n1, n2);
                    let t123 = composite_table(n1, n2, n3);
                    let t023 = composite_table(n0, n2, n3);
                    let t013 = composite_table(n0, n1, n3);
                    let failures: Vec<String> = (0..1u64 << e01)
                        .into_par_iter()
                        .flat_map_iter(|x| {
                            let (t012, t123, t023, t013) = (&t012, &t123, &t023, &t013);
                            (0..1u64 << e12).flat_map(move |y| {
                                let xy = t012[((x << e12) | y) as usize];
                                (0..1u64 << e23).filter_map(move |z| {
                                    let yz = t123[((y << e23) | z) as usize];
                                    (t023[((xy << e23) | z) as usize] != t013[((x << (n1 * n3)) | yz) as usize])
                                        .then(|| format!("sizes {n0},{n1},{n2},{n3}: masks {x} {y} {z}"))
                                })
                            })
                        })
                        .collect();
                    rep.failures.extend(failures);
                    rep.shapes += 1;
                    rep.triples += 1 << (e01 + e12 + e23);
                }
            }
        }
    }
    rep
}

// JSON

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceJson {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub src: String,
    pub dst: String,
    pub pairs: Vec<(String, String)>,
    pub width: CoefJson,
    pub brane: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationsJson {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub spaces: Vec<FiniteSpace>,
    pub correspondences: Vec<CorrespondenceJson>,
}

impl RelationsJson {
    pub fn parse(&self) -> Result<(Vec<FiniteSpace>, Vec<Correspondence>), RelationError> {
        for s in &self.spaces {
            s.validate()?;
        }
        let space = |l: &str| self.spaces.iter().find(|s| s.label == l).cloned().ok_or_else(|| RelationError::UnknownSpace(l.into()));
        let mut out = Vec::new();
        for (k, c) in self.correspondences.iter().enumerate() {
            let (src, dst) = (space(&c.src)?, space(&c.dst)?);
            let mut r = Relation::empty(src.len(), dst.len());
            for (a, b) in &c.pairs {
                r.insert(src.index(a)?, dst.index(b)?);
            }
            let width = c.width.parse().map_err(|e| RelationError::Malformed(e.to_string()))?;
            let name = if c.name.is_empty() { format!("L{k}") } else { c.name.clone() };
            let mut l = Correspondence::new(&name, src, dst, r, width, &c.brane)?;
            l.admissibility = c.admissibility.clone();
            out.push(l);
        }
        Ok((self.spaces.clone(), out))
    }

    pub fn from_parts(spaces: &[FiniteSpace], corrs: &[Correspondence]) -> RelationsJson {
        RelationsJson {
            description: String::new(),
            spaces: spaces.to_vec(),
            correspondences: corrs
                .iter()
                .map(|c| CorrespondenceJson {
                    name: c.name.clone(),
                    src: c.src.label.clone(),
                    dst: c.dst.label.clone(),
                    pairs: c.pair_names(),
                    width: CoefJson::from(&c.width),
                    brane: c.brane.clone(),
                    admissibility: c.admissibility.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(k: i64) -> Width {
        Width::from_integer(k.into())
    }

    #[test]
    fn two_point_fiber() {
        let m0 = FiniteSpace::new("M0", &["p"]).unwrap();
        let m1 = FiniteSpace::new("M1", &["x", "y"]).unwrap();
        let m2 = FiniteSpace::new("M2", &["q"]).unwrap();
        let l01 = Correspondence::new("L01", m0, m1.clone(), Relation::from_pairs(1, 2, [(0, 0), (0, 1)]), w(1), "b").unwrap();
        let l12 = Correspondence::new("L12", m1, m2, Relation::from_pairs(2, 1, [(0, 0), (1, 0)]), w(1), "b").unwrap();
        let c = geometric_compose(&l01, &l12).unwrap();
        assert_eq!(c.relation.pair_names(), vec![("p".to_string(), "q".to_string())]);
        assert!(!c.embedded);
        assert_eq!(c.fiber_product_size, 2);
    }

    #[test]
    fn validation() {
        assert!(FiniteSpace::new("E", &[]).is_err());
        assert!(FiniteSpace::new("D", &["a", "a"]).is_err());
        let m = FiniteSpace::range("M", 2);
        assert!(Correspondence::new("L", m.clone(), m.clone(), Relation::diagonal(2), w(0), "b").is_err());
        assert!(Correspondence::new("L", m.clone(), m.clone(), Relation::diagonal(2), w(1), " ").is_err());
        let n = FiniteSpace::range("N", 3);
        let l = Correspondence::new("L", m.clone(), n, Relation::empty(2, 3), w(1), "b").unwrap();
        assert!(geometric_compose(&l, &l).is_err());
        assert!(GeneralizedCorrespondence::new(m, vec![l.clone(), l], vec![w(1)]).is_err());
    }

    #[test]
    fn wide_relations_use_several_words() {
        let r = Relation::from_pairs(2, 130, [(0, 0), (0, 129), (1, 64)]);
        assert_eq!(r.len(), 3);
        assert_eq!(r.transpose().transpose(), r);
        let d = Relation::diagonal(130);
        assert_eq!(r.compose(&d), r);
    }
}
