use std::collections::BTreeMap;

use num::{One, Zero};

use super::checks::Functor;
use super::instance::{apply, Coef, Instance, Ring, Vector};
use super::AinftyError;

type Matrix = Vec<Vec<Coef>>;

/// Cohomology of one `Hom(X, Y)`: representatives of a basis of
/// `ker μ^1 / im μ^1`, and a basis of the boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct HomCohomology {
    pub src: usize,
    pub dst: usize,
    pub ids: Vec<usize>,
    pub cycles: usize,
    pub boundaries: Vec<Vec<Coef>>,
    pub reps: Vec<Vec<Coef>>,
}

impl HomCohomology {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyFunctor {
    pub name: String,
    pub objects: Vec<usize>,
    pub source: Vec<HomCohomology>,
    pub target: Vec<HomCohomology>,
    /// `H(F)` on `H(X, Y)` as a `dim H(FX, FY) × dim H(X, Y)` matrix.
    pub maps: BTreeMap<(usize, usize), Matrix>,
    /// `F^1` maps cycles to cycles and boundaries to boundaries.
    pub well_defined: bool,
}

fn norm(ring: Ring, c: Coef) -> Coef {
    ring.normalize(c)
}

/// Row reduction in place; returns pivot columns.
fn rref(m: &mut Matrix, ring: Ring) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = Coef::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x = norm(ring, &*x * &inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pivot = m[r].clone();
                for (x, p) in m[i].iter_mut().zip(&pivot) {
                    *x = norm(ring, &*x - &f * p);
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

fn rank(vectors: &[Vec<Coef>], ring: Ring) -> usize {
    let mut m = vectors.to_vec();
    rref(&mut m, ring).len()
}

/// Coefficients expressing `rhs` in the span of `cols`, if it lies there.
fn solve(cols: &[Vec<Coef>], rhs: &[Coef], ring: Ring) -> Option<Vec<Coef>> {
    let n = rhs.len();
    let k = cols.len();
    let mut m: Matrix = (0..n).map(|i| cols.iter().map(|c| c[i].clone()).chain(std::iter::once(rhs[i].clone())).collect()).collect();
    let pivots = rref(&mut m, ring);
    if pivots.contains(&k) {
        return None;
    }
    let mut x = vec![Coef::zero(); k];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = m[row][k].clone();
    }
    Some(x)
}

fn coords(ids: &[usize], v: &Vector) -> Vec<Coef> {
    ids.iter().map(|g| v.get(g).cloned().unwrap_or_else(Coef::zero)).collect()
}

fn vector(ids: &[usize], x: &[Coef]) -> Vector {
    ids.iter().zip(x).filter(|(_, c)| !c.is_zero()).map(|(&g, c)| (g, c.clone())).collect()
}

fn hom_cohomology(c: &Instance, x: usize, y: usize) -> HomCohomology {
    let ids = c.hom(x, y);
    let n = ids.len();
    let images: Vec<Vec<Coef>> = ids.iter().map(|&g| coords(&ids, &apply(&c.mu, &[super::basis_vector(g)], c.ring))).collect();
    // Null space of the differential: rows of the transpose of `images`.
    let mut a: Matrix = (0..n).map(|i| images.iter().map(|col| col[i].clone()).collect()).collect();
    let pivots = rref(&mut a, c.ring);
    let free: Vec<usize> = (0..n).filter(|j| !pivots.contains(j)).collect();
    let cycles: Vec<Vec<Coef>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![Coef::zero(); n];
            v[f] = Coef::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = norm(c.ring, -a[row][f].clone());
            }
            v
        })
        .collect();
    let mut boundaries = Vec::new();
    for im in &images {
        let mut with = boundaries.clone();
        with.push(im.clone());
        if rank(&with, c.ring) > boundaries.len() {
            boundaries = with;
        }
    }
    let mut reps = Vec::new();
    let mut span = boundaries.clone();
    for z in &cycles {
        let mut with = span.clone();
        with.push(z.clone());
        if rank(&with, c.ring) > span.len() {
            span = with;
            reps.push(z.clone());
        }
    }
    HomCohomology { src: x, dst: y, ids, cycles: cycles.len(), boundaries, reps }
}

fn all_homs(c: &Instance) -> Vec<HomCohomology> {
    let k = c.objects.len();
    (0..k).flat_map(|x| (0..k).map(move |y| (x, y))).map(|(x, y)| hom_cohomology(c, x, y)).collect()
}

/// The induced functor on cohomology, `H(F)([a]) = [F^1(a)]`.
pub fn cohomology_functor(f: &Functor, c0: &Instance, c1: &Instance) -> Result<CohomologyFunctor, AinftyError> {
    for c in [c0, c1] {
        if !c.ring.is_field() {
            return Err(AinftyError::NotField);
        }
        if !c.is_flat() {
            return Err(AinftyError::Curved(c.name.clone()));
        }
    }
    let source = all_homs(c0);
    let target = all_homs(c1);
    let k1 = c1.objects.len();
    let ring = c1.ring;
    let mut maps = BTreeMap::new();
    let mut well_defined = true;
    for h in &source {
        let t = &target[f.objects[h.src] * k1 + f.objects[h.dst]];
        let push = |x: &[Coef]| coords(&t.ids, &apply(&f.table, &[vector(&h.ids, x)], ring));
        for b in &h.boundaries {
            well_defined &= solve(&t.boundaries, &push(b), ring).is_some();
        }
        let mut basis = t.reps.clone();
        basis.extend(t.boundaries.iter().cloned());
        let mut m: Matrix = vec![vec![Coef::zero(); h.dim()]; t.dim()];
        for (j, r) in h.reps.iter().enumerate() {
            let image = push(r);
            let closed = apply(&c1.mu, &[vector(&t.ids, &image)], ring).is_empty();
            match solve(&basis, &image, ring).filter(|_| closed) {
                Some(x) => {
                    for i in 0..t.dim() {
                        m[i][j] = x[i].clone();
                    }
                }
                None => well_defined = false,
            }
        }
        maps.insert((h.src, h.dst), m);
    }
    Ok(CohomologyFunctor { name: format!("H({})", f.name), objects: f.objects.clone(), source, target, maps, well_defined })
}

impl CohomologyFunctor {
    /// Matrices of `outer ∘ self` on each `H(X, Y)`.
    pub fn then(&self, outer: &CohomologyFunctor, ring: Ring) -> BTreeMap<(usize, usize), Matrix> {
        self.maps
            .iter()
            .map(|(&(x, y), inner)| {
                let o = &outer.maps[&(self.objects[x], self.objects[y])];
                let cols = inner.first().map_or(0, |r| r.len());
                let rows = o.len();
                let mut m = vec![vec![Coef::zero(); cols]; rows];
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, e) in row.iter_mut().enumerate() {
                        let s: Coef = (0..inner.len()).map(|k| &o[i][k] * &inner[k][j]).fold(Coef::zero(), |a, b| a + b);
                        *e = ring.normalize(s);
                    }
                }
                ((x, y), m)
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.maps.values().all(|m| m.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, e)| *e == if i == j { Coef::one() } else { Coef::zero() })))
    }

    pub fn dims(&self) -> BTreeMap<(usize, usize), usize> {
        self.source.iter().map(|h| ((h.src, h.dst), h.dim())).collect()
    }
}
