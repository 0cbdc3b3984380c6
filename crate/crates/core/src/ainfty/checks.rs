use std::collections::BTreeMap;

use num::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instance::{add_scaled, apply, basis_vector, parse_ops, Chain, Coef, FunctorJson, Instance, Table, Vector};
use super::AinftyError;
use crate::signs::compositions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `(−1)^{n + |a_1| + … + |a_n|}` on the term with `μ^m` after `n` inputs.
    Shifted,
    /// `(−1)^{n + m(d−n−m) + m(|a_1| + … + |a_n|)}`.
    Unshifted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residual {
    pub inputs: Vec<String>,
    pub residual: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub identity: String,
    pub max_arity: usize,
    pub tuples_checked: usize,
    pub residuals: Vec<Residual>,
}

impl CheckReport {
    pub fn passes(&self) -> bool {
        self.residuals.is_empty()
    }

    pub fn first_failing_arity(&self) -> Option<usize> {
        self.residuals.iter().map(|r| if r.inputs.len() == 1 && r.inputs[0].starts_with('<') { 0 } else { r.inputs.len() }).min()
    }
}

pub(crate) fn sign(odd: i64) -> Coef {
    if odd.rem_euclid(2) == 0 {
        Coef::one()
    } else {
        -Coef::one()
    }
}

fn deg_sum(c: &Instance, elts: &[usize]) -> i64 {
    elts.iter().map(|&g| c.basis[g].deg).sum()
}

pub(crate) fn run_check<F>(c: &Instance, identity: &str, lengths: std::ops::RangeInclusive<usize>, residual: F) -> CheckReport
where
    F: Fn(&Chain) -> Vector + Sync,
{
    let max_arity = *lengths.end();
    let chains: Vec<Chain> = lengths.flat_map(|d| c.chains(d)).collect();
    let residuals: Vec<Residual> = chains
        .par_iter()
        .filter_map(|ch| {
            let r = residual(ch);
            (!r.is_empty()).then(|| Residual { inputs: c.chain_names(ch), residual: c.render(&r) })
        })
        .collect();
    CheckReport { identity: identity.to_string(), max_arity, tuples_checked: chains.len(), residuals }
}

/// `μ^{d−m+1}(a_1, …, a_n, μ^m(a_{n+1}, …), …)` with `m = 0` meaning the
/// curvature at the object between `a_n` and `a_{n+1}`.
fn nested(c: &Instance, ch: &Chain, n: usize, m: usize) -> Vector {
    let inner = if m == 0 {
        match c.curvature.get(&c.object_at(ch, n)) {
            Some(v) => v.clone(),
            None => return Vector::new(),
        }
    } else {
        match c.mu.get(&ch.elts[n..n + m]) {
            Some(v) => v.clone(),
            None => return Vector::new(),
        }
    };
    let mut args: Vec<Vector> = ch.elts[..n].iter().map(|&g| basis_vector(g)).collect();
    args.push(inner);
    args.extend(ch.elts[n + m..].iter().map(|&g| basis_vector(g)));
    apply(&c.mu, &args, c.ring)
}

/// Evaluates the associativity equations on every composable basis tuple of
/// length at most `dmax`, including the curvature terms.
pub fn check_ainfty(c: &Instance, dmax: usize, convention: SignConvention) -> Result<CheckReport, AinftyError> {
    c.validate()?;
    let curved = !c.is_flat();
    let lo = if curved { 0 } else { 1 };
    Ok(run_check(c, "ainfty", lo..=dmax, |ch| {
        let d = ch.elts.len();
        let mut total = Vector::new();
        for m in (if curved { 0 } else { 1 })..=d {
            for n in 0..=d - m {
                let v = nested(c, ch, n, m);
                if v.is_empty() {
                    continue;
                }
                let before = deg_sum(c, &ch.elts[..n]);
                let s = match convention {
                    SignConvention::Shifted => n as i64 + before,
                    SignConvention::Unshifted => (n + m * (d - n - m)) as i64 + m as i64 * before,
                };
                add_scaled(&mut total, &v, &sign(s), c.ring);
            }
        }
        total
    }))
}

/// Checks `μ^1 ∘ μ^1 = (w(X) − w(Y)) · Id` on every `Hom(X, Y)`.
pub fn check_curvature_floer(c: &Instance, w: &BTreeMap<usize, i64>) -> CheckReport {
    run_check(c, "curvature", 1..=1, |ch| {
        let g = ch.elts[0];
        let once = apply(&c.mu, &[basis_vector(g)], c.ring);
        let mut r = apply(&c.mu, &[once], c.ring);
        let b = &c.basis[g];
        let k = w.get(&b.src).copied().unwrap_or(0) - w.get(&b.dst).copied().unwrap_or(0);
        add_scaled(&mut r, &basis_vector(g), &-Coef::from_integer(k.into()), c.ring);
        r
    })
}

/// An A∞ functor: object map and `F^d` tables of degree `1 − d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functor {
    pub name: String,
    pub objects: Vec<usize>,
    pub table: Table,
}

impl Functor {
    pub fn from_json(j: &FunctorJson, src: &Instance, target: &Instance) -> Result<Functor, AinftyError> {
        let mut objects = vec![usize::MAX; src.objects.len()];
        for (a, b) in &j.objects {
            objects[src.object(a)?] = target.object(b)?;
        }
        if let Some(x) = objects.iter().position(|&o| o == usize::MAX) {
            return Err(AinftyError::Malformed(format!("functor {} does not map object {}", j.name, src.objects[x])));
        }
        let (table, zero) = parse_ops(src, target, &j.tables)?;
        if !zero.is_empty() {
            return Err(AinftyError::Malformed(format!("functor {} has a d=0 entry", j.name)));
        }
        let f = Functor { name: j.name.clone(), objects, table };
        f.validate(src, target)?;
        Ok(f)
    }

    pub fn to_json(&self, src: &Instance, target: &Instance) -> FunctorJson {
        FunctorJson {
            name: self.name.clone(),
            target: None,
            objects: self.objects.iter().enumerate().map(|(a, &b)| (src.objects[a].clone(), target.objects[b].clone())).collect(),
            tables: super::instance::zero_map_json(src, target, &self.table, &BTreeMap::new()),
        }
    }

    pub fn validate(&self, src: &Instance, target: &Instance) -> Result<(), AinftyError> {
        for (inputs, out) in &self.table {
            let ends = (self.objects[src.basis[inputs[0]].src], self.objects[src.basis[*inputs.last().expect("nonempty")].dst]);
            src.check_entry(&self.name, inputs, out, 1 - inputs.len() as i64, target, Some(ends))?;
        }
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.table.keys().map(|k| k.len()).max().unwrap_or(0)
    }

    pub fn on(&self, elts: &[usize]) -> Option<&Vector> {
        self.table.get(elts)
    }

    pub fn is_strict(&self) -> bool {
        self.table.iter().all(|(k, v)| k.len() == 1 || v.is_empty())
    }
}

pub fn identity_functor(c: &Instance) -> Functor {
    Functor {
        name: "id".into(),
        objects: (0..c.objects.len()).collect(),
        table: (0..c.basis.len()).map(|g| (vec![g], basis_vector(g))).collect(),
    }
}

/// `Σ_m Σ_{i_1+…+i_m = d} outer^m(inner^{i_1}(…), …)` on one chain.
pub(crate) fn compose_on(outer: &Table, inner: &Functor, elts: &[usize], ring: super::Ring) -> Vector {
    let mut total = Vector::new();
    'comp: for comp in compositions(elts.len()) {
        let mut args = Vec::with_capacity(comp.len());
        let mut at = 0;
        for &i in &comp {
            match inner.on(&elts[at..at + i]) {
                Some(v) if !v.is_empty() => args.push(v.clone()),
                _ => continue 'comp,
            }
            at += i;
        }
        add_scaled(&mut total, &apply(outer, &args, ring), &Coef::one(), ring);
    }
    total
}

fn require_flat(c: &Instance) -> Result<(), AinftyError> {
    if c.is_flat() {
        Ok(())
    } else {
        Err(AinftyError::Curved(c.name.clone()))
    }
}

/// Both sides of the functor axiom on every basis tuple of length ≤ `dmax`.
pub fn check_functor(f: &Functor, c0: &Instance, c1: &Instance, dmax: usize) -> Result<CheckReport, AinftyError> {
    require_flat(c0)?;
    require_flat(c1)?;
    if f.objects.len() != c0.objects.len() || f.objects.iter().any(|&o| o >= c1.objects.len()) {
        return Err(AinftyError::ObjectMap(format!("{} does not map the objects of {} into {}", f.name, c0.name, c1.name)));
    }
    f.validate(c0, c1)?;
    Ok(run_check(c0, "functor", 1..=dmax, |ch| {
        let elts = &ch.elts;
        let d = elts.len();
        let mut total = Vector::new();
        for j in 1..=d {
            for i in 0..=d - j {
                let Some(inner) = c0.mu.get(&elts[i..i + j]) else { continue };
                let mut args: Vec<Vector> = elts[..i].iter().map(|&g| basis_vector(g)).collect();
                args.push(inner.clone());
                args.extend(elts[i + j..].iter().map(|&g| basis_vector(g)));
                let v = apply(&f.table, &args, c1.ring);
                add_scaled(&mut total, &v, &sign(i as i64 + deg_sum(c0, &elts[..i])), c1.ring);
            }
        }
        add_scaled(&mut total, &compose_on(&c1.mu, f, elts, c1.ring), &-Coef::one(), c1.ring);
        total
    }))
}

/// `(F_1 ∘ F_2)^d = Σ F_1^m(F_2^{i_1}, …, F_2^{i_m})`; `F_2` is applied first.
pub fn compose_functors(f1: &Functor, f2: &Functor, c0: &Instance, c2: &Instance, dmax: usize) -> Functor {
    let objects = f2.objects.iter().map(|&o| f1.objects[o]).collect();
    let chains: Vec<Chain> = (1..=dmax).flat_map(|d| c0.chains(d)).collect();
    let table: Table = chains
        .par_iter()
        .filter_map(|ch| {
            let v = compose_on(&f1.table, f2, &ch.elts, c2.ring);
            (!v.is_empty()).then(|| (ch.elts.clone(), v))
        })
        .collect();
    Functor { name: format!("{}∘{}", f1.name, f2.name), objects, table }
}
