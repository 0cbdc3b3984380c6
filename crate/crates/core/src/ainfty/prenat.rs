use std::collections::BTreeMap;

use num::One;
use rayon::prelude::*;

use super::checks::{run_check, sign, CheckReport, Functor};
use super::instance::{add_scaled, apply, basis_vector, parse_ops, Chain, Coef, Instance, PreNatJson, Ring, Table, Vector};
use super::AinftyError;
use crate::signs::compositions;

/// A pre-natural transformation between two functors `C_0 → C_1`. `T^d`
/// has degree `degree − d`; `T^0` is stored per object of `C_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PreNat {
    pub name: String,
    pub source: String,
    pub target: String,
    pub degree: i64,
    pub zero: BTreeMap<usize, Vector>,
    pub table: Table,
    /// Arity up to which the tables are defined.
    pub bound: usize,
}

impl PreNat {
    pub fn zero_of(name: &str, f1: &Functor, f2: &Functor, degree: i64, bound: usize) -> PreNat {
        PreNat {
            name: name.into(),
            source: f1.name.clone(),
            target: f2.name.clone(),
            degree,
            zero: BTreeMap::new(),
            table: Table::new(),
            bound,
        }
    }

    pub fn from_json(j: &PreNatJson, c0: &Instance, c1: &Instance, bound: usize) -> Result<PreNat, AinftyError> {
        let (table, zero) = parse_ops(c0, c1, &j.tables)?;
        Ok(PreNat {
            name: j.name.clone(),
            source: j.source_functor.clone(),
            target: j.target_functor.clone(),
            degree: j.degree,
            zero,
            table,
            bound,
        })
    }

    /// Shifted degree: `|T| − 1`, so homotopies sit in degree −1.
    pub fn shifted_degree(&self) -> i64 {
        self.degree - 1
    }

    pub fn on(&self, c: &Instance, ch: &Chain, from: usize, len: usize) -> Option<&Vector> {
        if len == 0 {
            self.zero.get(&c.object_at(ch, from))
        } else {
            self.table.get(&ch.elts[from..from + len])
        }
    }

    pub fn validate(&self, f1: &Functor, f2: &Functor, c0: &Instance, c1: &Instance) -> Result<(), AinftyError> {
        for (&x, v) in &self.zero {
            c0.check_entry(&self.name, &[], v, self.degree, c1, Some((f1.objects[x], f2.objects[x])))?;
        }
        for (inputs, v) in &self.table {
            let ends = (f1.objects[c0.basis[inputs[0]].src], f2.objects[c0.basis[*inputs.last().expect("nonempty")].dst]);
            c0.check_entry(&self.name, inputs, v, self.degree - inputs.len() as i64, c1, Some(ends))?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.zero.values().all(|v| v.is_empty()) && self.table.values().all(|v| v.is_empty())
    }

    /// Termwise linear combination `a·self + b·other`.
    pub fn combine(&self, a: &Coef, other: &PreNat, b: &Coef, ring: Ring) -> PreNat {
        let mut out = self.clone();
        out.zero.clear();
        out.table.clear();
        for (x, v) in self.zero.iter().map(|(x, v)| (x, (v, a))).chain(other.zero.iter().map(|(x, v)| (x, (v, b)))) {
            add_scaled(out.zero.entry(*x).or_default(), v.0, v.1, ring);
        }
        for (k, v) in self.table.iter().map(|(k, v)| (k, (v, a))).chain(other.table.iter().map(|(k, v)| (k, (v, b)))) {
            add_scaled(out.table.entry(k.clone()).or_default(), v.0, v.1, ring);
        }
        out.zero.retain(|_, v| !v.is_empty());
        out.table.retain(|_, v| !v.is_empty());
        out.bound = self.bound.min(other.bound);
        out
    }
}

fn check_setting(c0: &Instance, c1: &Instance, ts: &[&PreNat], dmax: usize) -> Result<(), AinftyError> {
    for c in [c0, c1] {
        if !c.is_flat() {
            return Err(AinftyError::Curved(c.name.clone()));
        }
    }
    for t in ts {
        if dmax > t.bound {
            return Err(AinftyError::Arity { needed: dmax, bound: t.bound });
        }
    }
    Ok(())
}

/// Values of functor blocks on consecutive runs of `elts`, one per part of
/// a composition; `None` when some block vanishes.
fn functor_blocks(f: &Functor, elts: &[usize], comp: &[usize], out: &mut Vec<Vector>) -> bool {
    let mut at = 0;
    for &i in comp {
        match f.on(&elts[at..at + i]) {
            Some(v) if !v.is_empty() => out.push(v.clone()),
            _ => return false,
        }
        at += i;
    }
    true
}

/// Degree of `a_1 … a_p` minus `p`.
fn shifted_prefix(c: &Instance, elts: &[usize], p: usize) -> i64 {
    elts[..p].iter().map(|&g| c.basis[g].deg - 1).sum()
}

fn collect(c0: &Instance, dmax: usize, f: impl Fn(&Chain) -> Vector + Sync) -> (BTreeMap<usize, Vector>, Table) {
    let chains: Vec<Chain> = (0..=dmax).flat_map(|d| c0.chains(d)).collect();
    let vals: Vec<(Chain, Vector)> = chains
        .into_par_iter()
        .filter_map(|ch| {
            let v = f(&ch);
            (!v.is_empty()).then_some((ch, v))
        })
        .collect();
    let mut zero = BTreeMap::new();
    let mut table = Table::new();
    for (ch, v) in vals {
        if ch.elts.is_empty() {
            zero.insert(ch.start, v);
        } else {
            table.insert(ch.elts, v);
        }
    }
    (zero, table)
}

/// `(μ^1 T)^d`: the `μ^m(F_1, …, F_1, T, F_2, …, F_2)` sum with sign `†`
/// minus the `T(…, μ^e, …)` sum.
pub fn mu1_prenat(t: &PreNat, f1: &Functor, f2: &Functor, c0: &Instance, c1: &Instance, dmax: usize) -> Result<PreNat, AinftyError> {
    check_setting(c0, c1, &[t], dmax)?;
    let ring = c1.ring;
    let (zero, table) = collect(c0, dmax, |ch| {
        let elts = &ch.elts;
        let d = elts.len();
        let mut total = Vector::new();
        for len in 0..=d {
            for s in 0..=d - len {
                let Some(tv) = t.on(c0, ch, s, len) else { continue };
                if tv.is_empty() {
                    continue;
                }
                let dagger = (t.degree - 1) * shifted_prefix(c0, elts, s);
                for left in compositions(s) {
                    let mut args = Vec::new();
                    if !functor_blocks(f1, &elts[..s], &left, &mut args) {
                        continue;
                    }
                    args.push(tv.clone());
                    let k = args.len();
                    for right in compositions(d - s - len) {
                        args.truncate(k);
                        if !functor_blocks(f2, &elts[s + len..], &right, &mut args) {
                            continue;
                        }
                        add_scaled(&mut total, &apply(&c1.mu, &args, ring), &sign(dagger), ring);
                    }
                }
            }
        }
        for e in 1..=d {
            for i in 0..=d - e {
                let Some(inner) = c0.mu.get(&elts[i..i + e]) else { continue };
                let before: i64 = elts[..i].iter().map(|&g| c0.basis[g].deg).sum();
                let mut args: Vec<Vector> = elts[..i].iter().map(|&g| basis_vector(g)).collect();
                args.push(inner.clone());
                args.extend(elts[i + e..].iter().map(|&g| basis_vector(g)));
                let v = apply(&t.table, &args, ring);
                add_scaled(&mut total, &v, &-sign(i as i64 + before + t.degree - 1), ring);
            }
        }
        total
    });
    Ok(PreNat {
        name: format!("μ1({})", t.name),
        source: t.source.clone(),
        target: t.target.clone(),
        degree: t.degree + 1,
        zero,
        table,
        bound: dmax,
    })
}

/// `μ^2(T_1, T_2)` for `T_1: F_0 → F_1` and `T_2: F_1 → F_2`, with sign `‡`.
#[allow(clippy::too_many_arguments)]
pub fn mu2_prenat(
    t1: &PreNat,
    t2: &PreNat,
    f: [&Functor; 3],
    c0: &Instance,
    c1: &Instance,
    dmax: usize,
) -> Result<PreNat, AinftyError> {
    check_setting(c0, c1, &[t1, t2], dmax)?;
    let ring = c1.ring;
    let (zero, table) = collect(c0, dmax, |ch| {
        let elts = &ch.elts;
        let d = elts.len();
        let mut total = Vector::new();
        for a in 0..=d {
            for l1 in 0..=d - a {
                let Some(v1) = t1.on(c0, ch, a, l1).filter(|v| !v.is_empty()) else { continue };
                for b in a + l1..=d {
                    for l2 in 0..=d - b {
                        let Some(v2) = t2.on(c0, ch, b, l2).filter(|v| !v.is_empty()) else { continue };
                        let ddagger = (t1.degree - 1) * shifted_prefix(c0, elts, a) + (t2.degree - 1) * shifted_prefix(c0, elts, b);
                        let s = sign(ddagger);
                        for left in compositions(a) {
                            let mut args = Vec::new();
                            if !functor_blocks(f[0], &elts[..a], &left, &mut args) {
                                continue;
                            }
                            args.push(v1.clone());
                            let k1 = args.len();
                            for mid in compositions(b - a - l1) {
                                args.truncate(k1);
                                if !functor_blocks(f[1], &elts[a + l1..b], &mid, &mut args) {
                                    continue;
                                }
                                args.push(v2.clone());
                                let k2 = args.len();
                                for right in compositions(d - b - l2) {
                                    args.truncate(k2);
                                    if !functor_blocks(f[2], &elts[b + l2..], &right, &mut args) {
                                        continue;
                                    }
                                    add_scaled(&mut total, &apply(&c1.mu, &args, ring), &s, ring);
                                }
                            }
                        }
                    }
                }
            }
        }
        total
    });
    Ok(PreNat {
        name: format!("μ2({},{})", t1.name, t2.name),
        source: t1.source.clone(),
        target: t2.target.clone(),
        degree: t1.degree + t2.degree,
        zero,
        table,
        bound: dmax,
    })
}

fn homotopy_setting(t: &PreNat, f1: &Functor, f2: &Functor) -> Result<(), AinftyError> {
    if t.shifted_degree() != -1 {
        return Err(AinftyError::HomotopyDegree(t.shifted_degree()));
    }
    if f1.objects != f2.objects {
        return Err(AinftyError::ObjectMap(format!("{} and {} act differently on objects", f1.name, f2.name)));
    }
    Ok(())
}

/// Evaluates `F_1 − F_2 = μ^1(T)` termwise on every basis tuple of length
/// at most `dmax`, including the empty tuple.
pub fn is_homotopy(t: &PreNat, f1: &Functor, f2: &Functor, c0: &Instance, c1: &Instance, dmax: usize) -> Result<CheckReport, AinftyError> {
    homotopy_setting(t, f1, f2)?;
    let m = mu1_prenat(t, f1, f2, c0, c1, dmax)?;
    let ring = c1.ring;
    let mut report = run_check(c0, "homotopy", 0..=dmax, |ch| {
        let mut r = m.on(c0, ch, 0, ch.elts.len()).cloned().unwrap_or_default();
        if !ch.elts.is_empty() {
            let one = Coef::one();
            if let Some(v) = f1.on(&ch.elts) {
                add_scaled(&mut r, v, &-one.clone(), ring);
            }
            if let Some(v) = f2.on(&ch.elts) {
                add_scaled(&mut r, v, &one, ring);
            }
        }
        r
    });
    report.max_arity = dmax;
    Ok(report)
}

/// `T_1 + T_2 + μ^2(T_1, T_2)` for homotopies `T_1: F_0 → F_1`, `T_2: F_1 → F_2`.
pub fn compose_homotopies(t1: &PreNat, t2: &PreNat, f: [&Functor; 3], c0: &Instance, c1: &Instance, dmax: usize) -> Result<PreNat, AinftyError> {
    homotopy_setting(t1, f[0], f[1])?;
    homotopy_setting(t2, f[1], f[2])?;
    let prod = mu2_prenat(t1, t2, f, c0, c1, dmax)?;
    let one = Coef::one();
    let mut out = t1.combine(&one, t2, &one, c1.ring).combine(&one, &prod, &one, c1.ring);
    out.name = format!("{}∘{}", t2.name, t1.name);
    out.source = t1.source.clone();
    out.target = t2.target.clone();
    out.degree = t1.degree;
    Ok(out)
}
