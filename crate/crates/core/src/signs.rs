//! Sign calculus over GF(2): named sign exponents, the congruences behind
//! the associativity and functor axioms, and orientation signs of the
//! explicit gluing maps, checked against their Jacobians.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul};

use num::rational::BigRational;
use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Degree variables. `X(k)` is `|x_k|`, `Y(j)` is `|y_j|` (`Y(0)` is a lone
/// `|y|`), `T` is `|T|`, `T1`/`T2` are the degrees of two pre-natural
/// transformations and `Alpha(k)` is `|α_k|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X(usize),
    Y(usize),
    T,
    T1,
    T2,
    Alpha(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x{k}"),
            Var::Y(0) => write!(f, "y"),
            Var::Y(j) => write!(f, "y{j}"),
            Var::T => write!(f, "T"),
            Var::T1 => write!(f, "T1"),
            Var::T2 => write!(f, "T2"),
            Var::Alpha(k) => write!(f, "α{k}"),
        }
    }
}

type Monomial = BTreeSet<Var>;

/// A multilinear polynomial over GF(2): a set of monomials, the empty
/// monomial being the constant 1. Since only parities matter every
/// variable is idempotent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPoly {
    terms: BTreeSet<Monomial>,
}

impl SignPoly {
    pub fn zero() -> Self {
        SignPoly::default()
    }

    pub fn one() -> Self {
        SignPoly::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        let mut p = SignPoly::zero();
        if c.rem_euclid(2) == 1 {
            p.terms.insert(Monomial::new());
        }
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = SignPoly::zero();
        p.terms.insert([v].into_iter().collect());
        p
    }

    /// `c · v`, reduced mod 2.
    pub fn scaled(c: i64, v: Var) -> Self {
        if c.rem_euclid(2) == 1 {
            SignPoly::var(v)
        } else {
            SignPoly::zero()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant term, if the polynomial has no other terms.
    pub fn as_constant(&self) -> Option<u8> {
        match self.terms.len() {
            0 => Some(0),
            1 if self.terms.iter().next().is_some_and(|m| m.is_empty()) => Some(1),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.iter().flatten().copied().collect()
    }

    /// Replaces `v` by `by` everywhere.
    pub fn substitute(&self, v: Var, by: &SignPoly) -> SignPoly {
        let mut out = SignPoly::zero();
        for m in &self.terms {
            if m.contains(&v) {
                let mut rest = m.clone();
                rest.remove(&v);
                out = out + SignPoly { terms: [rest].into_iter().collect() } * by.clone();
            } else {
                out.toggle(m.clone());
            }
        }
        out
    }

    /// Parity under an assignment of parities to the variables (missing
    /// variables are even).
    pub fn eval(&self, value: impl Fn(Var) -> bool) -> bool {
        self.terms.iter().filter(|m| m.iter().all(|&v| value(v))).count() % 2 == 1
    }

    fn toggle(&mut self, m: Monomial) {
        if !self.terms.remove(&m) {
            self.terms.insert(m);
        }
    }
}

impl Add for SignPoly {
    type Output = SignPoly;
    fn add(mut self, rhs: SignPoly) -> SignPoly {
        for m in rhs.terms {
            self.toggle(m);
        }
        self
    }
}

impl Mul for SignPoly {
    type Output = SignPoly;
    fn mul(self, rhs: SignPoly) -> SignPoly {
        let mut out = SignPoly::zero();
        for a in &self.terms {
            for b in &rhs.terms {
                out.toggle(a.union(b).copied().collect());
            }
        }
        out
    }
}

impl std::iter::Sum for SignPoly {
    fn sum<I: Iterator<Item = SignPoly>>(iter: I) -> SignPoly {
        iter.fold(SignPoly::zero(), |a, b| a + b)
    }
}

impl fmt::Display for SignPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|m| if m.is_empty() { "1".to_string() } else { m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("·") })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

fn x(k: usize) -> SignPoly {
    SignPoly::var(Var::X(k))
}

fn c(n: i64) -> SignPoly {
    SignPoly::constant(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("unknown sign name {0:?}")]
    UnknownName(String),
    #[error("bad parameters for {name}: {msg}")]
    Params { name: String, msg: String },
}

fn params_err(name: &str, msg: impl Into<String>) -> SignError {
    SignError::Params { name: name.to_string(), msg: msg.into() }
}

/// The named sign exponents.
///
/// * `heartsuit [d]`: `Σ_{i≤d} i|x_i|`.
/// * `box [e]`: `Σ_{k≤e} k|α_k|`.
/// * `dagger [p]`: `(|T|−1)(Σ_{i≤p}|x_i| − p)`, for `p` inputs before the
///   transformation's slot.
/// * `ddagger [p, q]`: `Σ_{i≤p}(|T_1|−1)(|x_i|−1) + Σ_{i≤q}(|T_2|−1)(|x_i|−1)`.
/// * `koszul [π(1), …, π(n)]`: shifted Koszul sign of the permutation placing
///   input `π(p)` at position `p` (1-based).
pub fn named_sign(name: &str, params: &[usize]) -> Result<SignPoly, SignError> {
    let one_param = || match params {
        [p] => Ok(*p),
        _ => Err(params_err(name, "expected one parameter")),
    };
    match name {
        "heartsuit" => Ok((1..=one_param()?).map(|i| SignPoly::scaled(i as i64, Var::X(i))).sum()),
        "box" => Ok((1..=one_param()?).map(|k| SignPoly::scaled(k as i64, Var::Alpha(k))).sum()),
        "dagger" => {
            let p = one_param()?;
            Ok((SignPoly::var(Var::T) + c(1)) * ((1..=p).map(x).sum::<SignPoly>() + c(p as i64)))
        }
        "ddagger" => {
            let [p, q] = params else { return Err(params_err(name, "expected two parameters")) };
            let shifted = |n: usize| (1..=n).map(|i| x(i) + c(1)).sum::<SignPoly>();
            Ok((SignPoly::var(Var::T1) + c(1)) * shifted(*p) + (SignPoly::var(Var::T2) + c(1)) * shifted(*q))
        }
        "koszul" => {
            let perm: Vec<usize> = params.iter().map(|&p| p.wrapping_sub(1)).collect();
            if !is_permutation(&perm) {
                return Err(params_err(name, "not a permutation of 1..n"));
            }
            Ok(koszul_poly(&perm))
        }
        other => Err(SignError::UnknownName(other.to_string())),
    }
}

fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&p| p < perm.len() && !std::mem::replace(&mut seen[p], true))
}

/// Shifted Koszul sign of a permutation of `x_1..x_n` (0-based `perm`,
/// position `p` receives input `perm[p]`): each pair of inputs whose order
/// is reversed contributes `(|x_i|−1)(|x_j|−1)`.
pub fn koszul_poly(perm: &[usize]) -> SignPoly {
    let mut out = SignPoly::zero();
    for p in 0..perm.len() {
        for q in p + 1..perm.len() {
            if perm[p] > perm[q] {
                out = out + (x(perm[p] + 1) + c(1)) * (x(perm[q] + 1) + c(1));
            }
        }
    }
    out
}

/// Numeric version of [`koszul_poly`]: `±1` for concrete degrees.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> i32 {
    let mut parity = 0;
    for p in 0..perm.len() {
        for q in p + 1..perm.len() {
            if perm[p] > perm[q] {
                parity += (degrees[perm[p]] - 1).rem_euclid(2) * (degrees[perm[q]] - 1).rem_euclid(2);
            }
        }
    }
    if parity % 2 == 0 {
        1
    } else {
        -1
    }
}

// Associativity congruence

/// The four sign contributions for the facet where `μ^m` takes inputs
/// `n+1..n+m`, with `|y|` still free.
pub fn assoc_sign_terms(d: usize, n: usize, m: usize) -> Result<[SignPoly; 4], SignError> {
    if m < 1 || m > d || n + m > d {
        return Err(params_err("assoc", format!("need 1 ≤ m ≤ d and n + m ≤ d, got d={d} n={n} m={m}")));
    }
    let (di, ni, mi) = (d as i64, n as i64, m as i64);
    let y = SignPoly::var(Var::Y(0));
    let gluing = c((mi - 1) * (ni - 1));
    let structure = (1..=n).map(|k| SignPoly::scaled(k as i64, Var::X(k))).sum::<SignPoly>()
        + SignPoly::constant(ni + 1) * y
        + (n + m + 1..=d).map(|k| SignPoly::scaled(k as i64 - mi + 1, Var::X(k))).sum()
        + (n + 1..=n + m).map(|k| SignPoly::scaled((k - n) as i64, Var::X(k))).sum();
    let determinant = c((di - mi + 1) * mi) + c(mi) * (c(di) + (n + m + 1..=d).map(x).sum());
    let axiom = (1..=n).map(|k| x(k) + c(1)).sum();
    Ok([gluing, structure, determinant, axiom])
}

/// Total sign minus the target `Σ (k+1)|x_k|`, after substituting
/// `|y| = Σ_{k=n+1}^{n+m} |x_k| + m`.
pub fn assoc_sign_residual(d: usize, n: usize, m: usize) -> Result<SignPoly, SignError> {
    let y = (n + 1..=n + m).map(x).sum::<SignPoly>() + c(m as i64);
    let total: SignPoly = assoc_sign_terms(d, n, m)?.into_iter().sum();
    let target: SignPoly = (1..=d).map(|k| SignPoly::scaled(k as i64 + 1, Var::X(k))).sum();
    Ok(total.substitute(Var::Y(0), &y) + target)
}

/// The associativity congruence holds for `(d, n, m)`: the residual is the
/// same constant for every facet, namely the global offset 1 coming from
/// `(m−1)(n−1) = mn + m + n + 1`.
pub fn assoc_sign_identity(d: usize, n: usize, m: usize) -> Result<bool, SignError> {
    Ok(assoc_sign_residual(d, n, m)? == SignPoly::one())
}

// Functor congruence

fn check_partition(d: usize, parts: &[usize]) -> Result<(), SignError> {
    if parts.is_empty() || parts.contains(&0) || parts.iter().sum::<usize>() != d {
        return Err(params_err("functor", format!("{parts:?} is not a composition of {d}")));
    }
    Ok(())
}

/// The four sign contributions for the quilted-bubbles facet with block
/// sizes `parts`, with the `|y_j|` still free.
pub fn functor_sign_terms(d: usize, parts: &[usize]) -> Result<[SignPoly; 4], SignError> {
    check_partition(d, parts)?;
    let m = parts.len() as i64;
    let before = |j: usize| parts[..j].iter().map(|&i| i as i64 - 1).sum::<i64>();
    let mut a = SignPoly::zero();
    let mut b = SignPoly::zero();
    let mut cc = SignPoly::zero();
    let mut dd = c(1);
    let mut offset = 0;
    for (j0, &ij) in parts.iter().enumerate() {
        let j = j0 + 1;
        let ij = ij as i64;
        a = a + c((ij - 1) * m) + c((ij - 1) * before(j0));
        b = b + c(before(j0)) * SignPoly::var(Var::Y(j));
        cc = cc + (1..=ij as usize).map(|i| SignPoly::scaled(i as i64, Var::X(i + offset))).sum() + SignPoly::scaled(j as i64, Var::Y(j));
        dd = dd + c((m - j as i64) * (ij - 1));
        offset += ij as usize;
    }
    Ok([a, b, cc, dd])
}

/// Total minus the target `1 + Σ (j+1)|x_j|` after substituting
/// `|y_j| = Σ_{i∈block j}|x_i| + (1 − i_j)`.
pub fn functor_sign_residual(d: usize, parts: &[usize]) -> Result<SignPoly, SignError> {
    let mut total: SignPoly = functor_sign_terms(d, parts)?.into_iter().sum();
    let mut offset = 0;
    for (j0, &ij) in parts.iter().enumerate() {
        let y = (offset + 1..=offset + ij).map(x).sum::<SignPoly>() + c(1 - ij as i64);
        total = total.substitute(Var::Y(j0 + 1), &y);
        offset += ij;
    }
    let target = c(1) + (1..=d).map(|j| SignPoly::scaled(j as i64 + 1, Var::X(j))).sum();
    Ok(total + target)
}

pub fn functor_sign_identity(d: usize, parts: &[usize]) -> Result<bool, SignError> {
    Ok(functor_sign_residual(d, parts)?.is_zero())
}

/// All compositions of `d` into positive parts.
pub fn compositions(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=d {
        for mut rest in compositions(d - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignReport {
    pub cases: usize,
    pub failures: Vec<String>,
}

/// Exhaustive check of the associativity congruence for all `d ≤ dmax`.
pub fn verify_assoc(dmax: usize) -> SignReport {
    let mut rep = SignReport::default();
    for d in 1..=dmax {
        for m in 1..=d {
            for n in 0..=d - m {
                rep.cases += 1;
                if !assoc_sign_identity(d, n, m).unwrap_or(false) {
                    rep.failures.push(format!("d={d} n={n} m={m}"));
                }
            }
        }
    }
    rep
}

/// Exhaustive check of the functor congruence for all compositions of
/// `d ≤ dmax`.
pub fn verify_functor(dmax: usize) -> SignReport {
    let mut rep = SignReport::default();
    for d in 1..=dmax {
        for parts in compositions(d) {
            rep.cases += 1;
            if !functor_sign_identity(d, &parts).unwrap_or(false) {
                rep.failures.push(format!("d={d} parts={parts:?}"));
            }
        }
    }
    rep
}

// Orientation signs of gluing maps

/// Explicit coordinate gluing maps onto facets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GluingMap {
    /// `(0,ε) × R^m × R^{d−m+1} → R^d`, bubble on inputs `n+1..n+m`.
    Assoc { d: usize, n: usize, m: usize },
    /// `R^i × R^{d−i+1,0} → R^{d,0}`, bubble at marking `j+1`.
    MultUnquilted { d: usize, i: usize, j: usize },
    /// `R × R^m × Π R^{i_j,0} → R^{d,0}`.
    MultQuilted { parts: Vec<usize> },
}

impl GluingMap {
    /// The sign predicted by the closed-form parities.
    pub fn closed_form(&self) -> i32 {
        let parity = match self {
            GluingMap::Assoc { n, m, .. } => (*m as i64 - 1) * (*n as i64 - 1),
            GluingMap::MultUnquilted { i, j, .. } => (i * j + j) as i64,
            GluingMap::MultQuilted { parts } => {
                let m = parts.len();
                1 + parts.iter().enumerate().map(|(j0, &ij)| ((m - j0 - 1) * (ij - 1)) as i64).sum::<i64>()
            }
        };
        if parity.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// Every map with `d ≤ dmax` that corresponds to a facet.
    pub fn all(dmax: usize) -> Vec<GluingMap> {
        let mut out = Vec::new();
        for d in 2..=dmax {
            for m in 2..d {
                for n in 0..=d - m {
                    out.push(GluingMap::Assoc { d, n, m });
                }
            }
            for i in 2..=d {
                for j in 0..=d - i {
                    out.push(GluingMap::MultUnquilted { d, i, j });
                }
            }
            for parts in compositions(d).into_iter().filter(|p| p.len() >= 2) {
                out.push(GluingMap::MultQuilted { parts });
            }
        }
        out
    }
}

/// First-order jet: a value and its gradient.
#[derive(Clone, Debug)]
struct Jet {
    v: BigRational,
    g: Vec<BigRational>,
}

impl Jet {
    fn constant(v: BigRational, n: usize) -> Jet {
        Jet { v, g: vec![BigRational::zero(); n] }
    }

    fn variable(v: BigRational, i: usize, n: usize) -> Jet {
        let mut j = Jet::constant(v, n);
        j.g[i] = BigRational::one();
        j
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet { v: &self.v + &o.v, g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect() }
    }

    fn sub(&self, o: &Jet) -> Jet {
        Jet { v: &self.v - &o.v, g: self.g.iter().zip(&o.g).map(|(a, b)| a - b).collect() }
    }

    fn mul(&self, o: &Jet) -> Jet {
        Jet { v: &self.v * &o.v, g: self.g.iter().zip(&o.g).map(|(a, b)| a * &o.v + &self.v * b).collect() }
    }

    fn div(&self, o: &Jet) -> Jet {
        let q = &self.v / &o.v;
        let g = self.g.iter().zip(&o.g).map(|(a, b)| (a - &q * b) / &o.v).collect();
        Jet { v: q, g }
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Increasing sample values above `base`, perturbed by `salt` so that a
/// degenerate point can be re-sampled.
fn increasing(count: usize, base: i64, salt: i64) -> Vec<BigRational> {
    (0..count as i64).map(|k| BigRational::from_integer((base + k).into()) + rat(1, 3 + k + salt)).collect()
}

impl GluingMap {
    /// Evaluates the map on jets: inputs are `(δ, bubble coordinates, outer
    /// coordinates)` in the order of the parameter space; outputs are the
    /// coordinates of the glued configuration.
    fn evaluate(&self, salt: i64) -> (usize, Vec<Jet>) {
        match self {
            GluingMap::Assoc { d, n, m } => {
                let (d, n, m) = (*d, *n, *m);
                let nz = m - 2;
                let nw = d - m - 1;
                let dim = 1 + nz + nw;
                let mut inputs = vec![rat(1, 7 + salt)];
                inputs.extend(increasing(nz, 2, salt));
                inputs.extend(increasing(nw, 2, salt));
                let vars: Vec<Jet> = inputs.into_iter().enumerate().map(|(i, v)| Jet::variable(v, i, dim)).collect();
                let k = |v: i64| Jet::constant(BigRational::from_integer(v.into()), dim);
                let delta = &vars[0];
                let mut bubble = vec![k(0), k(1)];
                bubble.extend(vars[1..1 + nz].iter().cloned());
                let mut outer = vec![k(0), k(1)];
                outer.extend(vars[1 + nz..].iter().cloned());
                let mut pts = Vec::new();
                for (idx, p) in outer.iter().enumerate() {
                    if idx == n {
                        pts.extend(bubble.iter().map(|q| p.add(&delta.mul(q))));
                    } else {
                        pts.push(p.clone());
                    }
                }
                let scale = pts[1].sub(&pts[0]);
                let out = pts[2..].iter().map(|p| p.sub(&pts[0]).div(&scale)).collect();
                (dim, out)
            }
            GluingMap::MultUnquilted { d, i, j } => {
                let (d, i, j) = (*d, *i, *j);
                let nz = i - 2;
                let nw = d - i;
                let dim = 1 + nz + nw;
                let mut inputs = vec![rat(1, 7 + salt)];
                inputs.extend(increasing(nz, 2, salt));
                inputs.extend(increasing(nw, 1, salt));
                let vars: Vec<Jet> = inputs.into_iter().enumerate().map(|(k, v)| Jet::variable(v, k, dim)).collect();
                let k = |v: i64| Jet::constant(BigRational::from_integer(v.into()), dim);
                let delta = &vars[0];
                let mut bubble = vec![k(0), k(1)];
                bubble.extend(vars[1..1 + nz].iter().cloned());
                let mut outer = vec![k(0)];
                outer.extend(vars[1 + nz..].iter().cloned());
                let mut pts = Vec::new();
                for (idx, p) in outer.iter().enumerate() {
                    if idx == j {
                        pts.extend(bubble.iter().map(|q| p.add(&delta.mul(q))));
                    } else {
                        pts.push(p.clone());
                    }
                }
                let out = pts[1..].iter().map(|p| p.sub(&pts[0])).collect();
                (dim, out)
            }
            GluingMap::MultQuilted { parts } => {
                let m = parts.len();
                let nz = m - 2;
                let nw: usize = parts.iter().map(|p| p - 1).sum();
                let dim = 1 + nz + nw;
                let mut inputs = vec![rat(1, 100 + salt)];
                inputs.extend(increasing(nz, 2, salt));
                for &p in parts {
                    inputs.extend((0..p as i64 - 1).map(|k| rat(k + 1, p as i64 + 1 + salt)));
                }
                let vars: Vec<Jet> = inputs.into_iter().enumerate().map(|(k, v)| Jet::variable(v, k, dim)).collect();
                let k = |v: i64| Jet::constant(BigRational::from_integer(v.into()), dim);
                let inv = k(1).div(&vars[0]);
                let mut bases = vec![k(0), inv.clone()];
                bases.extend(vars[1..1 + nz].iter().map(|z| z.mul(&inv)));
                let mut pts = Vec::new();
                let mut next = 1 + nz;
                for (b, &p) in bases.iter().zip(parts) {
                    pts.push(b.clone());
                    for _ in 1..p {
                        pts.push(b.add(&vars[next]));
                        next += 1;
                    }
                }
                (dim, pts[1..].to_vec())
            }
        }
    }
}

/// Sign of the Jacobian determinant of the gluing map at a generic rational
/// point, in exact arithmetic.
pub fn gluing_orientation_sign(map: &GluingMap) -> i32 {
    for salt in 0..16 {
        let (dim, out) = map.evaluate(salt);
        assert_eq!(out.len(), dim, "gluing map {map:?} is not square");
        let jac: Vec<Vec<BigRational>> = out.into_iter().map(|j| j.g).collect();
        let s = linalg::sign_of(&linalg::det_rational(&jac));
        if s != 0 {
            return s;
        }
    }
    panic!("gluing map {map:?} is degenerate at every sample point")
}
