//! Seeded constructors for test instances: a dg path category, transported
//! A∞ structures with their functors, inverse functors, random
//! pre-natural transformations and the functors they flow to.

use num::{One, Signed, Zero};
use rand::rngs::StdRng;
use rand::Rng;

use super::checks::{compose_on, sign, Functor};
use super::instance::{add_scaled, apply, basis_vector, Basis, Coef, Instance, Ring, Table, Vector};
use super::prenat::{mu1_prenat, PreNat};
use super::AinftyError;

fn int(k: i64) -> Coef {
    Coef::from_integer(k.into())
}

/// Objects `0..k`, `Hom(i, i) = ⟨e_i⟩`, and for `i < j` the elements
/// `p_ij·ε^a` for `0 ≤ a ≤ powers` (`powers` odd), where `ε` has degree −1
/// and `dε = 1` when `differential` is set. Products are path
/// concatenation with `ε^{powers+1} = 0`, converted by `μ^1 = d` and
/// `μ^2(a, b) = (−1)^{|a|} ab`.
pub fn dg_path(k: usize, powers: usize, differential: bool, ring: Ring) -> Instance {
    assert!(powers % 2 == 1, "the ideal (ε^{{powers+1}}) is closed under d only for odd powers");
    let mut basis = Vec::new();
    let mut idx = std::collections::HashMap::new();
    for i in 0..k {
        for j in i..k {
            if i == j {
                idx.insert((i, j, 0), basis.len());
                basis.push(Basis { name: format!("e{i}"), src: i, dst: i, deg: 0 });
                continue;
            }
            for a in 0..=powers {
                let name = match a {
                    0 => format!("p{i}{j}"),
                    1 => format!("q{i}{j}"),
                    _ => format!("q{i}{j}_{a}"),
                };
                idx.insert((i, j, a), basis.len());
                basis.push(Basis { name, src: i, dst: j, deg: -(a as i64) });
            }
        }
    }
    let objects = (0..k).map(|i| i.to_string()).collect();
    let mut c = Instance::new("dg-path", 0, ring, objects, basis.clone());
    c.description = format!("dg path category of the A_{k} quiver tensored with k[ε]/ε^{}, |ε| = −1", powers + 1);
    for (&(i, j, a), &g) in &idx {
        if differential && a % 2 == 1 {
            c.mu.insert(vec![g], basis_vector(idx[&(i, j, a - 1)]));
        }
        for l in j..k {
            for b in 0..=powers {
                let Some(&h) = idx.get(&(j, l, b)) else { continue };
                let Some(&out) = idx.get(&(i, l, a + b)) else { continue };
                let s = sign(basis[g].deg);
                c.mu.insert(vec![g, h], [(out, ring.normalize(s))].into_iter().collect());
            }
        }
    }
    c
}

fn random_value(rng: &mut StdRng, target: &Instance, x: usize, y: usize, deg: i64, density: f64) -> Vector {
    let mut v = Vector::new();
    for g in target.hom(x, y) {
        if target.degree_eq(target.basis[g].deg, deg) && rng.gen_bool(density) {
            let c = if rng.gen_bool(0.5) { Coef::one() } else { -Coef::one() };
            add_scaled(&mut v, &basis_vector(g), &c, target.ring);
        }
    }
    v
}

fn diagonal_signs(f: &Functor, n: usize) -> Result<Vec<Coef>, AinftyError> {
    (0..n)
        .map(|g| match f.on(&[g]) {
            Some(v) if v.len() == 1 && v.get(&g).is_some_and(|c| c.abs().is_one()) => Ok(v[&g].clone()),
            _ => Err(AinftyError::Malformed(format!("{} is not diagonal with entries ±1 in degree one", f.name))),
        })
        .collect()
}

/// Transports the structure of a flat instance `c` along a functor with
/// diagonal `F^1 = ±1` and random `F^d` for `2 ≤ d ≤ dmax`. Returns the
/// transported instance, exact through arity `dmax`, and the functor from
/// `c` to it.
pub fn pushforward(c: &Instance, dmax: usize, density: f64, rng: &mut StdRng) -> (Instance, Functor) {
    let n = c.basis.len();
    let mut f = Functor { name: "F".into(), objects: (0..c.objects.len()).collect(), table: Table::new() };
    let s: Vec<Coef> = (0..n).map(|_| if rng.gen_bool(0.5) { Coef::one() } else { -Coef::one() }).collect();
    for (g, sg) in s.iter().enumerate() {
        f.table.insert(vec![g], [(g, sg.clone())].into_iter().collect());
    }
    for d in 2..=dmax {
        for ch in c.chains(d) {
            let deg: i64 = ch.elts.iter().map(|&g| c.basis[g].deg).sum::<i64>() + 1 - d as i64;
            let v = random_value(rng, c, ch.start, c.object_at(&ch, d), deg, density);
            if !v.is_empty() {
                f.table.insert(ch.elts, v);
            }
        }
    }
    let mut t = c.clone();
    t.name = format!("{}-push", c.name);
    t.description = format!("transport of {} along a functor with diagonal F^1 and random higher terms", c.name);
    t.mu = Table::new();
    for d in 1..=dmax {
        for ch in c.chains(d) {
            let elts = &ch.elts;
            let mut lhs = Vector::new();
            for j in 1..=d {
                for i in 0..=d - j {
                    let Some(inner) = c.mu.get(&elts[i..i + j]) else { continue };
                    let before: i64 = elts[..i].iter().map(|&g| c.basis[g].deg).sum();
                    let mut args: Vec<Vector> = elts[..i].iter().map(|&g| basis_vector(g)).collect();
                    args.push(inner.clone());
                    args.extend(elts[i + j..].iter().map(|&g| basis_vector(g)));
                    add_scaled(&mut lhs, &apply(&f.table, &args, c.ring), &sign(i as i64 + before), c.ring);
                }
            }
            // Every composition except the all-ones one only reaches μ'^{<d}.
            let rest = compose_on(&t.mu, &f, elts, c.ring);
            add_scaled(&mut lhs, &rest, &-Coef::one(), c.ring);
            let scale: Coef = elts.iter().map(|&g| s[g].clone()).product();
            let mut v = Vector::new();
            add_scaled(&mut v, &lhs, &scale, c.ring);
            if !v.is_empty() {
                t.mu.insert(elts.clone(), v);
            }
        }
    }
    (t, f)
}

/// The inverse `G` of a functor `F: c0 → c1` with diagonal `F^1 = ±1` and
/// identical object sets, determined by `G ∘ F = id` through arity `dmax`.
pub fn inverse_functor(f: &Functor, c1: &Instance, dmax: usize) -> Result<Functor, AinftyError> {
    let s = diagonal_signs(f, c1.basis.len())?;
    if f.objects.iter().enumerate().any(|(i, &o)| i != o) {
        return Err(AinftyError::ObjectMap(format!("{} is not the identity on objects", f.name)));
    }
    let mut g = Functor { name: format!("{}⁻¹", f.name), objects: f.objects.clone(), table: Table::new() };
    for (x, sx) in s.iter().enumerate() {
        g.table.insert(vec![x], [(x, sx.clone())].into_iter().collect());
    }
    for d in 2..=dmax {
        for ch in c1.chains(d) {
            let elts = &ch.elts;
            let rest = compose_on(&g.table, f, elts, c1.ring);
            let scale: Coef = -elts.iter().map(|&x| s[x].clone()).product::<Coef>();
            let mut v = Vector::new();
            add_scaled(&mut v, &rest, &scale, c1.ring);
            if !v.is_empty() {
                g.table.insert(elts.clone(), v);
            }
        }
    }
    Ok(g)
}

/// A random pre-natural transformation `f1 → f2` of degree `degree` with
/// tables through arity `dmax`; `T^0` is left zero unless `with_zero`.
#[allow(clippy::too_many_arguments)]
pub fn random_prenat(
    name: &str,
    f1: &Functor,
    f2: &Functor,
    c0: &Instance,
    c1: &Instance,
    degree: i64,
    dmax: usize,
    with_zero: bool,
    density: f64,
    rng: &mut StdRng,
) -> PreNat {
    let mut t = PreNat::zero_of(name, f1, f2, degree, dmax);
    for d in (if with_zero { 0 } else { 1 })..=dmax {
        for ch in c0.chains(d) {
            let deg: i64 = ch.elts.iter().map(|&g| c0.basis[g].deg).sum::<i64>() + degree - d as i64;
            let v = random_value(rng, c1, f1.objects[ch.start], f2.objects[c0.object_at(&ch, d)], deg, density);
            if v.is_empty() {
                continue;
            }
            if d == 0 {
                t.zero.insert(ch.start, v);
            } else {
                t.table.insert(ch.elts, v);
            }
        }
    }
    t
}

/// The functor `F_2` with `F_1 − F_2 = μ^1(T)`, solved arity by arity; needs
/// `T^0 = 0` and `T` of shifted degree −1.
pub fn flow_functor(f1: &Functor, t: &PreNat, c0: &Instance, c1: &Instance, dmax: usize) -> Result<Functor, AinftyError> {
    if t.zero.values().any(|v| !v.is_empty()) {
        return Err(AinftyError::Malformed("flow needs T^0 = 0".into()));
    }
    if t.shifted_degree() != -1 {
        return Err(AinftyError::HomotopyDegree(t.shifted_degree()));
    }
    let mut f2 = Functor { name: format!("{}~", f1.name), objects: f1.objects.clone(), table: Table::new() };
    for d in 1..=dmax {
        let m = mu1_prenat(t, f1, &f2, c0, c1, d)?;
        for ch in c0.chains(d) {
            let mut v = f1.on(&ch.elts).cloned().unwrap_or_default();
            if let Some(x) = m.table.get(&ch.elts) {
                add_scaled(&mut v, x, &-Coef::one(), c1.ring);
            }
            if !v.is_empty() {
                f2.table.insert(ch.elts, v);
            }
        }
    }
    Ok(f2)
}

/// A strict functor scaling each basis element by a nonzero constant.
pub fn scaling_functor(name: &str, c: &Instance, scale: &[i64]) -> Functor {
    Functor {
        name: name.into(),
        objects: (0..c.objects.len()).collect(),
        table: (0..c.basis.len())
            .filter(|&g| !scale[g].is_zero())
            .map(|g| (vec![g], [(g, int(scale[g]))].into_iter().collect()))
            .collect(),
    }
}
