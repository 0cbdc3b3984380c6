use proptest::prelude::*;
use quilthedra::signs::*;

fn x(k: usize) -> SignPoly {
    SignPoly::var(Var::X(k))
}

fn parity(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

/// Parities of `|x_1|..|x_d|` from the bits of `mask`.
fn degrees(mask: u32, d: usize) -> Vec<i64> {
    (0..d).map(|k| i64::from(mask >> k & 1)).collect()
}

fn value(degs: &[i64]) -> impl Fn(Var) -> bool + '_ {
    move |v| match v {
        Var::X(k) => parity(degs[k - 1]),
        _ => false,
    }
}

#[test]
fn named_signs() {
    assert_eq!(named_sign("heartsuit", &[3]).unwrap(), x(1) + x(3));
    assert_eq!(named_sign("box", &[4]).unwrap(), SignPoly::var(Var::Alpha(1)) + SignPoly::var(Var::Alpha(3)));
    let t = SignPoly::var(Var::T);
    assert_eq!(named_sign("dagger", &[2]).unwrap(), (t.clone() + SignPoly::one()) * (x(1) + x(2)));
    assert_eq!(named_sign("dagger", &[1]).unwrap(), (t.clone() + SignPoly::one()) * (x(1) + SignPoly::one()));
    let dd = named_sign("ddagger", &[1, 0]).unwrap();
    assert_eq!(dd, (SignPoly::var(Var::T1) + SignPoly::one()) * (x(1) + SignPoly::one()));
    assert!(named_sign("ddagger", &[1]).is_err());
    assert!(named_sign("koszul", &[1, 1]).is_err());
    assert!(named_sign("koszul", &[1, 2, 3]).unwrap().is_zero());
    assert!(matches!(named_sign("club", &[]), Err(SignError::UnknownName(_))));
}

#[test]
fn canonical_display() {
    assert_eq!((x(2) + x(1) + SignPoly::one()).to_string(), "1 + x1 + x2");
    assert_eq!((x(2) * x(1)).to_string(), "x1·x2");
    assert_eq!(SignPoly::zero().to_string(), "0");
    assert_eq!(SignPoly::constant(-3), SignPoly::one());
}

#[test]
fn associativity_congruence_for_all_facets() {
    let rep = verify_assoc(6);
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.cases, (1..=6).map(|d| d * (d + 1) / 2).sum::<usize>());
    for d in 1..=6 {
        for m in 1..=d {
            for n in 0..=d - m {
                let terms = assoc_sign_terms(d, n, m).unwrap();
                for mask in 0..1u32 << d {
                    let degs = degrees(mask, d);
                    let y: i64 = degs[n..n + m].iter().sum::<i64>() + m as i64;
                    let val = |v: Var| match v {
                        Var::Y(0) => parity(y),
                        other => value(&degs)(other),
                    };
                    let total = terms.iter().filter(|p| p.eval(val)).count() as i64;
                    let target: i64 = (1..=d).map(|k| (k as i64 + 1) * degs[k - 1]).sum();
                    assert_eq!(parity(total), parity(target + 1), "d={d} n={n} m={m} degrees={degs:?}");
                }
            }
        }
    }
}

#[test]
fn functor_congruence_for_all_compositions() {
    let rep = verify_functor(6);
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.cases, (1..=6).map(|d| 1usize << (d - 1)).sum::<usize>());
    for d in 1..=6 {
        for parts in compositions(d) {
            let terms = functor_sign_terms(d, &parts).unwrap();
            for mask in 0..1u32 << d {
                let degs = degrees(mask, d);
                let mut ys = Vec::new();
                let mut offset = 0;
                for &p in &parts {
                    ys.push(degs[offset..offset + p].iter().sum::<i64>() + 1 - p as i64);
                    offset += p;
                }
                let val = |v: Var| match v {
                    Var::Y(j) => parity(ys[j - 1]),
                    other => value(&degs)(other),
                };
                let total = terms.iter().filter(|p| p.eval(val)).count() as i64;
                let target: i64 = 1 + (1..=d).map(|j| (j as i64 + 1) * degs[j - 1]).sum::<i64>();
                assert_eq!(parity(total), parity(target), "d={d} parts={parts:?} degrees={degs:?}");
            }
        }
    }
}

#[test]
fn congruences_reject_bad_parameters() {
    assert!(assoc_sign_residual(3, 3, 1).is_err());
    assert!(assoc_sign_residual(3, 0, 0).is_err());
    assert!(functor_sign_residual(3, &[1, 1]).is_err());
    assert!(functor_sign_residual(2, &[2, 0]).is_err());
    assert_eq!(compositions(4).len(), 8);
}

fn closed_form(map: &GluingMap) -> i32 {
    let parity = match map {
        GluingMap::Assoc { n, m, .. } => (*m as i64 - 1) * (*n as i64 - 1),
        GluingMap::MultUnquilted { i, j, .. } => (i * j + j) as i64,
        GluingMap::MultQuilted { parts } => {
            let m = parts.len() as i64;
            1 + parts.iter().zip(1..).map(|(&ij, j)| (m - j) * (ij as i64 - 1)).sum::<i64>()
        }
    };
    if parity.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[test]
fn jacobian_signs_match_closed_forms() {
    let maps = GluingMap::all(5);
    let assoc: usize = (2..=5).map(|d| (2..d).map(|m| d - m + 1).sum::<usize>()).sum();
    let unquilted: usize = (2..=5).map(|d| (2..=d).map(|i| d - i + 1).sum::<usize>()).sum();
    let quilted: usize = (2..=5).map(|d| (1usize << (d - 1)) - 1).sum();
    assert_eq!(maps.len(), assoc + unquilted + quilted);
    assert_eq!(maps.len(), 62);
    for map in &maps {
        assert_eq!(map.closed_form(), closed_form(map), "{map:?}");
        assert_eq!(gluing_orientation_sign(map), closed_form(map), "{map:?}");
    }
}

/// Sign of sorting by adjacent transpositions, each swap of inputs `a`, `b`
/// costing `(|a|−1)(|b|−1)`.
fn bubble_sign(perm: &[usize], degs: &[i64]) -> i32 {
    let mut p = perm.to_vec();
    let mut sign = 1;
    for pass in 0..p.len() {
        for k in 0..p.len().saturating_sub(1 + pass) {
            if p[k] > p[k + 1] {
                if parity((degs[p[k]] - 1) * (degs[p[k + 1]] - 1)) {
                    sign = -sign;
                }
                p.swap(k, k + 1);
            }
        }
    }
    sign
}

fn perm_and_degrees() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<i64>)> {
    (1usize..=7).prop_flat_map(|n| {
        let ids: Vec<usize> = (0..n).collect();
        (Just(ids.clone()).prop_shuffle(), Just(ids).prop_shuffle(), proptest::collection::vec(-3i64..=3, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn koszul_sign_is_a_cocycle((p, q, degs) in perm_and_degrees()) {
        let r: Vec<usize> = q.iter().map(|&k| p[k]).collect();
        let moved: Vec<i64> = p.iter().map(|&k| degs[k]).collect();
        prop_assert_eq!(koszul_sign(&r, &degs), koszul_sign(&p, &degs) * koszul_sign(&q, &moved));
        prop_assert_eq!(koszul_sign(&p, &degs), bubble_sign(&p, &degs));
        let poly = koszul_poly(&p);
        prop_assert_eq!(poly.eval(|v| matches!(v, Var::X(k) if parity(degs[k - 1]))), koszul_sign(&p, &degs) == -1);
        let one_based: Vec<usize> = p.iter().map(|k| k + 1).collect();
        prop_assert_eq!(named_sign("koszul", &one_based).unwrap(), poly);
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Var(usize),
    Const(bool),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(1usize..=4).prop_map(Expr::Var), any::<bool>().prop_map(Expr::Const)];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        ]
    })
}

fn build(e: &Expr) -> SignPoly {
    match e {
        Expr::Var(k) => x(*k),
        Expr::Const(c) => SignPoly::constant(i64::from(*c)),
        Expr::Add(a, b) => build(a) + build(b),
        Expr::Mul(a, b) => build(a) * build(b),
    }
}

fn truth(e: &Expr, bits: u32) -> bool {
    match e {
        Expr::Var(k) => bits >> (k - 1) & 1 == 1,
        Expr::Const(c) => *c,
        Expr::Add(a, b) => truth(a, bits) ^ truth(b, bits),
        Expr::Mul(a, b) => truth(a, bits) && truth(b, bits),
    }
}

/// Algebraic normal form of a truth table on four variables, by the Möbius
/// transform.
fn anf(table: &[bool; 16]) -> SignPoly {
    let mut c = *table;
    for k in 0..4 {
        for s in 0..16 {
            if s >> k & 1 == 1 {
                c[s] ^= c[s ^ (1 << k)];
            }
        }
    }
    (0..16usize).filter(|&s| c[s]).map(|s| (0..4).filter(|k| s >> k & 1 == 1).map(|k| x(k + 1)).fold(SignPoly::one(), |a, b| a * b)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn polynomials_are_canonical(e in expr(), f in expr()) {
        let p = build(&e);
        let mut table = [false; 16];
        for (bits, slot) in table.iter_mut().enumerate() {
            *slot = truth(&e, bits as u32);
            prop_assert_eq!(p.eval(|v| matches!(v, Var::X(k) if bits >> (k - 1) & 1 == 1)), *slot);
        }
        prop_assert_eq!(&anf(&table), &p);
        prop_assert_eq!(p.clone() * p.clone(), p.clone());
        prop_assert!((p.clone() + p.clone()).is_zero());
        let q = build(&f);
        let same = (0..16u32).all(|b| truth(&e, b) == truth(&f, b));
        prop_assert_eq!(same, p == q);
        prop_assert_eq!(p.substitute(Var::X(1), &x(1)), p.clone());
        let by = q.clone();
        let s = p.substitute(Var::X(1), &by);
        for bits in 0..16u32 {
            let moved = (bits & !1) | u32::from(truth(&f, bits));
            prop_assert_eq!(s.eval(|v| matches!(v, Var::X(k) if bits >> (k - 1) & 1 == 1)), truth(&e, moved));
        }
    }
}
