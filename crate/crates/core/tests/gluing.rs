use std::collections::BTreeSet;

use num::{BigRational, One, Signed, Zero};
use proptest::prelude::*;
use quilthedra::gluing::*;
use quilthedra::trees::{enumerate, parse_expression, Family, Tree};

fn r(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn bi(s: &str) -> Tree {
    parse_expression(s, Family::Bicolored).unwrap()
}

/// Rank over the rationals by plain Gaussian elimination.
fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.iter().map(|row| row.iter().map(|&x| r(x)).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(rank, p);
        for i in 0..m.len() {
            if i != rank && !m[i][c].is_zero() {
                let f = &m[i][c] / &m[rank][c];
                let pivot = m[rank].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Edges from `v` up to the root.
fn above(parent: &[Option<usize>], v: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    let mut x = v;
    while let Some(p) = parent[x] {
        out.insert(x);
        x = p;
    }
    out
}

fn colored_settings() -> Vec<(Family, usize, usize)> {
    vec![(Family::Stable, 5, 0), (Family::Colored, 5, 0), (Family::Bicolored, 4, 0), (Family::Seam, 3, 1), (Family::Seam, 2, 2)]
}

#[test]
fn codimension_examples() {
    let codim = |s: &str, f| stratum_codim(&parse_expression(s, f).unwrap());
    assert_eq!(codim("(a1a2)a3", Family::Stable), 1);
    assert_eq!(codim("a1a2a3", Family::Stable), 0);
    assert_eq!(codim("h(a1)h(a2)", Family::Colored), 1);
    assert_eq!(codim("(h1h2)(a1)(h1h2)(a2)", Family::Bicolored), 2);
    let t = parse_expression("h(a1)h(a2)", Family::Colored).unwrap();
    assert_eq!((t.edge_count(), balanced_relations(&t).relations.len(), relation_rank(&t)), (2, 1, 1));
    assert!(balanced_relations(&parse_expression("(a1a2)a3", Family::Stable).unwrap()).relations.is_empty());
}

#[test]
fn relation_rows_follow_paths() {
    for (f, d, e) in colored_settings() {
        for t in enumerate(f, d, e).unwrap() {
            let flat = t.flat();
            let cone = balanced_relations(&t);
            assert_eq!(cone.edges, (1..=t.edge_count()).collect::<Vec<_>>());
            for rel in &cone.relations {
                let (u, v) = rel.pair;
                assert!(flat.kinds[u].colors().contains(&rel.color) && flat.kinds[v].colors().contains(&rel.color));
                let (au, av) = (above(&flat.parent, u), above(&flat.parent, v));
                for (i, &edge) in cone.edges.iter().enumerate() {
                    let expected = i64::from(au.contains(&edge) && !av.contains(&edge)) - i64::from(av.contains(&edge) && !au.contains(&edge));
                    assert_eq!(rel.row[i], expected, "{t} {rel:?}");
                }
            }
            let m = cone.matrix();
            let k = relation_rank(&t);
            assert_eq!(k, rank(&m), "{t}");
            assert!(k <= m.len().min(cone.edges.len()));
            assert_eq!(stratum_codim(&t), t.edge_count() - k + usize::from(t.is_fused()), "{t}");
            assert_eq!(stratum_dim(&t) + stratum_codim(&t), f.top_dim(d, e));
        }
    }
}

#[test]
fn constructed_delays_are_compatible() {
    for d in 1..=4 {
        let fam = construct_delays(d);
        let rep = check_delay_compatibility(&fam);
        assert!(rep.passes(), "d={d}: {:?}", rep.violations);
        assert_eq!(rep.types_checked, (1..=d).map(|n| enumerate(Family::Bicolored, n, 0).unwrap().len()).sum::<usize>());
        for a in &fam.types {
            assert!(a.lambda.values().all(|l| l.is_positive()));
            let core = Core::of(&a.tree);
            assert!(a.lambda.keys().all(|e| core.edges().contains(e)));
        }
        let again = construct_delays(d);
        assert_eq!(fam.types, again.types);
        let j = serde_json::to_string(&fam.to_json()).unwrap();
        let back: DelayJson = serde_json::from_str(&j).unwrap();
        assert_eq!(back, fam.to_json());
    }
}

#[test]
fn trivial_delays_fail_only_positivity() {
    for d in 2..=4 {
        let rep = check_delay_compatibility(&DelayFamily::trivial(d));
        assert!(!rep.passes_axiom(DelayAxiom::Positivity), "d={d}");
        for ax in [DelayAxiom::Subtree, DelayAxiom::Refinement, DelayAxiom::Core, DelayAxiom::ZeroOrInfiniteRatio] {
            assert!(rep.passes_axiom(ax), "d={d} {ax:?}");
        }
        assert!(rep.violations.iter().all(|v| v.axiom == DelayAxiom::Positivity));
    }
    assert!(check_delay_compatibility(&DelayFamily::trivial(1)).passes());
}

#[test]
fn perturbations_are_caught() {
    let mut fam = construct_delays(4);
    let t = bi("(h1h2(a1)h1h2(a2))h1h2(a3)");
    let a = fam.get_mut(&t).unwrap();
    let e = *a.lambda.keys().last().unwrap();
    *a.lambda.get_mut(&e).unwrap() *= r(5);
    assert!(!check_delay_compatibility(&fam).passes_axiom(DelayAxiom::Refinement));

    let mut fam = construct_delays(3);
    let t = bi("(h1h2)(a1,a2)");
    fam.get_mut(&t).unwrap().lambda.insert(1, r(2));
    assert!(!check_delay_compatibility(&fam).passes_axiom(DelayAxiom::ZeroOrInfiniteRatio));
}

#[test]
fn delayed_evaluation_examples() {
    let mut a = DelayAssignment::trivial(bi("h1h2(a1)h1h2(a2)"));
    assert_eq!(delayed_evaluation(&a, &[r(3), r(7)]).unwrap(), vec![r(3), r(7)]);
    a.lambda.insert(1, r(2));
    a.lambda.insert(2, r(3));
    assert_eq!(delayed_evaluation(&a, &[r(3), r(2)]).unwrap(), vec![r(6), r(6)]);
    assert!(matches!(delayed_evaluation(&a, &[r(1)]), Err(DelayError::RatioCount { expected: 2, got: 1 })));
    assert!(matches!(delayed_evaluation(&a, &[r(1), -r(1)]), Err(DelayError::NonPositive(_))));
}

#[test]
fn regularity_holds_on_every_multi_bubble_type() {
    for d in 2..=4 {
        let fam = construct_delays(d);
        let mut facets = 0;
        for a in fam.types.iter().filter(|a| has_finite_ratio(&a.tree) && Core::of(&a.tree).k() >= 2) {
            let rep = regularity_surrogate(a);
            assert!(rep.full_rank(), "{rep:?}");
            assert_eq!(rep.rank + 1, rep.k);
            facets += usize::from(stratum_codim(&a.tree) == 1);
        }
        assert!(facets > 0, "d={d}");
    }
}

#[test]
fn two_bubbles_get_distinct_delays() {
    let fam = construct_delays(2);
    let a = fam.get(&bi("h1h2(a1)h1h2(a2)")).unwrap();
    assert!(a.get(1) < a.get(2));
    for a in construct_delays(1).types {
        assert!(a.lambda.values().all(One::is_one));
    }
}

#[test]
fn formal_dimensions() {
    let m = |dims: Vec<i64>, biquilted: Vec<usize>| FormalModuliDims { dims, biquilted };
    assert_eq!(formal_dimension(&m(vec![0], vec![0])), 0);
    let p = m(vec![0, 1, 1, 0], vec![1, 2, 3]);
    assert_eq!(formal_dimension(&p), 0);
    assert_eq!(rigid_bubble(&p), Some(3));
    assert_eq!(formal_dimension(&m(vec![0, 1, 1], vec![1, 2])), 1);
    assert_eq!(formal_dimension(&m(vec![1, 1], vec![0, 1])), 1);
    assert_eq!(rigid_bubble(&m(vec![1, 0, 0], vec![1, 2])), None);
}

fn finite_ratio_types() -> Vec<DelayAssignment> {
    construct_delays(4).types.into_iter().filter(|a| has_finite_ratio(&a.tree)).collect()
}

proptest! {
    #[test]
    fn delayed_evaluation_multiplies_along_paths(idx in any::<prop::sample::Index>(), seeds in proptest::collection::vec((1i64..50, 1i64..50), 4)) {
        let types = finite_ratio_types();
        let a = &types[idx.index(types.len())];
        let core = Core::of(&a.tree);
        let ratios: Vec<BigRational> = seeds.iter().take(core.k()).map(|&(p, q)| BigRational::new(p.into(), q.into())).collect();
        prop_assume!(ratios.len() == core.k());
        let out = delayed_evaluation(a, &ratios).unwrap();
        let flat = a.tree.flat();
        for ((&v, rho), got) in core.outer.iter().zip(&ratios).zip(&out) {
            let product = above(&flat.parent, v).into_iter().fold(BigRational::one(), |acc, e| acc * a.get(e));
            prop_assert_eq!(got, &(rho * product));
        }
    }
}
