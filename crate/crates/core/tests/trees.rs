use std::collections::BTreeSet;

use quilthedra::trees::{contractions, enumerate, parse_expression, refines, Family, Tree, TreeError, TreeJson};

/// Every full parenthesization of `a_i..a_j`, wrapped in brackets unless it
/// is a single letter.
fn full(i: usize, j: usize) -> Vec<String> {
    if i == j {
        return vec![format!("a{i}")];
    }
    let mut out = Vec::new();
    for k in i..j {
        for l in full(i, k) {
            for r in full(k + 1, j) {
                out.push(format!("({l}{r})"));
            }
        }
    }
    out
}

fn strip(s: String) -> String {
    s.strip_prefix('(').and_then(|s| s.strip_suffix(')')).map(str::to_string).unwrap_or(s)
}

fn catalan(n: u64) -> u64 {
    (0..n).fold(1, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

fn settings(dmax: usize, emax: usize) -> Vec<(Family, usize, usize)> {
    let mut out = Vec::new();
    for f in Family::ALL {
        let es = if f == Family::Seam { emax } else { 0 };
        for e in 0..=es {
            for d in f.min_d()..=dmax {
                out.push((f, d, e));
            }
        }
    }
    out
}

#[test]
fn small_enumerations() {
    let n = |f, d, e| enumerate(f, d, e).unwrap().len();
    assert_eq!(n(Family::Stable, 2, 0), 1);
    assert_eq!(n(Family::Stable, 4, 0), 11);
    assert_eq!(n(Family::Colored, 3, 0), 13);
    assert_eq!(n(Family::Bicolored, 2, 0), 11);
    assert_eq!(n(Family::Seam, 2, 1), 17);
    assert!(matches!(enumerate(Family::Stable, 1, 0), Err(TreeError::DegreeTooSmall { .. })));
}

#[test]
fn binary_trees_are_the_full_parenthesizations() {
    for d in 2..=8 {
        let trees = enumerate(Family::Stable, d, 0).unwrap();
        let binary: BTreeSet<Tree> = trees.iter().filter(|t| t.edge_count() == d - 2).cloned().collect();
        let brute: BTreeSet<Tree> = full(1, d).into_iter().map(|s| parse_expression(&strip(s), Family::Stable).unwrap()).collect();
        assert_eq!(brute.len() as u64, catalan(d as u64 - 1), "d={d}");
        assert_eq!(binary, brute, "d={d}");
        assert_eq!(trees.iter().filter(|t| t.edge_count() == 0).count(), 1);
    }
}

#[test]
fn enumeration_is_duplicate_free_and_canonical() {
    for (f, d, e) in settings(5, 2) {
        let trees = enumerate(f, d, e).unwrap();
        let set: BTreeSet<&Tree> = trees.iter().collect();
        assert_eq!(set.len(), trees.len(), "{f} {d} {e}");
        for t in &trees {
            assert_eq!(Tree::new(f, t.root.clone()).as_ref(), Ok(t));
            assert_eq!((t.d, t.e), (d, e));
        }
    }
}

#[test]
fn expressions_and_json_round_trip() {
    for (f, d, e) in settings(6, 2) {
        if f == Family::Seam && d + e > 7 {
            continue;
        }
        for t in enumerate(f, d, e).unwrap() {
            let s = t.to_expression();
            assert_eq!(parse_expression(&s, f).as_ref(), Ok(&t), "{s}");
            let j: TreeJson = serde_json::from_str(&serde_json::to_string(&t.to_json()).unwrap()).unwrap();
            assert_eq!(Tree::from_json(&j).as_ref(), Ok(&t), "{s}");
        }
    }
}

#[test]
fn largest_seam_expressions_round_trip() {
    let trees = enumerate(Family::Seam, 6, 2).unwrap();
    assert!(trees.iter().all(|t| parse_expression(&t.to_expression(), Family::Seam).as_ref() == Ok(t)));
}

#[test]
fn contraction_drops_one_edge() {
    for (f, d, e) in settings(5, 1) {
        for t in enumerate(f, d, e).unwrap() {
            for edge in 1..=t.edge_count() {
                if let Ok(c) = t.contract_edge(edge) {
                    assert_eq!(c.edge_count() + 1, t.edge_count(), "{t} edge {edge}");
                    assert_eq!((c.family, c.d, c.e), (t.family, t.d, t.e));
                    assert!(c.validate().is_ok());
                    assert!(refines(&t, &c));
                    assert!(!refines(&c, &t));
                }
            }
            assert!(t.contract_edge(t.edge_count() + 1).is_err());
        }
    }
}

#[test]
fn refinement_is_a_partial_order() {
    for (f, d, e) in [(Family::Stable, 6, 0), (Family::Colored, 4, 0), (Family::Bicolored, 3, 0), (Family::Seam, 2, 2), (Family::Seam, 3, 1)] {
        let trees = enumerate(f, d, e).unwrap();
        let n = trees.len();
        let r: Vec<Vec<bool>> = trees.iter().map(|a| trees.iter().map(|b| refines(a, b)).collect()).collect();
        for i in 0..n {
            assert!(r[i][i]);
            let up: BTreeSet<&Tree> = contractions(&trees[i]).iter().filter_map(|c| trees.iter().find(|t| *t == c)).collect();
            for j in 0..n {
                if i != j {
                    assert!(!(r[i][j] && r[j][i]), "{} {}", trees[i], trees[j]);
                    assert_eq!(r[i][j], up.contains(&trees[j]), "{} {}", trees[i], trees[j]);
                }
                if r[i][j] {
                    assert!(r[j].iter().zip(&r[i]).all(|(jk, ik)| !jk || *ik), "{}", trees[i]);
                }
            }
        }
    }
}

#[test]
fn pentagon_vertices_are_incomparable() {
    let vs: Vec<Tree> = enumerate(Family::Stable, 4, 0).unwrap().into_iter().filter(|t| t.edge_count() == 2).collect();
    assert_eq!(vs.len(), 5);
    for a in &vs {
        for b in &vs {
            assert_eq!(refines(a, b), a == b);
        }
    }
}

#[test]
fn expression_examples() {
    for (s, f) in [
        ("(a1a2)a3", Family::Stable),
        ("h((a1a2)a3)", Family::Colored),
        ("h1(h2(a1)h2(a2))", Family::Bicolored),
        ("h(/a1)h(t1/)", Family::Seam),
        ("(h1h2)(a1,a2)", Family::Bicolored),
        ("h1h2(a1)h1h2(a2)", Family::Bicolored),
    ] {
        assert_eq!(parse_expression(s, f).unwrap().to_expression(), s);
    }
    assert!(parse_expression("h(a1)h(a3)", Family::Colored).is_err());
}
