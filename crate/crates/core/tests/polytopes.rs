use std::collections::{BTreeMap, BTreeSet};

use quilthedra::gluing::stratum_codim;
use quilthedra::polytopes::{
    build_face_poset, classify_facet, forget_marking, forget_seam, ratio_stratum, FacePoset, FacetTag, PolytopeError, RatioStratum,
};
use quilthedra::trees::{parse_expression, refines, Family, Tree};

/// Every bracketing of `a_i..a_j` as the contents of one vertex: a split
/// into at least two consecutive blocks, each a letter or a bracketed
/// vertex. Returns `(expression, bracket pairs)`.
fn bracketings(i: usize, j: usize) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    for first in i..j {
        for (head, hk) in block(i, first) {
            for (tail, tk) in blocks(first + 1, j) {
                out.push((format!("{head}{tail}"), hk + tk));
            }
        }
    }
    out
}

/// One or more consecutive blocks covering `a_i..a_j`.
fn blocks(i: usize, j: usize) -> Vec<(String, usize)> {
    let mut out = block(i, j);
    for first in i..j {
        for (head, hk) in block(i, first) {
            for (tail, tk) in blocks(first + 1, j) {
                out.push((format!("{head}{tail}"), hk + tk));
            }
        }
    }
    out
}

fn block(i: usize, j: usize) -> Vec<(String, usize)> {
    if i == j {
        return vec![(format!("a{i}"), 0)];
    }
    bracketings(i, j).into_iter().map(|(s, k)| (format!("({s})"), k + 1)).collect()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |b, i| b * (n - i) / (i + 1))
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

fn families(p: &FacePoset) -> BTreeMap<&'static str, usize> {
    p.facet_families().into_iter().map(|(t, n)| (t.name(), n)).collect()
}

#[test]
fn f_vector_examples() {
    for (f, d, e, fv) in [
        (Family::Stable, 4, 0, vec![5, 5, 1]),
        (Family::Colored, 2, 0, vec![2, 1]),
        (Family::Colored, 3, 0, vec![6, 6, 1]),
        (Family::Seam, 2, 1, vec![8, 8, 1]),
        (Family::Seam, 1, 1, vec![2, 1]),
        (Family::Bicolored, 2, 0, vec![5, 5, 1]),
    ] {
        let p = build_face_poset(f, d, e).unwrap();
        assert_eq!(p.f_vector(), fv, "{f} {d} {e}");
        assert_eq!(p.f_vector().iter().sum::<usize>(), p.len());
        assert!(p.euler_check());
    }
}

#[test]
fn associahedron_f_vectors_match_bracketings() {
    for d in 2..=7 {
        let p = build_face_poset(Family::Stable, d, 0).unwrap();
        let all = bracketings(1, d);
        let mut expected = vec![0; d - 1];
        for (_, k) in &all {
            expected[d - 2 - k] += 1;
        }
        assert_eq!(p.f_vector(), expected, "d={d}");
        for (k, &n) in expected.iter().rev().enumerate() {
            let k = k as u64;
            let n_gon = d as u64 + 1;
            assert_eq!(n as u64, binomial(n_gon - 3, k) * binomial(n_gon + k - 1, k) / (k + 1), "d={d} k={k}");
        }
        let faces: BTreeSet<Tree> = p.faces.iter().map(|f| f.tree.clone()).collect();
        let brute: BTreeSet<Tree> = all.iter().map(|(s, _)| parse_expression(s, Family::Stable).unwrap()).collect();
        assert_eq!(faces, brute);
    }
}

#[test]
fn euler_relation() {
    for (f, d, e) in settings(5, 2) {
        let p = build_face_poset(f, d, e).unwrap();
        assert_eq!(p.euler_characteristic(), 1, "{f} {d} {e}");
        assert_eq!(p.dim, f.top_dim(d, e));
    }
}

#[test]
fn graded_with_a_unique_top_and_facets_below_it() {
    let mut cases = settings(4, 1);
    cases.extend([(Family::Stable, 5, 0), (Family::Stable, 6, 0), (Family::Colored, 5, 0), (Family::Seam, 3, 2)]);
    for (f, d, e) in cases {
        let p = build_face_poset(f, d, e).unwrap();
        assert!(p.is_graded(), "{f} {d} {e}");
        let top = p.top();
        assert_eq!(top.len(), 1);
        assert_eq!(p.faces[top[0]].tree.edge_count(), 0);
        let up = p.upsets();
        let mut has_lower = vec![false; p.len()];
        for (i, face) in p.faces.iter().enumerate() {
            for &j in &up[i] {
                has_lower[j] = true;
                assert!(p.faces[j].dim > face.dim);
            }
            if i != top[0] {
                assert!(up[i].contains(&top[0]));
            }
            let only_top = up[i] == [top[0]];
            assert_eq!(only_top, face.facet_tag.is_some(), "{}", face.tree);
            if face.facet_tag.is_some() {
                assert_eq!(stratum_codim(&face.tree), 1);
            }
        }
        for (i, face) in p.faces.iter().enumerate() {
            if !has_lower[i] {
                assert_eq!(face.dim, 0, "{}", face.tree);
                assert_eq!(stratum_codim(&face.tree), p.dim);
            }
        }
        let j = p.to_json();
        assert_eq!((j.faces.len(), j.covers.len()), (p.len(), p.covers().len()));
    }
}

#[test]
fn facet_family_examples() {
    let p = build_face_poset(Family::Bicolored, 2, 0).unwrap();
    let expected: BTreeMap<&str, usize> =
        [("once-quilted-bubbles", 2), ("unquilted-bubble", 1), ("biquilted-bubbles", 1), ("seams-together", 1)].into_iter().collect();
    assert_eq!(families(&p), expected);
    for d in 2..=6 {
        let p = build_face_poset(Family::Colored, d, 0).unwrap();
        let fam = families(&p);
        assert_eq!(fam.len(), 2);
        assert!(fam.values().all(|&n| n > 0), "d={d}");
    }
    let p = build_face_poset(Family::Seam, 1, 1).unwrap();
    let fam = families(&p);
    assert_eq!((fam["h-product"], fam["seam-parenthesis"], fam["boundary-parenthesis"]), (2, 0, 0));
    let faces: BTreeSet<String> = p.faces.iter().map(|f| f.tree.to_expression()).collect();
    assert_eq!(faces, ["h(t1/a1)", "h(/a1)h(t1/)", "h(t1/)h(/a1)"].into_iter().map(String::from).collect());
}

#[test]
fn associahedron_facets_are_indexed_by_bubbles() {
    for d in 3..=7 {
        let p = build_face_poset(Family::Stable, d, 0).unwrap();
        let facets: BTreeSet<Tree> = p.faces.iter().filter(|f| f.facet_tag == Some(FacetTag::TwoVertex)).map(|f| f.tree.clone()).collect();
        let mut expected = BTreeSet::new();
        for m in 2..d {
            for n in 0..=d - m {
                let a = |k: usize| format!("a{k}");
                let s: String = (1..=n).map(a).chain(std::iter::once(format!("({})", (n + 1..=n + m).map(a).collect::<String>()))).chain((n + m + 1..=d).map(a)).collect();
                expected.insert(parse_expression(&s, Family::Stable).unwrap());
            }
        }
        assert_eq!(facets, expected, "d={d}");
    }
}

#[test]
fn codimension_one_exactly_on_tagged_facets() {
    for (f, d, e) in settings(6, 1) {
        let p = build_face_poset(f, d, e).unwrap();
        for face in &p.faces {
            assert_eq!(stratum_codim(&face.tree) == 1, face.facet_tag.is_some(), "{}", face.tree);
            assert_eq!(face.dim + stratum_codim(&face.tree), p.dim);
        }
    }
}

fn check_forget_monotone(p: &FacePoset, forget: impl Fn(&Tree) -> Result<Tree, PolytopeError>) {
    for (lo, hi) in p.covers() {
        let (a, b) = (&p.faces[lo].tree, &p.faces[hi].tree);
        match (forget(a), forget(b)) {
            (Ok(x), Ok(y)) => assert!(refines(&x, &y), "{a} -> {x}, {b} -> {y}"),
            (Err(_), Err(_)) => {}
            (x, y) => panic!("{a}: {x:?}, {b}: {y:?}"),
        }
    }
}

#[test]
fn forgetful_maps_are_monotone() {
    let mut cases = settings(5, 1);
    cases.extend([(Family::Stable, 6, 0), (Family::Colored, 6, 0), (Family::Seam, 3, 2)]);
    for (f, d, e) in cases {
        let p = build_face_poset(f, d, e).unwrap();
        for i in 1..=d {
            check_forget_monotone(&p, |t| forget_marking(t, i));
        }
        if f == Family::Seam {
            for j in 1..=e {
                check_forget_monotone(&p, |t| forget_seam(t, j));
            }
        }
    }
}

#[test]
fn bicolored_forgetful_maps_are_monotone_at_six() {
    let p = build_face_poset(Family::Bicolored, 6, 0).unwrap();
    for i in 1..=6 {
        check_forget_monotone(&p, |t| forget_marking(t, i));
    }
}

#[test]
fn forgetting_preserves_surviving_tags() {
    for (f, d, e) in settings(5, 2) {
        let p = build_face_poset(f, d, e).unwrap();
        for face in p.faces.iter().filter(|x| x.facet_tag.is_some()) {
            let mut images: Vec<Tree> = (1..=d).filter_map(|i| forget_marking(&face.tree, i).ok()).collect();
            images.extend((1..=e).filter_map(|j| forget_seam(&face.tree, j).ok()));
            for g in images.into_iter().filter(|g| stratum_codim(g) == 1) {
                assert_eq!(classify_facet(&g), face.facet_tag, "{} -> {g}", face.tree);
            }
        }
    }
}

#[test]
fn forget_examples() {
    let s = |x| parse_expression(x, Family::Stable).unwrap();
    for i in 1..=4 {
        assert_eq!(forget_marking(&s("a1a2a3a4"), i).unwrap(), s("a1a2a3"));
    }
    assert_eq!(forget_marking(&s("((a1a2)a3)a4"), 4).unwrap(), s("(a1a2)a3"));
    assert!(matches!(forget_marking(&s("a1a2"), 2), Err(PolytopeError::ForgetBelowMinimum { .. })));
    assert!(forget_marking(&s("a1a2a3"), 4).is_err());
}

#[test]
fn ratio_strata() {
    let b = |x| parse_expression(x, Family::Bicolored).unwrap();
    assert_eq!(ratio_stratum(&b("(h1h2)(a1,a2,a3)")), Some(RatioStratum::Zero));
    assert_eq!(ratio_stratum(&b("h1(h2(a1),h2(a2))")), Some(RatioStratum::Infinite));
    assert_eq!(ratio_stratum(&b("h1h2(a1,a2)")), Some(RatioStratum::Finite));
    assert_eq!(ratio_stratum(&parse_expression("a1a2", Family::Stable).unwrap()), None);
    for d in 1..=4 {
        let p = build_face_poset(Family::Bicolored, d, 0).unwrap();
        for face in &p.faces {
            let r = ratio_stratum(&face.tree).unwrap();
            let expected = match face.facet_tag {
                Some(FacetTag::SeamsTogether) => Some(RatioStratum::Zero),
                Some(FacetTag::OnceQuiltedBubbles) => Some(RatioStratum::Infinite),
                Some(_) => Some(RatioStratum::Finite),
                None if face.dim == p.dim => Some(RatioStratum::Finite),
                None => None,
            };
            if let Some(x) = expected {
                assert_eq!(r, x, "{}", face.tree);
            }
        }
    }
}
