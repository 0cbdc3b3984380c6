use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use quilthedra::ainfty::generate::{dg_path, flow_functor, inverse_functor, pushforward, random_prenat};
use quilthedra::ainfty::*;
use quilthedra::gluing::{
    check_delay_compatibility, construct_delays, formal_dimension, has_finite_ratio, regularity_surrogate, rigid_bubble, stratum_codim, Core,
    FormalModuliDims,
};
use quilthedra::polytopes::{build_face_poset, classify_facet, FacePoset, FacetTag};
use quilthedra::relations::{associativity_exhaustive, geometric_compose, Correspondence, FiniteSpace, Relation, RelationsJson, Width};
use quilthedra::signs::{assoc_sign_terms, functor_sign_terms, gluing_orientation_sign, verify_assoc, verify_functor, GluingMap, Var};
use quilthedra::trees::{parse_expression, Family, Tree};
use rand::rngs::StdRng;
use rand::SeedableRng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
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

// 1

fn polytope_counts() -> Outcome {
    let cases = [
        ("K^4", Family::Stable, 4, 0, vec![5, 5, 1]),
        ("K^{2,0}", Family::Colored, 2, 0, vec![2, 1]),
        ("K^{3,0}", Family::Colored, 3, 0, vec![6, 6, 1]),
        ("K^{2,1}", Family::Seam, 2, 1, vec![8, 8, 1]),
        ("K^{1,1}", Family::Seam, 1, 1, vec![2, 1]),
        ("K^{2,0,0}", Family::Bicolored, 2, 0, vec![5, 5, 1]),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f, d, e, expected) in cases {
        let t = Instant::now();
        let fv = build_face_poset(f, d, e).map(|p| p.f_vector()).unwrap_or_default();
        let fast = t.elapsed() < Duration::from_secs(1);
        ok &= fv == expected && fast;
        parts.push(format!("{name} {fv:?}"));
    }
    outcome(ok, parts.join(", "))
}

// 2

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

fn catalan_vertices() -> Outcome {
    let mut ok = true;
    let mut counts = Vec::new();
    for d in 2..=8 {
        let p = build_face_poset(Family::Stable, d, 0).unwrap();
        let vertices: BTreeSet<Tree> = p.faces.iter().filter(|f| f.dim == 0).map(|f| f.tree.clone()).collect();
        let brute: BTreeSet<Tree> = full(1, d)
            .into_iter()
            .map(|s| {
                let inner = s.strip_prefix('(').and_then(|s| s.strip_suffix(')')).map(str::to_string).unwrap_or(s);
                parse_expression(&inner, Family::Stable).unwrap()
            })
            .collect();
        ok &= vertices == brute;
        counts.push(vertices.len());
    }
    outcome(ok, format!("vertex counts d=2..8 {counts:?}"))
}

// 3 and 5

fn all_posets() -> Vec<FacePoset> {
    settings(6, 2).into_iter().map(|(f, d, e)| build_face_poset(f, d, e).unwrap()).collect()
}

fn euler(posets: &[FacePoset]) -> Outcome {
    let bad: Vec<String> = posets.iter().filter(|p| p.euler_characteristic() != 1).map(|p| format!("{} d={} e={}", p.family, p.d, p.e)).collect();
    let faces: usize = posets.iter().map(FacePoset::len).sum();
    outcome(bad.is_empty(), format!("{} posets, {faces} faces, failures {bad:?}", posets.len()))
}

fn codimension(posets: &[FacePoset]) -> Outcome {
    let mut bad = Vec::new();
    let mut facets = 0;
    for p in posets.iter().filter(|p| p.d <= 6) {
        for face in &p.faces {
            let one = stratum_codim(&face.tree) == 1;
            facets += usize::from(one);
            let shape = classify_facet(&face.tree);
            if one != face.facet_tag.is_some() || one != shape.is_some() || shape != face.facet_tag {
                bad.push(face.tree.to_expression());
            }
        }
    }
    outcome(bad.is_empty(), format!("{facets} tagged facets, mismatches {}", bad.len()))
}

// 4

fn bimultiplihedron_facets() -> Outcome {
    let p = build_face_poset(Family::Bicolored, 2, 0).unwrap();
    let fam = p.facet_families();
    let expected: BTreeMap<FacetTag, usize> = [
        (FacetTag::OnceQuiltedBubbles, 2),
        (FacetTag::UnquiltedBubble, 1),
        (FacetTag::BiquiltedBubbles, 1),
        (FacetTag::SeamsTogether, 1),
    ]
    .into_iter()
    .collect();
    let shown: Vec<String> = fam.iter().map(|(t, n)| format!("{t}: {n}")).collect();
    outcome(fam == expected, shown.join(", "))
}

// 6

fn parity(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

fn sign_congruences() -> Outcome {
    let assoc = verify_assoc(6);
    let functor = verify_functor(6);
    let mut target_misses = 0;
    for d in 1..=6usize {
        for mask in 0u32..1 << d {
            let degs: Vec<i64> = (0..d).map(|k| i64::from(mask >> k & 1)).collect();
            let xval = |v: Var| matches!(v, Var::X(k) if parity(degs[k - 1]));
            let target: i64 = (1..=d).map(|k| (k as i64 + 1) * degs[k - 1]).sum();
            for m in 1..=d {
                for n in 0..=d - m {
                    let y: i64 = degs[n..n + m].iter().sum::<i64>() + m as i64;
                    let val = |v: Var| if v == Var::Y(0) { parity(y) } else { xval(v) };
                    let total = assoc_sign_terms(d, n, m).unwrap().iter().filter(|p| p.eval(val)).count() as i64;
                    target_misses += usize::from(parity(total) != parity(target + 1));
                }
            }
            for parts in quilthedra::signs::compositions(d) {
                let mut ys = Vec::new();
                let mut offset = 0;
                for &p in &parts {
                    ys.push(degs[offset..offset + p].iter().sum::<i64>() + 1 - p as i64);
                    offset += p;
                }
                let val = |v: Var| match v {
                    Var::Y(j) => parity(ys[j - 1]),
                    other => xval(other),
                };
                let total = functor_sign_terms(d, &parts).unwrap().iter().filter(|p| p.eval(val)).count() as i64;
                target_misses += usize::from(parity(total) != parity(1 + target));
            }
        }
    }
    let ok = assoc.failures.is_empty() && functor.failures.is_empty() && target_misses == 0;
    outcome(
        ok,
        format!(
            "assoc {} cases, {} failures; functor {} cases, {} failures; target misses {target_misses}",
            assoc.cases,
            assoc.failures.len(),
            functor.cases,
            functor.failures.len()
        ),
    )
}

// 7

fn jacobian() -> Outcome {
    let maps = GluingMap::all(5);
    let closed = |map: &GluingMap| {
        let p = match map {
            GluingMap::Assoc { n, m, .. } => (*m as i64 - 1) * (*n as i64 - 1),
            GluingMap::MultUnquilted { i, j, .. } => (i * j + j) as i64,
            GluingMap::MultQuilted { parts } => {
                let m = parts.len() as i64;
                1 + parts.iter().zip(1..).map(|(&ij, j)| (m - j) * (ij as i64 - 1)).sum::<i64>()
            }
        };
        if parity(p) {
            -1
        } else {
            1
        }
    };
    let bad = maps.iter().filter(|m| gluing_orientation_sign(m) != closed(m)).count();
    outcome(bad == 0, format!("{} maps, {bad} mismatches", maps.len()))
}

// 8

fn bijections() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, ds, e) in [(Identity::Assoc, 2..=6, 0), (Identity::Functor, 1..=5, 0), (Identity::PrenatMu1, 1..=4, 1), (Identity::Homotopy, 1..=4, 0)] {
        let mut facets = Vec::new();
        for d in ds {
            let r = term_facet_correspondence(id, d, e).unwrap();
            ok &= r.closes() && r.unmatched_terms.is_empty() && r.unmatched_facets.is_empty();
            facets.push(r.facets);
        }
        parts.push(format!("{id} {facets:?}"));
    }
    outcome(ok, parts.join(", "))
}

// 9

fn load(stem: &str) -> Fixture {
    Fixture::load(fixtures(), stem).unwrap()
}

fn fixture_functor(fx: &Fixture, name: &str) -> (Functor, Instance) {
    let j = fx.functor_json(name).unwrap();
    let target = j.target.as_deref().map_or_else(|| fx.instance.clone(), |t| load(t).instance);
    (Functor::from_json(j, &fx.instance, &target).unwrap(), target)
}

fn engine() -> Result<Outcome, AinftyError> {
    let mut notes = Vec::new();
    let mut ok = true;
    for stem in ["path3", "dgpath", "dgpath_push", "twoterm", "path3_flipped"] {
        let fx = load(stem);
        let holds = check_ainfty(&fx.instance, 4, SignConvention::Shifted)?.passes();
        ok &= holds != fx.json.negative;
    }
    notes.push("fixtures pass, flipped fails".to_string());

    let curved = load("curved").instance;
    let curved_ok = check_ainfty(&curved, 3, SignConvention::Shifted)?.passes() && check_curvature_floer(&curved, &curved.w).passes();
    ok &= curved_ok;
    notes.push(format!("curved {curved_ok}"));

    let path = load("path3");
    let c = &path.instance;
    let id = identity_functor(c);
    let mut squares = 0;
    for j in &path.json.prenats {
        let t = PreNat::from_json(j, c, c, 4)?;
        let m = mu1_prenat(&t, &id, &id, c, c, 4)?;
        ok &= mu1_prenat(&m, &id, &id, c, c, 4)?.is_zero();
        squares += 1;
    }
    let mut composites = 0;
    let (f, push) = fixture_functor(&load("dgpath"), "F");
    let (g, _) = fixture_functor(&load("dgpath_push"), "G");
    let dg = load("dgpath").instance;
    for (outer, inner, c0, c2) in [(&g, &f, &dg, &dg), (&f, &g, &push, &push)] {
        ok &= check_functor(&compose_functors(outer, inner, c0, c2, 4), c0, c2, 4)?.passes();
        composites += 1;
    }
    let mut homotopies = 0;
    for seed in 0..4 {
        let c1 = dg_path(3, 3, true, Ring::Z);
        let mut rng = StdRng::seed_from_u64(seed);
        let (c0, push) = pushforward(&c1, 4, 0.3, &mut rng);
        let g = inverse_functor(&push, &c0, 4)?;
        let (c2, h) = pushforward(&c1, 4, 0.3, &mut rng);
        ok &= check_functor(&compose_functors(&h, &g, &c0, &c2, 4), &c0, &c2, 4)?.passes();
        composites += 1;

        let h1 = random_prenat("H1", &g, &g, &c0, &c1, 0, 4, false, 0.4, &mut rng);
        let g1 = flow_functor(&g, &h1, &c0, &c1, 4)?;
        let h2 = random_prenat("H2", &g1, &g1, &c0, &c1, 0, 4, false, 0.4, &mut rng);
        let g2 = flow_functor(&g1, &h2, &c0, &c1, 4)?;
        ok &= is_homotopy(&h1, &g, &g1, &c0, &c1, 4)?.passes() && is_homotopy(&h2, &g1, &g2, &c0, &c1, 4)?.passes();
        let comp = compose_homotopies(&h1, &h2, [&g, &g1, &g2], &c0, &c1, 4)?;
        ok &= is_homotopy(&comp, &g, &g2, &c0, &c1, 4)?.passes();
        homotopies += 1;

        for deg in -2..=2 {
            let t = random_prenat("T", &g, &g2, &c0, &c1, deg, 4, true, 0.4, &mut rng);
            let m = mu1_prenat(&t, &g, &g2, &c0, &c1, 4)?;
            ok &= mu1_prenat(&m, &g, &g2, &c0, &c1, 4)?.is_zero();
            squares += 1;
        }
    }
    notes.push(format!("{squares} μ1μ1 checks, {composites} composites, {homotopies} composed homotopies"));
    Ok(outcome(ok, notes.join("; ")))
}

// 10

fn relations() -> Outcome {
    let text = std::fs::read_to_string(fixtures().join("relations/basic.json")).unwrap();
    let (_, corrs) = serde_json::from_str::<RelationsJson>(&text).unwrap().parse().unwrap();
    let mut units = true;
    for l in &corrs {
        let c = geometric_compose(l, &Correspondence::diagonal(&l.dst)).unwrap();
        units &= c.embedded && c.relation.relation == l.relation;
    }
    let w = Width::from_integer(1.into());
    let m0 = FiniteSpace::new("M0", &["p"]).unwrap();
    let m1 = FiniteSpace::new("M1", &["x", "y"]).unwrap();
    let m2 = FiniteSpace::new("M2", &["q"]).unwrap();
    let l01 = Correspondence::new("L01", m0, m1.clone(), Relation::from_pairs(1, 2, [(0, 0), (0, 1)]), w.clone(), "b").unwrap();
    let l12 = Correspondence::new("L12", m1, m2, Relation::from_pairs(2, 1, [(0, 0), (1, 0)]), w, "b").unwrap();
    let two = geometric_compose(&l01, &l12).unwrap();
    let two_ok = !two.embedded && two.fiber_product_size == 2;
    let rep = associativity_exhaustive(3, 27);
    let ok = units && two_ok && rep.failures.is_empty() && rep.shapes == 81;
    outcome(
        ok,
        format!(
            "L∘Δ = L on {} fixtures {units}; two-point fiber size {} embedded {}; {} shapes, {} triples, {} failures",
            corrs.len(),
            two.fiber_product_size,
            two.embedded,
            rep.shapes,
            rep.triples,
            rep.failures.len()
        ),
    )
}

// 11

fn delays() -> Outcome {
    let mut ok = true;
    let mut types = 0;
    let mut regular = 0;
    for d in 1..=4 {
        let fam = construct_delays(d);
        let rep = check_delay_compatibility(&fam);
        ok &= rep.passes();
        types += rep.types_checked;
        for a in fam.types.iter().filter(|a| a.tree.d == d && has_finite_ratio(&a.tree) && Core::of(&a.tree).k() >= 2) {
            ok &= regularity_surrogate(a).full_rank();
            regular += 1;
        }
    }
    let m = FormalModuliDims { dims: vec![0, 1, 1, 0], biquilted: vec![1, 2, 3] };
    let mut cases = 0;
    let mut bubble_ok = formal_dimension(&m) == 0 && rigid_bubble(&m) == Some(3);
    for k in 1..=4usize {
        for bits in 0u32..1 << k {
            let mut dims = vec![0i64];
            dims.extend((0..k).map(|i| i64::from(bits >> i & 1)));
            let m = FormalModuliDims { dims, biquilted: (1..=k).collect() };
            if formal_dimension(&m) == 0 {
                cases += 1;
                let rigid: Vec<usize> = (1..=k).filter(|&i| m.dims[i] == 0).collect();
                bubble_ok &= rigid.len() == 1 && rigid_bubble(&m) == Some(rigid[0]);
            }
        }
    }
    bubble_ok &= cases == 10;
    outcome(ok && bubble_ok, format!("{types} typed assignments compatible, {regular} regular multi-bubble types, {cases} rigid-bubble cases"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome, Duration, Option<Duration>)> = Vec::new();
    let mut run = |n: usize, name: &'static str, limit: Option<u64>, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((n, name, o, t.elapsed(), limit.map(Duration::from_secs)));
    };
    run(1, "polytope f-vectors", None, &mut polytope_counts);
    run(2, "Catalan vertex counts", Some(10), &mut catalan_vertices);
    let mut posets = Vec::new();
    run(3, "Euler relation", Some(60), &mut || {
        posets = all_posets();
        euler(&posets)
    });
    run(4, "bimultiplihedron facet families", None, &mut bimultiplihedron_facets);
    run(5, "codimension one on tagged facets", None, &mut || codimension(&posets));
    run(6, "sign congruences", Some(30), &mut sign_congruences);
    run(7, "Jacobian sign oracle", None, &mut jacobian);
    run(8, "term-facet bijections", None, &mut bijections);
    run(9, "A-infinity engine", Some(60), &mut || engine().unwrap_or_else(|e| outcome(false, e.to_string())));
    run(10, "relations model", None, &mut relations);
    run(11, "delay machinery", None, &mut delays);

    let mut failed = 0;
    for (n, name, o, t, limit) in &results {
        let in_time = limit.is_none_or(|l| *t < l);
        let ok = o.ok && in_time;
        failed += usize::from(!ok);
        let budget = limit.map(|l| format!(" / {} s", l.as_secs())).unwrap_or_default();
        println!("criterion {n:>2}: {}  {name}  ({:.2} s{budget})  {}", if ok { "PASS" } else { "FAIL" }, t.as_secs_f64(), o.detail);
    }
    println!("acceptance: {} of {} criteria pass ({:.1} s)", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
