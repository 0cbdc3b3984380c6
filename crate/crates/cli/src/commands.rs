use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quilthedra::ainfty::generate::{flow_functor, random_prenat};
use quilthedra::ainfty::{
    check_ainfty, check_curvature_floer, check_functor, cohomology_functor, compose_functors, compose_homotopies, is_homotopy,
    mu1_prenat, term_facet_correspondence, CheckReport, Fixture, Functor, Identity, Instance, PreNat, SignConvention,
};
use quilthedra::gluing::{
    check_delay_compatibility, construct_delays, formal_dimension, has_finite_ratio, regularity_surrogate, rigid_bubble, stratum_codim, Core,
    FormalModuliDims,
};
use quilthedra::polytopes::build_face_poset;
use quilthedra::relations::{
    associativity_exhaustive, concatenate, geometric_compose, phi_generalized, phi_on_objects, Correspondence, FiniteSpace,
    GeneralizedCorrespondence, Relation, RelationsJson, Width,
};
use quilthedra::signs::{gluing_orientation_sign, verify_assoc, verify_functor, GluingMap, SignReport};
use quilthedra::trees::{enumerate, Family};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

use crate::report::Check;

pub fn enumerate_trees(family: Family, d: usize, e: usize) -> Vec<Check> {
    match enumerate(family, d, e) {
        Ok(trees) => {
            let exprs: Vec<String> = trees.iter().map(|t| t.to_expression()).collect();
            vec![Check::new(format!("enumerate {family} d={d} e={e}"), !exprs.is_empty(), json!({ "count": exprs.len(), "trees": exprs }))]
        }
        Err(err) => vec![Check::error(format!("enumerate {family} d={d} e={e}"), err)],
    }
}

/// f-vector, Euler characteristic, grading and a unique top face.
pub fn faces(family: Family, d: usize, e: usize, with_poset: bool) -> Vec<Check> {
    let name = format!("faces {family} d={d} e={e}");
    let poset = match build_face_poset(family, d, e) {
        Ok(p) => p,
        Err(err) => return vec![Check::error(name, err)],
    };
    let top = poset.top();
    let ok = poset.euler_check() && top.len() == 1 && poset.is_graded();
    let mut detail = json!({
        "dim": poset.dim,
        "f_vector": poset.f_vector(),
        "euler_characteristic": poset.euler_characteristic(),
        "graded": poset.is_graded(),
        "top_faces": top.len(),
    });
    if with_poset {
        detail["poset"] = serde_json::to_value(poset.to_json()).expect("serializable");
    }
    vec![Check::new(name, ok, detail)]
}

pub fn hasse_dot(family: Family, d: usize, e: usize) -> Result<String, String> {
    build_face_poset(family, d, e).map(|p| p.to_dot()).map_err(|e| e.to_string())
}

fn identity_for(family: Family, e: usize) -> Option<Identity> {
    match family {
        Family::Stable => Some(Identity::Assoc),
        Family::Colored => Some(Identity::Functor),
        Family::Seam if e == 1 => Some(Identity::PrenatMu1),
        Family::Bicolored => Some(Identity::Homotopy),
        Family::Seam => None,
    }
}

/// Facet families, codimension of every tagged facet, and the matching of
/// facets against the terms of the corresponding identity.
pub fn facets(family: Family, d: usize, e: usize) -> Vec<Check> {
    let name = format!("facets {family} d={d} e={e}");
    let poset = match build_face_poset(family, d, e) {
        Ok(p) => p,
        Err(err) => return vec![Check::error(name, err)],
    };
    let tagged: Vec<_> = poset.faces.iter().filter(|f| f.facet_tag.is_some()).collect();
    let bad: Vec<String> = tagged.iter().filter(|f| stratum_codim(&f.tree) != 1).map(|f| f.tree.to_expression()).collect();
    let list: Vec<_> = tagged.iter().map(|f| json!({ "facet": f.tree.to_expression(), "tag": f.facet_tag })).collect();
    let families: BTreeMap<String, usize> = poset.facet_families().into_iter().map(|(t, n)| (t.name().to_string(), n)).collect();
    let mut out = vec![Check::new(name, bad.is_empty(), json!({ "count": tagged.len(), "families": families, "facets": list })).with_counterexamples(bad)];
    if let Some(id) = identity_for(family, e) {
        out.push(terms(id, d, e));
    }
    out
}

pub fn terms(id: Identity, d: usize, e: usize) -> Check {
    let name = format!("terms {id} d={d}");
    match term_facet_correspondence(id, d, e) {
        Ok(r) => {
            let by_tag: BTreeMap<String, usize> = r.counts_by_tag().into_iter().map(|(t, n)| (t.name().to_string(), n)).collect();
            let mut bad: Vec<String> = r.unmatched_terms.iter().map(|t| format!("term {t}")).collect();
            bad.extend(r.unmatched_facets.iter().map(|f| format!("facet {f}")));
            Check::new(name, r.closes(), json!({ "facets": r.facets, "terms": r.terms, "excluded": r.excluded.len(), "by_tag": by_tag }))
                .with_counterexamples(bad)
        }
        Err(err) => Check::error(name, err),
    }
}

fn sign_check(name: String, rep: SignReport) -> Check {
    let ok = rep.failures.is_empty();
    Check::new(name, ok, json!({ "cases": rep.cases, "failures": rep.failures.len() })).with_counterexamples(rep.failures)
}

pub fn signs(family: &str, dmax: usize) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(family, "assoc" | "all") {
        out.push(sign_check(format!("signs assoc dmax={dmax}"), verify_assoc(dmax)));
    }
    if matches!(family, "functor" | "all") {
        out.push(sign_check(format!("signs functor dmax={dmax}"), verify_functor(dmax)));
    }
    if matches!(family, "jacobian" | "all") {
        let maps = GluingMap::all(dmax);
        let bad: Vec<_> = maps.iter().filter(|m| gluing_orientation_sign(m) != m.closed_form()).cloned().collect();
        out.push(Check::new(format!("signs jacobian dmax={dmax}"), bad.is_empty(), json!({ "cases": maps.len(), "failures": bad.len() })).with_counterexamples(bad));
    }
    out
}

pub fn delays(dmax: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for d in 1..=dmax {
        let fam = construct_delays(d);
        let rep = check_delay_compatibility(&fam);
        out.push(
            Check::new(format!("delays compatibility d={d}"), rep.passes(), json!({ "types": rep.types_checked, "violations": rep.violations.len() }))
                .with_counterexamples(rep.violations),
        );
        let mut checked = 0;
        let mut facet_types = 0;
        let mut bad = Vec::new();
        for a in fam.types.iter().filter(|a| a.tree.d == d && has_finite_ratio(&a.tree) && Core::of(&a.tree).k() >= 2) {
            checked += 1;
            facet_types += usize::from(stratum_codim(&a.tree) == 1);
            let r = regularity_surrogate(a);
            if !r.full_rank() {
                bad.push(r);
            }
        }
        out.push(
            Check::new(format!("delays regularity d={d}"), bad.is_empty(), json!({ "types": checked, "facet_types": facet_types }))
                .with_counterexamples(bad),
        );
    }
    out.push(rigid_bubble_bookkeeping(dmax.max(2)));
    out
}

/// For one unquilted and `k` biquilted components of dimension 0 or 1 with
/// total formal dimension 0 and a rigid unquilted component, exactly one
/// biquilted component is rigid.
fn rigid_bubble_bookkeeping(kmax: usize) -> Check {
    let mut cases = 0;
    let mut bad = Vec::new();
    for k in 1..=kmax {
        for bits in 0u32..1 << k {
            let mut dims = vec![0i64];
            dims.extend((0..k).map(|i| i64::from(bits >> i & 1)));
            let m = FormalModuliDims { dims, biquilted: (1..=k).collect() };
            if formal_dimension(&m) != 0 {
                continue;
            }
            cases += 1;
            let rigid: Vec<usize> = (1..=k).filter(|&i| m.dims[i] == 0).collect();
            if rigid.len() != 1 || rigid_bubble(&m) != Some(rigid[0]) {
                bad.push(m);
            }
        }
    }
    Check::new(format!("delays rigid-bubble k<={kmax}"), bad.is_empty() && cases == kmax * (kmax + 1) / 2, json!({ "cases": cases })).with_counterexamples(bad)
}

pub fn resolve_fixtures(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("QUILTHEDRA_FIXTURES").map(PathBuf::from))
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures"))
}

fn stems(dir: &Path) -> Result<Vec<String>, String> {
    let mut out: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    out.sort();
    Ok(out)
}

fn report_check(name: String, rep: &CheckReport, expect_pass: bool) -> Check {
    let ok = rep.passes() == expect_pass;
    Check::new(
        name,
        ok,
        json!({
            "identity": rep.identity,
            "tuples": rep.tuples_checked,
            "holds": rep.passes(),
            "expected": if expect_pass { "holds" } else { "fails" },
            "first_failing_arity": rep.first_failing_arity(),
        }),
    )
    .with_counterexamples(if ok && !expect_pass { Vec::new() } else { rep.residuals.clone() })
}

struct Loaded {
    stem: String,
    fixture: Fixture,
    functors: Vec<(String, Functor)>,
}

/// Associativity (or the curved identity) on every fixture instance, fixture
/// functors and their composites, pre-natural transformations, composed
/// homotopies and, over fields, induced maps on cohomology.
pub fn ainfty(dir: &Path, dmax: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let stems = match stems(dir) {
        Ok(s) => s,
        Err(e) => return vec![Check::error("ainfty fixtures", e)],
    };
    let mut instances: BTreeMap<String, Instance> = BTreeMap::new();
    let mut fixtures = Vec::new();
    for stem in &stems {
        match Fixture::load(dir, stem) {
            Ok(fx) => {
                instances.insert(stem.clone(), fx.instance.clone());
                fixtures.push((stem.clone(), fx));
            }
            Err(e) => out.push(Check::error(format!("load {stem}"), e)),
        }
    }
    let mut loaded = Vec::new();
    for (stem, fx) in fixtures {
        let c = &fx.instance;
        let negative = fx.json.negative;
        match check_ainfty(c, dmax, SignConvention::Shifted) {
            Ok(rep) => out.push(report_check(format!("ainfty {stem}"), &rep, !negative)),
            Err(e) => out.push(Check::error(format!("ainfty {stem}"), e)),
        }
        if !c.is_flat() {
            let rep = check_curvature_floer(c, &c.w);
            out.push(report_check(format!("curvature {stem}"), &rep, !negative));
        }
        let mut functors = Vec::new();
        for j in &fx.json.functors {
            let target = j.target.clone().unwrap_or_else(|| stem.clone());
            let name = format!("functor {stem}.{}", j.name);
            let Some(c1) = instances.get(&target) else {
                out.push(Check::error(name, format!("unknown target fixture {target}")));
                continue;
            };
            match Functor::from_json(j, c, c1).and_then(|f| check_functor(&f, c, c1, dmax).map(|r| (f, r))) {
                Ok((f, rep)) => {
                    out.push(report_check(name, &rep, !negative));
                    functors.push((target, f));
                }
                Err(e) => out.push(Check::error(name, e)),
            }
        }
        loaded.push(Loaded { stem, fixture: fx, functors });
    }
    out.extend(compositions(&loaded, &instances, dmax));
    for l in &loaded {
        out.extend(prenats(l, &instances, dmax));
    }
    for l in &loaded {
        for (target, f) in &l.functors {
            let (c0, c1) = (&l.fixture.instance, &instances[target]);
            if c0.is_flat() && c1.is_flat() {
                out.push(homotopy_composition(&format!("{}.{}", l.stem, f.name), f, c0, c1, dmax));
            }
            if c0.ring.is_field() && c1.ring.is_field() && c0.is_flat() && c1.is_flat() {
                let name = format!("cohomology {}.{}", l.stem, f.name);
                match cohomology_functor(f, c0, c1) {
                    Ok(h) => {
                        let dims: BTreeMap<String, usize> =
                            h.dims().into_iter().filter(|&(_, n)| n > 0).map(|((x, y), n)| (format!("{}->{}", c0.objects[x], c0.objects[y]), n)).collect();
                        out.push(Check::new(name, h.well_defined, json!({ "dims": dims, "identity": h.is_identity() })));
                    }
                    Err(e) => out.push(Check::error(name, e)),
                }
            }
        }
    }
    out
}

fn compositions(loaded: &[Loaded], instances: &BTreeMap<String, Instance>, dmax: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let all: Vec<(&str, &str, &Functor)> =
        loaded.iter().filter(|l| !l.fixture.json.negative).flat_map(|l| l.functors.iter().map(move |(t, f)| (l.stem.as_str(), t.as_str(), f))).collect();
    for &(s0, t0, inner) in &all {
        for &(s1, t1, outer) in &all {
            if t0 != s1 {
                continue;
            }
            let (c0, c2) = (&instances[s0], &instances[t1]);
            if !c0.is_flat() || !c2.is_flat() {
                continue;
            }
            let comp = compose_functors(outer, inner, c0, c2, dmax);
            let name = format!("compose {s1}.{} after {s0}.{}", outer.name, inner.name);
            match check_functor(&comp, c0, c2, dmax) {
                Ok(rep) => out.push(report_check(name, &rep, true)),
                Err(e) => out.push(Check::error(name, e)),
            }
        }
    }
    out
}

fn prenats(l: &Loaded, instances: &BTreeMap<String, Instance>, dmax: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let c0 = &l.fixture.instance;
    for j in &l.fixture.json.prenats {
        let name = format!("prenat {}.{}", l.stem, j.name);
        let find = |n: &str| l.functors.iter().find(|(_, f)| f.name == n);
        let (Some((t1, f1)), Some((t2, f2))) = (find(&j.source_functor), find(&j.target_functor)) else {
            out.push(Check::error(name, "unknown source or target functor"));
            continue;
        };
        if t1 != t2 {
            out.push(Check::error(name, "functors have different targets"));
            continue;
        }
        let c1 = &instances[t1];
        let res = PreNat::from_json(j, c0, c1, dmax).and_then(|t| {
            let m = mu1_prenat(&t, f1, f2, c0, c1, dmax)?;
            let mm = mu1_prenat(&m, f1, f2, c0, c1, dmax)?;
            Ok((m, mm))
        });
        match res {
            Ok((m, mm)) => out.push(Check::new(name, mm.is_zero(), json!({ "degree": j.degree, "closed": m.is_zero(), "mu1_mu1_zero": mm.is_zero() }))),
            Err(e) => out.push(Check::error(name, e)),
        }
    }
    out
}

/// Two seeded homotopies `F ⇒ G_1 ⇒ G_2` obtained by flowing `F`, their
/// composite, and `μ^1 ∘ μ^1 = 0` on seeded pre-natural transformations of
/// degrees −2..2.
fn homotopy_composition(label: &str, f: &Functor, c0: &Instance, c1: &Instance, dmax: usize) -> Check {
    let name = format!("homotopies {label}");
    let run = || -> Result<serde_json::Value, quilthedra::ainfty::AinftyError> {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let h1 = random_prenat("H1", f, f, c0, c1, 0, dmax, false, 0.4, &mut rng);
        let g1 = flow_functor(f, &h1, c0, c1, dmax)?;
        let h2 = random_prenat("H2", &g1, &g1, c0, c1, 0, dmax, false, 0.4, &mut rng);
        let g2 = flow_functor(&g1, &h2, c0, c1, dmax)?;
        let comp = compose_homotopies(&h1, &h2, [f, &g1, &g2], c0, c1, dmax)?;
        let flows = check_functor(&g1, c0, c1, dmax)?.passes() && check_functor(&g2, c0, c1, dmax)?.passes();
        let each = is_homotopy(&h1, f, &g1, c0, c1, dmax)?.passes() && is_homotopy(&h2, &g1, &g2, c0, c1, dmax)?.passes();
        let composite = is_homotopy(&comp, f, &g2, c0, c1, dmax)?.passes();
        let mut squares = true;
        for deg in -2..=2 {
            let t = random_prenat("T", f, &g2, c0, c1, deg, dmax, true, 0.4, &mut rng);
            let m = mu1_prenat(&t, f, &g2, c0, c1, dmax)?;
            squares &= mu1_prenat(&m, f, &g2, c0, c1, dmax)?.is_zero();
        }
        Ok(json!({ "flowed_functors": flows, "homotopies": each, "composite_is_homotopy": composite, "mu1_mu1_zero": squares }))
    };
    match run() {
        Ok(v) => {
            let ok = v.as_object().expect("object").values().all(|x| x == &json!(true));
            Check::new(name, ok, v)
        }
        Err(e) => Check::error(name, e),
    }
}

fn w(k: i64) -> Width {
    Width::from_integer(k.into())
}

/// The two-point fiber over a single image point.
fn two_point_example() -> Check {
    let m0 = FiniteSpace::new("M0", &["p"]).expect("valid");
    let m1 = FiniteSpace::new("M1", &["x", "y"]).expect("valid");
    let m2 = FiniteSpace::new("M2", &["q"]).expect("valid");
    let l01 = Correspondence::new("L01", m0, m1.clone(), Relation::from_pairs(1, 2, [(0, 0), (0, 1)]), w(1), "b").expect("valid");
    let l12 = Correspondence::new("L12", m1, m2, Relation::from_pairs(2, 1, [(0, 0), (1, 0)]), w(1), "b").expect("valid");
    let c = geometric_compose(&l01, &l12).expect("composable");
    let ok = !c.embedded && c.fiber_product_size == 2 && c.relation.relation.len() == 1;
    Check::new("relations two-point fiber", ok, json!({ "relation": c.relation.pair_names(), "embedded": c.embedded, "fiber_product_size": c.fiber_product_size }))
}

fn relation_fixture(stem: &str, spaces: &[FiniteSpace], corrs: &[Correspondence]) -> Vec<Check> {
    let mut out = Vec::new();
    let mut unit_bad = Vec::new();
    for l in corrs {
        let right = geometric_compose(l, &Correspondence::diagonal(&l.dst)).expect("composable");
        let left = geometric_compose(&Correspondence::diagonal(&l.src), l).expect("composable");
        let ok = right.relation.relation == l.relation && right.embedded && right.fiber_product_size == l.relation.len() && left.relation.relation == l.relation && left.embedded;
        if !ok || l.transpose().transpose() != *l {
            unit_bad.push(l.name.clone());
        }
    }
    out.push(Check::new(format!("relations {stem} unit and transpose"), unit_bad.is_empty(), json!({ "correspondences": corrs.len() })).with_counterexamples(unit_bad));

    let mut pairs = Vec::new();
    let mut bad = Vec::new();
    for a in corrs {
        for b in corrs.iter().filter(|b| b.src == a.dst) {
            let c = geometric_compose(a, b).expect("composable");
            let t = geometric_compose(&b.transpose(), &a.transpose()).expect("composable");
            if t.relation.relation != c.relation.relation.transpose() {
                bad.push(format!("transpose of {}∘{}", a.name, b.name));
            }
            pairs.push(json!({ "pair": [a.name, b.name], "relation": c.relation.pair_names(), "embedded": c.embedded, "fiber_product_size": c.fiber_product_size }));
            for x in corrs.iter().filter(|x| x.src == b.dst) {
                let bx = geometric_compose(b, x).expect("composable");
                let left = geometric_compose(&c.relation, x).expect("composable");
                let right = geometric_compose(a, &bx.relation).expect("composable");
                if left.relation.relation != right.relation.relation {
                    bad.push(format!("associativity of {}, {}, {}", a.name, b.name, x.name));
                }
            }
            for brane in corrs.iter().filter(|x| x.src.len() == 1 && x.src.label == "pt" && x.dst == a.src) {
                let brane = GeneralizedCorrespondence::single(brane);
                let two = phi_on_objects(b, &phi_on_objects(a, &brane).expect("endpoints")).expect("endpoints");
                let sharp = concatenate(&GeneralizedCorrespondence::single(a), &GeneralizedCorrespondence::single(b), &b.width).expect("endpoints");
                let one = phi_generalized(&sharp, &a.width, &brane).expect("endpoints");
                if one != two {
                    bad.push(format!("Φ({})Φ({}) on {}", b.name, a.name, brane.entries[0].name));
                }
                if c.embedded && phi_on_objects(&c.relation, &brane).expect("endpoints").total_relation() != two.total_relation() {
                    bad.push(format!("total relation of Φ({}∘{}) on {}", a.name, b.name, brane.entries[0].name));
                }
            }
        }
    }
    out.push(
        Check::new(format!("relations {stem} compositions"), bad.is_empty(), json!({ "spaces": spaces.len(), "compositions": pairs })).with_counterexamples(bad),
    );
    out
}

pub fn relations(dir: &Path, max_elems: usize) -> Vec<Check> {
    let mut out = vec![two_point_example()];
    let sub = dir.join("relations");
    match stems(&sub) {
        Ok(stems) => {
            for stem in stems {
                let path = sub.join(format!("{stem}.json"));
                let parsed = std::fs::read_to_string(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str::<RelationsJson>(&t).map_err(|e| e.to_string()))
                    .and_then(|j| j.parse().map_err(|e| e.to_string()));
                match parsed {
                    Ok((spaces, corrs)) => out.extend(relation_fixture(&stem, &spaces, &corrs)),
                    Err(e) => out.push(Check::error(format!("relations {stem}"), e)),
                }
            }
        }
        Err(e) => out.push(Check::error("relations fixtures", e)),
    }
    let rep = associativity_exhaustive(max_elems, 27);
    out.push(
        Check::new(format!("relations associativity n<={max_elems}"), rep.failures.is_empty(), json!({ "shapes": rep.shapes, "triples": rep.triples }))
            .with_counterexamples(rep.failures),
    );
    out
}
