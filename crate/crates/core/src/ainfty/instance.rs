use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use num::rational::BigRational;
use num::{Integer, One, Zero};
use serde::{Deserialize, Serialize};

use super::AinftyError;

pub type Coef = BigRational;
/// Sparse vector: basis id to coefficient, zeros never stored.
pub type Vector = BTreeMap<usize, Coef>;
/// Multilinear map stored on composable basis tuples (absent tuple = 0).
pub type Table = HashMap<Vec<usize>, Vector>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ring {
    #[serde(rename = "Z")]
    Z,
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "GF2")]
    Gf2,
}

impl Ring {
    pub fn normalize(self, c: Coef) -> Coef {
        match self {
            Ring::Gf2 => Coef::from_integer(c.to_integer().mod_floor(&2.into())),
            _ => c,
        }
    }

    pub fn is_field(self) -> bool {
        self != Ring::Z
    }

    fn admits(self, c: &Coef) -> bool {
        self == Ring::Q || c.is_integer()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub deg: i64,
}

/// A composable tuple of basis elements starting at `start`; the empty
/// chain sits at a single object.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chain {
    pub start: usize,
    pub elts: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub description: String,
    /// Grading modulus; 0 means ℤ.
    pub n: i64,
    pub ring: Ring,
    pub objects: Vec<String>,
    pub basis: Vec<Basis>,
    /// μ^d for d ≥ 1.
    pub mu: Table,
    /// μ^0 per object.
    pub curvature: BTreeMap<usize, Vector>,
    /// Integer curvature scalar per object, when declared.
    pub w: BTreeMap<usize, i64>,
    by_name: HashMap<String, usize>,
}

impl Instance {
    pub fn new(name: &str, n: i64, ring: Ring, objects: Vec<String>, basis: Vec<Basis>) -> Instance {
        let by_name = basis.iter().enumerate().map(|(i, b)| (b.name.clone(), i)).collect();
        Instance { name: name.to_string(), description: String::new(), n, ring, objects, basis, mu: Table::new(), curvature: BTreeMap::new(), w: BTreeMap::new(), by_name }
    }

    pub fn id(&self, name: &str) -> Result<usize, AinftyError> {
        self.by_name.get(name).copied().ok_or_else(|| AinftyError::UnknownBasis(name.to_string()))
    }

    pub fn object(&self, name: &str) -> Result<usize, AinftyError> {
        self.objects.iter().position(|o| o == name).ok_or_else(|| AinftyError::UnknownObject(name.to_string()))
    }

    pub fn parity(&self, g: usize) -> i64 {
        self.basis[g].deg.rem_euclid(2)
    }

    pub fn degree_eq(&self, a: i64, b: i64) -> bool {
        if self.n == 0 {
            a == b
        } else {
            (a - b).rem_euclid(self.n) == 0
        }
    }

    pub fn hom(&self, x: usize, y: usize) -> Vec<usize> {
        (0..self.basis.len()).filter(|&g| self.basis[g].src == x && self.basis[g].dst == y).collect()
    }

    pub fn is_flat(&self) -> bool {
        self.curvature.values().all(|v| v.is_empty())
    }

    /// Object `C_p` of a chain `a_1..a_d` with `a_i ∈ Hom(C_{i−1}, C_i)`.
    pub fn object_at(&self, c: &Chain, p: usize) -> usize {
        if p == 0 {
            c.start
        } else {
            self.basis[c.elts[p - 1]].dst
        }
    }

    /// All composable chains of length `len`.
    pub fn chains(&self, len: usize) -> Vec<Chain> {
        let mut out: Vec<Chain> = (0..self.objects.len()).map(|start| Chain { start, elts: Vec::new() }).collect();
        for _ in 0..len {
            let mut next = Vec::new();
            for c in &out {
                let at = self.object_at(c, c.elts.len());
                for g in 0..self.basis.len() {
                    if self.basis[g].src == at {
                        let mut elts = c.elts.clone();
                        elts.push(g);
                        next.push(Chain { start: c.start, elts });
                    }
                }
            }
            out = next;
        }
        out
    }

    pub fn chain_names(&self, c: &Chain) -> Vec<String> {
        if c.elts.is_empty() {
            return vec![format!("<{}>", self.objects[c.start])];
        }
        c.elts.iter().map(|&g| self.basis[g].name.clone()).collect()
    }

    pub fn render(&self, v: &Vector) -> Vec<(String, String)> {
        v.iter().map(|(&g, c)| (self.basis[g].name.clone(), c.to_string())).collect()
    }

    /// Checks composability, endpoints and degrees of every table entry:
    /// `μ^d` has degree `2 − d`.
    pub fn validate(&self) -> Result<(), AinftyError> {
        for (inputs, out) in &self.mu {
            self.check_entry("μ", inputs, out, 2 - inputs.len() as i64, self, None)?;
        }
        for (&x, out) in &self.curvature {
            self.check_entry("μ", &[], out, 2, self, Some((x, x)))?;
        }
        Ok(())
    }

    /// Checks that `out` is a valid value of a multilinear map of degree
    /// `shift` on `inputs`, landing in `target` (between `ends` if given,
    /// otherwise between the endpoints of the inputs).
    pub(crate) fn check_entry(
        &self,
        what: &str,
        inputs: &[usize],
        out: &Vector,
        shift: i64,
        target: &Instance,
        ends: Option<(usize, usize)>,
    ) -> Result<(), AinftyError> {
        let names = || inputs.iter().map(|&g| self.basis[g].name.clone()).collect::<Vec<_>>();
        for w in inputs.windows(2) {
            if self.basis[w[0]].dst != self.basis[w[1]].src {
                return Err(AinftyError::NotComposable(names()));
            }
        }
        let (x, y) = match ends {
            Some(e) => e,
            None => (self.basis[inputs[0]].src, self.basis[*inputs.last().expect("nonempty inputs")].dst),
        };
        let deg_in: i64 = inputs.iter().map(|&g| self.basis[g].deg).sum();
        for (&g, c) in out {
            let b = &target.basis[g];
            if (b.src, b.dst) != (x, y) {
                return Err(AinftyError::Endpoints { what: what.to_string(), inputs: names(), output: b.name.clone() });
            }
            if !target.degree_eq(b.deg, deg_in + shift) {
                return Err(AinftyError::Degree { what: what.to_string(), inputs: names(), output: b.name.clone() });
            }
            if !target.ring.admits(c) {
                return Err(AinftyError::Coefficient(c.to_string()));
            }
        }
        Ok(())
    }
}

pub fn add_scaled(v: &mut Vector, w: &Vector, c: &Coef, ring: Ring) {
    if c.is_zero() {
        return;
    }
    for (&g, x) in w {
        let e = v.entry(g).or_insert_with(Coef::zero);
        *e = ring.normalize(&*e + x * c);
        if e.is_zero() {
            v.remove(&g);
        }
    }
}

pub fn basis_vector(g: usize) -> Vector {
    [(g, Coef::one())].into_iter().collect()
}

/// Multilinear extension of `table` applied to vector arguments.
pub fn apply(table: &Table, args: &[Vector], ring: Ring) -> Vector {
    let mut out = Vector::new();
    let mut key = Vec::with_capacity(args.len());
    fn go(table: &Table, args: &[Vector], ring: Ring, key: &mut Vec<usize>, coef: Coef, out: &mut Vector) {
        if key.len() == args.len() {
            if let Some(v) = table.get(key.as_slice()) {
                add_scaled(out, v, &coef, ring);
            }
            return;
        }
        for (&g, c) in &args[key.len()] {
            key.push(g);
            go(table, args, ring, key, &coef * c, out);
            key.pop();
        }
    }
    if args.iter().any(|a| a.is_empty()) {
        return out;
    }
    go(table, args, ring, &mut key, Coef::one(), &mut out);
    out
}

// JSON

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefJson {
    Int(i64),
    Text(String),
}

impl CoefJson {
    pub fn parse(&self) -> Result<Coef, AinftyError> {
        match self {
            CoefJson::Int(i) => Ok(Coef::from_integer((*i).into())),
            CoefJson::Text(s) => s.parse::<Coef>().map_err(|_| AinftyError::Coefficient(s.clone())),
        }
    }

    pub fn from(c: &Coef) -> CoefJson {
        match c.to_integer().try_into() {
            Ok(i) if c.is_integer() => CoefJson::Int(i),
            _ => CoefJson::Text(c.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub basis: String,
    pub coef: CoefJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpJson {
    pub d: usize,
    #[serde(default)]
    pub inputs: Vec<String>,
    /// Required when `d = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    pub output: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisJson {
    pub name: String,
    pub deg: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomJson {
    pub src: String,
    pub dst: String,
    pub basis: Vec<BasisJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctorJson {
    pub name: String,
    /// Fixture stem of the target instance; absent means the same instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub objects: BTreeMap<String, String>,
    pub tables: Vec<OpJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreNatJson {
    pub name: String,
    pub source_functor: String,
    pub target_functor: String,
    pub degree: i64,
    pub tables: Vec<OpJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Marks a negative control whose associativity check must fail.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negative: bool,
    #[serde(rename = "N")]
    pub n: i64,
    pub ring: Ring,
    pub objects: Vec<String>,
    pub homs: Vec<HomJson>,
    pub mu: Vec<OpJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub w: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functors: Vec<FunctorJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prenats: Vec<PreNatJson>,
}

fn parse_output(target: &Instance, out: &[TermJson]) -> Result<Vector, AinftyError> {
    let mut v = Vector::new();
    for t in out {
        add_scaled(&mut v, &basis_vector(target.id(&t.basis)?), &t.coef.parse()?, target.ring);
    }
    Ok(v)
}

fn ops_to_json(src: &Instance, target: &Instance, table: &Table, zero: &BTreeMap<usize, Vector>) -> Vec<OpJson> {
    let out = |v: &Vector| v.iter().map(|(&g, c)| TermJson { basis: target.basis[g].name.clone(), coef: CoefJson::from(c) }).collect();
    let mut ops: Vec<OpJson> = zero
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&x, v)| OpJson { d: 0, inputs: vec![], object: Some(src.objects[x].clone()), output: out(v) })
        .collect();
    let mut keys: Vec<&Vec<usize>> = table.keys().filter(|k| !table[*k].is_empty()).collect();
    keys.sort_by_key(|k| (k.len(), (*k).clone()));
    for k in keys {
        ops.push(OpJson { d: k.len(), inputs: k.iter().map(|&g| src.basis[g].name.clone()).collect(), object: None, output: out(&table[k]) });
    }
    ops
}

/// Parses a list of table entries on `src` with values in `target`.
/// Returns the `d ≥ 1` table and the `d = 0` entries per object.
pub fn parse_ops(src: &Instance, target: &Instance, ops: &[OpJson]) -> Result<(Table, BTreeMap<usize, Vector>), AinftyError> {
    let mut table = Table::new();
    let mut zero = BTreeMap::new();
    for op in ops {
        if op.inputs.len() != op.d {
            return Err(AinftyError::Malformed(format!("entry with d={} has {} inputs", op.d, op.inputs.len())));
        }
        let v = parse_output(target, &op.output)?;
        if op.d == 0 {
            let obj = op.object.as_deref().ok_or_else(|| AinftyError::Malformed("d=0 entry without an object".into()))?;
            zero.insert(src.object(obj)?, v);
        } else {
            let key = op.inputs.iter().map(|n| src.id(n)).collect::<Result<Vec<_>, _>>()?;
            let e: &mut Vector = table.entry(key).or_default();
            add_scaled(e, &v, &Coef::one(), target.ring);
        }
    }
    Ok((table, zero))
}

impl Instance {
    pub fn from_json(j: &InstanceJson) -> Result<Instance, AinftyError> {
        if j.n < 0 || j.n % 2 != 0 {
            return Err(AinftyError::Malformed(format!("grading modulus N={} must be even or 0", j.n)));
        }
        let obj = |s: &str| j.objects.iter().position(|o| o == s).ok_or_else(|| AinftyError::UnknownObject(s.to_string()));
        let mut basis = Vec::new();
        for h in &j.homs {
            let (src, dst) = (obj(&h.src)?, obj(&h.dst)?);
            for b in &h.basis {
                basis.push(Basis { name: b.name.clone(), src, dst, deg: b.deg });
            }
        }
        let mut inst = Instance::new(&j.name, j.n, j.ring, j.objects.clone(), basis);
        if inst.by_name.len() != inst.basis.len() {
            return Err(AinftyError::Malformed("duplicate basis names".into()));
        }
        inst.description = j.description.clone();
        let (mu, curvature) = parse_ops(&inst, &inst, &j.mu)?;
        inst.mu = mu;
        inst.curvature = curvature;
        for (o, &w) in &j.w {
            let x = inst.object(o)?;
            inst.w.insert(x, w);
        }
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> InstanceJson {
        let mut homs: Vec<HomJson> = Vec::new();
        for b in &self.basis {
            let (src, dst) = (self.objects[b.src].clone(), self.objects[b.dst].clone());
            match homs.iter_mut().find(|h| h.src == src && h.dst == dst) {
                Some(h) => h.basis.push(BasisJson { name: b.name.clone(), deg: b.deg }),
                None => homs.push(HomJson { src, dst, basis: vec![BasisJson { name: b.name.clone(), deg: b.deg }] }),
            }
        }
        InstanceJson {
            name: self.name.clone(),
            description: self.description.clone(),
            negative: false,
            n: self.n,
            ring: self.ring,
            objects: self.objects.clone(),
            homs,
            mu: ops_to_json(self, self, &self.mu, &self.curvature),
            w: self.w.iter().map(|(&x, &w)| (self.objects[x].clone(), w)).collect(),
            functors: Vec::new(),
            prenats: Vec::new(),
        }
    }
}

/// An instance file together with the functors and pre-natural
/// transformations it declares.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub json: InstanceJson,
    pub instance: Instance,
}

impl Fixture {
    pub fn load(dir: &Path, stem: &str) -> Result<Fixture, AinftyError> {
        let path = dir.join(format!("{stem}.json"));
        let text = std::fs::read_to_string(&path).map_err(|e| AinftyError::Io(format!("{}: {e}", path.display())))?;
        let json: InstanceJson = serde_json::from_str(&text).map_err(|e| AinftyError::Malformed(format!("{}: {e}", path.display())))?;
        let mut instance = Instance::from_json(&json)?;
        if instance.name.is_empty() {
            instance.name = stem.to_string();
        }
        Ok(Fixture { json, instance })
    }

    pub fn functor_json(&self, name: &str) -> Result<&FunctorJson, AinftyError> {
        self.json.functors.iter().find(|f| f.name == name).ok_or_else(|| AinftyError::Malformed(format!("no functor {name}")))
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} objects, {} basis elements)", self.name, self.objects.len(), self.basis.len())
    }
}

pub(crate) fn zero_map_json(src: &Instance, target: &Instance, table: &Table, zero: &BTreeMap<usize, Vector>) -> Vec<OpJson> {
    ops_to_json(src, target, table, zero)
}
