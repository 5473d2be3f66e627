//! TOML input formats for systems, groups, actions, and equivalence data,
//! plus JSON emitters for witnesses.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::actions::{ActionCoe, GroupAction};
use crate::catalog;
use crate::coe::CoeData;
use crate::dr::{DrSystem, PointId};
use crate::group::Group;
use crate::groupoid::{ArrowMap, Groupoid};
use crate::tsc::TscData;
use crate::{Error, Result};

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

// ---- systems ----

#[derive(Deserialize)]
struct SystemFile {
    system: SystemSpec,
}

#[derive(Deserialize)]
struct SystemSpec {
    points: Vec<String>,
    #[serde(default)]
    sigma: BTreeMap<String, String>,
}

pub fn system_from_toml(text: &str) -> Result<DrSystem> {
    let file: SystemFile = parse_toml(text)?;
    let names = file.system.points;
    let mut sigma = vec![None; names.len()];
    for (from, to) in &file.system.sigma {
        let i = names
            .iter()
            .position(|n| n == from)
            .ok_or_else(|| Error::Parse(format!("sigma key {from:?} is not a point")))?;
        let j = names
            .iter()
            .position(|n| n == to)
            .ok_or_else(|| Error::Parse(format!("sigma value {to:?} is not a point")))?;
        sigma[i] = Some(j);
    }
    DrSystem::new(names, sigma)
}

pub fn load_system(path: &Path) -> Result<Arc<DrSystem>> {
    Ok(Arc::new(system_from_toml(&read_file(path)?)?))
}

// ---- groups ----

#[derive(Deserialize)]
struct GroupFile {
    group: GroupSpec,
}

#[derive(Deserialize)]
struct GroupSpec {
    kind: String,
    #[serde(default)]
    table: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    rank: Option<usize>,
}

fn group_from_spec(spec: &GroupSpec) -> Result<Group> {
    match spec.kind.as_str() {
        "finite" => {
            let table = spec
                .table
                .clone()
                .ok_or_else(|| Error::Parse("finite groups need a table".into()))?;
            Group::from_table(table)
        }
        "free-abelian" => Ok(Group::free_abelian(
            spec.rank.ok_or_else(|| Error::Parse("free-abelian groups need a rank".into()))?,
        )),
        other => Err(Error::Parse(format!("unknown group kind {other:?}"))),
    }
}

pub fn group_from_toml(text: &str) -> Result<Group> {
    let file: GroupFile = parse_toml(text)?;
    group_from_spec(&file.group)
}

// ---- actions ----

#[derive(Deserialize)]
struct ActionFile {
    action: ActionSpec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GroupRef {
    Name(String),
    Inline(GroupSpec),
}

#[derive(Deserialize)]
struct ActionSpec {
    group: GroupRef,
    points: Vec<String>,
    map: BTreeMap<String, String>,
}

fn split_pair(key: &str) -> Result<(String, usize)> {
    let (a, b) = key
        .rsplit_once(',')
        .ok_or_else(|| Error::Parse(format!("key {key:?} is not \"point,element\"")))?;
    let idx: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("element index {b:?} is not a number")))?;
    Ok((a.trim().to_string(), idx))
}

pub fn action_from_toml(text: &str) -> Result<GroupAction> {
    let file: ActionFile = parse_toml(text)?;
    let group = match &file.action.group {
        GroupRef::Name(name) => catalog::builtin_group(name)
            .ok_or_else(|| Error::Parse(format!("unknown group {name:?}")))?,
        GroupRef::Inline(spec) => group_from_spec(spec)?,
    };
    let order = group
        .order()
        .ok_or_else(|| Error::Parse("acting groups must be finite".into()))?;
    let names = file.action.points.clone();
    let lookup = |n: &str| -> Result<usize> {
        names
            .iter()
            .position(|m| m == n)
            .ok_or_else(|| Error::Parse(format!("unknown point {n:?}")))
    };
    let mut act = vec![vec![usize::MAX; order]; names.len()];
    for (key, to) in &file.action.map {
        let (pt, g) = split_pair(key)?;
        if g >= order {
            return Err(Error::Parse(format!("element index {g} out of range")));
        }
        act[lookup(&pt)?][g] = lookup(to)?;
    }
    // the identity column may be omitted
    let e = match group.identity_elem() {
        crate::group::GroupElem::Index(i) => i,
        _ => unreachable!(),
    };
    for (x, row) in act.iter_mut().enumerate() {
        if row[e] == usize::MAX {
            row[e] = x;
        }
    }
    if act.iter().flatten().any(|&v| v == usize::MAX) {
        return Err(Error::Parse("action map is not total".into()));
    }
    GroupAction::new(group, names, act)
}

pub fn load_action(path: &Path) -> Result<Arc<GroupAction>> {
    Ok(Arc::new(action_from_toml(&read_file(path)?)?))
}

// ---- equivalence data ----

#[derive(Deserialize)]
struct CoeFile {
    coe: CoeSpec,
}

#[derive(Deserialize)]
struct CoeSpec {
    h: BTreeMap<String, String>,
    l: BTreeMap<String, u64>,
    k: BTreeMap<String, u64>,
    lprime: BTreeMap<String, u64>,
    kprime: BTreeMap<String, u64>,
}

fn point_map(
    sys: &DrSystem,
    raw: &BTreeMap<String, u64>,
) -> Result<BTreeMap<PointId, u64>> {
    let mut out = BTreeMap::new();
    for (name, v) in raw {
        out.insert(sys.index(name)?, *v);
    }
    Ok(out)
}

pub fn coe_from_toml(text: &str, s: &DrSystem, t: &DrSystem) -> Result<CoeData> {
    let file: CoeFile = parse_toml(text)?;
    let mut h = vec![usize::MAX; s.len()];
    for (from, to) in &file.coe.h {
        h[s.index(from)?] = t.index(to)?;
    }
    if h.iter().any(|&v| v == usize::MAX) {
        return Err(Error::Parse("h must cover every point".into()));
    }
    Ok(CoeData {
        h,
        l: point_map(s, &file.coe.l)?,
        k: point_map(s, &file.coe.k)?,
        lp: point_map(t, &file.coe.lprime)?,
        kp: point_map(t, &file.coe.kprime)?,
    })
}

pub fn load_coe(path: &Path, s: &DrSystem, t: &DrSystem) -> Result<CoeData> {
    coe_from_toml(&read_file(path)?, s, t)
}

// ---- action equivalence data ----

#[derive(Deserialize)]
struct ActionCoeFile {
    #[serde(rename = "action-coe")]
    action_coe: ActionCoeSpec,
}

#[derive(Deserialize)]
struct ActionCoeSpec {
    h: BTreeMap<String, String>,
    phi: BTreeMap<String, usize>,
    eta: BTreeMap<String, usize>,
}

pub fn action_coe_from_toml(
    text: &str,
    a: &GroupAction,
    b: &GroupAction,
) -> Result<ActionCoe> {
    let file: ActionCoeFile = parse_toml(text)?;
    let spec = file.action_coe;
    let mut h = vec![usize::MAX; a.len()];
    for (from, to) in &spec.h {
        h[a.index(from)?] = b.index(to)?;
    }
    if h.iter().any(|&v| v == usize::MAX) {
        return Err(Error::Parse("h must cover every point".into()));
    }
    let mut phi = vec![vec![usize::MAX; a.order()]; a.len()];
    for (key, lam) in &spec.phi {
        let (pt, g) = split_pair(key)?;
        phi[a.index(&pt)?][g] = *lam;
    }
    let mut eta = vec![vec![usize::MAX; b.order()]; b.len()];
    for (key, g) in &spec.eta {
        let (pt, lam) = split_pair(key)?;
        eta[b.index(&pt)?][lam] = *g;
    }
    if phi.iter().flatten().any(|&v| v == usize::MAX)
        || eta.iter().flatten().any(|&v| v == usize::MAX)
    {
        return Err(Error::Parse("phi and eta must be total".into()));
    }
    Ok(ActionCoe { h, phi, eta })
}

pub fn load_action_coe(path: &Path, a: &GroupAction, b: &GroupAction) -> Result<ActionCoe> {
    action_coe_from_toml(&read_file(path)?, a, b)
}

// ---- two-sided conjugacy data ----

#[derive(Deserialize)]
struct TscFile {
    tsc: TscSpec,
}

#[derive(Deserialize)]
struct TscSpec {
    f: BTreeMap<String, String>,
    fprime: BTreeMap<String, String>,
    a: BTreeMap<String, u64>,
    aprime: BTreeMap<String, u64>,
    k: BTreeMap<String, u64>,
    kprime: BTreeMap<String, u64>,
}

fn total_point_map(sys: &DrSystem, raw: &BTreeMap<String, u64>) -> Result<Vec<u64>> {
    let mut out = vec![0u64; sys.len()];
    let mut seen = vec![false; sys.len()];
    for (name, v) in raw {
        let i = sys.index(name)?;
        out[i] = *v;
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Parse("map must cover every point".into()));
    }
    Ok(out)
}

fn total_point_fn(
    src: &DrSystem,
    dst: &DrSystem,
    raw: &BTreeMap<String, String>,
) -> Result<Vec<PointId>> {
    let mut out = vec![usize::MAX; src.len()];
    for (from, to) in raw {
        out[src.index(from)?] = dst.index(to)?;
    }
    if out.iter().any(|&v| v == usize::MAX) {
        return Err(Error::Parse("map must cover every point".into()));
    }
    Ok(out)
}

pub fn tsc_from_toml(text: &str, s: &DrSystem, t: &DrSystem) -> Result<TscData> {
    let file: TscFile = parse_toml(text)?;
    Ok(TscData {
        f: total_point_fn(s, t, &file.tsc.f)?,
        fp: total_point_fn(t, s, &file.tsc.fprime)?,
        a: total_point_map(s, &file.tsc.a)?,
        ap: total_point_map(t, &file.tsc.aprime)?,
        k: total_point_map(s, &file.tsc.k)?,
        kp: total_point_map(t, &file.tsc.kprime)?,
    })
}

pub fn load_tsc(path: &Path, s: &DrSystem, t: &DrSystem) -> Result<TscData> {
    tsc_from_toml(&read_file(path)?, s, t)
}

// ---- JSON emitters ----

pub fn arrow_map_json(g1: &Groupoid, g2: &Groupoid, m: &ArrowMap) -> Value {
    let units: Vec<Value> = m
        .unit_map
        .iter()
        .map(|(u, v)| json!([g1.unit_json(u), g2.unit_json(v)]))
        .collect();
    let arrows: Vec<Value> = m
        .arrows
        .iter()
        .map(|(a, b)| json!([g1.arrow_json(a), g2.arrow_json(b)]))
        .collect();
    json!({"bound": m.bound, "units": units, "arrows": arrows})
}

pub fn coe_json(s: &DrSystem, t: &DrSystem, d: &CoeData) -> Value {
    let named = |sys: &DrSystem, m: &BTreeMap<PointId, u64>| -> Value {
        json!(m
            .iter()
            .map(|(x, v)| (sys.name(*x).to_string(), json!(v)))
            .collect::<serde_json::Map<String, Value>>())
    };
    json!({
        "h": d.h.iter().enumerate().map(|(x, y)| (s.name(x).to_string(), json!(t.name(*y)))).collect::<serde_json::Map<String, Value>>(),
        "l": named(s, &d.l),
        "k": named(s, &d.k),
        "lprime": named(t, &d.lp),
        "kprime": named(t, &d.kp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_system() {
        let text = r#"
[system]
points = ["a", "b", "c"]

[system.sigma]
a = "c"
b = "c"
c = "c"
"#;
        let sys = system_from_toml(text).unwrap();
        assert_eq!(sys.len(), 3);
        let a = sys.index("a").unwrap();
        let c = sys.index("c").unwrap();
        assert_eq!(sys.sigma(a), Some(c));
        // absent key means outside the domain
        let partial = system_from_toml(
            "[system]\npoints = [\"0\", \"1\"]\n[system.sigma]\n\"0\" = \"1\"\n",
        )
        .unwrap();
        assert!(partial.sigma(partial.index("1").unwrap()).is_none());
    }

    #[test]
    fn parse_group_kinds() {
        let fin = group_from_toml("[group]\nkind = \"finite\"\ntable = [[0, 1], [1, 0]]\n").unwrap();
        assert_eq!(fin.order(), Some(2));
        let fa = group_from_toml("[group]\nkind = \"free-abelian\"\nrank = 2\n").unwrap();
        assert_eq!(fa, Group::free_abelian(2));
        assert!(group_from_toml("[group]\nkind = \"finite\"\ntable = [[1, 1], [1, 1]]\n").is_err());
    }

    #[test]
    fn parse_action() {
        let text = r#"
[action]
group = "z2"
points = ["0", "1"]

[action.map]
"0,1" = "1"
"1,1" = "0"
"0,0" = "0"
"1,0" = "1"
"#;
        let act = action_from_toml(text).unwrap();
        assert_eq!(act.apply(0, 1), 1);
    }

    #[test]
    fn parse_coe() {
        let s = crate::catalog::s3();
        let t = crate::catalog::s3_rev();
        let text = r#"
[coe]
h = { "0" = "0", "1" = "1", "2" = "2" }
l = { "0" = 0, "1" = 0, "2" = 0 }
k = { "0" = 1, "1" = 1, "2" = 1 }
lprime = { "0" = 0, "1" = 0, "2" = 0 }
kprime = { "0" = 1, "1" = 1, "2" = 1 }
"#;
        let d = coe_from_toml(text, &s, &t).unwrap();
        assert!(crate::coe::verify_coe(&s, &t, &d).pass());
    }

    #[test]
    fn parse_errors_carry_position() {
        let bad = system_from_toml("[system\npoints = []");
        match bad {
            Err(Error::Parse(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
