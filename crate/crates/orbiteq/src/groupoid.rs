//! Uniform discrete-groupoid interface: arrow systems, transformation
//! groupoids, restrictions to full unit subsets, products with the pair
//! groupoid `R = N x N`, and linking views, all with gradings and a bounded
//! isomorphism verifier.
//!
//! Countable groupoids are never materialized.  `elements(bound)` lists the
//! arrows of complexity at most `bound` (inverse-closed, deterministic
//! order); global questions with a finite decision procedure -- fullness,
//! membership, component structure -- are answered exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::actions::GroupAction;
use crate::cert::Certificate;
use crate::dr::{DrArrow, DrSystem, PointId, StabilizedSystem};
use crate::group::{Group, GroupElem};
use crate::{Error, Result};

/// A unit of one of the supported groupoid variants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unit {
    /// Point of a base system or action space.
    Pt(PointId),
    /// Point of a stabilized system `X x N`.
    Lv(PointId, u64),
    /// Unit of a product with `R`: a parent unit paired with a coordinate.
    WithR(Box<Unit>, u64),
}

impl Unit {
    pub fn complexity(&self) -> u64 {
        match self {
            Unit::Pt(_) => 0,
            Unit::Lv(_, j) => *j,
            Unit::WithR(u, n) => u.complexity().max(*n),
        }
    }
}

/// An arrow of one of the supported variants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arrow {
    Dr(DrArrow),
    /// Arrow of a stabilized system, between level points.
    StabDr { x: (PointId, u64), p: BigInt, y: (PointId, u64) },
    /// Arrow `(x, g)` of a transformation groupoid; source is `x.g`.
    Act { x: PointId, g: usize },
    /// Arrow of a product with `R`: `(inner, (m, n))`.
    WithR { inner: Box<Arrow>, m: u64, n: u64 },
}

/// Handle to a groupoid.  Restriction and linking record how the parent is
/// being viewed; arrows are always parent arrows.
#[derive(Clone, Debug)]
pub enum Groupoid {
    Dr(Arc<DrSystem>),
    StabilizedDr(Arc<DrSystem>),
    Action(Arc<GroupAction>),
    Restricted { parent: Box<Groupoid>, units: BTreeSet<Unit> },
    ProductR(Box<Groupoid>),
    Linking { parent: Box<Groupoid>, k1: BTreeSet<Unit>, k2: BTreeSet<Unit> },
}

impl Groupoid {
    pub fn dr(sys: Arc<DrSystem>) -> Groupoid {
        Groupoid::Dr(sys)
    }

    pub fn stabilized(sys: Arc<DrSystem>) -> Groupoid {
        Groupoid::StabilizedDr(sys)
    }

    pub fn action(a: Arc<GroupAction>) -> Groupoid {
        Groupoid::Action(a)
    }

    pub fn base_dr(&self) -> Option<&Arc<DrSystem>> {
        match self {
            Groupoid::Dr(s) | Groupoid::StabilizedDr(s) => Some(s),
            Groupoid::Action(_) => None,
            Groupoid::Restricted { parent, .. }
            | Groupoid::ProductR(parent)
            | Groupoid::Linking { parent, .. } => parent.base_dr(),
        }
    }

    pub fn base_action(&self) -> Option<&Arc<GroupAction>> {
        match self {
            Groupoid::Action(a) => Some(a),
            Groupoid::Dr(_) | Groupoid::StabilizedDr(_) => None,
            Groupoid::Restricted { parent, .. }
            | Groupoid::ProductR(parent)
            | Groupoid::Linking { parent, .. } => parent.base_action(),
        }
    }

    /// All units when the unit space is finite.
    pub fn finite_units(&self) -> Option<Vec<Unit>> {
        match self {
            Groupoid::Dr(s) => Some(s.points().map(Unit::Pt).collect()),
            Groupoid::Action(a) => Some(a.points().map(Unit::Pt).collect()),
            Groupoid::StabilizedDr(_) | Groupoid::ProductR(_) => None,
            Groupoid::Restricted { units, .. } => Some(units.iter().cloned().collect()),
            Groupoid::Linking { parent, .. } => parent.finite_units(),
        }
    }

    pub fn contains_unit(&self, u: &Unit) -> bool {
        match (self, u) {
            (Groupoid::Dr(s), Unit::Pt(x)) => *x < s.len(),
            (Groupoid::StabilizedDr(s), Unit::Lv(x, _)) => *x < s.len(),
            (Groupoid::Action(a), Unit::Pt(x)) => *x < a.len(),
            (Groupoid::Restricted { units, .. }, u) => units.contains(u),
            (Groupoid::ProductR(parent), Unit::WithR(v, _)) => parent.contains_unit(v),
            (Groupoid::Linking { parent, .. }, u) => parent.contains_unit(u),
            _ => false,
        }
    }

    /// Units of complexity at most `bound`, sorted.
    pub fn units(&self, bound: u32) -> Vec<Unit> {
        let mut out = match self {
            Groupoid::Dr(s) => s.points().map(Unit::Pt).collect(),
            Groupoid::Action(a) => a.points().map(Unit::Pt).collect(),
            Groupoid::StabilizedDr(s) => {
                let mut v = Vec::new();
                for x in s.points() {
                    for j in 0..=bound as u64 {
                        v.push(Unit::Lv(x, j));
                    }
                }
                v
            }
            Groupoid::Restricted { units, .. } => units
                .iter()
                .filter(|u| u.complexity() <= bound as u64)
                .cloned()
                .collect(),
            Groupoid::ProductR(parent) => {
                let mut v = Vec::new();
                for u in parent.units(bound) {
                    for n in 0..=bound as u64 {
                        v.push(Unit::WithR(Box::new(u.clone()), n));
                    }
                }
                v
            }
            Groupoid::Linking { parent, .. } => parent.units(bound),
        };
        out.sort();
        out
    }

    pub fn source(&self, a: &Arrow) -> Unit {
        match (self, a) {
            (Groupoid::Dr(_), Arrow::Dr(d)) => Unit::Pt(d.y),
            (Groupoid::StabilizedDr(_), Arrow::StabDr { y, .. }) => Unit::Lv(y.0, y.1),
            (Groupoid::Action(act), Arrow::Act { x, g }) => Unit::Pt(act.apply(*x, *g)),
            (Groupoid::Restricted { parent, .. }, a) | (Groupoid::Linking { parent, .. }, a) => {
                parent.source(a)
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, n, .. }) => {
                Unit::WithR(Box::new(parent.source(inner)), *n)
            }
            _ => panic!("arrow does not belong to this groupoid variant"),
        }
    }

    pub fn range(&self, a: &Arrow) -> Unit {
        match (self, a) {
            (Groupoid::Dr(_), Arrow::Dr(d)) => Unit::Pt(d.x),
            (Groupoid::StabilizedDr(_), Arrow::StabDr { x, .. }) => Unit::Lv(x.0, x.1),
            (Groupoid::Action(_), Arrow::Act { x, .. }) => Unit::Pt(*x),
            (Groupoid::Restricted { parent, .. }, a) | (Groupoid::Linking { parent, .. }, a) => {
                parent.range(a)
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, m, .. }) => {
                Unit::WithR(Box::new(parent.range(inner)), *m)
            }
            _ => panic!("arrow does not belong to this groupoid variant"),
        }
    }

    pub fn compose(&self, a: &Arrow, b: &Arrow) -> Result<Arrow> {
        if self.source(a) != self.range(b) {
            return Err(Error::NonComposable);
        }
        match (self, a, b) {
            (Groupoid::Dr(_), Arrow::Dr(da), Arrow::Dr(db)) => Ok(Arrow::Dr(DrArrow {
                x: da.x,
                p: &da.p + &db.p,
                y: db.y,
            })),
            (
                Groupoid::StabilizedDr(_),
                Arrow::StabDr { x, p, .. },
                Arrow::StabDr { p: q, y, .. },
            ) => Ok(Arrow::StabDr { x: *x, p: p + q, y: *y }),
            (Groupoid::Action(act), Arrow::Act { x, g }, Arrow::Act { g: h, .. }) => {
                let gh = act.group.mul(&GroupElem::Index(*g), &GroupElem::Index(*h))?;
                match gh {
                    GroupElem::Index(i) => Ok(Arrow::Act { x: *x, g: i }),
                    _ => unreachable!(),
                }
            }
            (Groupoid::Restricted { parent, .. }, a, b)
            | (Groupoid::Linking { parent, .. }, a, b) => parent.compose(a, b),
            (
                Groupoid::ProductR(parent),
                Arrow::WithR { inner: ia, m, .. },
                Arrow::WithR { inner: ib, n, .. },
            ) => {
                let inner = parent.compose(ia, ib)?;
                Ok(Arrow::WithR { inner: Box::new(inner), m: *m, n: *n })
            }
            _ => Err(Error::NonComposable),
        }
    }

    pub fn invert(&self, a: &Arrow) -> Arrow {
        match (self, a) {
            (Groupoid::Dr(_), Arrow::Dr(d)) => Arrow::Dr(d.inverse()),
            (Groupoid::StabilizedDr(_), Arrow::StabDr { x, p, y }) => {
                Arrow::StabDr { x: *y, p: -p, y: *x }
            }
            (Groupoid::Action(act), Arrow::Act { x, g }) => {
                let xg = act.apply(*x, *g);
                let gi = match act.group.inv(&GroupElem::Index(*g)).expect("valid element") {
                    GroupElem::Index(i) => i,
                    _ => unreachable!(),
                };
                Arrow::Act { x: xg, g: gi }
            }
            (Groupoid::Restricted { parent, .. }, a) | (Groupoid::Linking { parent, .. }, a) => {
                parent.invert(a)
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, m, n }) => Arrow::WithR {
                inner: Box::new(parent.invert(inner)),
                m: *n,
                n: *m,
            },
            _ => panic!("arrow does not belong to this groupoid variant"),
        }
    }

    pub fn unit_arrow(&self, u: &Unit) -> Arrow {
        match (self, u) {
            (Groupoid::Dr(_), Unit::Pt(x)) => Arrow::Dr(DrArrow::unit(*x)),
            (Groupoid::StabilizedDr(_), Unit::Lv(x, j)) => {
                Arrow::StabDr { x: (*x, *j), p: BigInt::zero(), y: (*x, *j) }
            }
            (Groupoid::Action(a), Unit::Pt(x)) => Arrow::Act { x: *x, g: a.identity_index() },
            (Groupoid::Restricted { parent, .. }, u) | (Groupoid::Linking { parent, .. }, u) => {
                parent.unit_arrow(u)
            }
            (Groupoid::ProductR(parent), Unit::WithR(v, n)) => Arrow::WithR {
                inner: Box::new(parent.unit_arrow(v)),
                m: *n,
                n: *n,
            },
            _ => panic!("unit does not belong to this groupoid variant"),
        }
    }

    pub fn is_unit(&self, a: &Arrow) -> bool {
        match (self, a) {
            (Groupoid::Dr(_), Arrow::Dr(d)) => d.is_unit(),
            (Groupoid::StabilizedDr(_), Arrow::StabDr { x, p, y }) => x == y && p.is_zero(),
            (Groupoid::Action(act), Arrow::Act { g, .. }) => *g == act.identity_index(),
            (Groupoid::Restricted { parent, .. }, a) | (Groupoid::Linking { parent, .. }, a) => {
                parent.is_unit(a)
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, m, n }) => {
                m == n && parent.is_unit(inner)
            }
            _ => false,
        }
    }

    /// Membership of an arrow, decided exactly.
    pub fn contains(&self, a: &Arrow) -> bool {
        match (self, a) {
            (Groupoid::Dr(s), Arrow::Dr(d)) => s.is_arrow(d),
            (Groupoid::StabilizedDr(s), Arrow::StabDr { x, p, y }) => {
                x.0 < s.len() && y.0 < s.len() && StabilizedSystem::new(s.clone()).member(*x, p, *y).is_some()
            }
            (Groupoid::Action(act), Arrow::Act { x, g }) => {
                *x < act.len() && *g < act.order()
            }
            (Groupoid::Restricted { parent, units }, a) => {
                parent.contains(a)
                    && units.contains(&parent.source(a))
                    && units.contains(&parent.range(a))
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, .. }) => parent.contains(inner),
            (Groupoid::Linking { parent, .. }, a) => parent.contains(a),
            _ => false,
        }
    }

    /// Enumeration complexity of an arrow (saturating); `u64::MAX` when the
    /// arrow is not a member.
    pub fn complexity(&self, a: &Arrow) -> u64 {
        match (self, a) {
            (Groupoid::Dr(s), Arrow::Dr(d)) => match s.member(d.x, &d.p, d.y) {
                Some((m, n)) => {
                    let w = m.min(n);
                    let c = d.p.abs() + w;
                    c.to_u64().unwrap_or(u64::MAX)
                }
                None => u64::MAX,
            },
            (Groupoid::StabilizedDr(s), Arrow::StabDr { x, p, y }) => {
                match StabilizedSystem::new(s.clone()).member(*x, p, *y) {
                    Some((m, n)) => {
                        let w = m.min(n);
                        let c = (p.abs() + w).to_u64().unwrap_or(u64::MAX);
                        c.max(x.1).max(y.1)
                    }
                    None => u64::MAX,
                }
            }
            (Groupoid::Action(act), Arrow::Act { x, g }) => {
                if *x < act.len() && *g < act.order() {
                    if *g == act.identity_index() {
                        0
                    } else {
                        1
                    }
                } else {
                    u64::MAX
                }
            }
            (Groupoid::Restricted { parent, .. }, a) => {
                if self.contains(a) {
                    parent.complexity(a)
                } else {
                    u64::MAX
                }
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, m, n }) => {
                parent.complexity(inner).max(*m).max(*n)
            }
            (Groupoid::Linking { parent, .. }, a) => parent.complexity(a),
            _ => u64::MAX,
        }
    }

    /// All arrows of complexity at most `bound`, sorted, closed under
    /// inverse.
    pub fn elements(&self, bound: u32) -> Vec<Arrow> {
        let b = bound as u64;
        let mut out: Vec<Arrow> = match self {
            Groupoid::Dr(s) => {
                let mut v = Vec::new();
                for x in s.points() {
                    for y in s.points() {
                        for p in -(bound as i64)..=bound as i64 {
                            let a = Arrow::Dr(DrArrow::new(x, p, y));
                            if self.complexity(&a) <= b {
                                v.push(a);
                            }
                        }
                    }
                }
                v
            }
            Groupoid::StabilizedDr(s) => {
                let mut v = Vec::new();
                for x in s.points() {
                    for y in s.points() {
                        for jx in 0..=b {
                            for jy in 0..=b {
                                for p in -(bound as i64)..=bound as i64 {
                                    let a = Arrow::StabDr {
                                        x: (x, jx),
                                        p: BigInt::from(p),
                                        y: (y, jy),
                                    };
                                    if self.complexity(&a) <= b {
                                        v.push(a);
                                    }
                                }
                            }
                        }
                    }
                }
                v
            }
            Groupoid::Action(act) => {
                let mut v = Vec::new();
                for x in act.points() {
                    if bound == 0 {
                        v.push(Arrow::Act { x, g: act.identity_index() });
                    } else {
                        for g in 0..act.order() {
                            v.push(Arrow::Act { x, g });
                        }
                    }
                }
                v
            }
            Groupoid::Restricted { parent, units } => parent
                .elements(bound)
                .into_iter()
                .filter(|a| units.contains(&parent.source(a)) && units.contains(&parent.range(a)))
                .collect(),
            Groupoid::ProductR(parent) => {
                let mut v = Vec::new();
                for inner in parent.elements(bound) {
                    for m in 0..=b {
                        for n in 0..=b {
                            v.push(Arrow::WithR { inner: Box::new(inner.clone()), m, n });
                        }
                    }
                }
                v
            }
            Groupoid::Linking { parent, .. } => parent.elements(bound),
        };
        out.sort();
        out
    }

    /// Canonical key of the connected component of a unit.
    fn component_key(&self, u: &Unit) -> usize {
        match (self, u) {
            (Groupoid::Dr(s), Unit::Pt(x)) => s.component(*x),
            (Groupoid::StabilizedDr(s), Unit::Lv(x, _)) => s.component(*x),
            (Groupoid::Action(a), Unit::Pt(x)) => a.orbit_id(*x),
            (Groupoid::Restricted { parent, .. }, u) | (Groupoid::Linking { parent, .. }, u) => {
                parent.component_key(u)
            }
            (Groupoid::ProductR(parent), Unit::WithR(v, _)) => parent.component_key(v),
            _ => panic!("unit does not belong to this groupoid variant"),
        }
    }

    /// Component keys of the whole unit space.
    fn all_component_keys(&self) -> BTreeSet<usize> {
        match self {
            Groupoid::Dr(s) | Groupoid::StabilizedDr(s) => {
                s.points().map(|x| s.component(x)).collect()
            }
            Groupoid::Action(a) => a.points().map(|x| a.orbit_id(x)).collect(),
            Groupoid::Restricted { parent, units } => {
                units.iter().map(|u| parent.component_key(u)).collect()
            }
            Groupoid::ProductR(parent) | Groupoid::Linking { parent, .. } => {
                // ProductR: every base unit appears at coordinate 0
                match self {
                    Groupoid::Linking { .. } => parent.all_component_keys(),
                    _ => parent.all_component_keys(),
                }
            }
        }
    }

    /// Two units admit an arrow between them iff they lie in one component.
    pub fn same_component(&self, u: &Unit, v: &Unit) -> bool {
        self.component_key(u) == self.component_key(v)
    }

    /// Fullness of a unit subset, decided exactly by orbit reachability:
    /// every unit of the groupoid is the range of an arrow with source in
    /// `uset` iff every component is met.
    pub fn is_full(&self, uset: &BTreeSet<Unit>) -> Result<bool> {
        for u in uset {
            if !self.contains_unit(u) {
                return Err(Error::invalid(format!("unit {u:?} is not a unit of this groupoid")));
            }
        }
        let met: BTreeSet<usize> = uset.iter().map(|u| self.component_key(u)).collect();
        Ok(self.all_component_keys().is_subset(&met))
    }

    pub fn restrict(&self, uset: &BTreeSet<Unit>) -> Result<Groupoid> {
        for u in uset {
            if !self.contains_unit(u) {
                return Err(Error::invalid(format!("unit {u:?} is not a unit of this groupoid")));
            }
        }
        Ok(Groupoid::Restricted { parent: Box::new(self.clone()), units: uset.clone() })
    }

    pub fn product_with_r(&self) -> Groupoid {
        Groupoid::ProductR(Box::new(self.clone()))
    }

    /// View this groupoid as a linking groupoid for the complementary full
    /// subsets `k1`, `k2`.
    pub fn linking(&self, k1: &BTreeSet<Unit>, k2: &BTreeSet<Unit>) -> Result<Groupoid> {
        let all = self
            .finite_units()
            .ok_or_else(|| Error::invalid("linking needs a finite unit space"))?;
        let all: BTreeSet<Unit> = all.into_iter().collect();
        if !k1.is_disjoint(k2) {
            return Err(Error::invalid("linking parts must be disjoint"));
        }
        let union: BTreeSet<Unit> = k1.union(k2).cloned().collect();
        if union != all {
            return Err(Error::invalid("linking parts must cover the unit space"));
        }
        if !(self.is_full(k1)? && self.is_full(k2)?) {
            return Err(Error::invalid("linking parts must both be full"));
        }
        Ok(Groupoid::Linking {
            parent: Box::new(self.clone()),
            k1: k1.clone(),
            k2: k2.clone(),
        })
    }

    /// Block of a linking arrow: `(i, j)` when the range lies in `K_i` and
    /// the source in `K_j`.
    pub fn block_of(&self, a: &Arrow) -> Result<(u8, u8)> {
        match self {
            Groupoid::Linking { parent, k1, .. } => {
                let r = parent.range(a);
                let s = parent.source(a);
                let bi = if k1.contains(&r) { 1 } else { 2 };
                let bj = if k1.contains(&s) { 1 } else { 2 };
                Ok((bi, bj))
            }
            _ => Err(Error::invalid("block_of applies to linking groupoids")),
        }
    }

    /// Arrows of one block of a linking groupoid, within a bound.
    pub fn linking_block(&self, i: u8, j: u8, bound: u32) -> Result<Vec<Arrow>> {
        match self {
            Groupoid::Linking { .. } => Ok(self
                .elements(bound)
                .into_iter()
                .filter(|a| self.block_of(a).map(|b| b == (i, j)).unwrap_or(false))
                .collect()),
            _ => Err(Error::invalid("linking_block applies to linking groupoids")),
        }
    }

    pub fn unit_json(&self, u: &Unit) -> Value {
        match (self, u) {
            (Groupoid::Dr(s), Unit::Pt(x)) | (Groupoid::StabilizedDr(s), Unit::Pt(x)) => {
                json!(s.name(*x))
            }
            (Groupoid::StabilizedDr(s), Unit::Lv(x, j)) => json!([s.name(*x), j]),
            (Groupoid::Action(a), Unit::Pt(x)) => json!(a.name(*x)),
            (Groupoid::Restricted { parent, .. }, u) | (Groupoid::Linking { parent, .. }, u) => {
                parent.unit_json(u)
            }
            (Groupoid::ProductR(parent), Unit::WithR(v, n)) => {
                json!([parent.unit_json(v), n])
            }
            _ => json!(format!("{u:?}")),
        }
    }

    pub fn arrow_json(&self, a: &Arrow) -> Value {
        match (self, a) {
            (Groupoid::Dr(s), Arrow::Dr(d)) => {
                json!([s.name(d.x), bigint_json(&d.p), s.name(d.y)])
            }
            (Groupoid::StabilizedDr(s), Arrow::StabDr { x, p, y }) => json!([
                [s.name(x.0), x.1],
                bigint_json(p),
                [s.name(y.0), y.1]
            ]),
            (Groupoid::Action(act), Arrow::Act { x, g }) => {
                json!({"x": act.name(*x), "g": g})
            }
            (Groupoid::Restricted { parent, .. }, a) | (Groupoid::Linking { parent, .. }, a) => {
                parent.arrow_json(a)
            }
            (Groupoid::ProductR(parent), Arrow::WithR { inner, m, n }) => {
                json!([parent.arrow_json(inner), [m, n]])
            }
            _ => json!(format!("{a:?}")),
        }
    }
}

pub fn bigint_json(p: &BigInt) -> Value {
    match p.to_i64() {
        Some(v) => json!(v),
        None => json!(p.to_string()),
    }
}

/// A grading: a group together with a valuation on arrows satisfying the
/// cocycle identity on composable pairs.
#[derive(Clone)]
pub struct Grading {
    pub target: Group,
    eval: Arc<dyn Fn(&Arrow) -> Result<GroupElem> + Send + Sync>,
}

impl std::fmt::Debug for Grading {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grading").field("target", &self.target).finish()
    }
}

impl Grading {
    pub fn from_fn(
        target: Group,
        eval: impl Fn(&Arrow) -> Result<GroupElem> + Send + Sync + 'static,
    ) -> Grading {
        Grading { target, eval: Arc::new(eval) }
    }

    pub fn trivial() -> Grading {
        let g = Group::trivial();
        let e = g.identity_elem();
        Grading::from_fn(g, move |_| Ok(e.clone()))
    }

    /// The canonical degree grading into `Z`.  On products with `R` the
    /// coordinate is ignored: the value of `(g, (m, n))` is the value of
    /// `g`.
    pub fn degree() -> Grading {
        fn val(a: &Arrow) -> Result<GroupElem> {
            match a {
                Arrow::Dr(d) => Ok(GroupElem::Vector(vec![d.p.clone()])),
                Arrow::StabDr { p, .. } => Ok(GroupElem::Vector(vec![p.clone()])),
                Arrow::WithR { inner, .. } => val(inner),
                Arrow::Act { .. } => Err(Error::GroupMismatch(
                    "transformation arrows carry no degree".into(),
                )),
            }
        }
        Grading::from_fn(Group::integers(), val)
    }

    /// The degree grading a base system induces on its stabilization: the
    /// degree seen after descending the levels, `p - m + n` on an arrow
    /// from level `n` to level `m`.  Corresponds to the coordinate-ignoring
    /// grading of the product with `R` under the canonical identification.
    pub fn stabilized_degree() -> Grading {
        fn val(a: &Arrow) -> Result<GroupElem> {
            match a {
                Arrow::StabDr { x, p, y } => Ok(GroupElem::Vector(vec![
                    p - BigInt::from(x.1) + BigInt::from(y.1),
                ])),
                Arrow::Dr(d) => Ok(GroupElem::Vector(vec![d.p.clone()])),
                Arrow::WithR { inner, .. } => val(inner),
                Arrow::Act { .. } => Err(Error::GroupMismatch(
                    "transformation arrows carry no degree".into(),
                )),
            }
        }
        Grading::from_fn(Group::integers(), val)
    }

    /// Grading of a transformation groupoid by its own group.
    pub fn action_group(group: Group) -> Grading {
        fn val(a: &Arrow) -> Result<GroupElem> {
            match a {
                Arrow::Act { g, .. } => Ok(GroupElem::Index(*g)),
                Arrow::WithR { inner, .. } => val(inner),
                _ => Err(Error::GroupMismatch("arrow carries no group coordinate".into())),
            }
        }
        Grading::from_fn(group, val)
    }

    pub fn grade(&self, a: &Arrow) -> Result<GroupElem> {
        (self.eval)(a)
    }
}

/// A finite-window view of a groupoid, the interface the isomorphism
/// verifier works against.
pub trait GroupoidView {
    type El: Clone + Ord + std::fmt::Debug;
    type Un: Clone + Ord + std::fmt::Debug;

    fn v_elements(&self, bound: u32) -> Vec<Self::El>;
    fn v_units(&self, bound: u32) -> Vec<Self::Un>;
    fn v_source(&self, a: &Self::El) -> Self::Un;
    fn v_range(&self, a: &Self::El) -> Self::Un;
    fn v_compose(&self, a: &Self::El, b: &Self::El) -> Option<Self::El>;
    fn v_invert(&self, a: &Self::El) -> Self::El;
    fn v_unit_arrow(&self, u: &Self::Un) -> Self::El;
    fn v_complexity(&self, a: &Self::El) -> u64;
    fn v_contains(&self, a: &Self::El) -> bool;
    fn v_el_json(&self, a: &Self::El) -> Value;
    fn v_un_json(&self, u: &Self::Un) -> Value;
}

impl GroupoidView for Groupoid {
    type El = Arrow;
    type Un = Unit;

    fn v_elements(&self, bound: u32) -> Vec<Arrow> {
        self.elements(bound)
    }
    fn v_units(&self, bound: u32) -> Vec<Unit> {
        self.units(bound)
    }
    fn v_source(&self, a: &Arrow) -> Unit {
        self.source(a)
    }
    fn v_range(&self, a: &Arrow) -> Unit {
        self.range(a)
    }
    fn v_compose(&self, a: &Arrow, b: &Arrow) -> Option<Arrow> {
        self.compose(a, b).ok()
    }
    fn v_invert(&self, a: &Arrow) -> Arrow {
        self.invert(a)
    }
    fn v_unit_arrow(&self, u: &Unit) -> Arrow {
        self.unit_arrow(u)
    }
    fn v_complexity(&self, a: &Arrow) -> u64 {
        self.complexity(a)
    }
    fn v_contains(&self, a: &Arrow) -> bool {
        self.contains(a)
    }
    fn v_el_json(&self, a: &Arrow) -> Value {
        self.arrow_json(a)
    }
    fn v_un_json(&self, u: &Unit) -> Value {
        self.unit_json(u)
    }
}

/// A finite table of arrow pairs on a bounded enumeration, plus the unit
/// bijection it restricts to.
#[derive(Clone, Debug)]
pub struct IsoTable<G1: GroupoidView, G2: GroupoidView> {
    pub unit_map: BTreeMap<G1::Un, G2::Un>,
    pub arrows: BTreeMap<G1::El, G2::El>,
    pub bound: u32,
}

impl<G1: GroupoidView, G2: GroupoidView> IsoTable<G1, G2> {
    pub fn new(bound: u32) -> Self {
        IsoTable { unit_map: BTreeMap::new(), arrows: BTreeMap::new(), bound }
    }
}

/// Concrete arrow map between two groupoid handles.
pub type ArrowMap = IsoTable<Groupoid, Groupoid>;

/// Extends a window table by the homomorphism property: repeatedly adjoins
/// products of mapped arrows, up to the domain complexity cap.  Returns
/// the extended map, or an inconsistency witness when two factorizations
/// of one arrow disagree (the window then extends to no homomorphism).
pub fn saturate_table<G1: GroupoidView, G2: GroupoidView>(
    g1: &G1,
    g2: &G2,
    table: &IsoTable<G1, G2>,
    cap: u64,
) -> std::result::Result<BTreeMap<G1::El, G2::El>, Value> {
    let mut map: BTreeMap<G1::El, G2::El> = table.arrows.clone();
    let mut frontier: Vec<(G1::El, G2::El)> =
        map.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
    while !frontier.is_empty() {
        let snapshot: Vec<(G1::El, G2::El)> =
            map.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
        let mut created: Vec<(G1::El, G2::El, G1::El, G1::El)> = Vec::new();
        for (a, ia) in &frontier {
            for (b, ib) in &snapshot {
                for ((x, ix), (y, iy)) in [((a, ia), (b, ib)), ((b, ib), (a, ia))] {
                    if g1.v_source(x) != g1.v_range(y) {
                        continue;
                    }
                    let Some(c) = g1.v_compose(x, y) else { continue };
                    if g1.v_complexity(&c) > cap {
                        continue;
                    }
                    let Some(ic) = g2.v_compose(ix, iy) else {
                        return Err(json!({
                            "reason": "images of a composable pair do not compose",
                            "pair": [g1.v_el_json(x), g1.v_el_json(y)],
                        }));
                    };
                    created.push((c, ic, x.clone(), y.clone()));
                }
            }
        }
        let mut fresh = Vec::new();
        for (c, ic, x, y) in created {
            match map.get(&c) {
                Some(prev) if *prev != ic => {
                    return Err(json!({
                        "reason": "two factorizations disagree",
                        "arrow": g1.v_el_json(&c),
                        "images": [g2.v_el_json(prev), g2.v_el_json(&ic)],
                        "via": [g1.v_el_json(&x), g1.v_el_json(&y)],
                    }));
                }
                Some(_) => {}
                None => {
                    map.insert(c.clone(), ic.clone());
                    fresh.push((c, ic));
                }
            }
        }
        frontier = fresh;
    }
    Ok(map)
}

type GradingEvals<'a, G1, G2> = (
    &'a dyn Fn(&<G1 as GroupoidView>::El) -> Result<GroupElem>,
    &'a dyn Fn(&<G2 as GroupoidView>::El) -> Result<GroupElem>,
    &'a Group,
);

/// Verifies that a finite arrow table is (the window of) a groupoid
/// isomorphism: unit bijection, injectivity, surjectivity at the induced
/// bound, the homomorphism property on composable pairs, and grading
/// intertwining when gradings are supplied.  Failures are data, reported
/// with witnesses.
pub fn verify_iso<G1: GroupoidView, G2: GroupoidView>(
    g1: &G1,
    g2: &G2,
    table: &IsoTable<G1, G2>,
    bound: u32,
    gradings: Option<GradingEvals<'_, G1, G2>>,
) -> Certificate {
    let mut cert = Certificate::new();
    let elements = g1.v_elements(bound);
    let units = g1.v_units(bound);

    // unit bijection
    {
        let mut missing = None;
        for u in &units {
            if !table.unit_map.contains_key(u) {
                missing = Some(u.clone());
                break;
            }
        }
        let mut dup = None;
        let mut seen: BTreeMap<&G2::Un, &G1::Un> = BTreeMap::new();
        for (u, v) in &table.unit_map {
            if let Some(prev) = seen.insert(v, u) {
                dup = Some((prev.clone(), u.clone()));
                break;
            }
        }
        let pass = missing.is_none() && dup.is_none();
        cert.record("unit-bijection", pass, Some(bound), || match (&missing, &dup) {
            (Some(u), _) => json!({"missing-unit": g1.v_un_json(u)}),
            (_, Some((a, b))) => json!({
                "collision": [g1.v_un_json(a), g1.v_un_json(b)]
            }),
            _ => Value::Null,
        });
    }

    // defined on the whole window
    let missing: Option<&G1::El> = elements.iter().find(|a| !table.arrows.contains_key(a));
    cert.record("defined", missing.is_none(), Some(bound), || {
        json!({"missing-arrow": g1.v_el_json(missing.unwrap())})
    });
    if missing.is_some() {
        return cert;
    }

    // images are arrows of the target with matching endpoints
    {
        let mut bad = None;
        for a in &elements {
            let b = &table.arrows[a];
            if !g2.v_contains(b) {
                bad = Some((a.clone(), b.clone(), "not-an-arrow"));
                break;
            }
            let su = table.unit_map.get(&g1.v_source(a));
            let ru = table.unit_map.get(&g1.v_range(a));
            if su != Some(&g2.v_source(b)) || ru != Some(&g2.v_range(b)) {
                bad = Some((a.clone(), b.clone(), "endpoint-mismatch"));
                break;
            }
        }
        cert.record("image-valid", bad.is_none(), Some(bound), || {
            let (a, b, why) = bad.as_ref().unwrap();
            json!({"arrow": g1.v_el_json(a), "image": g2.v_el_json(b), "reason": why})
        });
    }

    // injectivity
    {
        let mut seen: BTreeMap<&G2::El, &G1::El> = BTreeMap::new();
        let mut dup = None;
        for a in &elements {
            let b = &table.arrows[a];
            if let Some(prev) = seen.insert(b, a) {
                if prev != a {
                    dup = Some((prev.clone(), a.clone()));
                    break;
                }
            }
        }
        cert.record("injectivity", dup.is_none(), Some(bound), || {
            let (a, b) = dup.as_ref().unwrap();
            json!({"preimages": [g1.v_el_json(a), g1.v_el_json(b)]})
        });
    }

    // homomorphism: units, inverses, and all composable pairs in the window
    {
        let mut bad: Option<Value> = None;
        'outer: {
            for u in &units {
                let ua = g1.v_unit_arrow(u);
                if let (Some(img), Some(v)) = (table.arrows.get(&ua), table.unit_map.get(u)) {
                    if *img != g2.v_unit_arrow(v) {
                        bad = Some(json!({"unit": g1.v_un_json(u)}));
                        break 'outer;
                    }
                }
            }
            for a in &elements {
                let ai = g1.v_invert(a);
                if let (Some(b), Some(bi)) = (table.arrows.get(a), table.arrows.get(&ai)) {
                    if *bi != g2.v_invert(b) {
                        bad = Some(json!({"inverse-of": g1.v_el_json(a)}));
                        break 'outer;
                    }
                }
            }
            // bucket by source unit for pair enumeration
            let mut by_source: BTreeMap<G1::Un, Vec<&G1::El>> = BTreeMap::new();
            for a in &elements {
                by_source.entry(g1.v_source(a)).or_default().push(a);
            }
            for b in &elements {
                let rb = g1.v_range(b);
                let Some(heads) = by_source.get(&rb) else { continue };
                for a in heads {
                    let Some(c) = g1.v_compose(a, b) else {
                        bad = Some(json!({
                            "pair": [g1.v_el_json(a), g1.v_el_json(b)],
                            "reason": "source-range mismatch in domain"
                        }));
                        break 'outer;
                    };
                    let ma = &table.arrows[*a];
                    let mb = &table.arrows[b];
                    let Some(mc) = g2.v_compose(ma, mb) else {
                        bad = Some(json!({
                            "pair": [g1.v_el_json(a), g1.v_el_json(b)],
                            "reason": "images not composable"
                        }));
                        break 'outer;
                    };
                    if let Some(expected) = table.arrows.get(&c) {
                        if *expected != mc {
                            bad = Some(json!({
                                "pair": [g1.v_el_json(a), g1.v_el_json(b)],
                                "product": g1.v_el_json(&c),
                                "reason": "image of product differs"
                            }));
                            break 'outer;
                        }
                    } else if !g2.v_contains(&mc) {
                        bad = Some(json!({
                            "pair": [g1.v_el_json(a), g1.v_el_json(b)],
                            "reason": "product image invalid"
                        }));
                        break 'outer;
                    }
                }
            }
        }
        cert.record("homomorphism", bad.is_none(), Some(bound), || bad.clone().unwrap());
    }

    // surjectivity: the homomorphism the window determines must cover
    // every target arrow in the window.  Arrows the raw image misses may
    // still have preimages beyond the domain window, so the table is
    // saturated under products before judging.
    {
        let image: BTreeSet<&G2::El> = elements.iter().map(|a| &table.arrows[a]).collect();
        let targets = g2.v_elements(bound);
        let missing: Vec<&G2::El> = targets.iter().filter(|b| !image.contains(*b)).collect();
        let mut witness = None;
        if !missing.is_empty() {
            let cap = 4 * bound as u64 + 16;
            match saturate_table(g1, g2, table, cap) {
                Err(w) => witness = Some(w),
                Ok(extended) => {
                    let ext_image: BTreeSet<&G2::El> = extended.values().collect();
                    if let Some(b) = missing.iter().find(|b| !ext_image.contains(**b)) {
                        witness = Some(json!({"uncovered": g2.v_el_json(b)}));
                    }
                }
            }
        }
        cert.record("surjectivity", witness.is_none(), Some(bound), || witness.clone().unwrap());
    }

    // grading intertwining
    if let Some((c1, c2, target)) = gradings {
        let mut bad = None;
        for a in &elements {
            let b = &table.arrows[a];
            match (c1(a), c2(b)) {
                (Ok(v1), Ok(v2)) => {
                    if v1 != v2 || !target.contains(&v1) {
                        bad = Some(json!({
                            "arrow": g1.v_el_json(a),
                            "grade": format!("{v1:?}"),
                            "image-grade": format!("{v2:?}"),
                        }));
                        break;
                    }
                }
                _ => {
                    bad = Some(json!({"arrow": g1.v_el_json(a), "reason": "grade undefined"}));
                    break;
                }
            }
        }
        cert.record("grading", bad.is_none(), Some(bound), || bad.clone().unwrap());
    }

    cert
}

/// Composition of two linked equivalences inside a common ambient groupoid:
/// checks that the `K1 .. K3` block is exactly the set of products of
/// `K1 .. K2` and `K2 .. K3` arrows, with grades multiplying, and returns
/// the block.
pub fn compose_equivalences(
    g: &Groupoid,
    k1: &BTreeSet<Unit>,
    k2: &BTreeSet<Unit>,
    k3: &BTreeSet<Unit>,
    bound: u32,
    grading: Option<&Grading>,
) -> Result<(Vec<Arrow>, Certificate)> {
    for (name, k) in [("K1", k1), ("K2", k2), ("K3", k3)] {
        if !g.is_full(k)? {
            return Err(Error::invalid(format!("{name} is not full")));
        }
    }
    if k1 != k2 && !k1.is_disjoint(k2) || k2 != k3 && !k2.is_disjoint(k3) || k1 != k3 && !k1.is_disjoint(k3) {
        return Err(Error::invalid("blocks must be disjoint or equal"));
    }
    let mut cert = Certificate::new();
    let els = g.elements(bound);
    let block = |ka: &BTreeSet<Unit>, kb: &BTreeSet<Unit>| -> Vec<Arrow> {
        els.iter()
            .filter(|a| ka.contains(&g.range(a)) && kb.contains(&g.source(a)))
            .cloned()
            .collect()
    };
    let z1 = block(k1, k2);
    let z2 = block(k2, k3);
    let target = block(k1, k3);

    // products land in the block
    {
        let mut bad = None;
        'out: for a in &z1 {
            for b in &z2 {
                if g.source(a) == g.range(b) {
                    let c = g.compose(a, b)?;
                    if !(g.contains(&c)
                        && k1.contains(&g.range(&c))
                        && k3.contains(&g.source(&c)))
                    {
                        bad = Some((a.clone(), b.clone()));
                        break 'out;
                    }
                }
            }
        }
        cert.record("block-compose", bad.is_none(), Some(bound), || {
            let (a, b) = bad.as_ref().unwrap();
            json!([g.arrow_json(a), g.arrow_json(b)])
        });
    }

    // every block arrow factors, with multiplicative grades; connecting
    // arrows live within a reach-sized enlargement of the window
    {
        let reach = bound + 3 * (g.units(0).len().max(4) as u32) + 3;
        let wide = g.elements(reach);
        let mut bad: Option<Value> = None;
        'out: for a in &target {
            let sa = g.source(a);
            let mut found = false;
            for z in &wide {
                if g.source(z) == sa && k2.contains(&g.range(z)) {
                    let z1a = g.compose(a, &g.invert(z))?;
                    if g.contains(&z1a) {
                        if let Some(grad) = grading {
                            let ga = grad.grade(a)?;
                            let g1v = grad.grade(&z1a)?;
                            let g2v = grad.grade(z)?;
                            if grad.target.mul(&g1v, &g2v)? != ga {
                                bad = Some(json!({
                                    "arrow": g.arrow_json(a),
                                    "reason": "grade does not factor"
                                }));
                                break 'out;
                            }
                        }
                        found = true;
                        break;
                    }
                }
            }
            if !found {
                bad = Some(json!({"arrow": g.arrow_json(a), "reason": "no factorization"}));
                break 'out;
            }
        }
        cert.record("factorization", bad.is_none(), Some(bound), || bad.clone().unwrap());
    }

    Ok((target, cert))
}
