//! Right actions of finite groups on finite point sets, their
//! transformation groupoids, and continuous orbit equivalence of actions.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde_json::json;

use crate::cert::Certificate;
use crate::dr::PointId;
use crate::group::{Group, GroupElem};
use crate::groupoid::{Arrow, ArrowMap, Groupoid, IsoTable, Unit};
use crate::{Error, Result};

/// A right action of a finite table group on a finite point set.  The
/// action axioms are checked by full enumeration at construction; tables
/// that fail them (left-action shaped input, say) are rejected, never
/// repaired.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub group: Group,
    names: Vec<String>,
    act: Vec<Vec<PointId>>,
    orbit: Vec<usize>,
}

impl GroupAction {
    pub fn new(group: Group, names: Vec<String>, act: Vec<Vec<PointId>>) -> Result<GroupAction> {
        let order = match &group {
            Group::FiniteTable { order, .. } => *order,
            Group::FreeAbelian { .. } => {
                return Err(Error::invalid("only finite groups act; encode Z^d actions through finite quotients"))
            }
        };
        let n = names.len();
        if n == 0 {
            return Err(Error::invalid("action needs at least one point"));
        }
        if act.len() != n || act.iter().any(|row| row.len() != order) {
            return Err(Error::invalid("action table has wrong dimensions"));
        }
        if act.iter().flatten().any(|&y| y >= n) {
            return Err(Error::invalid("action table maps outside the point set"));
        }
        let e = match group.identity_elem() {
            GroupElem::Index(i) => i,
            _ => unreachable!(),
        };
        for x in 0..n {
            if act[x][e] != x {
                return Err(Error::invalid(format!("identity moves point {x}")));
            }
        }
        let table = match &group {
            Group::FiniteTable { table, .. } => table.clone(),
            _ => unreachable!(),
        };
        for x in 0..n {
            for g in 0..order {
                for h in 0..order {
                    if act[act[x][g]][h] != act[x][table[g][h]] {
                        return Err(Error::invalid(format!(
                            "not a right action at (x={x}, g={g}, h={h})"
                        )));
                    }
                }
            }
        }
        // orbits
        let mut orbit: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for x in 0..n {
                for g in 0..order {
                    let y = act[x][g];
                    let m = orbit[x].min(orbit[y]);
                    if orbit[x] != m || orbit[y] != m {
                        orbit[x] = m;
                        orbit[y] = m;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(GroupAction { group, names, act, orbit })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> {
        0..self.names.len()
    }

    pub fn name(&self, x: PointId) -> &str {
        &self.names[x]
    }

    pub fn index(&self, name: &str) -> Result<PointId> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::invalid(format!("unknown point {name:?}")))
    }

    pub fn order(&self) -> usize {
        self.group.order().expect("acting groups are finite")
    }

    pub fn identity_index(&self) -> usize {
        match self.group.identity_elem() {
            GroupElem::Index(i) => i,
            _ => unreachable!(),
        }
    }

    pub fn apply(&self, x: PointId, g: usize) -> PointId {
        self.act[x][g]
    }

    pub fn orbit_id(&self, x: PointId) -> usize {
        self.orbit[x]
    }

    pub fn orbit_count(&self) -> usize {
        let ids: BTreeSet<usize> = self.orbit.iter().copied().collect();
        ids.len()
    }

    /// `Stab(x) = {g : x.g = x}`, as a sorted element list.
    pub fn stab(&self, x: PointId) -> Vec<usize> {
        (0..self.order()).filter(|&g| self.act[x][g] == x).collect()
    }

    /// Essential stabiliser from its own definition: elements fixing every
    /// point of some neighbourhood of `x`.  Neighbourhoods of `x` here are
    /// the supersets of `{x}`, so the singleton decides.
    pub fn stab_ess(&self, x: PointId) -> Vec<usize> {
        let neighbourhood = [x];
        (0..self.order())
            .filter(|&g| neighbourhood.iter().all(|&y| self.act[y][g] == y))
            .collect()
    }

    pub fn is_topologically_free(&self) -> bool {
        self.points().all(|x| self.stab_ess(x) == vec![self.identity_index()])
    }

    /// Interior of the isotropy as the union of essential stabilisers.
    pub fn isotropy_interior(&self) -> BTreeSet<(PointId, usize)> {
        let mut out = BTreeSet::new();
        for x in self.points() {
            for g in self.stab_ess(x) {
                out.insert((x, g));
            }
        }
        out
    }

    /// Interior of the isotropy straight from the definition: isotropy
    /// arrows that are interior points of `Iso` -- with discrete points,
    /// the isotropy itself.
    pub fn isotropy_interior_by_definition(&self) -> BTreeSet<(PointId, usize)> {
        let mut out = BTreeSet::new();
        for x in self.points() {
            for g in 0..self.order() {
                if self.act[x][g] == x {
                    out.insert((x, g));
                }
            }
        }
        out
    }
}

/// Continuous orbit equivalence data between two actions: a point
/// bijection `h`, and transfer maps `phi : X x Gamma -> Lambda` and
/// `eta : Y x Lambda -> Gamma`.
#[derive(Clone, Debug)]
pub struct ActionCoe {
    pub h: Vec<PointId>,
    pub phi: Vec<Vec<usize>>,
    pub eta: Vec<Vec<usize>>,
}

fn inverse_of(h: &[PointId]) -> Option<Vec<PointId>> {
    let mut inv = vec![usize::MAX; h.len()];
    for (x, &y) in h.iter().enumerate() {
        if y >= h.len() || inv[y] != usize::MAX {
            return None;
        }
        inv[y] = x;
    }
    Some(inv)
}

/// Stabiliser checks requested of `verify_action_coe`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabCheck {
    None,
    Plain,
    Essential,
}

/// Checks the two intertwining identities exhaustively, optionally the
/// cocycle identity for `phi` and stabiliser bijectivity.
pub fn verify_action_coe(
    a: &GroupAction,
    b: &GroupAction,
    d: &ActionCoe,
    cocycle: bool,
    stab: StabCheck,
) -> Certificate {
    let mut cert = Certificate::new();
    let shape_ok = d.h.len() == a.len()
        && d.phi.len() == a.len()
        && d.phi.iter().all(|r| r.len() == a.order())
        && d.eta.len() == b.len()
        && d.eta.iter().all(|r| r.len() == b.order())
        && a.len() == b.len();
    cert.record("totality", shape_ok, None, || json!("map tables have wrong dimensions"));
    if !shape_ok {
        return cert;
    }
    let hinv = inverse_of(&d.h);
    cert.record("h-bijective", hinv.is_some(), None, || json!("h is not a bijection"));
    let Some(hinv) = hinv else { return cert };

    {
        let mut bad = None;
        'out: for x in a.points() {
            for g in 0..a.order() {
                let lam = d.phi[x][g];
                if lam >= b.order() || b.apply(d.h[x], lam) != d.h[a.apply(x, g)] {
                    bad = Some((x, g));
                    break 'out;
                }
            }
        }
        cert.record("forward-intertwine", bad.is_none(), None, || {
            let (x, g) = bad.unwrap();
            json!({"x": a.name(x), "g": g})
        });
    }
    {
        let mut bad = None;
        'out: for y in b.points() {
            for lam in 0..b.order() {
                let g = d.eta[y][lam];
                if g >= a.order() || a.apply(hinv[y], g) != hinv[b.apply(y, lam)] {
                    bad = Some((y, lam));
                    break 'out;
                }
            }
        }
        cert.record("backward-intertwine", bad.is_none(), None, || {
            let (y, lam) = bad.unwrap();
            json!({"y": b.name(y), "lambda": lam})
        });
    }

    if cocycle {
        let table = match &a.group {
            Group::FiniteTable { table, .. } => table,
            _ => unreachable!(),
        };
        let btable = match &b.group {
            Group::FiniteTable { table, .. } => table,
            _ => unreachable!(),
        };
        let mut bad = None;
        'out: for x in a.points() {
            for g in 0..a.order() {
                for g2 in 0..a.order() {
                    let lhs = d.phi[x][table[g][g2]];
                    let rhs = btable[d.phi[x][g]][d.phi[a.apply(x, g)][g2]];
                    if lhs != rhs {
                        bad = Some((x, g, g2));
                        break 'out;
                    }
                }
            }
        }
        cert.record("phi-cocycle", bad.is_none(), None, || {
            let (x, g, g2) = bad.unwrap();
            json!({"x": a.name(x), "g": g, "g2": g2})
        });
    }

    match stab {
        StabCheck::None => {}
        StabCheck::Plain | StabCheck::Essential => {
            let ess = stab == StabCheck::Essential;
            let name = if ess { "ess-stab-bijection" } else { "stab-bijection" };
            let mut bad = None;
            for x in a.points() {
                let sx = if ess { a.stab_ess(x) } else { a.stab(x) };
                let sy = if ess { b.stab_ess(d.h[x]) } else { b.stab(d.h[x]) };
                let image: BTreeSet<usize> = sx.iter().map(|&g| d.phi[x][g]).collect();
                let target: BTreeSet<usize> = sy.into_iter().collect();
                if image.len() != sx.len() || image != target {
                    bad = Some(x);
                    break;
                }
            }
            cert.record(name, bad.is_none(), None, || json!({"x": a.name(bad.unwrap())}));
        }
    }

    cert
}

/// The induced map `(x, g) -> (h(x), phi(x, g))` as a full arrow table.
pub fn theta_action(a: &Arc<GroupAction>, b: &Arc<GroupAction>, d: &ActionCoe) -> Result<ArrowMap> {
    if d.h.len() != a.len() || a.len() != b.len() {
        return Err(Error::invalid("point counts differ"));
    }
    let mut table = IsoTable::new(1);
    for x in a.points() {
        table.unit_map.insert(Unit::Pt(x), Unit::Pt(d.h[x]));
    }
    for x in a.points() {
        for g in 0..a.order() {
            let lam = d.phi[x][g];
            if lam >= b.order() {
                return Err(Error::invalid("phi maps outside the target group"));
            }
            table
                .arrows
                .insert(Arrow::Act { x, g }, Arrow::Act { x: d.h[x], g: lam });
        }
    }
    Ok(table)
}

/// The pointwise least `phi` and `eta` completing a given bijection to a
/// continuous orbit equivalence, if they exist.
pub fn complete_action_coe(a: &GroupAction, b: &GroupAction, h: &[PointId]) -> Option<ActionCoe> {
    if h.len() != a.len() || a.len() != b.len() {
        return None;
    }
    let hinv = inverse_of(h)?;
    let n = a.len();
    let mut phi = vec![vec![0usize; a.order()]; n];
    for x in 0..n {
        for g in 0..a.order() {
            let lam = (0..b.order()).find(|&lam| b.apply(h[x], lam) == h[a.apply(x, g)])?;
            phi[x][g] = lam;
        }
    }
    let mut eta = vec![vec![0usize; b.order()]; n];
    for y in 0..n {
        for lam in 0..b.order() {
            let g = (0..a.order()).find(|&g| a.apply(hinv[y], g) == hinv[b.apply(y, lam)])?;
            eta[y][lam] = g;
        }
    }
    Some(ActionCoe { h: h.to_vec(), phi, eta })
}

/// Exhaustive search for a continuous orbit equivalence: bijections `h` in
/// lexicographic order, then the pointwise least `phi` and `eta` solving
/// the intertwining identities.  Returns the least witness.
pub fn search_action_coe(a: &GroupAction, b: &GroupAction) -> Option<ActionCoe> {
    if a.len() != b.len() {
        return None;
    }
    let n = a.len();
    fn rec(
        a: &GroupAction,
        b: &GroupAction,
        h: &mut Vec<PointId>,
        used: &mut Vec<bool>,
    ) -> Option<ActionCoe> {
        let n = a.len();
        if h.len() == n {
            return complete_action_coe(a, b, h);
        }
        for y in 0..n {
            if used[y] {
                continue;
            }
            h.push(y);
            used[y] = true;
            // phi must stay solvable at every pair with both ends assigned
            let ok = (0..h.len()).all(|xp| {
                (0..a.order()).all(|g| {
                    let tgt = a.apply(xp, g);
                    tgt >= h.len() || (0..b.order()).any(|lam| b.apply(h[xp], lam) == h[tgt])
                })
            });
            if ok {
                if let Some(found) = rec(a, b, h, used) {
                    return Some(found);
                }
            }
            used[y] = false;
            h.pop();
        }
        None
    }
    rec(a, b, &mut Vec::new(), &mut vec![false; n])
}

/// The cocycle identity for a transfer map alone.
pub fn phi_is_cocycle(a: &GroupAction, b: &GroupAction, phi: &[Vec<usize>]) -> bool {
    let (Group::FiniteTable { table, .. }, Group::FiniteTable { table: btable, .. }) =
        (&a.group, &b.group)
    else {
        return false;
    };
    a.points().all(|x| {
        (0..a.order()).all(|g| {
            (0..a.order()).all(|g2| {
                phi[x][table[g][g2]] == btable[phi[x][g]][phi[a.apply(x, g)][g2]]
            })
        })
    })
}

/// Stabiliser bijectivity of a transfer map at every point.
pub fn phi_preserves_stab(
    a: &GroupAction,
    b: &GroupAction,
    h: &[PointId],
    phi: &[Vec<usize>],
    essential: bool,
) -> bool {
    a.points().all(|x| {
        let sx = if essential { a.stab_ess(x) } else { a.stab(x) };
        let sy = if essential { b.stab_ess(h[x]) } else { b.stab(h[x]) };
        let image: BTreeSet<usize> = sx.iter().map(|&g| phi[x][g]).collect();
        let target: BTreeSet<usize> = sy.into_iter().collect();
        image.len() == sx.len() && image == target
    })
}

/// Equivariance of a point map between actions of the same group.
pub fn is_conjugacy(a: &GroupAction, b: &GroupAction, h: &[PointId]) -> bool {
    if a.group != b.group || a.len() != b.len() || h.len() != a.len() {
        return false;
    }
    if inverse_of(h).is_none() {
        return false;
    }
    a.points().all(|x| (0..a.order()).all(|g| b.apply(h[x], g) == h[a.apply(x, g)]))
}

/// Transformation groupoid handle.
pub fn transformation_groupoid(a: Arc<GroupAction>) -> Groupoid {
    Groupoid::action(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::groupoid::verify_iso;

    #[test]
    fn stabilisers() {
        let swap = catalog::act_swap();
        assert_eq!(swap.stab(0), vec![0]);
        let triv = catalog::act_trivial_z2();
        assert_eq!(triv.stab(0), vec![0, 1]);
        let rot = catalog::act_rot_z4();
        for x in rot.points() {
            assert_eq!(rot.stab(x), vec![0]);
            assert_eq!(rot.stab_ess(x), rot.stab(x));
        }
    }

    #[test]
    fn isotropy_interior_matches_definition() {
        for (_, a) in catalog::builtin_actions() {
            assert_eq!(a.isotropy_interior(), a.isotropy_interior_by_definition());
        }
    }

    #[test]
    fn rejects_left_action_tables() {
        // a table that is not a right action: swap under the identity
        let bad = GroupAction::new(
            Group::cyclic(2),
            vec!["0".into(), "1".into()],
            vec![vec![1, 0], vec![0, 1]],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn identity_equivalence_passes() {
        let a = catalog::act_rot_z4();
        let d = ActionCoe {
            h: (0..4).collect(),
            phi: (0..4).map(|_| (0..4).collect()).collect(),
            eta: (0..4).map(|_| (0..4).collect()).collect(),
        };
        let cert = verify_action_coe(&a, &a, &d, true, StabCheck::Essential);
        assert!(cert.pass(), "{:?}", cert);
    }

    #[test]
    fn constant_phi_fails() {
        let a = catalog::act_rot_z4();
        let d = ActionCoe {
            h: (0..4).collect(),
            phi: vec![vec![0; 4]; 4],
            eta: (0..4).map(|_| (0..4).collect()).collect(),
        };
        let cert = verify_action_coe(&a, &a, &d, false, StabCheck::None);
        assert!(!cert.pass());
    }

    #[test]
    fn rot4_klein_equivalent() {
        let a = catalog::act_rot_z4();
        let b = catalog::act_klein_free();
        let d = search_action_coe(&a, &b).expect("both are the full relation on 4 points");
        let cert = verify_action_coe(&a, &b, &d, false, StabCheck::None);
        assert!(cert.pass());
        // the induced map is an isomorphism of the 16-arrow groupoids
        let aa = Arc::new(a);
        let bb = Arc::new(b);
        let t = theta_action(&aa, &bb, &d).unwrap();
        let g1 = Groupoid::action(aa.clone());
        let g2 = Groupoid::action(bb.clone());
        assert_eq!(g1.elements(1).len(), 16);
        let cert = verify_iso(&g1, &g2, &t, 1, None);
        assert!(cert.pass(), "{}", serde_json::to_string_pretty(&cert.to_json()).unwrap());
    }

    #[test]
    fn search_absent_on_unit_mismatch() {
        let a = catalog::act_rot_z4();
        let b = catalog::act_trivial_z4();
        assert!(search_action_coe(&a, &b).is_none());
    }

    #[test]
    fn conjugacy_examples() {
        let rot = catalog::act_rot_z4();
        // rotation vs itself under a rotation of the space
        let h: Vec<usize> = (0..4).map(|x| (x + 1) % 4).collect();
        assert!(is_conjugacy(&rot, &rot, &h));
        // generator acting as rotation^2 has different orbit structure
        let sq = GroupAction::new(
            Group::cyclic(4),
            (0..4).map(|i| i.to_string()).collect(),
            (0..4usize).map(|x| (0..4usize).map(|g| (x + 2 * g) % 4).collect()).collect(),
        )
        .unwrap();
        for perm in permutations(4) {
            assert!(!is_conjugacy(&rot, &sq, &perm));
        }
        // non-bijective h is rejected
        assert!(!is_conjugacy(&rot, &rot, &[0, 0, 1, 2]));
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..n {
                let mut q: Vec<usize> = p.iter().map(|&v| if v >= i { v + 1 } else { v }).collect();
                q.insert(0, i);
                out.push(q);
            }
        }
        out
    }
}
