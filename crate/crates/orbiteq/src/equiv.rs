//! Equivalence of arrow groupoids, decided through restrictions to full
//! transversals: one point per orbit, with the isotropy recorded by the
//! eventual cycle length.  Graded equivalence additionally matches the
//! cycle lengths exactly; ungraded equivalence only needs the isotropy
//! groups abstractly isomorphic, so any two cycles match.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::dr::{DrArrow, DrSystem, PointId};
use crate::groupoid::{Arrow, ArrowMap, Groupoid, IsoTable, Unit};
use crate::{Error, Result};

/// One orbit of a system: its canonical representative (a cycle point when
/// there is a cycle) and the eventual cycle length (`0` for orbits that
/// leave the domain).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrbitProfile {
    pub cycle_len: u64,
    pub rep: PointId,
}

pub fn orbit_profiles(s: &DrSystem) -> Vec<OrbitProfile> {
    let mut comps: std::collections::BTreeMap<usize, Vec<PointId>> = Default::default();
    for x in s.points() {
        comps.entry(s.component(x)).or_default().push(x);
    }
    let mut out = Vec::new();
    for (_, pts) in comps {
        let cycle_len = s.stab(pts[0]).stab.generator;
        let rep = if cycle_len > 0 {
            *pts.iter().find(|&&x| s.stab(x).on_cycle).expect("cyclic orbit has a cycle point")
        } else {
            pts[0]
        };
        out.push(OrbitProfile { cycle_len, rep });
    }
    out.sort();
    out
}

/// A witness of equivalence: complementary-in-spirit full transversals and
/// the arrow map between the restricted groupoids.
#[derive(Clone, Debug)]
pub struct KakutaniWitness {
    pub u1: Vec<PointId>,
    pub u2: Vec<PointId>,
    pub iso: ArrowMap,
    pub graded: bool,
}

/// Decides equivalence by matching orbits: graded equivalence needs equal
/// cycle-length multisets, ungraded only matching counts of cyclic and
/// acyclic orbits.  On success returns full one-point-per-orbit subsets
/// and an isomorphism window of the restrictions at the given bound.
pub fn equiv_decide(
    s: &Arc<DrSystem>,
    t: &Arc<DrSystem>,
    graded: bool,
    bound: u32,
) -> Result<Option<KakutaniWitness>> {
    let ps = orbit_profiles(s);
    let pt = orbit_profiles(t);
    if ps.len() != pt.len() {
        return Ok(None);
    }
    // sort cyclic orbits by length, acyclic first (length 0)
    let mut ps = ps;
    let mut pt = pt;
    ps.sort();
    pt.sort();
    for (a, b) in ps.iter().zip(pt.iter()) {
        let ok = if graded {
            a.cycle_len == b.cycle_len
        } else {
            (a.cycle_len > 0) == (b.cycle_len > 0)
        };
        if !ok {
            return Ok(None);
        }
    }

    let u1: Vec<PointId> = ps.iter().map(|p| p.rep).collect();
    let u2: Vec<PointId> = pt.iter().map(|p| p.rep).collect();
    let set1: BTreeSet<Unit> = u1.iter().map(|&x| Unit::Pt(x)).collect();
    let g1 = Groupoid::dr(s.clone()).restrict(&set1)?;

    let mut iso: ArrowMap = IsoTable::new(bound);
    for (a, b) in ps.iter().zip(pt.iter()) {
        iso.unit_map.insert(Unit::Pt(a.rep), Unit::Pt(b.rep));
    }
    for arr in g1.elements(bound) {
        let Arrow::Dr(d) = &arr else { unreachable!() };
        let (pa, pb) = ps
            .iter()
            .zip(pt.iter())
            .find(|(p, _)| p.rep == d.x)
            .map(|(p, q)| (*p, *q))
            .ok_or_else(|| Error::invalid("restricted arrow off the transversal"))?;
        debug_assert_eq!(d.x, d.y, "one point per orbit leaves only isotropy");
        let image_degree: BigInt = if pa.cycle_len == 0 {
            debug_assert!(d.p.is_zero());
            BigInt::zero()
        } else {
            // the degree is a multiple of the cycle length; rescale
            &d.p / BigInt::from(pa.cycle_len) * BigInt::from(pb.cycle_len)
        };
        iso.arrows.insert(
            arr,
            Arrow::Dr(DrArrow { x: pb.rep, p: image_degree, y: pb.rep }),
        );
    }
    Ok(Some(KakutaniWitness { u1, u2, iso, graded }))
}

/// The restricted groupoids a witness relates.
pub fn witness_restrictions(
    s: &Arc<DrSystem>,
    t: &Arc<DrSystem>,
    w: &KakutaniWitness,
) -> Result<(Groupoid, Groupoid)> {
    let set1: BTreeSet<Unit> = w.u1.iter().map(|&x| Unit::Pt(x)).collect();
    let set2: BTreeSet<Unit> = w.u2.iter().map(|&x| Unit::Pt(x)).collect();
    Ok((
        Groupoid::dr(s.clone()).restrict(&set1)?,
        Groupoid::dr(t.clone()).restrict(&set2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::groupoid::{verify_iso, Grading};
    use crate::group::Group;

    #[test]
    fn profiles() {
        let two = catalog::two_orbit();
        let ps = orbit_profiles(&two);
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].cycle_len, 2);
        assert_eq!(ps[1].cycle_len, 3);
        let p = catalog::partial();
        let ps = orbit_profiles(&p);
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].cycle_len, 0);
    }

    #[test]
    fn three_vs_six_cycle() {
        let s3 = Arc::new(catalog::s3());
        let c6 = Arc::new(catalog::c6());
        let w = equiv_decide(&s3, &c6, false, 6).unwrap().expect("equivalent ungraded");
        let (g1, g2) = witness_restrictions(&s3, &c6, &w).unwrap();
        let cert = verify_iso(&g1, &g2, &w.iso, 6, None);
        assert!(cert.pass(), "{}", serde_json::to_string_pretty(&cert.to_json()).unwrap());
        // graded: isotropy 3Z cannot match 6Z
        assert!(equiv_decide(&s3, &c6, true, 6).unwrap().is_none());
    }

    #[test]
    fn self_equivalence_graded() {
        for s in catalog::arc_systems() {
            let w = equiv_decide(&s, &s, true, 6).unwrap().expect("identity witness");
            let (g1, g2) = witness_restrictions(&s, &s, &w).unwrap();
            let deg = Grading::degree();
            let e1 = |a: &Arrow| deg.grade(a);
            let e2 = |a: &Arrow| deg.grade(a);
            let cert = verify_iso(&g1, &g2, &w.iso, 6, Some((&e1, &e2, &Group::integers())));
            assert!(cert.pass(), "{s}");
        }
    }

    #[test]
    fn orbit_count_obstruction() {
        let s3 = Arc::new(catalog::s3());
        let two = Arc::new(catalog::two_orbit());
        assert!(equiv_decide(&s3, &two, false, 6).unwrap().is_none());
    }

    #[test]
    fn cyclic_acyclic_obstruction() {
        let s3 = Arc::new(catalog::s3());
        let p = Arc::new(catalog::partial());
        assert!(equiv_decide(&s3, &p, false, 6).unwrap().is_none());
    }
}
