//! Reconstruction of an arrow groupoid from its bisection-supported
//! normalisers: partial maps, convolution products, the class relation with
//! its winding-class test, and the reconstruction map.
//!
//! Coefficients are exact rational complex numbers so that scalar-phase
//! reasoning stays symbolic; no floating point anywhere.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::dr::{DrArrow, DrSystem, PointId};
use crate::group::{Group, GroupElem, ZSubgroup};
use crate::groupoid::{bigint_json, Groupoid, GroupoidView, IsoTable, Unit};
use crate::{Error, Result};

/// Which grading the normaliser algebra carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradingMode {
    Trivial,
    CanonicalZ,
}

/// Exact complex coefficient with rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn new(re: BigRational, im: BigRational) -> Result<Coeff> {
        if re.is_zero() && im.is_zero() {
            return Err(Error::invalid("normaliser coefficients must be nonzero"));
        }
        Ok(Coeff { re, im })
    }

    pub fn one() -> Coeff {
        Coeff { re: BigRational::one(), im: BigRational::zero() }
    }

    pub fn from_ints(re: i64, im: i64) -> Result<Coeff> {
        Coeff::new(
            BigRational::from_integer(BigInt::from(re)),
            BigRational::from_integer(BigInt::from(im)),
        )
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        Coeff {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn conj(&self) -> Coeff {
        Coeff { re: self.re.clone(), im: -&self.im }
    }

    pub fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

/// A function supported on a bisection, homogeneous in canonical mode: the
/// support arrows have pairwise distinct sources, pairwise distinct
/// ranges, and in canonical mode one common degree.
#[derive(Clone, Debug)]
pub struct Normaliser {
    pub sys: Arc<DrSystem>,
    pub mode: GradingMode,
    support: BTreeMap<DrArrow, Coeff>,
}

impl Normaliser {
    pub fn new(
        sys: Arc<DrSystem>,
        mode: GradingMode,
        support: Vec<(DrArrow, Coeff)>,
    ) -> Result<Normaliser> {
        let mut sources = Vec::new();
        let mut ranges = Vec::new();
        let mut degree: Option<&BigInt> = None;
        for (a, _) in &support {
            if !sys.is_arrow(a) {
                return Err(Error::NotAnArrow(sys.arrow_string(a)));
            }
            sources.push(a.y);
            ranges.push(a.x);
            if mode == GradingMode::CanonicalZ {
                match degree {
                    None => degree = Some(&a.p),
                    Some(d) if *d == a.p => {}
                    _ => return Err(Error::invalid("support is not homogeneous")),
                }
            }
        }
        sources.sort();
        ranges.sort();
        if sources.windows(2).any(|w| w[0] == w[1]) || ranges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("support is not a bisection"));
        }
        Ok(Normaliser { sys, mode, support: support.into_iter().collect() })
    }

    pub fn delta(sys: Arc<DrSystem>, mode: GradingMode, arrow: DrArrow) -> Result<Normaliser> {
        Normaliser::new(sys, mode, vec![(arrow, Coeff::one())])
    }

    pub fn support(&self) -> impl Iterator<Item = (&DrArrow, &Coeff)> {
        self.support.iter()
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// Open support of the source projection: the sources of the support
    /// arrows, i.e. the points where the associated partial map acts.
    pub fn sources(&self) -> impl Iterator<Item = PointId> + '_ {
        self.support.keys().map(|a| a.y)
    }

    pub fn arrow_at_source(&self, x: PointId) -> Option<&DrArrow> {
        self.support.keys().find(|a| a.y == x)
    }

    /// The partial map: source of each support arrow to its range.
    pub fn alpha(&self) -> BTreeMap<PointId, PointId> {
        self.support.keys().map(|a| (a.y, a.x)).collect()
    }

    /// Adjoint: inverted arrows, conjugated coefficients.
    pub fn adjoint(&self) -> Normaliser {
        let support = self
            .support
            .iter()
            .map(|(a, c)| (a.inverse(), c.conj()))
            .collect();
        Normaliser { sys: self.sys.clone(), mode: self.mode, support }
    }

    /// Rescale every coefficient by a nonzero scalar; the class data is
    /// unaffected.
    pub fn scale(&self, z: &Coeff) -> Normaliser {
        let support = self.support.iter().map(|(a, c)| (a.clone(), c.mul(z))).collect();
        Normaliser { sys: self.sys.clone(), mode: self.mode, support }
    }
}

/// Convolution product; the support is the set of composable products,
/// again a bisection.
pub fn nproduct(n: &Normaliser, m: &Normaliser) -> Result<Normaliser> {
    if !Arc::ptr_eq(&n.sys, &m.sys) {
        return Err(Error::invalid("normalisers live over different systems"));
    }
    if n.mode != m.mode {
        return Err(Error::invalid("normalisers carry different grading modes"));
    }
    let mut support = Vec::new();
    for (a, ca) in n.support() {
        for (b, cb) in m.support() {
            if a.y == b.x {
                let prod = DrArrow { x: a.x, p: &a.p + &b.p, y: b.y };
                support.push((prod, ca.mul(cb)));
            }
        }
    }
    Normaliser::new(n.sys.clone(), n.mode, support)
}

/// The image of the comparison unitary of two normalisers at a point in
/// the quotient by the identity component: an element of `Stab(x)`, namely
/// the degree difference of the two support arrows through `x`.  Scalar
/// phases live in the identity component and do not contribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindingClass {
    pub value: BigInt,
    pub stab: ZSubgroup,
}

pub fn u_class(n: &Normaliser, m: &Normaliser, x: PointId) -> Result<WindingClass> {
    let an = n.arrow_at_source(x).ok_or(Error::OutsideSupport)?;
    let am = m.arrow_at_source(x).ok_or(Error::OutsideSupport)?;
    if n.mode == GradingMode::CanonicalZ && an.p != am.p {
        return Err(Error::GradeMismatch);
    }
    if an.x != am.x {
        return Err(Error::AlphaMismatch);
    }
    let value = &am.p - &an.p;
    let stab = n.sys.stab(x).stab;
    debug_assert!(stab.contains(&value));
    Ok(WindingClass { value, stab })
}

/// An equivalence class of a homogeneous normaliser at a character (here,
/// a point evaluation), in canonical form: the grade, the point, and the
/// unique support arrow out of it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct WeylClass {
    pub grade: GroupElem,
    pub char_point: PointId,
    pub canonical_arrow: DrArrow,
}

fn grade_of(mode: GradingMode, arrow: &DrArrow) -> GroupElem {
    match mode {
        GradingMode::Trivial => Group::trivial().identity_elem(),
        GradingMode::CanonicalZ => GroupElem::Vector(vec![arrow.p.clone()]),
    }
}

pub fn weyl_class(n: &Normaliser, x: PointId) -> Result<WeylClass> {
    let arrow = n.arrow_at_source(x).ok_or(Error::OutsideSupport)?;
    Ok(WeylClass {
        grade: grade_of(n.mode, arrow),
        char_point: x,
        canonical_arrow: arrow.clone(),
    })
}

/// The class relation from first principles: same character, compatible
/// grades, matching partial maps near the point, and trivial winding
/// class.  Precondition failures (the points must lie in both supports)
/// surface as errors; the relation itself returns `false`.
pub fn classes_equivalent(
    n: &Normaliser,
    x: PointId,
    m: &Normaliser,
    y: PointId,
) -> Result<bool> {
    let an = n.arrow_at_source(x).ok_or(Error::OutsideSupport)?;
    let am = m.arrow_at_source(y).ok_or(Error::OutsideSupport)?;
    if x != y {
        return Ok(false); // (R1)
    }
    if n.mode == GradingMode::CanonicalZ && an.p != am.p {
        return Ok(false); // (R2)
    }
    if an.x != am.x {
        return Ok(false); // (R3)
    }
    let w = u_class(n, m, x)?;
    Ok(w.value.is_zero()) // (R4)
}

/// Composition of classes through the convolution of delta representatives;
/// agrees with composing the canonical arrows.
pub fn weyl_compose(sys: &Arc<DrSystem>, a: &WeylClass, b: &WeylClass) -> Result<WeylClass> {
    if a.char_point != b.canonical_arrow.x {
        return Err(Error::NonComposable);
    }
    let mode = mode_of(a);
    let n = Normaliser::delta(sys.clone(), mode, a.canonical_arrow.clone())?;
    let m = Normaliser::delta(sys.clone(), mode, b.canonical_arrow.clone())?;
    let prod = nproduct(&n, &m)?;
    let class = weyl_class(&prod, b.char_point)?;
    debug_assert_eq!(
        class.canonical_arrow,
        DrArrow {
            x: a.canonical_arrow.x,
            p: &a.canonical_arrow.p + &b.canonical_arrow.p,
            y: b.canonical_arrow.y
        }
    );
    Ok(class)
}

pub fn weyl_inverse(sys: &Arc<DrSystem>, a: &WeylClass) -> Result<WeylClass> {
    let n = Normaliser::delta(sys.clone(), mode_of(a), a.canonical_arrow.clone())?;
    let adj = n.adjoint();
    weyl_class(&adj, a.canonical_arrow.x)
}

fn mode_of(c: &WeylClass) -> GradingMode {
    match &c.grade {
        GroupElem::Vector(_) => GradingMode::CanonicalZ,
        GroupElem::Index(_) => GradingMode::Trivial,
    }
}

/// The basic set `Z(n, U)`: the classes of `n` at the points of `U`.
pub fn basic_open(n: &Normaliser, points: &[PointId]) -> Result<Vec<WeylClass>> {
    let sources: Vec<PointId> = n.sources().collect();
    for x in points {
        if !sources.contains(x) {
            return Err(Error::OutsideSupport);
        }
    }
    points.iter().map(|&x| weyl_class(n, x)).collect()
}

/// The reconstructed groupoid: classes of homogeneous normalisers at
/// points, with operations through convolution.
#[derive(Clone, Debug)]
pub struct WeylGroupoid {
    pub sys: Arc<DrSystem>,
    pub mode: GradingMode,
}

impl WeylGroupoid {
    pub fn new(sys: Arc<DrSystem>, mode: GradingMode) -> WeylGroupoid {
        WeylGroupoid { sys, mode }
    }

    fn class_of_arrow(&self, arrow: &DrArrow) -> Result<WeylClass> {
        let n = Normaliser::delta(self.sys.clone(), self.mode, arrow.clone())?;
        weyl_class(&n, arrow.y)
    }

    pub fn grade(&self, c: &WeylClass) -> GroupElem {
        c.grade.clone()
    }
}

impl GroupoidView for WeylGroupoid {
    type El = WeylClass;
    type Un = PointId;

    fn v_elements(&self, bound: u32) -> Vec<WeylClass> {
        let g = Groupoid::dr(self.sys.clone());
        let mut out: Vec<WeylClass> = g
            .elements(bound)
            .into_iter()
            .map(|a| match a {
                crate::groupoid::Arrow::Dr(d) => {
                    self.class_of_arrow(&d).expect("enumerated arrows are valid")
                }
                _ => unreachable!(),
            })
            .collect();
        out.sort();
        out
    }

    fn v_units(&self, _bound: u32) -> Vec<PointId> {
        self.sys.points().collect()
    }

    fn v_source(&self, a: &WeylClass) -> PointId {
        a.char_point
    }

    fn v_range(&self, a: &WeylClass) -> PointId {
        a.canonical_arrow.x
    }

    fn v_compose(&self, a: &WeylClass, b: &WeylClass) -> Option<WeylClass> {
        weyl_compose(&self.sys, a, b).ok()
    }

    fn v_invert(&self, a: &WeylClass) -> WeylClass {
        weyl_inverse(&self.sys, a).expect("classes invert")
    }

    fn v_unit_arrow(&self, u: &PointId) -> WeylClass {
        self.class_of_arrow(&DrArrow::unit(*u)).expect("unit classes exist")
    }

    fn v_complexity(&self, a: &WeylClass) -> u64 {
        Groupoid::dr(self.sys.clone()).complexity(&crate::groupoid::Arrow::Dr(a.canonical_arrow.clone()))
    }

    fn v_contains(&self, a: &WeylClass) -> bool {
        self.sys.is_arrow(&a.canonical_arrow)
            && a.char_point == a.canonical_arrow.y
            && a.grade == grade_of(self.mode, &a.canonical_arrow)
    }

    fn v_el_json(&self, a: &WeylClass) -> Value {
        json!({
            "char": self.sys.name(a.char_point),
            "arrow": [
                self.sys.name(a.canonical_arrow.x),
                bigint_json(&a.canonical_arrow.p),
                self.sys.name(a.canonical_arrow.y)
            ],
        })
    }

    fn v_un_json(&self, u: &PointId) -> Value {
        json!(self.sys.name(*u))
    }
}

/// The reconstruction map: each arrow to the class of its delta
/// normaliser at its source.
pub fn theta_reconstruct(
    sys: &Arc<DrSystem>,
    mode: GradingMode,
    bound: u32,
) -> IsoTable<Groupoid, WeylGroupoid> {
    let g = Groupoid::dr(sys.clone());
    let w = WeylGroupoid::new(sys.clone(), mode);
    let mut table: IsoTable<Groupoid, WeylGroupoid> = IsoTable::new(bound);
    for x in sys.points() {
        table.unit_map.insert(Unit::Pt(x), x);
    }
    for a in g.elements(bound) {
        let crate::groupoid::Arrow::Dr(d) = &a else { unreachable!() };
        let class = w.class_of_arrow(d).expect("enumerated arrows are valid");
        table.arrows.insert(a, class);
    }
    table
}

/// Runs the reconstruction through the isomorphism verifier, with grading
/// intertwining in canonical mode.
pub fn verify_reconstruction(sys: &Arc<DrSystem>, mode: GradingMode, bound: u32) -> crate::Certificate {
    let g = Groupoid::dr(sys.clone());
    let w = WeylGroupoid::new(sys.clone(), mode);
    let table = theta_reconstruct(sys, mode, bound);
    match mode {
        GradingMode::Trivial => crate::groupoid::verify_iso(&g, &w, &table, bound, None),
        GradingMode::CanonicalZ => {
            let deg = crate::groupoid::Grading::degree();
            let c1 = move |a: &crate::groupoid::Arrow| deg.grade(a);
            let c2 = |c: &WeylClass| Ok(c.grade.clone());
            crate::groupoid::verify_iso(
                &g,
                &w,
                &table,
                bound,
                Some((&c1, &c2, &Group::integers())),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn s3() -> Arc<DrSystem> {
        Arc::new(catalog::s3())
    }

    #[test]
    fn alpha_of_single_arrow() {
        let s = s3();
        let n = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(0, 1, 1)).unwrap();
        let alpha = n.alpha();
        assert_eq!(alpha.len(), 1);
        assert_eq!(alpha[&1], 0);
    }

    #[test]
    fn alpha_laws() {
        let s = s3();
        for mode in [GradingMode::Trivial, GradingMode::CanonicalZ] {
            let n = Normaliser::new(
                s.clone(),
                mode,
                vec![
                    (DrArrow::new(0, 1, 1), Coeff::one()),
                    (DrArrow::new(1, 1, 2), Coeff::from_ints(2, 0).unwrap()),
                ],
            )
            .unwrap();
            let m = Normaliser::new(
                s.clone(),
                mode,
                vec![
                    (DrArrow::new(1, 1, 2), Coeff::one()),
                    (DrArrow::new(2, 1, 0), Coeff::from_ints(0, 1).unwrap()),
                ],
            )
            .unwrap();
            // alpha of the adjoint is the inverse partial map
            let a = n.alpha();
            let ai = n.adjoint().alpha();
            for (x, y) in &a {
                assert_eq!(ai[y], *x);
            }
            // alpha of a product composes the partial maps
            let nm = nproduct(&n, &m).unwrap();
            let anm = nm.alpha();
            let am = m.alpha();
            for (x, y) in &anm {
                assert_eq!(a[&am[x]], *y);
            }
        }
    }

    #[test]
    fn products_of_deltas() {
        let s = s3();
        let n = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(0, 1, 1)).unwrap();
        let m = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(1, 1, 2)).unwrap();
        let nm = nproduct(&n, &m).unwrap();
        let (arrow, coeff) = nm.support().next().unwrap();
        assert_eq!(*arrow, DrArrow::new(0, 2, 2));
        assert_eq!(*coeff, Coeff::one());
        // n n* is supported on units with |coeff|^2 values
        let z = Coeff::from_ints(2, 3).unwrap();
        let scaled = n.scale(&z);
        let prod = nproduct(&scaled, &scaled.adjoint()).unwrap();
        for (a, c) in prod.support() {
            assert!(a.is_unit());
            assert_eq!(c.re, z.norm_sq());
            assert!(c.im.is_zero());
        }
        // (n m)* = m* n*
        let lhs = nproduct(&n, &m).unwrap().adjoint();
        let rhs = nproduct(&m.adjoint(), &n.adjoint()).unwrap();
        assert_eq!(
            lhs.support().collect::<Vec<_>>(),
            rhs.support().collect::<Vec<_>>()
        );
    }

    #[test]
    fn winding_classes() {
        let s = s3();
        let n = Normaliser::delta(s.clone(), GradingMode::Trivial, DrArrow::new(0, 1, 1)).unwrap();
        let m = Normaliser::delta(s.clone(), GradingMode::Trivial, DrArrow::new(0, 4, 1)).unwrap();
        assert_eq!(u_class(&n, &n, 1).unwrap().value, BigInt::from(0));
        let w = u_class(&n, &m, 1).unwrap();
        assert_eq!(w.value, BigInt::from(3));
        assert_eq!(w.stab, ZSubgroup::new(3));
        let back = u_class(&m, &n, 1).unwrap();
        assert_eq!(back.value, BigInt::from(-3));
        // same pair in canonical mode is a grade mismatch
        let nc = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(0, 1, 1)).unwrap();
        let mc = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(0, 4, 1)).unwrap();
        assert!(matches!(u_class(&nc, &mc, 1), Err(Error::GradeMismatch)));
        assert!(matches!(u_class(&nc, &mc, 2), Err(Error::OutsideSupport)));
    }

    #[test]
    fn class_canonical_form() {
        let s = s3();
        let n = Normaliser::delta(s.clone(), GradingMode::Trivial, DrArrow::new(0, 1, 1)).unwrap();
        let c = weyl_class(&n, 1).unwrap();
        assert_eq!(c.canonical_arrow, DrArrow::new(0, 1, 1));
        // rescaling leaves the class unchanged
        let scaled = n.scale(&Coeff::from_ints(2, 3).unwrap());
        assert_eq!(weyl_class(&scaled, 1).unwrap(), c);
        assert!(classes_equivalent(&n, 1, &scaled, 1).unwrap());
        // a different degree through the same point is a different class
        let m = Normaliser::delta(s.clone(), GradingMode::Trivial, DrArrow::new(0, 4, 1)).unwrap();
        assert!(!classes_equivalent(&n, 1, &m, 1).unwrap());
        assert_ne!(weyl_class(&m, 1).unwrap(), c);
        // enlarging the support away from the point changes nothing
        let enlarged = Normaliser::new(
            s.clone(),
            GradingMode::Trivial,
            vec![
                (DrArrow::new(0, 1, 1), Coeff::one()),
                (DrArrow::new(1, 1, 2), Coeff::from_ints(5, -1).unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(weyl_class(&enlarged, 1).unwrap(), c);
    }

    #[test]
    fn class_operations() {
        let s = s3();
        let w = WeylGroupoid::new(s.clone(), GradingMode::CanonicalZ);
        let n = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(0, 1, 1)).unwrap();
        let m = Normaliser::delta(s.clone(), GradingMode::CanonicalZ, DrArrow::new(1, 1, 2)).unwrap();
        let a = weyl_class(&n, 1).unwrap();
        let b = weyl_class(&m, 2).unwrap();
        let ab = weyl_compose(&s, &a, &b).unwrap();
        assert_eq!(ab.canonical_arrow, DrArrow::new(0, 2, 2));
        assert_eq!(ab.char_point, 2);
        let inv = weyl_inverse(&s, &a).unwrap();
        assert_eq!(inv.canonical_arrow, DrArrow::new(1, -1, 0));
        assert_eq!(inv.char_point, 0);
        // units act as identities
        let u = w.v_unit_arrow(&1);
        assert_eq!(weyl_compose(&s, &a, &u).unwrap(), a);
        let ur = w.v_unit_arrow(&0);
        assert_eq!(weyl_compose(&s, &ur, &a).unwrap(), a);
    }

    #[test]
    fn winding_additivity() {
        let s = s3();
        let arrows = [DrArrow::new(0, 1, 1), DrArrow::new(0, 4, 1), DrArrow::new(0, -2, 1)];
        for a1 in &arrows {
            for a2 in &arrows {
                for a3 in &arrows {
                    let n1 = Normaliser::delta(s.clone(), GradingMode::Trivial, a1.clone()).unwrap();
                    let n2 = Normaliser::delta(s.clone(), GradingMode::Trivial, a2.clone()).unwrap();
                    let n3 = Normaliser::delta(s.clone(), GradingMode::Trivial, a3.clone()).unwrap();
                    let u12 = u_class(&n1, &n2, 1).unwrap();
                    let u23 = u_class(&n2, &n3, 1).unwrap();
                    let u13 = u_class(&n1, &n3, 1).unwrap();
                    assert_eq!(&u12.value + &u23.value, u13.value);
                }
            }
        }
    }

    #[test]
    fn basic_open_sets() {
        let s = s3();
        let n = Normaliser::new(
            s.clone(),
            GradingMode::CanonicalZ,
            vec![
                (DrArrow::new(0, 1, 1), Coeff::one()),
                (DrArrow::new(1, 1, 2), Coeff::one()),
            ],
        )
        .unwrap();
        let z = basic_open(&n, &[1]).unwrap();
        assert_eq!(z.len(), 1);
        let z2 = basic_open(&n, &[1, 2]).unwrap();
        assert_eq!(z2.len(), 2);
        let points: Vec<PointId> = z2.iter().map(|c| c.char_point).collect();
        assert_eq!(points, vec![1, 2]);
        assert!(basic_open(&n, &[0]).is_err());
    }

    #[test]
    fn reconstruction_small() {
        for sys in [Arc::new(catalog::s3()), Arc::new(catalog::funnel())] {
            for mode in [GradingMode::Trivial, GradingMode::CanonicalZ] {
                let cert = verify_reconstruction(&sys, mode, 4);
                assert!(
                    cert.pass(),
                    "{sys} {mode:?}: {}",
                    serde_json::to_string_pretty(&cert.to_json()).unwrap()
                );
            }
        }
    }

    #[test]
    fn reconstruction_separates_degrees() {
        let s = s3();
        let w = WeylGroupoid::new(s.clone(), GradingMode::Trivial);
        let c1 = w.class_of_arrow(&DrArrow::new(0, 1, 1)).unwrap();
        let c2 = w.class_of_arrow(&DrArrow::new(0, 4, 1)).unwrap();
        assert_ne!(c1, c2, "winding class 3 separates the classes");
    }
}
