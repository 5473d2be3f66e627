//! Two-sided conjugacy data between total surjective systems, and its
//! evaluation on the natural extension: eventually-periodic-backward
//! bi-infinite orbits.

use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::json;

use crate::cert::Certificate;
use crate::dr::{DrSystem, PointId};
use crate::{Error, Result};

/// Conjugacy-after-iteration data `(f, f', a, a', k, k')`.
#[derive(Clone, Debug)]
pub struct TscData {
    pub f: Vec<PointId>,
    pub fp: Vec<PointId>,
    pub a: Vec<u64>,
    pub ap: Vec<u64>,
    pub k: Vec<u64>,
    pub kp: Vec<u64>,
}

fn pow(sys: &DrSystem, x: PointId, n: u64) -> Option<PointId> {
    sys.pow(x, &BigInt::from(n))
}

/// Checks the four transfer identities pointwise.  Continuity and openness
/// of the point maps are vacuous over finite discrete spaces and recorded
/// as such.
pub fn verify_tsc(s: &DrSystem, t: &DrSystem, d: &TscData) -> Certificate {
    let mut cert = Certificate::new();
    let pre = s.points().all(|x| s.in_dom(x))
        && t.points().all(|y| t.in_dom(y))
        && s.is_permutation()
        && t.is_permutation();
    cert.record("preconditions", pre, None, || {
        json!("both maps must be total and surjective")
    });
    let shapes = d.f.len() == s.len()
        && d.a.len() == s.len()
        && d.k.len() == s.len()
        && d.fp.len() == t.len()
        && d.ap.len() == t.len()
        && d.kp.len() == t.len()
        && d.f.iter().all(|&y| y < t.len())
        && d.fp.iter().all(|&x| x < s.len());
    cert.record("totality", shapes, None, || json!("map tables have wrong dimensions"));
    if !(pre && shapes) {
        return cert;
    }

    {
        let bad = s
            .points()
            .find(|&x| pow(s, d.fp[d.f[x]], d.a[x]) != pow(s, x, d.a[x]));
        cert.record("retract-forward", bad.is_none(), None, || {
            json!({"x": s.name(bad.unwrap())})
        });
    }
    {
        let bad = s.points().find(|&x| {
            let sx = s.sigma(x).unwrap();
            pow(t, d.f[sx], d.k[x]) != pow(t, d.f[x], d.k[x] + 1)
        });
        cert.record("intertwine-forward", bad.is_none(), None, || {
            json!({"x": s.name(bad.unwrap())})
        });
    }
    {
        let bad = t
            .points()
            .find(|&y| pow(t, d.f[d.fp[y]], d.ap[y]) != pow(t, y, d.ap[y]));
        cert.record("retract-backward", bad.is_none(), None, || {
            json!({"y": t.name(bad.unwrap())})
        });
    }
    {
        let bad = t.points().find(|&y| {
            let ty = t.sigma(y).unwrap();
            pow(s, d.fp[ty], d.kp[y]) != pow(s, d.fp[y], d.kp[y] + 1)
        });
        cert.record("intertwine-backward", bad.is_none(), None, || {
            json!({"y": t.name(bad.unwrap())})
        });
    }
    // vacuously true over finite discrete spaces
    cert.ok("continuity-openness", None);
    cert
}

/// A point of the natural extension with an eventually periodic backward
/// tail: `..., C, C, C, path` with the anchor (index `0`) at the last
/// entry.  Consecutive entries step by the map throughout; the cycle
/// closes up.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NatExtPoint {
    pub back_cycle: Vec<PointId>,
    pub back_path: Vec<PointId>,
}

impl NatExtPoint {
    pub fn new(sys: &DrSystem, back_cycle: Vec<PointId>, back_path: Vec<PointId>) -> Result<NatExtPoint> {
        let p = NatExtPoint { back_cycle, back_path };
        p.validate(sys)?;
        Ok(p)
    }

    pub fn validate(&self, sys: &DrSystem) -> Result<()> {
        let r = self.back_cycle.len();
        if r == 0 {
            return Err(Error::invalid("backward cycle must be nonempty"));
        }
        for i in 0..r {
            let next = self.back_cycle[(i + 1) % r];
            if sys.sigma(self.back_cycle[i]) != Some(next) {
                return Err(Error::invalid("cycle entries do not step by the map"));
            }
        }
        if let Some(&first) = self.back_path.first() {
            if sys.sigma(self.back_cycle[r - 1]) != Some(first) {
                return Err(Error::invalid("path does not continue the cycle"));
            }
        }
        for w in self.back_path.windows(2) {
            if sys.sigma(w[0]) != Some(w[1]) {
                return Err(Error::invalid("path entries do not step by the map"));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.back_cycle.len() + self.back_path.len()
    }

    pub fn anchor(&self) -> PointId {
        *self.back_path.last().unwrap_or_else(|| {
            self.back_cycle.last().expect("cycle is nonempty")
        })
    }

    /// Entry at a nonpositive index.
    pub fn entry_back(&self, steps_back: u64) -> PointId {
        let q = self.back_path.len() as u64;
        let r = self.back_cycle.len() as u64;
        if steps_back < q {
            self.back_path[(q - 1 - steps_back) as usize]
        } else {
            let d = steps_back - q;
            let pos = ((r - 1) as i64 - (d % r) as i64).rem_euclid(r as i64);
            self.back_cycle[pos as usize]
        }
    }

    /// The shifted point: anchor advanced one step.
    pub fn shift(&self, sys: &DrSystem) -> Result<NatExtPoint> {
        let next = sys
            .sigma(self.anchor())
            .ok_or_else(|| Error::invalid("map undefined at the anchor"))?;
        let mut path = self.back_path.clone();
        path.push(next);
        NatExtPoint::new(sys, self.back_cycle.clone(), path)
    }

    /// Coordinatewise application of a point map; the image must satisfy
    /// the invariants over the target system.
    pub fn map(&self, target: &DrSystem, phi: impl Fn(PointId) -> PointId) -> Result<NatExtPoint> {
        NatExtPoint::new(
            target,
            self.back_cycle.iter().map(|&x| phi(x)).collect(),
            self.back_path.iter().map(|&x| phi(x)).collect(),
        )
    }
}

/// Semantic equality of two representations: agreement of the bi-infinite
/// sequences.  Backward they are eventually periodic, so a window of the
/// combined pre-period plus one period period decides; forward the anchor
/// decides because the map is deterministic.
pub fn points_equal(a: &NatExtPoint, b: &NatExtPoint) -> bool {
    if a.anchor() != b.anchor() {
        return false;
    }
    let ra = a.back_cycle.len() as u64;
    let rb = b.back_cycle.len() as u64;
    let lcm = ra / gcd(ra, rb) * rb;
    let window = a.back_path.len().max(b.back_path.len()) as u64 + lcm + 1;
    (0..=window).all(|i| a.entry_back(i) == b.entry_back(i))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The conjugating point map of two-sided data: `phi = tau^m . f` with `m`
/// the largest forward transfer value.
pub fn conjugating_map<'a>(t: &'a DrSystem, d: &TscData) -> impl Fn(PointId) -> PointId + 'a {
    let m = d.k.iter().copied().max().unwrap_or(0);
    let f = d.f.clone();
    move |x: PointId| pow(t, f[x], m).expect("target map is total")
}

/// Applies the conjugating map coordinatewise to a natural-extension
/// point.
pub fn nat_ext_map(
    s: &DrSystem,
    t: &DrSystem,
    d: &TscData,
    xi: &NatExtPoint,
) -> Result<NatExtPoint> {
    xi.validate(s)?;
    let phi = conjugating_map(t, d);
    xi.map(t, phi)
}

/// All natural-extension points of a permutation with representation size
/// at most `max_size`, one per semantic class.
pub fn enumerate_points(sys: &Arc<DrSystem>, max_size: usize) -> Vec<NatExtPoint> {
    let mut out: Vec<NatExtPoint> = Vec::new();
    for cycle in sys.cycles() {
        let r = cycle.len();
        if r > max_size {
            continue;
        }
        for rot in 0..r {
            let rotated: Vec<PointId> = (0..r).map(|i| cycle[(rot + i) % r]).collect();
            for q in 0..=(max_size - r) {
                let mut path = Vec::new();
                let mut cur = rotated[r - 1];
                for _ in 0..q {
                    cur = sys.sigma(cur).expect("permutation is total");
                    path.push(cur);
                }
                let p = NatExtPoint { back_cycle: rotated.clone(), back_path: path };
                debug_assert!(p.validate(sys).is_ok());
                if !out.iter().any(|other| points_equal(other, &p)) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Identity two-sided data of a permutation with itself.
pub fn identity_tsc(s: &DrSystem) -> TscData {
    TscData {
        f: (0..s.len()).collect(),
        fp: (0..s.len()).collect(),
        a: vec![0; s.len()],
        ap: vec![0; s.len()],
        k: vec![0; s.len()],
        kp: vec![0; s.len()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn identity_data_passes() {
        let s3 = catalog::s3();
        let cert = verify_tsc(&s3, &s3, &identity_tsc(&s3));
        assert!(cert.pass(), "{:?}", cert);
    }

    #[test]
    fn sigma_and_square_pass() {
        // f = sigma, f' = sigma^2 on the 3-cycle: sigma^3 = id
        let s3 = catalog::s3();
        let f: Vec<PointId> = s3.points().map(|x| s3.sigma(x).unwrap()).collect();
        let fp: Vec<PointId> = s3
            .points()
            .map(|x| s3.sigma(s3.sigma(x).unwrap()).unwrap())
            .collect();
        let d = TscData {
            f,
            fp,
            a: vec![0; 3],
            ap: vec![0; 3],
            k: vec![0; 3],
            kp: vec![0; 3],
        };
        assert!(verify_tsc(&s3, &s3, &d).pass());
    }

    #[test]
    fn constant_map_fails_for_every_a() {
        let s3 = catalog::s3();
        for a_val in 0..6u64 {
            let d = TscData {
                f: vec![0; 3],
                fp: (0..3).collect(),
                a: vec![a_val; 3],
                ap: vec![0; 3],
                k: vec![0; 3],
                kp: vec![0; 3],
            };
            assert!(!verify_tsc(&s3, &s3, &d).pass(), "a = {a_val}");
        }
    }

    #[test]
    fn representation_invariants() {
        let s3 = catalog::s3();
        // the full cycle through 0, anchored after two extra steps
        let p = NatExtPoint::new(&s3, vec![0, 1, 2], vec![0, 1]).unwrap();
        assert_eq!(p.anchor(), 1);
        assert_eq!(p.entry_back(0), 1);
        assert_eq!(p.entry_back(1), 0);
        assert_eq!(p.entry_back(2), 2);
        assert_eq!(p.entry_back(5), 2);
        // a rotated representation of the same sequence
        let q = NatExtPoint::new(&s3, vec![2, 0, 1], vec![]).unwrap();
        assert!(points_equal(&p, &q));
        // a different anchor is a different point
        let r = NatExtPoint::new(&s3, vec![0, 1, 2], vec![]).unwrap();
        assert!(!points_equal(&p, &r));
        // broken path rejected
        assert!(NatExtPoint::new(&s3, vec![0, 1, 2], vec![1]).is_err());
        assert!(NatExtPoint::new(&s3, vec![0, 2, 1], vec![]).is_err());
    }

    #[test]
    fn identity_map_is_identity_on_points() {
        let s3 = catalog::s3();
        let d = identity_tsc(&s3);
        for p in enumerate_points(&Arc::new(s3.clone()), 6) {
            let img = nat_ext_map(&s3, &s3, &d, &p).unwrap();
            assert!(points_equal(&p, &img));
        }
    }

    #[test]
    fn shift_intertwines() {
        let s3 = catalog::s3();
        let f: Vec<PointId> = s3.points().map(|x| s3.sigma(x).unwrap()).collect();
        let fp: Vec<PointId> = s3
            .points()
            .map(|x| s3.sigma(s3.sigma(x).unwrap()).unwrap())
            .collect();
        let d = TscData {
            f,
            fp,
            a: vec![0; 3],
            ap: vec![0; 3],
            k: vec![1; 3],
            kp: vec![0; 3],
        };
        assert!(verify_tsc(&s3, &s3, &d).pass());
        for p in enumerate_points(&Arc::new(s3.clone()), 6) {
            let lhs = nat_ext_map(&s3, &s3, &d, &p.shift(&s3).unwrap()).unwrap();
            let rhs = nat_ext_map(&s3, &s3, &d, &p).unwrap().shift(&s3).unwrap();
            assert!(points_equal(&lhs, &rhs));
        }
    }

    #[test]
    fn injective_on_bounded_points() {
        let s3 = Arc::new(catalog::s3());
        let d = identity_tsc(&s3);
        let pts = enumerate_points(&s3, 6);
        for (i, p) in pts.iter().enumerate() {
            for q in pts.iter().skip(i + 1) {
                let ip = nat_ext_map(&s3, &s3, &d, p).unwrap();
                let iq = nat_ext_map(&s3, &s3, &d, q).unwrap();
                assert!(!points_equal(&ip, &iq));
            }
        }
    }
}
