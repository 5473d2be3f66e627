//! Decomposition of isomorphisms between permutation systems: the degree
//! transfer function `f`, the sign threshold, the split of the space into a
//! conjugate part and a reverse-conjugate part, and the converse
//! construction of an arrow map from such a split.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::dr::{DrArrow, DrSystem, PointId};
use crate::groupoid::{Arrow, ArrowMap, Groupoid, IsoTable, Unit};
use crate::{Error, Result};

/// An arrow map between two total bijective systems, reduced to the data
/// the decomposition needs: the unit bijection and the degrees of the
/// generator images.
#[derive(Clone, Debug)]
pub struct FlipInput {
    pub s: Arc<DrSystem>,
    pub t: Arc<DrSystem>,
    pub h: Vec<PointId>,
    f1: Vec<i64>,
}

/// The two-part decomposition: `X1` where the map is orientation
/// preserving, `X2` where it reverses, with the transfer exponents and the
/// conjugacies they define.
#[derive(Clone, Debug)]
pub struct FlipDecomposition {
    pub n_threshold: u64,
    pub x1: BTreeSet<PointId>,
    pub x2: BTreeSet<PointId>,
    pub a: BTreeMap<PointId, i64>,
    pub b: BTreeMap<PointId, i64>,
    pub h1: BTreeMap<PointId, PointId>,
    pub h2: BTreeMap<PointId, PointId>,
    pub y1: BTreeSet<PointId>,
    pub y2: BTreeSet<PointId>,
}

impl FlipInput {
    /// Reads the generator images out of an arrow map.  The systems must be
    /// total bijections and the map must cover the unit space and the
    /// degree-one generators.
    pub fn new(s: Arc<DrSystem>, t: Arc<DrSystem>, theta: &ArrowMap) -> Result<FlipInput> {
        if !s.is_permutation() || !t.is_permutation() {
            return Err(Error::invalid("flip decomposition needs total bijections"));
        }
        let mut h = vec![usize::MAX; s.len()];
        for (u, v) in &theta.unit_map {
            match (u, v) {
                (Unit::Pt(x), Unit::Pt(y)) => h[*x] = *y,
                _ => return Err(Error::invalid("unit map must send points to points")),
            }
        }
        if h.iter().any(|&y| y == usize::MAX) || crate::coe::inverse_bijection(&h).is_none() {
            return Err(Error::invalid("unit map is not a bijection"));
        }
        let mut f1 = vec![0i64; s.len()];
        for x in s.points() {
            let sx = s.sigma(x).unwrap();
            let g = Arrow::Dr(DrArrow::new(x, 1, sx));
            let img = theta
                .arrows
                .get(&g)
                .ok_or_else(|| Error::invalid("map does not cover the generators"))?;
            let Arrow::Dr(img) = img else {
                return Err(Error::invalid("image is not a plain arrow"));
            };
            if img.x != h[x] || img.y != h[sx] {
                return Err(Error::invalid("generator image has wrong endpoints"));
            }
            f1[x] = img
                .p
                .to_i64()
                .ok_or_else(|| Error::invalid("generator degree out of range"))?;
        }
        Ok(FlipInput { s, t, h, f1 })
    }

    /// `f(n, x)`: the degree of the image of `(x, n, sigma^n(x))`, computed
    /// through the cocycle identity `f(m+n, x) = f(m, x) + f(n, sigma^m(x))`.
    pub fn f(&self, n: i64, x: PointId) -> i64 {
        if n >= 0 {
            let mut total = 0;
            let mut cur = x;
            for _ in 0..n {
                total += self.f1[cur];
                cur = self.s.sigma(cur).unwrap();
            }
            total
        } else {
            -self.f(-n, self.s.perm_pow(x, n))
        }
    }

    pub fn max_step(&self) -> i64 {
        self.f1.iter().map(|v| v.abs()).max().unwrap_or(0)
    }

    fn cycle_len(&self, x: PointId) -> i64 {
        self.s.eventual_cycle_len(x) as i64
    }

    /// Step of `f` along one full cycle; constant along the orbit.
    fn delta(&self, x: PointId) -> i64 {
        self.f(self.cycle_len(x), x)
    }

    /// Minimal `|n|` with `f(n, x) = t`, or `None` when `t` misses the
    /// image of `f(., x)`.  Uses `f(r + j len) = f(r) + j delta`.
    fn min_window_hitting(&self, x: PointId, t: i64) -> Option<i64> {
        let len = self.cycle_len(x);
        let delta = self.delta(x);
        let mut best: Option<i64> = None;
        for r in 0..len {
            let fr = self.f(r, x);
            let candidates: Vec<i64> = if delta == 0 {
                if fr == t {
                    vec![r, r - len]
                } else {
                    vec![]
                }
            } else if (t - fr) % delta == 0 {
                vec![r + (t - fr) / delta * len]
            } else {
                vec![]
            };
            for n in candidates {
                let w = n.abs();
                best = Some(best.map_or(w, |b: i64| b.min(w)));
            }
        }
        best
    }

    /// The least threshold `N >= 1` such that for every point, every value
    /// in `[-M, M]` that the transfer function attains at all is attained
    /// within the window `[-N, N]`, where `M` bounds the one-step values.
    pub fn threshold_n(&self) -> u64 {
        let m = self.max_step();
        let mut n = 1i64;
        for x in self.s.points() {
            for t in -m..=m {
                if let Some(w) = self.min_window_hitting(x, t) {
                    n = n.max(w);
                }
            }
        }
        n as u64
    }

    /// Exact sign of `f(., x)` beyond the threshold: `f(n, x) > 0` for all
    /// `n > nt` iff each residue class starts positive past `nt` and the
    /// cycle step does not pull it back down.
    fn positive_beyond(&self, x: PointId, nt: i64) -> bool {
        let len = self.cycle_len(x);
        if self.delta(x) < 0 {
            return false;
        }
        for r in 0..len {
            // least n > nt congruent to r mod len
            let mut n = r;
            while n <= nt {
                n += len;
            }
            if self.f(n, x) <= 0 {
                return false;
            }
        }
        true
    }

    fn negative_before(&self, x: PointId, nt: i64) -> bool {
        let len = self.cycle_len(x);
        if self.delta(x) < 0 {
            return false;
        }
        for r in 0..len {
            let mut n = r;
            while n >= -nt {
                n -= len;
            }
            if self.f(n, x) >= 0 {
                return false;
            }
        }
        true
    }
}

/// Computes the full decomposition: the threshold, the two invariant
/// parts, the counting exponents `a`, `b`, and the conjugacies.  Fails with
/// a sign-dichotomy error when the input map is not an isomorphism.
pub fn decompose(input: &FlipInput) -> Result<FlipDecomposition> {
    let s = &input.s;
    let t = &input.t;
    let nt = input.threshold_n() as i64;

    let mut x1 = BTreeSet::new();
    let mut x2 = BTreeSet::new();
    for x in s.points() {
        let up = input.positive_beyond(x, nt) && input.negative_before(x, nt);
        // the reversed signs for the mirrored input -f
        let down = {
            let len = input.cycle_len(x);
            let mut ok = input.delta(x) <= 0;
            if ok {
                for r in 0..len {
                    let mut n = r;
                    while n <= nt {
                        n += len;
                    }
                    if input.f(n, x) >= 0 {
                        ok = false;
                        break;
                    }
                    let mut n = r;
                    while n >= -nt {
                        n -= len;
                    }
                    if input.f(n, x) <= 0 {
                        ok = false;
                        break;
                    }
                }
            }
            ok
        };
        match (up, down) {
            (true, false) => {
                x1.insert(x);
            }
            (false, true) => {
                x2.insert(x);
            }
            _ => return Err(Error::SignDichotomy(s.name(x).to_string())),
        }
    }
    for &x in &x1 {
        if !x1.contains(&s.sigma(x).unwrap()) {
            return Err(Error::SignDichotomy(format!("{} leaves X1", s.name(x))));
        }
    }
    for &x in &x2 {
        if !x2.contains(&s.sigma(x).unwrap()) {
            return Err(Error::SignDichotomy(format!("{} leaves X2", s.name(x))));
        }
    }

    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    let mut h1 = BTreeMap::new();
    let mut h2 = BTreeMap::new();
    for &x in &x1 {
        let neg = (-nt..0).filter(|&m| input.f(m, x) >= 0).count() as i64;
        let pos = (0..=nt).filter(|&n| input.f(n, x) < 0).count() as i64;
        let ax = neg - pos;
        a.insert(x, ax);
        h1.insert(x, t.perm_pow(input.h[x], ax));
    }
    for &x in &x2 {
        let neg = (-nt..0).filter(|&m| input.f(m, x) <= 0).count() as i64;
        let pos = (0..=nt).filter(|&n| input.f(n, x) > 0).count() as i64;
        let bx = neg - pos;
        b.insert(x, bx);
        h2.insert(x, t.perm_pow(input.h[x], bx));
    }

    let y1: BTreeSet<PointId> = x1.iter().map(|&x| input.h[x]).collect();
    let y2: BTreeSet<PointId> = x2.iter().map(|&x| input.h[x]).collect();

    let dec = FlipDecomposition { n_threshold: nt as u64, x1, x2, a, b, h1, h2, y1, y2 };
    validate_decomposition(s, t, input, &dec)?;
    Ok(dec)
}

fn validate_decomposition(
    s: &DrSystem,
    t: &DrSystem,
    input: &FlipInput,
    dec: &FlipDecomposition,
) -> Result<()> {
    let img1: BTreeSet<PointId> = dec.h1.values().copied().collect();
    let img2: BTreeSet<PointId> = dec.h2.values().copied().collect();
    if img1.len() != dec.x1.len() || img2.len() != dec.x2.len() || !img1.is_disjoint(&img2) {
        return Err(Error::invalid("decomposition conjugacies are not injective"));
    }
    if img1 != dec.y1 || img2 != dec.y2 {
        return Err(Error::invalid("conjugacy images do not match Y1, Y2"));
    }
    for &x in &dec.x1 {
        let sx = s.sigma(x).unwrap();
        if dec.h1[&sx] != t.sigma(dec.h1[&x]).unwrap() {
            return Err(Error::invalid(format!("h1 fails to conjugate at {}", s.name(x))));
        }
        if input.f(1, x) != dec.a[&x] - dec.a[&sx] + 1 {
            return Err(Error::invalid(format!("counting identity fails on X1 at {}", s.name(x))));
        }
    }
    for &x in &dec.x2 {
        let sx = s.sigma(x).unwrap();
        if dec.h2[&sx] != t.perm_pow(dec.h2[&x], -1) {
            return Err(Error::invalid(format!("h2 fails to reverse-conjugate at {}", s.name(x))));
        }
        if input.f(1, x) != dec.b[&x] - dec.b[&sx] - 1 {
            return Err(Error::invalid(format!("counting identity fails on X2 at {}", s.name(x))));
        }
    }
    Ok(())
}

/// The piecewise arrow map determined by a decomposition: degrees pass
/// through on `X1` and flip on `X2`.
pub fn rebuild_theta(
    s: &Arc<DrSystem>,
    t: &Arc<DrSystem>,
    dec: &FlipDecomposition,
    bound: u32,
) -> Result<ArrowMap> {
    let g1 = Groupoid::dr(s.clone());
    let mut table = IsoTable::new(bound);
    for x in s.points() {
        let image = if let Some(&y) = dec.h1.get(&x) {
            y
        } else if let Some(&y) = dec.h2.get(&x) {
            y
        } else {
            return Err(Error::invalid("decomposition does not cover the space"));
        };
        table.unit_map.insert(Unit::Pt(x), Unit::Pt(image));
    }
    for arr in g1.elements(bound) {
        let Arrow::Dr(d) = &arr else { unreachable!() };
        let image = if dec.x1.contains(&d.x) && dec.x1.contains(&d.y) {
            DrArrow { x: dec.h1[&d.x], p: d.p.clone(), y: dec.h1[&d.y] }
        } else if dec.x2.contains(&d.x) && dec.x2.contains(&d.y) {
            DrArrow { x: dec.h2[&d.x], p: -&d.p, y: dec.h2[&d.y] }
        } else {
            return Err(Error::invalid("arrow crosses the invariant parts"));
        };
        if !t.is_arrow(&image) {
            return Err(Error::ImageNotArrow(t.arrow_string(&image)));
        }
        table.arrows.insert(arr, Arrow::Dr(image));
    }
    Ok(table)
}

/// Decides whether two permutations admit a decomposition into a conjugate
/// part and a reverse-conjugate part, by searching invariant splittings
/// with matching cycle types.  Returns the decomposition of the least
/// splitting found (the all-conjugate one first).
pub fn flip_decide(
    s: &Arc<DrSystem>,
    t: &Arc<DrSystem>,
    bound: u32,
) -> Result<Option<FlipDecomposition>> {
    if !s.is_permutation() || !t.is_permutation() {
        return Err(Error::invalid("flip decision needs total bijections"));
    }
    let scyc = s.cycles().to_vec();
    let tcyc = t.cycles().to_vec();
    if s.len() != t.len() {
        return Ok(None);
    }
    let k = scyc.len();
    let mut masks: Vec<u64> = (0..(1u64 << k)).collect();
    masks.reverse(); // all cycles conjugate first
    for mask in masks {
        let part1: Vec<&Vec<PointId>> =
            (0..k).filter(|i| mask >> i & 1 == 1).map(|i| &scyc[i]).collect();
        let part2: Vec<&Vec<PointId>> =
            (0..k).filter(|i| mask >> i & 1 == 0).map(|i| &scyc[i]).collect();
        let Some((m1, m2)) = match_cycles(&part1, &part2, &tcyc) else { continue };

        let mut h1 = BTreeMap::new();
        let mut h2 = BTreeMap::new();
        for (c, d) in part1.iter().zip(m1.iter()) {
            for (j, &x) in c.iter().enumerate() {
                h1.insert(x, d[j]);
            }
        }
        for (c, d) in part2.iter().zip(m2.iter()) {
            let len = c.len();
            for (j, &x) in c.iter().enumerate() {
                h2.insert(x, d[(len - j) % len]);
            }
        }
        let x1: BTreeSet<PointId> = h1.keys().copied().collect();
        let x2: BTreeSet<PointId> = h2.keys().copied().collect();
        let provisional = FlipDecomposition {
            n_threshold: 1,
            y1: h1.values().copied().collect(),
            y2: h2.values().copied().collect(),
            a: x1.iter().map(|&x| (x, 0)).collect(),
            b: x2.iter().map(|&x| (x, 0)).collect(),
            x1,
            x2,
            h1,
            h2,
        };
        let theta = rebuild_theta(s, t, &provisional, bound)?;
        let input = FlipInput::new(s.clone(), t.clone(), &theta)?;
        return decompose(&input).map(Some);
    }
    Ok(None)
}

/// Greedy matching of two cycle families against the target cycles by
/// length, in canonical order; `None` when the cycle types do not fit.
fn match_cycles<'a>(
    part1: &[&Vec<PointId>],
    part2: &[&Vec<PointId>],
    target: &'a [Vec<PointId>],
) -> Option<(Vec<&'a Vec<PointId>>, Vec<&'a Vec<PointId>>)> {
    let mut used = vec![false; target.len()];
    let pick = |len: usize, used: &mut Vec<bool>| -> Option<usize> {
        target
            .iter()
            .enumerate()
            .position(|(i, c)| !used[i] && c.len() == len)
            .inspect(|&i| used[i] = true)
    };
    let mut m1 = Vec::new();
    for c in part1 {
        m1.push(&target[pick(c.len(), &mut used)?]);
    }
    let mut m2 = Vec::new();
    for c in part2 {
        m2.push(&target[pick(c.len(), &mut used)?]);
    }
    Some((m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::coe;
    use crate::groupoid::verify_iso;

    fn reverse_theta() -> (Arc<DrSystem>, Arc<DrSystem>, ArrowMap) {
        let s = Arc::new(catalog::s3());
        let t = Arc::new(catalog::s3_rev());
        let zeros: BTreeMap<PointId, u64> = s.dom().map(|x| (x, 0)).collect();
        let ones: BTreeMap<PointId, u64> = s.dom().map(|x| (x, 1)).collect();
        let d = coe::CoeData {
            h: (0..3).collect(),
            l: zeros.clone(),
            k: ones.clone(),
            lp: zeros,
            kp: ones,
        };
        let th = coe::theta(&s, &t, &d, 6).unwrap();
        (s, t, th)
    }

    fn identity_theta(s: &Arc<DrSystem>) -> ArrowMap {
        let d = coe::identity_coe(s);
        coe::theta(s, s, &d, 6).unwrap()
    }

    #[test]
    fn f_values_and_cocycle() {
        let (s, t, th) = reverse_theta();
        let input = FlipInput::new(s.clone(), t, &th).unwrap();
        for x in s.points() {
            assert_eq!(input.f(0, x), 0);
            for n in -4..=4 {
                assert_eq!(input.f(n, x), -n, "degree flip");
                for m in -4..=4 {
                    let lhs = input.f(m + n, x);
                    let rhs = input.f(m, x) + input.f(n, s.perm_pow(x, m));
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn thresholds() {
        let (s, t, th) = reverse_theta();
        let input = FlipInput::new(s.clone(), t, &th).unwrap();
        assert_eq!(input.max_step(), 1);
        assert_eq!(input.threshold_n(), 1);

        let id = identity_theta(&s);
        let input = FlipInput::new(s.clone(), s.clone(), &id).unwrap();
        assert_eq!(input.max_step(), 1);
        assert_eq!(input.threshold_n(), 1);
    }

    #[test]
    fn threshold_on_degree_scaling() {
        // one fixed point, arrows (x, n, x) mapped to (y, 5n, y): the image
        // of f is 5Z, M = 5, and the window [-1, 1] already reaches
        // [-5, 5] within the image
        let s = Arc::new(crate::dr::system_from_map(&["x"], &[("x", "x")]).unwrap());
        let g = Groupoid::dr(s.clone());
        let mut table = IsoTable::new(6);
        table.unit_map.insert(Unit::Pt(0), Unit::Pt(0));
        for a in g.elements(6) {
            let Arrow::Dr(d) = &a else { unreachable!() };
            table
                .arrows
                .insert(a.clone(), Arrow::Dr(DrArrow { x: 0, p: 5 * &d.p, y: 0 }));
        }
        let input = FlipInput::new(s.clone(), s.clone(), &table).unwrap();
        assert_eq!(input.max_step(), 5);
        assert_eq!(input.threshold_n(), 1);
    }

    #[test]
    fn decompose_reverse_and_identity() {
        let (s, t, th) = reverse_theta();
        let input = FlipInput::new(s.clone(), t.clone(), &th).unwrap();
        let dec = decompose(&input).unwrap();
        assert!(dec.x1.is_empty());
        assert_eq!(dec.x2.len(), 3);
        assert!(dec.b.values().all(|&v| v == 0));
        for (&x, &y) in &dec.h2 {
            assert_eq!(dec.h2[&s.sigma(x).unwrap()], t.perm_pow(y, -1));
        }

        let id = identity_theta(&s);
        let input = FlipInput::new(s.clone(), s.clone(), &id).unwrap();
        let dec = decompose(&input).unwrap();
        assert_eq!(dec.x1.len(), 3);
        assert!(dec.a.values().all(|&v| v == 0));
    }

    #[test]
    fn decompose_mixed_parts() {
        // 2-cycle with identity next to 3-cycle with flip
        let s = Arc::new(
            crate::dr::system_from_map(
                &["p", "q", "r", "s", "t"],
                &[("p", "q"), ("q", "p"), ("r", "s"), ("s", "t"), ("t", "r")],
            )
            .unwrap(),
        );
        let t = Arc::new(
            crate::dr::system_from_map(
                &["p", "q", "r", "s", "t"],
                &[("p", "q"), ("q", "p"), ("r", "t"), ("t", "s"), ("s", "r")],
            )
            .unwrap(),
        );
        let g1 = Groupoid::dr(s.clone());
        let mut table = IsoTable::new(6);
        for x in s.points() {
            table.unit_map.insert(Unit::Pt(x), Unit::Pt(x));
        }
        let two: BTreeSet<PointId> = [0usize, 1].into_iter().collect();
        for a in g1.elements(6) {
            let Arrow::Dr(d) = &a else { unreachable!() };
            let img = if two.contains(&d.x) {
                DrArrow { x: d.x, p: d.p.clone(), y: d.y }
            } else {
                DrArrow { x: d.x, p: -&d.p, y: d.y }
            };
            table.arrows.insert(a, Arrow::Dr(img));
        }
        let input = FlipInput::new(s.clone(), t.clone(), &table).unwrap();
        let dec = decompose(&input).unwrap();
        assert_eq!(dec.x1, two);
        assert_eq!(dec.x2.len(), 3);
        let rebuilt = rebuild_theta(&s, &t, &dec, 6).unwrap();
        let cert = verify_iso(&Groupoid::dr(s.clone()), &Groupoid::dr(t.clone()), &rebuilt, 6, None);
        assert!(cert.pass());
    }

    #[test]
    fn decide_examples() {
        let s3 = Arc::new(catalog::s3());
        let rev = Arc::new(catalog::s3_rev());
        assert!(flip_decide(&s3, &rev, 6).unwrap().is_some());
        let c2 = Arc::new(crate::dr::system_from_map(&["0", "1"], &[("0", "1"), ("1", "0")]).unwrap());
        assert!(flip_decide(&c2, &s3, 6).unwrap().is_none());
        let dec = flip_decide(&s3, &s3, 6).unwrap().expect("self");
        assert_eq!(dec.x1.len(), 3, "identity witness covers everything");
    }
}
