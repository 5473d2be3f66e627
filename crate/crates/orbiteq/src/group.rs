//! Grading targets and acting groups: free abelian groups `Z^d` and finite
//! groups given by multiplication tables, plus subgroups of `Z` stored by
//! their nonnegative generator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::{Error, Result};

/// A discrete group usable as a grading target or as an acting group.
///
/// Finite tables are validated eagerly; invalid tables are rejected, never
/// repaired.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Group {
    FreeAbelian {
        rank: usize,
    },
    FiniteTable {
        order: usize,
        table: Vec<Vec<usize>>,
        inverse: Vec<usize>,
        identity: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElem {
    /// Element of `Z^d`: an integer vector of length `d`.
    Vector(Vec<BigInt>),
    /// Element of a finite table group: an index below the order.
    Index(usize),
}

impl Group {
    pub fn free_abelian(rank: usize) -> Group {
        Group::FreeAbelian { rank }
    }

    /// The integers, the canonical degree-grading target.
    pub fn integers() -> Group {
        Group::FreeAbelian { rank: 1 }
    }

    /// Trivial group as a finite table.
    pub fn trivial() -> Group {
        Group::from_table(vec![vec![0]]).expect("trivial table is valid")
    }

    /// Cyclic group of order `n` with `table[i][j] = i + j mod n`.
    pub fn cyclic(n: usize) -> Group {
        assert!(n >= 1);
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Group::from_table(table).expect("cyclic table is valid")
    }

    /// Klein four-group as a table (indices 0..4, componentwise xor).
    pub fn klein() -> Group {
        let table = (0..4).map(|i| (0..4).map(|j| i ^ j).collect()).collect();
        Group::from_table(table).expect("klein table is valid")
    }

    /// Build a finite group from its multiplication table, checking the
    /// group axioms by full enumeration.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Group> {
        let order = table.len();
        if order == 0 {
            return Err(Error::invalid("empty multiplication table"));
        }
        for row in &table {
            if row.len() != order {
                return Err(Error::invalid("multiplication table is not square"));
            }
            if row.iter().any(|&v| v >= order) {
                return Err(Error::invalid("table entry out of range"));
            }
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|j| table[e][j] == j && table[j][e] == j))
            .ok_or_else(|| Error::invalid("table has no identity element"))?;
        let mut inverse = vec![usize::MAX; order];
        for a in 0..order {
            inverse[a] = (0..order)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| Error::invalid(format!("element {a} has no inverse")))?;
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::invalid(format!(
                            "associativity fails at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        Ok(Group::FiniteTable { order, table, inverse, identity })
    }

    pub fn identity_elem(&self) -> GroupElem {
        match self {
            Group::FreeAbelian { rank } => GroupElem::Vector(vec![BigInt::zero(); *rank]),
            Group::FiniteTable { identity, .. } => GroupElem::Index(*identity),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Group::FreeAbelian { rank } => {
                if *rank == 0 {
                    Some(1)
                } else {
                    None
                }
            }
            Group::FiniteTable { order, .. } => Some(*order),
        }
    }

    pub fn contains(&self, a: &GroupElem) -> bool {
        match (self, a) {
            (Group::FreeAbelian { rank }, GroupElem::Vector(v)) => v.len() == *rank,
            (Group::FiniteTable { order, .. }, GroupElem::Index(i)) => i < order,
            _ => false,
        }
    }

    fn check(&self, a: &GroupElem) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::GroupMismatch(format!("{a:?}")))
        }
    }

    pub fn mul(&self, a: &GroupElem, b: &GroupElem) -> Result<GroupElem> {
        self.check(a)?;
        self.check(b)?;
        match (self, a, b) {
            (Group::FreeAbelian { .. }, GroupElem::Vector(u), GroupElem::Vector(v)) => {
                Ok(GroupElem::Vector(u.iter().zip(v).map(|(x, y)| x + y).collect()))
            }
            (Group::FiniteTable { table, .. }, GroupElem::Index(i), GroupElem::Index(j)) => {
                Ok(GroupElem::Index(table[*i][*j]))
            }
            _ => unreachable!("checked above"),
        }
    }

    pub fn inv(&self, a: &GroupElem) -> Result<GroupElem> {
        self.check(a)?;
        match (self, a) {
            (Group::FreeAbelian { .. }, GroupElem::Vector(u)) => {
                Ok(GroupElem::Vector(u.iter().map(|x| -x).collect()))
            }
            (Group::FiniteTable { inverse, .. }, GroupElem::Index(i)) => {
                Ok(GroupElem::Index(inverse[*i]))
            }
            _ => unreachable!("checked above"),
        }
    }

    pub fn is_identity(&self, a: &GroupElem) -> bool {
        *a == self.identity_elem()
    }

    /// True for free abelian groups; for a finite table only the trivial
    /// group is torsion free.
    pub fn is_torsion_free(&self) -> bool {
        match self {
            Group::FreeAbelian { .. } => true,
            Group::FiniteTable { order, .. } => *order == 1,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            Group::FreeAbelian { .. } => true,
            Group::FiniteTable { order, table, .. } => (0..*order)
                .all(|a| (0..*order).all(|b| table[a][b] == table[b][a])),
        }
    }
}

/// One-variable integer element, convenient for the degree grading.
pub fn z_elem(n: impl Into<BigInt>) -> GroupElem {
    GroupElem::Vector(vec![n.into()])
}

/// A subgroup `dZ` of the integers, stored by its nonnegative generator;
/// `d = 0` encodes the trivial subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZSubgroup {
    pub generator: u64,
}

impl ZSubgroup {
    pub fn trivial() -> ZSubgroup {
        ZSubgroup { generator: 0 }
    }

    pub fn new(generator: u64) -> ZSubgroup {
        ZSubgroup { generator }
    }

    pub fn is_trivial(&self) -> bool {
        self.generator == 0
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        if n.is_zero() {
            true
        } else if self.generator == 0 {
            false
        } else {
            (n % BigInt::from(self.generator)).is_zero()
        }
    }
}

/// The subgroup of `Z` generated by a finite set: `gcd` of absolute values,
/// `0` when the set is empty or all zero.
pub fn subgroup_of_z(elements: &[BigInt]) -> ZSubgroup {
    let mut g = BigInt::zero();
    for e in elements {
        g = g.gcd(e);
    }
    let g = g.abs();
    ZSubgroup { generator: u64::try_from(&g).unwrap_or(u64::MAX) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_addition() {
        let z = Group::integers();
        assert_eq!(z.mul(&z_elem(2), &z_elem(3)).unwrap(), z_elem(5));
    }

    #[test]
    fn z2_involution() {
        let z2 = Group::cyclic(2);
        let g = GroupElem::Index(1);
        assert_eq!(z2.mul(&g, &g).unwrap(), z2.identity_elem());
    }

    #[test]
    fn z2_componentwise() {
        let z2 = Group::free_abelian(2);
        let a = GroupElem::Vector(vec![BigInt::from(1), BigInt::from(0)]);
        let b = GroupElem::Vector(vec![BigInt::from(0), BigInt::from(-2)]);
        let c = GroupElem::Vector(vec![BigInt::from(1), BigInt::from(-2)]);
        assert_eq!(z2.mul(&a, &b).unwrap(), c);
    }

    #[test]
    fn subgroup_generators() {
        let big = |v: i64| BigInt::from(v);
        assert_eq!(subgroup_of_z(&[big(3), big(6)]).generator, 3);
        assert_eq!(subgroup_of_z(&[]).generator, 0);
        assert_eq!(subgroup_of_z(&[big(4), big(6)]).generator, 2);
        // contains every element of the set, and is contained in any dZ
        // containing the set
        let s = [big(-12), big(18)];
        let sub = subgroup_of_z(&s);
        assert!(s.iter().all(|e| sub.contains(e)));
        for d in 1..=18u64 {
            let dz = ZSubgroup::new(d);
            if s.iter().all(|e| dz.contains(e)) {
                assert!(dz.contains(&BigInt::from(sub.generator)));
            }
        }
    }

    #[test]
    fn torsion() {
        assert!(Group::integers().is_torsion_free());
        assert!(!Group::cyclic(2).is_torsion_free());
        assert!(Group::trivial().is_torsion_free());
    }

    #[test]
    fn rejects_bad_tables() {
        // a "left action shaped" non-group table: no identity
        assert!(Group::from_table(vec![vec![1, 1], vec![1, 1]]).is_err());
        // non-associative magma on 0..2: table chosen so (0*0)*1 != 0*(0*1)
        assert!(Group::from_table(vec![vec![0, 1], vec![1, 1]]).is_err());
    }

    #[test]
    fn finite_axioms_by_enumeration() {
        for g in [Group::cyclic(4), Group::klein(), Group::cyclic(6)] {
            if let Group::FiniteTable { order, .. } = &g {
                let n = *order;
                for a in 0..n {
                    let ea = GroupElem::Index(a);
                    let prod = g.mul(&ea, &g.inv(&ea).unwrap()).unwrap();
                    assert_eq!(prod, g.identity_elem());
                    for b in 0..n {
                        for c in 0..n {
                            let eb = GroupElem::Index(b);
                            let ec = GroupElem::Index(c);
                            let ab_c = g.mul(&g.mul(&ea, &eb).unwrap(), &ec).unwrap();
                            let a_bc = g.mul(&ea, &g.mul(&eb, &ec).unwrap()).unwrap();
                            assert_eq!(ab_c, a_bc);
                        }
                    }
                }
            }
        }
    }
}
