//! Built-in systems and actions used by the test batteries and the CLI
//! self-test.

use std::sync::Arc;

use crate::actions::GroupAction;
use crate::dr::{system_from_map, DrSystem};
use crate::group::Group;

/// 3-cycle `0 -> 1 -> 2 -> 0`.
pub fn s3() -> DrSystem {
    system_from_map(&["0", "1", "2"], &[("0", "1"), ("1", "2"), ("2", "0")]).unwrap()
}

/// Reverse 3-cycle `0 -> 2 -> 1 -> 0`.
pub fn s3_rev() -> DrSystem {
    system_from_map(&["0", "1", "2"], &[("0", "2"), ("2", "1"), ("1", "0")]).unwrap()
}

/// Funnel: `a -> c`, `b -> c`, `c -> c`.
pub fn funnel() -> DrSystem {
    system_from_map(&["a", "b", "c"], &[("a", "c"), ("b", "c"), ("c", "c")]).unwrap()
}

/// 6-cycle.
pub fn c6() -> DrSystem {
    system_from_map(
        &["0", "1", "2", "3", "4", "5"],
        &[("0", "1"), ("1", "2"), ("2", "3"), ("3", "4"), ("4", "5"), ("5", "0")],
    )
    .unwrap()
}

/// Partial system: `dom(sigma) = {0}`, `sigma(0) = 1`.
pub fn partial() -> DrSystem {
    system_from_map(&["0", "1"], &[("0", "1")]).unwrap()
}

/// Two orbits: a 2-cycle `{p, q}` next to a 3-cycle `{r, s, t}`.
pub fn two_orbit() -> DrSystem {
    system_from_map(
        &["p", "q", "r", "s", "t"],
        &[("p", "q"), ("q", "p"), ("r", "s"), ("s", "t"), ("t", "r")],
    )
    .unwrap()
}

pub fn builtin_systems() -> Vec<DrSystem> {
    vec![s3(), s3_rev(), funnel(), c6(), partial(), two_orbit()]
}

pub fn builtin_system_names() -> Vec<&'static str> {
    vec!["s3", "s3-rev", "funnel", "c6", "partial", "two-orbit"]
}

pub fn builtin_system(name: &str) -> Option<DrSystem> {
    match name {
        "s3" => Some(s3()),
        "s3-rev" => Some(s3_rev()),
        "funnel" => Some(funnel()),
        "c6" => Some(c6()),
        "partial" => Some(partial()),
        "two-orbit" => Some(two_orbit()),
        _ => None,
    }
}

/// Built-in systems with at most `n` points.
pub fn small_systems(n: usize) -> Vec<DrSystem> {
    builtin_systems().into_iter().filter(|s| s.len() <= n).collect()
}

pub fn builtin_group(name: &str) -> Option<Group> {
    match name {
        "trivial" => Some(Group::trivial()),
        "z2" => Some(Group::cyclic(2)),
        "z3" => Some(Group::cyclic(3)),
        "z4" => Some(Group::cyclic(4)),
        "z6" => Some(Group::cyclic(6)),
        "klein" => Some(Group::klein()),
        "z" => Some(Group::integers()),
        _ => None,
    }
}

fn cyclic_rotation(n: usize) -> GroupAction {
    let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let act = (0..n).map(|x| (0..n).map(|g| (x + g) % n).collect()).collect();
    GroupAction::new(Group::cyclic(n), names, act).unwrap()
}

/// Free swap of two points by `Z/2`.
pub fn act_swap() -> GroupAction {
    cyclic_rotation(2)
}

/// Trivial `Z/2` action on one point.
pub fn act_trivial_z2() -> GroupAction {
    GroupAction::new(Group::cyclic(2), vec!["0".into()], vec![vec![0, 0]]).unwrap()
}

/// Trivial `Z/4` action on one point.
pub fn act_trivial_z4() -> GroupAction {
    GroupAction::new(Group::cyclic(4), vec!["0".into()], vec![vec![0, 0, 0, 0]]).unwrap()
}

/// Free transitive `Z/4` rotation on four points.
pub fn act_rot_z4() -> GroupAction {
    cyclic_rotation(4)
}

/// Free transitive Klein action on four points (regular action, xor).
pub fn act_klein_free() -> GroupAction {
    let names: Vec<String> = (0..4).map(|i| i.to_string()).collect();
    let act = (0..4usize).map(|x| (0..4usize).map(|g| x ^ g).collect()).collect();
    GroupAction::new(Group::klein(), names, act).unwrap()
}

/// `Z/2` on three points: swap `{0, 1}`, fix `2`.
pub fn act_z2_mixed() -> GroupAction {
    let act = vec![vec![0, 1], vec![1, 0], vec![2, 2]];
    GroupAction::new(
        Group::cyclic(2),
        vec!["0".into(), "1".into(), "2".into()],
        act,
    )
    .unwrap()
}

/// `Z/4` on two points, the generator acting as the swap.
pub fn act_z4_swap() -> GroupAction {
    let act = vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]];
    GroupAction::new(Group::cyclic(4), vec!["0".into(), "1".into()], act).unwrap()
}

pub fn builtin_actions() -> Vec<(&'static str, GroupAction)> {
    vec![
        ("swap", act_swap()),
        ("trivial-z2", act_trivial_z2()),
        ("trivial-z4", act_trivial_z4()),
        ("rot-z4", act_rot_z4()),
        ("klein-free", act_klein_free()),
        ("z2-mixed", act_z2_mixed()),
        ("z4-swap", act_z4_swap()),
    ]
}

pub fn builtin_action(name: &str) -> Option<GroupAction> {
    builtin_actions().into_iter().find(|(n, _)| *n == name).map(|(_, a)| a)
}

pub fn arc_systems() -> Vec<Arc<DrSystem>> {
    builtin_systems().into_iter().map(Arc::new).collect()
}
