use orbiteq::*;
use orbiteq::groupoid::{verify_iso, Grading};
use orbiteq::group::Group;
use std::sync::Arc;

fn main() {
    let sys = Arc::new(catalog::s3());
    let bound = 2u32;
    let table = dr::iso_stabilized(&sys, bound);
    let g1 = Groupoid::stabilized(sys.clone());
    let g2 = Groupoid::dr(sys.clone()).product_with_r();
    let deg = Grading::degree();
    let c1 = |a: &Arrow| deg.grade(a);
    let c2 = |a: &Arrow| deg.grade(a);
    let cert = verify_iso(&g1, &g2, &table, bound, Some((&c1, &c2, &Group::integers())));
    for ch in &cert.checks {
        println!("{}: {} {:?}", ch.check, ch.pass, ch.witness);
    }
    println!("g1 elements: {}", g1.elements(bound).len());
    println!("g2 elements: {}", g2.elements(bound).len());
}
