// Temporary probe: exhaustive search for the small equality-coupler
// families over boundary (s, q, x, y). Deleted once fixtures are settled.

use std::time::{Duration, Instant};

use minor_gadgets::coloring::ColoringFamily;
use minor_gadgets::planarity::CyclicBoundary;
use minor_gadgets::realizer::{search_realizer, RealizationProblem, SearchLimits};

fn domain() -> Vec<String> {
    vec!["s".into(), "q".into(), "x".into(), "y".into()]
}

fn family_where(pred: impl Fn(u8, u8, u8, u8) -> bool) -> ColoringFamily {
    let mut members = Vec::new();
    for a in 1u8..=3 {
        for b in 1u8..=3 {
            for c in 1u8..=3 {
                for d in 1u8..=3 {
                    if pred(a, b, c, d) {
                        members.push(vec![a, b, c, d]);
                    }
                }
            }
        }
    }
    ColoringFamily::with_members(domain(), 3, members).unwrap()
}

#[test]
#[ignore]
fn hunt_primitives() {
    let cases: Vec<(&str, ColoringFamily)> = vec![
        // pair-equality of (s,q) and (x,y) must differ
        ("xor", family_where(|s, q, x, y| (s == q) != (x == y))),
        // at least one pair equal
        ("f_uu", family_where(|s, q, x, y| s == q || x == y)),
        // (s = q) implies (x = y)
        ("f_eu", family_where(|s, q, x, y| s != q || x == y)),
        // at most one pair equal
        ("f_ee", family_where(|s, q, x, y| s != q || x != y)),
    ];
    for (name, family) in cases {
        println!("family {name}: {} members, closed = {}", family.len(), family.is_closed());
        let problem =
            RealizationProblem::new(CyclicBoundary::new(domain()).unwrap(), family).unwrap();
        for max_internal in 0..=4 {
            let limits = SearchLimits {
                max_internal,
                max_edges: None,
                budget: Duration::from_secs(7200),
            };
            let t0 = Instant::now();
            match search_realizer(&problem, &limits) {
                Ok(cert) => {
                    println!(
                        "  {name} i={max_internal}: FOUND {} vertices {} edges in {:?}",
                        cert.graph().vertex_count(),
                        cert.graph().edge_count(),
                        t0.elapsed()
                    );
                    println!("{}", cert.graph().to_document());
                    break;
                }
                Err(e) => println!("  {name} i={max_internal}: {e} in {:?}", t0.elapsed()),
            }
        }
    }
}
