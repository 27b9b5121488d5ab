// Temporary probe: exhaustive realizer search at exactly 4 internal
// vertices for the two hard families. Deleted once fixtures are settled.

use std::time::{Duration, Instant};

use minor_gadgets::coloring::ColoringFamily;
use minor_gadgets::planarity::CyclicBoundary;
use minor_gadgets::realizer::{search_realizer, RealizationProblem, SearchLimits};

fn domain() -> Vec<String> {
    vec!["z1_3".into(), "z1_4".into(), "z2_3".into(), "z2_4".into()]
}

fn family_eq() -> ColoringFamily {
    let mut members = Vec::new();
    for c in 1u8..=3 {
        members.push(vec![c, c, c, c]);
    }
    for a in 1u8..=3 {
        for b in 1u8..=3 {
            for c in 1u8..=3 {
                for d in 1u8..=3 {
                    if a != b && c != d {
                        members.push(vec![a, b, c, d]);
                    }
                }
            }
        }
    }
    ColoringFamily::with_members(domain(), 3, members).unwrap()
}

fn family_neq() -> ColoringFamily {
    let mut members = Vec::new();
    for a in 1u8..=3 {
        for b in 1u8..=3 {
            if a != b {
                members.push(vec![a, a, b, b]);
            }
            for c in 1u8..=3 {
                if a != b {
                    members.push(vec![c, c, a, b]);
                    members.push(vec![a, b, c, c]);
                }
            }
        }
    }
    ColoringFamily::with_members(domain(), 3, members).unwrap()
}

#[test]
#[ignore]
fn probe_depth_four() {
    for (name, family) in [("eq", family_eq()), ("neq", family_neq())] {
        let problem =
            RealizationProblem::new(CyclicBoundary::new(domain()).unwrap(), family).unwrap();
        let limits = SearchLimits {
            max_internal: 4,
            max_edges: None,
            budget: Duration::from_secs(3 * 3600),
        };
        let t0 = Instant::now();
        match search_realizer(&problem, &limits) {
            Ok(cert) => {
                println!(
                    "{name}: FOUND {} vertices {} edges in {:?}",
                    cert.graph().vertex_count(),
                    cert.graph().edge_count(),
                    t0.elapsed()
                );
                println!("{}", cert.graph().to_document());
            }
            Err(e) => println!("{name}: {e} in {:?}", t0.elapsed()),
        }
    }
}
