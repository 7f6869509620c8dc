//! Exact counts of the per-vertex and per-pair quantities tracked during a
//! nibble run. `alive` marks the current leftover set U; `owner[v]` is the id
//! of the matching edge covering `v`, or [`UNMATCHED`].

use std::collections::HashMap;

use crate::hypergraph::Hypergraph;

pub const UNMATCHED: u32 = u32::MAX;

/// Edges through `x` whose other vertices all lie in U.
pub fn stat_d(h: &Hypergraph, alive: &[bool], x: usize) -> u64 {
    h.incident(x).iter().filter(|&&e| h.edge(e as usize).iter().all(|&v| v as usize == x || alive[v as usize])).count()
        as u64
}

/// Edges through `x` with exactly one other vertex matched and the remaining
/// k-2 in U.
pub fn stat_z(h: &Hypergraph, alive: &[bool], owner: &[u32], x: usize) -> u64 {
    h.incident(x)
        .iter()
        .filter(|&&e| {
            let edge = h.edge(e as usize);
            let mut matched = 0;
            let mut left = 0;
            for &v in edge {
                let v = v as usize;
                if v == x {
                    continue;
                }
                if owner[v] != UNMATCHED {
                    matched += 1;
                } else if alive[v] {
                    left += 1;
                }
            }
            matched == 1 && left + 2 == edge.len()
        })
        .count() as u64
}

fn meets_only_at(a: &[u32], b: &[u32], at: u32) -> bool {
    let (mut i, mut j, mut hits) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a[i] != at {
                    return false;
                }
                hits += 1;
                i += 1;
                j += 1;
            }
        }
    }
    hits == 1
}

fn disjoint(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

/// Edges through `y`, grouped by their other vertices, whose vertices other
/// than `y` and the grouping vertex satisfy `inside`.
fn edges_through_pairs(h: &Hypergraph, y: usize, inside: impl Fn(usize) -> bool) -> HashMap<u32, Vec<u32>> {
    let mut out: HashMap<u32, Vec<u32>> = HashMap::new();
    for &e2 in h.incident(y) {
        let edge = h.edge(e2 as usize);
        for &yp in edge {
            if yp as usize == y {
                continue;
            }
            if edge.iter().all(|&w| w as usize == y || w == yp || inside(w as usize)) {
                out.entry(yp).or_default().push(e2);
            }
        }
    }
    out
}

/// Ordered triples (e1, e2, e3) with x in e1, y in e2, e1 and e2 disjoint,
/// e3 meeting e1 only at x' and e2 only at y', the four vertices distinct,
/// and every vertex of e1, e2, e3 other than x and y in U.
pub fn stat_y(h: &Hypergraph, alive: &[bool], x: usize, y: usize) -> u64 {
    assert_ne!(x, y, "pair statistics need distinct vertices");
    let (xu, yu) = (x as u32, y as u32);
    let second = edges_through_pairs(h, y, |w| alive[w]);
    let mut count = 0u64;
    for &e1 in h.incident(x) {
        let edge1 = h.edge(e1 as usize);
        if edge1.contains(&yu) || !edge1.iter().all(|&v| v == xu || alive[v as usize]) {
            continue;
        }
        for &xp in edge1 {
            if xp == xu {
                continue;
            }
            for &e3 in h.incident(xp as usize) {
                if e3 == e1 {
                    continue;
                }
                let edge3 = h.edge(e3 as usize);
                if edge3.contains(&yu) || !edge3.iter().all(|&v| alive[v as usize]) || !meets_only_at(edge1, edge3, xp)
                {
                    continue;
                }
                for &yp in edge3 {
                    if yp == xp || yp == xu {
                        continue;
                    }
                    let Some(cands) = second.get(&yp) else { continue };
                    for &e2 in cands {
                        let edge2 = h.edge(e2 as usize);
                        if disjoint(edge1, edge2) && meets_only_at(edge2, edge3, yp) {
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

/// Ordered triples (e1, e2, e3) as in [`stat_y`] except that e3 is a
/// matching edge and only the vertices of e1 and e2 other than x, x', y, y'
/// are required to lie in U.
pub fn stat_x(h: &Hypergraph, alive: &[bool], owner: &[u32], x: usize, y: usize) -> u64 {
    assert_ne!(x, y, "pair statistics need distinct vertices");
    let (xu, yu) = (x as u32, y as u32);
    let second = edges_through_pairs(h, y, |w| alive[w]);
    let mut count = 0u64;
    for &e1 in h.incident(x) {
        let edge1 = h.edge(e1 as usize);
        if edge1.contains(&yu) {
            continue;
        }
        for &xp in edge1 {
            if xp == xu || owner[xp as usize] == UNMATCHED {
                continue;
            }
            let e3 = owner[xp as usize];
            if e3 == e1 {
                continue;
            }
            if !edge1.iter().all(|&v| v == xu || v == xp || alive[v as usize]) {
                continue;
            }
            let edge3 = h.edge(e3 as usize);
            if edge3.contains(&yu) || !meets_only_at(edge1, edge3, xp) {
                continue;
            }
            for &yp in edge3 {
                if yp == xp || yp == xu {
                    continue;
                }
                let Some(cands) = second.get(&yp) else { continue };
                for &e2 in cands {
                    if e2 == e3 {
                        continue;
                    }
                    let edge2 = h.edge(e2 as usize);
                    if disjoint(edge1, edge2) && meets_only_at(edge2, edge3, yp) {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{random_regular_simple, steiner_triple_system};

    fn brute_y(h: &Hypergraph, alive: &[bool], owner: Option<&[u32]>, x: usize, y: usize) -> u64 {
        let m = h.num_edges();
        let inter =
            |a: usize, b: usize| -> Vec<u32> { h.edge(a).iter().copied().filter(|v| h.edge(b).contains(v)).collect() };
        let mut count = 0;
        for e1 in 0..m {
            if !h.edge_contains(e1, x) {
                continue;
            }
            for e2 in 0..m {
                if !h.edge_contains(e2, y) || !inter(e1, e2).is_empty() {
                    continue;
                }
                for e3 in 0..m {
                    let (a, b) = (inter(e1, e3), inter(e2, e3));
                    if e3 == e1 || e3 == e2 || a.len() != 1 || b.len() != 1 {
                        continue;
                    }
                    let (xp, yp) = (a[0] as usize, b[0] as usize);
                    let mut four = vec![x, y, xp, yp];
                    four.sort_unstable();
                    four.dedup();
                    if four.len() != 4 {
                        continue;
                    }
                    let ok = match owner {
                        None => [e1, e2, e3]
                            .iter()
                            .flat_map(|&e| h.edge(e).iter())
                            .all(|&v| v as usize == x || v as usize == y || alive[v as usize]),
                        Some(owner) => {
                            owner[xp] == e3 as u32
                                && [e1, e2].iter().flat_map(|&e| h.edge(e).iter()).all(|&v| {
                                    let v = v as usize;
                                    v == x || v == y || v == xp || v == yp || alive[v]
                                })
                        }
                    };
                    if ok {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    fn fake_stage(h: &Hypergraph, matched: &[usize], dead: &[usize]) -> (Vec<bool>, Vec<u32>) {
        let mut alive = vec![true; h.num_vertices()];
        let mut owner = vec![UNMATCHED; h.num_vertices()];
        for &e in matched {
            for &v in h.edge(e) {
                alive[v as usize] = false;
                owner[v as usize] = e as u32;
            }
        }
        for &v in dead {
            alive[v] = false;
        }
        (alive, owner)
    }

    #[test]
    fn stage_zero_values() {
        let h = steiner_triple_system(13, 4).unwrap();
        let (alive, owner) = fake_stage(&h, &[], &[]);
        for x in 0..13 {
            assert_eq!(stat_d(&h, &alive, x), h.degree(x) as u64);
            assert_eq!(stat_z(&h, &alive, &owner, x), 0);
            assert_eq!(stat_x(&h, &alive, &owner, x, (x + 1) % 13), 0);
            let d0 = 6u64;
            assert!(stat_y(&h, &alive, x, (x + 5) % 13) <= 4 * 9 * d0 * d0);
        }
    }

    #[test]
    fn pair_statistics_match_brute_force() {
        let h = random_regular_simple(3, 4, 40, 1, 9).unwrap();
        let (alive, owner) = fake_stage(&h, &[0, 7, 19], &[5, 11, 30]);
        for x in 0..40 {
            for y in [(x + 3) % 40, (x + 17) % 40] {
                assert_eq!(stat_y(&h, &alive, x, y), brute_y(&h, &alive, None, x, y), "Y({x},{y})");
                assert_eq!(stat_x(&h, &alive, &owner, x, y), brute_y(&h, &alive, Some(&owner), x, y), "X({x},{y})");
            }
        }
    }

    #[test]
    fn z_counts_edges_with_one_matched_neighbor() {
        let h = Hypergraph::from_edges(7, &[[0, 1, 2], [0, 3, 4], [3, 5, 6], [1, 5, 6]]).unwrap();
        let (alive, owner) = fake_stage(&h, &[2], &[]);
        // vertex 0: edge {0,3,4} has 3 matched and 4 alive.
        assert_eq!(stat_z(&h, &alive, &owner, 0), 1);
        assert_eq!(stat_z(&h, &alive, &owner, 4), 1);
        assert_eq!(stat_z(&h, &alive, &owner, 1), 0);
    }
}
