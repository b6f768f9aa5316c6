use num_rational::Ratio;

use super::graph::max_edges;
use super::NetsimError;

/// Largest node count the exhaustive enumeration accepts.
pub const MAX_ENUMERABLE_NODES: usize = 7;

/// Exact probability that nodes `0` and `n - 1` are connected in a uniformly
/// random graph with `edge_count` edges on `n` nodes, by enumerating all
/// `C(Lmax, edge_count)` edge sets.
///
/// Connectivity is decided with bitmask reachability, independently of the
/// BFS used by the Monte Carlo estimator.
pub fn brute_force_path_probability(n: usize, edge_count: usize) -> Result<Ratio<u64>, NetsimError> {
    if n == 0 {
        return Err(NetsimError::EmptyGraph);
    }
    if n > MAX_ENUMERABLE_NODES {
        return Err(NetsimError::TooLargeToEnumerate {
            n,
            max: MAX_ENUMERABLE_NODES,
        });
    }
    let lmax = max_edges(n);
    if edge_count > lmax {
        return Err(NetsimError::LTooLarge { l: edge_count, lmax });
    }
    if n == 1 {
        return Ok(Ratio::from_integer(1));
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let target = 1u32 << (n - 1);

    let mut connected = 0u64;
    let mut total = 0u64;
    for_each_subset(lmax, edge_count, |mask| {
        total += 1;
        let mut adjacency = [0u32; MAX_ENUMERABLE_NODES];
        for (bit, &(a, b)) in pairs.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                adjacency[a] |= 1 << b;
                adjacency[b] |= 1 << a;
            }
        }
        let mut reached = 1u32;
        loop {
            let mut next = reached;
            for (v, adj) in adjacency.iter().enumerate().take(n) {
                if reached & (1 << v) != 0 {
                    next |= adj;
                }
            }
            if next == reached {
                break;
            }
            reached = next;
        }
        if reached & target != 0 {
            connected += 1;
        }
    });
    Ok(Ratio::new(connected, total))
}

/// Calls `f` with every `k`-bit mask over `bits` bits (Gosper's hack).
fn for_each_subset(bits: usize, k: usize, mut f: impl FnMut(u32)) {
    if k == 0 {
        f(0);
        return;
    }
    let limit = 1u64 << bits;
    let mut mask: u64 = (1 << k) - 1;
    while mask < limit {
        f(mask as u32);
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: u64, den: u64) -> Ratio<u64> {
        Ratio::new(num, den)
    }

    #[test]
    fn subset_enumeration_counts_binomials() {
        let mut count = 0;
        for_each_subset(10, 4, |m| {
            assert_eq!(m.count_ones(), 4);
            count += 1;
        });
        assert_eq!(count, 210);
    }

    #[test]
    fn three_nodes() {
        assert_eq!(brute_force_path_probability(3, 1).unwrap(), r(1, 3));
        assert_eq!(brute_force_path_probability(3, 2).unwrap(), r(1, 1));
        assert_eq!(brute_force_path_probability(3, 0).unwrap(), r(0, 1));
    }

    // Frozen from an independent networkx enumeration of all edge sets.
    #[test]
    fn five_nodes_four_edges() {
        assert_eq!(brute_force_path_probability(5, 4).unwrap(), r(29, 35));
    }

    #[test]
    fn four_and_six_node_rows() {
        let four = [r(0, 1), r(1, 6), r(7, 15), r(9, 10), r(1, 1), r(1, 1), r(1, 1)];
        for (l, expected) in four.iter().enumerate() {
            assert_eq!(&brute_force_path_probability(4, l).unwrap(), expected, "n=4 L={l}");
        }
        let six = [
            r(0, 1),
            r(1, 15),
            r(6, 35),
            r(151, 455),
            r(58, 105),
            r(783, 1001),
            r(412, 455),
            r(6187, 6435),
            r(141, 143),
            r(997, 1001),
            r(3001, 3003),
            r(1, 1),
        ];
        for (l, expected) in six.iter().enumerate() {
            assert_eq!(&brute_force_path_probability(6, l).unwrap(), expected, "n=6 L={l}");
        }
    }

    #[test]
    fn exact_values_are_nondecreasing_in_l() {
        for n in 2..=6 {
            let values: Vec<_> = (0..=max_edges(n))
                .map(|l| brute_force_path_probability(n, l).unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "n={n}: {values:?}");
        }
    }

    #[test]
    fn limits() {
        assert!(matches!(
            brute_force_path_probability(8, 3),
            Err(NetsimError::TooLargeToEnumerate { n: 8, .. })
        ));
        assert!(matches!(
            brute_force_path_probability(3, 4),
            Err(NetsimError::LTooLarge { l: 4, lmax: 3 })
        ));
        assert_eq!(brute_force_path_probability(1, 0).unwrap(), r(1, 1));
        assert!(matches!(
            brute_force_path_probability(0, 0),
            Err(NetsimError::EmptyGraph)
        ));
    }
}
