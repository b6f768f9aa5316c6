use proptest::prelude::*;
use rollchain_core::chain::codec::{decode_chain, encode_chain};
use rollchain_core::chain::{
    assemble_full_chain, validate_chain, Block, HashAlgorithm, LocalChain, NodeId, PruneMode, Transaction,
    ViolationKind,
};

const ALG: HashAlgorithm = HashAlgorithm::Sha256;

fn payload(g: u64, salt: u8) -> Vec<Transaction> {
    vec![Transaction::single(g % 7, g, vec![salt, g as u8])]
}

#[derive(Debug, Clone)]
enum Op {
    Append(u8),
    /// A block whose prev hash is corrupted.
    Unlinked,
    /// A block with a non-increasing index.
    Stale,
    /// A block whose contents changed after sealing.
    Tampered,
    Prune,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => any::<u8>().prop_map(Op::Append),
        1 => Just(Op::Unlinked),
        1 => Just(Op::Stale),
        1 => Just(Op::Tampered),
        2 => Just(Op::Prune),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // Whatever sequence of operations is applied, rejected operations leave
    // the window untouched and it always validates within its bound.
    #[test]
    fn operations_keep_window_valid(
        capacity in 1usize..8,
        sliding in any::<bool>(),
        ops in prop::collection::vec(op(), 0..60),
    ) {
        let mode = if sliding { PruneMode::Sliding } else { PruneMode::Reset };
        let mut chain = LocalChain::with_genesis(0, capacity, ALG).unwrap();
        let mut next_g = 1u64;
        for op in ops {
            let before = chain.clone();
            let ok = match op {
                Op::Append(salt) => {
                    let block = chain.next_block(NodeId(next_g), next_g, next_g, payload(next_g, salt));
                    let ok = chain.push(block, mode).is_ok();
                    if ok {
                        next_g += 1;
                    }
                    ok
                }
                Op::Unlinked => {
                    let mut b = chain.next_block(NodeId(1), next_g, next_g, payload(next_g, 0));
                    b.header.prev_hash[0] ^= 0xff;
                    let b = Block::seal(ALG, b.header, b.transactions);
                    chain.push(b, mode).is_ok()
                }
                Op::Stale => {
                    let g = chain.tip().header.global_index;
                    let b = chain.next_block(NodeId(1), g, g.max(1), payload(g, 0));
                    chain.push(b, mode).is_ok()
                }
                Op::Tampered => {
                    let mut b = chain.next_block(NodeId(1), next_g, next_g, payload(next_g, 0));
                    b.transactions[0].readings[0].push(1);
                    chain.push(b, mode).is_ok()
                }
                Op::Prune => match mode {
                    PruneMode::Reset => chain.prune_reset().is_ok(),
                    PruneMode::Sliding => false,
                },
            };
            if !ok {
                prop_assert_eq!(&chain, &before);
            }
            prop_assert!(validate_chain(&chain).is_empty());
            let bound = match mode {
                PruneMode::Reset => capacity + 1,
                PruneMode::Sliding => capacity.max(1),
            };
            prop_assert!(chain.len() <= bound.max(1), "len {} bound {}", chain.len(), bound);
        }
    }

    // Pruned cycle records reassemble into the chain an unbounded node would
    // have kept, and a sliding window is always the tail of that chain.
    #[test]
    fn rolling_matches_unbounded_reference(capacity in 1usize..7, steps in 0u64..40) {
        let mut reference = LocalChain::with_genesis(0, usize::MAX / 2, ALG).unwrap();
        let mut reset = LocalChain::with_genesis(0, capacity, ALG).unwrap();
        let mut sliding = LocalChain::with_genesis(0, capacity, ALG).unwrap();
        let mut records: Vec<Vec<Block>> = Vec::new();
        for g in 1..=steps {
            let block = reset.next_block(NodeId(g), g, g, payload(g, 3));
            let unbounded = reference.next_block(NodeId(g), g, g, payload(g, 3));
            prop_assert_eq!(block.hash(), unbounded.hash());
            reference.append(unbounded).unwrap();
            sliding.push(block.clone(), PruneMode::Sliding).unwrap();
            reset.append(block).unwrap();
            if reset.len() == capacity + 1 {
                let window = reset.blocks().to_vec();
                reset.prune_reset().unwrap();
                records.push(window);
            }
            let tail = &reference.blocks()[reference.len().saturating_sub(capacity)..];
            let window_hashes: Vec<_> = sliding.blocks().iter().map(Block::hash).collect();
            let tail_hashes: Vec<_> = tail.iter().map(Block::hash).collect();
            prop_assert_eq!(window_hashes, tail_hashes);
        }
        records.push(reset.blocks().to_vec());
        let full = assemble_full_chain(records, capacity as u64, ALG).unwrap();
        prop_assert!(validate_chain(&full).is_empty());
        let full_hashes: Vec<_> = full.blocks().map(Block::hash).collect();
        let reference_hashes: Vec<_> = reference.blocks().iter().map(Block::hash).collect();
        prop_assert_eq!(full_hashes, reference_hashes);
    }

    // Flipping any single bit of a stored chain is caught: either the bytes
    // no longer decode or the decoded chain fails validation.
    #[test]
    fn any_bit_flip_is_detected(len in 1u64..6, pick in any::<prop::sample::Index>(), bit in 0u8..8) {
        let mut chain = LocalChain::with_genesis(5, 8, ALG).unwrap();
        for g in 1..=len {
            let b = chain.next_block(NodeId(g), g * 10, g, payload(g, 9));
            chain.append(b).unwrap();
        }
        let mut bytes = encode_chain(chain.blocks());
        let at = pick.index(bytes.len());
        bytes[at] ^= 1 << bit;
        if let Ok(blocks) = decode_chain(&bytes) {
            prop_assert!(LocalChain::from_blocks(blocks, 8, ALG).is_err(), "flip at byte {at} went unnoticed");
        }
    }

    // Removing an interior block breaks the link of its successor.
    #[test]
    fn deleting_interior_block_breaks_linkage(len in 3u64..10, pick in any::<prop::sample::Index>()) {
        let mut chain = LocalChain::with_genesis(0, 16, ALG).unwrap();
        for g in 1..=len {
            let b = chain.next_block(NodeId(g), g, g, payload(g, 1));
            chain.append(b).unwrap();
        }
        let mut blocks = chain.blocks().to_vec();
        let i = 1 + pick.index(blocks.len() - 2);
        blocks.remove(i);
        let successor = blocks[i].header.global_index;
        let err = LocalChain::from_blocks(blocks, 16, ALG).unwrap_err();
        let rollchain_core::chain::ChainError::Invalid(violations) = err else {
            panic!("expected validation failure");
        };
        prop_assert!(violations.iter().any(|v| v.global_index == successor && v.kind == ViolationKind::BadLinkage));
    }
}
