mod common;

use std::collections::HashSet;

use gpcid_core::multiindex::{
    constant_sum_count, graded_basis_indices, multinomial_coefficient, ConstantSumIterator, MultiIndex,
};
use proptest::prelude::*;

#[test]
fn graded_order_matches_oracle() {
    for (n, d) in [(1, 4), (2, 3), (3, 3), (4, 2)] {
        let set = graded_basis_indices(n, d).unwrap();
        let got: Vec<Vec<u32>> = set.indices().iter().map(|i| i.0.clone()).collect();
        assert_eq!(got, common::graded_indices(n, d));
    }
    assert_eq!(graded_basis_indices(2, 3).unwrap().len(), 10);
    assert_eq!(graded_basis_indices(4, 3).unwrap().len(), 35);
}

#[test]
fn paper_scale_count() {
    assert_eq!(ConstantSumIterator::new(5, 35).count(), 575_757);
    assert_eq!(ConstantSumIterator::new(5, 10).count(), 2002);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn push_fork_equals_recursive_enumeration(m in 0u32..6, p in 1usize..8) {
        let emitted: Vec<Vec<u32>> = ConstantSumIterator::new(m, p).map(|MultiIndex(v)| v).collect();
        let unique: HashSet<Vec<u32>> = emitted.iter().cloned().collect();
        prop_assert_eq!(unique.len(), emitted.len());
        prop_assert!(emitted.iter().all(|v| v.iter().sum::<u32>() == m && v.len() == p));
        let mut oracle = Vec::new();
        common::fixed_sum(p, m, &mut Vec::new(), &mut oracle);
        let oracle: HashSet<Vec<u32>> = oracle.into_iter().collect();
        prop_assert_eq!(&unique, &oracle);
        prop_assert_eq!(emitted.len() as u128, constant_sum_count(m, p).unwrap());
    }

    #[test]
    fn multinomials_sum_to_power(m in 0u32..6, p in 1usize..7) {
        let total: u128 = ConstantSumIterator::new(m, p)
            .map(|MultiIndex(v)| multinomial_coefficient(m, &v).unwrap())
            .sum();
        prop_assert_eq!(total, (p as u128).pow(m));
    }

    #[test]
    fn ranked_partitions_cover_the_sequence(m in 1u32..5, p in 1usize..7, parts in 1usize..5) {
        let total = constant_sum_count(m, p).unwrap();
        let all: Vec<MultiIndex> = ConstantSumIterator::new(m, p).collect();
        let mut joined = Vec::new();
        let chunk = total.div_ceil(parts as u128);
        let mut start = 0;
        while start < total {
            let len = chunk.min(total - start);
            joined.extend(ConstantSumIterator::from_rank(m, p, start, len).unwrap());
            start += len;
        }
        prop_assert_eq!(joined, all);
    }
}
