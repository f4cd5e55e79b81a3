use rand::seq::SliceRandom;

use crate::error::{ensure_param, Error, Result};
use crate::rng::rng_from_seed;

/// `K` possibly overlapping node subsets `G_k` defining the ARD questions.
#[derive(Clone, Debug, PartialEq)]
pub struct TraitPartition {
    n: usize,
    groups: Vec<Vec<usize>>,
    membership: Vec<Vec<usize>>,
}

impl TraitPartition {
    /// Builds a partition from explicit groups; members are sorted and deduplicated.
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        ensure_param!(!groups.is_empty(), "at least one trait group is required");
        let mut membership = vec![Vec::new(); n];
        let mut clean = Vec::with_capacity(groups.len());
        for (k, mut g) in groups.into_iter().enumerate() {
            g.sort_unstable();
            g.dedup();
            if let Some(&bad) = g.iter().find(|&&i| i >= n) {
                return Err(Error::Parameter(format!(
                    "trait {k} member {bad} out of range for n={n}"
                )));
            }
            for &i in &g {
                membership[i].push(k);
            }
            clean.push(g);
        }
        Ok(Self {
            n,
            groups: clean,
            membership,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Traits carried by node `i`, ascending.
    pub fn traits_of(&self, i: usize) -> &[usize] {
        &self.membership[i]
    }

    pub fn contains(&self, k: usize, i: usize) -> bool {
        self.groups[k].binary_search(&i).is_ok()
    }

    /// `|G_k \ {i}|`.
    pub fn group_size_excluding(&self, k: usize, i: usize) -> usize {
        self.groups[k].len() - usize::from(self.contains(k, i))
    }

    pub fn max_traits_per_node(&self) -> usize {
        self.membership.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `(node, trait)` membership pairs in node order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.membership
            .iter()
            .enumerate()
            .flat_map(|(i, ks)| ks.iter().map(move |&k| (i, k)))
    }
}

/// Random trait groups of size `⌈coverage · n⌉`.
///
/// Nodes are shuffled into `K` near-equal blocks. Trait `k` keeps
/// `(1 - overlap)` of its members from block `k` and draws the rest from
/// the other blocks, so groups overlap partially when `overlap > 0`.
pub fn assign_traits(n: usize, k: usize, coverage: f64, overlap: f64, seed: u64) -> Result<TraitPartition> {
    ensure_param!(k >= 1, "need at least one trait");
    ensure_param!(
        coverage > 0.0 && coverage <= 1.0,
        "coverage must be in (0,1], got {coverage}"
    );
    ensure_param!((0.0..1.0).contains(&overlap), "overlap must be in [0,1), got {overlap}");
    ensure_param!(coverage * n as f64 >= 1.0, "coverage * n must be at least 1");
    let target = ((coverage * n as f64) - 1e-9).ceil() as usize;
    ensure_param!(
        overlap > 0.0 || target * k <= n,
        "{k} disjoint traits of size {target} do not fit in {n} nodes"
    );

    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let blocks: Vec<&[usize]> = (0..k).map(|b| &order[b * n / k..(b + 1) * n / k]).collect();

    let from_others = ((overlap * target as f64).round() as usize).min(target);
    let mut groups = Vec::with_capacity(k);
    for (b, block) in blocks.iter().enumerate() {
        let own_wanted = (target - from_others).min(block.len());
        let mut own = block.to_vec();
        own.shuffle(&mut rng);
        own.truncate(own_wanted);

        let mut others: Vec<usize> = blocks
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != b)
            .flat_map(|(_, blk)| blk.iter().copied())
            .collect();
        others.shuffle(&mut rng);
        let need = target - own.len();
        if need > others.len() {
            // block smaller than the overlap share can cover; top up from own block
            let mut rest: Vec<usize> = block.iter().copied().filter(|i| !own.contains(i)).collect();
            rest.shuffle(&mut rng);
            own.extend(rest.into_iter().take(need - others.len()));
        }
        own.extend(others.into_iter().take(target - own.len()));
        groups.push(own);
    }
    TraitPartition::new(n, groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_overlap_gives_disjoint_equal_groups() {
        let t = assign_traits(100, 5, 0.2, 0.0, 1).unwrap();
        assert!(t.groups().iter().all(|g| g.len() == 20));
        assert_eq!(t.max_traits_per_node(), 1);
        assert_eq!(t.pairs().count(), 100);
    }

    #[test]
    fn overlap_creates_multi_membership() {
        let t = assign_traits(100, 5, 0.3, 0.3, 2).unwrap();
        assert!((0..100).any(|i| t.traits_of(i).len() >= 2));
    }

    #[test]
    fn groups_meet_minimum_size() {
        for seed in 0..20 {
            for &(cov, ov) in &[(0.15, 0.0), (0.33, 0.2), (0.5, 0.5), (0.05, 0.9)] {
                let t = assign_traits(97, 6, cov, ov, seed).unwrap();
                let floor = (cov * 97.0_f64).floor() as usize;
                assert!(t.groups().iter().all(|g| g.len() >= floor));
            }
        }
    }

    #[test]
    fn infeasible_disjoint_request_is_rejected() {
        assert!(matches!(assign_traits(100, 5, 0.3, 0.0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn excluded_size_skips_self() {
        let t = TraitPartition::new(4, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(t.group_size_excluding(0, 1), 2);
        assert_eq!(t.group_size_excluding(0, 3), 3);
    }
}
