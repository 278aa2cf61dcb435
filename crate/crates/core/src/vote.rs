//! Soft-equality clustering shared by self-consistency voting, the
//! confidence gate and consensus checks.

use crate::program::{soft_equal, Value};

/// Indices of items sharing one value, keyed by the first member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub representative: usize,
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Groups items by `same`, comparing each item with cluster
/// representatives in order of first appearance. `None` items are skipped.
pub fn cluster_by<T>(items: &[Option<T>], same: impl Fn(&T, &T) -> bool) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let Some(item) = item else { continue };
        let home = clusters.iter_mut().find(|c| {
            let rep = items[c.representative]
                .as_ref()
                .expect("representative is present");
            same(rep, item)
        });
        match home {
            Some(c) => c.members.push(i),
            None => clusters.push(Cluster {
                representative: i,
                members: vec![i],
            }),
        }
    }
    clusters
}

pub fn cluster_values(values: &[Option<&Value>]) -> Vec<Cluster> {
    cluster_by(values, |a, b| soft_equal(a, b))
}

/// Largest cluster; ties go to the cluster whose first member came first.
pub fn modal(clusters: &[Cluster]) -> Option<&Cluster> {
    let mut best: Option<&Cluster> = None;
    for c in clusters {
        if best.is_none_or(|b| c.size() > b.size()) {
            best = Some(c);
        }
    }
    best
}
