//! Density-seeded merging.
//!
//! Points whose centroid statistic reaches the density threshold are seeds.
//! Two seeds within `rt` of each other share a cluster. A non-seed within `rt`
//! of a seed joins that seed's cluster, so a non-seed close to seeds of two
//! clusters fuses them. Non-seeds never extend a cluster on their own. The
//! result is the set of connected components of that graph that contain a
//! seed, which makes it independent of processing order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{squared_euclidean, Dataset};
use crate::exec::Execution;

/// Disjoint sets with union by size and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Clusters as sorted member lists, ordered by smallest member; unassigned
/// points in ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub clusters: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
}

/// Fixed-radius neighbor lookup over a subset of points, hashing on at most
/// three of the widest dimensions. Candidates are always verified against the
/// full distance.
struct RadiusIndex<'a> {
    data: &'a Dataset,
    ids: &'a [usize],
    dims: Vec<usize>,
    side: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> RadiusIndex<'a> {
    fn new(data: &'a Dataset, ids: &'a [usize], radius: f64) -> Self {
        let q = data.dim();
        let mut extent: Vec<(usize, f64)> = (0..q)
            .map(|d| {
                let (lo, hi) = ids.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = data.point(i)[d];
                    (lo.min(v), hi.max(v))
                });
                (d, hi - lo)
            })
            .collect();
        extent.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let dims: Vec<usize> = extent.iter().take(3).map(|&(d, _)| d).collect();
        let side = if radius > 0.0 { radius } else { 1.0 };
        let mut index = Self {
            data,
            ids,
            dims,
            side,
            buckets: HashMap::new(),
        };
        for (local, &id) in ids.iter().enumerate() {
            let key = index.key(data.point(id));
            index.buckets.entry(key).or_default().push(local);
        }
        index
    }

    fn key(&self, p: &[f64]) -> [i64; 3] {
        let mut key = [0i64; 3];
        for (slot, &d) in key.iter_mut().zip(&self.dims) {
            *slot = (p[d] / self.side).floor() as i64;
        }
        key
    }

    /// Local indices of points within `radius` of local point `local`.
    fn within(&self, local: usize, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let origin = self.data.point(self.ids[local]);
        let center = self.key(origin);
        let r2 = radius * radius;
        let span = self.dims.len();
        let combos = 3usize.pow(span as u32);
        for combo in 0..combos {
            let mut key = center;
            let mut c = combo;
            for slot in key.iter_mut().take(span) {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(bucket) = self.buckets.get(&key) {
                for &o in bucket {
                    if squared_euclidean(origin, self.data.point(self.ids[o])) <= r2 {
                        out.push(o);
                    }
                }
            }
        }
    }
}

/// Merges `ids` with seeds `stat[p] >= dt`; any non-seed may attach.
pub fn merge(
    ids: &[usize],
    stat: &[f64],
    dt: f64,
    rt: f64,
    data: &Dataset,
    exec: Execution,
) -> MergeOutcome {
    merge_with(ids, &|p| stat[p] >= dt, &|_| true, rt, data, exec)
}

/// General form of [`merge`]: `is_seed` picks the seeds and `can_attach`
/// restricts which non-seeds may join a cluster. Both take point ids.
pub fn merge_with(
    ids: &[usize],
    is_seed: &(dyn Fn(usize) -> bool + Sync),
    can_attach: &(dyn Fn(usize) -> bool + Sync),
    rt: f64,
    data: &Dataset,
    exec: Execution,
) -> MergeOutcome {
    if ids.is_empty() {
        return MergeOutcome::default();
    }
    let seed: Vec<bool> = ids.iter().map(|&p| is_seed(p)).collect();
    let attach: Vec<bool> = ids.iter().map(|&p| can_attach(p)).collect();
    let seeds: Vec<usize> = (0..ids.len()).filter(|&l| seed[l]).collect();
    if seeds.is_empty() {
        let mut unassigned = ids.to_vec();
        unassigned.sort_unstable();
        return MergeOutcome {
            clusters: Vec::new(),
            unassigned,
        };
    }

    let index = RadiusIndex::new(data, ids, rt);
    let edges: Vec<Vec<usize>> = exec.map(seeds.len(), |si| {
        let s = seeds[si];
        let mut near = Vec::new();
        index.within(s, rt, &mut near);
        near.retain(|&o| if seed[o] { o > s } else { attach[o] });
        near
    });

    let mut uf = UnionFind::new(ids.len());
    let mut member = seed.clone();
    for (&s, near) in seeds.iter().zip(&edges) {
        for &o in near {
            uf.union(s, o);
            member[o] = true;
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut unassigned = Vec::new();
    for local in 0..ids.len() {
        if member[local] {
            groups.entry(uf.find(local)).or_default().push(ids[local]);
        } else {
            unassigned.push(ids[local]);
        }
    }
    let mut clusters: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    clusters.sort_unstable_by_key(|g| g[0]);
    unassigned.sort_unstable();
    MergeOutcome {
        clusters,
        unassigned,
    }
}
