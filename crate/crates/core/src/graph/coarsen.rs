//! Multilevel graph coarsening by normalized-cut heavy-edge matching.
//!
//! Each level greedily pairs every unmatched vertex with the unmatched
//! neighbor maximizing `w_ij * (1/d_i + 1/d_j)`. Matched pairs (and leftover
//! singletons) become the vertices of the next level. Singletons are padded
//! with fake vertices so that every coarse vertex has exactly two children,
//! and the level-0 permutation lays the tree out so that siblings sit in
//! consecutive positions: pooling by 2 over the permuted signal then follows
//! the clustering.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SparseGraph;

/// Coarsened hierarchy plus the pooling layout of every level.
#[derive(Debug, Clone)]
pub struct CoarseningMap {
    /// `levels[0]` is the input graph, `levels[l + 1]` the coarsening of `levels[l]`.
    pub levels: Vec<SparseGraph>,
    /// Level-0 layout: position `p` holds vertex `perm[p]`; entries `>= n0` are fake.
    pub perm: Vec<usize>,
    /// Padding vertices added at each level.
    pub fake_count: Vec<usize>,
    level_perms: Vec<Vec<usize>>,
}

impl CoarseningMap {
    pub fn num_levels(&self) -> usize {
        self.levels.len() - 1
    }

    /// Signal length at `level` after padding.
    pub fn padded_len(&self, level: usize) -> usize {
        self.level_perms[level].len()
    }

    /// Layout of `level`: position `p` holds vertex `level_perm(level)[p]`.
    pub fn level_perm(&self, level: usize) -> &[usize] {
        &self.level_perms[level]
    }

    /// `true` at positions of `level` occupied by fake vertices.
    pub fn fake_mask(&self, level: usize) -> Vec<bool> {
        let n = self.levels[level].n();
        self.level_perms[level].iter().map(|&v| v >= n).collect()
    }

    /// `level`'s graph in permuted order, fake vertices isolated.
    pub fn permuted_graph(&self, level: usize) -> SparseGraph {
        let g = &self.levels[level];
        let perm = &self.level_perms[level];
        let mut position = vec![usize::MAX; g.n()];
        for (p, &v) in perm.iter().enumerate() {
            if v < g.n() {
                position[v] = p;
            }
        }
        let edges = g.edges().map(|(i, j, w)| (position[i], position[j], w));
        SparseGraph::from_edges(perm.len(), edges).expect("permutation preserves validity")
    }

    /// Reorders a level-0 signal into pooling layout, zero in fake slots.
    pub fn permute_signal(&self, x: &[f64]) -> Vec<f64> {
        let n = self.levels[0].n();
        assert_eq!(x.len(), n, "signal length must match the input graph");
        self.perm
            .iter()
            .map(|&v| if v < n { x[v] } else { 0.0 })
            .collect()
    }

    /// Inverse of [`permute_signal`](Self::permute_signal), dropping fake slots.
    pub fn unpermute_signal(&self, y: &[f64]) -> Vec<f64> {
        let n = self.levels[0].n();
        assert_eq!(y.len(), self.perm.len());
        let mut x = vec![0.0; n];
        for (p, &v) in self.perm.iter().enumerate() {
            if v < n {
                x[v] = y[p];
            }
        }
        x
    }
}

/// Coarsens `g` `levels` times. Deterministic given `seed`.
pub fn coarsen(g: &SparseGraph, levels: usize, seed: u64) -> CoarseningMap {
    let n0 = g.n();
    let mut graphs = vec![g.clone()];
    if levels == 0 {
        return CoarseningMap {
            levels: graphs,
            perm: (0..n0).collect(),
            fake_count: vec![0],
            level_perms: vec![(0..n0).collect()],
        };
    }

    // level adjacency keeps intra-cluster weight on the diagonal so coarse
    // degrees account for the merged edges
    let mut adj: Vec<Vec<(usize, f64)>> = (0..n0).map(|i| g.neighbors(i).collect()).collect();
    let mut degree: Vec<f64> = (0..n0).map(|i| g.degree(i)).collect();
    let mut visit: Vec<usize> = (0..n0).collect();
    visit.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(levels);
    for _ in 0..levels {
        let cluster = match_one_level(&adj, &degree, &visit);
        let nc = cluster.iter().map(|&c| c + 1).max().unwrap_or(0);

        let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); nc];
        for (i, row) in adj.iter().enumerate() {
            for &(j, w) in row {
                *rows[cluster[i]].entry(cluster[j]).or_insert(0.0) += w;
            }
        }
        adj = rows
            .into_iter()
            .map(|r| {
                let mut r: Vec<(usize, f64)> = r.into_iter().filter(|&(_, w)| w != 0.0).collect();
                r.sort_by_key(|&(j, _)| j);
                r
            })
            .collect();
        degree = adj.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
        visit = (0..nc).collect();
        visit.sort_by(|&a, &b| degree[a].total_cmp(&degree[b]));

        let edges = adj.iter().enumerate().flat_map(|(i, r)| {
            r.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, w)| (i, j, w))
        });
        graphs.push(SparseGraph::from_edges(nc, edges).expect("coarse graph is valid"));
        parents.push(cluster);
    }

    let level_perms = compute_layout(&parents);
    let fake_count = level_perms
        .iter()
        .zip(&graphs)
        .map(|(p, g)| p.len() - g.n())
        .collect();
    CoarseningMap {
        levels: graphs,
        perm: level_perms[0].clone(),
        fake_count,
        level_perms,
    }
}

fn match_one_level(adj: &[Vec<(usize, f64)>], degree: &[f64], visit: &[usize]) -> Vec<usize> {
    let n = adj.len();
    let mut marked = vec![false; n];
    let mut cluster = vec![0usize; n];
    let mut next = 0;
    for &v in visit {
        if marked[v] {
            continue;
        }
        marked[v] = true;
        let mut best = None;
        let mut best_score = 0.0;
        for &(u, w) in &adj[v] {
            if marked[u] {
                continue;
            }
            let score = w * (1.0 / degree[v] + 1.0 / degree[u]);
            if score > best_score {
                best_score = score;
                best = Some(u);
            }
        }
        cluster[v] = next;
        if let Some(u) = best {
            cluster[u] = next;
            marked[u] = true;
        }
        next += 1;
    }
    cluster
}

/// Binary-tree layout from the coarsest level down; fake ids continue past
/// the real vertex count of each level.
fn compute_layout(parents: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let last = parents.last().expect("at least one level");
    let coarsest = last.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut layouts = vec![(0..coarsest).collect::<Vec<_>>()];
    for parent in parents.iter().rev() {
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); parent.iter().max().map_or(0, |&m| m + 1)];
        for (v, &c) in parent.iter().enumerate() {
            children[c].push(v);
        }
        let mut next_fake = parent.len();
        let above = layouts.last().unwrap();
        let mut layer = Vec::with_capacity(above.len() * 2);
        for &c in above {
            let kids: &[usize] = children.get(c).map_or(&[], |k| k.as_slice());
            debug_assert!(kids.len() <= 2);
            match kids.len() {
                2 => layer.extend_from_slice(kids),
                1 => {
                    layer.push(kids[0]);
                    layer.push(next_fake);
                    next_fake += 1;
                }
                _ => {
                    layer.push(next_fake);
                    layer.push(next_fake + 1);
                    next_fake += 2;
                }
            }
        }
        layouts.push(layer);
    }
    layouts.reverse();
    layouts
}
