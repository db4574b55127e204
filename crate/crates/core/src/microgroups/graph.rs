use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::OccurrenceMatrix;
use crate::error::{Error, Result};

/// Directed co-occurrence edge between node indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Shared bins over the bins of `from`.
    pub weight: f64,
    pub co_count: u32,
    /// Distinct scanners among the shared bins.
    pub locations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicroGroupGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeThresholds {
    pub min_weight: f64,
    pub min_locations: u32,
    pub min_co: u32,
}

impl Default for EdgeThresholds {
    fn default() -> Self {
        Self { min_weight: 0.5, min_locations: 3, min_co: 3 }
    }
}

impl EdgeThresholds {
    pub fn admits(&self, e: &Edge) -> bool {
        e.weight >= self.min_weight && e.locations >= self.min_locations && e.co_count >= self.min_co
    }
}

/// Bin → devices inverted index, so that only pairs sharing a bin are visited.
pub struct CoOccurrenceIndex<'a> {
    occ: &'a OccurrenceMatrix,
    occupants: Vec<Vec<u32>>,
}

/// Per-source scratch counters.
pub struct EdgeScratch {
    co: Vec<u32>,
    locations: Vec<u32>,
    last_scanner: Vec<Option<u32>>,
    touched: Vec<u32>,
}

impl<'a> CoOccurrenceIndex<'a> {
    pub fn new(occ: &'a OccurrenceMatrix) -> Result<Self> {
        if let Some(node) = occ.rows().iter().position(Vec::is_empty) {
            return Err(Error::EmptyOccurrenceRow { node });
        }
        let mut occupants = vec![Vec::new(); occ.bins().len()];
        for (d, r) in occ.rows().iter().enumerate() {
            for &b in r {
                occupants[b as usize].push(d as u32);
            }
        }
        Ok(Self { occ, occupants })
    }

    pub fn scratch(&self) -> EdgeScratch {
        let n = self.occ.n_devices();
        EdgeScratch { co: vec![0; n], locations: vec![0; n], last_scanner: vec![None; n], touched: Vec::new() }
    }

    /// Outgoing edges of `from`, in target order.
    pub fn edges_from(&self, from: usize, scratch: &mut EdgeScratch, out: &mut Vec<Edge>) {
        let row = self.occ.row(from);
        // bins are sorted by scanner, so a scanner change marks a new location
        for &b in row {
            let scanner = self.occ.bins()[b as usize].scanner_id;
            for &t in &self.occupants[b as usize] {
                let t_us = t as usize;
                if t_us == from {
                    continue;
                }
                if scratch.co[t_us] == 0 {
                    scratch.touched.push(t);
                }
                scratch.co[t_us] += 1;
                if scratch.last_scanner[t_us] != Some(scanner) {
                    scratch.last_scanner[t_us] = Some(scanner);
                    scratch.locations[t_us] += 1;
                }
            }
        }
        scratch.touched.sort_unstable();
        let total = row.len() as f64;
        for &t in &scratch.touched {
            let t = t as usize;
            out.push(Edge {
                from,
                to: t,
                weight: scratch.co[t] as f64 / total,
                co_count: scratch.co[t],
                locations: scratch.locations[t],
            });
            scratch.co[t] = 0;
            scratch.locations[t] = 0;
            scratch.last_scanner[t] = None;
        }
        scratch.touched.clear();
    }
}

/// Every directed edge between devices that share at least one bin.
pub fn co_occurrence_graph(occ: &OccurrenceMatrix) -> Result<MicroGroupGraph> {
    build(occ, |_| true)
}

/// Builds the graph keeping only admitted edges, then drops isolated nodes.
pub fn thresholded_graph(occ: &OccurrenceMatrix, thresholds: &EdgeThresholds) -> Result<MicroGroupGraph> {
    Ok(compact(build(occ, |e| thresholds.admits(e))?))
}

fn build(occ: &OccurrenceMatrix, keep: impl Fn(&Edge) -> bool) -> Result<MicroGroupGraph> {
    let index = CoOccurrenceIndex::new(occ)?;
    let mut scratch = index.scratch();
    let mut edges = Vec::new();
    let mut buf = Vec::new();
    for d in 0..occ.n_devices() {
        index.edges_from(d, &mut scratch, &mut buf);
        edges.extend(buf.drain(..).filter(|e| keep(e)));
    }
    Ok(MicroGroupGraph { nodes: occ.devices().to_vec(), edges })
}

/// Keeps admitted edges and the nodes they touch.
pub fn threshold_edges(graph: &MicroGroupGraph, thresholds: &EdgeThresholds) -> MicroGroupGraph {
    compact(MicroGroupGraph {
        nodes: graph.nodes.clone(),
        edges: graph.edges.iter().filter(|e| thresholds.admits(e)).copied().collect(),
    })
}

fn compact(graph: MicroGroupGraph) -> MicroGroupGraph {
    let mut used = vec![false; graph.nodes.len()];
    for e in &graph.edges {
        used[e.from] = true;
        used[e.to] = true;
    }
    let mut new_index = vec![usize::MAX; graph.nodes.len()];
    let mut nodes = Vec::new();
    for (k, name) in graph.nodes.into_iter().enumerate() {
        if used[k] {
            new_index[k] = nodes.len();
            nodes.push(name);
        }
    }
    let edges = graph
        .edges
        .into_iter()
        .map(|e| Edge { from: new_index[e.from], to: new_index[e.to], ..e })
        .collect();
    MicroGroupGraph { nodes, edges }
}

impl MicroGroupGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for e in &self.edges {
            d[e.to] += 1;
        }
        d
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for e in &self.edges {
            d[e.from] += 1;
        }
        d
    }

    /// Nodes with in-degree at least `min_in` and no outgoing edges: many
    /// devices follow them but they follow nobody, as a stationary worker would.
    pub fn star_centers(&self, min_in: usize) -> Vec<usize> {
        let (i, o) = (self.in_degrees(), self.out_degrees());
        (0..self.nodes.len()).filter(|&k| i[k] >= min_in && o[k] == 0).collect()
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: alloc::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for k in 0..n {
            let r = find(&mut parent, k);
            groups.entry(r).or_default().push(k);
        }
        groups.into_values().collect()
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| self.nodes[e.from] == from && self.nodes[e.to] == to)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::occ;
    use super::*;
    use crate::rng::seeded;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn shared_bin_weights() {
        // A in {x, y}, B in {y, z}
        let m = occ(&[&[(1, 0), (2, 1)], &[(2, 1), (3, 2)]]);
        let g = co_occurrence_graph(&m).unwrap();
        let ab = g.edge("d00", "d01").unwrap();
        let ba = g.edge("d01", "d00").unwrap();
        assert_eq!((ab.weight, ab.co_count, ab.locations), (0.5, 1, 1));
        assert_eq!(ba.weight, 0.5);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn asymmetric_containment() {
        let a: Vec<(u32, i64)> = (0..10).map(|t| (t as u32 % 4, t)).collect();
        let b = [a[3], a[6]];
        let m = occ(&[&a, &b]);
        let g = co_occurrence_graph(&m).unwrap();
        assert_eq!(g.edge("d01", "d00").unwrap().weight, 1.0);
        assert!((g.edge("d00", "d01").unwrap().weight - 0.2).abs() < 1e-15);
        assert_eq!(g.edge("d00", "d01").unwrap().locations, 2);
    }

    #[test]
    fn empty_row_rejected() {
        let m = occ(&[&[(1, 0)], &[]]);
        assert_eq!(co_occurrence_graph(&m), Err(Error::EmptyOccurrenceRow { node: 1 }));
    }

    #[test]
    fn thresholds_are_inclusive() {
        let t = EdgeThresholds::default();
        let e = Edge { from: 0, to: 1, weight: 0.5, co_count: 3, locations: 3 };
        assert!(t.admits(&e));
        assert!(!t.admits(&Edge { weight: 0.9, locations: 2, ..e }));
        assert!(!t.admits(&Edge { co_count: 2, ..e }));
    }

    #[test]
    fn thresholding_drops_isolated_nodes() {
        let shared = [(1, 0), (2, 1), (3, 2)];
        let m = occ(&[&shared, &shared, &[(1, 0), (5, 9)]]);
        let g = co_occurrence_graph(&m).unwrap();
        let t = threshold_edges(&g, &EdgeThresholds::default());
        assert_eq!(t.nodes, ["d00", "d01"]);
        assert_eq!(t.num_edges(), 2);
        assert_eq!(t, thresholded_graph(&m, &EdgeThresholds::default()).unwrap());
        assert_eq!(t.components(), vec![vec![0, 1]]);
    }

    #[test]
    fn stars_and_components() {
        let g = MicroGroupGraph {
            nodes: (0..7).map(|k| alloc::format!("n{k}")).collect(),
            edges: (1..6).map(|k| Edge { from: k, to: 0, weight: 1.0, co_count: 3, locations: 3 }).collect(),
        };
        assert_eq!(g.star_centers(5), vec![0]);
        assert!(g.star_centers(6).is_empty());
        assert_eq!(g.components(), vec![vec![0, 1, 2, 3, 4, 5], vec![6]]);
    }

    #[test]
    fn matches_all_pairs_count() {
        let mut rng = seeded(2);
        let rows: Vec<Vec<(u32, i64)>> = (0..30)
            .map(|_| (0..rng.random_range(1..15)).map(|_| (rng.random_range(0..4), rng.random_range(0..20))).collect())
            .collect();
        let refs: Vec<&[(u32, i64)]> = rows.iter().map(Vec::as_slice).collect();
        let m = occ(&refs);
        let g = co_occurrence_graph(&m).unwrap();
        for a in 0..m.n_devices() {
            for b in 0..m.n_devices() {
                if a == b {
                    continue;
                }
                let shared: Vec<u32> = m.row(a).iter().filter(|x| m.row(b).contains(x)).copied().collect();
                let mut scanners: Vec<u32> = shared.iter().map(|&x| m.bins()[x as usize].scanner_id).collect();
                scanners.dedup();
                let e = g.edges.iter().find(|e| e.from == a && e.to == b);
                match e {
                    None => assert!(shared.is_empty()),
                    Some(e) => {
                        assert_eq!(e.co_count as usize, shared.len());
                        assert_eq!(e.locations as usize, scanners.len());
                        assert_eq!(e.weight, shared.len() as f64 / m.row(a).len() as f64);
                    }
                }
            }
        }
        // device order does not matter
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<&[(u32, i64)]> = perm.iter().map(|&k| rows[k].as_slice()).collect();
        let names: Vec<String> = perm.iter().map(|&k| alloc::format!("d{k:02}")).collect();
        let bins = shuffled
            .iter()
            .map(|r| r.iter().map(|&(s, t)| super::super::SpaceTimeBin { scanner_id: s, time_bin: t }).collect())
            .collect();
        let m2 = OccurrenceMatrix::from_device_bins(names, bins, 600, 0);
        let g2 = co_occurrence_graph(&m2).unwrap();
        assert_eq!(g.num_edges(), g2.num_edges());
        for e in &g2.edges {
            let orig = g.edge(&g2.nodes[e.from], &g2.nodes[e.to]).unwrap();
            assert_eq!((orig.weight, orig.co_count, orig.locations), (e.weight, e.co_count, e.locations));
        }
    }
}
