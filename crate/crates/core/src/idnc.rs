//! Instantly decodable network coding (IDNC) conflict graphs and the greedy
//! weighted clique heuristic.
//!
//! A vertex `(i, j)` exists for every packet `j` that client `i` still wants.
//! Two vertices `(i, j)` and `(k, l)` are adjacent when `j == l`, or when `j`
//! is held by `k` and `l` is held by `i`. A clique therefore names a packet
//! combination that every member client can decode with a single XOR.

use std::cmp::Reverse;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::channel::ClientState;
use crate::error::{parse_err, Result};

/// Largest vertex count accepted by the edge-list parser.
pub const MAX_PARSED_VERTICES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub client: usize,
    pub packet: usize,
}

/// Undirected simple graph stored as one adjacency bitset per vertex, plus
/// the set of vertices a clique may start from or grow into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGraph {
    adj: Vec<FixedBitSet>,
    eligible: FixedBitSet,
}

impl BitGraph {
    /// Edgeless graph on `n` vertices, all eligible.
    pub fn new(n: usize) -> Self {
        let mut eligible = FixedBitSet::with_capacity(n);
        eligible.insert_range(..);
        BitGraph {
            adj: vec![FixedBitSet::with_capacity(n); n],
            eligible,
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = BitGraph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    fn from_rows(adj: Vec<FixedBitSet>, eligible: FixedBitSet) -> Self {
        BitGraph { adj, eligible }
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(b)
    }

    pub fn neighbors(&self, v: usize) -> &FixedBitSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    pub fn eligible(&self) -> &FixedBitSet {
        &self.eligible
    }

    pub fn set_eligible(&mut self, eligible: FixedBitSet) {
        debug_assert_eq!(eligible.len(), self.len());
        self.eligible = eligible;
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    /// Edges `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.ones().filter(move |&b| b > a).map(move |b| (a, b)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj
            .iter()
            .enumerate()
            .all(|(a, row)| !row.contains(a) && row.ones().all(|b| self.adj[b].contains(a)))
    }

    pub fn is_clique(&self, members: &[usize]) -> bool {
        members
            .iter()
            .enumerate()
            .all(|(x, &a)| members[x + 1..].iter().all(|&b| a != b && self.is_adjacent(a, b)))
    }

    /// No eligible outsider is adjacent to every member.
    pub fn is_maximal_clique(&self, members: &[usize]) -> bool {
        if !self.is_clique(members) {
            return false;
        }
        let mut common = self.eligible.clone();
        for &m in members {
            common.intersect_with(&self.adj[m]);
        }
        common.is_clear()
    }

    /// Scans eligible vertices by nonincreasing weight (ties: lower index) and
    /// keeps each vertex adjacent to all vertices kept so far.
    pub fn greedy_clique(&self, weights: &[u64]) -> Vec<usize> {
        assert_eq!(weights.len(), self.len(), "one weight per vertex");
        let mut order: Vec<usize> = self.eligible.ones().collect();
        order.sort_by_key(|&v| (Reverse(weights[v]), v));
        let mut candidates = self.eligible.clone();
        let mut clique = Vec::new();
        for v in order {
            if candidates.contains(v) {
                clique.push(v);
                candidates.intersect_with(&self.adj[v]);
                if candidates.is_clear() {
                    break;
                }
            }
        }
        clique.sort_unstable();
        clique
    }

    /// Edge list: `p edge N M` then one `e a b` line per edge, 1-based.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p edge {} {}", self.len(), self.edge_count());
        for (a, b) in self.edges() {
            let _ = writeln!(out, "e {} {}", a + 1, b + 1);
        }
        out
    }

    /// Parses an edge list. Comment lines start with `c`. Self-loops and
    /// duplicate edges are rejected, and the edge count must match the header.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut graph: Option<(BitGraph, usize)> = None;
        let mut seen = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("p") => {
                    if graph.is_some() {
                        return Err(parse_err(line_no, "duplicate problem line"));
                    }
                    if tokens.next() != Some("edge") {
                        return Err(parse_err(line_no, "expected `p edge N M`"));
                    }
                    let n = parse_count(tokens.next(), line_no)?;
                    let m = parse_count(tokens.next(), line_no)?;
                    if tokens.next().is_some() {
                        return Err(parse_err(line_no, "trailing tokens"));
                    }
                    if n > MAX_PARSED_VERTICES {
                        return Err(parse_err(line_no, format!("more than {MAX_PARSED_VERTICES} vertices")));
                    }
                    if m > n * n.saturating_sub(1) / 2 {
                        return Err(parse_err(line_no, "edge count exceeds simple graph bound"));
                    }
                    graph = Some((BitGraph::new(n), m));
                }
                Some("e") => {
                    let Some((g, _)) = graph.as_mut() else {
                        return Err(parse_err(line_no, "edge before problem line"));
                    };
                    let a = parse_count(tokens.next(), line_no)?;
                    let b = parse_count(tokens.next(), line_no)?;
                    if tokens.next().is_some() {
                        return Err(parse_err(line_no, "trailing tokens"));
                    }
                    if a == 0 || b == 0 || a > g.len() || b > g.len() {
                        return Err(parse_err(line_no, "vertex index out of range"));
                    }
                    if a == b {
                        return Err(parse_err(line_no, "self-loop"));
                    }
                    if g.is_adjacent(a - 1, b - 1) {
                        return Err(parse_err(line_no, "duplicate edge"));
                    }
                    g.add_edge(a - 1, b - 1);
                    seen += 1;
                }
                Some(other) => return Err(parse_err(line_no, format!("unknown line type `{other}`"))),
                None => unreachable!("blank lines skipped"),
            }
        }
        let (g, m) = graph.ok_or_else(|| parse_err(0, "missing problem line"))?;
        if seen != m {
            return Err(parse_err(0, format!("header declares {m} edges, found {seen}")));
        }
        Ok(g)
    }
}

fn parse_count(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.ok_or_else(|| parse_err(line, "missing number"))?
        .parse()
        .map_err(|_| parse_err(line, "invalid number"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Global,
    /// Local graph of the given client id.
    Local(usize),
}

/// An IDNC graph over a set of client states.
#[derive(Debug, Clone)]
pub struct IdncGraph {
    vertices: Vec<Vertex>,
    graph: BitGraph,
    scope: Scope,
}

/// A clique of an [`IdncGraph`] and the packets it combines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clique {
    pub vertices: Vec<Vertex>,
    /// Sorted, distinct packet ids.
    pub packets: Vec<usize>,
}

impl Clique {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

impl IdncGraph {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn graph(&self) -> &BitGraph {
        &self.graph
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    pub fn is_adjacent(&self, a: Vertex, b: Vertex) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(x), Some(y)) => self.graph.is_adjacent(x, y),
            _ => false,
        }
    }

    pub fn greedy_clique(&self, weights: &[u64]) -> Clique {
        let idx = self.graph.greedy_clique(weights);
        self.clique_from_indices(&idx)
    }

    pub fn clique_from_indices(&self, idx: &[usize]) -> Clique {
        let vertices: Vec<Vertex> = idx.iter().map(|&i| self.vertices[i]).collect();
        let mut packets: Vec<usize> = vertices.iter().map(|v| v.packet).collect();
        packets.sort_unstable();
        packets.dedup();
        Clique { vertices, packets }
    }

    /// Edge list with one `c v <index> <client> <packet>` comment per vertex (all 1-based).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let scope = match self.scope {
            Scope::Global => "global".to_string(),
            Scope::Local(u) => format!("local {}", u + 1),
        };
        let _ = writeln!(out, "c idnc {scope}");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "c v {} {} {}", i + 1, v.client + 1, v.packet + 1);
        }
        out.push_str(&self.graph.to_edge_list());
        out
    }
}

/// Bitset masks shared by global and local construction.
struct Layout {
    vertices: Vec<Vertex>,
    /// Vertices wanting packet j.
    by_packet: Vec<FixedBitSet>,
    /// Vertex index range per state (states are sorted by id).
    ranges: Vec<(usize, usize)>,
    /// Per state: vertices whose packet that state holds.
    has_mask: Vec<FixedBitSet>,
}

impl Layout {
    fn new(states: &[ClientState]) -> Self {
        debug_assert!(states.windows(2).all(|w| w[0].id < w[1].id), "states sorted by id");
        let n_packets = states.first().map_or(0, ClientState::n_packets);
        let mut vertices = Vec::new();
        let mut ranges = Vec::with_capacity(states.len());
        for s in states {
            let start = vertices.len();
            vertices.extend(s.wants().ones().map(|packet| Vertex { client: s.id, packet }));
            ranges.push((start, vertices.len()));
        }
        let nv = vertices.len();
        let mut by_packet = vec![FixedBitSet::with_capacity(nv); n_packets];
        for (i, v) in vertices.iter().enumerate() {
            by_packet[v.packet].insert(i);
        }
        let has_mask = states
            .iter()
            .map(|s| {
                let mut m = FixedBitSet::with_capacity(nv);
                for j in s.has().ones() {
                    m.union_with(&by_packet[j]);
                }
                m
            })
            .collect();
        Layout {
            vertices,
            by_packet,
            ranges,
            has_mask,
        }
    }

    fn global_rows(&self, states: &[ClientState]) -> Vec<FixedBitSet> {
        let nv = self.vertices.len();
        let n_packets = self.by_packet.len();
        // Vertices belonging to clients that hold packet j.
        let mut holders = vec![FixedBitSet::with_capacity(nv); n_packets];
        for (s, &(start, end)) in states.iter().zip(&self.ranges) {
            for j in s.has().ones() {
                holders[j].insert_range(start..end);
            }
        }
        let mut rows = Vec::with_capacity(nv);
        for (k, &(start, end)) in self.ranges.iter().enumerate() {
            for v in start..end {
                let j = self.vertices[v].packet;
                let mut row = self.has_mask[k].clone();
                row.intersect_with(&holders[j]);
                row.union_with(&self.by_packet[j]);
                row.set(v, false);
                rows.push(row);
            }
        }
        rows
    }
}

/// Global graph over all wants of `states` (sorted by client id).
pub fn build_global(states: &[ClientState]) -> IdncGraph {
    let layout = Layout::new(states);
    let rows = layout.global_rows(states);
    let mut eligible = FixedBitSet::with_capacity(layout.vertices.len());
    eligible.insert_range(..);
    IdncGraph {
        graph: BitGraph::from_rows(rows, eligible),
        vertices: layout.vertices,
        scope: Scope::Global,
    }
}

/// Local graph of client `u`: same vertices as the global graph, keeping only
/// edges whose two packets `u` holds. Only vertices whose packet `u` holds are
/// eligible for its cliques.
///
/// # Panics
/// If `u` is not among `states`.
pub fn build_local(states: &[ClientState], u: usize) -> IdncGraph {
    let pos = states
        .iter()
        .position(|s| s.id == u)
        .expect("local graph owner must be among the states");
    let layout = Layout::new(states);
    let mut rows = layout.global_rows(states);
    let owner = &states[pos];
    let mask = &layout.has_mask[pos];
    for (row, v) in rows.iter_mut().zip(&layout.vertices) {
        if owner.holds(v.packet) {
            row.intersect_with(mask);
        } else {
            row.clear();
        }
    }
    IdncGraph {
        graph: BitGraph::from_rows(rows, mask.clone()),
        vertices: layout.vertices,
        scope: Scope::Local(u),
    }
}

/// `w(i, j) = |Ω_i| · Σ_{(t, s) ∈ N(i, j)} |Ω_t|`, over the graph's own edges.
pub fn compute_weights(graph: &IdncGraph, states: &[ClientState]) -> Vec<u64> {
    let max_id = states.iter().map(|s| s.id).max().unwrap_or(0);
    let mut wants = vec![0u64; max_id + 1];
    for s in states {
        wants[s.id] = s.wants_count() as u64;
    }
    // Group vertices by the wants count of their client.
    let nv = graph.len();
    let mut groups: Vec<(u64, FixedBitSet)> = Vec::new();
    for (i, v) in graph.vertices.iter().enumerate() {
        let c = wants[v.client];
        match groups.iter_mut().find(|(w, _)| *w == c) {
            Some((_, m)) => m.insert(i),
            None => {
                let mut m = FixedBitSet::with_capacity(nv);
                m.insert(i);
                groups.push((c, m));
            }
        }
    }
    graph
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let row = graph.graph.neighbors(i);
            let sum: u64 = groups.iter().map(|(c, m)| c * row.intersection_count(m) as u64).sum();
            wants[v.client] * sum
        })
        .collect()
}

/// Number of greedy cliques needed to empty the global graph when every
/// transmission is received: each round removes its whole clique.
pub fn greedy_clique_partition(states: &[ClientState]) -> usize {
    let mut states = states.to_vec();
    let mut rounds = 0;
    loop {
        let g = build_global(&states);
        if g.is_empty() {
            return rounds;
        }
        let w = compute_weights(&g, &states);
        let clique = g.greedy_clique(&w);
        for v in &clique.vertices {
            let s = states
                .iter_mut()
                .find(|s| s.id == v.client)
                .expect("vertex client present");
            s.receive(v.packet);
        }
        rounds += 1;
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::channel::{states_from_supports, BroadcastOutcome};
    use proptest::prelude::*;

    fn set(n: usize, items: &[usize]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        for &i in items {
            s.insert(i);
        }
        s
    }

    /// Client i (0-based) holds every packet except its own, wants packet
    /// (i + 3) mod 4: the four-client introductory instance.
    pub(crate) fn intro_states() -> Vec<ClientState> {
        let has = vec![
            set(4, &[0, 1, 2]),
            set(4, &[1, 2, 3]),
            set(4, &[2, 3, 0]),
            set(4, &[3, 0, 1]),
        ];
        let supports: Vec<Vec<usize>> = (0..4).map(|i| (0..4).filter(|&j| j != i).collect()).collect();
        states_from_supports(4, &supports, &BroadcastOutcome::from_has(has)).unwrap()
    }

    fn v(client: usize, packet: usize) -> Vertex {
        Vertex { client, packet }
    }

    /// Edge rules applied literally, vertex pair by vertex pair.
    fn rule_adjacent(states: &[ClientState], a: Vertex, b: Vertex, owner: Option<usize>) -> bool {
        if a == b {
            return false;
        }
        let holds = |c: usize, j: usize| states.iter().find(|s| s.id == c).unwrap().holds(j);
        let rule1 = a.packet == b.packet;
        let rule2 = holds(b.client, a.packet) && holds(a.client, b.packet);
        match owner {
            None => rule1 || rule2,
            Some(u) => (rule1 && holds(u, a.packet)) || (rule2 && holds(u, a.packet) && holds(u, b.packet)),
        }
    }

    fn random_states(n: usize, clients: usize, bits: &[bool]) -> Vec<ClientState> {
        // bits drive, per (client, packet), required-ness and holding.
        let mut k = 0;
        let mut next = || {
            let b = bits[k % bits.len()];
            k += 1;
            b
        };
        (0..clients)
            .map(|i| {
                let mut req = Vec::new();
                let mut has = Vec::new();
                for j in 0..n {
                    if next() {
                        req.push(j);
                    }
                    if next() {
                        has.push(j);
                    }
                }
                ClientState::new(i, n, &req, &has).unwrap()
            })
            .collect()
    }

    #[test]
    fn intro_global_is_complete() {
        let states = intro_states();
        let g = build_global(&states);
        assert_eq!(g.vertices(), &[v(0, 3), v(1, 0), v(2, 1), v(3, 2)]);
        assert_eq!(g.graph().edge_count(), 6);
        let w = compute_weights(&g, &states);
        assert_eq!(w, vec![3, 3, 3, 3]);
        let c = g.greedy_clique(&w);
        assert_eq!(c.packets, vec![0, 1, 2, 3]);
    }

    #[test]
    fn intro_local_graph_of_second_client() {
        let states = intro_states();
        let g = build_local(&states, 1);
        // v(1,0) belongs to the owner, which does not hold packet 0.
        let isolated = g.index_of(v(1, 0)).unwrap();
        assert_eq!(g.graph().degree(isolated), 0);
        assert!(!g.graph().eligible().contains(isolated));
        for a in [v(0, 3), v(2, 1), v(3, 2)] {
            for b in [v(0, 3), v(2, 1), v(3, 2)] {
                if a != b {
                    assert!(g.is_adjacent(a, b));
                }
            }
        }
        let w = compute_weights(&g, &states);
        let c = g.greedy_clique(&w);
        assert_eq!(c.len(), 3);
        assert_eq!(c.packets, vec![1, 2, 3]);
    }

    #[test]
    fn empty_wants_give_empty_graph() {
        let states = vec![ClientState::new(0, 3, &[0], &[0]).unwrap()];
        let g = build_global(&states);
        assert!(g.is_empty());
        assert!(g.greedy_clique(&[]).is_empty());
        assert_eq!(greedy_clique_partition(&states), 0);
    }

    #[test]
    fn shared_want_single_edge() {
        let states = vec![
            ClientState::new(0, 3, &[0, 1], &[1]).unwrap(),
            ClientState::new(1, 3, &[0, 2], &[2]).unwrap(),
        ];
        let g = build_global(&states);
        assert_eq!(g.graph().edge_count(), 1);
        assert!(g.is_adjacent(v(0, 0), v(1, 0)));
    }

    #[test]
    fn local_with_everything_equals_global() {
        let mut states = intro_states();
        states.push(ClientState::new(4, 4, &[], &[0, 1, 2, 3]).unwrap());
        let global = build_global(&states);
        let local = build_local(&states, 4);
        assert_eq!(
            global.graph().edges().collect::<Vec<_>>(),
            local.graph().edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn local_with_nothing_is_edgeless() {
        let mut states = intro_states();
        states.push(ClientState::new(4, 4, &[], &[]).unwrap());
        let local = build_local(&states, 4);
        assert_eq!(local.graph().edge_count(), 0);
        assert!(local.graph().eligible().is_clear());
    }

    #[test]
    fn isolated_vertex_weight_zero() {
        let states = vec![ClientState::new(0, 2, &[0], &[]).unwrap()];
        let g = build_global(&states);
        assert_eq!(compute_weights(&g, &states), vec![0]);
    }

    #[test]
    fn star_center_weight() {
        // Client 0 wants {0, 1}; clients 1..=3 each want packet 0 only, so
        // vertex (0,0) is adjacent to the three leaves by the shared-packet rule.
        let states = vec![
            ClientState::new(0, 4, &[0, 1], &[]).unwrap(),
            ClientState::new(1, 4, &[0], &[]).unwrap(),
            ClientState::new(2, 4, &[0], &[]).unwrap(),
            ClientState::new(3, 4, &[0], &[]).unwrap(),
        ];
        let g = build_global(&states);
        let w = compute_weights(&g, &states);
        let center = g.index_of(v(0, 0)).unwrap();
        assert_eq!(g.graph().degree(center), 3);
        assert_eq!(w[center], 2 * 3);
    }

    #[test]
    fn path_scan_order() {
        let g = BitGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(g.greedy_clique(&[5, 1, 5]), vec![0, 1]);
    }

    #[test]
    fn trivial_graphs() {
        let edgeless = BitGraph::new(4);
        assert_eq!(edgeless.greedy_clique(&[1, 7, 7, 2]), vec![1]);
        let mut complete = BitGraph::new(5);
        for a in 0..5 {
            for b in a + 1..5 {
                complete.add_edge(a, b);
            }
        }
        assert_eq!(complete.greedy_clique(&[0; 5]), vec![0, 1, 2, 3, 4]);
        assert!(complete.is_maximal_clique(&[0, 1, 2, 3, 4]));
        assert!(!complete.is_maximal_clique(&[0, 1]));
    }

    #[test]
    fn edge_list_round_trip() {
        let states = intro_states();
        let g = build_global(&states);
        let text = g.dump();
        assert!(text.contains("c v 1 1 4"));
        let parsed = BitGraph::parse_edge_list(&text).unwrap();
        assert_eq!(
            parsed.edges().collect::<Vec<_>>(),
            g.graph().edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn edge_list_errors() {
        for bad in [
            "e 1 2\n",
            "p edge 2 1\ne 1 1\n",
            "p edge 2 1\ne 1 3\n",
            "p edge 2 2\ne 1 2\ne 2 1\n",
            "p edge 3 2\ne 1 2\n",
            "p edge 2 1\ne 1 2\np edge 2 1\n",
            "p node 2 1\n",
            "x\n",
            "",
            "p edge 99999 0\n",
        ] {
            assert!(BitGraph::parse_edge_list(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn partition_of_intro_is_one_clique() {
        assert_eq!(greedy_clique_partition(&intro_states()), 1);
    }

    proptest! {
        #[test]
        fn global_matches_edge_rules(bits in proptest::collection::vec(any::<bool>(), 8..160), n in 1usize..6, clients in 1usize..6) {
            let states = random_states(n, clients, &bits);
            let g = build_global(&states);
            prop_assert!(g.graph().is_symmetric());
            for (x, &a) in g.vertices().iter().enumerate() {
                prop_assert!(states[a.client].wants().contains(a.packet));
                for (y, &b) in g.vertices().iter().enumerate() {
                    prop_assert_eq!(g.graph().is_adjacent(x, y), rule_adjacent(&states, a, b, None));
                    if a.client == b.client {
                        prop_assert!(!g.graph().is_adjacent(x, y));
                    }
                }
            }
        }

        #[test]
        fn local_matches_rules_and_is_subgraph(bits in proptest::collection::vec(any::<bool>(), 8..160), n in 1usize..6, clients in 1usize..6, owner in 0usize..6) {
            let states = random_states(n, clients, &bits);
            let u = owner % clients;
            let global = build_global(&states);
            let local = build_local(&states, u);
            prop_assert_eq!(global.vertices(), local.vertices());
            prop_assert!(local.graph().is_symmetric());
            for (x, &a) in local.vertices().iter().enumerate() {
                prop_assert_eq!(local.graph().eligible().contains(x), states[u].holds(a.packet));
                for (y, &b) in local.vertices().iter().enumerate() {
                    let e = local.graph().is_adjacent(x, y);
                    prop_assert_eq!(e, rule_adjacent(&states, a, b, Some(u)));
                    prop_assert!(!e || global.graph().is_adjacent(x, y));
                }
            }
        }

        #[test]
        fn weights_match_definition(bits in proptest::collection::vec(any::<bool>(), 8..160), n in 1usize..6, clients in 1usize..6) {
            let states = random_states(n, clients, &bits);
            let g = build_global(&states);
            let w = compute_weights(&g, &states);
            for (x, a) in g.vertices().iter().enumerate() {
                let sum: u64 = g.graph().neighbors(x).ones()
                    .map(|y| states[g.vertices()[y].client].wants_count() as u64)
                    .sum();
                prop_assert_eq!(w[x], states[a.client].wants_count() as u64 * sum);
            }
        }

        #[test]
        fn greedy_clique_is_maximal_clique(bits in proptest::collection::vec(any::<bool>(), 8..160), n in 1usize..7, clients in 1usize..7) {
            let states = random_states(n, clients, &bits);
            let g = build_global(&states);
            let w = compute_weights(&g, &states);
            let idx = g.graph().greedy_clique(&w);
            prop_assert!(g.graph().is_maximal_clique(&idx));
            let c = g.clique_from_indices(&idx);
            let mut clients_seen: Vec<usize> = c.vertices.iter().map(|v| v.client).collect();
            clients_seen.dedup();
            prop_assert_eq!(clients_seen.len(), c.len());
            for u in 0..clients {
                let local = build_local(&states, u);
                let lw = compute_weights(&local, &states);
                let lc = local.greedy_clique(&lw);
                prop_assert!(lc.packets.iter().all(|&j| states[u].holds(j)));
                let li: Vec<usize> = lc.vertices.iter().map(|&v| local.index_of(v).unwrap()).collect();
                prop_assert!(local.graph().is_maximal_clique(&li));
            }
        }
    }
}
