//! Brute-force reference checks. Nothing here is used on the simulation path,
//! and none of it shares arithmetic or search code with the production modules.

use crate::error::{Error, Result};
use crate::galois::{FieldKind, FieldSpec};
use crate::idnc::BitGraph;

pub const MAX_CLIQUE_VERTICES: usize = 20;
pub const MAX_COVER_VERTICES: usize = 10;
pub const MAX_DECODE_CHECK_N: usize = 64;

/// Undirected graph on at most 20 vertices as adjacency masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallGraph {
    adj: Vec<u32>,
}

impl SmallGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_CLIQUE_VERTICES {
            return Err(Error::Unsupported(format!(
                "oracle graphs hold at most {MAX_CLIQUE_VERTICES} vertices"
            )));
        }
        Ok(SmallGraph { adj: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SmallGraph::new(n)?;
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        Ok(g)
    }

    pub fn from_bitgraph(g: &BitGraph) -> Result<Self> {
        let mut s = SmallGraph::new(g.len())?;
        for (a, b) in g.edges() {
            s.add_edge(a, b);
        }
        Ok(s)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a] |= 1 << b;
            self.adj[b] |= 1 << a;
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    fn all(&self) -> u32 {
        if self.adj.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.adj.len()) - 1
        }
    }

    fn is_clique_mask(&self, mask: u32) -> bool {
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if mask & !(1 << v) & !self.adj[v] != 0 {
                return false;
            }
        }
        true
    }
}

fn mask_to_vec(mut mask: u32) -> Vec<usize> {
    let mut out = Vec::new();
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize);
        mask &= mask - 1;
    }
    out
}

/// A maximum clique (ascending vertex ids) by Bron–Kerbosch with pivoting.
pub fn max_clique_exact(g: &SmallGraph) -> Vec<usize> {
    fn expand(g: &SmallGraph, r: u32, mut p: u32, mut x: u32, best: &mut u32) {
        if p == 0 && x == 0 {
            if r.count_ones() > best.count_ones() {
                *best = r;
            }
            return;
        }
        if r.count_ones() + p.count_ones() <= best.count_ones() {
            return;
        }
        let px = p | x;
        let pivot = mask_to_vec(px)
            .into_iter()
            .max_by_key(|&u| (p & g.adj[u]).count_ones())
            .expect("p | x nonempty");
        let mut candidates = p & !g.adj[pivot];
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            expand(g, r | 1 << v, p & g.adj[v], x & g.adj[v], best);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }
    let mut best = 0u32;
    if !g.is_empty() {
        expand(g, 0, g.all(), 0, &mut best);
    }
    mask_to_vec(best)
}

/// Minimum number of cliques partitioning the vertex set.
pub fn min_clique_cover_exact(g: &SmallGraph) -> Result<usize> {
    let n = g.len();
    if n > MAX_COVER_VERTICES {
        return Err(Error::Unsupported(format!(
            "clique cover oracle handles at most {MAX_COVER_VERTICES} vertices"
        )));
    }
    let full = g.all() as usize;
    let mut best = vec![usize::MAX; full + 1];
    best[0] = 0;
    // Subsets in increasing order; every proper subset is solved first.
    for set in 1..=full {
        let low = set.trailing_zeros();
        let rest = set & !(1 << low);
        // Cliques containing the lowest vertex: enumerate subsets of the rest.
        let mut sub = rest;
        loop {
            let clique = sub | 1 << low;
            if g.is_clique_mask(clique as u32) {
                let remaining = set & !clique;
                let cand = best[remaining].saturating_add(1);
                if cand < best[set] {
                    best[set] = cand;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    Ok(best[full])
}

/// The one packet of `combo` outside `has`, or `None` when zero or several are unknown.
pub fn verify_instant_decodability(combo: &[usize], has: &[usize]) -> Option<usize> {
    let unknown: Vec<usize> = combo.iter().copied().filter(|j| !has.contains(j)).collect();
    match unknown.as_slice() {
        [only] => Some(*only),
        _ => None,
    }
}

/// Schoolbook field arithmetic independent of the table-driven implementation.
#[derive(Debug, Clone, Copy)]
struct SlowField {
    order: u32,
    poly: Option<u32>,
}

impl SlowField {
    fn new(spec: &FieldSpec) -> Self {
        let poly = match spec.kind() {
            FieldKind::Prime => None,
            FieldKind::BinaryExtension { poly, .. } => Some(poly),
        };
        SlowField {
            order: spec.order(),
            poly,
        }
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        match self.poly {
            None => (a + b) % self.order,
            Some(_) => a ^ b,
        }
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        match self.poly {
            None => ((a as u64 * b as u64) % self.order as u64) as u32,
            Some(poly) => {
                let top = self.order;
                let mut acc = 0u32;
                let mut a = a;
                let mut b = b;
                while b != 0 {
                    if b & 1 == 1 {
                        acc ^= a;
                    }
                    b >>= 1;
                    a <<= 1;
                    if a & top != 0 {
                        a ^= poly;
                    }
                }
                acc
            }
        }
    }
}

/// Recomputes `x_i = Σ_j a_ij p_j` for every client and compares with the
/// messages. Inputs are raw field values.
pub fn exhaustive_decode_check(
    spec: &FieldSpec,
    a: &[Vec<u16>],
    packets: &[Vec<u16>],
    messages: &[Vec<u16>],
) -> Result<bool> {
    let n = a.len();
    if n > MAX_DECODE_CHECK_N {
        return Err(Error::Unsupported(format!(
            "decode oracle handles at most {MAX_DECODE_CHECK_N} clients"
        )));
    }
    if packets.len() != n || messages.len() != n || a.iter().any(|row| row.len() != n) {
        return Ok(false);
    }
    let f = SlowField::new(spec);
    let m_len = messages.first().map_or(0, Vec::len);
    if packets.iter().chain(messages).any(|v| v.len() != m_len) {
        return Ok(false);
    }
    for (row, msg) in a.iter().zip(messages) {
        for (k, &expected) in msg.iter().enumerate() {
            let mut acc = 0u32;
            for (j, &coef) in row.iter().enumerate() {
                acc = f.add(acc, f.mul(coef as u32, packets[j][k] as u32));
            }
            if acc != expected as u32 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complete(n: usize) -> SmallGraph {
        let mut g = SmallGraph::new(n).unwrap();
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Every subset checked directly.
    fn brute_clique_number(g: &SmallGraph) -> usize {
        (0u32..1 << g.len())
            .filter(|&m| g.is_clique_mask(m))
            .map(u32::count_ones)
            .max()
            .unwrap_or(0) as usize
    }

    #[test]
    fn max_clique_examples() {
        assert_eq!(max_clique_exact(&complete(4)).len(), 4);
        let c5 = SmallGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(max_clique_exact(&c5).len(), 2);
        assert!(max_clique_exact(&SmallGraph::new(0).unwrap()).is_empty());
        assert_eq!(max_clique_exact(&SmallGraph::new(3).unwrap()).len(), 1);
        assert!(SmallGraph::new(21).is_err());
    }

    #[test]
    fn cover_examples() {
        assert_eq!(min_clique_cover_exact(&complete(6)).unwrap(), 1);
        assert_eq!(min_clique_cover_exact(&SmallGraph::new(5).unwrap()).unwrap(), 5);
        let c5 = SmallGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(min_clique_cover_exact(&c5).unwrap(), 3);
        assert_eq!(min_clique_cover_exact(&SmallGraph::new(0).unwrap()).unwrap(), 0);
        assert!(min_clique_cover_exact(&SmallGraph::new(11).unwrap()).is_err());
    }

    #[test]
    fn instant_decodability_cases() {
        assert_eq!(verify_instant_decodability(&[1, 2], &[1, 2, 3]), None);
        assert_eq!(verify_instant_decodability(&[1, 2, 5], &[1, 2]), Some(5));
        assert_eq!(verify_instant_decodability(&[4, 5], &[1]), None);
    }

    #[test]
    fn slow_field_matches_known_products() {
        let f = SlowField::new(&FieldSpec::gf256());
        assert_eq!(f.mul(0x57, 0x83), 0xC1);
        assert_eq!(f.add(0x57, 0x83), 0xD4);
        let p = SlowField::new(&FieldSpec::prime(5).unwrap());
        assert_eq!(p.mul(3, 4), 2);
        assert_eq!(p.add(3, 4), 2);
    }

    #[test]
    fn decode_check_identity_and_corruption() {
        let spec = FieldSpec::prime(7).unwrap();
        let a = vec![vec![1, 0], vec![0, 1]];
        let p = vec![vec![3, 4], vec![5, 6]];
        assert!(exhaustive_decode_check(&spec, &a, &p, &p).unwrap());
        let mut bad = p.clone();
        bad[1][0] = 0;
        assert!(!exhaustive_decode_check(&spec, &a, &bad, &p).unwrap());
        let two = vec![vec![2, 3], vec![1, 1]];
        // x_1 = 2*3 + 3*5 = 21 = 0, x_2 = 3 + 5 = 1 (first coordinate).
        let msgs = vec![vec![0, (2 * 4 + 3 * 6) % 7], vec![1, (4 + 6) % 7]];
        assert!(exhaustive_decode_check(&spec, &two, &p, &msgs).unwrap());
    }

    proptest! {
        #[test]
        fn bron_kerbosch_matches_subset_scan(n in 0usize..12, edges in proptest::collection::vec((0usize..12, 0usize..12), 0..60)) {
            let mut g = SmallGraph::new(n).unwrap();
            for (a, b) in edges {
                if a < n && b < n {
                    g.add_edge(a, b);
                }
            }
            let c = max_clique_exact(&g);
            prop_assert!(g.is_clique_mask(c.iter().fold(0u32, |m, &v| m | 1 << v)));
            prop_assert_eq!(c.len(), brute_clique_number(&g));
        }

        #[test]
        fn cover_bounds(n in 1usize..9, edges in proptest::collection::vec((0usize..9, 0usize..9), 0..30)) {
            let mut g = SmallGraph::new(n).unwrap();
            for (a, b) in edges {
                if a < n && b < n {
                    g.add_edge(a, b);
                }
            }
            let cover = min_clique_cover_exact(&g).unwrap();
            let omega = max_clique_exact(&g).len();
            prop_assert!(cover >= n.div_ceil(omega));
            prop_assert!(cover <= n);
        }
    }
}
