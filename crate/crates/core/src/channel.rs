//! Erasure broadcast downlink, client-to-client links, and the per-client
//! reception status (Has / Wants / Lacks sets).

use fixedbitset::FixedBitSet;
use rand::Rng;

use crate::codec::{DecodingMatrix, Packet};
use crate::error::{usage, Error, Result};
use crate::galois::{Elem, Field};

/// Erasure probabilities of the downlink (`p`) and of client-to-client links (`p_prime`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub p: f64,
    pub p_prime: f64,
}

impl ChannelParams {
    pub fn new(p: f64, p_prime: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("p_prime", p_prime)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(usage(format!("{name}={v} is not a probability")));
            }
        }
        Ok(ChannelParams { p, p_prime })
    }

    pub fn downlink(p: f64) -> Result<Self> {
        ChannelParams::new(p, 0.0)
    }
}

/// Who sends a packet in a given round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transmitter {
    BaseStation,
    Client(usize),
}

/// Reception status of one packet at one client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Has = 1,
    Wants = 2,
    Lacks = 3,
}

/// One client's view: which packets it holds, which it still needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientState {
    pub id: usize,
    has: FixedBitSet,
    required: FixedBitSet,
    wants: FixedBitSet,
    /// Transmissions this client kept its radio on for.
    pub listen_count: u64,
}

impl ClientState {
    pub fn new(id: usize, n_packets: usize, required: &[usize], has: &[usize]) -> Result<Self> {
        let mut req = FixedBitSet::with_capacity(n_packets);
        let mut got = FixedBitSet::with_capacity(n_packets);
        for &j in required {
            if j >= n_packets {
                return Err(usage(format!("required packet {j} out of range")));
            }
            req.insert(j);
        }
        for &j in has {
            if j >= n_packets {
                return Err(usage(format!("held packet {j} out of range")));
            }
            got.insert(j);
        }
        Ok(Self::from_sets(id, req, got))
    }

    fn from_sets(id: usize, required: FixedBitSet, has: FixedBitSet) -> Self {
        let mut wants = required.clone();
        wants.difference_with(&has);
        ClientState {
            id,
            has,
            required,
            wants,
            listen_count: 0,
        }
    }

    pub fn n_packets(&self) -> usize {
        self.has.len()
    }

    pub fn has(&self) -> &FixedBitSet {
        &self.has
    }

    pub fn wants(&self) -> &FixedBitSet {
        &self.wants
    }

    pub fn required(&self) -> &FixedBitSet {
        &self.required
    }

    /// Packets neither held nor needed.
    pub fn lacks(&self) -> FixedBitSet {
        let mut l = FixedBitSet::with_capacity(self.n_packets());
        l.insert_range(..);
        l.difference_with(&self.has);
        l.difference_with(&self.required);
        l
    }

    pub fn holds(&self, j: usize) -> bool {
        self.has.contains(j)
    }

    pub fn wants_count(&self) -> usize {
        self.wants.count_ones(..)
    }

    pub fn is_decoded(&self) -> bool {
        self.wants.is_clear()
    }

    pub fn status(&self, j: usize) -> Status {
        if self.has.contains(j) {
            Status::Has
        } else if self.required.contains(j) {
            Status::Wants
        } else {
            Status::Lacks
        }
    }

    /// Records a newly obtained packet; returns its status before reception.
    pub fn receive(&mut self, j: usize) -> Status {
        let before = self.status(j);
        self.has.insert(j);
        self.wants.set(j, false);
        before
    }

    /// Re-derives Ω from Γ and R and checks the three-way partition.
    pub fn check_invariants(&self) -> bool {
        let mut expected = self.required.clone();
        expected.difference_with(&self.has);
        let lacks = self.lacks();
        expected == self.wants
            && self.wants.is_disjoint(&self.has)
            && lacks.is_disjoint(&self.wants)
            && lacks.is_disjoint(&self.has)
            && self.has.count_ones(..) + self.wants.count_ones(..) + lacks.count_ones(..) == self.n_packets()
            && (self.is_decoded() == self.required.is_subset(&self.has))
    }
}

/// `n_clients × n_packets` matrix of reception statuses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatusMatrix {
    n_packets: usize,
    entries: Vec<Status>,
}

impl StatusMatrix {
    pub fn from_states(states: &[ClientState]) -> Self {
        let n_packets = states.first().map_or(0, ClientState::n_packets);
        let entries = states
            .iter()
            .flat_map(|s| (0..n_packets).map(move |j| s.status(j)))
            .collect();
        StatusMatrix { n_packets, entries }
    }

    pub fn get(&self, client: usize, packet: usize) -> Status {
        self.entries[client * self.n_packets + packet]
    }

    pub fn n_clients(&self) -> usize {
        self.entries.len().checked_div(self.n_packets).unwrap_or(0)
    }
}

/// Result of the initial broadcast phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastOutcome {
    /// Γ_i per client.
    pub has: Vec<FixedBitSet>,
    /// Base-station transmissions used (`n` centrally, more with repeats).
    pub transmissions: usize,
    /// Transmissions each client listened to.
    pub listens: Vec<u64>,
}

impl BroadcastOutcome {
    /// Wraps hand-made Has sets (no transmissions, no listens).
    pub fn from_has(has: Vec<FixedBitSet>) -> Self {
        let n = has.len();
        BroadcastOutcome {
            has,
            transmissions: 0,
            listens: vec![0; n],
        }
    }
}

#[inline]
fn received<R: Rng + ?Sized>(rng: &mut R, erasure: f64) -> bool {
    rng.gen::<f64>() >= erasure
}

/// Every client listens to all `n_packets` transmissions; each is erased
/// independently with probability `p`.
pub fn initial_broadcast_centralized<R: Rng + ?Sized>(
    n_packets: usize,
    n_clients: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> BroadcastOutcome {
    let mut has = vec![FixedBitSet::with_capacity(n_packets); n_clients];
    for j in 0..n_packets {
        for h in has.iter_mut() {
            if received(rng, params.p) {
                h.insert(j);
            }
        }
    }
    BroadcastOutcome {
        has,
        transmissions: n_packets,
        listens: vec![n_packets as u64; n_clients],
    }
}

/// The base station repeats each packet until at least one cluster member
/// holds it. Clients outside the cluster receive nothing.
pub fn initial_broadcast_cooperative<R: Rng + ?Sized>(
    n_packets: usize,
    n_clients: usize,
    cluster: &Cluster,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<BroadcastOutcome> {
    if params.p >= 1.0 && n_packets > 0 {
        return Err(Error::NonTermination);
    }
    if cluster.members().iter().any(|&c| c >= n_clients) {
        return Err(usage("cluster member out of range"));
    }
    let mut has = vec![FixedBitSet::with_capacity(n_packets); n_clients];
    let mut listens = vec![0u64; n_clients];
    let mut transmissions = 0;
    for j in 0..n_packets {
        loop {
            transmissions += 1;
            let mut any = false;
            for &c in cluster.members() {
                listens[c] += 1;
                if received(rng, params.p) {
                    has[c].insert(j);
                    any = true;
                }
            }
            if any {
                break;
            }
        }
    }
    Ok(BroadcastOutcome {
        has,
        transmissions,
        listens,
    })
}

/// Client states and status matrix from the decoding matrix supports and the broadcast outcome.
pub fn build_status(matrix: &DecodingMatrix, broadcast: &BroadcastOutcome) -> Result<(StatusMatrix, Vec<ClientState>)> {
    let supports: Vec<Vec<usize>> = (0..matrix.n()).map(|i| matrix.support(i).to_vec()).collect();
    let states = states_from_supports(matrix.n(), &supports, broadcast)?;
    Ok((StatusMatrix::from_states(&states), states))
}

/// Same as [`build_status`] for explicit required sets.
pub fn states_from_supports(
    n_packets: usize,
    supports: &[Vec<usize>],
    broadcast: &BroadcastOutcome,
) -> Result<Vec<ClientState>> {
    if supports.len() != broadcast.has.len() {
        return Err(usage("one Has set per client required"));
    }
    supports
        .iter()
        .zip(&broadcast.has)
        .enumerate()
        .map(|(i, (support, has))| {
            if has.len() != n_packets {
                return Err(usage("Has set sized for a different packet count"));
            }
            let mut state = ClientState::new(i, n_packets, support, &[])?;
            state.has = has.clone();
            state.wants = state.required.clone();
            state.wants.difference_with(has);
            state.listen_count = broadcast.listens.get(i).copied().unwrap_or(0);
            Ok(state)
        })
        .collect()
}

/// One transmission over the erasure links: a Bernoulli draw is made for
/// every candidate (in order, so paired runs consume identical randomness)
/// and the eligible candidates that received it are returned. A client
/// transmitter never receives its own packet.
pub fn deliver_round<R, F>(
    transmitter: Transmitter,
    candidates: &[usize],
    eligible: F,
    erasure: f64,
    rng: &mut R,
) -> Vec<usize>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> bool,
{
    let mut out = Vec::new();
    for &c in candidates {
        let got = received(rng, erasure);
        if got && transmitter != Transmitter::Client(c) && eligible(c) {
            out.push(c);
        }
    }
    out
}

/// Members of a cooperating cluster (ascending client ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    members: Vec<usize>,
}

impl Cluster {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        let len = members.len();
        members.dedup();
        if members.is_empty() || members.len() != len {
            return Err(usage("cluster must be nonempty with distinct members"));
        }
        Ok(Cluster { members })
    }

    /// Clients `0..size`.
    pub fn first(size: usize) -> Result<Self> {
        Cluster::new((0..size).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, client: usize) -> bool {
        self.members.binary_search(&client).is_ok()
    }
}

/// Physical packet buffers: what payload each client actually holds, plus the
/// base station's full copy.
#[derive(Debug, Clone)]
pub struct PayloadBook {
    field: Field,
    source: Vec<Packet>,
    buffers: Vec<Vec<Option<Vec<Elem>>>>,
}

impl PayloadBook {
    pub fn new(field: Field, source: Vec<Packet>, has: &[FixedBitSet]) -> Self {
        let buffers = has
            .iter()
            .map(|h| {
                source
                    .iter()
                    .map(|p| h.contains(p.id).then(|| p.payload.clone()))
                    .collect()
            })
            .collect();
        PayloadBook { field, source, buffers }
    }

    pub fn buffer(&self, client: usize) -> &[Option<Vec<Elem>>] {
        &self.buffers[client]
    }

    /// Field sum of `packets` as formed by `by`.
    pub fn combine(&self, by: Transmitter, packets: &[usize]) -> Result<Vec<Elem>> {
        let m_len = self.source.first().map_or(0, |p| p.payload.len());
        let mut acc = vec![Elem::ZERO; m_len];
        for &j in packets {
            let payload = match by {
                Transmitter::BaseStation => Some(self.source[j].payload.as_slice()),
                Transmitter::Client(c) => self.buffers[c][j].as_deref(),
            };
            let payload = payload.ok_or_else(|| usage(format!("transmitter {by:?} does not hold packet {j}")))?;
            self.field.add_assign(&mut acc, payload);
        }
        Ok(acc)
    }

    /// Strips the known summands from `combo` and stores the one unknown packet.
    pub fn absorb(&mut self, client: usize, unknown: usize, packets: &[usize], combo: &[Elem]) -> Result<()> {
        let mut value = combo.to_vec();
        for &j in packets.iter().filter(|&&j| j != unknown) {
            let known = self.buffers[client][j]
                .as_deref()
                .ok_or_else(|| usage(format!("client {client} lacks summand {j}")))?;
            self.field.sub_assign(&mut value, known);
        }
        self.buffers[client][unknown] = Some(value);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(n: usize, items: &[usize]) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        for &i in items {
            s.insert(i);
        }
        s
    }

    #[test]
    fn params_validated() {
        assert!(ChannelParams::new(-0.1, 0.0).is_err());
        assert!(ChannelParams::new(0.5, 1.5).is_err());
        assert!(ChannelParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn centralized_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = initial_broadcast_centralized(10, 4, &ChannelParams::downlink(0.0).unwrap(), &mut rng);
        assert!(out.has.iter().all(|h| h.count_ones(..) == 10));
        assert_eq!(out.listens, vec![10; 4]);
        let out = initial_broadcast_centralized(10, 4, &ChannelParams::downlink(1.0).unwrap(), &mut rng);
        assert!(out.has.iter().all(|h| h.is_clear()));
    }

    #[test]
    fn centralized_mean_reception() {
        // |Γ_i| ~ Binomial(20, 0.7): mean 14, sd sqrt(4.2). Over 1000 seeds the
        // sample mean has sd sqrt(4.2/1000).
        let params = ChannelParams::downlink(0.3).unwrap();
        let mut total = 0usize;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = initial_broadcast_centralized(20, 1, &params, &mut rng);
            total += out.has[0].count_ones(..);
        }
        let mean = total as f64 / 1000.0;
        let sigma = (4.2f64 / 1000.0).sqrt();
        assert!((mean - 14.0).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn cooperative_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cluster = Cluster::first(3).unwrap();
        let out =
            initial_broadcast_cooperative(8, 5, &cluster, &ChannelParams::downlink(0.0).unwrap(), &mut rng).unwrap();
        assert_eq!(out.transmissions, 8);
        assert!(out.has[..3].iter().all(|h| h.count_ones(..) == 8));
        assert!(out.has[3..].iter().all(|h| h.is_clear()));

        let solo = Cluster::first(1).unwrap();
        let out =
            initial_broadcast_cooperative(50, 1, &solo, &ChannelParams::downlink(0.9).unwrap(), &mut rng).unwrap();
        assert_eq!(out.has[0].count_ones(..), 50);
        assert!(out.transmissions >= 50);

        assert_eq!(
            initial_broadcast_cooperative(3, 3, &cluster, &ChannelParams::downlink(1.0).unwrap(), &mut rng),
            Err(Error::NonTermination)
        );
    }

    #[test]
    fn cooperative_covers_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cluster = Cluster::new(vec![1, 3, 4]).unwrap();
        for _ in 0..50 {
            let out = initial_broadcast_cooperative(30, 6, &cluster, &ChannelParams::downlink(0.7).unwrap(), &mut rng)
                .unwrap();
            let mut union = FixedBitSet::with_capacity(30);
            for &c in cluster.members() {
                union.union_with(&out.has[c]);
            }
            assert_eq!(union.count_ones(..), 30);
        }
    }

    #[test]
    fn cooperative_marginal_matches_repeat_until_covered() {
        // 1 - p_eff = (1 - p) / (1 - p^2) = 2/3 at p = 0.5, |C| = 2.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cluster = Cluster::first(2).unwrap();
        let packets = 100_000;
        let out = initial_broadcast_cooperative(packets, 2, &cluster, &ChannelParams::downlink(0.5).unwrap(), &mut rng)
            .unwrap();
        let freq = out.has[0].count_ones(..) as f64 / packets as f64;
        let target = 2.0 / 3.0;
        let sigma = (target * (1.0 - target) / packets as f64).sqrt();
        assert!((freq - target).abs() <= 3.0 * sigma, "{freq}");
    }

    #[test]
    fn intro_example_status() {
        // Γ_1 = {1,2,3}, R_1 = {2,3,4} in 1-based ids.
        let has = vec![
            set(4, &[0, 1, 2]),
            set(4, &[1, 2, 3]),
            set(4, &[2, 3, 0]),
            set(4, &[3, 0, 1]),
        ];
        let supports: Vec<Vec<usize>> = (0..4).map(|i| (0..4).filter(|&j| j != i).collect()).collect();
        let states = states_from_supports(4, &supports, &BroadcastOutcome::from_has(has)).unwrap();
        assert_eq!(states[0].wants().ones().collect::<Vec<_>>(), vec![3]);
        assert!(states[0].lacks().is_clear());
        let s = StatusMatrix::from_states(&states);
        assert_eq!(s.get(0, 3), Status::Wants);
        assert_eq!(s.get(0, 0), Status::Has);
        for st in &states {
            assert!(st.check_invariants());
        }
    }

    #[test]
    fn full_and_empty_has() {
        let supports = vec![vec![1, 3], vec![0, 2]];
        let full = BroadcastOutcome::from_has(vec![set(4, &[0, 1, 2, 3]), set(4, &[])]);
        let states = states_from_supports(4, &supports, &full).unwrap();
        assert!(states[0].is_decoded());
        assert_eq!(StatusMatrix::from_states(&states).get(0, 2), Status::Has);
        assert_eq!(states[1].wants_count(), 2);
        assert_eq!(states[1].lacks().count_ones(..), 2);
    }

    #[test]
    fn receive_moves_packets() {
        let mut s = ClientState::new(0, 5, &[0, 1], &[4]).unwrap();
        assert_eq!(s.receive(1), Status::Wants);
        assert_eq!(s.receive(2), Status::Lacks);
        assert_eq!(s.receive(4), Status::Has);
        assert!(s.check_invariants());
        assert!(!s.is_decoded());
        s.receive(0);
        assert!(s.is_decoded() && s.check_invariants());
    }

    #[test]
    fn delivery_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let all = [0, 1, 2, 3];
        assert_eq!(
            deliver_round(Transmitter::BaseStation, &all, |_| true, 0.0, &mut rng),
            vec![0, 1, 2, 3]
        );
        assert!(deliver_round(Transmitter::BaseStation, &all, |_| true, 1.0, &mut rng).is_empty());
        assert_eq!(
            deliver_round(Transmitter::Client(2), &all, |_| true, 0.0, &mut rng),
            vec![0, 1, 3]
        );
        assert_eq!(
            deliver_round(Transmitter::BaseStation, &all, |c| c % 2 == 0, 0.0, &mut rng),
            vec![0, 2]
        );
    }

    #[test]
    fn payload_absorb_recovers_missing_summand() {
        let f = Field::gf256();
        let source: Vec<Packet> = (0..3)
            .map(|id| Packet {
                id,
                payload: vec![Elem(10 * id as u16 + 1), Elem(7)],
            })
            .collect();
        let has = vec![set(3, &[0, 1]), set(3, &[0, 1, 2])];
        let mut book = PayloadBook::new(f, source.clone(), &has);
        let combo = book.combine(Transmitter::Client(1), &[0, 1, 2]).unwrap();
        assert!(book.combine(Transmitter::Client(0), &[2]).is_err());
        book.absorb(0, 2, &[0, 1, 2], &combo).unwrap();
        assert_eq!(book.buffer(0)[2].as_deref(), Some(source[2].payload.as_slice()));
    }

    #[test]
    fn cluster_validation() {
        assert!(Cluster::new(vec![]).is_err());
        assert!(Cluster::new(vec![1, 1]).is_err());
        let c = Cluster::new(vec![3, 1]).unwrap();
        assert_eq!(c.members(), &[1, 3]);
        assert!(c.contains(3) && !c.contains(2));
    }
}
