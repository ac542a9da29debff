//! Packet recovery by cooperation inside one cluster.
//!
//! Every member builds its local IDNC graph and greedy clique; the member
//! with the largest clique transmits the field sum of that clique's packets.

use rand::Rng;

use crate::central::{audit_round, commit_round, Credit, RecoveryOptions, RoundRecord};
use crate::channel::{deliver_round, ChannelParams, ClientState, Cluster, PayloadBook, Transmitter};
use crate::error::{usage, Error, Result};
use crate::idnc::{build_local, compute_weights, Clique};

#[derive(Debug, Clone, PartialEq)]
pub struct CoopMetrics {
    /// Cooperative transmissions T_c.
    pub transmissions: usize,
    /// Size of the union of the members' Wants sets before recovery.
    pub union_wants: usize,
    /// Uncoded baseline U_c.
    pub uncoded: f64,
    pub transcript: Vec<RoundRecord>,
    pub removals: Vec<usize>,
}

impl CoopMetrics {
    /// `U_c / T_c`, undefined when nothing was transmitted.
    pub fn gain(&self) -> Option<f64> {
        (self.transmissions > 0).then(|| self.uncoded / self.transmissions as f64)
    }
}

/// `|∪ Ω_i| / (1 − p′)` over the given member states.
pub fn uncoded_baseline(members: &[ClientState], p_prime: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_prime) {
        return Err(Error::Domain(format!("uncoded baseline undefined for p'={p_prime}")));
    }
    Ok(union_wants(members) as f64 / (1.0 - p_prime))
}

fn union_wants(members: &[ClientState]) -> usize {
    let Some(first) = members.first() else { return 0 };
    let mut union = first.wants().clone();
    for s in &members[1..] {
        union.union_with(s.wants());
    }
    union.count_ones(..)
}

/// A wanted packet that no member holds, if any.
fn uncovered_packet(members: &[ClientState]) -> Option<usize> {
    let first = members.first()?;
    let mut wanted = first.wants().clone();
    let mut held = first.has().clone();
    for s in &members[1..] {
        wanted.union_with(s.wants());
        held.union_with(s.has());
    }
    wanted.difference_with(&held);
    wanted.ones().next()
}

/// Largest local greedy clique over all members; ties go to the lowest id.
fn choose_transmitter(members: &[ClientState]) -> Option<(usize, Clique)> {
    let mut best: Option<(usize, Clique)> = None;
    for s in members {
        let local = build_local(members, s.id);
        let weights = compute_weights(&local, members);
        let clique = local.greedy_clique(&weights);
        if clique.is_empty() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| clique.len() > b.len()) {
            best = Some((s.id, clique));
        }
    }
    best
}

/// Runs cooperative recovery for `cluster`. `states` holds every client,
/// indexed by id; only members take part. Member states are updated in place.
pub fn run_coop<R: Rng + ?Sized>(
    states: &mut [ClientState],
    cluster: &Cluster,
    params: &ChannelParams,
    rng: &mut R,
    book: Option<&mut PayloadBook>,
    opts: &RecoveryOptions,
) -> Result<CoopMetrics> {
    if states.iter().enumerate().any(|(i, s)| s.id != i) {
        return Err(usage("client states must be indexed by id"));
    }
    if let Some(&c) = cluster.members().iter().find(|&&c| c >= states.len()) {
        return Err(usage(format!("cluster member {c} has no state")));
    }
    let mut members: Vec<ClientState> = cluster.members().iter().map(|&c| states[c].clone()).collect();
    let result = recover(&mut members, cluster, params, rng, book, opts);
    for m in members {
        let id = m.id;
        states[id] = m;
    }
    result
}

fn recover<R: Rng + ?Sized>(
    members: &mut [ClientState],
    cluster: &Cluster,
    params: &ChannelParams,
    rng: &mut R,
    mut book: Option<&mut PayloadBook>,
    opts: &RecoveryOptions,
) -> Result<CoopMetrics> {
    if let Some(packet) = uncovered_packet(members) {
        return Err(Error::Infeasible { packet });
    }
    let union = union_wants(members);
    let uncoded = if params.p_prime < 1.0 {
        uncoded_baseline(members, params.p_prime)?
    } else {
        f64::INFINITY
    };
    let mut transcript = Vec::new();
    let mut removals = Vec::new();
    let mut round = 0;
    while members.iter().any(|s| !s.is_decoded()) {
        if round >= opts.round_cap || params.p_prime >= 1.0 {
            return Err(Error::RoundCap { rounds: opts.round_cap });
        }
        round += 1;
        let (u0, clique) = match choose_transmitter(members) {
            Some(choice) => choice,
            None => {
                let packet = uncovered_packet(members).unwrap_or(0);
                return Err(Error::Infeasible { packet });
            }
        };
        let mut listeners: Vec<usize> = clique.vertices.iter().map(|v| v.client).collect();
        listeners.sort_unstable();
        let receivers = deliver_round(
            Transmitter::Client(u0),
            cluster.members(),
            |c| listeners.binary_search(&c).is_ok(),
            params.p_prime,
            rng,
        );
        let credited = clique
            .vertices
            .iter()
            .filter(|v| receivers.contains(&v.client))
            .map(|v| Credit {
                client: v.client,
                packet: v.packet,
                wanted: true,
            })
            .collect();
        let record = RoundRecord {
            round,
            transmitter: Transmitter::Client(u0),
            packets: clique.packets,
            targets: clique.vertices,
            listeners,
            receivers,
            credited,
        };
        audit_round(&record, members)?;
        commit_round(&record, members, book.as_deref_mut())?;
        removals.push(record.removed_count());
        if opts.keep_transcript {
            transcript.push(record);
        }
    }
    Ok(CoopMetrics {
        transmissions: round,
        union_wants: union,
        uncoded,
        transcript,
        removals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idnc::tests::intro_states;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lossless() -> ChannelParams {
        ChannelParams::new(0.0, 0.0).unwrap()
    }

    #[test]
    fn intro_example_needs_two_transmissions() {
        let mut states = intro_states();
        let cluster = Cluster::first(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = run_coop(
            &mut states,
            &cluster,
            &lossless(),
            &mut rng,
            None,
            &RecoveryOptions::default(),
        )
        .unwrap();
        assert_eq!(m.transmissions, 2);
        assert_eq!(m.transcript[0].targets.len(), 3);
        assert_eq!(m.transcript[1].targets.len(), 1);
        assert_eq!(m.uncoded, 4.0);
        assert_eq!(m.gain(), Some(2.0));
        assert!(states.iter().all(ClientState::is_decoded));
    }

    #[test]
    fn nothing_wanted() {
        let mut states = vec![ClientState::new(0, 2, &[0], &[0]).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = run_coop(
            &mut states,
            &Cluster::first(1).unwrap(),
            &lossless(),
            &mut rng,
            None,
            &RecoveryOptions::default(),
        )
        .unwrap();
        assert_eq!(m.transmissions, 0);
        assert_eq!(m.gain(), None);
    }

    #[test]
    fn single_missing_packet() {
        let mut states = vec![
            ClientState::new(0, 6, &[], &[0, 1, 2, 3, 4, 5]).unwrap(),
            ClientState::new(1, 6, &[4], &[0]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = run_coop(
            &mut states,
            &Cluster::first(2).unwrap(),
            &lossless(),
            &mut rng,
            None,
            &RecoveryOptions::default(),
        )
        .unwrap();
        assert_eq!(m.transmissions, 1);
        assert_eq!(m.transcript[0].transmitter, Transmitter::Client(0));
    }

    #[test]
    fn uncovered_packet_is_infeasible() {
        let mut states = vec![
            ClientState::new(0, 3, &[2], &[0]).unwrap(),
            ClientState::new(1, 3, &[0], &[1]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = run_coop(
            &mut states,
            &Cluster::first(2).unwrap(),
            &lossless(),
            &mut rng,
            None,
            &RecoveryOptions::default(),
        );
        assert_eq!(err.unwrap_err(), Error::Infeasible { packet: 2 });
    }

    #[test]
    fn full_link_erasure_hits_round_cap() {
        let mut states = intro_states();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = ChannelParams::new(0.0, 1.0).unwrap();
        let err = run_coop(
            &mut states,
            &Cluster::first(4).unwrap(),
            &params,
            &mut rng,
            None,
            &RecoveryOptions::default(),
        );
        assert!(matches!(err, Err(Error::RoundCap { .. })));
    }

    #[test]
    fn uncoded_baseline_examples() {
        let disjoint: Vec<ClientState> = (0..3).map(|i| ClientState::new(i, 3, &[i], &[]).unwrap()).collect();
        assert_eq!(uncoded_baseline(&disjoint, 0.0).unwrap(), 3.0);
        let same: Vec<ClientState> = (0..5).map(|i| ClientState::new(i, 3, &[0], &[]).unwrap()).collect();
        assert_eq!(uncoded_baseline(&same, 0.0).unwrap(), 1.0);
        let eight = vec![ClientState::new(0, 8, &(0..8).collect::<Vec<_>>(), &[]).unwrap()];
        assert!((uncoded_baseline(&eight, 0.05).unwrap() - 8.0 / 0.95).abs() < 1e-12);
        assert!(matches!(uncoded_baseline(&eight, 1.0), Err(Error::Domain(_))));
    }

    fn feasible_cluster(seed: u64, n: usize, size: usize) -> Vec<ClientState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut has: Vec<Vec<usize>> = (0..size)
            .map(|_| (0..n).filter(|_| rng.gen_bool(0.5)).collect())
            .collect();
        for j in 0..n {
            if !has.iter().any(|h| h.contains(&j)) {
                has[rng.gen_range(0..size)].push(j);
            }
        }
        (0..size)
            .map(|i| {
                let req: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
                ClientState::new(i, n, &req, &has[i]).unwrap()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn lossless_rounds_each_remove_a_vertex(seed in any::<u64>(), size in 2usize..7) {
            let mut states = feasible_cluster(seed, 10, size);
            let total: usize = states.iter().map(ClientState::wants_count).sum();
            let cluster = Cluster::first(size).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = run_coop(&mut states, &cluster, &lossless(), &mut rng, None, &RecoveryOptions::default()).unwrap();
            prop_assert!(m.transmissions <= total);
            prop_assert!(m.removals.iter().all(|&r| r >= 1));
        }

        #[test]
        fn lossy_runs_decode_and_transmitters_hold_packets(seed in any::<u64>(), size in 2usize..7, p in 0.0f64..0.7) {
            let mut states = feasible_cluster(seed, 10, size);
            let cluster = Cluster::first(size).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = ChannelParams::new(0.0, p).unwrap();
            let before = states.clone();
            let m = run_coop(&mut states, &cluster, &params, &mut rng, None, &RecoveryOptions::default()).unwrap();
            prop_assert!(states.iter().all(|s| s.is_decoded() && s.check_invariants()));
            prop_assert_eq!(m.transmissions, m.transcript.len());
            let initial: usize = before.iter().map(ClientState::wants_count).sum();
            prop_assert_eq!(m.removals.iter().sum::<usize>(), initial);
        }
    }
}
