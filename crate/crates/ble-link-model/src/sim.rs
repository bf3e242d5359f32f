//! Monte Carlo cross-checks for the closed-form models.
//!
//! Two modes share the result type. Transaction mode replays connection
//! events packet by packet under i.i.d. bit errors and the four
//! retransmission rules, giving an empirical transaction success ratio to
//! compare against the Markov chain. Coexistence mode lays a victim and a
//! disturber timeline on a shared clock and counts victim transactions
//! that are hit while a disturber packet is on the air, giving an
//! empirical failure probability to compare against the closed form.
//!
//! Every run owns a private ChaCha8 stream seeded with
//! `master_seed ^ run_index`, runs are aggregated in index order, and all
//! counts are integers, so results are byte-identical no matter how many
//! threads execute the runs.

use crate::scenario::{DisturberConfig, Scenario, VictimConfig, DATA_CHANNEL_COUNT, IFS_US};
use crate::throughput::success_prob;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Channel relationship between victim and disturber in coexistence mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Both connections always occupy the same channel (hopping disabled).
    SameChannel,
    /// Each event independently picks one of the 37 data channels.
    Uniform37,
    /// The connections never share a channel; collisions are impossible.
    Disjoint,
}

/// Run counts and seeding shared by both simulator modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimProtocol {
    pub intervals_per_run: u32,
    pub runs: u32,
    pub master_seed: u64,
    pub channel_mode: ChannelMode,
}

impl Default for SimProtocol {
    fn default() -> Self {
        SimProtocol {
            intervals_per_run: 1000,
            runs: 500,
            master_seed: 42,
            channel_mode: ChannelMode::SameChannel,
        }
    }
}

impl SimProtocol {
    fn check(&self) {
        assert!(self.intervals_per_run >= 1, "need at least one interval per run");
        assert!(self.runs >= 1, "need at least one run");
    }

    /// Per-run stream: XOR of master seed and run index. Note that master
    /// seeds differing only in low bits reuse each other's run seeds in a
    /// different order, so order-insensitive aggregates can coincide for
    /// adjacent seeds; pick well-separated seeds when comparing
    /// experiments.
    fn run_rng(&self, run_index: u32) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.master_seed ^ run_index as u64)
    }
}

/// What happened to one packet on the air.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketOutcome {
    Clean,
    CrcError,
    AaError,
}

/// Samples a packet reception: the 32-bit access address and the remaining
/// bits corrupt independently, and a lost access address outranks a body
/// error because the radio never sees the body at all.
pub fn corrupt_packet<R: Rng>(bits: u32, aa_bits: u32, ber: f64, rng: &mut R) -> PacketOutcome {
    PacketErrorModel::new(bits, aa_bits, ber).sample(rng)
}

/// Precomputed corruption probabilities for one packet shape.
#[derive(Debug, Clone, Copy)]
struct PacketErrorModel {
    q_aa: f64,
    q_body: f64,
}

impl PacketErrorModel {
    fn new(bits: u32, aa_bits: u32, ber: f64) -> Self {
        assert!(bits >= aa_bits, "packet shorter than its access address");
        PacketErrorModel {
            q_aa: 1.0 - success_prob(ber, aa_bits),
            q_body: 1.0 - success_prob(ber, bits - aa_bits),
        }
    }

    /// Always consumes exactly two draws so the stream layout does not
    /// depend on the outcome.
    fn sample<R: Rng>(&self, rng: &mut R) -> PacketOutcome {
        let aa_bad = rng.random::<f64>() < self.q_aa;
        let body_bad = rng.random::<f64>() < self.q_body;
        if aa_bad {
            PacketOutcome::AaError
        } else if body_bad {
            PacketOutcome::CrcError
        } else {
            PacketOutcome::Clean
        }
    }
}

/// Aggregated simulator output. Transaction counts cover both modes; the
/// coexistence fields stay `None` in transaction mode. In coexistence mode
/// the model does not distinguish open from closed failures, so every
/// failed transaction lands in `fail_open` and `fail_close` stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub successes: u64,
    pub fail_open: u64,
    pub fail_close: u64,
    pub attempts: u64,
    /// Attempts that were retransmissions, including retries deferred to
    /// the following event. Diagnostic only.
    pub retx_attempts: u64,
    pub empirical_tsr: f64,
    pub empirical_throughput_bps: f64,
    pub tsr_se: f64,
    pub throughput_se: f64,
    pub empirical_ptf: Option<f64>,
    pub ptf_se: Option<f64>,
    /// Fraction of victim transactions that shared air and channel with a
    /// disturber packet, whether or not bits were corrupted.
    pub overlap_fraction: Option<f64>,
    pub per_run_tsr: Vec<f64>,
    pub per_run_ptf: Option<Vec<f64>>,
}

#[derive(Debug, Default, Clone, Copy)]
struct RunTally {
    successes: u64,
    fail_open: u64,
    fail_close: u64,
    retx_attempts: u64,
    overlapped: u64,
}

impl RunTally {
    fn attempts(&self) -> u64 {
        self.successes + self.fail_open + self.fail_close
    }
}

/// Which data is awaiting retransmission inside an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpenKind {
    /// Both bodies failed their CRC; both packets are resent.
    Both,
    /// Only the central packet's body failed; the peripheral's reply rides
    /// along carrying fresh data.
    CpOnly,
    /// Only the peripheral packet's body failed; the central's next packet
    /// rides along carrying fresh data.
    PcOnly,
}

/// Replays connection events for the victim link alone and tallies
/// transaction outcomes under the retransmission rules.
pub fn simulate_connection(scenario: &Scenario, protocol: &SimProtocol) -> SimResult {
    protocol.check();
    let v = scenario.victim;
    let ber = scenario.channel.ber;
    let cp_model = PacketErrorModel::new(v.packet_cp.total_bits, v.packet_cp.aa_bits, ber);
    let pc_model = PacketErrorModel::new(v.packet_pc.total_bits, v.packet_pc.aa_bits, ber);

    let tallies: Vec<RunTally> = (0..protocol.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = protocol.run_rng(run);
            connection_run(&v, &cp_model, &pc_model, protocol.intervals_per_run, &mut rng)
        })
        .collect();

    let ci_s = v.ci_seconds();
    let payload_bits_per_txn = v.packet_cp.payload_bytes as f64 * 8.0;
    let per_run_tsr: Vec<f64> =
        tallies.iter().map(|t| t.successes as f64 / t.attempts() as f64).collect();
    // Each attempted transaction accounts for 1/x of an interval, so the
    // empirical rate stays comparable to the ideal throughput even when
    // closed events cut an interval short.
    let per_run_thr: Vec<f64> = tallies
        .iter()
        .map(|t| t.successes as f64 * payload_bits_per_txn * v.x as f64 / (t.attempts() as f64 * ci_s))
        .collect();

    let successes: u64 = tallies.iter().map(|t| t.successes).sum();
    let fail_open: u64 = tallies.iter().map(|t| t.fail_open).sum();
    let fail_close: u64 = tallies.iter().map(|t| t.fail_close).sum();
    let retx_attempts: u64 = tallies.iter().map(|t| t.retx_attempts).sum();
    let attempts = successes + fail_open + fail_close;

    SimResult {
        successes,
        fail_open,
        fail_close,
        attempts,
        retx_attempts,
        empirical_tsr: successes as f64 / attempts as f64,
        empirical_throughput_bps: successes as f64 * payload_bits_per_txn * v.x as f64
            / (attempts as f64 * ci_s),
        tsr_se: standard_error(&per_run_tsr),
        throughput_se: standard_error(&per_run_thr),
        empirical_ptf: None,
        ptf_se: None,
        overlap_fraction: None,
        per_run_tsr,
        per_run_ptf: None,
    }
}

fn connection_run(
    v: &VictimConfig,
    cp_model: &PacketErrorModel,
    pc_model: &PacketErrorModel,
    intervals: u32,
    rng: &mut ChaCha8Rng,
) -> RunTally {
    let mut tally = RunTally::default();
    // Data left un-acknowledged when an event ends is retried at the start
    // of the next event. The retry behaves statistically like a fresh
    // exchange (new packet on one or both sides of the rule-4 window), so
    // it is sampled as a normal transaction but counted as a retry.
    let mut deferred = false;

    for _ in 0..intervals {
        let mut open: Option<OpenKind> = None;
        let mut closed = false;
        let mut slot = 0;
        while slot < v.x && !closed {
            slot += 1;
            match open {
                None => {
                    let cp = cp_model.sample(rng);
                    let pc = pc_model.sample(rng);
                    if deferred {
                        tally.retx_attempts += 1;
                        deferred = false;
                    }
                    match (cp, pc) {
                        (PacketOutcome::AaError, _) | (_, PacketOutcome::AaError) => {
                            tally.fail_close += 1;
                            closed = true;
                            deferred = true;
                        }
                        (PacketOutcome::Clean, PacketOutcome::Clean) => tally.successes += 1,
                        (PacketOutcome::CrcError, PacketOutcome::CrcError) => {
                            tally.fail_open += 1;
                            open = Some(OpenKind::Both);
                        }
                        (PacketOutcome::CrcError, PacketOutcome::Clean) => {
                            tally.fail_open += 1;
                            open = Some(OpenKind::CpOnly);
                        }
                        (PacketOutcome::Clean, PacketOutcome::CrcError) => {
                            tally.fail_open += 1;
                            open = Some(OpenKind::PcOnly);
                        }
                    }
                }
                Some(kind) => {
                    tally.retx_attempts += 1;
                    let cp = cp_model.sample(rng);
                    let pc = pc_model.sample(rng);
                    open = None;
                    match kind {
                        OpenKind::Both => {
                            // Both packets repeat old data; a second CRC
                            // failure on either trips the two-in-a-row rule.
                            if cp == PacketOutcome::Clean && pc == PacketOutcome::Clean {
                                tally.successes += 1;
                            } else {
                                tally.fail_close += 1;
                                closed = true;
                                deferred = true;
                            }
                        }
                        OpenKind::CpOnly => {
                            // The resent central packet must get through
                            // cleanly; the peripheral's riding reply only
                            // needs its access address to keep the event
                            // alive, and a body error there just opens the
                            // next retransmission.
                            if cp != PacketOutcome::Clean || pc == PacketOutcome::AaError {
                                tally.fail_close += 1;
                                closed = true;
                                deferred = true;
                            } else {
                                tally.fail_open += 1;
                                if pc == PacketOutcome::CrcError {
                                    open = Some(OpenKind::PcOnly);
                                }
                            }
                        }
                        OpenKind::PcOnly => {
                            if pc != PacketOutcome::Clean || cp == PacketOutcome::AaError {
                                tally.fail_close += 1;
                                closed = true;
                                deferred = true;
                            } else {
                                tally.fail_open += 1;
                                if cp == PacketOutcome::CrcError {
                                    open = Some(OpenKind::CpOnly);
                                }
                            }
                        }
                    }
                }
            }
        }
        if open.is_some() {
            // Fail-open on the event's last transaction: the retry can
            // only happen in the next interval.
            deferred = true;
        }
    }
    tally
}

/// Lays victim and disturber packet timelines on a shared clock and counts
/// victim transactions corrupted while a channel-sharing disturber packet
/// was on the air. The disturber's phase is drawn once per run.
pub fn simulate_coexistence(
    victim: &VictimConfig,
    disturber: &DisturberConfig,
    ber_v: f64,
    protocol: &SimProtocol,
) -> SimResult {
    protocol.check();
    assert!(disturber.n >= 1);
    assert!((0.0..=1.0).contains(&ber_v));

    let tallies: Vec<RunTally> = (0..protocol.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = protocol.run_rng(run);
            coexistence_run(victim, disturber, ber_v, protocol, &mut rng)
        })
        .collect();

    let attempts_per_run = protocol.intervals_per_run as u64 * victim.x as u64;
    let per_run_ptf: Vec<f64> = tallies
        .iter()
        .map(|t| (t.fail_open + t.fail_close) as f64 / attempts_per_run as f64)
        .collect();
    let per_run_tsr: Vec<f64> =
        tallies.iter().map(|t| t.successes as f64 / t.attempts() as f64).collect();

    let successes: u64 = tallies.iter().map(|t| t.successes).sum();
    let fail_open: u64 = tallies.iter().map(|t| t.fail_open).sum();
    let fail_close: u64 = tallies.iter().map(|t| t.fail_close).sum();
    let overlapped: u64 = tallies.iter().map(|t| t.overlapped).sum();
    let attempts = successes + fail_open + fail_close;

    let ci_s = victim.ci_seconds();
    let payload_bits_per_txn = victim.packet_cp.payload_bytes as f64 * 8.0;
    let per_run_thr: Vec<f64> = tallies
        .iter()
        .map(|t| {
            t.successes as f64 * payload_bits_per_txn * victim.x as f64
                / (t.attempts() as f64 * ci_s)
        })
        .collect();

    SimResult {
        successes,
        fail_open,
        fail_close,
        attempts,
        retx_attempts: 0,
        empirical_tsr: successes as f64 / attempts as f64,
        empirical_throughput_bps: successes as f64 * payload_bits_per_txn * victim.x as f64
            / (attempts as f64 * ci_s),
        tsr_se: standard_error(&per_run_tsr),
        throughput_se: standard_error(&per_run_thr),
        empirical_ptf: Some((fail_open + fail_close) as f64 / attempts as f64),
        ptf_se: Some(standard_error(&per_run_ptf)),
        overlap_fraction: Some(overlapped as f64 / attempts as f64),
        per_run_tsr,
        per_run_ptf: Some(per_run_ptf),
    }
}

fn coexistence_run(
    victim: &VictimConfig,
    disturber: &DisturberConfig,
    ber_v: f64,
    protocol: &SimProtocol,
    rng: &mut ChaCha8Rng,
) -> RunTally {
    let mut tally = RunTally::default();
    let intervals = protocol.intervals_per_run;
    let pt_v = victim.packet_cp.airtime_us;
    let pt_d = disturber.packet.airtime_us;
    let v_slot = pt_v + IFS_US;
    let d_slot = pt_d + IFS_US;
    let ci_v = victim.ci_us;
    let ci_d = disturber.ci_us;
    // Trailing IFS excluded: the span ends when the last packet leaves the air.
    let d_event_span = disturber.n as f64 * d_slot - IFS_US;
    // Any victim transaction corrupts as a whole: one draw over both packets.
    let q_txn =
        1.0 - success_prob(ber_v, victim.packet_cp.total_bits + victim.packet_pc.total_bits);

    // Fixed draw order per run: phase, victim event channels, disturber
    // event channels, then one gated draw per overlapped transaction in
    // time order.
    let phase = rng.random::<f64>() * ci_d;
    let horizon_end = (intervals as f64 - 1.0) * ci_v + victim.m() as f64 * v_slot;
    let l_min = ((-phase - d_event_span) / ci_d).floor() as i64;
    let l_max = ((horizon_end - phase) / ci_d).ceil() as i64 + 1;
    let (v_channels, d_channels) = match protocol.channel_mode {
        ChannelMode::Uniform37 => {
            let v: Vec<u8> =
                (0..intervals).map(|_| rng.random_range(0..DATA_CHANNEL_COUNT as u8)).collect();
            let d: Vec<u8> = (l_min..=l_max)
                .map(|_| rng.random_range(0..DATA_CHANNEL_COUNT as u8))
                .collect();
            (v, d)
        }
        _ => (Vec::new(), Vec::new()),
    };

    for event in 0..intervals {
        let event_start = event as f64 * ci_v;
        for txn in 0..victim.x {
            let first = event_start + (2 * txn) as f64 * v_slot;
            let second = first + v_slot;
            let hit = transaction_overlaps(
                [first, second],
                pt_v,
                phase,
                ci_d,
                d_slot,
                pt_d,
                disturber.n,
                d_event_span,
                |l| match protocol.channel_mode {
                    ChannelMode::SameChannel => true,
                    ChannelMode::Disjoint => false,
                    ChannelMode::Uniform37 => {
                        v_channels[event as usize] == d_channels[(l - l_min) as usize]
                    }
                },
            );
            if hit {
                tally.overlapped += 1;
                if rng.random::<f64>() < q_txn {
                    tally.fail_open += 1;
                    continue;
                }
            }
            tally.successes += 1;
        }
    }
    tally
}

/// True when either victim packet shares airtime with any disturber packet
/// from a channel-matching disturber event. Touching endpoints are not an
/// overlap.
#[allow(clippy::too_many_arguments)]
fn transaction_overlaps(
    starts: [f64; 2],
    pt_v: f64,
    phase: f64,
    ci_d: f64,
    d_slot: f64,
    pt_d: f64,
    n: u32,
    d_event_span: f64,
    channel_match: impl Fn(i64) -> bool,
) -> bool {
    let txn_start = starts[0];
    let txn_end = starts[1] + pt_v;
    let l_lo = ((txn_start - phase - d_event_span) / ci_d).floor() as i64;
    let l_hi = ((txn_end - phase) / ci_d).ceil() as i64;
    for l in l_lo..=l_hi {
        if !channel_match(l) {
            continue;
        }
        let d_event_start = phase + l as f64 * ci_d;
        for q in 0..n {
            let d_start = d_event_start + q as f64 * d_slot;
            let d_end = d_start + pt_d;
            for s in starts {
                if s < d_end && d_start < s + pt_v {
                    return true;
                }
            }
        }
    }
    false
}

/// Standard error of the mean of per-run estimates (sample variance over
/// runs). Zero when there is a single run.
fn standard_error(per_run: &[f64]) -> f64 {
    let n = per_run.len();
    if n < 2 {
        return 0.0;
    }
    let mean = per_run.iter().sum::<f64>() / n as f64;
    let var = per_run.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}
