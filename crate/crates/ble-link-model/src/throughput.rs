//! Closed-form throughput model: per-transaction outcome probabilities, the
//! three-state connection-event Markov chain, and the throughput numbers
//! derived from its stationary distribution.
//!
//! A transaction is one central packet followed by one peripheral packet.
//! Each ends in one of three states: success, fail-open (a CRC error lets
//! the event continue with a retransmission) or fail-close (an access
//! address was missed and the event ends). Conditioned on fail-open, the
//! retransmission itself lands in the same three states with different
//! probabilities, which is what distinguishes the second matrix row.

use crate::scenario::{PacketSpec, Scenario, AA_BITS};
use crate::tolerances::{
    CONSERVATION_PER_ITERATION_ABS, P6_CONSISTENCY_ABS, PROB_SUM_ABS, STATIONARY_MAX_ITERATIONS,
};
use crate::ModelError;

/// Integer power by square-and-multiply, lowest exponent bit first.
///
/// Spelled out instead of `f64::powi` so the result bits never depend on
/// libm or on whether the exponent constant-folds at a given optimization
/// level; downstream tests compare some outputs bitwise.
pub(crate) fn pow_int(base: f64, mut n: u32) -> f64 {
    let mut base = base;
    let mut acc = 1.0;
    loop {
        if n & 1 != 0 {
            acc *= base;
        }
        n >>= 1;
        if n == 0 {
            return acc;
        }
        base *= base;
    }
}

/// Probability that `bits` consecutive bits all survive a link with the
/// given bit error rate.
pub fn success_prob(ber: f64, bits: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&ber));
    pow_int(1.0 - ber, bits)
}

/// Outcome probabilities of a single transaction.
///
/// `p1`/`p2`/`p3` apply to a fresh transaction (success, fail-open,
/// fail-close); `p4`/`p5`/`p6` are the same outcomes conditioned on the
/// previous transaction having failed open, i.e. for the retransmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransactionProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub p5: f64,
    pub p6: f64,
}

impl TransactionProbabilities {
    /// The fail-close-after-open probability by complement instead of by
    /// its direct expression; the two must agree tightly.
    pub fn p6_complement(&self) -> f64 {
        1.0 - self.p4 - self.p5
    }
}

/// Computes the six transaction outcome probabilities for packet lengths
/// `l_cp` (central) and `l_pc` (peripheral), both in total on-air bits.
pub fn transaction_probs(
    ber: f64,
    l_cp: u32,
    l_pc: u32,
) -> Result<TransactionProbabilities, ModelError> {
    assert!(l_cp >= AA_BITS && l_pc >= AA_BITS, "packets are at least one access address long");
    assert!((0.0..=1.0).contains(&ber), "ber must lie in [0, 1]");
    if ber >= 1.0 {
        return Err(ModelError::DegenerateBer);
    }

    // The access address is received separately from the body: losing it
    // ends the event, while a body (CRC) error only fails the transaction.
    let rho_aa = success_prob(ber, AA_BITS);
    let rho_cp = success_prob(ber, l_cp - AA_BITS);
    let rho_pc = success_prob(ber, l_pc - AA_BITS);
    let q_aa = 1.0 - rho_aa;
    let q_cp = 1.0 - rho_cp;
    let q_pc = 1.0 - rho_pc;

    // Both access addresses heard; bodies decide the rest.
    let p1 = rho_aa * rho_cp * rho_aa * rho_pc;
    let p2 = rho_aa * q_cp * rho_aa * rho_pc
        + rho_aa * rho_cp * rho_aa * q_pc
        + rho_aa * q_cp * rho_aa * q_pc;
    let p3 = q_aa + rho_aa * q_aa;

    let (p4, p5, p6) = if p2 > 0.0 {
        // Joint probability of (how the transaction failed open) x (how the
        // retransmission turns out), normalized by p2. Which packets get
        // resent depends on which bodies were corrupted, hence the cases.
        let open_both = rho_aa * q_cp * rho_aa * q_pc;
        let open_cp = rho_aa * q_cp * rho_aa * rho_pc;
        let open_pc = rho_aa * rho_cp * rho_aa * q_pc;

        let n4 = open_both * (rho_aa * rho_cp * rho_aa * rho_pc);
        let n5 = open_cp * (rho_aa * rho_cp * rho_aa) + open_pc * (rho_aa * rho_aa * rho_pc);
        let n6 = open_cp * ((1.0 - rho_aa * rho_cp) + rho_aa * rho_cp * q_aa)
            + open_pc * (q_aa + rho_aa * (1.0 - rho_aa * rho_pc))
            + open_both * (1.0 - rho_aa * rho_cp * rho_aa * rho_pc);
        (n4 / p2, n5 / p2, n6 / p2)
    } else {
        // No fail-open mass to condition on; pick the error-free limit.
        (1.0, 0.0, 0.0)
    };

    let probs = TransactionProbabilities { p1, p2, p3, p4, p5, p6 };

    if (p1 + p2 + p3 - 1.0).abs() > PROB_SUM_ABS
        || (probs.p6 - probs.p6_complement()).abs() > P6_CONSISTENCY_ABS
    {
        return Err(ModelError::ProbabilityInconsistency {
            fresh_sum: p1 + p2 + p3,
            p6_direct: probs.p6,
            p6_complement: probs.p6_complement(),
        });
    }
    Ok(probs)
}

/// Transition matrix over event-level states success / fail-open /
/// fail-close, indexed in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub rows: [[f64; 3]; 3],
}

/// Builds the chain's matrix. After success or a closed event the next
/// transaction is fresh (rows 1 and 3 identical); after fail-open only the
/// first of the event's `x` transactions is the retransmission, the other
/// x−1 are fresh, giving row 2 as their mixture.
pub fn transition_matrix(probs: &TransactionProbabilities, x: u32) -> TransitionMatrix {
    assert!(x >= 1);
    let fresh = [probs.p1, probs.p2, probs.p3];
    let retx = [probs.p4, probs.p5, probs.p6];
    let w = 1.0 / x as f64;
    let row2 = [
        w * fresh[0] + (1.0 - w) * retx[0],
        w * fresh[1] + (1.0 - w) * retx[1],
        w * fresh[2] + (1.0 - w) * retx[2],
    ];
    TransitionMatrix { rows: [fresh, row2, fresh] }
}

/// Long-run state occupancy of the chain plus convergence metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryDistribution {
    pub pi: [f64; 3],
    pub iterations_used: u64,
    pub converged: bool,
}

/// One power-iteration step: row vector times matrix. Mass is conserved
/// exactly in real arithmetic because rows sum to one.
pub fn step(pi: &[f64; 3], a: &TransitionMatrix) -> [f64; 3] {
    let r = &a.rows;
    [
        pi[0] * r[0][0] + pi[1] * r[1][0] + pi[2] * r[2][0],
        pi[0] * r[0][1] + pi[1] * r[1][1] + pi[2] * r[2][1],
        pi[0] * r[0][2] + pi[1] * r[1][2] + pi[2] * r[2][2],
    ]
}

/// Fixed point of π ← πA by power iteration from `pi0`, stopping when the
/// L-infinity change drops to `tol` or the iteration cap is hit.
pub fn stationary_distribution(
    a: &TransitionMatrix,
    pi0: [f64; 3],
    tol: f64,
) -> Result<StationaryDistribution, ModelError> {
    assert!(pi0.iter().all(|&v| v >= 0.0), "initial distribution must be non-negative");
    let mass = pi0.iter().sum::<f64>();
    let mut pi = pi0;
    for it in 1..=STATIONARY_MAX_ITERATIONS {
        let next = step(&pi, a);
        debug_assert!(
            (next.iter().sum::<f64>() - mass).abs() <= CONSERVATION_PER_ITERATION_ABS * mass.max(1.0)
        );
        let delta = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        pi = next;
        if delta <= tol {
            return Ok(StationaryDistribution { pi, iterations_used: it, converged: true });
        }
    }
    Err(ModelError::NonConvergence { iterations: STATIONARY_MAX_ITERATIONS, last: pi })
}

/// Stationary distribution by direct linear solve: replaces one balance
/// equation of π(A − I) = 0 with the normalization constraint and runs
/// Gaussian elimination with partial pivoting. Completely independent of
/// the power-iteration path, which it cross-checks.
// Index loops over rows and columns read better than iterator chains here.
#[allow(clippy::needless_range_loop)]
pub fn solve_stationary(a: &TransitionMatrix) -> Result<[f64; 3], ModelError> {
    // Columns of (A^T − I) give the balance equations in the unknowns π_j.
    let r = &a.rows;
    let mut m = [
        [r[0][0] - 1.0, r[1][0], r[2][0], 0.0],
        [r[0][1], r[1][1] - 1.0, r[2][1], 0.0],
        [1.0, 1.0, 1.0, 1.0],
    ];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < f64::EPSILON {
            return Err(ModelError::SingularSystem);
        }
        m.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut pi = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for k in row + 1..3 {
            acc -= m[row][k] * pi[k];
        }
        pi[row] = acc / m[row][row];
    }
    Ok(pi)
}

/// Fraction of transactions that succeed in the long run.
pub fn tsr(pi: &StationaryDistribution) -> f64 {
    let sum: f64 = pi.pi.iter().sum();
    debug_assert!(sum > 0.0);
    pi.pi[0] / sum
}

/// Error-free single-direction throughput: `payload_bytes` delivered `x`
/// times per interval of `ci_seconds`.
pub fn throughput_ideal(payload_bytes: u32, x: u32, ci_seconds: f64) -> f64 {
    payload_bytes as f64 * 8.0 * x as f64 / ci_seconds
}

/// Counts whole packets rather than payloads; useful when comparing
/// against measurements that report on-air bit rates.
pub fn throughput_on_air_ideal(total_bits: u32, x: u32, ci_seconds: f64) -> f64 {
    total_bits as f64 * x as f64 / ci_seconds
}

/// Expected throughput over a lossy link. Never exceeds the ideal since
/// tsr ≤ 1 and f64 multiplication is monotone.
pub fn throughput_real(tsr: f64, ideal_bps: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&tsr));
    tsr * ideal_bps
}

/// Everything the closed-form throughput pipeline produces for a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputOutputs {
    pub probs: TransactionProbabilities,
    pub stationary: StationaryDistribution,
    pub tsr: f64,
    pub ideal_bps: f64,
    pub real_bps: f64,
    pub on_air_ideal_bps: f64,
    pub on_air_real_bps: f64,
}

/// Default starting point for power iteration: all mass on success.
pub const DEFAULT_PI0: [f64; 3] = [1.0, 0.0, 0.0];

/// Runs the whole closed-form pipeline for one scenario and cross-checks
/// power iteration against the direct solve.
pub fn evaluate_throughput(scenario: &Scenario) -> Result<ThroughputOutputs, ModelError> {
    evaluate_throughput_for(
        scenario.channel.ber,
        &scenario.victim.packet_cp,
        &scenario.victim.packet_pc,
        scenario.victim.x,
        scenario.victim.ci_seconds(),
    )
}

pub(crate) fn evaluate_throughput_for(
    ber: f64,
    packet_cp: &PacketSpec,
    packet_pc: &PacketSpec,
    x: u32,
    ci_seconds: f64,
) -> Result<ThroughputOutputs, ModelError> {
    let probs = transaction_probs(ber, packet_cp.total_bits, packet_pc.total_bits)?;
    let a = transition_matrix(&probs, x);
    let stationary = stationary_distribution(&a, DEFAULT_PI0, crate::tolerances::STATIONARY_DEFAULT_TOL)?;
    let solved = solve_stationary(&a)?;
    let drift = stationary
        .pi
        .iter()
        .zip(&solved)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if drift > crate::tolerances::POWER_VS_SOLVE_ABS {
        return Err(ModelError::StationaryMismatch { power: stationary.pi, solved });
    }

    let tsr_value = tsr(&stationary);
    let ideal_bps = throughput_ideal(packet_cp.payload_bytes, x, ci_seconds);
    let on_air_ideal_bps = throughput_on_air_ideal(packet_cp.total_bits, x, ci_seconds);
    Ok(ThroughputOutputs {
        probs,
        stationary,
        tsr: tsr_value,
        ideal_bps,
        real_bps: throughput_real(tsr_value, ideal_bps),
        on_air_ideal_bps,
        on_air_real_bps: throughput_real(tsr_value, on_air_ideal_bps),
    })
}
