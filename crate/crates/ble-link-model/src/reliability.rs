//! Closed-form transmission-failure probability of a victim connection
//! sharing airtime with one disturber connection.
//!
//! The failure probability is a product of three factors: the chance of at
//! least one bit error across a transaction's two packets, the fraction of
//! the disturber interval occupied by traffic (capped at one), and a term
//! discounting victim packets short enough to fit inside the disturber's
//! inter-frame gaps. Notably the victim's own connection interval never
//! appears, so reliability is invariant to it.

use crate::scenario::{Scenario, Violation, MIN_CONNECTION_INTERVAL_US};
use crate::throughput::pow_int;

/// Everything the failure formula consumes. `l_v` is the single-direction
/// packet length in bits; a transaction carries `2 * l_v` bits total.
/// Heterogeneous packet mixes must be pre-averaged into `l_v` and `pt_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityInputs {
    pub ber_v: f64,
    pub l_v: u32,
    pub m: u32,
    pub n: u32,
    pub pt_v_us: f64,
    pub pt_d_us: f64,
    pub ci_d_us: f64,
    pub ifs_us: f64,
}

impl ReliabilityInputs {
    /// Extracts the formula inputs from a validated scenario. Requires the
    /// disturber half to be present.
    pub fn from_scenario(s: &Scenario) -> Result<Self, Violation> {
        let d = s.disturber.ok_or(Violation {
            field: "disturber",
            message: "reliability needs a disturber (payload_d_bytes, n, ci_d_us)".into(),
        })?;
        Ok(ReliabilityInputs {
            ber_v: s.channel.ber,
            l_v: s.victim.packet_cp.total_bits,
            m: s.victim.m(),
            n: d.n,
            pt_v_us: s.victim.packet_cp.airtime_us,
            pt_d_us: d.packet.airtime_us,
            ci_d_us: d.ci_us,
            ifs_us: s.ifs_us,
        })
    }

    fn check(&self) {
        assert!(self.m >= 1, "victim packets per event must be at least 1");
        assert!(self.n >= 1, "disturber packets per event must be at least 1");
        assert!(self.pt_v_us > 0.0 && self.pt_d_us > 0.0, "airtimes must be positive");
        assert!(self.ci_d_us >= MIN_CONNECTION_INTERVAL_US);
        assert!((0.0..=1.0).contains(&self.ber_v));
    }

    /// Non-fatal caveats, e.g. odd victim packet counts that cannot come
    /// from whole transactions.
    pub fn advisories(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.m % 2 == 1 {
            notes.push(format!(
                "m = {} is odd; transactions carry packets in pairs, so odd counts describe \
                 a truncated event (the formula itself is well-defined)",
                self.m
            ));
        }
        notes
    }
}

/// Probability that a victim transaction fails under the disturber.
pub fn p_tf(inputs: &ReliabilityInputs) -> f64 {
    inputs.check();
    let bit_error = 1.0 - pow_int(1.0 - inputs.ber_v, 2 * inputs.l_v);

    let busy_us = inputs.m as f64 * (inputs.pt_v_us + inputs.ifs_us)
        + inputs.n as f64 * (inputs.pt_d_us + inputs.ifs_us);
    let busy = (busy_us / inputs.ci_d_us).min(1.0);

    // Victim packets shorter than the inter-frame space can dodge every
    // disturber packet when they land inside a gap; m independent chances.
    let fit = ((inputs.ifs_us - inputs.pt_v_us) / (inputs.pt_d_us + inputs.ifs_us)).max(0.0);
    let gap = 1.0 - pow_int(fit, inputs.m);

    let p = bit_error * busy * gap;
    debug_assert!((0.0..=1.0).contains(&p));
    p
}

/// Probability that a victim transaction survives the disturber.
pub fn reliability(inputs: &ReliabilityInputs) -> f64 {
    1.0 - p_tf(inputs)
}
