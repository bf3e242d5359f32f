//! Domain types and validation for the modeled connections.
//!
//! A scenario pairs a victim connection (the one whose throughput and
//! reliability we care about) with an optional disturber connection that
//! interferes with it. All downstream modules consume only validated,
//! immutable values from here.

use std::fmt;

/// Access-address length in bits; corruption here terminates the event.
pub const AA_BITS: u32 = 32;

/// Fixed per-packet framing overhead in bytes (preamble, access address,
/// header, CRC). Chosen so that 50-byte payloads map to 512 on-air bits and
/// 251-byte payloads to 2120 bits.
pub const PACKET_OVERHEAD_BYTES: u32 = 14;

/// Largest payload a BLE data packet can carry.
pub const MAX_PAYLOAD_BYTES: u32 = 251;

/// Smallest connection interval allowed by BLE, in microseconds.
pub const MIN_CONNECTION_INTERVAL_US: f64 = 7500.0;

/// Inter-frame space between consecutive packets, in microseconds.
pub const IFS_US: f64 = 150.0;

/// Default PHY data rate. At 1 Mb/s a packet's airtime in microseconds
/// equals its bit count.
pub const DEFAULT_PHY_RATE_BPS: f64 = 1_000_000.0;

/// Number of BLE data channels available to channel hopping.
pub const DATA_CHANNEL_COUNT: u32 = 37;

/// Transactions per event beyond which most hardware stops scheduling.
pub const HARDWARE_TYPICAL_MAX_X: u32 = 5;

/// One violated invariant, with the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every invariant a raw configuration violated, collected rather than
/// reported one at a time.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ValidationErrors(pub Vec<Violation>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario:")?;
        for v in &self.0 {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

/// Environmental link quality: per-bit error probability and PHY rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCondition {
    pub ber: f64,
    pub phy_rate_bps: f64,
}

/// A packet's on-air footprint, derived from its payload size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub payload_bytes: u32,
    pub total_bits: u32,
    pub airtime_us: f64,
    pub aa_bits: u32,
}

impl PacketSpec {
    /// Sizes a packet for a payload at the given PHY rate.
    pub fn from_payload(payload_bytes: u32, phy_rate_bps: f64) -> Result<Self, Violation> {
        let total_bits = packet_bits_from_payload(payload_bytes)?;
        Ok(PacketSpec {
            payload_bytes,
            total_bits,
            airtime_us: packet_airtime(total_bits, phy_rate_bps),
            aa_bits: AA_BITS,
        })
    }
}

/// On-air bits for a payload: 8 x (payload + 14-byte framing overhead).
pub fn packet_bits_from_payload(payload_bytes: u32) -> Result<u32, Violation> {
    if payload_bytes > MAX_PAYLOAD_BYTES {
        return Err(Violation {
            field: "payload_bytes",
            message: format!("payload exceeds {MAX_PAYLOAD_BYTES} bytes (got {payload_bytes})"),
        });
    }
    Ok(8 * (payload_bytes + PACKET_OVERHEAD_BYTES))
}

/// Airtime in microseconds of `bits` at `phy_rate_bps`.
pub fn packet_airtime(bits: u32, phy_rate_bps: f64) -> f64 {
    debug_assert!(phy_rate_bps > 0.0);
    bits as f64 * 1e6 / phy_rate_bps
}

/// The modeled connection: one central and one peripheral packet per
/// transaction, `x` transactions per connection event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VictimConfig {
    pub packet_cp: PacketSpec,
    pub packet_pc: PacketSpec,
    pub x: u32,
    pub ci_us: f64,
}

impl VictimConfig {
    /// Packets per connection event; two per transaction.
    pub fn m(&self) -> u32 {
        2 * self.x
    }

    /// Connection interval in seconds.
    pub fn ci_seconds(&self) -> f64 {
        self.ci_us / 1e6
    }
}

/// The interfering connection, reduced to what the collision model needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturberConfig {
    pub packet: PacketSpec,
    pub n: u32,
    pub ci_us: f64,
}

/// A fully validated modeling scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub channel: ChannelCondition,
    pub victim: VictimConfig,
    pub disturber: Option<DisturberConfig>,
    pub ifs_us: f64,
}

impl Scenario {
    /// Non-fatal caveats about the configuration, e.g. transaction counts
    /// beyond what off-the-shelf hardware schedules.
    pub fn advisories(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.victim.x > HARDWARE_TYPICAL_MAX_X {
            notes.push(format!(
                "x = {} exceeds the {} transactions per event most BLE devices schedule; \
                 the model itself has no such cap",
                self.victim.x, HARDWARE_TYPICAL_MAX_X
            ));
        }
        notes
    }
}

/// An unvalidated scenario as it arrives from a config file or caller.
/// Disturber fields must be given all together or not at all.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScenario {
    pub ber: f64,
    pub phy_rate_bps: f64,
    pub payload_v_bytes: u32,
    pub x: u32,
    pub ci_v_us: f64,
    pub payload_d_bytes: Option<u32>,
    pub n: Option<u32>,
    pub ci_d_us: Option<f64>,
    pub ifs_us: f64,
}

impl Default for RawScenario {
    fn default() -> Self {
        RawScenario {
            ber: 0.0,
            phy_rate_bps: DEFAULT_PHY_RATE_BPS,
            payload_v_bytes: 0,
            x: 1,
            ci_v_us: MIN_CONNECTION_INTERVAL_US,
            payload_d_bytes: None,
            n: None,
            ci_d_us: None,
            ifs_us: IFS_US,
        }
    }
}

/// Checks every invariant and either builds the scenario with all derived
/// fields populated or reports the full list of violations.
// Guards are written negated on purpose: a NaN field must fail validation,
// and `!(x > 0.0)` catches NaN where `x <= 0.0` would let it through.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_scenario(raw: &RawScenario) -> Result<Scenario, ValidationErrors> {
    let mut violations = Vec::new();

    if !(0.0..=1.0).contains(&raw.ber) || raw.ber.is_nan() {
        violations.push(Violation {
            field: "ber",
            message: format!("bit error rate must lie in [0, 1] (got {})", raw.ber),
        });
    }
    if !(raw.phy_rate_bps > 0.0) {
        violations.push(Violation {
            field: "phy_rate_bps",
            message: format!("PHY rate must be positive (got {})", raw.phy_rate_bps),
        });
    }
    if raw.x < 1 {
        violations.push(Violation {
            field: "x",
            message: "transactions per event must be at least 1".into(),
        });
    }
    if !(raw.ci_v_us >= MIN_CONNECTION_INTERVAL_US) {
        violations.push(Violation {
            field: "ci_v_us",
            message: format!(
                "connection interval below {MIN_CONNECTION_INTERVAL_US} \u{b5}s (got {})",
                raw.ci_v_us
            ),
        });
    }
    if raw.ifs_us != IFS_US {
        violations.push(Violation {
            field: "ifs_us",
            message: format!("inter-frame space is fixed at {IFS_US} \u{b5}s (got {})", raw.ifs_us),
        });
    }

    let phy = if raw.phy_rate_bps > 0.0 { raw.phy_rate_bps } else { DEFAULT_PHY_RATE_BPS };
    let packet_v = match PacketSpec::from_payload(raw.payload_v_bytes, phy) {
        Ok(p) => Some(p),
        Err(mut v) => {
            v.field = "payload_v_bytes";
            violations.push(v);
            None
        }
    };

    // The three disturber fields travel together.
    let disturber_fields = [
        raw.payload_d_bytes.is_some(),
        raw.n.is_some(),
        raw.ci_d_us.is_some(),
    ];
    let disturber = if disturber_fields.iter().all(|p| *p) {
        let packet_d = match PacketSpec::from_payload(raw.payload_d_bytes.unwrap(), phy) {
            Ok(p) => Some(p),
            Err(mut v) => {
                v.field = "payload_d_bytes";
                violations.push(v);
                None
            }
        };
        let n = raw.n.unwrap();
        if n < 1 {
            violations.push(Violation {
                field: "n",
                message: "disturber packets per event must be at least 1".into(),
            });
        }
        let ci_d = raw.ci_d_us.unwrap();
        if !(ci_d >= MIN_CONNECTION_INTERVAL_US) {
            violations.push(Violation {
                field: "ci_d_us",
                message: format!(
                    "connection interval below {MIN_CONNECTION_INTERVAL_US} \u{b5}s (got {ci_d})"
                ),
            });
        }
        packet_d.map(|packet| DisturberConfig { packet, n, ci_us: ci_d })
    } else if disturber_fields.iter().any(|p| *p) {
        for (present, field) in disturber_fields
            .iter()
            .zip(["payload_d_bytes", "n", "ci_d_us"])
        {
            if !present {
                violations.push(Violation {
                    field,
                    message: "disturber configuration is incomplete; \
                              payload_d_bytes, n and ci_d_us must be given together"
                        .into(),
                });
            }
        }
        None
    } else {
        None
    };

    if !violations.is_empty() {
        return Err(ValidationErrors(violations));
    }

    Ok(Scenario {
        channel: ChannelCondition { ber: raw.ber, phy_rate_bps: phy },
        victim: VictimConfig {
            packet_cp: packet_v.unwrap(),
            packet_pc: packet_v.unwrap(),
            x: raw.x,
            ci_us: raw.ci_v_us,
        },
        disturber,
        ifs_us: raw.ifs_us,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_to_bits_reference_points() {
        assert_eq!(packet_bits_from_payload(50).unwrap(), 512);
        assert_eq!(packet_bits_from_payload(251).unwrap(), 2120);
        // 14 bytes of framing, so even an empty packet costs 112 bits.
        assert_eq!(packet_bits_from_payload(0).unwrap(), 112);
    }

    #[test]
    fn payload_out_of_range_names_the_bound() {
        let err = packet_bits_from_payload(300).unwrap_err();
        assert_eq!(err.field, "payload_bytes");
        assert!(err.message.contains("251"), "message was: {}", err.message);
    }

    #[test]
    fn airtime_equals_bits_at_one_megabit() {
        assert_eq!(packet_airtime(512, 1e6), 512.0);
        assert_eq!(packet_airtime(80, 1e6), 80.0);
        assert_eq!(packet_airtime(2120, 1e6), 2120.0);
        assert_eq!(packet_airtime(512, 2e6), 256.0);
    }

    #[test]
    fn valid_scenario_populates_derived_fields() {
        let raw = RawScenario {
            ber: 1e-5,
            payload_v_bytes: 50,
            x: 2,
            ci_v_us: 7500.0,
            payload_d_bytes: Some(50),
            n: Some(10),
            ci_d_us: Some(7500.0),
            ..RawScenario::default()
        };
        let s = validate_scenario(&raw).unwrap();
        assert_eq!(s.victim.m(), 4);
        assert_eq!(s.victim.packet_cp.total_bits, 512);
        assert_eq!(s.victim.packet_cp.airtime_us, 512.0);
        assert_eq!(s.disturber.unwrap().packet.total_bits, 512);
        assert!(s.advisories().is_empty());
    }

    #[test]
    fn every_violation_is_reported_at_once() {
        let raw = RawScenario {
            ber: 1.5,
            payload_v_bytes: 300,
            x: 0,
            ci_v_us: 5000.0,
            ifs_us: 100.0,
            ..RawScenario::default()
        };
        let errs = validate_scenario(&raw).unwrap_err().0;
        let fields: Vec<_> = errs.iter().map(|v| v.field).collect();
        assert!(fields.contains(&"ber"));
        assert!(fields.contains(&"payload_v_bytes"));
        assert!(fields.contains(&"x"));
        assert!(fields.contains(&"ci_v_us"));
        assert!(fields.contains(&"ifs_us"));
        let ci_err = errs.iter().find(|v| v.field == "ci_v_us").unwrap();
        assert!(ci_err.message.contains("7500"));
    }

    #[test]
    fn partial_disturber_config_is_rejected() {
        let raw = RawScenario {
            ber: 1e-3,
            payload_v_bytes: 50,
            n: Some(10),
            ..RawScenario::default()
        };
        let errs = validate_scenario(&raw).unwrap_err().0;
        let fields: Vec<_> = errs.iter().map(|v| v.field).collect();
        assert!(fields.contains(&"payload_d_bytes"));
        assert!(fields.contains(&"ci_d_us"));
    }

    #[test]
    fn large_x_yields_an_advisory_not_an_error() {
        let raw = RawScenario {
            payload_v_bytes: 50,
            x: 6,
            ..RawScenario::default()
        };
        let s = validate_scenario(&raw).unwrap();
        assert_eq!(s.advisories().len(), 1);
        assert!(s.advisories()[0].contains("5"));
    }
}
