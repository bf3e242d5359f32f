//! Closed-form parameter sweeps producing reliability-versus-throughput
//! curves, plus peak finding on payload sweeps.
//!
//! Sweeps never touch the simulator; every point is a model evaluation, so
//! a full payload sweep (252 points) stays well under a second.

use crate::reliability::{p_tf, reliability, ReliabilityInputs};
use crate::scenario::{validate_scenario, RawScenario, ValidationErrors, Violation};
use crate::throughput::evaluate_throughput;
use crate::ModelError;

/// Which scenario field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    Ber,
    PayloadV,
    CiV,
}

impl SweptParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParameter::Ber => "ber",
            SweptParameter::PayloadV => "payload_v",
            SweptParameter::CiV => "ci_v",
        }
    }

    fn apply(&self, raw: &mut RawScenario, value: f64) {
        match self {
            SweptParameter::Ber => raw.ber = value,
            // Payload grids are integer-valued; values arrive as f64 only
            // for uniformity with the other parameters.
            SweptParameter::PayloadV => raw.payload_v_bytes = value.round() as u32,
            SweptParameter::CiV => raw.ci_v_us = value,
        }
    }
}

/// A secondary parameter held fixed per curve, one curve per value.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub param: SweptParameter,
    pub values: Vec<f64>,
}

/// A sweep: base scenario, the swept parameter and its grid, and an
/// optional curve family.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RawScenario,
    pub param: SweptParameter,
    pub values: Vec<f64>,
    pub family: Option<FamilySpec>,
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub value: f64,
    pub tsr: f64,
    pub throughput_ideal_bps: f64,
    pub throughput_real_bps: f64,
    pub p_tf: f64,
    pub reliability: f64,
}

/// Points of one curve, ordered by ascending swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoCurve {
    pub swept: SweptParameter,
    /// The family parameter and its value for this curve, when a family
    /// was requested.
    pub family_value: Option<(SweptParameter, f64)>,
    pub points: Vec<ParetoPoint>,
}

/// Evaluates the closed-form models over the grid, one curve per family
/// value. The base scenario must carry a disturber so that every point has
/// a defined reliability.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<ParetoCurve>, ModelError> {
    if spec.values.is_empty() {
        return Err(ModelError::Validation(ValidationErrors(vec![Violation {
            field: "values",
            message: "sweep range is empty".into(),
        }])));
    }
    if spec.base.payload_d_bytes.is_none() || spec.base.n.is_none() || spec.base.ci_d_us.is_none()
    {
        return Err(ModelError::Validation(ValidationErrors(vec![Violation {
            field: "disturber",
            message: "sweeps report reliability, which needs payload_d_bytes, n and ci_d_us"
                .into(),
        }])));
    }

    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);

    let families: Vec<Option<(SweptParameter, f64)>> = match &spec.family {
        Some(f) => f.values.iter().map(|&v| Some((f.param, v))).collect(),
        None => vec![None],
    };

    let mut curves = Vec::with_capacity(families.len());
    for family_value in families {
        let mut points = Vec::with_capacity(values.len());
        for &value in &values {
            let mut raw = spec.base.clone();
            if let Some((fp, fv)) = family_value {
                fp.apply(&mut raw, fv);
            }
            spec.param.apply(&mut raw, value);
            points.push(evaluate_point(&raw, spec.param, value, family_value)?);
        }
        curves.push(ParetoCurve { swept: spec.param, family_value, points });
    }
    Ok(curves)
}

fn evaluate_point(
    raw: &RawScenario,
    param: SweptParameter,
    value: f64,
    family_value: Option<(SweptParameter, f64)>,
) -> Result<ParetoPoint, ModelError> {
    let attach = |source: ValidationErrors| ModelError::SweepPoint {
        param: param.name(),
        value,
        family: family_value.map(|(p, v)| (p.name(), v)),
        source,
    };
    let scenario = validate_scenario(raw).map_err(attach)?;
    let out = evaluate_throughput(&scenario)?;
    let inputs = ReliabilityInputs::from_scenario(&scenario)
        .map_err(|v| attach(ValidationErrors(vec![v])))?;
    Ok(ParetoPoint {
        value,
        tsr: out.tsr,
        throughput_ideal_bps: out.ideal_bps,
        throughput_real_bps: out.real_bps,
        p_tf: p_tf(&inputs),
        reliability: reliability(&inputs),
    })
}

/// The point with the highest real throughput. Ties go to the smaller
/// swept value, which for payload sweeps is the more reliable choice.
pub fn find_throughput_peak(curve: &ParetoCurve) -> &ParetoPoint {
    assert_eq!(curve.swept, SweptParameter::PayloadV, "peak finding is for payload sweeps");
    assert!(!curve.points.is_empty());
    let mut best = &curve.points[0];
    for p in &curve.points[1..] {
        if p.throughput_real_bps > best.throughput_real_bps {
            best = p;
        }
    }
    best
}

/// Default number of points for logarithmic bit-error-rate grids.
pub const BER_GRID_POINTS: usize = 50;
/// Default payload grid step in bytes.
pub const PAYLOAD_STEP_BYTES: f64 = 1.0;
/// Default connection-interval grid step in microseconds.
pub const CI_STEP_US: f64 = 2500.0;

/// Logarithmically spaced grid with exact endpoints.
pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > min && points >= 2);
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| {
            if i == 0 {
                min
            } else if i == points - 1 {
                max
            } else {
                (lo + i as f64 * (hi - lo) / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Linearly spaced grid, inclusive of `max` when the step lands on it
/// (within a relative guard against accumulated rounding).
pub fn linear_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && max >= min);
    let mut values = Vec::new();
    let guard = max + step * 1e-9;
    let mut i = 0u32;
    loop {
        let v = min + i as f64 * step;
        if v > guard {
            break;
        }
        values.push(v.min(max));
        i += 1;
    }
    values
}
