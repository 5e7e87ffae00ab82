//! Closed-form pixel to inter-spike-interval chain.
//!
//! A pixel is mapped to an input voltage (`pixel / 2` millivolts), the input
//! voltage sets a subthreshold excitatory current that is exponential in the
//! voltage, each branch capacitor integrates that current up to the membrane
//! threshold, and the difference between the integrating times of adjacent
//! branches is the inter-spike interval. Every step has an exact inverse so
//! intervals can be decoded back to pixels.
//!
//! All quantities are SI (`f64` volts, amperes, farads, seconds). The bare
//! pixel term that appears in the pixel-domain exponent carries an implicit
//! unit of one millivolt.

use std::fmt;

use thiserror::Error;

/// One pixel unit in the pixel-domain exponent, in volts.
pub const MILLIVOLT: f64 = 1e-3;

/// Default neuron-enable frequency (1.1 MHz).
pub const DEFAULT_ENABLE_HZ: f64 = 1.1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("branch never reaches threshold: excitatory current {i_ex:e} A <= leak {i_leak:e} A")]
    NonSpiking { i_ex: f64, i_leak: f64 },
    #[error("branches {lower} and {upper} have non-increasing membrane capacitance")]
    DegenerateBranches { lower: usize, upper: usize },
    #[error("interval index {index} out of range for {branches} branches")]
    BadIndex { index: usize, branches: usize },
    #[error("branches {lower} and {upper} do not share a mirror weight")]
    MixedWeights { lower: usize, upper: usize },
    #[error("value maps to pixel {value:.3}, outside the representable range")]
    OutOfRange { value: f64 },
    #[error("non-positive interval {0:e} s")]
    NonPositiveInterval(f64),
    #[error("invalid branch set: {0}")]
    InvalidBranchSet(String),
}

/// An 8-bit pixel intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pixel(pub u8);

impl Pixel {
    pub const MIN: Pixel = Pixel(0);
    pub const MAX: Pixel = Pixel(255);

    pub fn value(self) -> u8 {
        self.0
    }

    /// Every pixel value, ascending.
    pub fn all() -> impl Iterator<Item = Pixel> + Clone {
        (0..=255u8).map(Pixel)
    }
}

impl From<u8> for Pixel {
    fn from(v: u8) -> Self {
        Pixel(v)
    }
}

impl fmt::Display for Pixel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Circuit constants shared by every branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Supply voltage.
    pub v_dd: f64,
    /// Magnitude of the p-type threshold voltage.
    pub v_tp_abs: f64,
    /// Subthreshold slope factor.
    pub slope_s: f64,
    /// Thermal voltage.
    pub u_t: f64,
    /// Membrane threshold voltage.
    pub v_tm: f64,
    /// Leak bias voltage. Informational only; the model uses `i_leak`.
    pub v_leak: f64,
    /// Constant leak current drawn from every membrane.
    pub i_leak: f64,
    /// Period of the neuron-enable clock.
    pub t_samp: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            v_dd: 1.0,
            v_tp_abs: 0.45,
            slope_s: 1.3,
            u_t: 0.02585,
            v_tm: 0.4,
            v_leak: 0.25,
            i_leak: 1e-9,
            t_samp: 1.0 / DEFAULT_ENABLE_HZ,
        }
    }
}

impl DeviceParams {
    /// Same parameters with the leak current removed.
    pub fn without_leak(self) -> Self {
        DeviceParams { i_leak: 0.0, ..self }
    }

    /// `s * U_T`, the subthreshold exponent scale.
    fn slope_voltage(&self) -> f64 {
        self.slope_s * self.u_t
    }

    /// Field-level invariant violations, empty when the parameters are sane.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, name: &'static str, detail: String| {
            if !ok {
                out.push(Violation::Param { name, detail });
            }
        };
        let all_finite = [
            self.v_dd,
            self.v_tp_abs,
            self.slope_s,
            self.u_t,
            self.v_tm,
            self.v_leak,
            self.i_leak,
            self.t_samp,
        ]
        .iter()
        .all(|v| v.is_finite());
        check(all_finite, "params", "all parameters must be finite".into());
        check(self.v_dd > 0.0, "v_dd", format!("must be > 0, got {}", self.v_dd));
        check(self.u_t > 0.0, "u_t", format!("must be > 0, got {}", self.u_t));
        check(
            self.slope_s >= 1.0,
            "slope_s",
            format!("must be >= 1, got {}", self.slope_s),
        );
        check(self.v_tm > 0.0, "v_tm", format!("must be > 0, got {}", self.v_tm));
        check(
            self.v_tm < self.v_dd,
            "v_tm",
            format!("must be below v_dd ({}), got {}", self.v_dd, self.v_tm),
        );
        check(
            self.v_tp_abs >= 0.0,
            "v_tp_abs",
            format!("must be >= 0, got {}", self.v_tp_abs),
        );
        check(
            2.0 * self.v_tp_abs < self.v_dd,
            "v_tp_abs",
            format!(
                "2*v_tp_abs ({}) must be below v_dd ({})",
                2.0 * self.v_tp_abs,
                self.v_dd
            ),
        );
        check(self.i_leak >= 0.0, "i_leak", format!("must be >= 0, got {}", self.i_leak));
        check(self.t_samp > 0.0, "t_samp", format!("must be > 0, got {}", self.t_samp));
        out
    }
}

/// One neuron branch: a membrane capacitor fed by a weighted mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub c_mem: f64,
    /// Mirror weight K, the prefactor of the excitatory current.
    pub k_weight: f64,
}

impl Branch {
    pub fn new(c_mem: f64, k_weight: f64) -> Self {
        Branch { c_mem, k_weight }
    }
}

/// Ordered branches with strictly increasing membrane capacitance.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    branches: Vec<Branch>,
}

impl BranchSet {
    pub fn new(branches: Vec<Branch>) -> Result<Self, ModelError> {
        if branches.len() < 2 {
            return Err(ModelError::InvalidBranchSet(format!(
                "need at least 2 branches, got {}",
                branches.len()
            )));
        }
        for (i, b) in branches.iter().enumerate() {
            if !(b.c_mem > 0.0 && b.c_mem.is_finite()) {
                return Err(ModelError::InvalidBranchSet(format!(
                    "branch {i}: c_mem must be positive, got {}",
                    b.c_mem
                )));
            }
            if !(b.k_weight > 0.0 && b.k_weight.is_finite()) {
                return Err(ModelError::InvalidBranchSet(format!(
                    "branch {i}: k_weight must be positive, got {}",
                    b.k_weight
                )));
            }
        }
        if let Some(i) = branches.windows(2).position(|w| w[1].c_mem <= w[0].c_mem) {
            return Err(ModelError::InvalidBranchSet(format!(
                "c_mem must be strictly increasing (branch {} = {:e} F, branch {} = {:e} F)",
                i,
                branches[i].c_mem,
                i + 1,
                branches[i + 1].c_mem
            )));
        }
        Ok(BranchSet { branches })
    }

    /// Branches sharing one mirror weight.
    pub fn uniform(c_mems: &[f64], k_weight: f64) -> Result<Self, ModelError> {
        Self::new(c_mems.iter().map(|&c| Branch::new(c, k_weight)).collect())
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Number of inter-spike intervals per window.
    pub fn interval_count(&self) -> usize {
        self.branches.len() - 1
    }

    pub fn get(&self, index: usize) -> Option<&Branch> {
        self.branches.get(index)
    }

    fn pair(&self, index: usize) -> Result<(&Branch, &Branch), ModelError> {
        match (self.branches.get(index), self.branches.get(index + 1)) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(ModelError::BadIndex {
                index,
                branches: self.branches.len(),
            }),
        }
    }

    /// True when every branch uses the same mirror weight.
    pub fn shares_weight(&self) -> bool {
        self.branches
            .windows(2)
            .all(|w| w[0].k_weight == w[1].k_weight)
    }
}

impl Default for BranchSet {
    fn default() -> Self {
        BranchSet::uniform(&[50e-15, 100e-15, 150e-15], 200e-9).expect("default branches")
    }
}

/// Pixel to input voltage: `pixel / 2` millivolts.
pub fn pixel_to_input_voltage(p: Pixel) -> f64 {
    f64::from(p.0) / 2.0 * MILLIVOLT
}

/// Exact pixel value (possibly fractional or out of range) of a voltage.
fn voltage_to_pixel_units(v: f64) -> f64 {
    v / MILLIVOLT * 2.0
}

/// Round-half-up to an integer pixel, or report the unclamped value.
pub fn input_voltage_to_pixel(v: f64) -> Result<Pixel, ModelError> {
    let value = voltage_to_pixel_units(v);
    let rounded = round_half_up(value);
    if !(0.0..=255.0).contains(&rounded) {
        return Err(ModelError::OutOfRange { value });
    }
    Ok(Pixel(rounded as u8))
}

/// Like [`input_voltage_to_pixel`] but saturating at 0 and 255.
pub fn input_voltage_to_pixel_clamped(v: f64) -> Pixel {
    let rounded = round_half_up(voltage_to_pixel_units(v));
    if rounded.is_nan() {
        return Pixel::MIN;
    }
    Pixel(rounded.clamp(0.0, 255.0) as u8)
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Potential between the two diode-connected devices: `(V_DD + V_in) / 2`.
pub fn intermediate_potential(v_in: f64, params: &DeviceParams) -> f64 {
    (params.v_dd + v_in) / 2.0
}

/// Mirrored subthreshold current for an input voltage.
///
/// `K * exp(((V_DD - V_in)/2 - |V_tp|) / (s * U_T))`, strictly decreasing in `v_in`.
pub fn excitatory_current(v_in: f64, branch: &Branch, params: &DeviceParams) -> f64 {
    let exponent = ((params.v_dd - v_in) / 2.0 - params.v_tp_abs) / params.slope_voltage();
    branch.k_weight * exponent.exp()
}

/// The same current written directly in the pixel domain:
/// `K * exp((2 V_DD - pixel*1mV - 4|V_tp|) / (4 s U_T))`.
pub fn excitatory_current_from_pixel(p: Pixel, branch: &Branch, params: &DeviceParams) -> f64 {
    let numerator = 2.0 * params.v_dd - f64::from(p.0) * MILLIVOLT - 4.0 * params.v_tp_abs;
    branch.k_weight * (numerator / (4.0 * params.slope_voltage())).exp()
}

/// Time for a reset membrane to charge up to `V_TM`: `C_mem V_TM / (I_ex - I_leak)`.
pub fn integrating_time(branch: &Branch, i_ex: f64, params: &DeviceParams) -> Result<f64, ModelError> {
    let net = i_ex - params.i_leak;
    if !(net > 0.0) {
        return Err(ModelError::NonSpiking {
            i_ex,
            i_leak: params.i_leak,
        });
    }
    Ok(branch.c_mem * params.v_tm / net)
}

/// Integrating time of one branch for a pixel.
pub fn branch_integrating_time(
    p: Pixel,
    branch: &Branch,
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    let i_ex = excitatory_current(pixel_to_input_voltage(p), branch, params);
    integrating_time(branch, i_ex, params)
}

/// Leak-free closed form for a capacitance step `delta_c` under a shared weight.
///
/// `delta_c * V_TM / K * exp((pixel*1mV + 4|V_tp| - 2 V_DD) / (4 s U_T))`.
pub fn closed_form_interval(p: Pixel, delta_c: f64, k_weight: f64, params: &DeviceParams) -> f64 {
    let numerator = f64::from(p.0) * MILLIVOLT + 4.0 * params.v_tp_abs - 2.0 * params.v_dd;
    delta_c * params.v_tm * (1.0 / k_weight) * (numerator / (4.0 * params.slope_voltage())).exp()
}

/// Leak-omitted closed-form interval between branch `index` and `index + 1`.
///
/// Ignores `params.i_leak` entirely; the branches must share a mirror weight.
pub fn interval_closed_form(
    p: Pixel,
    index: usize,
    bset: &BranchSet,
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    let (lo, hi) = bset.pair(index)?;
    if hi.c_mem <= lo.c_mem {
        return Err(ModelError::DegenerateBranches {
            lower: index,
            upper: index + 1,
        });
    }
    if lo.k_weight != hi.k_weight {
        return Err(ModelError::MixedWeights {
            lower: index,
            upper: index + 1,
        });
    }
    Ok(closed_form_interval(p, hi.c_mem - lo.c_mem, lo.k_weight, params))
}

/// Interval as the difference of the two branches' integrating times.
pub fn interval_from_integrating_times(
    p: Pixel,
    index: usize,
    bset: &BranchSet,
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    let (lo, hi) = bset.pair(index)?;
    if hi.c_mem <= lo.c_mem {
        return Err(ModelError::DegenerateBranches {
            lower: index,
            upper: index + 1,
        });
    }
    let x_lo = branch_integrating_time(p, lo, params)?;
    let x_hi = branch_integrating_time(p, hi, params)?;
    Ok(x_hi - x_lo)
}

/// Analytic inter-spike interval `D_index`.
///
/// Uses the closed form when there is no leak and the pair shares a weight;
/// otherwise the exact integrating-time difference.
pub fn interspike_interval_analytic(
    p: Pixel,
    index: usize,
    bset: &BranchSet,
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    let (lo, hi) = bset.pair(index)?;
    if params.i_leak == 0.0 && lo.k_weight == hi.k_weight {
        interval_closed_form(p, index, bset, params)
    } else {
        interval_from_integrating_times(p, index, bset, params)
    }
}

/// How far outside `[0, 255]` a decoded value may fall before it is rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeTolerance(pub f64);

impl Default for DecodeTolerance {
    fn default() -> Self {
        DecodeTolerance(0.5)
    }
}

/// Unrounded pixel value implied by an interval between branches `lower` and `upper`.
///
/// Inverts the integrating-time difference for a shared weight:
/// `I_ex = (C_upper - C_lower) V_TM / d + I_leak`, then the exponential
/// current law back to the input voltage. With zero leak this is exactly the
/// inverse of the closed form.
pub fn pixel_units_from_interval(
    d: f64,
    lower: usize,
    upper: usize,
    bset: &BranchSet,
    params: &DeviceParams,
) -> Result<f64, ModelError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(ModelError::NonPositiveInterval(d));
    }
    let branches = bset.branches();
    let (lo, hi) = match (branches.get(lower), branches.get(upper)) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => {
            return Err(ModelError::BadIndex {
                index: lower.max(upper),
                branches: branches.len(),
            })
        }
    };
    if hi.c_mem <= lo.c_mem {
        return Err(ModelError::DegenerateBranches { lower, upper });
    }
    if lo.k_weight != hi.k_weight {
        return Err(ModelError::MixedWeights { lower, upper });
    }
    let i_ex = (hi.c_mem - lo.c_mem) * params.v_tm / d + params.i_leak;
    let v_in = params.v_dd - 2.0 * (params.v_tp_abs + params.slope_voltage() * (i_ex / lo.k_weight).ln());
    Ok(voltage_to_pixel_units(v_in))
}

/// Decode an interval between arbitrary branches `lower < upper` to a pixel.
pub fn decode_pixel_between(
    d: f64,
    lower: usize,
    upper: usize,
    bset: &BranchSet,
    params: &DeviceParams,
    tol: DecodeTolerance,
) -> Result<Pixel, ModelError> {
    let value = pixel_units_from_interval(d, lower, upper, bset, params)?;
    if !(value >= -tol.0 && value <= 255.0 + tol.0) {
        return Err(ModelError::OutOfRange { value });
    }
    Ok(Pixel(round_half_up(value).clamp(0.0, 255.0) as u8))
}

/// Decode interval `D_index` back to its pixel.
pub fn decode_pixel_from_interval(
    d: f64,
    index: usize,
    bset: &BranchSet,
    params: &DeviceParams,
    tol: DecodeTolerance,
) -> Result<Pixel, ModelError> {
    decode_pixel_between(d, index, index + 1, bset, params, tol)
}

/// A reason a configuration cannot encode every pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Param { name: &'static str, detail: String },
    /// The slowest branch at the dimmest pixel does not spike inside one window.
    WindowOverrun { x_last: f64, t_samp: f64 },
    /// The leak swallows the excitatory current of the dimmest pixel.
    LeakDominates { i_leak: f64, i_ex_min: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Param { name, detail } => write!(f, "{name}: {detail}"),
            Violation::WindowOverrun { x_last, t_samp } => write!(
                f,
                "slowest integrating time at pixel 255 ({:.4} ns) does not fit the enable period ({:.4} ns)",
                x_last * 1e9,
                t_samp * 1e9
            ),
            Violation::LeakDominates { i_leak, i_ex_min } => write!(
                f,
                "leak current ({:.4} nA) is not below the pixel-255 excitatory current ({:.4} nA)",
                i_leak * 1e9,
                i_ex_min * 1e9
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check that every pixel produces one spike per branch inside one enable window.
pub fn validate_params(bset: &BranchSet, params: &DeviceParams) -> ValidationReport {
    let mut violations = params.violations();
    if !violations.is_empty() {
        return ValidationReport { violations };
    }
    let v_dim = pixel_to_input_voltage(Pixel::MAX);
    let i_ex_min = bset
        .branches()
        .iter()
        .map(|b| excitatory_current(v_dim, b, params))
        .fold(f64::INFINITY, f64::min);
    if !(params.i_leak < i_ex_min) {
        violations.push(Violation::LeakDominates {
            i_leak: params.i_leak,
            i_ex_min,
        });
    } else {
        let x_last = bset
            .branches()
            .iter()
            .map(|b| branch_integrating_time(Pixel::MAX, b, params))
            .collect::<Result<Vec<_>, _>>()
            .map(|xs| xs.into_iter().fold(0.0, f64::max));
        match x_last {
            Ok(x_last) if x_last < params.t_samp => {}
            Ok(x_last) => violations.push(Violation::WindowOverrun {
                x_last,
                t_samp: params.t_samp,
            }),
            Err(_) => violations.push(Violation::LeakDominates {
                i_leak: params.i_leak,
                i_ex_min,
            }),
        }
    }
    ValidationReport { violations }
}
