//! Behavioral simulation of the branch neurons.
//!
//! Each enable window resets every membrane to 0 V, then integrates the net
//! current `I_ex - I_leak` with fixed forward-Euler steps until the membrane
//! crosses `V_TM`. The crossing instant is recovered by linear interpolation
//! inside the final step. This path never uses the closed-form integrating
//! time, so it serves as an independent check on the model.

use thiserror::Error;

use crate::model::{excitatory_current, pixel_to_input_voltage, Branch, BranchSet, DeviceParams, Pixel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("branch did not reach threshold within the enable window")]
    NonSpiking,
    #[error("spike train is not sorted by (time, branch) at event {0}")]
    MalformedTrain(usize),
    #[error("invalid simulation step {dt:e} s (must be > 0 and <= t_samp/100 = {max:e} s)")]
    BadStep { dt: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneState {
    pub v_mem: f64,
    pub t: f64,
}

impl MembraneState {
    pub fn reset(t: f64) -> Self {
        MembraneState { v_mem: 0.0, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub branch_id: usize,
    /// Absolute time on the global timeline, seconds.
    pub t: f64,
}

/// Spike events ordered by `(t, branch_id)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpikeTrain {
    pub events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    /// Build a train, sorting the events.
    pub fn sorted(mut events: Vec<SpikeEvent>) -> Self {
        events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.branch_id.cmp(&b.branch_id)));
        SpikeTrain { events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Index of the first event that breaks strict `(t, branch_id)` order.
    pub fn first_disorder(&self) -> Option<usize> {
        self.events
            .windows(2)
            .position(|w| {
                let (a, b) = (&w[0], &w[1]);
                !(a.t < b.t || (a.t == b.t && a.branch_id < b.branch_id))
            })
            .map(|i| i + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integration step, seconds.
    pub dt: f64,
    pub crossing_interpolation: bool,
}

impl SimConfig {
    /// Default step: one ten-thousandth of the enable period.
    pub fn for_params(params: &DeviceParams) -> Self {
        SimConfig {
            dt: params.t_samp / 1e4,
            crossing_interpolation: true,
        }
    }

    pub fn check(&self, params: &DeviceParams) -> Result<(), SimError> {
        let max = params.t_samp / 100.0;
        if self.dt > 0.0 && self.dt <= max {
            Ok(())
        } else {
            Err(SimError::BadStep { dt: self.dt, max })
        }
    }
}

/// One forward-Euler step of `C dV/dt = I_ex - I_leak`.
///
/// The result may overshoot `V_TM`; the caller handles the crossing.
pub fn step_membrane(state: MembraneState, i_ex: f64, i_leak: f64, c_mem: f64, dt: f64) -> MembraneState {
    MembraneState {
        v_mem: state.v_mem + (i_ex - i_leak) * dt / c_mem,
        t: state.t + dt,
    }
}

/// Time from window start to the first threshold crossing of one branch.
pub fn simulate_branch(
    p: Pixel,
    branch: &Branch,
    params: &DeviceParams,
    sim: &SimConfig,
) -> Result<f64, SimError> {
    sim.check(params)?;
    let i_ex = excitatory_current(pixel_to_input_voltage(p), branch, params);
    if !(i_ex > params.i_leak) {
        return Err(SimError::NonSpiking);
    }
    let max_steps = (params.t_samp / sim.dt).ceil() as u64;
    let mut state = MembraneState::reset(0.0);
    for n in 1..=max_steps {
        let next = step_membrane(state, i_ex, params.i_leak, branch.c_mem, sim.dt);
        if next.v_mem >= params.v_tm {
            // Step count times dt avoids drift from accumulating `t`.
            let t_prev = (n - 1) as f64 * sim.dt;
            let crossing = if sim.crossing_interpolation {
                t_prev + (params.v_tm - state.v_mem) / (next.v_mem - state.v_mem) * sim.dt
            } else {
                n as f64 * sim.dt
            };
            return if crossing < params.t_samp {
                Ok(crossing)
            } else {
                Err(SimError::NonSpiking)
            };
        }
        state = next;
    }
    Err(SimError::NonSpiking)
}

/// Result of simulating one pixel window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PixelSimulation {
    pub train: SpikeTrain,
    /// Branches that produced no spike in the window.
    pub silent_branches: Vec<usize>,
}

/// Simulate every branch for one pixel in the window starting at `window_start`.
pub fn simulate_pixel(
    p: Pixel,
    bset: &BranchSet,
    params: &DeviceParams,
    sim: &SimConfig,
    window_start: f64,
) -> Result<PixelSimulation, SimError> {
    sim.check(params)?;
    let mut events = Vec::with_capacity(bset.len());
    let mut silent_branches = Vec::new();
    for (branch_id, branch) in bset.branches().iter().enumerate() {
        match simulate_branch(p, branch, params, sim) {
            Ok(x) => events.push(SpikeEvent {
                branch_id,
                t: window_start + x,
            }),
            Err(SimError::NonSpiking) => silent_branches.push(branch_id),
            Err(e) => return Err(e),
        }
    }
    Ok(PixelSimulation {
        train: SpikeTrain::sorted(events),
        silent_branches,
    })
}

/// Differences between consecutive spike times of one window.
pub fn measure_intervals(train: &SpikeTrain) -> Result<Vec<f64>, SimError> {
    if let Some(i) = train.first_disorder() {
        return Err(SimError::MalformedTrain(i));
    }
    Ok(train.events.windows(2).map(|w| w[1].t - w[0].t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{branch_integrating_time, interspike_interval_analytic};

    fn params() -> DeviceParams {
        DeviceParams::default().without_leak()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn step_examples() {
        let s = MembraneState { v_mem: 0.1, t: 0.0 };
        assert_eq!(step_membrane(s, 5e-9, 5e-9, 50e-15, 1e-9).v_mem, 0.1);

        let s = step_membrane(MembraneState::reset(0.0), 400e-9, 0.0, 50e-15, 1e-9);
        assert!((s.v_mem - 8e-3).abs() < 1e-15);
        assert_eq!(s.t, 1e-9);

        let half = step_membrane(step_membrane(MembraneState::reset(0.0), 400e-9, 0.0, 50e-15, 0.5e-9), 400e-9, 0.0, 50e-15, 0.5e-9);
        assert!(rel(half.v_mem, s.v_mem) < 1e-15);
        assert_eq!(half.t, s.t);
    }

    #[test]
    fn branch_crossing_matches_charging_time() {
        let p = params();
        let sim = SimConfig::for_params(&p);
        let b = Branch::new(50e-15, 200e-9);
        let x = simulate_branch(Pixel(0), &b, &p, &sim).unwrap();
        assert!(rel(x, 2.258_523_462_734_688_7e-8) < 1e-9);
    }

    #[test]
    fn nonspiking_branch() {
        let p = DeviceParams {
            i_leak: 1e-3,
            ..params()
        };
        let sim = SimConfig::for_params(&p);
        assert_eq!(
            simulate_branch(Pixel(0), &Branch::new(50e-15, 200e-9), &p, &sim),
            Err(SimError::NonSpiking)
        );
        // Positive ramp, but too slow for the window.
        let slow = Branch::new(5e-12, 200e-9);
        assert_eq!(simulate_branch(Pixel(255), &slow, &params(), &sim), Err(SimError::NonSpiking));
    }

    #[test]
    fn step_size_independence_with_interpolation() {
        let p = params();
        let b = Branch::new(100e-15, 200e-9);
        let exact = branch_integrating_time(Pixel(40), &b, &p).unwrap();
        for div in [100.0, 777.0, 1e4, 3.3e4] {
            let sim = SimConfig {
                dt: p.t_samp / div,
                crossing_interpolation: true,
            };
            assert!(rel(simulate_branch(Pixel(40), &b, &p, &sim).unwrap(), exact) < 1e-9);
        }
    }

    #[test]
    fn no_interpolation_error_bounded_by_step() {
        let p = params();
        let sim = SimConfig {
            dt: p.t_samp / 1e3,
            crossing_interpolation: false,
        };
        let b = Branch::new(50e-15, 200e-9);
        for px in [Pixel(0), Pixel(128), Pixel(255)] {
            let exact = branch_integrating_time(px, &b, &p).unwrap();
            let x = simulate_branch(px, &b, &p, &sim).unwrap();
            assert!(x >= exact && x - exact <= sim.dt * (1.0 + 1e-9));
        }
    }

    #[test]
    fn bad_step_rejected() {
        let p = params();
        let sim = SimConfig {
            dt: p.t_samp / 50.0,
            crossing_interpolation: true,
        };
        assert!(matches!(
            simulate_branch(Pixel(0), &Branch::new(50e-15, 2e-7), &p, &sim),
            Err(SimError::BadStep { .. })
        ));
    }

    #[test]
    fn pixel_window_events() {
        let p = params();
        let sim = SimConfig::for_params(&p);
        let bset = BranchSet::default();
        let out = simulate_pixel(Pixel(0), &bset, &p, &sim, 0.0).unwrap();
        assert!(out.silent_branches.is_empty());
        let expected = [2.258_523_462_734_688_7e-8, 4.517_046_925_469_377_4e-8, 6.775_570_388_204_066e-8];
        assert_eq!(out.train.len(), 3);
        for (ev, (id, want)) in out.train.events.iter().zip(expected.iter().enumerate()) {
            assert_eq!(ev.branch_id, id);
            assert!(rel(ev.t, *want) < 1e-9);
        }

        let shifted = simulate_pixel(Pixel(0), &bset, &p, &sim, p.t_samp).unwrap();
        for (a, b) in shifted.train.events.iter().zip(&out.train.events) {
            assert_eq!(a.t, p.t_samp + b.t);
        }
    }

    #[test]
    fn silent_branches_reported() {
        let p = params();
        let sim = SimConfig::for_params(&p);
        let bset = BranchSet::uniform(&[50e-15, 3e-12], 200e-9).unwrap();
        let out = simulate_pixel(Pixel(255), &bset, &p, &sim, 0.0).unwrap();
        assert_eq!(out.train.len(), 1);
        assert_eq!(out.silent_branches, vec![1]);
    }

    #[test]
    fn interval_measurement() {
        let p = params();
        let sim = SimConfig::for_params(&p);
        let bset = BranchSet::default();
        let train = simulate_pixel(Pixel(0), &bset, &p, &sim, 0.0).unwrap().train;
        let d = measure_intervals(&train).unwrap();
        assert_eq!(d.len(), 2);
        for (i, di) in d.iter().enumerate() {
            let want = interspike_interval_analytic(Pixel(0), i, &bset, &p).unwrap();
            assert!(rel(*di, want) < 1e-6);
            assert!(rel(*di, 2.258_523_462_734_688_7e-8) < 1e-6);
        }

        let one = SpikeTrain { events: vec![SpikeEvent { branch_id: 0, t: 1.0 }] };
        assert!(measure_intervals(&one).unwrap().is_empty());
        assert!(measure_intervals(&SpikeTrain::default()).unwrap().is_empty());

        let unsorted = SpikeTrain {
            events: vec![SpikeEvent { branch_id: 0, t: 2.0 }, SpikeEvent { branch_id: 1, t: 1.0 }],
        };
        assert_eq!(measure_intervals(&unsorted), Err(SimError::MalformedTrain(1)));
    }
}
