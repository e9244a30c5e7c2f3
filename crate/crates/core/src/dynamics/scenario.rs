//! Timed disturbances, the run loop and its recorded channels.

use num_complex::Complex64;

use super::integrator::{Integrator, IntegratorOptions, SimRhs, StepStats};
use super::{DynamicsError, NetworkState, SimSystem};
use crate::cvsc::{capacitor_energy, delta_vdc_star};
use crate::network::{BranchRef, NetworkEvent};

pub type EventKind = NetworkEvent;

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub t_end: f64,
    pub dt: f64,
    pub events: Vec<Event>,
    /// Channel-name prefixes to keep; empty keeps everything.
    pub outputs: Vec<String>,
}

impl Scenario {
    pub fn empty(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            events: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) {
            return Err(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0) {
            return Err(format!("t_end = {} must be positive", self.t_end));
        }
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time >= last) {
                return Err(format!("event {} at t = {} is out of order", i + 1, e.time));
            }
            if !(e.time < self.t_end) {
                return Err(format!(
                    "event {} at t = {} is not before t_end",
                    i + 1,
                    e.time
                ));
            }
            last = e.time;
        }
        Ok(())
    }

    /// From the first fault to the next clearing event, or `t_end` if none.
    pub fn fault_window(&self) -> Option<(f64, f64)> {
        let k = self
            .events
            .iter()
            .position(|e| matches!(e.kind, NetworkEvent::Fault { .. }))?;
        let end = self.events[k + 1..]
            .iter()
            .find(|e| matches!(e.kind, NetworkEvent::Clear { .. }))
            .map_or(self.t_end, |e| e.time);
        Some((self.events[k].time, end))
    }

    /// First fault in the list, used for the fault-point voltage channel.
    fn fault_site(&self) -> Option<(BranchRef, f64)> {
        self.events.iter().find_map(|e| match e.kind {
            NetworkEvent::Fault {
                branch, location, ..
            } => Some((branch, location)),
            _ => None,
        })
    }
}

/// Per-unit channels, suffixed `_N` in the series.
pub const UNIT_CHANNELS: [&str; 13] = [
    "v_dc",
    "p_e",
    "q_e",
    "p_in",
    "p_storage",
    "p_me",
    "v_t",
    "delta_theta",
    "omega_r",
    "omega_t",
    "m",
    "beta",
    "i_s",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub time: Vec<f64>,
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn unit(&self, name: &str, unit: usize) -> Option<&[f64]> {
        self.channel(&format!("{name}_{unit}"))
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    fn push_row(&mut self, t: f64, row: &[f64]) {
        self.time.push(t);
        for (d, v) in self.data.iter_mut().zip(row) {
            d.push(*v);
        }
    }

    /// Keep only channels whose name starts with one of `prefixes`.
    pub fn filtered(&self, prefixes: &[String]) -> TimeSeries {
        if prefixes.is_empty() {
            return self.clone();
        }
        let keep: Vec<usize> = (0..self.names.len())
            .filter(|&i| {
                prefixes
                    .iter()
                    .any(|p| self.names[i].starts_with(p.as_str()))
            })
            .collect();
        TimeSeries {
            time: self.time.clone(),
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            data: keep.iter().map(|&i| self.data[i].clone()).collect(),
        }
    }

    /// Index of the first sample at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.time.partition_point(|&x| x < t)
    }

    /// Balanced three-phase reconstruction of every bus-voltage phasor
    /// channel pair `v_bus_N` / `a_bus_N`, in pu instantaneous values.
    pub fn with_waveforms(&self, f_n: f64) -> TimeSeries {
        let mut out = self.clone();
        let w = 2.0 * std::f64::consts::PI * f_n;
        let shift = 2.0 * std::f64::consts::PI / 3.0;
        let buses: Vec<String> = self
            .names
            .iter()
            .filter_map(|n| n.strip_prefix("v_bus_").map(str::to_string))
            .collect();
        for b in buses {
            let (Some(mag), Some(ang)) = (
                self.channel(&format!("v_bus_{b}")),
                self.channel(&format!("a_bus_{b}")),
            ) else {
                continue;
            };
            for (ph, k) in [("a", 0.0), ("b", -1.0), ("c", 1.0)] {
                let vals = self
                    .time
                    .iter()
                    .zip(mag.iter().zip(ang))
                    .map(|(&t, (&m, &a))| 2f64.sqrt() * m * (w * t + a + k * shift).cos())
                    .collect();
                out.names.push(format!("v{ph}_bus_{b}"));
                out.data.push(vals);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: TimeSeries,
    pub final_state: Vec<f64>,
    pub stats: StepStats,
    /// Set when integration stopped early; the series is then partial.
    pub error: Option<DynamicsError>,
}

struct Recorder<'a> {
    sys: &'a SimSystem,
    fault: Option<(usize, f64, usize, usize)>,
    series: TimeSeries,
}

impl<'a> Recorder<'a> {
    fn new(sys: &'a SimSystem, scenario: &Scenario) -> Result<Self, DynamicsError> {
        let mut names = Vec::new();
        for u in &sys.units {
            for c in UNIT_CHANNELS {
                names.push(format!("{c}_{}", u.number));
            }
        }
        for b in &sys.dynamic_network.buses {
            names.push(format!("v_bus_{}", b.id));
        }
        for b in &sys.dynamic_network.buses {
            names.push(format!("a_bus_{}", b.id));
        }
        let base = &sys.dynamic_network;
        let fault = match scenario.fault_site() {
            Some((r, loc)) => {
                let k = r.resolve(base)?;
                let br = &base.branches[k];
                names.push("v_fault".into());
                Some((
                    k,
                    loc,
                    base.bus_index(br.from).unwrap(),
                    base.bus_index(br.to).unwrap(),
                ))
            }
            None => None,
        };
        names.push("p_load".into());
        names.push("p_loss".into());
        let data = vec![Vec::new(); names.len()];
        Ok(Self {
            sys,
            fault,
            series: TimeSeries {
                time: Vec::new(),
                names,
                data,
            },
        })
    }

    fn record(&mut self, t: f64, net: &NetworkState, x: &[f64]) -> Result<(), DynamicsError> {
        let sys = self.sys;
        let outs = sys.outputs(net, x)?;
        let mut row = Vec::with_capacity(self.series.names.len());
        for (i, o) in outs.iter().enumerate() {
            let (s, _) = sys.unit_state(x, i);
            row.extend_from_slice(&[
                s.v_dc,
                o.p_e,
                o.q_e,
                o.p_in,
                o.p_storage,
                o.p_me,
                o.v_t,
                s.delta_theta,
                s.omega_r,
                s.omega_t,
                s.m,
                o.beta,
                s.i_s,
            ]);
        }
        let v = sys.bus_voltages(net, x);
        let nb = sys.dynamic_network.buses.len();
        row.extend(v[..nb].iter().map(|c| c.norm()));
        row.extend(v[..nb].iter().map(|c| c.arg()));
        if let Some((k, loc, f, to)) = self.fault {
            let vf = if let Some(&id) = net.fault_points.first() {
                v[net.model.bus_index(id).unwrap()].norm()
            } else if net.topology.is_open(k) {
                0.0
            } else {
                (v[f] * (1.0 - loc) + v[to] * loc).norm()
            };
            row.push(vf);
        }
        let (load, loss) = sys.power_split(net, x);
        row.push(load);
        row.push(loss);
        self.series.push_row(t, &row);
        Ok(())
    }
}

fn same_time(a: f64, b: f64, dt: f64) -> bool {
    (a - b).abs() <= 1e-9 * dt
}

/// Integrate a scenario from `x0`. Events land exactly on step boundaries;
/// a sample is recorded on both sides of every event.
pub fn run_scenario(
    sys: &SimSystem,
    scenario: &Scenario,
    x0: &[f64],
) -> Result<RunOutcome, DynamicsError> {
    scenario
        .validate()
        .map_err(|reason| DynamicsError::Integration { t: 0.0, reason })?;
    let dt = scenario.dt;
    let mut rec = Recorder::new(sys, scenario)?;
    let mut net = sys.network_state(sys.initial_topology())?;
    let mut integ = Integrator::new(IntegratorOptions {
        dt,
        ..Default::default()
    });
    let mut x = x0.to_vec();
    let mut fx = sys.derivatives(&net, &x)?;
    rec.record(0.0, &net, &x)?;
    let mut t = 0.0;
    let mut k: u64 = 0;
    let mut next_event = 0;
    let mut error = None;
    loop {
        let mut switched = false;
        while next_event < scenario.events.len()
            && same_time(scenario.events[next_event].time, t, dt)
        {
            let topo = net.topology.apply(&scenario.events[next_event].kind)?;
            net = sys.network_state(topo)?;
            switched = true;
            next_event += 1;
        }
        if switched {
            integ.invalidate();
            fx = sys.derivatives(&net, &x)?;
            rec.record(t, &net, &x)?;
        }
        if t >= scenario.t_end || same_time(t, scenario.t_end, dt) {
            break;
        }
        let grid = (k + 1) as f64 * dt;
        let mut target = grid.min(scenario.t_end);
        if let Some(e) = scenario.events.get(next_event) {
            if e.time < target || same_time(e.time, target, dt) {
                target = e.time;
            }
        }
        if same_time(target, grid, dt) {
            k += 1;
        }
        let rhs = SimRhs { sys, net: &net };
        let step = integ.advance(&rhs, &x, &fx, t, target - t);
        for (ti, xi) in std::mem::take(&mut integ.interior) {
            rec.record(ti, &net, &xi)?;
        }
        match step {
            Ok((xn, fxn)) => {
                x = xn;
                fx = fxn;
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
        t = target;
        if let Err(e) = rec.record(t, &net, &x) {
            error = Some(e);
            break;
        }
    }
    let series = rec.series.filtered(&scenario.outputs);
    Ok(RunOutcome {
        series,
        final_state: x,
        stats: integ.stats,
        error,
    })
}

/// Per-unit metrics extracted from a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSummary {
    pub number: usize,
    pub v_dc_max: f64,
    pub v_dc_min: f64,
    pub v_dc_final: f64,
    /// Last time `v_dc` was more than 1 V away from its final value, s.
    pub v_dc_settling_time: f64,
    pub p_e_initial: f64,
    pub p_e_min: f64,
    pub p_e_max: f64,
    pub p_e_final: f64,
    /// `|½C·Δ(v²) − ∫(p_me − p_e)dt|` at the end of the run, J.
    pub energy_residual: f64,
    /// Peak `|½C·Δ(v²)|` over the run, J.
    pub energy_swing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub units: Vec<UnitSummary>,
    /// max over pairs of `|ΔV*_i − ΔV*_j|` at the final sample.
    pub sync_residual: f64,
    pub p_e_total_initial: f64,
    pub p_e_total_final: f64,
    pub p_load_initial: f64,
    pub p_load_final: f64,
    pub p_loss_initial: f64,
    pub p_loss_final: f64,
    pub v_fault_min: Option<f64>,
}

impl ScenarioSummary {
    /// Largest energy residual as a fraction of its swing.
    pub fn worst_energy_ratio(&self) -> f64 {
        self.units
            .iter()
            .map(|u| {
                if u.energy_swing > 0.0 {
                    u.energy_residual / u.energy_swing
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Summaries over the whole series. `window` limits the fault-voltage
/// minimum to samples strictly inside an interval, which excludes the
/// samples recorded on either side of the bounding events.
pub fn summarize(sys: &SimSystem, ts: &TimeSeries, window: Option<(f64, f64)>) -> ScenarioSummary {
    let last = ts.len() - 1;
    let mut units = Vec::new();
    let mut dv = Vec::new();
    for u in &sys.units {
        let n = u.number;
        let v = ts.unit("v_dc", n).unwrap();
        let pe = ts.unit("p_e", n).unwrap();
        let pme = ts.unit("p_me", n).unwrap();
        let c = u.params.c;
        let mut integral = 0.0;
        let mut swing: f64 = 0.0;
        for k in 1..ts.len() {
            let h = ts.time[k] - ts.time[k - 1];
            integral += 0.5 * h * ((pme[k] - pe[k]) + (pme[k - 1] - pe[k - 1]));
            swing = swing.max(capacitor_energy(v[k], v[0], c).abs());
        }
        let energy = capacitor_energy(v[last], v[0], c);
        units.push(UnitSummary {
            number: n,
            v_dc_max: v.iter().copied().fold(f64::MIN, f64::max),
            v_dc_min: v.iter().copied().fold(f64::MAX, f64::min),
            v_dc_final: v[last],
            v_dc_settling_time: v
                .iter()
                .rposition(|x| (x - v[last]).abs() > 1.0)
                .map_or(ts.time[0], |k| ts.time[(k + 1).min(last)]),
            p_e_initial: pe[0],
            p_e_min: pe.iter().copied().fold(f64::MAX, f64::min),
            p_e_max: pe.iter().copied().fold(f64::MIN, f64::max),
            p_e_final: pe[last],
            energy_residual: (energy - integral).abs(),
            energy_swing: swing,
        });
        dv.push(delta_vdc_star(v[last], u.params.v_dc_nom));
    }
    let mut sync: f64 = 0.0;
    for a in &dv {
        for b in &dv {
            sync = sync.max((a - b).abs());
        }
    }
    let total = |k: usize| {
        sys.units
            .iter()
            .map(|u| ts.unit("p_e", u.number).unwrap()[k])
            .sum::<f64>()
    };
    let v_fault_min = ts.channel("v_fault").map(|vf| {
        let (a, b) = window.unwrap_or((f64::MIN, f64::MAX));
        ts.time
            .iter()
            .zip(vf)
            .filter(|(t, _)| **t > a && **t < b)
            .map(|(_, v)| *v)
            .fold(f64::MAX, f64::min)
    });
    let load = ts.channel("p_load").unwrap();
    let loss = ts.channel("p_loss").unwrap();
    ScenarioSummary {
        units,
        sync_residual: sync,
        p_e_total_initial: total(0),
        p_e_total_final: total(last),
        p_load_initial: load[0],
        p_load_final: load[last],
        p_loss_initial: loss[0],
        p_loss_final: loss[last],
        v_fault_min,
    }
}

/// Phasor of a bus at sample `k` from the magnitude and angle channels.
pub fn bus_phasor(ts: &TimeSeries, bus: usize, k: usize) -> Option<Complex64> {
    let m = ts.channel(&format!("v_bus_{bus}"))?[k];
    let a = ts.channel(&format!("a_bus_{bus}"))?[k];
    Some(Complex64::from_polar(m, a))
}
