//! Fixed-step closed-loop simulation of the agents, their auxiliary states
//! and the per-agent GP models.
//!
//! One control step, for a frozen snapshot of `(x, x̄)`:
//! 1. every agent evaluates `η` with its current model and its trigger;
//! 2. agents that fire take one measurement and add it to their model;
//! 3. `ẋ̄` and `u` are computed from the snapshot and the updated `f̂`;
//! 4. `(x, x̄)` advance by one RK4 step with `u` held constant.

use thiserror::Error;

use crate::analysis::{average_state, consensus_error, EpisodeSummary};
use crate::control::{
    auxiliary_rate, check_domain_containment, control_conventional, control_proposed, AgentView,
};
use crate::gp::{check_gamma_condition, estimate_lipschitz, GpError, GpModel};
use crate::integrator::rk4_step;
use crate::plant::PlantError;
use crate::rng::NoiseRng;
use crate::scalar::Real;
use crate::sim::config::{Compensation, ConfigError, Controller, MeasurementMode, Scenario, SimConfig};
use crate::trigger::{TriggerInputs, TriggerMode};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("t = {t}, agent {agent}: {source}")]
    Plant { t: f64, agent: usize, source: PlantError },
    #[error("t = {t}, agent {agent}: {source}")]
    Gp { t: f64, agent: usize, source: GpError },
}

impl SimError {
    /// Whether the failure is numerical (as opposed to a bad configuration).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, SimError::Config(_))
    }
}

/// World state between steps.
#[derive(Debug, Clone)]
pub struct SimState<T> {
    pub step: usize,
    pub t: T,
    pub x: Vec<T>,
    pub x_bar: Vec<T>,
    pub models: Vec<GpModel<T>>,
    pub trigger_counts: Vec<usize>,
    /// Input applied over the previous step (zero before the first one).
    pub u_prev: Vec<T>,
    pub x_prev: Vec<T>,
}

/// One logged row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub t: T,
    pub x: Vec<T>,
    pub x_bar: Vec<T>,
    pub u: Vec<T>,
    pub rho: Vec<T>,
    pub eta: Vec<T>,
    /// Whether a datapoint was actually added at this instant.
    pub fired: Vec<bool>,
    pub dataset_sizes: Vec<usize>,
    pub err: T,
}

/// One applied model update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent<T> {
    pub t: T,
    /// 0-based agent index.
    pub agent: usize,
    pub x: T,
    pub y: T,
    pub eta_before: T,
    /// Posterior std at `x` right after the update.
    pub std_after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub n_agents: usize,
    pub records: Vec<StepRecord<T>>,
    pub events: Vec<TriggerEvent<T>>,
}

struct Evaluation<T> {
    u: Vec<T>,
    rho: Vec<T>,
    eta: Vec<T>,
    fired: Vec<bool>,
}

pub struct Simulation<T: Real> {
    scenario: Scenario<T>,
    state: SimState<T>,
    rng: NoiseRng,
    x_bar_star: T,
    aux_mean0: T,
    aux_mean_drift: T,
    stayed_in_domain: bool,
    disagreements: usize,
    evaluations: usize,
    events: Vec<TriggerEvent<T>>,
}

impl<T: Real> Simulation<T> {
    /// Draws initial states (when sampled) and offline datasets from the
    /// seeded stream, in that order.
    pub fn new(scenario: Scenario<T>) -> Result<Self, SimError> {
        let cfg = &scenario.config;
        let n = cfg.n_agents;
        let mut rng = NoiseRng::new(cfg.seed);

        let x0: Vec<T> = match &cfg.initial_states {
            Some(x0) => x0.iter().map(|&v| T::lit(v)).collect(),
            None => {
                let (lo, hi) = cfg.init_range();
                (0..n).map(|_| T::lit(rng.uniform(lo, hi))).collect()
            }
        };

        let mut models = Vec::with_capacity(n);
        for agent in 0..n {
            let data = make_offline_dataset(&scenario, cfg.offline_dataset_size, &mut rng);
            let model = GpModel::from_data(scenario.kernel, scenario.noise_std, cfg.max_points, data)
                .map_err(|source| SimError::Gp { t: 0.0, agent: agent + 1, source })?;
            models.push(model);
        }

        let x_bar_star = average_state(&x0).expect("at least one agent");
        let state = SimState {
            step: 0,
            t: T::zero(),
            x_bar: x0.clone(),
            x_prev: x0.clone(),
            x: x0,
            models,
            trigger_counts: vec![0; n],
            u_prev: vec![T::zero(); n],
        };
        Ok(Self {
            scenario,
            state,
            rng,
            x_bar_star,
            aux_mean0: x_bar_star,
            aux_mean_drift: T::zero(),
            stayed_in_domain: true,
            disagreements: 0,
            evaluations: 0,
            events: Vec::new(),
        })
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn state(&self) -> &SimState<T> {
        &self.state
    }

    pub fn x_bar_star(&self) -> T {
        self.x_bar_star
    }

    pub fn events(&self) -> &[TriggerEvent<T>] {
        &self.events
    }

    fn t_f64(&self) -> f64 {
        self.state.t.to_f64_lossy()
    }

    fn plant_err(&self, agent: usize) -> impl Fn(PlantError) -> SimError {
        let t = self.t_f64();
        move |source| SimError::Plant { t, agent: agent + 1, source }
    }

    fn gp_err(&self, agent: usize) -> impl Fn(GpError) -> SimError {
        let t = self.t_f64();
        move |source| SimError::Gp { t, agent: agent + 1, source }
    }

    fn measured_derivative(&self, agent: usize) -> Result<T, SimError> {
        let x = self.state.x[agent];
        let u = self.state.u_prev[agent];
        match self.scenario.config.measurement {
            MeasurementMode::FiniteDifference if self.state.step > 0 => {
                Ok((x - self.state.x_prev[agent]) / self.scenario.dt)
            }
            _ => self.scenario.plant.drift(x, u).map_err(self.plant_err(agent)),
        }
    }

    /// Trigger evaluation, optional model updates and control computation on
    /// the current snapshot.
    fn evaluate(&mut self, apply_updates: bool) -> Result<Evaluation<T>, SimError> {
        let n = self.state.x.len();
        let sc = &self.scenario;
        let mode = sc.trigger;
        let mut eval = Evaluation {
            u: vec![T::zero(); n],
            rho: vec![T::zero(); n],
            eta: vec![T::zero(); n],
            fired: vec![false; n],
        };

        for i in 0..n {
            let x = self.state.x[i];
            if !sc.bound.contains(x) {
                self.stayed_in_domain = false;
            }
            let eta = sc.bound.eta_unchecked(&self.state.models[i], x).map_err(self.gp_err(i))?;
            let inputs = TriggerInputs {
                eta,
                x,
                x_bar: self.state.x_bar[i],
                c: sc.gains.c,
                n_agents: n,
                eta_bar_lower: sc.bound.eta_bar_lower,
                epsilon: sc.epsilon,
            };
            let decision = inputs.decide(mode);
            eval.eta[i] = eta;
            eval.rho[i] = decision.rho_value;
            if !apply_updates {
                continue;
            }
            self.evaluations += 1;
            if inputs.decide(TriggerMode::Proposed).fired != inputs.decide(TriggerMode::Relaxed).fired {
                self.disagreements += 1;
            }
            if decision.fired {
                let xdot = self.measured_derivative(i)?;
                let noise = T::lit(self.rng.normal(0.0, sc.config.sigma_n));
                let y = sc.plant.measure(x, self.state.u_prev[i], xdot, noise);
                self.state.models[i].add_point(x, y).map_err(self.gp_err(i))?;
                let std_after = self.state.models[i].posterior(x).map_err(self.gp_err(i))?.std;
                self.state.trigger_counts[i] += 1;
                eval.fired[i] = true;
                self.events.push(TriggerEvent {
                    t: self.state.t,
                    agent: i,
                    x,
                    y,
                    eta_before: eta,
                    std_after,
                });
            }
        }

        let sc = &self.scenario;
        let mut nx = Vec::new();
        let mut nxb = Vec::new();
        for i in 0..n {
            let x = self.state.x[i];
            let f_hat = match sc.config.compensation {
                Compensation::Gp => self.state.models[i].mean(x).map_err(self.gp_err(i))?,
                Compensation::Oracle => sc.plant.f_true.eval(x) - T::lit(sc.config.oracle_bias),
            };
            nx.clear();
            nxb.clear();
            for &j in sc.topology.neighbors(i) {
                nx.push(self.state.x[j]);
                nxb.push(self.state.x_bar[j]);
            }
            let view = AgentView { x, x_bar: self.state.x_bar[i], neighbor_x: &nx, neighbor_x_bar: &nxb, f_hat };
            eval.u[i] = match sc.config.controller {
                Controller::Conventional => control_conventional(&view, &sc.plant, &sc.gains),
                Controller::Proposed => {
                    let rate = auxiliary_rate(&view, &sc.gains);
                    control_proposed(&view, &sc.plant, &sc.gains, rate)
                }
            }
            .map_err(self.plant_err(i))?;
        }
        Ok(eval)
    }

    fn record(&self, eval: Evaluation<T>) -> StepRecord<T> {
        StepRecord {
            t: self.state.t,
            x: self.state.x.clone(),
            x_bar: self.state.x_bar.clone(),
            u: eval.u,
            rho: eval.rho,
            eta: eval.eta,
            fired: eval.fired,
            dataset_sizes: self.state.models.iter().map(GpModel::len).collect(),
            err: consensus_error(&self.state.x, self.x_bar_star),
        }
    }

    /// Performs one control step and returns the record describing its start.
    pub fn step(&mut self) -> Result<StepRecord<T>, SimError> {
        let eval = self.evaluate(true)?;
        let n = self.state.x.len();
        let u = eval.u.clone();
        let record = self.record(eval);

        let sc = &self.scenario;
        let mut y: Vec<T> = self.state.x.iter().chain(&self.state.x_bar).copied().collect();
        let t = self.state.t.to_f64_lossy();
        rk4_step(&mut y, sc.dt, |s: &[T], d: &mut [T]| -> Result<(), SimError> {
            let (xs, xbs) = s.split_at(n);
            let (dx, dxb) = d.split_at_mut(n);
            for i in 0..n {
                dx[i] = sc
                    .plant
                    .drift(xs[i], u[i])
                    .map_err(|source| SimError::Plant { t, agent: i + 1, source })?;
            }
            sc.topology.laplacian_apply(xbs, dxb);
            for v in dxb.iter_mut() {
                *v = -sc.gains.c_bar * *v;
            }
            Ok(())
        })?;

        self.state.x_prev = std::mem::take(&mut self.state.x);
        self.state.x = y[..n].to_vec();
        self.state.x_bar = y[n..].to_vec();
        self.state.u_prev = u;
        self.state.step += 1;
        self.state.t = T::from_usize(self.state.step).unwrap() * sc.dt;

        let drift = (average_state(&self.state.x_bar).unwrap() - self.aux_mean0).abs();
        self.aux_mean_drift = self.aux_mean_drift.max(drift);
        Ok(record)
    }

    /// Record for the current instant without touching any model.
    pub fn observe(&mut self) -> Result<StepRecord<T>, SimError> {
        let eval = self.evaluate(false)?;
        Ok(self.record(eval))
    }

    /// Integrates the remaining horizon and summarizes the episode.
    pub fn run(mut self) -> Result<(Trajectory<T>, EpisodeSummary<T>), SimError> {
        let stride = self.scenario.config.log_stride;
        let n_steps = self.scenario.n_steps;
        let mut records = Vec::with_capacity(n_steps / stride + 2);
        while self.state.step < n_steps {
            let logged = self.state.step % stride == 0;
            let rec = self.step()?;
            if logged {
                records.push(rec);
            }
        }
        records.push(self.observe()?);
        let summary = self.summarize()?;
        let trajectory = Trajectory { n_agents: self.state.x.len(), records, events: self.events };
        Ok((trajectory, summary))
    }

    fn summarize(&self) -> Result<EpisodeSummary<T>, SimError> {
        let sc = &self.scenario;
        let grid_step = T::lit(sc.config.gamma_grid_step);
        let mut gamma_ok = Vec::with_capacity(self.state.models.len());
        for (i, model) in self.state.models.iter().enumerate() {
            let (lip_mu, lip_sigma) = estimate_lipschitz(&sc.bound, model, grid_step).map_err(self.gp_err(i))?;
            let ctx = sc.bound.with_lipschitz(lip_mu, lip_sigma);
            gamma_ok.push(check_gamma_condition(&ctx, model, grid_step).map_err(self.gp_err(i))?.holds());
        }
        Ok(EpisodeSummary {
            final_error: consensus_error(&self.state.x, self.x_bar_star),
            x_bar_star: self.x_bar_star,
            epsilon: sc.epsilon,
            beta: sc.bound.beta,
            eta_bar_lower: sc.bound.eta_bar_lower,
            trigger_counts: self.state.trigger_counts.clone(),
            max_dataset_sizes: self.state.models.iter().map(GpModel::len).collect(),
            domain_containment: check_domain_containment(
                sc.bound.domain_lo,
                sc.bound.domain_hi,
                self.x_bar_star,
                sc.epsilon,
            ),
            stayed_in_domain: self.stayed_in_domain,
            gamma_ok,
            aux_mean_drift: self.aux_mean_drift,
            aux_final_error: consensus_error(&self.state.x_bar, self.x_bar_star),
            relaxed_disagreement: if self.evaluations == 0 {
                0.0
            } else {
                self.disagreements as f64 / self.evaluations as f64
            },
            max_post_update_std: self.events.iter().map(|e| e.std_after).reduce(T::max),
            last_trigger_time: self.events.last().map(|e| e.t),
        })
    }
}

/// `size` evenly spaced inputs over the domain (endpoints included) with
/// noisy outputs `f(x) + N(0, σ_n²)`.
pub fn make_offline_dataset<T: Real>(scenario: &Scenario<T>, size: usize, rng: &mut NoiseRng) -> Vec<(T, T)> {
    let (lo, hi) = (scenario.plant.domain_lo, scenario.plant.domain_hi);
    let sigma_n = scenario.config.sigma_n;
    (0..size)
        .map(|k| {
            let x = if size == 1 {
                (lo + hi) / T::lit(2.0)
            } else {
                lo + (hi - lo) * T::from_usize(k).unwrap() / T::from_usize(size - 1).unwrap()
            };
            let y = scenario.plant.f_true.eval(x) + T::lit(rng.normal(0.0, sigma_n));
            (x, y)
        })
        .collect()
}

/// Validates `config` and runs one episode in scalar type `T`.
pub fn run_episode_as<T: Real>(config: &SimConfig) -> Result<(Trajectory<T>, EpisodeSummary<T>), SimError> {
    Simulation::new(config.scenario::<T>()?)?.run()
}

pub fn run_episode(config: &SimConfig) -> Result<(Trajectory<f64>, EpisodeSummary<f64>), SimError> {
    run_episode_as::<f64>(config)
}
