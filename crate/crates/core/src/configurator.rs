//! Cheapest SLO-satisfying configuration for a function.
//!
//! Every candidate is judged by simulation: a configuration *verifies* when
//! its pass fraction over the policy's seeded runs reaches the policy floor
//! and its mean makespan and mean throughput also meet the SLO. A plan's
//! cost is `plan_cost` over the mean makespan.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{plan_cost, workload_completion_time, ExecutionProfile};
use crate::predictor::ReplicaModel;
use crate::similarity::{find_similar, CallGraph, ModelRegistry};
use crate::simulator::{mean_arrival_span, measure, Measurement, PlatformParams, SloPolicy};
use crate::{ConfigSpace, Configuration, ContainerConfig, FunctionSpec, PriceTable, WctBreakdown};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionRequest {
    pub spec: FunctionSpec,
    #[serde(default)]
    pub call_graph: Option<CallGraph>,
    pub space: ConfigSpace,
    pub prices: PriceTable,
    #[serde(default)]
    pub policy: SloPolicy,
    /// Base seed of the verification runs.
    #[serde(default)]
    pub seed: u64,
}

impl ProvisionRequest {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.space.validate()?;
        self.prices.validate()?;
        self.policy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    TrainedModel { app_id: String },
    SimilarModel { app_id: String, ds: f64 },
    Profiled,
}

/// Why a candidate was simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// The model's replica count for this container.
    Anchor,
    /// Neighbor of an anchor during the per-container search.
    Search,
    /// Possibly cheaper than the incumbent; checked for minimality.
    Certify,
    /// Exhaustive profiling sweep.
    Sweep,
    /// Reported when nothing verified.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEvaluation {
    pub configuration: Configuration,
    pub stage: Stage,
    pub pass_fraction: f64,
    pub mean_throughput: f64,
    pub mean_makespan: f64,
    pub cost: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningPlan {
    pub configuration: Configuration,
    pub predicted_wct: WctBreakdown,
    pub predicted_throughput: f64,
    pub cost: f64,
    pub provenance: Provenance,
    pub satisfiable: bool,
    /// Every simulated candidate, in evaluation order.
    pub candidates: Vec<CandidateEvaluation>,
}

/// Whether a measurement meets `spec` under `policy`.
pub fn verifies(m: &Measurement, spec: &FunctionSpec, policy: &SloPolicy) -> bool {
    m.pass_fraction >= policy.min_pass_fraction
        && m.mean_makespan <= spec.slo_deadline
        && policy.sustains(m.mean_throughput, spec.target_rate)
}

/// Simulates configurations once each and remembers the results.
struct Evaluator<'a> {
    req: &'a ProvisionRequest,
    params: &'a PlatformParams,
    cache: HashMap<usize, usize>,
    table: Vec<CandidateEvaluation>,
    index: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    fn new(req: &'a ProvisionRequest, params: &'a PlatformParams) -> Self {
        Evaluator {
            req,
            params,
            cache: HashMap::new(),
            table: Vec::new(),
            index: Vec::new(),
        }
    }

    fn position(&self, cfg: &Configuration) -> usize {
        self.req
            .space
            .options
            .iter()
            .position(|o| o == cfg)
            .expect("configuration comes from the space")
    }

    fn eval(&mut self, pos: usize, stage: Stage) -> Result<&CandidateEvaluation> {
        if let Some(&row) = self.cache.get(&pos) {
            return Ok(&self.table[row]);
        }
        let cfg = self.req.space.options[pos];
        let row = evaluate(&cfg, self.req, self.params, stage)?;
        self.cache.insert(pos, self.table.len());
        self.index.push(pos);
        self.table.push(row);
        Ok(self.table.last().expect("pushed"))
    }

    /// Cheapest verified evaluation; ties go to the earlier space position.
    fn best(&self) -> Option<(usize, f64)> {
        self.table
            .iter()
            .zip(&self.index)
            .filter(|(c, _)| c.verified)
            .map(|(c, &pos)| (pos, c.cost))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Simulates every unevaluated configuration whose cost lower bound is
    /// below the incumbent's cost, cheapest bound first.
    fn certify(&mut self, stage: Stage) -> Result<()> {
        let req = self.req;
        let span = mean_arrival_span(&req.spec, req.policy.verify_seeds, req.seed)?;
        // Guards the comparison against rounding in the mean.
        let floor_time = span * (1.0 - 1e-9);
        let mut order: Vec<(usize, f64)> = (0..req.space.options.len())
            .filter(|p| !self.cache.contains_key(p))
            .map(|p| (p, plan_cost(&req.space.options[p], floor_time, &req.prices)))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        for (pos, bound) in order {
            match self.best() {
                Some((_, cost)) if bound >= cost => break,
                _ => {}
            }
            self.eval(pos, stage)?;
        }
        Ok(())
    }

    fn plan(self, provenance: Provenance) -> Result<ProvisioningPlan> {
        let chosen = self.best();
        let (cfg, satisfiable) = match chosen {
            Some((pos, _)) => (self.req.space.options[pos], true),
            None => (max_capacity(&self.req.space), false),
        };
        let (req, params) = (self.req, self.params);
        let mut table = self.table;
        let m = measure(&cfg, params, &req.spec, req.policy.verify_seeds, req.seed, &req.policy)?;
        if !satisfiable && !table.iter().any(|c| c.configuration == cfg) {
            table.push(row_from(&cfg, &m, req, Stage::Fallback));
        }
        build_plan(cfg, &m, req, provenance, satisfiable, table)
    }
}

fn row_from(cfg: &Configuration, m: &Measurement, req: &ProvisionRequest, stage: Stage) -> CandidateEvaluation {
    CandidateEvaluation {
        configuration: *cfg,
        stage,
        pass_fraction: m.pass_fraction,
        mean_throughput: m.mean_throughput,
        mean_makespan: m.mean_makespan,
        cost: plan_cost(cfg, m.mean_makespan, &req.prices),
        verified: verifies(m, &req.spec, &req.policy),
    }
}

fn evaluate(
    cfg: &Configuration,
    req: &ProvisionRequest,
    params: &PlatformParams,
    stage: Stage,
) -> Result<CandidateEvaluation> {
    let m = measure(cfg, params, &req.spec, req.policy.verify_seeds, req.seed, &req.policy)?;
    Ok(row_from(cfg, &m, req, stage))
}

fn build_plan(
    cfg: Configuration,
    m: &Measurement,
    req: &ProvisionRequest,
    provenance: Provenance,
    satisfiable: bool,
    candidates: Vec<CandidateEvaluation>,
) -> Result<ProvisioningPlan> {
    let profile = ExecutionProfile::from_samples(vec![m.mean_service_time])?;
    let service = m.mean_service_time * req.spec.request_count as f64 / cfg.replicas as f64;
    // Whatever the makespan holds beyond boot and pure service is waiting.
    let queue = (m.mean_makespan - m.mean_init_time - service).max(0.0);
    let predicted_wct = workload_completion_time(&profile, &cfg, &req.spec, m.mean_init_time, queue)?;
    Ok(ProvisioningPlan {
        configuration: cfg,
        predicted_wct,
        predicted_throughput: m.mean_throughput,
        cost: plan_cost(&cfg, m.mean_makespan, &req.prices),
        provenance,
        satisfiable,
        candidates,
    })
}

/// Largest `replicas * cpus`, then memory; earliest in the space on ties.
fn max_capacity(space: &ConfigSpace) -> Configuration {
    let key = |c: &Configuration| (c.total_cpus(), c.container.memory_mb);
    let mut best = space.options[0];
    for c in &space.options[1..] {
        if key(c) > key(&best) {
            best = *c;
        }
    }
    best
}

/// Smallest offered replica count at or above `r`, else the largest.
fn snap(offered: &[u32], r: u32) -> usize {
    offered.iter().position(|&x| x >= r).unwrap_or(offered.len() - 1)
}

fn check_compatible(model: &ReplicaModel<f64>, space: &ConfigSpace) -> Result<()> {
    let offered: Vec<u32> = space.options.iter().map(|c| c.replicas).collect();
    if let Some(missing) = model.class_labels.iter().find(|l| !offered.contains(l)) {
        return Err(Error::IncompatibleModel(format!(
            "class label {missing} is not a replica count in the space"
        )));
    }
    Ok(())
}

/// Model-guided search for the cheapest verified configuration.
///
/// Per container the model's replica count is simulated first, then the
/// search walks down while candidates keep verifying, or up until one does.
/// Finally every configuration that could still undercut the incumbent is
/// simulated, so the result is minimal over the whole space.
pub fn select_configuration(
    req: &ProvisionRequest,
    model: &ReplicaModel<f64>,
    params: &PlatformParams,
) -> Result<ProvisioningPlan> {
    req.validate()?;
    params.validate()?;
    check_compatible(model, &req.space)?;
    let mut ev = Evaluator::new(req, params);
    for container in req.space.containers() {
        search_container(&mut ev, model, &container)?;
    }
    ev.certify(Stage::Certify)?;
    ev.plan(Provenance::TrainedModel {
        app_id: req.spec.id.clone(),
    })
}

fn search_container(ev: &mut Evaluator<'_>, model: &ReplicaModel<f64>, container: &ContainerConfig) -> Result<()> {
    let req = ev.req;
    let offered = req.space.replicas_for(container);
    let guess = model.predict_replicas(container.cpus, container.memory_mb as f64, req.spec.target_rate)?;
    let pos_of = |ev: &Evaluator<'_>, k: usize| {
        ev.position(&Configuration {
            replicas: offered[k],
            container: *container,
        })
    };
    let start = snap(&offered, guess.replicas);
    let p = pos_of(ev, start);
    if ev.eval(p, Stage::Anchor)?.verified {
        let mut k = start;
        while k > 0 {
            let p = pos_of(ev, k - 1);
            if !ev.eval(p, Stage::Search)?.verified {
                break;
            }
            k -= 1;
        }
    } else {
        for k in start + 1..offered.len() {
            let p = pos_of(ev, k);
            if ev.eval(p, Stage::Search)?.verified {
                break;
            }
        }
    }
    Ok(())
}

/// Simulates the whole space and returns its cheapest verified member.
pub fn profile_sweep(req: &ProvisionRequest, params: &PlatformParams) -> Result<ProvisioningPlan> {
    req.validate()?;
    params.validate()?;
    let mut ev = Evaluator::new(req, params);
    for pos in 0..req.space.options.len() {
        ev.eval(pos, Stage::Sweep)?;
    }
    ev.plan(Provenance::Profiled)
}

/// Known model first, then borrowed models of similar applications, then
/// profiling.
pub fn provision(
    req: &ProvisionRequest,
    registry: &ModelRegistry,
    params: &PlatformParams,
) -> Result<ProvisioningPlan> {
    req.validate()?;
    if let Some(model) = registry.get(&req.spec.id).and_then(|e| e.model.as_ref()) {
        return select_configuration(req, model, params);
    }
    if let Some(graph) = &req.call_graph {
        for cand in find_similar(registry, graph) {
            let model = cand.entry.model.as_ref().expect("candidates carry models");
            let plan = match select_configuration(req, model, params) {
                Ok(plan) => plan,
                Err(Error::IncompatibleModel(_)) => continue,
                Err(e) => return Err(e),
            };
            if plan.satisfiable {
                return Ok(ProvisioningPlan {
                    provenance: Provenance::SimilarModel {
                        app_id: cand.entry.app_id.clone(),
                        ds: cand.score.ds,
                    },
                    ..plan
                });
            }
        }
    }
    profile_sweep(req, params)
}

/// Most replicas on the largest container, simulated as-is. The savings
/// baseline.
pub fn naive_max_plan(req: &ProvisionRequest, params: &PlatformParams) -> Result<ProvisioningPlan> {
    req.validate()?;
    params.validate()?;
    let container = req
        .space
        .containers()
        .into_iter()
        .reduce(|a, b| {
            if (b.cpus, b.memory_mb) > (a.cpus, a.memory_mb) {
                b
            } else {
                a
            }
        })
        .expect("space is non-empty");
    let replicas = req.space.options.iter().map(|c| c.replicas).max().expect("non-empty");
    let cfg = Configuration { replicas, container };
    let m = measure(&cfg, params, &req.spec, req.policy.verify_seeds, req.seed, &req.policy)?;
    let row = row_from(&cfg, &m, req, Stage::Fallback);
    let satisfiable = row.verified;
    build_plan(cfg, &m, req, Provenance::Profiled, satisfiable, vec![row])
}
