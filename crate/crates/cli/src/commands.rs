use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use poflow_core::format::{
    export_dot, parse_network, render_completion, render_conformance, render_labels,
    render_lattice_report, serialize_network,
};
use poflow_core::lattice::{dedekind_macneille, induced_subnetwork, lattice_check, merge_networks};
use poflow_core::pdp::{PdpSession, Request};
use poflow_core::policy::{parse_policy, verify};
use poflow_core::reconfig::LabeledNetwork;
use poflow_core::{compute_labels, condense, simulate_propagation, FlowSystem, Label, Network};

pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, code: 0 }
    }

    fn negative_if(stdout: String, negative: bool) -> Self {
        Outcome {
            stdout,
            code: u8::from(negative),
        }
    }
}

fn load(path: &Path) -> Result<FlowSystem> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_network(&text).with_context(|| format!("{}", path.display()))
}

fn flow<'a>(sys: &'a FlowSystem, flow_id: &str) -> Result<&'a Network> {
    sys.network(flow_id)
        .ok_or_else(|| anyhow!("no flow `{flow_id}`"))
}

fn selected<'a>(sys: &'a FlowSystem, only: Option<&str>) -> Result<Vec<&'a Network>> {
    match only {
        Some(id) => Ok(vec![flow(sys, id)?]),
        None => Ok(sys.networks().iter().collect()),
    }
}

fn single_flow(sys: &FlowSystem, path: &Path) -> Result<Network> {
    match sys.networks() {
        [net] => Ok(net.clone()),
        nets => bail!(
            "{} must contain exactly one flow, found {}",
            path.display(),
            nets.len()
        ),
    }
}

pub fn labels(path: &Path, only: Option<&str>) -> Result<Outcome> {
    let sys = load(path)?;
    let mut out = String::new();
    for (i, net) in selected(&sys, only)?.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "flow {}", net.flow_id());
        out.push_str(&render_labels(&compute_labels(net)));
    }
    Ok(Outcome::ok(out))
}

pub fn decide(path: &Path, flow_id: &str, src: &str, dst: &str, op: &str, audit: bool) -> Result<Outcome> {
    let session = PdpSession::new(load(path)?);
    let (decision, record) = session.evaluate_and_log(Request::new(flow_id, src, dst).with_op(op));
    let line = if audit {
        record.to_string()
    } else {
        decision.to_string()
    };
    Ok(Outcome::negative_if(format!("{line}\n"), !decision.is_grant()))
}

pub fn check(net_path: &Path, policy_path: &Path) -> Result<Outcome> {
    let sys = load(net_path)?;
    let text = fs::read_to_string(policy_path)
        .with_context(|| format!("cannot read {}", policy_path.display()))?;
    let spec = parse_policy(&text).with_context(|| format!("{}", policy_path.display()))?;
    let net = flow(&sys, &spec.flow_id)?;
    let report = verify(net, &spec)?;
    Ok(Outcome::negative_if(
        render_conformance(net.flow_id(), &report),
        !report.conforms,
    ))
}

pub fn lattice(path: &Path, only: Option<&str>, complete: bool, expect_lattice: bool) -> Result<Outcome> {
    let sys = load(path)?;
    let mut out = String::new();
    let mut all_lattices = true;
    for (i, net) in selected(&sys, only)?.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let p = condense(net);
        let report = lattice_check(&p);
        all_lattices &= report.is_lattice;
        out.push_str(&render_lattice_report(net.flow_id(), &p, &report));
        if complete {
            out.push_str(&render_completion(&dedekind_macneille(&p)?));
        }
    }
    Ok(Outcome::negative_if(out, expect_lattice && !all_lattices))
}

pub fn merge(left: &Path, right: &Path, shared: bool) -> Result<Outcome> {
    let a = single_flow(&load(left)?, left)?;
    let b = single_flow(&load(right)?, right)?;
    let merged = merge_networks(&a, &b, shared)?;
    let sys = FlowSystem::build(vec![merged], Vec::<Vec<&str>>::new())?;
    Ok(Outcome::ok(serialize_network(&sys)))
}

pub fn extract(path: &Path, entities: &[String]) -> Result<Outcome> {
    let sys = load(path)?;
    let net = sys
        .flow_of(&entities[0])
        .ok_or_else(|| anyhow!("unknown entity `{}`", entities[0]))?;
    if let Some(stray) = entities.iter().find(|e| !net.contains(e)) {
        bail!("entity `{stray}` is not in flow `{}`", net.flow_id());
    }
    let sub = induced_subnetwork(net, entities)?;
    let sys = FlowSystem::build(vec![sub], Vec::<Vec<&str>>::new())?;
    Ok(Outcome::ok(serialize_network(&sys)))
}

pub fn dot(path: &Path) -> Result<Outcome> {
    Ok(Outcome::ok(export_dot(&load(path)?)))
}

pub fn simulate(path: &Path, flow_id: &str, source: &str) -> Result<Outcome> {
    let sys = load(path)?;
    let reached: Label = simulate_propagation(flow(&sys, flow_id)?, source)?
        .into_iter()
        .collect();
    Ok(Outcome::ok(format!("{reached}\n")))
}

pub fn edit(path: &Path, add: bool, src: &str, dst: &str, show_labels: bool) -> Result<Outcome> {
    let sys = load(path)?;
    let net = sys
        .flow_of(src)
        .ok_or_else(|| anyhow!("unknown entity `{src}`"))?;
    let mut ln = LabeledNetwork::new(net.clone());
    if add {
        ln.add_channel(src, dst)?;
    } else {
        ln.remove_channel(src, dst)?;
    }
    if show_labels {
        let mut out = format!("flow {}\n", ln.network().flow_id());
        out.push_str(&render_labels(ln.labels()));
        return Ok(Outcome::ok(out));
    }
    let next = sys.with_network(ln.network().clone())?;
    Ok(Outcome::ok(serialize_network(&next)))
}
