//! Physical infrastructure: datacenters, VMs, switches, physical links and the
//! derived catalogue of logical (VM-to-VM) links.
//!
//! Every VM hangs off its datacenter gateway through a pair of ideal intra-DC
//! links. Inter-DC paths are computed once per ordered pair of gateways and
//! instantiated lazily per VM pair, so a logical link is identified by
//! `(src VM, dst VM, path index)` and never stored explicitly.

use std::collections::{BTreeMap, HashMap};

use pathfinding::directed::yen::yen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::UnitConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VmId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DcId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub usize);

/// Index of a switch node (routers, access nodes, datacenter gateways).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwitchId(pub usize);

/// Either a real VM or the single dummy VM that terminates ingress and
/// egress traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VmRef {
    Dummy,
    Vm(VmId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeRef {
    Switch(SwitchId),
    Vm(VmId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeNode {
    pub id: VmId,
    pub name: String,
    pub tier: Option<String>,
    pub datacenter: DcId,
    /// Computation units per ms.
    pub capacity: f64,
    /// Currency per (unit/ms) of assigned computation per step.
    pub cpu_cost: f64,
    /// Currency per step while turning on or active.
    pub idle_cost: f64,
    pub setup_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datacenter {
    pub id: DcId,
    pub name: String,
    /// Computation units per ms shared by all member VMs.
    pub capacity: f64,
    pub gateway: SwitchId,
    pub members: Vec<VmId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalLink {
    pub id: LinkId,
    pub name: String,
    pub src: NodeRef,
    pub dst: NodeRef,
    /// Packets per ms; `f64::INFINITY` for unlimited links.
    pub bandwidth: f64,
    /// ms
    pub delay: f64,
    /// Currency per (packet/ms) carried for one step.
    pub tx_cost: f64,
    pub intra_dc: bool,
}

/// Identifier of a logical link. Dummy links connect the dummy VM with a real
/// VM; path links follow the `index`-th inter-DC path of the VM pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicalLinkId {
    Ingress(VmId),
    Egress(VmId),
    Path { src: VmId, dst: VmId, index: u16 },
}

impl LogicalLinkId {
    pub fn src(&self) -> VmRef {
        match *self {
            LogicalLinkId::Ingress(_) => VmRef::Dummy,
            LogicalLinkId::Egress(vm) => VmRef::Vm(vm),
            LogicalLinkId::Path { src, .. } => VmRef::Vm(src),
        }
    }

    pub fn dst(&self) -> VmRef {
        match *self {
            LogicalLinkId::Ingress(vm) => VmRef::Vm(vm),
            LogicalLinkId::Egress(_) => VmRef::Dummy,
            LogicalLinkId::Path { dst, .. } => VmRef::Vm(dst),
        }
    }

    pub fn is_dummy(&self) -> bool {
        !matches!(self, LogicalLinkId::Path { .. })
    }
}

/// Materialised view of a logical link.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalLink {
    pub id: LogicalLinkId,
    pub src: VmRef,
    pub dst: VmRef,
    pub hops: Vec<LinkId>,
    pub delay: f64,
    pub is_dummy: bool,
}

/// A gateway-to-gateway path shared by every VM pair of two datacenters.
#[derive(Debug, Clone, PartialEq)]
pub struct DcPath {
    pub hops: Vec<LinkId>,
    pub delay: f64,
    pub cost: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("link `{link}` references unknown node `{endpoint}`")]
    DanglingEndpoint { link: String, endpoint: String },
    #[error("VM `{vm}` references unknown datacenter `{datacenter}`")]
    UnknownDatacenter { vm: String, datacenter: String },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: String, value: f64 },
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: String, value: f64 },
    #[error("duplicate node name `{0}`")]
    DuplicateName(String),
    #[error("datacenter `{0}` has no VMs")]
    EmptyDatacenter(String),
}

// ---------------------------------------------------------------------------
// Description (file schema)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDescription {
    #[serde(default)]
    pub switches: Vec<String>,
    pub datacenters: Vec<DatacenterDescription>,
    pub vms: Vec<VmDescription>,
    #[serde(default)]
    pub links: Vec<LinkDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatacenterDescription {
    pub id: String,
    /// Switch acting as the datacenter gateway. When absent a gateway switch
    /// named after the datacenter is created.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gateway: Option<String>,
    /// Aggregate MIPS; defaults to the sum of member capacities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_mips: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmDescription {
    pub id: String,
    pub datacenter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<String>,
    pub capacity_mips: f64,
    pub cpu_cost_per_mips_hour: f64,
    pub idle_cost_per_hour: f64,
    #[serde(default = "default_setup_steps")]
    pub setup_steps: usize,
}

fn default_setup_steps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDescription {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    /// `None` means unlimited bandwidth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_mbps: Option<f64>,
    pub delay_ms: f64,
    pub cost_per_gb: f64,
    /// Also create the reverse link with identical attributes.
    #[serde(default)]
    pub bidirectional: bool,
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PhysicalNetwork {
    pub switches: Vec<String>,
    pub vms: Vec<ComputeNode>,
    pub datacenters: Vec<Datacenter>,
    pub links: Vec<PhysicalLink>,
    uplink: Vec<LinkId>,
    downlink: Vec<LinkId>,
    /// Row-major `[src dc][dst dc]`; the diagonal is unused.
    dc_paths: Vec<Vec<DcPath>>,
    k_paths: usize,
}

fn positive(what: impl Into<String>, value: f64) -> Result<(), TopologyError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TopologyError::NonPositive {
            what: what.into(),
            value,
        })
    }
}

fn non_negative(what: impl Into<String>, value: f64) -> Result<(), TopologyError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TopologyError::Negative {
            what: what.into(),
            value,
        })
    }
}

/// Validates a description and builds the network with its logical-link
/// catalogue (`k` paths per datacenter pair).
pub fn build_network(
    desc: &TopologyDescription,
    units: &UnitConstants,
    k: usize,
) -> Result<PhysicalNetwork, TopologyError> {
    let mut switches: Vec<String> = Vec::new();
    let mut switch_index: HashMap<String, SwitchId> = HashMap::new();
    for name in &desc.switches {
        if switch_index.contains_key(name) {
            return Err(TopologyError::DuplicateName(name.clone()));
        }
        switch_index.insert(name.clone(), SwitchId(switches.len()));
        switches.push(name.clone());
    }

    let mut datacenters = Vec::with_capacity(desc.datacenters.len());
    let mut dc_index: HashMap<&str, DcId> = HashMap::new();
    // Datacenter names double as aliases of their gateway in link endpoints.
    let mut aliases: HashMap<String, SwitchId> = HashMap::new();
    for (i, dc) in desc.datacenters.iter().enumerate() {
        if dc_index.insert(dc.id.as_str(), DcId(i)).is_some() {
            return Err(TopologyError::DuplicateName(dc.id.clone()));
        }
        let gateway = match &dc.gateway {
            Some(name) => {
                *switch_index
                    .get(name)
                    .ok_or_else(|| TopologyError::DanglingEndpoint {
                        link: format!("gateway of {}", dc.id),
                        endpoint: name.clone(),
                    })?
            }
            None => {
                if switch_index.contains_key(&dc.id) {
                    return Err(TopologyError::DuplicateName(dc.id.clone()));
                }
                let id = SwitchId(switches.len());
                switch_index.insert(dc.id.clone(), id);
                switches.push(dc.id.clone());
                id
            }
        };
        aliases.insert(dc.id.clone(), gateway);
        datacenters.push(Datacenter {
            id: DcId(i),
            name: dc.id.clone(),
            capacity: 0.0,
            gateway,
            members: Vec::new(),
        });
    }

    let mut vms = Vec::with_capacity(desc.vms.len());
    let mut vm_names: HashMap<&str, VmId> = HashMap::new();
    for (i, vm) in desc.vms.iter().enumerate() {
        if vm_names.insert(vm.id.as_str(), VmId(i)).is_some() || switch_index.contains_key(&vm.id) {
            return Err(TopologyError::DuplicateName(vm.id.clone()));
        }
        let dc = *dc_index.get(vm.datacenter.as_str()).ok_or_else(|| {
            TopologyError::UnknownDatacenter {
                vm: vm.id.clone(),
                datacenter: vm.datacenter.clone(),
            }
        })?;
        positive(format!("capacity of VM {}", vm.id), vm.capacity_mips)?;
        non_negative(
            format!("cpu cost of VM {}", vm.id),
            vm.cpu_cost_per_mips_hour,
        )?;
        non_negative(format!("idle cost of VM {}", vm.id), vm.idle_cost_per_hour)?;
        if vm.setup_steps == 0 {
            return Err(TopologyError::NonPositive {
                what: format!("setup steps of VM {}", vm.id),
                value: 0.0,
            });
        }
        datacenters[dc.0].members.push(VmId(i));
        vms.push(ComputeNode {
            id: VmId(i),
            name: vm.id.clone(),
            tier: vm.tier.clone(),
            datacenter: dc,
            capacity: units.units_per_ms(vm.capacity_mips),
            cpu_cost: units.cpu_cost_per_unit_step(vm.cpu_cost_per_mips_hour),
            idle_cost: units.idle_cost_per_step(vm.idle_cost_per_hour),
            setup_steps: vm.setup_steps,
        });
    }

    for (dc, d) in datacenters.iter_mut().zip(&desc.datacenters) {
        if dc.members.is_empty() {
            return Err(TopologyError::EmptyDatacenter(dc.name.clone()));
        }
        dc.capacity = match d.capacity_mips {
            Some(mips) => {
                positive(format!("capacity of datacenter {}", d.id), mips)?;
                units.units_per_ms(mips)
            }
            None => dc.members.iter().map(|m| vms[m.0].capacity).sum(),
        };
    }

    let mut links = Vec::new();
    let resolve = |link: &str, name: &str| -> Result<SwitchId, TopologyError> {
        switch_index
            .get(name)
            .or_else(|| aliases.get(name))
            .copied()
            .ok_or_else(|| TopologyError::DanglingEndpoint {
                link: link.to_string(),
                endpoint: name.to_string(),
            })
    };
    for l in &desc.links {
        let name =
            l.id.clone()
                .unwrap_or_else(|| format!("{}-{}", l.src, l.dst));
        let src = resolve(&name, &l.src)?;
        let dst = resolve(&name, &l.dst)?;
        if let Some(bw) = l.bandwidth_mbps {
            positive(format!("bandwidth of link {name}"), bw)?;
        }
        non_negative(format!("delay of link {name}"), l.delay_ms)?;
        non_negative(format!("cost of link {name}"), l.cost_per_gb)?;
        let bandwidth = l
            .bandwidth_mbps
            .map_or(f64::INFINITY, |bw| units.packets_per_ms(bw));
        let tx_cost = units.per_traffic_step(l.cost_per_gb);
        let mut push = |name: String, src: SwitchId, dst: SwitchId| {
            links.push(PhysicalLink {
                id: LinkId(links.len()),
                name,
                src: NodeRef::Switch(src),
                dst: NodeRef::Switch(dst),
                bandwidth,
                delay: l.delay_ms,
                tx_cost,
                intra_dc: false,
            });
        };
        push(name.clone(), src, dst);
        if l.bidirectional {
            push(format!("{name}/rev"), dst, src);
        }
    }

    let mut uplink = Vec::with_capacity(vms.len());
    let mut downlink = Vec::with_capacity(vms.len());
    for vm in &vms {
        let gw = datacenters[vm.datacenter.0].gateway;
        for (src, dst, label, out) in [
            (NodeRef::Vm(vm.id), NodeRef::Switch(gw), "up", &mut uplink),
            (
                NodeRef::Switch(gw),
                NodeRef::Vm(vm.id),
                "down",
                &mut downlink,
            ),
        ] {
            let id = LinkId(links.len());
            links.push(PhysicalLink {
                id,
                name: format!("{}:{label}", vm.name),
                src,
                dst,
                bandwidth: f64::INFINITY,
                delay: 0.0,
                tx_cost: 0.0,
                intra_dc: true,
            });
            out.push(id);
        }
    }

    let mut net = PhysicalNetwork {
        switches,
        vms,
        datacenters,
        links,
        uplink,
        downlink,
        dc_paths: Vec::new(),
        k_paths: 0,
    };
    net.enumerate_logical_links(k.max(1));
    Ok(net)
}

impl PhysicalNetwork {
    pub fn vm(&self, id: VmId) -> &ComputeNode {
        &self.vms[id.0]
    }

    pub fn datacenter(&self, id: DcId) -> &Datacenter {
        &self.datacenters[id.0]
    }

    pub fn link(&self, id: LinkId) -> &PhysicalLink {
        &self.links[id.0]
    }

    pub fn vm_ids(&self) -> impl Iterator<Item = VmId> + '_ {
        (0..self.vms.len()).map(VmId)
    }

    pub fn k_paths(&self) -> usize {
        self.k_paths
    }

    pub fn vm_by_name(&self, name: &str) -> Option<VmId> {
        self.vms.iter().find(|v| v.name == name).map(|v| v.id)
    }

    /// (Re)computes up to `k` minimum-delay loop-free gateway paths for every
    /// ordered pair of distinct datacenters. Ties are broken by the
    /// lexicographic order of hop ids.
    pub fn enumerate_logical_links(&mut self, k: usize) {
        assert!(k >= 1, "k must be at least 1");
        let n_dc = self.datacenters.len();
        // Cheapest parallel link per ordered switch pair.
        let mut adjacency: BTreeMap<usize, BTreeMap<usize, LinkId>> = BTreeMap::new();
        for l in &self.links {
            if let (NodeRef::Switch(a), NodeRef::Switch(b)) = (l.src, l.dst) {
                if a == b {
                    continue;
                }
                let slot = adjacency.entry(a.0).or_default().entry(b.0).or_insert(l.id);
                let cur = &self.links[slot.0];
                if (l.delay, l.id) < (cur.delay, cur.id) {
                    *slot = l.id;
                }
            }
        }
        // Integer delays (picoseconds) keep the path search totally ordered.
        let weight = |l: LinkId| -> u64 { (self.links[l.0].delay * 1e9).round() as u64 };

        let mut dc_paths = vec![Vec::new(); n_dc * n_dc];
        for a in 0..n_dc {
            for b in 0..n_dc {
                if a == b {
                    continue;
                }
                let (ga, gb) = (self.datacenters[a].gateway.0, self.datacenters[b].gateway.0);
                let mut paths: Vec<DcPath> = if ga == gb {
                    vec![DcPath {
                        hops: Vec::new(),
                        delay: 0.0,
                        cost: 0.0,
                    }]
                } else {
                    yen(
                        &ga,
                        |n: &usize| {
                            adjacency
                                .get(n)
                                .into_iter()
                                .flat_map(|m| m.iter().map(|(dst, l)| (*dst, weight(*l))))
                                .collect::<Vec<_>>()
                        },
                        |n: &usize| *n == gb,
                        k,
                    )
                    .into_iter()
                    .map(|(nodes, _)| {
                        let hops: Vec<LinkId> =
                            nodes.windows(2).map(|w| adjacency[&w[0]][&w[1]]).collect();
                        let delay = hops.iter().map(|h| self.links[h.0].delay).sum();
                        let cost = hops.iter().map(|h| self.links[h.0].tx_cost).sum();
                        DcPath { hops, delay, cost }
                    })
                    .collect()
                };
                paths.sort_by(|x, y| {
                    x.delay
                        .total_cmp(&y.delay)
                        .then_with(|| x.hops.cmp(&y.hops))
                });
                paths.truncate(k);
                dc_paths[a * n_dc + b] = paths;
            }
        }
        self.dc_paths = dc_paths;
        self.k_paths = k;
    }

    pub fn dc_paths(&self, a: DcId, b: DcId) -> &[DcPath] {
        &self.dc_paths[a.0 * self.datacenters.len() + b.0]
    }

    fn path_of(&self, src: VmId, dst: VmId, index: u16) -> Option<&DcPath> {
        let (a, b) = (self.vms[src.0].datacenter, self.vms[dst.0].datacenter);
        if a == b {
            None
        } else {
            self.dc_paths(a, b).get(index as usize)
        }
    }

    /// Number of logical links between two distinct VMs.
    pub fn path_count(&self, src: VmId, dst: VmId) -> usize {
        if src == dst {
            return 0;
        }
        let (a, b) = (self.vms[src.0].datacenter, self.vms[dst.0].datacenter);
        if a == b {
            1
        } else {
            self.dc_paths(a, b).len()
        }
    }

    /// Logical links from `src` to `dst`, in catalogue order.
    pub fn logical_links_between(
        &self,
        src: VmId,
        dst: VmId,
    ) -> impl Iterator<Item = LogicalLinkId> + '_ {
        (0..self.path_count(src, dst)).map(move |i| LogicalLinkId::Path {
            src,
            dst,
            index: i as u16,
        })
    }

    /// Total catalogue size, dummy links included.
    pub fn logical_link_count(&self) -> usize {
        let mut n = 2 * self.vms.len();
        for a in &self.vms {
            for b in &self.vms {
                if a.id != b.id {
                    n += self.path_count(a.id, b.id);
                }
            }
        }
        n
    }

    pub fn contains_logical_link(&self, id: LogicalLinkId) -> bool {
        match id {
            LogicalLinkId::Ingress(vm) | LogicalLinkId::Egress(vm) => vm.0 < self.vms.len(),
            LogicalLinkId::Path { src, dst, index } => {
                src.0 < self.vms.len()
                    && dst.0 < self.vms.len()
                    && (index as usize) < self.path_count(src, dst)
            }
        }
    }

    pub fn hops(&self, id: LogicalLinkId) -> impl Iterator<Item = LinkId> + '_ {
        let (first, middle, last): (Option<LinkId>, &[LinkId], Option<LinkId>) = match id {
            LogicalLinkId::Ingress(_) | LogicalLinkId::Egress(_) => (None, &[], None),
            LogicalLinkId::Path { src, dst, index } => {
                let middle = self
                    .path_of(src, dst, index)
                    .map_or(&[][..], |p| &p.hops[..]);
                (Some(self.uplink[src.0]), middle, Some(self.downlink[dst.0]))
            }
        };
        first.into_iter().chain(middle.iter().copied()).chain(last)
    }

    pub fn logical_delay(&self, id: LogicalLinkId) -> f64 {
        match id {
            LogicalLinkId::Path { src, dst, index } => {
                self.path_of(src, dst, index).map_or(0.0, |p| p.delay)
            }
            _ => 0.0,
        }
    }

    /// Σ per-hop transmission cost of a logical link.
    pub fn logical_cost(&self, id: LogicalLinkId) -> f64 {
        match id {
            LogicalLinkId::Path { src, dst, index } => {
                self.path_of(src, dst, index).map_or(0.0, |p| p.cost)
            }
            _ => 0.0,
        }
    }

    pub fn logical_link(&self, id: LogicalLinkId) -> Option<LogicalLink> {
        if !self.contains_logical_link(id) {
            return None;
        }
        Some(LogicalLink {
            id,
            src: id.src(),
            dst: id.dst(),
            hops: self.hops(id).collect(),
            delay: self.logical_delay(id),
            is_dummy: id.is_dummy(),
        })
    }

    /// Dummy links attached to the dummy VM: one ingress and one egress per VM.
    pub fn dummy_links(&self) -> impl Iterator<Item = LogicalLinkId> + '_ {
        self.vm_ids()
            .flat_map(|vm| [LogicalLinkId::Ingress(vm), LogicalLinkId::Egress(vm)])
    }

    /// Returns a copy of the description with every inter-node link delay
    /// multiplied by `factor`.
    pub fn scale_delays(desc: &TopologyDescription, factor: f64) -> TopologyDescription {
        let mut d = desc.clone();
        for l in &mut d.links {
            l.delay_ms *= factor;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vm(id: &str, dc: &str) -> VmDescription {
        VmDescription {
            id: id.into(),
            datacenter: dc.into(),
            tier: None,
            capacity_mips: 600.0,
            cpu_cost_per_mips_hour: 2e-5,
            idle_cost_per_hour: 0.018,
            setup_steps: 1,
        }
    }

    fn link(src: &str, dst: &str, delay: f64) -> LinkDescription {
        LinkDescription {
            id: None,
            src: src.into(),
            dst: dst.into(),
            bandwidth_mbps: None,
            delay_ms: delay,
            cost_per_gb: 0.02,
            bidirectional: true,
        }
    }

    fn dc(id: &str) -> DatacenterDescription {
        DatacenterDescription {
            id: id.into(),
            gateway: None,
            capacity_mips: None,
        }
    }

    #[test]
    fn two_by_two_counts() {
        let desc = TopologyDescription {
            switches: vec![],
            datacenters: vec![dc("a"), dc("b")],
            vms: vec![vm("a1", "a"), vm("a2", "a"), vm("b1", "b"), vm("b2", "b")],
            links: vec![link("a", "b", 2.0)],
        };
        let net = build_network(&desc, &UnitConstants::default(), 3).unwrap();
        assert_eq!(net.vms.len(), 4);
        assert_eq!(net.datacenters.len(), 2);
        assert_eq!(net.dummy_links().count(), 8);
        assert_eq!(
            net.dummy_links()
                .filter(|l| l.src() == VmRef::Dummy)
                .count(),
            4
        );
        // same-DC pair: one ideal link
        let same: Vec<_> = net.logical_links_between(VmId(0), VmId(1)).collect();
        assert_eq!(same.len(), 1);
        assert_eq!(net.logical_delay(same[0]), 0.0);
        assert!(net
            .hops(same[0])
            .all(|h| net.link(h).bandwidth.is_infinite()));
        let cross: Vec<_> = net.logical_links_between(VmId(0), VmId(2)).collect();
        assert_eq!(cross.len(), 1);
        assert_eq!(net.logical_delay(cross[0]), 2.0);
    }

    #[test]
    fn dangling_endpoint_rejected() {
        let desc = TopologyDescription {
            switches: vec![],
            datacenters: vec![dc("a")],
            vms: vec![vm("a1", "a")],
            links: vec![link("a", "nowhere", 1.0)],
        };
        assert!(matches!(
            build_network(&desc, &UnitConstants::default(), 1),
            Err(TopologyError::DanglingEndpoint { .. })
        ));
    }

    #[test]
    fn vm_without_datacenter_rejected() {
        let desc = TopologyDescription {
            switches: vec![],
            datacenters: vec![dc("a")],
            vms: vec![vm("a1", "a"), vm("x", "missing")],
            links: vec![],
        };
        assert!(matches!(
            build_network(&desc, &UnitConstants::default(), 1),
            Err(TopologyError::UnknownDatacenter { .. })
        ));
    }

    #[test]
    fn nonpositive_capacity_rejected() {
        let mut bad = vm("a1", "a");
        bad.capacity_mips = 0.0;
        let desc = TopologyDescription {
            switches: vec![],
            datacenters: vec![dc("a")],
            vms: vec![bad],
            links: vec![],
        };
        assert!(matches!(
            build_network(&desc, &UnitConstants::default(), 1),
            Err(TopologyError::NonPositive { .. })
        ));
    }
}
