//! Logical links between VMs of a small diamond topology for increasing k.

use nfv_planner::topology::{
    build_network, DatacenterDescription, LinkDescription, TopologyDescription, VmDescription,
};
use nfv_planner::units::UnitConstants;

fn link(a: &str, b: &str, delay_ms: f64) -> LinkDescription {
    LinkDescription {
        id: None,
        src: a.into(),
        dst: b.into(),
        bandwidth_mbps: None,
        delay_ms,
        cost_per_gb: 0.01,
        bidirectional: true,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dcs = ["a", "d"];
    let desc = TopologyDescription {
        switches: vec!["b".into(), "c".into()],
        datacenters: dcs
            .iter()
            .map(|&id| DatacenterDescription {
                id: id.into(),
                gateway: None,
                capacity_mips: None,
            })
            .collect(),
        vms: dcs
            .iter()
            .map(|&dc| VmDescription {
                id: format!("{dc}1"),
                datacenter: dc.into(),
                tier: None,
                capacity_mips: 1200.0,
                cpu_cost_per_mips_hour: 4e-5,
                idle_cost_per_hour: 0.036,
                setup_steps: 1,
            })
            .collect(),
        links: vec![
            link("a", "b", 1.0),
            link("b", "d", 2.0),
            link("a", "c", 2.0),
            link("c", "d", 3.0),
        ],
    };
    for k in 1..=3 {
        let net = build_network(&desc, &UnitConstants::default(), k)?;
        let (a, d) = (net.vm_by_name("a1").unwrap(), net.vm_by_name("d1").unwrap());
        print!("k={k}: {} links in catalogue;", net.logical_link_count());
        for id in net.logical_links_between(a, d) {
            let hops: Vec<&str> = net.hops(id).map(|e| net.link(e).name.as_str()).collect();
            print!("  {:.0} ms via {}", net.logical_delay(id), hops.join(", "));
        }
        println!();
    }
    Ok(())
}
