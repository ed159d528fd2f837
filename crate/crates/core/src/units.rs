//! Conversion constants between catalogue units and the internal rate model.
//!
//! Internally traffic is measured in packets/ms, computation in units/ms where
//! one unit is one million instructions, delays in ms, and every cost or
//! revenue coefficient is expressed per time step.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitConstants {
    /// Wall-clock length of one time step in ms.
    pub step_ms: f64,
    /// Packet size used to turn Mb/s and Gb figures into packets.
    pub bytes_per_packet: f64,
}

impl Default for UnitConstants {
    fn default() -> Self {
        Self {
            step_ms: 60_000.0,
            bytes_per_packet: 312_500.0,
        }
    }
}

impl UnitConstants {
    pub fn bits_per_packet(&self) -> f64 {
        self.bytes_per_packet * 8.0
    }

    pub fn step_hours(&self) -> f64 {
        self.step_ms / 3_600_000.0
    }

    /// Mb/s to packets/ms (1 Mb/s is 1000 bits/ms).
    pub fn packets_per_ms(&self, mbps: f64) -> f64 {
        mbps * 1_000.0 / self.bits_per_packet()
    }

    /// MIPS to computation units/ms.
    pub fn units_per_ms(&self, mips: f64) -> f64 {
        mips / 1_000.0
    }

    /// Gb carried during one step by a flow of one packet/ms.
    pub fn gb_per_traffic_step(&self) -> f64 {
        self.bits_per_packet() * self.step_ms / 1e9
    }

    /// Currency per (unit/ms of assigned computation) held for one step.
    pub fn cpu_cost_per_unit_step(&self, per_mips_hour: f64) -> f64 {
        per_mips_hour * 1_000.0 * self.step_hours()
    }

    pub fn idle_cost_per_step(&self, per_hour: f64) -> f64 {
        per_hour * self.step_hours()
    }

    /// Currency per (packet/ms) carried for one step, from a per-Gb price.
    pub fn per_traffic_step(&self, per_gb: f64) -> f64 {
        per_gb * self.gb_per_traffic_step()
    }
}
