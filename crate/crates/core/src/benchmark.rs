//! Shipped benchmark system and scenarios.

use crate::config::{parse_scenario, parse_system_config};
use crate::dynamics::Scenario;
use crate::sysmodel::SystemModel;

pub const SYSTEM: &str = include_str!("../data/kundur.system");
pub const LOADSTEP: &str = include_str!("../data/loadstep.scenario");
pub const FAULT_LINE_7_8: &str = include_str!("../data/fault_line_7_8.scenario");

pub fn system() -> SystemModel {
    parse_system_config(SYSTEM).expect("shipped system file parses")
}

pub fn loadstep() -> Scenario {
    parse_scenario(LOADSTEP).expect("shipped scenario parses")
}

pub fn fault_line_7_8() -> Scenario {
    parse_scenario(FAULT_LINE_7_8).expect("shipped scenario parses")
}
