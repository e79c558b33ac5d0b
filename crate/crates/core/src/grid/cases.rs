//! Case files shipped with the crate.

use super::{parse_matpower_case, NetworkCase};

pub const IEEE14_TEXT: &str = include_str!("../../data/case14.m");
pub const THREE_BUS_SYMMETRIC_TEXT: &str = include_str!("../../data/case3_sym.m");
pub const THREE_BUS_ASYMMETRIC_TEXT: &str = include_str!("../../data/case3_asym.m");

/// IEEE 14-bus system with thermal limits: 14 buses, 20 lines, 11 loads.
pub fn ieee14() -> NetworkCase {
    parse_matpower_case(IEEE14_TEXT).expect("bundled case parses")
}

/// Generator of 10 p.u. at bus 1 feeding loads of 6 p.u. at buses 2 and 3
/// over lines rated 5 p.u. each.
pub fn three_bus_symmetric() -> NetworkCase {
    parse_matpower_case(THREE_BUS_SYMMETRIC_TEXT).expect("bundled case parses")
}

/// As [`three_bus_symmetric`] with line ratings 6 and 4 p.u.
pub fn three_bus_asymmetric() -> NetworkCase {
    parse_matpower_case(THREE_BUS_ASYMMETRIC_TEXT).expect("bundled case parses")
}
