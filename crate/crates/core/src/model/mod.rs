//! Domain types shared by every stage: process rules, component kinds and
//! the logical netlist.

mod kind;
mod netlist;
mod spec;

pub use kind::{ComponentKind, ElectricalParams, KindLibrary, PinDef};
pub use netlist::{validate_netlist, Endpoint, Instance, Issue, Net, Netlist, Severity, ValidationReport};
pub use spec::{load_process_spec, ProcessSpec, MAX_INSULATOR_KAPPA};
