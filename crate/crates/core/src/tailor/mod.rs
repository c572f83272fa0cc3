//! Virtual tailor: cutting-plane circumferences, part lengths, interface
//! circumferences and the 34-slot measurement vector.

mod config;
mod measure;
mod optimize;
mod section;
mod slots;

pub use config::TailorConfig;
pub use measure::{
    interface_circumference, measure_body, measure_part, part_length, MeasureReport,
    PartMeasurements,
};
pub use optimize::{
    minimize_over_cap, optimize_cut_point, optimize_normal, optimize_normal_with, PartCutter,
};
pub(crate) use slots::sided;
pub use section::{cross_section, loop_perimeter, CrossSection, CuttingPlane, Slicer};
pub use slots::{
    csv_header, from_csv, part_slots, resolve_slot, slot_index, to_csv, MeasurementVector,
    SlotInfo, SlotKind, CATEGORIES, SLOTS, SLOT_COUNT,
};
