//! Transverse Dirichlet problem on the cross-section.

mod bessel;
mod coupling;
mod domain;
mod eigen;
mod grid;
mod modes;

pub use coupling::{coupling_table, CouplingTable};
pub use domain::{Domain2D, Shape};
pub use grid::{Grid2D, GridFunction};
pub use modes::{
    analytic_disc_modes, analytic_disc_modes_on, analytic_rectangle_modes,
    analytic_rectangle_modes_on, build_modes, build_modes_with,
    cluster_modes, Cluster, ClusterTol, DiscField, DiscMode, ModeBasis, ModeFunction, ModeSet, RectangleField,
};
