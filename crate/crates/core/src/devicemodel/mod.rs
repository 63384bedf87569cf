//! From the bare transmon circuit to an effective qudit Hamiltonian.

pub mod cluster;
pub mod device;
pub mod export;
pub mod sw;

pub use cluster::{
    aggregate, cluster_heff, cluster_weights, enumerate_clusters, is_connected, linked_cluster_expansion,
    truncation_sensitivity, Cluster, ClusterExpansion,
};
pub use device::{
    bare_hamiltonian, coupler_idle_frequency, coupling_g, qudit_distance, BareDevice, Coupling, LatticeDeviceParams,
    Node, NodeKind, ProductBasis,
};
pub use export::{export_extended_bh, Category, CategoryStats, EffectiveTermReport, ExportOptions, ExportedTerm, Geometry};
pub use sw::{BareSystem, EffectiveOperator, Monomial, SectorHamiltonian, SwOptions};
