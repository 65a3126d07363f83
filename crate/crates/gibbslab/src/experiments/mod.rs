//! Theorem-level drivers. Each one measures a quantity exactly, evaluates
//! the matching analytic bound, and records both in a [`BoundReport`].

mod certificate;
mod corollary;
mod dc;
mod expansional;
mod fit;
mod li;
mod lppl;
mod report;
mod slt;

pub use certificate::{
    dc_from_li_certificate, li_from_lppl, lppl_from_dc, removal_growth, removal_zeta, round_trip,
    DcCertificate, DecayLaw, GrowthLaw, LiCertificate, LpplCertificate, RoundTrip, SizeLaw, Zeta,
    DEFAULT_TABLE_LEN,
};
pub use corollary::{corollary_bound, CorollaryKind, CorollaryParams};
pub use dc::{measure_dc, measure_dc_uniform, sublattices, DcPoint, DcSeries, SUBLATTICE_CAP};
pub use expansional::{
    appending_difference, appending_series, assemble_real, beta_star, dc_1d_via_expansionals,
    expansional, Dc1dPoint, Dc1dReport, Expansional, ExpansionalSeries,
};
pub use fit::{fit_decay, monotone_envelope, DecayFit, DecayModel, NOISE_FLOOR};
pub use li::{coupling_tail, dc_from_li, li_remove_region, li_site_by_site, shell_order};
pub use lppl::{
    chebyshev_nodes, lppl_along_path, lppl_decay_series, lppl_unperturbed, LpplInstance,
    LpplSeries, ZetaQbp,
};
pub use report::{BoundPoint, BoundReport};
pub use slt::{calibrate_lr_prefactor, slt_stability, SltPoint};
