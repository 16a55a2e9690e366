//! Wreath-type groups and their twisted variants, exact-sequence checks,
//! plane singularity invariants, and orbit fundamental groups of functions
//! on the Moebius band and other non-orientable surfaces.

pub mod arith;
pub mod concrete;
pub mod cw;
pub mod error;
pub mod exact_seq;
pub mod expr;
pub mod io;
pub mod parse;
pub mod pi1;
pub mod poly;
pub mod surface;

pub use arith::{Carrier, Element};
pub use concrete::{ConcreteGroup, DEFAULT_CAP};
pub use error::{Error, Result};
pub use expr::{
    format_expr, invariant_fingerprint, is_in_class_g, normalize, Fingerprint, GroupExpr,
    InvolutiveAutomorphism, Style,
};
pub use cw::{ker_s_act_probe, lefschetz_check, CwAutomorphism, CwComplex, LatticeModel, Layout};
pub use io::{read_input, InputFile};
pub use parse::{parse_expr, parse_gamma};
pub use surface::{DiskRecord, MobiusDecomposition, SignedPermutation};
pub use pi1::{bieberbach_diagram, pi1_mobius, Case, Pi1Result, SurfaceDecomposition};
