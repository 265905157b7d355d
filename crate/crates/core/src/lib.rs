//! Certified partial optimality for pairwise energies.
//!
//! An energy `E(x) = f0 + sum_s f_s(x_s) + sum_st f_st(x_s, x_t)` is given by an
//! [`EnergyInstance`]. A [`PixelwiseMapping`] `p` that never increases the
//! energy proves that some minimizer avoids every label it moves. This crate
//! finds such mappings with linear programming over the local polytope and
//! checks them with one more linear program.
//!
//! ```
//! use maxpersist::{methods::run_method, Method, MethodConfig, EnergyInstance, Solver};
//!
//! let mut f = EnergyInstance::new(vec![2, 2]).unwrap();
//! f.add_edge(0, 1).unwrap();
//! f.set_unary(0, 1, 3.0).unwrap();
//! f.set_pair(0, 1, 0, 1, 1.0).unwrap();
//! let run = run_method(&f, Method::L1, &MethodConfig::default(), &Solver::default()).unwrap();
//! assert_eq!(run.certificate.eliminated, vec![(0, 1), (1, 1)]);
//! ```

pub mod certificate;
pub mod dee;
pub mod error;
pub mod format;
pub mod harness;
pub mod lp;
pub mod mapping;
pub mod methods;
pub mod model;
pub mod persistency;
pub mod window;

pub use certificate::{Method, Mode, PersistencyCertificate};
pub use error::{Error, Result};
pub use lp::{Backend, Solver, Tolerances};
pub use mapping::{PixelwiseMapping, VerificationReport};
pub use methods::{MethodConfig, YChoice};
pub use model::{EnergyInstance, Labeling, RelaxedLabeling, Reparametrization};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/energies.md")]
    mod energies {}
    #[doc = include_str!("../../../book/src/local-polytope.md")]
    mod local_polytope {}
    #[doc = include_str!("../../../book/src/mappings.md")]
    mod mappings {}
    #[doc = include_str!("../../../book/src/l1.md")]
    mod l1 {}
    #[doc = include_str!("../../../book/src/dee.md")]
    mod dee {}
    #[doc = include_str!("../../../book/src/windows.md")]
    mod windows {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
