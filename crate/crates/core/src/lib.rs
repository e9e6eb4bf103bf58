//! Exact engine for dimensional motivic integration over a discretely valued
//! field of residue characteristic zero.
//!
//! ```
//! use tropivol::dsl;
//! use tropivol::sexpr::parse_one;
//! use tropivol::vfcells::{integrate, vol};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let a = dsl::set(&parse_one("(vfcell (n 1) (ordset (cell (ge (1) 1))))")?)?;
//! let phi = dsl::dimfun(&parse_one("(dimfun (profile 1 0 0) (piece all (form (-1) 0)))")?)?;
//! assert_eq!(vol(&a).to_string(), "-1");
//! assert_eq!(integrate(&a, &phi)?.to_string(), "-2");
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod conductor;
pub mod dsl;
pub mod gen;
pub mod intlat;
pub mod motivic;
pub mod padic;
pub mod presburger;
pub mod residue;
pub mod sexpr;
pub mod vfcells;
pub mod zbar;

pub use zbar::ZBar;
