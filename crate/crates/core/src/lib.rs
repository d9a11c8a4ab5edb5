pub mod bounds_cli;
pub mod chebyshev;
pub mod coeffs;
pub mod error;
pub mod fusion;
pub mod gnsblocks;
pub mod linalg;
pub mod report;
pub mod tlcat;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dimensions.md")]
    mod dimensions {}
    #[doc = include_str!("../../../book/src/chebyshev.md")]
    mod chebyshev {}
    #[doc = include_str!("../../../book/src/coefficients.md")]
    mod coefficients {}
    #[doc = include_str!("../../../book/src/tensor-oracle.md")]
    mod tensor_oracle {}
    #[doc = include_str!("../../../book/src/gns-blocks.md")]
    mod gns_blocks {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
