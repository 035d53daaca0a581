//! Simulation and reconstruction of systematic parallel turbo codes.

pub mod bcjr_entropy;
pub mod dualword_recon;
pub mod gf2poly;
pub mod pipeline;
pub mod seed;
pub mod turbo_sim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    pub mod polynomials {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/dualwords.md")]
    pub mod dualwords {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    pub mod entropy {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    pub mod reconstruction {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/results.md")]
    pub mod results {}
}
