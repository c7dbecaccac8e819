pub mod cocycle;
pub mod empirical;
pub mod error;
pub mod experiments;
pub mod group;
pub mod measure;
pub mod oracle;
pub mod walk;

pub use error::{Error, Result};
pub use group::{Element, GeneratingSet, Group, ProductGens, Word};
