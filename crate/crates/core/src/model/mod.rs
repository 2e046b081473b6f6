//! Parameter bundles, state containers and the chain index set.

pub mod index;
pub mod params;
pub mod state;
pub mod trajectory;

pub use index::{ChainTable, IndexSetIL, SiteIndexSet, SiteTable, TriTable, Triangle};
pub use params::{MtParams, MtVectors, NsParams, ParamError, SParams, TParams, Validate};
pub use state::{MtState, NsState, SState, TState};
pub use trajectory::{StepStats, Trajectory};
