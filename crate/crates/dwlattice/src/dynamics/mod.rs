//! Spinor wavefunction dynamics on one lattice unit cell.

pub mod loading;
pub mod propagate;
pub mod schedule;
pub mod state;
pub mod tof;
pub mod transport;

pub use loading::{load_ground_state, LoadResult, LoadingRamp};
pub use propagate::Propagator;
pub use schedule::{ControlSchedule, RampShape, RfDrive, RfPulse, Segment};
pub use state::{measure_site_populations, SitePopulations, SpinorState};
pub use tof::{momentum_distribution, TofProfile};
pub use transport::{transport_sequence, TransportProtocol, TransportResult};
