//! Co-design toolkit for encrypted networked control.
//!
//! The crate couples three things that are usually designed in isolation:
//!
//! * an LWE/GSW cryptosystem ([`lwe`]) whose parameters set both the
//!   security level and the size of every message on the wire,
//! * a delay model ([`delay`]) that turns those parameters into a
//!   worst-case bound on the sampling-to-actuation latency, and
//! * a sampled-data stability analysis ([`discretization`], [`polytope`],
//!   [`lmi`]) that certifies a state-feedback gain against every delay up
//!   to that bound via a finite set of vertex LMIs.
//!
//! [`codesign`] runs the outer-inner search over parameter and gain
//! candidates, and [`sim`] replays the resulting closed loop end to end,
//! either with the exact real-valued gain or through the full
//! quantize/encrypt/evaluate/decrypt pipeline.

pub mod codesign;
pub mod delay;
pub mod discretization;
pub mod fixtures;
pub mod linalg;
pub mod lmi;
pub mod lwe;
pub mod polytope;
pub mod rng;
pub mod sim;
