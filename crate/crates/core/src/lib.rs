//! Executable model of CoAP messaging over unreliable transport with
//! pluggable attacker capabilities and a protocol-dialect wrapper, driven by
//! bounded exhaustive reachability search.
//!
//! The crate is organised around the search state: [`model`] defines the term
//! algebra (messages, agents, systems), [`coap`] the timed protocol rules,
//! [`attack`] the attacker capability semantics, [`dialect`] the lingo codec
//! and wrapper rules, [`applayer`] the rule-driven application layer,
//! [`props`] the goal predicates, [`scenarios`] the initial-configuration
//! builders and registry, and [`search`] the reachability engine.

pub mod applayer;
pub mod attack;
pub mod coap;
pub mod dialect;
pub mod model;
pub mod props;
pub mod scenarios;
pub mod search;
pub mod suite;

pub use coap::{Label, TimeBound, Transition};
pub use model::{Agent, AgentKind, DelayedMessage, LogItem, Message, System};
pub use props::PropertyExpr;
pub use search::{SearchError, SearchMode, SearchQuery, SearchResult};
