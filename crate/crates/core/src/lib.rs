//! Protocol engine and discrete-round multi-ledger simulator for robust
//! cross-chain swaps: party predicates, all-SAT market clearing, hashlock
//! assignment with reuse, escrow/select/redeem execution under Byzantine
//! behaviors, and post-run outcome auditing.

pub mod cnf;
pub mod clearing;
pub mod crypto;
pub mod engine;
pub mod graph;
pub mod ledger;
pub mod predicate;
pub mod runner;
pub mod sat;
pub mod scenario;
