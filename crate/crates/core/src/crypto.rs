//! Hashlocks, path-signed hashkeys, and tri-state hashlock circuits.
//!
//! A hashkey carries a secret, a party path, and a nested signature chain:
//! the originator signs the secret, and every party along the path signs the
//! previous signature layer. Verification recomputes the chain, checks the
//! path against the graph per the configured mode, and enforces the timeout.
//!
//! Signatures are a deterministic MAC scheme (HMAC-SHA256 under per-party
//! keys derived from the run seed). Runs are reproducible from the seed and
//! parties cannot produce each other's layers through the engine API, which
//! is the unforgeability the simulation needs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{Digraph, PartyId, TransferArc};

pub type Round = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("party {0} is already in the hashkey path")]
    DuplicatePartyInPath(PartyId),
    #[error("no lock state recorded for hashlock {0}")]
    MissingLockState(Hashlock),
    #[error("no signing key registered for party {0}")]
    UnknownSigner(PartyId),
}

/// A 32-byte secret chosen by one party for one solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Secret {
    pub value: [u8; 32],
    pub generator: PartyId,
    pub solution: usize,
}

/// h = SHA-256(secret value).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hashlock(pub [u8; 32]);

impl Hashlock {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short_hex(&self) -> String {
        hex::encode(&self.0[..8])
    }
}

impl fmt::Debug for Hashlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h:{}", self.short_hex())
    }
}

impl fmt::Display for Hashlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h:{}", self.short_hex())
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(data);
    h.finalize().into()
}

pub fn make_hashlock(secret: &Secret) -> Hashlock {
    Hashlock(sha256(&secret.value))
}

/// One signature layer (HMAC-SHA256 output).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SigBytes(pub [u8; 32]);

/// HMAC-SHA256 per RFC 2104 over the sha2 primitive.
fn hmac_sha256(key: &[u8; 32], message: &[u8]) -> [u8; 32] {
    const BLOCK: usize = 64;
    let mut k = [0u8; BLOCK];
    k[..32].copy_from_slice(key);
    let mut ipad = [0x36u8; BLOCK];
    let mut opad = [0x5cu8; BLOCK];
    for i in 0..BLOCK {
        ipad[i] ^= k[i];
        opad[i] ^= k[i];
    }
    let mut inner = Sha256::new();
    inner.update(ipad);
    inner.update(message);
    let inner: [u8; 32] = inner.finalize().into();
    let mut outer = Sha256::new();
    outer.update(opad);
    outer.update(inner);
    outer.finalize().into()
}

/// Per-party signing keys, derived deterministically from the run seed.
#[derive(Debug, Clone)]
pub struct SignerRegistry {
    keys: BTreeMap<PartyId, [u8; 32]>,
}

impl SignerRegistry {
    pub fn from_seed(seed: u64, parties: impl IntoIterator<Item = PartyId>) -> Self {
        let mut keys = BTreeMap::new();
        for p in parties {
            let mut h = Sha256::new();
            h.update(b"swapforge-signing-key");
            h.update(seed.to_be_bytes());
            h.update(p.as_str().as_bytes());
            keys.insert(p, h.finalize().into());
        }
        SignerRegistry { keys }
    }

    /// Overrides one party's key material (scenario `keyseed` attribute).
    pub fn override_key(&mut self, party: PartyId, keyseed: u64) {
        let mut h = Sha256::new();
        h.update(b"swapforge-signing-key-override");
        h.update(keyseed.to_be_bytes());
        h.update(party.as_str().as_bytes());
        self.keys.insert(party, h.finalize().into());
    }

    pub fn sign(&self, message: &[u8], party: &PartyId) -> Result<SigBytes, CryptoError> {
        let key = self
            .keys
            .get(party)
            .ok_or_else(|| CryptoError::UnknownSigner(party.clone()))?;
        Ok(SigBytes(hmac_sha256(key, message)))
    }

    pub fn verify(&self, message: &[u8], party: &PartyId, sig: &SigBytes) -> bool {
        match self.sign(message, party) {
            Ok(expected) => expected == *sig,
            Err(_) => false,
        }
    }
}

/// Hashkey (s, p, sigma): the path runs u_0..u_k where u_k chose the secret
/// and u_0 is the end the key was last extended at. `sig_chain[0]` is u_k's
/// signature over the secret; layer i is u_{k-i}'s signature over layer i-1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hashkey {
    pub secret: [u8; 32],
    pub path: Vec<PartyId>,
    pub sig_chain: Vec<SigBytes>,
}

impl Hashkey {
    pub fn generator(&self) -> Option<&PartyId> {
        self.path.last()
    }
}

/// Builds the originator's key: path = [leader], one signature layer.
pub fn leader_hashkey(
    secret: &Secret,
    leader: &PartyId,
    registry: &SignerRegistry,
) -> Result<Hashkey, CryptoError> {
    let sig = registry.sign(&secret.value, leader)?;
    Ok(Hashkey {
        secret: secret.value,
        path: vec![leader.clone()],
        sig_chain: vec![sig],
    })
}

/// Prepends `party` to the path and signs the previous outer layer.
pub fn extend_hashkey(
    key: &Hashkey,
    party: &PartyId,
    registry: &SignerRegistry,
) -> Result<Hashkey, CryptoError> {
    if key.path.contains(party) {
        return Err(CryptoError::DuplicatePartyInPath(party.clone()));
    }
    let outer = key
        .sig_chain
        .last()
        .expect("honestly built keys have at least one layer");
    let sig = registry.sign(&outer.0, party)?;
    let mut path = Vec::with_capacity(key.path.len() + 1);
    path.push(party.clone());
    path.extend(key.path.iter().cloned());
    let mut sig_chain = key.sig_chain.clone();
    sig_chain.push(sig);
    Ok(Hashkey {
        secret: key.secret,
        path,
        sig_chain,
    })
}

/// Path-validity regime for hashkey verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyMode {
    /// Path must be a directed path from the arc's recipient to the
    /// generator.
    Directed,
    /// Path must be a simple path in the undirected view, starting at either
    /// endpoint of the arc (ProtocolB broadcast).
    Undirected,
    /// Path is any duplicate-free vertex sequence ending at the generator;
    /// buys fault tolerance at the cost of a longer timeout.
    Pathless,
}

/// Immutable per-run data verification needs.
#[derive(Debug, Clone)]
pub struct VerifyContext {
    pub graph: Digraph,
    pub undirected: Digraph,
    pub max_path_len: usize,
    pub max_path_len_undirected: usize,
    pub party_count: usize,
    pub delta: Round,
}

impl VerifyContext {
    pub fn new(graph: &Digraph) -> Self {
        let undirected = graph.to_undirected();
        VerifyContext {
            max_path_len: graph.max_path_length(),
            max_path_len_undirected: undirected.max_path_length(),
            party_count: graph.vertex_count(),
            graph: graph.clone(),
            undirected,
            delta: 1,
        }
    }

    /// Last round at which a key with a path of `path_len` vertices is
    /// accepted.
    pub fn key_deadline(&self, mode: VerifyMode, path_len: usize) -> Round {
        let units = match mode {
            VerifyMode::Directed | VerifyMode::Undirected => self.max_path_len + path_len,
            VerifyMode::Pathless => self.max_path_len + self.party_count,
        };
        units as Round * self.delta
    }

    /// Round at which locks under this mode can no longer be unlocked by any
    /// key; contracts refund no later than this.
    pub fn lock_deadline(&self, mode: VerifyMode) -> Round {
        let units = match mode {
            VerifyMode::Directed => 2 * self.max_path_len,
            VerifyMode::Undirected => self.max_path_len + self.max_path_len_undirected,
            VerifyMode::Pathless => self.max_path_len + self.party_count,
        };
        units as Round * self.delta
    }
}

fn path_is_duplicate_free(path: &[PartyId]) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    path.iter().all(|p| seen.insert(p))
}

fn signature_chain_valid(key: &Hashkey, registry: &SignerRegistry) -> bool {
    if key.sig_chain.len() != key.path.len() || key.path.is_empty() {
        return false;
    }
    let k = key.path.len() - 1;
    // Layer 0: generator over the secret.
    if !registry.verify(&key.secret, &key.path[k], &key.sig_chain[0]) {
        return false;
    }
    for i in 1..key.sig_chain.len() {
        let signer = &key.path[k - i];
        let message = key.sig_chain[i - 1].0;
        if !registry.verify(&message, signer, &key.sig_chain[i]) {
            return false;
        }
    }
    true
}

/// Full unlock check: digest match, path validity for the mode, signature
/// chain, and timeout. Malformed keys simply fail.
#[allow(clippy::too_many_arguments)]
pub fn verify_hashkey(
    lock: &Hashlock,
    key: &Hashkey,
    arc: &TransferArc,
    generator: &PartyId,
    ctx: &VerifyContext,
    registry: &SignerRegistry,
    round: Round,
    mode: VerifyMode,
) -> bool {
    if key.path.is_empty() || !path_is_duplicate_free(&key.path) {
        return false;
    }
    if Hashlock(sha256(&key.secret)) != *lock {
        return false;
    }
    if key.path.last() != Some(generator) {
        return false;
    }
    let path_ok = match mode {
        VerifyMode::Directed => {
            key.path[0] == arc.to && ctx.graph.is_directed_path(&key.path)
        }
        VerifyMode::Undirected => {
            (key.path[0] == arc.to || key.path[0] == arc.from)
                && ctx.undirected.is_directed_path(&key.path)
        }
        VerifyMode::Pathless => key.path.iter().all(|p| ctx.graph.contains_vertex(p)),
    };
    if !path_ok {
        return false;
    }
    if !signature_chain_valid(key, registry) {
        return false;
    }
    round <= ctx.key_deadline(mode, key.path.len())
}

/// Per-(contract, hashlock) lock state. Transitions are monotone:
/// Open -> Unlocked or Open -> Expired, exactly once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockState {
    Open,
    Unlocked(Round),
    Expired,
}

/// Kleene truth value for circuits over in-flight locks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tri {
    True,
    False,
    Pending,
}

/// Formula over hashlock atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CircuitExpr {
    Atom(Hashlock),
    Not(Box<CircuitExpr>),
    And(Vec<CircuitExpr>),
    Or(Vec<CircuitExpr>),
}

impl CircuitExpr {
    pub fn and_of(locks: impl IntoIterator<Item = Hashlock>) -> CircuitExpr {
        CircuitExpr::And(locks.into_iter().map(CircuitExpr::Atom).collect())
    }

    pub fn atoms(&self) -> Vec<Hashlock> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Hashlock>) {
        match self {
            CircuitExpr::Atom(h) => out.push(*h),
            CircuitExpr::Not(e) => e.collect_atoms(out),
            CircuitExpr::And(es) | CircuitExpr::Or(es) => {
                for e in es {
                    e.collect_atoms(out);
                }
            }
        }
    }
}

impl fmt::Display for CircuitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitExpr::Atom(h) => write!(f, "{h}"),
            CircuitExpr::Not(e) => write!(f, "!{e}"),
            CircuitExpr::And(es) => {
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
            CircuitExpr::Or(es) => {
                write!(f, "(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Kleene three-valued evaluation. An unlocked atom is true, an expired one
/// false, an open one pending. A circuit with negated predecessors therefore
/// stays pending until those predecessors expire, which is exactly the
/// waiting behavior ProtocolB contracts need.
pub fn evaluate_circuit(
    circuit: &CircuitExpr,
    states: &BTreeMap<Hashlock, LockState>,
) -> Result<Tri, CryptoError> {
    Ok(match circuit {
        CircuitExpr::Atom(h) => match states.get(h).ok_or(CryptoError::MissingLockState(*h))? {
            LockState::Unlocked(_) => Tri::True,
            LockState::Expired => Tri::False,
            LockState::Open => Tri::Pending,
        },
        CircuitExpr::Not(e) => match evaluate_circuit(e, states)? {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Pending => Tri::Pending,
        },
        CircuitExpr::And(es) => {
            let mut result = Tri::True;
            for e in es {
                match evaluate_circuit(e, states)? {
                    Tri::False => return Ok(Tri::False),
                    Tri::Pending => result = Tri::Pending,
                    Tri::True => {}
                }
            }
            result
        }
        CircuitExpr::Or(es) => {
            let mut result = Tri::False;
            for e in es {
                match evaluate_circuit(e, states)? {
                    Tri::True => return Ok(Tri::True),
                    Tri::Pending => result = Tri::Pending,
                    Tri::False => {}
                }
            }
            result
        }
    })
}
