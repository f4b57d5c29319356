//! Scenario files: a sectioned, human-editable text format describing
//! parties, ledgers, assets, arcs, predicates, and run parameters.
//!
//! ```text
//! [parties]
//! alice
//! carol behavior=crash@escrow
//!
//! [ledgers]
//! xledger
//!
//! [assets]
//! xcoin owner=alice ledger=xledger amount=1
//!
//! [arcs]
//! ac from=alice to=carol asset=xcoin
//!
//! [predicates]
//! income alice ac = arc(ba)
//! outgoing alice = atmost(1; ac, ad)
//!
//! [run]
//! protocol = A
//! seed = 7
//! ```
//!
//! Predicate surface syntax: `arc(id)`, `&`, `|`, `!`, `=>`,
//! `atmost(k; a, b, ...)`, `atleast(k; ...)`, `true`, `false`, parentheses.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::engine::{Behavior, Phase, Protocol, SchemeSelector};
use crate::graph::{ArcId, AssetId, Digraph, PartyId, TransferArc};
use crate::ledger::LedgerId;
use crate::predicate::{PartySpec, PredicateExpr};
use crate::crypto::VerifyMode;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Io(String),
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Semantic(String),
}

impl ScenarioError {
    fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ScenarioError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn semantic(msg: impl Into<String>) -> Self {
        ScenarioError::Semantic(msg.into())
    }
}

#[derive(Debug, Clone)]
pub struct PartyDecl {
    pub id: PartyId,
    pub behavior: Behavior,
    pub keyseed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct AssetDecl {
    pub id: AssetId,
    pub owner: PartyId,
    pub ledger: LedgerId,
    pub amount: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub seed: u64,
    pub solution_limit: usize,
    /// Hashkey verification mode override (base/A accept directed or
    /// pathless; ProtocolB always runs undirected).
    pub mode: Option<VerifyMode>,
    pub ranking: Option<Vec<usize>>,
    /// Per-attempt completion probability for the sequential baseline.
    pub q: f64,
    pub runs: usize,
    /// Off-chain phase durations added to reported completions.
    pub gamma_rounds: u64,
    pub omega_rounds: u64,
    /// Upward-only extension of contract deadlines, in rounds.
    pub deadline_extension: u64,
    /// Override for the baseline's per-attempt expiry m (rounds).
    pub baseline_m: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            protocol: Protocol::A,
            seed: 0,
            solution_limit: 16,
            mode: None,
            ranking: None,
            q: 0.25,
            runs: 1000,
            gamma_rounds: 0,
            omega_rounds: 0,
            deadline_extension: 0,
            baseline_m: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub parties: Vec<PartyDecl>,
    pub ledgers: Vec<LedgerId>,
    pub assets: Vec<AssetDecl>,
    pub graph: Digraph,
    pub specs: Vec<PartySpec>,
    pub run: RunConfig,
}

impl Scenario {
    pub fn behaviors(&self) -> BTreeMap<PartyId, Behavior> {
        self.parties
            .iter()
            .map(|p| (p.id.clone(), p.behavior.clone()))
            .collect()
    }

    pub fn spec_for(&self, party: &PartyId) -> Option<&PartySpec> {
        self.specs.iter().find(|s| &s.party == party)
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    parse_scenario(&text, &name)
}

pub fn parse_scenario(text: &str, name: &str) -> Result<Scenario, ScenarioError> {
    let mut parties: Vec<PartyDecl> = Vec::new();
    let mut ledgers: Vec<LedgerId> = Vec::new();
    let mut assets: Vec<AssetDecl> = Vec::new();
    let mut arcs: Vec<(usize, TransferArc)> = Vec::new();
    let mut income_lines: Vec<(usize, PartyId, ArcId, PredicateExpr)> = Vec::new();
    let mut outgoing_lines: Vec<(usize, PartyId, PredicateExpr)> = Vec::new();
    let mut run = RunConfig::default();
    let mut section: Option<String> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            let end = line.find(']').ok_or_else(|| {
                ScenarioError::syntax(lineno, line.len(), "unterminated section header")
            })?;
            let sec = line[1..end].trim().to_lowercase();
            if !["parties", "ledgers", "assets", "arcs", "predicates", "run"]
                .contains(&sec.as_str())
            {
                return Err(ScenarioError::syntax(
                    lineno,
                    1,
                    format!("unknown section [{sec}]"),
                ));
            }
            section = Some(sec);
            continue;
        }
        let Some(sec) = section.as_deref() else {
            return Err(ScenarioError::syntax(
                lineno,
                1,
                "content before the first section header",
            ));
        };
        match sec {
            "parties" => parties.push(parse_party(lineno, &line)?),
            "ledgers" => {
                let id = first_word(&line);
                ledgers.push(LedgerId::new(id));
            }
            "assets" => assets.push(parse_asset(lineno, &line)?),
            "arcs" => arcs.push((lineno, parse_arc(lineno, &line)?)),
            "predicates" => {
                parse_predicate_line(lineno, &line, &mut income_lines, &mut outgoing_lines)?
            }
            "run" => parse_run_line(lineno, &line, &mut run)?,
            _ => unreachable!(),
        }
    }

    // Assemble and validate the graph.
    let mut graph = Digraph::new();
    let party_ids: BTreeSet<PartyId> = parties.iter().map(|p| p.id.clone()).collect();
    if party_ids.len() != parties.len() {
        return Err(ScenarioError::semantic("duplicate party declaration"));
    }
    if parties.len() > 16 {
        return Err(ScenarioError::semantic(
            "scenarios are capped at 16 parties",
        ));
    }
    for p in &parties {
        graph.add_vertex(p.id.clone());
    }
    let asset_map: BTreeMap<AssetId, &AssetDecl> =
        assets.iter().map(|a| (a.id.clone(), a)).collect();
    if asset_map.len() != assets.len() {
        return Err(ScenarioError::semantic("duplicate asset declaration"));
    }
    let ledger_set: BTreeSet<&LedgerId> = ledgers.iter().collect();
    for a in &assets {
        if !party_ids.contains(&a.owner) {
            return Err(ScenarioError::semantic(format!(
                "asset {} is owned by undeclared party {}",
                a.id, a.owner
            )));
        }
        if !ledger_set.contains(&a.ledger) {
            return Err(ScenarioError::semantic(format!(
                "asset {} lives on undeclared ledger {}",
                a.id, a.ledger
            )));
        }
    }
    for (lineno, arc) in &arcs {
        for end in [&arc.from, &arc.to] {
            if !party_ids.contains(end) {
                return Err(ScenarioError::semantic(format!(
                    "arc {} (line {lineno}) references unknown party {end}",
                    arc.id
                )));
            }
        }
        let Some(asset) = asset_map.get(&arc.asset) else {
            return Err(ScenarioError::semantic(format!(
                "arc {} (line {lineno}) references unknown asset {}",
                arc.id, arc.asset
            )));
        };
        if asset.owner != arc.from {
            return Err(ScenarioError::semantic(format!(
                "arc {} transfers asset {} which is owned by {}, not by the arc source {}",
                arc.id, arc.asset, asset.owner, arc.from
            )));
        }
        graph
            .add_arc(arc.clone())
            .map_err(|e| ScenarioError::semantic(e.to_string()))?;
    }
    if !graph.is_strongly_connected() {
        return Err(ScenarioError::semantic(
            "the proposed-transfer digraph must be strongly connected",
        ));
    }
    // Asset reuse across arcs is a ProtocolB feature only.
    if !matches!(run.protocol, Protocol::B) {
        let mut seen: BTreeMap<&AssetId, &ArcId> = BTreeMap::new();
        for (_, arc) in &arcs {
            if let Some(first) = seen.insert(&arc.asset, &arc.id) {
                return Err(ScenarioError::semantic(format!(
                    "asset {} labels arcs {} and {}; reuse requires protocol = B",
                    arc.asset, first, arc.id
                )));
            }
        }
    }

    // Party specs: every outgoing arc needs an income predicate.
    let mut specs: Vec<PartySpec> = Vec::new();
    for p in &parties {
        let mut spec = PartySpec::new(p.id.clone());
        for (lineno, party, arc, expr) in &income_lines {
            if party != &p.id {
                continue;
            }
            if graph.arc(arc).map(|a| &a.from) != Some(&p.id) {
                return Err(ScenarioError::semantic(format!(
                    "income predicate (line {lineno}): arc {arc} is not an outgoing arc of {party}",
                )));
            }
            if spec.income_preds.insert(arc.clone(), expr.clone()).is_some() {
                return Err(ScenarioError::semantic(format!(
                    "duplicate income predicate for arc {arc} of {party}"
                )));
            }
        }
        let mut outgoing_constraints: Vec<PredicateExpr> = Vec::new();
        for (_, party, expr) in &outgoing_lines {
            if party == &p.id {
                outgoing_constraints.push(expr.clone());
            }
        }
        spec.outgoing_constraint = PredicateExpr::and(outgoing_constraints);
        for arc in graph.outgoing(&p.id) {
            if !spec.income_preds.contains_key(&arc.id) {
                return Err(ScenarioError::semantic(format!(
                    "party {} has outgoing arc {} without an income predicate",
                    p.id, arc.id
                )));
            }
        }
        // Same-asset groups: outgoing arcs sharing one asset.
        let mut groups: BTreeMap<AssetId, BTreeSet<ArcId>> = BTreeMap::new();
        for arc in graph.outgoing(&p.id) {
            groups
                .entry(arc.asset.clone())
                .or_default()
                .insert(arc.id.clone());
        }
        for (asset, arcs) in groups {
            if arcs.len() > 1 {
                spec.same_asset_groups.push((asset, arcs));
            }
        }
        specs.push(spec);
    }
    for (lineno, party, _, _) in &income_lines {
        if !party_ids.contains(party) {
            return Err(ScenarioError::semantic(format!(
                "income predicate (line {lineno}) names unknown party {party}"
            )));
        }
    }
    for (lineno, party, _) in &outgoing_lines {
        if !party_ids.contains(party) {
            return Err(ScenarioError::semantic(format!(
                "outgoing constraint (line {lineno}) names unknown party {party}"
            )));
        }
    }
    // Predicate variables must reference declared arcs.
    let arc_ids: BTreeSet<ArcId> = graph.arc_id_set();
    for (lineno, party, arc, expr) in &income_lines {
        for v in expr.variables() {
            if !arc_ids.contains(&v) {
                return Err(ScenarioError::semantic(format!(
                    "income predicate of {party} for {arc} (line {lineno}) references unknown arc {v}"
                )));
            }
        }
    }
    for (lineno, party, expr) in &outgoing_lines {
        for v in expr.variables() {
            if !arc_ids.contains(&v) {
                return Err(ScenarioError::semantic(format!(
                    "outgoing constraint of {party} (line {lineno}) references unknown arc {v}"
                )));
            }
        }
    }

    Ok(Scenario {
        name: name.to_string(),
        parties,
        ledgers,
        assets,
        graph,
        specs,
        run,
    })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn first_word(line: &str) -> &str {
    line.split_whitespace().next().unwrap_or("")
}

/// key=value attributes after the first word.
fn attributes<'a>(
    lineno: usize,
    line: &'a str,
) -> Result<BTreeMap<&'a str, &'a str>, ScenarioError> {
    let mut out = BTreeMap::new();
    for tok in line.split_whitespace().skip(1) {
        let Some(eq) = tok.find('=') else {
            return Err(ScenarioError::syntax(
                lineno,
                line.find(tok).unwrap_or(0) + 1,
                format!("expected key=value, got {tok}"),
            ));
        };
        out.insert(&tok[..eq], &tok[eq + 1..]);
    }
    Ok(out)
}

fn parse_party(lineno: usize, line: &str) -> Result<PartyDecl, ScenarioError> {
    let id = PartyId::new(first_word(line));
    let attrs = attributes(lineno, line)?;
    let behavior = match attrs.get("behavior") {
        Some(b) => parse_behavior(lineno, b)?,
        None => Behavior::Conforming,
    };
    let keyseed = match attrs.get("keyseed") {
        Some(k) => Some(k.parse::<u64>().map_err(|_| {
            ScenarioError::syntax(lineno, 1, format!("invalid keyseed {k}"))
        })?),
        None => None,
    };
    Ok(PartyDecl {
        id,
        behavior,
        keyseed,
    })
}

pub fn parse_behavior(lineno: usize, text: &str) -> Result<Behavior, ScenarioError> {
    let t = text.trim();
    if t == "conforming" {
        return Ok(Behavior::Conforming);
    }
    if let Some(rest) = t.strip_prefix("crash@") {
        let (phase, round) = match rest.split_once(':') {
            Some((p, r)) => (
                p,
                r.parse::<u64>().map_err(|_| {
                    ScenarioError::syntax(lineno, 1, format!("invalid crash round {r}"))
                })?,
            ),
            None => (rest, 0),
        };
        let phase = match phase {
            "escrow" => Phase::Escrow,
            "select" => Phase::Select,
            "redeem" => Phase::Redeem,
            other => {
                return Err(ScenarioError::syntax(
                    lineno,
                    1,
                    format!("unknown phase {other} (expected escrow, select, or redeem)"),
                ))
            }
        };
        return Ok(Behavior::CrashAt { phase, round });
    }
    if t == "forge_shortcut" {
        return Ok(Behavior::ForgeShortcutKeys);
    }
    if let Some(args) = t
        .strip_prefix("leak_to(")
        .and_then(|s| s.strip_suffix(')'))
    {
        let (party, round) = match args.split_once(':') {
            Some((p, r)) => (
                p,
                r.parse::<u64>().map_err(|_| {
                    ScenarioError::syntax(lineno, 1, format!("invalid leak round {r}"))
                })?,
            ),
            None => (args, 0),
        };
        return Ok(Behavior::LeakSecretTo {
            party: PartyId::new(party.trim()),
            round,
        });
    }
    for (prefix, is_escrow) in [("withhold_escrow(", true), ("withhold_hashkey(", false)] {
        if let Some(args) = t.strip_prefix(prefix).and_then(|s| s.strip_suffix(')')) {
            let selector = parse_selector(lineno, args)?;
            return Ok(if is_escrow {
                Behavior::WithholdEscrow { schemes: selector }
            } else {
                Behavior::WithholdHashkey { schemes: selector }
            });
        }
    }
    Err(ScenarioError::syntax(
        lineno,
        1,
        format!("unknown behavior {t}"),
    ))
}

fn parse_selector(lineno: usize, args: &str) -> Result<SchemeSelector, ScenarioError> {
    let args = args.trim();
    if args == "all" || args == "*" || args.is_empty() {
        return Ok(SchemeSelector::All);
    }
    let mut solutions = BTreeSet::new();
    let mut schemes = BTreeSet::new();
    for part in args.split(',') {
        let part = part.trim();
        if let Some(n) = part.strip_prefix("sol:") {
            solutions.insert(n.parse::<usize>().map_err(|_| {
                ScenarioError::syntax(lineno, 1, format!("invalid solution id {n}"))
            })?);
        } else if let Some(n) = part.strip_prefix("scheme:") {
            schemes.insert(n.parse::<usize>().map_err(|_| {
                ScenarioError::syntax(lineno, 1, format!("invalid scheme id {n}"))
            })?);
        } else {
            return Err(ScenarioError::syntax(
                lineno,
                1,
                format!("expected sol:<id> or scheme:<id>, got {part}"),
            ));
        }
    }
    if !schemes.is_empty() && !solutions.is_empty() {
        return Err(ScenarioError::syntax(
            lineno,
            1,
            "mixing sol: and scheme: selectors is not supported",
        ));
    }
    Ok(if schemes.is_empty() {
        SchemeSelector::Solutions(solutions)
    } else {
        SchemeSelector::Schemes(schemes)
    })
}

fn parse_asset(lineno: usize, line: &str) -> Result<AssetDecl, ScenarioError> {
    let id = AssetId::new(first_word(line));
    let attrs = attributes(lineno, line)?;
    let owner = attrs
        .get("owner")
        .ok_or_else(|| ScenarioError::syntax(lineno, 1, "asset requires owner=<party>"))?;
    let ledger = attrs
        .get("ledger")
        .ok_or_else(|| ScenarioError::syntax(lineno, 1, "asset requires ledger=<id>"))?;
    let amount = attrs
        .get("amount")
        .map(|a| {
            a.parse::<u64>().map_err(|_| {
                ScenarioError::syntax(lineno, 1, format!("invalid amount {a}"))
            })
        })
        .transpose()?
        .unwrap_or(1);
    Ok(AssetDecl {
        id,
        owner: PartyId::new(*owner),
        ledger: LedgerId::new(*ledger),
        amount,
    })
}

fn parse_arc(lineno: usize, line: &str) -> Result<TransferArc, ScenarioError> {
    let id = ArcId::new(first_word(line));
    let attrs = attributes(lineno, line)?;
    let get = |k: &str| {
        attrs
            .get(k)
            .copied()
            .ok_or_else(|| ScenarioError::syntax(lineno, 1, format!("arc requires {k}=...")))
    };
    Ok(TransferArc {
        id,
        from: PartyId::new(get("from")?),
        to: PartyId::new(get("to")?),
        asset: AssetId::new(get("asset")?),
    })
}

#[allow(clippy::type_complexity)]
fn parse_predicate_line(
    lineno: usize,
    line: &str,
    income: &mut Vec<(usize, PartyId, ArcId, PredicateExpr)>,
    outgoing: &mut Vec<(usize, PartyId, PredicateExpr)>,
) -> Result<(), ScenarioError> {
    let Some(eq) = line.find('=') else {
        return Err(ScenarioError::syntax(
            lineno,
            line.len(),
            "predicate line requires '='",
        ));
    };
    // Guard against `=>` at the top level of the header.
    let (head, expr_src) = (line[..eq].trim(), line[eq + 1..].trim());
    let expr = parse_predicate(expr_src, lineno, eq + 2)?;
    let words: Vec<&str> = head.split_whitespace().collect();
    match words.as_slice() {
        ["income", party, arc] => {
            income.push((lineno, PartyId::new(*party), ArcId::new(*arc), expr));
            Ok(())
        }
        ["outgoing", party] => {
            outgoing.push((lineno, PartyId::new(*party), expr));
            Ok(())
        }
        _ => Err(ScenarioError::syntax(
            lineno,
            1,
            "expected 'income <party> <arc> = <expr>' or 'outgoing <party> = <expr>'",
        )),
    }
}

fn parse_run_line(
    lineno: usize,
    line: &str,
    run: &mut RunConfig,
) -> Result<(), ScenarioError> {
    let Some(eq) = line.find('=') else {
        return Err(ScenarioError::syntax(
            lineno,
            line.len(),
            "run line requires key = value",
        ));
    };
    let key = line[..eq].trim().to_lowercase();
    let value = line[eq + 1..].trim();
    let bad = |what: &str| ScenarioError::syntax(lineno, eq + 2, format!("invalid {what}: {value}"));
    match key.as_str() {
        "protocol" => {
            run.protocol = match value.to_uppercase().as_str() {
                "BASE" => Protocol::Base,
                "A" => Protocol::A,
                "B" => Protocol::B,
                _ => return Err(bad("protocol (expected base, A, or B)")),
            };
        }
        "seed" => run.seed = value.parse().map_err(|_| bad("seed"))?,
        "k" | "solution_limit" => {
            run.solution_limit = value.parse().map_err(|_| bad("solution limit"))?;
            if run.solution_limit == 0 {
                return Err(bad("solution limit (must be >= 1)"));
            }
        }
        "mode" => {
            run.mode = Some(match value.to_lowercase().as_str() {
                "directed" => VerifyMode::Directed,
                "undirected" => VerifyMode::Undirected,
                "pathless" => VerifyMode::Pathless,
                _ => return Err(bad("mode (expected directed, undirected, or pathless)")),
            });
        }
        "ranking" => {
            let mut order = Vec::new();
            for part in value.split(',') {
                order.push(part.trim().parse::<usize>().map_err(|_| bad("ranking"))?);
            }
            run.ranking = Some(order);
        }
        "q" => {
            run.q = value.parse().map_err(|_| bad("q"))?;
            if !(run.q > 0.0 && run.q <= 1.0) {
                return Err(bad("q (must be in (0, 1])"));
            }
        }
        "runs" => run.runs = value.parse().map_err(|_| bad("runs"))?,
        "gamma" => run.gamma_rounds = value.parse().map_err(|_| bad("gamma"))?,
        "omega" => run.omega_rounds = value.parse().map_err(|_| bad("omega"))?,
        "deadline_extension" => {
            run.deadline_extension = value.parse().map_err(|_| bad("deadline_extension"))?
        }
        "m" | "baseline_m" => {
            run.baseline_m = Some(value.parse().map_err(|_| bad("baseline m"))?)
        }
        other => {
            return Err(ScenarioError::syntax(
                lineno,
                1,
                format!("unknown run key {other}"),
            ))
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Predicate surface-syntax parser (recursive descent).
// ---------------------------------------------------------------------------

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col_base: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(usize),
    Amp,
    Pipe,
    Bang,
    Arrow,
    LParen,
    RParen,
    Semi,
    Comma,
    Eof,
}

impl<'a> Lexer<'a> {
    fn col(&self) -> usize {
        self.col_base + self.pos
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn next_tok(&mut self) -> Result<Tok, ScenarioError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(Tok::Eof);
        }
        let c = self.src[self.pos] as char;
        let tok = match c {
            '&' => {
                self.pos += 1;
                Tok::Amp
            }
            '|' => {
                self.pos += 1;
                Tok::Pipe
            }
            '!' => {
                self.pos += 1;
                Tok::Bang
            }
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ';' => {
                self.pos += 1;
                Tok::Semi
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            '=' => {
                if self.src.get(self.pos + 1) == Some(&b'>') {
                    self.pos += 2;
                    Tok::Arrow
                } else {
                    return Err(ScenarioError::syntax(
                        self.line,
                        self.col(),
                        "expected '=>'",
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos] as char).is_ascii_digit() {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Tok::Number(s.parse().unwrap())
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos] as char;
                    if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Tok::Ident(s.to_string())
            }
            other => {
                return Err(ScenarioError::syntax(
                    self.line,
                    self.col(),
                    format!("unexpected character '{other}'"),
                ))
            }
        };
        Ok(tok)
    }
}

struct PredParser<'a> {
    lexer: Lexer<'a>,
    current: Tok,
}

impl<'a> PredParser<'a> {
    fn new(src: &'a str, line: usize, col_base: usize) -> Result<Self, ScenarioError> {
        let mut lexer = Lexer {
            src: src.as_bytes(),
            pos: 0,
            line,
            col_base,
        };
        let current = lexer.next_tok()?;
        Ok(PredParser { lexer, current })
    }

    fn bump(&mut self) -> Result<Tok, ScenarioError> {
        let next = self.lexer.next_tok()?;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn err(&self, msg: impl Into<String>) -> ScenarioError {
        ScenarioError::syntax(self.lexer.line, self.lexer.col(), msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ScenarioError> {
        if self.current == tok {
            self.bump()?;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, got {:?}", self.current)))
        }
    }

    /// expr := or ('=>' expr)?   (implication is right-associative)
    fn expr(&mut self) -> Result<PredicateExpr, ScenarioError> {
        let lhs = self.or_expr()?;
        if self.current == Tok::Arrow {
            self.bump()?;
            let rhs = self.expr()?;
            Ok(PredicateExpr::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<PredicateExpr, ScenarioError> {
        let mut terms = vec![self.and_expr()?];
        while self.current == Tok::Pipe {
            self.bump()?;
            terms.push(self.and_expr()?);
        }
        Ok(PredicateExpr::or(terms))
    }

    fn and_expr(&mut self) -> Result<PredicateExpr, ScenarioError> {
        let mut terms = vec![self.unary()?];
        while self.current == Tok::Amp {
            self.bump()?;
            terms.push(self.unary()?);
        }
        Ok(PredicateExpr::and(terms))
    }

    fn unary(&mut self) -> Result<PredicateExpr, ScenarioError> {
        if self.current == Tok::Bang {
            self.bump()?;
            Ok(PredicateExpr::not(self.unary()?))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<PredicateExpr, ScenarioError> {
        match self.bump()? {
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "true" => Ok(PredicateExpr::Const(true)),
                "false" => Ok(PredicateExpr::Const(false)),
                "arc" => {
                    self.expect(Tok::LParen, "'('")?;
                    let id = self.ident("arc id")?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(PredicateExpr::Var(ArcId::new(id)))
                }
                "atmost" | "atleast" => {
                    self.expect(Tok::LParen, "'('")?;
                    let k = match self.bump()? {
                        Tok::Number(n) => n,
                        other => return Err(self.err(format!("expected count, got {other:?}"))),
                    };
                    self.expect(Tok::Semi, "';'")?;
                    let mut arcs = vec![ArcId::new(self.ident("arc id")?)];
                    while self.current == Tok::Comma {
                        self.bump()?;
                        arcs.push(ArcId::new(self.ident("arc id")?));
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(if name == "atmost" {
                        PredicateExpr::AtMostK { arcs, k }
                    } else {
                        PredicateExpr::AtLeastK { arcs, k }
                    })
                }
                other => Err(self.err(format!(
                    "unknown predicate atom '{other}' (did you mean arc({other})?)"
                ))),
            },
            other => Err(self.err(format!("unexpected token {other:?}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ScenarioError> {
        match self.bump()? {
            Tok::Ident(s) => Ok(s),
            Tok::Number(n) => Ok(n.to_string()),
            other => Err(self.err(format!("expected {what}, got {other:?}"))),
        }
    }
}

pub fn parse_predicate(
    src: &str,
    line: usize,
    col_base: usize,
) -> Result<PredicateExpr, ScenarioError> {
    let mut p = PredParser::new(src, line, col_base)?;
    let e = p.expr()?;
    if p.current != Tok::Eof {
        return Err(p.err(format!("trailing input {:?}", p.current)));
    }
    Ok(e)
}
