//! State predicates and log-query combinators used as search goals, plus the
//! textual goal syntax used by the command line.
//!
//! All atoms are pure and total over canonical systems, and evaluate through
//! dialect wrappers, so the same goal works for plain and dialected searches.

use crate::model::*;
use std::fmt;
use thiserror::Error;

/// Log-item pattern for `subLIL`/`findRcvLI`: empty fields match anything.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogPat {
    pub epid: String,
    pub path: String,
    pub value: String,
}

impl LogPat {
    pub fn new(
        epid: impl Into<String>,
        path: impl Into<String>,
        value: impl Into<String>,
    ) -> LogPat {
        LogPat {
            epid: epid.into(),
            path: path.into(),
            value: value.into(),
        }
    }

    fn matches(&self, item: &LogItem) -> bool {
        fn field(pat: &str, val: &str) -> bool {
            pat.is_empty() || pat == val
        }
        field(&self.epid, &item.epid)
            && field(&self.path, &item.path)
            && field(&self.value, &item.value)
    }
}

impl fmt::Display for LogPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rcvP {} {} {}",
            q(&self.epid),
            q(&self.path),
            q(&self.value)
        )
    }
}

/// Boolean state predicate over systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyExpr {
    True,
    And(Vec<PropertyExpr>),
    Or(Vec<PropertyExpr>),
    Not(Box<PropertyExpr>),
    /// Resource binding `rb(path, val)` present at an endpoint.
    CheckRsrc {
        epid: String,
        path: String,
        val: String,
    },
    /// Knowledge-base binding present at an endpoint's application layer.
    HasAv {
        epid: String,
        path: String,
        val: String,
    },
    /// Server `sv` sent a response to `cl` for a token matching `aid`.
    HasRspTSnt {
        sv: String,
        cl: String,
        aid: String,
    },
    /// Some `aid0`-matching response was sent before some `aid1`-matching one.
    RspTSntBefore {
        sv: String,
        cl: String,
        aid0: String,
        aid1: String,
    },
    /// Client `cl` received a response from `sv` matching `aid`.
    HasRspTRcd {
        cl: String,
        sv: String,
        aid: String,
    },
    /// Received GET response with body `val`; empty `val` skips the body check.
    HasGetRsp {
        cl: String,
        sv: String,
        aid: String,
        val: String,
    },
    /// Client `cl` awaits a response from `sv` for a token matching `aid`.
    RspPend {
        cl: String,
        sv: String,
        aid: String,
    },
    /// The log contains a subsequence matching the pattern list, in order.
    SubLil {
        pats: Vec<LogPat>,
    },
    /// Resource holds `val` and no matching command is in flight.
    IsV {
        ctl: String,
        epid: String,
        aid: String,
        path: String,
        val: String,
    },
    /// Resource holds `val` while the matching command is still in flight.
    BecomeV {
        ctl: String,
        epid: String,
        aid: String,
        path: String,
        val: String,
    },
    /// No attacker knowledge-base message carries a token matching `tok`.
    AKbNotTok {
        eveid: String,
        tok: String,
    },
    /// More than `k` non-attacker endpoints hold the binding `rb(path, val)`.
    EpsWithRbCountGt {
        path: String,
        val: String,
        k: u64,
    },
    /// Bridge invariant violations.
    BclIdleInv {
        bcid: String,
        brid: String,
        gid: String,
    },
    GateNClInv {
        bcid: String,
        brid: String,
        gid: String,
    },
    BrNClInv {
        bcid: String,
        brid: String,
        gid: String,
    },
    BoatPassInv {
        bcid: String,
        bsid: String,
        brid: String,
        gid: String,
    },
    /// Pick-n-place invariant violations; `pos` names the relevant arm value.
    PnpIdleInv {
        pid: String,
        gid: String,
        aid: String,
        pos: String,
    },
    ArmGoingIInv {
        pid: String,
        gid: String,
        aid: String,
        pos: String,
    },
    ArmGoingNIInv {
        pid: String,
        gid: String,
        aid: String,
        pos: String,
    },
    GripClosingInv {
        pid: String,
        gid: String,
        aid: String,
        pos: String,
    },
    GripOpeningInv {
        pid: String,
        gid: String,
        aid: String,
        pos: String,
    },
}

pub fn check_rsrc(sys: &System, epid: &str, path: &str, val: &str) -> bool {
    sys.endpoint(epid)
        .is_some_and(|e| e.rsrcs.get(path).map(String::as_str) == Some(val))
}

pub fn has_av(sys: &System, epid: &str, path: &str, val: &str) -> bool {
    sys.endpoint(epid)
        .and_then(|e| e.app.as_ref())
        .is_some_and(|a| a.akb.get(path).map(String::as_str) == Some(val))
}

pub fn has_rsp_t_snt(sys: &System, sv: &str, cl: &str, aid: &str) -> bool {
    sys.endpoint(sv).is_some_and(|e| {
        e.history
            .iter()
            .any(|n| n.to == cl && token_matches(&n.token, aid))
    })
}

/// First-transmission order over the sender's history ledger: true when some
/// `aid0`-matching send strictly precedes some `aid1`-matching send.
pub fn rsp_t_snt_before(sys: &System, sv: &str, cl: &str, aid0: &str, aid1: &str) -> bool {
    let Some(e) = sys.endpoint(sv) else {
        return false;
    };
    let matches = |n: &SentNote, aid: &str| n.to == cl && token_matches(&n.token, aid);
    e.history.iter().enumerate().any(|(i, n0)| {
        matches(n0, aid0) && e.history.iter().skip(i + 1).any(|n1| matches(n1, aid1))
    })
}

pub fn has_rsp_t_rcd(sys: &System, cl: &str, sv: &str, aid: &str) -> bool {
    sys.endpoint(cl).is_some_and(|e| {
        e.rsp_rcd
            .iter()
            .any(|m| m.src == sv && token_matches(m.token().unwrap_or(""), aid))
    })
}

pub fn has_get_rsp(sys: &System, cl: &str, sv: &str, aid: &str, val: &str) -> bool {
    sys.endpoint(cl).is_some_and(|e| {
        e.rsp_rcd.iter().any(|m| {
            m.src == sv
                && token_matches(m.token().unwrap_or(""), aid)
                && (val.is_empty() || m.body().and_then(Body::as_text) == Some(val))
        })
    })
}

pub fn rsp_pend(sys: &System, cl: &str, sv: &str, aid: &str) -> bool {
    sys.endpoint(cl).is_some_and(|e| {
        let pend = |m: &Message| m.tgt == sv && token_matches(m.token().unwrap_or(""), aid);
        e.w4_ack.iter().any(|d| pend(&d.msg)) || e.w4_rsp.iter().any(pend)
    })
}

pub fn is_v(sys: &System, ctl: &str, epid: &str, aid: &str, path: &str, val: &str) -> bool {
    check_rsrc(sys, epid, path, val) && !rsp_pend(sys, ctl, epid, aid)
}

pub fn become_v(sys: &System, ctl: &str, epid: &str, aid: &str, path: &str, val: &str) -> bool {
    check_rsrc(sys, epid, path, val) && rsp_pend(sys, ctl, epid, aid)
}

pub fn a_kb_not_tok(sys: &System, eveid: &str, tok: &str) -> bool {
    match sys.agent(eveid).and_then(Agent::as_attacker) {
        Some(att) => !att
            .kb
            .iter()
            .any(|d| token_matches(d.msg.token().unwrap_or(""), tok)),
        None => true,
    }
}

/// Number of non-attacker endpoints whose resource map contains the binding.
pub fn eps_with_rb_count(sys: &System, path: &str, val: &str) -> u64 {
    sys.agents
        .iter()
        .filter_map(Agent::endpoint_attrs)
        .filter(|e| e.rsrcs.get(path).map(String::as_str) == Some(val))
        .count() as u64
}

/// First log item at or after `start_ix` matching the pattern, with its index.
pub fn find_rcv_li<'a>(
    log: &'a [LogItem],
    start_ix: usize,
    pat: &LogPat,
) -> Option<(&'a LogItem, usize)> {
    log.iter()
        .enumerate()
        .skip(start_ix)
        .find(|(_, item)| pat.matches(item))
        .map(|(ix, item)| (item, ix))
}

/// True when the log contains a (not necessarily contiguous) subsequence
/// matching the pattern list at strictly increasing indices.
pub fn sub_lil(sys: &System, pats: &[LogPat]) -> bool {
    let Some(log) = sys.log.as_deref() else {
        return pats.is_empty();
    };
    let mut next = 0usize;
    for pat in pats {
        match find_rcv_li(log, next, pat) {
            Some((_, ix)) => next = ix + 1,
            None => return false,
        }
    }
    true
}

impl PropertyExpr {
    pub fn eval(&self, sys: &System) -> bool {
        use PropertyExpr::*;
        match self {
            True => true,
            And(ps) => ps.iter().all(|p| p.eval(sys)),
            Or(ps) => ps.iter().any(|p| p.eval(sys)),
            Not(p) => !p.eval(sys),
            CheckRsrc { epid, path, val } => check_rsrc(sys, epid, path, val),
            HasAv { epid, path, val } => has_av(sys, epid, path, val),
            HasRspTSnt { sv, cl, aid } => has_rsp_t_snt(sys, sv, cl, aid),
            RspTSntBefore { sv, cl, aid0, aid1 } => rsp_t_snt_before(sys, sv, cl, aid0, aid1),
            HasRspTRcd { cl, sv, aid } => has_rsp_t_rcd(sys, cl, sv, aid),
            HasGetRsp { cl, sv, aid, val } => has_get_rsp(sys, cl, sv, aid, val),
            RspPend { cl, sv, aid } => rsp_pend(sys, cl, sv, aid),
            SubLil { pats } => sub_lil(sys, pats),
            IsV {
                ctl,
                epid,
                aid,
                path,
                val,
            } => is_v(sys, ctl, epid, aid, path, val),
            BecomeV {
                ctl,
                epid,
                aid,
                path,
                val,
            } => become_v(sys, ctl, epid, aid, path, val),
            AKbNotTok { eveid, tok } => a_kb_not_tok(sys, eveid, tok),
            EpsWithRbCountGt { path, val, k } => eps_with_rb_count(sys, path, val) > *k,
            BclIdleInv { bcid, brid, gid } => {
                has_av(sys, bcid, "status", "idle")
                    && !(is_v(sys, bcid, brid, "BridgeCl", "bridge", "close")
                        && is_v(sys, bcid, gid, "GateOp", "gate", "open"))
            }
            // "Gate not closed implies bridge closed" and its contrapositive
            // share one violation formula.
            GateNClInv { bcid, brid, gid } | BrNClInv { bcid, brid, gid } => {
                !is_v(sys, bcid, gid, "GateCL", "gate", "close")
                    && !is_v(sys, bcid, brid, "BridgeCl", "bridge", "close")
            }
            BoatPassInv {
                bcid,
                bsid,
                brid,
                gid,
            } => {
                become_v(sys, bcid, bsid, "BSPass", "boat", "pass")
                    && !(is_v(sys, bcid, brid, "BridgeOp", "bridge", "open")
                        && is_v(sys, bcid, gid, "GateCL", "gate", "close"))
            }
            PnpIdleInv { pid, gid, aid, pos } => {
                has_av(sys, pid, "status", "idle")
                    && !(is_v(sys, pid, aid, "ArmGoI", "arm", pos)
                        && is_v(sys, pid, gid, "GripOp", "grip", "open"))
            }
            ArmGoingIInv { pid, gid, aid, pos } => {
                become_v(sys, pid, aid, "ArmGoI", "arm", pos)
                    && !is_v(sys, pid, gid, "GripCl", "grip", "close")
            }
            ArmGoingNIInv { pid, gid, aid, pos } => {
                become_v(sys, pid, aid, "ArmGoNI", "arm", pos)
                    && !is_v(sys, pid, gid, "GripOp", "grip", "open")
            }
            GripClosingInv { pid, gid, aid, pos } => {
                become_v(sys, pid, gid, "GripCl", "grip", "close")
                    && !is_v(sys, pid, aid, "ArmGoNI", "arm", pos)
            }
            GripOpeningInv { pid, gid, aid, pos } => {
                become_v(sys, pid, gid, "GripOp", "grip", "open")
                    && !is_v(sys, pid, aid, "ArmGoI", "arm", pos)
            }
        }
    }
}

fn q(s: &str) -> String {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace()) {
        format!("{s:?}")
    } else {
        s.to_string()
    }
}

impl fmt::Display for PropertyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PropertyExpr::*;
        match self {
            True => write!(f, "true"),
            And(ps) => {
                write!(f, "and")?;
                for p in ps {
                    write!(f, " ({p})")?;
                }
                Ok(())
            }
            Or(ps) => {
                write!(f, "or")?;
                for p in ps {
                    write!(f, " ({p})")?;
                }
                Ok(())
            }
            Not(p) => write!(f, "not ({p})"),
            CheckRsrc { epid, path, val } => {
                write!(f, "checkRsrc {} {} {}", q(epid), q(path), q(val))
            }
            HasAv { epid, path, val } => write!(f, "hasAV {} {} {}", q(epid), q(path), q(val)),
            HasRspTSnt { sv, cl, aid } => write!(f, "hasRspTSnt {} {} {}", q(sv), q(cl), q(aid)),
            RspTSntBefore { sv, cl, aid0, aid1 } => {
                write!(
                    f,
                    "rspTSntBefore {} {} {} {}",
                    q(sv),
                    q(cl),
                    q(aid0),
                    q(aid1)
                )
            }
            HasRspTRcd { cl, sv, aid } => write!(f, "hasRspTRcd {} {} {}", q(cl), q(sv), q(aid)),
            HasGetRsp { cl, sv, aid, val } => {
                write!(f, "hasGetRsp {} {} {} {}", q(cl), q(sv), q(aid), q(val))
            }
            RspPend { cl, sv, aid } => write!(f, "rspPend {} {} {}", q(cl), q(sv), q(aid)),
            SubLil { pats } => {
                write!(f, "subLIL [")?;
                for (i, p) in pats.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
            IsV {
                ctl,
                epid,
                aid,
                path,
                val,
            } => {
                write!(
                    f,
                    "isV {} {} {} {} {}",
                    q(ctl),
                    q(epid),
                    q(aid),
                    q(path),
                    q(val)
                )
            }
            BecomeV {
                ctl,
                epid,
                aid,
                path,
                val,
            } => {
                write!(
                    f,
                    "becomeV {} {} {} {} {}",
                    q(ctl),
                    q(epid),
                    q(aid),
                    q(path),
                    q(val)
                )
            }
            AKbNotTok { eveid, tok } => write!(f, "aKbNotTok {} {}", q(eveid), q(tok)),
            EpsWithRbCountGt { path, val, k } => {
                write!(f, "epswrbCountGT {} {} {}", q(path), q(val), k)
            }
            BclIdleInv { bcid, brid, gid } => {
                write!(f, "bclIdleInv {} {} {}", q(bcid), q(brid), q(gid))
            }
            GateNClInv { bcid, brid, gid } => {
                write!(f, "gateNClInv {} {} {}", q(bcid), q(brid), q(gid))
            }
            BrNClInv { bcid, brid, gid } => {
                write!(f, "brNClInv {} {} {}", q(bcid), q(brid), q(gid))
            }
            BoatPassInv {
                bcid,
                bsid,
                brid,
                gid,
            } => {
                write!(
                    f,
                    "boatPassInv {} {} {} {}",
                    q(bcid),
                    q(bsid),
                    q(brid),
                    q(gid)
                )
            }
            PnpIdleInv { pid, gid, aid, pos } => {
                write!(f, "pnpIdleInv {} {} {} {}", q(pid), q(gid), q(aid), q(pos))
            }
            ArmGoingIInv { pid, gid, aid, pos } => {
                write!(
                    f,
                    "armGoingIInv {} {} {} {}",
                    q(pid),
                    q(gid),
                    q(aid),
                    q(pos)
                )
            }
            ArmGoingNIInv { pid, gid, aid, pos } => {
                write!(
                    f,
                    "armGoingNIInv {} {} {} {}",
                    q(pid),
                    q(gid),
                    q(aid),
                    q(pos)
                )
            }
            GripClosingInv { pid, gid, aid, pos } => {
                write!(
                    f,
                    "gripClosingInv {} {} {} {}",
                    q(pid),
                    q(gid),
                    q(aid),
                    q(pos)
                )
            }
            GripOpeningInv { pid, gid, aid, pos } => {
                write!(
                    f,
                    "gripOpeningInv {} {} {} {}",
                    q(pid),
                    q(gid),
                    q(aid),
                    q(pos)
                )
            }
        }
    }
}

/// Goal-expression parse error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("goal parse error: {0}")]
pub struct GoalParseError(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Word(String),
}

fn tokenize(input: &str) -> Result<Vec<Tok>, GoalParseError> {
    let mut toks = vec![];
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                toks.push(Tok::LParen);
            }
            ')' => {
                chars.next();
                toks.push(Tok::RParen);
            }
            '[' => {
                chars.next();
                toks.push(Tok::LBracket);
            }
            ']' => {
                chars.next();
                toks.push(Tok::RBracket);
            }
            ';' => {
                chars.next();
                toks.push(Tok::Semi);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(GoalParseError("unterminated string".into())),
                    }
                }
                toks.push(Tok::Word(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || "()[];\"".contains(ch) {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                toks.push(Tok::Word(s));
            }
        }
    }
    Ok(toks)
}

struct GoalParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl GoalParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<(), GoalParseError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(GoalParseError(format!("expected {tok:?}, found {other:?}"))),
        }
    }

    fn word(&mut self) -> Result<String, GoalParseError> {
        match self.next() {
            Some(Tok::Word(w)) => Ok(w),
            other => Err(GoalParseError(format!(
                "expected argument, found {other:?}"
            ))),
        }
    }

    fn nat(&mut self) -> Result<u64, GoalParseError> {
        let w = self.word()?;
        w.parse()
            .map_err(|_| GoalParseError(format!("expected a natural number, found {w:?}")))
    }

    /// One operand: a parenthesized expression or a bare atom.
    fn operand(&mut self) -> Result<PropertyExpr, GoalParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.next();
            let e = self.expr()?;
            self.expect(Tok::RParen)?;
            Ok(e)
        } else {
            self.expr()
        }
    }

    fn log_pats(&mut self) -> Result<Vec<LogPat>, GoalParseError> {
        self.expect(Tok::LBracket)?;
        let mut pats = vec![];
        loop {
            match self.peek() {
                Some(Tok::RBracket) => {
                    self.next();
                    break;
                }
                Some(Tok::Semi) => {
                    self.next();
                }
                _ => {
                    let head = self.word()?;
                    if head != "rcvP" {
                        return Err(GoalParseError(format!(
                            "log patterns are rcvP triples, found {head:?}"
                        )));
                    }
                    let epid = self.word()?;
                    let path = self.word()?;
                    let value = self.word()?;
                    pats.push(LogPat::new(epid, path, value));
                }
            }
        }
        Ok(pats)
    }

    fn expr(&mut self) -> Result<PropertyExpr, GoalParseError> {
        let head = match self.next() {
            Some(Tok::Word(w)) => w,
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            other => return Err(GoalParseError(format!("expected goal, found {other:?}"))),
        };
        use PropertyExpr::*;
        let expr = match head.as_str() {
            "true" => True,
            "and" => {
                let mut parts = vec![self.operand()?, self.operand()?];
                while matches!(self.peek(), Some(Tok::LParen)) {
                    parts.push(self.operand()?);
                }
                And(parts)
            }
            "or" => {
                let mut parts = vec![self.operand()?, self.operand()?];
                while matches!(self.peek(), Some(Tok::LParen)) {
                    parts.push(self.operand()?);
                }
                Or(parts)
            }
            "not" => Not(Box::new(self.operand()?)),
            "checkRsrc" | "hasV" => CheckRsrc {
                epid: self.word()?,
                path: self.word()?,
                val: self.word()?,
            },
            "hasAV" => HasAv {
                epid: self.word()?,
                path: self.word()?,
                val: self.word()?,
            },
            "hasRspTSnt" => HasRspTSnt {
                sv: self.word()?,
                cl: self.word()?,
                aid: self.word()?,
            },
            "rspTSntBefore" => RspTSntBefore {
                sv: self.word()?,
                cl: self.word()?,
                aid0: self.word()?,
                aid1: self.word()?,
            },
            "hasRspTRcd" => HasRspTRcd {
                cl: self.word()?,
                sv: self.word()?,
                aid: self.word()?,
            },
            "hasGetRsp" => HasGetRsp {
                cl: self.word()?,
                sv: self.word()?,
                aid: self.word()?,
                val: self.word()?,
            },
            "rspPend" => RspPend {
                cl: self.word()?,
                sv: self.word()?,
                aid: self.word()?,
            },
            "subLIL" => SubLil {
                pats: self.log_pats()?,
            },
            "isV" => IsV {
                ctl: self.word()?,
                epid: self.word()?,
                aid: self.word()?,
                path: self.word()?,
                val: self.word()?,
            },
            "becomeV" => BecomeV {
                ctl: self.word()?,
                epid: self.word()?,
                aid: self.word()?,
                path: self.word()?,
                val: self.word()?,
            },
            "aKbNotTok" => AKbNotTok {
                eveid: self.word()?,
                tok: self.word()?,
            },
            "epswrbCountGT" => EpsWithRbCountGt {
                path: self.word()?,
                val: self.word()?,
                k: self.nat()?,
            },
            "bclIdleInv" => BclIdleInv {
                bcid: self.word()?,
                brid: self.word()?,
                gid: self.word()?,
            },
            "gateNClInv" => GateNClInv {
                bcid: self.word()?,
                brid: self.word()?,
                gid: self.word()?,
            },
            "brNClInv" => BrNClInv {
                bcid: self.word()?,
                brid: self.word()?,
                gid: self.word()?,
            },
            "boatPassInv" => BoatPassInv {
                bcid: self.word()?,
                bsid: self.word()?,
                brid: self.word()?,
                gid: self.word()?,
            },
            "pnpIdleInv" => PnpIdleInv {
                pid: self.word()?,
                gid: self.word()?,
                aid: self.word()?,
                pos: self.word()?,
            },
            "armGoingIInv" => ArmGoingIInv {
                pid: self.word()?,
                gid: self.word()?,
                aid: self.word()?,
                pos: self.word()?,
            },
            "armGoingNIInv" => ArmGoingNIInv {
                pid: self.word()?,
                gid: self.word()?,
                aid: self.word()?,
                pos: self.word()?,
            },
            "gripClosingInv" => GripClosingInv {
                pid: self.word()?,
                gid: self.word()?,
                aid: self.word()?,
                pos: self.word()?,
            },
            "gripOpeningInv" => GripOpeningInv {
                pid: self.word()?,
                gid: self.word()?,
                aid: self.word()?,
                pos: self.word()?,
            },
            other => return Err(GoalParseError(format!("unknown predicate {other:?}"))),
        };
        Ok(expr)
    }
}

/// Parse the textual goal syntax: prefix combinators (`and`, `or`, `not`)
/// over named atoms with whitespace-separated arguments; `subLIL` takes a
/// bracketed `;`-separated list of `rcvP` triples; `""` is the empty pattern.
pub fn parse_goal(input: &str) -> Result<PropertyExpr, GoalParseError> {
    let mut p = GoalParser {
        toks: tokenize(input)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(GoalParseError(format!(
            "trailing input after goal: {:?}",
            &p.toks[p.pos..]
        )));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_sys(items: &[(&str, &str, &str)]) -> System {
        System {
            agents: vec![],
            net: Network::default(),
            log: Some(
                items
                    .iter()
                    .map(|(e, p, v)| LogItem::rcv_put(*e, *p, *v))
                    .collect(),
            ),
        }
    }

    #[test]
    fn sub_lil_finds_ordered_subsequence() {
        let sys = log_sys(&[
            ("dev1", "door", "unlock"),
            ("dev1", "sig", "go"),
            ("dev1", "door", "lock"),
            ("dev1", "door", "unlock"),
        ]);
        let pats = vec![
            LogPat::new("dev1", "door", "lock"),
            LogPat::new("dev1", "door", "unlock"),
        ];
        assert!(sub_lil(&sys, &pats));
        assert!(sub_lil(&sys, &[]));
        let too_long = vec![
            LogPat::new("dev1", "door", "lock"),
            LogPat::new("dev1", "door", "lock"),
        ];
        assert!(!sub_lil(&sys, &too_long));
    }

    #[test]
    fn sub_lil_is_monotone_under_subsequences() {
        let sys = log_sys(&[
            ("dev1", "sig", "on"),
            ("dev2", "sig", "on"),
            ("dev1", "sig", "off"),
        ]);
        let full = vec![
            LogPat::new("dev1", "sig", "on"),
            LogPat::new("dev2", "sig", "on"),
            LogPat::new("dev1", "sig", "off"),
        ];
        assert!(sub_lil(&sys, &full));
        for drop_ix in 0..full.len() {
            let mut sub = full.clone();
            sub.remove(drop_ix);
            assert!(sub_lil(&sys, &sub));
        }
    }

    #[test]
    fn empty_pattern_fields_match_anything() {
        let sys = log_sys(&[("dev1", "signal", "on")]);
        assert!(sub_lil(&sys, &[LogPat::new("dev1", "signal", "")]));
        assert!(sub_lil(&sys, &[LogPat::new("", "", "")]));
    }

    fn server_with_history(notes: &[(&str, &str)]) -> System {
        let e = EndpointAttrs {
            history: notes
                .iter()
                .map(|(to, tok)| SentNote {
                    to: to.to_string(),
                    token: tok.to_string(),
                })
                .collect(),
            ..EndpointAttrs::default()
        };
        System {
            agents: vec![Agent::endpoint("dev1", e)],
            net: Network::default(),
            log: Some(vec![]),
        }
    }

    #[test]
    fn sent_before_uses_existential_pairs() {
        let sys = server_with_history(&[
            ("dev0", "dev0-putC-t1"),
            ("dev0", "dev0-putN-t3"),
            ("dev0", "dev0-putC-t1"),
        ]);
        assert!(rsp_t_snt_before(&sys, "dev1", "dev0", "putC", "putN"));
        assert!(rsp_t_snt_before(&sys, "dev1", "dev0", "putN", "putC"));
        // A single matching response never precedes itself.
        let single = server_with_history(&[("dev0", "dev0-putC-t1")]);
        assert!(!rsp_t_snt_before(&single, "dev1", "dev0", "putC", "putC"));
        // The empty pattern matches any token.
        assert!(has_rsp_t_snt(&sys, "dev1", "dev0", ""));
    }

    #[test]
    fn is_v_and_become_v_are_mutually_exclusive() {
        let mut ctl = EndpointAttrs::default();
        ctl.w4_rsp.push(Message::plain(
            "dev1",
            "dev0",
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: "0.03".into(),
                    mid: "dev0-cmd-m0".into(),
                },
                token: "dev0-cmd-t1".into(),
                options: vec![Opt::uri_path("door")],
                body: Body::text("lock"),
            },
        ));
        let mut sv = EndpointAttrs::default();
        sv.rsrcs.insert("door".into(), "lock".into());
        let sys = System {
            agents: vec![Agent::endpoint("dev0", ctl), Agent::endpoint("dev1", sv)],
            net: Network::default(),
            log: Some(vec![]),
        };
        assert!(become_v(&sys, "dev0", "dev1", "cmd", "door", "lock"));
        assert!(!is_v(&sys, "dev0", "dev1", "cmd", "door", "lock"));
        let mut done = sys.clone();
        if let AgentKind::Endpoint(e) = &mut done.agent_mut("dev0").unwrap().kind {
            e.w4_rsp.clear();
        }
        assert!(is_v(&done, "dev0", "dev1", "cmd", "door", "lock"));
        assert!(!become_v(&done, "dev0", "dev1", "cmd", "door", "lock"));
    }

    #[test]
    fn unknown_endpoint_is_false() {
        let sys = log_sys(&[]);
        assert!(!check_rsrc(&sys, "nobody", "door", "lock"));
        assert!(!rsp_pend(&sys, "nobody", "dev1", "x"));
    }

    #[test]
    fn goal_parser_round_trips() {
        let cases = [
            "checkRsrc dev1 door unlock",
            "and (checkRsrc dev1 door unlock) (hasGetRsp dev0 dev1 getN lock)",
            "subLIL [rcvP dev1 door lock ; rcvP dev1 door unlock]",
            "not (hasRspTSnt dev1 dev0 putN)",
            "and (hasRspTSnt dev1 dev0 putN) (checkRsrc dev1 door lock) (rspPend dev0 dev1 putN)",
            "epswrbCountGT sig on 1",
            "bclIdleInv bctl br ga",
            "pnpIdleInv pctl gr arm goL",
            "or (isV dev0 dev1 cmd door lock) (becomeV dev0 dev1 cmd door lock)",
        ];
        for text in cases {
            let parsed = parse_goal(text).unwrap_or_else(|e| panic!("{text}: {e}"));
            let printed = parsed.to_string();
            let reparsed = parse_goal(&printed).unwrap();
            assert_eq!(parsed, reparsed, "round trip for {text}");
        }
    }

    #[test]
    fn goal_parser_handles_empty_string_arguments() {
        let g = parse_goal("hasGetRsp dev0 dev1 getN \"\"").unwrap();
        assert_eq!(
            g,
            PropertyExpr::HasGetRsp {
                cl: "dev0".into(),
                sv: "dev1".into(),
                aid: "getN".into(),
                val: "".into()
            }
        );
        let lp = parse_goal("subLIL [rcvP dev1 signal \"\"]").unwrap();
        assert_eq!(
            lp,
            PropertyExpr::SubLil {
                pats: vec![LogPat::new("dev1", "signal", "")]
            }
        );
    }

    #[test]
    fn goal_parser_rejects_junk() {
        assert!(parse_goal("frobnicate x y").is_err());
        assert!(parse_goal("checkRsrc dev1 door").is_err());
        assert!(parse_goal("checkRsrc dev1 door unlock extra").is_err());
        assert!(parse_goal("subLIL [bogus a b c]").is_err());
    }
}
