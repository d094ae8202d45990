//! The CoAP transition rules: `devsend`, `rcv`, `ackTimeout`, `net` and
//! `tick`, together with the receive-processing functions and the timing
//! machinery (`mte` / `passTime`).
//!
//! Rule functions are pure: they take a [`System`] and return the transitions
//! enabled for one rule instance. Successors come back canonicalized.

use crate::applayer;
use crate::model::*;
use std::fmt;

/// Minimal time elapse: least time until an instantaneous rule can fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeBound {
    Finite(u64),
    Infinite,
}

impl TimeBound {
    pub fn min_with(self, other: TimeBound) -> TimeBound {
        match (self, other) {
            (TimeBound::Infinite, o) => o,
            (s, TimeBound::Infinite) => s,
            (TimeBound::Finite(a), TimeBound::Finite(b)) => TimeBound::Finite(a.min(b)),
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            TimeBound::Finite(n) => Some(n),
            TimeBound::Infinite => None,
        }
    }
}

/// A labelled step of the transition system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub label: Label,
    pub next: System,
}

/// Identifies the rule instance that produced a transition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    DevSend { epid: String },
    Rcv { epid: String, msg: String },
    AckTimeout { epid: String, mid: String },
    NetMove { msg: String },
    Tick { amount: u64 },
    Attack { cap: String, msg: String },
    McX { msg: String, new_tgt: String },
    DDevSend { epid: String, ix: u64 },
    DDevRcv { epid: String, outcome: String },
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::DevSend { epid } => write!(f, "[devsend] {epid}"),
            Label::Rcv { epid, msg } => write!(f, "[rcv] {epid} {msg}"),
            Label::AckTimeout { epid, mid } => write!(f, "[ackTimeout] {epid} {mid}"),
            Label::NetMove { msg } => write!(f, "[net] {msg}"),
            Label::Tick { amount } => write!(f, "[tick] {amount}"),
            Label::Attack { cap, msg } => write!(f, "[attack] {cap} on {msg}"),
            Label::McX { msg, new_tgt } => write!(f, "[attack-mcX] {msg} -> {new_tgt}"),
            Label::DDevSend { epid, ix } => write!(f, "[ddevsend] {epid} ix={ix}"),
            Label::DDevRcv { epid, outcome } => write!(f, "[ddevrcv] {epid} {outcome}"),
        }
    }
}

/// Exponential backoff: the resend wait doubles for each retransmission.
pub fn back_off(base: u64, resend: u64) -> u64 {
    base << resend
}

fn no_w4_ack(e: &EndpointAttrs) -> bool {
    e.w4_ack.len() as u64 <= e.cfg("w4AckBd")
}

fn can_send(e: &EndpointAttrs) -> bool {
    e.snd_ctr == 0
}

/// Builds the wire message for the head of the send queue and updates the
/// sender state: fresh mid and token, method code, congestion bookkeeping.
fn snd_amsg(epid: &str, am: &AppMsg, e: &mut EndpointAttrs) -> DelayedMessage {
    let prefix = format!("{}-{}", epid, am.app_id);
    let mid = gen_mid(&prefix, e.ctr);
    let tok = gen_tok(&prefix, e.ctr + 1);
    let content = Content {
        head: Head {
            msg_type: am.msg_type,
            code: am.method.code().into(),
            mid,
        },
        token: tok,
        options: vec![Opt::uri_path(&am.path)],
        body: am.body.clone(),
    };
    let msg = Message::plain(am.tgt.clone(), epid, content.clone());
    let dmsg = DelayedMessage::at(msg.clone(), e.cfg("msgSD"));
    if am.msg_type == MsgType::Con {
        let mut tracked = msg.clone();
        if let Payload::Plain(c) = &mut tracked.payload {
            *c = c.with_rcnt(0);
        }
        e.w4_ack
            .push(DelayedMessage::at(tracked, e.cfg("ACK_TIMEOUT")));
    } else {
        e.w4_rsp.push(msg);
    }
    e.ctr += 2;
    e.snd_ctr = e.cfg("msgQD");
    dmsg
}

/// The `devsend` rule for one endpoint. Fires when the head of the send queue
/// is an application message, the w4Ack bound permits and the send counter has
/// drained. Wrapped endpoints send into their local network.
pub fn devsend(sys: &System, epid: &str) -> Vec<Transition> {
    let Some(agent) = sys.agent(epid) else {
        return vec![];
    };
    let (attrs, wrapped) = match &agent.kind {
        AgentKind::Endpoint(e) => (e, false),
        AgentKind::Dialect(w) => (&w.inner, true),
        AgentKind::Attacker(_) => return vec![],
    };
    let Some(AMsgItem::Msg(am)) = attrs.send_reqs.first() else {
        return vec![];
    };
    if !no_w4_ack(attrs) || !can_send(attrs) {
        return vec![];
    }
    let am = am.clone();
    let mut next = sys.clone();
    let agent = next.agent_mut(epid).expect("sender agent");
    let dmsg = match &mut agent.kind {
        AgentKind::Endpoint(e) => {
            e.send_reqs.remove(0);
            let dmsg = snd_amsg(epid, &am, e);
            next.net.input.push(dmsg.clone());
            dmsg
        }
        AgentKind::Dialect(w) => {
            w.inner.send_reqs.remove(0);
            let dmsg = snd_amsg(epid, &am, &mut w.inner);
            w.local_net.input.push(dmsg.clone());
            dmsg
        }
        AgentKind::Attacker(_) => unreachable!(),
    };
    let _ = (dmsg, wrapped);
    vec![Transition {
        label: Label::DevSend { epid: epid.into() },
        next: next.canonical(),
    }]
}

/// Result of processing one received message.
pub(crate) struct RcvResult {
    pub to_send: Vec<DelayedMessage>,
    pub to_log: Vec<LogItem>,
    /// Whether the message was accepted as new (a fresh request processed or
    /// a response newly recorded). Deduplicated repeats, ignored duplicates
    /// and wrong-server responses are not handed to the application layer.
    pub accepted: bool,
}

fn ack_reply(epid: &str, to: &str, mid: &str, delay: u64) -> DelayedMessage {
    let content = Content {
        head: Head {
            msg_type: MsgType::Ack,
            code: String::new(),
            mid: mid.into(),
        },
        token: String::new(),
        options: vec![],
        body: Body::Empty,
    };
    DelayedMessage::at(Message::plain(to, epid, content), delay)
}

fn find_rsp_rcd(e: &EndpointAttrs, dst: &str, tok: &str) -> bool {
    e.rsp_rcd
        .iter()
        .any(|m| m.src == dst && m.token() == Some(tok))
}

fn matching_rsp(e: &EndpointAttrs, req: &Message) -> Option<Message> {
    let (src, tok, mid) = (&req.src, req.token()?, req.mid()?);
    e.rsp_snt
        .iter()
        .find(|s| s.msg.tgt == *src && s.msg.token() == Some(tok) && s.req_mid == mid)
        .map(|s| s.msg.clone())
}

fn rcv_request(epid: &str, e: &mut EndpointAttrs, msg: &Message, method: Method) -> RcvResult {
    let msg_sd = e.cfg("msgSD");
    let con = msg.msg_type() == Some(MsgType::Con);
    if let Some(stored) = matching_rsp(e, msg) {
        // Already answered within the id/token lifetime: resend the stored
        // response for confirmable repeats, otherwise ignore.
        let to_send = if con {
            vec![DelayedMessage::at(stored, msg_sd)]
        } else {
            vec![]
        };
        return RcvResult {
            to_send,
            to_log: vec![],
            accepted: false,
        };
    }
    let content = msg.content().expect("request has plain content");
    let path = content.path().map(str::to_string);
    let mut to_log = vec![];
    let (code, body) = match (method, path) {
        (Method::Get, Some(p)) => match e.rsrcs.get(&p) {
            Some(v) => ("2.05", Body::text(v.clone())),
            None => ("4.04", Body::Empty),
        },
        (Method::Put, Some(p)) => {
            let val = content.body.as_text().unwrap_or("").to_string();
            let created = !e.rsrcs.contains_key(&p);
            e.rsrcs.insert(p.clone(), val.clone());
            to_log.push(LogItem::rcv_put(epid, p, val));
            (if created { "2.01" } else { "2.04" }, Body::Empty)
        }
        (Method::Delete, Some(p)) => {
            e.rsrcs.remove(&p);
            ("2.02", Body::Empty)
        }
        (Method::Post, Some(_)) => ("2.01", Body::Empty),
        (_, None) => ("4.04", Body::Empty),
    };
    let rtype = if con { MsgType::Ack } else { MsgType::Non };
    // Piggy-backed acknowledgements answer under the request's message id;
    // separate responses carry a fresh one.
    let rmid = if rtype == MsgType::Ack {
        content.head.mid.clone()
    } else {
        gen_mid(&format!("{epid}-rsp"), e.ctr)
    };
    let rsp = Message::plain(
        msg.src.clone(),
        epid,
        Content {
            head: Head {
                msg_type: rtype,
                code: code.into(),
                mid: rmid,
            },
            token: content.token.clone(),
            options: vec![],
            body,
        },
    );
    e.ctr += 1;
    e.rsp_snt.push(StoredResponse {
        msg: rsp.clone(),
        req_mid: content.head.mid.clone(),
        delay: e.cfg("ttl"),
    });
    e.history.push(SentNote {
        to: msg.src.clone(),
        token: content.token.clone(),
    });
    RcvResult {
        to_send: vec![DelayedMessage::at(rsp, msg_sd)],
        to_log,
        accepted: true,
    }
}

fn rcv_response(epid: &str, e: &mut EndpointAttrs, msg: &Message) -> RcvResult {
    let msg_sd = e.cfg("msgSD");
    let sv = msg.src.clone();
    let tok = msg.token().unwrap_or("").to_string();
    let mut to_send = vec![];
    let mut accepted = false;
    if msg.msg_type() == Some(MsgType::Ack) {
        // Piggy-backed acknowledgement and response.
        if let Some(pos) = e.w4_ack.iter().position(|d| d.msg.mid() == msg.mid()) {
            e.w4_ack.remove(pos);
        }
        if !find_rsp_rcd(e, &sv, &tok) {
            e.rsp_rcd.push(msg.clone());
            accepted = true;
        }
    } else if find_rsp_rcd(e, &sv, &tok) {
        // Repeated separate response: acknowledge confirmables, else ignore.
        if msg.msg_type() == Some(MsgType::Con) {
            to_send.push(ack_reply(epid, &sv, msg.mid().unwrap_or(""), msg_sd));
        }
    } else {
        // New separate response: accept only when a matching request to this
        // server is pending; a response from the wrong server is ignored.
        let pend = |m: &Message| m.token() == Some(tok.as_str()) && m.tgt == sv;
        let pending = e.w4_ack.iter().any(|d| pend(&d.msg)) || e.w4_rsp.iter().any(pend);
        if pending {
            e.w4_ack.retain(|d| !pend(&d.msg));
            e.w4_rsp.retain(|m| !pend(m));
            e.rsp_rcd.push(msg.clone());
            accepted = true;
            if msg.msg_type() == Some(MsgType::Con) {
                to_send.push(ack_reply(epid, &sv, msg.mid().unwrap_or(""), msg_sd));
            }
        }
    }
    RcvResult {
        to_send,
        to_log: vec![],
        accepted,
    }
}

fn rcv_empty(epid: &str, e: &mut EndpointAttrs, msg: &Message) -> RcvResult {
    let msg_sd = e.cfg("msgSD");
    let mut to_send = vec![];
    match msg.msg_type() {
        Some(MsgType::Ack) => {
            if let Some(pos) = e.w4_ack.iter().position(|d| d.msg.mid() == msg.mid()) {
                let entry = e.w4_ack.remove(pos);
                let mut req = entry.msg;
                if let Payload::Plain(c) = &mut req.payload {
                    *c = c.without_rcnt();
                }
                e.w4_rsp.push(req);
            }
        }
        Some(MsgType::Con) => {
            // Empty confirmable message: a ping, answered with an ACK.
            to_send.push(ack_reply(epid, &msg.src, msg.mid().unwrap_or(""), msg_sd));
        }
        _ => {}
    }
    RcvResult {
        to_send,
        to_log: vec![],
        accepted: false,
    }
}

/// Dispatch one delivered message against an endpoint's state.
pub(crate) fn rcv_msg(epid: &str, e: &mut EndpointAttrs, msg: &Message) -> RcvResult {
    let Some(content) = msg.content() else {
        // Dialected payload reaching a bare endpoint: not decodable, dropped.
        return RcvResult {
            to_send: vec![],
            to_log: vec![],
            accepted: false,
        };
    };
    match classify(content) {
        MsgClass::Request(m) => rcv_request(epid, e, msg, m),
        MsgClass::Response(_) => rcv_response(epid, e, msg),
        MsgClass::Empty => rcv_empty(epid, e, msg),
        MsgClass::Unknown => {
            let mut to_send = vec![];
            if content.head.msg_type == MsgType::Con {
                let rst = Content {
                    head: Head {
                        msg_type: MsgType::Rst,
                        code: String::new(),
                        mid: content.head.mid.clone(),
                    },
                    token: String::new(),
                    options: vec![],
                    body: Body::Empty,
                };
                to_send.push(DelayedMessage::at(
                    Message::plain(msg.src.clone(), epid, rst),
                    e.cfg("msgSD"),
                ));
            }
            RcvResult {
                to_send,
                to_log: vec![],
                accepted: false,
            }
        }
    }
}

/// The `rcv` rule: deliver the `out_idx`-th network output message to its
/// target endpoint. Returns `None` when the instance is not enabled (still
/// delayed, target is a wrapper or attacker, or no such agent).
pub fn rcv(sys: &System, out_idx: usize) -> Option<Transition> {
    let dmsg = sys.net.output.get(out_idx)?;
    if !dmsg.deliverable() {
        return None;
    }
    let tgt = dmsg.msg.tgt.clone();
    match &sys.agent(&tgt)?.kind {
        AgentKind::Endpoint(_) => {}
        // Wrapped endpoints receive through the ddevrcv rule.
        AgentKind::Dialect(_) | AgentKind::Attacker(_) => return None,
    }
    let msg = dmsg.msg.clone();
    let mut next = sys.clone();
    next.net.output.remove(out_idx);
    let agent = next.agent_mut(&tgt).expect("receiver agent");
    let AgentKind::Endpoint(e) = &mut agent.kind else {
        unreachable!()
    };
    let result = rcv_msg(&tgt, e, &msg);
    if result.accepted {
        let e_after = e.clone();
        if let AgentKind::Endpoint(e) = &mut next.agent_mut(&tgt).expect("receiver agent").kind {
            *e = applayer::do_app(&tgt, &msg, e_after);
        }
    }
    next.net.input.extend(result.to_send);
    next.append_log(result.to_log);
    Some(Transition {
        label: Label::Rcv {
            epid: tgt,
            msg: msg.to_string(),
        },
        next: next.canonical(),
    })
}

/// The `ackTimeout` rule: resend the `ack_idx`-th unacknowledged confirmable
/// message of `epid` once its wait has elapsed.
pub fn ack_timeout(sys: &System, epid: &str, ack_idx: usize) -> Option<Transition> {
    let agent = sys.agent(epid)?;
    let (attrs, wrapped) = match &agent.kind {
        AgentKind::Endpoint(e) => (e, false),
        AgentKind::Dialect(w) => (&w.inner, true),
        AgentKind::Attacker(_) => return None,
    };
    let entry = attrs.w4_ack.get(ack_idx)?;
    if entry.delay != 0 {
        return None;
    }
    let content = entry.msg.content()?;
    let n = content.rcnt()?;
    let resend = Message::plain(
        entry.msg.tgt.clone(),
        entry.msg.src.clone(),
        content.without_rcnt(),
    );
    let keep = if n < attrs.cfg("MAX_RETRANSMIT") {
        Some(DelayedMessage::at(
            Message::plain(
                entry.msg.tgt.clone(),
                entry.msg.src.clone(),
                content.with_rcnt(n + 1),
            ),
            back_off(attrs.cfg("ACK_TIMEOUT"), n + 1),
        ))
    } else {
        None // stop resending
    };
    let out = DelayedMessage::at(resend, attrs.cfg("msgSD"));
    let mid = content.head.mid.clone();

    let mut next = sys.clone();
    let agent = next.agent_mut(epid).expect("sender agent");
    match &mut agent.kind {
        AgentKind::Endpoint(e) => {
            e.w4_ack.remove(ack_idx);
            if let Some(k) = keep {
                e.w4_ack.push(k);
            }
            next.net.input.push(out);
        }
        AgentKind::Dialect(w) => {
            w.inner.w4_ack.remove(ack_idx);
            if let Some(k) = keep {
                w.inner.w4_ack.push(k);
            }
            w.local_net.input.push(out);
        }
        AgentKind::Attacker(_) => unreachable!(),
    }
    let _ = wrapped;
    Some(Transition {
        label: Label::AckTimeout {
            epid: epid.into(),
            mid,
        },
        next: next.canonical(),
    })
}

/// The `net` rule: move one message from the network input to the output.
pub fn net_move(sys: &System, in_idx: usize) -> Option<Transition> {
    let dmsg = sys.net.input.get(in_idx)?.clone();
    let mut next = sys.clone();
    next.net.input.remove(in_idx);
    next.net.output.push(dmsg.clone());
    Some(Transition {
        label: Label::NetMove {
            msg: dmsg.to_string(),
        },
        next: next.canonical(),
    })
}

fn mte_endpoint(e: &EndpointAttrs) -> TimeBound {
    let mut bound = TimeBound::Infinite;
    for d in &e.w4_ack {
        bound = bound.min_with(TimeBound::Finite(d.delay));
    }
    match e.send_reqs.first() {
        Some(AMsgItem::Pause(d)) => bound = bound.min_with(TimeBound::Finite(*d)),
        // Waiting only on the w4Ack bound means waiting for acks or
        // timeouts, which the w4Ack delays already account for.
        Some(AMsgItem::Msg(_)) if no_w4_ack(e) => {
            bound = bound.min_with(TimeBound::Finite(e.snd_ctr));
        }
        Some(AMsgItem::Msg(_)) => {}
        None => {}
    }
    bound
}

/// Minimal time elapse of a system. Anytime messages never constrain time;
/// a nonempty wrapper-local network pins it at zero. Infinite exactly when
/// the configuration is terminal up to pending attacker moves.
pub fn mte(sys: &System) -> TimeBound {
    let mut bound = TimeBound::Infinite;
    for d in sys.net.input.iter().chain(&sys.net.output) {
        if !d.anytime {
            bound = bound.min_with(TimeBound::Finite(d.delay));
        }
    }
    for agent in &sys.agents {
        match &agent.kind {
            AgentKind::Endpoint(e) => bound = bound.min_with(mte_endpoint(e)),
            AgentKind::Dialect(w) => {
                if !w.local_net.is_empty() {
                    return TimeBound::Finite(0);
                }
                bound = bound.min_with(mte_endpoint(&w.inner));
            }
            AgentKind::Attacker(_) => {}
        }
    }
    bound
}

fn pass_time_endpoint(e: &mut EndpointAttrs, nz: u64) {
    for d in &mut e.w4_ack {
        d.delay = d.delay.saturating_sub(nz);
    }
    e.snd_ctr = e.snd_ctr.saturating_sub(nz);
    if let Some(AMsgItem::Pause(d)) = e.send_reqs.first_mut() {
        *d = d.saturating_sub(nz);
        if *d == 0 {
            e.send_reqs.remove(0);
        }
    }
    // Lifetimes of sent-response records drain with time; expired records
    // are dropped (the history ledger keeps provenance for the properties).
    for s in &mut e.rsp_snt {
        s.delay = s.delay.saturating_sub(nz);
    }
    e.rsp_snt.retain(|s| s.delay > 0);
}

/// Advance every clock in the system by `nz` time units.
pub fn pass_time(sys: &mut System, nz: u64) {
    for d in sys.net.input.iter_mut().chain(&mut sys.net.output) {
        d.delay = d.delay.saturating_sub(nz);
    }
    for agent in &mut sys.agents {
        match &mut agent.kind {
            AgentKind::Endpoint(e) => pass_time_endpoint(e, nz),
            // Local-net messages must leave before time passes, so they are
            // untouched here; inner clocks advance normally.
            AgentKind::Dialect(w) => pass_time_endpoint(&mut w.inner, nz),
            AgentKind::Attacker(_) => {}
        }
    }
}

/// The `tick` rule: fires exactly when `0 < mte < infinity`.
pub fn tick(sys: &System) -> Option<Transition> {
    match mte(sys) {
        TimeBound::Finite(nz) if nz > 0 => {
            let mut next = sys.clone();
            pass_time(&mut next, nz);
            Some(Transition {
                label: Label::Tick { amount: nz },
                next: next.canonical(),
            })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn test_config() -> BTreeMap<String, u64> {
        [
            ("ACK_TIMEOUT", 5),
            ("ACK_RANDOM_FACTOR", 2),
            ("MAX_RETRANSMIT", 1),
            ("msgSD", 2),
            ("msgQD", 5),
            ("w4AckBd", 0),
            ("ttl", 10),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    fn endpoint(id: &str) -> (String, EndpointAttrs) {
        let attrs = EndpointAttrs {
            config: test_config(),
            ..EndpointAttrs::default()
        };
        (id.to_string(), attrs)
    }

    fn put_amsg(app_id: &str, tgt: &str, msg_type: MsgType, path: &str, val: &str) -> AppMsg {
        AppMsg {
            app_id: app_id.into(),
            tgt: tgt.into(),
            msg_type,
            method: Method::Put,
            path: path.into(),
            qparams: String::new(),
            body: Body::text(val),
        }
    }

    fn two_device_system() -> System {
        let (id0, mut e0) = endpoint("dev0");
        e0.send_reqs = vec![AMsgItem::Msg(put_amsg(
            "putN",
            "dev1",
            MsgType::Non,
            "door",
            "lock",
        ))];
        let (id1, mut e1) = endpoint("dev1");
        e1.rsrcs.insert("door".into(), "unlock".into());
        System {
            agents: vec![Agent::endpoint(id0, e0), Agent::endpoint(id1, e1)],
            net: Network::default(),
            log: Some(vec![]),
        }
        .canonical()
    }

    #[test]
    fn devsend_builds_delayed_message() {
        let sys = two_device_system();
        let ts = devsend(&sys, "dev0");
        assert_eq!(ts.len(), 1);
        let next = &ts[0].next;
        assert_eq!(next.net.input.len(), 1);
        let dmsg = &next.net.input[0];
        assert_eq!(dmsg.delay, 2); // msgSD
        assert_eq!(dmsg.msg.tgt, "dev1");
        let e0 = next.endpoint("dev0").unwrap();
        assert_eq!(e0.ctr, 2);
        assert_eq!(e0.snd_ctr, 5); // reset to msgQD
        assert_eq!(e0.w4_rsp.len(), 1); // NON requests wait for a response
        assert!(e0.w4_ack.is_empty());
    }

    #[test]
    fn devsend_blocked_by_snd_ctr() {
        let mut sys = two_device_system();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            e.snd_ctr = 3;
        }
        assert!(devsend(&sys, "dev0").is_empty());
    }

    #[test]
    fn devsend_blocked_by_w4_ack_bound() {
        let mut sys = two_device_system();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            let msg = Message::plain(
                "dev1",
                "dev0",
                Content {
                    head: Head {
                        msg_type: MsgType::Con,
                        code: "0.03".into(),
                        mid: "x-m0".into(),
                    },
                    token: "x-t1".into(),
                    options: vec![Opt::rcnt(0)],
                    body: Body::Empty,
                },
            );
            e.w4_ack.push(DelayedMessage::at(msg, 5));
        }
        // w4AckBd = 0 permits sending only with an empty w4Ack.
        assert!(devsend(&sys, "dev0").is_empty());
    }

    #[test]
    fn con_put_gets_piggybacked_ack_and_log() {
        let mut sys = two_device_system();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            e.send_reqs = vec![AMsgItem::Msg(put_amsg(
                "putC",
                "dev1",
                MsgType::Con,
                "door",
                "lock",
            ))];
        }
        let sys = devsend(&sys, "dev0").remove(0).next;
        let req = sys.net.input[0].clone();
        let mut sys2 = sys;
        sys2.net.input.clear();
        sys2.net.output.push(DelayedMessage::at(req.msg.clone(), 0));
        let t = rcv(&sys2.canonical(), 0).expect("rcv enabled");
        let next = t.next;
        let d1 = next.endpoint("dev1").unwrap();
        assert_eq!(d1.rsrcs.get("door"), Some(&"lock".to_string()));
        assert_eq!(d1.rsp_snt.len(), 1);
        assert_eq!(d1.rsp_snt[0].delay, 10); // ttl
        assert_eq!(d1.ctr, 1);
        let rsp = &next.net.input[0].msg;
        assert_eq!(rsp.msg_type(), Some(MsgType::Ack));
        assert_eq!(rsp.code(), Some("2.04"));
        assert_eq!(rsp.mid(), req.msg.mid()); // piggy-backed ACK echoes the mid
        assert_eq!(
            next.log.as_deref(),
            Some(&[LogItem::rcv_put("dev1", "door", "lock")][..])
        );
    }

    #[test]
    fn repeated_con_request_resends_without_reprocessing() {
        let (_, mut e1) = endpoint("dev1");
        e1.rsrcs.insert("door".into(), "unlock".into());
        let req = Message::plain(
            "dev1",
            "dev0",
            Content {
                head: Head {
                    msg_type: MsgType::Con,
                    code: "0.03".into(),
                    mid: "dev0-putC-m0".into(),
                },
                token: "dev0-putC-t1".into(),
                options: vec![Opt::uri_path("door")],
                body: Body::text("lock"),
            },
        );
        let first = rcv_msg("dev1", &mut e1, &req);
        assert_eq!(first.to_log.len(), 1);
        let log_before = e1.clone();
        let second = rcv_msg("dev1", &mut e1, &req);
        // Same response resent verbatim, no state change, no second log entry.
        assert_eq!(second.to_send.len(), 1);
        assert_eq!(second.to_send[0].msg, first.to_send[0].msg);
        assert!(second.to_log.is_empty());
        assert_eq!(e1, log_before);
    }

    #[test]
    fn non_get_missing_resource_answers_404() {
        let (_, mut e1) = endpoint("dev1");
        let req = Message::plain(
            "dev1",
            "dev0",
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: "0.01".into(),
                    mid: "dev0-getN-m0".into(),
                },
                token: "dev0-getN-t1".into(),
                options: vec![Opt::uri_path("door")],
                body: Body::Empty,
            },
        );
        let out = rcv_msg("dev1", &mut e1, &req);
        let rsp = &out.to_send[0].msg;
        assert_eq!(rsp.code(), Some("4.04"));
        assert_eq!(rsp.msg_type(), Some(MsgType::Non));
        assert_eq!(rsp.body(), Some(&Body::Empty));
    }

    #[test]
    fn put_on_fresh_path_answers_created() {
        let (_, mut e1) = endpoint("dev1");
        let req = Message::plain(
            "dev1",
            "dev0",
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: "0.03".into(),
                    mid: "dev0-putNSG-m2".into(),
                },
                token: "dev0-putNSG-t3".into(),
                options: vec![Opt::uri_path("sig")],
                body: Body::text("go"),
            },
        );
        let out = rcv_msg("dev1", &mut e1, &req);
        assert_eq!(out.to_send[0].msg.code(), Some("2.01"));
        assert_eq!(e1.rsrcs.get("sig"), Some(&"go".to_string()));
    }

    fn pending_request(e: &mut EndpointAttrs, tgt: &str, mid: &str, tok: &str, con: bool) {
        let msg = Message::plain(
            tgt,
            "dev0",
            Content {
                head: Head {
                    msg_type: if con { MsgType::Con } else { MsgType::Non },
                    code: "0.01".into(),
                    mid: mid.into(),
                },
                token: tok.into(),
                options: vec![Opt::uri_path("door")],
                body: Body::Empty,
            },
        );
        if con {
            let mut tracked = msg;
            if let Payload::Plain(c) = &mut tracked.payload {
                *c = c.with_rcnt(0);
            }
            e.w4_ack.push(DelayedMessage::at(tracked, 5));
        } else {
            e.w4_rsp.push(msg);
        }
    }

    fn response(src: &str, mid: &str, tok: &str, t: MsgType, code: &str, val: &str) -> Message {
        Message::plain(
            "dev0",
            src,
            Content {
                head: Head {
                    msg_type: t,
                    code: code.into(),
                    mid: mid.into(),
                },
                token: tok.into(),
                options: vec![],
                body: if val.is_empty() {
                    Body::Empty
                } else {
                    Body::text(val)
                },
            },
        )
    }

    #[test]
    fn piggybacked_response_clears_w4_ack() {
        let (_, mut e0) = endpoint("dev0");
        pending_request(&mut e0, "dev1", "m0", "t1", true);
        let rsp = response("dev1", "m0", "t1", MsgType::Ack, "2.04", "");
        rcv_msg("dev0", &mut e0, &rsp);
        assert!(e0.w4_ack.is_empty());
        assert_eq!(e0.rsp_rcd, vec![rsp]);
    }

    #[test]
    fn duplicate_non_response_is_ignored() {
        let (_, mut e0) = endpoint("dev0");
        pending_request(&mut e0, "dev1", "m0", "t1", false);
        let rsp = response("dev1", "r0", "t1", MsgType::Non, "2.05", "lock");
        rcv_msg("dev0", &mut e0, &rsp);
        let snapshot = e0.clone();
        let dup = response("dev1", "r1", "t1", MsgType::Non, "2.05", "lock");
        let out = rcv_msg("dev0", &mut e0, &dup);
        assert!(out.to_send.is_empty());
        assert_eq!(e0, snapshot);
    }

    #[test]
    fn response_from_wrong_server_is_ignored() {
        let (_, mut e0) = endpoint("dev0");
        pending_request(&mut e0, "dev1", "m0", "t1", false);
        let rsp = response("dev2", "r0", "t1", MsgType::Non, "2.05", "lock");
        let out = rcv_msg("dev0", &mut e0, &rsp);
        assert!(out.to_send.is_empty());
        assert!(e0.rsp_rcd.is_empty());
        assert_eq!(e0.w4_rsp.len(), 1);
    }

    #[test]
    fn pure_ack_moves_request_to_w4_rsp() {
        let (_, mut e0) = endpoint("dev0");
        pending_request(&mut e0, "dev1", "m0", "t1", true);
        let ack = response("dev1", "m0", "", MsgType::Ack, "", "");
        rcv_msg("dev0", &mut e0, &ack);
        assert!(e0.w4_ack.is_empty());
        assert_eq!(e0.w4_rsp.len(), 1);
        assert_eq!(e0.w4_rsp[0].content().unwrap().rcnt(), None);
        // An ACK with an unknown mid changes nothing.
        let stray = response("dev1", "zz", "", MsgType::Ack, "", "");
        let snapshot = e0.clone();
        rcv_msg("dev0", &mut e0, &stray);
        assert_eq!(e0, snapshot);
    }

    #[test]
    fn non_rst_is_ignored() {
        let (_, mut e0) = endpoint("dev0");
        let rst = response("dev1", "m9", "", MsgType::Rst, "", "");
        let snapshot = e0.clone();
        let out = rcv_msg("dev0", &mut e0, &rst);
        assert!(out.to_send.is_empty());
        assert_eq!(e0, snapshot);
    }

    #[test]
    fn back_off_doubles_per_resend() {
        // Oracle: repeated doubling.
        let mut expected = 5;
        for k in 1..=4 {
            expected *= 2;
            assert_eq!(back_off(5, k), expected);
        }
    }

    #[test]
    fn ack_timeout_resends_and_backs_off() {
        let mut sys = two_device_system();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            e.send_reqs.clear();
            pending_request(e, "dev1", "m0", "t1", true);
            e.w4_ack[0].delay = 0;
        }
        let sys = sys.canonical();
        let t = ack_timeout(&sys, "dev0", 0).expect("enabled");
        let next = t.next;
        assert_eq!(next.net.input.len(), 1);
        assert_eq!(next.net.input[0].delay, 2);
        assert_eq!(next.net.input[0].msg.content().unwrap().rcnt(), None);
        let e0 = next.endpoint("dev0").unwrap();
        assert_eq!(e0.w4_ack.len(), 1);
        assert_eq!(e0.w4_ack[0].delay, 10); // backOff(5, 1)
        assert_eq!(e0.w4_ack[0].msg.content().unwrap().rcnt(), Some(1));

        // At the retransmission limit the entry is abandoned.
        let mut sys2 = next.clone();
        if let AgentKind::Endpoint(e) = &mut sys2.agent_mut("dev0").unwrap().kind {
            e.w4_ack[0].delay = 0;
        }
        let t2 = ack_timeout(&sys2.canonical(), "dev0", 0).expect("enabled");
        assert!(t2.next.endpoint("dev0").unwrap().w4_ack.is_empty());

        // Entries still waiting do not fire.
        let mut sys3 = next;
        if let AgentKind::Endpoint(e) = &mut sys3.agent_mut("dev0").unwrap().kind {
            e.w4_ack[0].delay = 3;
        }
        assert!(ack_timeout(&sys3.canonical(), "dev0", 0).is_none());
    }

    #[test]
    fn net_move_shifts_one_message() {
        let mut sys = two_device_system();
        let sys1 = devsend(&sys, "dev0").remove(0).next;
        let t = net_move(&sys1, 0).expect("one input message");
        assert!(t.next.net.input.is_empty());
        assert_eq!(t.next.net.output.len(), 1);
        assert!(net_move(&sys, 0).is_none());
        sys.net.input.clear();
        assert!(net_move(&sys, 0).is_none());
    }

    #[test]
    fn mte_cases() {
        // Fresh scenario: a sendable message and a zero send counter.
        let sys = two_device_system();
        assert_eq!(mte(&sys), TimeBound::Finite(0));
        assert_eq!(devsend(&sys, "dev0").len(), 1);

        // Only a delayed message in the net.
        let sys1 = devsend(&sys, "dev0").remove(0).next;
        assert_eq!(mte(&sys1), TimeBound::Finite(2));

        // Terminal: empty net, empty w4Ack, nothing to send.
        let mut term = two_device_system();
        if let AgentKind::Endpoint(e) = &mut term.agent_mut("dev0").unwrap().kind {
            e.send_reqs.clear();
        }
        assert_eq!(mte(&term), TimeBound::Infinite);
        assert!(tick(&term).is_none());
    }

    #[test]
    fn tick_decrements_by_mte() {
        let sys = two_device_system();
        assert!(tick(&sys).is_none()); // mte = 0

        let mut sys1 = devsend(&sys, "dev0").remove(0).next;
        if let AgentKind::Endpoint(e) = &mut sys1.agent_mut("dev1").unwrap().kind {
            pending_request(e, "dev0", "m7", "t7", true);
            e.w4_ack[0].delay = 3;
        }
        let sys1 = sys1.canonical();
        let t = tick(&sys1).expect("mte = 2");
        assert_eq!(t.label, Label::Tick { amount: 2 });
        assert_eq!(t.next.net.input[0].delay, 0);
        assert_eq!(t.next.endpoint("dev1").unwrap().w4_ack[0].delay, 1);
    }

    #[test]
    fn tick_expires_response_records() {
        let mut sys = two_device_system();
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev0").unwrap().kind {
            e.send_reqs.clear();
        }
        if let AgentKind::Endpoint(e) = &mut sys.agent_mut("dev1").unwrap().kind {
            e.rsp_snt.push(StoredResponse {
                msg: response("dev1", "r0", "t1", MsgType::Non, "2.04", ""),
                req_mid: "m0".into(),
                delay: 10,
            });
            e.history.push(SentNote {
                to: "dev0".into(),
                token: "t1".into(),
            });
        }
        // A net message drives time past the record lifetime.
        let driver = Message::plain(
            "dev1",
            "dev0",
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: "0.01".into(),
                    mid: "m5".into(),
                },
                token: "t5".into(),
                options: vec![],
                body: Body::Empty,
            },
        );
        sys.net.input.push(DelayedMessage::at(driver, 10));
        let sys = sys.canonical();
        let t = tick(&sys).expect("mte = 10");
        let d1 = t.next.endpoint("dev1").unwrap();
        assert!(d1.rsp_snt.is_empty()); // expired and removed
        assert_eq!(d1.history.len(), 1); // ledger survives expiry
    }
}
