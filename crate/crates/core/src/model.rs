//! Core term algebra: messages, delayed messages, application messages,
//! endpoint/attacker/wrapper attributes, network, log and system configurations.
//!
//! Everything here is an immutable value. A [`System`] is the unit of search;
//! two systems are the same state exactly when their canonical forms are equal,
//! which emulates multiset matching equality of the underlying semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// CoAP message type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MsgType {
    Con,
    Non,
    Ack,
    Rst,
}

impl MsgType {
    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::Con => "CON",
            MsgType::Non => "NON",
            MsgType::Ack => "ACK",
            MsgType::Rst => "RST",
        }
    }

    pub fn parse(s: &str) -> Option<MsgType> {
        match s {
            "CON" => Some(MsgType::Con),
            "NON" => Some(MsgType::Non),
            "ACK" => Some(MsgType::Ack),
            "RST" => Some(MsgType::Rst),
            _ => None,
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Request method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Get,
    Post,
    Put,
    Delete,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Delete => "DELETE",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "GET" => Some(Method::Get),
            "POST" => Some(Method::Post),
            "PUT" => Some(Method::Put),
            "DELETE" => Some(Method::Delete),
            _ => None,
        }
    }

    /// Fixed method-to-request-code table.
    pub fn code(self) -> &'static str {
        match self {
            Method::Get => "0.01",
            Method::Post => "0.02",
            Method::Put => "0.03",
            Method::Delete => "0.04",
        }
    }

    pub fn from_code(code: &str) -> Option<Method> {
        match code {
            "0.01" => Some(Method::Get),
            "0.02" => Some(Method::Post),
            "0.03" => Some(Method::Put),
            "0.04" => Some(Method::Delete),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Message payload body: empty or a text value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Body {
    #[default]
    Empty,
    Text(String),
}

impl Body {
    pub fn text(s: impl Into<String>) -> Body {
        Body::Text(s.into())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Body::Empty)
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Body::Empty => None,
            Body::Text(s) => Some(s),
        }
    }
}

/// Option value: a string or a natural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptValue {
    Str(String),
    Nat(u64),
}

/// A single message option `o(name, value)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Opt {
    pub name: String,
    pub value: OptValue,
}

impl Opt {
    pub fn uri_path(path: impl Into<String>) -> Opt {
        Opt {
            name: "Uri-Path".into(),
            value: OptValue::Str(path.into()),
        }
    }

    pub fn rcnt(n: u64) -> Opt {
        Opt {
            name: "rcnt".into(),
            value: OptValue::Nat(n),
        }
    }
}

/// Message header `h(type, code, mid)`. The code is empty for pure ACK/RST.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Head {
    pub msg_type: MsgType,
    pub code: String,
    pub mid: String,
}

/// Plain message content `c(head, token, options, body)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Content {
    pub head: Head,
    pub token: String,
    pub options: Vec<Opt>,
    pub body: Body,
}

impl Content {
    /// Uri-Path option value, if present.
    pub fn path(&self) -> Option<&str> {
        self.options
            .iter()
            .find_map(|o| match (&*o.name, &o.value) {
                ("Uri-Path", OptValue::Str(p)) => Some(p.as_str()),
                _ => None,
            })
    }

    /// Resend counter option, if present.
    pub fn rcnt(&self) -> Option<u64> {
        self.options
            .iter()
            .find_map(|o| match (&*o.name, &o.value) {
                ("rcnt", OptValue::Nat(n)) => Some(*n),
                _ => None,
            })
    }

    /// Copy without the resend counter option.
    pub fn without_rcnt(&self) -> Content {
        let mut c = self.clone();
        c.options.retain(|o| o.name != "rcnt");
        c
    }

    pub fn with_rcnt(&self, n: u64) -> Content {
        let mut c = self.without_rcnt();
        c.options.push(Opt::rcnt(n));
        c
    }
}

/// Opaque dialect-encoded bits. Sealed: only a decoder holding the matching
/// generator output recovers the content. Attacker operations never look inside.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DcBits {
    pub(crate) grand: String,
    pub(crate) content: Content,
    pub(crate) sealed_ix: u64,
}

/// Dialected content `dc(bits, ix)`; the lingo index travels in the clear.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DContent {
    pub bits: DcBits,
    pub ix: u64,
}

/// Message payload: plain or dialect-encoded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    Plain(Content),
    Dialected(DContent),
}

impl Payload {
    pub fn plain(&self) -> Option<&Content> {
        match self {
            Payload::Plain(c) => Some(c),
            Payload::Dialected(_) => None,
        }
    }
}

/// A message `m(tgt, src, payload)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub tgt: String,
    pub src: String,
    pub payload: Payload,
}

impl Message {
    pub fn plain(tgt: impl Into<String>, src: impl Into<String>, content: Content) -> Message {
        Message {
            tgt: tgt.into(),
            src: src.into(),
            payload: Payload::Plain(content),
        }
    }

    pub fn content(&self) -> Option<&Content> {
        self.payload.plain()
    }

    pub fn msg_type(&self) -> Option<MsgType> {
        self.content().map(|c| c.head.msg_type)
    }

    pub fn code(&self) -> Option<&str> {
        self.content().map(|c| c.head.code.as_str())
    }

    pub fn mid(&self) -> Option<&str> {
        self.content().map(|c| c.head.mid.as_str())
    }

    pub fn token(&self) -> Option<&str> {
        self.content().map(|c| c.token.as_str())
    }

    pub fn path(&self) -> Option<&str> {
        self.content().and_then(Content::path)
    }

    pub fn body(&self) -> Option<&Body> {
        self.content().map(|c| &c.body)
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.payload {
            Payload::Plain(c) => write!(
                f,
                "m({},{},{} {} mid={} tok={})",
                self.tgt, self.src, c.head.msg_type, c.head.code, c.head.mid, c.token
            ),
            Payload::Dialected(dc) => {
                write!(f, "m({},{},dc(_,{}))", self.tgt, self.src, dc.ix)
            }
        }
    }
}

/// A message in transit: `msg @ delay`, or `msg @@ delay` for attacker copies
/// that may be delivered at the current time or any later one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DelayedMessage {
    pub msg: Message,
    pub delay: u64,
    pub anytime: bool,
}

impl DelayedMessage {
    pub fn at(msg: Message, delay: u64) -> DelayedMessage {
        DelayedMessage {
            msg,
            delay,
            anytime: false,
        }
    }

    pub fn anytime(msg: Message, delay: u64) -> DelayedMessage {
        DelayedMessage {
            msg,
            delay,
            anytime: true,
        }
    }

    /// Deliverable now: at zero delay. Anytime messages also wait out their
    /// delay but once at zero stay deliverable forever.
    pub fn deliverable(&self) -> bool {
        self.delay == 0
    }
}

impl fmt::Display for DelayedMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.anytime { "@@" } else { "@" };
        write!(f, "{} {} {}", self.msg, at, self.delay)
    }
}

/// Application-level send list item: a request to transmit, or a pause.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AMsgItem {
    Msg(AppMsg),
    Pause(u64),
}

/// An application message `amsg(appid, tgt, type, meth, path, qparams, body)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppMsg {
    pub app_id: String,
    pub tgt: String,
    pub msg_type: MsgType,
    pub method: Method,
    pub path: String,
    /// Carried but never interpreted; always empty in the builtin scenarios.
    pub qparams: String,
    pub body: Body,
}

/// Response-sent record kept in `rspSntD`, with enough provenance to answer a
/// repeated request verbatim. The delay is the remaining id/token lifetime.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoredResponse {
    pub msg: Message,
    /// Message id of the request this response answered.
    pub req_mid: String,
    pub delay: u64,
}

/// One line of the response-sent history ledger: first transmissions only, in
/// send order. Survives `rspSntD` lifetime expiry so ordering properties stay
/// evaluable in terminal states. Not consulted by any transition guard.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SentNote {
    pub to: String,
    pub token: String,
}

/// Application layer attached to an endpoint: knowledge base plus rules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AppConf {
    pub akb: BTreeMap<String, String>,
    pub rules: Vec<crate::applayer::ARule>,
}

/// CoAP endpoint state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EndpointAttrs {
    pub w4_ack: Vec<DelayedMessage>,
    pub w4_rsp: Vec<Message>,
    pub rsp_rcd: Vec<Message>,
    pub rsp_snt: Vec<StoredResponse>,
    pub rsrcs: BTreeMap<String, String>,
    pub ctr: u64,
    pub send_reqs: Vec<AMsgItem>,
    pub config: BTreeMap<String, u64>,
    pub snd_ctr: u64,
    pub app: Option<AppConf>,
    pub history: Vec<SentNote>,
}

impl EndpointAttrs {
    pub fn cfg(&self, name: &str) -> u64 {
        *self
            .config
            .get(name)
            .unwrap_or_else(|| panic!("missing config parameter {name:?}"))
    }
}

/// Attacker state: knowledge base of seen messages and remaining capabilities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AttackerAttrs {
    pub kb: Vec<DelayedMessage>,
    pub caps: Vec<crate::attack::Capability>,
}

/// Dialect meta-agent wrapping an endpoint, together with its local network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DialectWrapper {
    pub inner: EndpointAttrs,
    pub local_net: Network,
    pub seed_to: BTreeMap<String, String>,
    pub seed_fr: BTreeMap<String, String>,
    pub ix_ctr: BTreeMap<String, u64>,
    pub used: BTreeMap<String, BTreeSet<u64>>,
    pub rand_size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentKind {
    Endpoint(EndpointAttrs),
    Attacker(AttackerAttrs),
    Dialect(DialectWrapper),
}

/// An agent `[id | attrs]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agent {
    pub id: String,
    pub kind: AgentKind,
}

impl Agent {
    pub fn endpoint(id: impl Into<String>, attrs: EndpointAttrs) -> Agent {
        Agent {
            id: id.into(),
            kind: AgentKind::Endpoint(attrs),
        }
    }

    pub fn attacker(id: impl Into<String>, attrs: AttackerAttrs) -> Agent {
        Agent {
            id: id.into(),
            kind: AgentKind::Attacker(attrs),
        }
    }

    pub fn as_endpoint(&self) -> Option<&EndpointAttrs> {
        match &self.kind {
            AgentKind::Endpoint(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_attacker(&self) -> Option<&AttackerAttrs> {
        match &self.kind {
            AgentKind::Attacker(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_wrapper(&self) -> Option<&DialectWrapper> {
        match &self.kind {
            AgentKind::Dialect(w) => Some(w),
            _ => None,
        }
    }

    /// Endpoint attributes, reaching through a dialect wrapper.
    pub fn endpoint_attrs(&self) -> Option<&EndpointAttrs> {
        match &self.kind {
            AgentKind::Endpoint(e) => Some(e),
            AgentKind::Dialect(w) => Some(&w.inner),
            AgentKind::Attacker(_) => None,
        }
    }
}

/// The two-sided network `net(input, output)`. New messages enter the input,
/// are moved to the output by the net (or an attacker), and are delivered from
/// the output once their delay is zero.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Network {
    pub input: Vec<DelayedMessage>,
    pub output: Vec<DelayedMessage>,
}

impl Network {
    pub fn is_empty(&self) -> bool {
        self.input.is_empty() && self.output.is_empty()
    }
}

/// Receive-event log item `rcvP(epid, path, val)`; appended by PUT processing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogItem {
    pub epid: String,
    pub path: String,
    pub value: String,
}

impl LogItem {
    pub fn rcv_put(
        epid: impl Into<String>,
        path: impl Into<String>,
        value: impl Into<String>,
    ) -> LogItem {
        LogItem {
            epid: epid.into(),
            path: path.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for LogItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rcvP({},{},{})", self.epid, self.path, self.value)
    }
}

/// A full system configuration: agents, network and optional log.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct System {
    pub agents: Vec<Agent>,
    pub net: Network,
    pub log: Option<Vec<LogItem>>,
}

impl System {
    pub fn agent(&self, id: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn agent_mut(&mut self, id: &str) -> Option<&mut Agent> {
        self.agents.iter_mut().find(|a| a.id == id)
    }

    /// Endpoint attributes by id, reaching through dialect wrappers.
    pub fn endpoint(&self, id: &str) -> Option<&EndpointAttrs> {
        self.agent(id).and_then(Agent::endpoint_attrs)
    }

    pub fn attacker(&self) -> Option<(&str, &AttackerAttrs)> {
        self.agents.iter().find_map(|a| match &a.kind {
            AgentKind::Attacker(att) => Some((a.id.as_str(), att)),
            _ => None,
        })
    }

    pub fn append_log(&mut self, items: Vec<LogItem>) {
        if items.is_empty() {
            return;
        }
        if let Some(log) = &mut self.log {
            log.extend(items);
        }
    }

    /// Canonical form: every multiset component sorted, agents ordered by id.
    /// Lists (send queues, logs, histories) keep their order. Idempotent.
    pub fn canonicalize(&mut self) {
        for agent in &mut self.agents {
            match &mut agent.kind {
                AgentKind::Endpoint(e) => canonicalize_endpoint(e),
                AgentKind::Attacker(a) => {
                    a.kb.sort();
                    a.caps.sort();
                }
                AgentKind::Dialect(w) => {
                    canonicalize_endpoint(&mut w.inner);
                    w.local_net.input.sort();
                    w.local_net.output.sort();
                }
            }
        }
        self.agents.sort_by(|a, b| a.id.cmp(&b.id));
        self.net.input.sort();
        self.net.output.sort();
    }

    pub fn canonical(mut self) -> System {
        self.canonicalize();
        self
    }
}

fn canonicalize_endpoint(e: &mut EndpointAttrs) {
    e.w4_ack.sort();
    e.w4_rsp.sort();
    e.rsp_rcd.sort();
    e.rsp_snt.sort();
    for msg in e
        .w4_ack
        .iter_mut()
        .map(|d| &mut d.msg)
        .chain(e.w4_rsp.iter_mut())
        .chain(e.rsp_rcd.iter_mut())
        .chain(e.rsp_snt.iter_mut().map(|s| &mut s.msg))
    {
        if let Payload::Plain(c) = &mut msg.payload {
            c.options.sort();
        }
    }
}

/// Message classification by header code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgClass {
    Request(Method),
    /// Carries whether the code is a success (2.xx) code.
    Response(bool),
    Empty,
    Unknown,
}

/// Classify a plain-content message as request, response, empty or unknown.
pub fn classify(content: &Content) -> MsgClass {
    let code = content.head.code.as_str();
    if code.is_empty() || code == "0.00" {
        return MsgClass::Empty;
    }
    if let Some(m) = Method::from_code(code) {
        return MsgClass::Request(m);
    }
    let mut parts = code.splitn(2, '.');
    match (parts.next(), parts.next()) {
        (Some(class @ ("2" | "4" | "5")), Some(detail))
            if !detail.is_empty() && detail.chars().all(|c| c.is_ascii_digit()) =>
        {
            MsgClass::Response(class == "2")
        }
        _ => MsgClass::Unknown,
    }
}

/// Fresh message identifier; injective in `(prefix, n)`.
pub fn gen_mid(prefix: &str, n: u64) -> String {
    format!("{prefix}-m{n}")
}

/// Fresh token; injective in `(prefix, n)` and disjoint from mids.
pub fn gen_tok(prefix: &str, n: u64) -> String {
    format!("{prefix}-t{n}")
}

/// Tokens embed the sending endpoint id and application id, so matching a
/// token against an application id is a containment test. The empty id
/// matches any token.
pub fn token_matches(token: &str, app_id: &str) -> bool {
    token.contains(app_id)
}
