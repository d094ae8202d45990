//! Builders for every initial configuration used in the experiment suite,
//! application-message constructors, the named-scenario registry, and the
//! textual scenario-parameter syntax used by the command line.

use crate::attack::{Act, Capability};
use crate::model::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("bad scenario arguments: {0}")]
    BadArgs(String),
    #[error("duplicate endpoint id {0:?}")]
    DuplicateId(String),
}

// ---------------------------------------------------------------------------
// Application message constructors
// ---------------------------------------------------------------------------

fn amsg(
    id: &str,
    tgt: &str,
    msg_type: MsgType,
    method: Method,
    path: &str,
    body: Body,
) -> AMsgItem {
    AMsgItem::Msg(AppMsg {
        app_id: id.into(),
        tgt: tgt.into(),
        msg_type,
        method,
        path: path.into(),
        qparams: String::new(),
        body,
    })
}

pub fn mk_get_c(id: &str, tgt: &str, path: &str) -> AMsgItem {
    amsg(id, tgt, MsgType::Con, Method::Get, path, Body::Empty)
}

pub fn mk_get_n(id: &str, tgt: &str, path: &str) -> AMsgItem {
    amsg(id, tgt, MsgType::Non, Method::Get, path, Body::Empty)
}

pub fn mk_put_c(id: &str, tgt: &str, path: &str, val: &str) -> AMsgItem {
    amsg(id, tgt, MsgType::Con, Method::Put, path, Body::text(val))
}

pub fn mk_put_n(id: &str, tgt: &str, path: &str, val: &str) -> AMsgItem {
    amsg(id, tgt, MsgType::Non, Method::Put, path, Body::text(val))
}

pub fn mk_del_n(id: &str, tgt: &str, path: &str) -> AMsgItem {
    amsg(id, tgt, MsgType::Non, Method::Delete, path, Body::Empty)
}

/// A pause of `n` time units between application sends; zero pauses vanish.
pub fn amsgd(n: u64) -> Vec<AMsgItem> {
    if n == 0 {
        vec![]
    } else {
        vec![AMsgItem::Pause(n)]
    }
}

pub fn start_amsg(tgt: &str, id: &str) -> AMsgItem {
    amsg(
        id,
        tgt,
        MsgType::Non,
        Method::Put,
        "start",
        Body::text("go"),
    )
}

pub fn boat_here_amsg() -> AMsgItem {
    amsg(
        "boatH",
        "bctl",
        MsgType::Non,
        Method::Put,
        "boat",
        Body::text("here"),
    )
}

/// Signal on/off pairs for servers `dev1..devn`, the off delayed by the task
/// duration `d`.
pub fn mk_sig_ams(n: u64, d: u64) -> Vec<AMsgItem> {
    let mut out = vec![];
    for j in 1..=n {
        let dev = format!("dev{j}");
        out.push(mk_put_n("putN", &dev, "sig", "on"));
        out.extend(amsgd(d));
        out.push(mk_put_n("putN", &dev, "sig", "off"));
    }
    out
}

/// One `sig := go` request per first-set server `dev1..devn`.
pub fn mk_go_ams(n: u64) -> Vec<AMsgItem> {
    (1..=n)
        .map(|j| mk_put_n("putN", &format!("dev{j}"), "sig", "go"))
        .collect()
}

// ---------------------------------------------------------------------------
// Configuration and agent builders
// ---------------------------------------------------------------------------

fn config(entries: &[(&str, u64)]) -> BTreeMap<String, u64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn mk_coap_conf(mqd: u64, w4ab: u64) -> BTreeMap<String, u64> {
    config(&[
        ("ACK_TIMEOUT", 5),
        ("ACK_RANDOM_FACTOR", 2),
        ("MAX_RETRANSMIT", 1),
        ("msgSD", 2),
        ("msgQD", mqd),
        ("w4AckBd", w4ab),
        ("ttl", 10),
    ])
}

pub fn mk_init_dev_attrs(mqd: u64, w4ab: u64) -> EndpointAttrs {
    EndpointAttrs {
        config: mk_coap_conf(mqd, w4ab),
        ..EndpointAttrs::default()
    }
}

pub fn rb(path: &str, val: &str) -> BTreeMap<String, String> {
    [(path.to_string(), val.to_string())].into()
}

fn rmap(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn mk_dev_c(
    n: u64,
    j: u64,
    amsgl: Vec<AMsgItem>,
    rbnds: BTreeMap<String, String>,
    mqd: u64,
    w4ab: u64,
) -> Agent {
    let mut attrs = mk_init_dev_attrs(mqd, w4ab);
    attrs.send_reqs = amsgl;
    attrs.rsrcs = rbnds;
    attrs.snd_ctr = j;
    Agent::endpoint(format!("dev{n}"), attrs)
}

pub fn mk_att(caps: Vec<Capability>) -> Agent {
    Agent::attacker("eve", AttackerAttrs { kb: vec![], caps })
}

/// Application-layer device builder; `msg_sd` is the per-sender transit delay.
pub fn mk_dev_a(
    epid: &str,
    j: u64,
    amsgl: Vec<AMsgItem>,
    rbnds: BTreeMap<String, String>,
    msg_sd: u64,
    abnds: BTreeMap<String, String>,
    arules: Vec<crate::applayer::ARule>,
) -> Agent {
    let mut attrs = EndpointAttrs {
        config: config(&[
            ("ACK_TIMEOUT", 5),
            ("ACK_RANDOM_FACTOR", 2),
            ("MAX_RETRANSMIT", 1),
            ("msgSD", msg_sd),
            ("msgQD", 1),
            ("w4AckBd", 0),
            ("ttl", 10),
        ]),
        ..EndpointAttrs::default()
    };
    attrs.send_reqs = amsgl;
    attrs.rsrcs = rbnds;
    attrs.snd_ctr = j;
    attrs.app = Some(AppConf {
        akb: abnds,
        rules: arules,
    });
    Agent::endpoint(epid, attrs)
}

/// Assemble a system: one network, one (empty) log, unique agent ids.
fn assemble(agents: Vec<Agent>) -> Result<System, ScenarioError> {
    for (i, a) in agents.iter().enumerate() {
        if agents[..i].iter().any(|b| b.id == a.id) {
            return Err(ScenarioError::DuplicateId(a.id.clone()));
        }
    }
    Ok(System {
        agents,
        net: Network::default(),
        log: Some(vec![]),
    }
    .canonical())
}

#[allow(clippy::too_many_arguments)]
pub fn t_cs2c(
    n0: u64,
    j0: u64,
    amsgl0: Vec<AMsgItem>,
    rbnds0: BTreeMap<String, String>,
    mqd0: u64,
    w4ab0: u64,
    n1: u64,
    j1: u64,
    amsgl1: Vec<AMsgItem>,
    rbnds1: BTreeMap<String, String>,
    mqd1: u64,
    w4ab1: u64,
    caps: Vec<Capability>,
) -> Result<System, ScenarioError> {
    let mut agents = vec![
        mk_dev_c(n0, j0, amsgl0, rbnds0, mqd0, w4ab0),
        mk_dev_c(n1, j1, amsgl1, rbnds1, mqd1, w4ab1),
    ];
    if !caps.is_empty() {
        agents.push(mk_att(caps));
    }
    assemble(agents)
}

#[allow(clippy::too_many_arguments)]
pub fn t_cs3c(
    n0: u64,
    j0: u64,
    amsgl0: Vec<AMsgItem>,
    rbnds0: BTreeMap<String, String>,
    mqd0: u64,
    w4ab0: u64,
    n1: u64,
    j1: u64,
    amsgl1: Vec<AMsgItem>,
    rbnds1: BTreeMap<String, String>,
    mqd1: u64,
    w4ab1: u64,
    n2: u64,
    j2: u64,
    amsgl2: Vec<AMsgItem>,
    rbnds2: BTreeMap<String, String>,
    mqd2: u64,
    w4ab2: u64,
    caps: Vec<Capability>,
) -> Result<System, ScenarioError> {
    let mut agents = vec![
        mk_dev_c(n0, j0, amsgl0, rbnds0, mqd0, w4ab0),
        mk_dev_c(n1, j1, amsgl1, rbnds1, mqd1, w4ab1),
        mk_dev_c(n2, j2, amsgl2, rbnds2, mqd2, w4ab2),
    ];
    if !caps.is_empty() {
        agents.push(mk_att(caps));
    }
    assemble(agents)
}

/// Two endpoints: a client with messages to send and a server with resources.
pub fn t_cs(
    amsgl0: Vec<AMsgItem>,
    rbnds1: BTreeMap<String, String>,
    caps: Vec<Capability>,
) -> System {
    t_cs2c(
        0,
        0,
        amsgl0,
        BTreeMap::new(),
        5,
        0,
        1,
        1,
        vec![],
        rbnds1,
        5,
        0,
        caps,
    )
    .expect("distinct device indices")
}

/// One client and two servers.
pub fn t_css(
    amsgl0: Vec<AMsgItem>,
    rbnds1: BTreeMap<String, String>,
    rbnds2: BTreeMap<String, String>,
    caps: Vec<Capability>,
) -> System {
    t_cs3c(
        0,
        0,
        amsgl0,
        BTreeMap::new(),
        5,
        0,
        1,
        1,
        vec![],
        rbnds1,
        5,
        0,
        2,
        1,
        vec![],
        rbnds2,
        5,
        0,
        caps,
    )
    .expect("distinct device indices")
}

/// One client `dev0` and servers `dev1..devn`, each with a copy of the given
/// resource map and a send-delay stagger equal to its index.
pub fn cns(
    n: u64,
    amsgl: Vec<AMsgItem>,
    rbnds: BTreeMap<String, String>,
    mqd: u64,
    w4ab: u64,
) -> System {
    let mut agents = vec![mk_dev_c(0, 0, amsgl, BTreeMap::new(), mqd, w4ab)];
    for j in 1..=n {
        agents.push(mk_dev_c(j, j, vec![], rbnds.clone(), 5, 0));
    }
    assemble(agents).expect("distinct device indices")
}

fn with_attacker(mut sys: System, caps: Vec<Capability>) -> System {
    if !caps.is_empty() {
        sys.agents.push(mk_att(caps));
    }
    sys.canonical()
}

// ---------------------------------------------------------------------------
// Named experiment scenarios
// ---------------------------------------------------------------------------

fn door_amsgl(u: &str, g_: &str, l: &str) -> Vec<AMsgItem> {
    vec![
        mk_put_c(u, "dev1", "door", "unlock"),
        mk_put_n(g_, "dev1", "sig", "go"),
        mk_put_c(l, "dev1", "door", "lock"),
    ]
}

/// Unlock/signal/lock round with no attacker.
pub fn i_sys0() -> System {
    t_cs(
        door_amsgl("putCDU", "putNSG", "putCDL"),
        rb("door", "lock"),
        vec![],
    )
}

/// Same round, attacker may drop one message.
pub fn i_sys1() -> System {
    t_cs(
        door_amsgl("putNDU", "putNSG", "putNDL"),
        rb("door", "lock"),
        vec![Capability::drop()],
    )
}

/// Same round, attacker may replay one message after 10 time units.
pub fn i_sys2() -> System {
    t_cs(
        door_amsgl("putNDU", "putNSG", "putNDL"),
        rb("door", "lock"),
        vec![Capability::replay(10)],
    )
}

fn i_sys3(active: bool) -> System {
    t_css(
        vec![mk_get_n("getN", "dev1", "door")],
        rb("door", "unlock"),
        rb("door", "lock"),
        vec![
            Capability::mc("dev1", "dev0", active, vec![Act::new("dev2", "dev0", 0)]),
            Capability::mc("dev0", "dev2", active, vec![Act::new("dev0", "dev1", 0)]),
        ],
    )
}

/// GET spoofing with an active (in-transit modifying) attacker.
pub fn i_sys3a() -> System {
    i_sys3(true)
}

/// GET spoofing with a reactive (copying) attacker.
pub fn i_sys3r() -> System {
    i_sys3(false)
}

/// Redo/revert: lock then unlock, the attacker replays the lock after `d`.
pub fn ra_r1(mqd: u64, w4b: u64, d: u64, nso: bool) -> System {
    let mut amsgl = vec![
        mk_put_n("putNDL", "dev1", "door", "lock"),
        mk_put_n("putNDU", "dev1", "door", "unlock"),
    ];
    if nso {
        amsgl.push(mk_put_n("putNS", "dev1", "signal", "on"));
    }
    t_cs2c(
        0,
        0,
        amsgl,
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rmap(&[("door", "unlock"), ("sig", "off")]),
        2,
        0,
        vec![Capability::mc(
            "dev1",
            "dev0",
            false,
            vec![Act::new("", "", d)],
        )],
    )
    .expect("distinct device indices")
}

pub fn caps_level(j: u64) -> Vec<Capability> {
    let actions = (0..j)
        .map(|i| Act::new(format!("dev{}", 2 + i), "", 0))
        .collect();
    vec![Capability::mc("dev1", "dev0", false, actions)]
}

/// Sequential tasks on `dev1..devn`; the attacker copies dev1's commands to
/// later servers.
pub fn i_sys_x(n: u64, d: u64, caps: Vec<Capability>) -> System {
    with_attacker(cns(n, mk_sig_ams(n, d), rb("sig", "off"), 5, 0), caps)
}

pub fn caps2_2(d: u64) -> Vec<Capability> {
    vec![
        Capability::mc("dev1", "dev0", false, vec![Act::new("dev3", "dev0", d)]),
        Capability::mc("dev2", "dev0", false, vec![Act::new("dev4", "dev0", d)]),
    ]
}

pub fn caps3_3(d: u64) -> Vec<Capability> {
    vec![
        Capability::mc("dev1", "dev0", false, vec![Act::new("dev4", "dev0", d)]),
        Capability::mc("dev2", "dev0", false, vec![Act::new("dev5", "dev0", d)]),
        Capability::mc("dev3", "dev0", false, vec![Act::new("dev6", "dev0", d)]),
    ]
}

/// Process duplication: `dev0` drives `dev1..devn`; copies go to the twin set
/// `dev(n+1)..dev(2n)`.
pub fn i_sys_y(n: u64, caps: Vec<Capability>) -> System {
    with_attacker(cns(2 * n, mk_go_ams(n), rb("sig", "off"), 5, 0), caps)
}

/// GET spoofing via reactive copies across two servers.
pub fn i_sys_z(mqd: u64, w4b: u64) -> System {
    t_cs3c(
        0,
        0,
        vec![mk_get_n("getN0", "dev1", "door")],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "unlock"),
        5,
        0,
        2,
        2,
        vec![],
        rb("door", "lock"),
        5,
        0,
        vec![
            Capability::mc("dev1", "dev0", false, vec![Act::new("dev2", "", 0)]),
            Capability::mc("dev0", "dev2", false, vec![Act::new("", "dev1", 0)]),
        ],
    )
    .expect("distinct device indices")
}

/// Selective blocking: one non-confirmable PUT, attacker may drop once.
pub fn ca_fig1_2(mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![mk_put_n("putN", "dev1", "door", "lock")],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "unlocked"),
        2,
        0,
        vec![Capability::drop()],
    )
    .expect("distinct device indices")
}

/// Request delay: unlock then signal, attacker holds a drop and a delay.
pub fn ca_fig3(d: u64, mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![
            mk_put_n("putND", "dev1", "door", "unlock"),
            mk_put_n("putNS", "dev1", "signal", "on"),
        ],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "lock"),
        2,
        0,
        vec![Capability::drop(), Capability::delay(d)],
    )
    .expect("distinct device indices")
}

/// Delay with reordering: confirmable unlock then plain lock.
pub fn ca_fig4x(n: u64, mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![
            mk_put_c("putC", "dev1", "door", "unlock"),
            mk_put_n("putN", "dev1", "door", "lock"),
        ],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "lock"),
        2,
        0,
        vec![Capability::drop(), Capability::delay(n)],
    )
    .expect("distinct device indices")
}

/// Response delay and mismatch over one resource.
pub fn ca_fig5x(d: u64, mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![
            mk_put_n("putNU", "dev1", "door", "unlock"),
            mk_put_n("putNL", "dev1", "door", "lock"),
        ],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "lock"),
        2,
        0,
        vec![Capability::drop(), Capability::delay(d)],
    )
    .expect("distinct device indices")
}

/// GET response delay and mismatch.
pub fn ca_fig6x(d: u64, mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![
            mk_get_n("getN0", "dev1", "door"),
            mk_put_n("putNU", "dev1", "door", "unlock"),
            mk_get_n("getN1", "dev1", "door"),
        ],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "lock"),
        2,
        0,
        vec![Capability::drop(), Capability::drop(), Capability::delay(d)],
    )
    .expect("distinct device indices")
}

/// Cross-resource response mismatch on a single server.
pub fn ca_fig7x(d: u64, mqd: u64, w4b: u64) -> System {
    t_cs2c(
        0,
        0,
        vec![
            mk_get_n("getN0", "dev1", "door1"),
            mk_get_n("getN1", "dev1", "door2"),
        ],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rmap(&[("door1", "lock"), ("door2", "unlock")]),
        2,
        0,
        vec![Capability::drop(), Capability::delay(d)],
    )
    .expect("distinct device indices")
}

/// Two-server variant: redirect the request, un-redirect the response.
pub fn ca_fig7mod(mqd: u64, w4b: u64) -> System {
    t_cs3c(
        0,
        0,
        vec![mk_get_n("getN0", "dev1", "door")],
        BTreeMap::new(),
        mqd,
        w4b,
        1,
        1,
        vec![],
        rb("door", "unlock"),
        5,
        0,
        2,
        2,
        vec![],
        rb("door", "lock"),
        5,
        0,
        vec![
            Capability::redirect("dev1", "dev2"),
            Capability::unredirect("dev1", "dev2"),
        ],
    )
    .expect("distinct device indices")
}

// ---------------------------------------------------------------------------
// Application scenarios: moving bridge and pick-n-place
// ---------------------------------------------------------------------------

fn bctl() -> Agent {
    mk_dev_a(
        "bctl",
        1,
        vec![],
        rb("boat", "none"),
        2,
        rb("status", "idle"),
        crate::applayer::bridge_rules(),
    )
}

fn bs(amsgl: Vec<AMsgItem>) -> Agent {
    mk_dev_a("bs", 1, amsgl, BTreeMap::new(), 6, BTreeMap::new(), vec![])
}

fn ga() -> Agent {
    mk_dev_a(
        "ga",
        1,
        vec![],
        rb("gate", "open"),
        4,
        BTreeMap::new(),
        vec![],
    )
}

fn br() -> Agent {
    mk_dev_a(
        "br",
        1,
        vec![],
        rb("bridge", "close"),
        6,
        BTreeMap::new(),
        vec![],
    )
}

/// One round of the movable-bridge protocol.
pub fn br_init() -> System {
    assemble(vec![bctl(), bs(vec![boat_here_amsg()]), ga(), br()])
        .expect("distinct bridge agent ids")
}

/// Two rounds, the second delayed by `n`.
pub fn br_init2(n: u64) -> System {
    let mut msgs = vec![boat_here_amsg()];
    msgs.extend(amsgd(n));
    msgs.push(boat_here_amsg());
    assemble(vec![bctl(), bs(msgs), ga(), br()]).expect("distinct bridge agent ids")
}

/// Pick-n-place instance with the arm initially at the left position.
pub fn init_rl(
    pid: &str,
    gid: &str,
    aid: &str,
    amsgl: Vec<AMsgItem>,
) -> Result<System, ScenarioError> {
    let akb = rmap(&[
        ("status", "idle"),
        ("myarm", aid),
        ("mygrip", gid),
        ("goNI", "goR"),
        ("goI", "goL"),
    ]);
    let ctl = mk_dev_a(
        pid,
        1,
        vec![],
        BTreeMap::new(),
        2,
        akb,
        crate::applayer::pnp_rules(),
    );
    let arm = mk_dev_a(aid, 1, vec![], rb("arm", "goL"), 2, BTreeMap::new(), vec![]);
    let grip = mk_dev_a(
        gid,
        1,
        vec![],
        rb("grip", "open"),
        2,
        BTreeMap::new(),
        vec![],
    );
    let ps = mk_dev_a("ps", 1, amsgl, BTreeMap::new(), 6, BTreeMap::new(), vec![]);
    assemble(vec![ctl, arm, grip, ps])
}

/// Add an attacker holding `mcX(n)` to an application scenario.
pub fn with_mcx(sys: System, n: u64) -> System {
    with_attacker(sys, vec![Capability::mcx(n)])
}

/// Initial-configuration shape check: empty networks and ledgers, zero
/// counters, unique ids.
pub fn validate_initial(sys: &System) -> Result<(), ScenarioError> {
    if !sys.net.is_empty() {
        return Err(ScenarioError::BadArgs("nonempty network".into()));
    }
    for (i, a) in sys.agents.iter().enumerate() {
        if sys.agents[..i].iter().any(|b| b.id == a.id) {
            return Err(ScenarioError::DuplicateId(a.id.clone()));
        }
        if let Some(e) = a.endpoint_attrs() {
            if !e.w4_ack.is_empty()
                || !e.w4_rsp.is_empty()
                || !e.rsp_rcd.is_empty()
                || !e.rsp_snt.is_empty()
                || e.ctr != 0
                || !e.history.is_empty()
            {
                return Err(ScenarioError::BadArgs(format!(
                    "agent {:?} not in initial shape",
                    a.id
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Textual scenario-parameter syntax
// ---------------------------------------------------------------------------

/// A parsed scenario argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Nat(u64),
    Bool(bool),
    Str(String),
    AMsgs(Vec<AMsgItem>),
    Caps(Vec<Capability>),
    Acts(Vec<Act>),
    RMap(BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum STok {
    LParen,
    RParen,
    Comma,
    Semi,
    Word(String),
    Quoted(String),
}

fn s_tokenize(input: &str) -> Result<Vec<STok>, ScenarioError> {
    let mut toks = vec![];
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                toks.push(STok::LParen);
            }
            ')' => {
                chars.next();
                toks.push(STok::RParen);
            }
            ',' => {
                chars.next();
                toks.push(STok::Comma);
            }
            ';' => {
                chars.next();
                toks.push(STok::Semi);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err(ScenarioError::Parse("unterminated string".into())),
                    }
                }
                toks.push(STok::Quoted(s));
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || "(),;\"".contains(ch) {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                toks.push(STok::Word(s));
            }
        }
    }
    Ok(toks)
}

struct SParser {
    toks: Vec<STok>,
    pos: usize,
}

impl SParser {
    fn peek(&self) -> Option<&STok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<STok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn args(&mut self) -> Result<Vec<Value>, ScenarioError> {
        let mut out = vec![];
        if self.peek() == Some(&STok::RParen) {
            self.next();
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            match self.next() {
                Some(STok::Comma) => continue,
                Some(STok::RParen) => break,
                other => {
                    return Err(ScenarioError::Parse(format!(
                        "expected ',' or ')', found {other:?}"
                    )))
                }
            }
        }
        Ok(out)
    }

    /// A full argument: primaries joined by `;` (message lists) or by
    /// juxtaposition (capability and resource multisets).
    fn value(&mut self) -> Result<Value, ScenarioError> {
        let mut acc = self.primary()?;
        loop {
            match self.peek() {
                Some(STok::Semi) => {
                    self.next();
                    let rhs = self.primary()?;
                    acc = join_list(acc, rhs)?;
                }
                Some(STok::Word(_)) | Some(STok::Quoted(_)) => {
                    let rhs = self.primary()?;
                    acc = join_multiset(acc, rhs)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Value, ScenarioError> {
        match self.next() {
            Some(STok::Quoted(s)) => Ok(Value::Str(s)),
            Some(STok::Word(w)) => {
                if self.peek() == Some(&STok::LParen) {
                    self.next();
                    let args = self.args()?;
                    eval_ctor(&w, args)
                } else {
                    Ok(eval_bare(&w))
                }
            }
            other => Err(ScenarioError::Parse(format!(
                "expected a value, found {other:?}"
            ))),
        }
    }
}

fn join_list(a: Value, b: Value) -> Result<Value, ScenarioError> {
    match (as_amsgs(a), as_amsgs(b)) {
        (Ok(mut x), Ok(y)) => {
            x.extend(y);
            Ok(Value::AMsgs(x))
        }
        _ => Err(ScenarioError::Parse(
            "';' joins application message lists".into(),
        )),
    }
}

fn join_multiset(a: Value, b: Value) -> Result<Value, ScenarioError> {
    match (a, b) {
        (Value::Caps(mut x), Value::Caps(y)) => {
            x.extend(y);
            Ok(Value::Caps(x))
        }
        (Value::Acts(mut x), Value::Acts(y)) => {
            x.extend(y);
            Ok(Value::Acts(x))
        }
        (Value::RMap(mut x), Value::RMap(y)) => {
            x.extend(y);
            Ok(Value::RMap(x))
        }
        (a, b) => Err(ScenarioError::Parse(format!(
            "cannot juxtapose {a:?} and {b:?}"
        ))),
    }
}

fn eval_bare(word: &str) -> Value {
    if let Ok(n) = word.parse::<u64>() {
        return Value::Nat(n);
    }
    match word {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "mtR" => Value::RMap(BTreeMap::new()),
        "mtC" => Value::Caps(vec![]),
        "nilAM" => Value::AMsgs(vec![]),
        "drop" => Value::Caps(vec![Capability::drop()]),
        "boatHereAMsg" => Value::AMsgs(vec![boat_here_amsg()]),
        "caps-1" => Value::Caps(caps_level(1)),
        "caps-2" => Value::Caps(caps_level(2)),
        "caps-3" => Value::Caps(caps_level(3)),
        _ => Value::Str(word.to_string()),
    }
}

fn need(args: &[Value], n: usize, ctor: &str) -> Result<(), ScenarioError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ScenarioError::BadArgs(format!(
            "{ctor} expects {n} arguments, got {}",
            args.len()
        )))
    }
}

pub fn as_nat(v: &Value) -> Result<u64, ScenarioError> {
    match v {
        Value::Nat(n) => Ok(*n),
        other => Err(ScenarioError::BadArgs(format!(
            "expected a natural, got {other:?}"
        ))),
    }
}

pub fn as_bool(v: &Value) -> Result<bool, ScenarioError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(ScenarioError::BadArgs(format!(
            "expected a bool, got {other:?}"
        ))),
    }
}

pub fn as_str(v: &Value) -> Result<String, ScenarioError> {
    match v {
        Value::Str(s) => Ok(s.clone()),
        other => Err(ScenarioError::BadArgs(format!(
            "expected a string, got {other:?}"
        ))),
    }
}

pub fn as_amsgs(v: Value) -> Result<Vec<AMsgItem>, ScenarioError> {
    match v {
        Value::AMsgs(m) => Ok(m),
        other => Err(ScenarioError::BadArgs(format!(
            "expected an application message list, got {other:?}"
        ))),
    }
}

pub fn as_caps(v: Value) -> Result<Vec<Capability>, ScenarioError> {
    match v {
        Value::Caps(c) => Ok(c),
        other => Err(ScenarioError::BadArgs(format!(
            "expected a capability set, got {other:?}"
        ))),
    }
}

pub fn as_rmap(v: Value) -> Result<BTreeMap<String, String>, ScenarioError> {
    match v {
        Value::RMap(m) => Ok(m),
        other => Err(ScenarioError::BadArgs(format!(
            "expected a resource map, got {other:?}"
        ))),
    }
}

fn eval_ctor(name: &str, args: Vec<Value>) -> Result<Value, ScenarioError> {
    match name {
        "mkGetC" | "mkGetN" | "mkDelN" => {
            need(&args, 3, name)?;
            let (id, tgt, path) = (as_str(&args[0])?, as_str(&args[1])?, as_str(&args[2])?);
            let item = match name {
                "mkGetC" => mk_get_c(&id, &tgt, &path),
                "mkGetN" => mk_get_n(&id, &tgt, &path),
                _ => mk_del_n(&id, &tgt, &path),
            };
            Ok(Value::AMsgs(vec![item]))
        }
        "mkPutC" | "mkPutN" => {
            need(&args, 4, name)?;
            let (id, tgt, path, val) = (
                as_str(&args[0])?,
                as_str(&args[1])?,
                as_str(&args[2])?,
                as_str(&args[3])?,
            );
            let item = if name == "mkPutC" {
                mk_put_c(&id, &tgt, &path, &val)
            } else {
                mk_put_n(&id, &tgt, &path, &val)
            };
            Ok(Value::AMsgs(vec![item]))
        }
        "amsgd" => {
            need(&args, 1, name)?;
            Ok(Value::AMsgs(amsgd(as_nat(&args[0])?)))
        }
        "startAMsg" => {
            need(&args, 2, name)?;
            Ok(Value::AMsgs(vec![start_amsg(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
            )]))
        }
        "mkSigAMs" => {
            need(&args, 2, name)?;
            Ok(Value::AMsgs(mk_sig_ams(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
            )))
        }
        "mkGoAMs" => {
            need(&args, 1, name)?;
            Ok(Value::AMsgs(mk_go_ams(as_nat(&args[0])?)))
        }
        "rb" => {
            need(&args, 2, name)?;
            Ok(Value::RMap(rb(&as_str(&args[0])?, &as_str(&args[1])?)))
        }
        "act" => {
            need(&args, 3, name)?;
            Ok(Value::Acts(vec![Act::new(
                as_str(&args[0])?,
                as_str(&args[1])?,
                as_nat(&args[2])?,
            )]))
        }
        "mc" => {
            if args.len() < 2 {
                return Err(ScenarioError::BadArgs(
                    "mc expects at least tpat, spat".into(),
                ));
            }
            let tpat = as_str(&args[0])?;
            let spat = as_str(&args[1])?;
            let mut rest = &args[2..];
            // The three-argument form omits the flag and is reactive.
            let active = match rest.first() {
                Some(Value::Bool(b)) => {
                    rest = &rest[1..];
                    *b
                }
                _ => false,
            };
            let mut actions = vec![];
            for v in rest {
                match v {
                    Value::Acts(a) => actions.extend(a.clone()),
                    other => {
                        return Err(ScenarioError::BadArgs(format!(
                            "mc actions must be act(...) terms, got {other:?}"
                        )))
                    }
                }
            }
            Ok(Value::Caps(vec![Capability::mc(
                tpat, spat, active, actions,
            )]))
        }
        "delay" => {
            need(&args, 1, name)?;
            Ok(Value::Caps(vec![Capability::delay(as_nat(&args[0])?)]))
        }
        "replay" => {
            need(&args, 1, name)?;
            Ok(Value::Caps(vec![Capability::replay(as_nat(&args[0])?)]))
        }
        "divert" => {
            need(&args, 2, name)?;
            Ok(Value::Caps(vec![Capability::divert(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
            )]))
        }
        "undivert" => {
            need(&args, 2, name)?;
            Ok(Value::Caps(vec![Capability::undivert(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
            )]))
        }
        "redirect" => {
            need(&args, 2, name)?;
            Ok(Value::Caps(vec![Capability::redirect(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
            )]))
        }
        "unredirect" => {
            need(&args, 2, name)?;
            Ok(Value::Caps(vec![Capability::unredirect(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
            )]))
        }
        "mcX" => {
            need(&args, 1, name)?;
            Ok(Value::Caps(vec![Capability::mcx(as_nat(&args[0])?)]))
        }
        "caps2-2" => {
            need(&args, 1, name)?;
            Ok(Value::Caps(caps2_2(as_nat(&args[0])?)))
        }
        "caps3-3" => {
            need(&args, 1, name)?;
            Ok(Value::Caps(caps3_3(as_nat(&args[0])?)))
        }
        other => Err(ScenarioError::Parse(format!(
            "unknown constructor {other:?}"
        ))),
    }
}

/// The scenario registry: names and human-readable signatures.
pub fn scenario_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("iSys0", "iSys0"),
        ("iSys1", "iSys1"),
        ("iSys2", "iSys2"),
        ("iSys3a", "iSys3a"),
        ("iSys3r", "iSys3r"),
        ("raR1", "raR1(mqd, w4b, d, nso)"),
        ("iSysX", "iSysX(n, d, caps)"),
        ("iSysY", "iSysY(n, caps)"),
        ("iSySZ", "iSySZ(mqd, w4b)"),
        ("caFig1.2", "caFig1.2(mqd, w4b)"),
        ("caFig3", "caFig3(d, mqd, w4b)"),
        ("caFig4x", "caFig4x(n, mqd, w4b)"),
        ("caFig5x", "caFig5x(d, mqd, w4b)"),
        ("caFig6x", "caFig6x(d, mqd, w4b)"),
        ("caFig7x", "caFig7x(d, mqd, w4b)"),
        ("caFig7mod", "caFig7mod(mqd, w4b)"),
        ("brInit", "brInit"),
        ("brInit2", "brInit2(n)"),
        ("initRL", "initRL(pid, gid, aid, amsgl)"),
        ("tCS", "tCS(amsgl, rmap, caps)"),
        ("tCSS", "tCSS(amsgl, rmap1, rmap2, caps)"),
        ("CnS", "CnS(n, amsgl, rmap, mqd, w4ab)"),
        ("withMcx", "withMcx(scenario(...), n)"),
    ]
}

/// Build a named scenario from parsed argument values.
pub fn build_by_name(name: &str, args: Vec<Value>) -> Result<System, ScenarioError> {
    match name {
        "iSys0" => {
            need(&args, 0, name)?;
            Ok(i_sys0())
        }
        "iSys1" => {
            need(&args, 0, name)?;
            Ok(i_sys1())
        }
        "iSys2" => {
            need(&args, 0, name)?;
            Ok(i_sys2())
        }
        "iSys3a" => {
            need(&args, 0, name)?;
            Ok(i_sys3a())
        }
        "iSys3r" => {
            need(&args, 0, name)?;
            Ok(i_sys3r())
        }
        "raR1" => {
            need(&args, 4, name)?;
            Ok(ra_r1(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
                as_bool(&args[3])?,
            ))
        }
        "iSysX" => {
            need(&args, 3, name)?;
            let n = as_nat(&args[0])?;
            let d = as_nat(&args[1])?;
            let caps = as_caps(args[2].clone())?;
            Ok(i_sys_x(n, d, caps))
        }
        "iSysY" => {
            need(&args, 2, name)?;
            Ok(i_sys_y(as_nat(&args[0])?, as_caps(args[1].clone())?))
        }
        "iSySZ" => {
            need(&args, 2, name)?;
            Ok(i_sys_z(as_nat(&args[0])?, as_nat(&args[1])?))
        }
        "caFig1.2" => {
            need(&args, 2, name)?;
            Ok(ca_fig1_2(as_nat(&args[0])?, as_nat(&args[1])?))
        }
        "caFig3" => {
            need(&args, 3, name)?;
            Ok(ca_fig3(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
            ))
        }
        "caFig4x" => {
            need(&args, 3, name)?;
            Ok(ca_fig4x(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
            ))
        }
        "caFig5x" => {
            need(&args, 3, name)?;
            Ok(ca_fig5x(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
            ))
        }
        "caFig6x" => {
            need(&args, 3, name)?;
            Ok(ca_fig6x(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
            ))
        }
        "caFig7x" => {
            need(&args, 3, name)?;
            Ok(ca_fig7x(
                as_nat(&args[0])?,
                as_nat(&args[1])?,
                as_nat(&args[2])?,
            ))
        }
        "caFig7mod" => {
            need(&args, 2, name)?;
            Ok(ca_fig7mod(as_nat(&args[0])?, as_nat(&args[1])?))
        }
        "brInit" => {
            need(&args, 0, name)?;
            Ok(br_init())
        }
        "brInit2" => {
            need(&args, 1, name)?;
            Ok(br_init2(as_nat(&args[0])?))
        }
        "initRL" => {
            need(&args, 4, name)?;
            init_rl(
                &as_str(&args[0])?,
                &as_str(&args[1])?,
                &as_str(&args[2])?,
                as_amsgs(args[3].clone())?,
            )
        }
        "tCS" => {
            need(&args, 3, name)?;
            Ok(t_cs(
                as_amsgs(args[0].clone())?,
                as_rmap(args[1].clone())?,
                as_caps(args[2].clone())?,
            ))
        }
        "tCSS" => {
            need(&args, 4, name)?;
            Ok(t_css(
                as_amsgs(args[0].clone())?,
                as_rmap(args[1].clone())?,
                as_rmap(args[2].clone())?,
                as_caps(args[3].clone())?,
            ))
        }
        "CnS" => {
            need(&args, 5, name)?;
            Ok(cns(
                as_nat(&args[0])?,
                as_amsgs(args[1].clone())?,
                as_rmap(args[2].clone())?,
                as_nat(&args[3])?,
                as_nat(&args[4])?,
            ))
        }
        other => Err(ScenarioError::UnknownScenario(other.to_string())),
    }
}

/// Parse and build a scenario call such as `raR1(5,0,10,false)` or `iSys2`.
/// `withMcx(scenario(...), n)` layers an `mcX(n)` attacker on top.
pub fn build_scenario(call: &str) -> Result<System, ScenarioError> {
    let mut p = SParser {
        toks: s_tokenize(call)?,
        pos: 0,
    };
    let sys = parse_scenario_call(&mut p)?;
    if p.pos != p.toks.len() {
        return Err(ScenarioError::Parse(format!(
            "trailing input after scenario: {:?}",
            &p.toks[p.pos..]
        )));
    }
    Ok(sys)
}

fn parse_scenario_call(p: &mut SParser) -> Result<System, ScenarioError> {
    let name = match p.next() {
        Some(STok::Word(w)) => w,
        other => {
            return Err(ScenarioError::Parse(format!(
                "expected a scenario name, found {other:?}"
            )))
        }
    };
    if name == "withMcx" {
        if p.next() != Some(STok::LParen) {
            return Err(ScenarioError::Parse("withMcx expects arguments".into()));
        }
        let inner = parse_scenario_call(p)?;
        if p.next() != Some(STok::Comma) {
            return Err(ScenarioError::Parse(
                "withMcx expects a delay argument".into(),
            ));
        }
        let n = match p.next() {
            Some(STok::Word(w)) => w
                .parse::<u64>()
                .map_err(|_| ScenarioError::Parse("withMcx delay must be a natural".into()))?,
            other => {
                return Err(ScenarioError::Parse(format!(
                    "withMcx delay must be a natural, found {other:?}"
                )))
            }
        };
        if p.next() != Some(STok::RParen) {
            return Err(ScenarioError::Parse("unclosed withMcx call".into()));
        }
        return Ok(with_mcx(inner, n));
    }
    let args = if p.peek() == Some(&STok::LParen) {
        p.next();
        p.args()?
    } else {
        vec![]
    };
    build_by_name(&name, args)
}

/// Scenario-parameter file: `key = value` lines, `#` comments. Keys:
/// `scenario` (a name or full call) and optionally `args` (call arguments).
pub fn scenario_from_str(text: &str) -> Result<System, ScenarioError> {
    let mut scenario: Option<String> = None;
    let mut args: Option<String> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::Parse(format!(
                "expected key = value, found {line:?}"
            )));
        };
        match key.trim() {
            "scenario" => scenario = Some(value.trim().to_string()),
            "args" => args = Some(value.trim().to_string()),
            other => {
                return Err(ScenarioError::Parse(format!("unknown key {other:?}")));
            }
        }
    }
    let Some(mut call) = scenario else {
        return Err(ScenarioError::Parse("missing scenario key".into()));
    };
    if let Some(a) = args {
        call = format!("{call}({a})");
    }
    build_scenario(&call)
}
