//! Application rule engine: message patterns, conditional actions, and the
//! builtin bridge-control and pick-n-place rule sets.

use crate::model::*;
use std::collections::BTreeMap;

/// A pattern element: a variable or a string constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pat {
    Var(String),
    Const(String),
}

pub fn v(name: &str) -> Pat {
    Pat::Var(name.into())
}

pub fn k(s: &str) -> Pat {
    Pat::Const(s.into())
}

/// Message pattern: requests match on source/method/path/value, responses on
/// source, token-embedded application id, success class, and value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MPat {
    Req {
        src: Pat,
        meth: Pat,
        path: Pat,
        val: Pat,
    },
    Rsp {
        src: Pat,
        amid: Pat,
        success: bool,
        val: Pat,
    },
}

/// Condition over pattern bindings, the application knowledge base, and the
/// CoAP resource map. An empty conjunction is true; an empty disjunction is
/// false.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cond {
    Eq(Pat, Pat),
    Neq(Pat, Pat),
    Conj(Vec<Cond>),
    Disj(Vec<Cond>),
}

impl Cond {
    pub fn always() -> Cond {
        Cond::Conj(vec![])
    }
}

/// Action of a fired rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    /// Queue an application message on the endpoint's send list.
    Send {
        amid: Pat,
        tgt: Pat,
        msg_type: Pat,
        meth: Pat,
        path: Pat,
        val: Pat,
    },
    /// Update the application knowledge base.
    Set { var: Pat, val: Pat },
    /// Update the CoAP resource map.
    Put { var: Pat, val: Pat },
}

/// A conditional action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CAct {
    pub cond: Cond,
    pub acts: Vec<Action>,
}

/// An application rule `ar(mpat, cacts)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ARule {
    pub mpat: MPat,
    pub cacts: Vec<CAct>,
}

type Bindings = BTreeMap<String, String>;

fn match_pat(pat: &Pat, value: &str, bindings: &mut Bindings) -> bool {
    match pat {
        Pat::Const(c) => c == value,
        Pat::Var(name) => match bindings.get(name) {
            Some(bound) => bound == value,
            None => {
                bindings.insert(name.clone(), value.to_string());
                true
            }
        },
    }
}

/// Match a message against a pattern, returning the variable bindings.
/// Requests with an empty body skip the value pattern.
pub fn match_pattern(mpat: &MPat, msg: &Message) -> Option<Bindings> {
    let content = msg.content()?;
    let mut bindings = Bindings::new();
    match (mpat, classify(content)) {
        (
            MPat::Req {
                src,
                meth,
                path,
                val,
            },
            MsgClass::Request(method),
        ) => {
            if !match_pat(src, &msg.src, &mut bindings) {
                return None;
            }
            if !match_pat(meth, method.as_str(), &mut bindings) {
                return None;
            }
            if !match_pat(path, content.path()?, &mut bindings) {
                return None;
            }
            if let Some(text) = content.body.as_text() {
                if !match_pat(val, text, &mut bindings) {
                    return None;
                }
            }
            Some(bindings)
        }
        (
            MPat::Rsp {
                src,
                amid,
                success,
                val,
            },
            MsgClass::Response(ok),
        ) => {
            if ok != *success {
                return None;
            }
            if !match_pat(src, &msg.src, &mut bindings) {
                return None;
            }
            match amid {
                Pat::Const(id) => {
                    if !token_matches(&content.token, id) {
                        return None;
                    }
                }
                Pat::Var(name) => {
                    bindings.insert(name.clone(), content.token.clone());
                }
            }
            if let Some(text) = content.body.as_text() {
                if !match_pat(val, text, &mut bindings) {
                    return None;
                }
            }
            Some(bindings)
        }
        _ => None,
    }
}

/// Resolve a pattern element: bindings first, then the knowledge base, then
/// the resource map. Unresolvable variables yield `None`.
fn resolve(pat: &Pat, bindings: &Bindings, e: &EndpointAttrs) -> Option<String> {
    match pat {
        Pat::Const(c) => Some(c.clone()),
        Pat::Var(name) => bindings
            .get(name)
            .cloned()
            .or_else(|| e.app.as_ref().and_then(|a| a.akb.get(name).cloned()))
            .or_else(|| e.rsrcs.get(name).cloned()),
    }
}

/// Evaluate a condition; unresolvable variables make it false.
pub fn eval_cond(cond: &Cond, bindings: &Bindings, e: &EndpointAttrs) -> bool {
    match cond {
        Cond::Eq(a, b) => match (resolve(a, bindings, e), resolve(b, bindings, e)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
        Cond::Neq(a, b) => match (resolve(a, bindings, e), resolve(b, bindings, e)) {
            (Some(x), Some(y)) => x != y,
            _ => false,
        },
        Cond::Conj(cs) => cs.iter().all(|c| eval_cond(c, bindings, e)),
        Cond::Disj(cs) => cs.iter().any(|c| eval_cond(c, bindings, e)),
    }
}

/// Execute one action against the endpoint attributes. Actions whose
/// arguments do not resolve are skipped.
pub fn exec_action(action: &Action, bindings: &Bindings, e: &mut EndpointAttrs) {
    match action {
        Action::Send {
            amid,
            tgt,
            msg_type,
            meth,
            path,
            val,
        } => {
            let fields = (
                resolve(amid, bindings, e),
                resolve(tgt, bindings, e),
                resolve(msg_type, bindings, e).and_then(|t| MsgType::parse(&t)),
                resolve(meth, bindings, e).and_then(|m| Method::parse(&m)),
                resolve(path, bindings, e),
                resolve(val, bindings, e),
            );
            if let (Some(amid), Some(tgt), Some(msg_type), Some(meth), Some(path), Some(val)) =
                fields
            {
                let body = if val.is_empty() {
                    Body::Empty
                } else {
                    Body::Text(val)
                };
                e.send_reqs.push(AMsgItem::Msg(AppMsg {
                    app_id: amid,
                    tgt,
                    msg_type,
                    method: meth,
                    path,
                    qparams: String::new(),
                    body,
                }));
            }
        }
        Action::Set { var, val } => {
            if let (Some(name), Some(value)) =
                (resolve(var, bindings, e), resolve(val, bindings, e))
            {
                if let Some(app) = &mut e.app {
                    app.akb.insert(name, value);
                }
            }
        }
        Action::Put { var, val } => {
            if let (Some(name), Some(value)) =
                (resolve(var, bindings, e), resolve(val, bindings, e))
            {
                e.rsrcs.insert(name, value);
            }
        }
    }
}

/// Run the application layer over one received message: every rule whose
/// pattern matches executes the conditional actions whose condition holds.
/// Identity for endpoints without an application configuration.
pub fn do_app(_epid: &str, msg: &Message, mut e: EndpointAttrs) -> EndpointAttrs {
    let Some(app) = &e.app else {
        return e;
    };
    let rules = app.rules.clone();
    for rule in &rules {
        let Some(bindings) = match_pattern(&rule.mpat, msg) else {
            continue;
        };
        for cact in &rule.cacts {
            if eval_cond(&cact.cond, &bindings, &e) {
                for act in &cact.acts {
                    exec_action(act, &bindings, &mut e);
                }
            }
        }
    }
    e
}

fn send(amid: &str, tgt: Pat, meth: &str, path: &str, val: Pat) -> Action {
    Action::Send {
        amid: k(amid),
        tgt,
        msg_type: k("NON"),
        meth: k(meth),
        path: k(path),
        val,
    }
}

fn rule(mpat: MPat, cond: Cond, acts: Vec<Action>) -> ARule {
    ARule {
        mpat,
        cacts: vec![CAct { cond, acts }],
    }
}

fn rsp(src: Pat, amid: &str) -> MPat {
    MPat::Rsp {
        src,
        amid: k(amid),
        success: true,
        val: k(""),
    }
}

/// Bridge-controller rules: close the gate when a boat arrives, open the
/// bridge once the gate is closed, let the boat pass, then close the bridge
/// and reopen the gate.
pub fn bridge_rules() -> Vec<ARule> {
    vec![
        // rcvBoatArr
        rule(
            MPat::Req {
                src: k("bs"),
                meth: k("PUT"),
                path: k("boat"),
                val: k("here"),
            },
            Cond::Eq(v("status"), k("idle")),
            vec![
                send("GateCL", k("ga"), "PUT", "gate", k("close")),
                Action::Set {
                    var: k("status"),
                    val: k("working"),
                },
            ],
        ),
        // rcvGateClose
        rule(
            rsp(k("ga"), "GateCL"),
            Cond::always(),
            vec![send("BridgeOp", k("br"), "PUT", "bridge", k("open"))],
        ),
        // rcvBridgeOpen
        rule(
            rsp(k("br"), "BridgeOp"),
            Cond::always(),
            vec![send("BSPass", k("bs"), "PUT", "boat", k("pass"))],
        ),
        // rcvBoatPass
        rule(
            rsp(k("bs"), "BSPass"),
            Cond::always(),
            vec![send("BridgeCl", k("br"), "PUT", "bridge", k("close"))],
        ),
        // rcvBridgeClose
        rule(
            rsp(k("br"), "BridgeCl"),
            Cond::always(),
            vec![send("GateOp", k("ga"), "PUT", "gate", k("open"))],
        ),
        // rcvGateOpen
        rule(
            rsp(k("ga"), "GateOp"),
            Cond::always(),
            vec![Action::Set {
                var: k("status"),
                val: k("idle"),
            }],
        ),
    ]
}

/// Pick-n-place controller rules. Arm and gripper identities and the two arm
/// positions are resolved through the knowledge base entries `myarm`,
/// `mygrip`, `goNI` and `goI`, so one rule set serves any instance.
pub fn pnp_rules() -> Vec<ARule> {
    vec![
        // rcvStart
        rule(
            MPat::Req {
                src: v("src"),
                meth: k("PUT"),
                path: k("start"),
                val: v("startval"),
            },
            Cond::Eq(v("status"), k("idle")),
            vec![
                send("ArmGoNI", v("myarm"), "PUT", "arm", v("goNI")),
                Action::Set {
                    var: k("status"),
                    val: k("working"),
                },
                Action::Set {
                    var: k("source"),
                    val: v("src"),
                },
            ],
        ),
        // rcvAtNI
        rule(
            rsp(v("s"), "ArmGoNI"),
            Cond::always(),
            vec![send("GripCl", v("mygrip"), "PUT", "grip", k("close"))],
        ),
        // rcvGrCl
        rule(
            rsp(v("s"), "GripCl"),
            Cond::always(),
            vec![send("ArmGoI", v("myarm"), "PUT", "arm", v("goI"))],
        ),
        // rcvAtI
        rule(
            rsp(v("s"), "ArmGoI"),
            Cond::always(),
            vec![send("GripOp", v("mygrip"), "PUT", "grip", k("open"))],
        ),
        // rcvGrOp
        rule(
            rsp(v("s"), "GripOp"),
            Cond::always(),
            vec![send("PnPDone", v("source"), "PUT", "done", k("done"))],
        ),
        // rcvPnPDone
        rule(
            rsp(v("s"), "PnPDone"),
            Cond::always(),
            vec![Action::Set {
                var: k("status"),
                val: k("idle"),
            }],
        ),
    ]
}

/// Builtin rule sets addressable by name.
pub fn rules_by_name(name: &str) -> Option<Vec<ARule>> {
    match name {
        "bridge-rules" => Some(bridge_rules()),
        "pnp-rules" => Some(pnp_rules()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn put_req(src: &str, path: &str, val: &str) -> Message {
        Message::plain(
            "bctl",
            src,
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: "0.03".into(),
                    mid: format!("{src}-x-m0"),
                },
                token: format!("{src}-x-t1"),
                options: vec![Opt::uri_path(path)],
                body: Body::text(val),
            },
        )
    }

    fn rsp_msg(src: &str, amid: &str, code: &str, val: &str) -> Message {
        Message::plain(
            "bctl",
            src,
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: code.into(),
                    mid: format!("{src}-rsp-m0"),
                },
                token: format!("bctl-{amid}-t3"),
                options: vec![],
                body: if val.is_empty() {
                    Body::Empty
                } else {
                    Body::text(val)
                },
            },
        )
    }

    fn bctl_attrs() -> EndpointAttrs {
        EndpointAttrs {
            app: Some(AppConf {
                akb: [("status".to_string(), "idle".to_string())].into(),
                rules: bridge_rules(),
            }),
            ..EndpointAttrs::default()
        }
    }

    #[test]
    fn boat_arrival_matches_request_pattern() {
        let pat = MPat::Req {
            src: k("bs"),
            meth: k("PUT"),
            path: k("boat"),
            val: k("here"),
        };
        assert!(match_pattern(&pat, &put_req("bs", "boat", "here")).is_some());
        assert!(match_pattern(&pat, &put_req("ga", "boat", "here")).is_none());
        assert!(match_pattern(&pat, &put_req("bs", "boat", "gone")).is_none());
    }

    #[test]
    fn response_pattern_matches_on_token_and_success() {
        let pat = rsp(k("ga"), "GateCL");
        assert!(match_pattern(&pat, &rsp_msg("ga", "GateCL", "2.04", "")).is_some());
        assert!(match_pattern(&pat, &rsp_msg("ga", "GateOp", "2.04", "")).is_none());
        assert!(match_pattern(&pat, &rsp_msg("ga", "GateCL", "4.04", "")).is_none());
        assert!(match_pattern(&pat, &rsp_msg("br", "GateCL", "2.04", "")).is_none());
    }

    #[test]
    fn ack_only_message_matches_no_rule() {
        let ack = Message::plain(
            "bctl",
            "ga",
            Content {
                head: Head {
                    msg_type: MsgType::Ack,
                    code: String::new(),
                    mid: "m1".into(),
                },
                token: "bctl-GateCL-t3".into(),
                options: vec![],
                body: Body::Empty,
            },
        );
        for rule in bridge_rules() {
            assert!(match_pattern(&rule.mpat, &ack).is_none());
        }
    }

    #[test]
    fn conditions_resolve_bindings_then_akb_then_rsrcs() {
        let mut e = bctl_attrs();
        e.rsrcs.insert("boat".into(), "none".into());
        let empty = Bindings::new();
        assert!(eval_cond(&Cond::Eq(v("status"), k("idle")), &empty, &e));
        assert!(eval_cond(&Cond::Eq(v("boat"), k("none")), &empty, &e));
        assert!(!eval_cond(&Cond::Eq(v("missing"), k("x")), &empty, &e));
        assert!(eval_cond(&Cond::always(), &empty, &e));
        assert!(!eval_cond(&Cond::Disj(vec![]), &empty, &e));
        let mut b = Bindings::new();
        b.insert("status".into(), "shadowed".into());
        assert!(!eval_cond(&Cond::Eq(v("status"), k("idle")), &b, &e));
    }

    #[test]
    fn bridge_controller_reacts_to_boat_arrival() {
        let e = bctl_attrs();
        let out = do_app("bctl", &put_req("bs", "boat", "here"), e);
        assert_eq!(
            out.app.as_ref().unwrap().akb.get("status"),
            Some(&"working".to_string())
        );
        assert_eq!(out.send_reqs.len(), 1);
        let AMsgItem::Msg(am) = &out.send_reqs[0] else {
            panic!()
        };
        assert_eq!(am.app_id, "GateCL");
        assert_eq!(am.tgt, "ga");
        assert_eq!(am.path, "gate");
        assert_eq!(am.body, Body::text("close"));
    }

    #[test]
    fn working_controller_ignores_second_boat() {
        let mut e = bctl_attrs();
        e.app
            .as_mut()
            .unwrap()
            .akb
            .insert("status".into(), "working".into());
        let snapshot = e.clone();
        let out = do_app("bctl", &put_req("bs", "boat", "here"), e);
        assert_eq!(out, snapshot);
    }

    #[test]
    fn endpoint_without_app_layer_is_untouched() {
        let e = EndpointAttrs::default();
        let out = do_app("ga", &put_req("bs", "boat", "here"), e.clone());
        assert_eq!(out, e);
    }

    #[test]
    fn pnp_start_resolves_arm_through_akb() {
        let e = EndpointAttrs {
            app: Some(AppConf {
                akb: [
                    ("status", "idle"),
                    ("myarm", "arm"),
                    ("mygrip", "gr"),
                    ("goNI", "goR"),
                    ("goI", "goL"),
                ]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
                rules: pnp_rules(),
            }),
            ..EndpointAttrs::default()
        };
        let mut start = put_req("ps", "start", "go");
        start.tgt = "pctl".into();
        let out = do_app("pctl", &start, e);
        let AMsgItem::Msg(am) = &out.send_reqs[0] else {
            panic!()
        };
        assert_eq!(am.tgt, "arm");
        assert_eq!(am.body, Body::text("goR"));
        let akb = &out.app.as_ref().unwrap().akb;
        assert_eq!(akb.get("status"), Some(&"working".to_string()));
        assert_eq!(akb.get("source"), Some(&"ps".to_string()));
    }

    #[test]
    fn rule_application_is_order_independent_for_builtin_sets() {
        // The builtin sets fire at most one rule per message and rules touch
        // disjoint keys, so any permutation gives the same result.
        let messages = vec![
            put_req("bs", "boat", "here"),
            rsp_msg("ga", "GateCL", "2.04", ""),
            rsp_msg("br", "BridgeOp", "2.04", ""),
            rsp_msg("bs", "BSPass", "2.04", ""),
            rsp_msg("br", "BridgeCl", "2.04", ""),
            rsp_msg("ga", "GateOp", "2.04", ""),
        ];
        let base = bctl_attrs();
        for msg in &messages {
            let reference = do_app("bctl", msg, base.clone());
            let mut rules = bridge_rules();
            rules.reverse();
            let mut permuted = base.clone();
            permuted.app.as_mut().unwrap().rules = rules;
            let mut out = do_app("bctl", msg, permuted);
            out.app.as_mut().unwrap().rules = bridge_rules();
            assert_eq!(out, reference, "order-dependent result for {msg}");
        }
    }
}
