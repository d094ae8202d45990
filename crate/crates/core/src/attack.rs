//! Attacker capability algebra and the attack transition rules: the generic
//! multi-capability `mc`, its derived forms, and the symbolic fan-out
//! capability `mcX` used by the application-level searches.

use crate::coap::{Label, Transition};
use crate::model::*;
use std::fmt;

/// One attack action: retarget/resource patterns plus an extra delay applied
/// to a transformed copy of the attacked message. Empty patterns leave the
/// corresponding field unchanged.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Act {
    pub tpat: String,
    pub spat: String,
    pub extra_delay: u64,
}

impl Act {
    pub fn new(tpat: impl Into<String>, spat: impl Into<String>, extra_delay: u64) -> Act {
        Act {
            tpat: tpat.into(),
            spat: spat.into(),
            extra_delay,
        }
    }
}

/// An attacker capability. Each one is single use.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capability {
    /// `mc(tpat, spat, active?, actions)`: applies to messages whose target
    /// and source match the patterns. Active capabilities remove the original
    /// message; reactive ones leave it in flight.
    Mc {
        tpat: String,
        spat: String,
        active: bool,
        actions: Vec<Act>,
    },
    /// Generic reactive fan-out over GET/PUT requests: copies the request to
    /// every plausible holder of the requested path, with `extra_delay` added
    /// and anytime delivery semantics.
    McX { extra_delay: u64 },
}

impl Capability {
    pub fn mc(
        tpat: impl Into<String>,
        spat: impl Into<String>,
        active: bool,
        actions: Vec<Act>,
    ) -> Capability {
        Capability::Mc {
            tpat: tpat.into(),
            spat: spat.into(),
            active,
            actions,
        }
    }

    /// Remove the target message from the network.
    pub fn drop() -> Capability {
        Capability::mc("", "", true, vec![])
    }

    /// Add `n` to the target message delay.
    pub fn delay(n: u64) -> Capability {
        Capability::mc("", "", true, vec![Act::new("", "", n)])
    }

    /// Reroute a message destined to `dst0` towards `dst1`.
    pub fn divert(dst0: &str, dst1: &str) -> Capability {
        Capability::mc(dst0, "", true, vec![Act::new(dst1, "", 0)])
    }

    /// Make a message from `src0` appear to come from `src1`.
    pub fn undivert(src0: &str, src1: &str) -> Capability {
        Capability::mc("", src0, true, vec![Act::new("", src1, 0)])
    }

    /// Transmit a copy of the target message after an extra delay of `n`;
    /// the original is delivered as expected.
    pub fn replay(n: u64) -> Capability {
        Capability::mc("", "", false, vec![Act::new("", "", n)])
    }

    /// Change the target of messages to `d0` so they go to `d1` instead.
    pub fn redirect(d0: &str, d1: &str) -> Capability {
        Capability::mc(d0, "", true, vec![Act::new(d1, "", 0)])
    }

    /// Mirror of `redirect` on the source: messages from `d1` appear to come
    /// from `d0`.
    pub fn unredirect(d0: &str, d1: &str) -> Capability {
        Capability::mc("", d1, true, vec![Act::new("", d0, 0)])
    }

    pub fn mcx(n: u64) -> Capability {
        Capability::McX { extra_delay: n }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capability::Mc {
                tpat,
                spat,
                active,
                actions,
            } => {
                write!(f, "mc({tpat:?},{spat:?},{active}")?;
                for a in actions {
                    write!(f, ",act({:?},{:?},{})", a.tpat, a.spat, a.extra_delay)?;
                }
                write!(f, ")")
            }
            Capability::McX { extra_delay } => write!(f, "mcX({extra_delay})"),
        }
    }
}

/// Pattern match for endpoint ids: empty pattern matches anything.
fn pmatch(value: &str, pat: &str) -> bool {
    pat.is_empty() || value == pat
}

fn set_tgt_src(msg: &Message, tpat: &str, spat: &str) -> Message {
    let mut out = msg.clone();
    if !tpat.is_empty() {
        out.tgt = tpat.into();
    }
    if !spat.is_empty() {
        out.src = spat.into();
    }
    out
}

/// One transformed copy of the attacked message per action.
pub fn apply_caps(dmsg: &DelayedMessage, actions: &[Act]) -> Vec<DelayedMessage> {
    actions
        .iter()
        .map(|a| DelayedMessage {
            msg: set_tgt_src(&dmsg.msg, &a.tpat, &a.spat),
            delay: dmsg.delay + a.extra_delay,
            anytime: dmsg.anytime,
        })
        .collect()
}

/// Apply one `mc` capability to a network-input message. `None` when the
/// patterns do not match (the rule does not fire). On a match, returns the
/// replacement messages; the attacked message always enters the knowledge
/// base and the capability is consumed by the caller.
pub fn do_attack(dmsg: &DelayedMessage, cap: &Capability) -> Option<Vec<DelayedMessage>> {
    let Capability::Mc {
        tpat,
        spat,
        active,
        actions,
    } = cap
    else {
        return None;
    };
    if !pmatch(&dmsg.msg.tgt, tpat) || !pmatch(&dmsg.msg.src, spat) {
        return None;
    }
    let mut replacement = apply_caps(dmsg, actions);
    if !active {
        replacement.push(dmsg.clone());
    }
    Some(replacement)
}

/// All instances of the `attack` rule: one transition per (input message,
/// applicable `mc` capability) pair. The attacked message leaves the network
/// input; replacements enter the output.
pub fn attack_transitions(sys: &System) -> Vec<Transition> {
    let Some((aid, attacker)) = sys.attacker() else {
        return vec![];
    };
    let aid = aid.to_string();
    let mut out = vec![];
    for (msg_idx, dmsg) in sys.net.input.iter().enumerate() {
        for (cap_idx, cap) in attacker.caps.iter().enumerate() {
            let Some(replacement) = do_attack(dmsg, cap) else {
                continue;
            };
            let mut next = sys.clone();
            next.net.input.remove(msg_idx);
            next.net.output.extend(replacement);
            let a = next.agent_mut(&aid).expect("attacker agent");
            if let AgentKind::Attacker(att) = &mut a.kind {
                att.kb.push(dmsg.clone());
                att.caps.remove(cap_idx);
            }
            out.push(Transition {
                label: Label::Attack {
                    cap: cap.to_string(),
                    msg: dmsg.to_string(),
                },
                next: next.canonical(),
            });
        }
    }
    out
}

/// Endpoints holding a resource at `path`, reaching through dialect wrappers.
/// The attacker cannot really see resource maps; this is search-space pruning.
fn resource_holders<'a>(sys: &'a System, path: &str) -> Vec<&'a str> {
    sys.agents
        .iter()
        .filter_map(|a| {
            a.endpoint_attrs()
                .filter(|e| e.rsrcs.contains_key(path))
                .map(|_| a.id.as_str())
        })
        .collect()
}

/// All instances of the `mcX` rule: for a plain GET/PUT request in the network
/// input, add an anytime copy targeted at each holder of the requested path.
/// The original stays in flight; the capability is consumed. For GET requests
/// the attacker also gains a reactive capability to re-source the spoofed
/// response so the requester will accept it.
pub fn mcx_transitions(sys: &System) -> Vec<Transition> {
    let Some((aid, attacker)) = sys.attacker() else {
        return vec![];
    };
    let aid = aid.to_string();
    let mut out = vec![];
    for dmsg in &sys.net.input {
        let Some(content) = dmsg.msg.content() else {
            continue; // dialected payloads are sealed
        };
        let method = match classify(content) {
            MsgClass::Request(m @ (Method::Get | Method::Put)) => m,
            _ => continue,
        };
        let Some(path) = content.path() else {
            continue;
        };
        for (cap_idx, cap) in attacker.caps.iter().enumerate() {
            let Capability::McX { extra_delay } = cap else {
                continue;
            };
            for holder in resource_holders(sys, path) {
                if holder == dmsg.msg.src {
                    continue; // never synthesize a self-addressed message
                }
                let mut copy = dmsg.msg.clone();
                copy.tgt = holder.to_string();
                let copy_src = copy.src.clone();
                let mut next = sys.clone();
                next.net
                    .output
                    .push(DelayedMessage::anytime(copy, dmsg.delay + extra_delay));
                let a = next.agent_mut(&aid).expect("attacker agent");
                if let AgentKind::Attacker(att) = &mut a.kind {
                    att.kb.push(dmsg.clone());
                    att.caps.remove(cap_idx);
                    if method == Method::Get {
                        att.caps.push(Capability::mc(
                            copy_src,
                            holder,
                            false,
                            vec![Act::new(&dmsg.msg.src, &dmsg.msg.tgt, 0)],
                        ));
                    }
                }
                out.push(Transition {
                    label: Label::McX {
                        msg: dmsg.to_string(),
                        new_tgt: holder.to_string(),
                    },
                    next: next.canonical(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn msg(tgt: &str, src: &str, method: Method, path: &str) -> Message {
        Message::plain(
            tgt,
            src,
            Content {
                head: Head {
                    msg_type: MsgType::Non,
                    code: method.code().into(),
                    mid: format!("{src}-m0"),
                },
                token: format!("{src}-t1"),
                options: vec![Opt::uri_path(path)],
                body: Body::Empty,
            },
        )
    }

    fn sys_with(net_input: Vec<DelayedMessage>, caps: Vec<Capability>) -> System {
        let config: BTreeMap<String, u64> = [("msgSD".to_string(), 2)].into_iter().collect();
        let mk = |id: &str, path: Option<(&str, &str)>| {
            let mut e = EndpointAttrs {
                config: config.clone(),
                ..EndpointAttrs::default()
            };
            if let Some((p, v)) = path {
                e.rsrcs.insert(p.into(), v.into());
            }
            Agent::endpoint(id, e)
        };
        System {
            agents: vec![
                mk("dev0", None),
                mk("dev1", Some(("door", "unlock"))),
                mk("dev2", Some(("door", "lock"))),
                Agent::attacker("eve", AttackerAttrs { kb: vec![], caps }),
            ],
            net: Network {
                input: net_input,
                output: vec![],
            },
            log: Some(vec![]),
        }
        .canonical()
    }

    #[test]
    fn derived_caps_expand_to_mc_forms() {
        assert_eq!(Capability::drop(), Capability::mc("", "", true, vec![]));
        assert_eq!(
            Capability::replay(10),
            Capability::mc("", "", false, vec![Act::new("", "", 10)])
        );
        assert_eq!(
            Capability::delay(5),
            Capability::mc("", "", true, vec![Act::new("", "", 5)])
        );
        assert_eq!(
            Capability::redirect("dev1", "dev2"),
            Capability::mc("dev1", "", true, vec![Act::new("dev2", "", 0)])
        );
        assert_eq!(
            Capability::unredirect("dev1", "dev2"),
            Capability::mc("", "dev2", true, vec![Act::new("", "dev1", 0)])
        );
    }

    #[test]
    fn drop_removes_and_records() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "door"), 2);
        let replacement = do_attack(&dmsg, &Capability::drop()).unwrap();
        assert!(replacement.is_empty());
    }

    #[test]
    fn replay_keeps_original_and_adds_delayed_copy() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "door"), 2);
        let mut replacement = do_attack(&dmsg, &Capability::replay(10)).unwrap();
        replacement.sort();
        assert_eq!(replacement.len(), 2);
        assert_eq!(replacement[0].delay, 2);
        assert_eq!(replacement[1].delay, 12);
        assert_eq!(replacement[0].msg, replacement[1].msg);
    }

    #[test]
    fn active_retarget_replaces_original() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Get, "door"), 2);
        let cap = Capability::mc("dev1", "dev0", true, vec![Act::new("dev2", "dev0", 0)]);
        let replacement = do_attack(&dmsg, &cap).unwrap();
        assert_eq!(replacement.len(), 1);
        assert_eq!(replacement[0].msg.tgt, "dev2");
        assert_eq!(replacement[0].msg.src, "dev0");
        assert_eq!(replacement[0].delay, 2);
    }

    #[test]
    fn apply_caps_makes_one_copy_per_action() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "sig"), 2);
        assert!(apply_caps(&dmsg, &[]).is_empty());
        let one = apply_caps(&dmsg, &[Act::new("", "", 5)]);
        assert_eq!(one[0].delay, 7);
        let two = apply_caps(&dmsg, &[Act::new("dev2", "", 0), Act::new("dev3", "", 0)]);
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].msg.tgt, "dev2");
        assert_eq!(two[1].msg.tgt, "dev3");
    }

    #[test]
    fn nonmatching_pattern_does_not_fire() {
        let dmsg = DelayedMessage::at(msg("dev2", "dev0", Method::Get, "door"), 2);
        let cap = Capability::mc("dev1", "", true, vec![]);
        assert!(do_attack(&dmsg, &cap).is_none());
    }

    #[test]
    fn attack_transitions_consume_capability_and_grow_kb() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "door"), 2);
        let sys = sys_with(vec![dmsg.clone()], vec![Capability::drop()]);
        let ts = attack_transitions(&sys);
        assert_eq!(ts.len(), 1);
        let next = &ts[0].next;
        assert!(next.net.input.is_empty());
        assert!(next.net.output.is_empty());
        let (_, att) = next.attacker().unwrap();
        assert_eq!(att.kb, vec![dmsg]);
        assert!(att.caps.is_empty());

        let quiet = sys_with(vec![], vec![]);
        assert!(attack_transitions(&quiet).is_empty());
    }

    #[test]
    fn reactive_attack_keeps_original_in_flight() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "door"), 2);
        let cap = Capability::mc("dev1", "dev0", false, vec![Act::new("dev2", "", 0)]);
        let sys = sys_with(vec![dmsg.clone()], vec![cap]);
        let ts = attack_transitions(&sys);
        assert_eq!(ts.len(), 1);
        let next = &ts[0].next;
        let mut delivered: Vec<_> = next.net.output.iter().map(|d| d.msg.tgt.clone()).collect();
        delivered.sort();
        assert_eq!(delivered, vec!["dev1", "dev2"]);
    }

    #[test]
    fn mcx_fans_out_to_resource_holders() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Get, "door"), 2);
        let sys = sys_with(vec![dmsg], vec![Capability::mcx(20)]);
        let ts = mcx_transitions(&sys);
        // Both dev1 and dev2 hold a "door" resource.
        assert_eq!(ts.len(), 2);
        for t in &ts {
            let next = &t.next;
            assert_eq!(next.net.input.len(), 1); // original left in place
            let copy = &next.net.output[0];
            assert!(copy.anytime);
            assert_eq!(copy.delay, 22);
            let (_, att) = next.attacker().unwrap();
            // The mcX capability is consumed; a response re-source capability
            // is granted for the GET case.
            assert_eq!(att.caps.len(), 1);
            assert!(matches!(&att.caps[0], Capability::Mc { active: false, .. }));
            assert_eq!(att.kb.len(), 1);
        }
    }

    #[test]
    fn mcx_ignores_non_requests() {
        let ack = Message::plain(
            "dev0",
            "dev1",
            Content {
                head: Head {
                    msg_type: MsgType::Ack,
                    code: String::new(),
                    mid: "m0".into(),
                },
                token: String::new(),
                options: vec![],
                body: Body::Empty,
            },
        );
        let sys = sys_with(vec![DelayedMessage::at(ack, 2)], vec![Capability::mcx(0)]);
        assert!(mcx_transitions(&sys).is_empty());
    }

    #[test]
    fn mcx_put_copy_is_anytime_and_grants_nothing() {
        let dmsg = DelayedMessage::at(msg("dev1", "dev0", Method::Put, "door"), 0);
        let sys = sys_with(vec![dmsg], vec![Capability::mcx(0)]);
        let ts = mcx_transitions(&sys);
        assert_eq!(ts.len(), 2);
        let next = &ts[0].next;
        let copy = &next.net.output[0];
        assert!(copy.anytime);
        assert_eq!(copy.delay, 0);
        let (_, att) = next.attacker().unwrap();
        assert!(att.caps.is_empty());
    }
}
