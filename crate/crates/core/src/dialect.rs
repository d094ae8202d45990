//! Protocol-dialect wrapper: the symbolic lingo codec (`g`, `f1`, `f2`),
//! per-link seed/index bookkeeping, the `ddevsend`/`ddevrcv` rules and the
//! `D`/`UD`/`UDC` configuration transforms.
//!
//! The codec stays at the symbolic level: `f1` seals content together with
//! the generator output and lingo index; `f2` recovers it exactly when handed
//! the same generator output and a matching cleartext index. Nothing else in
//! the engine can open the sealed bits.

use crate::applayer;
use crate::coap::{self, Label, Transition};
use crate::model::*;
use std::collections::BTreeMap;
use thiserror::Error;

/// Decoding failed: wrong seed, wrong index, or tampered bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dialected content failed to decode")]
pub struct DecodeFailure;

/// Errors from the configuration transforms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialectError {
    #[error("dialect transform requires an initial configuration (nonempty network)")]
    NotInitial,
}

/// The `ix`-th pseudo-random string of length `k` generated from `seed`.
/// Deterministic and injective in `(seed, ix)` at the symbolic level.
pub fn g(seed: &str, k: u64, ix: u64) -> String {
    format!("g({seed},{k},{ix})")
}

/// Obfuscate/encode `content` under the generator output `grand`.
pub fn f1(grand: &str, content: &Content, ix: u64) -> DcBits {
    DcBits {
        grand: grand.to_string(),
        content: content.clone(),
        sealed_ix: ix,
    }
}

/// De-obfuscate/decode. Succeeds only for the generator output and index the
/// bits were sealed with; any mismatch is recognised as ill-formed.
pub fn f2(grand: &str, dcontent: &DContent) -> Result<Content, DecodeFailure> {
    if dcontent.bits.grand == grand && dcontent.bits.sealed_ix == dcontent.ix {
        Ok(dcontent.bits.content.clone())
    } else {
        Err(DecodeFailure)
    }
}

/// Shared wrapper attributes: fresh index maps, empty used sets, and the
/// default generated-string size.
pub const DEFAULT_RAND_SIZE: u64 = 128;

impl DialectWrapper {
    /// Encode an outbound plain message for its target link, advancing the
    /// link's index counter. `None` when no seed is known for the target.
    pub fn apply_dialect(&mut self, dmsg: &DelayedMessage) -> Option<DelayedMessage> {
        let content = dmsg.msg.content()?.clone();
        let tgt = dmsg.msg.tgt.clone();
        let seed = self.seed_to.get(&tgt)?.clone();
        let ix = *self.ix_ctr.get(&tgt)?;
        let grand = g(&seed, self.rand_size, ix);
        let bits = f1(&grand, &content, ix);
        *self.ix_ctr.get_mut(&tgt).expect("ix counter") += 1;
        Some(DelayedMessage {
            msg: Message {
                tgt,
                src: dmsg.msg.src.clone(),
                payload: Payload::Dialected(DContent { bits, ix }),
            },
            delay: dmsg.delay,
            anytime: dmsg.anytime,
        })
    }

    /// Decode an inbound dialected message. Single-use lingo indices: a
    /// previously seen index from this source is dropped without decoding.
    /// Decode failures are dropped silently and do not burn the index.
    pub fn decode_dialect(&mut self, msg: &Message) -> Option<Message> {
        let Payload::Dialected(dc) = &msg.payload else {
            return None;
        };
        let src = &msg.src;
        if self.used.get(src).is_some_and(|s| s.contains(&dc.ix)) {
            return None;
        }
        let seed = self.seed_fr.get(src)?;
        let grand = g(seed, self.rand_size, dc.ix);
        match f2(&grand, dc) {
            Ok(content) => {
                self.used.entry(src.clone()).or_default().insert(dc.ix);
                Some(Message {
                    tgt: msg.tgt.clone(),
                    src: src.clone(),
                    payload: Payload::Plain(content),
                })
            }
            Err(DecodeFailure) => None,
        }
    }
}

/// The `ddevsend` rule: dialect one message from a wrapper's local network
/// (either side) and emit it into the global network input; the remaining
/// local messages shift to the local output side. One transition per message.
pub fn ddevsend_transitions(sys: &System, epid: &str) -> Vec<Transition> {
    let Some(agent) = sys.agent(epid) else {
        return vec![];
    };
    let Some(wrapper) = agent.as_wrapper() else {
        return vec![];
    };
    let local: Vec<DelayedMessage> = wrapper
        .local_net
        .input
        .iter()
        .chain(&wrapper.local_net.output)
        .cloned()
        .collect();
    let mut out = vec![];
    for (idx, picked) in local.iter().enumerate() {
        if picked.msg.src != epid {
            continue;
        }
        let mut next = sys.clone();
        let AgentKind::Dialect(w) = &mut next.agent_mut(epid).expect("wrapper").kind else {
            unreachable!()
        };
        let Some(encoded) = w.apply_dialect(picked) else {
            continue; // unknown partner: the wrapper drops the message
        };
        let mut rest = local.clone();
        rest.remove(idx);
        w.local_net.input.clear();
        w.local_net.output = rest;
        let ix = match &encoded.msg.payload {
            Payload::Dialected(dc) => dc.ix,
            Payload::Plain(_) => unreachable!(),
        };
        next.net.input.push(encoded);
        out.push(Transition {
            label: Label::DDevSend {
                epid: epid.into(),
                ix,
            },
            next: next.canonical(),
        });
    }
    out
}

/// The network rule applied to a wrapper's local network: move one message
/// from the local input to the local output.
pub fn local_net_moves(sys: &System, epid: &str) -> Vec<Transition> {
    let Some(agent) = sys.agent(epid) else {
        return vec![];
    };
    let Some(wrapper) = agent.as_wrapper() else {
        return vec![];
    };
    let mut out = vec![];
    for idx in 0..wrapper.local_net.input.len() {
        let mut next = sys.clone();
        let AgentKind::Dialect(w) = &mut next.agent_mut(epid).expect("wrapper").kind else {
            unreachable!()
        };
        let dmsg = w.local_net.input.remove(idx);
        let label = Label::NetMove {
            msg: format!("{dmsg} (local {epid})"),
        };
        w.local_net.output.push(dmsg);
        out.push(Transition {
            label,
            next: next.canonical(),
        });
    }
    out
}

/// The `ddevrcv` rule: deliver the `out_idx`-th global output message to the
/// wrapper that owns its target. The decoded message is processed by the
/// inner endpoint immediately; responses land in the local network and log
/// items go to the global log. Drops (used index, decode failure, plain
/// payload) still consume the message.
pub fn ddevrcv(sys: &System, out_idx: usize) -> Option<Transition> {
    let dmsg = sys.net.output.get(out_idx)?;
    if !dmsg.deliverable() {
        return None;
    }
    let tgt = dmsg.msg.tgt.clone();
    sys.agent(&tgt)?.as_wrapper()?;
    let msg = dmsg.msg.clone();
    let mut next = sys.clone();
    next.net.output.remove(out_idx);
    let AgentKind::Dialect(w) = &mut next.agent_mut(&tgt).expect("wrapper").kind else {
        unreachable!()
    };
    let outcome;
    let mut to_log = vec![];
    match w.decode_dialect(&msg) {
        Some(plain) => {
            let result = coap::rcv_msg(&tgt, &mut w.inner, &plain);
            if result.accepted {
                let inner = std::mem::take(&mut w.inner);
                w.inner = applayer::do_app(&tgt, &plain, inner);
            }
            w.local_net.input.extend(result.to_send);
            to_log = result.to_log;
            outcome = "delivered";
        }
        None => {
            outcome = match &msg.payload {
                Payload::Dialected(dc)
                    if w.used.get(&msg.src).is_some_and(|s| s.contains(&dc.ix)) =>
                {
                    "dropped-used-ix"
                }
                Payload::Dialected(_) => "dropped-decode-failure",
                Payload::Plain(_) => "dropped-plain",
            };
        }
    }
    next.append_log(to_log);
    Some(Transition {
        label: Label::DDevRcv {
            epid: tgt,
            outcome: outcome.into(),
        },
        next: next.canonical(),
    })
}

fn link_seed(prefix: &str, to: &str, from: &str) -> String {
    format!("{prefix}{to}{from}")
}

/// Wrap one endpoint agent with dialect attributes for the given peers.
fn wrap_agent(id: &str, inner: EndpointAttrs, peers: &[String], prefix: &str) -> Agent {
    let mut seed_to = BTreeMap::new();
    let mut seed_fr = BTreeMap::new();
    let mut ix_ctr = BTreeMap::new();
    for peer in peers {
        if peer == id {
            continue;
        }
        seed_to.insert(peer.clone(), link_seed(prefix, peer, id));
        seed_fr.insert(peer.clone(), link_seed(prefix, id, peer));
        ix_ctr.insert(peer.clone(), 0);
    }
    Agent {
        id: id.to_string(),
        kind: AgentKind::Dialect(DialectWrapper {
            inner,
            local_net: Network::default(),
            seed_to,
            seed_fr,
            ix_ctr,
            used: BTreeMap::new(),
            rand_size: DEFAULT_RAND_SIZE,
        }),
    }
}

/// The dialect transform `D`: wrap every non-attacker agent of an initial
/// configuration with a dialect meta-agent carrying pairwise link seeds.
/// Attackers and the log pass through unchanged.
pub fn dialect(sys: &System) -> Result<System, DialectError> {
    if !sys.net.is_empty() {
        return Err(DialectError::NotInitial);
    }
    let peers: Vec<String> = sys
        .agents
        .iter()
        .filter(|a| a.endpoint_attrs().is_some())
        .map(|a| a.id.clone())
        .collect();
    let agents = sys
        .agents
        .iter()
        .map(|a| match &a.kind {
            AgentKind::Endpoint(e) => wrap_agent(&a.id, e.clone(), &peers, "xxxx"),
            _ => a.clone(),
        })
        .collect();
    Ok(System {
        agents,
        net: sys.net.clone(),
        log: sys.log.clone(),
    }
    .canonical())
}

/// The inverse transform `UD`/`UDC`: extract the wrapped endpoints and pass
/// every other configuration element through. Meaningful when no dialected
/// messages are pending.
pub fn undialect(sys: &System) -> System {
    let agents = sys
        .agents
        .iter()
        .map(|a| match &a.kind {
            AgentKind::Dialect(w) => Agent::endpoint(a.id.clone(), w.inner.clone()),
            _ => a.clone(),
        })
        .collect();
    System {
        agents,
        net: sys.net.clone(),
        log: sys.log.clone(),
    }
    .canonical()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn content(tok: &str) -> Content {
        Content {
            head: Head {
                msg_type: MsgType::Non,
                code: "0.03".into(),
                mid: "dev0-x-m0".into(),
            },
            token: tok.into(),
            options: vec![Opt::uri_path("door")],
            body: Body::text("lock"),
        }
    }

    #[test]
    fn generator_is_deterministic_and_sensitive() {
        assert_eq!(g("s", 128, 3), g("s", 128, 3));
        assert_ne!(g("s", 128, 3), g("s", 128, 4));
        assert_ne!(g("s1", 128, 3), g("s2", 128, 3));
    }

    #[test]
    fn codec_round_trip_law() {
        let c = content("t");
        let grand = g("seed", 128, 7);
        let dc = DContent {
            bits: f1(&grand, &c, 7),
            ix: 7,
        };
        assert_eq!(f2(&grand, &dc), Ok(c));
    }

    #[test]
    fn decode_with_wrong_seed_fails() {
        let c = content("t");
        let grand = g("seed", 128, 7);
        let dc = DContent {
            bits: f1(&grand, &c, 7),
            ix: 7,
        };
        assert_eq!(f2(&g("other", 128, 7), &dc), Err(DecodeFailure));
    }

    #[test]
    fn decode_with_shifted_index_fails() {
        let c = content("t");
        let grand = g("seed", 128, 7);
        let dc = DContent {
            bits: f1(&grand, &c, 7),
            ix: 8,
        };
        assert_eq!(f2(&g("seed", 128, 8), &dc), Err(DecodeFailure));
    }

    fn wrapper_for(id: &str, peers: &[&str]) -> DialectWrapper {
        let peers: Vec<String> = peers.iter().map(|s| s.to_string()).collect();
        match wrap_agent(id, EndpointAttrs::default(), &peers, "xxxx").kind {
            AgentKind::Dialect(w) => w,
            _ => unreachable!(),
        }
    }

    #[test]
    fn apply_dialect_advances_index_and_keeps_delay() {
        let mut w = wrapper_for("dev0", &["dev0", "dev1"]);
        assert_eq!(w.seed_to.get("dev1").unwrap(), "xxxxdev1dev0");
        assert_eq!(w.seed_fr.get("dev1").unwrap(), "xxxxdev0dev1");
        let dmsg = DelayedMessage::at(Message::plain("dev1", "dev0", content("t")), 2);
        let first = w.apply_dialect(&dmsg).unwrap();
        assert_eq!(first.delay, 2);
        let Payload::Dialected(dc0) = &first.msg.payload else {
            panic!()
        };
        assert_eq!(dc0.ix, 0);
        let second = w.apply_dialect(&dmsg).unwrap();
        let Payload::Dialected(dc1) = &second.msg.payload else {
            panic!()
        };
        assert_eq!(dc1.ix, 1);
    }

    #[test]
    fn honest_link_decodes_and_burns_index() {
        let mut sender = wrapper_for("dev0", &["dev0", "dev1"]);
        let mut receiver = wrapper_for("dev1", &["dev0", "dev1"]);
        let dmsg = DelayedMessage::at(Message::plain("dev1", "dev0", content("t")), 2);
        let encoded = sender.apply_dialect(&dmsg).unwrap();
        let decoded = receiver.decode_dialect(&encoded.msg).expect("fresh index");
        assert_eq!(decoded, dmsg.msg);
        assert!(receiver.used.get("dev0").unwrap().contains(&0));
        // A replayed copy of the same encoding is dropped.
        assert!(receiver.decode_dialect(&encoded.msg).is_none());
    }

    #[test]
    fn redirected_message_is_dropped_by_third_party() {
        let mut sender = wrapper_for("dev0", &["dev0", "dev1", "dev2"]);
        let mut dev2 = wrapper_for("dev2", &["dev0", "dev1", "dev2"]);
        let dmsg = DelayedMessage::at(Message::plain("dev1", "dev0", content("t")), 2);
        let mut encoded = sender.apply_dialect(&dmsg).unwrap();
        encoded.msg.tgt = "dev2".into(); // attacker retargets the sealed bits
        assert!(dev2.decode_dialect(&encoded.msg).is_none());
        // Failed decodes do not burn the index.
        assert!(!dev2.used.contains_key("dev0"));
    }

    #[test]
    fn dialect_requires_initial_configuration() {
        let mut sys = System::default();
        sys.net.input.push(DelayedMessage::at(
            Message::plain("a", "b", content("t")),
            1,
        ));
        assert_eq!(dialect(&sys), Err(DialectError::NotInitial));
    }

    #[test]
    fn dialect_wraps_endpoints_and_leaves_attacker() {
        let sys = System {
            agents: vec![
                Agent::endpoint("dev0", EndpointAttrs::default()),
                Agent::endpoint("dev1", EndpointAttrs::default()),
                Agent::attacker("eve", AttackerAttrs::default()),
            ],
            net: Network::default(),
            log: Some(vec![]),
        }
        .canonical();
        let d = dialect(&sys).unwrap();
        let w0 = d.agent("dev0").unwrap().as_wrapper().unwrap();
        assert_eq!(w0.rand_size, 128);
        assert_eq!(w0.seed_to.get("dev1").unwrap(), "xxxxdev1dev0");
        assert_eq!(w0.seed_fr.get("dev1").unwrap(), "xxxxdev0dev1");
        assert_eq!(w0.ix_ctr.get("dev1"), Some(&0));
        assert!(w0.used.is_empty());
        assert!(d.agent("eve").unwrap().as_attacker().is_some());
        assert_eq!(undialect(&d), sys);
    }
}
