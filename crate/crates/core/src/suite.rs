//! The built-in experiment suite: every search of the replication study as a
//! data table, shared by the command-line `suite` runner and the acceptance
//! tests. Scenario and goal columns use the same textual syntax as the CLI,
//! so each line is runnable verbatim.

use crate::props::parse_goal;
use crate::scenarios::build_scenario;
use crate::search::{search, SearchError, SearchMode, SearchQuery};

/// Expected outcome of a suite entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// Exact solution count, optionally with a reference visited count that
    /// must be matched within ±25%.
    Solutions(usize, Option<usize>),
    /// At least one solution (an attack exists).
    AttackExists,
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub set: &'static str,
    pub id: String,
    pub scenario: &'static str,
    pub goal: &'static str,
    pub mode: SearchMode,
    pub caps_exhausted: bool,
    pub dialected: bool,
    pub bound: Option<usize>,
    pub expect: Expect,
}

pub const SUITE_SETS: &[&str] = &["attacks", "reactive", "dialect", "blocking", "applications"];

/// Result of running one suite entry.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub solutions: usize,
    pub visited: usize,
    pub explored: usize,
    pub pass: bool,
}

/// Run a single entry. `debug_invariants` turns on the per-state shape
/// assertions; `workers` sizes the expansion pool.
pub fn run_entry(
    entry: &SuiteEntry,
    debug_invariants: bool,
    workers: usize,
) -> Result<SuiteOutcome, String> {
    let sys = build_scenario(entry.scenario).map_err(|e| e.to_string())?;
    let goal = parse_goal(entry.goal).map_err(|e| e.to_string())?;
    let mut q = SearchQuery::new(sys, entry.mode, goal);
    q.require_caps_exhausted = entry.caps_exhausted;
    q.dialected = entry.dialected;
    q.bound = entry.bound;
    q.debug_invariants = debug_invariants;
    q.workers = workers;
    let r = match search(&q) {
        Ok(r) => r,
        Err(e @ SearchError::StateCapExceeded { .. }) => return Err(e.to_string()),
        Err(e) => return Err(e.to_string()),
    };
    let pass = match entry.expect {
        Expect::Solutions(n, visited) => {
            r.solutions.len() == n
                && visited.is_none_or(|v| {
                    let tol = v / 4;
                    r.visited.abs_diff(v) <= tol
                })
        }
        Expect::AttackExists => !r.solutions.is_empty(),
    };
    Ok(SuiteOutcome {
        solutions: r.solutions.len(),
        visited: r.visited,
        explored: r.explored,
        pass,
    })
}

/// One line of the suite report; stable across runs.
pub fn report_line(entry: &SuiteEntry, outcome: &SuiteOutcome) -> String {
    let expect = match entry.expect {
        Expect::Solutions(n, Some(v)) => format!("{n} solutions, ~{v} visited"),
        Expect::Solutions(n, None) => format!("{n} solutions"),
        Expect::AttackExists => "attack exists".into(),
    };
    format!(
        "{} {:11} {:32} solutions={:<5} visited={:<6} expected [{}]",
        if outcome.pass { "PASS" } else { "FAIL" },
        entry.set,
        entry.id,
        outcome.solutions,
        outcome.visited,
        expect
    )
}

fn final_(
    set: &'static str,
    id: &str,
    scenario: &'static str,
    goal: &'static str,
    expect: Expect,
) -> SuiteEntry {
    SuiteEntry {
        set,
        id: id.to_string(),
        scenario,
        goal,
        mode: SearchMode::Final,
        caps_exhausted: false,
        dialected: false,
        bound: None,
        expect,
    }
}

fn plus(
    set: &'static str,
    id: &str,
    scenario: &'static str,
    goal: &'static str,
    expect: Expect,
) -> SuiteEntry {
    SuiteEntry {
        mode: SearchMode::ReachablePlus,
        ..final_(set, id, scenario, goal, expect)
    }
}

fn exhausted(mut e: SuiteEntry) -> SuiteEntry {
    e.caps_exhausted = true;
    e
}

fn dialected(mut e: SuiteEntry) -> SuiteEntry {
    e.dialected = true;
    e.id = format!("{} (dialected)", e.id);
    e
}

const SPOOF_GOAL: &str = "and (checkRsrc dev1 door unlock) (hasGetRsp dev0 dev1 getN lock)";
const R1_ORDERED: &str = "and (checkRsrc dev1 door lock) (subLIL [rcvP dev1 door unlock ; rcvP dev1 door lock ; rcvP dev1 signal \"\"])";
const FIG12_REQ_DROP: &str = "and (not (hasRspTSnt dev1 dev0 putN)) (rspPend dev0 dev1 putN)";
const FIG12_RSP_DROP: &str =
    "and (hasRspTSnt dev1 dev0 putN) (checkRsrc dev1 door lock) (rspPend dev0 dev1 putN)";
const FIG12_NO_DROP: &str = "and (hasRspTSnt dev1 dev0 putN) (hasRspTRcd dev0 dev1 putN)";
const FIG3_SUCCESS: &str = "and (checkRsrc dev1 door unlock) (rspTSntBefore dev1 dev0 putNS putND) (rspPend dev0 dev1 putND)";
const FIG3_FAIL: &str = "and (checkRsrc dev1 door unlock) (rspTSntBefore dev1 dev0 putND putNS) (hasRspTRcd dev0 dev1 putND)";
const FIG4_SUCCESS: &str = "and (checkRsrc dev1 door unlock) (hasRspTSnt dev1 dev0 putC) (hasRspTSnt dev1 dev0 putN) (rspTSntBefore dev1 dev0 putC putN) (rspTSntBefore dev1 dev0 putN putC) (hasRspTRcd dev0 dev1 putN) (hasRspTRcd dev0 dev1 putC)";
const FIG4_FAIL: &str = "and (checkRsrc dev1 door lock) (hasRspTSnt dev1 dev0 putC) (hasRspTSnt dev1 dev0 putN) (rspTSntBefore dev1 dev0 putC putN) (hasRspTRcd dev0 dev1 putN) (hasRspTRcd dev0 dev1 putC)";
const FIG5_INTENDED: &str = "and (hasRspTSnt dev1 dev0 putNU) (not (hasRspTSnt dev1 dev0 putNL)) (checkRsrc dev1 door unlock) (hasRspTRcd dev0 dev1 putNL)";
const FIG5_ALT: &str = "and (hasRspTSnt dev1 dev0 putNU) (hasRspTSnt dev1 dev0 putNL) (rspTSntBefore dev1 dev0 putNL putNU) (checkRsrc dev1 door unlock) (hasRspTRcd dev0 dev1 putNL)";
const FIG6_INTENDED: &str = "and (hasRspTSnt dev1 dev0 getN0) (hasRspTSnt dev1 dev0 putNU) (rspTSntBefore dev1 dev0 getN0 putNU) (checkRsrc dev1 door unlock) (not (hasRspTSnt dev1 dev0 getN1)) (hasGetRsp dev0 dev1 getN1 lock)";
const FIG6_ALT: &str = "and (hasRspTSnt dev1 dev0 getN0) (hasRspTSnt dev1 dev0 putNU) (rspTSntBefore dev1 dev0 getN0 putNU) (checkRsrc dev1 door unlock) (not (hasRspTSnt dev1 dev0 getN1)) (hasGetRsp dev0 dev1 getN0 lock) (rspPend dev0 dev1 getN1) (rspPend dev0 dev1 putNU)";
const FIG7_GOAL: &str = "and (hasRspTSnt dev1 dev0 getN0) (not (hasRspTSnt dev1 dev0 getN1)) (hasGetRsp dev0 dev1 getN1 lock)";
const FIG7MOD_GOAL: &str = "and (not (hasRspTSnt dev1 dev0 getN0)) (hasRspTSnt dev2 dev0 getN0) (checkRsrc dev1 door unlock) (hasGetRsp dev0 dev1 getN0 lock)";

macro_rules! pnp1 {
    ($d:literal) => {
        concat!(
            "withMcx(initRL(pctl,gr,arm,startAMsg(pctl,PUTS)), ",
            $d,
            ")"
        )
    };
}
macro_rules! pnp2 {
    ($d:literal) => {
        concat!(
            "withMcx(initRL(pctl,gr,arm,startAMsg(pctl,PUTS) ; amsgd(40) ; startAMsg(pctl,PUTS)), ",
            $d,
            ")"
        )
    };
}

/// The whole experiment table.
pub fn suite() -> Vec<SuiteEntry> {
    use Expect::*;
    let mut entries = vec![
        // Two-endpoint door rounds and GET spoofing.
        SuiteEntry {
            bound: Some(1),
            ..final_(
                "attacks",
                "iSys0 unlock",
                "iSys0",
                "checkRsrc dev1 door unlock",
                Solutions(0, None),
            )
        },
        SuiteEntry {
            bound: Some(1),
            ..final_(
                "attacks",
                "iSys1 drop unlock",
                "iSys1",
                "checkRsrc dev1 door unlock",
                Solutions(0, None),
            )
        },
        final_(
            "attacks",
            "iSys2 replay ordering",
            "iSys2",
            "subLIL [rcvP dev1 door lock ; rcvP dev1 door unlock]",
            Solutions(2, None),
        ),
        final_("attacks", "iSys3a spoof", "iSys3a", SPOOF_GOAL, Solutions(4, Some(33))),
        final_("attacks", "iSys3r spoof", "iSys3r", SPOOF_GOAL, Solutions(4, Some(109))),
        // Reactive attack experiments.
        final_(
            "reactive",
            "raR1 relock",
            "raR1(5,0,10,false)",
            "checkRsrc dev1 door lock",
            Solutions(2, Some(101)),
        ),
        final_(
            "reactive",
            "raR1 relock before signal",
            "raR1(5,0,10,true)",
            R1_ORDERED,
            Solutions(2, Some(231)),
        ),
        final_(
            "reactive",
            "raR1 short delay",
            "raR1(5,0,5,false)",
            "checkRsrc dev1 door lock",
            Solutions(0, None),
        ),
        final_(
            "reactive",
            "raR1 short delay ordered",
            "raR1(5,0,5,true)",
            R1_ORDERED,
            Solutions(0, None),
        ),
        final_(
            "reactive",
            "raR1 long delay ordered",
            "raR1(5,0,15,true)",
            R1_ORDERED,
            Solutions(0, None),
        ),
        plus(
            "reactive",
            "iSysX caps-1 overlap",
            "iSysX(3,0,caps-1)",
            "epswrbCountGT sig on 1",
            Solutions(132, Some(767)),
        ),
        plus(
            "reactive",
            "iSysX caps-2 triple overlap",
            "iSysX(3,0,caps-2)",
            "epswrbCountGT sig on 2",
            Solutions(182, Some(721)),
        ),
        plus(
            "reactive",
            "iSysX caps-2 ordering",
            "iSysX(3,0,caps-2)",
            "subLIL [rcvP dev1 sig on ; rcvP dev2 sig on ; rcvP dev1 sig off]",
            Solutions(342, Some(3598)),
        ),
        plus(
            "reactive",
            "iSysX caps-2 double ordering",
            "iSysX(3,0,caps-2)",
            "and (subLIL [rcvP dev1 sig on ; rcvP dev2 sig on ; rcvP dev1 sig off]) (subLIL [rcvP dev2 sig on ; rcvP dev3 sig on ; rcvP dev2 sig off])",
            Solutions(62, Some(3594)),
        ),
        final_(
            "reactive",
            "iSysY two twins concurrent",
            "iSysY(2,caps2-2(0))",
            "and (subLIL [rcvP dev3 sig \"\" ; rcvP dev4 sig \"\"]) (subLIL [rcvP dev3 sig \"\" ; rcvP dev2 sig \"\"])",
            Solutions(16, Some(534)),
        ),
        final_(
            "reactive",
            "iSysY two twins delayed",
            "iSysY(2,caps2-2(15))",
            "and (subLIL [rcvP dev3 sig \"\" ; rcvP dev4 sig \"\"]) (subLIL [rcvP dev2 sig \"\" ; rcvP dev3 sig \"\"])",
            Solutions(4, Some(179)),
        ),
        final_(
            "reactive",
            "iSysY three twins concurrent",
            "iSysY(3,caps3-3(0))",
            "and (subLIL [rcvP dev4 sig \"\" ; rcvP dev5 sig \"\" ; rcvP dev6 sig \"\"]) (subLIL [rcvP dev1 sig \"\" ; rcvP dev4 sig \"\" ; rcvP dev2 sig \"\"]) (subLIL [rcvP dev2 sig \"\" ; rcvP dev5 sig \"\" ; rcvP dev3 sig \"\" ; rcvP dev6 sig \"\"])",
            Solutions(8, Some(2845)),
        ),
        final_(
            "reactive",
            "iSysY three twins delayed",
            "iSysY(3,caps3-3(15))",
            "and (subLIL [rcvP dev4 sig \"\" ; rcvP dev5 sig \"\" ; rcvP dev6 sig \"\"]) (subLIL [rcvP dev3 sig \"\" ; rcvP dev4 sig \"\"])",
            Solutions(8, Some(683)),
        ),
        final_(
            "reactive",
            "iSySZ spoofed GET",
            "iSySZ(5,0)",
            "and (hasGetRsp dev0 dev1 getN0 lock) (checkRsrc dev1 door unlock)",
            Solutions(4, Some(109)),
        ),
        // Dialect protection for the reactive attacks.
        dialected(final_(
            "dialect",
            "raR1 relock",
            "raR1(5,0,10,false)",
            "checkRsrc dev1 door lock",
            Solutions(0, Some(121)),
        )),
        dialected(plus(
            "dialect",
            "iSysX caps-1 overlap",
            "iSysX(3,0,caps-1)",
            "epswrbCountGT sig on 1",
            Solutions(0, Some(553)),
        )),
    ];

    // Selective blocking, delay and mismatch vulnerability scenarios.
    let blocking: Vec<SuiteEntry> = vec![
        exhausted(final_(
            "blocking",
            "fig1 request drop",
            "caFig1.2(5,0)",
            FIG12_REQ_DROP,
            Solutions(2, Some(7)),
        )),
        exhausted(final_(
            "blocking",
            "fig1 resource unchanged",
            "caFig1.2(5,0)",
            "checkRsrc dev1 door unlocked",
            Solutions(2, Some(7)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig1 request drop",
            "caFig1.2(5,0)",
            FIG12_REQ_DROP,
            Solutions(2, Some(9)),
        ))),
        dialected(exhausted(final_(
            "blocking",
            "fig1 resource unchanged",
            "caFig1.2(5,0)",
            "checkRsrc dev1 door unlocked",
            Solutions(2, Some(9)),
        ))),
        exhausted(final_(
            "blocking",
            "fig2 response drop",
            "caFig1.2(5,0)",
            FIG12_RSP_DROP,
            Solutions(2, Some(13)),
        )),
        exhausted(final_(
            "blocking",
            "fig1/2 no drop",
            "caFig1.2(5,0)",
            FIG12_NO_DROP,
            Solutions(0, None),
        )),
        exhausted(final_(
            "blocking",
            "fig3 delay request",
            "caFig3(15,5,0)",
            FIG3_SUCCESS,
            Solutions(4, Some(330)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig3 delay request",
            "caFig3(15,5,0)",
            FIG3_SUCCESS,
            Solutions(4, Some(496)),
        ))),
        exhausted(final_(
            "blocking",
            "fig3 failed attack",
            "caFig3(15,5,0)",
            FIG3_FAIL,
            Solutions(4, None),
        )),
        exhausted(final_(
            "blocking",
            "fig4 reorder",
            "caFig4x(10,5,0)",
            FIG4_SUCCESS,
            Solutions(8, Some(2600)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig4 reorder",
            "caFig4x(10,5,0)",
            FIG4_SUCCESS,
            Solutions(16, Some(10167)),
        ))),
        exhausted(final_(
            "blocking",
            "fig4 failed attack",
            "caFig4x(10,5,0)",
            FIG4_FAIL,
            Solutions(45, Some(2586)),
        )),
        exhausted(final_(
            "blocking",
            "fig5 intended",
            "caFig5x(10,5,0)",
            FIG5_INTENDED,
            Solutions(0, None),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig5 intended",
            "caFig5x(10,5,0)",
            FIG5_INTENDED,
            Solutions(0, None),
        ))),
        exhausted(final_(
            "blocking",
            "fig5 alternative",
            "caFig5x(10,5,0)",
            FIG5_ALT,
            Solutions(4, Some(330)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig5 alternative",
            "caFig5x(10,5,0)",
            FIG5_ALT,
            Solutions(4, Some(499)),
        ))),
        exhausted(final_(
            "blocking",
            "fig6 intended",
            "caFig6x(10,5,0)",
            FIG6_INTENDED,
            Solutions(0, None),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig6 intended",
            "caFig6x(10,5,0)",
            FIG6_INTENDED,
            Solutions(0, None),
        ))),
        exhausted(final_(
            "blocking",
            "fig6 alternative",
            "caFig6x(10,5,0)",
            FIG6_ALT,
            Solutions(18, Some(2742)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig6 alternative",
            "caFig6x(10,5,0)",
            FIG6_ALT,
            Solutions(18, Some(4675)),
        ))),
        exhausted(final_(
            "blocking",
            "fig7 token reuse",
            "caFig7x(10,5,0)",
            FIG7_GOAL,
            Solutions(0, None),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig7 token reuse",
            "caFig7x(10,5,0)",
            FIG7_GOAL,
            Solutions(0, None),
        ))),
        exhausted(final_(
            "blocking",
            "fig7mod two servers",
            "caFig7mod(5,0)",
            FIG7MOD_GOAL,
            Solutions(4, Some(33)),
        )),
        dialected(exhausted(final_(
            "blocking",
            "fig7mod two servers",
            "caFig7mod(5,0)",
            FIG7MOD_GOAL,
            Solutions(0, Some(21)),
        ))),
    ];
    entries.extend(blocking);

    // Application-level invariants: movable bridge and pick-n-place.
    let bridge_goals: [(&'static str, &'static str); 4] = [
        ("bclIdle", "bclIdleInv bctl br ga"),
        ("gateNCl", "gateNClInv bctl br ga"),
        ("brNCl", "brNClInv bctl br ga"),
        ("boatPass", "boatPassInv bctl bs br ga"),
    ];
    for (name, goal) in bridge_goals {
        entries.push(plus(
            "applications",
            &format!("bridge {name} one round"),
            "brInit",
            goal,
            Expect::Solutions(0, None),
        ));
        entries.push(plus(
            "applications",
            &format!("bridge {name} two rounds"),
            "brInit2(40)",
            goal,
            Expect::Solutions(0, None),
        ));
        entries.push(dialected(plus(
            "applications",
            &format!("bridge {name} mcX(20)"),
            "withMcx(brInit, 20)",
            goal,
            Expect::Solutions(0, None),
        )));
    }
    entries.push(plus(
        "applications",
        "bridge bclIdle mcX(20)",
        "withMcx(brInit, 20)",
        "bclIdleInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge bclIdle two rounds mcX(40)",
        "withMcx(brInit2(40), 40)",
        "bclIdleInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge brNCl mcX(20)",
        "withMcx(brInit, 20)",
        "brNClInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge brNCl two rounds mcX(20)",
        "withMcx(brInit2(40), 20)",
        "brNClInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge gateNCl mcX(20)",
        "withMcx(brInit, 20)",
        "gateNClInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge gateNCl two rounds mcX(20)",
        "withMcx(brInit2(40), 20)",
        "gateNClInv bctl br ga",
        Expect::AttackExists,
    ));
    entries.push(plus(
        "applications",
        "bridge boatPass mcX(20)",
        "withMcx(brInit, 20)",
        "boatPassInv bctl bs br ga",
        Expect::Solutions(0, None),
    ));
    entries.push(plus(
        "applications",
        "bridge boatPass mcX(40)",
        "withMcx(brInit, 40)",
        "boatPassInv bctl bs br ga",
        Expect::Solutions(0, None),
    ));
    entries.push(plus(
        "applications",
        "bridge boatPass two rounds mcX(20)",
        "withMcx(brInit2(40), 20)",
        "boatPassInv bctl bs br ga",
        Expect::AttackExists,
    ));

    let pnp_goals: [(&'static str, &'static str); 5] = [
        ("pnpIdle", "pnpIdleInv pctl gr arm goL"),
        ("armGoingI", "armGoingIInv pctl gr arm goL"),
        ("armGoingNI", "armGoingNIInv pctl gr arm goR"),
        ("gripClosing", "gripClosingInv pctl gr arm goR"),
        ("gripOpening", "gripOpeningInv pctl gr arm goL"),
    ];
    for (name, goal) in pnp_goals {
        entries.push(plus(
            "applications",
            &format!("pnp {name} one round"),
            "initRL(pctl,gr,arm,startAMsg(pctl,PUTS))",
            goal,
            Expect::Solutions(0, None),
        ));
        entries.push(dialected(plus(
            "applications",
            &format!("pnp {name} mcX(20)"),
            pnp1!("20"),
            goal,
            Expect::Solutions(0, None),
        )));
    }
    let pnp_cells: [(&'static str, &'static str, &'static str, Expect); 15] = [
        (
            "pnp pnpIdle mcX(20)",
            pnp1!("20"),
            "pnpIdleInv pctl gr arm goL",
            Expect::AttackExists,
        ),
        (
            "pnp pnpIdle two rounds mcX(20)",
            pnp2!("20"),
            "pnpIdleInv pctl gr arm goL",
            Expect::AttackExists,
        ),
        (
            "pnp armGoingI mcX(20)",
            pnp1!("20"),
            "armGoingIInv pctl gr arm goL",
            Expect::Solutions(0, None),
        ),
        (
            "pnp armGoingI mcX(40)",
            pnp1!("40"),
            "armGoingIInv pctl gr arm goL",
            Expect::Solutions(0, None),
        ),
        (
            "pnp armGoingI two rounds mcX(20)",
            pnp2!("20"),
            "armGoingIInv pctl gr arm goL",
            Expect::AttackExists,
        ),
        (
            "pnp armGoingNI mcX(0)",
            pnp1!("0"),
            "armGoingNIInv pctl gr arm goR",
            Expect::Solutions(0, None),
        ),
        (
            "pnp armGoingNI mcX(20)",
            pnp1!("20"),
            "armGoingNIInv pctl gr arm goR",
            Expect::Solutions(0, None),
        ),
        (
            "pnp armGoingNI mcX(40)",
            pnp1!("40"),
            "armGoingNIInv pctl gr arm goR",
            Expect::Solutions(0, None),
        ),
        (
            "pnp armGoingNI two rounds mcX(20)",
            pnp2!("20"),
            "armGoingNIInv pctl gr arm goR",
            Expect::AttackExists,
        ),
        (
            "pnp gripClosing mcX(20)",
            pnp1!("20"),
            "gripClosingInv pctl gr arm goR",
            Expect::Solutions(0, None),
        ),
        (
            "pnp gripClosing mcX(40)",
            pnp1!("40"),
            "gripClosingInv pctl gr arm goR",
            Expect::Solutions(0, None),
        ),
        (
            "pnp gripClosing two rounds mcX(20)",
            pnp2!("20"),
            "gripClosingInv pctl gr arm goR",
            Expect::AttackExists,
        ),
        (
            "pnp gripOpening mcX(20)",
            pnp1!("20"),
            "gripOpeningInv pctl gr arm goL",
            Expect::Solutions(0, None),
        ),
        (
            "pnp gripOpening mcX(40)",
            pnp1!("40"),
            "gripOpeningInv pctl gr arm goL",
            Expect::Solutions(0, None),
        ),
        (
            "pnp gripOpening two rounds mcX(20)",
            pnp2!("20"),
            "gripOpeningInv pctl gr arm goL",
            Expect::AttackExists,
        ),
    ];
    for (id, scenario, goal, expect) in pnp_cells {
        entries.push(plus("applications", id, scenario, goal, expect));
    }
    entries
}

/// Entries of one named set, or all of them for "all".
pub fn suite_set(name: &str) -> Vec<SuiteEntry> {
    let all = suite();
    if name == "all" {
        return all;
    }
    all.into_iter().filter(|e| e.set == name).collect()
}
