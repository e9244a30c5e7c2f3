//! Line-oriented text format for systems and scenarios.
//!
//! ```text
//! [bases]
//! s_system = 100e6
//! [buses]
//! # id kind v_base
//! 1 generator 20e3
//! [branches]
//! # from to r x b [tap] [in_service]
//! 1 2 0 0.0167 0
//! [wpg.1]
//! bus = 1
//! slack = true
//! ```
//!
//! Row sections hold whitespace-separated columns, key sections hold
//! `key = value` lines. `#` after whitespace starts a comment. Loads are given in MW and
//! Mvar, dispatch in MW; everything else is stored as in the data model.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cvsc::CvscGains;
use crate::dynamics::{Event, Scenario};
use crate::network::{BranchRef, NetworkEvent};
use crate::sysmodel::{
    BaseSet, Branch, Bus, BusKind, Load, ModelError, NetworkModel, Shunt, SystemModel,
    WpgParameters, WpgUnit,
};

/// One diagnostic; `line` is 0 when it applies to the whole file.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}", render(.problems))]
pub struct ConfigError {
    pub problems: Vec<Problem>,
}

fn render(p: &[Problem]) -> String {
    p.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

impl ConfigError {
    fn single(line: usize, message: impl Into<String>) -> Self {
        Self {
            problems: vec![Problem {
                line,
                message: message.into(),
            }],
        }
    }
}

macro_rules! wpg_fields {
    ($($f:ident),* $(,)?) => {
        const WPG_KEYS: &[&str] = &[$(stringify!($f)),*];

        fn wpg_field<'a>(p: &'a mut WpgParameters, key: &str) -> Option<&'a mut f64> {
            match key {
                $(stringify!($f) => Some(&mut p.$f),)*
                _ => None,
            }
        }

        fn wpg_values(p: &WpgParameters) -> Vec<(&'static str, f64)> {
            vec![$((stringify!($f), p.$f)),*]
        }
    };
}

wpg_fields!(
    p_mn,
    p_n,
    v_n,
    v_tn,
    l_filter,
    r_filter,
    v_dc_nom,
    c,
    l_boost,
    k_p_pitch,
    k_p_comp,
    k_i_comp,
    k_p_field,
    k_i_field,
    pole_pairs,
    d_duty,
    x_d,
    x_d1,
    x_d2,
    x_q,
    x_q2,
    x_l,
    t_d01,
    t_d02,
    t_q02,
    r_s,
    h_t,
    h_g,
    k_shaft,
    d_shaft,
    k_track,
    t_avail,
    omega_ref,
    beta_max,
    m_max,
    storage_rating,
);

const GAIN_KEYS: &[&str] = &["k_a", "k_e", "k_pg1", "k_pg2", "k_pg3"];

fn gain_field<'a>(g: &'a mut CvscGains, key: &str) -> Option<&'a mut f64> {
    match key {
        "k_a" => Some(&mut g.k_a),
        "k_e" => Some(&mut g.k_e),
        "k_pg1" => Some(&mut g.k_pg1),
        "k_pg2" => Some(&mut g.k_pg2),
        "k_pg3" => Some(&mut g.k_pg3),
        _ => None,
    }
}

struct Section {
    name: String,
    line: usize,
    rows: Vec<(usize, String)>,
}

/// `#` opens a comment at line start or after whitespace, so branch
/// references such as `7-8#1` survive.
fn strip_comment(raw: &str) -> &str {
    let b = raw.as_bytes();
    match (0..b.len()).find(|&i| b[i] == b'#' && (i == 0 || b[i - 1].is_ascii_whitespace())) {
        Some(i) => &raw[..i],
        None => raw,
    }
}

fn split_sections(text: &str, problems: &mut Vec<Problem>) -> Vec<Section> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            if out.iter().any(|s| s.name == name) {
                problems.push(Problem {
                    line,
                    message: format!("duplicate section [{name}]"),
                });
            }
            out.push(Section {
                name,
                line,
                rows: Vec::new(),
            });
        } else if let Some(s) = out.last_mut() {
            s.rows.push((line, body.to_string()));
        } else {
            problems.push(Problem {
                line,
                message: "content before the first section".into(),
            });
        }
    }
    out
}

fn num(tok: &str, line: usize, what: &str, problems: &mut Vec<Problem>) -> f64 {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => v,
        _ => {
            problems.push(Problem {
                line,
                message: format!("{what}: '{tok}' is not a finite number"),
            });
            f64::NAN
        }
    }
}

fn int(tok: &str, line: usize, what: &str, problems: &mut Vec<Problem>) -> usize {
    tok.parse().unwrap_or_else(|_| {
        problems.push(Problem {
            line,
            message: format!("{what}: '{tok}' is not a non-negative integer"),
        });
        0
    })
}

fn boolean(tok: &str, line: usize, what: &str, problems: &mut Vec<Problem>) -> bool {
    match tok {
        "true" => true,
        "false" => false,
        _ => {
            problems.push(Problem {
                line,
                message: format!("{what}: '{tok}' is not true or false"),
            });
            false
        }
    }
}

fn key_value(line: usize, row: &str, problems: &mut Vec<Problem>) -> Option<(String, String)> {
    match row.split_once('=') {
        Some((k, v)) => Some((k.trim().to_string(), v.trim().to_string())),
        None => {
            problems.push(Problem {
                line,
                message: format!("expected key = value, found '{row}'"),
            });
            None
        }
    }
}

fn columns<'a>(
    line: usize,
    row: &'a str,
    min: usize,
    max: usize,
    what: &str,
    problems: &mut Vec<Problem>,
) -> Option<Vec<&'a str>> {
    let cols: Vec<&str> = row.split_whitespace().collect();
    if cols.len() < min || cols.len() > max {
        let want = if min == max {
            min.to_string()
        } else {
            format!("{min} to {max}")
        };
        problems.push(Problem {
            line,
            message: format!("{what} row needs {want} columns, found {}", cols.len()),
        });
        return None;
    }
    Some(cols)
}

fn parse_bases(sec: &Section, problems: &mut Vec<Problem>) -> BaseSet {
    let mut b = BaseSet::default();
    for (line, row) in &sec.rows {
        let Some((k, v)) = key_value(*line, row, problems) else {
            continue;
        };
        let slot = match k.as_str() {
            "s_system" => &mut b.s_system,
            "s_machine" => &mut b.s_machine,
            "v_base" => &mut b.v_base,
            "f_n" => &mut b.f_n,
            _ => {
                problems.push(Problem {
                    line: *line,
                    message: format!("unknown key '{k}' in [bases]"),
                });
                continue;
            }
        };
        *slot = num(&v, *line, &k, problems);
    }
    b
}

struct UnitDraft {
    line: usize,
    unit: WpgUnit,
    governor: Option<bool>,
    has_bus: bool,
}

fn parse_wpg(number: usize, sec: &Section, problems: &mut Vec<Problem>) -> UnitDraft {
    let mut unit = WpgUnit {
        number,
        bus: 0,
        p_dispatch: 0.0,
        v_set: 1.0,
        slack: false,
        params: WpgParameters::default(),
        gains: CvscGains::default(),
    };
    let mut has_bus = false;
    for (line, row) in &sec.rows {
        let Some((k, v)) = key_value(*line, row, problems) else {
            continue;
        };
        match k.as_str() {
            "bus" => {
                unit.bus = int(&v, *line, "bus", problems);
                has_bus = true;
            }
            "p_mw" => unit.p_dispatch = num(&v, *line, "p_mw", problems) * 1e6,
            "v_set" => unit.v_set = num(&v, *line, "v_set", problems),
            "slack" => unit.slack = boolean(&v, *line, "slack", problems),
            _ => match wpg_field(&mut unit.params, &k) {
                Some(slot) => *slot = num(&v, *line, &k, problems),
                None => problems.push(Problem {
                    line: *line,
                    message: format!("unknown key '{k}' in [{}]", sec.name),
                }),
            },
        }
    }
    if !has_bus {
        problems.push(Problem {
            line: sec.line,
            message: format!("[{}] is missing 'bus'", sec.name),
        });
    }
    UnitDraft {
        line: sec.line,
        unit,
        governor: None,
        has_bus,
    }
}

fn parse_cvsc(sec: &Section, draft: &mut UnitDraft, problems: &mut Vec<Problem>) {
    for (line, row) in &sec.rows {
        let Some((k, v)) = key_value(*line, row, problems) else {
            continue;
        };
        if k == "governor" {
            draft.governor = Some(boolean(&v, *line, "governor", problems));
            continue;
        }
        match gain_field(&mut draft.unit.gains, &k) {
            Some(slot) => *slot = num(&v, *line, &k, problems),
            None => problems.push(Problem {
                line: *line,
                message: format!("unknown key '{k}' in [{}]", sec.name),
            }),
        }
    }
}

fn unit_number(name: &str, prefix: &str) -> Option<Result<usize, ()>> {
    name.strip_prefix(prefix)
        .map(|n| n.parse::<usize>().ok().filter(|&n| n > 0).ok_or(()))
}

/// Parse a system file. Every problem found is reported, each with the line
/// it comes from where one exists.
pub fn parse_system_config(text: &str) -> Result<SystemModel, ConfigError> {
    let mut problems = Vec::new();
    let sections = split_sections(text, &mut problems);
    let mut bases = None;
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut branch_lines = Vec::new();
    let mut loads = Vec::new();
    let mut shunts = Vec::new();
    let mut units: BTreeMap<usize, UnitDraft> = BTreeMap::new();
    let mut cvsc: Vec<(usize, &Section)> = Vec::new();
    let mut seen_buses = false;
    let mut seen_branches = false;

    for sec in &sections {
        match sec.name.as_str() {
            "bases" => bases = Some(parse_bases(sec, &mut problems)),
            "buses" => {
                seen_buses = true;
                for (line, row) in &sec.rows {
                    let Some(c) = columns(*line, row, 3, 3, "bus", &mut problems) else {
                        continue;
                    };
                    let id = int(c[0], *line, "bus id", &mut problems);
                    let kind = BusKind::parse(c[1]).unwrap_or_else(|| {
                        problems.push(Problem {
                            line: *line,
                            message: format!("unknown bus kind '{}'", c[1]),
                        });
                        BusKind::Junction
                    });
                    let v_base = num(c[2], *line, "v_base", &mut problems);
                    buses.push(Bus { id, v_base, kind });
                }
            }
            "branches" => {
                seen_branches = true;
                for (line, row) in &sec.rows {
                    let Some(c) = columns(*line, row, 5, 7, "branch", &mut problems) else {
                        continue;
                    };
                    let mut br = Branch::line(
                        int(c[0], *line, "from", &mut problems),
                        int(c[1], *line, "to", &mut problems),
                        num(c[2], *line, "r", &mut problems),
                        num(c[3], *line, "x", &mut problems),
                        num(c[4], *line, "b", &mut problems),
                    );
                    if let Some(t) = c.get(5) {
                        br.tap = num(t, *line, "tap", &mut problems);
                    }
                    if let Some(s) = c.get(6) {
                        br.in_service = boolean(s, *line, "in_service", &mut problems);
                    }
                    branches.push(br);
                    branch_lines.push(*line);
                }
            }
            "loads" => {
                for (line, row) in &sec.rows {
                    let Some(c) = columns(*line, row, 3, 3, "load", &mut problems) else {
                        continue;
                    };
                    loads.push(Load {
                        bus: int(c[0], *line, "bus", &mut problems),
                        p: num(c[1], *line, "p_mw", &mut problems) * 1e6,
                        q: num(c[2], *line, "q_mvar", &mut problems) * 1e6,
                    });
                }
            }
            "shunts" => {
                for (line, row) in &sec.rows {
                    let Some(c) = columns(*line, row, 3, 3, "shunt", &mut problems) else {
                        continue;
                    };
                    shunts.push(Shunt {
                        bus: int(c[0], *line, "bus", &mut problems),
                        g: num(c[1], *line, "g", &mut problems),
                        b: num(c[2], *line, "b", &mut problems),
                    });
                }
            }
            name => {
                if let Some(n) = unit_number(name, "wpg.") {
                    match n {
                        Ok(n) => {
                            units.insert(n, parse_wpg(n, sec, &mut problems));
                        }
                        Err(()) => problems.push(Problem {
                            line: sec.line,
                            message: format!("bad unit number in [{name}]"),
                        }),
                    }
                } else if let Some(n) = unit_number(name, "cvsc.") {
                    match n {
                        Ok(n) => cvsc.push((n, sec)),
                        Err(()) => problems.push(Problem {
                            line: sec.line,
                            message: format!("bad unit number in [{name}]"),
                        }),
                    }
                } else {
                    problems.push(Problem {
                        line: sec.line,
                        message: format!("unknown section [{name}]"),
                    });
                }
            }
        }
    }
    for (n, sec) in cvsc {
        match units.get_mut(&n) {
            Some(d) => parse_cvsc(sec, d, &mut problems),
            None => problems.push(Problem {
                line: sec.line,
                message: format!("[cvsc.{n}] has no matching [wpg.{n}]"),
            }),
        }
    }
    for (name, seen) in [
        ("buses", seen_buses),
        ("branches", seen_branches),
        ("bases", bases.is_some()),
    ] {
        if !seen {
            problems.push(Problem {
                line: 0,
                message: format!("missing section [{name}]"),
            });
        }
    }

    let network = NetworkModel {
        buses,
        branches,
        loads,
        shunts,
        bases: bases.unwrap_or_default(),
    };
    let mut wpgs = Vec::new();
    let mut unit_lines = Vec::new();
    for (_, mut d) in units {
        d.unit.gains.has_governor = d.governor.unwrap_or(!d.unit.slack);
        d.unit.gains.v_dc_nom = d.unit.params.v_dc_nom;
        if d.has_bus {
            unit_lines.push((d.unit.number, d.line));
        }
        wpgs.push(d.unit);
    }
    let model = SystemModel { network, wpgs };
    // Skip model validation when parsing already failed; NaN placeholders
    // would only produce follow-on noise.
    if problems.is_empty() {
        if let Err(errs) = model.validate() {
            for e in errs {
                let line = match &e {
                    ModelError::ZeroReactance { index, .. }
                    | ModelError::BadTap { index, .. }
                    | ModelError::UnknownBus { index, .. }
                        if *index > 0 =>
                    {
                        branch_lines[index - 1]
                    }
                    ModelError::BadParameter { unit, .. } => unit_lines
                        .iter()
                        .find(|(n, _)| n == unit)
                        .map_or(0, |(_, l)| *l),
                    _ => 0,
                };
                problems.push(Problem {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if problems.is_empty() {
        Ok(model)
    } else {
        Err(ConfigError { problems })
    }
}

fn fmt_f(v: f64) -> String {
    // Shortest representation that reads back to the same bits.
    format!("{v:?}")
}

/// Write a system file that parses back to an identical model.
pub fn serialize_system_config(model: &SystemModel) -> String {
    let mut s = String::new();
    let n = &model.network;
    let b = &n.bases;
    let _ = writeln!(s, "[bases]");
    for (k, v) in [
        ("s_system", b.s_system),
        ("s_machine", b.s_machine),
        ("v_base", b.v_base),
        ("f_n", b.f_n),
    ] {
        let _ = writeln!(s, "{k} = {}", fmt_f(v));
    }
    let _ = writeln!(s, "\n[buses]\n# id kind v_base");
    for bus in &n.buses {
        let _ = writeln!(s, "{} {} {}", bus.id, bus.kind.as_str(), fmt_f(bus.v_base));
    }
    let _ = writeln!(s, "\n[branches]\n# from to r x b tap in_service");
    for br in &n.branches {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            br.from,
            br.to,
            fmt_f(br.r),
            fmt_f(br.x),
            fmt_f(br.b_shunt),
            fmt_f(br.tap),
            br.in_service
        );
    }
    if !n.loads.is_empty() {
        let _ = writeln!(s, "\n[loads]\n# bus p_mw q_mvar");
        for l in &n.loads {
            let _ = writeln!(s, "{} {} {}", l.bus, fmt_f(l.p / 1e6), fmt_f(l.q / 1e6));
        }
    }
    if !n.shunts.is_empty() {
        let _ = writeln!(s, "\n[shunts]\n# bus g b");
        for sh in &n.shunts {
            let _ = writeln!(s, "{} {} {}", sh.bus, fmt_f(sh.g), fmt_f(sh.b));
        }
    }
    for u in &model.wpgs {
        let _ = writeln!(s, "\n[wpg.{}]", u.number);
        let _ = writeln!(s, "bus = {}", u.bus);
        let _ = writeln!(s, "p_mw = {}", fmt_f(u.p_dispatch / 1e6));
        let _ = writeln!(s, "v_set = {}", fmt_f(u.v_set));
        let _ = writeln!(s, "slack = {}", u.slack);
        for (k, v) in wpg_values(&u.params) {
            let _ = writeln!(s, "{k} = {}", fmt_f(v));
        }
        let g = &u.gains;
        let _ = writeln!(s, "\n[cvsc.{}]", u.number);
        for (k, v) in [
            ("k_a", g.k_a),
            ("k_e", g.k_e),
            ("k_pg1", g.k_pg1),
            ("k_pg2", g.k_pg2),
            ("k_pg3", g.k_pg3),
        ] {
            let _ = writeln!(s, "{k} = {}", fmt_f(v));
        }
        let _ = writeln!(s, "governor = {}", g.has_governor);
    }
    s
}

/// Apply one `key=value` override. Keys are `bases.<field>`,
/// `wpg.<N|*>.<field>` or `cvsc.<N|*>.<field>`; controller gains are
/// accepted under either unit prefix.
pub fn apply_override(model: &mut SystemModel, spec: &str) -> Result<(), ConfigError> {
    let bad = |m: String| ConfigError::single(0, format!("override '{spec}': {m}"));
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| bad("expected key=value".into()))?;
    let (key, value) = (key.trim(), value.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let parse_num = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("'{v}' is not a finite number")))
    };
    match parts.as_slice() {
        ["bases", field] => {
            let b = &mut model.network.bases;
            let slot = match *field {
                "s_system" => &mut b.s_system,
                "s_machine" => &mut b.s_machine,
                "v_base" => &mut b.v_base,
                "f_n" => &mut b.f_n,
                _ => return Err(bad(format!("unknown key '{field}'"))),
            };
            *slot = parse_num(value)?;
        }
        [prefix @ ("wpg" | "cvsc"), unit, field] => {
            let targets: Vec<usize> = if *unit == "*" {
                (0..model.wpgs.len()).collect()
            } else {
                let n: usize = unit
                    .parse()
                    .map_err(|_| bad(format!("bad unit '{unit}'")))?;
                vec![model
                    .wpgs
                    .iter()
                    .position(|u| u.number == n)
                    .ok_or_else(|| bad(format!("no unit {n}")))?]
            };
            for i in targets {
                let u = &mut model.wpgs[i];
                if *field == "governor" {
                    u.gains.has_governor = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad(format!("'{value}' is not true or false"))),
                    };
                } else if let Some(slot) = gain_field(&mut u.gains, field) {
                    *slot = parse_num(value)?;
                } else if *prefix == "wpg" {
                    match *field {
                        "p_mw" => u.p_dispatch = parse_num(value)? * 1e6,
                        "v_set" => u.v_set = parse_num(value)?,
                        "bus" => {
                            u.bus = value
                                .parse()
                                .map_err(|_| bad(format!("bad bus '{value}'")))?
                        }
                        _ => {
                            let slot = wpg_field(&mut u.params, field)
                                .ok_or_else(|| bad(format!("unknown key '{field}'")))?;
                            *slot = parse_num(value)?;
                            u.gains.v_dc_nom = u.params.v_dc_nom;
                        }
                    }
                } else {
                    return Err(bad(format!("unknown key '{field}'")));
                }
            }
        }
        _ => return Err(bad("unknown key".into())),
    }
    model.validate().map_err(|errs| ConfigError {
        problems: errs
            .into_iter()
            .map(|e| Problem {
                line: 0,
                message: format!("after override '{spec}': {e}"),
            })
            .collect(),
    })
}

/// Every key an override may name under `wpg.N`.
pub fn wpg_keys() -> impl Iterator<Item = &'static str> {
    ["bus", "p_mw", "v_set"]
        .into_iter()
        .chain(WPG_KEYS.iter().copied())
        .chain(GAIN_KEYS.iter().copied())
}

fn payload<'a>(
    line: usize,
    toks: &[&'a str],
    allowed: &[&str],
    problems: &mut Vec<Problem>,
) -> BTreeMap<&'a str, &'a str> {
    let mut map = BTreeMap::new();
    for t in toks {
        match t.split_once('=') {
            Some((k, v)) if allowed.contains(&k) => {
                map.insert(k, v);
            }
            Some((k, _)) => problems.push(Problem {
                line,
                message: format!("unknown event field '{k}'"),
            }),
            None => problems.push(Problem {
                line,
                message: format!("expected field=value, found '{t}'"),
            }),
        }
    }
    for k in allowed {
        if !map.contains_key(k) {
            problems.push(Problem {
                line,
                message: format!("event is missing '{k}'"),
            });
        }
    }
    map
}

fn branch_field(line: usize, p: &BTreeMap<&str, &str>, problems: &mut Vec<Problem>) -> BranchRef {
    let raw = p.get("branch").copied().unwrap_or("0-0");
    raw.parse().unwrap_or_else(|m: String| {
        problems.push(Problem { line, message: m });
        BranchRef {
            from: 0,
            to: 0,
            circuit: 1,
        }
    })
}

/// Parse a scenario file: `[scenario]` keys `t_end`, `dt`, `outputs` and an
/// `[events]` list of `time kind field=value ...` rows.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut problems = Vec::new();
    let sections = split_sections(text, &mut problems);
    let mut sc = Scenario::empty(f64::NAN, 1e-3);
    let mut seen = false;
    for sec in &sections {
        match sec.name.as_str() {
            "scenario" => {
                seen = true;
                for (line, row) in &sec.rows {
                    let Some((k, v)) = key_value(*line, row, &mut problems) else {
                        continue;
                    };
                    match k.as_str() {
                        "t_end" => sc.t_end = num(&v, *line, "t_end", &mut problems),
                        "dt" => sc.dt = num(&v, *line, "dt", &mut problems),
                        "outputs" => {
                            sc.outputs = v.split_whitespace().map(str::to_string).collect()
                        }
                        _ => problems.push(Problem {
                            line: *line,
                            message: format!("unknown key '{k}' in [scenario]"),
                        }),
                    }
                }
            }
            "events" => {
                for (line, row) in &sec.rows {
                    let line = *line;
                    let toks: Vec<&str> = row.split_whitespace().collect();
                    if toks.len() < 2 {
                        problems.push(Problem {
                            line,
                            message: "event row needs a time and a kind".into(),
                        });
                        continue;
                    }
                    let time = num(toks[0], line, "time", &mut problems);
                    let rest = &toks[2..];
                    let kind = match toks[1] {
                        "load_step" => {
                            let p = payload(line, rest, &["bus", "p_mw", "q_mvar"], &mut problems);
                            NetworkEvent::LoadStep {
                                bus: int(p.get("bus").unwrap_or(&"0"), line, "bus", &mut problems),
                                p: num(p.get("p_mw").unwrap_or(&"0"), line, "p_mw", &mut problems)
                                    * 1e6,
                                q: num(
                                    p.get("q_mvar").unwrap_or(&"0"),
                                    line,
                                    "q_mvar",
                                    &mut problems,
                                ) * 1e6,
                            }
                        }
                        "fault" => {
                            let p = payload(
                                line,
                                rest,
                                &["branch", "location", "y_fault"],
                                &mut problems,
                            );
                            let location = num(
                                p.get("location").unwrap_or(&"0"),
                                line,
                                "location",
                                &mut problems,
                            );
                            if !(0.0..=1.0).contains(&location) {
                                problems.push(Problem {
                                    line,
                                    message: format!("location {location} outside [0, 1]"),
                                });
                            }
                            NetworkEvent::Fault {
                                branch: branch_field(line, &p, &mut problems),
                                location,
                                y_fault: num(
                                    p.get("y_fault").unwrap_or(&"0"),
                                    line,
                                    "y_fault",
                                    &mut problems,
                                ),
                            }
                        }
                        "clear" => {
                            let p = payload(line, rest, &["branch"], &mut problems);
                            NetworkEvent::Clear {
                                branch: branch_field(line, &p, &mut problems),
                            }
                        }
                        "reclose" => {
                            let p = payload(line, rest, &["branch"], &mut problems);
                            NetworkEvent::Reclose {
                                branch: branch_field(line, &p, &mut problems),
                            }
                        }
                        other => {
                            problems.push(Problem {
                                line,
                                message: format!("unknown event kind '{other}'"),
                            });
                            continue;
                        }
                    };
                    sc.events.push(Event { time, kind });
                }
            }
            other => problems.push(Problem {
                line: sec.line,
                message: format!("unknown section [{other}]"),
            }),
        }
    }
    if !seen {
        problems.push(Problem {
            line: 0,
            message: "missing section [scenario]".into(),
        });
    }
    if problems.is_empty() {
        if let Err(m) = sc.validate() {
            problems.push(Problem {
                line: 0,
                message: m,
            });
        }
    }
    if problems.is_empty() {
        Ok(sc)
    } else {
        Err(ConfigError { problems })
    }
}

/// Write a scenario file that parses back to the same scenario.
pub fn serialize_scenario(sc: &Scenario) -> String {
    let mut s = String::from("[scenario]\n");
    let _ = writeln!(s, "t_end = {}", fmt_f(sc.t_end));
    let _ = writeln!(s, "dt = {}", fmt_f(sc.dt));
    if !sc.outputs.is_empty() {
        let _ = writeln!(s, "outputs = {}", sc.outputs.join(" "));
    }
    let _ = writeln!(s, "\n[events]\n# time kind payload");
    for e in &sc.events {
        let t = fmt_f(e.time);
        let _ = match &e.kind {
            NetworkEvent::LoadStep { bus, p, q } => {
                writeln!(
                    s,
                    "{t} load_step bus={bus} p_mw={} q_mvar={}",
                    fmt_f(p / 1e6),
                    fmt_f(q / 1e6)
                )
            }
            NetworkEvent::Fault {
                branch,
                location,
                y_fault,
            } => {
                writeln!(
                    s,
                    "{t} fault branch={branch} location={} y_fault={}",
                    fmt_f(*location),
                    fmt_f(*y_fault)
                )
            }
            NetworkEvent::Clear { branch } => writeln!(s, "{t} clear branch={branch}"),
            NetworkEvent::Reclose { branch } => writeln!(s, "{t} reclose branch={branch}"),
        };
    }
    s
}
