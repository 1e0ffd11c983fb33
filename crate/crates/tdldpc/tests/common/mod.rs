#![allow(dead_code)]

use tdldpc::symbolic::{constraint_atoms, Atom, Formula, Lit};

/// One colouring of a tabulated candidate with its expected constraint per
/// mapping group, or for all mappings together.
pub struct Expected {
    pub candidate: String,
    pub classes: Vec<Vec<usize>>,
    pub groups: Vec<(Vec<usize>, String)>,
    pub combined: Option<String>,
}

pub fn load_expected(text: &str) -> Vec<Expected> {
    let mut out: Vec<Expected> = Vec::new();
    let mut cand = String::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix("candidate ") {
            cand = c.trim().to_string();
        } else if let Some(c) = line.strip_prefix("colouring ") {
            let classes = c
                .trim()
                .trim_start_matches('{')
                .trim_end_matches('}')
                .split("},{")
                .map(|cl| cl.split(',').map(|x| x.trim().parse().unwrap()).collect())
                .collect();
            out.push(Expected { candidate: cand.clone(), classes, groups: Vec::new(), combined: None });
        } else if let Some(f) = line.strip_prefix("all : ") {
            out.last_mut().unwrap().combined = Some(f.trim().to_string());
        } else if let Some(m) = line.strip_prefix("maps ") {
            let (ls, f) = m.split_once(" : ").unwrap();
            let mut ells = Vec::new();
            for part in ls.split(',') {
                match part.split_once('-') {
                    Some((a, b)) => ells.extend(a.parse::<usize>().unwrap()..=b.parse().unwrap()),
                    None => ells.push(part.parse().unwrap()),
                }
            }
            out.last_mut().unwrap().groups.push((ells, f.trim().to_string()));
        }
    }
    out
}

/// Parses `C1 | !C4 & (C2 | C3)`, `char!=2`, `always` and `never`; `&` binds tighter.
pub fn parse_formula(s: &str) -> Formula {
    let toks: Vec<String> = s
        .replace('(', " ( ")
        .replace(')', " ) ")
        .replace('|', " | ")
        .replace('&', " & ")
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let mut pos = 0;
    let f = parse_or(&toks, &mut pos);
    assert_eq!(pos, toks.len(), "trailing tokens in {s}");
    f
}

fn parse_or(t: &[String], pos: &mut usize) -> Formula {
    let mut parts = vec![parse_and(t, pos)];
    while t.get(*pos).map(String::as_str) == Some("|") {
        *pos += 1;
        parts.push(parse_and(t, pos));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::Or(parts)
    }
}

fn parse_and(t: &[String], pos: &mut usize) -> Formula {
    let mut parts = vec![parse_atom(t, pos)];
    while t.get(*pos).map(String::as_str) == Some("&") {
        *pos += 1;
        parts.push(parse_atom(t, pos));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::And(parts)
    }
}

fn parse_atom(t: &[String], pos: &mut usize) -> Formula {
    let tok = t[*pos].clone();
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let f = parse_or(t, pos);
            assert_eq!(t[*pos], ")");
            *pos += 1;
            f
        }
        "always" => Formula::True,
        "never" => Formula::False,
        _ if tok.starts_with("char") => {
            let (op, p) = tok[4..].split_at(tok[4..].find(|c: char| c.is_ascii_digit()).unwrap());
            Formula::Lit(Lit { atom: Atom::Char(p.parse().unwrap()), nonzero: op == "!=" })
        }
        _ => {
            let (neg, name) = match tok.strip_prefix('!') {
                Some(n) => (true, n),
                None => (false, tok.as_str()),
            };
            let atom = constraint_atoms().into_iter().find(|(n, _)| n == name).expect("known label").1;
            Formula::Lit(Lit { atom, nonzero: !neg })
        }
    }
}

/// Primes and reduced scale-factor pairs used for semantic comparisons.
pub fn grid(m: usize) -> Vec<(u64, Vec<u64>)> {
    let mut out = Vec::new();
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23] {
        if m == 1 {
            out.push((q, vec![1]));
        } else {
            out.extend((2..q).map(|a| (q, vec![1, a])));
        }
    }
    out
}

/// Points of the grid where the two formulas disagree.
pub fn disagreements(a: &Formula, b: &Formula, m: usize) -> Vec<(u64, Vec<u64>)> {
    grid(m).into_iter().filter(|(q, al)| a.eval(*q, al) != b.eval(*q, al)).collect()
}
