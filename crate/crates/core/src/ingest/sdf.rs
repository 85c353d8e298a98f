// MDL SD files, V2000 connection tables only.
//
// Record layout:
//   line 1      name (used as the graph id; blank falls back to the 1-based ordinal)
//   lines 2-3   program / comment, ignored
//   counts      aaabbb...              V2000
//   atoms       xxxxx.xxxxyyyyy.yyyyzzzzz.zzzz aaaddcccsss...   symbol at cols 32-34, charge code 37-39
//   bonds       111222tttsss...
//   properties  until "M  END"; only "M  CHG" is honored
//   data items  until "$$$$"

use super::{read_file, IngestError, Location};
use crate::molgraph::{AtomRecord, Bond, BondOrder, Element, MolGraph, MolKind};
use std::path::Path;

pub fn parse_sdf_v2000(path: &Path) -> Result<Vec<MolGraph>, IngestError> {
    let text = read_file(path)?;
    parse_sdf_v2000_str(&text, &path.display().to_string())
}

pub fn parse_sdf_v2000_str(text: &str, origin: &str) -> Result<Vec<MolGraph>, IngestError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut graphs = Vec::new();
    let mut pos = 0;
    let mut record = 0;
    while pos < lines.len() {
        if lines[pos..].iter().all(|l| l.trim().is_empty()) {
            break;
        }
        let (graph, next) = parse_record(&lines, pos, record, origin)?;
        graphs.push(graph);
        pos = next;
        record += 1;
    }
    Ok(graphs)
}

/// MDL atom-block charge code to formal charge.
fn charge_from_code(code: u32) -> Option<i8> {
    match code {
        0 | 4 => Some(0), // 4 is a doublet radical
        1 => Some(3),
        2 => Some(2),
        3 => Some(1),
        5 => Some(-1),
        6 => Some(-2),
        7 => Some(-3),
        _ => None,
    }
}

fn field(line: &str, from: usize, to: usize) -> Option<&str> {
    line.get(from..to.min(line.len())).filter(|s| !s.is_empty())
}

fn int_field(line: &str, from: usize, to: usize) -> Option<u32> {
    field(line, from, to)?.trim().parse().ok()
}

fn parse_record(
    lines: &[&str],
    start: usize,
    record: usize,
    origin: &str,
) -> Result<(MolGraph, usize), IngestError> {
    let at = |offset: usize| Location::record(origin, record, offset + 1);
    let malformed = |offset: usize, message: String| IngestError::MalformedLine {
        at: at(offset),
        message,
    };
    let line = |i: usize| {
        lines.get(i).copied().ok_or(IngestError::Truncated {
            at: at(i.min(lines.len())),
        })
    };

    let name = lines[start].trim();
    let id = if name.is_empty() {
        (record + 1).to_string()
    } else {
        name.to_string()
    };

    let counts_at = start + 3;
    let counts = line(counts_at)?;
    if counts.contains("V3000") {
        return Err(IngestError::UnsupportedVersion { at: at(counts_at) });
    }
    let version = counts.get(33..).map(str::trim).unwrap_or("");
    if !version.is_empty() && version != "V2000" {
        return Err(IngestError::UnsupportedVersion { at: at(counts_at) });
    }
    let (n_atoms, n_bonds) = match (int_field(counts, 0, 3), int_field(counts, 3, 6)) {
        (Some(a), Some(b)) => (a as usize, b as usize),
        _ => return Err(IngestError::MalformedCounts { at: at(counts_at) }),
    };

    let mut atoms = Vec::with_capacity(n_atoms);
    for k in 0..n_atoms {
        let i = counts_at + 1 + k;
        let l = line(i)?;
        let symbol = field(l, 31, 34)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                malformed(i, "atom line has no element symbol in columns 32-34".into())
            })?;
        let charge = match field(l, 36, 39) {
            None => 0,
            Some(s) if s.trim().is_empty() => 0,
            Some(s) => s
                .trim()
                .parse()
                .ok()
                .and_then(charge_from_code)
                .ok_or_else(|| malformed(i, format!("bad charge code '{}'", s.trim())))?,
        };
        atoms.push(AtomRecord::new(Element::from_symbol(symbol)).with_charge(charge));
    }

    let bonds_at = counts_at + 1 + n_atoms;
    let mut bonds = Vec::with_capacity(n_bonds);
    for k in 0..n_bonds {
        let i = bonds_at + k;
        let l = line(i)?;
        let (a, b, t) = match (int_field(l, 0, 3), int_field(l, 3, 6), int_field(l, 6, 9)) {
            (Some(a), Some(b), Some(t)) => (a as usize, b as usize, t),
            _ => return Err(malformed(i, "bond line needs three integer fields".into())),
        };
        let order = u8::try_from(t)
            .ok()
            .and_then(BondOrder::from_code)
            .ok_or_else(|| malformed(i, format!("unsupported bond type {t}")))?;
        if a == 0 || b == 0 {
            return Err(IngestError::DanglingBond { at: at(i), id });
        }
        bonds.push(Bond::new(a - 1, b - 1, order));
    }

    // properties block
    let mut i = bonds_at + n_bonds;
    let mut charges: Option<Vec<(usize, i8)>> = None;
    while i < lines.len() {
        let l = lines[i];
        if l.starts_with("$$$$") {
            i += 1;
            return finish(id, atoms, bonds, charges, at(counts_at)).map(|g| (g, i));
        }
        if l.starts_with("M  END") {
            i += 1;
            break;
        }
        if let Some(rest) = l.strip_prefix("M  CHG") {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            let count: usize = tokens
                .first()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(i, "M  CHG without an entry count".into()))?;
            if tokens.len() < 1 + 2 * count {
                return Err(malformed(i, format!("M  CHG announces {count} entries")));
            }
            let list = charges.get_or_insert_with(Vec::new);
            for pair in tokens[1..1 + 2 * count].chunks(2) {
                let atom: usize = pair[0]
                    .parse()
                    .ok()
                    .filter(|&a| a >= 1 && a <= atoms.len())
                    .ok_or_else(|| {
                        malformed(i, format!("M  CHG atom '{}' out of range", pair[0]))
                    })?;
                let value: i8 = pair[1]
                    .parse()
                    .map_err(|_| malformed(i, format!("M  CHG value '{}'", pair[1])))?;
                list.push((atom - 1, value));
            }
        }
        i += 1;
    }
    // data items up to the record separator
    while i < lines.len() {
        let l = lines[i];
        i += 1;
        if l.starts_with("$$$$") {
            break;
        }
    }
    finish(id, atoms, bonds, charges, at(counts_at)).map(|g| (g, i))
}

fn finish(
    id: String,
    mut atoms: Vec<AtomRecord>,
    bonds: Vec<Bond>,
    charges: Option<Vec<(usize, i8)>>,
    at: Location,
) -> Result<MolGraph, IngestError> {
    // Any M  CHG line supersedes every atom-block charge.
    if let Some(list) = charges {
        for a in atoms.iter_mut() {
            a.formal_charge = 0;
        }
        for (atom, value) in list {
            atoms[atom].formal_charge = value;
        }
    }
    let n = atoms.len();
    for bond in &bonds {
        if bond.a < n && bond.b < n {
            if bond.order == BondOrder::Aromatic {
                atoms[bond.a].aromatic = true;
                atoms[bond.b].aromatic = true;
            }
            if atoms[bond.b].element == Element::H && atoms[bond.a].element != Element::H {
                atoms[bond.a].h_count += 1;
            }
            if atoms[bond.a].element == Element::H && atoms[bond.b].element != Element::H {
                atoms[bond.b].h_count += 1;
            }
        }
    }
    MolGraph::new(id.clone(), MolKind::Compound, atoms, bonds)
        .map_err(|e| IngestError::from_graph(at, id, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CO: &str = "\
carbon monoxide-ish
  hand-written

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.2000    0.0000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
M  END
$$$$
";

    #[test]
    fn minimal_record() {
        let g = parse_sdf_v2000_str(CO, "mem").unwrap().remove(0);
        assert_eq!(g.id(), "carbon monoxide-ish");
        assert_eq!(g.atom_count(), 2);
        assert_eq!(g.atoms()[0].element, Element::C);
        assert_eq!(g.atoms()[1].formal_charge, 0);
        assert_eq!(g.bond_order(0, 1), Some(BondOrder::Single));
    }

    #[test]
    fn charge_code_in_atom_block() {
        let text = CO.replace("O   0  0", "O   0  5");
        let g = parse_sdf_v2000_str(&text, "mem").unwrap().remove(0);
        assert_eq!(g.atoms()[1].formal_charge, -1);
    }

    #[test]
    fn m_chg_overrides_atom_block() {
        let text = CO
            .replace("O   0  0", "O   0  3")
            .replace("M  END", "M  CHG  1   1  -1\nM  END");
        let g = parse_sdf_v2000_str(&text, "mem").unwrap().remove(0);
        assert_eq!(g.atoms()[0].formal_charge, -1);
        assert_eq!(g.atoms()[1].formal_charge, 0);
    }

    #[test]
    fn v3000_is_rejected() {
        let text = CO.replace("V2000", "V3000");
        assert!(matches!(
            parse_sdf_v2000_str(&text, "mem"),
            Err(IngestError::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn bad_counts_line() {
        let text = CO.replace("  2  1  0", " xx  1  0");
        assert!(matches!(
            parse_sdf_v2000_str(&text, "mem"),
            Err(IngestError::MalformedCounts { .. })
        ));
    }

    #[test]
    fn truncated_record() {
        let cut: String = CO.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_sdf_v2000_str(&cut, "mem"),
            Err(IngestError::Truncated { .. })
        ));
    }

    #[test]
    fn second_record_errors_carry_record_index() {
        let text = format!("{CO}{}", CO.replace("  1  2  1", "  1  3  1"));
        match parse_sdf_v2000_str(&text, "f.sdf") {
            Err(IngestError::DanglingBond { at, .. }) => assert_eq!(at.record, Some(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_name_uses_ordinal() {
        let text = CO.replacen("carbon monoxide-ish", "", 1);
        let g = parse_sdf_v2000_str(&format!("{CO}{text}"), "mem").unwrap();
        assert_eq!(g[1].id(), "2");
    }
}
