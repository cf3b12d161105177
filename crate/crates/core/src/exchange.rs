//! Plain-text design exchange: a nodes / nets / pl / manifest quartet.
//!
//! ```text
//! design.manifest   name: <n> | core: lx ly ux uy | row_height: h | nodes: f | nets: f | pl: f
//! <n>.nodes         <name> <width> <height> [terminal|macro] [seq]
//! <n>.nets          NetDegree <k> <netname>   then k x   <instname> <offset_x> <offset_y>
//! <n>.pl            <name> <x> <y>            (instance centers, 4 decimals)
//! ```
//!
//! `#` starts a comment in every file. The first pin listed for a net is its
//! driver. Dimensions and offsets are written in shortest round-trip form so
//! `read(write(d)) == d`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{PlaceError, Result};
use crate::netlist::{InstanceKind, Netlist, PinSpec, Placement, Rect};
use crate::num::Scalar;

pub const MANIFEST_FILE: &str = "design.manifest";

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeDesign<T> {
    pub dir: PathBuf,
    pub name: String,
    pub nodes: PathBuf,
    pub nets: PathBuf,
    pub pl: PathBuf,
    pub manifest: PathBuf,
    pub core: Rect<T>,
    pub row_height: T,
}

pub fn nodes_text<T: Scalar>(netlist: &Netlist<T>) -> String {
    let mut s = String::from("# nodes: name width height [terminal|macro] [seq]\n");
    for inst in &netlist.instances {
        let _ = write!(s, "{} {} {}", inst.name, inst.width, inst.height);
        match inst.kind {
            InstanceKind::Terminal => s.push_str(" terminal"),
            InstanceKind::Macro => s.push_str(" macro"),
            _ => {}
        }
        if inst.is_sequential {
            s.push_str(" seq");
        }
        s.push('\n');
    }
    s
}

pub fn nets_text<T: Scalar>(netlist: &Netlist<T>) -> String {
    let mut s = String::from("# nets: NetDegree k name, then k pins (driver first)\n");
    for net in &netlist.nets {
        let _ = writeln!(s, "NetDegree {} {}", net.degree(), net.name);
        for &p in &net.pin_ids {
            let pin = &netlist.pins[p];
            let _ = writeln!(
                s,
                "  {} {} {}",
                netlist.instances[pin.owner].name,
                pin.offset_x,
                pin.offset_y
            );
        }
    }
    s
}

/// Placement lines for every non-pseudo instance.
pub fn pl_text<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>) -> Result<String> {
    netlist.check_placement(placement)?;
    let mut s = String::from("# pl: name x y (instance centers)\n");
    for inst in &netlist.instances {
        if inst.kind == InstanceKind::StarCenter {
            continue;
        }
        let _ = writeln!(
            s,
            "{} {:.4} {:.4}",
            inst.name, placement.x[inst.id], placement.y[inst.id]
        );
    }
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| PlaceError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PlaceError::io(path, e))
}

pub fn write_pl<T: Scalar>(netlist: &Netlist<T>, placement: &Placement<T>, path: &Path) -> Result<()> {
    write_file(path, &pl_text(netlist, placement)?)
}

/// Writes the four files of `netlist` into `dir` (created if missing).
pub fn write_design<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    dir: &Path,
    name: &str,
) -> Result<ExchangeDesign<T>> {
    if netlist.nets.iter().any(|n| n.is_pseudo) {
        return Err(PlaceError::Parameter(
            "exchange files carry design netlists only (pseudo nets present)".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| PlaceError::io(dir, e))?;
    let design = ExchangeDesign {
        dir: dir.to_path_buf(),
        name: name.to_string(),
        nodes: dir.join(format!("{name}.nodes")),
        nets: dir.join(format!("{name}.nets")),
        pl: dir.join(format!("{name}.pl")),
        manifest: dir.join(MANIFEST_FILE),
        core: netlist.core,
        row_height: netlist.row_height,
    };
    write_file(&design.nodes, &nodes_text(netlist))?;
    write_file(&design.nets, &nets_text(netlist))?;
    write_pl(netlist, placement, &design.pl)?;
    let c = netlist.core;
    let manifest = format!(
        "# design manifest\nname: {name}\ncore: {} {} {} {}\nrow_height: {}\nnodes: {name}.nodes\nnets: {name}.nets\npl: {name}.pl\n",
        c.lx, c.ly, c.ux, c.uy, netlist.row_height
    );
    write_file(&design.manifest, &manifest)?;
    Ok(design)
}

/// Meaningful lines with 1-based numbers, comments stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_num<T: Scalar>(tok: &str, file: &Path, line: usize) -> Result<T> {
    tok.parse::<T>().map_err(|_| PlaceError::Parse {
        file: file.to_path_buf(),
        line,
        msg: format!("expected a number, found `{tok}`"),
    })
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> PlaceError {
    PlaceError::Parse {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a design from its directory (or directly from its manifest path).
pub fn read_design<T: Scalar>(path: &Path) -> Result<(Netlist<T>, Placement<T>)> {
    let manifest = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let dir = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let text = read_file(&manifest)?;

    let mut core = None;
    let mut row_height = None;
    let mut files: HashMap<&str, PathBuf> = HashMap::new();
    for (ln, toks) in lines(&text) {
        match toks[0] {
            "core:" => {
                if toks.len() != 5 {
                    return Err(parse_err(&manifest, ln, "core needs 4 numbers"));
                }
                let v: Vec<T> = toks[1..]
                    .iter()
                    .map(|t| parse_num(t, &manifest, ln))
                    .collect::<Result<_>>()?;
                core = Some(Rect::new(v[0], v[1], v[2], v[3]));
            }
            "row_height:" if toks.len() == 2 => {
                row_height = Some(parse_num(toks[1], &manifest, ln)?)
            }
            key @ ("nodes:" | "nets:" | "pl:") if toks.len() == 2 => {
                files.insert(key.trim_end_matches(':'), dir.join(toks[1]));
            }
            "name:" => {}
            other => return Err(parse_err(&manifest, ln, format!("unexpected `{other}`"))),
        }
    }
    let core = core.ok_or_else(|| parse_err(&manifest, 0, "missing `core:`"))?;
    let row_height = row_height.unwrap_or_else(T::one);
    let file = |k: &str| {
        files
            .get(k)
            .cloned()
            .ok_or_else(|| parse_err(&manifest, 0, format!("missing `{k}:`")))
    };
    let (nodes_path, nets_path, pl_path) = (file("nodes")?, file("nets")?, file("pl")?);

    let mut nl = Netlist::new(core, row_height);
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (ln, toks) in lines(&read_file(&nodes_path)?) {
        if toks.len() < 3 {
            return Err(parse_err(&nodes_path, ln, "expected `<name> <width> <height>`"));
        }
        let w = parse_num(toks[1], &nodes_path, ln)?;
        let h = parse_num(toks[2], &nodes_path, ln)?;
        let mut kind = InstanceKind::StdCell;
        let mut seq = false;
        for flag in &toks[3..] {
            match *flag {
                "terminal" => kind = InstanceKind::Terminal,
                "macro" => kind = InstanceKind::Macro,
                "seq" => seq = true,
                other => {
                    return Err(parse_err(&nodes_path, ln, format!("unknown flag `{other}`")))
                }
            }
        }
        let id = nl.add_instance(toks[0], w, h, kind, seq);
        if by_name.insert(toks[0].to_string(), id).is_some() {
            return Err(parse_err(&nodes_path, ln, format!("duplicate node `{}`", toks[0])));
        }
    }

    let nets_text = read_file(&nets_path)?;
    let mut it = lines(&nets_text).peekable();
    while let Some((ln, toks)) = it.next() {
        if toks[0] != "NetDegree" || toks.len() != 3 {
            return Err(parse_err(&nets_path, ln, "expected `NetDegree <k> <name>`"));
        }
        let k: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(&nets_path, ln, format!("bad degree `{}`", toks[1])))?;
        let mut pins = Vec::with_capacity(k);
        for _ in 0..k {
            let (pl, ptoks) = it
                .next()
                .ok_or_else(|| parse_err(&nets_path, ln, "net truncated at end of file"))?;
            if ptoks.len() != 3 || ptoks[0] == "NetDegree" {
                return Err(parse_err(&nets_path, pl, "expected `<inst> <offset_x> <offset_y>`"));
            }
            let inst = *by_name.get(ptoks[0]).ok_or_else(|| PlaceError::Link {
                file: nets_path.clone(),
                line: pl,
                name: ptoks[0].to_string(),
            })?;
            pins.push(PinSpec::at(
                inst,
                parse_num(ptoks[1], &nets_path, pl)?,
                parse_num(ptoks[2], &nets_path, pl)?,
            ));
        }
        nl.add_net(toks[2], &pins)?;
    }

    let placement = parse_pl(&nl, &by_name, &pl_path)?;
    for inst in nl.instances.iter_mut().filter(|i| i.kind == InstanceKind::Terminal) {
        inst.fixed_location = Some((placement.x[inst.id], placement.y[inst.id]));
    }
    Ok((nl, placement))
}

fn parse_pl<T: Scalar>(
    nl: &Netlist<T>,
    by_name: &HashMap<String, usize>,
    pl_path: &Path,
) -> Result<Placement<T>> {
    let (cx, cy) = nl.core.center();
    let mut placement = Placement::uniform(nl, cx, cy);
    for (ln, toks) in lines(&read_file(pl_path)?) {
        if toks.len() != 3 {
            return Err(parse_err(pl_path, ln, "expected `<name> <x> <y>`"));
        }
        let id = *by_name.get(toks[0]).ok_or_else(|| PlaceError::Link {
            file: pl_path.to_path_buf(),
            line: ln,
            name: toks[0].to_string(),
        })?;
        let x = parse_num(toks[1], pl_path, ln)?;
        let y = parse_num(toks[2], pl_path, ln)?;
        placement.x[id] = x;
        placement.y[id] = y;
    }
    Ok(placement)
}

/// Reads a placement file against an already loaded netlist. Instances the
/// file omits sit at the core center; terminals keep their fixed spot.
pub fn read_pl<T: Scalar>(netlist: &Netlist<T>, path: &Path) -> Result<Placement<T>> {
    let by_name: HashMap<String, usize> = netlist
        .instances
        .iter()
        .map(|i| (i.name.clone(), i.id))
        .collect();
    let mut pl = parse_pl(netlist, &by_name, path)?;
    for inst in &netlist.instances {
        if let Some((x, y)) = inst.fixed_location {
            pl.x[inst.id] = x;
            pl.y[inst.id] = y;
        }
    }
    Ok(pl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{generate, AcceleratorSpec};

    fn tiny() -> AcceleratorSpec {
        AcceleratorSpec {
            pu_rows: 1,
            pes_per_pu: 1,
            bitwidth: 1,
            cells_per_bit: 1,
            ..Default::default()
        }
    }

    #[test]
    fn round_trip_minimal() {
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let (cx, cy) = nl.core.center();
        let pl = Placement::uniform(&nl, cx, cy);
        let dir = tempfile::tempdir().unwrap();
        write_design(&nl, &pl, dir.path(), "tiny").unwrap();
        let (back, pl_back) = read_design::<f64>(dir.path()).unwrap();
        assert_eq!(back, nl);
        assert_eq!(pl_back, pl);
    }

    #[test]
    fn separate_pl_keeps_terminals_fixed() {
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let (cx, cy) = nl.core.center();
        let dir = tempfile::tempdir().unwrap();
        write_design(&nl, &Placement::uniform(&nl, cx, cy), dir.path(), "tiny").unwrap();
        let (back, _) = read_design::<f64>(dir.path()).unwrap();
        let mut moved = Placement::uniform(&back, 3.25, 4.5);
        let t = back.instances.iter().find(|i| i.kind == InstanceKind::Terminal).unwrap().id;
        moved.x[t] = 99.0;
        let path = dir.path().join("other.pl");
        write_pl(&back, &moved, &path).unwrap();
        let got = read_pl(&back, &path).unwrap();
        let (tx, ty) = back.instances[t].fixed_location.unwrap();
        assert_eq!((got.x[t], got.y[t]), (tx, ty));
        let m = back.instances.iter().find(|i| i.is_movable()).unwrap().id;
        assert_eq!((got.x[m], got.y[m]), (3.25, 4.5));
        assert!(read_pl(&back, &dir.path().join("missing.pl")).is_err());
    }

    #[test]
    fn four_decimal_value_is_exact() {
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let mut pl = Placement::uniform(&nl, 12.5, 12.5);
        pl.x[0] = 12.5;
        let text = pl_text(&nl, &pl).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with("12.5000 12.5000"));
        let dir = tempfile::tempdir().unwrap();
        write_design(&nl, &pl, dir.path(), "t").unwrap();
        let (_, back) = read_design::<f64>(dir.path()).unwrap();
        assert_eq!(back.x[0], 12.5);
    }

    #[test]
    fn missing_node_is_link_error() {
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let pl = Placement::uniform(&nl, 1.0, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let d = write_design(&nl, &pl, dir.path(), "t").unwrap();
        let text = fs::read_to_string(&d.nets).unwrap();
        let broken = text.replacen("pu0/pe0/r[0]", "ghost_cell", 1);
        fs::write(&d.nets, broken).unwrap();
        let err = read_design::<f64>(dir.path()).unwrap_err();
        match err {
            PlaceError::Link { name, line, .. } => {
                assert_eq!(name, "ghost_cell");
                assert!(line > 1);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let nl: Netlist<f64> = generate(&tiny()).unwrap();
        let pl = Placement::uniform(&nl, 1.0, 1.0);
        let d = write_design(&nl, &pl, dir.path(), "t").unwrap();
        let mut text = fs::read_to_string(&d.nodes).unwrap();
        text.push_str("broken_node 1.0\n");
        let expected_line = text.lines().count();
        fs::write(&d.nodes, text).unwrap();
        match read_design::<f64>(dir.path()).unwrap_err() {
            PlaceError::Parse { line, file, .. } => {
                assert_eq!(line, expected_line);
                assert_eq!(file, d.nodes);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn pseudo_netlists_rejected() {
        let mut nl: Netlist<f64> = generate(&tiny()).unwrap();
        nl.star_decompose(&[0, 1], 1.0).unwrap();
        let pl = Placement::uniform(&nl, 1.0, 1.0);
        let dir = tempfile::tempdir().unwrap();
        assert!(write_design(&nl, &pl, dir.path(), "t").is_err());
    }
}
