//! Layout snapshots: one rectangle per placed instance, colored by cluster,
//! over the core outline.

use std::fmt::Write as _;
use std::path::Path;

use flowplace::hierarchy::{cluster_of, Cluster};
use flowplace::netlist::{InstanceKind, Netlist, Placement};
use flowplace::{PlaceError, Result, Scalar};

/// Target drawing width in pixels; height follows the core aspect ratio.
const WIDTH_PX: f64 = 800.0;

fn color(cluster: Option<usize>) -> String {
    match cluster {
        // golden-angle hue walk keeps neighbouring ids apart
        Some(c) => format!("hsl({:.1},70%,50%)", (c as f64 * 137.507_764) % 360.0),
        None => "#888888".into(),
    }
}

pub fn layout_svg<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    clusters: &[Cluster<T>],
    title: &str,
) -> String {
    let core = netlist.core;
    let (w, h) = (core.width().to_f64_lossy(), core.height().to_f64_lossy());
    let scale = WIDTH_PX / w;
    let of = cluster_of(netlist.instances.len(), clusters);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{} {} {} {}">"#,
        WIDTH_PX,
        h * scale,
        core.lx.to_f64_lossy(),
        -core.uy.to_f64_lossy(),
        w,
        h
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    // y grows downward in SVG; flip through negative y.
    let _ = writeln!(
        s,
        r##"<rect id="core" x="{}" y="{}" width="{w}" height="{h}" fill="none" stroke="#000000" stroke-width="{:.4}"/>"##,
        core.lx.to_f64_lossy(),
        -core.uy.to_f64_lossy(),
        w / 400.0
    );
    for inst in &netlist.instances {
        if !matches!(inst.kind, InstanceKind::StdCell | InstanceKind::Macro) || inst.id >= placement.len() {
            continue;
        }
        let (iw, ih) = (inst.width.to_f64_lossy(), inst.height.to_f64_lossy());
        let x = placement.x[inst.id].to_f64_lossy() - iw / 2.0;
        let y = -(placement.y[inst.id].to_f64_lossy() + ih / 2.0);
        let opacity = if inst.kind == InstanceKind::Macro { 0.35 } else { 0.8 };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.4}" y="{y:.4}" width="{iw:.4}" height="{ih:.4}" fill="{}" fill-opacity="{opacity}"/>"#,
            color(of[inst.id])
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_layout_svg<T: Scalar>(
    netlist: &Netlist<T>,
    placement: &Placement<T>,
    clusters: &[Cluster<T>],
    title: &str,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, layout_svg(netlist, placement, clusters, title)).map_err(|e| PlaceError::io(path, e))
}
