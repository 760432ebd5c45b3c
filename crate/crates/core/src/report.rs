//! CSV emission for experiment curves and spectral reports.
//!
//! Every file starts with `#`-prefixed comment lines carrying the exact
//! resolved configuration, so re-running the embedded config reproduces the
//! file byte for byte. Curve rows follow the fixed header
//! `step,cost,metric,mean,stderr` with one row per (snapshot, metric).

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::engine::AggregatedSnapshot;

/// One labeled curve set destined for a CSV file. `metric_prefix` is
/// prepended to the metric names (empty for the primary sampler, e.g.
/// `"srrw_"` for a comparison run sharing the file).
pub struct CurveSection<'a> {
    pub metric_prefix: &'a str,
    pub curves: &'a [AggregatedSnapshot],
}

pub fn write_comment_header<W: Write>(out: &mut W, entries: &[(String, String)]) -> io::Result<()> {
    for (key, value) in entries {
        writeln!(out, "# {key} = {value}")?;
    }
    Ok(())
}

/// Write `step,cost,metric,mean,stderr` rows for each section in order.
pub fn write_curves<W: Write>(
    out: &mut W,
    header: &[(String, String)],
    sections: &[CurveSection<'_>],
) -> io::Result<()> {
    write_comment_header(out, header)?;
    writeln!(out, "step,cost,metric,mean,stderr")?;
    for section in sections {
        for snap in section.curves {
            writeln!(
                out,
                "{},{},{}tvd,{},{}",
                snap.step, snap.cost, section.metric_prefix, snap.tvd_mean, snap.tvd_stderr
            )?;
            if let (Some(nrmse), Some(stderr)) = (snap.nrmse, snap.nrmse_stderr) {
                writeln!(
                    out,
                    "{},{},{}nrmse,{},{}",
                    snap.step, snap.cost, section.metric_prefix, nrmse, stderr
                )?;
            }
        }
    }
    Ok(())
}

/// Write a named dense matrix as a CSV section.
pub fn write_matrix_section<W: Write>(
    out: &mut W,
    name: &str,
    matrix: &DMatrix<f64>,
) -> io::Result<()> {
    writeln!(out, "# section {name}")?;
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols()).map(|j| matrix[(i, j)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Write a named vector as a one-line CSV section.
pub fn write_vector_section<W: Write>(out: &mut W, name: &str, values: &[f64]) -> io::Result<()> {
    writeln!(out, "# section {name}")?;
    let row: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}

/// FNV-1a content hash of the graph's edge structure, for report metadata.
pub fn graph_hash(graph: &crate::graph::Graph) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for byte in x.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    feed(graph.node_count() as u64);
    for i in graph.nodes() {
        for &j in graph.neighbors(i) {
            if j > i {
                feed(i.index() as u64);
                feed(j.index() as u64);
            }
        }
    }
    h
}
