//! Graph selection and sweep-size lists.

use std::path::Path;

use anyhow::{bail, Context, Result};
use coherence_core::{Family, WeightedGraph};

/// Parses `path`, `ring`, `complete` or `torus<d>` (`torus` alone means 2-D).
pub fn parse_family(name: &str) -> Option<Family> {
    match name.trim().to_ascii_lowercase().as_str() {
        "path" | "line" => Some(Family::Path),
        "ring" | "cycle" => Some(Family::Ring),
        "complete" => Some(Family::Complete),
        "torus" => Some(Family::Torus { dim: 2 }),
        other => {
            let dim: usize = other.strip_prefix("torus")?.parse().ok()?;
            (dim >= 1).then_some(Family::Torus { dim })
        }
    }
}

/// Builds a family member; `size` is the side length for tori.
pub fn family_graph(family: Family, size: usize, weight: f64) -> Result<WeightedGraph> {
    let g = match family {
        Family::Path => WeightedGraph::path(size, weight),
        Family::Ring => WeightedGraph::ring(size, weight),
        Family::Complete => WeightedGraph::complete(size, weight),
        Family::Torus { dim } => WeightedGraph::torus(size, dim, weight),
    };
    Ok(g?)
}

/// `--graph` accepts a family name (with `--n`) or an edge-list file.
pub fn load_graph(graph: &str, n: Option<usize>, weight: f64) -> Result<WeightedGraph> {
    if let Some(family) = parse_family(graph) {
        let n = n.with_context(|| format!("--n is required with --graph {graph}"))?;
        return family_graph(family, n, weight);
    }
    let path = Path::new(graph);
    if !path.exists() {
        bail!("`{graph}` is neither a graph family nor an existing edge-list file");
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let g = WeightedGraph::from_edge_list(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(n) = n {
        if n != g.node_count() {
            bail!("--n {n} does not match the {} nodes in {}", g.node_count(), path.display());
        }
    }
    Ok(g)
}

/// Parses `a,b,c` or `geometric:start:stop:factor`. Geometric lists are
/// rounded to integers, deduplicated, and always end at `stop`.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = if let Some(rest) = spec.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, stop, factor] = parts[..] else {
            bail!("expected geometric:start:stop:factor, got `{spec}`");
        };
        let start: usize = start.trim().parse().context("geometric start")?;
        let stop: usize = stop.trim().parse().context("geometric stop")?;
        let factor: f64 = factor.trim().parse().context("geometric factor")?;
        if start == 0 || stop < start {
            bail!("geometric sizes need 0 < start <= stop");
        }
        if !(factor.is_finite() && factor > 1.0) {
            bail!("geometric factor must exceed 1");
        }
        let mut out = Vec::new();
        let mut x = start as f64;
        while x.round() < stop as f64 {
            let s = x.round() as usize;
            if out.last() != Some(&s) {
                out.push(s);
            }
            x *= factor;
        }
        out.push(stop);
        out
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad size `{}`", s.trim())))
            .collect::<Result<_>>()?
    };
    if sizes.is_empty() {
        bail!("no sizes given");
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        bail!("sizes must be strictly ascending");
    }
    Ok(sizes)
}

/// Parses `lo:hi`.
pub fn parse_window(spec: &str) -> Result<(usize, usize)> {
    let (lo, hi) = spec.split_once(':').context("expected lo:hi")?;
    let window = (lo.trim().parse()?, hi.trim().parse()?);
    if window.0 > window.1 {
        bail!("window lower end exceeds upper end");
    }
    Ok(window)
}
