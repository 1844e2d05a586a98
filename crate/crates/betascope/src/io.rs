//! File formats and run reproducibility: the point-cloud text format, the
//! skeleton JSON schema, key=value run configuration with a content hash,
//! and the header stamped on every report.

use crate::dyadic::SkeletonSet;
use crate::geom::{Point, SampledSet};
use crate::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Write a point cloud: a JSON header line, then one point per line with n
/// whitespace-separated decimals.
pub fn write_point_cloud<W: Write>(mut w: W, set: &SampledSet) -> Result<()> {
    writeln!(w, "{{\"n\":{},\"d\":{},\"h\":{}}}", set.n, set.d, set.h)?;
    for p in &set.points {
        let coords: Vec<String> = (0..set.n).map(|a| format!("{}", p.c[a])).collect();
        writeln!(w, "{}", coords.join(" "))?;
    }
    Ok(())
}

/// Read the point-cloud format. A missing header falls back to inferring n
/// from the first data line; `h` then defaults to twice the finest nearest
/// neighbor gap estimate and `d` to 1.
pub fn read_point_cloud<R: BufRead>(r: R) -> Result<SampledSet> {
    let mut n: Option<usize> = None;
    let mut d = 1usize;
    let mut h: Option<f64> = None;
    let mut points: Vec<Point> = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if t.starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(t)
                .map_err(|e| Error::Parse(format!("header line {}: {e}", lineno + 1)))?;
            if let Some(x) = v.get("n").and_then(|x| x.as_u64()) {
                n = Some(x as usize);
            }
            if let Some(x) = v.get("d").and_then(|x| x.as_u64()) {
                d = x as usize;
            }
            if let Some(x) = v.get("h").and_then(|x| x.as_f64()) {
                h = Some(x);
            }
            continue;
        }
        let coords: Vec<f64> = t
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if coords.is_empty() || coords.len() > crate::MAX_DIM {
            return Err(Error::Parse(format!(
                "line {}: expected 1..=4 coordinates, got {}",
                lineno + 1,
                coords.len()
            )));
        }
        match n {
            None => n = Some(coords.len()),
            Some(nn) if nn != coords.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {} coordinates, got {}",
                    lineno + 1,
                    nn,
                    coords.len()
                )));
            }
            _ => {}
        }
        points.push(Point::new(&coords));
    }
    let n = n.ok_or_else(|| Error::Parse("no points in input".into()))?;
    let h = match h {
        Some(h) => h,
        None => estimate_h(&points),
    };
    SampledSet::new(points, h, n, d)
}

fn estimate_h(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return 1e-3;
    }
    let grid = crate::geom::PointGrid::build(points, crate::MAX_DIM, {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            for a in 0..crate::MAX_DIM {
                lo.c[a] = lo.c[a].min(p.c[a]);
                hi.c[a] = hi.c[a].max(p.c[a]);
            }
        }
        (hi.sub(&lo).norm() / (points.len() as f64).cbrt()).max(1e-9)
    });
    let mut worst = 0.0f64;
    for (i, p) in points.iter().enumerate().step_by((points.len() / 256).max(1)) {
        let mut best = f64::INFINITY;
        for j in grid.in_ball(p, worst.max(1e-6) * 8.0 + 1e-6) {
            if j != i {
                best = best.min(points[j].dist(p));
            }
        }
        if best.is_finite() {
            worst = worst.max(best);
        }
    }
    (2.0 * worst).max(1e-9)
}

/// Serialize a skeleton: a JSON list of {level, corner, dim, frozen_axes,
/// side} records.
pub fn skeleton_to_json(s: &SkeletonSet) -> serde_json::Value {
    let faces: Vec<serde_json::Value> = s
        .faces()
        .iter()
        .map(|f| {
            serde_json::json!({
                "level": f.level,
                "corner": f.corner[..f.n as usize].to_vec(),
                "dim": f.dim(),
                "frozen_axes": f.frozen_axes(),
                "side": f.side(),
            })
        })
        .collect();
    serde_json::json!({"n": s.n, "dim": s.dim, "faces": faces})
}

/// Run configuration: ordered key=value pairs with typed accessors.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", i + 1)))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(RunConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key}: {e}"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.entries.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| Error::Parse(format!("config key {key}: {e}"))),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Content hash over the canonical key=value listing.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.entries {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reproducibility header carried by every report: the full configuration,
/// its hash, and the standing measure-proxy and lambda notes.
#[derive(Clone, Debug, Serialize)]
pub struct RunHeader {
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub lambda: f64,
    pub measure_proxy: &'static str,
    pub notes: Vec<String>,
    pub config: BTreeMap<String, String>,
}

impl RunHeader {
    pub fn new(cfg: &RunConfig, seed: u64, lambda: f64) -> RunHeader {
        RunHeader {
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            seed,
            lambda,
            measure_proxy: "dyadic-content",
            notes: vec![format!(
                "net parameter lambda = {lambda}; the cube-theorem containment \
                 constant is measured, not enforced"
            )],
            config: cfg.entries.clone(),
        }
    }
}

/// Canonical CSV rendering of per-scale tables: "# k=v" comment header lines
/// then rows.
pub fn csv_with_header(header: &RunHeader, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# version={} config_hash={} seed={}\n",
        header.version, header.config_hash, header.seed
    ));
    out.push_str(&format!("{}\n", columns.join(",")));
    for row in rows {
        out.push_str(&format!("{}\n", row.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, GeneratorSpec, Kind};

    #[test]
    fn point_cloud_round_trip() {
        let (set, _) = generate(&GeneratorSpec {
            kind: Kind::Plane { n: 3, d: 2 },
            h: 0.1,
            seed: 0,
        })
        .unwrap();
        let mut buf = Vec::new();
        write_point_cloud(&mut buf, &set).unwrap();
        let back = read_point_cloud(&buf[..]).unwrap();
        assert_eq!(back.n, 3);
        assert_eq!(back.d, 2);
        assert_eq!(back.h, set.h);
        assert_eq!(back.points, set.points);
    }

    #[test]
    fn headerless_input_infers_dimensions() {
        let text = "0 0\n1 0\n0.5 0.5\n";
        let set = read_point_cloud(text.as_bytes()).unwrap();
        assert_eq!(set.n, 2);
        assert_eq!(set.points.len(), 3);
    }

    #[test]
    fn config_hash_is_order_independent_and_sensitive() {
        let a = RunConfig::parse("x=1\ny=2\n").unwrap();
        let b = RunConfig::parse("y=2\nx=1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::parse("x=1\ny=3\n").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn config_rejects_garbage() {
        assert!(RunConfig::parse("just words\n").is_err());
        let cfg = RunConfig::parse("p=2.0\n# comment\n\nd=1\n").unwrap();
        assert_eq!(cfg.get_f64("p", 0.0).unwrap(), 2.0);
        assert_eq!(cfg.get_u64("d", 0).unwrap(), 1);
        assert!(cfg.get_f64("p", 0.0).is_ok());
        let bad = RunConfig::parse("p=abc\n").unwrap();
        assert!(bad.get_f64("p", 0.0).is_err());
    }
}
