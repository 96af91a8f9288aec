//! Randomly weighted complete graphs.
//!
//! Vertices are `0..n`; the source terminal is vertex 0 and the target is
//! vertex 1. Each unordered edge `{u, v}` carries an independent length and
//! cost drawn through [`edge_weight`], so an [`Instance`] can be held either
//! as a dense table or as nothing but its header.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Channel};

/// Source vertex.
pub const SOURCE: usize = 0;
/// Target vertex.
pub const TARGET: usize = 1;

/// Default ceiling on materialized edges, `2^25` (admits `n = 8192`).
pub const DEFAULT_EDGE_CAP: usize = 1 << 25;

const FILE_MAGIC: &str = "cspath-instance v1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("instance needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("materializing {edges} edges exceeds the cap of {cap}")]
    EdgeCap { edges: usize, cap: usize },
    #[error("malformed instance file at line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("expected {expected} edges, found {found}")]
    EdgeCount { expected: usize, found: usize },
    #[error("edge ({u},{v}) {channel} weight {value} is outside the support of {dist}")]
    Validation {
        u: usize,
        v: usize,
        channel: &'static str,
        value: f64,
        dist: DistributionSpec,
    },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Edge-weight distribution.
///
/// Text form: `uniform`, `upow:<gamma>`, `exppow:<s>`, `texppow:<s>:<threshold>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistributionSpec {
    /// `U`, uniform on `(0, 1]`.
    Uniform,
    /// `U^gamma`, `0 < gamma <= 1`.
    UniformPower(f64),
    /// `xi^s` with `xi ~ Exp(1)`, `0 < s < 1`.
    ExpPower(f64),
    /// `xi^s` when `xi <= threshold`, otherwise the edge is removed (`inf`).
    TruncatedExpPower { s: f64, threshold: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |m: String| Err(InstanceError::InvalidDistribution(m));
        match *self {
            Self::Uniform => Ok(()),
            Self::UniformPower(g) if !(g > 0.0 && g <= 1.0) => {
                bad(format!("gamma must lie in (0, 1], got {g}"))
            }
            Self::ExpPower(s) if !(s > 0.0 && s < 1.0) => {
                bad(format!("s must lie in (0, 1), got {s}"))
            }
            Self::TruncatedExpPower { s, .. } if !(s > 0.0 && s < 1.0) => {
                bad(format!("s must lie in (0, 1), got {s}"))
            }
            Self::TruncatedExpPower { threshold, .. } if !(threshold > 0.0) => {
                bad(format!("threshold must be positive, got {threshold}"))
            }
            _ => Ok(()),
        }
    }

    /// Transform a uniform draw in `[2^-53, 1]`.
    #[inline]
    pub fn transform(&self, u: f64) -> f64 {
        match *self {
            Self::Uniform => u,
            Self::UniformPower(g) => u.powf(g),
            Self::ExpPower(s) => (0.0 - u.ln()).powf(s),
            Self::TruncatedExpPower { s, threshold } => {
                let xi = 0.0 - u.ln();
                if xi <= threshold {
                    xi.powf(s)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// The `gamma` of a uniform-power law (`1` for `Uniform`).
    pub fn uniform_gamma(&self) -> Option<f64> {
        match *self {
            Self::Uniform => Some(1.0),
            Self::UniformPower(g) => Some(g),
            _ => None,
        }
    }

    fn admits(&self, w: f64) -> bool {
        match self {
            Self::Uniform | Self::UniformPower(_) => w > 0.0 && w <= 1.0,
            Self::ExpPower(_) => w >= 0.0 && w.is_finite(),
            Self::TruncatedExpPower { .. } => w >= 0.0,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform => write!(f, "uniform"),
            Self::UniformPower(g) => write!(f, "upow:{g}"),
            Self::ExpPower(s) => write!(f, "exppow:{s}"),
            Self::TruncatedExpPower { s, threshold } => write!(f, "texppow:{s}:{threshold}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = InstanceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| InstanceError::InvalidDistribution(format!("bad number {s:?} in {text:?}")))
        };
        let spec = match parts.as_slice() {
            ["uniform"] => Self::Uniform,
            ["upow", g] => Self::UniformPower(num(g)?),
            ["exppow", s] => Self::ExpPower(num(s)?),
            ["texppow", s, t] => Self::TruncatedExpPower {
                s: num(s)?,
                threshold: num(t)?,
            },
            _ => return Err(InstanceError::InvalidDistribution(format!("unknown distribution {text:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Deterministic weight of edge `{u, v}` on one channel.
///
/// Symmetric in `u` and `v`; the pair is ordered internally.
pub fn edge_weight(seed: u64, u: usize, v: usize, channel: Channel, dist: DistributionSpec) -> f64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    dist.transform(rng::unit(rng::edge_bits(seed, a, b, channel)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub length: f64,
    pub cost: f64,
}

impl EdgeWeight {
    #[inline]
    pub fn is_finite(&self) -> bool {
        self.length.is_finite() && self.cost.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StorageMode {
    Materialized,
    Implicit,
}

/// A complete graph `K_n` with per-edge `(length, cost)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    seed: u64,
    length_dist: DistributionSpec,
    cost_dist: DistributionSpec,
    keys: [u64; 2],
    // Dense symmetric n*n table, diagonal unused; `None` when implicit.
    table: Option<Vec<EdgeWeight>>,
}

impl Instance {
    pub fn generate(
        n: usize,
        seed: u64,
        length_dist: DistributionSpec,
        cost_dist: DistributionSpec,
        storage: StorageMode,
    ) -> Result<Self, InstanceError> {
        Self::generate_with_cap(n, seed, length_dist, cost_dist, storage, DEFAULT_EDGE_CAP)
    }

    pub fn generate_with_cap(
        n: usize,
        seed: u64,
        length_dist: DistributionSpec,
        cost_dist: DistributionSpec,
        storage: StorageMode,
        edge_cap: usize,
    ) -> Result<Self, InstanceError> {
        if n < 2 {
            return Err(InstanceError::TooFewVertices(n));
        }
        length_dist.validate()?;
        cost_dist.validate()?;
        let mut inst = Self {
            n,
            seed,
            length_dist,
            cost_dist,
            keys: [
                rng::channel_key(seed, Channel::Length),
                rng::channel_key(seed, Channel::Cost),
            ],
            table: None,
        };
        if storage == StorageMode::Materialized {
            let edges = edge_count(n);
            if edges > edge_cap {
                return Err(InstanceError::EdgeCap { edges, cap: edge_cap });
            }
            let mut table = vec![EdgeWeight { length: 0.0, cost: 0.0 }; n * n];
            for u in 0..n {
                for v in u + 1..n {
                    let w = inst.draw(u, v);
                    table[u * n + v] = w;
                    table[v * n + u] = w;
                }
            }
            inst.table = Some(table);
        }
        Ok(inst)
    }

    /// Build a materialized instance from explicit weights listed in
    /// lexicographic `(u, v)` order, `u < v`.
    pub fn from_edge_list(
        n: usize,
        seed: u64,
        length_dist: DistributionSpec,
        cost_dist: DistributionSpec,
        edges: &[EdgeWeight],
    ) -> Result<Self, InstanceError> {
        if n < 2 {
            return Err(InstanceError::TooFewVertices(n));
        }
        length_dist.validate()?;
        cost_dist.validate()?;
        if edges.len() != edge_count(n) {
            return Err(InstanceError::EdgeCount {
                expected: edge_count(n),
                found: edges.len(),
            });
        }
        let mut table = vec![EdgeWeight { length: 0.0, cost: 0.0 }; n * n];
        let mut it = edges.iter();
        for u in 0..n {
            for v in u + 1..n {
                let w = *it.next().expect("edge count checked");
                check_weight(u, v, "length", w.length, length_dist)?;
                check_weight(u, v, "cost", w.cost, cost_dist)?;
                table[u * n + v] = w;
                table[v * n + u] = w;
            }
        }
        Ok(Self {
            n,
            seed,
            length_dist,
            cost_dist,
            keys: [
                rng::channel_key(seed, Channel::Length),
                rng::channel_key(seed, Channel::Cost),
            ],
            table: Some(table),
        })
    }

    /// Convenience for hand-built uniform test graphs.
    pub fn from_uniform_edges(n: usize, edges: &[(f64, f64)]) -> Result<Self, InstanceError> {
        let edges: Vec<EdgeWeight> = edges
            .iter()
            .map(|&(length, cost)| EdgeWeight { length, cost })
            .collect();
        Self::from_edge_list(n, 0, DistributionSpec::Uniform, DistributionSpec::Uniform, &edges)
    }

    #[inline]
    fn draw(&self, u: usize, v: usize) -> EdgeWeight {
        let ctr = rng::edge_counter(u, v);
        EdgeWeight {
            length: self.length_dist.transform(rng::unit(rng::mix64(self.keys[0] ^ ctr))),
            cost: self.cost_dist.transform(rng::unit(rng::mix64(self.keys[1] ^ ctr))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn length_dist(&self) -> DistributionSpec {
        self.length_dist
    }

    pub fn cost_dist(&self) -> DistributionSpec {
        self.cost_dist
    }

    pub fn storage(&self) -> StorageMode {
        if self.table.is_some() {
            StorageMode::Materialized
        } else {
            StorageMode::Implicit
        }
    }

    /// Weight of edge `{u, v}`, `u != v`.
    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> EdgeWeight {
        debug_assert!(u != v && u < self.n && v < self.n);
        match &self.table {
            Some(t) => t[u * self.n + v],
            None if u < v => self.draw(u, v),
            None => self.draw(v, u),
        }
    }

    /// Visit every neighbour of `u` in increasing vertex order.
    #[inline]
    pub fn for_each_neighbor(&self, u: usize, mut f: impl FnMut(usize, EdgeWeight)) {
        match &self.table {
            Some(t) => {
                let row = &t[u * self.n..(u + 1) * self.n];
                for (v, &w) in row.iter().enumerate() {
                    if v != u {
                        f(v, w);
                    }
                }
            }
            None => {
                for v in 0..u {
                    f(v, self.draw(v, u));
                }
                for v in u + 1..self.n {
                    f(v, self.draw(u, v));
                }
            }
        }
    }

    /// All edges `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeWeight)> + '_ {
        (0..self.n).flat_map(move |u| (u + 1..self.n).map(move |v| (u, v, self.weight(u, v))))
    }

    /// Materialized copy of this instance (a no-op clone when already dense).
    pub fn materialize(&self, edge_cap: usize) -> Result<Self, InstanceError> {
        if self.table.is_some() {
            return Ok(self.clone());
        }
        Self::generate_with_cap(
            self.n,
            self.seed,
            self.length_dist,
            self.cost_dist,
            StorageMode::Materialized,
            edge_cap,
        )
    }

    pub fn header_line(&self) -> String {
        format!(
            "n={} seed={} ldist={} cdist={} storage={}",
            self.n,
            self.seed,
            self.length_dist,
            self.cost_dist,
            match self.storage() {
                StorageMode::Materialized => "materialized",
                StorageMode::Implicit => "implicit",
            }
        )
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<(), InstanceError> {
        writeln!(out, "{FILE_MAGIC}")?;
        writeln!(out, "{}", self.header_line())?;
        if self.storage() == StorageMode::Implicit {
            return Ok(());
        }
        for (u, v, w) in self.edges() {
            writeln!(out, "{u} {v} {} {}", fmt_decimal(w.length), fmt_decimal(w.cost))?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, InstanceError> {
        let mut lines = input.lines().enumerate();
        let mut next_line = || -> Result<Option<(usize, String)>, InstanceError> {
            match lines.next() {
                Some((i, l)) => Ok(Some((i + 1, l?))),
                None => Ok(None),
            }
        };
        let malformed = |line: usize, msg: &str| InstanceError::Malformed {
            line,
            msg: msg.to_string(),
        };

        match next_line()? {
            Some((_, l)) if l.trim() == FILE_MAGIC => {}
            _ => return Err(malformed(1, "missing `cspath-instance v1` magic line")),
        }
        let (_, header) = next_line()?.ok_or_else(|| malformed(2, "missing header"))?;
        let mut n = None;
        let mut seed = None;
        let mut ldist = None;
        let mut cdist = None;
        let mut storage = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| malformed(2, "header fields must be key=value"))?;
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| malformed(2, "bad n"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| malformed(2, "bad seed"))?),
                "ldist" => ldist = Some(value.parse::<DistributionSpec>()?),
                "cdist" => cdist = Some(value.parse::<DistributionSpec>()?),
                "storage" if value == "materialized" => storage = Some(StorageMode::Materialized),
                "storage" if value == "implicit" => storage = Some(StorageMode::Implicit),
                _ => return Err(malformed(2, &format!("unexpected header field {field:?}"))),
            }
        }
        let (Some(n), Some(seed), Some(ldist), Some(cdist), Some(storage)) = (n, seed, ldist, cdist, storage)
        else {
            return Err(malformed(2, "header needs n, seed, ldist, cdist, storage"));
        };
        if n < 2 {
            return Err(InstanceError::TooFewVertices(n));
        }
        if storage == StorageMode::Implicit {
            while let Some((line_no, line)) = next_line()? {
                if !line.trim().is_empty() {
                    return Err(malformed(line_no, "implicit instances carry no edge lines"));
                }
            }
            return Self::generate_with_cap(n, seed, ldist, cdist, StorageMode::Implicit, usize::MAX);
        }

        let expected = edge_count(n);
        let mut edges = Vec::with_capacity(expected);
        let (mut eu, mut ev) = (0usize, 1usize);
        while let Some((line_no, line)) = next_line()? {
            if line.trim().is_empty() {
                continue;
            }
            if edges.len() == expected {
                return Err(InstanceError::EdgeCount {
                    expected,
                    found: expected + 1,
                });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(malformed(line_no, "edge lines have 4 fields: u v w c"));
            }
            let u: usize = fields[0].parse().map_err(|_| malformed(line_no, "bad u"))?;
            let v: usize = fields[1].parse().map_err(|_| malformed(line_no, "bad v"))?;
            if (u, v) != (eu, ev) {
                return Err(malformed(line_no, &format!("expected edge ({eu},{ev}), found ({u},{v})")));
            }
            let w = parse_decimal(fields[2]).ok_or_else(|| malformed(line_no, "bad length"))?;
            let c = parse_decimal(fields[3]).ok_or_else(|| malformed(line_no, "bad cost"))?;
            edges.push(EdgeWeight { length: w, cost: c });
            ev += 1;
            if ev == n {
                eu += 1;
                ev = eu + 1;
            }
        }
        if edges.len() != expected {
            return Err(InstanceError::EdgeCount {
                expected,
                found: edges.len(),
            });
        }
        Self::from_edge_list(n, seed, ldist, cdist, &edges)
    }

    pub fn write_instance(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_instance(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn check_weight(u: usize, v: usize, channel: &'static str, value: f64, dist: DistributionSpec) -> Result<(), InstanceError> {
    if dist.admits(value) {
        Ok(())
    } else {
        Err(InstanceError::Validation { u, v, channel, value, dist })
    }
}

#[inline]
pub fn edge_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// 17 significant digits, `inf` for infinity. Round-trips every `f64`.
pub fn fmt_decimal(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_decimal(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

/// A simple `0 -> 1` path with its accumulated weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub vertices: Vec<usize>,
    pub length: f64,
    pub cost: f64,
    pub hops: usize,
}

impl PathResult {
    /// Sums weights edge by edge starting from the first vertex.
    pub fn from_vertices(instance: &Instance, vertices: Vec<usize>) -> Self {
        let (mut length, mut cost) = (0.0, 0.0);
        for pair in vertices.windows(2) {
            let w = instance.weight(pair[0], pair[1]);
            length += w.length;
            cost += w.cost;
        }
        let hops = vertices.len().saturating_sub(1);
        Self { vertices, length, cost, hops }
    }

    /// Recompute sums from the instance and check the path's shape.
    pub fn verify(&self, instance: &Instance) -> Result<(), InstanceError> {
        let bad = |m: String| Err(InstanceError::InvalidPath(m));
        if self.vertices.first() != Some(&SOURCE) || self.vertices.last() != Some(&TARGET) {
            return bad(format!("path must run from {SOURCE} to {TARGET}"));
        }
        let mut seen = vec![false; instance.n()];
        for &v in &self.vertices {
            if v >= instance.n() || std::mem::replace(&mut seen[v], true) {
                return bad(format!("vertex {v} repeated or out of range"));
            }
        }
        if self.hops + 1 != self.vertices.len() {
            return bad(format!("hops {} disagrees with {} vertices", self.hops, self.vertices.len()));
        }
        let again = Self::from_vertices(instance, self.vertices.clone());
        if !close_rel(again.length, self.length, 1e-12) || !close_rel(again.cost, self.cost, 1e-12) {
            return bad(format!(
                "recomputed (length, cost) = ({}, {}) but reported ({}, {})",
                again.length, again.cost, self.length, self.cost
            ));
        }
        Ok(())
    }
}

pub(crate) fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
