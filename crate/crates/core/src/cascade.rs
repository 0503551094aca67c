//! Social graph and cascade ingestion, friendship-hop distances and the
//! observed density field.
//!
//! An edge `(follower, followee)` means the follower sees the followee's
//! posts, so content travels followee -> follower and hop distances are
//! computed over the reversed follow edges.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::hash::Hash;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{csv_err, DensityField, DensityMode};

pub type UserId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    user_count: usize,
    edges: Vec<(UserId, UserId)>,
    /// `followers[v]` lists every `u` with an edge `u -> v`.
    followers: Vec<Vec<UserId>>,
}

impl SocialGraph {
    /// Build a graph over ids `0..user_count`. Duplicate edges are collapsed.
    pub fn new(user_count: usize, edges: impl IntoIterator<Item = (UserId, UserId)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (follower, followee) in edges {
            if follower == followee {
                return Err(Error::validation(format!("self-loop on user {follower}")));
            }
            for id in [follower, followee] {
                if id as usize >= user_count {
                    return Err(Error::validation(format!(
                        "user id {id} out of range (user_count = {user_count})"
                    )));
                }
            }
            set.insert((follower, followee));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut followers = vec![Vec::new(); user_count];
        for &(u, v) in &edges {
            followers[v as usize].push(u);
        }
        Ok(Self {
            user_count,
            edges,
            followers,
        })
    }

    /// Build a graph from raw edge records; `user_count` is one past the largest id.
    pub fn from_edges(edges: &[(UserId, UserId)]) -> Result<Self> {
        let user_count = edges
            .iter()
            .map(|&(a, b)| a.max(b) as usize + 1)
            .max()
            .unwrap_or(0);
        Self::new(user_count, edges.iter().copied())
    }

    pub fn user_count(&self) -> usize {
        self.user_count
    }

    pub fn edges(&self) -> &[(UserId, UserId)] {
        &self.edges
    }

    pub fn followers_of(&self, user: UserId) -> &[UserId] {
        &self.followers[user as usize]
    }

    /// Same edge set over a larger id range (used when cascade files mention
    /// users that have no edges).
    pub fn with_user_count(&self, user_count: usize) -> Result<Self> {
        if user_count < self.user_count {
            return Err(Error::validation("user_count may only grow"));
        }
        Self::new(user_count, self.edges.iter().copied())
    }
}

/// Parse a `follower,followee` CSV into edge records.
pub fn read_edge_records<R: Read>(input: R, source_name: &str) -> Result<Vec<(UserId, UserId)>> {
    let rows = read_rows(input, source_name, &["follower", "followee"])?;
    rows.into_iter()
        .map(|(line, cells)| {
            let a = parse_id(&cells[0], source_name, line)?;
            let b = parse_id(&cells[1], source_name, line)?;
            Ok((a, b))
        })
        .collect()
}

/// Load a graph from edge records, rejecting self-loops.
pub fn load_graph(edge_records: &[(UserId, UserId)]) -> Result<SocialGraph> {
    SocialGraph::from_edges(edge_records)
}

/// Adoption events of one story, ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    sources: BTreeSet<UserId>,
    events: Vec<(UserId, f64)>,
}

impl Cascade {
    /// Keeps only the earliest adoption of each user. Sources absent from
    /// `events` are added at time 0; a source adopting later than 0 is an error.
    pub fn new(sources: BTreeSet<UserId>, events: Vec<(UserId, f64)>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::validation("cascade needs at least one source"));
        }
        let mut first: BTreeMap<UserId, f64> = BTreeMap::new();
        for (user, t) in events {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::validation(format!(
                    "user {user}: adoption time {t} is not a non-negative number"
                )));
            }
            first
                .entry(user)
                .and_modify(|cur| *cur = cur.min(t))
                .or_insert(t);
        }
        for &s in &sources {
            match first.get(&s) {
                Some(&t) if t != 0.0 => {
                    return Err(Error::validation(format!(
                        "source {s} adopts at t = {t}, expected 0"
                    )));
                }
                Some(_) => {}
                None => {
                    first.insert(s, 0.0);
                }
            }
        }
        let mut events: Vec<_> = first.into_iter().collect();
        events.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(Self { sources, events })
    }

    pub fn sources(&self) -> &BTreeSet<UserId> {
        &self.sources
    }

    pub fn events(&self) -> &[(UserId, f64)] {
        &self.events
    }

    pub fn max_user(&self) -> Option<UserId> {
        self.events.iter().map(|e| e.0).max()
    }
}

/// Parse a `user_id,time_hours` CSV.
pub fn read_cascade_events<R: Read>(input: R, source_name: &str) -> Result<Vec<(UserId, f64)>> {
    let rows = read_rows(input, source_name, &["user_id", "time_hours"])?;
    rows.into_iter()
        .map(|(line, cells)| {
            let user = parse_id(&cells[0], source_name, line)?;
            let t: f64 = cells[1].trim().parse().map_err(|_| Error::Parse {
                source_name: source_name.to_string(),
                line,
                msg: format!("bad time `{}`", cells[1]),
            })?;
            Ok((user, t))
        })
        .collect()
}

/// Parse a sources file: one id per line, blank lines ignored.
pub fn read_sources<R: Read>(mut input: R, source_name: &str) -> Result<BTreeSet<UserId>> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io(source_name, e))?;
    let mut out = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_s = line.trim();
        if line_s.is_empty() {
            continue;
        }
        out.insert(parse_id(line_s, source_name, i + 1)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    distances: Vec<Option<u32>>,
    unreachable_count: usize,
}

impl DistanceMap {
    pub fn get(&self, user: UserId) -> Option<u32> {
        self.distances.get(user as usize).copied().flatten()
    }

    pub fn unreachable_count(&self) -> usize {
        self.unreachable_count
    }

    /// `(user, distance)` for every reachable user, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (UserId, u32)> + '_ {
        self.distances
            .iter()
            .enumerate()
            .filter_map(|(u, d)| d.map(|d| (u as UserId, d)))
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.distances
    }

    /// Reassemble from a per-user table, e.g. a previously written `distances.csv`.
    pub fn from_entries(user_count: usize, entries: impl IntoIterator<Item = (UserId, u32)>) -> Result<Self> {
        let mut distances = vec![None; user_count];
        for (u, d) in entries {
            let slot = distances
                .get_mut(u as usize)
                .ok_or_else(|| Error::validation(format!("user {u} out of range")))?;
            *slot = Some(d);
        }
        let unreachable_count = distances.iter().filter(|d| d.is_none()).count();
        Ok(Self {
            distances,
            unreachable_count,
        })
    }

    /// Number of users at each distance.
    pub fn group_sizes(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for (_, d) in self.iter() {
            *out.entry(d).or_insert(0) += 1;
        }
        out
    }
}

/// Write `user_id,distance` for every reachable user.
pub fn write_distance_table<W: Write>(dist: &DistanceMap, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["user_id", "distance"]).map_err(csv_err)?;
    for (u, d) in dist.iter() {
        wtr.write_record([u.to_string(), d.to_string()]).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<distance csv>", e))?;
    Ok(())
}

/// Parse a `user_id,distance` CSV.
pub fn read_distance_records<R: Read>(input: R, source_name: &str) -> Result<Vec<(UserId, u32)>> {
    let rows = read_rows(input, source_name, &["user_id", "distance"])?;
    rows.into_iter()
        .map(|(line, cells)| {
            let user = parse_id(&cells[0], source_name, line)?;
            let d = parse_id(&cells[1], source_name, line)?;
            Ok((user, d))
        })
        .collect()
}

/// Multi-source breadth-first search along content-flow direction.
pub fn hop_distances(graph: &SocialGraph, sources: &BTreeSet<UserId>) -> Result<DistanceMap> {
    if sources.is_empty() {
        return Err(Error::validation("at least one source is required"));
    }
    let mut distances = vec![None; graph.user_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if s as usize >= graph.user_count() {
            return Err(Error::validation(format!("unknown source id {s}")));
        }
        distances[s as usize] = Some(0);
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        let next = distances[v as usize].unwrap() + 1;
        for &u in graph.followers_of(v) {
            if distances[u as usize].is_none() {
                distances[u as usize] = Some(next);
                queue.push_back(u);
            }
        }
    }
    let unreachable_count = distances.iter().filter(|d| d.is_none()).count();
    Ok(DistanceMap {
        distances,
        unreachable_count,
    })
}

/// Jaccard distance `1 - |A ∩ B| / |A ∪ B|` between two users' content sets.
pub fn interest_distance<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Result<f64> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return Err(Error::UndefinedDistance);
    }
    Ok(1.0 - inter as f64 / union as f64)
}

/// Which users make up the denominator group `U_x`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    /// Every reachable user at distance `x`.
    #[default]
    Reachable,
    /// Only users at distance `x` who adopt at some point.
    Adopters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub field: DensityField,
    /// Adopters with no path from any source.
    pub skipped_adopters: usize,
    pub unreachable_users: usize,
}

/// Observed density `I(x, t)` for every distance `x >= 1` with a non-empty group.
pub fn density_field(
    graph: &SocialGraph,
    cascade: &Cascade,
    time_grid: &[f64],
    mode: DensityMode,
    population: Population,
) -> Result<DensityReport> {
    if let Some(max) = cascade.max_user() {
        if max as usize >= graph.user_count() {
            return Err(Error::validation(format!("cascade user {max} not in graph")));
        }
    }
    let dist = hop_distances(graph, cascade.sources())?;
    density_from_distances(&dist, cascade, time_grid, mode, population)
}

/// Same as [`density_field`] but with precomputed distances.
pub fn density_from_distances(
    dist: &DistanceMap,
    cascade: &Cascade,
    time_grid: &[f64],
    mode: DensityMode,
    population: Population,
) -> Result<DensityReport> {
    if !time_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::validation("time grid must be strictly increasing"));
    }
    let mut adoptions: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut skipped = 0;
    for &(user, t) in cascade.events() {
        if cascade.sources().contains(&user) {
            continue;
        }
        match dist.get(user) {
            Some(0) => {}
            Some(x) => adoptions.entry(x).or_default().push(t),
            None => skipped += 1,
        }
    }
    let mut group_sizes = match population {
        Population::Reachable => dist.group_sizes(),
        Population::Adopters => adoptions.iter().map(|(&x, v)| (x, v.len())).collect(),
    };
    group_sizes.remove(&0);
    group_sizes.retain(|_, n| *n > 0);

    let mut distances = Vec::with_capacity(group_sizes.len());
    let mut values = Vec::with_capacity(group_sizes.len());
    for (&x, &size) in &group_sizes {
        let times = adoptions.get(&x).map(Vec::as_slice).unwrap_or(&[]);
        let row = time_grid
            .iter()
            .map(|&t| {
                let n = times.iter().filter(|&&a| a <= t).count() as f64;
                match mode {
                    DensityMode::Ratio => n / size as f64,
                    DensityMode::Count => n,
                }
            })
            .collect();
        distances.push(x);
        values.push(row);
    }
    let field = DensityField::new(distances, time_grid.to_vec(), values, mode, group_sizes)?;
    Ok(DensityReport {
        field,
        skipped_adopters: skipped,
        unreachable_users: dist.unreachable_count(),
    })
}

fn parse_id(cell: &str, source_name: &str, line: usize) -> Result<UserId> {
    cell.trim().parse().map_err(|_| Error::Parse {
        source_name: source_name.to_string(),
        line,
        msg: format!("`{cell}` is not a non-negative integer id"),
    })
}

/// Rows of a two-column CSV with the given header, tagged with 1-based line numbers.
fn read_rows<R: Read>(
    input: R,
    source_name: &str,
    header: &[&str; 2],
) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line,
            msg: e.to_string(),
        })?;
        if line == 1 {
            if rec.len() != 2 || &rec[0] != header[0] || &rec[1] != header[1] {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    msg: format!("expected header `{},{}`", header[0], header[1]),
                });
            }
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}
