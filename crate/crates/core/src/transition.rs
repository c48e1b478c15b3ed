//! Three-valued transition graph of a map on a dyadic subdivision.

use crate::dynamics::{Direction, MapSpec};
use crate::error::{Error, Result};
use crate::geometry::{axis_gap, interval_distance_lb, wrap_centered, AxisBox, Space, Subdivision};
use crate::interval::Interval;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EdgeStatus {
    CertifiedNonempty { witness: Vec<f64> },
    Uncertain,
    CertifiedEmpty { gap: f64 },
}

impl EdgeStatus {
    pub fn is_nonempty(&self) -> bool {
        matches!(self, EdgeStatus::CertifiedNonempty { .. })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, EdgeStatus::CertifiedEmpty { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            EdgeStatus::CertifiedNonempty { .. } => "nonempty",
            EdgeStatus::Uncertain => "uncertain",
            EdgeStatus::CertifiedEmpty { .. } => "empty",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Witness lattice per axis (points `t / s`, `t = 0..=s`).
    pub samples_per_cube: usize,
    /// Bisection depth used to resolve pairs whose enclosure touches the cube.
    pub refine_depth: u32,
    /// Tighten empty-pair gaps so the minimum gap is known to `tighten_tol`.
    pub tighten: bool,
    pub tighten_tol: f64,
    pub max_leaves: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { samples_per_cube: 8, refine_depth: 3, tighten: true, tighten_tol: 1e-5, max_leaves: 20_000 }
    }
}

#[derive(Clone, Debug)]
struct Row {
    image: Vec<Interval>,
    explicit: BTreeMap<usize, EdgeStatus>,
}

/// Edge relation over all ordered cube pairs. Pairs whose enclosure touches
/// the target, and every tightened empty pair, are stored; the status of any
/// other pair is `CertifiedEmpty` with the enclosure gap, computed on demand.
#[derive(Clone, Debug)]
pub struct TransitionGraph {
    sub: Subdivision,
    map_id: String,
    rows: Vec<Row>,
    min_gap: Option<(f64, usize, usize)>,
}

/// Result of a branch-and-bound search over sub-boxes of a source cube.
#[derive(Clone, Debug)]
pub struct PairSearch {
    pub lb: f64,
    pub ub: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(PartialEq)]
struct Cell {
    lb: f64,
    depth: u32,
    bx: AxisBox,
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on lb, then shallower first, then lexicographic box
        other.lb.total_cmp(&self.lb).then(other.depth.cmp(&self.depth)).then_with(|| {
            other.bx.lo().iter().zip(self.bx.lo()).fold(Ordering::Equal, |acc, (a, b)| acc.then(a.total_cmp(b)))
        })
    }
}

/// Whether an enclosure (as a lift) lies inside a closed box, modulo integer
/// shifts on the torus.
pub fn enclosure_inside(space: Space, img: &[Interval], target: &AxisBox) -> bool {
    img.iter().enumerate().all(|(d, iv)| {
        let t = target.interval(d);
        match space {
            Space::Cube => t.lo <= iv.lo && iv.hi <= t.hi,
            Space::Torus => {
                let k = (iv.lo - t.lo).floor();
                [k - 1.0, k, k + 1.0].iter().any(|&s| t.lo <= iv.lo - s && iv.hi - s <= t.hi && iv.lo - s >= t.lo)
            }
        }
    })
}

fn point_box_distance(space: Space, p: &[f64], b: &AxisBox) -> f64 {
    p.iter()
        .enumerate()
        .map(|(d, &x)| {
            let (l, h) = (b.lo()[d], b.hi()[d]);
            let g = match space {
                Space::Cube => (l - x).max(x - h).max(0.0),
                Space::Torus => {
                    let c = 0.5 * (l + h);
                    (wrap_centered(x - c).abs() - 0.5 * (h - l)).max(0.0)
                }
            };
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

/// Best-first bisection of `src` bounding `inf dist(f(x), dst)` over `x` in
/// `src`. Stops once the bracket is below `tol`, once the lower bound reaches
/// `stop_above`, when a certified witness is found, or at the depth/leaf caps.
pub fn pair_search(
    f: &MapSpec,
    src: &AxisBox,
    dst: &AxisBox,
    max_depth: u32,
    tol: f64,
    stop_above: f64,
    max_leaves: usize,
) -> Result<PairSearch> {
    let space = f.space();
    let dsti = dst.intervals();
    let lb_of = |b: &AxisBox| -> Result<f64> {
        let img = f.eval_intervals(Direction::Forward, &b.intervals())?;
        Ok(interval_distance_lb(space, &img, &dsti))
    };
    let mut heap = BinaryHeap::new();
    heap.push(Cell { lb: lb_of(src)?, depth: 0, bx: src.clone() });
    let mut ub = f64::INFINITY;
    let mut floor = f64::INFINITY;
    let mut leaves = 1usize;
    while let Some(cell) = heap.pop() {
        let lb = cell.lb.min(floor);
        if cell.lb >= stop_above || ub - lb <= tol {
            return Ok(PairSearch { lb, ub, witness: None });
        }
        let c = cell.bx.center();
        let y = f.lift(Direction::Forward, &c)?;
        let d = point_box_distance(space, &y, dst);
        ub = ub.min(d);
        if d == 0.0 {
            let img =
                f.eval_intervals(Direction::Forward, &c.iter().map(|&x| Interval::point(x)).collect::<Vec<_>>())?;
            if enclosure_inside(space, &img, dst) {
                return Ok(PairSearch { lb: 0.0, ub: 0.0, witness: Some(c) });
            }
        }
        if cell.depth >= max_depth || leaves >= max_leaves {
            floor = floor.min(cell.lb);
            continue;
        }
        for child in cell.bx.children() {
            leaves += 1;
            heap.push(Cell { lb: lb_of(&child)?, depth: cell.depth + 1, bx: child });
        }
    }
    Ok(PairSearch { lb: floor, ub, witness: None })
}

/// Indices along one axis whose closed dyadic interval may meet `iv`.
fn axis_candidates(space: Space, iv: Interval, m: u32) -> Vec<u32> {
    let k = 1i64 << m;
    let kf = k as f64;
    if space == Space::Torus && iv.width() >= 1.0 {
        return (0..k as u32).collect();
    }
    let lo = (iv.lo * kf).ceil() as i64 - 1;
    let hi = (iv.hi * kf).floor() as i64;
    let mut out: Vec<u32> = Vec::new();
    for t in lo..=hi {
        let idx = match space {
            Space::Cube => {
                if t < 0 || t >= k {
                    continue;
                }
                t
            }
            Space::Torus => t.rem_euclid(k),
        };
        out.push(idx as u32);
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn sample_lattice(b: &AxisBox, s: usize) -> Vec<Vec<f64>> {
    let n = b.dim();
    let per = s + 1;
    let total = per.pow(n as u32);
    (0..total)
        .map(|mut flat| {
            let mut p = vec![0.0; n];
            for d in (0..n).rev() {
                let t = flat % per;
                flat /= per;
                let (l, h) = (b.lo()[d], b.hi()[d]);
                p[d] = if t == s { h } else { l + (h - l) * t as f64 / s as f64 };
            }
            p
        })
        .collect()
}

fn build_row(f: &MapSpec, sub: &Subdivision, i: usize, cfg: &GraphConfig) -> Result<Row> {
    let space = sub.space();
    let cube = sub.cube_box(i);
    let image = f.eval_box(Direction::Forward, &cube)?.lift;
    let per_axis: Vec<Vec<u32>> = image.iter().map(|&iv| axis_candidates(space, iv, sub.order())).collect();
    let mut candidates: Vec<usize> = vec![0];
    let k = 1usize << sub.order();
    for axis in &per_axis {
        candidates = candidates.iter().flat_map(|&acc| axis.iter().map(move |&t| acc * k + t as usize)).collect();
    }
    candidates.sort_unstable();
    candidates.retain(|&j| interval_distance_lb(space, &image, &sub.cube_box(j).intervals()) == 0.0);

    let samples = sample_lattice(&cube, cfg.samples_per_cube.max(1));
    let sample_images: Vec<Vec<Interval>> = samples
        .iter()
        .map(|p| f.eval_intervals(Direction::Forward, &p.iter().map(|&x| Interval::point(x)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;

    let mut explicit = BTreeMap::new();
    for j in candidates {
        let target = sub.cube_box(j);
        let witness = samples
            .iter()
            .zip(&sample_images)
            .find(|(_, img)| enclosure_inside(space, img, &target))
            .map(|(p, _)| p.clone());
        let status = match witness {
            Some(w) => EdgeStatus::CertifiedNonempty { witness: w },
            None => {
                let r = pair_search(f, &cube, &target, cfg.refine_depth, 0.0, f64::MIN_POSITIVE, cfg.max_leaves)?;
                match r.witness {
                    Some(w) => EdgeStatus::CertifiedNonempty { witness: w },
                    None if r.lb > 0.0 => EdgeStatus::CertifiedEmpty { gap: r.lb },
                    None => EdgeStatus::Uncertain,
                }
            }
        };
        explicit.insert(j, status);
    }
    Ok(Row { image, explicit })
}

/// Builds the transition graph of `f` on `sub`.
pub fn build_graph(f: &MapSpec, sub: &Subdivision, cfg: &GraphConfig) -> Result<TransitionGraph> {
    if cfg.samples_per_cube == 0 {
        return Err(Error::InvalidInput("samples_per_cube must be at least 1".into()));
    }
    if f.dim() != sub.dim() || f.space() != sub.space() {
        return Err(Error::InvalidInput(format!(
            "map acts on {:?}^{} but the subdivision is of {:?}^{}",
            f.space(),
            f.dim(),
            sub.space(),
            sub.dim()
        )));
    }
    f.check_endomorphism()?;
    let rows: Vec<Row> = (0..sub.count()).into_par_iter().map(|i| build_row(f, sub, i, cfg)).collect::<Result<_>>()?;
    let mut g = TransitionGraph { sub: sub.clone(), map_id: f.descriptor(), rows, min_gap: None };
    g.compute_min_gap(f, cfg)?;
    Ok(g)
}

impl TransitionGraph {
    pub fn subdivision(&self) -> &Subdivision {
        &self.sub
    }

    pub fn map_id(&self) -> &str {
        &self.map_id
    }

    pub fn edge(&self, i: usize, j: usize) -> EdgeStatus {
        let row = &self.rows[i];
        if let Some(s) = row.explicit.get(&j) {
            return s.clone();
        }
        let gap = interval_distance_lb(self.sub.space(), &row.image, &self.sub.cube_box(j).intervals());
        if gap > 0.0 {
            EdgeStatus::CertifiedEmpty { gap }
        } else {
            EdgeStatus::Uncertain
        }
    }

    /// Enclosure lift of `f(C_i)`.
    pub fn image(&self, i: usize) -> &[Interval] {
        &self.rows[i].image
    }

    /// Nonempty successors of `i` in increasing index order.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i].explicit.iter().filter(|(_, s)| s.is_nonempty()).map(|(&j, _)| j)
    }

    pub fn nonempty_edges(&self) -> Vec<(usize, usize)> {
        (0..self.rows.len()).flat_map(|i| self.successors(i).map(move |j| (i, j))).collect()
    }

    pub fn uncertain_edges(&self) -> Vec<(usize, usize)> {
        (0..self.rows.len())
            .flat_map(|i| {
                self.rows[i].explicit.iter().filter(|(_, s)| **s == EdgeStatus::Uncertain).map(move |(&j, _)| (i, j))
            })
            .collect()
    }

    /// Counts of (nonempty, uncertain, empty) over all ordered pairs.
    pub fn counts(&self) -> (usize, usize, usize) {
        let ne = self.nonempty_edges().len();
        let un = self.uncertain_edges().len();
        let total = self.rows.len() * self.rows.len();
        (ne, un, total - ne - un)
    }

    /// Visits every pair `(i, j)` not stored as nonempty/uncertain with a
    /// cheap floating estimate of its current lower bound.
    fn scan_row(&self, i: usize, mut visit: impl FnMut(f64, usize)) {
        let row = &self.rows[i];
        let space = self.sub.space();
        let k = 1usize << self.sub.order();
        let side = self.sub.side();
        let sq: Vec<Vec<f64>> = row
            .image
            .iter()
            .map(|&iv| {
                (0..k)
                    .map(|t| {
                        let g = axis_gap(space, iv, Interval::new(t as f64 * side, (t + 1) as f64 * side));
                        g * g
                    })
                    .collect()
            })
            .collect();
        let n = sq.len();
        let mut idx = vec![0usize; n];
        let mut stored = row.explicit.iter().peekable();
        for j in 0..self.sub.count() {
            if j > 0 {
                let mut d = n - 1;
                loop {
                    idx[d] += 1;
                    if idx[d] < k {
                        break;
                    }
                    idx[d] = 0;
                    d -= 1;
                }
            }
            let hit = match stored.peek() {
                Some(&(&sj, st)) if sj == j => {
                    stored.next();
                    Some(st)
                }
                _ => None,
            };
            match hit {
                Some(EdgeStatus::CertifiedEmpty { gap }) => visit(*gap, j),
                Some(_) => {}
                None => visit((0..n).map(|d| sq[d][idx[d]]).sum::<f64>().sqrt(), j),
            }
        }
    }

    /// Rigorous current lower bound of a pair that is not nonempty/uncertain.
    fn current_lb(&self, i: usize, j: usize) -> f64 {
        match self.rows[i].explicit.get(&j) {
            Some(EdgeStatus::CertifiedEmpty { gap }) => *gap,
            _ => interval_distance_lb(self.sub.space(), &self.rows[i].image, &self.sub.cube_box(j).intervals()),
        }
    }

    fn current_lbs(&self, i: usize, below: f64) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        let slack = below * (1.0 + 1e-9) + f64::MIN_POSITIVE;
        self.scan_row(i, |quick, j| {
            if quick < slack {
                let lb = self.current_lb(i, j);
                if lb < below {
                    out.push((lb, i, j));
                }
            }
        });
        out
    }

    fn row_min(&self, i: usize) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize)> = None;
        self.scan_row(i, |quick, j| {
            if best.is_none_or(|b| quick < b.0) {
                best = Some((quick, j));
            }
        });
        best.map(|(_, j)| (self.current_lb(i, j), i, j))
    }

    fn compute_min_gap(&mut self, f: &MapSpec, cfg: &GraphConfig) -> Result<()> {
        let n = self.rows.len();
        let row_min: Vec<Option<(f64, usize, usize)>> = (0..n).into_par_iter().map(|i| self.row_min(i)).collect();
        let Some(first) = row_min.iter().flatten().copied().min_by(|a, b| a.0.total_cmp(&b.0)) else {
            self.min_gap = None;
            return Ok(());
        };
        if !cfg.tighten {
            self.min_gap = Some(first);
            return Ok(());
        }
        let deep = 60;
        let tighten = |(lb, i, j): (f64, usize, usize), stop: f64| -> Result<(f64, usize, usize)> {
            let r = pair_search(
                f,
                &self.sub.cube_box(i),
                &self.sub.cube_box(j),
                deep,
                cfg.tighten_tol,
                stop,
                cfg.max_leaves,
            )?;
            Ok((r.lb.max(lb), i, j))
        };
        // `target` is a fully resolved gap; pairs whose bound gets within the
        // tolerance of it are not refined further
        let t0 = tighten(first, f64::INFINITY)?;
        let mut target = t0.0;
        let mut best = t0;
        let mut updates = vec![t0];
        let mut pending: Vec<(f64, usize, usize)> =
            (0..n).into_par_iter().flat_map_iter(|i| self.current_lbs(i, target)).collect();
        pending.retain(|p| (p.1, p.2) != (t0.1, t0.2));
        pending.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut processed = 0;
        for batch in pending.chunks(256) {
            if batch[0].0 >= target - cfg.tighten_tol {
                break;
            }
            processed += batch.len();
            let stop = target - cfg.tighten_tol;
            let done: Vec<(f64, usize, usize)> = batch.par_iter().map(|&p| tighten(p, stop)).collect::<Result<_>>()?;
            for d in done {
                if d.0 < stop {
                    target = target.min(d.0);
                }
                if d.0 < best.0 || (d.0 == best.0 && (d.1, d.2) < (best.1, best.2)) {
                    best = d;
                }
                updates.push(d);
            }
        }
        // untouched pairs below the target keep their current bound
        if let Some(p) = pending[processed..].iter().find(|p| p.0 < best.0) {
            best = *p;
        }
        for (gap, i, j) in updates {
            if gap > 0.0 {
                self.rows[i].explicit.insert(j, EdgeStatus::CertifiedEmpty { gap });
            }
        }
        self.min_gap = Some(best);
        Ok(())
    }

    /// Minimal certified gap over empty pairs and the pair attaining it.
    pub fn min_gap(&self) -> Option<(f64, usize, usize)> {
        self.min_gap
    }

    /// The δ bound: minimal gap over `CertifiedEmpty` pairs, or the space
    /// diameter if no pair is empty. In strict mode uncertain pairs are an
    /// error; otherwise they count as nonempty.
    pub fn delta_bound(&self, strict: bool) -> Result<f64> {
        let un = self.uncertain_edges().len();
        if strict && un > 0 {
            return Err(Error::UncertainEdges { count: un });
        }
        Ok(match self.min_gap {
            Some((g, _, _)) => g,
            None => self.sub.space().diameter(self.sub.dim()),
        })
    }

    /// Shortest path over nonempty edges (breadth first, smallest next index
    /// first). The returned sequence includes both endpoints.
    pub fn find_path(&self, from: usize, to: usize, max_len: usize) -> Result<Vec<usize>> {
        let count = self.rows.len();
        if from >= count || to >= count {
            return Err(Error::InvalidInput(format!("cube index out of range (count {count})")));
        }
        let mut prev = vec![usize::MAX; count];
        let mut dist = vec![usize::MAX; count];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            if dist[u] >= max_len {
                continue;
            }
            for v in self.successors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if dist[to] == usize::MAX || dist[to] > max_len {
            return Err(Error::NoPath { from, to, max_len });
        }
        let mut path = vec![to];
        while *path.last().unwrap() != from {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        Ok(path)
    }

    /// Breadth-first distances from `from` over nonempty edges.
    pub fn distances_from(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.rows.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for v in self.successors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// JSON dump. With `all_pairs` every ordered pair is listed; otherwise only
    /// stored pairs (the rest are empty with their enclosure gap).
    pub fn to_json(&self, all_pairs: bool) -> serde_json::Value {
        let mut edges = Vec::new();
        for i in 0..self.rows.len() {
            let mut push = |j: usize, s: &EdgeStatus| {
                let payload = match s {
                    EdgeStatus::CertifiedNonempty { witness } => serde_json::json!(witness),
                    EdgeStatus::Uncertain => serde_json::Value::Null,
                    EdgeStatus::CertifiedEmpty { gap } => serde_json::json!(gap),
                };
                edges.push(serde_json::json!([i, j, s.label(), payload]));
            };
            if all_pairs {
                for j in 0..self.rows.len() {
                    push(j, &self.edge(i, j));
                }
            } else {
                for (&j, s) in &self.rows[i].explicit {
                    push(j, s);
                }
            }
        }
        let (ne, un, em) = self.counts();
        serde_json::json!({
            "map_id": self.map_id,
            "n": self.sub.dim(),
            "m": self.sub.order(),
            "space": self.sub.space(),
            "counts": {"nonempty": ne, "uncertain": un, "empty": em},
            "min_gap": self.min_gap.map(|(g, i, j)| serde_json::json!({"gap": g, "from": i, "to": j})),
            "all_pairs": all_pairs,
            "edges": edges,
        })
    }

    /// DOT export of the nonempty subgraph.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph transitions {\n");
        for i in 0..self.rows.len() {
            s.push_str(&format!("  {i} [label=\"{:?}\"];\n", self.sub.multi_index(i)));
        }
        for (i, j) in self.nonempty_edges() {
            s.push_str(&format!("  {i} -> {j};\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin_map;
    use crate::geometry::make_subdivision;

    fn graph(desc: &str, m: u32, space: Space) -> TransitionGraph {
        let f = builtin_map(desc).unwrap();
        let s = make_subdivision(f.dim(), m, space).unwrap();
        build_graph(&f, &s, &GraphConfig::default()).unwrap()
    }

    #[test]
    fn identity_torus_m1_all_nonempty() {
        let g = graph("identity", 1, Space::Torus);
        assert_eq!(g.counts(), (16, 0, 0));
        assert_eq!(g.delta_bound(true).unwrap(), 0.5f64.sqrt());
        let (from, to) = (0, g.subdivision().flat_index(&[1, 1]));
        assert_eq!(g.find_path(from, to, 5).unwrap(), vec![from, to]);
        assert_eq!(g.find_path(from, from, 0).unwrap(), vec![from]);
    }

    #[test]
    fn identity_torus_m2_gap() {
        let g = graph("identity", 2, Space::Torus);
        assert_eq!(g.delta_bound(true).unwrap(), 0.25);
        assert_eq!(g.counts().0, 16 * 9);
    }

    #[test]
    fn translation_edges() {
        let g = graph("translation [0.5,0]", 2, Space::Torus);
        let s = g.subdivision();
        let (a, b) = (s.flat_index(&[0, 0]), s.flat_index(&[2, 0]));
        assert!(g.edge(a, b).is_nonempty());
        assert_eq!(g.edge(a, s.flat_index(&[2, 2])), EdgeStatus::CertifiedEmpty { gap: 0.25 });
        let f = builtin_map("translation [0.5,0] space=cube").unwrap();
        let sub = make_subdivision(2, 1, Space::Cube).unwrap();
        assert!(matches!(build_graph(&f, &sub, &GraphConfig::default()), Err(Error::NotEndomorphism(_))));
    }

    #[test]
    fn witnesses_are_sound() {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let g = graph("toral [[2,1],[1,1]]", 3, Space::Torus);
        assert!(g.uncertain_edges().is_empty());
        for (i, j) in g.nonempty_edges() {
            let EdgeStatus::CertifiedNonempty { witness } = g.edge(i, j) else { unreachable!() };
            assert!(g.subdivision().cube_box(i).contains_point(&witness));
            let y = f.eval_point(Direction::Forward, &witness).unwrap();
            assert!(g.subdivision().cube_box(j).contains_point(&y));
        }
    }

    #[test]
    fn path_is_shortest() {
        let g = graph("toral [[2,1],[1,1]]", 3, Space::Torus);
        let d = g.distances_from(0);
        for to in [9usize, 27, 63] {
            let p = g.find_path(0, to, 64).unwrap();
            assert_eq!(Some(p.len() - 1), d[to]);
            for w in p.windows(2) {
                assert!(g.edge(w[0], w[1]).is_nonempty());
            }
        }
        assert!(matches!(g.find_path(0, 63, 0), Err(Error::NoPath { .. })));
    }

    #[test]
    fn dumps() {
        let g = graph("identity", 1, Space::Torus);
        let j = g.to_json(true);
        assert_eq!(j["edges"].as_array().unwrap().len(), 16);
        assert!(g.to_dot().contains("0 -> 3;"));
    }
}
