use crate::config::RunConfig;
use crate::output::{envelope, to_value, Outcome};
use anyhow::{anyhow, Context};
use serde_json::{json, Value};
use shadowkit::covering::{certify_chained, recheck_certificate, ChainOutcome};
use shadowkit::dynamics::{MapKind, MapSpec};
use shadowkit::geometry::point_distance;
use shadowkit::hp::to_f64_vec;
use shadowkit::oracle::{brute_force_fixed_points, brute_force_shadow, linear_shadow};
use shadowkit::shadowing::{
    generate_pseudo_orbit, orbit_csv, orbit_hp, periodic_shadow, shadow, specification_splice, verify_shadow,
    PerturbMode, PseudoOrbit, ShadowConfig, ShadowResult,
};
use std::fmt::Write as _;

/// Parsed context shared by all subcommands.
pub struct Ctx {
    pub cfg: RunConfig,
    pub hash: String,
    /// Envelope read from `--input`, if any.
    pub input: Option<Value>,
}

impl Ctx {
    fn out(&self, command: &str, body: Value) -> String {
        envelope(command, &self.cfg, &self.hash, body)
    }

    /// Pseudo-orbit from an input envelope, or generated from the config.
    fn pseudo(&self, f: &MapSpec) -> anyhow::Result<PseudoOrbit> {
        match &self.input {
            Some(v) => {
                let p: PseudoOrbit = serde_json::from_value(
                    v.get("pseudo_orbit").cloned().ok_or_else(|| invalid("input has no pseudo_orbit"))?,
                )?;
                if p.map_id != f.descriptor() {
                    return Err(invalid(&format!("input pseudo-orbit is for map '{}'", p.map_id)));
                }
                p.validate(f)?;
                Ok(p)
            }
            None => self.cfg.pseudo_orbit(f),
        }
    }
}

fn invalid(msg: &str) -> anyhow::Error {
    shadowkit::Error::InvalidInput(msg.to_string()).into()
}

pub fn subdivide(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let sub = ctx.cfg.subdivision(&f)?;
    let cubes: Vec<Value> = (0..sub.count())
        .map(|i| {
            let b = sub.cube_box(i);
            json!({"index": i, "multi": sub.multi_index(i), "lo": b.lo(), "hi": b.hi()})
        })
        .collect();
    let body = json!({"subdivision": {
        "n": sub.dim(), "m": sub.order(), "space": sub.space(), "count": sub.count(),
        "side": sub.side(), "chi": sub.chi(), "cubes": cubes,
    }});
    let summary = format!(
        "subdivision n={} m={} {:?}: {} cubes, side {}, chi {:.6e}\n",
        sub.dim(),
        sub.order(),
        sub.space(),
        sub.count(),
        sub.side(),
        sub.chi()
    );
    Ok(Outcome { files: vec![("subdivision.json".into(), ctx.out("subdivide", body))], summary, code: 0 })
}

pub fn graph(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let g = ctx.cfg.graph(&f)?;
    let (ne, em, un) = g.counts();
    let body = json!({"graph": g.to_json(false)});
    let mut summary =
        format!("graph {} m={}: {ne} nonempty, {em} empty, {un} uncertain edges\n", g.map_id(), ctx.cfg.m);
    if let Some((gap, i, j)) = g.min_gap() {
        writeln!(summary, "minimal empty gap {gap:.6e} at {i} -> {j}").unwrap();
    }
    Ok(Outcome {
        files: vec![("graph.json".into(), ctx.out("graph", body)), ("graph.dot".into(), g.to_dot())],
        summary,
        code: 0,
    })
}

pub fn delta_bound(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let g = ctx.cfg.graph(&f)?;
    let bound = g.delta_bound(true)?;
    let pair = g.min_gap().map(|(_, i, j)| [i, j]);
    let body = json!({"delta_bound": {"bound": bound, "pair": pair, "chi": g.subdivision().chi()}});
    let summary = format!("delta bound {bound:.9e} (attained at {pair:?})\n");
    Ok(Outcome { files: vec![("delta_bound.json".into(), ctx.out("delta-bound", body))], summary, code: 0 })
}

pub fn certify(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let g = ctx.cfg.graph(&f)?;
    let outcome = certify_chained(&f, &g, &ctx.cfg.chain)?;
    let (summary, code) = match &outcome {
        ChainOutcome::Certified(c) => (
            format!(
                "certified: {} rectangles ({}), {} edge coverings, min margin {:.3e}\n",
                c.rects.len(),
                c.shape,
                c.edges.len(),
                c.min_margin().unwrap_or(f64::NAN)
            ),
            0,
        ),
        ChainOutcome::Failed(r) => {
            let mut s = format!(
                "not certified: {} of {} nonempty edges uncovered (best shape {:?}, tried {:?})\n",
                r.failing.len(),
                r.nonempty_edges,
                r.shape,
                r.shapes_tried
            );
            for (i, j) in r.failing.iter().take(20) {
                writeln!(s, "  uncovered {i} -> {j}").unwrap();
            }
            if r.failing.len() > 20 {
                writeln!(s, "  ... {} more in certify.json", r.failing.len() - 20).unwrap();
            }
            (s, 2)
        }
    };
    let body = json!({"result": to_value(&outcome)});
    Ok(Outcome { files: vec![("certify.json".into(), ctx.out("certify", body))], summary, code })
}

pub fn pseudo(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let p = match ctx.cfg.period {
        Some(period) => periodic_pseudo(&f, &ctx.cfg, period)?,
        None => ctx.cfg.pseudo_orbit(&f)?,
    };
    let body = json!({"pseudo_orbit": to_value(&p), "max_defect": p.max_defect(&f)?});
    let summary =
        format!("pseudo-orbit k = {}..{}, delta {:e}, max defect {:e}\n", p.start, p.end(), p.delta, p.max_defect(&f)?);
    Ok(Outcome {
        files: vec![("pseudo.json".into(), ctx.out("pseudo", body)), ("pseudo.csv".into(), orbit_csv(&f, &p, None)?)],
        summary,
        code: 0,
    })
}

/// `P` perturbed points starting at `x0`, closed cyclically; delta is the
/// measured worst step defect.
fn periodic_pseudo(f: &MapSpec, cfg: &RunConfig, period: usize) -> anyhow::Result<PseudoOrbit> {
    let x0 = cfg.start_point(f.dim());
    let open = generate_pseudo_orbit(f, &x0, cfg.delta, period - 1, &cfg.mode, false)?;
    let mut p = PseudoOrbit { periodic: Some(period), delta: 0.0, ..open };
    let worst = p.max_defect(f)?;
    p.delta = if worst > 0.0 { (worst * (1.0 + 1e-12)).next_up() } else { 0.0 };
    p.validate(f)?;
    Ok(p)
}

fn shadow_files(
    ctx: &Ctx,
    command: &str,
    f: &MapSpec,
    p: &PseudoOrbit,
    r: &ShadowResult,
) -> anyhow::Result<(Vec<(String, String)>, String)> {
    let x = r.point_hp()?;
    let rep = verify_shadow(f, &x, p, r.eps)?;
    let body = json!({"pseudo_orbit": to_value(p), "result": to_value(r), "verify": to_value(&rep)});
    let mut summary = format!(
        "shadow point {:?}\neps_achieved {:.6e} at k = {} (eps {:.6e}, chi {:.6e}), verify {}\n",
        r.point,
        r.eps_achieved,
        r.argmax_k,
        r.eps,
        r.chi,
        if rep.ok { "ok" } else { "FAILED" }
    );
    if let (Some(q), Some(res)) = (r.min_period, r.fp_residual) {
        writeln!(summary, "minimal period {q}, return residual {res:.3e}").unwrap();
    }
    Ok((
        vec![
            (format!("{command}.json"), ctx.out(command, body)),
            (format!("{command}.csv"), orbit_csv(f, p, Some(&x))?),
        ],
        summary,
    ))
}

pub fn run_shadow(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let p = ctx.pseudo(&f)?;
    let g = ctx.cfg.graph(&f)?;
    let eps = ctx.cfg.eps_or(g.subdivision().chi());
    let r = shadow(&f, &p, &g, eps, &ctx.cfg.shadow)?;
    let (files, summary) = shadow_files(ctx, "shadow", &f, &p, &r)?;
    Ok(Outcome { files, summary, code: 0 })
}

pub fn periodic(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let p = match (&ctx.input, ctx.cfg.period) {
        (Some(_), _) => ctx.pseudo(&f)?,
        (None, Some(period)) => periodic_pseudo(&f, &ctx.cfg, period)?,
        (None, None) => return Err(invalid("periodic needs `period` or an input pseudo-orbit")),
    };
    let g = ctx.cfg.graph(&f)?;
    let eps = ctx.cfg.eps_or(g.subdivision().chi());
    let r = periodic_shadow(&f, &p, &g, eps, &ctx.cfg.shadow)?;
    let (files, summary) = shadow_files(ctx, "periodic", &f, &p, &r)?;
    Ok(Outcome { files, summary, code: 0 })
}

/// Checks every splice segment against the periodic orbit through `x`.
fn segment_reports(
    f: &MapSpec,
    x: &[shadowkit::hp::Hp],
    segments: &[PseudoOrbit],
    offsets: &[usize],
    eps: f64,
) -> anyhow::Result<Vec<shadowkit::shadowing::ShadowReport>> {
    let last = offsets.iter().copied().max().unwrap_or(0) as i64;
    let orbit = orbit_hp(f, x, 0, last)?;
    segments.iter().zip(offsets).map(|(s, &off)| Ok(verify_shadow(f, &orbit[off], s, eps)?)).collect()
}

fn splice_segments(f: &MapSpec, cfg: &RunConfig) -> anyhow::Result<Vec<PseudoOrbit>> {
    if cfg.segments.is_empty() {
        return Err(invalid("splice needs at least one segment"));
    }
    cfg.segments
        .iter()
        .map(|s| Ok(generate_pseudo_orbit(f, &s.x0, 0.0, s.len - 1, &PerturbMode::UniformNoise { seed: 0 }, false)?))
        .collect()
}

fn splice_config(cfg: &RunConfig) -> ShadowConfig {
    // Waypoint jumps are far above the transition bound by construction.
    ShadowConfig { require_delta_bound: false, ..cfg.shadow.clone() }
}

pub fn splice(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let g = ctx.cfg.graph(&f)?;
    let segs = splice_segments(&f, &ctx.cfg)?;
    let pts: Vec<Vec<Vec<f64>>> = segs.iter().map(|s| s.points.clone()).collect();
    let s = specification_splice(&f, &g, &pts, ctx.cfg.gap)?;
    let whole = f.space().diameter(f.dim());
    let r = periodic_shadow(&f, &s.orbit, &g, whole, &splice_config(&ctx.cfg))?;
    let x = r.point_hp()?;
    let eps = ctx.cfg.eps_or(g.subdivision().chi());
    let reports = segment_reports(&f, &x, &segs, &s.offsets, eps)?;
    let ok = reports.iter().all(|r| r.ok);
    let mut summary =
        format!("splice period {} (waypoints {:?}), splice delta {:.3e}\n", s.orbit.len(), s.waypoints, s.orbit.delta);
    for (i, rep) in reports.iter().enumerate() {
        writeln!(
            summary,
            "segment {i}: max error {:.6e} vs eps {eps:.6e}: {}",
            rep.max_err,
            if rep.ok { "ok" } else { "FAILED" }
        )
        .unwrap();
    }
    let body = json!({
        "splice": to_value(&s),
        "segments": to_value(&segs),
        "result": to_value(&r),
        "segment_eps": eps,
        "segment_reports": to_value(&reports),
    });
    Ok(Outcome {
        files: vec![
            ("splice.json".into(), ctx.out("splice", body)),
            ("splice.csv".into(), orbit_csv(&f, &s.orbit, Some(&x))?),
        ],
        summary,
        code: if ok { 0 } else { 2 },
    })
}

pub fn oracle(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let f = ctx.cfg.map_spec()?;
    let p = ctx.pseudo(&f)?;
    let mut body = json!({"pseudo_orbit": to_value(&p)});
    let mut files = Vec::new();
    let mut summary = String::new();
    if matches!(f.kind(), MapKind::ToralAutomorphism(_)) {
        let o = linear_shadow(&f, &p)?;
        let mut csv = String::from("k");
        for d in 1..=f.dim() {
            write!(csv, ",y_{d}").unwrap();
        }
        for d in 1..=f.dim() {
            write!(csv, ",x_{d}").unwrap();
        }
        csv.push_str(",err\n");
        for (i, (x, y)) in o.points.iter().zip(&p.points).enumerate() {
            write!(csv, "{}", p.start + i as i64).unwrap();
            for v in y.iter().chain(x) {
                write!(csv, ",{v:e}").unwrap();
            }
            writeln!(csv, ",{:e}", point_distance(f.space(), x, y)).unwrap();
        }
        files.push(("oracle.csv".into(), csv));
        writeln!(summary, "linear shadow: max error {:.6e}, sup eigen correction {:.6e}", o.max_err, o.sup_eigen)
            .unwrap();
        body["linear_shadow"] = to_value(&o);
    }
    if ctx.cfg.oracle.grid > 0 {
        let region = ctx.cfg.region(&f)?;
        let eps = ctx.cfg.eps_or(ctx.cfg.subdivision(&f)?.chi());
        let b = brute_force_shadow(&f, &p, &region, ctx.cfg.oracle.grid, eps, ctx.cfg.oracle.zoom)?;
        writeln!(
            summary,
            "brute-force shadow: best max error {:.6e} at {:?} ({} points)",
            b.max_err, b.point, b.evaluated
        )
        .unwrap();
        body["brute_shadow"] = to_value(&b);
        if let Some(period) = ctx.cfg.period {
            let fp = brute_force_fixed_points(&f, &region, period, ctx.cfg.oracle.grid)?;
            writeln!(summary, "period-{period} points: {}", fp.points.len()).unwrap();
            body["fixed_points"] = to_value(&fp);
        }
    }
    if summary.is_empty() {
        summary.push_str("no oracle applies (not a toral automorphism and oracle.grid = 0)\n");
    }
    files.insert(0, ("oracle.json".into(), ctx.out("oracle", body)));
    Ok(Outcome { files, summary, code: 0 })
}

/// Re-derives the verdict stored in an output file.
pub fn verify(ctx: &Ctx) -> anyhow::Result<Outcome> {
    let v = ctx.input.as_ref().ok_or_else(|| invalid("verify needs --input"))?;
    let command = v.get("command").and_then(Value::as_str).ok_or_else(|| invalid("input has no command"))?;
    let cfg: RunConfig =
        serde_json::from_value(v.get("config").cloned().ok_or_else(|| invalid("input has no config"))?)
            .map_err(|e| invalid(&format!("input config: {e}")))?;
    let f = cfg.map_spec()?;
    let field = |name: &str| v.get(name).cloned().ok_or_else(|| invalid(&format!("input has no {name}")));
    let mut notes = Vec::new();
    let (original, verdict) = match command {
        "certify" => {
            let outcome: ChainOutcome = serde_json::from_value(field("result")?)?;
            let g = cfg.graph(&f)?;
            match outcome {
                ChainOutcome::Certified(c) => {
                    let mut ok = true;
                    for e in &c.edges {
                        let cert = e.expand(&c.map_id, &c.rects);
                        if recheck_certificate(&f, &cert, &cfg.chain.covering)?.certificate().is_none() {
                            notes.push(format!("edge {} -> {} does not recheck", e.from, e.to));
                            ok = false;
                        }
                    }
                    for (i, j) in g.nonempty_edges() {
                        if c.covering(i, j).is_none() {
                            notes.push(format!("nonempty edge {i} -> {j} has no covering"));
                            ok = false;
                        }
                    }
                    (true, ok)
                }
                ChainOutcome::Failed(r) => {
                    for c in &r.local {
                        if recheck_certificate(&f, c, &cfg.chain.covering)?.certificate().is_none() {
                            notes.push("a local certificate does not recheck".into());
                        }
                    }
                    let again = certify_chained(&f, &g, &cfg.chain)?;
                    (false, matches!(again, ChainOutcome::Certified(_)))
                }
            }
        }
        "shadow" | "periodic" => {
            let p: PseudoOrbit = serde_json::from_value(field("pseudo_orbit")?)?;
            p.validate(&f)?;
            let r: ShadowResult = serde_json::from_value(field("result")?)?;
            let x = r.point_hp()?;
            let rep = verify_shadow(&f, &x, &p, r.eps)?;
            let mut ok = rep.ok && (rep.max_err - r.eps_achieved).abs() <= 1e-12;
            notes.push(format!("max error {:.6e}, stored {:.6e}", rep.max_err, r.eps_achieved));
            if let Some(period) = r.periodic {
                let orbit = orbit_hp(&f, &x, 0, period as i64)?;
                let back = point_distance(f.space(), &to_f64_vec(&orbit[period]), &to_f64_vec(&orbit[0]));
                notes.push(format!("return distance {back:.3e}"));
                ok &= back <= cfg.shadow.fp_tol;
            }
            (true, ok)
        }
        "splice" => {
            let s: shadowkit::shadowing::Splice = serde_json::from_value(field("splice")?)?;
            let segs: Vec<PseudoOrbit> = serde_json::from_value(field("segments")?)?;
            let r: ShadowResult = serde_json::from_value(field("result")?)?;
            let eps = field("segment_eps")?.as_f64().ok_or_else(|| invalid("segment_eps is not a number"))?;
            let reports = segment_reports(&f, &r.point_hp()?, &segs, &s.offsets, eps)?;
            let stored: Vec<shadowkit::shadowing::ShadowReport> = serde_json::from_value(field("segment_reports")?)?;
            for (a, b) in reports.iter().zip(&stored) {
                notes.push(format!("segment max error {:.6e}, stored {:.6e}", a.max_err, b.max_err));
            }
            (stored.iter().all(|r| r.ok), reports.iter().all(|r| r.ok))
        }
        "pseudo" => {
            let p: PseudoOrbit = serde_json::from_value(field("pseudo_orbit")?)?;
            (true, p.validate(&f).is_ok())
        }
        other => return Err(invalid(&format!("nothing to verify in '{other}' output"))),
    };
    let agree = original == verdict;
    let body = json!({"verify": {
        "target_command": command,
        "target_hash": v.get("input_hash"),
        "original": original,
        "recomputed": verdict,
        "agree": agree,
        "notes": notes,
    }});
    let mut summary = format!(
        "verify {command}: original verdict {original}, recomputed {verdict}: {}\n",
        if agree { "agree" } else { "DISAGREE" }
    );
    for n in &notes {
        writeln!(summary, "  {n}").unwrap();
    }
    Ok(Outcome {
        files: vec![("verify.json".into(), ctx.out("verify", body))],
        summary,
        code: if agree { 0 } else { 2 },
    })
}

pub fn read_input(path: &std::path::Path) -> anyhow::Result<(Vec<u8>, Value)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let v = serde_json::from_slice(&bytes)
        .map_err(|e| anyhow!(shadowkit::Error::InvalidInput(format!("{}: {e}", path.display()))))?;
    Ok((bytes, v))
}
