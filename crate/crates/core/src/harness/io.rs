//! Text formats for environments and plans, the binary weights file and the
//! on-disk dataset layout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::geom::{fmt_sig9, Aabb, Environment, Obstacle, Point2, ProblemClass};
use crate::memory::{param_blocks, EncoderParams, PARAM_COUNT};
use crate::robot::{Control, MotionPlan, RobotSpec, RobotState};
use crate::seed::fnv1a64;

fn parse_err(what: &str, line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        what: what.to_string(),
        line,
        msg: msg.into(),
    }
}

fn reals(what: &str, line: usize, toks: &[&str], n: usize) -> Result<Vec<f64>, HarnessError> {
    if toks.len() != n {
        return Err(parse_err(what, line, format!("expected {n} numbers, got {}", toks.len())));
    }
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(what, line, format!("bad number `{t}`")))
        })
        .collect()
}

pub fn env_to_string(env: &Environment) -> String {
    let f = |x: f64| fmt_sig9(x);
    let b = env.bounds;
    let mut s = String::from("MMENV 1\n");
    let _ = writeln!(s, "bounds {} {} {} {}", f(b.min.x), f(b.min.y), f(b.max.x), f(b.max.y));
    let _ = writeln!(s, "start {} {} {}", f(env.start.x), f(env.start.y), f(env.start_heading));
    let _ = writeln!(s, "goal {} {}", f(env.goal.x), f(env.goal.y));
    let _ = writeln!(s, "class {}", env.class_tag);
    for o in &env.obstacles {
        match *o {
            Obstacle::RotRect { cx, cy, w, h, theta } => {
                let _ = writeln!(s, "rect {} {} {} {} {}", f(cx), f(cy), f(w), f(h), f(theta));
            }
            Obstacle::Circle { cx, cy, r } => {
                let _ = writeln!(s, "circle {} {} {}", f(cx), f(cy), f(r));
            }
        }
    }
    s
}

pub fn env_from_str(text: &str) -> Result<Environment, HarnessError> {
    const W: &str = "environment";
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == "MMENV 1" => {}
        _ => return Err(parse_err(W, 1, "missing `MMENV 1` header")),
    }
    let mut bounds = None;
    let mut start = None;
    let mut goal = None;
    let mut class = None;
    let mut obstacles = Vec::new();
    for (i, l) in lines {
        let n = i + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let args = &toks[1..];
        match toks[0] {
            "bounds" => {
                let v = reals(W, n, args, 4)?;
                bounds = Some(Aabb::new(v[0], v[1], v[2], v[3]));
            }
            "start" => start = Some(reals(W, n, args, 3)?),
            "goal" => {
                let v = reals(W, n, args, 2)?;
                goal = Some(Point2::new(v[0], v[1]));
            }
            "class" => {
                let name = args.first().ok_or_else(|| parse_err(W, n, "missing class"))?;
                class = Some(name.parse::<ProblemClass>().map_err(|e| parse_err(W, n, e.to_string()))?);
            }
            "rect" => {
                let v = reals(W, n, args, 5)?;
                obstacles.push(Obstacle::RotRect {
                    cx: v[0],
                    cy: v[1],
                    w: v[2],
                    h: v[3],
                    theta: v[4],
                });
            }
            "circle" => {
                let v = reals(W, n, args, 3)?;
                obstacles.push(Obstacle::circle(v[0], v[1], v[2]));
            }
            other => return Err(parse_err(W, n, format!("unknown record `{other}`"))),
        }
    }
    let start = start.ok_or_else(|| parse_err(W, 0, "missing start"))?;
    let env = Environment {
        bounds: bounds.ok_or_else(|| parse_err(W, 0, "missing bounds"))?,
        obstacles,
        start: Point2::new(start[0], start[1]),
        start_heading: start[2],
        goal: goal.ok_or_else(|| parse_err(W, 0, "missing goal"))?,
        class_tag: class.ok_or_else(|| parse_err(W, 0, "missing class"))?,
    };
    if let Some(i) = env.obstacles.iter().position(|o| !o.is_valid()) {
        return Err(parse_err(W, 0, format!("obstacle {i} is degenerate")));
    }
    Ok(env)
}

/// Content hash of an environment: FNV-1a over its text serialization.
pub fn env_hash(env: &Environment) -> u64 {
    fnv1a64(env_to_string(env).as_bytes())
}

/// Plans are written with shortest round-trip decimals so that a reloaded
/// plan still satisfies its integration invariant. The `start` record carries
/// the initial state.
pub fn plan_to_string(plan: &MotionPlan) -> String {
    let mut s = String::from("MMPLAN 1\n");
    let _ = writeln!(s, "dt {}", plan.dt);
    let _ = writeln!(s, "radius {}", plan.spec.radius);
    let _ = writeln!(s, "start {} {} {}", plan.start.x, plan.start.y, plan.start.theta);
    for (u, st) in &plan.steps {
        let _ = writeln!(s, "step {} {} {} {} {}", u.v, u.omega, st.x, st.y, st.theta);
    }
    s
}

pub fn plan_from_str(text: &str) -> Result<MotionPlan, HarnessError> {
    const W: &str = "plan";
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == "MMPLAN 1" => {}
        _ => return Err(parse_err(W, 1, "missing `MMPLAN 1` header")),
    }
    let mut dt = None;
    let mut radius = None;
    let mut start = None;
    let mut steps = Vec::new();
    for (i, l) in lines {
        let n = i + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let args = &toks[1..];
        match toks[0] {
            "dt" => dt = Some(reals(W, n, args, 1)?[0]),
            "radius" => radius = Some(reals(W, n, args, 1)?[0]),
            "start" => {
                let v = reals(W, n, args, 3)?;
                start = Some(RobotState {
                    x: v[0],
                    y: v[1],
                    theta: v[2],
                });
            }
            "step" => {
                let v = reals(W, n, args, 5)?;
                steps.push((
                    Control::new(v[0], v[1]),
                    RobotState {
                        x: v[2],
                        y: v[3],
                        theta: v[4],
                    },
                ));
            }
            other => return Err(parse_err(W, n, format!("unknown record `{other}`"))),
        }
    }
    let plan = MotionPlan {
        dt: dt.ok_or_else(|| parse_err(W, 0, "missing dt"))?,
        start: start.ok_or_else(|| parse_err(W, 0, "missing start"))?,
        steps,
        spec: RobotSpec {
            radius: radius.ok_or_else(|| parse_err(W, 0, "missing radius"))?,
            ..RobotSpec::default()
        },
    };
    // the empty plan stands for the negative cluster
    if !plan.steps.is_empty() {
        plan.check_integrity()?;
    }
    Ok(plan)
}

const WEIGHTS_MAGIC: &[u8; 4] = b"MMW1";

/// (kind, dims) of each stored layer: conv weights are `[out, in, 3, 3]`,
/// dense weights `[out, in, 1, 1]`. Each layer's floats are its weights
/// followed by its `out` biases.
fn weight_layers() -> Vec<(u8, [u32; 4])> {
    vec![
        (0, [8, 1, 3, 3]),
        (0, [16, 8, 3, 3]),
        (0, [32, 16, 3, 3]),
        (1, [128, 2048, 1, 1]),
        (1, [30, 128, 1, 1]),
    ]
}

pub fn weights_to_bytes(p: &EncoderParams<f32>) -> Vec<u8> {
    let layers = weight_layers();
    let blocks = param_blocks();
    let mut out = Vec::with_capacity(8 + PARAM_COUNT * 4 + 128);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for (li, (kind, dims)) in layers.iter().enumerate() {
        out.push(*kind);
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for block in [&blocks[2 * li].1, &blocks[2 * li + 1].1] {
            for v in &p.values()[block.clone()] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let h = fnv1a64(&out);
    out.extend_from_slice(&h.to_le_bytes());
    out
}

pub fn weights_from_bytes(bytes: &[u8]) -> Result<EncoderParams<f32>, HarnessError> {
    let bad = |m: &str| HarnessError::Weights(m.to_string());
    if bytes.len() < 16 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(bad("missing MMW1 magic"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    if fnv1a64(body) != stored {
        return Err(bad("content hash mismatch"));
    }
    let mut pos = 4;
    let mut take = |n: usize| -> Result<&[u8], HarnessError> {
        let s = body.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes"));
    let layers = weight_layers();
    if u32_at(take(4)?) as usize != layers.len() {
        return Err(bad("unexpected layer count"));
    }
    let mut values = Vec::with_capacity(PARAM_COUNT);
    for (kind, dims) in &layers {
        if take(1)?[0] != *kind {
            return Err(bad("unexpected layer kind"));
        }
        for d in dims {
            if u32_at(take(4)?) != *d {
                return Err(bad("unexpected layer shape"));
            }
        }
        let n = dims.iter().product::<u32>() as usize + dims[0] as usize;
        for c in take(4 * n)?.chunks_exact(4) {
            values.push(f32::from_le_bytes(c.try_into().expect("4 bytes")));
        }
    }
    if pos != body.len() {
        return Err(bad("trailing bytes"));
    }
    let p = EncoderParams::from_values(values).ok_or_else(|| bad("parameter count"))?;
    if !p.is_finite() {
        return Err(bad("non-finite weight"));
    }
    Ok(p)
}

fn write_file(path: &Path, data: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, data).map_err(|e| HarnessError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn save_env(path: &Path, env: &Environment) -> Result<(), HarnessError> {
    write_file(path, env_to_string(env))
}

pub fn load_env(path: &Path) -> Result<Environment, HarnessError> {
    env_from_str(&read_text(path)?)
}

pub fn save_plan(path: &Path, plan: &MotionPlan) -> Result<(), HarnessError> {
    write_file(path, plan_to_string(plan))
}

pub fn load_plan(path: &Path) -> Result<MotionPlan, HarnessError> {
    plan_from_str(&read_text(path)?)
}

pub fn save_weights(path: &Path, p: &EncoderParams<f32>) -> Result<(), HarnessError> {
    write_file(path, weights_to_bytes(p))
}

pub fn load_weights(path: &Path) -> Result<EncoderParams<f32>, HarnessError> {
    weights_from_bytes(&fs::read(path).map_err(|e| HarnessError::io(path, e))?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    write_file(path, text)
}

/// One solved problem and its augmented environments; `envs[0]` is the
/// original problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub plan: MotionPlan,
    pub envs: Vec<Environment>,
}

const MANIFEST: &str = "manifest.tsv";

/// Writes `dataset/manifest.tsv`, `plans/plan_<i>.mmplan` and `envs/c<i>/e<j>.mmenv`.
pub fn save_dataset(dir: &Path, clusters: &[Cluster]) -> Result<(), HarnessError> {
    let mut manifest = String::from("cluster_id\tenv_path\tplan_path\n");
    for (i, c) in clusters.iter().enumerate() {
        let plan_rel = format!("plans/plan_{i}.mmplan");
        save_plan(&dir.join(&plan_rel), &c.plan)?;
        for (j, e) in c.envs.iter().enumerate() {
            let env_rel = format!("envs/c{i}/e{j}.mmenv");
            save_env(&dir.join(&env_rel), e)?;
            let _ = writeln!(manifest, "{i}\t{env_rel}\t{plan_rel}");
        }
    }
    write_file(&dir.join(MANIFEST), manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<Cluster>, HarnessError> {
    const W: &str = "manifest";
    let text = read_text(&dir.join(MANIFEST))?;
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut plan_paths: Vec<PathBuf> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err(W, i + 1, "expected three tab-separated columns"));
        }
        let id: usize = cols[0].parse().map_err(|_| parse_err(W, i + 1, "bad cluster id"))?;
        if id > clusters.len() {
            return Err(parse_err(W, i + 1, "cluster ids must be contiguous"));
        }
        if id == clusters.len() {
            let plan_path = dir.join(cols[2]);
            clusters.push(Cluster {
                plan: load_plan(&plan_path)?,
                envs: Vec::new(),
            });
            plan_paths.push(plan_path);
        } else if dir.join(cols[2]) != plan_paths[id] {
            return Err(parse_err(W, i + 1, "cluster refers to two plans"));
        }
        clusters[id].envs.push(load_env(&dir.join(cols[1]))?);
    }
    Ok(clusters)
}
